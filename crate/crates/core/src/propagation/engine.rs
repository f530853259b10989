use super::{Counters, PropagationError, PropagationOutcome, Propagator, RevisionPolicy, Scheme, Seeds};
use crate::model::{DomainStore, Problem, VarId};
use crate::vorder::{WeightStore, WeightUpdate};

/// Mutable solving state around an immutable problem: current domains, the
/// propagator, conflict weights and instrumentation.
#[derive(Clone, Debug)]
pub struct Engine<'p> {
    pub problem: &'p Problem,
    pub domains: DomainStore,
    pub propagator: Propagator,
    pub weights: WeightStore,
    pub counters: Counters,
    assigned: usize,
}

impl<'p> Engine<'p> {
    pub fn new(
        problem: &'p Problem,
        scheme: Scheme,
        policy: RevisionPolicy,
        update: WeightUpdate,
    ) -> Result<Self, PropagationError> {
        Ok(Engine {
            problem,
            domains: DomainStore::new(problem),
            propagator: Propagator::new(problem, scheme, policy)?,
            weights: WeightStore::new(problem, update),
            counters: Counters::default(),
            assigned: 0,
        })
    }

    pub fn propagate(&mut self, seeds: Seeds<'_>, learn: bool) -> Result<PropagationOutcome, PropagationError> {
        self.propagator.propagate(
            self.problem,
            &mut self.domains,
            seeds,
            &mut self.weights,
            learn,
            &mut self.counters,
        )
    }

    /// Propagates the consequences of domain reductions made by search.
    pub fn propagate_changes(&mut self, changed: &[(VarId, usize)], learn: bool) -> PropagationOutcome {
        self.propagate(Seeds::Changed(changed), learn)
            .expect("change seeds fit every scheme")
    }

    /// Assigns `x` to the value at `index`; returns the number of values removed.
    pub fn assign(&mut self, x: VarId, index: usize) -> usize {
        self.weights.assign(self.problem, x);
        self.assigned += 1;
        self.domains.assign(x, index)
    }

    /// Marks `x` unassigned. Domains are restored separately via the trail.
    pub fn unassign(&mut self, x: VarId) {
        self.weights.unassign(self.problem, x);
        self.assigned -= 1;
    }

    pub fn is_assigned(&self, x: VarId) -> bool {
        self.weights.is_assigned(x)
    }

    pub fn all_assigned(&self) -> bool {
        self.assigned == self.problem.num_variables()
    }

    /// Ratio between the current search-space size and the one described by
    /// `before` (domain sizes per variable).
    pub fn space_ratio(&self, before: &[usize]) -> f64 {
        self.domains
            .sizes()
            .iter()
            .zip(before)
            .filter(|(a, b)| a != b)
            .map(|(&a, &b)| a as f64 / b as f64)
            .product()
    }
}
