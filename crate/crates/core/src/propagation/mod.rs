//! Coarse-grained (G)AC-3 in its arc-, variable- and constraint-oriented
//! forms, with pluggable revision ordering.

mod engine;
mod queue;

use std::fmt;
use std::str::FromStr;

pub use engine::Engine;
pub use queue::{Element, RevisionQueue};

use crate::model::{ConstraintId, DomainStore, Problem, SupportScratch, VarId};
use crate::vorder::{FailureEvent, WeightStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Arc,
    Variable,
    Constraint,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Arc => "arc",
            Scheme::Variable => "var",
            Scheme::Constraint => "con",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "arc" => Ok(Scheme::Arc),
            "var" | "variable" => Ok(Scheme::Variable),
            "con" | "constraint" => Ok(Scheme::Constraint),
            _ => Err(format!("unknown propagation scheme `{s}` (arc, var, con)")),
        }
    }
}

/// Revision ordering heuristics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RevisionPolicy {
    Fifo,
    Dom,
    AWcon,
    AWdeg,
    ADomWdeg,
    ADomWcon,
    ADomWdegInverse,
    ADomWconInverse,
    VWdeg,
    VDomWdeg,
    CWcon,
}

impl RevisionPolicy {
    pub const ALL: [RevisionPolicy; 11] = [
        RevisionPolicy::Fifo,
        RevisionPolicy::Dom,
        RevisionPolicy::AWcon,
        RevisionPolicy::AWdeg,
        RevisionPolicy::ADomWdeg,
        RevisionPolicy::ADomWcon,
        RevisionPolicy::ADomWdegInverse,
        RevisionPolicy::ADomWconInverse,
        RevisionPolicy::VWdeg,
        RevisionPolicy::VDomWdeg,
        RevisionPolicy::CWcon,
    ];

    pub fn supports(self, scheme: Scheme) -> bool {
        use RevisionPolicy::*;
        match self {
            Fifo => true,
            Dom => scheme != Scheme::Constraint,
            AWcon | AWdeg | ADomWdeg | ADomWcon | ADomWdegInverse | ADomWconInverse => {
                scheme == Scheme::Arc
            }
            VWdeg | VDomWdeg => scheme == Scheme::Variable,
            CWcon => scheme == Scheme::Constraint,
        }
    }

    /// Policies usable with `scheme`.
    pub fn for_scheme(scheme: Scheme) -> impl Iterator<Item = RevisionPolicy> {
        Self::ALL.into_iter().filter(move |p| p.supports(scheme))
    }

    pub fn name(self) -> &'static str {
        use RevisionPolicy::*;
        match self {
            Fifo => "fifo",
            Dom => "dom",
            AWcon => "a_wcon",
            AWdeg => "a_wdeg",
            ADomWdeg => "a_dom/wdeg",
            ADomWcon => "a_dom/wcon",
            ADomWdegInverse => "a_dom/wdeg_inverse",
            ADomWconInverse => "a_dom/wcon_inverse",
            VWdeg => "v_wdeg",
            VDomWdeg => "v_dom/wdeg",
            CWcon => "c_wcon",
        }
    }
}

impl fmt::Display for RevisionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RevisionPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.replace("dom_w", "dom/w");
        let norm = if norm == "queue" { "fifo".to_string() } else { norm };
        Self::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| format!("unknown revision policy `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PropagationError {
    #[error("revision policy {policy} cannot drive the {scheme}-oriented scheme")]
    PolicyMismatch { scheme: Scheme, policy: RevisionPolicy },
    #[error("seed elements do not match the {scheme}-oriented scheme")]
    SeedMismatch { scheme: Scheme },
    #[error("variable is not in the constraint scope")]
    NotInScope,
    #[error("revision queue is empty")]
    EmptyQueue,
}

/// Initial queue contents for one propagation.
#[derive(Clone, Copy, Debug)]
pub enum Seeds<'a> {
    /// Every arc, variable or constraint (preprocessing).
    All,
    /// Variables whose domains just lost the given number of values.
    Changed(&'a [(VarId, usize)]),
    /// Explicit arcs, as `(constraint, revised variable)`.
    Arcs(&'a [(ConstraintId, VarId)]),
    Variables(&'a [VarId]),
    Constraints(&'a [ConstraintId]),
}

/// Search instrumentation shared by every propagation of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Constraint checks (c).
    pub checks: u64,
    /// Queue selections (r).
    pub revisions: u64,
    pub revise_calls: u64,
    pub removals: u64,
    pub dwos: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Consistent,
    Wipeout { constraint: ConstraintId, variable: VarId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationOutcome {
    pub status: Status,
    pub removals: usize,
    /// Constraints with at least one deleting revision, in order of first deletion.
    pub fruitful: Vec<ConstraintId>,
}

impl PropagationOutcome {
    pub fn is_consistent(&self) -> bool {
        self.status == Status::Consistent
    }
}

/// REVISE(c, x): removes the values of `x` without support on `c`, scanning
/// in current domain order. Returns the number removed.
pub fn revise(p: &Problem, d: &mut DomainStore, c: ConstraintId, x: VarId, counters: &mut Counters) -> usize {
    let pos = p
        .constraint(c)
        .position(x)
        .expect("variable not in constraint scope");
    let mut values = Vec::new();
    let mut scratch = SupportScratch::default();
    revise_at(p, d, c, pos, counters, &mut values, &mut scratch)
}

fn revise_at(
    p: &Problem,
    d: &mut DomainStore,
    c: ConstraintId,
    pos: usize,
    counters: &mut Counters,
    values: &mut Vec<usize>,
    scratch: &mut SupportScratch,
) -> usize {
    let x = p.constraint(c).scope[pos];
    values.clear();
    values.extend(d.iter(x));
    let mut removed = 0;
    for &ia in values.iter() {
        if !p.seek_support_at(d, c, pos, ia, &mut counters.checks, scratch) {
            d.remove(x, ia);
            removed += 1;
        }
    }
    counters.revise_calls += 1;
    counters.removals += removed as u64;
    removed
}

/// A reusable (G)AC-3 engine bound to one scheme and revision policy.
#[derive(Clone, Debug)]
pub struct Propagator {
    scheme: Scheme,
    policy: RevisionPolicy,
    queue: RevisionQueue,
    values: Vec<usize>,
    scratch: SupportScratch,
    fruitful: Vec<ConstraintId>,
    fruitful_mark: Vec<bool>,
    order: Vec<(ConstraintId, usize)>,
}

impl Propagator {
    pub fn new(p: &Problem, scheme: Scheme, policy: RevisionPolicy) -> Result<Self, PropagationError> {
        if !policy.supports(scheme) {
            return Err(PropagationError::PolicyMismatch { scheme, policy });
        }
        Ok(Propagator {
            scheme,
            policy,
            queue: RevisionQueue::new(p, scheme),
            values: Vec::new(),
            scratch: SupportScratch::default(),
            fruitful: Vec::new(),
            fruitful_mark: vec![false; p.num_constraints()],
            order: Vec::new(),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn policy(&self) -> RevisionPolicy {
        self.policy
    }

    pub fn queue(&self) -> &RevisionQueue {
        &self.queue
    }

    /// Enables the per-selection duplicate audit of the revision queue.
    pub fn set_audit(&mut self, on: bool) {
        self.queue.set_audit(on);
    }

    /// Runs to a fixpoint or to the first wipeout. With `learn` set, deletion
    /// and wipeout events are fed to `weights` as they happen.
    pub fn propagate(
        &mut self,
        p: &Problem,
        d: &mut DomainStore,
        seeds: Seeds<'_>,
        weights: &mut WeightStore,
        learn: bool,
        counters: &mut Counters,
    ) -> Result<PropagationOutcome, PropagationError> {
        self.queue.clear();
        for c in self.fruitful.drain(..) {
            self.fruitful_mark[c.0] = false;
        }
        self.seed(p, seeds)?;
        let mut run = Run {
            p,
            d,
            weights,
            learn,
            counters,
            removals: 0,
        };
        let status = match self.scheme {
            Scheme::Arc => self.run_arc(&mut run),
            Scheme::Variable => self.run_variable(&mut run),
            Scheme::Constraint => self.run_constraint(&mut run),
        };
        if let Status::Wipeout { constraint, .. } = status {
            run.counters.dwos += 1;
            if run.learn {
                run.weights.record(p, FailureEvent::Dwo(constraint));
                let others: Vec<ConstraintId> =
                    self.fruitful.iter().copied().filter(|&c| c != constraint).collect();
                run.weights.record(p, FailureEvent::FruitfulSet(&others));
            }
            self.queue.clear();
        }
        debug_assert!(self.queue.counters_are_zero());
        Ok(PropagationOutcome {
            status,
            removals: run.removals,
            fruitful: self.fruitful.clone(),
        })
    }

    fn seed(&mut self, p: &Problem, seeds: Seeds<'_>) -> Result<(), PropagationError> {
        let q = &mut self.queue;
        match (self.scheme, seeds) {
            (Scheme::Arc, Seeds::All) => {
                for c in p.constraints() {
                    for pos in 0..c.arity() {
                        q.push_raw(q.arc_index(c.id, pos));
                    }
                }
            }
            (Scheme::Variable, Seeds::All) => {
                for c in p.constraints() {
                    for pos in 0..c.arity() {
                        q.set_ctr_at(c.id, pos, 1);
                    }
                }
                for x in p.variables() {
                    q.push_raw(x.0);
                }
            }
            (Scheme::Constraint, Seeds::All) => {
                for c in p.constraints() {
                    for pos in 0..c.arity() {
                        q.set_ctr_at(c.id, pos, 1);
                    }
                    q.push_raw(c.id.0);
                }
            }
            (Scheme::Arc, Seeds::Changed(changed)) => {
                for &(x, n) in changed {
                    if n == 0 {
                        continue;
                    }
                    for &(c, pos) in p.incident(x) {
                        for other in 0..p.constraint(c).arity() {
                            if other != pos {
                                q.push_raw(q.arc_index(c, other));
                            }
                        }
                    }
                }
            }
            (Scheme::Variable, Seeds::Changed(changed)) => {
                for &(x, n) in changed {
                    if n == 0 {
                        continue;
                    }
                    q.push_raw(x.0);
                    for &(c, pos) in p.incident(x) {
                        q.add_ctr(c, pos, n as u64);
                    }
                }
            }
            (Scheme::Constraint, Seeds::Changed(changed)) => {
                for &(x, n) in changed {
                    if n == 0 {
                        continue;
                    }
                    for &(c, pos) in p.incident(x) {
                        q.add_ctr(c, pos, n as u64);
                        q.push_raw(c.0);
                    }
                }
            }
            (Scheme::Arc, Seeds::Arcs(arcs)) => {
                for &(c, x) in arcs {
                    q.push(p, Element::Arc { constraint: c, var: x })?;
                }
            }
            (Scheme::Variable, Seeds::Variables(xs)) => {
                for &x in xs {
                    q.push_raw(x.0);
                    for &(c, pos) in p.incident(x) {
                        q.set_ctr_at(c, pos, 1);
                    }
                }
            }
            (Scheme::Constraint, Seeds::Constraints(cs)) => {
                for &c in cs {
                    for pos in 0..p.constraint(c).arity() {
                        q.set_ctr_at(c, pos, 1);
                    }
                    q.push_raw(c.0);
                }
            }
            (scheme, _) => return Err(PropagationError::SeedMismatch { scheme }),
        }
        Ok(())
    }

    /// Revises (c, pos) and records the deletion; returns the number removed.
    fn revise_counted(&mut self, run: &mut Run<'_>, c: ConstraintId, pos: usize) -> usize {
        let n = revise_at(run.p, run.d, c, pos, run.counters, &mut self.values, &mut self.scratch);
        if n > 0 {
            run.removals += n;
            if !self.fruitful_mark[c.0] {
                self.fruitful_mark[c.0] = true;
                self.fruitful.push(c);
            }
            if run.learn {
                run.weights.record(run.p, FailureEvent::Deletions(c, n));
            }
        }
        n
    }

    fn select(&mut self, run: &mut Run<'_>) -> Option<usize> {
        if self.queue.is_empty() {
            return None;
        }
        run.counters.revisions += 1;
        Some(
            self.queue
                .select_raw(run.p, self.policy, run.d, run.weights)
                .expect("queue is not empty"),
        )
    }

    fn run_arc(&mut self, run: &mut Run<'_>) -> Status {
        let p = run.p;
        while let Some(e) = self.select(run) {
            let (c, pos) = self.queue.arc(e);
            let x = p.constraint(c).scope[pos];
            if self.revise_counted(run, c, pos) == 0 {
                continue;
            }
            if run.d.is_empty(x) {
                return Status::Wipeout { constraint: c, variable: x };
            }
            for &(c2, pos2) in p.incident(x) {
                if c2 == c {
                    continue;
                }
                for other in 0..p.constraint(c2).arity() {
                    if other != pos2 {
                        let a = self.queue.arc_index(c2, other);
                        self.queue.push_raw(a);
                    }
                }
            }
        }
        Status::Consistent
    }

    fn run_variable(&mut self, run: &mut Run<'_>) -> Status {
        let p = run.p;
        let by_weight = matches!(self.policy, RevisionPolicy::VWdeg | RevisionPolicy::VDomWdeg);
        while let Some(e) = self.select(run) {
            let x = VarId(e);
            let mut order = std::mem::take(&mut self.order);
            order.clear();
            order.extend_from_slice(p.incident(x));
            if by_weight {
                order.sort_by_key(|&(c, _)| std::cmp::Reverse(run.weights.weight(c)));
            }
            for &(c, posx) in &order {
                if self.queue.ctr_at(c, posx) == 0 {
                    continue;
                }
                if let Some(status) = self.revise_constraint(run, c, Requeue::Variables) {
                    self.order = order;
                    return status;
                }
            }
            self.order = order;
        }
        Status::Consistent
    }

    fn run_constraint(&mut self, run: &mut Run<'_>) -> Status {
        while let Some(e) = self.select(run) {
            if let Some(status) = self.revise_constraint(run, ConstraintId(e), Requeue::Constraints) {
                return status;
            }
        }
        Status::Consistent
    }

    /// Revises every relevant variable of `c`, then zeroes its counters.
    /// Returns the wipeout status if one occurs.
    fn revise_constraint(&mut self, run: &mut Run<'_>, c: ConstraintId, requeue: Requeue) -> Option<Status> {
        let p = run.p;
        let arity = p.constraint(c).arity();
        for pos in 0..arity {
            if self.queue.needs_not_be_revised_at(c, pos, arity) {
                continue;
            }
            let n = self.revise_counted(run, c, pos);
            if n == 0 {
                continue;
            }
            let y = p.constraint(c).scope[pos];
            if run.d.is_empty(y) {
                return Some(Status::Wipeout { constraint: c, variable: y });
            }
            if requeue == Requeue::Variables {
                self.queue.push_raw(y.0);
            }
            for &(c2, pos2) in p.incident(y) {
                if c2 != c {
                    self.queue.add_ctr(c2, pos2, n as u64);
                    if requeue == Requeue::Constraints {
                        self.queue.push_raw(c2.0);
                    }
                }
            }
        }
        self.queue.reset_ctr(c, arity);
        None
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Requeue {
    Variables,
    Constraints,
}

struct Run<'a> {
    p: &'a Problem,
    d: &'a mut DomainStore,
    weights: &'a mut WeightStore,
    learn: bool,
    counters: &'a mut Counters,
    removals: usize,
}
