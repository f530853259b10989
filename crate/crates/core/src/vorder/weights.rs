use std::fmt;
use std::str::FromStr;

use crate::model::{ConstraintId, Problem, VarId};

/// How failures feed constraint weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WeightUpdate {
    /// +1 to the constraint of a domain wipeout.
    Wdeg,
    /// +nbRemovals to the constraint of every fruitful revision.
    AllDel,
    /// On a wipeout, +1 to its constraint and to every other constraint that
    /// deleted values during the failing propagation.
    FullyAssigned,
}

impl fmt::Display for WeightUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightUpdate::Wdeg => "wdeg",
            WeightUpdate::AllDel => "alldel",
            WeightUpdate::FullyAssigned => "fully",
        })
    }
}

impl FromStr for WeightUpdate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wdeg" => Ok(WeightUpdate::Wdeg),
            "alldel" => Ok(WeightUpdate::AllDel),
            "fully" | "fully_assigned" => Ok(WeightUpdate::FullyAssigned),
            _ => Err(format!("unknown weight update `{s}`")),
        }
    }
}

/// Events emitted by propagation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureEvent<'a> {
    Dwo(ConstraintId),
    Deletions(ConstraintId, usize),
    /// Constraints, other than the wipeout's, that deleted values during a
    /// propagation that ended in a wipeout.
    FruitfulSet(&'a [ConstraintId]),
}

/// Constraint weights and the dynamic degree bookkeeping that goes with them.
///
/// A constraint qualifies for variable `x` when at least one variable of its
/// scope other than `x` is unassigned. `wdeg(x)` sums the weights of the
/// qualifying constraints and `ddeg(x)` counts them; both are maintained
/// incrementally across assignments and weight bumps.
#[derive(Clone, Debug)]
pub struct WeightStore {
    update: WeightUpdate,
    weights: Vec<u64>,
    wdeg: Vec<u64>,
    ddeg: Vec<u32>,
    unassigned_in: Vec<u32>,
    assigned: Vec<bool>,
}

impl WeightStore {
    pub fn new(p: &Problem, update: WeightUpdate) -> Self {
        let weights = vec![1; p.num_constraints()];
        let unassigned_in = p.constraints().iter().map(|c| c.arity() as u32).collect();
        let ddeg: Vec<u32> = p.variables().map(|x| p.incident(x).len() as u32).collect();
        let wdeg = ddeg.iter().map(|&d| d as u64).collect();
        WeightStore {
            update,
            weights,
            wdeg,
            ddeg,
            unassigned_in,
            assigned: vec![false; p.num_variables()],
        }
    }

    pub fn update_policy(&self) -> WeightUpdate {
        self.update
    }

    #[inline]
    pub fn weight(&self, c: ConstraintId) -> u64 {
        self.weights[c.0]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    #[inline]
    pub fn wdeg(&self, x: VarId) -> u64 {
        self.wdeg[x.0]
    }

    #[inline]
    pub fn ddeg(&self, x: VarId) -> u32 {
        self.ddeg[x.0]
    }

    #[inline]
    pub fn is_assigned(&self, x: VarId) -> bool {
        self.assigned[x.0]
    }

    pub fn unassigned(&self) -> impl Iterator<Item = VarId> + '_ {
        self.assigned
            .iter()
            .enumerate()
            .filter(|(_, &a)| !a)
            .map(|(i, _)| VarId(i))
    }

    pub fn all_assigned(&self) -> bool {
        self.assigned.iter().all(|&a| a)
    }

    #[inline]
    fn qualifies(&self, c: ConstraintId, y: VarId) -> bool {
        let own = if self.assigned[y.0] { 0 } else { 1 };
        self.unassigned_in[c.0] - own >= 1
    }

    pub fn assign(&mut self, p: &Problem, x: VarId) {
        debug_assert!(!self.assigned[x.0]);
        for &(c, _) in p.incident(x) {
            // only y != x can flip: their count of other unassigned drops by one
            for &y in &p.constraint(c).scope {
                if y != x && self.qualifies(c, y) {
                    let own = if self.assigned[y.0] { 0 } else { 1 };
                    if self.unassigned_in[c.0] - own == 1 {
                        self.wdeg[y.0] -= self.weights[c.0];
                        self.ddeg[y.0] -= 1;
                    }
                }
            }
            self.unassigned_in[c.0] -= 1;
        }
        self.assigned[x.0] = true;
    }

    pub fn unassign(&mut self, p: &Problem, x: VarId) {
        debug_assert!(self.assigned[x.0]);
        self.assigned[x.0] = false;
        for &(c, _) in p.incident(x) {
            self.unassigned_in[c.0] += 1;
            for &y in &p.constraint(c).scope {
                if y != x {
                    let own = if self.assigned[y.0] { 0 } else { 1 };
                    if self.unassigned_in[c.0] - own == 1 {
                        self.wdeg[y.0] += self.weights[c.0];
                        self.ddeg[y.0] += 1;
                    }
                }
            }
        }
    }

    pub fn unassign_all(&mut self, p: &Problem) {
        for x in p.variables() {
            if self.assigned[x.0] {
                self.unassign(p, x);
            }
        }
    }

    /// Adds `delta` to the weight of `c`.
    pub fn bump(&mut self, p: &Problem, c: ConstraintId, delta: u64) {
        if delta == 0 {
            return;
        }
        self.weights[c.0] += delta;
        for &y in &p.constraint(c).scope {
            if self.qualifies(c, y) {
                self.wdeg[y.0] += delta;
            }
        }
    }

    /// Applies a propagation event under the store's update policy.
    pub fn record(&mut self, p: &Problem, event: FailureEvent<'_>) {
        match (self.update, event) {
            (WeightUpdate::Wdeg, FailureEvent::Dwo(c)) => self.bump(p, c, 1),
            (WeightUpdate::AllDel, FailureEvent::Deletions(c, n)) => self.bump(p, c, n as u64),
            (WeightUpdate::FullyAssigned, FailureEvent::Dwo(c)) => self.bump(p, c, 1),
            (WeightUpdate::FullyAssigned, FailureEvent::FruitfulSet(set)) => {
                for &c in set {
                    self.bump(p, c, 1);
                }
            }
            _ => {}
        }
    }

    /// Multiplies every weight by `k`.
    pub fn scale(&mut self, p: &Problem, k: u64) {
        assert!(k >= 1);
        for c in 0..self.weights.len() {
            let extra = self.weights[c] * (k - 1);
            self.bump(p, ConstraintId(c), extra);
        }
    }

    /// wdeg recomputed from its definition.
    pub fn wdeg_from_scratch(&self, p: &Problem, x: VarId) -> u64 {
        p.incident(x)
            .iter()
            .filter(|(c, _)| self.has_other_unassigned(p, *c, x))
            .map(|(c, _)| self.weights[c.0])
            .sum()
    }

    pub fn ddeg_from_scratch(&self, p: &Problem, x: VarId) -> u32 {
        p.incident(x)
            .iter()
            .filter(|(c, _)| self.has_other_unassigned(p, *c, x))
            .count() as u32
    }

    fn has_other_unassigned(&self, p: &Problem, c: ConstraintId, x: VarId) -> bool {
        p.constraint(c)
            .scope
            .iter()
            .any(|&y| y != x && !self.assigned[y.0])
    }
}
