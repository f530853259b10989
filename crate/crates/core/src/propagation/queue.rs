use std::collections::VecDeque;

use super::{PropagationError, RevisionPolicy, Scheme};
use crate::model::{ConstraintId, DomainStore, Problem, VarId};
use crate::vorder::WeightStore;

/// A pending revision, in the vocabulary of the scheme that owns the queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Element {
    /// Revise `var` against `constraint`.
    Arc { constraint: ConstraintId, var: VarId },
    Variable(VarId),
    Constraint(ConstraintId),
}

/// Duplicate-free revision list with FIFO insertion order, plus the
/// per-(constraint, variable) deletion counters used by the variable- and
/// constraint-oriented schemes.
#[derive(Clone, Debug)]
pub struct RevisionQueue {
    scheme: Scheme,
    pending: VecDeque<usize>,
    member: Vec<bool>,
    ctr: Vec<u64>,
    arc_offset: Vec<usize>,
    arcs: Vec<(ConstraintId, usize)>,
    audit: bool,
    audit_marks: Vec<bool>,
}

impl RevisionQueue {
    pub fn new(p: &Problem, scheme: Scheme) -> Self {
        let mut arc_offset = Vec::with_capacity(p.num_constraints());
        let mut arcs = Vec::new();
        for c in p.constraints() {
            arc_offset.push(arcs.len());
            arcs.extend((0..c.arity()).map(|pos| (c.id, pos)));
        }
        let elements = match scheme {
            Scheme::Arc => arcs.len(),
            Scheme::Variable => p.num_variables(),
            Scheme::Constraint => p.num_constraints(),
        };
        RevisionQueue {
            scheme,
            pending: VecDeque::new(),
            member: vec![false; elements],
            ctr: vec![0; arcs.len()],
            arc_offset,
            arcs,
            audit: false,
            audit_marks: vec![false; elements],
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Checks duplicate-freedom on every selection when enabled.
    pub fn set_audit(&mut self, on: bool) {
        self.audit = on;
    }

    /// Empties the queue and zeroes every counter.
    pub fn clear(&mut self) {
        for e in self.pending.drain(..) {
            self.member[e] = false;
        }
        self.ctr.iter_mut().for_each(|c| *c = 0);
    }

    #[inline]
    pub(crate) fn arc_index(&self, c: ConstraintId, pos: usize) -> usize {
        self.arc_offset[c.0] + pos
    }

    #[inline]
    pub(crate) fn arc(&self, e: usize) -> (ConstraintId, usize) {
        self.arcs[e]
    }

    #[inline]
    pub(crate) fn push_raw(&mut self, e: usize) -> bool {
        if self.member[e] {
            return false;
        }
        self.member[e] = true;
        self.pending.push_back(e);
        true
    }

    /// Inserts an element unless already pending; returns whether it was added.
    pub fn push(&mut self, p: &Problem, element: Element) -> Result<bool, PropagationError> {
        let e = match (self.scheme, element) {
            (Scheme::Arc, Element::Arc { constraint, var }) => {
                let pos = p
                    .constraint(constraint)
                    .position(var)
                    .ok_or(PropagationError::NotInScope)?;
                self.arc_index(constraint, pos)
            }
            (Scheme::Variable, Element::Variable(x)) => x.0,
            (Scheme::Constraint, Element::Constraint(c)) => c.0,
            (scheme, _) => return Err(PropagationError::SeedMismatch { scheme }),
        };
        Ok(self.push_raw(e))
    }

    pub fn pending(&self, p: &Problem) -> Vec<Element> {
        self.pending.iter().map(|&e| self.element(p, e)).collect()
    }

    pub(crate) fn element(&self, p: &Problem, e: usize) -> Element {
        match self.scheme {
            Scheme::Arc => {
                let (c, pos) = self.arcs[e];
                Element::Arc {
                    constraint: c,
                    var: p.constraint(c).scope[pos],
                }
            }
            Scheme::Variable => Element::Variable(VarId(e)),
            Scheme::Constraint => Element::Constraint(ConstraintId(e)),
        }
    }

    #[inline]
    pub(crate) fn ctr_at(&self, c: ConstraintId, pos: usize) -> u64 {
        self.ctr[self.arc_offset[c.0] + pos]
    }

    #[inline]
    pub(crate) fn add_ctr(&mut self, c: ConstraintId, pos: usize, n: u64) {
        let i = self.arc_offset[c.0] + pos;
        self.ctr[i] += n;
    }

    #[inline]
    pub(crate) fn set_ctr_at(&mut self, c: ConstraintId, pos: usize, n: u64) {
        let i = self.arc_offset[c.0] + pos;
        self.ctr[i] = n;
    }

    pub(crate) fn reset_ctr(&mut self, c: ConstraintId, arity: usize) {
        let start = self.arc_offset[c.0];
        self.ctr[start..start + arity].iter_mut().for_each(|v| *v = 0);
    }

    /// ctr(c, x).
    pub fn ctr(&self, p: &Problem, c: ConstraintId, x: VarId) -> Option<u64> {
        p.constraint(c).position(x).map(|pos| self.ctr_at(c, pos))
    }

    pub fn set_ctr(&mut self, p: &Problem, c: ConstraintId, x: VarId, n: u64) -> Result<(), PropagationError> {
        let pos = p.constraint(c).position(x).ok_or(PropagationError::NotInScope)?;
        self.set_ctr_at(c, pos, n);
        Ok(())
    }

    pub fn counters_are_zero(&self) -> bool {
        self.ctr.iter().all(|&c| c == 0)
    }

    /// True iff `x` is the only variable of `c` whose counter is positive: a
    /// revision of `x` against `c` cannot delete anything then.
    pub fn needs_not_be_revised(&self, p: &Problem, c: ConstraintId, x: VarId) -> bool {
        match p.constraint(c).position(x) {
            Some(pos) => self.needs_not_be_revised_at(c, pos, p.constraint(c).arity()),
            None => false,
        }
    }

    #[inline]
    pub(crate) fn needs_not_be_revised_at(&self, c: ConstraintId, pos: usize, arity: usize) -> bool {
        let start = self.arc_offset[c.0];
        let ctr = &self.ctr[start..start + arity];
        ctr[pos] > 0 && ctr.iter().enumerate().all(|(k, &v)| k == pos || v == 0)
    }

    /// Removes and returns the element preferred by `policy`; ties go to the
    /// earliest inserted.
    pub fn select_next(
        &mut self,
        p: &Problem,
        policy: RevisionPolicy,
        d: &DomainStore,
        weights: &WeightStore,
    ) -> Result<Element, PropagationError> {
        let e = self.select_raw(p, policy, d, weights)?;
        Ok(self.element(p, e))
    }

    pub(crate) fn select_raw(
        &mut self,
        p: &Problem,
        policy: RevisionPolicy,
        d: &DomainStore,
        weights: &WeightStore,
    ) -> Result<usize, PropagationError> {
        if self.pending.is_empty() {
            return Err(PropagationError::EmptyQueue);
        }
        if self.audit {
            self.audit_pending();
        }
        let at = if policy == RevisionPolicy::Fifo {
            0
        } else {
            let mut best = 0;
            let mut best_score = f64::INFINITY;
            for (i, &e) in self.pending.iter().enumerate() {
                let s = self.score(p, policy, d, weights, e);
                if s < best_score {
                    best_score = s;
                    best = i;
                }
            }
            best
        };
        let e = self.pending.remove(at).expect("index in range");
        self.member[e] = false;
        Ok(e)
    }

    fn audit_pending(&mut self) {
        for &e in &self.pending {
            assert!(!self.audit_marks[e], "revision queue holds a duplicate");
            assert!(self.member[e]);
            self.audit_marks[e] = true;
        }
        for &e in &self.pending {
            self.audit_marks[e] = false;
        }
        assert_eq!(
            self.member.iter().filter(|&&m| m).count(),
            self.pending.len()
        );
    }

    /// Smaller is preferred.
    fn score(&self, p: &Problem, policy: RevisionPolicy, d: &DomainStore, w: &WeightStore, e: usize) -> f64 {
        use RevisionPolicy::*;
        let dom_over_wdeg = |x: VarId| {
            let wd = w.wdeg(x);
            let dom = d.len(x) as f64;
            if wd == 0 {
                dom
            } else {
                dom / wd as f64
            }
        };
        match self.scheme {
            Scheme::Arc => {
                let (c, pos) = self.arcs[e];
                let scope = &p.constraint(c).scope;
                let x = scope[pos];
                let others = || scope.iter().copied().filter(move |&y| y != x);
                match policy {
                    Fifo => 0.0,
                    Dom => d.len(x) as f64,
                    AWcon => -(w.weight(c) as f64),
                    AWdeg => -(w.wdeg(x) as f64),
                    ADomWdeg => dom_over_wdeg(x),
                    ADomWcon => d.len(x) as f64 / w.weight(c) as f64,
                    ADomWdegInverse => others().map(dom_over_wdeg).fold(f64::INFINITY, f64::min),
                    ADomWconInverse => {
                        others().map(|y| d.len(y)).min().unwrap_or(0) as f64 / w.weight(c) as f64
                    }
                    VWdeg | VDomWdeg | CWcon => unreachable!("policy checked at construction"),
                }
            }
            Scheme::Variable => {
                let x = VarId(e);
                match policy {
                    Fifo => 0.0,
                    Dom => d.len(x) as f64,
                    VWdeg => -(w.wdeg(x) as f64),
                    VDomWdeg => dom_over_wdeg(x),
                    _ => unreachable!("policy checked at construction"),
                }
            }
            Scheme::Constraint => match policy {
                Fifo => 0.0,
                CWcon => -(w.weight(ConstraintId(e)) as f64),
                _ => unreachable!("policy checked at construction"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Predicate, ProblemBuilder, Relation};
    use crate::vorder::WeightUpdate;

    fn chain3() -> Problem {
        let mut b = ProblemBuilder::new("q");
        let x1 = b.variable("x1", vec![0, 1]);
        let x2 = b.variable("x2", vec![0, 1, 2]);
        let x3 = b.variable("x3", vec![0, 1]);
        b.constraint("c1", &[x1, x2], Relation::Predicate(Predicate::Ne));
        b.constraint("c2", &[x2, x3], Relation::Predicate(Predicate::Ne));
        b.constraint("c3", &[x1, x3], Relation::Predicate(Predicate::Ne));
        b.build().unwrap()
    }

    #[test]
    fn needs_not_be_revised_formula() {
        let p = chain3();
        let mut q = RevisionQueue::new(&p, Scheme::Variable);
        let c = ConstraintId(0);
        let (x, y) = (VarId(0), VarId(1));
        q.set_ctr(&p, c, x, 2).unwrap();
        assert!(q.needs_not_be_revised(&p, c, x));
        q.set_ctr(&p, c, x, 0).unwrap();
        q.set_ctr(&p, c, y, 3).unwrap();
        assert!(!q.needs_not_be_revised(&p, c, x));
        q.set_ctr(&p, c, x, 1).unwrap();
        q.set_ctr(&p, c, y, 1).unwrap();
        assert!(!q.needs_not_be_revised(&p, c, x));
    }

    #[test]
    fn v_dom_wdeg_prefers_smallest_ratio() {
        let p = chain3();
        let d = DomainStore::new(&p);
        let mut w = WeightStore::new(&p, WeightUpdate::Wdeg);
        // x1: |D|=2, wdeg = 1 + 3 = 4 ; x2: |D|=3, wdeg = 1 + 1 = 2
        w.bump(&p, ConstraintId(2), 2);
        assert_eq!(w.wdeg(VarId(0)), 4);
        assert_eq!(w.wdeg(VarId(1)), 2);
        let mut q = RevisionQueue::new(&p, Scheme::Variable);
        q.push(&p, Element::Variable(VarId(1))).unwrap();
        q.push(&p, Element::Variable(VarId(0))).unwrap();
        assert_eq!(
            q.select_next(&p, RevisionPolicy::VDomWdeg, &d, &w).unwrap(),
            Element::Variable(VarId(0))
        );
    }

    #[test]
    fn fifo_returns_oldest_and_rejects_duplicates() {
        let p = chain3();
        let d = DomainStore::new(&p);
        let w = WeightStore::new(&p, WeightUpdate::Wdeg);
        let mut q = RevisionQueue::new(&p, Scheme::Variable);
        assert!(q.push(&p, Element::Variable(VarId(1))).unwrap());
        assert!(q.push(&p, Element::Variable(VarId(0))).unwrap());
        assert!(!q.push(&p, Element::Variable(VarId(1))).unwrap());
        assert_eq!(q.len(), 2);
        let first = q.select_next(&p, RevisionPolicy::Fifo, &d, &w).unwrap();
        assert_eq!(first, Element::Variable(VarId(1)));
        q.select_next(&p, RevisionPolicy::Fifo, &d, &w).unwrap();
        assert_eq!(
            q.select_next(&p, RevisionPolicy::Fifo, &d, &w),
            Err(PropagationError::EmptyQueue)
        );
    }

    #[test]
    fn a_wcon_max_weight_with_fifo_ties() {
        let p = chain3();
        let d = DomainStore::new(&p);
        let mut w = WeightStore::new(&p, WeightUpdate::Wdeg);
        w.bump(&p, ConstraintId(0), 4);
        w.bump(&p, ConstraintId(1), 4);
        w.bump(&p, ConstraintId(2), 1);
        let mut q = RevisionQueue::new(&p, Scheme::Arc);
        let arc = |c: usize, v: usize| Element::Arc { constraint: ConstraintId(c), var: VarId(v) };
        q.push(&p, arc(2, 0)).unwrap();
        q.push(&p, arc(0, 1)).unwrap();
        q.push(&p, arc(1, 1)).unwrap();
        assert_eq!(q.select_next(&p, RevisionPolicy::AWcon, &d, &w).unwrap(), arc(0, 1));
        assert_eq!(q.select_next(&p, RevisionPolicy::AWcon, &d, &w).unwrap(), arc(1, 1));
    }

    #[test]
    fn inverse_policies_score_the_other_variable() {
        let p = chain3();
        let mut d = DomainStore::new(&p);
        let w = WeightStore::new(&p, WeightUpdate::Wdeg);
        d.remove(VarId(2), 0);
        let mut q = RevisionQueue::new(&p, Scheme::Arc);
        let arc = |c: usize, v: usize| Element::Arc { constraint: ConstraintId(c), var: VarId(v) };
        // (c1, x1) looks at x2 (|D|=3); (c2, x2) looks at x3 (|D|=1)
        q.push(&p, arc(0, 0)).unwrap();
        q.push(&p, arc(1, 1)).unwrap();
        let mut q2 = q.clone();
        assert_eq!(
            q.select_next(&p, RevisionPolicy::ADomWdegInverse, &d, &w).unwrap(),
            arc(1, 1)
        );
        assert_eq!(
            q2.select_next(&p, RevisionPolicy::ADomWconInverse, &d, &w).unwrap(),
            arc(1, 1)
        );
        // the direct variants look at x1 (|D|=2) and x2 (|D|=3)
        let mut q3 = RevisionQueue::new(&p, Scheme::Arc);
        q3.push(&p, arc(1, 1)).unwrap();
        q3.push(&p, arc(0, 0)).unwrap();
        assert_eq!(q3.select_next(&p, RevisionPolicy::ADomWcon, &d, &w).unwrap(), arc(0, 0));
    }

    #[test]
    fn push_rejects_wrong_element_kind() {
        let p = chain3();
        let mut q = RevisionQueue::new(&p, Scheme::Constraint);
        assert_eq!(
            q.push(&p, Element::Variable(VarId(0))),
            Err(PropagationError::SeedMismatch { scheme: Scheme::Constraint })
        );
    }
}
