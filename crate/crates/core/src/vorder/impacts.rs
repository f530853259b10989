use super::VOrderError;
use crate::model::{Problem, VarId};
use crate::model::DomainStore;
use crate::propagation::Engine;

/// Observed impacts per (variable, value index).
#[derive(Clone, Debug)]
pub struct ImpactStore {
    sum: Vec<Vec<f64>>,
    count: Vec<Vec<u32>>,
}

impl ImpactStore {
    pub fn new(p: &Problem) -> Self {
        ImpactStore {
            sum: p.variables().map(|x| vec![0.0; p.initial_domain(x).len()]).collect(),
            count: p.variables().map(|x| vec![0; p.initial_domain(x).len()]).collect(),
        }
    }

    /// Records I = 1 - after/before for the assignment `x = index`.
    pub fn observe_impact(&mut self, x: VarId, index: usize, p_before: f64, p_after: f64) {
        debug_assert!(p_before > 0.0);
        self.observe_ratio(x, index, p_after / p_before);
    }

    /// Records an impact given the after/before search-space ratio.
    pub fn observe_ratio(&mut self, x: VarId, index: usize, ratio: f64) {
        let impact = (1.0 - ratio).clamp(0.0, 1.0);
        self.sum[x.0][index] += impact;
        self.count[x.0][index] += 1;
    }

    pub fn observations(&self, x: VarId, index: usize) -> u32 {
        self.count[x.0][index]
    }

    pub fn averaged_impact(&self, p: &Problem, x: VarId, index: usize) -> Result<f64, VOrderError> {
        match self.count[x.0][index] {
            0 => Err(VOrderError::UninitializedImpact {
                variable: x,
                value: p.value(x, index),
            }),
            k => Ok(self.sum[x.0][index] / k as f64),
        }
    }

    /// Sum of 1 - Ī over the current values of `x`.
    pub fn variable_impact(&self, p: &Problem, d: &DomainStore, x: VarId) -> Result<f64, VOrderError> {
        d.iter(x)
            .map(|i| self.averaged_impact(p, x, i).map(|a| 1.0 - a))
            .sum()
    }
}

/// Sizes of `min(parts, n)` contiguous near-equal blocks covering `n` values;
/// the first `n mod parts` blocks take one extra value.
pub fn partition(n: usize, parts: usize) -> Vec<usize> {
    let k = parts.min(n);
    if k == 0 {
        return Vec::new();
    }
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Seeds the store by restricting each variable to each block of its
/// domain in turn and propagating. Returns false when every block of some
/// variable wipes out, which proves the problem inconsistent.
pub fn init_impacts(engine: &mut Engine<'_>, store: &mut ImpactStore, max_parts: usize) -> bool {
    let p = engine.problem;
    for x in p.variables() {
        if engine.is_assigned(x) {
            continue;
        }
        let mut values: Vec<usize> = engine.domains.iter(x).collect();
        values.sort_by_key(|&i| p.value(x, i));
        let before = engine.domains.sizes().to_vec();
        let mut start = 0;
        let mut all_failed = true;
        for size in partition(values.len(), max_parts) {
            let block = &values[start..start + size];
            start += size;
            let level = engine.domains.depth();
            engine.domains.push_level();
            let mut removed = 0;
            for &i in &values {
                if !block.contains(&i) && engine.domains.remove(x, i) {
                    removed += 1;
                }
            }
            let outcome = engine.propagate_changes(&[(x, removed)], false);
            let ratio = if outcome.is_consistent() {
                all_failed = false;
                engine.space_ratio(&before)
            } else {
                0.0
            };
            // every value of the block shares the block's reduction
            for &i in block {
                store.observe_ratio(x, i, ratio);
            }
            engine.domains.restore_to(level);
        }
        if all_failed {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Predicate, ProblemBuilder, Relation};
    use crate::propagation::{RevisionPolicy, Scheme};
    use crate::vorder::WeightUpdate;

    #[test]
    fn partitions() {
        assert_eq!(partition(8, 4), vec![2, 2, 2, 2]);
        assert_eq!(partition(3, 4), vec![1, 1, 1]);
        assert_eq!(partition(10, 4), vec![3, 3, 2, 2]);
        assert_eq!(partition(1, 4), vec![1]);
        for n in 1..40 {
            let parts = partition(n, 4);
            assert_eq!(parts.iter().sum::<usize>(), n);
            assert!(parts.iter().max().unwrap() - parts.iter().min().unwrap() <= 1);
        }
    }

    fn pair() -> Problem {
        let mut b = ProblemBuilder::new("pair");
        let x = b.variable("x", vec![0, 1, 2, 3]);
        let y = b.variable("y", vec![0, 1, 2, 3]);
        b.constraint("lt", &[x, y], Relation::Predicate(Predicate::Lt));
        b.build().unwrap()
    }

    #[test]
    fn averages() {
        let p = pair();
        let mut s = ImpactStore::new(&p);
        assert!(s.averaged_impact(&p, VarId(0), 0).is_err());
        s.observe_impact(VarId(0), 0, 12.0, 6.0);
        s.observe_impact(VarId(0), 0, 4.0, 1.0);
        assert!((s.averaged_impact(&p, VarId(0), 0).unwrap() - 0.625).abs() < 1e-12);
        s.observe_impact(VarId(0), 1, 5.0, 0.0);
        s.observe_impact(VarId(0), 1, 5.0, 5.0);
        assert_eq!(s.averaged_impact(&p, VarId(0), 1).unwrap(), 0.5);
        s.observe_impact(VarId(1), 2, 3.0, 3.0);
        assert_eq!(s.averaged_impact(&p, VarId(1), 2).unwrap(), 0.0);
    }

    #[test]
    fn variable_impact_sums_complements() {
        let mut b = ProblemBuilder::new("one");
        b.variable("x", vec![5, 6]);
        let p = b.build().unwrap();
        let d = DomainStore::new(&p);
        let mut s = ImpactStore::new(&p);
        s.observe_ratio(VarId(0), 0, 0.5);
        s.observe_ratio(VarId(0), 1, 0.25);
        assert!((s.variable_impact(&p, &d, VarId(0)).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn init_observes_every_value() {
        let p = pair();
        let mut e = Engine::new(&p, Scheme::Arc, RevisionPolicy::Fifo, WeightUpdate::Wdeg).unwrap();
        assert!(e.propagate(crate::propagation::Seeds::All, false).unwrap().is_consistent());
        let mut s = ImpactStore::new(&p);
        assert!(init_impacts(&mut e, &mut s, 4));
        let snapshot = e.domains.snapshot();
        for x in p.variables() {
            for i in e.domains.iter(x) {
                let a = s.averaged_impact(&p, x, i).unwrap();
                assert!((0.0..=1.0).contains(&a));
            }
            let vi = s.variable_impact(&p, &e.domains, x).unwrap();
            assert!(vi >= 0.0 && vi <= e.domains.len(x) as f64);
        }
        assert_eq!(snapshot, e.domains.snapshot());
        // after AC x in {0,1,2}, y in {1,2,3}; x = 2 forces y = 3
        assert!((s.averaged_impact(&p, VarId(0), 2).unwrap() - (1.0 - 1.0 / 9.0)).abs() < 1e-12);
        assert!((s.averaged_impact(&p, VarId(0), 0).unwrap() - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }
}
