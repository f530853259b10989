use super::ImpactStore;
use crate::model::VarId;
use crate::propagation::Engine;

/// Result of a (possibly probing) variable selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lookahead {
    /// `pruned` lists variables whose domains lost values during probing,
    /// with the number lost; they still have to be propagated.
    Chosen { variable: VarId, pruned: Vec<(VarId, usize)> },
    /// Probing emptied a candidate's domain.
    Wipeout,
}

struct Probe {
    /// Per live value index: after/before space ratio, or None on wipeout.
    ratios: Vec<(usize, Option<f64>)>,
}

/// Assigns every live value of `x` in turn, propagates without learning
/// and restores.
fn probe(engine: &mut Engine<'_>, x: VarId) -> Probe {
    let before = engine.domains.sizes().to_vec();
    let values: Vec<usize> = engine.domains.iter(x).collect();
    let mut ratios = Vec::with_capacity(values.len());
    for ia in values {
        let level = engine.domains.depth();
        engine.domains.push_level();
        let removed = engine.domains.assign(x, ia);
        let outcome = engine.propagate_changes(&[(x, removed)], false);
        let r = outcome.is_consistent().then(|| engine.space_ratio(&before));
        engine.domains.restore_to(level);
        ratios.push((ia, r));
    }
    Probe { ratios }
}

/// Removes the values whose probe wiped out. Returns false if `x` empties.
fn prune(engine: &mut Engine<'_>, x: VarId, probe: &Probe, pruned: &mut Vec<(VarId, usize)>) -> bool {
    let mut n = 0;
    for &(ia, r) in &probe.ratios {
        if r.is_none() && engine.domains.remove(x, ia) {
            n += 1;
        }
    }
    if n > 0 {
        pruned.push((x, n));
    }
    !engine.domains.is_empty(x)
}

/// Breaks ties by exact impacts: the candidate whose surviving values leave
/// the smallest summed residual space wins. Observations are also fed to
/// `store` when one is given.
pub fn node_impact_tiebreak(
    candidates: &[VarId],
    engine: &mut Engine<'_>,
    mut store: Option<&mut ImpactStore>,
) -> Lookahead {
    if let [only] = candidates {
        return Lookahead::Chosen {
            variable: *only,
            pruned: Vec::new(),
        };
    }
    let mut pruned = Vec::new();
    let mut best: Option<(f64, VarId)> = None;
    for &x in candidates {
        let pr = probe(engine, x);
        if let Some(s) = store.as_deref_mut() {
            for &(ia, r) in &pr.ratios {
                s.observe_ratio(x, ia, r.unwrap_or(0.0));
            }
        }
        if !prune(engine, x, &pr, &mut pruned) {
            return Lookahead::Wipeout;
        }
        let score: f64 = pr.ratios.iter().filter_map(|&(_, r)| r).sum();
        if best.is_none_or(|(b, _)| score < b) {
            best = Some((score, x));
        }
    }
    Lookahead::Chosen {
        variable: best.expect("candidates not empty").1,
        pruned,
    }
}

/// Breaks ties by restricted singleton consistency: the candidate with the
/// largest total search-space reduction over its values wins, a wiped value
/// counting as a full reduction.
pub fn rsc_tiebreak(candidates: &[VarId], engine: &mut Engine<'_>) -> Lookahead {
    if let [only] = candidates {
        return Lookahead::Chosen {
            variable: *only,
            pruned: Vec::new(),
        };
    }
    let mut pruned = Vec::new();
    let mut best: Option<(f64, VarId)> = None;
    for &x in candidates {
        let pr = probe(engine, x);
        if !prune(engine, x, &pr, &mut pruned) {
            return Lookahead::Wipeout;
        }
        let score: f64 = pr.ratios.iter().map(|&(_, r)| 1.0 - r.unwrap_or(0.0)).sum();
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, x));
        }
    }
    Lookahead::Chosen {
        variable: best.expect("candidates not empty").1,
        pruned,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Predicate, Problem, ProblemBuilder, Relation};
    use crate::propagation::{RevisionPolicy, Scheme};
    use crate::vorder::WeightUpdate;

    // x0 < x1 < x2 over {0..3}, x3 free over {0,1,2}
    fn chain() -> Problem {
        let mut b = ProblemBuilder::new("chain");
        let x: Vec<_> = (0..3).map(|i| b.variable(format!("x{i}"), vec![0, 1, 2, 3])).collect();
        b.variable("x3", vec![0, 1, 2]);
        b.constraint("a", &[x[0], x[1]], Relation::Predicate(Predicate::Lt));
        b.constraint("b", &[x[1], x[2]], Relation::Predicate(Predicate::Lt));
        b.build().unwrap()
    }

    fn engine(p: &Problem) -> Engine<'_> {
        Engine::new(p, Scheme::Arc, RevisionPolicy::Fifo, WeightUpdate::Wdeg).unwrap()
    }

    #[test]
    fn rsc_prunes_wiped_values() {
        // no AC yet, so x0 = 2 and x0 = 3 both wipe out
        let p = chain();
        let mut e = engine(&p);
        let weights = e.weights.clone();
        let snapshot = e.domains.snapshot();
        match rsc_tiebreak(&[VarId(0), VarId(3)], &mut e) {
            Lookahead::Chosen { variable, pruned } => {
                assert_eq!(variable, VarId(0));
                assert_eq!(pruned, vec![(VarId(0), 2)]);
            }
            Lookahead::Wipeout => panic!(),
        }
        assert_ne!(snapshot, e.domains.snapshot());
        assert_eq!(e.domains.len(VarId(0)), 2);
        assert_eq!(e.weights.weights(), weights.weights());
    }

    #[test]
    fn node_impact_prefers_smaller_residual() {
        let p = chain();
        let mut e = engine(&p);
        e.propagate(crate::propagation::Seeds::All, false).unwrap();
        let mut store = ImpactStore::new(&p);
        let chosen = node_impact_tiebreak(&[VarId(0), VarId(3)], &mut e, Some(&mut store));
        // x0 = 0 shrinks x1,x2 strongly; x3 choices reduce only itself
        assert_eq!(
            chosen,
            Lookahead::Chosen {
                variable: VarId(0),
                pruned: vec![]
            }
        );
        assert_eq!(store.observations(VarId(3), 1), 1);
    }

    #[test]
    fn single_candidate_untouched() {
        let p = chain();
        let mut e = engine(&p);
        let before = e.counters;
        let c = rsc_tiebreak(&[VarId(2)], &mut e);
        assert_eq!(
            c,
            Lookahead::Chosen {
                variable: VarId(2),
                pruned: vec![]
            }
        );
        assert_eq!(node_impact_tiebreak(&[VarId(2)], &mut e, None), c);
        assert_eq!(e.counters, before);
    }

    #[test]
    fn emptied_candidate_signals_wipeout() {
        let mut b = ProblemBuilder::new("dead");
        let x = b.variable("x", vec![0, 1]);
        let y = b.variable("y", vec![0, 1]);
        b.variable("z", vec![5]);
        b.constraint("c", &[x, y], Relation::Predicate(Predicate::Gt));
        b.constraint("d", &[y, x], Relation::Predicate(Predicate::Gt));
        let p = b.build().unwrap();
        let mut e = engine(&p);
        assert_eq!(rsc_tiebreak(&[VarId(0), VarId(2)], &mut e), Lookahead::Wipeout);
    }
}
