//! Variable ordering heuristics.

mod impacts;
mod lookahead;
mod weights;

use std::fmt;
use std::str::FromStr;

use crate::model::{DomainStore, Problem, VarId};
use crate::propagation::Engine;

pub use crate::search::{random_probe, ProbeOutcome};
pub use impacts::{init_impacts, partition, ImpactStore};
pub use lookahead::{node_impact_tiebreak, rsc_tiebreak, Lookahead};
pub use weights::{FailureEvent, WeightStore, WeightUpdate};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VOrderError {
    #[error("unknown variable heuristic `{0}`")]
    UnknownHeuristic(String),
    #[error("random probing needs a conflict-driven base, got `{0}`")]
    ProbingNeedsWeights(String),
    #[error("no impact observed for {variable} = {value}")]
    UninitializedImpact { variable: VarId, value: i64 },
}

/// The syntactic property fed to the neighborhood formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alpha {
    Dom,
    DomOverDeg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Combine {
    Sum,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Base {
    Dom,
    Deg,
    Ddeg,
    DomDeg,
    /// dom, ties broken by the larger static degree.
    DomPlusDeg,
    DomDdeg,
    Mdvo { alpha: Alpha, op: Combine },
    Wdeg,
    DomWdeg,
    AllDel,
    FullyAssigned,
    Impact,
}

impl Base {
    pub fn is_conflict_driven(self) -> bool {
        matches!(self, Base::Wdeg | Base::DomWdeg | Base::AllDel | Base::FullyAssigned)
    }

    pub fn weight_update(self) -> WeightUpdate {
        match self {
            Base::AllDel => WeightUpdate::AllDel,
            Base::FullyAssigned => WeightUpdate::FullyAssigned,
            _ => WeightUpdate::Wdeg,
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::Dom => f.write_str("dom"),
            Base::Deg => f.write_str("deg"),
            Base::Ddeg => f.write_str("ddeg"),
            Base::DomDeg => f.write_str("dom/deg"),
            Base::DomPlusDeg => f.write_str("dom+deg"),
            Base::DomDdeg => f.write_str("dom/ddeg"),
            Base::Mdvo { alpha, op } => {
                let a = match alpha {
                    Alpha::Dom => "dom",
                    Alpha::DomOverDeg => "domdeg",
                };
                let o = match op {
                    Combine::Sum => "sum",
                    Combine::Product => "prod",
                };
                write!(f, "mdvo:{a}:{o}")
            }
            Base::Wdeg => f.write_str("wdeg"),
            Base::DomWdeg => f.write_str("dom/wdeg"),
            Base::AllDel => f.write_str("alldel"),
            Base::FullyAssigned => f.write_str("fully"),
            Base::Impact => f.write_str("impact"),
        }
    }
}

impl FromStr for Base {
    type Err = VOrderError;
    fn from_str(s: &str) -> Result<Self, VOrderError> {
        let unknown = || VOrderError::UnknownHeuristic(s.to_string());
        Ok(match s {
            "dom" => Base::Dom,
            "deg" => Base::Deg,
            "ddeg" => Base::Ddeg,
            "dom/deg" => Base::DomDeg,
            "dom+deg" => Base::DomPlusDeg,
            "dom/ddeg" => Base::DomDdeg,
            "mdvo" => Base::Mdvo {
                alpha: Alpha::DomOverDeg,
                op: Combine::Sum,
            },
            "wdeg" => Base::Wdeg,
            "dom/wdeg" => Base::DomWdeg,
            "alldel" => Base::AllDel,
            "fully" | "fully_assigned" => Base::FullyAssigned,
            "impact" | "impacts" => Base::Impact,
            _ => {
                let rest = s.strip_prefix("mdvo:").ok_or_else(unknown)?;
                let (a, o) = rest.split_once(':').ok_or_else(unknown)?;
                let alpha = match a {
                    "dom" => Alpha::Dom,
                    "domdeg" | "dom/deg" => Alpha::DomOverDeg,
                    _ => return Err(unknown()),
                };
                let op = match o {
                    "sum" | "+" => Combine::Sum,
                    "prod" | "*" | "x" => Combine::Product,
                    _ => return Err(unknown()),
                };
                Base::Mdvo { alpha, op }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TieBreak {
    Lexico,
    Rsc,
    NodeImpact,
}

/// Weight initialisation by short random runs before the real search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProbeConfig {
    /// Failures allowed per probe.
    pub failures: u64,
    pub runs: u32,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            failures: 40,
            runs: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VOHeuristic {
    pub base: Base,
    pub tiebreak: TieBreak,
    pub probing: Option<ProbeConfig>,
}

impl VOHeuristic {
    pub fn new(base: Base, tiebreak: TieBreak, probing: Option<ProbeConfig>) -> Result<Self, VOrderError> {
        if probing.is_some() && !base.is_conflict_driven() {
            return Err(VOrderError::ProbingNeedsWeights(base.to_string()));
        }
        Ok(VOHeuristic {
            base,
            tiebreak,
            probing,
        })
    }

    pub fn plain(base: Base) -> Self {
        VOHeuristic {
            base,
            tiebreak: TieBreak::Lexico,
            probing: None,
        }
    }

    pub fn weight_update(&self) -> WeightUpdate {
        self.base.weight_update()
    }

    /// Whether running the heuristic consumes random numbers.
    pub fn is_randomized(&self) -> bool {
        self.probing.is_some()
    }
}

impl Default for VOHeuristic {
    fn default() -> Self {
        VOHeuristic::plain(Base::DomWdeg)
    }
}

impl fmt::Display for VOHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        if self.probing.is_some() {
            f.write_str("+probe")?;
        }
        match self.tiebreak {
            TieBreak::Lexico => Ok(()),
            TieBreak::Rsc => f.write_str("+rsc"),
            TieBreak::NodeImpact => f.write_str("+nodeimpact"),
        }
    }
}

impl FromStr for VOHeuristic {
    type Err = VOrderError;
    fn from_str(s: &str) -> Result<Self, VOrderError> {
        let mut rest = s.trim();
        let mut tiebreak = TieBreak::Lexico;
        let mut probing = None;
        loop {
            if let Some(r) = rest.strip_suffix("+rsc") {
                tiebreak = TieBreak::Rsc;
                rest = r;
            } else if let Some(r) = rest.strip_suffix("+nodeimpact") {
                tiebreak = TieBreak::NodeImpact;
                rest = r;
            } else if let Some(r) = rest.strip_suffix("+probe") {
                probing = Some(ProbeConfig::default());
                rest = r;
            } else {
                break;
            }
        }
        let base = rest.parse().map_err(|_| VOrderError::UnknownHeuristic(s.to_string()))?;
        VOHeuristic::new(base, tiebreak, probing)
    }
}

/// Heuristic score of an unassigned variable; smaller is preferred.
pub fn score_variable(
    base: Base,
    x: VarId,
    p: &Problem,
    d: &DomainStore,
    weights: &WeightStore,
    impacts: Option<&ImpactStore>,
) -> Result<f64, VOrderError> {
    let dom = d.len(x) as f64;
    let deg = p.neighbors_of(x).len() as f64;
    let ratio = |den: f64| if den > 0.0 { dom / den } else { dom };
    Ok(match base {
        Base::Dom => dom,
        Base::Deg => -deg,
        Base::Ddeg => -(weights.ddeg(x) as f64),
        Base::DomDeg => ratio(deg),
        Base::DomPlusDeg => dom - deg / (deg + 1.0),
        Base::DomDdeg => ratio(weights.ddeg(x) as f64),
        Base::Mdvo { alpha, op } => mdvo(p, d, x, alpha, op),
        Base::Wdeg => {
            if weights.ddeg(x) == 0 {
                dom
            } else {
                -(weights.wdeg(x) as f64)
            }
        }
        Base::DomWdeg | Base::AllDel | Base::FullyAssigned => ratio(weights.wdeg(x) as f64),
        Base::Impact => match impacts {
            Some(store) => store.variable_impact(p, d, x)?,
            None => {
                return Err(VOrderError::UninitializedImpact {
                    variable: x,
                    value: d.values(p, x).next().unwrap_or_default(),
                })
            }
        },
    })
}

fn mdvo(p: &Problem, d: &DomainStore, x: VarId, alpha: Alpha, op: Combine) -> f64 {
    let gamma = p.neighbors_of(x);
    if gamma.is_empty() {
        return d.len(x) as f64;
    }
    let a = |y: VarId| {
        let dom = d.len(y) as f64;
        match alpha {
            Alpha::Dom => dom,
            Alpha::DomOverDeg => dom / p.neighbors_of(y).len().max(1) as f64,
        }
    };
    let ax = a(x);
    let total: f64 = gamma
        .iter()
        .map(|&y| match op {
            Combine::Sum => ax + a(y),
            Combine::Product => ax * a(y),
        })
        .sum();
    total / (gamma.len() * gamma.len()) as f64
}

/// Unassigned variables sharing the best score, in increasing id order.
pub fn best_candidates(
    h: &VOHeuristic,
    engine: &Engine<'_>,
    impacts: Option<&ImpactStore>,
) -> Result<Vec<VarId>, VOrderError> {
    let mut best = f64::INFINITY;
    let mut tied = Vec::new();
    for x in engine.weights.unassigned() {
        let s = score_variable(h.base, x, engine.problem, &engine.domains, &engine.weights, impacts)?;
        if s < best {
            best = s;
            tied.clear();
            tied.push(x);
        } else if s == best {
            tied.push(x);
        }
    }
    Ok(tied)
}

/// Picks the next branching variable. Lookahead tie-breaks may prune values
/// from the current domains; the caller must propagate `Lookahead::pruned`.
pub fn select_variable(
    h: &VOHeuristic,
    engine: &mut Engine<'_>,
    impacts: Option<&mut ImpactStore>,
) -> Result<Lookahead, VOrderError> {
    let tied = best_candidates(h, engine, impacts.as_deref())?;
    assert!(!tied.is_empty(), "no unassigned variable left");
    if tied.len() == 1 {
        return Ok(Lookahead::Chosen {
            variable: tied[0],
            pruned: Vec::new(),
        });
    }
    Ok(match h.tiebreak {
        TieBreak::Lexico => Lookahead::Chosen {
            variable: tied[0],
            pruned: Vec::new(),
        },
        TieBreak::Rsc => rsc_tiebreak(&tied, engine),
        TieBreak::NodeImpact => node_impact_tiebreak(&tied, engine, impacts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Predicate, ProblemBuilder, Relation};
    use crate::propagation::{RevisionPolicy, Scheme};

    fn star() -> Problem {
        let mut b = ProblemBuilder::new("star");
        let x1 = b.variable("x1", vec![0, 1]);
        let x2 = b.variable("x2", vec![0, 1, 2]);
        let x3 = b.variable("x3", vec![0, 1, 2, 3]);
        b.constraint("c12", &[x1, x2], Relation::Predicate(Predicate::Ne));
        b.constraint("c13", &[x1, x3], Relation::Predicate(Predicate::Ne));
        b.build().unwrap()
    }

    #[test]
    fn mdvo_arithmetic() {
        let p = star();
        let d = DomainStore::new(&p);
        let w = WeightStore::new(&p, WeightUpdate::Wdeg);
        let base = Base::Mdvo {
            alpha: Alpha::Dom,
            op: Combine::Sum,
        };
        let s = score_variable(base, VarId(0), &p, &d, &w, None).unwrap();
        assert!((s - 2.75).abs() < 1e-12);
    }

    #[test]
    fn conflict_scores() {
        let p = star();
        let d = DomainStore::new(&p);
        let mut w = WeightStore::new(&p, WeightUpdate::Wdeg);
        w.bump(&p, crate::model::ConstraintId(0), 2);
        w.bump(&p, crate::model::ConstraintId(1), 4);
        assert_eq!(score_variable(Base::Wdeg, VarId(0), &p, &d, &w, None).unwrap(), -8.0);
        assert_eq!(score_variable(Base::DomWdeg, VarId(2), &p, &d, &w, None).unwrap(), 0.8);
        assert_eq!(score_variable(Base::DomWdeg, VarId(0), &p, &d, &w, None).unwrap(), 0.25);
    }

    #[test]
    fn lone_variable_scores_as_dom() {
        let mut b = ProblemBuilder::new("lone");
        b.variable("x", vec![1, 2, 3]);
        let p = b.build().unwrap();
        let d = DomainStore::new(&p);
        let w = WeightStore::new(&p, WeightUpdate::Wdeg);
        for base in [Base::DomWdeg, Base::Wdeg, Base::DomDdeg, Base::DomDeg] {
            assert_eq!(score_variable(base, VarId(0), &p, &d, &w, None).unwrap(), 3.0);
        }
    }

    #[test]
    fn selection_and_ties() {
        let p = star();
        let mut e = Engine::new(&p, Scheme::Arc, RevisionPolicy::Fifo, WeightUpdate::Wdeg).unwrap();
        let pick = |e: &mut Engine, h: &str| match select_variable(&h.parse().unwrap(), e, None).unwrap() {
            Lookahead::Chosen { variable, .. } => variable,
            Lookahead::Wipeout => panic!(),
        };
        assert_eq!(pick(&mut e, "dom"), VarId(0));
        assert_eq!(pick(&mut e, "deg"), VarId(0));
        e.domains.remove(VarId(2), 0);
        e.domains.remove(VarId(2), 1);
        // x1 and x3 both have two values
        assert_eq!(pick(&mut e, "dom"), VarId(0));
        e.assign(VarId(0), 0);
        assert_eq!(pick(&mut e, "dom"), VarId(2));
    }

    #[test]
    fn names_round_trip() {
        for s in [
            "dom",
            "deg",
            "ddeg",
            "dom/deg",
            "dom+deg",
            "dom/ddeg",
            "mdvo:dom:prod",
            "mdvo:domdeg:sum",
            "wdeg",
            "dom/wdeg",
            "dom/wdeg+rsc",
            "dom/wdeg+probe",
            "dom/wdeg+probe+rsc",
            "alldel+probe",
            "fully+rsc",
            "impact",
            "impact+nodeimpact",
            "impact+rsc",
        ] {
            let h: VOHeuristic = s.parse().unwrap();
            assert_eq!(h.to_string(), s);
        }
        assert_eq!("mdvo".parse::<VOHeuristic>().unwrap().to_string(), "mdvo:domdeg:sum");
        assert!("impact+probe".parse::<VOHeuristic>().is_err());
        assert!("dom+probe".parse::<VOHeuristic>().is_err());
        assert!("nope".parse::<VOHeuristic>().is_err());
    }
}
