//! Benchmark instance generators.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ModelError, Predicate, Problem, ProblemBuilder, Relation, TupleSet, Value, VarId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("invalid generator parameters: {0}")]
    InvalidParameter(String),
    #[error("cannot parse generator spec `{spec}`: {message}")]
    Parse { spec: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneratorSpec {
    ModelD { n: usize, d: usize, e: usize, t: f64, seed: u64 },
    ModelRb { n: usize, d: usize, e: usize, t: f64, seed: u64 },
    Langford { k: usize, n: usize },
    Queens { n: usize },
    Chessboard { r: usize, c: usize, colors: usize },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Problem, InstanceError> {
        match *self {
            GeneratorSpec::ModelD { n, d, e, t, seed } => gen_model_d(n, d, e, t, seed),
            GeneratorSpec::ModelRb { n, d, e, t, seed } => gen_model_rb(n, d, e, t, seed),
            GeneratorSpec::Langford { k, n } => gen_langford(k, n),
            GeneratorSpec::Queens { n } => gen_queens(n),
            GeneratorSpec::Chessboard { r, c, colors } => gen_chessboard(r, c, colors),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::ModelD { n, d, e, t, seed } => write!(f, "modelD:n={n},d={d},e={e},t={t},seed={seed}"),
            GeneratorSpec::ModelRb { n, d, e, t, seed } => {
                write!(f, "modelRB:n={n},d={d},e={e},t={t},seed={seed}")
            }
            GeneratorSpec::Langford { k, n } => write!(f, "langford:k={k},n={n}"),
            GeneratorSpec::Queens { n } => write!(f, "queens:n={n}"),
            GeneratorSpec::Chessboard { r, c, colors } => write!(f, "chessboard:r={r},c={c},colors={colors}"),
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, InstanceError> {
        let err = |message: String| InstanceError::Parse {
            spec: s.to_string(),
            message,
        };
        let (family, rest) = s.split_once(':').ok_or_else(|| err("missing `:`".into()))?;
        let mut args = BTreeMap::new();
        for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{kv}`")))?;
            args.insert(k.trim(), v.trim());
        }
        let mut take = |key: &str| -> Result<&str, InstanceError> {
            args.remove(key).ok_or_else(|| err(format!("missing `{key}`")))
        };
        fn num<T: FromStr>(v: &str, key: &str, err: &dyn Fn(String) -> InstanceError) -> Result<T, InstanceError> {
            v.parse().map_err(|_| err(format!("bad value `{v}` for `{key}`")))
        }
        let spec = match family {
            "modelD" | "modelRB" => {
                let n = num(take("n")?, "n", &err)?;
                let d = num(take("d")?, "d", &err)?;
                let e = num(take("e")?, "e", &err)?;
                let t = num(take("t")?, "t", &err)?;
                let seed = num(take("seed")?, "seed", &err)?;
                if family == "modelD" {
                    GeneratorSpec::ModelD { n, d, e, t, seed }
                } else {
                    GeneratorSpec::ModelRb { n, d, e, t, seed }
                }
            }
            "langford" => GeneratorSpec::Langford {
                k: num(take("k")?, "k", &err)?,
                n: num(take("n")?, "n", &err)?,
            },
            "queens" => GeneratorSpec::Queens {
                n: num(take("n")?, "n", &err)?,
            },
            "chessboard" => GeneratorSpec::Chessboard {
                r: num(take("r")?, "r", &err)?,
                c: num(take("c")?, "c", &err)?,
                colors: num(take("colors")?, "colors", &err)?,
            },
            _ => return Err(err(format!("unknown family `{family}`"))),
        };
        if let Some(k) = args.keys().next() {
            return Err(err(format!("unexpected key `{k}`")));
        }
        Ok(spec)
    }
}

fn check_random(n: usize, d: usize, e: usize, t: f64) -> Result<(), InstanceError> {
    let pairs = n * n.saturating_sub(1) / 2;
    if d == 0 {
        return Err(InstanceError::InvalidParameter("d must be at least 1".into()));
    }
    if e > pairs {
        return Err(InstanceError::InvalidParameter(format!(
            "{e} constraints requested but only {pairs} variable pairs exist"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(InstanceError::InvalidParameter(format!("tightness {t} outside [0, 1]")));
    }
    Ok(())
}

fn random_binary(
    name: String,
    n: usize,
    d: usize,
    e: usize,
    t: f64,
    rng: &mut ChaCha8Rng,
    planted: Option<&[Value]>,
) -> Result<Problem, InstanceError> {
    let mut b = ProblemBuilder::new(name);
    let xs: Vec<VarId> = (0..n).map(|i| b.variable(format!("x{i}"), (0..d as Value).collect())).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut chosen = index::sample(rng, pairs.len(), e).into_vec();
    chosen.sort_unstable();
    for k in chosen {
        let (i, j) = pairs[k];
        let mut table = TupleSet::new();
        for a in 0..d as Value {
            for bv in 0..d as Value {
                let forbid = rng.gen_bool(t);
                let keep = planted.is_some_and(|s| s[i] == a && s[j] == bv);
                if forbid && !keep {
                    table.insert(&[a, bv]);
                }
            }
        }
        b.constraint(format!("c{i}_{j}"), &[xs[i], xs[j]], Relation::Forbidden(table));
    }
    Ok(b.build()?)
}

/// `e` random binary constraints over `n` variables with domain `0..d`; each
/// value pair is forbidden with probability `t`.
pub fn gen_model_d(n: usize, d: usize, e: usize, t: f64, seed: u64) -> Result<Problem, InstanceError> {
    check_random(n, d, e, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_binary(format!("modelD-{n}-{d}-{e}-{t}-{seed}"), n, d, e, t, &mut rng, None)
}

/// As [`gen_model_d`], but a hidden random assignment is never forbidden.
pub fn gen_model_rb(n: usize, d: usize, e: usize, t: f64, seed: u64) -> Result<Problem, InstanceError> {
    Ok(gen_model_rb_planted(n, d, e, t, seed)?.0)
}

/// [`gen_model_rb`] together with its planted solution.
pub fn gen_model_rb_planted(
    n: usize,
    d: usize,
    e: usize,
    t: f64,
    seed: u64,
) -> Result<(Problem, Vec<Value>), InstanceError> {
    check_random(n, d, e, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<Value> = (0..n).map(|_| rng.gen_range(0..d as Value)).collect();
    let p = random_binary(format!("modelRB-{n}-{d}-{e}-{t}-{seed}"), n, d, e, t, &mut rng, Some(&planted))?;
    Ok((p, planted))
}

/// Langford's problem L(k, n): variable `p{i}_{j}` is the position of the
/// `j`-th occurrence of number `i + 1`; consecutive occurrences of `i + 1`
/// are `i + 2` positions apart.
pub fn gen_langford(k: usize, n: usize) -> Result<Problem, InstanceError> {
    if k < 2 || n < k {
        return Err(InstanceError::InvalidParameter(format!("langford needs k >= 2 and n >= k, got k={k}, n={n}")));
    }
    let len = (k * n) as Value;
    let mut b = ProblemBuilder::new(format!("langford-{k}-{n}"));
    let mut pos = Vec::with_capacity(k * n);
    for i in 0..n {
        for j in 0..k {
            pos.push(b.variable(format!("p{i}_{j}"), (0..len).collect()));
        }
    }
    for a in 0..pos.len() {
        for c in a + 1..pos.len() {
            b.constraint(format!("ne{a}_{c}"), &[pos[a], pos[c]], Relation::Predicate(Predicate::Ne));
        }
    }
    for i in 0..n {
        let gap = i as Value + 2;
        let table: TupleSet = (0..len - gap).map(|q| [q, q + gap]).collect();
        for j in 0..k - 1 {
            b.constraint(
                format!("gap{i}_{j}"),
                &[pos[i * k + j], pos[i * k + j + 1]],
                Relation::Allowed(table.clone()),
            );
        }
    }
    Ok(b.build()?)
}

pub fn gen_queens(n: usize) -> Result<Problem, InstanceError> {
    if n == 0 {
        return Err(InstanceError::InvalidParameter("queens needs n >= 1".into()));
    }
    let mut b = ProblemBuilder::new(format!("queens-{n}"));
    let q: Vec<VarId> = (0..n).map(|i| b.variable(format!("q{i}"), (0..n as Value).collect())).collect();
    for i in 0..n {
        for j in i + 1..n {
            b.constraint(format!("row{i}_{j}"), &[q[i], q[j]], Relation::Predicate(Predicate::Ne));
            b.constraint(
                format!("diag{i}_{j}"),
                &[q[i], q[j]],
                Relation::Predicate(Predicate::DistNe((j - i) as Value)),
            );
        }
    }
    Ok(b.build()?)
}

/// Colour an `r` x `c` board so that no rectangle has four equal corners.
pub fn gen_chessboard(r: usize, c: usize, colors: usize) -> Result<Problem, InstanceError> {
    if r < 2 || c < 2 || colors < 2 {
        return Err(InstanceError::InvalidParameter(format!(
            "chessboard needs r, c, colors >= 2, got {r}, {c}, {colors}"
        )));
    }
    let mut b = ProblemBuilder::new(format!("chessboard-{r}-{c}-{colors}"));
    let mut cell = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            cell.push(b.variable(format!("s{i}_{j}"), (0..colors as Value).collect()));
        }
    }
    let same: TupleSet = (0..colors as Value).map(|k| [k; 4]).collect();
    for r1 in 0..r {
        for r2 in r1 + 1..r {
            for c1 in 0..c {
                for c2 in c1 + 1..c {
                    b.constraint(
                        format!("rect{r1}_{r2}_{c1}_{c2}"),
                        &[cell[r1 * c + c1], cell[r1 * c + c2], cell[r2 * c + c1], cell[r2 * c + c2]],
                        Relation::Forbidden(same.clone()),
                    );
                }
            }
        }
    }
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_problem, to_native};

    fn count_solutions(p: &Problem) -> usize {
        let doms: Vec<&[Value]> = p.variables().map(|x| p.initial_domain(x)).collect();
        let mut idx = vec![0usize; doms.len()];
        let mut count = 0;
        'outer: loop {
            let t: Vec<Value> = idx.iter().zip(&doms).map(|(&i, d)| d[i]).collect();
            if p.is_solution(&t) {
                count += 1;
            }
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < doms[k].len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            return count;
        }
    }

    #[test]
    fn model_d_extremes() {
        let p = gen_model_d(5, 4, 10, 0.0, 3).unwrap();
        assert_eq!(p.num_constraints(), 10);
        assert!(p.constraints().iter().all(|c| matches!(&c.relation, Relation::Forbidden(t) if t.is_empty())));
        let p = gen_model_d(5, 4, 10, 1.0, 3).unwrap();
        assert_eq!(count_solutions(&p), 0);
        assert!(gen_model_d(5, 4, 11, 0.5, 3).is_err());
        assert!(gen_model_d(5, 4, 3, 1.5, 3).is_err());
    }

    #[test]
    fn model_d_tightness_statistic() {
        let mut fractions = Vec::new();
        for seed in 0..30 {
            let p = gen_model_d(40, 8, 753, 0.1, seed).unwrap();
            assert_eq!(p.num_constraints(), 753);
            let forbidden: usize = p
                .constraints()
                .iter()
                .map(|c| match &c.relation {
                    Relation::Forbidden(t) => t.len(),
                    _ => unreachable!(),
                })
                .sum();
            fractions.push(forbidden as f64 / (753.0 * 64.0));
        }
        let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
        assert!((mean - 0.1).abs() <= 0.02, "{mean}");
    }

    #[test]
    fn model_rb_is_planted() {
        for seed in 0..20 {
            let (p, s) = gen_model_rb_planted(8, 4, 20, 0.6, seed).unwrap();
            assert!(p.is_solution(&s));
        }
        let p = gen_model_rb(5, 3, 6, 0.0, 1).unwrap();
        assert!(p.constraints().iter().all(|c| matches!(&c.relation, Relation::Forbidden(t) if t.is_empty())));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = to_native(&gen_model_d(12, 5, 30, 0.3, 42).unwrap());
        let b = to_native(&gen_model_d(12, 5, 30, 0.3, 42).unwrap());
        let c = to_native(&gen_model_d(12, 5, 30, 0.3, 43).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn small_families_by_enumeration() {
        assert_eq!(count_solutions(&gen_queens(1).unwrap()), 1);
        assert_eq!(count_solutions(&gen_queens(3).unwrap()), 0);
        assert_eq!(count_solutions(&gen_queens(4).unwrap()), 2);
        // 312132 and its mirror
        assert_eq!(count_solutions(&gen_langford(2, 3).unwrap()), 2);
        assert_eq!(count_solutions(&gen_chessboard(2, 2, 2).unwrap()), 14);
    }

    #[test]
    fn chessboard_shape() {
        let p = gen_chessboard(10, 10, 3).unwrap();
        assert_eq!(p.num_constraints(), 2025);
        assert!(p.constraints().iter().all(|c| c.arity() == 4));
    }

    #[test]
    fn specs_round_trip() {
        for s in [
            "modelD:n=40,d=8,e=753,t=0.1,seed=7",
            "modelRB:n=6,d=4,e=8,t=0.5,seed=1",
            "langford:k=2,n=9",
            "queens:n=8",
            "chessboard:r=4,c=5,colors=2",
        ] {
            let g: GeneratorSpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("queens:n=8,x=1".parse::<GeneratorSpec>().is_err());
        assert!("queens".parse::<GeneratorSpec>().is_err());
        assert!("magic:n=3".parse::<GeneratorSpec>().is_err());
    }

    #[test]
    fn serialization_round_trip() {
        for g in ["modelRB:n=6,d=4,e=8,t=0.5,seed=1", "langford:k=2,n=4", "chessboard:r=3,c=3,colors=2"] {
            let p = g.parse::<GeneratorSpec>().unwrap().generate().unwrap();
            let text = to_native(&p);
            let q = load_problem(&text).unwrap();
            assert_eq!(to_native(&q), text);
        }
    }
}
