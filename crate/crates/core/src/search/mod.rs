//! Depth-first search maintaining (generalised) arc consistency.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{DomainStore, Problem, Value, VarId};
use crate::propagation::{Engine, PropagationError, RevisionPolicy, Scheme, Seeds};
use crate::vorder::{
    init_impacts, select_variable, Base, ImpactStore, Lookahead, ProbeConfig, VOHeuristic, VOrderError,
    WeightStore, WeightUpdate,
};

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    VOrder(#[from] VOrderError),
    #[error("invalid restart policy: {0}")]
    InvalidRestart(String),
    #[error("search produced an assignment violating a constraint")]
    InvalidSolution,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RestartPolicy {
    None,
    Geometric { base: u64, factor: f64 },
    Arithmetic { base: u64, step: u64 },
}

impl RestartPolicy {
    pub fn validate(&self) -> Result<(), SearchError> {
        match *self {
            RestartPolicy::None => Ok(()),
            RestartPolicy::Geometric { base, factor } => {
                if base < 1 || !(factor > 1.0) || !factor.is_finite() {
                    Err(SearchError::InvalidRestart(format!("geo:{base}:{factor}")))
                } else {
                    Ok(())
                }
            }
            RestartPolicy::Arithmetic { base, step } => {
                if base < 1 || step < 1 {
                    Err(SearchError::InvalidRestart(format!("arith:{base}:{step}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Failure budget of run `k` (0-based); `None` means unlimited.
    pub fn next_cutoff(&self, k: u32) -> Option<u64> {
        match *self {
            RestartPolicy::None => None,
            RestartPolicy::Geometric { base, factor } => {
                Some((base as f64 * factor.powi(k as i32)).floor().min(u64::MAX as f64) as u64)
            }
            RestartPolicy::Arithmetic { base, step } => Some(base.saturating_add(step.saturating_mul(k as u64))),
        }
    }
}

impl Default for RestartPolicy {
    fn default() -> Self {
        RestartPolicy::Geometric {
            base: 10,
            factor: 1.5,
        }
    }
}

impl fmt::Display for RestartPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RestartPolicy::None => f.write_str("none"),
            RestartPolicy::Geometric { base, factor } => write!(f, "geo:{base}:{factor}"),
            RestartPolicy::Arithmetic { base, step } => write!(f, "arith:{base}:{step}"),
        }
    }
}

impl FromStr for RestartPolicy {
    type Err = SearchError;
    fn from_str(s: &str) -> Result<Self, SearchError> {
        let bad = || SearchError::InvalidRestart(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let policy = match parts.as_slice() {
            ["none"] => RestartPolicy::None,
            ["geo"] => RestartPolicy::default(),
            ["geo", b, f] => RestartPolicy::Geometric {
                base: b.parse().map_err(|_| bad())?,
                factor: f.parse().map_err(|_| bad())?,
            },
            ["arith"] => RestartPolicy::Arithmetic { base: 10, step: 10 },
            ["arith", b, k] => RestartPolicy::Arithmetic {
                base: b.parse().map_err(|_| bad())?,
                step: k.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ValueOrder {
    #[default]
    Lexico,
    Random,
}

impl fmt::Display for ValueOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueOrder::Lexico => "lex",
            ValueOrder::Random => "rand",
        })
    }
}

impl FromStr for ValueOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lex" | "lexico" => Ok(ValueOrder::Lexico),
            "rand" | "random" => Ok(ValueOrder::Random),
            _ => Err(format!("unknown value order `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    First,
    Count,
    Decide,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "first" => Ok(Mode::First),
            "count" => Ok(Mode::Count),
            "decide" => Ok(Mode::Decide),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub var_heuristic: VOHeuristic,
    pub scheme: Scheme,
    pub revision: RevisionPolicy,
    pub restart: RestartPolicy,
    pub value_order: ValueOrder,
    pub seed: u64,
    pub mode: Mode,
    pub timeout: Duration,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            var_heuristic: VOHeuristic::default(),
            scheme: Scheme::Variable,
            revision: RevisionPolicy::Fifo,
            restart: RestartPolicy::default(),
            value_order: ValueOrder::Lexico,
            seed: 0,
            mode: Mode::First,
            timeout: Duration::from_secs(3600),
        }
    }
}

impl SearchConfig {
    /// Sets the seed of value ordering and of random probing.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(pc) = self.var_heuristic.probing.as_mut() {
            pc.seed = seed;
        }
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub checks: u64,
    pub revisions: u64,
    pub dwos: u64,
    pub restarts: u64,
    pub failures: u64,
    pub time: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchResult {
    Sat(Vec<Value>),
    Unsat,
    Timeout,
}

impl SearchResult {
    pub fn label(&self) -> &'static str {
        match self {
            SearchResult::Sat(_) => "sat",
            SearchResult::Unsat => "unsat",
            SearchResult::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub result: SearchResult,
    /// Solutions found; only exhaustive in count mode.
    pub solutions: u64,
    pub stats: SearchStats,
}

/// Current values of `x`, ascending or shuffled with `rng`.
pub fn order_values(p: &Problem, d: &DomainStore, x: VarId, order: ValueOrder, rng: &mut impl Rng) -> Vec<Value> {
    let mut values: Vec<Value> = d.values(p, x).collect();
    values.sort_unstable();
    if order == ValueOrder::Random {
        values.shuffle(rng);
    }
    values
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Flow {
    Exhausted,
    Found,
    Restart,
    Timeout,
}

struct Searcher<'p> {
    engine: Engine<'p>,
    heuristic: VOHeuristic,
    impacts: Option<ImpactStore>,
    value_order: ValueOrder,
    rng: ChaCha8Rng,
    /// Set during random probing: variable and value choices come from here.
    probe_rng: Option<ChaCha8Rng>,
    count_all: bool,
    deadline: Instant,
    nodes: u64,
    failures: u64,
    run_failures: u64,
    cutoff: Option<u64>,
    solutions: u64,
    first: Option<Vec<Value>>,
}

impl<'p> Searcher<'p> {
    fn new(engine: Engine<'p>, cfg: &SearchConfig, deadline: Instant) -> Self {
        Searcher {
            engine,
            heuristic: cfg.var_heuristic,
            impacts: None,
            value_order: cfg.value_order,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            probe_rng: None,
            count_all: cfg.mode == Mode::Count,
            deadline,
            nodes: 0,
            failures: 0,
            run_failures: 0,
            cutoff: None,
            solutions: 0,
            first: None,
        }
    }

    fn run(&mut self, cutoff: Option<u64>) -> Result<Flow, SearchError> {
        self.run_failures = 0;
        self.cutoff = cutoff;
        let flow = self.dfs()?;
        debug_assert!(self.engine.weights.unassigned().count() == self.engine.problem.num_variables());
        Ok(flow)
    }

    fn fail(&mut self) -> Flow {
        self.failures += 1;
        self.run_failures += 1;
        match self.cutoff {
            Some(c) if self.run_failures >= c => Flow::Restart,
            _ => Flow::Exhausted,
        }
    }

    fn leaf(&mut self) -> Result<Flow, SearchError> {
        let p = self.engine.problem;
        let d = &self.engine.domains;
        let solution: Vec<Value> = p
            .variables()
            .map(|x| p.value(x, d.singleton(x).expect("assigned variable has one value")))
            .collect();
        if !p.is_solution(&solution) {
            return Err(SearchError::InvalidSolution);
        }
        self.solutions += 1;
        if self.first.is_none() {
            self.first = Some(solution);
        }
        Ok(if self.count_all { Flow::Exhausted } else { Flow::Found })
    }

    fn dfs(&mut self) -> Result<Flow, SearchError> {
        if self.engine.all_assigned() {
            return self.leaf();
        }
        if Instant::now() >= self.deadline {
            return Ok(Flow::Timeout);
        }
        let level = self.engine.domains.depth();
        self.engine.domains.push_level();
        let flow = self.branch();
        self.engine.domains.restore_to(level);
        flow
    }

    fn choose(&mut self) -> Result<Lookahead, SearchError> {
        if let Some(rng) = self.probe_rng.as_mut() {
            let free: Vec<VarId> = self.engine.weights.unassigned().collect();
            return Ok(Lookahead::Chosen {
                variable: free[rng.gen_range(0..free.len())],
                pruned: Vec::new(),
            });
        }
        Ok(select_variable(&self.heuristic, &mut self.engine, self.impacts.as_mut())?)
    }

    fn branch(&mut self) -> Result<Flow, SearchError> {
        let x = match self.choose()? {
            Lookahead::Wipeout => return Ok(self.fail()),
            Lookahead::Chosen { variable, pruned } => {
                if !pruned.is_empty() && !self.engine.propagate_changes(&pruned, true).is_consistent() {
                    return Ok(self.fail());
                }
                variable
            }
        };
        let p = self.engine.problem;
        let values = match self.probe_rng.as_mut() {
            Some(rng) => order_values(p, &self.engine.domains, x, ValueOrder::Random, rng),
            None => order_values(p, &self.engine.domains, x, self.value_order, &mut self.rng),
        };
        for v in values {
            let idx = p.value_index(x, v).expect("value of the domain");
            if !self.engine.domains.contains(x, idx) {
                continue;
            }
            self.nodes += 1;
            let level = self.engine.domains.depth();
            self.engine.domains.push_level();
            let before = self.impacts.is_some().then(|| self.engine.domains.sizes().to_vec());
            let removed = self.engine.assign(x, idx);
            let consistent = self.engine.propagate_changes(&[(x, removed)], true).is_consistent();
            if let (Some(store), Some(before)) = (self.impacts.as_mut(), before) {
                let ratio = if consistent { self.engine.space_ratio(&before) } else { 0.0 };
                store.observe_ratio(x, idx, ratio);
            }
            let flow = if consistent { self.dfs()? } else { self.fail() };
            self.engine.unassign(x);
            self.engine.domains.restore_to(level);
            if flow != Flow::Exhausted {
                return Ok(flow);
            }
            // refute x = v for the remaining branches
            self.engine.domains.remove(x, idx);
            if self.engine.domains.is_empty(x) {
                return Ok(Flow::Exhausted);
            }
            if !self.engine.propagate_changes(&[(x, 1)], true).is_consistent() {
                return Ok(self.fail());
            }
        }
        Ok(Flow::Exhausted)
    }

    fn stats(&self, restarts: u64, start: Instant) -> SearchStats {
        SearchStats {
            nodes: self.nodes,
            checks: self.engine.counters.checks,
            revisions: self.engine.counters.revisions,
            dwos: self.engine.counters.dwos,
            restarts,
            failures: self.failures,
            time: start.elapsed(),
        }
    }

    fn outcome(&mut self, flow: Flow, restarts: u64, start: Instant) -> SearchOutcome {
        let result = match flow {
            Flow::Timeout => SearchResult::Timeout,
            _ => match self.first.take() {
                Some(s) => SearchResult::Sat(s),
                None => SearchResult::Unsat,
            },
        };
        SearchOutcome {
            result,
            solutions: self.solutions,
            stats: self.stats(restarts, start),
        }
    }

    /// Random probing runs. Returns a definitive flow if a probe settles
    /// the instance.
    fn probe(&mut self, pc: ProbeConfig) -> Result<Option<Flow>, SearchError> {
        self.probe_rng = Some(ChaCha8Rng::seed_from_u64(pc.seed));
        let mut settled = None;
        for run in 0..pc.runs {
            match self.run(Some(pc.failures))? {
                Flow::Restart => log::trace!("probe {run} hit its cutoff"),
                flow => {
                    settled = Some(flow);
                    break;
                }
            }
        }
        self.probe_rng = None;
        Ok(settled)
    }
}

/// Enforces AC on the whole problem; the flag is false on a wipeout.
fn preprocess<'p>(
    p: &'p Problem,
    scheme: Scheme,
    policy: RevisionPolicy,
    update: WeightUpdate,
) -> Result<(Engine<'p>, bool), SearchError> {
    let mut engine = Engine::new(p, scheme, policy, update)?;
    let consistent = engine.propagate(Seeds::All, true)?.is_consistent();
    Ok((engine, consistent))
}

pub fn solve(p: &Problem, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    cfg.restart.validate()?;
    let h = cfg.var_heuristic;
    if h.probing.is_some() && !h.base.is_conflict_driven() {
        return Err(VOrderError::ProbingNeedsWeights(h.base.to_string()).into());
    }
    let start = Instant::now();
    let deadline = start + cfg.timeout;
    let (engine, consistent) = preprocess(p, cfg.scheme, cfg.revision, h.weight_update())?;
    let mut s = Searcher::new(engine, cfg, deadline);
    if !consistent {
        return Ok(s.outcome(Flow::Exhausted, 0, start));
    }
    if h.base == Base::Impact {
        let mut store = ImpactStore::new(p);
        if !init_impacts(&mut s.engine, &mut store, 4) {
            return Ok(s.outcome(Flow::Exhausted, 0, start));
        }
        s.impacts = Some(store);
    }
    if let Some(pc) = h.probing {
        if let Some(flow) = s.probe(pc)? {
            return Ok(s.outcome(flow, 0, start));
        }
    }
    let mut restarts = 0;
    for k in 0.. {
        let cutoff = if cfg.mode == Mode::Count {
            None
        } else {
            cfg.restart.next_cutoff(k)
        };
        match s.run(cutoff)? {
            Flow::Restart => {
                restarts += 1;
                log::debug!("restart {restarts} after {} failures", s.failures);
            }
            flow => return Ok(s.outcome(flow, restarts, start)),
        }
    }
    unreachable!()
}

/// Result of weight initialisation by random probing.
#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub weights: WeightStore,
    /// Set when a probe proved the instance satisfiable or not.
    pub result: Option<SearchResult>,
    pub stats: SearchStats,
}

/// Runs `pc.runs` probes of at most `pc.failures` failures each, with random
/// variable and value choices, accumulating weights under `update`.
pub fn random_probe(
    p: &Problem,
    pc: ProbeConfig,
    scheme: Scheme,
    policy: RevisionPolicy,
    update: WeightUpdate,
) -> Result<ProbeOutcome, SearchError> {
    let start = Instant::now();
    let (engine, consistent) = preprocess(p, scheme, policy, update)?;
    let cfg = SearchConfig {
        scheme,
        revision: policy,
        timeout: Duration::from_secs(u32::MAX as u64),
        ..SearchConfig::default()
    };
    let mut s = Searcher::new(engine, &cfg, Instant::now() + cfg.timeout);
    let settled = if consistent { s.probe(pc)? } else { Some(Flow::Exhausted) };
    let result = settled.map(|flow| s.outcome(flow, 0, start).result);
    Ok(ProbeOutcome {
        weights: s.engine.weights.clone(),
        result,
        stats: s.stats(0, start),
    })
}
