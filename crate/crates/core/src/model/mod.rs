//! Constraint networks: variables with finite integer domains and
//! extensional or predicate constraints of any arity.

mod domain;
mod format;

use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::fmt;

pub use domain::DomainStore;
pub use format::{load_problem, to_native, to_native_pretty};

pub type Value = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl ConstraintId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("constraint `{constraint}`: {message}")]
    InvalidConstraint { constraint: String, message: String },
    #[error("constraint `{constraint}` references unknown variable `{variable}`")]
    UnknownVariable { constraint: String, variable: String },
    #[error("unknown variable id {0}")]
    UnknownVariableId(usize),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("variable `{variable}` lists value {value} twice")]
    DuplicateValue { variable: String, value: Value },
    #[error("duplicate variable id `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint id `{0}`")]
    DuplicateConstraint(String),
    #[error("tuple width {found} does not match arity {expected}")]
    WidthMismatch { expected: usize, found: usize },
}

/// Binary predicates available to intensional constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Predicate {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `|x - y| != k`
    DistNe(Value),
    /// `|x - y| > k`
    DistGt(Value),
}

impl Predicate {
    #[inline]
    pub fn eval(self, x: Value, y: Value) -> bool {
        match self {
            Predicate::Eq => x == y,
            Predicate::Ne => x != y,
            Predicate::Lt => x < y,
            Predicate::Le => x <= y,
            Predicate::Gt => x > y,
            Predicate::Ge => x >= y,
            Predicate::DistNe(k) => (x - y).abs() != k,
            Predicate::DistGt(k) => (x - y).abs() > k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Eq => "eq",
            Predicate::Ne => "ne",
            Predicate::Lt => "lt",
            Predicate::Le => "le",
            Predicate::Gt => "gt",
            Predicate::Ge => "ge",
            Predicate::DistNe(_) => "dist_ne",
            Predicate::DistGt(_) => "dist_gt",
        }
    }

    pub fn parameter(self) -> Option<Value> {
        match self {
            Predicate::DistNe(k) | Predicate::DistGt(k) => Some(k),
            _ => None,
        }
    }

    pub fn from_parts(name: &str, k: Option<Value>) -> Option<Predicate> {
        let p = match (name, k) {
            ("eq", None) => Predicate::Eq,
            ("ne", None) => Predicate::Ne,
            ("lt", None) => Predicate::Lt,
            ("le", None) => Predicate::Le,
            ("gt", None) => Predicate::Gt,
            ("ge", None) => Predicate::Ge,
            ("dist_ne", Some(k)) => Predicate::DistNe(k),
            ("dist_gt", Some(k)) => Predicate::DistGt(k),
            _ => return None,
        };
        Some(p)
    }
}

/// A set of value tuples of fixed width.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TupleSet {
    set: HashSet<Box<[Value]>>,
}

impl TupleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, tuple: &[Value]) -> bool {
        self.set.insert(tuple.into())
    }

    #[inline]
    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.set.contains(tuple)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Tuples in lexicographic order.
    pub fn sorted(&self) -> Vec<Vec<Value>> {
        let mut out: Vec<Vec<Value>> = self.set.iter().map(|t| t.to_vec()).collect();
        out.sort_unstable();
        out
    }

    fn iter(&self) -> impl Iterator<Item = &[Value]> {
        self.set.iter().map(|t| &t[..])
    }
}

impl<T: AsRef<[Value]>> FromIterator<T> for TupleSet {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = TupleSet::new();
        for t in iter {
            s.insert(t.as_ref());
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Relation {
    Allowed(TupleSet),
    Forbidden(TupleSet),
    Predicate(Predicate),
}

impl Relation {
    #[inline]
    pub fn satisfies(&self, tuple: &[Value]) -> bool {
        match self {
            Relation::Allowed(t) => t.contains(tuple),
            Relation::Forbidden(t) => !t.contains(tuple),
            Relation::Predicate(p) => p.eval(tuple[0], tuple[1]),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub id: ConstraintId,
    pub name: String,
    pub scope: Vec<VarId>,
    pub relation: Relation,
}

impl Constraint {
    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Position of `x` in the scope.
    pub fn position(&self, x: VarId) -> Option<usize> {
        self.scope.iter().position(|&y| y == x)
    }

    /// Uncounted membership test, for verification and oracles.
    pub fn satisfies(&self, tuple: &[Value]) -> bool {
        self.relation.satisfies(tuple)
    }
}

/// Dense compatibility matrix of a binary extensional constraint, indexed by
/// positions in the initial domains.
#[derive(Clone, Debug)]
struct BinaryMatrix {
    width: usize,
    allowed: Vec<bool>,
}

thread_local! {
    static CHECK_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of support checks performed on the current thread since it started.
/// Independent of the counters threaded through the solver; used to audit them.
pub fn thread_check_calls() -> u64 {
    CHECK_CALLS.with(|c| c.get())
}

#[inline]
fn note_check() {
    CHECK_CALLS.with(|c| c.set(c.get() + 1));
}

/// An immutable constraint network.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    var_names: Vec<String>,
    domains: Vec<Vec<Value>>,
    value_index: Vec<HashMap<Value, usize>>,
    constraints: Vec<Constraint>,
    neighbors: Vec<Vec<VarId>>,
    incidence: Vec<Vec<(ConstraintId, usize)>>,
    matrices: Vec<Option<BinaryMatrix>>,
}

/// Incremental construction of a [`Problem`]; all validation happens in
/// [`ProblemBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct ProblemBuilder {
    name: String,
    variables: Vec<(String, Vec<Value>)>,
    constraints: Vec<(String, Vec<String>, Relation)>,
}

impl ProblemBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ProblemBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn variable(&mut self, id: impl Into<String>, domain: Vec<Value>) -> VarId {
        self.variables.push((id.into(), domain));
        VarId(self.variables.len() - 1)
    }

    pub fn constraint(&mut self, id: impl Into<String>, scope: &[VarId], relation: Relation) {
        let scope = scope
            .iter()
            .map(|x| {
                self.variables
                    .get(x.0)
                    .map(|v| v.0.clone())
                    .unwrap_or_else(|| format!("#{}", x.0))
            })
            .collect();
        self.constraints.push((id.into(), scope, relation));
    }

    pub fn constraint_by_name(
        &mut self,
        id: impl Into<String>,
        scope: Vec<String>,
        relation: Relation,
    ) {
        self.constraints.push((id.into(), scope, relation));
    }

    pub fn build(self) -> Result<Problem, ModelError> {
        let mut by_name = HashMap::new();
        let mut domains = Vec::with_capacity(self.variables.len());
        let mut var_names = Vec::with_capacity(self.variables.len());
        let mut value_index = Vec::with_capacity(self.variables.len());
        for (i, (name, domain)) in self.variables.into_iter().enumerate() {
            if by_name.insert(name.clone(), VarId(i)).is_some() {
                return Err(ModelError::DuplicateVariable(name));
            }
            if domain.is_empty() {
                return Err(ModelError::EmptyDomain(name));
            }
            let mut index = HashMap::with_capacity(domain.len());
            for (k, &v) in domain.iter().enumerate() {
                if index.insert(v, k).is_some() {
                    return Err(ModelError::DuplicateValue { variable: name, value: v });
                }
            }
            var_names.push(name);
            domains.push(domain);
            value_index.push(index);
        }

        let mut seen_constraints = HashSet::new();
        let mut constraints = Vec::with_capacity(self.constraints.len());
        for (i, (name, scope_names, relation)) in self.constraints.into_iter().enumerate() {
            if !seen_constraints.insert(name.clone()) {
                return Err(ModelError::DuplicateConstraint(name));
            }
            let invalid = |message: String| ModelError::InvalidConstraint {
                constraint: name.clone(),
                message,
            };
            let mut scope = Vec::with_capacity(scope_names.len());
            for v in &scope_names {
                let Some(&x) = by_name.get(v) else {
                    return Err(ModelError::UnknownVariable {
                        constraint: name.clone(),
                        variable: v.clone(),
                    });
                };
                if scope.contains(&x) {
                    return Err(invalid(format!("variable `{v}` repeated in scope")));
                }
                scope.push(x);
            }
            if scope.len() < 2 {
                return Err(invalid(format!("arity {} is below 2", scope.len())));
            }
            match &relation {
                Relation::Allowed(t) | Relation::Forbidden(t) => {
                    if let Some(bad) = t.iter().find(|t| t.len() != scope.len()) {
                        return Err(invalid(format!(
                            "tuple width {} does not match arity {}",
                            bad.len(),
                            scope.len()
                        )));
                    }
                }
                Relation::Predicate(_) => {
                    if scope.len() != 2 {
                        return Err(invalid(format!(
                            "predicate constraints must be binary, got arity {}",
                            scope.len()
                        )));
                    }
                }
            }
            constraints.push(Constraint {
                id: ConstraintId(i),
                name,
                scope,
                relation,
            });
        }

        let n = domains.len();
        let mut incidence = vec![Vec::new(); n];
        let mut neighbors: Vec<Vec<VarId>> = vec![Vec::new(); n];
        for c in &constraints {
            for (pos, &x) in c.scope.iter().enumerate() {
                incidence[x.0].push((c.id, pos));
                for &y in &c.scope {
                    if y != x {
                        neighbors[x.0].push(y);
                    }
                }
            }
        }
        for ns in &mut neighbors {
            ns.sort_unstable();
            ns.dedup();
        }

        let matrices = constraints
            .iter()
            .map(|c| compile_matrix(c, &domains))
            .collect();

        Ok(Problem {
            name: self.name,
            var_names,
            domains,
            value_index,
            constraints,
            neighbors,
            incidence,
            matrices,
        })
    }
}

const MATRIX_LIMIT: usize = 1 << 22;

fn compile_matrix(c: &Constraint, domains: &[Vec<Value>]) -> Option<BinaryMatrix> {
    if c.arity() != 2 || matches!(c.relation, Relation::Predicate(_)) {
        return None;
    }
    let du = &domains[c.scope[0].0];
    let dv = &domains[c.scope[1].0];
    if du.len() * dv.len() > MATRIX_LIMIT {
        return None;
    }
    let mut allowed = Vec::with_capacity(du.len() * dv.len());
    for &a in du {
        for &b in dv {
            allowed.push(c.relation.satisfies(&[a, b]));
        }
    }
    Some(BinaryMatrix {
        width: dv.len(),
        allowed,
    })
}

impl Problem {
    pub fn num_variables(&self) -> usize {
        self.domains.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> impl ExactSizeIterator<Item = VarId> + Clone {
        (0..self.domains.len()).map(VarId)
    }

    pub fn variable_name(&self, x: VarId) -> &str {
        &self.var_names[x.0]
    }

    pub fn variable_by_name(&self, name: &str) -> Option<VarId> {
        self.var_names.iter().position(|n| n == name).map(VarId)
    }

    pub fn initial_domain(&self, x: VarId) -> &[Value] {
        &self.domains[x.0]
    }

    #[inline]
    pub fn value(&self, x: VarId, index: usize) -> Value {
        self.domains[x.0][index]
    }

    pub fn value_index(&self, x: VarId, v: Value) -> Option<usize> {
        self.value_index[x.0].get(&v).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    #[inline]
    pub fn constraint(&self, c: ConstraintId) -> &Constraint {
        &self.constraints[c.0]
    }

    /// Constraints involving `x`, with the position of `x` in each scope.
    #[inline]
    pub fn incident(&self, x: VarId) -> &[(ConstraintId, usize)] {
        &self.incidence[x.0]
    }

    /// Γ(x): variables sharing at least one constraint with `x`, sorted.
    pub fn neighbors(&self, x: VarId) -> Result<&[VarId], ModelError> {
        self.neighbors
            .get(x.0)
            .map(Vec::as_slice)
            .ok_or(ModelError::UnknownVariableId(x.0))
    }

    #[inline]
    pub(crate) fn neighbors_of(&self, x: VarId) -> &[VarId] {
        &self.neighbors[x.0]
    }

    /// Counted support check on a value tuple.
    pub fn check_tuple(
        &self,
        c: ConstraintId,
        tuple: &[Value],
        checks: &mut u64,
    ) -> Result<bool, ModelError> {
        let con = self.constraint(c);
        if tuple.len() != con.arity() {
            return Err(ModelError::WidthMismatch {
                expected: con.arity(),
                found: tuple.len(),
            });
        }
        *checks += 1;
        note_check();
        Ok(con.relation.satisfies(tuple))
    }

    /// Counted check of a binary constraint on value indices.
    #[inline]
    fn check_binary(&self, c: ConstraintId, ia: usize, ib: usize, checks: &mut u64) -> bool {
        *checks += 1;
        note_check();
        if let Some(m) = &self.matrices[c.0] {
            return m.allowed[ia * m.width + ib];
        }
        let con = &self.constraints[c.0];
        let a = self.domains[con.scope[0].0][ia];
        let b = self.domains[con.scope[1].0][ib];
        match &con.relation {
            Relation::Predicate(p) => p.eval(a, b),
            r => r.satisfies(&[a, b]),
        }
    }

    /// True iff a full assignment (indexed by variable) satisfies every
    /// constraint. Not counted.
    pub fn is_solution(&self, assignment: &[Value]) -> bool {
        if assignment.len() != self.num_variables() {
            return false;
        }
        let mut buf = Vec::new();
        for (x, &v) in assignment.iter().enumerate() {
            if self.value_index(VarId(x), v).is_none() {
                return false;
            }
        }
        self.constraints.iter().all(|c| {
            buf.clear();
            buf.extend(c.scope.iter().map(|x| assignment[x.0]));
            c.satisfies(&buf)
        })
    }

    /// Whether value `a` of `x` has a support on `c` among the current
    /// domains. Other variables are enumerated lexicographically in current
    /// domain order; every tuple tried counts as one check.
    pub fn seek_support(
        &self,
        d: &DomainStore,
        c: ConstraintId,
        x: VarId,
        a: Value,
        checks: &mut u64,
    ) -> bool {
        let con = self.constraint(c);
        let pos = con.position(x).expect("variable not in constraint scope");
        let ia = self.value_index(x, a).expect("value not in initial domain");
        let mut scratch = SupportScratch::default();
        self.seek_support_at(d, c, pos, ia, checks, &mut scratch)
    }

    pub(crate) fn seek_support_at(
        &self,
        d: &DomainStore,
        c: ConstraintId,
        pos: usize,
        ia: usize,
        checks: &mut u64,
        scratch: &mut SupportScratch,
    ) -> bool {
        let con = &self.constraints[c.0];
        if con.arity() == 2 {
            let other = con.scope[1 - pos];
            return if pos == 0 {
                d.iter(other).any(|ib| self.check_binary(c, ia, ib, checks))
            } else {
                d.iter(other).any(|ib| self.check_binary(c, ib, ia, checks))
            };
        }

        let arity = con.arity();
        let SupportScratch { tuple, cursor } = scratch;
        tuple.clear();
        cursor.clear();
        for (k, &y) in con.scope.iter().enumerate() {
            if k == pos {
                tuple.push(self.domains[y.0][ia]);
            } else {
                let first = d.at(y, 0);
                tuple.push(self.domains[y.0][first]);
            }
            cursor.push(0);
        }
        loop {
            *checks += 1;
            note_check();
            if con.relation.satisfies(tuple) {
                return true;
            }
            // advance the odometer, rightmost position fastest
            let mut k = arity;
            loop {
                if k == 0 {
                    return false;
                }
                k -= 1;
                if k == pos {
                    continue;
                }
                let y = con.scope[k];
                cursor[k] += 1;
                if cursor[k] < d.len(y) {
                    tuple[k] = self.domains[y.0][d.at(y, cursor[k])];
                    break;
                }
                cursor[k] = 0;
                tuple[k] = self.domains[y.0][d.at(y, 0)];
            }
        }
    }
}

#[derive(Debug, Default, Clone)]
pub(crate) struct SupportScratch {
    tuple: Vec<Value>,
    cursor: Vec<usize>,
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}
