//! Native JSON instance format.
//!
//! ```json
//! {
//!   "name": "example",
//!   "variables": [ { "id": "x", "domain": [0, 1] }, { "id": "y", "domain": [0, 1] } ],
//!   "constraints": [
//!     { "id": "c0", "scope": ["x", "y"], "kind": "predicate", "pred": { "name": "ne" } },
//!     { "id": "c1", "scope": ["x", "y"], "kind": "forbidden", "tuples": [[0, 0]] }
//!   ]
//! }
//! ```
//!
//! `kind` is one of `allowed`, `forbidden` (both require `tuples`) or
//! `predicate` (requires `pred`, with `k` for `dist_ne` and `dist_gt`).
//! Unknown fields are rejected.

use serde::{Deserialize, Serialize};

use super::{ModelError, Predicate, Problem, ProblemBuilder, Relation, TupleSet, Value};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    name: String,
    variables: Vec<VariableEntry>,
    constraints: Vec<ConstraintEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    id: String,
    domain: Vec<Value>,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Allowed,
    Forbidden,
    Predicate,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintEntry {
    id: String,
    scope: Vec<String>,
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tuples: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pred: Option<PredicateEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredicateEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<Value>,
}

/// Parses and validates an instance in the native format.
pub fn load_problem(text: &str) -> Result<Problem, ModelError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut b = ProblemBuilder::new(file.name);
    for v in file.variables {
        b.variable(v.id, v.domain);
    }
    for c in file.constraints {
        let invalid = |message: &str| ModelError::InvalidConstraint {
            constraint: c.id.clone(),
            message: message.to_string(),
        };
        let relation = match (c.kind, c.tuples, c.pred) {
            (Kind::Allowed, Some(t), None) => Relation::Allowed(t.into_iter().collect()),
            (Kind::Forbidden, Some(t), None) => Relation::Forbidden(t.into_iter().collect()),
            (Kind::Predicate, None, Some(p)) => {
                Relation::Predicate(Predicate::from_parts(&p.name, p.k).ok_or_else(|| {
                    invalid(&format!("unknown predicate `{}` (k = {:?})", p.name, p.k))
                })?)
            }
            (Kind::Predicate, _, _) => return Err(invalid("field `pred` required without `tuples`")),
            _ => return Err(invalid("field `tuples` required without `pred`")),
        };
        b.constraint_by_name(c.id, c.scope, relation);
    }
    b.build()
}

fn to_file(p: &Problem) -> InstanceFile {
    let variables = p
        .variables()
        .map(|x| VariableEntry {
            id: p.variable_name(x).to_string(),
            domain: p.initial_domain(x).to_vec(),
        })
        .collect();
    let constraints = p
        .constraints()
        .iter()
        .map(|c| {
            let scope = c.scope.iter().map(|&x| p.variable_name(x).to_string()).collect();
            let (kind, tuples, pred) = match &c.relation {
                Relation::Allowed(t) => (Kind::Allowed, Some(tuples(t)), None),
                Relation::Forbidden(t) => (Kind::Forbidden, Some(tuples(t)), None),
                Relation::Predicate(pr) => (
                    Kind::Predicate,
                    None,
                    Some(PredicateEntry {
                        name: pr.name().to_string(),
                        k: pr.parameter(),
                    }),
                ),
            };
            ConstraintEntry {
                id: c.name.clone(),
                scope,
                kind,
                tuples,
                pred,
            }
        })
        .collect();
    InstanceFile {
        name: p.name.clone(),
        variables,
        constraints,
    }
}

fn tuples(t: &TupleSet) -> Vec<Vec<Value>> {
    t.sorted()
}

/// Serializes to the native format, one line.
pub fn to_native(p: &Problem) -> String {
    serde_json::to_string(&to_file(p)).expect("instance serialization cannot fail")
}

pub fn to_native_pretty(p: &Problem) -> String {
    serde_json::to_string_pretty(&to_file(p)).expect("instance serialization cannot fail")
}
