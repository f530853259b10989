//! A finite-domain constraint solver: MAC search with d-way branching over
//! three AC-3 propagation schemes, pluggable revision-queue ordering,
//! conflict-driven and impact-based variable ordering, restarts, instance
//! generators and a benchmark harness.

pub mod harness;
pub mod instances;
pub mod model;
pub mod propagation;
pub mod search;
pub mod vorder;
