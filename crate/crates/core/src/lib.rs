//! Equality and inequality constraints on observed distributions implied by
//! hidden-variable causal DAGs with discrete observed variables.

pub mod constraints;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod independence;
pub mod polyhedra;
pub mod rational;
pub mod response;
pub mod table;
pub mod transform;

pub use error::{Error, Result};
pub use graph::{District, HiddenDag, VarId, VarKind, Variable};
