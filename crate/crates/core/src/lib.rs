//! Workbench for congruence identities and Maltsev conditions on finite
//! algebras.

pub mod algebra;
pub mod bounds;
pub mod cli;
pub mod corpus;
pub mod free;
pub mod identity;
pub mod maltsev;
pub mod relations;
pub mod term;
