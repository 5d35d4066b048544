//! Nominal anti-unification with atom-variables modulo the equational
//! theories ∅, A, C and AC.

pub mod cli;
pub mod enau;
pub mod eqvm;
pub mod ground;
pub mod minimize;
pub mod semantics;
pub mod syntax;
pub mod term;
