//! Mutual-information-structured Bayesian network classifier for rare
//! binary outcomes, with discriminant-analysis baselines and an F/C/V
//! evaluation harness.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod inference;
pub mod infometrics;
pub mod outcomes;
pub mod schema;
pub mod structure;
pub mod synthgen;
