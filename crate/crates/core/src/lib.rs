//! Local, nonlinear feature explanations for black-box node classifiers.
//!
//! A prediction at node `v` is explained by sampling `v`'s N-hop
//! neighborhood, querying the classifier on every sampled node and fitting
//! an HSIC Lasso surrogate that regresses the output kernel on per-feature
//! kernels. The features with the largest nonnegative coefficients form the
//! explanation.

pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod explainers;
pub mod graph;
pub mod hsic;
pub mod kernel;
mod linalg;
pub mod predictor;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
