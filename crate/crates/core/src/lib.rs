//! NN-MCDA: a jointly trained blend of an additive polynomial value model and a
//! multilayer perceptron for interpretable preference learning.
//!
//! The model scores an alternative as `U(x) = alpha * F(x) + (1 - alpha) * f(x)`,
//! where `F` is a weighted sum of per-attribute polynomial marginal value
//! functions (the interpretable part) and `f` is a small fully-connected network
//! (the part that absorbs attribute interactions). The trade-off coefficient
//! `alpha` is learned jointly with everything else.
//!
//! The crate also ships the pairwise ranking mode (learning from score
//! differences between pairs of alternatives), seeded synthetic dataset
//! generators, ROC/AUC evaluation, experiment runners, and the marginal-curve
//! explanation engine. The `nn-mcda` binary exposes all of it on the command
//! line.

pub mod additive;
pub mod basis;
pub mod cli;
pub mod error;
pub mod evaluate;
pub mod explain;
pub mod hybrid;
pub mod ingest;
pub mod mlp;
pub mod numeric;
pub mod ranking;
pub mod synthgen;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
