//! Exact kernels, closed-form stationary laws and verification tools for
//! reverse juggling Markov chains and the random matrix model over a prime
//! field that they project from.
//!
//! Four chains are provided:
//!
//! * [`rjmc`]: single species on a finite window of `m` sites,
//! * [`irjmc`]: single species on the half-line,
//! * [`mrjmc`]: multispecies balls with bumping and no empty sites,
//! * [`imrjmc`]: multispecies balls on the half-line.
//!
//! Every chain is generic over a [`Scalar`]: exact [`Rational`] arithmetic
//! for verification, `f64` for simulation. [`oracle`] supplies independent
//! brute-force ground truth (dense matrices, exact linear solves, matrix
//! powers, empirical occupancy) and [`matrixmodel`] simulates the matrix
//! chain whose projections the single- and multispecies chains describe.

pub mod error;
pub mod imrjmc;
pub mod irjmc;
pub mod kernel;
pub mod matrixmodel;
pub mod mrjmc;
pub mod numerics;
pub mod oracle;
pub mod rjmc;
pub mod states;

pub use error::{Error, Result};
pub use kernel::{simulate, FiniteChain, MarkovChain, StationaryLaw, TransitionKernel};
pub use numerics::{ProbVec, Rational, Scalar};
pub use states::{BallTuple, BinaryWord, Content, EnrichedWord, LabeledConfig, Multipermutation};
