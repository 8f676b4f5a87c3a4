//! Simulation and verification toolkit for discrete Markov branching
//! growth-fragmentation systems and their self-similar scaling limits.
//!
//! The crate is organized around the pipeline
//!
//! * [`kernels`] — transition kernels `p(n, m)` with growth / binary
//!   conservative split semantics and a freezing threshold,
//! * [`exponents`] — discrete cumulants `lambda_n`, `kappa_n`,
//!   `kappa_tilde_n`, their Lévy-triplet limits, convergence-assumption
//!   checks and freezing-threshold selection,
//! * [`branching`] — the locally largest chain, the size-biased spine
//!   chain with killing, and full Ulam–Harris particle systems,
//! * [`genealogy`] — genealogical trees as rooted edge-weighted real
//!   trees, with truncation, rescaling and Gromov–Hausdorff bounds,
//! * [`limits`] — finite-activity Lévy paths, the Lamperti time change,
//!   the limiting cell system and the limit genealogical tree,
//! * [`diagnostics`] — exact identities (many-to-one, supermartingale
//!   steps), Monte Carlo cross-checks and convergence statistics tying
//!   the discrete and limiting layers together.
//!
//! Numeric routines are generic over the scalar type through
//! [`scalar::Scalar`]; the statistical layer and all reports use the
//! concrete alias [`Real`].

pub mod branching;
pub mod diagnostics;
pub mod exponents;
pub mod genealogy;
pub mod kernels;
pub mod limits;
pub mod rng;
pub mod scalar;
pub mod stats;

/// Concrete scalar used by simulations, statistics and reports.
pub type Real = f64;

pub use branching::{ChainPath, ParticleRecord, SpinePath, SystemRun};
pub use exponents::{LevyTriplet, ScalingSequence};
pub use genealogy::GenealogyTree;
pub use kernels::{FrozenKernel, Kernel, KernelOutcome};
