//! Worst-case expected value over Kullback–Leibler uncertainty balls.
//!
//! Given a nominal distribution `f0` on `[0, ∞)` and a radius `d`, this
//! crate computes the minimum of `E_f[X]` over all densities `f` within a
//! divergence ball around `f0`, for three ball shapes:
//!
//! * **forward KL** — `D(f0 ‖ f) ≤ d`, worst case `f = f0 / (q (x + μ*))`;
//! * **reverse KL** — `D(f ‖ f0) ≤ d`, worst case `f ∝ e^{-x/s*} f0`;
//! * **symmetrized** — the average of the two directions, worst case
//!   expressed through the Wright omega function.
//!
//! The crate exposes:
//!
//! * [`NominalModel`] — exponential, uniform, or tabulated nominal laws;
//! * [`UncertaintySet::solve`] — the continuous worst-case solvers, with
//!   fast closed-form paths for exponential nominals and quadrature-based
//!   generic paths for everything else;
//! * [`knownclass`] — closed forms when candidates are restricted to the
//!   nominal's own parametric family;
//! * [`oracle`] — an independent discrete cross-check that solves the same
//!   problem on a grid with an interior-point method.

pub mod error;
pub mod knownclass;
pub mod nominal;
pub mod numerics;
pub mod oracle;
pub mod worstcase;

pub use error::{Error, Result};
pub use knownclass::{ForwardFormula, KnownClassSolution};
pub use nominal::NominalModel;
pub use oracle::{discretize, divergence, solve_discrete, DiscreteSolution, GridDistribution};
pub use worstcase::{
    achieved_divergence, DivergenceKind, ReverseMode, UncertaintySet, WorstCaseSolution,
};
