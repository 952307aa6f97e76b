//! Worst cases restricted to the nominal's own parametric class.
//!
//! When the candidate set is narrowed from "all densities" to the nominal's
//! family (exponential with a free rate, or uniform with a free endpoint),
//! the boundary member minimizing the mean has closed form. These serve as
//! cross-checks for the full solvers and as the data behind the rate-ratio
//! tables.

use crate::error::{Error, Result};
use crate::numerics::{lambert_w, LambertBranch};
use crate::worstcase::DivergenceKind;

/// Which printed form of the forward-KL exponential-class boundary to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForwardFormula {
    /// Solve `r - ln r = 1 + d` exactly for its root `r >= 1`, i.e.
    /// `r = -W_{-1}(-e^{-1-d})`.
    ExactRoot,
    /// Evaluate `max(-W_0(-e^{-1-d}), 1 + d)` literally; for `d > 0` the
    /// second branch wins, giving the linear rate ratio `1 + d`.
    PaperFormula,
}

impl ForwardFormula {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForwardFormula::ExactRoot => "exact-root",
            ForwardFormula::PaperFormula => "paper-formula",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact-root" => Ok(ForwardFormula::ExactRoot),
            "paper-formula" => Ok(ForwardFormula::PaperFormula),
            other => Err(Error::InvalidInput(format!(
                "unknown forward formula '{other}' (expected exact-root or paper-formula)"
            ))),
        }
    }
}

/// Closed-form in-class worst case.
#[derive(Clone, Copy, Debug)]
pub struct KnownClassSolution {
    /// Boundary parameter of the class: the worst rate for exponential
    /// classes, the worst upper endpoint for uniform classes.
    pub boundary_parameter: f64,
    /// Worst-case mean within the class.
    pub mean: f64,
}

fn check_rate(rate: f64) -> Result<()> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "rate must be positive and finite, got {rate}"
        )));
    }
    Ok(())
}

fn check_radius(d: f64) -> Result<()> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidInput(format!(
            "divergence radius must be finite and >= 0, got {d}"
        )));
    }
    Ok(())
}

/// Forward-KL ball, exponential class: the worst rate is `rate * r` where
/// `r` solves `r - ln r = 1 + d` on `[1, ∞)`.
pub fn exp_class_forward(
    rate: f64,
    d: f64,
    formula: ForwardFormula,
) -> Result<KnownClassSolution> {
    check_rate(rate)?;
    check_radius(d)?;
    let arg = -(-1.0 - d).exp();
    let ratio = match formula {
        ForwardFormula::ExactRoot => -lambert_w(LambertBranch::MinusOne, arg)?,
        ForwardFormula::PaperFormula => {
            let w0 = -lambert_w(LambertBranch::Principal, arg)?;
            w0.max(1.0 + d)
        }
    };
    let worst_rate = rate * ratio;
    Ok(KnownClassSolution { boundary_parameter: worst_rate, mean: 1.0 / worst_rate })
}

/// Reverse-KL ball, exponential class: the worst rate is
/// `max(-rate / W_0(-e^{-1-d}), rate / (1 + d))`; the Lambert branch is the
/// binding one for every `d >= 0`. The result is verified against the
/// defining boundary condition `ln(Z/rate) + rate/Z - 1 = d`.
pub fn exp_class_reverse(rate: f64, d: f64) -> Result<KnownClassSolution> {
    check_rate(rate)?;
    check_radius(d)?;
    let w = lambert_w(LambertBranch::Principal, -(-1.0 - d).exp())?;
    let worst_rate = (-rate / w).max(rate / (1.0 + d));
    let residual = ((worst_rate / rate).ln() + rate / worst_rate - 1.0 - d).abs();
    if residual > 1e-10 {
        return Err(Error::NonConvergence {
            context: "reverse-KL class boundary verification".into(),
            iterations: 0,
            residual,
        });
    }
    Ok(KnownClassSolution { boundary_parameter: worst_rate, mean: 1.0 / worst_rate })
}

/// Symmetrized ball, exponential class: `(Z/rate + rate/Z)/2 - 1 = d` gives
/// the rate ratio `(1 + d) + sqrt(d (d + 2))`.
pub fn exp_class_symmetrized(rate: f64, d: f64) -> Result<KnownClassSolution> {
    check_rate(rate)?;
    check_radius(d)?;
    let ratio = 1.0 + d + (d * (d + 2.0)).sqrt();
    let worst_rate = rate * ratio;
    Ok(KnownClassSolution { boundary_parameter: worst_rate, mean: 1.0 / worst_rate })
}

/// Reverse-KL ball, uniform class on `[0, beta]` around `Uniform(0, alpha)`:
/// shrinking the endpoint keeps the divergence finite and the boundary sits
/// at `beta = alpha e^{-d}`, mean `alpha e^{-d} / 2`.
pub fn uniform_class_reverse(alpha: f64, d: f64) -> Result<KnownClassSolution> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "uniform endpoint must be positive and finite, got {alpha}"
        )));
    }
    check_radius(d)?;
    let beta = alpha * (-d).exp();
    Ok(KnownClassSolution { boundary_parameter: beta, mean: 0.5 * beta })
}

/// Divergence between `Uniform(0, alpha)` (nominal) and `Uniform(0, beta)`
/// (candidate) under the given kind; `+∞` signals a support violation.
///
/// Shrinking the endpoint (`beta < alpha`) leaves the forward and
/// symmetrized divergences infinite — the candidate vanishes where the
/// nominal has mass — so only the reverse ball admits in-class worst cases.
pub fn uniform_class_dominance_check(alpha: f64, beta: f64, kind: DivergenceKind) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 || !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "uniform endpoints must be positive and finite, got alpha={alpha}, beta={beta}"
        )));
    }
    let value = match kind {
        // D(U_alpha || U_beta) finite iff [0, alpha] ⊆ [0, beta].
        DivergenceKind::ForwardKl => {
            if beta >= alpha {
                (beta / alpha).ln()
            } else {
                f64::INFINITY
            }
        }
        // D(U_beta || U_alpha) finite iff [0, beta] ⊆ [0, alpha].
        DivergenceKind::ReverseKl => {
            if beta <= alpha {
                (alpha / beta).ln()
            } else {
                f64::INFINITY
            }
        }
        DivergenceKind::Symmetrized => {
            if beta == alpha {
                0.0
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_support::assert_close;

    #[test]
    fn forward_exact_root_reference() {
        // d = 1: r - ln r = 2 has larger root 3.1461932206205826.
        let sol = exp_class_forward(1.0, 1.0, ForwardFormula::ExactRoot).unwrap();
        assert_close(sol.boundary_parameter, 3.1461932206205826, 1e-12);
        assert_close(sol.mean, 1.0 / 3.1461932206205826, 1e-12);
        // Identity at d = 0.
        let sol = exp_class_forward(2.0, 0.0, ForwardFormula::ExactRoot).unwrap();
        assert_close(sol.boundary_parameter, 2.0, 1e-12);
    }

    #[test]
    fn forward_exact_root_satisfies_equation_on_grid() {
        for i in 0..50 {
            let d = 0.05 + 0.1 * i as f64;
            let sol = exp_class_forward(1.0, d, ForwardFormula::ExactRoot).unwrap();
            let r = sol.boundary_parameter;
            assert!(r >= 1.0);
            assert!((r - r.ln() - 1.0 - d).abs() <= 1e-12, "residual at d={d}");
        }
    }

    #[test]
    fn forward_paper_formula_is_linear_for_positive_radius() {
        for &d in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let sol = exp_class_forward(1.0, d, ForwardFormula::PaperFormula).unwrap();
            assert_close(sol.boundary_parameter, 1.0 + d, 1e-12);
        }
        let sol = exp_class_forward(3.0, 0.0, ForwardFormula::PaperFormula).unwrap();
        assert_close(sol.boundary_parameter, 3.0, 1e-12);
    }

    #[test]
    fn reverse_reference_and_residual_grid() {
        // d = 1: Z = -1/W0(-e^{-2}) = 6.3053952792716912.
        let sol = exp_class_reverse(1.0, 1.0).unwrap();
        assert_close(sol.boundary_parameter, 6.3053952792716912, 1e-12);
        for i in 0..50 {
            let d = 0.02 + 0.1 * i as f64;
            let sol = exp_class_reverse(1.0, d).unwrap();
            let z = sol.boundary_parameter;
            assert!((z.ln() + 1.0 / z - 1.0 - d).abs() <= 1e-10);
        }
    }

    #[test]
    fn symmetrized_reference() {
        // d = 1: ratio = 2 + sqrt(3).
        let sol = exp_class_symmetrized(1.0, 1.0).unwrap();
        assert_close(sol.boundary_parameter, 3.7320508075688773, 1e-12);
        // Boundary condition (r + 1/r)/2 - 1 = d on a grid.
        for &d in &[0.05, 0.3, 1.0, 2.5] {
            let r = exp_class_symmetrized(1.0, d).unwrap().boundary_parameter;
            assert_close(0.5 * (r + 1.0 / r) - 1.0, d, 1e-12);
        }
    }

    #[test]
    fn uniform_reverse_reference() {
        let sol = uniform_class_reverse(1.0, std::f64::consts::LN_2).unwrap();
        assert_close(sol.boundary_parameter, 0.5, 1e-12);
        assert_close(sol.mean, 0.25, 1e-12);
    }

    #[test]
    fn uniform_dominance_signals() {
        use DivergenceKind::*;
        let inf = uniform_class_dominance_check(1.0, 0.5, ForwardKl).unwrap();
        assert!(inf.is_infinite());
        let inf = uniform_class_dominance_check(1.0, 0.5, Symmetrized).unwrap();
        assert!(inf.is_infinite());
        let v = uniform_class_dominance_check(1.0, 0.5, ReverseKl).unwrap();
        assert_close(v, std::f64::consts::LN_2, 1e-15);
        for kind in [ForwardKl, ReverseKl, Symmetrized] {
            assert_eq!(uniform_class_dominance_check(2.0, 2.0, kind).unwrap(), 0.0);
        }
        // Growing the endpoint flips which directions stay finite.
        assert!(uniform_class_dominance_check(1.0, 2.0, ReverseKl).unwrap().is_infinite());
        assert_close(
            uniform_class_dominance_check(1.0, 2.0, ForwardKl).unwrap(),
            std::f64::consts::LN_2,
            1e-15,
        );
    }

    #[test]
    fn invalid_inputs() {
        assert!(exp_class_forward(0.0, 1.0, ForwardFormula::ExactRoot).is_err());
        assert!(exp_class_reverse(1.0, -1.0).is_err());
        assert!(uniform_class_reverse(-2.0, 0.1).is_err());
        assert!(uniform_class_dominance_check(1.0, 0.0, DivergenceKind::ForwardKl).is_err());
    }
}
