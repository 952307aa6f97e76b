//! Forward-KL worst case: minimize the mean over `{ f : D(f0 ‖ f) <= d }`.
//!
//! The minimizer has the form `f(x) = f0(x) / (q (x + mu))` where
//! `q(mu) = ∫ f0(x)/(x + mu) dx` normalizes the density and `mu > 0` is
//! chosen so the constraint is active:
//!
//! `D(f0 ‖ f) = ln q(mu) + ∫ f0(x) ln(x + mu) dx = d`.
//!
//! The worst-case mean then follows from the algebraic identity
//! `∫ (x + mu) f(x) dx = 1/q`, i.e. `mean = 1/q - mu`.
//!
//! The root is solved in `u = ln mu`: as `d` grows, `mu` collapses toward
//! zero extremely fast (for an exponential nominal `ln mu ~ -e^{d}`), so a
//! linear-scale search would underflow long before reaching useful radii.
//! For exponential nominals both integrals reduce to the scaled exponential
//! integral `e1s(t) = e^t E1(t)`:
//!
//! `q = rate * e1s(rate mu)`, `∫ f0 ln(x+mu) = ln mu + e1s(rate mu)`.

use crate::error::{Error, Result};
use crate::nominal::NominalModel;
use crate::numerics::{exp_integral_e1_scaled_ln_arg, solve_scalar, SCALAR_TOL};
use crate::worstcase::{
    forward_divergence, forward_log_moment, forward_mass, normalization_residual,
    validate_radius, Diagnostics, DivergenceKind, Family, WorstCaseSolution,
};

/// Solve the forward-KL worst case. Exponential nominals take a closed-form
/// fast path; uniform and tabulated nominals use adaptive quadrature.
pub fn solve_forward_kl(nominal: &NominalModel, d: f64) -> Result<WorstCaseSolution> {
    validate_radius(d)?;
    if d == 0.0 {
        return Ok(WorstCaseSolution::at_nominal(DivergenceKind::ForwardKl, nominal, None));
    }
    match nominal {
        NominalModel::Exponential { rate } => solve_exp(nominal, *rate, d),
        _ => solve_generic(nominal, d),
    }
}

/// Solve the forward-KL worst case through the generic quadrature path even
/// for nominals that have a fast path. Exposed so the two implementations
/// can be validated against each other.
pub fn solve_forward_kl_generic(nominal: &NominalModel, d: f64) -> Result<WorstCaseSolution> {
    validate_radius(d)?;
    if d == 0.0 {
        return Ok(WorstCaseSolution::at_nominal(DivergenceKind::ForwardKl, nominal, None));
    }
    solve_generic(nominal, d)
}

/// Exponential fast path in `u = ln mu`, entirely in scaled-E1 arithmetic:
/// `g(u) = e1s(v) + u + ln rate + ln e1s(v) - d` with `v = ln rate + u`.
fn solve_exp(nominal: &NominalModel, rate: f64, d: f64) -> Result<WorstCaseSolution> {
    let ln_rate = rate.ln();
    let g = |u: f64| -> Result<f64> {
        let e1s = exp_integral_e1_scaled_ln_arg(ln_rate + u)?;
        Ok(e1s + u + ln_rate + e1s.ln() - d)
    };
    let u0 = -ln_rate; // ln of the nominal mean
    let root = solve_scalar(g, (u0 - 1.0, u0 + 1.0), SCALAR_TOL)?;
    let u = root.root;
    let q = rate * exp_integral_e1_scaled_ln_arg(ln_rate + u)?;
    let mu = u.exp();
    let mean = 1.0 / q - mu;
    finish(
        nominal,
        d,
        Family::ForwardExp { rate, ln_mu: u, q },
        mean,
        mu,
        root.iterations,
    )
}

/// Generic path: both constraint integrals evaluated through the decomposed
/// quadratures of [`forward_mass`] and the log moment, which remain accurate
/// for trial shifts far below the underflow threshold. The root is solved in
/// `u = ln mu`:
///
/// `g(u) = ln q(e^u) + ∫ f0(x) ln(x + e^u) dx - d`.
fn solve_generic(nominal: &NominalModel, d: f64) -> Result<WorstCaseSolution> {
    // A nominal whose density vanishes at zero caps the divergence the
    // density family can reach: as mu -> 0 both integrals stay finite, so
    // the family's divergence tops out at `ln ∫ f0/x + ∫ f0 ln x`. Past
    // that radius the minimizer concentrates an atom at zero, which this
    // model space excludes (densities only) — report the cap instead of
    // hunting for a root that does not exist.
    if nominal.pdf(0.0) == 0.0 {
        let d_cap = forward_mass(nominal, 0.0, f64::NEG_INFINITY, None)?.ln()
            + forward_log_moment(nominal, 0.0, f64::NEG_INFINITY)?;
        if d >= d_cap {
            return Err(Error::InvalidInput(format!(
                "forward-kl radius {d} is not attainable by a density for this \
                 nominal: its pdf vanishes at 0, which caps the radius at \
                 {d_cap:.12}; beyond that the worst case places probability \
                 mass exactly at zero, and atomic distributions are outside \
                 this model space"
            )));
        }
    }

    let g = |u: f64| -> Result<f64> {
        let mu = u.exp();
        Ok(forward_mass(nominal, mu, u, None)?.ln() + forward_log_moment(nominal, mu, u)? - d)
    };

    let u0 = nominal.mean().ln();
    let root = solve_scalar(g, (u0 - 1.0, u0 + 1.0), SCALAR_TOL)?;
    let u = root.root;
    let mu = u.exp();
    let q = forward_mass(nominal, mu, u, None)?;
    let mean = 1.0 / q - mu;
    finish(
        nominal,
        d,
        Family::ForwardGeneric { mu, ln_mu: u, q },
        mean,
        mu,
        root.iterations,
    )
}

fn finish(
    nominal: &NominalModel,
    d: f64,
    family: Family,
    mean: f64,
    mu: f64,
    iterations: usize,
) -> Result<WorstCaseSolution> {
    let mut solution = WorstCaseSolution::new(
        DivergenceKind::ForwardKl,
        d,
        nominal.clone(),
        family,
        mean,
        Some(mu),
        None,
        None,
        Diagnostics { normalization_residual: 0.0, divergence_residual: 0.0, iterations },
    );
    let norm = normalization_residual(&solution)?;
    let achieved = forward_divergence(&solution)?;
    solution.diagnostics.normalization_residual = norm;
    solution.diagnostics.divergence_residual = (achieved - d).abs();
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_support::assert_close;

    fn exp1() -> NominalModel {
        NominalModel::exponential(1.0).unwrap()
    }

    #[test]
    fn radius_zero_returns_nominal() {
        let sol = solve_forward_kl(&exp1(), 0.0).unwrap();
        assert_eq!(sol.mean(), 1.0);
        assert_eq!(sol.mu_star(), None);
        assert_eq!(sol.diagnostics().iterations, 0);
        assert_close(sol.cdf(1.0).unwrap(), 1.0 - (-1f64).exp(), 1e-15);
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(solve_forward_kl(&exp1(), -0.1).is_err());
        assert!(solve_forward_kl(&exp1(), f64::NAN).is_err());
    }

    #[test]
    fn exponential_reference_solutions() {
        // (d, mu*, mean*) triples for a unit-rate exponential nominal.
        let cases = [
            (0.05, 1.5349203970297711, 0.73386243831573037),
            (0.1, 0.79020445102048564, 0.6449948896857344),
            (0.2, 0.34233178073666444, 0.5344733062260235),
            (0.5, 0.064490329854194452, 0.35640733388470885),
            (1.0, 0.0052694153415765393, 0.20756101103149968),
            (2.0, 1.0811958260659689e-6, 0.075985360381118063),
            (4.0, 3.2893311180325924e-43, 0.010283489151666251),
        ];
        for &(d, mu, mean) in &cases {
            let sol = solve_forward_kl(&exp1(), d).unwrap();
            assert_close(sol.mean(), mean, 1e-10);
            let got_mu = sol.mu_star().unwrap();
            assert!(
                ((got_mu - mu) / mu).abs() <= 1e-8,
                "mu mismatch at d={d}: got {got_mu:e}, want {mu:e}"
            );
            assert!(sol.diagnostics().normalization_residual <= 1e-7);
            assert!(sol.diagnostics().divergence_residual <= 1e-7);
        }
    }

    #[test]
    fn extreme_radius_stays_finite() {
        // d = 8 drives ln mu near -5310; the log-space solve must survive.
        let sol = solve_forward_kl(&exp1(), 8.0).unwrap();
        assert_close(sol.mean(), 0.00018834867381813446, 1e-9);
        assert!(sol.mean() > 0.0);
    }

    #[test]
    fn vanishing_density_at_zero_caps_the_radius() {
        // Rayleigh-like table: pdf(0) = 0, so the density family's forward
        // divergence tops out near 0.5 (ln pi - gamma) ~= 0.2838. Below the
        // cap the solve works as usual; at or above it the worst case would
        // need an atom at zero, which is outside the model space.
        let pts: Vec<(f64, f64)> = (0..=1200)
            .map(|i| {
                let x = 0.01 * i as f64;
                (x, x * (-0.5 * x * x).exp())
            })
            .collect();
        let tab = NominalModel::from_table(pts).unwrap();
        let sol = solve_forward_kl(&tab, 0.25).unwrap();
        assert!(sol.mu_star().unwrap() > 0.0);
        assert!(sol.mean() < tab.mean());
        assert!(sol.diagnostics().divergence_residual <= 1e-8);
        match solve_forward_kl(&tab, 0.3) {
            Err(Error::InvalidInput(msg)) => {
                assert!(msg.contains("vanishes at 0"), "unexpected message: {msg}");
            }
            other => panic!("expected the radius-cap error, got {other:?}"),
        }
    }

    #[test]
    fn rate_scaling_law() {
        // mu and the mean both scale as 1/rate at fixed d.
        let d = 0.37;
        let base = solve_forward_kl(&exp1(), d).unwrap();
        let scaled = solve_forward_kl(&NominalModel::exponential(2.0).unwrap(), d).unwrap();
        assert_close(scaled.mean(), base.mean() / 2.0, 1e-9);
        assert_close(scaled.mu_star().unwrap(), base.mu_star().unwrap() / 2.0, 1e-8);
    }

    #[test]
    fn worst_cdf_reference_value() {
        let sol = solve_forward_kl(&exp1(), 0.1).unwrap();
        assert_close(sol.cdf(1.0).unwrap(), 0.79244793128439293, 1e-9);
        assert_eq!(sol.cdf(0.0).unwrap(), 0.0);
        assert_eq!(sol.cdf(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn generic_path_matches_fast_path_on_exponential() {
        for &d in &[0.05, 0.5, 2.0] {
            let fast = solve_forward_kl(&exp1(), d).unwrap();
            let gen = solve_forward_kl_generic(&exp1(), d).unwrap();
            assert_close(gen.mean(), fast.mean(), 1e-8);
        }
    }

    #[test]
    fn uniform_reference_solutions() {
        let sol =
            solve_forward_kl(&NominalModel::uniform(1.0).unwrap(), 0.2).unwrap();
        assert_close(sol.mu_star().unwrap(), 0.10727941195550106, 1e-8);
        assert_close(sol.mean(), 0.32112838663220151, 1e-9);
        let sol2 =
            solve_forward_kl(&NominalModel::uniform(2.0).unwrap(), 0.2).unwrap();
        assert_close(sol2.mu_star().unwrap(), 0.21455882391100211, 1e-8);
        assert_close(sol2.mean(), 0.64225677326440303, 1e-9);
    }

    #[test]
    fn worst_mean_decreases_with_radius() {
        let mut prev = f64::INFINITY;
        for &d in &[0.0, 0.1, 0.3, 0.7, 1.5, 3.0] {
            let mean = solve_forward_kl(&exp1(), d).unwrap().mean();
            assert!(mean < prev || d == 0.0 && mean <= prev);
            prev = mean;
        }
    }
}
