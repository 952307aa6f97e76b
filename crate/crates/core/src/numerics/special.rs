//! Special functions: exponential integral `E1`, Lambert `W`, and the Wright
//! omega function.
//!
//! All three appear in the closed-form worst-case distributions:
//! `E1` in the forward-KL tilt `f0(x) / (q (x + mu))`, Lambert `W` in the
//! exponential-class boundary parameters, and Wright omega in the
//! symmetrized-divergence stationarity condition `omega(2 (x + mu) / s)`.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const NEG_INV_E: f64 = -0.367_879_441_171_442_33;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Uses the alternating power series for `x < 1` and a backward-evaluated
/// continued fraction for `x >= 1`. For `x` beyond roughly `709` the result
/// underflows gracefully to subnormals/zero along with `e^{-x}`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_e1_domain(x)?;
    if x < 1.0 {
        Ok(e1_series(x))
    } else {
        Ok((-x).exp() * e1_cf_scaled(x))
    }
}

/// Scaled exponential integral `e^x E1(x)`, stable for large `x`.
///
/// `E1(x)` itself underflows near `x ≈ 700`; the scaled form stays `O(1/x)`
/// for arbitrarily large arguments and is what the forward-KL solver works
/// with internally.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    check_e1_domain(x)?;
    if x < 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_cf_scaled(x))
    }
}

/// `e^x E1(x)` where the argument is given as `v = ln x`.
///
/// For `v <= -36` the series degenerates to `-EULER_GAMMA - v` to within one
/// ulp, which keeps the forward-KL constraint evaluable when `x = e^v` itself
/// underflows (radii as large as `d ≈ 5000` put `ln mu` near `-e^{d}`).
pub fn exp_integral_e1_scaled_ln_arg(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Domain(format!(
            "exp_integral_e1_scaled_ln_arg requires finite v, got {v}"
        )));
    }
    if v <= -36.0 {
        Ok(-EULER_GAMMA - v)
    } else {
        exp_integral_e1_scaled(v.exp())
    }
}

fn check_e1_domain(x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "exponential integral requires finite x > 0, got {x}"
        )));
    }
    Ok(())
}

/// Power series `E1(x) = -γ - ln x + Σ_{k>=1} (-1)^{k+1} x^k / (k·k!)`.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // holds (-x)^k / k!
    for k in 1..=60 {
        term *= -x / k as f64;
        let add = -term / k as f64;
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() + 1e-300 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Backward-evaluated Lentz-free continued fraction for `e^x E1(x)`, `x >= 1`:
/// `e^x E1(x) = 1 / (x + 1/(1 + 1/(x + 2/(1 + 2/(x + ...)))))`.
fn e1_cf_scaled(x: f64) -> f64 {
    let depth = ((240.0 / x) as usize).min(300) + 24;
    let mut tail = 0.0;
    for k in (1..=depth).rev() {
        let kf = k as f64;
        tail = kf / (1.0 + kf / (x + tail));
    }
    1.0 / (x + tail)
}

/// Real branches of the Lambert W function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambertBranch {
    /// `W_0`, defined on `[-1/e, ∞)` with `W_0 >= -1`.
    Principal,
    /// `W_{-1}`, defined on `[-1/e, 0)` with `W_{-1} <= -1`.
    MinusOne,
}

/// Lambert W: solves `w e^w = x` on the requested real branch.
///
/// Safeguarded Newton iteration inside a guaranteed bracket; the returned
/// value satisfies `|w e^w - x| <= 1e-13 * max(1, |x|)`.
pub fn lambert_w(branch: LambertBranch, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("lambert_w requires finite x, got {x}")));
    }
    match branch {
        LambertBranch::Principal => {
            if x < NEG_INV_E {
                // Allow a one-ulp excursion below the branch point.
                if x >= NEG_INV_E * (1.0 + 1e-14) {
                    return Ok(-1.0);
                }
                return Err(Error::Domain(format!(
                    "lambert_w principal branch requires x >= -1/e, got {x}"
                )));
            }
            if x == NEG_INV_E {
                return Ok(-1.0);
            }
            if x == 0.0 {
                return Ok(0.0);
            }
            let hi = if x > 1.0 { x.ln() + 1.0 } else { 1.0 };
            lambert_newton(x, -1.0, hi)
        }
        LambertBranch::MinusOne => {
            if x < NEG_INV_E {
                if x >= NEG_INV_E * (1.0 + 1e-14) {
                    return Ok(-1.0);
                }
                return Err(Error::Domain(format!(
                    "lambert_w secondary branch requires -1/e <= x < 0, got {x}"
                )));
            }
            if !(x < 0.0) {
                return Err(Error::Domain(format!(
                    "lambert_w secondary branch requires x < 0, got {x}"
                )));
            }
            if x == NEG_INV_E {
                return Ok(-1.0);
            }
            // g(w) = w e^w - x is decreasing on (-∞, -1]; g(-1) <= 0, and
            // g -> -x > 0 as w -> -∞, so expand the lower end until the sign flips.
            let mut lo = -2.0f64;
            let mut step = 1.0;
            for _ in 0..120 {
                if lo * lo.exp() - x > 0.0 {
                    break;
                }
                step *= 2.0;
                lo -= step;
            }
            if lo * lo.exp() - x <= 0.0 {
                return Err(Error::NoSignChange { lo, hi: -1.0 });
            }
            lambert_newton(x, lo, -1.0)
        }
    }
}

/// A few plain Newton steps to push an already-converged iterate from the
/// acceptance threshold down to rounding level (the bracketed loop's
/// residual test is absolute, which is loose deep on the secondary branch
/// where the derivative is tiny). Keeps the best iterate seen.
fn lambert_polish(x: f64, mut w: f64) -> f64 {
    let g = |w: f64| w * w.exp() - x;
    let mut best = (w, g(w).abs());
    for _ in 0..3 {
        let dg = (1.0 + w) * w.exp();
        if dg == 0.0 || !dg.is_finite() {
            break;
        }
        let next = w - g(w) / dg;
        if !next.is_finite() {
            break;
        }
        let r = g(next).abs();
        if r >= best.1 {
            break;
        }
        best = (next, r);
        w = next;
    }
    best.0
}

/// Bracketed Newton for `w e^w = x` with a sign change across `[lo, hi]`.
fn lambert_newton(x: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let tol = 1e-14 * x.abs().max(1.0);
    let g = |w: f64| w * w.exp() - x;
    let mut g_lo = g(lo);
    let mut w = 0.5 * (lo + hi);
    for iter in 0..200 {
        let gw = g(w);
        if gw.abs() <= tol {
            return Ok(lambert_polish(x, w));
        }
        if gw.is_finite() {
            if (gw > 0.0) == (g_lo > 0.0) {
                lo = w;
                g_lo = gw;
            } else {
                hi = w;
            }
        }
        let dg = (1.0 + w) * w.exp();
        let mut next = w - gw / dg;
        if !next.is_finite() || next <= lo.min(hi) || next >= lo.max(hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= f64::EPSILON * w.abs() && iter > 50 {
            // Bracket exhausted at float resolution; accept if the residual
            // is within a factor of the achievable rounding error.
            if gw.abs() <= 1e-13 * x.abs().max(1.0) {
                return Ok(lambert_polish(x, w));
            }
            return Err(Error::NonConvergence {
                context: "lambert_w".into(),
                iterations: iter,
                residual: gw.abs(),
            });
        }
        w = next;
    }
    let gw = g(w);
    if gw.abs() <= 1e-13 * x.abs().max(1.0) {
        return Ok(lambert_polish(x, w));
    }
    Err(Error::NonConvergence {
        context: "lambert_w".into(),
        iterations: 200,
        residual: gw.abs(),
    })
}

/// Wright omega: the unique real solution of `ω + ln ω = c`.
///
/// Computed as `exp(wright_omega_ln(c))`; for `c` below roughly `-745` the
/// result underflows to zero (use [`wright_omega_ln`] when the logarithm is
/// the quantity of interest, as the solvers here do).
pub fn wright_omega(c: f64) -> Result<f64> {
    Ok(wright_omega_ln(c)?.exp())
}

/// `ln ω(c)`: the unique real solution `u` of `u + e^u = c`.
///
/// Overflow-safe for the entire double range. The residual satisfies
/// `|u + e^u - c| <= 1e-12 * max(1, |c|)`, which is exactly the defining
/// residual of `ω = e^u` since `ω + ln ω - c = e^u + u - c`.
pub fn wright_omega_ln(c: f64) -> Result<f64> {
    if !c.is_finite() {
        return Err(Error::Domain(format!(
            "wright_omega requires finite argument, got {c}"
        )));
    }
    // h(u) = u + e^u - c is increasing and convex, so Newton converges
    // monotonically once the iterate lands right of the root.
    let mut u = if c >= 2.0 {
        (c - c.ln()).ln()
    } else if c <= -2.0 {
        c - c.exp()
    } else {
        0.0
    };
    let tol = 1e-13 * c.abs().max(1.0);
    for iter in 0..100 {
        let eu = u.exp();
        let h = u + eu - c;
        if h.abs() <= tol {
            return Ok(u);
        }
        let step = h / (1.0 + eu);
        u -= step;
        if step.abs() <= f64::EPSILON * u.abs().max(1e-300) && iter > 4 {
            break;
        }
    }
    let h = u + u.exp() - c;
    if h.abs() <= 1e-12 * c.abs().max(1.0) {
        return Ok(u);
    }
    Err(Error::NonConvergence {
        context: "wright_omega".into(),
        iterations: 100,
        residual: h.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_support::{assert_close, XorShift};

    #[test]
    fn e1_reference_values() {
        assert_close(exp_integral_e1(1.0).unwrap(), 0.21938393439552027, 1e-14);
        assert_close(exp_integral_e1(2.0).unwrap(), 0.04890051070806112, 1e-14);
        assert_close(exp_integral_e1(0.5).unwrap(), 0.55977359477616081, 1e-14);
        assert_close(exp_integral_e1(1e-8).unwrap(), 17.843465089050833, 1e-14);
        assert_close(
            exp_integral_e1_scaled(1.0).unwrap(),
            0.59634736232319407,
            1e-14,
        );
    }

    #[test]
    fn e1_domain_errors() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
        assert!(exp_integral_e1(f64::NAN).is_err());
        assert!(exp_integral_e1_scaled(f64::INFINITY).is_err());
    }

    #[test]
    fn e1_bracketing_bounds() {
        // 0.5 ln(1 + 2/x) < e^x E1(x) and x e^x E1(x) sits in (x/(x+1), 1).
        let mut rng = XorShift::new(0x9e3779b97f4a7c15);
        for _ in 0..10_000 {
            let t = rng.uniform();
            let x = 10f64.powf(-6.0 + 12.0 * t); // log-uniform on [1e-6, 1e6]
            let s = exp_integral_e1_scaled(x).unwrap();
            assert!(s > 0.0, "e1s({x}) = {s} not positive");
            assert!(x * s < 1.0, "upper bound violated at x = {x}: {s}");
            assert!(x * s > x / (x + 1.0) - 1e-16, "lower bound violated at x = {x}");
        }
    }

    #[test]
    fn e1_scaled_matches_ln_arg_variant() {
        for &v in &[-35.9f64, -30.0, -10.0, -2.0, 0.0, 1.5, 4.0] {
            let direct = exp_integral_e1_scaled(v.exp()).unwrap();
            let via_ln = exp_integral_e1_scaled_ln_arg(v).unwrap();
            assert_close(via_ln, direct, 1e-13);
        }
        // Deep-underflow regime: compare against the asymptotic form itself.
        let v = -5000.0;
        assert_close(
            exp_integral_e1_scaled_ln_arg(v).unwrap(),
            -EULER_GAMMA + 5000.0,
            1e-15,
        );
    }

    #[test]
    fn lambert_reference_values() {
        assert_close(
            lambert_w(LambertBranch::Principal, 1.0).unwrap(),
            0.56714329040978387,
            1e-14,
        );
        let e2 = (-2f64).exp();
        assert_close(
            lambert_w(LambertBranch::Principal, -e2).unwrap(),
            -0.15859433956303936,
            1e-13,
        );
        assert_eq!(lambert_w(LambertBranch::Principal, NEG_INV_E).unwrap(), -1.0);
        assert_eq!(lambert_w(LambertBranch::MinusOne, NEG_INV_E).unwrap(), -1.0);
        assert_eq!(lambert_w(LambertBranch::Principal, 0.0).unwrap(), 0.0);
        // ln(x) - ln(W) identity at a large argument.
        let w = lambert_w(LambertBranch::Principal, 1e10).unwrap();
        assert_close(w + w.ln(), (1e10f64).ln(), 1e-12);
    }

    #[test]
    fn lambert_domain_errors() {
        assert!(lambert_w(LambertBranch::Principal, -0.4).is_err());
        assert!(lambert_w(LambertBranch::MinusOne, 0.5).is_err());
        assert!(lambert_w(LambertBranch::MinusOne, 0.0).is_err());
        assert!(lambert_w(LambertBranch::Principal, f64::NAN).is_err());
    }

    #[test]
    fn lambert_residual_sweep() {
        let mut rng = XorShift::new(0x2545f4914f6cdd1d);
        for _ in 0..10_000 {
            let t = rng.uniform();
            // Mix of near-branch-point and large arguments for the principal branch.
            let x = if t < 0.5 {
                NEG_INV_E + (2.0 * t) * 0.4
            } else {
                10f64.powf(20.0 * (t - 0.5))
            };
            let w = lambert_w(LambertBranch::Principal, x).unwrap();
            assert!(
                (w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0),
                "principal residual too large at x = {x}"
            );
        }
        for _ in 0..10_000 {
            let t = rng.uniform();
            let x = NEG_INV_E * (1.0 - t).max(1e-12); // in (-1/e, 0)
            let w = lambert_w(LambertBranch::MinusOne, x).unwrap();
            assert!(w <= -1.0 + 1e-9, "wrong branch at x = {x}: w = {w}");
            assert!(
                (w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0),
                "secondary residual too large at x = {x}"
            );
        }
    }

    #[test]
    fn wright_omega_reference_values() {
        assert_close(wright_omega(1000.0).unwrap(), 993.0991694723891, 1e-13);
        assert_close(wright_omega(2.0).unwrap(), 1.5571455989976114, 1e-14);
        assert_close(wright_omega(1.0).unwrap(), 1.0, 1e-15);
        // Very negative arguments: the log variant stays exact.
        let u = wright_omega_ln(-1000.0).unwrap();
        assert_close(u, -1000.0, 1e-12);
    }

    #[test]
    fn wright_omega_residual_sweep() {
        let mut rng = XorShift::new(0xda942042e4dd58b5);
        for _ in 0..10_000 {
            let t = rng.uniform();
            let c = -700.0 + t * (1e8 + 700.0);
            let u = wright_omega_ln(c).unwrap();
            let resid = (u + u.exp() - c).abs();
            assert!(
                resid <= 1e-12 * c.abs().max(1.0),
                "omega residual {resid} too large at c = {c}"
            );
        }
    }
}
