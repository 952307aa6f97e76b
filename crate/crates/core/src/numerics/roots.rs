//! Root finding: a safeguarded bracketed scalar solver and a damped Newton
//! method for 2x2 nonlinear systems.
//!
//! The scalar solver expands a user hint until it brackets a sign change,
//! then interleaves secant steps with bisection so that the iterate never
//! leaves the bracket. The 2-D solver uses finite-difference Jacobians with
//! Levenberg–Marquardt damping and, on a hard stall (e.g. a saddle of the
//! squared residual), applies a deterministic alternating-sign perturbation
//! before resuming.

use crate::error::{Error, Result};

/// Result of a scalar root solve.
#[derive(Clone, Copy, Debug)]
pub struct RootResult {
    /// Approximate root.
    pub root: f64,
    /// `|g(root)|` at the returned point.
    pub residual: f64,
    /// Refinement iterations performed (bracket expansion excluded).
    pub iterations: usize,
    /// Final bracket containing the root.
    pub bracket: (f64, f64),
}

/// Find a root of `g` near the hint interval, with residual tolerance `tol`.
///
/// The hint need not bracket a sign change; both ends are expanded outward
/// by doubling until one is found. A side on which `g` fails or returns a
/// non-finite value stops expanding, which lets callers pass hints that
/// border a domain boundary. Returns the root with `|g(root)| <= tol`,
/// guaranteed to lie inside the reported bracket.
pub fn solve_scalar<F>(mut g: F, hint: (f64, f64), tol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!(
            "scalar root tolerance must be positive and finite, got {tol}"
        )));
    }
    let (mut lo, mut hi) = (hint.0.min(hint.1), hint.0.max(hint.1));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bracket hint must be finite, got ({}, {})",
            hint.0, hint.1
        )));
    }
    if lo == hi {
        let pad = 1e-8 * lo.abs().max(1.0);
        lo -= pad;
        hi += pad;
    }

    let mut eval = |x: f64| -> Option<f64> {
        match g(x) {
            Ok(v) if v.is_finite() => Some(v),
            _ => None,
        }
    };

    let mut f_lo = eval(lo);
    let mut f_hi = eval(hi);
    // Repair an endpoint that fails to evaluate by halving it toward the
    // opposite end, so a hint that straddles a domain boundary still yields
    // one valid endpoint per side where possible.
    for _ in 0..60 {
        if f_lo.is_some() {
            break;
        }
        lo = 0.5 * (lo + hi);
        if lo >= hi {
            break;
        }
        f_lo = eval(lo);
    }
    for _ in 0..60 {
        if f_hi.is_some() {
            break;
        }
        hi = 0.5 * (lo + hi);
        if hi <= lo {
            break;
        }
        f_hi = eval(hi);
    }
    if let (Some(a), Some(b)) = (f_lo, f_hi) {
        if a == 0.0 {
            return Ok(RootResult { root: lo, residual: 0.0, iterations: 0, bracket: (lo, hi) });
        }
        if b == 0.0 {
            return Ok(RootResult { root: hi, residual: 0.0, iterations: 0, bracket: (lo, hi) });
        }
    }

    // Expand until two valid endpoint values have opposite signs. A side
    // whose evaluation fails stops expanding; a sign flip between successive
    // probes on one side also closes the bracket, so a single live side
    // suffices. If nothing flips within the budget, give up.
    let mut expansions = 0usize;
    let mut lo_alive = f_lo.is_some();
    let mut hi_alive = f_hi.is_some();
    let bracketed = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => a.signum() != b.signum(),
        _ => false,
    };
    while !bracketed(f_lo, f_hi) {
        if expansions >= 120 || (!lo_alive && !hi_alive) {
            return Err(Error::NoSignChange { lo, hi });
        }
        expansions += 1;
        if lo_alive {
            let cand = lo - (hi - lo).max(1e-8 * lo.abs().max(1.0));
            match eval(cand) {
                Some(v) => {
                    if let Some(prev) = f_lo {
                        if v.signum() != prev.signum() {
                            // Sign flip on this side: [cand, lo] is a bracket.
                            hi = lo;
                            f_hi = f_lo;
                        }
                    }
                    lo = cand;
                    f_lo = Some(v);
                }
                None => lo_alive = false,
            }
        }
        if bracketed(f_lo, f_hi) {
            break;
        }
        if hi_alive {
            let cand = hi + (hi - lo).max(1e-8 * hi.abs().max(1.0));
            match eval(cand) {
                Some(v) => {
                    if let Some(prev) = f_hi {
                        if v.signum() != prev.signum() {
                            lo = hi;
                            f_lo = f_hi;
                        }
                    }
                    hi = cand;
                    f_hi = Some(v);
                }
                None => hi_alive = false,
            }
        }
    }
    let (mut f_lo, f_hi) = match (f_lo, f_hi) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::NoSignChange { lo, hi }),
    };
    if f_lo == 0.0 {
        return Ok(RootResult { root: lo, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }
    if f_hi == 0.0 {
        return Ok(RootResult { root: hi, residual: 0.0, iterations: 0, bracket: (lo, hi) });
    }

    // Secant/bisection refinement. (x0, f0) -> (x1, f1) are the two most
    // recent evaluations; the bracket [lo, hi] always holds a sign change.
    let (mut x0, mut f0) = (lo, f_lo);
    let (mut x1, mut f1) = (hi, f_hi);
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    let mut prev_width = hi - lo;
    for iter in 1..=200 {
        let mut cand = if f1 != f0 {
            x1 - f1 * (x1 - x0) / (f1 - f0)
        } else {
            f64::NAN
        };
        // Force bisection when the secant step leaves the bracket or the
        // bracket has stopped contracting.
        let stalled = iter % 3 == 0 && (hi - lo) > 0.5 * prev_width;
        if !cand.is_finite() || cand <= lo || cand >= hi || stalled {
            cand = 0.5 * (lo + hi);
        }
        if iter % 3 == 0 {
            prev_width = hi - lo;
        }
        let fc = match eval(cand) {
            Some(v) => v,
            None => {
                let mid = 0.5 * (lo + hi);
                match eval(mid) {
                    Some(v) => {
                        cand = mid;
                        v
                    }
                    None => {
                        return Err(Error::NonConvergence {
                            context: "scalar root refinement (integrand failure)".into(),
                            iterations: iter,
                            residual: best.1.abs(),
                        })
                    }
                }
            }
        };
        if fc.abs() < best.1.abs() {
            best = (cand, fc);
        }
        if fc.abs() <= tol {
            return Ok(RootResult {
                root: cand,
                residual: fc.abs(),
                iterations: iter,
                bracket: (lo, hi),
            });
        }
        if fc.signum() == f_lo.signum() {
            lo = cand;
            f_lo = fc;
        } else {
            hi = cand;
        }
        x0 = x1;
        f0 = f1;
        x1 = cand;
        f1 = fc;
        if (hi - lo) <= 4.0 * f64::EPSILON * cand.abs().max(1.0) {
            // Bracket at float resolution; the best residual seen is as good
            // as this function evaluation allows.
            if best.1.abs() <= tol * 1e3 {
                return Ok(RootResult {
                    root: best.0,
                    residual: best.1.abs(),
                    iterations: iter,
                    bracket: (lo, hi),
                });
            }
            return Err(Error::NonConvergence {
                context: "scalar root refinement (bracket exhausted)".into(),
                iterations: iter,
                residual: best.1.abs(),
            });
        }
    }
    Err(Error::NonConvergence {
        context: "scalar root refinement".into(),
        iterations: 200,
        residual: best.1.abs(),
    })
}

/// Result of a 2-D system solve.
#[derive(Clone, Copy, Debug)]
pub struct Solve2dResult {
    /// Approximate solution `(x1, x2)`.
    pub x: (f64, f64),
    /// Euclidean norm of the residual vector at the solution.
    pub residual_norm: f64,
    /// Outer iterations performed.
    pub iterations: usize,
    /// Number of stall perturbations that were applied.
    pub kicks: usize,
}

/// Options for [`solve_2d`].
#[derive(Clone, Copy, Debug)]
pub struct Solve2dOptions {
    /// Outer iteration budget.
    pub max_iterations: usize,
    /// Reject candidate steps that would make the first component
    /// non-positive (for variables that live on `(0, ∞)`).
    pub clamp_first_positive: bool,
}

impl Default for Solve2dOptions {
    fn default() -> Self {
        Solve2dOptions { max_iterations: 400, clamp_first_positive: false }
    }
}

/// Solve the 2x2 system `g(x) = 0` starting from `start`.
///
/// Damped Newton iteration with central finite-difference Jacobians and an
/// Armijo-style backtracking line search on `‖g‖`. When no descent step can
/// be found, Levenberg–Marquardt damping is escalated; if that also fails,
/// a deterministic alternating-sign perturbation of growing magnitude is
/// applied (this is what breaks the symmetry on residual-norm saddles such
/// as `g = (x+y-3, xy-2)` started from `x = y`).
pub fn solve_2d<F>(
    mut g: F,
    start: (f64, f64),
    tol: f64,
    opts: &Solve2dOptions,
) -> Result<Solve2dResult>
where
    F: FnMut(f64, f64) -> Result<(f64, f64)>,
{
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!(
            "system tolerance must be positive and finite, got {tol}"
        )));
    }
    let norm = |r: (f64, f64)| (r.0 * r.0 + r.1 * r.1).sqrt();
    let mut eval = |x: [f64; 2]| -> Option<(f64, f64)> {
        match g(x[0], x[1]) {
            Ok(r) if r.0.is_finite() && r.1.is_finite() => Some(r),
            _ => None,
        }
    };

    let mut x = [start.0, start.1];
    let mut r = eval(x).ok_or_else(|| {
        Error::InvalidInput(format!(
            "system residual is not finite at the starting point ({}, {})",
            start.0, start.1
        ))
    })?;
    let mut nr = norm(r);
    let mut kicks = 0usize;

    for iter in 1..=opts.max_iterations {
        if nr <= tol {
            return Ok(Solve2dResult { x: (x[0], x[1]), residual_norm: nr, iterations: iter - 1, kicks });
        }

        // Central-difference Jacobian; fall back to one-sided differences on
        // evaluation failure.
        let mut jac = [[0.0f64; 2]; 2];
        let mut jac_ok = true;
        for j in 0..2 {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            if opts.clamp_first_positive && j == 0 && xm[0] <= 0.0 {
                xm[0] = x[0];
            }
            let col = match (eval(xp), eval(xm)) {
                (Some(rp), Some(rm)) if xp[j] != xm[j] => {
                    let den = xp[j] - xm[j];
                    Some(((rp.0 - rm.0) / den, (rp.1 - rm.1) / den))
                }
                (Some(rp), _) => Some(((rp.0 - r.0) / h, (rp.1 - r.1) / h)),
                (_, Some(rm)) if xm[j] != x[j] => {
                    Some(((r.0 - rm.0) / (x[j] - xm[j]), (r.1 - rm.1) / (x[j] - xm[j])))
                }
                _ => None,
            };
            match col {
                Some((d0, d1)) if d0.is_finite() && d1.is_finite() => {
                    jac[0][j] = d0;
                    jac[1][j] = d1;
                }
                _ => {
                    jac_ok = false;
                }
            }
        }

        let mut accepted = false;
        if jac_ok {
            let mut lambda = 0.0f64;
            'damping: for _try in 0..40 {
                let dx = solve_step(&jac, r, lambda);
                if let Some(dx) = dx {
                    let mut t = 1.0f64;
                    for _ in 0..30 {
                        let cand = [x[0] + t * dx.0, x[1] + t * dx.1];
                        if opts.clamp_first_positive && cand[0] <= 0.0 {
                            t *= 0.5;
                            continue;
                        }
                        if let Some(rc) = eval(cand) {
                            let nc = norm(rc);
                            if nc <= (1.0 - 1e-4 * t) * nr {
                                x = cand;
                                r = rc;
                                nr = nc;
                                accepted = true;
                                break 'damping;
                            }
                        }
                        t *= 0.5;
                    }
                }
                lambda = if lambda == 0.0 { 1e-10 } else { lambda * 10.0 };
            }
        }

        if !accepted {
            // Hard stall: deterministic perturbation, alternating in sign and
            // growing in magnitude with each application.
            kicks += 1;
            if kicks > 8 {
                return Err(Error::NonConvergence {
                    context: "2-D Newton (stalled)".into(),
                    iterations: iter,
                    residual: nr,
                });
            }
            let sign = if kicks % 2 == 1 { 1.0 } else { -1.0 };
            let mag = 0.1 * (x[0] * x[0] + x[1] * x[1]).sqrt().max(1.0) * kicks as f64;
            let mut cand = [x[0] + sign * mag, x[1] - sign * mag];
            if opts.clamp_first_positive && cand[0] <= 0.0 {
                cand[0] = 0.5 * x[0];
            }
            match eval(cand) {
                Some(rc) => {
                    x = cand;
                    r = rc;
                    nr = norm(rc);
                }
                None => {
                    // Try the mirrored perturbation before giving up on this round.
                    let mut cand = [x[0] - sign * mag, x[1] + sign * mag];
                    if opts.clamp_first_positive && cand[0] <= 0.0 {
                        cand[0] = 0.5 * x[0];
                    }
                    if let Some(rc) = eval(cand) {
                        x = cand;
                        r = rc;
                        nr = norm(rc);
                    }
                }
            }
        }
    }
    if nr <= tol {
        return Ok(Solve2dResult {
            x: (x[0], x[1]),
            residual_norm: nr,
            iterations: opts.max_iterations,
            kicks,
        });
    }
    Err(Error::NonConvergence {
        context: "2-D Newton".into(),
        iterations: opts.max_iterations,
        residual: nr,
    })
}

/// Newton step for `J dx = -r`, or the Levenberg–Marquardt step
/// `(JᵀJ + λI) dx = -Jᵀ r` when `lambda > 0`.
fn solve_step(jac: &[[f64; 2]; 2], r: (f64, f64), lambda: f64) -> Option<(f64, f64)> {
    let (j00, j01, j10, j11) = (jac[0][0], jac[0][1], jac[1][0], jac[1][1]);
    let (dx0, dx1) = if lambda == 0.0 {
        let det = j00 * j11 - j01 * j10;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        ((-r.0 * j11 + r.1 * j01) / det, (-r.1 * j00 + r.0 * j10) / det)
    } else {
        let a00 = j00 * j00 + j10 * j10 + lambda;
        let a01 = j00 * j01 + j10 * j11;
        let a11 = j01 * j01 + j11 * j11 + lambda;
        let b0 = -(j00 * r.0 + j10 * r.1);
        let b1 = -(j01 * r.0 + j11 * r.1);
        let det = a00 * a11 - a01 * a01;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        ((b0 * a11 - b1 * a01) / det, (b1 * a00 - b0 * a01) / det)
    };
    if dx0.is_finite() && dx1.is_finite() {
        Some((dx0, dx1))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_support::{assert_close, XorShift};

    #[test]
    fn scalar_simple_roots() {
        let r = solve_scalar(|x| Ok(x * x - 2.0), (0.0, 1.0), 1e-12).unwrap();
        assert_close(r.root, std::f64::consts::SQRT_2, 1e-10);
        assert!(r.root >= r.bracket.0 && r.root <= r.bracket.1);

        // Hint on the wrong side entirely; expansion must find the root.
        let r = solve_scalar(|x| Ok(x.exp() - 10.0), (-5.0, -4.0), 1e-12).unwrap();
        assert_close(r.root, 10f64.ln(), 1e-10);
    }

    #[test]
    fn scalar_root_of_x_minus_ln_x() {
        // x - ln x = 2 has its larger root at 3.1461932206205826 (this is the
        // boundary rate equation for the forward exponential class at d = 1).
        let r = solve_scalar(|x: f64| Ok(x - x.ln() - 2.0), (1.5, 2.0), 1e-12).unwrap();
        assert_close(r.root, 3.1461932206205826, 1e-12);
    }

    #[test]
    fn scalar_respects_failing_side() {
        // g fails for x <= 0; the solver must expand only to the right.
        let g = |x: f64| {
            if x <= 0.0 {
                Err(crate::error::Error::Domain("negative".into()))
            } else {
                Ok(x.ln() - 1.0)
            }
        };
        let r = solve_scalar(g, (0.5, 1.0), 1e-12).unwrap();
        assert_close(r.root, std::f64::consts::E, 1e-10);
    }

    #[test]
    fn scalar_no_sign_change_detected() {
        let err = solve_scalar(|x| Ok(x * x + 1.0), (-1.0, 1.0), 1e-10).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn scalar_residuals_within_tolerance_randomized() {
        let mut rng = XorShift::new(0x853c49e6748fea9b);
        for _ in 0..10_000 {
            let a = 0.1 + 5.0 * rng.uniform();
            let c = -3.0 + 6.0 * rng.uniform();
            // Root of a*(x - c) + sin(x) = 0 exists near c.
            let r = solve_scalar(|x: f64| Ok(a * (x - c) + x.sin()), (c - 0.5, c + 0.5), 1e-10)
                .unwrap();
            assert!(r.residual <= 1e-10);
            assert!(r.root >= r.bracket.0 && r.root <= r.bracket.1);
        }
    }

    #[test]
    fn system_toy_product_sum() {
        // Roots of (x+y-3, xy-2) are (1,2) and (2,1). Starting on the
        // symmetry axis x = y forces the stall perturbation to fire.
        let r = solve_2d(
            |x, y| Ok((x + y - 3.0, x * y - 2.0)),
            (0.5, 0.5),
            1e-12,
            &Solve2dOptions { clamp_first_positive: true, ..Default::default() },
        )
        .unwrap();
        let (x, y) = r.x;
        let hit_12 = (x - 1.0).abs() < 1e-10 && (y - 2.0).abs() < 1e-10;
        let hit_21 = (x - 2.0).abs() < 1e-10 && (y - 1.0).abs() < 1e-10;
        assert!(hit_12 || hit_21, "converged to ({x}, {y}) instead of a root");
        assert!(r.residual_norm <= 1e-12);
    }

    #[test]
    fn system_linear() {
        let r = solve_2d(
            |x, y| Ok((2.0 * x + y - 4.0, x - y + 1.0)),
            (10.0, -10.0),
            1e-12,
            &Solve2dOptions::default(),
        )
        .unwrap();
        assert_close(r.x.0, 1.0, 1e-10);
        assert_close(r.x.1, 2.0, 1e-10);
    }

    #[test]
    fn system_rejects_bad_start() {
        let err = solve_2d(
            |_, _| Ok((f64::NAN, 0.0)),
            (0.0, 0.0),
            1e-8,
            &Solve2dOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
