//! Independent discrete cross-check for the continuous solvers.
//!
//! The continuous problem is discretized onto a uniform grid and the
//! resulting finite-dimensional program — minimize `Σ x_i p_i` over the
//! probability simplex subject to a divergence-ball constraint — is solved
//! with a log-barrier interior-point method. Nothing here shares code with
//! the continuous path: divergences are plain sums, the barrier subproblems
//! use damped Newton steps with an explicit simplex equality, and the only
//! structure exploited is that the Hessian is diagonal plus rank one.

use crate::error::{Error, Result};
use crate::nominal::NominalModel;
use crate::worstcase::DivergenceKind;

/// Maximum truncated tail mass tolerated by [`discretize`].
pub const COVERAGE_LIMIT: f64 = 1e-6;

/// Minimum number of grid cells.
pub const MIN_CELLS: usize = 50;

/// A probability distribution on a finite grid of cell centers.
#[derive(Clone, Debug)]
pub struct GridDistribution {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl GridDistribution {
    /// Build a grid distribution from cell centers and weights. Weights must
    /// be nonnegative and sum to one within `1e-9`; they are renormalized to
    /// machine precision.
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.len() != ps.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} weights",
                xs.len(),
                ps.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidInput(
                "grid distribution needs at least two points".into(),
            ));
        }
        for pair in xs.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidInput(
                    "grid points must be strictly increasing and finite".into(),
                ));
            }
        }
        let mut total = 0.0;
        for &p in &ps {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "grid weights must be finite and >= 0, got {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "grid weights sum to {total}, expected 1 within 1e-9"
            )));
        }
        let mut ps = ps;
        for p in &mut ps {
            *p /= total;
        }
        Ok(Self { xs, ps })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.xs.iter().zip(&self.ps).map(|(x, p)| x * p).sum()
    }
}

/// Discretize a nominal model onto `n` uniform cells over `[0, x_max]`,
/// using cell centers as support points and exact CDF increments as weights.
///
/// `x_max` defaults to the `1 - 1e-9` quantile. If the nominal leaves more
/// than [`COVERAGE_LIMIT`] of mass beyond `x_max` the call fails rather than
/// silently biasing the grid.
pub fn discretize(nominal: &NominalModel, n: usize, x_max: Option<f64>) -> Result<GridDistribution> {
    if n < MIN_CELLS {
        return Err(Error::InvalidInput(format!(
            "grid needs at least {MIN_CELLS} cells, got {n}"
        )));
    }
    let x_max = match x_max {
        Some(v) => {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "x_max must be positive and finite, got {v}"
                )));
            }
            v
        }
        None => nominal.upper_quantile(1e-9),
    };
    let truncated = (1.0 - nominal.cdf(x_max)).max(0.0);
    if truncated > COVERAGE_LIMIT {
        return Err(Error::InsufficientCoverage {
            truncated,
            limit: COVERAGE_LIMIT,
        });
    }
    let h = x_max / n as f64;
    let mut xs = Vec::with_capacity(n);
    let mut ps = Vec::with_capacity(n);
    let mut total = 0.0;
    let mut cdf_lo = nominal.cdf(0.0);
    for i in 0..n {
        let hi = if i + 1 == n { x_max } else { h * (i + 1) as f64 };
        let cdf_hi = nominal.cdf(hi);
        let mass = (cdf_hi - cdf_lo).max(0.0);
        xs.push(h * (i as f64 + 0.5));
        ps.push(mass);
        total += mass;
        cdf_lo = cdf_hi;
    }
    if !(total > 0.0) {
        return Err(Error::InvalidInput(
            "nominal model has no mass on the requested grid".into(),
        ));
    }
    for p in &mut ps {
        *p /= total;
    }
    Ok(GridDistribution { xs, ps })
}

/// Divergence between two distributions on the same grid. The first
/// argument plays the role of the nominal: `ForwardKl` computes
/// `D(p || q)`, `ReverseKl` computes `D(q || p)`, and `Symmetrized` the
/// average of the two. Support violations yield `+∞` rather than an error.
pub fn divergence(p: &GridDistribution, q: &GridDistribution, kind: DivergenceKind) -> Result<f64> {
    if p.xs.len() != q.xs.len() || p.xs.iter().zip(&q.xs).any(|(a, b)| a != b) {
        return Err(Error::GridMismatch(
            "divergence requires both distributions on the identical grid".into(),
        ));
    }
    let fwd = || kl_sum(&p.ps, &q.ps);
    let rev = || kl_sum(&q.ps, &p.ps);
    Ok(match kind {
        DivergenceKind::ForwardKl => fwd(),
        DivergenceKind::ReverseKl => rev(),
        DivergenceKind::Symmetrized => {
            let (a, b) = (fwd(), rev());
            if a.is_infinite() || b.is_infinite() {
                f64::INFINITY
            } else {
                0.5 * (a + b)
            }
        }
    })
}

/// `Σ a_i ln(a_i / b_i)` with the conventions `0 ln 0 = 0` and
/// `a > 0, b = 0` ⇒ `+∞`.
fn kl_sum(a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&ai, &bi) in a.iter().zip(b) {
        if ai == 0.0 {
            continue;
        }
        if bi == 0.0 {
            return f64::INFINITY;
        }
        total += ai * (ai / bi).ln();
    }
    total
}

/// Result of the discrete barrier solve, with the optimality diagnostics
/// needed to trust it as a cross-check.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    /// Worst-case distribution on the input grid.
    pub worst: GridDistribution,
    /// Its mean `Σ x_i p_i`.
    pub worst_mean: f64,
    /// Total inner Newton iterations across all barrier rounds.
    pub iterations: usize,
    /// Number of barrier parameter increases.
    pub barrier_rounds: usize,
    /// Final duality-gap bound `(n + 1) / t`, in the units of the mean.
    pub duality_gap: f64,
    /// `|Σ p_i - 1|` at the returned point.
    pub simplex_residual: f64,
    /// Divergence of the returned point from the nominal.
    pub achieved_divergence: f64,
    /// Mass-weighted stationarity residual
    /// `max_i p_i |x_i + θ ∂Div_i - σ_i + ν|` of the original problem's
    /// Lagrangian, with `σ_i = 1/(t p_i)` from the barrier and the
    /// multipliers `θ ≥ 0`, `ν` fitted by mass-weighted least squares.
    pub stationarity: f64,
    /// `max_i σ_i p_i`, the complementarity level `1/t`.
    pub complementarity: f64,
}

struct DivergenceTerms {
    value: f64,
    grad: Vec<f64>,
    hess_diag: Vec<f64>,
}

/// Neumaier-compensated accumulator. The ball slack `d - value` shrinks to
/// ~1/t at convergence; a naive sum's rounding error grows with the cell
/// count and would swamp that slack on fine grids, so the divergence value
/// is accumulated with compensation to keep its error near one ulp of the
/// total.
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn new() -> Self {
        Self { sum: 0.0, compensation: 0.0 }
    }

    fn add(&mut self, term: f64) {
        let new_sum = self.sum + term;
        self.compensation += if self.sum.abs() >= term.abs() {
            (self.sum - new_sum) + term
        } else {
            (term - new_sum) + self.sum
        };
        self.sum = new_sum;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn divergence_terms(kind: DivergenceKind, p0: &[f64], p: &[f64]) -> DivergenceTerms {
    let n = p.len();
    let mut value = CompensatedSum::new();
    let mut grad = vec![0.0; n];
    let mut hess_diag = vec![0.0; n];
    match kind {
        DivergenceKind::ForwardKl => {
            for i in 0..n {
                if p0[i] > 0.0 {
                    value.add(p0[i] * (p0[i] / p[i]).ln());
                    grad[i] = -p0[i] / p[i];
                    hess_diag[i] = p0[i] / (p[i] * p[i]);
                }
            }
        }
        DivergenceKind::ReverseKl => {
            for i in 0..n {
                value.add(p[i] * (p[i] / p0[i]).ln());
                grad[i] = (p[i] / p0[i]).ln() + 1.0;
                hess_diag[i] = 1.0 / p[i];
            }
        }
        DivergenceKind::Symmetrized => {
            for i in 0..n {
                let fwd = p0[i] * (p0[i] / p[i]).ln();
                let rev = p[i] * (p[i] / p0[i]).ln();
                value.add(0.5 * (fwd + rev));
                grad[i] = 0.5 * (-p0[i] / p[i] + (p[i] / p0[i]).ln() + 1.0);
                hess_diag[i] = 0.5 * (p0[i] / (p[i] * p[i]) + 1.0 / p[i]);
            }
        }
    }
    DivergenceTerms { value: value.value(), grad, hess_diag }
}

/// Change of the barrier objective, `φ(p + step·dp) - φ(p)`, computed
/// term-by-term as a difference so that it stays accurate when `t` is huge
/// and the absolute barrier value would drown the decrease in rounding
/// noise. Returns `None` when the trial point leaves the interior.
fn barrier_delta(
    t: f64,
    xs: &[f64],
    kind: DivergenceKind,
    p0: &[f64],
    p: &[f64],
    dp: &[f64],
    step: f64,
    slack: f64,
) -> Option<f64> {
    let n = p.len();
    let mut linear = 0.0;
    let mut log_terms = 0.0;
    let mut ddiv = 0.0;
    for i in 0..n {
        let move_i = step * dp[i];
        let u = move_i / p[i];
        if u <= -1.0 {
            return None;
        }
        linear += xs[i] * move_i;
        let ln1pu = u.ln_1p();
        log_terms -= ln1pu;
        // Divergence change per cell, also in difference form:
        // forward:  p0 (ln(p0/b) - ln(p0/a)) = -p0 ln(1+u)
        // reverse:  b ln(b/p0) - a ln(a/p0) = (b-a) ln(a/p0) + b ln(1+u)
        match kind {
            DivergenceKind::ForwardKl => {
                if p0[i] > 0.0 {
                    ddiv -= p0[i] * ln1pu;
                }
            }
            DivergenceKind::ReverseKl => {
                ddiv += move_i * (p[i] / p0[i]).ln() + (p[i] + move_i) * ln1pu;
            }
            DivergenceKind::Symmetrized => {
                ddiv += 0.5
                    * (-p0[i] * ln1pu
                        + move_i * (p[i] / p0[i]).ln()
                        + (p[i] + move_i) * ln1pu);
            }
        }
    }
    if !(slack - ddiv > 0.0) {
        return None;
    }
    // -ln(slack - ddiv) + ln(slack) = -ln(1 - ddiv/slack)
    Some(t * linear + log_terms - (-ddiv / slack).ln_1p())
}

const TOTAL_ITERATION_BUDGET: usize = 200_000;
const DECREMENT_STOP: f64 = 1e-12;
const BARRIER_MULTIPLIER: f64 = 5.0;
const FRACTION_TO_BOUNDARY: f64 = 0.99;

/// Solve the discrete worst-case problem: minimize the grid mean over
/// distributions within divergence `d` of `nominal` under `kind`.
///
/// `tol` is the relative duality-gap target (relative to the nominal mean);
/// `1e-7` is a good default. The returned diagnostics certify the solution:
/// the simplex residual is at machine precision, the achieved divergence is
/// within the ball, and the weighted stationarity residual is small. On
/// fine grids the ball constraint can become active to the last ulp of the
/// divergence sum before the gap target is met; the solve then stops at
/// that boundary iterate and the diagnostics report what was achieved.
pub fn solve_discrete(
    nominal: &GridDistribution,
    kind: DivergenceKind,
    d: f64,
    tol: f64,
) -> Result<DiscreteSolution> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidInput(format!(
            "divergence radius must be finite and >= 0, got {d}"
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = nominal.len();
    let xs = &nominal.xs;
    let p0 = &nominal.ps;
    if kind != DivergenceKind::ForwardKl && p0.iter().any(|&p| p == 0.0) {
        return Err(Error::InvalidInput(format!(
            "nominal grid has empty cells; the {} divergence of any interior \
             candidate is infinite — tighten x_max or use a finer model",
            kind.as_str()
        )));
    }

    let scale = nominal.mean();
    if d == 0.0 {
        return Ok(DiscreteSolution {
            worst: nominal.clone(),
            worst_mean: scale,
            iterations: 0,
            barrier_rounds: 0,
            duality_gap: 0.0,
            simplex_residual: (nominal.ps.iter().sum::<f64>() - 1.0).abs(),
            achieved_divergence: 0.0,
            stationarity: 0.0,
            complementarity: 0.0,
        });
    }

    let mut p = p0.clone();
    if p.iter().any(|&q| q == 0.0) {
        // Only reachable for forward KL. Blend toward uniform so the start
        // is strictly interior; the forward divergence of the blend is at
        // most -ln(1 - eps) < d.
        let eps = (0.5 * d).min(1e-3);
        let fill = eps / n as f64;
        for (pi, &qi) in p.iter_mut().zip(p0) {
            *pi = (1.0 - eps) * qi + fill;
        }
    }
    let mut t = (n as f64 / scale).max(1.0);
    let mut total_iterations = 0usize;
    let mut rounds = 0usize;
    let mut boundary_contact = false;

    loop {
        rounds += 1;
        // Center at the current barrier parameter.
        loop {
            if total_iterations >= TOTAL_ITERATION_BUDGET {
                return Err(Error::NonConvergence {
                    context: format!(
                        "discrete barrier solve ({} d={d} n={n})",
                        kind.as_str()
                    ),
                    iterations: total_iterations,
                    residual: (n as f64 + 1.0) / (t * scale),
                });
            }
            total_iterations += 1;

            let terms = divergence_terms(kind, p0, &p);
            let slack = d - terms.value;
            if !(slack > 0.0) {
                // Every accepted step kept the interior in exact difference
                // arithmetic, so a non-positive readback means the ball
                // constraint is active to the last ulp of the divergence
                // sum. No closer centering is representable in doubles;
                // stop with the current iterate and let the diagnostics
                // certify it.
                boundary_contact = true;
                break;
            }

            // Gradient and diagonal of the Hessian of the barrier objective;
            // the full Hessian is D + u uᵀ with u = ∇Div / slack.
            let mut grad = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut u = vec![0.0; n];
            for i in 0..n {
                grad[i] = t * xs[i] - 1.0 / p[i] + terms.grad[i] / slack;
                diag[i] = 1.0 / (p[i] * p[i]) + terms.hess_diag[i] / slack;
                u[i] = terms.grad[i] / slack;
            }

            // Solve [H 1; 1ᵀ 0] [dp; ν] = [-grad; 0] with H = D + u uᵀ via
            // Sherman–Morrison: H⁻¹ v = D⁻¹ v - D⁻¹ u (uᵀ D⁻¹ v) / (1 + uᵀ D⁻¹ u).
            let mut udu = 0.0;
            for i in 0..n {
                udu += u[i] * u[i] / diag[i];
            }
            let denom = 1.0 + udu;
            let hinv = |v: &[f64], out: &mut [f64]| {
                let mut udv = 0.0;
                for i in 0..n {
                    udv += u[i] * v[i] / diag[i];
                }
                let factor = udv / denom;
                for i in 0..n {
                    out[i] = (v[i] - u[i] * factor) / diag[i];
                }
            };
            let mut hinv_grad = vec![0.0; n];
            hinv(&grad, &mut hinv_grad);
            let ones = vec![1.0; n];
            let mut hinv_one = vec![0.0; n];
            hinv(&ones, &mut hinv_one);
            let sum_hinv_grad: f64 = hinv_grad.iter().sum();
            let sum_hinv_one: f64 = hinv_one.iter().sum();
            if !(sum_hinv_one > 0.0) || !sum_hinv_grad.is_finite() {
                return Err(Error::NonConvergence {
                    context: format!("degenerate barrier system ({} d={d})", kind.as_str()),
                    iterations: total_iterations,
                    residual: f64::NAN,
                });
            }
            let nu = -sum_hinv_grad / sum_hinv_one;
            let mut dp = vec![0.0; n];
            let mut lambda2 = 0.0;
            for i in 0..n {
                dp[i] = -(hinv_grad[i] + nu * hinv_one[i]);
                lambda2 -= (grad[i] + nu) * dp[i];
            }
            let lambda2 = lambda2.max(0.0);
            if !lambda2.is_finite() {
                return Err(Error::NonConvergence {
                    context: format!("barrier decrement overflow ({} d={d})", kind.as_str()),
                    iterations: total_iterations,
                    residual: f64::NAN,
                });
            }
            if 0.5 * lambda2 <= DECREMENT_STOP {
                break;
            }
            let lambda = lambda2.sqrt();

            // Fraction-to-boundary cap on positivity.
            let mut step = if lambda > 0.25 { 1.0 / (1.0 + lambda) } else { 1.0 };
            for i in 0..n {
                if dp[i] < 0.0 {
                    let cap = FRACTION_TO_BOUNDARY * p[i] / (-dp[i]);
                    if cap < step {
                        step = cap;
                    }
                }
            }
            // Fraction-to-boundary cap on the ball slack too: the p_i caps
            // keep the iterate positive, but without this a damped step can
            // slam the divergence into the boundary and leave the next
            // readback of the slack under the sum's rounding noise.
            let toward_boundary: f64 = terms.grad.iter().zip(&dp).map(|(g, v)| g * v).sum();
            if toward_boundary > 0.0 {
                let cap = FRACTION_TO_BOUNDARY * slack / toward_boundary;
                if cap < step {
                    step = cap;
                }
            }

            let mut accepted = false;
            if lambda > 0.25 {
                // Damped phase: require an Armijo decrease of the barrier.
                for _ in 0..40 {
                    if let Some(delta) = barrier_delta(t, xs, kind, p0, &p, &dp, step, slack) {
                        if delta <= -1e-4 * step * lambda2 {
                            accepted = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
            } else {
                // Quadratic-convergence phase: the full (capped) step provably
                // decreases the barrier, so skip the sufficient-decrease test
                // and only guard interiority.
                for _ in 0..8 {
                    if barrier_delta(t, xs, kind, p0, &p, &dp, step, slack).is_some() {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
            }
            if !accepted {
                // Line search exhausted — the iterate is as centered as
                // float arithmetic allows at this t.
                break;
            }
            for i in 0..n {
                p[i] += step * dp[i];
            }
        }

        let gap = (n as f64 + 1.0) / t;
        if boundary_contact || gap <= tol * scale {
            break;
        }
        t *= BARRIER_MULTIPLIER;
    }

    // Optimality diagnostics at the final iterate. The bound multipliers are
    // the barrier values σ_i = 1/(t p_i); the divergence and simplex
    // multipliers (θ, ν) are fitted by mass-weighted least squares. (The
    // barrier estimate θ = 1/(t·slack) loses several digits to cancellation
    // in `slack` once t is large, and the Newton decrement is nearly blind
    // to residual components along ∇Div when the constraint is this tight,
    // so the fitted multipliers give the honest distance to a KKT point —
    // KKT only asks that *some* θ ≥ 0, ν work.)
    let terms = divergence_terms(kind, p0, &p);
    let slack = d - terms.value;
    let (mut sw, mut swg, mut swc) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let w = p[i] * p[i];
        sw += w;
        swg += w * terms.grad[i];
        swc += w * (xs[i] - 1.0 / (t * p[i]));
    }
    let (gbar, cbar) = (swg / sw, swc / sw);
    let (mut var_g, mut cov_gc) = (0.0, 0.0);
    for i in 0..n {
        let w = p[i] * p[i];
        let dg = terms.grad[i] - gbar;
        var_g += w * dg * dg;
        cov_gc += w * dg * (xs[i] - 1.0 / (t * p[i]) - cbar);
    }
    let mut theta = if var_g > 0.0 { -cov_gc / var_g } else { 1.0 / (t * slack) };
    if !(theta >= 0.0) {
        theta = 0.0;
    }
    let nu_hat = -cbar - theta * gbar;
    let mut stationarity = 0.0f64;
    let mut complementarity = 0.0f64;
    for i in 0..n {
        let sigma = 1.0 / (t * p[i]);
        let r = xs[i] + theta * terms.grad[i] - sigma + nu_hat;
        stationarity = stationarity.max((r * p[i]).abs());
        complementarity = complementarity.max(sigma * p[i]);
    }
    let worst_mean = xs.iter().zip(&p).map(|(x, pi)| x * pi).sum();
    let simplex_residual = (p.iter().sum::<f64>() - 1.0).abs();
    Ok(DiscreteSolution {
        worst: GridDistribution { xs: xs.clone(), ps: p },
        worst_mean,
        iterations: total_iterations,
        barrier_rounds: rounds,
        duality_gap: (n as f64 + 1.0) / t,
        simplex_residual,
        achieved_divergence: terms.value,
        stationarity,
        complementarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nominal::NominalModel;
    use crate::numerics::test_support::assert_close;
    use crate::worstcase::{DivergenceKind, ReverseMode, UncertaintySet};

    fn exp_grid(n: usize) -> GridDistribution {
        discretize(&NominalModel::exponential(1.0).unwrap(), n, Some(20.0)).unwrap()
    }

    #[test]
    fn discretize_uniform_center_convention() {
        // Cell centers of a symmetric grid put the mean at x_max / 2.
        let grid = discretize(&NominalModel::uniform(2.0).unwrap(), 50, None).unwrap();
        assert!((grid.mean() - 1.0).abs() <= 1e-6);
        assert_close(grid.ps().iter().sum::<f64>(), 1.0, 1e-14);
        assert_eq!(grid.len(), 50);
    }

    #[test]
    fn discretize_guards() {
        let exp = NominalModel::exponential(1.0).unwrap();
        assert!(matches!(
            discretize(&exp, 10, Some(20.0)),
            Err(Error::InvalidInput(_))
        ));
        // x_max = 5 leaves e^-5 ≈ 6.7e-3 of mass outside: rejected.
        assert!(matches!(
            discretize(&exp, 100, Some(5.0)),
            Err(Error::InsufficientCoverage { .. })
        ));
        // The automatic quantile always satisfies the coverage test.
        let grid = discretize(&exp, 100, None).unwrap();
        assert!(grid.xs().last().unwrap() > &18.0);
    }

    #[test]
    fn divergence_reference_values() {
        let xs = vec![0.5, 1.5, 2.5, 3.5];
        let p = GridDistribution::new(xs.clone(), vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let q = GridDistribution::new(xs.clone(), vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let fwd = divergence(&p, &q, DivergenceKind::ForwardKl).unwrap();
        // Σ p ln(p/q) = 0.4 ln 1.6 + 0.3 ln 1.2 + 0.2 ln 0.8 + 0.1 ln 0.4
        let expect = 0.4 * (1.6f64).ln() + 0.3 * (1.2f64).ln() + 0.2 * (0.8f64).ln()
            + 0.1 * (0.4f64).ln();
        assert_close(fwd, expect, 1e-15);
        let rev = divergence(&p, &q, DivergenceKind::ReverseKl).unwrap();
        let expect_rev = 0.25 * ((0.25f64 / 0.4).ln() + (0.25f64 / 0.3).ln()
            + (0.25f64 / 0.2).ln() + (0.25f64 / 0.1).ln());
        assert_close(rev, expect_rev, 1e-15);
        let sym = divergence(&p, &q, DivergenceKind::Symmetrized).unwrap();
        assert_close(sym, 0.5 * (fwd + rev), 1e-15);
        assert_eq!(divergence(&p, &p, DivergenceKind::Symmetrized).unwrap(), 0.0);
    }

    #[test]
    fn divergence_support_and_grid_signals() {
        let xs = vec![1.0, 2.0, 3.0];
        let p = GridDistribution::new(xs.clone(), vec![0.5, 0.5, 0.0]).unwrap();
        let q = GridDistribution::new(xs.clone(), vec![0.25, 0.25, 0.5]).unwrap();
        // q has mass where p doesn't: D(q||p) = ∞, D(p||q) finite.
        assert!(divergence(&p, &q, DivergenceKind::ForwardKl).unwrap().is_finite());
        assert!(divergence(&p, &q, DivergenceKind::ReverseKl)
            .unwrap()
            .is_infinite());
        assert!(divergence(&p, &q, DivergenceKind::Symmetrized)
            .unwrap()
            .is_infinite());
        let other = GridDistribution::new(vec![1.0, 2.0, 3.5], vec![0.3, 0.3, 0.4]).unwrap();
        assert!(matches!(
            divergence(&p, &other, DivergenceKind::ForwardKl),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn zero_radius_returns_nominal() {
        let grid = exp_grid(200);
        let sol = solve_discrete(&grid, DivergenceKind::ReverseKl, 0.0, 1e-7).unwrap();
        assert_close(sol.worst_mean, grid.mean(), 1e-15);
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.achieved_divergence, 0.0);
    }

    #[test]
    fn rejects_empty_cells_for_reverse_and_symmetrized() {
        // Uniform(2) truncated at 4 has empty upper cells.
        let grid = discretize(&NominalModel::uniform(2.0).unwrap(), 100, Some(4.0)).unwrap();
        assert!(grid.ps().iter().any(|&p| p == 0.0));
        assert!(solve_discrete(&grid, DivergenceKind::ReverseKl, 0.1, 1e-7).is_err());
        assert!(solve_discrete(&grid, DivergenceKind::Symmetrized, 0.1, 1e-7).is_err());
        // Forward stays well defined: the candidate may vanish there anyway.
        let sol = solve_discrete(&grid, DivergenceKind::ForwardKl, 0.1, 1e-7).unwrap();
        assert!(sol.worst_mean < grid.mean());
    }

    fn check_invariants(sol: &DiscreteSolution, d: f64) {
        assert!(sol.simplex_residual <= 1e-10, "simplex {}", sol.simplex_residual);
        assert!(
            sol.achieved_divergence <= d + 1e-8,
            "divergence {} vs {}",
            sol.achieved_divergence,
            d
        );
        assert!(sol.stationarity <= 1e-6, "stationarity {}", sol.stationarity);
        assert!(sol.complementarity <= 1e-6, "complementarity {}", sol.complementarity);
    }

    #[test]
    fn matches_continuous_forward() {
        let grid = exp_grid(2000);
        let nominal = NominalModel::exponential(1.0).unwrap();
        for &d in &[0.05, 0.5] {
            let sol = solve_discrete(&grid, DivergenceKind::ForwardKl, d, 1e-7).unwrap();
            check_invariants(&sol, d);
            let exact = UncertaintySet::new(nominal.clone(), DivergenceKind::ForwardKl, d)
                .unwrap()
                .solve(ReverseMode::Kkt)
                .unwrap();
            let rel = (sol.worst_mean - exact.mean()).abs() / exact.mean();
            assert!(rel <= 5e-3, "forward d={d}: rel gap {rel}");
        }
    }

    #[test]
    fn matches_continuous_reverse() {
        let grid = exp_grid(2000);
        let nominal = NominalModel::exponential(1.0).unwrap();
        for &d in &[0.1, 1.0] {
            let sol = solve_discrete(&grid, DivergenceKind::ReverseKl, d, 1e-7).unwrap();
            check_invariants(&sol, d);
            let exact = UncertaintySet::new(nominal.clone(), DivergenceKind::ReverseKl, d)
                .unwrap()
                .solve(ReverseMode::Kkt)
                .unwrap();
            let rel = (sol.worst_mean - exact.mean()).abs() / exact.mean();
            assert!(rel <= 5e-3, "reverse d={d}: rel gap {rel}");
        }
    }

    #[test]
    fn matches_continuous_symmetrized() {
        let grid = exp_grid(2000);
        let nominal = NominalModel::exponential(1.0).unwrap();
        let d = 0.2;
        let sol = solve_discrete(&grid, DivergenceKind::Symmetrized, d, 1e-7).unwrap();
        check_invariants(&sol, d);
        let exact = UncertaintySet::new(nominal.clone(), DivergenceKind::Symmetrized, d)
            .unwrap()
            .solve(ReverseMode::Kkt)
            .unwrap();
        let rel = (sol.worst_mean - exact.mean()).abs() / exact.mean();
        assert!(rel <= 5e-3, "symmetrized d={d}: rel gap {rel}");
    }

    #[test]
    fn refinement_reduces_discretization_error() {
        // Successive grid refinements should be (at least weakly) Cauchy.
        let d = 0.2;
        let mut means = Vec::new();
        for &n in &[1000usize, 2000, 4000] {
            let grid = exp_grid(n);
            let sol = solve_discrete(&grid, DivergenceKind::ForwardKl, d, 1e-7).unwrap();
            means.push(sol.worst_mean);
        }
        let coarse_jump = (means[1] - means[0]).abs();
        let fine_jump = (means[2] - means[1]).abs();
        assert!(
            fine_jump <= coarse_jump,
            "refinement not contracting: {coarse_jump} then {fine_jump}"
        );
    }

    #[test]
    fn constraint_is_active_for_positive_radius() {
        let grid = exp_grid(500);
        for kind in DivergenceKind::ALL {
            let d = 0.3;
            let sol = solve_discrete(&grid, kind, d, 1e-7).unwrap();
            assert!(
                sol.achieved_divergence > 0.9 * d,
                "{}: constraint slack too large ({})",
                kind.as_str(),
                sol.achieved_divergence
            );
            assert!(sol.worst_mean < grid.mean());
        }
    }
}
