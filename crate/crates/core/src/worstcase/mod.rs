//! Worst-case distributions over KL uncertainty balls.
//!
//! Given a nominal density `f0` on `[0, ∞)` and a radius `d`, each solver
//! finds the distribution minimizing the mean over one of three balls:
//!
//! * forward KL: `{ f : D(f0 ‖ f) <= d }`, minimizer `f0(x) / (q (x + mu))`;
//! * reverse KL: `{ f : D(f ‖ f0) <= d }`, minimizer `e^{-x/s} f0(x) / psi1(s)`;
//! * symmetrized: `{ f : (D(f0‖f) + D(f‖f0))/2 <= d }`, minimizer
//!   `f0(x) / omega(2 (x + mu) / s)` with `omega` the Wright omega function.
//!
//! For `d > 0` the divergence constraint is active at the optimum
//! (complementary slackness), so each solver works directly on the boundary.

mod forward;
mod reverse;
mod symmetrized;

pub use forward::{solve_forward_kl, solve_forward_kl_generic};
pub use reverse::solve_reverse_kl;
pub use symmetrized::solve_symmetrized;

use crate::error::{Error, Result};
use crate::nominal::NominalModel;
use crate::numerics::{self, integrate, Support};

/// Which divergence defines the uncertainty ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivergenceKind {
    /// `D(f0 ‖ f) <= d`: the nominal is the first argument.
    ForwardKl,
    /// `D(f ‖ f0) <= d`: the candidate is the first argument.
    ReverseKl,
    /// Jeffreys-style average `(D(f0‖f) + D(f‖f0)) / 2 <= d`.
    Symmetrized,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 3] =
        [DivergenceKind::ForwardKl, DivergenceKind::ReverseKl, DivergenceKind::Symmetrized];

    pub fn as_str(&self) -> &'static str {
        match self {
            DivergenceKind::ForwardKl => "forward-kl",
            DivergenceKind::ReverseKl => "reverse-kl",
            DivergenceKind::Symmetrized => "symmetrized",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "forward-kl" => Ok(DivergenceKind::ForwardKl),
            "reverse-kl" => Ok(DivergenceKind::ReverseKl),
            "symmetrized" => Ok(DivergenceKind::Symmetrized),
            other => Err(Error::InvalidInput(format!(
                "unknown divergence kind '{other}' (expected forward-kl, reverse-kl, or symmetrized)"
            ))),
        }
    }
}

/// Solution strategy for the reverse-KL ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReverseMode {
    /// Solve the exact boundary condition `D(f ‖ f0) = d` for the tilt scale.
    Kkt,
    /// Exponential nominals only: solve `s ln(Z/rate) - 1/Z = d` for its
    /// larger root, clamping to the stationary point of the left-hand side
    /// once the radius exceeds its peak value.
    PaperExact,
}

impl ReverseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReverseMode::Kkt => "kkt",
            ReverseMode::PaperExact => "paper-exact",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "kkt" => Ok(ReverseMode::Kkt),
            "paper-exact" => Ok(ReverseMode::PaperExact),
            other => Err(Error::InvalidInput(format!(
                "unknown reverse mode '{other}' (expected kkt or paper-exact)"
            ))),
        }
    }
}

/// An uncertainty ball: nominal distribution, divergence kind, and radius.
#[derive(Clone, Debug)]
pub struct UncertaintySet {
    pub nominal: NominalModel,
    pub kind: DivergenceKind,
    pub d: f64,
}

impl UncertaintySet {
    pub fn new(nominal: NominalModel, kind: DivergenceKind, d: f64) -> Result<Self> {
        validate_radius(d)?;
        Ok(UncertaintySet { nominal, kind, d })
    }

    /// Solve for the worst-case distribution of this ball. `mode` only
    /// affects the reverse-KL kind.
    pub fn solve(&self, mode: ReverseMode) -> Result<WorstCaseSolution> {
        match self.kind {
            DivergenceKind::ForwardKl => solve_forward_kl(&self.nominal, self.d),
            DivergenceKind::ReverseKl => solve_reverse_kl(&self.nominal, self.d, mode),
            DivergenceKind::Symmetrized => solve_symmetrized(&self.nominal, self.d),
        }
    }
}

pub(crate) fn validate_radius(d: f64) -> Result<()> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidInput(format!(
            "divergence radius must be finite and >= 0, got {d}"
        )));
    }
    Ok(())
}

/// Solver diagnostics attached to every solution.
#[derive(Clone, Copy, Debug)]
pub struct Diagnostics {
    /// `|∫ pdf - 1|` of the returned worst-case density, by quadrature.
    pub normalization_residual: f64,
    /// Distance of the achieved constraint value from the radius `d`. For
    /// `paper-exact` this is the residual of its defining scalar equation;
    /// for every other solver it is `|divergence(worst, nominal) - d|`.
    pub divergence_residual: f64,
    /// Iterations used by the underlying root / system solver.
    pub iterations: usize,
}

/// Parametric form of the worst-case density.
#[derive(Clone, Debug)]
pub(crate) enum Family {
    /// Radius zero: the nominal itself.
    Nominal,
    /// `f0(x) / (q (x + mu))` for an exponential nominal; `ln_mu` is kept in
    /// log form because large radii push `mu` below the underflow threshold.
    ForwardExp { rate: f64, ln_mu: f64, q: f64 },
    /// `f0(x) / (q (x + mu))` with `q` from quadrature; `ln_mu` kept exactly
    /// for the same reason as the exponential variant.
    ForwardGeneric { mu: f64, ln_mu: f64, q: f64 },
    /// Exponential tilt of an exponential nominal: `Exp(z)`.
    ReverseExp { z: f64 },
    /// `e^{-x/s} f0(x) / psi1`.
    ReverseGeneric { s: f64, psi1: f64 },
    /// `f0(x) / omega(2 (x + mu) / s)`.
    Symmetrized { s: f64, mu: f64 },
}

/// A solved worst-case distribution with evaluation methods.
#[derive(Clone, Debug)]
pub struct WorstCaseSolution {
    kind: DivergenceKind,
    d: f64,
    nominal: NominalModel,
    family: Family,
    mean: f64,
    mu_star: Option<f64>,
    s_star: Option<f64>,
    mode: Option<ReverseMode>,
    diagnostics: Diagnostics,
}

impl WorstCaseSolution {
    pub(crate) fn new(
        kind: DivergenceKind,
        d: f64,
        nominal: NominalModel,
        family: Family,
        mean: f64,
        mu_star: Option<f64>,
        s_star: Option<f64>,
        mode: Option<ReverseMode>,
        diagnostics: Diagnostics,
    ) -> Self {
        WorstCaseSolution { kind, d, nominal, family, mean, mu_star, s_star, mode, diagnostics }
    }

    pub(crate) fn at_nominal(
        kind: DivergenceKind,
        nominal: &NominalModel,
        mode: Option<ReverseMode>,
    ) -> Self {
        WorstCaseSolution {
            kind,
            d: 0.0,
            nominal: nominal.clone(),
            family: Family::Nominal,
            mean: nominal.mean(),
            mu_star: None,
            s_star: None,
            mode,
            diagnostics: Diagnostics {
                normalization_residual: 0.0,
                divergence_residual: 0.0,
                iterations: 0,
            },
        }
    }

    /// Worst-case (minimum) expected value over the ball.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Shift parameter of the forward/symmetrized families, when present.
    pub fn mu_star(&self) -> Option<f64> {
        self.mu_star
    }

    /// Scale parameter of the reverse/symmetrized families, when present.
    pub fn s_star(&self) -> Option<f64> {
        self.s_star
    }

    /// The divergence kind this solution was computed for.
    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    /// Ball radius the solution was computed for.
    pub fn radius(&self) -> f64 {
        self.d
    }

    /// Reverse-KL solution mode, when applicable.
    pub fn mode(&self) -> Option<ReverseMode> {
        self.mode
    }

    /// Nominal model the ball is centered on.
    pub fn nominal(&self) -> &NominalModel {
        &self.nominal
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Worst-case density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Nominal => self.nominal.pdf(x),
            Family::ForwardExp { rate, ln_mu, q } => {
                let f0 = rate * (-rate * x).exp();
                f0 / (q * (x + ln_mu.exp()))
            }
            Family::ForwardGeneric { mu, q, .. } => self.nominal.pdf(x) / (q * (x + mu)),
            Family::ReverseExp { z } => z * (-z * x).exp(),
            Family::ReverseGeneric { s, psi1 } => self.nominal.pdf(x) * (-x / s).exp() / psi1,
            Family::Symmetrized { s, mu } => {
                let u = numerics::wright_omega_ln(2.0 * (x + mu) / s).unwrap_or(f64::NAN);
                self.nominal.pdf(x) * (-u).exp()
            }
        }
    }

    /// Worst-case cumulative distribution function at `x`.
    ///
    /// Closed form for the exponential fast paths, quadrature of the density
    /// otherwise (whence the `Result`).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() && x != f64::INFINITY {
            return Err(Error::InvalidInput(format!("cdf argument must not be NaN, got {x}")));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        let value = match &self.family {
            Family::Nominal => self.nominal.cdf(x),
            Family::ForwardExp { rate, ln_mu, q: _ } => {
                // F(x) = 1 - e^{-rate x} e1s(rate (x+mu)) / e1s(rate mu),
                // where e1s(t) = e^t E1(t) is decreasing, so F dominates the
                // nominal CDF identically in floating point as well.
                let denom = numerics::exp_integral_e1_scaled_ln_arg(rate.ln() + ln_mu)?;
                let num =
                    numerics::exp_integral_e1_scaled(rate * x + (rate.ln() + ln_mu).exp())?;
                1.0 - (-rate * x).exp() * (num / denom)
            }
            Family::ForwardGeneric { mu, ln_mu, q } => {
                forward_mass(&self.nominal, *mu, *ln_mu, Some(x))? / q
            }
            Family::ReverseExp { z } => -(-z * x).exp_m1(),
            Family::ReverseGeneric { s, psi1 } => {
                let s = *s;
                let hi = self.nominal.support_upper().map_or(x, |u| u.min(x));
                integrate_density(
                    |t| self.nominal.pdf(t) * (-t / s).exp(),
                    self.family_scale(),
                    Some(hi),
                    1e-11,
                )? / psi1
            }
            Family::Symmetrized { s, mu } => {
                let (s, mu) = (*s, *mu);
                let hi = self.nominal.support_upper().map_or(x, |u| u.min(x));
                integrate_density(
                    |t| {
                        let u = numerics::wright_omega_ln(2.0 * (t + mu) / s)
                            .unwrap_or(f64::INFINITY);
                        self.nominal.pdf(t) * (-u).exp()
                    },
                    self.family_scale(),
                    Some(hi),
                    1e-11,
                )?
            }
        };
        Ok(value.clamp(0.0, 1.0))
    }

    /// Worst-case probability that the harvested energy falls below
    /// `threshold`; identical to [`Self::cdf`] at the threshold.
    pub fn energy_outage(&self, threshold: f64) -> Result<f64> {
        self.cdf(threshold)
    }

    /// Decay scale of the worst-case density, used to anchor quadrature
    /// splits: at large radii the tilted families concentrate so close to
    /// zero that a panel rule spanning the whole support would not place a
    /// single node inside the bulk of the mass.
    fn family_scale(&self) -> Option<f64> {
        match &self.family {
            Family::Nominal | Family::ForwardExp { .. } | Family::ForwardGeneric { .. } => None,
            Family::ReverseExp { z } => Some(40.0 / z),
            Family::ReverseGeneric { s, .. } => Some(40.0 * s),
            Family::Symmetrized { s, mu } => Some(40.0 * (s + mu.abs())),
        }
    }
}

/// Integrate `f` from zero to `upper` (or over the whole half-line), with an
/// optional interior split point anchoring the first panels.
fn integrate_density<F: Fn(f64) -> f64>(
    f: F,
    split: Option<f64>,
    upper: Option<f64>,
    tol: f64,
) -> Result<f64> {
    let split = split.filter(|c| upper.map_or(true, |u| *c < u) && *c > 0.0);
    Ok(match (split, upper) {
        (Some(c), Some(u)) => {
            integrate(&f, Support::finite(0.0, c), tol)?.value
                + integrate(&f, Support::finite(c, u), tol)?.value
        }
        (Some(c), None) => {
            integrate(&f, Support::finite(0.0, c), tol)?.value
                + integrate(&f, Support::right_infinite(c), tol)?.value
        }
        (None, Some(u)) => integrate(&f, Support::finite(0.0, u), tol)?.value,
        (None, None) => integrate(&f, Support::right_infinite(0.0), tol)?.value,
    })
}

/// `∫_0^cap f0(x) / (x + mu) dx` for the forward family (`cap = None` means
/// the end of the nominal support).
///
/// Decomposed around the singularity so it stays accurate for any `mu`,
/// including values below the underflow threshold (`ln_mu` carries the exact
/// logarithm): with `c = min(1, cap)`,
///
/// `f0(0) (ln(c+mu) - ln mu) + ∫_0^c (f0(x) - f0(0))/(x+mu) dx + ∫_c^cap ...`
///
/// The first term is analytic, the second integrand is bounded near zero,
/// and the third sees no small denominators.
pub(crate) fn forward_mass(
    nominal: &NominalModel,
    mu: f64,
    ln_mu: f64,
    cap: Option<f64>,
) -> Result<f64> {
    let f00 = nominal.pdf(0.0);
    let hard_cap = match (cap, nominal.support_upper()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    };
    let split = hard_cap.map_or(1.0, |c| c.min(1.0));
    // When the density vanishes at zero there is no singular part to peel
    // off (and `mu` may legitimately be 0 with `ln_mu = -inf`).
    let analytic = if f00 == 0.0 { 0.0 } else { f00 * ((split + mu).ln() - ln_mu) };
    let correction = integrate(
        |x| nominal.pdf_delta(x) / (x + mu),
        Support::finite(0.0, split),
        1e-10 * f00.max(1.0),
    )?
    .value;
    let tail_tol = 1e-11 * f00.max(1.0);
    let tail = match hard_cap {
        Some(c) if c > split => {
            integrate(|x| nominal.pdf(x) / (x + mu), Support::finite(split, c), tail_tol)?.value
        }
        None => {
            integrate(
                |x| nominal.pdf(x) / (x + mu),
                Support::right_infinite(split),
                tail_tol,
            )?
            .value
        }
        _ => 0.0,
    };
    Ok(analytic + correction + tail)
}

/// `∫ f0(x) ln(x + mu) dx` over the nominal support, decomposed like
/// [`forward_mass`]: the leading `f0(0)` piece integrates in closed form to
/// `(c+mu) ln(c+mu) - mu ln mu - c`.
pub(crate) fn forward_log_moment(nominal: &NominalModel, mu: f64, ln_mu: f64) -> Result<f64> {
    let f00 = nominal.pdf(0.0);
    let upper = nominal.support_upper();
    let split = upper.map_or(1.0, |c| c.min(1.0));
    let mu_ln_mu = if mu == 0.0 { 0.0 } else { mu * ln_mu };
    let analytic = f00 * ((split + mu) * (split + mu).ln() - mu_ln_mu - split);
    let correction_tol = if f00 == 0.0 { 1.0 } else { (f00 * (1.0 + ln_mu.abs())).max(1.0) };
    let correction = integrate(
        |x| nominal.pdf_delta(x) * (x + mu).ln(),
        Support::finite(0.0, split),
        1e-10 * correction_tol,
    )?
    .value;
    let tail_tol = 1e-11 * f00.max(1.0);
    let tail_f = |x: f64| {
        let w = nominal.pdf(x);
        if w == 0.0 {
            0.0
        } else {
            w * (x + mu).ln()
        }
    };
    let tail = match upper {
        Some(c) if c > split => integrate(tail_f, Support::finite(split, c), tail_tol)?.value,
        None => integrate(tail_f, Support::right_infinite(split), tail_tol)?.value,
        _ => 0.0,
    };
    Ok(analytic + correction + tail)
}

/// `∫ f0(x) ln(x + mu) / (x + mu) dx` over the nominal support, decomposed
/// like [`forward_mass`]: the leading piece is
/// `(ln²(c+mu) - ln²(mu)) / 2`, factored as a product of sum and difference.
fn forward_rev_moment(nominal: &NominalModel, mu: f64, ln_mu: f64) -> Result<f64> {
    let f00 = nominal.pdf(0.0);
    let upper = nominal.support_upper();
    let split = upper.map_or(1.0, |c| c.min(1.0));
    let ln_top = (split + mu).ln();
    let analytic = if f00 == 0.0 {
        0.0
    } else {
        f00 * 0.5 * (ln_top - ln_mu) * (ln_top + ln_mu)
    };
    let correction_tol = if f00 == 0.0 { 1.0 } else { (f00 * (1.0 + 0.5 * ln_mu * ln_mu)).max(1.0) };
    let correction = integrate(
        |x| nominal.pdf_delta(x) * (x + mu).ln() / (x + mu),
        Support::finite(0.0, split),
        1e-10 * correction_tol,
    )?
    .value;
    let tail_tol = 1e-11 * f00.max(1.0);
    let tail_f = |x: f64| {
        let w = nominal.pdf(x);
        if w == 0.0 {
            0.0
        } else {
            w * (x + mu).ln() / (x + mu)
        }
    };
    let tail = match upper {
        Some(c) if c > split => integrate(tail_f, Support::finite(split, c), tail_tol)?.value,
        None => integrate(tail_f, Support::right_infinite(split), tail_tol)?.value,
        _ => 0.0,
    };
    Ok(analytic + correction + tail)
}

/// Divergence of the worst-case solution from its nominal, measured with the
/// divergence kind of `set` (the radius in `set` is ignored).
///
/// Everything is computed by quadrature against the solution's own density,
/// independently of the closed forms used during the solve, so this doubles
/// as a consistency check. Forward families use the decomposed integrals
/// that stay stable when the shift `mu` is tiny.
pub fn achieved_divergence(solution: &WorstCaseSolution, set: &UncertaintySet) -> Result<f64> {
    match set.kind {
        DivergenceKind::ForwardKl => forward_divergence(solution),
        DivergenceKind::ReverseKl => reverse_divergence(solution),
        DivergenceKind::Symmetrized => {
            if let Family::Symmetrized { s, mu } = solution.family {
                return symmetrized_divergence_direct(&solution.nominal, s, mu);
            }
            Ok(0.5 * (forward_divergence(solution)? + reverse_divergence(solution)?))
        }
    }
}

/// `D(f0 ‖ f)` by quadrature: for forward families this is
/// `ln q + ∫ f0 ln(x + mu)`, since `ln(f0/f) = ln q + ln(x + mu)`.
pub(crate) fn forward_divergence(sol: &WorstCaseSolution) -> Result<f64> {
    match &sol.family {
        Family::Nominal => Ok(0.0),
        Family::ForwardExp { ln_mu, q, .. } => {
            Ok(q.ln() + forward_log_moment(&sol.nominal, ln_mu.exp(), *ln_mu)?)
        }
        Family::ForwardGeneric { mu, ln_mu, q } => {
            Ok(q.ln() + forward_log_moment(&sol.nominal, *mu, *ln_mu)?)
        }
        _ => divergence_quadrature(sol, true),
    }
}

/// `D(f ‖ f0)` by quadrature: for forward families,
/// `f ln(f/f0) = -f (ln q + ln(x+mu))` integrates to
/// `-ln q - (1/q) ∫ f0 ln(x+mu)/(x+mu)`.
pub(crate) fn reverse_divergence(sol: &WorstCaseSolution) -> Result<f64> {
    match &sol.family {
        Family::Nominal => Ok(0.0),
        Family::ForwardExp { ln_mu, q, .. } => {
            Ok(-q.ln() - forward_rev_moment(&sol.nominal, ln_mu.exp(), *ln_mu)? / q)
        }
        Family::ForwardGeneric { mu, ln_mu, q } => {
            Ok(-q.ln() - forward_rev_moment(&sol.nominal, *mu, *ln_mu)? / q)
        }
        _ => divergence_quadrature(sol, false),
    }
}

/// Plain pointwise `∫ p ln(p/q)` quadrature for families whose densities are
/// bounded multiples of the nominal. `nominal_first` selects `D(f0 ‖ f)`.
fn divergence_quadrature(sol: &WorstCaseSolution, nominal_first: bool) -> Result<f64> {
    let infinite = std::cell::Cell::new(false);
    let value = integrate_density(
        |x: f64| {
            let f0 = sol.nominal.pdf(x);
            let f = sol.pdf(x);
            let (p, q) = if nominal_first { (f0, f) } else { (f, f0) };
            if p == 0.0 {
                return 0.0;
            }
            if q == 0.0 || !q.is_finite() || !p.is_finite() {
                infinite.set(true);
                return 0.0;
            }
            p * (p / q).ln()
        },
        sol.family_scale(),
        sol.nominal.support_upper(),
        1e-10,
    )?;
    if infinite.get() {
        return Err(Error::InfiniteDivergence(
            "densities do not share a support".into(),
        ));
    }
    Ok(value)
}

/// Symmetrized divergence of the omega family, using
/// `(D(f0‖f) + D(f‖f0))/2 = (1/2) ∫ f0 · u · (1 - e^{-u})` with `u = ln omega`.
pub(crate) fn symmetrized_divergence_direct(
    nominal: &NominalModel,
    s: f64,
    mu: f64,
) -> Result<f64> {
    let value = integrate_density(
        |x: f64| {
            let w = nominal.pdf(x);
            if w == 0.0 {
                return 0.0;
            }
            match numerics::wright_omega_ln(2.0 * (x + mu) / s) {
                Ok(u) => w * u * (1.0 - (-u).exp()),
                Err(_) => f64::NAN,
            }
        },
        Some(40.0 * (s + mu.abs())),
        nominal.support_upper(),
        1e-10,
    )?;
    Ok(0.5 * value)
}

/// Normalization residual `|∫ pdf - 1|` of a solution, by quadrature.
pub(crate) fn normalization_residual(sol: &WorstCaseSolution) -> Result<f64> {
    let mass = match &sol.family {
        Family::Nominal => 1.0,
        Family::ForwardExp { ln_mu, q, .. } => {
            forward_mass(&sol.nominal, ln_mu.exp(), *ln_mu, None)? / q
        }
        Family::ForwardGeneric { mu, ln_mu, q } => {
            forward_mass(&sol.nominal, *mu, *ln_mu, None)? / q
        }
        _ => integrate_density(
            |x| sol.pdf(x),
            sol.family_scale(),
            sol.nominal.support_upper(),
            1e-10,
        )?,
    };
    Ok((mass - 1.0).abs())
}
