//! Nominal (baseline) energy distributions on `[0, ∞)`.
//!
//! Three families are supported: `Exponential(rate)`, `Uniform(0, upper)`,
//! and a tabulated density given as sample points `(x_i, pdf_i)` that are
//! interpolated linearly and renormalized to unit mass at load time.

use crate::error::{Error, Result};

/// A nominal distribution with density, distribution function, and mean.
#[derive(Clone, Debug)]
pub enum NominalModel {
    /// `pdf(x) = rate * exp(-rate * x)` on `[0, ∞)`.
    Exponential { rate: f64 },
    /// `pdf(x) = 1 / upper` on `[0, upper]`.
    Uniform { upper: f64 },
    /// Piecewise-linear density from a table, zero outside the tabulated range.
    Tabulated(TabulatedPdf),
}

impl NominalModel {
    /// Exponential nominal with the given rate parameter.
    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "exponential rate must be positive and finite, got {rate}"
            )));
        }
        Ok(NominalModel::Exponential { rate })
    }

    /// Uniform nominal on `[0, upper]`.
    pub fn uniform(upper: f64) -> Result<Self> {
        if !upper.is_finite() || upper <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "uniform upper endpoint must be positive and finite, got {upper}"
            )));
        }
        Ok(NominalModel::Uniform { upper })
    }

    /// Tabulated nominal from `(x, pdf)` sample points.
    pub fn from_table(points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(NominalModel::Tabulated(TabulatedPdf::new(points)?))
    }

    /// Tabulated nominal parsed from CSV text with header `x,pdf`.
    pub fn from_table_csv(text: &str) -> Result<Self> {
        Ok(NominalModel::Tabulated(TabulatedPdf::parse_csv(text)?))
    }

    /// Tabulated nominal loaded from a CSV file with header `x,pdf`.
    pub fn load_table(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table_csv(&text)
    }

    /// Probability density at `x` (zero outside the support).
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            NominalModel::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            NominalModel::Uniform { upper } => {
                if (0.0..=*upper).contains(&x) {
                    1.0 / upper
                } else {
                    0.0
                }
            }
            NominalModel::Tabulated(t) => t.pdf(x),
        }
    }

    /// `pdf(x) - pdf(0)`, evaluated without the catastrophic cancellation a
    /// direct subtraction suffers near 0. The singular-integral corrections
    /// in the forward-family solvers divide this difference by `x + mu` with
    /// `mu` as small as 1e-15; there, the absolute `~1e-16` noise of
    /// `exp(-rate x) - 1` would otherwise swamp the quotient.
    pub(crate) fn pdf_delta(&self, x: f64) -> f64 {
        match self {
            NominalModel::Exponential { rate } => {
                if x < 0.0 {
                    -rate
                } else {
                    rate * (-rate * x).exp_m1()
                }
            }
            NominalModel::Uniform { upper } => {
                if (0.0..=*upper).contains(&x) {
                    0.0
                } else {
                    -1.0 / upper
                }
            }
            NominalModel::Tabulated(t) => t.pdf(x) - t.pdf(0.0),
        }
    }

    /// Cumulative distribution function at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            NominalModel::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            NominalModel::Uniform { upper } => (x / upper).clamp(0.0, 1.0),
            NominalModel::Tabulated(t) => t.cdf(x),
        }
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> f64 {
        match self {
            NominalModel::Exponential { rate } => 1.0 / rate,
            NominalModel::Uniform { upper } => 0.5 * upper,
            NominalModel::Tabulated(t) => t.mean,
        }
    }

    /// Upper end of the support; `None` means `+∞`.
    pub fn support_upper(&self) -> Option<f64> {
        match self {
            NominalModel::Exponential { .. } => None,
            NominalModel::Uniform { upper } => Some(*upper),
            NominalModel::Tabulated(t) => Some(*t.xs.last().expect("nonempty table")),
        }
    }

    /// The `1 - tail` quantile, used to pick automatic grid extents.
    pub fn upper_quantile(&self, tail: f64) -> f64 {
        match self {
            NominalModel::Exponential { rate } => -tail.ln() / rate,
            NominalModel::Uniform { upper } => upper * (1.0 - tail),
            NominalModel::Tabulated(t) => t.quantile(1.0 - tail),
        }
    }

    /// Short lowercase label used in diagnostics.
    pub fn label(&self) -> String {
        match self {
            NominalModel::Exponential { rate } => format!("exponential(rate={rate})"),
            NominalModel::Uniform { upper } => format!("uniform(0,{upper})"),
            NominalModel::Tabulated(t) => format!("tabulated({} points)", t.xs.len()),
        }
    }
}

/// Renormalized piecewise-linear density table.
#[derive(Clone, Debug)]
pub struct TabulatedPdf {
    xs: Vec<f64>,
    ps: Vec<f64>,
    /// Exact cumulative integral of the interpolant up to each node.
    cum: Vec<f64>,
    mean: f64,
}

const MIN_TABLE_POINTS: usize = 8;

impl TabulatedPdf {
    /// Build from raw points: strictly increasing `x >= 0`, `pdf >= 0`.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < MIN_TABLE_POINTS {
            return Err(Error::InvalidInput(format!(
                "tabulated density needs at least {MIN_TABLE_POINTS} points, got {}",
                points.len()
            )));
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut ps = Vec::with_capacity(points.len());
        for &(x, p) in &points {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "tabulated x values must be finite and >= 0, got {x}"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "tabulated pdf values must be finite and >= 0, got {p}"
                )));
            }
            if let Some(&prev) = xs.last() {
                if x <= prev {
                    return Err(Error::InvalidInput(format!(
                        "tabulated x values must be strictly increasing ({prev} then {x})"
                    )));
                }
            }
            xs.push(x);
            ps.push(p);
        }
        // Trapezoid mass of the raw table, then renormalize.
        let mut mass = 0.0;
        for i in 1..xs.len() {
            mass += 0.5 * (ps[i] + ps[i - 1]) * (xs[i] - xs[i - 1]);
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(
                "tabulated density has zero total mass".into(),
            ));
        }
        for p in &mut ps {
            *p /= mass;
        }
        let mut cum = vec![0.0; xs.len()];
        let mut mean = 0.0;
        for i in 1..xs.len() {
            let h = xs[i] - xs[i - 1];
            cum[i] = cum[i - 1] + 0.5 * (ps[i] + ps[i - 1]) * h;
            // ∫ x pdf over the cell with pdf linear from ps[i-1] to ps[i]:
            // h * [ x_{i-1} (p0 + p1)/2 + h (p0 + 2 p1)/6 ].
            mean += h * (xs[i - 1] * (ps[i - 1] + ps[i]) / 2.0 + h * (ps[i - 1] + 2.0 * ps[i]) / 6.0);
        }
        Ok(TabulatedPdf { xs, ps, cum, mean })
    }

    /// Parse CSV text: header `x,pdf`, then one `x,pdf` pair per line.
    /// Blank lines are ignored; errors carry 1-based line numbers.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((idx, line)) => {
                    let line = line.trim_start_matches('\u{feff}').trim();
                    if line.is_empty() {
                        continue;
                    }
                    break (idx + 1, line);
                }
                None => {
                    return Err(Error::TableParse { line: 1, message: "empty file".into() })
                }
            }
        };
        let fields: Vec<&str> = header.1.split(',').map(str::trim).collect();
        if fields != ["x", "pdf"] {
            return Err(Error::TableParse {
                line: header.0,
                message: format!("expected header 'x,pdf', got '{}'", header.1),
            });
        }
        let mut points = Vec::new();
        let mut last_line = header.0;
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            last_line = line_no;
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(Error::TableParse {
                    line: line_no,
                    message: format!("expected 2 comma-separated fields, got {}", cols.len()),
                });
            }
            let x: f64 = cols[0].parse().map_err(|_| Error::TableParse {
                line: line_no,
                message: format!("cannot parse x value '{}'", cols[0]),
            })?;
            let p: f64 = cols[1].parse().map_err(|_| Error::TableParse {
                line: line_no,
                message: format!("cannot parse pdf value '{}'", cols[1]),
            })?;
            if !x.is_finite() || x < 0.0 {
                return Err(Error::TableParse {
                    line: line_no,
                    message: format!("x must be finite and >= 0, got {x}"),
                });
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::TableParse {
                    line: line_no,
                    message: format!("pdf must be finite and >= 0, got {p}"),
                });
            }
            if let Some(&(prev, _)) = points.last() {
                if x <= prev {
                    return Err(Error::TableParse {
                        line: line_no,
                        message: format!("x values must be strictly increasing ({prev} then {x})"),
                    });
                }
            }
            points.push((x, p));
        }
        if points.len() < MIN_TABLE_POINTS {
            return Err(Error::TableParse {
                line: last_line,
                message: format!(
                    "at least {MIN_TABLE_POINTS} data rows required, got {}",
                    points.len()
                ),
            });
        }
        Self::new(points)
    }

    fn cell_of(&self, x: f64) -> Option<usize> {
        if x < self.xs[0] || x > *self.xs.last().unwrap() {
            return None;
        }
        // Last cell index i with xs[i] <= x (and i+1 in range).
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Some(i.min(self.xs.len() - 2))
    }

    fn pdf(&self, x: f64) -> f64 {
        match self.cell_of(x) {
            None => 0.0,
            Some(i) => {
                let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
                self.ps[i] + t * (self.ps[i + 1] - self.ps[i])
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let i = self.cell_of(x).unwrap();
        let h = self.xs[i + 1] - self.xs[i];
        let dx = x - self.xs[i];
        let slope = (self.ps[i + 1] - self.ps[i]) / h;
        (self.cum[i] + self.ps[i] * dx + 0.5 * slope * dx * dx).clamp(0.0, 1.0)
    }

    /// Inverse CDF by bisection over the piecewise-quadratic cumulative.
    fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let (mut lo, mut hi) = (self.xs[0], *self.xs.last().unwrap());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_support::assert_close;

    #[test]
    fn exponential_basics() {
        let m = NominalModel::exponential(2.0).unwrap();
        assert_close(m.mean(), 0.5, 1e-15);
        assert_close(m.pdf(0.0), 2.0, 1e-15);
        assert_close(m.cdf(1.0), 1.0 - (-2f64).exp(), 1e-15);
        assert_eq!(m.cdf(-1.0), 0.0);
        assert_eq!(m.support_upper(), None);
        assert!(NominalModel::exponential(0.0).is_err());
        assert!(NominalModel::exponential(f64::NAN).is_err());
    }

    #[test]
    fn uniform_basics() {
        let m = NominalModel::uniform(2.0).unwrap();
        assert_close(m.mean(), 1.0, 1e-15);
        assert_close(m.pdf(1.0), 0.5, 1e-15);
        assert_eq!(m.pdf(2.5), 0.0);
        assert_close(m.cdf(0.5), 0.25, 1e-15);
        assert_eq!(m.cdf(3.0), 1.0);
        assert_eq!(m.support_upper(), Some(2.0));
        assert!(NominalModel::uniform(-1.0).is_err());
    }

    #[test]
    fn tabulated_renormalizes_and_integrates_exactly() {
        // A triangle density on [0, 2] sampled at 9 points, deliberately
        // scaled by 7 so the loader has to renormalize.
        let pts: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let x = 0.25 * i as f64;
                let p = if x <= 1.0 { x } else { 2.0 - x };
                (x, 7.0 * p)
            })
            .collect();
        let m = NominalModel::from_table(pts).unwrap();
        assert_close(m.cdf(2.0), 1.0, 1e-12);
        assert_close(m.cdf(1.0), 0.5, 1e-12);
        assert_close(m.mean(), 1.0, 1e-12);
        // Piecewise-linear interpolation between nodes.
        assert_close(m.pdf(0.125), 0.125, 1e-12);
        // CDF of the interpolant is quadratic inside a cell.
        assert_close(m.cdf(0.5), 0.125, 1e-12);
        let q = m.upper_quantile(0.5);
        assert_close(q, 1.0, 1e-9);
    }

    #[test]
    fn tabulated_mean_matches_quadrature() {
        let pts: Vec<(f64, f64)> = (0..32)
            .map(|i| {
                let x = 0.2 * i as f64;
                (x, (-x).exp() * (1.0 + 0.3 * (2.0 * x).sin()))
            })
            .collect();
        let m = NominalModel::from_table(pts).unwrap();
        let hi = m.support_upper().unwrap();
        let quad_mean = crate::numerics::integrate(
            |x| x * m.pdf(x),
            crate::numerics::Support::finite(0.0, hi),
            1e-12,
        )
        .unwrap()
        .value;
        assert_close(m.mean(), quad_mean, 1e-10);
        let quad_mass = crate::numerics::integrate(
            |x| m.pdf(x),
            crate::numerics::Support::finite(0.0, hi),
            1e-12,
        )
        .unwrap()
        .value;
        assert_close(quad_mass, 1.0, 1e-10);
    }

    #[test]
    fn csv_parsing_happy_path() {
        let text = "x,pdf\n0,1\n0.5,0.8\n1,0.6\n1.5,0.45\n2,0.3\n2.5,0.2\n3,0.1\n3.5,0.05\n4,0\n";
        let m = NominalModel::from_table_csv(text).unwrap();
        assert_close(m.cdf(4.0), 1.0, 1e-12);
        assert!(m.mean() > 0.0);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let bad_header = "time,density\n0,1\n";
        match NominalModel::from_table_csv(bad_header) {
            Err(Error::TableParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected header error, got {other:?}"),
        }
        let bad_value = "x,pdf\n0,1\n1,oops\n";
        match NominalModel::from_table_csv(bad_value) {
            Err(Error::TableParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected value error, got {other:?}"),
        }
        let non_ascending = "x,pdf\n0,1\n1,0.5\n0.5,0.2\n";
        match NominalModel::from_table_csv(non_ascending) {
            Err(Error::TableParse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected ordering error, got {other:?}"),
        }
        let too_few = "x,pdf\n0,1\n1,1\n2,1\n";
        assert!(matches!(
            NominalModel::from_table_csv(too_few),
            Err(Error::TableParse { .. })
        ));
    }
}
