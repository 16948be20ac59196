//! The per-pulse intensity multiplier `d`.
//!
//! A pulse meant to carry intensity `I` actually carries `d*I`, with `d`
//! i.i.d. across pulses, independent of `I`, of mean 1 and variance `V_d`.
//! The distribution is known ahead of time and does not drift.
//!
//! Gaussian models are truncated at `d = 0` and renormalised. Tabulated
//! models interpolate their density linearly between grid points and are
//! renormalised on construction.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::rng::fill_chunked;

/// Tolerance on the unit-mean condition.
pub const MEAN_TOL: f64 = 1e-6;
/// Gaussian quadrature support and cutoff search span `mean +/- 6 sigma`.
pub const GAUSSIAN_SPAN_SIGMAS: f64 = 6.0;
const GAUSSIAN_PANELS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// No fluctuation: `d = 1` with certainty.
    PointMass,
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Normalised `(d, density)` grid, strictly increasing in `d`.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationModel {
    kind: ModelKind,
    variance: f64,
    /// Gaussian: mass above zero before truncation.
    gauss_mass: f64,
    /// Tabulated: cdf at each grid point.
    cumulative: Vec<f64>,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl FluctuationModel {
    pub fn point_mass() -> Self {
        Self {
            kind: ModelKind::PointMass,
            variance: 0.0,
            gauss_mass: 1.0,
            cumulative: Vec::new(),
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "uniform support must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        let model = Self {
            kind: ModelKind::Uniform { lo, hi },
            variance: (hi - lo).powi(2) / 12.0,
            gauss_mass: 1.0,
            cumulative: Vec::new(),
        };
        model.check_mean()?;
        Ok(model)
    }

    /// Normal distribution truncated to `d >= 0`. `variance` is the
    /// parameter of the untruncated normal.
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gaussian variance must be > 0, got {variance}"
            )));
        }
        let sigma = variance.sqrt();
        let alpha = -mean / sigma;
        let mass = 1.0 - std_normal_cdf(alpha);
        if !(mass > 0.0) {
            return Err(Error::InvalidModel(
                "gaussian has no mass above zero".into(),
            ));
        }
        let lambda = std_normal_pdf(alpha) / mass;
        let truncated_var = variance * (1.0 + alpha * lambda - lambda * lambda);
        let model = Self {
            kind: ModelKind::Gaussian { mean, variance },
            variance: truncated_var,
            gauss_mass: mass,
            cumulative: Vec::new(),
        };
        model.check_mean()?;
        Ok(model)
    }

    /// Builds a tabulated model from `(d, density)` pairs. The density is
    /// rescaled to integrate to one.
    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidModel(
                "tabulated model needs at least two points".into(),
            ));
        }
        for &(d, p) in &points {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "grid point d = {d} must be >= 0"
                )));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "density {p} at d = {d} must be >= 0"
                )));
            }
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidModel(
                "grid must be strictly increasing in d".into(),
            ));
        }
        let total: f64 = points
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        if !(total > 0.0) {
            return Err(Error::InvalidModel("density integrates to zero".into()));
        }
        for p in points.iter_mut() {
            p.1 /= total;
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
            cumulative.push(acc);
        }
        let mut model = Self {
            kind: ModelKind::Tabulated { points },
            variance: 0.0,
            gauss_mass: 1.0,
            cumulative,
        };
        model.check_mean()?;
        model.variance = model.expect(|d| (d - 1.0).powi(2))?;
        Ok(model)
    }

    /// Parses a two-column `d density` text table. `#` starts a comment.
    pub fn parse_tabulated(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let mut next = |name: &str| -> Result<f64> {
                let tok = cols.next().ok_or_else(|| Error::Parse {
                    line: i + 1,
                    msg: format!("missing {name} column"),
                })?;
                tok.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad {name} value {tok:?}"),
                })
            };
            let d = next("d")?;
            let p = next("density")?;
            if cols.next().is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected exactly two columns".into(),
                });
            }
            points.push((d, p));
        }
        Self::tabulated(points)
    }

    pub fn load_tabulated(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            line: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
        Self::parse_tabulated(&text)
    }

    fn check_mean(&self) -> Result<()> {
        let mean = self.expect(|d| d)?;
        if (mean - 1.0).abs() > MEAN_TOL {
            return Err(Error::InvalidModel(format!("mean must be 1, got {mean}")));
        }
        Ok(())
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// `V_d`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Interval carrying the probability mass used for quadrature and the
    /// cutoff search. Gaussian tails beyond six sigma are dropped.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            ModelKind::PointMass => (1.0, 1.0),
            ModelKind::Uniform { lo, hi } => (*lo, *hi),
            ModelKind::Gaussian { mean, variance } => {
                let span = GAUSSIAN_SPAN_SIGMAS * variance.sqrt();
                ((mean - span).max(0.0), mean + span)
            }
            ModelKind::Tabulated { points } => (points[0].0, points[points.len() - 1].0),
        }
    }

    pub fn pdf(&self, d: f64) -> f64 {
        match &self.kind {
            ModelKind::PointMass => 0.0,
            ModelKind::Uniform { lo, hi } => {
                if d >= *lo && d <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            ModelKind::Gaussian { mean, variance } => {
                if d < 0.0 {
                    return 0.0;
                }
                let sigma = variance.sqrt();
                std_normal_pdf((d - mean) / sigma) / (sigma * self.gauss_mass)
            }
            ModelKind::Tabulated { points } => {
                let (lo, hi) = self.support();
                if d < lo || d > hi {
                    return 0.0;
                }
                let i = segment_index(points, d);
                let (d0, p0) = points[i];
                let (d1, p1) = points[i + 1];
                p0 + (p1 - p0) * (d - d0) / (d1 - d0)
            }
        }
    }

    /// Probability that `d <= d_max`.
    pub fn cdf(&self, d_max: f64) -> f64 {
        let c = match &self.kind {
            ModelKind::PointMass => {
                if d_max >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ModelKind::Uniform { lo, hi } => (d_max - lo) / (hi - lo),
            ModelKind::Gaussian { mean, variance } => {
                if d_max <= 0.0 {
                    return 0.0;
                }
                let sigma = variance.sqrt();
                let below_zero = std_normal_cdf(-mean / sigma);
                (std_normal_cdf((d_max - mean) / sigma) - below_zero) / self.gauss_mass
            }
            ModelKind::Tabulated { points } => {
                let (lo, hi) = self.support();
                if d_max <= lo {
                    return 0.0;
                }
                if d_max >= hi {
                    return 1.0;
                }
                let i = segment_index(points, d_max);
                let (d0, p0) = points[i];
                let (d1, p1) = points[i + 1];
                let slope = (p1 - p0) / (d1 - d0);
                let h = d_max - d0;
                self.cumulative[i] + p0 * h + 0.5 * slope * h * h
            }
        };
        c.clamp(0.0, 1.0)
    }

    /// Smallest `d` with `cdf(d) >= p`, for `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &self.kind {
            ModelKind::PointMass => 1.0,
            ModelKind::Uniform { lo, hi } => lo + p * (hi - lo),
            ModelKind::Tabulated { points } => self.tabulated_quantile(points, p),
            ModelKind::Gaussian { mean, variance } => {
                let span = 40.0 * variance.sqrt();
                let (mut lo, mut hi) = ((mean - span).max(0.0), mean + span);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    fn tabulated_quantile(&self, points: &[(f64, f64)], p: f64) -> f64 {
        let n = points.len();
        let i = match self.cumulative.partition_point(|&c| c < p) {
            0 => return points[0].0,
            k if k >= n => return points[n - 1].0,
            k => k - 1,
        };
        let (d0, p0) = points[i];
        let (d1, p1) = points[i + 1];
        let slope = (p1 - p0) / (d1 - d0);
        let r = p - self.cumulative[i];
        // Root of slope/2 h^2 + p0 h - r = 0 in the cancellation-free form.
        let disc = (p0 * p0 + 2.0 * slope * r).max(0.0);
        let denom = p0 + disc.sqrt();
        let h = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (d0 + h).min(d1)
    }

    /// Panels over which the composite Gauss-Legendre rule is applied.
    fn panels(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            ModelKind::PointMass => Vec::new(),
            ModelKind::Uniform { lo, hi } => vec![(*lo, *hi)],
            ModelKind::Gaussian { .. } => {
                let (lo, hi) = self.support();
                let w = (hi - lo) / GAUSSIAN_PANELS as f64;
                (0..GAUSSIAN_PANELS)
                    .map(|k| (lo + k as f64 * w, lo + (k + 1) as f64 * w))
                    .collect()
            }
            ModelKind::Tabulated { points } => {
                points.windows(2).map(|w| (w[0].0, w[1].0)).collect()
            }
        }
    }

    /// `E[f(d)]` for a fallible integrand.
    pub fn try_expect<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut eval = |d: f64| -> Result<f64> {
            let v = f(d)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { at: d, value: v });
            }
            Ok(v)
        };
        if let ModelKind::PointMass = self.kind {
            return eval(1.0);
        }
        let mut total = 0.0;
        for (a, b) in self.panels() {
            for (x, w) in quadrature::panel(a, b) {
                let density = self.pdf(x);
                if density > 0.0 {
                    total += w * density * eval(x)?;
                }
            }
        }
        Ok(total)
    }

    /// `E[f(d)]` by composite 64-point Gauss-Legendre quadrature.
    pub fn expect<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        self.try_expect(|d| Ok(f(d)))
    }

    /// `n` draws of `d`, reproducible from `seed` regardless of thread count.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        fill_chunked(&mut out, seed, |rng, _, slice| {
            for v in slice.iter_mut() {
                *v = self.draw(rng);
            }
        });
        out
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            ModelKind::PointMass => 1.0,
            ModelKind::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ModelKind::Gaussian { mean, variance } => {
                let sigma = variance.sqrt();
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let d = mean + sigma * z;
                    if d >= 0.0 {
                        break d;
                    }
                }
            }
            ModelKind::Tabulated { points } => self.tabulated_quantile(points, rng.random::<f64>()),
        }
    }
}

fn segment_index(points: &[(f64, f64)], d: f64) -> usize {
    let k = points.partition_point(|p| p.0 <= d);
    k.saturating_sub(1).min(points.len() - 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(lo: f64, hi: f64) -> FluctuationModel {
        FluctuationModel::uniform(lo, hi).unwrap()
    }

    #[test]
    fn pdf_examples() {
        assert!((u(0.9, 1.1).pdf(1.0) - 5.0).abs() < 1e-12);
        assert_eq!(u(0.9, 1.1).pdf(0.5), 0.0);
        let g = FluctuationModel::gaussian(1.0, 1e-2).unwrap();
        assert!((g.pdf(1.0) - 1.0 / (2.0 * std::f64::consts::PI * 0.01).sqrt()).abs() < 1e-12);
        assert!((g.pdf(1.0) - 3.989_422_804_014_327).abs() < 1e-12);
        assert_eq!(g.pdf(-0.1), 0.0);
    }

    #[test]
    fn variance_examples() {
        assert!((u(0.9, 1.1).variance() - 0.04 / 12.0).abs() < 1e-15);
        let g = FluctuationModel::gaussian(1.0, 1e-2).unwrap();
        assert!((g.variance() - 0.01).abs() < 1e-12);
        // Tabulated copy of Uniform(0.8, 1.2); exact answer 0.4^2/12.
        let pts = (0..=400)
            .map(|i| (0.8 + 0.4 * i as f64 / 400.0, 2.5))
            .collect();
        let t = FluctuationModel::tabulated(pts).unwrap();
        assert!((t.variance() - 0.013_333_333_333_333_334).abs() < 1e-5);
        assert_eq!(FluctuationModel::point_mass().variance(), 0.0);
    }

    #[test]
    fn cdf_examples() {
        let m = u(0.9, 1.1);
        assert!((m.cdf(1.1) - 1.0).abs() < 1e-15);
        assert!((m.cdf(1.0) - 0.5).abs() < 1e-12);
        assert_eq!(m.cdf(0.5), 0.0);
        assert_eq!(m.cdf(3.0), 1.0);
        let g = FluctuationModel::gaussian(1.0, 1e-2).unwrap();
        assert!((g.cdf(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expect_examples() {
        let m = u(0.9, 1.1);
        assert!((m.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-6);
        assert!((m.expect(|d| d).unwrap() - 1.0).abs() < 1e-9);
        // (2/3)(1.1^1.5 - 0.9^1.5)/0.2
        let exact = (2.0 / 3.0) * (1.1f64.powf(1.5) - 0.9f64.powf(1.5)) / 0.2;
        assert!((exact - 0.999_582_549_139_014_3).abs() < 1e-12);
        assert!((m.expect(f64::sqrt).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn expect_rejects_non_finite() {
        let m = u(0.9, 1.1);
        let err = m
            .expect(|d| if d > 1.0 { f64::NAN } else { 0.0 })
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(FluctuationModel::uniform(1.1, 0.9).is_err());
        assert!(FluctuationModel::uniform(-0.1, 2.1).is_err());
        // mean 1.1
        assert!(FluctuationModel::uniform(1.0, 1.2).is_err());
        assert!(FluctuationModel::gaussian(1.0, 0.0).is_err());
        // heavy truncation moves the mean off 1
        assert!(FluctuationModel::gaussian(1.0, 0.25).is_err());
        assert!(FluctuationModel::tabulated(vec![(1.0, 1.0)]).is_err());
        assert!(FluctuationModel::tabulated(vec![(0.9, 1.0), (0.9, 1.0)]).is_err());
        assert!(FluctuationModel::tabulated(vec![(0.9, -1.0), (1.1, 1.0)]).is_err());
    }

    #[test]
    fn parse_tabulated_text() {
        let text = "# uniform 0.9..1.1\n0.9 5.0\n1.0 5.0  # middle\n\n1.1 5.0\n";
        let m = FluctuationModel::parse_tabulated(text).unwrap();
        assert!((m.cdf(1.0) - 0.5).abs() < 1e-12);
        let bad = FluctuationModel::parse_tabulated("0.9 5.0\n1.0 x\n").unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn samples_stay_in_support_and_repeat() {
        let m = u(0.9, 1.1);
        let s = m.sample(7, 100);
        assert!(s.iter().all(|d| (0.9..=1.1).contains(d)));
        let g = FluctuationModel::gaussian(1.0, 1e-2).unwrap();
        assert_eq!(g.sample(42, 1000), g.sample(42, 1000));
        assert_ne!(g.sample(42, 1000), g.sample(43, 1000));
    }

    #[test]
    fn uniform_sample_mean_within_clt_bound() {
        let m = u(0.9, 1.1);
        let n = 1_000_000;
        let s = m.sample(2024, n);
        let mean = s.iter().sum::<f64>() / n as f64;
        let bound = 4.0 * m.std_dev() / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < bound, "mean {mean}, bound {bound}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        let g = FluctuationModel::gaussian(1.0, 1e-2).unwrap();
        for p in [0.01, 0.25, 0.5, 0.9] {
            assert!((g.cdf(g.quantile(p)) - p).abs() < 1e-10);
        }
        let pts = (0..=100)
            .map(|i| {
                let d = 0.8 + 0.4 * i as f64 / 100.0;
                (d, 1.0 - (d - 1.0).abs() * 4.0)
            })
            .collect();
        let t = FluctuationModel::tabulated(pts).unwrap();
        for p in [0.1, 0.5, 0.77] {
            assert!((t.cdf(t.quantile(p)) - p).abs() < 1e-12);
        }
    }
}
