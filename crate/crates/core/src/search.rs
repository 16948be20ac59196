//! One-dimensional searches: zero-rate distance by bracketing bisection and
//! golden-section maximisation.

use crate::error::{Error, Result};

/// Absolute tolerance on the returned distance.
pub const DISTANCE_TOL_KM: f64 = 1e-6;

/// Outcome of [`max_distance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDistance {
    pub distance_km: f64,
    /// True when the rate never reached zero before `search_limit_km`.
    pub reached_limit: bool,
}

/// Largest distance with a positive rate.
///
/// The rate is sampled on a 1 km grid (or finer when the limit is short) to
/// find the last sign change, which is then refined by bisection. Rates that
/// fail to evaluate are treated as non-positive.
pub fn max_distance<F>(mut rate_fn: F, search_limit_km: f64) -> Result<MaxDistance>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r0 = rate_fn(0.0)?;
    if !(r0 > 0.0) {
        return Err(Error::NoPositiveRate(r0));
    }
    let mut positive = |x: f64| rate_fn(x).map(|r| r > 0.0).unwrap_or(false);

    let steps = search_limit_km.ceil().max(16.0) as usize;
    let step = search_limit_km / steps as f64;
    let mut last_positive = 0.0;
    let mut first_negative = None;
    for i in 1..=steps {
        let x = i as f64 * step;
        if positive(x) {
            last_positive = x;
            first_negative = None;
        } else if first_negative.is_none() {
            first_negative = Some(x);
        }
    }
    let Some(mut hi) = first_negative else {
        return Ok(MaxDistance {
            distance_km: search_limit_km,
            reached_limit: true,
        });
    };
    let mut lo = last_positive;
    while hi - lo > DISTANCE_TOL_KM {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MaxDistance {
        distance_km: 0.5 * (lo + hi),
        reached_limit: false,
    })
}

/// Maximises a unimodal function on `[lo, hi]` by golden-section search.
/// Returns `(argmax, value)`, preferring the endpoints when they are at
/// least as good as the interior estimate.
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (a0, b0) = (lo, hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a0, b0] {
        let fx = f(x)?;
        if fx > best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_crossing() {
        let md = max_distance(|x| Ok(50.0 - x), 200.0).unwrap();
        assert!(!md.reached_limit);
        assert!((md.distance_km - 50.0).abs() < 1e-5);
    }

    #[test]
    fn constant_rate_hits_limit() {
        let md = max_distance(|_| Ok(1.0), 120.0).unwrap();
        assert!(md.reached_limit);
        assert_eq!(md.distance_km, 120.0);
    }

    #[test]
    fn nonpositive_start_is_an_error() {
        assert!(matches!(
            max_distance(|_| Ok(0.0), 10.0),
            Err(Error::NoPositiveRate(_))
        ));
    }

    #[test]
    fn golden_finds_interior_and_boundary_maxima() {
        let (x, _) = golden_max(|x| Ok(-(x - 0.3) * (x - 0.3)), 0.0, 1.0, 1e-8).unwrap();
        assert!((x - 0.3).abs() < 1e-6);
        let (x, _) = golden_max(Ok, 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(x, 1.0);
    }
}
