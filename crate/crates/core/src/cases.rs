//! Key rates for intensity-fluctuating sources.
//!
//! - Case 1: Alice learns `d` for every pulse and rescales her record to
//!   `sqrt(d)*x_A`. The rate is the average of the ideal rate with
//!   modulation variance `d*V_A` (`R1`), or of its positive part when pulses
//!   are binned by `d` and losing bins are discarded (`R1R`).
//! - Case 2A: nobody learns `d`. Alice's mismatch between recorded `x_A`
//!   and sent `sqrt(d)*x_A` is folded into an equivalent source loss `T_s`
//!   and noise `eps_s` ahead of the channel.
//! - Case 2B: Eve may know `d`. Pulses with `d > d_max` are tagged and
//!   conceded; Alice records `sqrt(d_max)*x_A` and the untagged fraction
//!   `p_s = P(d <= d_max)` scales the privacy-amplification term.
//!
//! Case 2B entropies `H(X_B)` and `H(X_A')` are Gaussian differential
//! entropies in shot-noise units. This convention sets the size of the
//! `(1 - p_s)` penalty.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fluctuation::{FluctuationModel, ModelKind};
use crate::params::{ChannelPoint, SystemParams};
use crate::rate::{
    bob_variance, gaussian_entropy, holevo_bound, holevo_direct, key_rate_r0, mutual_info, CaseTag,
    Diagnostics, KeyRateResult,
};
use crate::search::golden_max;

/// Points in the coarse cutoff grid.
pub const DMAX_GRID_POINTS: usize = 64;
/// Absolute resolution of the refined cutoff.
pub const DMAX_TOL: f64 = 1e-6;

/// Reconciliation direction for case 2B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Direct,
    Reverse,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Direction::Direct),
            "reverse" => Ok(Direction::Reverse),
            _ => Err(Error::Parse {
                line: 0,
                msg: format!("unknown direction {s:?}"),
            }),
        }
    }
}

/// Source imperfection expressed as a lossy, noisy channel in front of the
/// real one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentSource {
    pub t_s: f64,
    pub eps_s: f64,
    /// Tagging cutoff; 1 for case 2A.
    pub d_max: f64,
}

/// The pieces of a case 2B rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedRateTerms {
    pub untagged_fraction: f64,
    pub i_ab_prime: f64,
    /// Differential entropy of Bob's data, bits.
    pub h_xb: f64,
    /// Differential entropy of Alice's recorded data, bits.
    pub h_xa_prime: f64,
    /// `p_s * chi` for the chosen direction.
    pub chi_tagged_bound: f64,
}

fn with_case(mut r: KeyRateResult, tag: CaseTag) -> KeyRateResult {
    r.case_tag = tag;
    r
}

/// Case 1: `E_d[R0(d*V_A, ch)]`.
pub fn key_rate_case1(
    params: &SystemParams,
    model: &FluctuationModel,
    ch: &ChannelPoint,
) -> Result<KeyRateResult> {
    let i_ab = model.try_expect(|d| mutual_info(&params.with_v_a(d * params.v_a), ch))?;
    let chi_be =
        model.try_expect(|d| holevo_bound(&params.with_v_a(d * params.v_a), ch).map(|h| h.0))?;
    Ok(KeyRateResult {
        rate: params.beta * i_ab - chi_be,
        i_ab,
        chi_be,
        case_tag: CaseTag::Case1,
        diagnostics: None,
    })
}

/// Case 1 after refined data analysis: `E_d[max(R0(d*V_A, ch), 0)]`.
///
/// `i_ab` and `chi_be` are averaged over the retained pulses only, so
/// `rate = beta*i_ab - chi_be` still holds.
pub fn key_rate_case1_refined(
    params: &SystemParams,
    model: &FluctuationModel,
    ch: &ChannelPoint,
) -> Result<KeyRateResult> {
    let kept = |d: f64| -> Result<Option<KeyRateResult>> {
        let r = key_rate_r0(&params.with_v_a(d * params.v_a), ch)?;
        Ok((r.rate > 0.0).then_some(r))
    };
    let i_ab = model.try_expect(|d| Ok(kept(d)?.map_or(0.0, |r| r.i_ab)))?;
    let chi_be = model.try_expect(|d| Ok(kept(d)?.map_or(0.0, |r| r.chi_be)))?;
    let rate = model.try_expect(|d| Ok(kept(d)?.map_or(0.0, |r| r.rate)))?;
    Ok(KeyRateResult {
        rate,
        i_ab,
        chi_be,
        case_tag: CaseTag::Case1R,
        diagnostics: None,
    })
}

/// Splits records into `n_sets` groups of equal probability under `model`,
/// using its quantiles as boundaries. Group `k` holds `d` in
/// `[q(k/n), q((k+1)/n))`.
pub fn partition_sets<T: Clone>(
    samples: &[(f64, T)],
    n_sets: usize,
    model: &FluctuationModel,
) -> Result<Vec<Vec<T>>> {
    if n_sets == 0 {
        return Err(domain("n_sets must be >= 1", 0.0));
    }
    let bounds: Vec<f64> = (1..n_sets)
        .map(|k| model.quantile(k as f64 / n_sets as f64))
        .collect();
    let mut groups = vec![Vec::new(); n_sets];
    for (d, rec) in samples {
        let k = bounds.partition_point(|&b| b <= *d);
        groups[k].push(rec.clone());
    }
    Ok(groups)
}

fn check_fluctuation_variance(v_d: f64) -> Result<()> {
    if !(v_d >= 0.0) {
        return Err(domain("fluctuation variance must be >= 0", v_d));
    }
    if v_d >= 8.0 {
        return Err(domain("fluctuation variance must be < 8", v_d));
    }
    Ok(())
}

/// Case 2A source: `T_s = (1 - V_d/8)^2`, `eps_s = V_A*V_d/4`.
pub fn equivalent_source_2a(v_a: f64, v_d: f64) -> Result<EquivalentSource> {
    check_fluctuation_variance(v_d)?;
    Ok(EquivalentSource {
        t_s: (1.0 - v_d / 8.0).powi(2),
        eps_s: v_a * v_d / 4.0,
        d_max: 1.0,
    })
}

/// Source followed by channel: `T = T_s*T_c`, `eps = eps_c/T_s + eps_s`.
pub fn overall_channel_2a(src: &EquivalentSource, ch: &ChannelPoint) -> Result<ChannelPoint> {
    if !(src.t_s > 0.0) {
        return Err(Error::UndefinedChannel(src.t_s));
    }
    ChannelPoint::new(src.t_s * ch.t, ch.eps / src.t_s + src.eps_s)
}

pub fn key_rate_case2a(
    params: &SystemParams,
    model: &FluctuationModel,
    ch: &ChannelPoint,
) -> Result<KeyRateResult> {
    let src = equivalent_source_2a(params.v_a, model.variance())?;
    let overall = overall_channel_2a(&src, ch)?;
    let mut r = with_case(key_rate_r0(params, &overall)?, CaseTag::Case2A);
    r.diagnostics = Some(Diagnostics {
        untagged_fraction: 1.0,
        d_max: 1.0,
        t_s: src.t_s,
        eps_s: src.eps_s,
    });
    Ok(r)
}

/// Case 2B source with Alice recording `sqrt(d_max)*x_A`:
/// `T_s = (1 - V_d/8)^2 / d_max`, `eps_s = V_A*V_d*d_max/4`.
pub fn equivalent_source_2b(v_a: f64, v_d: f64, d_max: f64) -> Result<EquivalentSource> {
    if !(d_max > 0.0) {
        return Err(domain("d_max must be > 0", d_max));
    }
    check_fluctuation_variance(v_d)?;
    Ok(EquivalentSource {
        t_s: (1.0 - v_d / 8.0).powi(2) / d_max,
        eps_s: v_a * v_d * d_max / 4.0,
        d_max,
    })
}

/// Smallest cutoff for which the case 2B source does not amplify.
pub fn min_cutoff(v_d: f64) -> f64 {
    (1.0 - v_d / 8.0).powi(2)
}

/// Entropies, mutual information and Holevo bound entering a case 2B rate.
pub fn tagged_terms(
    params: &SystemParams,
    model: &FluctuationModel,
    ch: &ChannelPoint,
    d_max: f64,
    direction: Direction,
) -> Result<(TaggedRateTerms, EquivalentSource, KeyRateResult)> {
    let src = equivalent_source_2b(params.v_a, model.variance(), d_max)?;
    let overall = overall_channel_2a(&src, ch)?;
    let recorded = params.with_v_a(d_max * params.v_a);
    let p_s = model.cdf(d_max);

    let i_ab_prime = mutual_info(&recorded, &overall)?;
    let h_xb = gaussian_entropy(bob_variance(&recorded, &overall))?;
    let h_xa_prime = gaussian_entropy(recorded.v_a)?;
    let (chi, h_conceded, tag) = match direction {
        Direction::Reverse => (
            holevo_bound(&recorded, &overall)?.0,
            h_xb,
            CaseTag::Case2BReverse,
        ),
        Direction::Direct => (
            holevo_direct(&recorded, &overall)?,
            h_xa_prime,
            CaseTag::Case2BDirect,
        ),
    };
    let terms = TaggedRateTerms {
        untagged_fraction: p_s,
        i_ab_prime,
        h_xb,
        h_xa_prime,
        chi_tagged_bound: p_s * chi,
    };
    let result = KeyRateResult {
        rate: params.beta * i_ab_prime - (1.0 - p_s) * h_conceded - p_s * chi,
        i_ab: i_ab_prime,
        chi_be: p_s * chi,
        case_tag: tag,
        diagnostics: Some(Diagnostics {
            untagged_fraction: p_s,
            d_max,
            t_s: src.t_s,
            eps_s: src.eps_s,
        }),
    };
    Ok((terms, src, result))
}

/// Case 2B rate at a fixed cutoff.
pub fn key_rate_case2b(
    params: &SystemParams,
    model: &FluctuationModel,
    ch: &ChannelPoint,
    d_max: f64,
    direction: Direction,
) -> Result<KeyRateResult> {
    tagged_terms(params, model, ch, d_max, direction).map(|t| t.2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmaxOptimum {
    pub d_max: f64,
    pub result: KeyRateResult,
    /// False when no cutoff gives a positive rate; the best point is still
    /// returned.
    pub positive: bool,
}

/// Cutoff search interval: the model support, raised to [`min_cutoff`].
pub fn dmax_interval(model: &FluctuationModel) -> (f64, f64) {
    let (lo, hi) = model.support();
    (lo.max(min_cutoff(model.variance())).min(hi), hi)
}

/// Maximises the case 2B rate over the cutoff: 64-point grid, then
/// golden-section refinement around the best grid point. Ties go to the
/// smaller cutoff.
pub fn optimize_dmax(
    params: &SystemParams,
    model: &FluctuationModel,
    ch: &ChannelPoint,
    direction: Direction,
) -> Result<DmaxOptimum> {
    let rate_at = |d_max: f64| key_rate_case2b(params, model, ch, d_max, direction);
    let finish = |d_max: f64| -> Result<DmaxOptimum> {
        let result = rate_at(d_max)?;
        Ok(DmaxOptimum {
            d_max,
            result,
            positive: result.rate > 0.0,
        })
    };

    let (lo, hi) = dmax_interval(model);
    if matches!(model.kind(), ModelKind::PointMass) || hi - lo <= DMAX_TOL {
        return finish(hi);
    }

    let step = (hi - lo) / (DMAX_GRID_POINTS - 1) as f64;
    let grid = |i: usize| {
        if i == DMAX_GRID_POINTS - 1 {
            hi
        } else {
            lo + i as f64 * step
        }
    };
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..DMAX_GRID_POINTS {
        let r = rate_at(grid(i))?.rate;
        if r > best.1 {
            best = (i, r);
        }
    }
    let a = grid(best.0.saturating_sub(1));
    let b = grid((best.0 + 1).min(DMAX_GRID_POINTS - 1));
    let (x, fx) = golden_max(|d| rate_at(d).map(|r| r.rate), a, b, DMAX_TOL)?;
    let d_max = if fx > best.1 { x } else { grid(best.0) };
    finish(d_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn equivalent_source_2a_examples() {
        let s = equivalent_source_2a(18.0, 0.0).unwrap();
        assert_eq!((s.t_s, s.eps_s), (1.0, 0.0));
        let s = equivalent_source_2a(18.0, 0.003333).unwrap();
        assert!((s.t_s - 0.999_167).abs() < 1e-6);
        assert!((s.eps_s - 0.015).abs() < 1e-5);
        let s = equivalent_source_2a(18.0, 0.01).unwrap();
        assert!((s.t_s - 0.997_502).abs() < 1e-6);
        assert!((s.eps_s - 0.045).abs() < 1e-12);
        assert!(equivalent_source_2a(18.0, 8.0).is_err());
        assert!(equivalent_source_2a(18.0, -1e-3).is_err());
    }

    #[test]
    fn overall_channel_examples() {
        let ch = ChannelPoint::new(0.3, 0.05).unwrap();
        let id = EquivalentSource {
            t_s: 1.0,
            eps_s: 0.0,
            d_max: 1.0,
        };
        assert_eq!(overall_channel_2a(&id, &ch).unwrap(), ch);

        let src = EquivalentSource {
            t_s: 0.999167,
            eps_s: 0.015,
            d_max: 1.0,
        };
        let o = overall_channel_2a(&src, &ChannelPoint::new(0.1, 0.02).unwrap()).unwrap();
        assert!((o.t - 0.099_916_7).abs() < 1e-9);
        assert!((o.eps - 0.035_016_7).abs() < 1e-6);

        let src = EquivalentSource {
            t_s: 0.9975,
            eps_s: 0.045,
            d_max: 1.0,
        };
        let o = overall_channel_2a(&src, &ChannelPoint::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!((o.t, o.eps), (0.9975, 0.045));
    }

    #[test]
    fn equivalent_source_2b_examples() {
        let s = equivalent_source_2b(18.0, 0.0, 1.0).unwrap();
        assert_eq!((s.t_s, s.eps_s), (1.0, 0.0));
        let s = equivalent_source_2b(18.0, 0.003333, 1.05).unwrap();
        assert!((s.t_s - 0.951_588).abs() < 1e-6);
        assert!((s.eps_s - 0.015_748_4).abs() < 1e-6);
        let s = equivalent_source_2b(18.0, 0.01, 1.1).unwrap();
        assert!((s.t_s - 0.907).abs() < 1e-3);
        assert!((s.eps_s - 0.0495).abs() < 1e-12);
        assert!(equivalent_source_2b(18.0, 0.01, 0.0).is_err());
    }

    #[test]
    fn point_mass_reduces_every_case_to_r0() {
        let p = table();
        let m = FluctuationModel::point_mass();
        let ch = p.channel_at(30.0).unwrap();
        let r0 = key_rate_r0(&p, &ch).unwrap().rate;
        assert!((key_rate_case1(&p, &m, &ch).unwrap().rate - r0).abs() < 1e-12);
        assert!((key_rate_case1_refined(&p, &m, &ch).unwrap().rate - r0).abs() < 1e-12);
        assert!((key_rate_case2a(&p, &m, &ch).unwrap().rate - r0).abs() < 1e-12);
        let r2b = key_rate_case2b(&p, &m, &ch, 1.0, Direction::Reverse).unwrap();
        assert!((r2b.rate - r0).abs() < 1e-12);
        let opt = optimize_dmax(&p, &m, &ch, Direction::Reverse).unwrap();
        assert_eq!(opt.d_max, 1.0);
    }

    #[test]
    fn case_tags() {
        let p = table();
        let m = FluctuationModel::uniform(0.9, 1.1).unwrap();
        let ch = p.channel_at(10.0).unwrap();
        assert_eq!(
            key_rate_case1(&p, &m, &ch).unwrap().case_tag,
            CaseTag::Case1
        );
        assert_eq!(
            key_rate_case1_refined(&p, &m, &ch).unwrap().case_tag,
            CaseTag::Case1R
        );
        assert_eq!(
            key_rate_case2a(&p, &m, &ch).unwrap().case_tag,
            CaseTag::Case2A
        );
        let d = key_rate_case2b(&p, &m, &ch, 1.1, Direction::Direct).unwrap();
        assert_eq!(d.case_tag, CaseTag::Case2BDirect);
    }

    #[test]
    fn partition_examples() {
        let m = FluctuationModel::uniform(0.9, 1.1).unwrap();
        let samples: Vec<(f64, usize)> = [0.91, 0.99, 1.0, 1.05, 0.95]
            .iter()
            .copied()
            .enumerate()
            .map(|(i, d)| (d, i))
            .collect();
        let g = partition_sets(&samples, 2, &m).unwrap();
        assert_eq!(g, vec![vec![0, 1, 4], vec![2, 3]]);
        let g = partition_sets(&samples, 1, &m).unwrap();
        assert_eq!(g, vec![vec![0, 1, 2, 3, 4]]);
        let empty: Vec<(f64, u8)> = Vec::new();
        assert!(partition_sets(&empty, 3, &m)
            .unwrap()
            .iter()
            .all(Vec::is_empty));
        assert!(partition_sets(&samples, 0, &m).is_err());
    }

    #[test]
    fn direct_rate_matches_covariance_oracle() {
        // p_s = 1 at the top of the support; value from
        // tests/oracles/reference_values.py
        let p = table();
        let m = FluctuationModel::uniform(0.95, 1.05).unwrap();
        let ch = p.channel_at(0.0).unwrap();
        let r = key_rate_case2b(&p, &m, &ch, 1.05, Direction::Direct).unwrap();
        assert!(
            (r.rate - -0.054_559_641_770_878_464).abs() < 1e-9,
            "{}",
            r.rate
        );
    }
}
