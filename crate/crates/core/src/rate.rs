//! Ideal GMCS key rate with reverse reconciliation and a trusted homodyne
//! detector.
//!
//! The channel is summarised by its transmittance `T` and input-referred
//! excess noise `eps`. Eve is assumed to purify the state shared by Alice and
//! the input of Bob's detector; detector inefficiency and electronic noise
//! are not hers. The conditional entropies use the usual four symplectic
//! eigenvalues: two for the Alice-Bob state and two for Alice's mode
//! conditioned on Bob's homodyne outcome.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::{ChannelPoint, SystemParams};

/// Slack allowed on discriminants and eigenvalue arguments before a state is
/// declared nonphysical.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Which security analysis produced a [`KeyRateResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    Case0,
    Case1,
    Case1R,
    Case2A,
    Case2BDirect,
    Case2BReverse,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::Case0 => "case0",
            CaseTag::Case1 => "case1",
            CaseTag::Case1R => "case1r",
            CaseTag::Case2A => "case2a",
            CaseTag::Case2BDirect => "case2b_direct",
            CaseTag::Case2BReverse => "case2b_reverse",
        }
    }
}

/// Equivalent-source quantities attached to case 2 results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Probability mass of untagged pulses (`d <= d_max`). 1 for case 2A.
    pub untagged_fraction: f64,
    /// Tagging cutoff. 1 for case 2A.
    pub d_max: f64,
    pub t_s: f64,
    pub eps_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// Bits per pulse. Not clamped; negative means no key.
    pub rate: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub case_tag: CaseTag,
    pub diagnostics: Option<Diagnostics>,
}

/// Noise decomposition, intermediate coefficients and symplectic
/// eigenvalues behind a Holevo bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolevoBreakdown {
    pub chi_line: f64,
    pub chi_hom: f64,
    pub chi_tot: f64,
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub d_coef: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

/// Entropy of a thermal state with mean photon number `x`, in bits:
/// `(x+1)log2(x+1) - x log2(x)`, with `G(0) = 0`.
pub fn g_func(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("g_func argument must be >= 0", x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// `g_func((lambda - 1)/2)` with roundoff below 1 absorbed.
fn g_of_eigenvalue(lambda: f64) -> Result<f64> {
    let x = (lambda - 1.0) / 2.0;
    if x < 0.0 && x > -PHYSICAL_TOL {
        return Ok(0.0);
    }
    if x < 0.0 {
        return Err(Error::NonPhysicalState {
            which: "symplectic eigenvalue below 1",
            discriminant: lambda - 1.0,
        });
    }
    g_func(x)
}

fn check_inputs(params: &SystemParams, ch: &ChannelPoint) -> Result<()> {
    params.validate()?;
    ch.validate()
}

fn noise_terms(params: &SystemParams, ch: &ChannelPoint) -> (f64, f64, f64) {
    let chi_line = 1.0 / ch.t - 1.0 + ch.eps;
    let chi_hom = params.chi_hom();
    let chi_tot = chi_line + chi_hom / ch.t;
    (chi_line, chi_hom, chi_tot)
}

/// Alice-Bob mutual information for Gaussian modulation and homodyne
/// detection, `0.5*log2((V_A + 1 + chi_tot)/(1 + chi_tot))`.
pub fn mutual_info(params: &SystemParams, ch: &ChannelPoint) -> Result<f64> {
    check_inputs(params, ch)?;
    let (_, _, chi_tot) = noise_terms(params, ch);
    Ok(0.5 * ((params.v_a + 1.0 + chi_tot) / (1.0 + chi_tot)).log2())
}

/// Roots of `z^2 - s z + p = 0` returned as square roots, larger first.
fn sqrt_roots(s: f64, p: f64, which: &'static str) -> Result<(f64, f64)> {
    let mut disc = s * s - 4.0 * p;
    if disc < 0.0 {
        if disc < -PHYSICAL_TOL * s.abs().max(1.0).powi(2) {
            return Err(Error::NonPhysicalState {
                which,
                discriminant: disc,
            });
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let hi = 0.5 * (s + root);
    // Product form avoids cancellation in the small root.
    let lo = if hi > 0.0 { p / hi } else { 0.5 * (s - root) };
    Ok((hi.max(0.0).sqrt(), lo.max(0.0).sqrt()))
}

/// Holevo information between Bob's homodyne data and Eve, with the
/// breakdown of every intermediate quantity. `V = V_A + 1`.
pub fn holevo_bound(params: &SystemParams, ch: &ChannelPoint) -> Result<(f64, HolevoBreakdown)> {
    check_inputs(params, ch)?;
    let (chi_line, chi_hom, chi_tot) = noise_terms(params, ch);
    let t = ch.t;
    let v = params.v_a + 1.0;

    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line).powi(2);
    let b = t * t * (v * chi_line + 1.0).powi(2);
    let sqrt_b = b.sqrt();
    let denom = t * (v + chi_tot);
    let c = (v * sqrt_b + t * (v + chi_line) + a * chi_hom) / denom;
    let d = sqrt_b * (v + sqrt_b * chi_hom) / denom;

    let (lambda1, lambda2) = sqrt_roots(a, b, "A^2 - 4B")?;
    let (lambda3, lambda4) = sqrt_roots(c, d, "C^2 - 4D")?;

    let chi = g_of_eigenvalue(lambda1)? + g_of_eigenvalue(lambda2)?
        - g_of_eigenvalue(lambda3)?
        - g_of_eigenvalue(lambda4)?;

    let breakdown = HolevoBreakdown {
        chi_line,
        chi_hom,
        chi_tot,
        a_coef: a,
        b_coef: b,
        c_coef: c,
        d_coef: d,
        lambda1,
        lambda2,
        lambda3,
        lambda4,
    };
    // Strong subadditivity keeps chi >= 0; tiny negatives are roundoff.
    Ok((chi.max(0.0), breakdown))
}

/// Holevo information between Alice's data and Eve (direct
/// reconciliation). Alice's coherent-state data amount to a heterodyne
/// measurement of her half of the equivalent entangled state, which leaves
/// Bob's input mode with symplectic eigenvalue `1 + T*eps`.
pub fn holevo_direct(params: &SystemParams, ch: &ChannelPoint) -> Result<f64> {
    let (_, bd) = holevo_bound(params, ch)?;
    let conditional = 1.0 + ch.t * ch.eps;
    let chi =
        g_of_eigenvalue(bd.lambda1)? + g_of_eigenvalue(bd.lambda2)? - g_of_eigenvalue(conditional)?;
    Ok(chi.max(0.0))
}

/// Variance of Bob's homodyne outcomes, `T*eta*(V_A + eps) + 1 + v_el`.
pub fn bob_variance(params: &SystemParams, ch: &ChannelPoint) -> f64 {
    ch.t * params.eta * (params.v_a + ch.eps) + 1.0 + params.v_el
}

/// Differential entropy in bits of a Gaussian variable with the given
/// variance (shot-noise units).
pub fn gaussian_entropy(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(domain("variance must be > 0", variance));
    }
    Ok(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).log2())
}

/// Ideal reverse-reconciliation rate `beta*I_AB - chi_BE`.
pub fn key_rate_r0(params: &SystemParams, ch: &ChannelPoint) -> Result<KeyRateResult> {
    let i_ab = mutual_info(params, ch)?;
    let (chi_be, _) = holevo_bound(params, ch)?;
    Ok(KeyRateResult {
        rate: params.beta * i_ab - chi_be,
        i_ab,
        chi_be,
        case_tag: CaseTag::Case0,
        diagnostics: None,
    })
}
