//! Homodyne decoding flaws: an unbalanced signal/LO beam splitter and a
//! wrong LO phase, with the software corrections that undo them.
//!
//! Signal quadratures are `x_s` and `measured_p` (the latter named to keep
//! it apart from the untagged fraction of the tagging analysis). A
//! wavelength-dependent splitting ratio is not modelled; a narrow bandpass
//! filter (about 2 nm, 20 dB extinction) ahead of the splitter removes it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Local oscillator phase for an ideal measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoPhase {
    /// Phase 0, measures `x`.
    X,
    /// Phase pi/2, measures `p`.
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneConfig {
    /// Splitting ratio `(50 + delta):(50 - delta)`, percentage points.
    pub delta: f64,
    /// LO phase error, radians.
    pub theta: f64,
    /// LO amplitude, shot-noise units.
    pub x_lo: f64,
    /// Photodiode constant.
    pub k_prefactor: f64,
}

impl Default for HomodyneConfig {
    fn default() -> Self {
        Self {
            delta: 0.0,
            theta: 0.0,
            x_lo: 1e3,
            k_prefactor: 1.0,
        }
    }
}

impl HomodyneConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.x_lo > 0.0) {
            return Err(domain("x_lo must be > 0", self.x_lo));
        }
        if !(self.k_prefactor > 0.0) {
            return Err(domain("k_prefactor must be > 0", self.k_prefactor));
        }
        Ok(())
    }

    /// Raw photocurrent difference `I1 - I2` for the given signal, with
    /// this configuration's splitter imbalance and LO phase.
    pub fn intensity_difference(&self, x_s: f64, measured_p: f64) -> f64 {
        let r = self.delta / 100.0;
        let (t1, t2) = ((0.5 + r).sqrt(), (0.5 - r).sqrt());
        let (lo_x, lo_p) = (self.x_lo * self.theta.cos(), self.x_lo * self.theta.sin());
        let x1 = t1 * x_s + t2 * lo_x;
        let p1 = t1 * measured_p + t2 * lo_p;
        let x2 = -t2 * x_s + t1 * lo_x;
        let p2 = -t2 * measured_p + t1 * lo_p;
        let i1 = 0.5 * self.k_prefactor * (x1 * x1 + p1 * p1 + 1.0);
        let i2 = 0.5 * self.k_prefactor * (x2 * x2 + p2 * p2 + 1.0);
        i1 - i2
    }

    /// Photocurrent difference normalised by `k*x_lo`.
    pub fn measure(&self, x_s: f64, measured_p: f64) -> f64 {
        self.intensity_difference(x_s, measured_p) / (self.k_prefactor * self.x_lo)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.abs() < 50.0) {
        return Err(domain("|delta| must be < 50", delta));
    }
    Ok(())
}

/// Ideal balanced homodyne outcome after normalising by `k*x_lo`.
pub fn homodyne_ideal(x_s: f64, measured_p: f64, x_lo: f64, phase: LoPhase) -> Result<f64> {
    if !(x_lo > 0.0) {
        return Err(domain("x_lo must be > 0", x_lo));
    }
    Ok(match phase {
        LoPhase::X => x_s,
        LoPhase::P => measured_p,
    })
}

/// Gain on the signal quadrature, `2*sqrt(1/2 + r)*sqrt(1/2 - r)` with
/// `r = delta/100`.
pub fn unbalanced_scale(delta: f64) -> f64 {
    let r = delta / 100.0;
    2.0 * (0.25 - r * r).sqrt()
}

/// Unbalanced outcome in the strong-LO limit: `scale*x_s - (delta/100)*x_lo`.
pub fn homodyne_unbalanced(x_s: f64, x_lo: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(unbalanced_scale(delta) * x_s - delta / 100.0 * x_lo)
}

/// Unbalanced outcome keeping the signal-squared terms that the strong-LO
/// form drops.
pub fn homodyne_unbalanced_exact(x_s: f64, measured_p: f64, x_lo: f64, delta: f64) -> Result<f64> {
    let approx = homodyne_unbalanced(x_s, x_lo, delta)?;
    if !(x_lo > 0.0) {
        return Err(domain("x_lo must be > 0", x_lo));
    }
    Ok(approx + delta / 100.0 * (x_s * x_s + measured_p * measured_p) / x_lo)
}

/// Undoes [`homodyne_unbalanced`] for a known, constant `delta`: displace by
/// the LO leakage then rescale.
pub fn compensate_unbalanced(measured: f64, delta: f64, x_lo: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok((measured + delta / 100.0 * x_lo) / unbalanced_scale(delta))
}

/// Excess noise from a splitting ratio that wanders with variance
/// `v_delta`: `v_delta*x_lo^2/10000`.
pub fn delta_variance_noise(v_delta: f64, x_lo: f64) -> Result<f64> {
    if !(v_delta >= 0.0) {
        return Err(domain("v_delta must be >= 0", v_delta));
    }
    Ok(v_delta * x_lo * x_lo / 1e4)
}

/// Outcome with the LO phase off by `theta`: `x_s cos(theta) + p_s sin(theta)`.
pub fn homodyne_phase_error(x_s: f64, measured_p: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    x_s * c + measured_p * s
}

/// Rotates Alice's recorded pair by `theta` so its first component lines
/// up with a measurement made at LO phase `theta`.
pub fn phase_remap(x_a: f64, p_a: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (x_a * c + p_a * s, -x_a * s + p_a * c)
}
