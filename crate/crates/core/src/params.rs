use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Detector and protocol constants. Noises and variances are in shot-noise
/// units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Homodyne detection efficiency, `0 < eta <= 1`.
    pub eta: f64,
    /// Electronic noise of the homodyne detector.
    pub v_el: f64,
    /// Channel excess noise referred to the channel input.
    pub eps_c: f64,
    /// Modulation variance `V_A`.
    pub v_a: f64,
    /// Reconciliation efficiency, `0 <= beta <= 1`.
    pub beta: f64,
    /// Fiber attenuation in dB/km.
    pub alpha_db_per_km: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            eta: 0.60,
            v_el: 0.02,
            eps_c: 0.02,
            v_a: 18.0,
            beta: 0.956,
            alpha_db_per_km: 0.2,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(domain("eta must be in (0, 1]", self.eta));
        }
        if !(self.v_el >= 0.0) {
            return Err(domain("v_el must be >= 0", self.v_el));
        }
        if !(self.eps_c >= 0.0) {
            return Err(domain("eps_c must be >= 0", self.eps_c));
        }
        // V_A = 0 is accepted so the zero-information limit can be evaluated.
        if !(self.v_a >= 0.0 && self.v_a.is_finite()) {
            return Err(domain("v_a must be >= 0", self.v_a));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(domain("beta must be in [0, 1]", self.beta));
        }
        if !(self.alpha_db_per_km > 0.0) {
            return Err(domain("alpha_db_per_km must be > 0", self.alpha_db_per_km));
        }
        Ok(())
    }

    /// Channel at `distance_km` with this system's attenuation and `eps_c`.
    pub fn channel_at(&self, distance_km: f64) -> Result<ChannelPoint> {
        let t = channel_transmittance(distance_km, self.alpha_db_per_km)?;
        ChannelPoint::new(t, self.eps_c)
    }

    pub fn with_v_a(mut self, v_a: f64) -> Self {
        self.v_a = v_a;
        self
    }

    /// Detector-added noise referred to the channel input, `(1 + v_el)/eta - 1`.
    pub fn chi_hom(&self) -> f64 {
        (1.0 + self.v_el) / self.eta - 1.0
    }
}

/// Transmittance and input-referred excess noise of a Gaussian channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPoint {
    pub t: f64,
    pub eps: f64,
}

impl ChannelPoint {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        let ch = Self { t, eps };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::UndefinedChannel(self.t));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(domain("excess noise must be >= 0", self.eps));
        }
        Ok(())
    }
}

/// Fiber transmittance `10^(-alpha*L/10)`.
pub fn channel_transmittance(distance_km: f64, alpha_db_per_km: f64) -> Result<f64> {
    if !(distance_km >= 0.0) {
        return Err(domain("distance must be >= 0", distance_km));
    }
    if !(alpha_db_per_km > 0.0) {
        return Err(domain("attenuation must be > 0", alpha_db_per_km));
    }
    Ok(10f64.powf(-alpha_db_per_km * distance_km / 10.0))
}
