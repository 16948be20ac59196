//! Pulse-level simulation of one quadrature of a GMCS session with a
//! fluctuating source, and the covariance estimators Alice and Bob use for
//! `T` and `eps`.
//!
//! For pulse `i`: `x_A ~ N(0, V_A)`, `d ~ model`, the channel sees
//! `sqrt(d)*x_A`, and Bob reads `sqrt(T*eta)*sqrt(d)*x_A + n` with
//! `Var(n) = T*eta*eps + 1 + v_el`. What Alice writes down depends on the
//! [`Recording`] policy.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fluctuation::FluctuationModel;
use crate::params::{ChannelPoint, SystemParams};
use crate::rng::fill_chunked;

/// What Alice records for each pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recording {
    /// The value actually sent, `sqrt(d)*x_A` (Alice monitors `d`).
    Truth,
    /// The intended value `x_A`.
    Desired,
    /// `sqrt(d_max)*x_A`, the tagging record.
    Scaled(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub x_recorded: Vec<f64>,
    pub x_sent: Vec<f64>,
    pub x_bob: Vec<f64>,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.x_bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_bob.is_empty()
    }

    /// Writes `recorded sent bob` rows, whitespace separated, with a `#`
    /// header line.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# n={} seed={} columns: recorded sent bob",
            self.len(),
            self.seed
        )?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:e} {:e} {:e}",
                self.x_recorded[i], self.x_sent[i], self.x_bob[i]
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Pulse {
    recorded: f64,
    sent: f64,
    bob: f64,
}

/// Simulates `n` pulses. Output is identical for a given seed whatever the
/// number of worker threads.
pub fn simulate(
    params: &SystemParams,
    ch: &ChannelPoint,
    model: &FluctuationModel,
    recording: Recording,
    n: usize,
    seed: u64,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(domain("sample count must be >= 1", 0.0));
    }
    params.validate()?;
    ch.validate()?;
    let record_scale = match recording {
        Recording::Scaled(d_max) if !(d_max > 0.0) => {
            return Err(domain("d_max must be > 0", d_max))
        }
        Recording::Scaled(d_max) => Some(d_max.sqrt()),
        _ => None,
    };
    let sigma_a = params.v_a.sqrt();
    let gain = (ch.t * params.eta).sqrt();
    let sigma_noise = (ch.t * params.eta * ch.eps + 1.0 + params.v_el).sqrt();

    let mut pulses = vec![Pulse::default(); n];
    fill_chunked(&mut pulses, seed, |rng, _, slice| {
        for p in slice.iter_mut() {
            let x_a = sigma_a * rng.sample::<f64, _>(StandardNormal);
            let d = model.draw(rng);
            let noise = sigma_noise * rng.sample::<f64, _>(StandardNormal);
            let sent = d.sqrt() * x_a;
            p.sent = sent;
            p.bob = gain * sent + noise;
            p.recorded = match (recording, record_scale) {
                (Recording::Truth, _) => sent,
                (Recording::Desired, _) => x_a,
                (Recording::Scaled(_), Some(s)) => s * x_a,
                (Recording::Scaled(_), None) => unreachable!(),
            };
        }
    });

    let mut set = SampleSet {
        x_recorded: Vec::with_capacity(n),
        x_sent: Vec::with_capacity(n),
        x_bob: Vec::with_capacity(n),
        seed,
    };
    for p in pulses {
        set.x_recorded.push(p.recorded);
        set.x_sent.push(p.sent);
        set.x_bob.push(p.bob);
    }
    Ok(set)
}

/// Second moments of a sample set (the data are centred by construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub recorded_sq: f64,
    pub sent_sq: f64,
    pub bob_sq: f64,
    pub recorded_bob: f64,
    pub sent_bob: f64,
}

pub fn moments(samples: &SampleSet) -> Moments {
    moments_of(&samples.x_recorded, &samples.x_sent, &samples.x_bob)
}

fn moments_of(rec: &[f64], sent: &[f64], bob: &[f64]) -> Moments {
    let n = bob.len() as f64;
    let mut m = Moments {
        recorded_sq: 0.0,
        sent_sq: 0.0,
        bob_sq: 0.0,
        recorded_bob: 0.0,
        sent_bob: 0.0,
    };
    for i in 0..bob.len() {
        m.recorded_sq += rec[i] * rec[i];
        m.sent_sq += sent[i] * sent[i];
        m.bob_sq += bob[i] * bob[i];
        m.recorded_bob += rec[i] * bob[i];
        m.sent_bob += sent[i] * bob[i];
    }
    m.recorded_sq /= n;
    m.sent_sq /= n;
    m.bob_sq /= n;
    m.recorded_bob /= n;
    m.sent_bob /= n;
    m
}

fn estimate_slices(rec: &[f64], bob: &[f64], eta: f64, v_el: f64) -> Result<ChannelPoint> {
    if bob.len() < 2 {
        return Err(Error::DegenerateData("need at least two samples"));
    }
    let n = bob.len() as f64;
    let (mut rr, mut rb) = (0.0, 0.0);
    for (r, b) in rec.iter().zip(bob) {
        rr += r * r;
        rb += r * b;
    }
    rr /= n;
    rb /= n;
    if rr == 0.0 {
        return Err(Error::DegenerateData(
            "recorded quadratures have zero variance",
        ));
    }
    let sqrt_t = rb / (eta.sqrt() * rr);
    if !(sqrt_t > 0.0) {
        return Err(Error::EstimationFailure(sqrt_t * sqrt_t * sqrt_t.signum()));
    }
    let t = sqrt_t * sqrt_t;
    let gain = (t * eta).sqrt();
    let residual = rec
        .iter()
        .zip(bob)
        .map(|(r, b)| (b - gain * r).powi(2))
        .sum::<f64>()
        / n;
    Ok(ChannelPoint {
        t,
        eps: (residual - 1.0 - v_el) / (t * eta),
    })
}

/// Estimates `(T, eps)` from recorded and measured quadratures:
/// `sqrt(T) = <x_r x_B> / (sqrt(eta) <x_r^2>)` and
/// `eps = (<(x_B - sqrt(T eta) x_r)^2> - 1 - v_el) / (T eta)`.
///
/// The result is not range-checked; statistical noise can push `T` above 1
/// or `eps` below 0.
pub fn estimate_params(samples: &SampleSet, eta: f64, v_el: f64) -> Result<ChannelPoint> {
    if !(eta > 0.0) {
        return Err(domain("eta must be > 0", eta));
    }
    estimate_slices(&samples.x_recorded, &samples.x_bob, eta, v_el)
}

/// Estimate plus batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithErrors {
    pub estimate: ChannelPoint,
    pub t_stderr: f64,
    pub eps_stderr: f64,
}

/// Runs [`estimate_params`] on the whole set and on `batches` contiguous
/// batches; the spread of the batch estimates gives the standard errors.
pub fn estimate_with_errors(
    samples: &SampleSet,
    eta: f64,
    v_el: f64,
    batches: usize,
) -> Result<EstimateWithErrors> {
    let estimate = estimate_params(samples, eta, v_el)?;
    let n = samples.len();
    if batches < 2 || n / batches < 2 {
        return Err(Error::DegenerateData("too few samples for batch errors"));
    }
    let size = n / batches;
    let mut ts = Vec::with_capacity(batches);
    let mut es = Vec::with_capacity(batches);
    for b in 0..batches {
        let r = b * size..(b + 1) * size;
        let e = estimate_slices(&samples.x_recorded[r.clone()], &samples.x_bob[r], eta, v_el)?;
        ts.push(e.t);
        es.push(e.eps);
    }
    let stderr = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (var / v.len() as f64).sqrt()
    };
    Ok(EstimateWithErrors {
        estimate,
        t_stderr: stderr(&ts),
        eps_stderr: stderr(&es),
    })
}

/// Pearson correlation of two equally long sequences.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}
