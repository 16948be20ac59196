//! The three subcommands. Each returns the artifact text; writing it is the
//! caller's job.

use std::fmt::Write as _;

use cvqkd::cases::{
    equivalent_source_2a, equivalent_source_2b, key_rate_case1, key_rate_case1_refined,
    key_rate_case2a, key_rate_case2b, optimize_dmax, overall_channel_2a, Direction,
};
use cvqkd::fluctuation::FluctuationModel;
use cvqkd::montecarlo::{estimate_params, estimate_with_errors, simulate, Recording, SampleSet};
use cvqkd::rate::{bob_variance, key_rate_r0, KeyRateResult};
use cvqkd::{ChannelPoint, SystemParams};
use rayon::prelude::*;

use crate::config::{CaseName, RunConfig};
use crate::{CliError, SCHEMA_VERSION};

/// Below this many pulses a statistical check is reported as underpowered
/// instead of pass/fail.
pub const MIN_POWERED_N: usize = 10_000;

/// Checks pass when `|measured - expected| <= SIGMAS * stderr`.
pub const SIGMAS: f64 = 4.0;

pub const SCAN_COLUMNS: &str = "distance_km,t_c,rate_clamped,rate_raw,p_s,d_max_opt";
pub const OPTIMIZE_COLUMNS: &str = "distance_km,d_max_opt,rate";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides `mc.seed`.
    pub seed: Option<u64>,
    /// Worker threads; `None` or 0 uses all cores.
    pub workers: Option<usize>,
}

impl RunOptions {
    fn seed(&self, cfg: &RunConfig) -> Option<u64> {
        self.seed.or(cfg.mc.as_ref().map(|m| m.seed))
    }
}

fn header(command: &str, cfg: &RunConfig, opts: &RunOptions) -> String {
    let s = &cfg.system;
    let d_max = match cfg.run.d_max {
        Some(d) => d.to_string(),
        None => "opt".into(),
    };
    let seed = opts.seed(cfg).map_or("none".into(), |s| s.to_string());
    format!(
        "# cvqkd-csv v{SCHEMA_VERSION} command={command} case={} direction={} model={} d_max={d_max} \
         eta={} v_el={} eps_c={} v_a={} beta={} alpha_db_per_km={} seed={seed}\n",
        cfg.run.case,
        direction_str(cfg.run.direction),
        cfg.model,
        s.eta,
        s.v_el,
        s.eps_c,
        s.v_a,
        s.beta,
        s.alpha_db_per_km,
    )
}

fn direction_str(d: Direction) -> &'static str {
    match d {
        Direction::Direct => "direct",
        Direction::Reverse => "reverse",
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

/// Evaluates `f` at every grid distance on the worker pool; results come
/// back in grid order.
fn over_grid<T, F>(cfg: &RunConfig, opts: &RunOptions, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(f64, &ChannelPoint) -> cvqkd::Result<T> + Sync,
{
    let points = cfg.grid.points()?;
    let system = cfg.system;
    pool(opts.workers)?.install(|| {
        points
            .par_iter()
            .map(|&km| f(km, &system.channel_at(km)?))
            .collect::<cvqkd::Result<Vec<T>>>()
            .map_err(CliError::from)
    })
}

fn case_rate(
    cfg: &RunConfig,
    model: &FluctuationModel,
    ch: &ChannelPoint,
) -> cvqkd::Result<KeyRateResult> {
    let p = &cfg.system;
    match cfg.run.case {
        CaseName::Case0 => key_rate_r0(p, ch),
        CaseName::Case1 => key_rate_case1(p, model, ch),
        CaseName::Case1r => key_rate_case1_refined(p, model, ch),
        CaseName::Case2a => key_rate_case2a(p, model, ch),
        CaseName::Case2b => match cfg.run.d_max {
            Some(d) => key_rate_case2b(p, model, ch, d, cfg.run.direction),
            None => optimize_dmax(p, model, ch, cfg.run.direction).map(|o| o.result),
        },
    }
}

/// Rate versus distance. `p_s` and `d_max_opt` are filled for case 2B only
/// (`d_max_opt` is the fixed `run.d_max` when one is configured).
pub fn scan(cfg: &RunConfig, opts: &RunOptions) -> Result<String, CliError> {
    let model = cfg.model.build()?;
    let rows = over_grid(cfg, opts, |km, ch| {
        let r = case_rate(cfg, &model, ch)?;
        let mut row = format!("{km},{:e},{:e},{:e},", ch.t, r.rate.max(0.0), r.rate);
        if let (CaseName::Case2b, Some(d)) = (cfg.run.case, r.diagnostics) {
            let _ = write!(row, "{:e},{}", d.untagged_fraction, d.d_max);
        } else {
            row.push(',');
        }
        Ok(row)
    })?;
    Ok(assemble(header("scan", cfg, opts), SCAN_COLUMNS, rows))
}

/// Optimal case 2B cutoff and the rate it achieves at each distance.
pub fn optimize(cfg: &RunConfig, opts: &RunOptions) -> Result<String, CliError> {
    if cfg.run.case != CaseName::Case2b {
        return Err(CliError::Config(format!(
            "optimize requires run.case = \"case2b\", got {}",
            cfg.run.case
        )));
    }
    if cfg.run.d_max.is_some() {
        return Err(CliError::Config(
            "optimize chooses d_max itself; remove run.d_max".into(),
        ));
    }
    let model = cfg.model.build()?;
    let rows = over_grid(cfg, opts, |km, ch| {
        let o = optimize_dmax(&cfg.system, &model, ch, cfg.run.direction)?;
        Ok(format!("{km},{},{:e}", o.d_max, o.result.rate))
    })?;
    Ok(assemble(
        header("optimize", cfg, opts),
        OPTIMIZE_COLUMNS,
        rows,
    ))
}

fn assemble(header: String, columns: &str, rows: Vec<String>) -> String {
    let mut out = header;
    out.push_str(columns);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Outcome of one statistical check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Underpowered,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub expected: f64,
    pub stderr: f64,
    pub seed: u64,
    pub n: usize,
    pub status: Status,
}

impl Check {
    fn new(
        name: &'static str,
        measured: f64,
        expected: f64,
        stderr: f64,
        seed: u64,
        n: usize,
    ) -> Self {
        let status = if n < MIN_POWERED_N {
            Status::Underpowered
        } else if (measured - expected).abs() <= SIGMAS * stderr {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name,
            measured,
            expected,
            stderr,
            seed,
            n,
            status,
        }
    }

    fn line(&self) -> String {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Underpowered => "UNDERPOWERED",
        };
        format!(
            "{status} {} measured={:e} expected={:e} tol={:e} stderr={:e} seed={} n={}",
            self.name,
            self.measured,
            self.expected,
            SIGMAS * self.stderr,
            self.stderr,
            self.seed,
            self.n
        )
    }
}

/// Text report plus the individual checks.
#[derive(Debug, Clone)]
pub struct Report {
    pub text: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .count()
    }
}

/// Second moment of `x` with the standard error of the mean of `x^2`.
fn second_moment(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / n;
    let m4 = x.iter().map(|v| v.powi(4)).sum::<f64>() / n;
    (m2, ((m4 - m2 * m2).max(0.0) / n).sqrt())
}

/// Monte Carlo cross-checks of the estimator and the equivalent-source
/// reductions. Three independent runs (truth, desired and scaled recording)
/// use seeds `seed`, `seed + 1` and `seed + 2`.
pub fn validate(cfg: &RunConfig, opts: &RunOptions) -> Result<Report, CliError> {
    let mc = cfg
        .mc
        .as_ref()
        .ok_or_else(|| CliError::Config("validate needs an [mc] section".into()))?;
    let seed = opts.seed(cfg).unwrap_or(mc.seed);
    let model = cfg.model.build()?;
    let p = cfg.system;
    let sim = SystemParams {
        eta: mc.detector_eta.unwrap_or(p.eta),
        ..p
    };
    let ch = p.channel_at(mc.distance_km)?;
    let v_d = model.variance();
    let batches = mc.batches.min(mc.n / 2).max(2);
    let mut checks = Vec::new();

    let run = |recording, s: u64| -> Result<SampleSet, CliError> {
        Ok(simulate(&sim, &ch, &model, recording, mc.n, s)?)
    };
    let mut estimate =
        |prefix: [&'static str; 2], s: &SampleSet, want: ChannelPoint| -> Result<(), CliError> {
            match estimate_with_errors(s, p.eta, p.v_el, batches) {
                Ok(e) => {
                    checks.push(Check::new(
                        prefix[0],
                        e.estimate.t,
                        want.t,
                        e.t_stderr,
                        s.seed,
                        s.len(),
                    ));
                    checks.push(Check::new(
                        prefix[1],
                        e.estimate.eps,
                        want.eps,
                        e.eps_stderr,
                        s.seed,
                        s.len(),
                    ));
                    Ok(())
                }
                // Too few pulses for batch errors: report the point estimate only.
                Err(_) if s.len() < MIN_POWERED_N => {
                    let e = estimate_params(s, p.eta, p.v_el)?;
                    checks.push(Check::new(
                        prefix[0],
                        e.t,
                        want.t,
                        f64::NAN,
                        s.seed,
                        s.len(),
                    ));
                    checks.push(Check::new(
                        prefix[1],
                        e.eps,
                        want.eps,
                        f64::NAN,
                        s.seed,
                        s.len(),
                    ));
                    Ok(())
                }
                Err(e) => Err(e.into()),
            }
        };

    let truth = run(Recording::Truth, seed)?;
    estimate(["truth.t", "truth.eps"], &truth, ch)?;
    let (m2, se) = second_moment(&truth.x_bob);
    let bob_check = Check::new(
        "truth.bob_variance",
        m2,
        bob_variance(&p, &ch),
        se,
        truth.seed,
        truth.len(),
    );
    drop(truth);

    let desired = run(Recording::Desired, seed.wrapping_add(1))?;
    let want = overall_channel_2a(&equivalent_source_2a(p.v_a, v_d)?, &ch)?;
    estimate(["desired.t", "desired.eps"], &desired, want)?;
    drop(desired);

    let d_max = cfg.run.d_max.unwrap_or(model.support().1);
    let scaled = run(Recording::Scaled(d_max), seed.wrapping_add(2))?;
    let want = overall_channel_2a(&equivalent_source_2b(p.v_a, v_d, d_max)?, &ch)?;
    estimate(["scaled.t", "scaled.eps"], &scaled, want)?;
    drop(scaled);
    checks.push(bob_check);

    let mut text = format!(
        "# cvqkd-validate v{SCHEMA_VERSION} model={} distance_km={} t_c={:e} eps_c={:e} d_max={d_max} \
         estimator_eta={} detector_eta={} sigmas={SIGMAS} batches={batches}\n",
        cfg.model, mc.distance_km, ch.t, ch.eps, p.eta, sim.eta,
    );
    for c in &checks {
        text.push_str(&c.line());
        text.push('\n');
    }
    let count = |s| checks.iter().filter(|c| c.status == s).count();
    let _ = writeln!(
        text,
        "summary pass={} fail={} underpowered={}",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Underpowered)
    );
    Ok(Report { text, checks })
}
