//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations, each over a uniform distance grid `0, step, .., stop`:
//! key rate per case, optimal case 2B cutoff, and maximum distance. The
//! system uses the reference detector with caller-chosen `V_A` and `eps_c`.
//!
//! The `*_impl` functions carry the logic and are what the native tests
//! exercise; the exported wrappers only convert errors.

use cvqkd::cases::{
    key_rate_case1, key_rate_case1_refined, key_rate_case2a, optimize_dmax, Direction,
};
use cvqkd::fluctuation::FluctuationModel;
use cvqkd::rate::key_rate_r0;
use cvqkd::search::max_distance;
use cvqkd::{ChannelPoint, SystemParams};
use wasm_bindgen::prelude::*;

/// Grids longer than this are refused to keep the page responsive.
pub const MAX_GRID_POINTS: usize = 5_000;

const SEARCH_LIMIT_KM: f64 = 400.0;

/// `kind` is `point`, `uniform` (`param` = half-width) or `gaussian`
/// (`param` = variance); all are centred on 1.
pub fn model(kind: &str, param: f64) -> Result<FluctuationModel, String> {
    let m = match kind {
        "point" => Ok(FluctuationModel::point_mass()),
        "uniform" => FluctuationModel::uniform(1.0 - param, 1.0 + param),
        "gaussian" => FluctuationModel::gaussian(1.0, param),
        _ => return Err(format!("unknown model {kind:?}")),
    };
    m.map_err(|e| e.to_string())
}

fn system(v_a: f64, eps_c: f64) -> Result<SystemParams, String> {
    let p = SystemParams {
        v_a,
        eps_c,
        ..SystemParams::default()
    };
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn grid(stop_km: f64, step_km: f64) -> Result<Vec<f64>, String> {
    if !(step_km > 0.0 && stop_km >= 0.0 && stop_km.is_finite()) {
        return Err(format!("bad grid stop={stop_km} step={step_km}"));
    }
    let n = (stop_km / step_km * (1.0 + 1e-12)).floor() as usize + 1;
    if n > MAX_GRID_POINTS {
        return Err(format!("grid has {n} points; limit is {MAX_GRID_POINTS}"));
    }
    Ok((0..n).map(|i| i as f64 * step_km).collect())
}

fn case_rate(
    case: &str,
    p: &SystemParams,
    m: &FluctuationModel,
    ch: &ChannelPoint,
) -> Result<f64, String> {
    let r = match case {
        "case0" => key_rate_r0(p, ch),
        "case1" => key_rate_case1(p, m, ch),
        "case1r" => key_rate_case1_refined(p, m, ch),
        "case2a" => key_rate_case2a(p, m, ch),
        "case2b" => optimize_dmax(p, m, ch, Direction::Reverse).map(|o| o.result),
        _ => return Err(format!("unknown case {case:?}")),
    };
    r.map(|r| r.rate).map_err(|e| e.to_string())
}

/// Raw (unclamped) rate in bits/pulse at each grid distance.
pub fn rate_curve_impl(
    case: &str,
    kind: &str,
    param: f64,
    v_a: f64,
    eps_c: f64,
    stop_km: f64,
    step_km: f64,
) -> Result<Vec<f64>, String> {
    let p = system(v_a, eps_c)?;
    let m = model(kind, param)?;
    grid(stop_km, step_km)?
        .into_iter()
        .map(|km| {
            let ch = p.channel_at(km).map_err(|e| e.to_string())?;
            case_rate(case, &p, &m, &ch)
        })
        .collect()
}

/// Optimal case 2B cutoff at each grid distance, interleaved with the rate
/// it achieves: `[d0, r0, d1, r1, ..]`.
pub fn cutoff_curve_impl(
    kind: &str,
    param: f64,
    v_a: f64,
    eps_c: f64,
    stop_km: f64,
    step_km: f64,
) -> Result<Vec<f64>, String> {
    let p = system(v_a, eps_c)?;
    let m = model(kind, param)?;
    let mut out = Vec::new();
    for km in grid(stop_km, step_km)? {
        let ch = p.channel_at(km).map_err(|e| e.to_string())?;
        let o = optimize_dmax(&p, &m, &ch, Direction::Reverse).map_err(|e| e.to_string())?;
        out.extend([o.d_max, o.result.rate]);
    }
    Ok(out)
}

/// Distance where the rate first reaches zero; 0 if it is never positive.
pub fn max_distance_impl(
    case: &str,
    kind: &str,
    param: f64,
    v_a: f64,
    eps_c: f64,
) -> Result<f64, String> {
    let p = system(v_a, eps_c)?;
    let m = model(kind, param)?;
    let rate = |km: f64| -> cvqkd::Result<f64> {
        let ch = p.channel_at(km)?;
        case_rate(case, &p, &m, &ch).map_err(cvqkd::Error::InvalidModel)
    };
    if rate(0.0).map_err(|e| e.to_string())? <= 0.0 {
        return Ok(0.0);
    }
    max_distance(rate, SEARCH_LIMIT_KM)
        .map(|d| d.distance_km)
        .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn rate_curve(
    case: &str,
    kind: &str,
    param: f64,
    v_a: f64,
    eps_c: f64,
    stop_km: f64,
    step_km: f64,
) -> Result<Vec<f64>, JsError> {
    rate_curve_impl(case, kind, param, v_a, eps_c, stop_km, step_km).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cutoff_curve(
    kind: &str,
    param: f64,
    v_a: f64,
    eps_c: f64,
    stop_km: f64,
    step_km: f64,
) -> Result<Vec<f64>, JsError> {
    cutoff_curve_impl(kind, param, v_a, eps_c, stop_km, step_km).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn max_distance_km(
    case: &str,
    kind: &str,
    param: f64,
    v_a: f64,
    eps_c: f64,
) -> Result<f64, JsError> {
    max_distance_impl(case, kind, param, v_a, eps_c).map_err(|e| JsError::new(&e))
}
