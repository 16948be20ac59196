use cvqkd::fluctuation::FluctuationModel;
use cvqkd::montecarlo::{estimate_with_errors, moments, simulate, Recording};
use cvqkd::{ChannelPoint, SystemParams};

fn table() -> SystemParams {
    SystemParams::default()
}

#[test]
fn bob_alice_slope_is_sqrt_eta_on_lossless_channel() {
    let p = table();
    let ch = ChannelPoint::new(1.0, 0.0).unwrap();
    let n = 1_000_000;
    let s = simulate(
        &p,
        &ch,
        &FluctuationModel::point_mass(),
        Recording::Truth,
        n,
        3,
    )
    .unwrap();
    let m = moments(&s);
    let slope = m.recorded_bob / m.recorded_sq;
    // OLS slope error: sqrt(Var(noise) / (n * V_A))
    let stderr = ((1.0 + p.v_el) / (n as f64 * p.v_a)).sqrt();
    assert!((slope - p.eta.sqrt()).abs() < 4.0 * stderr, "{slope}");
}

#[test]
fn truth_recording_recovers_channel() {
    let p = table();
    let ch = ChannelPoint::new(0.5, 0.02).unwrap();
    let s = simulate(
        &p,
        &ch,
        &FluctuationModel::point_mass(),
        Recording::Truth,
        2_000_000,
        8,
    )
    .unwrap();
    let e = estimate_with_errors(&s, p.eta, p.v_el, 50).unwrap();
    assert!((e.estimate.t - 0.5).abs() < 4.0 * e.t_stderr, "{e:?}");
    assert!((e.estimate.eps - 0.02).abs() < 4.0 * e.eps_stderr, "{e:?}");
}

#[test]
fn desired_recording_sees_expected_sqrt_d() {
    // sqrt(T_hat) converges to E[sqrt(d)] itself, not only its Taylor form.
    let p = table();
    let ch = ChannelPoint::new(1.0, 0.0).unwrap();
    let m = FluctuationModel::uniform(0.9, 1.1).unwrap();
    let s = simulate(&p, &ch, &m, Recording::Desired, 2_000_000, 21).unwrap();
    let e = estimate_with_errors(&s, p.eta, p.v_el, 50).unwrap();
    let exact = m.expect(f64::sqrt).unwrap().powi(2);
    assert!(
        (e.estimate.t - exact).abs() < 4.0 * e.t_stderr,
        "{e:?} vs {exact}"
    );
    let taylor = (1.0 - m.variance() / 8.0).powi(2);
    assert!((exact - taylor).abs() < 5.0 * m.variance().powi(2));
}

#[test]
fn bob_variance_matches_linear_model() {
    let p = table();
    let ch = ChannelPoint::new(0.3, 0.05).unwrap();
    let m = FluctuationModel::gaussian(1.0, 1e-2).unwrap();
    let n = 1_000_000;
    let s = simulate(&p, &ch, &m, Recording::Truth, n, 99).unwrap();
    let mo = moments(&s);
    let predicted = ch.t * p.eta * (mo.sent_sq + ch.eps) + 1.0 + p.v_el;
    // Var of a sample second moment of a Gaussian is 2 sigma^4 / n
    let stderr = (2.0 / n as f64).sqrt() * predicted;
    assert!(
        (mo.bob_sq - predicted).abs() < 4.0 * stderr,
        "{} vs {predicted}",
        mo.bob_sq
    );
}

#[test]
fn output_independent_of_thread_count() {
    let p = table();
    let ch = ChannelPoint::new(0.4, 0.02).unwrap();
    let m = FluctuationModel::gaussian(1.0, 1e-3).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&p, &ch, &m, Recording::Scaled(1.05), 300_000, 1234).unwrap())
    };
    assert_eq!(run(1), run(4));
}
