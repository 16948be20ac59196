use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cvqkd_cli::config::{CaseName, GridSpec, McSpec, ModelSpec, OutputSpec, RunSpec};
use cvqkd_cli::RunConfig;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .current_dir(repo_root())
        .output()
        .expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV as string fields, skipping the comment and column lines.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn last_positive_km(csv: &str, rate_col: usize) -> f64 {
    rows(csv)
        .iter()
        .filter(|r| r[rate_col].parse::<f64>().unwrap() > 0.0)
        .map(|r| r[0].parse::<f64>().unwrap())
        .fold(f64::NAN, f64::max)
}

fn shipped_configs() -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![repo_root().join("configs")];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "toml") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn shipped_configs_round_trip() {
    let configs = shipped_configs();
    assert!(configs.len() >= 20, "found {}", configs.len());
    for path in configs {
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
    }
}

#[test]
fn every_optional_field_round_trips() {
    let cfg = RunConfig {
        system: Default::default(),
        model: ModelSpec::Gaussian {
            mean: 1.0,
            variance: 1e-3,
        },
        run: RunSpec {
            case: CaseName::Case2b,
            direction: cvqkd::cases::Direction::Direct,
            d_max: Some(1.07),
        },
        grid: GridSpec {
            points_km: Some(vec![0.0, 12.5, 40.0]),
            ..Default::default()
        },
        mc: Some(McSpec {
            n: 12345,
            seed: 99,
            distance_km: 7.5,
            detector_eta: Some(0.5),
            batches: 10,
        }),
        output: Some(OutputSpec {
            path: "x/y.csv".into(),
        }),
    };
    let text = cfg.to_toml();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg, "{text}");

    let mut ranged = cfg.clone();
    ranged.grid = GridSpec::range(0.0, 10.0, 0.5);
    ranged.model = ModelSpec::Tabulated {
        path: "pdf.txt".into(),
    };
    assert_eq!(RunConfig::from_toml(&ranged.to_toml()).unwrap(), ranged);
}

#[test]
fn grid_points_do_not_drift() {
    let pts = GridSpec::range(0.0, 150.0, 1.0).points().unwrap();
    assert_eq!(pts.len(), 151);
    assert_eq!(pts[150], 150.0);
    let pts = GridSpec::range(0.0, 1.0, 0.1).points().unwrap();
    assert_eq!(pts.len(), 11);
}

#[test]
fn baseline_scan_ends_near_94_km() {
    let o = cvqkd(&[
        "scan",
        "--config",
        "configs/case1_uniform_0.1/case0.toml",
        "--out",
        "/dev/stdout",
    ]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("# cvqkd-csv v1 command=scan case=case0"));
    assert_eq!(
        csv.lines().nth(1).unwrap(),
        "distance_km,t_c,rate_clamped,rate_raw,p_s,d_max_opt"
    );
    let km = last_positive_km(&csv, 3);
    assert!((km - 94.0).abs() <= 5.0, "{km}");
}

#[test]
fn refined_scan_reaches_about_199_km() {
    let o = cvqkd(&[
        "scan",
        "--config",
        "configs/case1_uniform_0.2/case1r_u0.8-1.2.toml",
        "--out",
        "/dev/stdout",
    ]);
    assert!(o.status.success());
    let km = last_positive_km(&stdout(&o), 3);
    assert!((km - 199.0).abs() <= 10.0, "{km}");
}

#[test]
fn clamped_column_is_raw_floored_at_zero() {
    let o = cvqkd(&[
        "scan",
        "--config",
        "configs/case2a_gaussian/case2a_g1e-2.toml",
        "--out",
        "/dev/stdout",
    ]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        let (clamped, raw): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert_eq!(clamped, raw.max(0.0));
        assert!(r[4].is_empty() && r[5].is_empty());
    }
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "empty.toml",
        "[model]\nkind = \"point\"\n[run]\ncase = \"case0\"\n[grid]\npoints_km = []\n",
    );
    let o = cvqkd(&["scan", "--config", &cfg]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn output_is_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "configs/case2b_gaussian_rate/case2b_g1e-3.toml";
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "4", "4", "7"].iter().enumerate() {
        let out = dir.path().join(format!("{i}.csv"));
        let o = cvqkd(&[
            "scan",
            "--config",
            cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(o.status.success());
        outputs.push(std::fs::read(out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn seed_flag_lands_in_header() {
    let o = cvqkd(&[
        "scan",
        "--config",
        "configs/case1_uniform_0.1/case0.toml",
        "--out",
        "/dev/stdout",
        "--seed",
        "42",
    ]);
    assert!(stdout(&o).lines().next().unwrap().ends_with("seed=42"));
}

#[test]
fn uniform_cutoff_sits_at_support_max() {
    let o = cvqkd(&[
        "optimize",
        "--config",
        "configs/case2b_uniform_cutoff/case2b_u0.95-1.05.toml",
        "--out",
        "/dev/stdout",
    ]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().nth(1).unwrap(), "distance_km,d_max_opt,rate");
    let positive: Vec<_> = rows(&csv)
        .into_iter()
        .filter(|r| r[2].parse::<f64>().unwrap() > 0.0)
        .collect();
    assert!(positive.len() > 50);
    assert!(positive.iter().all(|r| r[1] == "1.05"));
}

#[test]
fn gaussian_cutoff_is_non_decreasing() {
    let o = cvqkd(&[
        "optimize",
        "--config",
        "configs/case2b_gaussian_cutoff/case2b_g1e-3.toml",
        "--out",
        "/dev/stdout",
    ]);
    let d: Vec<f64> = rows(&stdout(&o))
        .iter()
        .filter(|r| r[2].parse::<f64>().unwrap() > 0.0)
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(d.len() > 20);
    assert!(d.windows(2).all(|w| w[1] >= w[0]), "{d:?}");
}

#[test]
fn point_model_cutoff_is_one() {
    let o = cvqkd(&[
        "optimize",
        "--config",
        "configs/case2b_gaussian_cutoff/case2b_point.toml",
        "--out",
        "/dev/stdout",
    ]);
    assert!(rows(&stdout(&o)).iter().all(|r| r[1] == "1"));
}

#[test]
fn validate_passes_with_default_seed() {
    let o = cvqkd(&[
        "validate",
        "--config",
        "configs/validate.toml",
        "--out",
        "/dev/stdout",
    ]);
    let report = stdout(&o);
    assert!(o.status.success(), "{report}");
    assert!(
        report.contains("summary pass=7 fail=0 underpowered=0"),
        "{report}"
    );
}

const MC_BASE: &str = "[model]\nkind = \"uniform\"\nlo = 0.9\nhi = 1.1\n[run]\ncase = \"case2b\"\n";

#[test]
fn validate_detects_miscalibrated_detector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "bad.toml",
        &format!("{MC_BASE}[mc]\nn = 200000\ndistance_km = 25\ndetector_eta = 0.55\n"),
    );
    let o = cvqkd(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL truth.t ")));
}

#[test]
fn tiny_runs_are_underpowered_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "small.toml", &format!("{MC_BASE}[mc]\nn = 100\n"));
    let o = cvqkd(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&o);
    assert!(report.contains("fail=0 underpowered=7"), "{report}");
}

fn assert_single_line_error(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code));
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(
        err.starts_with(&format!("cvqkd: error kind={kind} code={code} msg=\"")),
        "{err}"
    );
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "[model]\nkind = \"point\"\n[run]\ncase = \"case0\"\nbogus = 1\n",
        "[model]\nkind = \"point\"\n[run]\ncase = \"case0\"\n[grid]\nstart_km = 0\nstop_km = 10\nstep_km = 0\n",
        "[model]\nkind = \"point\"\n[run]\ncase = \"case0\"\n[grid]\nstart_km = 20\nstop_km = 10\nstep_km = 1\n",
        "[model]\nkind = \"uniform\"\nlo = 0.9\nhi = 1.2\n[run]\ncase = \"case1\"\n[grid]\npoints_km = [1]\n",
        "[system]\neta = 1.5\n[model]\nkind = \"point\"\n[run]\ncase = \"case0\"\n[grid]\npoints_km = [1]\n",
        "[model]\nkind = \"point\"\n[run]\ncase = \"case0\"\ndirection = \"direct\"\n[grid]\npoints_km = [1]\n",
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("{i}.toml"), body);
        assert_single_line_error(&cvqkd(&["scan", "--config", &cfg]), 1, "config");
    }
    assert_single_line_error(
        &cvqkd(&["scan", "--config", "/nonexistent.toml"]),
        1,
        "config",
    );
    assert_single_line_error(
        &cvqkd(&[
            "optimize",
            "--config",
            "configs/case1_uniform_0.1/case0.toml",
        ]),
        1,
        "config",
    );
    assert_single_line_error(
        &cvqkd(&[
            "validate",
            "--config",
            "configs/case1_uniform_0.1/case0.toml",
        ]),
        1,
        "config",
    );
    assert_eq!(cvqkd(&["scan"]).status.code(), Some(1));
}

#[test]
fn domain_errors_exit_2() {
    // A cutoff well below the support makes the equivalent source amplify.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "amp.toml",
        "[model]\nkind = \"uniform\"\nlo = 0.9\nhi = 1.1\n[run]\ncase = \"case2b\"\nd_max = 0.5\n[grid]\npoints_km = [0]\n",
    );
    assert_single_line_error(&cvqkd(&["scan", "--config", &cfg]), 2, "math");
}
