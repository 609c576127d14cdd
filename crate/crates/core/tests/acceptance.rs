//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use attocell::config::RunConfig;
use attocell::coverage::{coverage_spatial, db_to_linear, CoverageField, QuadratureSpec, SumsSpec};
use attocell::lattice_sums::{brute_sum, series_sum, AxisWeighting, SeriesOrder, SumMethod};
use attocell::model::{AttocellNetwork, ReceiverPosition};
use attocell::montecarlo::{clt_diagnostics, empirical_curves, ThinningModel};
use attocell::specfun::{bessel_k, erf, gamma};

use common::{bessel_k_integral, erf_series, rel_diff};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn network(height: f64) -> AttocellNetwork {
    RunConfig::default().network(height).unwrap()
}

fn anchor_point() -> Outcome {
    let net = network(1.5);
    let pc = coverage_spatial(
        &net,
        0.5,
        db_to_linear(-6.55),
        QuadratureSpec::default(),
        &SumsSpec::default(),
    )
    .unwrap();
    outcome(
        (pc - 0.6).abs() <= 0.05,
        format!("P_c(-6.55 dB) = {pc:.4} at h/a=3, p=0.5 (want 0.6 +/- 0.05)"),
    )
}

fn plateau_and_knee() -> Outcome {
    let cfg = RunConfig::default();
    let net = network(2.0);
    let field = CoverageField::new(&net, cfg.quadrature(), &cfg.sums(SumMethod::Series)).unwrap();
    let pc8 = field.coverage(0.5, db_to_linear(-8.0)).unwrap();
    let knee = field.curve(0.5, &cfg.theta_grid_db()).unwrap().crossing_db(0.98);
    let knee_ok = knee.is_some_and(|k| (-7.0..=-6.0).contains(&k));
    outcome(
        pc8 >= 0.98 && knee_ok,
        format!(
            "h/a=4, p=0.5: P_c(-8 dB) = {pc8:.4} (want >= 0.98), 0.98 crossing at {} dB (want -6.5 +/- 0.5)",
            knee.map_or("none".to_string(), |k| format!("{k:.2}"))
        ),
    )
}

fn crossing_order() -> Outcome {
    let cfg = RunConfig::default();
    let grid = cfg.theta_grid_db();
    let crossing = |h: f64, p: f64| -> Option<f64> {
        let net = network(h);
        let field = CoverageField::new(&net, cfg.quadrature(), &cfg.sums(SumMethod::Series)).unwrap();
        field.curve(p, &grid).unwrap().crossing_db(0.5)
    };
    let by_height: Vec<Option<f64>> = [1.5, 2.0, 2.5, 3.0].iter().map(|&h| crossing(h, 0.5)).collect();
    let by_p: Vec<Option<f64>> = [0.8, 0.5, 0.3].iter().map(|&p| crossing(1.5, p)).collect();
    let increasing = |xs: &[Option<f64>]| {
        xs.iter().all(Option::is_some) && xs.windows(2).all(|w| w[0].unwrap() < w[1].unwrap())
    };
    let heights_ok = increasing(&by_height);
    let ps_ok = increasing(&by_p);
    let show = |xs: &[Option<f64>]| {
        xs.iter()
            .map(|x| x.map_or("none".to_string(), |v| format!("{v:.2}")))
            .collect::<Vec<_>>()
            .join(", ")
    };
    outcome(
        heights_ok && ps_ok,
        format!(
            "0.5 crossings: h/a=3..6 at p=0.5 -> [{}] dB (want increasing: {}); p=0.8,0.5,0.3 at h/a=3 -> [{}] dB (want increasing: {})",
            show(&by_height),
            if heights_ok { "ok" } else { "no" },
            show(&by_p),
            if ps_ok { "ok" } else { "no" }
        ),
    )
}

fn series_vs_brute() -> Outcome {
    let mut worst = (0.0f64, String::new());
    for &h in &[1.5, 2.0, 2.5, 3.0] {
        let net = network(h);
        let a = net.geometry.pitch;
        let beta = net.beta();
        for i in 0..9 {
            for j in 0..9 {
                let pos = ReceiverPosition::new(-a / 2.0 + a * i as f64 / 8.0, -a / 2.0 + a * j as f64 / 8.0);
                for exponent in [beta, 2.0 * beta] {
                    let brute = brute_sum(&net.geometry, exponent, pos).value;
                    let series =
                        series_sum(&net.geometry, exponent, pos, SeriesOrder::new(1, 1), AxisWeighting::Folded)
                            .unwrap()
                            .value;
                    let err = rel_diff(series, brute);
                    if err > worst.0 {
                        worst = (err, format!("h/a={}, z=({:.4}, {:.4}), s={exponent}", h / a, pos.x, pos.y));
                    }
                }
            }
        }
    }
    outcome(
        worst.0 <= 1e-6,
        format!("max relative error {:.3e} at {} (want <= 1e-6)", worst.0, worst.1),
    )
}

fn monte_carlo_agreement() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.geometry.heights = vec![1.5];
    cfg.sweep.trials = 10_000;
    cfg.sweep.mc_quad_order = 16;
    let ps = [0.3, 0.5, 0.8];
    let net = network(1.5);
    let grid = cfg.theta_grid_db();
    let mc = empirical_curves(
        &ps,
        cfg.sweep.seed,
        cfg.sweep.mc_near_rings,
        &net,
        &grid,
        cfg.sweep.trials,
        cfg.mc_quadrature(),
    )
    .unwrap();
    let field = CoverageField::new(&net, cfg.mc_quadrature(), &cfg.sums(SumMethod::Series)).unwrap();
    let diffs: Vec<f64> = mc
        .iter()
        .map(|c| c.max_abs_diff(&field.curve(c.p, &grid).unwrap()))
        .collect();
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= 0.02,
        format!(
            "max |MC - analytic| for p=0.3,0.5,0.8 at h/a=3: [{:.4}, {:.4}, {:.4}] (want <= 0.02)",
            diffs[0], diffs[1], diffs[2]
        ),
    )
}

fn gaussian_diagnostics() -> Outcome {
    let cfg = RunConfig::default();
    let net = network(1.5);
    let model = ThinningModel::new(0.5, cfg.sweep.seed).unwrap();
    let d = clt_diagnostics(&model, &net.geometry, net.beta(), ReceiverPosition::ORIGIN, 100_000).unwrap();
    let mean_z = (d.sample_mean - d.analytic_mean).abs() / d.mean_stderr();
    let var_err = (d.sample_var / d.analytic_var - 1.0).abs();
    outcome(
        mean_z <= 4.0 && var_err <= 0.05 && d.ks_stat <= 0.05,
        format!(
            "mean off by {mean_z:.2} stderr (<= 4), |var ratio - 1| = {var_err:.4} (<= 0.05), KS = {:.4} (<= 0.05)",
            d.ks_stat
        ),
    )
}

fn special_functions() -> Outcome {
    let erf_err = (0..=1200)
        .map(|i| {
            let x = -6.0 + 0.01 * i as f64;
            (erf(x).unwrap() - erf_series(x)).abs()
        })
        .fold(0.0, f64::max);
    let mut k_err = 0.0f64;
    for nu in [0.5, 3.0, 7.0, 11.0] {
        for i in 0..=118 {
            let x = 0.5 + 0.5 * i as f64;
            k_err = k_err.max(rel_diff(bessel_k(nu, x).unwrap(), bessel_k_integral(nu, x)));
        }
    }
    let g_err = (1..=2000)
        .map(|i| {
            let x = 0.05 * i as f64;
            rel_diff(gamma(x + 1.0).unwrap(), x * gamma(x).unwrap())
        })
        .fold(0.0, f64::max);
    outcome(
        erf_err <= 1e-12 && k_err <= 1e-10 && g_err <= 1e-12,
        format!(
            "erf abs err {erf_err:.2e} (<= 1e-12), K_nu rel err {k_err:.2e} (<= 1e-10), Gamma recurrence rel err {g_err:.2e} (<= 1e-12)"
        ),
    )
}

fn sweep_once(config: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_attocell"))
        .args(["sweep", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[geometry]\nheights = [1.5, 2.0]\n\n[sweep]\nmethods = [\"analytic\", \"brute\", \"montecarlo\"]\n\
         trials = 300\nmc_quad_order = 4\nseed = 7\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if !(sweep_once(&config, &a) && sweep_once(&config, &b)) {
        return outcome(false, "sweep run failed".to_string());
    }
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    outcome(
        !fa.is_empty() && fa == fb,
        format!("{} CSVs from two runs, identical: {}", fa.len(), fa == fb),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "anchor point", Duration::from_secs(5), anchor_point),
        (2, "plateau and knee", Duration::from_secs(10), plateau_and_knee),
        (3, "crossing order in h/a and p", Duration::from_secs(120), crossing_order),
        (4, "series vs brute sums", Duration::from_secs(60), series_vs_brute),
        (5, "Monte Carlo vs analytic", Duration::from_secs(900), monte_carlo_agreement),
        (6, "Gaussian approximation", Duration::from_secs(60), gaussian_diagnostics),
        (7, "special functions", Duration::from_secs(30), special_functions),
        (8, "determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.1} s, budget {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
