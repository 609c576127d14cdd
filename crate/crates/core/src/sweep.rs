//! Drivers behind the CLI: coverage sweeps written as CSV, lattice-sum
//! reports, and Monte Carlo validation of the analytic curves.
//!
//! Curve CSVs are long-form, one curve per file:
//!
//! ```text
//! theta_db,theta_linear,p_c,stderr
//! -2.0000000000000000e1,1.0000000000000000e-2,1.0000000000000000e0,
//! ```
//!
//! Floats are written with 17 significant digits, `stderr` is empty for the
//! Gaussian methods, and lines end in `\n`. Output is byte-stable for a
//! fixed configuration.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{Method, RunConfig};
use crate::coverage::{CoverageCurve, CoverageField};
use crate::error::{Error, Result};
use crate::lattice_sums::{brute_sum, series_breakdown, AxisWeighting, SeriesBreakdown, SeriesOrder, SumMethod, SumResult};
use crate::model::ReceiverPosition;
use crate::montecarlo::{clt_diagnostics, empirical_curves, CltDiagnostics, ThinningModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `pc_<method>_p<p>_ha<h/a>.csv`
pub fn curve_file_name(method: Method, p: f64, height_ratio: f64) -> String {
    format!("pc_{}_p{}_ha{}.csv", method.name(), p, round_ratio(height_ratio))
}

// h/a for labels, with representation noise like 2.9999999999999996 removed
fn round_ratio(r: f64) -> f64 {
    (r * 1e9).round() / 1e9
}

pub fn write_curve_csv(curve: &CoverageCurve, mut w: impl Write) -> std::io::Result<()> {
    let mut buf = String::with_capacity(64 * (curve.values.len() + 1));
    buf.push_str("theta_db,theta_linear,p_c,stderr\n");
    for i in 0..curve.values.len() {
        let stderr = curve.stderr.as_ref().map(|s| fmt_float(s[i])).unwrap_or_default();
        buf.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(curve.theta_db[i]),
            fmt_float(curve.theta_linear[i]),
            fmt_float(curve.values[i]),
            stderr
        ));
    }
    w.write_all(buf.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub file: String,
    pub method: Method,
    pub p: f64,
    pub height: f64,
    pub height_ratio: f64,
}

/// Monte Carlo against the analytic curve on the same quadrature rule.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub p: f64,
    pub height: f64,
    pub height_ratio: f64,
    pub max_abs_diff: f64,
    pub at_theta_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub theta_points: usize,
    pub files: Vec<ManifestFile>,
    pub comparisons: Vec<Comparison>,
}

fn compare(mc: &CoverageCurve, analytic: &CoverageCurve) -> Comparison {
    let (i, d) = mc
        .values
        .iter()
        .zip(&analytic.values)
        .map(|(a, b)| (a - b).abs())
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    Comparison {
        p: mc.p,
        height: mc.geometry.height,
        height_ratio: round_ratio(mc.geometry.height_ratio()),
        max_abs_diff: d,
        at_theta_db: mc.theta_db[i],
    }
}

/// All curves of one height for one method, in `p_list` order.
fn curves_for(cfg: &RunConfig, method: Method, height: f64, grid: &[f64]) -> Result<Vec<CoverageCurve>> {
    let net = cfg.network(height)?;
    let ps = &cfg.sweep.p_list;
    match method {
        Method::Analytic | Method::Brute => {
            let sums = cfg.sums(if method == Method::Brute {
                SumMethod::BruteForce
            } else {
                SumMethod::Series
            });
            let field = CoverageField::new(&net, cfg.quadrature(), &sums)?;
            ps.iter().map(|&p| field.curve(p, grid)).collect()
        }
        Method::MonteCarlo => empirical_curves(
            ps,
            cfg.sweep.seed,
            cfg.sweep.mc_near_rings,
            &net,
            grid,
            cfg.sweep.trials,
            cfg.mc_quadrature(),
        ),
    }
}

/// Analytic curves on the Monte Carlo quadrature rule, for comparisons.
fn reference_curves(cfg: &RunConfig, height: f64, grid: &[f64]) -> Result<Vec<CoverageCurve>> {
    let net = cfg.network(height)?;
    let field = CoverageField::new(&net, cfg.mc_quadrature(), &cfg.sums(SumMethod::Series))?;
    cfg.sweep.p_list.iter().map(|&p| field.curve(p, grid)).collect()
}

/// Compute every requested curve and write one CSV per (method, p, h/a),
/// plus `manifest.json`.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path, mut progress: impl FnMut(&str)) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let grid = cfg.theta_grid_db();
    let mut files = Vec::new();
    let mut comparisons = Vec::new();
    for &h in &cfg.geometry.heights {
        let ratio = round_ratio(h / cfg.geometry.pitch);
        for &method in &cfg.sweep.methods {
            let curves = curves_for(cfg, method, h, &grid)?;
            for c in &curves {
                let name = curve_file_name(method, c.p, ratio);
                let path = out_dir.join(&name);
                let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                write_curve_csv(c, std::io::BufWriter::new(f)).map_err(|e| Error::io(&path, e))?;
                files.push(ManifestFile {
                    file: name.clone(),
                    method,
                    p: c.p,
                    height: h,
                    height_ratio: ratio,
                });
                progress(&name);
            }
            if method == Method::MonteCarlo {
                let reference = reference_curves(cfg, h, &grid)?;
                comparisons.extend(curves.iter().zip(&reference).map(|(mc, an)| compare(mc, an)));
            }
        }
    }
    let manifest = Manifest {
        tool: "attocell".to_string(),
        version: VERSION.to_string(),
        config: cfg.clone(),
        theta_points: grid.len(),
        files,
        comparisons,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct SumsRow {
    /// `"S_m"` or `"S_v"`.
    pub name: &'static str,
    pub height: f64,
    pub height_ratio: f64,
    pub exponent: f64,
    pub brute: SumResult,
    pub series: f64,
    pub rel_err: f64,
    /// Error of the series with every quadrant term weighted by one.
    pub verbatim_rel_err: f64,
    pub breakdown: SeriesBreakdown,
}

#[derive(Debug, Clone, Serialize)]
pub struct SumsReport {
    pub pos: ReceiverPosition,
    pub order: SeriesOrder,
    pub weighting: AxisWeighting,
    pub rows: Vec<SumsRow>,
    /// Not part of the `Display` output.
    pub warnings: Vec<String>,
}

impl SumsReport {
    pub fn max_rel_err(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max)
    }
}

/// Direct and series moment sums at `pos` for every configured height.
pub fn run_sums(cfg: &RunConfig, pos: ReceiverPosition) -> Result<SumsReport> {
    cfg.validate()?;
    let order = cfg.series_order();
    let weighting = cfg.sweep.axis_weighting;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for &h in &cfg.geometry.heights {
        let net = cfg.network(h)?;
        if !net.geometry.contains(pos) && warnings.is_empty() {
            warnings.push(format!(
                "receiver ({}, {}) lies outside the attocell [-{a}, {a}]^2; computing anyway",
                pos.x,
                pos.y,
                a = 0.5 * net.geometry.pitch
            ));
        }
        let beta = net.beta();
        for (name, exponent) in [("S_m", beta), ("S_v", 2.0 * beta)] {
            let brute = brute_sum(&net.geometry, exponent, pos);
            let breakdown = series_breakdown(&net.geometry, exponent, pos, order, weighting)?;
            let verbatim = series_breakdown(&net.geometry, exponent, pos, order, AxisWeighting::Verbatim)?;
            let series = breakdown.total();
            rows.push(SumsRow {
                name,
                height: h,
                height_ratio: round_ratio(net.geometry.height_ratio()),
                exponent,
                brute,
                series,
                rel_err: ((series - brute.value) / brute.value).abs(),
                verbatim_rel_err: ((verbatim.total() - brute.value) / brute.value).abs(),
                breakdown,
            });
        }
    }
    Ok(SumsReport {
        pos,
        order,
        weighting,
        rows,
        warnings,
    })
}

impl fmt::Display for SumsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "receiver z = ({}, {}), series box j = {}, l = {}, axis weighting {:?}",
            self.pos.x, self.pos.y, self.order.j, self.order.l, self.weighting
        )?;
        writeln!(
            f,
            "{:>4} {:>5} {:>24} {:>24} {:>10} {:>10} {:>10}",
            "sum", "h/a", "brute", "series", "rel_err", "verbatim", "tail"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>4} {:>5} {:>24.16e} {:>24.16e} {:>10.3e} {:>10.3e} {:>10.3e}",
                r.name, r.height_ratio, r.brute.value, r.series, r.rel_err, r.verbatim_rel_err, r.brute.tail_bound
            )?;
            writeln!(
                f,
                "       integral {:.16e}  self {:.16e}",
                r.breakdown.integral, r.breakdown.self_term
            )?;
            for t in &r.breakdown.terms {
                writeln!(
                    f,
                    "       g({}, {}) = {:+.16e}  weight {}  contribution {:+.16e}",
                    t.w,
                    t.f,
                    t.raw,
                    t.weight,
                    t.contribution()
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementRow {
    pub p: f64,
    pub height: f64,
    pub height_ratio: f64,
    pub max_abs_diff: f64,
    pub at_theta_db: f64,
    pub max_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CltRow {
    pub p: f64,
    pub height_ratio: f64,
    pub diagnostics: CltDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub budget: f64,
    pub trials_per_node: usize,
    pub quad_order: usize,
    pub rows: Vec<AgreementRow>,
    pub clt: Vec<CltRow>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.max_abs_diff <= self.budget)
    }

    pub fn worst(&self) -> Option<&AgreementRow> {
        self.rows.iter().max_by(|a, b| a.max_abs_diff.total_cmp(&b.max_abs_diff))
    }
}

/// Monte Carlo against analytic coverage over the threshold grid for every
/// configured `(h, p)`, plus normality diagnostics of `C` at the cell
/// centre.
pub fn run_validate(cfg: &RunConfig, mut progress: impl FnMut(&str)) -> Result<ValidateReport> {
    cfg.validate()?;
    let grid = cfg.theta_grid_db();
    let mut rows = Vec::new();
    let mut clt = Vec::new();
    for &h in &cfg.geometry.heights {
        let net = cfg.network(h)?;
        let mc = curves_for(cfg, Method::MonteCarlo, h, &grid)?;
        let reference = reference_curves(cfg, h, &grid)?;
        for (m, a) in mc.iter().zip(&reference) {
            let c = compare(m, a);
            rows.push(AgreementRow {
                p: c.p,
                height: h,
                height_ratio: c.height_ratio,
                max_abs_diff: c.max_abs_diff,
                at_theta_db: c.at_theta_db,
                max_stderr: m.stderr.as_ref().map_or(0.0, |s| s.iter().copied().fold(0.0, f64::max)),
            });
            progress(&format!("h/a = {}, p = {}: max |dP_c| = {:.4}", c.height_ratio, c.p, c.max_abs_diff));
        }
        for &p in &cfg.sweep.p_list {
            if p > 0.0 && p < 1.0 {
                let model = ThinningModel::new(p, cfg.sweep.seed)?.with_near_rings(cfg.sweep.mc_near_rings);
                let diagnostics = clt_diagnostics(
                    &model,
                    &net.geometry,
                    net.beta(),
                    ReceiverPosition::ORIGIN,
                    cfg.validate.clt_trials,
                )?;
                clt.push(CltRow {
                    p,
                    height_ratio: round_ratio(net.geometry.height_ratio()),
                    diagnostics,
                });
            }
        }
    }
    Ok(ValidateReport {
        budget: cfg.validate.budget,
        trials_per_node: cfg.sweep.trials,
        quad_order: cfg.sweep.mc_quad_order,
        rows,
        clt,
    })
}

impl fmt::Display for ValidateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Monte Carlo vs analytic ({} trials/node, {}x{} nodes, budget {})",
            self.trials_per_node, self.quad_order, self.quad_order, self.budget
        )?;
        writeln!(f, "{:>5} {:>5} {:>12} {:>10} {:>12} {:>6}", "h/a", "p", "max|dP_c|", "at dB", "max stderr", "ok")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>5} {:>5} {:>12.5} {:>10.2} {:>12.5} {:>6}",
                r.height_ratio,
                r.p,
                r.max_abs_diff,
                r.at_theta_db,
                r.max_stderr,
                if r.max_abs_diff <= self.budget { "yes" } else { "NO" }
            )?;
        }
        if !self.clt.is_empty() {
            writeln!(f, "\nInterference sum at the cell centre")?;
            writeln!(
                f,
                "{:>5} {:>5} {:>14} {:>14} {:>10} {:>8} {:>8}",
                "h/a", "p", "sample mean", "analytic", "var ratio", "KS", "trials"
            )?;
            for c in &self.clt {
                let d = &c.diagnostics;
                writeln!(
                    f,
                    "{:>5} {:>5} {:>14.8e} {:>14.8e} {:>10.5} {:>8.5} {:>8}",
                    c.height_ratio,
                    c.p,
                    d.sample_mean,
                    d.analytic_mean,
                    d.sample_var / d.analytic_var,
                    d.ks_stat,
                    d.trials
                )?;
            }
        }
        Ok(())
    }
}
