//! Run configuration: a TOML file with `[optical]`, `[geometry]`, `[sweep]`
//! and `[validate]` tables. Every key is optional; the defaults reproduce
//! the reference setup (a = 0.5 m, h = 1.5..3.0 m, p = 0.3/0.5/0.8,
//! theta = -20..10 dB in 0.25 dB steps).
//!
//! A `manifest.json` written by a sweep is also accepted and reproduces that
//! sweep.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coverage::{QuadratureSpec, SumsSpec};
use crate::error::{Error, Result};
use crate::lattice_sums::{AxisWeighting, SeriesOrder, SumMethod};
use crate::model::{AttocellNetwork, NetworkGeometry, OpticalConfig, DEFAULT_TRUNC};
use crate::montecarlo::DEFAULT_NEAR_RINGS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Gaussian coverage with series moment sums.
    Analytic,
    /// Gaussian coverage with direct lattice sums.
    Brute,
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Brute => "brute",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analytic" => Ok(Method::Analytic),
            "brute" => Ok(Method::Brute),
            "montecarlo" | "mc" => Ok(Method::MonteCarlo),
            other => Err(Error::config(
                "sweep.methods",
                format!("unknown method `{other}` (expected analytic, brute or montecarlo)"),
            )),
        }
    }
}

/// Parse a comma-separated method list, e.g. `analytic,montecarlo`.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut methods = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Method::from_str)
        .collect::<Result<Vec<_>>>()?;
    methods.sort();
    methods.dedup();
    Ok(methods)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub pitch: f64,
    pub heights: Vec<f64>,
    pub trunc: u32,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            pitch: 0.5,
            heights: vec![1.5, 2.0, 2.5, 3.0],
            trunc: DEFAULT_TRUNC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub p_list: Vec<f64>,
    pub theta_db_start: f64,
    pub theta_db_stop: f64,
    pub theta_db_step: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Monte Carlo trials per quadrature node.
    pub trials: usize,
    /// Gauss–Legendre points per axis for analytic curves.
    pub quad_order: usize,
    /// Gauss–Legendre points per axis for Monte Carlo curves.
    pub mc_quad_order: usize,
    pub use_symmetry: bool,
    /// Lattice rings sampled explicitly by the Monte Carlo estimator.
    pub mc_near_rings: u32,
    pub series_j: u32,
    pub series_l: u32,
    pub axis_weighting: AxisWeighting,
    pub out: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p_list: vec![0.3, 0.5, 0.8],
            theta_db_start: -20.0,
            theta_db_stop: 10.0,
            theta_db_step: 0.25,
            methods: vec![Method::Analytic],
            seed: 2024,
            trials: 10_000,
            quad_order: 32,
            mc_quad_order: 16,
            use_symmetry: true,
            mc_near_rings: DEFAULT_NEAR_RINGS,
            series_j: 1,
            series_l: 1,
            axis_weighting: AxisWeighting::Folded,
            out: "out".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// Largest tolerated |P_c(MC) - P_c(analytic)| over the threshold grid.
    pub budget: f64,
    /// Samples of C for the normality diagnostics.
    pub clt_trials: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            budget: 0.02,
            clt_trials: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub optical: OpticalConfig,
    pub geometry: GeometryConfig,
    pub sweep: SweepConfig,
    pub validate: ValidateConfig,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: RunConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "<config>".to_string(), |s| key_at(text, s.start));
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON (a bare config or a sweep manifest) when the
    /// path ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            let cfg = serde_json::from_str::<ManifestConfig>(&text)
                .map(|m| m.config)
                .or_else(|_| serde_json::from_str::<RunConfig>(&text))
                .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
            cfg.validate()?;
            Ok(cfg)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optical.validate()?;
        let g = &self.geometry;
        if g.heights.is_empty() {
            return Err(Error::config("geometry.heights", "must not be empty"));
        }
        for &h in &g.heights {
            NetworkGeometry::new(g.pitch, h, g.trunc).map_err(|e| match e {
                Error::Config { field, detail } if field == "geometry.height" => {
                    Error::config("geometry.heights", detail)
                }
                other => other,
            })?;
        }
        let s = &self.sweep;
        if s.p_list.is_empty() {
            return Err(Error::config("sweep.p_list", "must not be empty"));
        }
        if let Some(p) = s.p_list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::config("sweep.p_list", format!("probabilities must lie in [0, 1], got {p}")));
        }
        if !(s.theta_db_step > 0.0 && s.theta_db_step.is_finite()) {
            return Err(Error::config("sweep.theta_db_step", format!("must be > 0, got {}", s.theta_db_step)));
        }
        if !(s.theta_db_start.is_finite() && s.theta_db_stop.is_finite()) || s.theta_db_stop < s.theta_db_start {
            return Err(Error::config(
                "sweep.theta_db_stop",
                format!("grid [{}, {}] is empty", s.theta_db_start, s.theta_db_stop),
            ));
        }
        if s.methods.is_empty() {
            return Err(Error::config("sweep.methods", "must not be empty"));
        }
        if s.trials == 0 {
            return Err(Error::config("sweep.trials", "must be >= 1"));
        }
        if s.quad_order == 0 {
            return Err(Error::config("sweep.quad_order", "must be >= 1"));
        }
        if s.mc_quad_order == 0 {
            return Err(Error::config("sweep.mc_quad_order", "must be >= 1"));
        }
        if s.mc_near_rings == 0 {
            return Err(Error::config("sweep.mc_near_rings", "must be >= 1"));
        }
        if !(self.validate.budget > 0.0) {
            return Err(Error::config("validate.budget", "must be > 0"));
        }
        if self.validate.clt_trials < 2 {
            return Err(Error::config("validate.clt_trials", "must be >= 2"));
        }
        Ok(())
    }

    /// Threshold grid in dB: `start + k * step` up to `stop` inclusive.
    pub fn theta_grid_db(&self) -> Vec<f64> {
        let s = &self.sweep;
        let n = ((s.theta_db_stop - s.theta_db_start) / s.theta_db_step + 1e-9).floor() as usize;
        (0..=n).map(|k| s.theta_db_start + k as f64 * s.theta_db_step).collect()
    }

    pub fn network(&self, height: f64) -> Result<AttocellNetwork> {
        let g = NetworkGeometry::new(self.geometry.pitch, height, self.geometry.trunc)?;
        AttocellNetwork::new(self.optical, g)
    }

    pub fn series_order(&self) -> SeriesOrder {
        SeriesOrder::new(self.sweep.series_j, self.sweep.series_l)
    }

    pub fn sums(&self, method: SumMethod) -> SumsSpec {
        SumsSpec {
            method,
            order: self.series_order(),
            weighting: self.sweep.axis_weighting,
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec::new(self.sweep.quad_order, self.sweep.use_symmetry)
    }

    pub fn mc_quadrature(&self) -> QuadratureSpec {
        QuadratureSpec::new(self.sweep.mc_quad_order, self.sweep.use_symmetry)
    }
}

// Best-effort dotted key name at a byte offset of a TOML document.
fn key_at(text: &str, offset: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if t.starts_with('[') {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
        pos += line.len();
        if pos > offset {
            break;
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (_, true) => if table.is_empty() { "<config>".into() } else { table },
        (true, false) => key,
        (false, false) => format!("{table}.{key}"),
    }
}
