//! Analytic coverage probability.
//!
//! The SINR condition `gamma(z) > theta` is equivalent to `C < eta(z, theta)`
//! where `C = sum alpha_i (D_i^2 + h^2)^(-beta)` is the thinned interference
//! sum. `C` is approximated as Gaussian with mean `p S_m` and variance
//! `p (1-p) S_v`, restricted to `C >= 0`, and the conditional coverage is
//! averaged over the attocell with a tensor Gauss–Legendre rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_sums::{brute_sum, series_sum, AxisWeighting, SeriesOrder, SumMethod};
use crate::model::{AttocellNetwork, NetworkGeometry, ReceiverPosition};
use crate::quadrature::AttocellRule;
use crate::specfun::erf;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Threshold on the interference sum: `(z^2+h^2)^(-beta)/theta - sigma^2/(K^2 P_o^2 R_pd^2)`.
/// Negative when noise alone already violates the SINR target.
pub fn eta(net: &AttocellNetwork, pos: ReceiverPosition, theta_linear: f64) -> Result<f64> {
    if !(theta_linear > 0.0) || !theta_linear.is_finite() {
        return Err(Error::domain(
            "eta",
            format!("SINR threshold must be finite and > 0, got {theta_linear}"),
        ));
    }
    let h = net.geometry.height;
    let signal = (pos.radius2() + h * h).powf(-net.derived.beta);
    Ok(signal / theta_linear - noise_floor(net))
}

/// `sigma^2 / (K^2 P_o^2 R_pd^2)`, the noise expressed in interference-sum units.
pub fn noise_floor(net: &AttocellNetwork) -> f64 {
    let k = net.derived.gain_const;
    let po = net.optical.optical_power;
    let r = net.optical.responsivity;
    net.derived.noise_var / (k * k * po * po * r * r)
}

/// Gaussian mass of `N(mu, sigma1^2)` on `[0, eta]`, clamped to `[0, 1]`.
/// With `sigma1 == 0` the law is a point mass and the result is `1{mu < eta}`.
pub fn conditional_coverage(eta: f64, mu: f64, sigma1: f64) -> Result<f64> {
    if !(sigma1 >= 0.0) || !(mu >= 0.0) {
        return Err(Error::domain(
            "conditional_coverage",
            format!("need mu >= 0 and sigma1 >= 0, got mu = {mu}, sigma1 = {sigma1}"),
        ));
    }
    if sigma1 == 0.0 {
        return Ok(if mu < eta { 1.0 } else { 0.0 });
    }
    if eta <= 0.0 {
        return Ok(0.0);
    }
    let scale = SQRT_2 * sigma1;
    let v = 0.5 * (erf((eta - mu) / scale)? + erf(mu / scale)?);
    Ok(v.clamp(0.0, 1.0))
}

/// Conditional coverage at one receiver position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalCoverage {
    pub eta: f64,
    pub mu: f64,
    pub sigma1: f64,
    pub value: f64,
}

/// How the moment sums `S_m`, `S_v` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumsSpec {
    pub method: SumMethod,
    pub order: SeriesOrder,
    pub weighting: AxisWeighting,
}

impl Default for SumsSpec {
    fn default() -> Self {
        SumsSpec {
            method: SumMethod::Series,
            order: SeriesOrder::default(),
            weighting: AxisWeighting::Folded,
        }
    }
}

impl SumsSpec {
    pub fn brute() -> Self {
        SumsSpec {
            method: SumMethod::BruteForce,
            ..Default::default()
        }
    }

    /// `(S_m, S_v)` at `pos`.
    pub fn moments(&self, geom: &NetworkGeometry, beta: f64, pos: ReceiverPosition) -> Result<(f64, f64)> {
        match self.method {
            SumMethod::BruteForce => Ok((brute_sum(geom, beta, pos).value, brute_sum(geom, 2.0 * beta, pos).value)),
            SumMethod::Series => Ok((
                series_sum(geom, beta, pos, self.order, self.weighting)?.value,
                series_sum(geom, 2.0 * beta, pos, self.order, self.weighting)?.value,
            )),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("coverage", format!("thinning probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn coverage_from_moments(eta: f64, p: f64, sm: f64, sv: f64) -> Result<ConditionalCoverage> {
    let mu = p * sm;
    // series sums are positive in practice, the clamp only guards roundoff
    let sigma1 = (p * (1.0 - p) * sv).max(0.0).sqrt();
    let value = conditional_coverage(eta, mu.max(0.0), sigma1)?;
    Ok(ConditionalCoverage { eta, mu, sigma1, value })
}

/// `P[gamma(z) > theta | z]` under the Gaussian approximation.
pub fn coverage_at(
    net: &AttocellNetwork,
    p: f64,
    pos: ReceiverPosition,
    theta_linear: f64,
    sums: &SumsSpec,
) -> Result<ConditionalCoverage> {
    check_probability(p)?;
    let e = eta(net, pos, theta_linear)?;
    let (sm, sv) = sums.moments(&net.geometry, net.beta(), pos)?;
    coverage_from_moments(e, p, sm, sv)
}

/// Spatial quadrature over the attocell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub order: usize,
    /// Integrate one octant and weight by multiplicity.
    pub use_symmetry: bool,
}

impl QuadratureSpec {
    pub const fn new(order: usize, use_symmetry: bool) -> Self {
        QuadratureSpec { order, use_symmetry }
    }

    pub fn rule(&self, pitch: f64) -> Result<AttocellRule> {
        AttocellRule::new(self.order, pitch, self.use_symmetry)
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::new(32, true)
    }
}

/// Moment sums cached at every quadrature node of one network. They do not
/// depend on `p` or `theta`, so one field serves a whole family of curves.
#[derive(Debug, Clone)]
pub struct CoverageField {
    net: AttocellNetwork,
    rule: AttocellRule,
    moments: Vec<(f64, f64)>,
}

impl CoverageField {
    pub fn new(net: &AttocellNetwork, quad: QuadratureSpec, sums: &SumsSpec) -> Result<Self> {
        let rule = quad.rule(net.geometry.pitch)?;
        let beta = net.beta();
        let moments = rule
            .nodes()
            .par_iter()
            .map(|n| sums.moments(&net.geometry, beta, n.pos))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoverageField {
            net: *net,
            rule,
            moments,
        })
    }

    pub fn rule(&self) -> &AttocellRule {
        &self.rule
    }

    pub fn network(&self) -> &AttocellNetwork {
        &self.net
    }

    /// Attocell-averaged coverage.
    pub fn coverage(&self, p: f64, theta_linear: f64) -> Result<f64> {
        check_probability(p)?;
        let values = self
            .rule
            .nodes()
            .iter()
            .zip(&self.moments)
            .map(|(n, &(sm, sv))| {
                let e = eta(&self.net, n.pos, theta_linear)?;
                Ok(coverage_from_moments(e, p, sm, sv)?.value)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.rule.average(&values).clamp(0.0, 1.0))
    }

    pub fn curve(&self, p: f64, theta_db: &[f64]) -> Result<CoverageCurve> {
        let values = theta_db
            .iter()
            .map(|&db| self.coverage(p, db_to_linear(db)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoverageCurve::new(CurveMethod::Analytic, p, &self.net.geometry, theta_db, values, None))
    }
}

/// `(1/a^2) int int P_c(z, theta) dz` over the attocell.
pub fn coverage_spatial(
    net: &AttocellNetwork,
    p: f64,
    theta_linear: f64,
    quad: QuadratureSpec,
    sums: &SumsSpec,
) -> Result<f64> {
    CoverageField::new(net, quad, sums)?.coverage(p, theta_linear)
}

/// Coverage against a dB threshold grid.
pub fn coverage_curve(
    net: &AttocellNetwork,
    p: f64,
    theta_db: &[f64],
    quad: QuadratureSpec,
    sums: &SumsSpec,
) -> Result<CoverageCurve> {
    CoverageField::new(net, quad, sums)?.curve(p, theta_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMethod {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCurve {
    pub method: CurveMethod,
    pub p: f64,
    pub geometry: NetworkGeometry,
    pub theta_db: Vec<f64>,
    pub theta_linear: Vec<f64>,
    pub values: Vec<f64>,
    /// Monte Carlo standard errors.
    pub stderr: Option<Vec<f64>>,
}

impl CoverageCurve {
    pub fn new(
        method: CurveMethod,
        p: f64,
        geometry: &NetworkGeometry,
        theta_db: &[f64],
        values: Vec<f64>,
        stderr: Option<Vec<f64>>,
    ) -> Self {
        CoverageCurve {
            method,
            p,
            geometry: *geometry,
            theta_db: theta_db.to_vec(),
            theta_linear: theta_db.iter().map(|&d| db_to_linear(d)).collect(),
            values,
            stderr,
        }
    }

    /// First threshold (dB, linearly interpolated) where the curve falls to
    /// `level` or below. `None` if it never does on the grid.
    pub fn crossing_db(&self, level: f64) -> Option<f64> {
        let v = &self.values;
        let t = &self.theta_db;
        if v.first().map_or(true, |&v0| v0 <= level) {
            return v.first().and_then(|&v0| (v0 <= level).then(|| t[0]));
        }
        (1..v.len()).find(|&i| v[i] <= level).map(|i| {
            let (v0, v1) = (v[i - 1], v[i]);
            t[i - 1] + (t[i] - t[i - 1]) * (v0 - level) / (v0 - v1)
        })
    }

    pub fn max_abs_diff(&self, other: &CoverageCurve) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
