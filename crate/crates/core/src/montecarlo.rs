//! Monte Carlo reference for the coverage probability.
//!
//! Each LED within `near_rings` rings of the serving LED is switched on
//! independently with probability `p`, and the exact interference sum `C`
//! is formed for every realisation. No Gaussian or series approximation is
//! involved. Sites beyond `near_rings` (up to the lattice truncation)
//! contribute their expectation `p * sum w_i`: their variance is below
//! `1e-12` of the total at the default radius.
//!
//! # Random streams
//!
//! Uniforms come from ChaCha8 keyed by `seed`, with the ChaCha stream id set
//! to the spatial node index. Trial `t` at a node reads 32-bit words
//! `[t * n, (t + 1) * n)` of that stream, where `n` is the number of
//! near-field sites, so every `(seed, node, trial)` triple is addressable
//! independently of evaluation order. Site `i` is active when its word is
//! below `p * 2^32`; the same words serve every `p` and every threshold
//! (common random numbers), which makes coupled estimates monotone.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{db_to_linear, eta, linear_to_db, CoverageCurve, CurveMethod, QuadratureSpec};
use crate::error::{Error, Result};
use crate::lattice_sums::brute_sum;
use crate::model::{lattice_sites, AttocellNetwork, NetworkGeometry, ReceiverPosition};
use crate::specfun::normal_cdf;

/// Default radius (in lattice rings) of the stochastic near field.
pub const DEFAULT_NEAR_RINGS: u32 = 30;

/// Bernoulli thinning of the interferers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinningModel {
    pub p: f64,
    pub seed: u64,
    /// Rings sampled explicitly; clipped to the lattice truncation.
    pub near_rings: u32,
}

impl ThinningModel {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("ThinningModel", format!("p must lie in [0, 1], got {p}")));
        }
        Ok(ThinningModel {
            p,
            seed,
            near_rings: DEFAULT_NEAR_RINGS,
        })
    }

    pub fn with_near_rings(self, near_rings: u32) -> Self {
        ThinningModel { near_rings, ..self }
    }
}

/// Word threshold: a site is active iff its uniform word is below this.
fn activation_threshold(p: f64) -> u64 {
    (p * 4_294_967_296.0).round() as u64
}

/// Random stream for one spatial node.
pub fn node_stream(seed: u64, node: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node);
    rng
}

/// Position the stream at the first word of `trial`.
pub fn seek_trial(rng: &mut ChaCha8Rng, trial: u64, sites: usize) {
    rng.set_word_pos(trial as u128 * sites as u128);
}

/// Interference weights `(D_i^2 + h^2)^(-beta)` for one receiver position.
#[derive(Debug, Clone)]
pub struct InterferenceSampler {
    near: Vec<f64>,
    far_sum: f64,
    total: f64,
}

impl InterferenceSampler {
    pub fn new(geom: &NetworkGeometry, beta: f64, pos: ReceiverPosition, near_rings: u32) -> Self {
        let rings = near_rings.min(geom.trunc).max(1);
        let h2 = geom.height * geom.height;
        let near: Vec<f64> = lattice_sites(rings)
            .map(|(u, v)| (geom.horizontal_dist2(u, v, pos) + h2).powf(-beta))
            .collect();
        let total = brute_sum(geom, beta, pos).value;
        let near_total = brute_sum(&geom.with_trunc(rings), beta, pos).value;
        InterferenceSampler {
            near,
            far_sum: (total - near_total).max(0.0),
            total,
        }
    }

    pub fn sites(&self) -> usize {
        self.near.len()
    }

    /// Full truncated-lattice sum, i.e. `C` with every interferer on.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// One realisation of `C` for activation probability `p`, consuming
    /// exactly `sites()` words from `rng`.
    pub fn sample(&self, p: f64, rng: &mut impl RngCore) -> f64 {
        let thr = activation_threshold(p);
        let mut c = 0.0;
        for &w in &self.near {
            if (rng.next_u32() as u64) < thr {
                c += w;
            }
        }
        if p == 1.0 {
            self.total
        } else {
            c + p * self.far_sum
        }
    }

    /// One realisation for several `p` from the same words.
    pub fn sample_coupled(&self, ps: &[f64], thresholds: &[u64], rng: &mut impl RngCore, out: &mut [f64]) {
        out.iter_mut().for_each(|c| *c = 0.0);
        for &w in &self.near {
            let word = rng.next_u32() as u64;
            for (c, &thr) in out.iter_mut().zip(thresholds) {
                if word < thr {
                    *c += w;
                }
            }
        }
        for (c, &p) in out.iter_mut().zip(ps) {
            *c = if p == 1.0 { self.total } else { *c + p * self.far_sum };
        }
    }
}

/// One realisation of the interference sum `C` at `pos`.
pub fn sample_interference(
    model: &ThinningModel,
    geom: &NetworkGeometry,
    beta: f64,
    pos: ReceiverPosition,
    rng: &mut impl RngCore,
) -> f64 {
    InterferenceSampler::new(geom, beta, pos, model.near_rings).sample(model.p, rng)
}

/// Draw `trials` coupled realisations of `C` for every `p` in `ps` at one
/// node. Returns one vector of samples per `p`.
pub fn sample_node(
    sampler: &InterferenceSampler,
    ps: &[f64],
    seed: u64,
    node: u64,
    trials: usize,
) -> Vec<Vec<f64>> {
    let thresholds: Vec<u64> = ps.iter().map(|&p| activation_threshold(p)).collect();
    let mut rng = node_stream(seed, node);
    seek_trial(&mut rng, 0, sampler.sites());
    let mut out = vec![Vec::with_capacity(trials); ps.len()];
    let mut buf = vec![0.0; ps.len()];
    for _ in 0..trials {
        sampler.sample_coupled(ps, &thresholds, &mut rng, &mut buf);
        for (o, &c) in out.iter_mut().zip(&buf) {
            o.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl McEstimate {
    fn from_count(count: usize, trials: usize, seed: u64) -> Self {
        let mean = count as f64 / trials as f64;
        McEstimate {
            mean,
            stderr: (mean * (1.0 - mean) / trials as f64).sqrt(),
            trials,
            seed,
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::domain("montecarlo", "trials must be >= 1"));
    }
    Ok(())
}

/// Fraction of realisations with `C < eta(z, theta)` at one position (node 0
/// of the seed's streams).
pub fn empirical_coverage(
    model: &ThinningModel,
    net: &AttocellNetwork,
    pos: ReceiverPosition,
    theta_linear: f64,
    trials: usize,
) -> Result<McEstimate> {
    check_trials(trials)?;
    let e = eta(net, pos, theta_linear)?;
    let sampler = InterferenceSampler::new(&net.geometry, net.beta(), pos, model.near_rings);
    let samples = sample_node(&sampler, &[model.p], model.seed, 0, trials);
    let count = samples[0].iter().filter(|&&c| c < e).count();
    Ok(McEstimate::from_count(count, trials, model.seed))
}

/// Monte Carlo coverage curves for several `p` over a dB grid, averaged over
/// the attocell quadrature nodes. Realisations are shared across all `p` and
/// all thresholds.
pub fn empirical_curves(
    ps: &[f64],
    seed: u64,
    near_rings: u32,
    net: &AttocellNetwork,
    theta_db: &[f64],
    trials_per_node: usize,
    quad: QuadratureSpec,
) -> Result<Vec<CoverageCurve>> {
    let thetas: Vec<f64> = theta_db.iter().map(|&d| db_to_linear(d)).collect();
    curves_at_thresholds(ps, seed, near_rings, net, theta_db, &thetas, trials_per_node, quad)
}

#[allow(clippy::too_many_arguments)]
fn curves_at_thresholds(
    ps: &[f64],
    seed: u64,
    near_rings: u32,
    net: &AttocellNetwork,
    theta_db: &[f64],
    thetas: &[f64],
    trials_per_node: usize,
    quad: QuadratureSpec,
) -> Result<Vec<CoverageCurve>> {
    check_trials(trials_per_node)?;
    for &p in ps {
        ThinningModel::new(p, seed)?;
    }
    let rule = quad.rule(net.geometry.pitch)?;
    // counts[node][p][theta]
    let counts = rule
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(node, n)| -> Result<Vec<Vec<usize>>> {
            let etas = thetas
                .iter()
                .map(|&t| eta(net, n.pos, t))
                .collect::<Result<Vec<_>>>()?;
            let sampler = InterferenceSampler::new(&net.geometry, net.beta(), n.pos, near_rings);
            let mut samples = sample_node(&sampler, ps, seed, node as u64, trials_per_node);
            Ok(samples
                .iter_mut()
                .map(|s| {
                    s.sort_unstable_by(f64::total_cmp);
                    etas.iter().map(|&e| s.partition_point(|&c| c < e)).collect()
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let trials = trials_per_node as f64;
    Ok(ps
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let mut values = Vec::with_capacity(thetas.len());
            let mut errs = Vec::with_capacity(thetas.len());
            for ti in 0..thetas.len() {
                let mut mean = 0.0;
                let mut var = 0.0;
                for (n, c) in rule.nodes().iter().zip(&counts) {
                    let frac = c[pi][ti] as f64 / trials;
                    mean += n.weight * frac;
                    var += n.weight * n.weight * frac * (1.0 - frac) / trials;
                }
                values.push(mean.clamp(0.0, 1.0));
                errs.push(var.sqrt());
            }
            CoverageCurve {
                method: CurveMethod::MonteCarlo,
                p,
                geometry: net.geometry,
                theta_db: theta_db.to_vec(),
                theta_linear: thetas.to_vec(),
                values,
                stderr: Some(errs),
            }
        })
        .collect())
}

/// Attocell-averaged Monte Carlo coverage at one threshold.
pub fn empirical_coverage_spatial(
    model: &ThinningModel,
    net: &AttocellNetwork,
    theta_linear: f64,
    trials_per_node: usize,
    quad: QuadratureSpec,
) -> Result<McEstimate> {
    if !(theta_linear > 0.0) {
        return Err(Error::domain("empirical_coverage_spatial", "threshold must be > 0"));
    }
    let theta_db = linear_to_db(theta_linear);
    let curve = curves_at_thresholds(
        &[model.p],
        model.seed,
        model.near_rings,
        net,
        &[theta_db],
        &[theta_linear],
        trials_per_node,
        quad,
    )?
    .remove(0);
    Ok(McEstimate {
        mean: curve.values[0],
        stderr: curve.stderr.map_or(0.0, |s| s[0]),
        trials: trials_per_node,
        seed: model.seed,
    })
}

/// Moments and normality of the sampled interference sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltDiagnostics {
    pub sample_mean: f64,
    pub sample_var: f64,
    /// `p S_m` from the direct lattice sum.
    pub analytic_mean: f64,
    /// `p (1-p) S_v` from the direct lattice sum.
    pub analytic_var: f64,
    /// Kolmogorov–Smirnov distance of the standardised samples from N(0, 1).
    pub ks_stat: f64,
    pub trials: usize,
}

impl CltDiagnostics {
    /// Standard error of the sample mean under the analytic variance.
    pub fn mean_stderr(&self) -> f64 {
        (self.analytic_var / self.trials as f64).sqrt()
    }
}

pub fn clt_diagnostics(
    model: &ThinningModel,
    geom: &NetworkGeometry,
    beta: f64,
    pos: ReceiverPosition,
    trials: usize,
) -> Result<CltDiagnostics> {
    let p = model.p;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("clt_diagnostics", format!("needs 0 < p < 1, got {p}")));
    }
    if trials < 2 {
        return Err(Error::domain("clt_diagnostics", "needs at least two trials"));
    }
    let analytic_mean = p * brute_sum(geom, beta, pos).value;
    let analytic_var = p * (1.0 - p) * brute_sum(geom, 2.0 * beta, pos).value;
    let sampler = InterferenceSampler::new(geom, beta, pos, model.near_rings);
    let mut samples = sample_node(&sampler, &[p], model.seed, 0, trials).remove(0);

    let n = trials as f64;
    let sample_mean = samples.iter().sum::<f64>() / n;
    let sample_var = samples.iter().map(|c| (c - sample_mean).powi(2)).sum::<f64>() / (n - 1.0);

    let sd = analytic_var.sqrt();
    samples.sort_unstable_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &c) in samples.iter().enumerate() {
        let f = normal_cdf((c - analytic_mean) / sd)?;
        ks = ks.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(CltDiagnostics {
        sample_mean,
        sample_var,
        analytic_mean,
        analytic_var,
        ks_stat: ks,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OpticalConfig;

    fn net(h: f64) -> AttocellNetwork {
        AttocellNetwork::new(OpticalConfig::default(), NetworkGeometry::new(0.5, h, 200).unwrap()).unwrap()
    }

    #[test]
    fn degenerate_probabilities() {
        let n = net(1.5);
        let pos = ReceiverPosition::new(0.1, 0.2);
        let sampler = InterferenceSampler::new(&n.geometry, 4.0, pos, 10);
        let mut rng = node_stream(7, 0);
        for _ in 0..20 {
            assert_eq!(sampler.sample(0.0, &mut rng), 0.0);
            assert_eq!(sampler.sample(1.0, &mut rng), brute_sum(&n.geometry, 4.0, pos).value);
        }
    }

    #[test]
    fn samples_bounded_by_full_sum() {
        let n = net(1.5);
        let sampler = InterferenceSampler::new(&n.geometry, 4.0, ReceiverPosition::ORIGIN, 12);
        let mut rng = node_stream(1, 3);
        for _ in 0..200 {
            let c = sampler.sample(0.5, &mut rng);
            assert!(c >= 0.0 && c <= sampler.total());
        }
    }

    #[test]
    fn trial_words_are_addressable() {
        let n = net(1.5);
        let sampler = InterferenceSampler::new(&n.geometry, 4.0, ReceiverPosition::ORIGIN, 5);
        let seq = sample_node(&sampler, &[0.4], 99, 2, 6).remove(0);
        let mut rng = node_stream(99, 2);
        seek_trial(&mut rng, 4, sampler.sites());
        assert_eq!(sampler.sample(0.4, &mut rng), seq[4]);
    }

    #[test]
    fn coupled_samples_are_monotone_in_p() {
        let n = net(1.5);
        let sampler = InterferenceSampler::new(&n.geometry, 4.0, ReceiverPosition::new(0.2, 0.1), 15);
        let ps = [0.3, 0.5, 0.8];
        let s = sample_node(&sampler, &ps, 5, 0, 500);
        for t in 0..500 {
            assert!(s[0][t] <= s[1][t] && s[1][t] <= s[2][t]);
        }
    }

    #[test]
    fn clt_rejects_degenerate_p() {
        let n = net(1.5);
        for p in [0.0, 1.0] {
            let m = ThinningModel::new(p, 1).unwrap();
            assert!(clt_diagnostics(&m, &n.geometry, 4.0, ReceiverPosition::ORIGIN, 100).is_err());
        }
        assert!(ThinningModel::new(1.2, 0).is_err());
    }

    #[test]
    fn empirical_coverage_threshold_limits() {
        let n = net(1.5);
        let m = ThinningModel::new(0.5, 11).unwrap().with_near_rings(10);
        let e = empirical_coverage(&m, &n, ReceiverPosition::ORIGIN, 1e-6, 200).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert!(empirical_coverage(&m, &n, ReceiverPosition::ORIGIN, 1.0, 0).is_err());
    }
}
