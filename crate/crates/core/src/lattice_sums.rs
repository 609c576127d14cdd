//! Interference moment sums over the square LED lattice,
//!
//! ```text
//! S(s; z) = sum_{(u,v) != (0,0)} ((u a + z_x)^2 + (v a + z_y)^2 + h^2)^(-s)
//! ```
//!
//! with `s = beta` for the mean (`S_m`) and `s = 2 beta` for the variance
//! (`S_v`). Two evaluators are provided: a truncated direct sum and the
//! Poisson-summation series, whose dual-lattice terms are modified Bessel
//! functions of the second kind.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NetworkGeometry, ReceiverPosition};
use crate::specfun::{bessel_k, gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumMethod {
    BruteForce,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumResult {
    pub value: f64,
    pub method: SumMethod,
    /// Upper bound on the omitted lattice tail; zero for the series.
    pub tail_bound: f64,
    /// Direct sum: interfering sites summed. Series: dual-lattice terms used.
    pub terms_used: usize,
}

/// Upper corner `(j, l)` of the dual-lattice index box `[0, j] x [0, l]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesOrder {
    pub j: u32,
    pub l: u32,
}

impl SeriesOrder {
    pub const fn new(j: u32, l: u32) -> Self {
        SeriesOrder { j, l }
    }

    /// Dual-lattice indices `(w, f)` in the box, origin excluded.
    pub fn indices(&self) -> impl Iterator<Item = (u32, u32)> {
        let l = self.l;
        (0..=self.j)
            .flat_map(move |w| (0..=l).map(move |f| (w, f)))
            .filter(|&i| i != (0, 0))
    }
}

impl Default for SeriesOrder {
    fn default() -> Self {
        SeriesOrder::new(1, 1)
    }
}

/// How each quadrant index `(w, f)` stands in for its sign images.
///
/// The per-term expression `g(w, f)` carries a factor 4, the number of
/// images `(+-w, +-f)` when both indices are non-zero. An on-axis index has
/// only two images, so `Folded` gives it weight 1/2 and reproduces the exact
/// Poisson sum. `Verbatim` weights every quadrant term by one, which
/// double-counts the on-axis terms; it is kept for comparison reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisWeighting {
    #[default]
    Folded,
    Verbatim,
}

impl AxisWeighting {
    fn weight(self, w: u32, f: u32) -> f64 {
        match self {
            AxisWeighting::Folded if w == 0 || f == 0 => 0.5,
            _ => 1.0,
        }
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Bound on the lattice tail beyond `trunc` rings, `2 pi r^(2-2s) / ((2s-2) a^2)`
/// with `r = max(trunc - 1, 1/2) a`.
pub fn tail_bound(geom: &NetworkGeometry, exponent: f64) -> f64 {
    let a = geom.pitch;
    let r = (geom.trunc as f64 - 1.0).max(0.5) * a;
    2.0 * PI * r.powf(2.0 - 2.0 * exponent) / ((2.0 * exponent - 2.0) * a * a)
}

/// Direct sum over all interferers with `|u|, |v| <= trunc`, accumulated in
/// ascending diamond rings `|u| + |v| = d` with compensated summation.
pub fn brute_sum(geom: &NetworkGeometry, exponent: f64, pos: ReceiverPosition) -> SumResult {
    let t = geom.trunc as i64;
    let h2 = geom.height * geom.height;
    let term = |u: i64, v: i64| (geom.horizontal_dist2(u, v, pos) + h2).powf(-exponent);
    let mut acc = CompensatedSum::default();
    let mut count = 0usize;
    for d in 1..=2 * t {
        let umax = d.min(t);
        for u in -umax..=umax {
            let rem = d - u.abs();
            if rem > t {
                continue;
            }
            acc.add(term(u, rem));
            count += 1;
            if rem != 0 {
                acc.add(term(u, -rem));
                count += 1;
            }
        }
    }
    SumResult {
        value: acc.value(),
        method: SumMethod::BruteForce,
        tail_bound: tail_bound(geom, exponent),
        terms_used: count,
    }
}

/// Direct `S_m`.
pub fn sm_brute(geom: &NetworkGeometry, beta: f64, pos: ReceiverPosition) -> SumResult {
    brute_sum(geom, beta, pos)
}

/// Direct `S_v`.
pub fn sv_brute(geom: &NetworkGeometry, beta: f64, pos: ReceiverPosition) -> SumResult {
    brute_sum(geom, 2.0 * beta, pos)
}

/// One dual-lattice contribution to the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub w: u32,
    pub f: u32,
    pub weight: f64,
    /// `g(w, f)` before weighting.
    pub raw: f64,
}

impl SeriesTerm {
    pub fn contribution(&self) -> f64 {
        self.weight * self.raw
    }
}

/// Closed-form pieces of the series for exponent `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesBreakdown {
    /// Continuum term `pi h^(2-2s) / (a^2 (s-1))`.
    pub integral: f64,
    /// Removed origin term `(z^2 + h^2)^(-s)`.
    pub self_term: f64,
    pub terms: Vec<SeriesTerm>,
}

impl SeriesBreakdown {
    pub fn total(&self) -> f64 {
        self.integral - self.self_term + self.terms.iter().map(SeriesTerm::contribution).sum::<f64>()
    }
}

pub fn series_breakdown(
    geom: &NetworkGeometry,
    exponent: f64,
    pos: ReceiverPosition,
    order: SeriesOrder,
    weighting: AxisWeighting,
) -> Result<SeriesBreakdown> {
    if !(exponent > 1.0) {
        return Err(Error::domain(
            "series_breakdown",
            format!("lattice sum diverges for exponent {exponent} <= 1"),
        ));
    }
    let a = geom.pitch;
    let h = geom.height;
    let s = exponent;
    let integral = h.powf(2.0 - 2.0 * s) * PI / (a * a * (s - 1.0));
    let self_term = (pos.radius2() + h * h).powf(-s);
    let gamma_s = gamma(s)?;
    let terms = order
        .indices()
        .map(|(w, f)| {
            let rho = ((w * w + f * f) as f64).sqrt();
            let bessel = bessel_k(s - 1.0, 2.0 * PI * h * rho / a)?;
            let phase = (2.0 * PI * w as f64 * pos.x / a).cos() * (2.0 * PI * f as f64 * pos.y / a).cos();
            let denom = (h / (2.0 * PI * rho)).powf(s - 1.0) * 2f64.powf(s - 4.0) * a.powf(s + 1.0) * gamma_s / PI;
            Ok(SeriesTerm {
                w,
                f,
                weight: weighting.weight(w, f),
                raw: bessel * phase / denom,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeriesBreakdown {
        integral,
        self_term,
        terms,
    })
}

/// Poisson-summation series for exponent `s`.
pub fn series_sum(
    geom: &NetworkGeometry,
    exponent: f64,
    pos: ReceiverPosition,
    order: SeriesOrder,
    weighting: AxisWeighting,
) -> Result<SumResult> {
    let b = series_breakdown(geom, exponent, pos, order, weighting)?;
    Ok(SumResult {
        value: b.total(),
        method: SumMethod::Series,
        tail_bound: 0.0,
        terms_used: b.terms.len(),
    })
}

/// Series `S'_m` with the default axis weighting.
pub fn sm_series(geom: &NetworkGeometry, beta: f64, pos: ReceiverPosition, order: SeriesOrder) -> Result<SumResult> {
    series_sum(geom, beta, pos, order, AxisWeighting::Folded)
}

/// Series `S'_v` with the default axis weighting.
pub fn sv_series(geom: &NetworkGeometry, beta: f64, pos: ReceiverPosition, order: SeriesOrder) -> Result<SumResult> {
    series_sum(geom, 2.0 * beta, pos, order, AxisWeighting::Folded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(h: f64) -> NetworkGeometry {
        NetworkGeometry::new(0.5, h, 200).unwrap()
    }

    #[test]
    fn default_order_uses_three_terms() {
        let idx: Vec<_> = SeriesOrder::default().indices().collect();
        assert_eq!(idx, vec![(0, 1), (1, 0), (1, 1)]);
        let r = sm_series(&geom(1.5), 4.0, ReceiverPosition::ORIGIN, SeriesOrder::default()).unwrap();
        assert_eq!(r.terms_used, 3);
        assert_eq!(r.method, SumMethod::Series);
        assert_eq!(SeriesOrder::new(0, 0).indices().count(), 0);
    }

    #[test]
    fn brute_counts_every_site() {
        let g = NetworkGeometry::new(0.5, 1.5, 7).unwrap();
        let r = brute_sum(&g, 4.0, ReceiverPosition::new(0.1, 0.2));
        assert_eq!(r.terms_used, 15 * 15 - 1);
        let naive: f64 = crate::model::lattice_sites(7)
            .map(|(u, v)| (g.horizontal_dist2(u, v, ReceiverPosition::new(0.1, 0.2)) + 2.25).powf(-4.0))
            .sum();
        assert!(((r.value - naive) / naive).abs() < 1e-14);
    }

    #[test]
    fn sv_is_sm_at_double_exponent() {
        let g = geom(2.0);
        let p = ReceiverPosition::new(0.13, -0.07);
        assert_eq!(sv_brute(&g, 4.0, p).value, sm_brute(&g, 8.0, p).value);
        assert_eq!(
            sv_series(&g, 4.0, p, SeriesOrder::default()).unwrap().value,
            sm_series(&g, 8.0, p, SeriesOrder::default()).unwrap().value
        );
    }

    #[test]
    fn large_height_ratio_reduces_to_continuum() {
        let g = NetworkGeometry::new(0.5, 60.0, 200).unwrap();
        let r = sm_series(&g, 4.0, ReceiverPosition::ORIGIN, SeriesOrder::default()).unwrap();
        let expect = 60f64.powf(-6.0) * PI / (0.25 * 3.0) - 60f64.powf(-8.0);
        assert!(((r.value - expect) / expect).abs() < 1e-14);
    }

    #[test]
    fn verbatim_weighting_overcounts_axis_terms() {
        let g = geom(1.5);
        let p = ReceiverPosition::ORIGIN;
        let folded = series_breakdown(&g, 4.0, p, SeriesOrder::default(), AxisWeighting::Folded).unwrap();
        let verbatim = series_breakdown(&g, 4.0, p, SeriesOrder::default(), AxisWeighting::Verbatim).unwrap();
        let axis: f64 = folded.terms.iter().filter(|t| t.w == 0 || t.f == 0).map(|t| t.raw).sum();
        assert!((verbatim.total() - folded.total() - 0.5 * axis).abs() < 1e-15);
        assert!(axis > 0.0);
    }

    #[test]
    fn exponent_must_exceed_one() {
        assert!(series_sum(&geom(1.5), 1.0, ReceiverPosition::ORIGIN, SeriesOrder::default(), AxisWeighting::Folded).is_err());
    }

    #[test]
    fn tail_bound_is_tiny_at_default_truncation() {
        let g = geom(1.5);
        let sm = sm_brute(&g, 4.0, ReceiverPosition::ORIGIN);
        assert!(sm.tail_bound > 0.0);
        assert!(sm.tail_bound < 1e-10 * sm.value);
    }
}
