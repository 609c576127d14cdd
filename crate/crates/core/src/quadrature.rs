//! Gauss–Legendre rules and the tensor-product average over one attocell.

use crate::error::{Error, Result};
use crate::model::ReceiverPosition;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::domain("GaussLegendre::new", "order must be >= 1"));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate `f` over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * pn - pn1) / (x * x - 1.0);
    (pn, d)
}

/// One quadrature point of an attocell average; weights sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNode {
    pub pos: ReceiverPosition,
    pub weight: f64,
}

/// Tensor-product Gauss–Legendre rule over the attocell `[-a/2, a/2]^2`,
/// normalised so that `sum(weight * f)` is the cell average of `f`.
#[derive(Debug, Clone)]
pub struct AttocellRule {
    nodes: Vec<WeightedNode>,
}

impl AttocellRule {
    /// Full `order x order` grid, row-major in `(x, y)`.
    pub fn full(order: usize, pitch: f64) -> Result<Self> {
        let gl = GaussLegendre::new(order)?;
        let mut nodes = Vec::with_capacity(order * order);
        for (&xi, &wi) in gl.nodes.iter().zip(&gl.weights) {
            for (&yj, &wj) in gl.nodes.iter().zip(&gl.weights) {
                nodes.push(WeightedNode {
                    pos: ReceiverPosition::new(0.5 * pitch * xi, 0.5 * pitch * yj),
                    weight: 0.25 * wi * wj,
                });
            }
        }
        Ok(AttocellRule { nodes })
    }

    /// The same rule folded onto the octant `0 <= y <= x`: each grid point is
    /// mapped to its image under the square's dihedral group and the weights
    /// of coincident images are merged. Exact for integrands with that
    /// symmetry.
    pub fn folded(order: usize, pitch: f64) -> Result<Self> {
        let gl = GaussLegendre::new(order)?;
        let n = order;
        // index of |x_i| among the non-negative nodes
        let half_index = |i: usize| if i >= n / 2 { i } else { n - 1 - i };
        let mut acc: Vec<Option<f64>> = vec![None; n * n];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (half_index(i), half_index(j));
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                let w = 0.25 * gl.weights[i] * gl.weights[j];
                let slot = &mut acc[hi * n + lo];
                *slot = Some(slot.unwrap_or(0.0) + w);
            }
        }
        let nodes = acc
            .iter()
            .enumerate()
            .filter_map(|(k, w)| {
                w.map(|weight| WeightedNode {
                    pos: ReceiverPosition::new(
                        0.5 * pitch * gl.nodes[k / n],
                        0.5 * pitch * gl.nodes[k % n],
                    ),
                    weight,
                })
            })
            .collect();
        Ok(AttocellRule { nodes })
    }

    pub fn new(order: usize, pitch: f64, use_symmetry: bool) -> Result<Self> {
        if use_symmetry {
            Self::folded(order, pitch)
        } else {
            Self::full(order, pitch)
        }
    }

    pub fn nodes(&self) -> &[WeightedNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted average of per-node values, in node order.
    pub fn average(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        self.nodes
            .iter()
            .zip(values)
            .map(|(n, v)| n.weight * v)
            .sum()
    }
}
