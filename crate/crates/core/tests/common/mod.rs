//! Independent reference implementations used by the integration tests.
//! None of these share code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (1*3*...*(2n+1))`.
/// Every term is positive, so there is no cancellation for any `x`.
pub fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() || n > 2000.0 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` by the trapezoid rule,
/// which converges geometrically for this doubly-exponentially decaying
/// integrand.
pub fn bessel_k_integral(nu: f64, x: f64) -> f64 {
    let h = 0.004;
    // exponents relative to the peak keep everything in range
    let log_f = |t: f64| -x * t.cosh() + nu * t + (0.5 * (1.0 + (-2.0 * nu * t).exp())).ln();
    let peak = (0..20_000).map(|i| log_f(i as f64 * h)).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.5 * (log_f(0.0) - peak).exp();
    let mut i = 1;
    loop {
        let t = i as f64 * h;
        let v = (log_f(t) - peak).exp();
        sum += v;
        if v < 1e-20 * sum && x * t.sinh() > nu {
            break;
        }
        i += 1;
    }
    sum * h * peak.exp()
}

/// Gamma via the Stirling series after shifting the argument above 30.
pub fn gamma_stirling(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 1.0;
    let mut z = x;
    while z < 30.0 {
        shift *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_2k / (2k (2k-1))
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0)))));
    let ln_g = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series;
    ln_g.exp() / shift
}

/// Lattice sum over `|u|, |v| <= trunc`, origin excluded, summed smallest
/// term first.
pub fn lattice_sum_sorted(a: f64, h: f64, trunc: i64, exponent: f64, zx: f64, zy: f64) -> f64 {
    let mut terms = Vec::with_capacity(((2 * trunc + 1) * (2 * trunc + 1)) as usize);
    for u in -trunc..=trunc {
        for v in -trunc..=trunc {
            if u == 0 && v == 0 {
                continue;
            }
            let dx = u as f64 * a - zx;
            let dy = v as f64 * a - zy;
            terms.push((dx * dx + dy * dy + h * h).powf(-exponent));
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Relative difference, falling back to absolute near zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b.abs() > 1e-300 {
        d / b.abs()
    } else {
        d
    }
}
