//! Certified lower bound on the one-dimensional symbol
//! `g(x, V) = 1 + 2 Σ_{j>=1} exp(-j²/V) cos(jx)` of the Gaussian lattice
//! kernel. The `d`-dimensional symbol is the product of `d` copies, so every
//! eigenvalue of a finite block lies in `[m_g^d, g(0, V)^d]`.

use serde::Serialize;

use crate::error::{Error, Result};

pub const SYMBOL_TAIL_TARGET: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolAnalysis {
    pub scale: f64,
    pub dim: usize,
    pub grid_n: usize,
    pub order: usize,
    /// Bound on the neglected series terms, uniform in `x`.
    pub tail_bound: f64,
    /// Smallest partial-sum value on the grid and where it occurs.
    pub grid_min: f64,
    pub grid_argmin: f64,
    /// Certified lower bound on `min_x g(x, V)`: the best bound found, which
    /// may be nonpositive when the certificate fails.
    pub m_g: f64,
    pub certified: bool,
    /// `m_g^d` when certified, else 0.
    pub m_f: f64,
    /// Upper bound `(g(0, V) + tail)^d` on every eigenvalue.
    pub big_m_f: f64,
}

/// Upper bound on `2 Σ_{j > order} exp(-j²/V)`.
pub fn symbol_tail(scale: f64, order: usize) -> f64 {
    let j = (order + 1) as f64;
    let first = (-j * j / scale).exp();
    // successive ratios exp(-(2j+1)/V) only shrink
    let ratio = (-(2.0 * j + 1.0) / scale).exp();
    2.0 * first / (1.0 - ratio)
}

/// Smallest order whose tail bound is below the target.
pub fn symbol_order(scale: f64) -> usize {
    let mut o = 1;
    while symbol_tail(scale, o) >= SYMBOL_TAIL_TARGET {
        o += 1;
    }
    o
}

/// Partial sum `1 + 2 Σ_{j<=order} exp(-j²/V) cos(jx)`.
pub fn symbol_partial(x: f64, scale: f64, order: usize) -> f64 {
    1.0 + 2.0
        * (1..=order)
            .map(|j| {
                let j = j as f64;
                (-j * j / scale).exp() * (j * x).cos()
            })
            .sum::<f64>()
}

pub fn fourier_symbol_min(dim: usize, scale: f64, grid_n: usize, order: usize) -> Result<SymbolAnalysis> {
    if !(scale > 0.0) || dim == 0 {
        return Err(Error::Domain("symbol needs scale > 0 and dim >= 1".into()));
    }
    if grid_n < 64 {
        return Err(Error::Domain(format!("grid resolution {grid_n} below 64")));
    }
    let tail = symbol_tail(scale, order);
    if !(tail < SYMBOL_TAIL_TARGET) {
        return Err(Error::Domain(format!(
            "series order {order} leaves a tail of {tail:e}; use at least {}",
            symbol_order(scale)
        )));
    }
    // derivative bounds of the partial sum
    let (mut l1, mut l2) = (0.0, 0.0);
    for j in 1..=order {
        let jf = j as f64;
        let w = 2.0 * (-jf * jf / scale).exp();
        l1 += jf * w;
        l2 += jf * jf * w;
    }
    // g is even and 2π-periodic, so [0, π] suffices
    let h = std::f64::consts::PI / grid_n as f64;
    let vals: Vec<f64> = (0..=grid_n).map(|k| symbol_partial(k as f64 * h, scale, order)).collect();
    let (mut grid_min, mut arg) = (f64::INFINITY, 0.0);
    for (k, &v) in vals.iter().enumerate() {
        if v < grid_min {
            grid_min = v;
            arg = k as f64 * h;
        }
    }
    let mut lower = f64::INFINITY;
    for w in vals.windows(2) {
        let by_slope = 0.5 * (w[0] + w[1]) - 0.5 * l1 * h;
        let by_curvature = w[0].min(w[1]) - l2 * h * h / 8.0;
        lower = lower.min(by_slope.max(by_curvature));
    }
    let m_g = lower - tail;
    let certified = m_g > 0.0;
    let top = vals[0] + tail;
    Ok(SymbolAnalysis {
        scale,
        dim,
        grid_n,
        order,
        tail_bound: tail,
        grid_min,
        grid_argmin: arg,
        m_g,
        certified,
        m_f: if certified { m_g.powi(dim as i32) } else { 0.0 },
        big_m_f: top.powi(dim as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_scale_minimum_at_pi() {
        let s = fourier_symbol_min(2, 1.0, 1024, symbol_order(1.0)).unwrap();
        let e = |x: f64| (-x).exp();
        let at_pi: f64 = 1.0 + (1..=8).map(|j| 2.0 * (-1f64).powi(j) * e((j * j) as f64)).sum::<f64>();
        assert!((s.grid_argmin - std::f64::consts::PI).abs() < 1e-12);
        assert!((s.grid_min - at_pi).abs() < 1e-12);
        assert!(s.certified && s.m_g <= at_pi && at_pi - s.m_g < 1e-4);
        assert!((s.m_f - 0.0904).abs() < 1e-3);
    }

    #[test]
    fn small_scale_symbol_is_flat() {
        let s = fourier_symbol_min(1, 0.05, 256, symbol_order(0.05)).unwrap();
        assert!((s.m_g - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coarse_order_rejected() {
        assert!(fourier_symbol_min(1, 1.0, 128, 2).is_err());
    }
}
