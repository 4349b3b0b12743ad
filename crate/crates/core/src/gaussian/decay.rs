//! The recursion `g_{n+1}(i,j) = g_n(i,j) + Σ_k g_n(i,k) g_n(k,j)` on a
//! truncated index table, with certified bounds for the neglected indices.
//!
//! Tails are controlled by a geometric envelope `C r^{dist(i,j)}` on the
//! line or on `Z^d` (ℓ1 distance). That family is closed under the
//! recursion once the rate is relaxed slightly, which gives explicit
//! constants for every level.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;
use crate::lattice::{manhattan, SpiralIndex};

pub const LEVELS: usize = 5;
/// Rate relaxation per level: `r -> r^RELAX`.
const RELAX: f64 = 0.9;
/// Cap on terms summed explicitly before a ratio bound takes over.
const MAX_EXPLICIT_TERMS: usize = 10_000_000;

/// User-declared bound `g_0(i,j) >= |cov(i,j)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecayEnvelope {
    /// `c · rho^{dist(i,j)}` with ℓ1 distance on lattices.
    Geometric { c: f64, rho: f64 },
    /// `c · exp(-|c(i) - c(j)|² / v)`.
    Gaussian { c: f64, v: f64 },
    /// `|cov(i,j)|` itself; finite index sets only.
    Exact,
}

/// Index geometry of the table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    Line,
    Lattice(SpiralIndex),
    Finite(usize),
}

impl Geometry {
    pub fn of(m: &CovarianceModel) -> Geometry {
        match m {
            CovarianceModel::Explicit(x) => Geometry::Finite(x.nrows()),
            CovarianceModel::Lattice { dim, .. } => Geometry::Lattice(SpiralIndex::new(*dim)),
            _ => Geometry::Line,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Geometry::Lattice(s) => s.dim(),
            _ => 1,
        }
    }

    fn l1(&self, i: usize, j: usize) -> f64 {
        match self {
            Geometry::Lattice(s) => manhattan(&s.coord(i), &s.coord(j)) as f64,
            _ => i.abs_diff(j) as f64,
        }
    }

    fn sq_euclid(&self, i: usize, j: usize) -> f64 {
        match self {
            Geometry::Lattice(s) => s
                .coord(i)
                .iter()
                .zip(s.coord(j))
                .map(|(a, b)| ((a - b) as f64).powi(2))
                .sum(),
            _ => (i.abs_diff(j) as f64).powi(2),
        }
    }
}

/// Geometric bound `c · r^{dist}` valid for all index pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeoBound {
    pub c: f64,
    pub r: f64,
}

impl GeoBound {
    fn at(&self, dist: f64) -> f64 {
        if dist == 0.0 {
            self.c
        } else {
            self.c * self.r.powf(dist)
        }
    }

    /// Bound for the next level: `h + h*h <= c' s^{dist}` with `s = r^RELAX`.
    fn step(&self, dim: usize) -> GeoBound {
        if self.c == 0.0 {
            return *self;
        }
        let r = self.r;
        let s = r.powf(RELAX);
        // sup_d (d+1)(r/s)^d
        let q = if s > 0.0 { r / s } else { 0.0 };
        let k = if q <= 0.0 {
            1.0
        } else {
            let d_star = (-1.0 / q.ln() - 1.0).max(0.0);
            let f = |d: f64| (d + 1.0) * q.powf(d);
            f(d_star.floor()).max(f(d_star.ceil())).max(1.0)
        };
        let m = k + 2.0 * r * r / (1.0 - r * r);
        GeoBound { c: self.c + self.c * self.c * m.powi(dim as i32), r: s }
    }
}

impl DecayEnvelope {
    fn validate(&self, geom: Geometry) -> Result<()> {
        match *self {
            DecayEnvelope::Geometric { c, rho } => {
                if !(c >= 0.0) || !(0.0..1.0).contains(&rho) {
                    return Err(Error::Domain(format!("geometric envelope needs c >= 0, rho in [0,1) (got {c}, {rho})")));
                }
            }
            DecayEnvelope::Gaussian { c, v } => {
                if !(c >= 0.0) || !(v > 0.0) {
                    return Err(Error::Domain(format!("gaussian envelope needs c >= 0, v > 0 (got {c}, {v})")));
                }
            }
            DecayEnvelope::Exact => {
                if !matches!(geom, Geometry::Finite(_)) {
                    return Err(Error::Domain("exact envelope only applies to finite index sets".into()));
                }
            }
        }
        Ok(())
    }

    fn g0(&self, geom: Geometry, model: Option<&CovarianceModel>, i: usize, j: usize) -> f64 {
        match *self {
            DecayEnvelope::Geometric { c, rho } => GeoBound { c, r: rho }.at(geom.l1(i, j)),
            DecayEnvelope::Gaussian { c, v } => c * (-geom.sq_euclid(i, j) / v).exp(),
            DecayEnvelope::Exact => model
                .and_then(|m| m.covariance(i, j).ok())
                .map(f64::abs)
                .unwrap_or(0.0),
        }
    }

    /// Geometric bound dominating `g_0` everywhere.
    fn dominating(&self, dim: usize) -> GeoBound {
        match *self {
            DecayEnvelope::Geometric { c, rho } => GeoBound { c, r: rho },
            // t² >= t - 1/4 per coordinate
            DecayEnvelope::Gaussian { c, v } => GeoBound {
                c: c * (dim as f64 / (4.0 * v)).exp(),
                r: (-1.0 / v).exp(),
            },
            DecayEnvelope::Exact => GeoBound { c: 0.0, r: 0.0 },
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecayTable {
    pub cutoff: usize,
    pub eps: f64,
    /// `levels[n][(i-1, j-1)]` bounds `g_n(i,j)` from above; exact on finite
    /// index sets.
    pub levels: Vec<DMatrix<f64>>,
    /// Geometric bounds valid at every level for all index pairs.
    pub bounds: Vec<GeoBound>,
    /// `weighted[n][i-1]` bounds `Σ_k g_n(i,k) k^eps`, tails included.
    pub weighted: Vec<Vec<f64>>,
    /// Largest tail term added to any table entry, per level.
    pub max_tail: Vec<f64>,
}

impl DecayTable {
    pub fn finite(&self) -> bool {
        self.weighted.iter().flatten().all(|x| x.is_finite())
            && self.levels.iter().all(|l| l.iter().all(|x| x.is_finite()))
    }

    pub fn monotone(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].iter().zip(w[0].iter()).all(|(b, a)| b >= a))
    }

    pub fn max_weighted(&self, level: usize) -> f64 {
        self.weighted[level].iter().copied().fold(0.0, f64::max)
    }
}

/// Sum of `first · Π ratio_k` style tails: explicit summation of `term(k)`
/// for `k = start..` until `ratio_bound(k) < 1`, then a geometric bound.
fn certified_series(
    start: usize,
    term: impl Fn(usize) -> f64,
    ratio_bound: impl Fn(usize) -> f64,
) -> f64 {
    let mut sum = 0.0;
    let mut k = start;
    for _ in 0..MAX_EXPLICIT_TERMS {
        let t = term(k);
        if t == 0.0 {
            return sum;
        }
        let q = ratio_bound(k);
        if q < 1.0 {
            return sum + t / (1.0 - q);
        }
        sum += t;
        k += 1;
    }
    f64::INFINITY
}

/// Runs the recursion from an envelope without reference to a model.
pub fn g_recursion_from(
    envelope: &DecayEnvelope,
    geom: Geometry,
    model: Option<&CovarianceModel>,
    cutoff: usize,
    eps: f64,
) -> Result<DecayTable> {
    envelope.validate(geom)?;
    if cutoff < 2 {
        return Err(Error::Domain("cutoff must be at least 2".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Domain("weight exponent must be nonnegative".into()));
    }
    let k = match geom {
        // a finite table has no tail, so it always covers every index
        Geometry::Finite(n) => n,
        _ => cutoff,
    };
    let dim = geom.dim();
    let mut bound = envelope.dominating(dim);
    let mut g = DMatrix::from_fn(k, k, |i, j| envelope.g0(geom, model, i + 1, j + 1));
    let mut levels = vec![g.clone()];
    let mut bounds = vec![bound];
    let mut max_tail = vec![0.0];

    // distance from index i to the indices beyond the table
    let reach_out: Vec<f64> = match geom {
        Geometry::Line => (1..=k).map(|i| (k + 1 - i) as f64).collect(),
        Geometry::Lattice(s) => {
            let full = s.full_radius(k).unwrap_or(0) as i64;
            (1..=k)
                .map(|i| ((full + 1) - s.chebyshev_radius(i)).max(0) as f64)
                .collect()
        }
        Geometry::Finite(_) => vec![f64::INFINITY; k],
    };

    for _ in 1..LEVELS {
        let prod = &g * &g;
        let mut next = &g + prod;
        let mut worst_tail: f64 = 0.0;
        if !matches!(geom, Geometry::Finite(_)) && bound.c > 0.0 {
            let (c, r) = (bound.c, bound.r);
            let lattice_mass = ((1.0 + r) / (1.0 - r)).powi(dim as i32);
            for i in 0..k {
                for j in 0..k {
                    let t = match geom {
                        Geometry::Line => {
                            c * c * r.powf(reach_out[i] + reach_out[j]) / (1.0 - r * r)
                        }
                        _ => c * r.powf(reach_out[i].max(reach_out[j])) * c * lattice_mass,
                    };
                    next[(i, j)] += t;
                    worst_tail = worst_tail.max(t);
                }
            }
        }
        bound = bound.step(dim);
        if !matches!(geom, Geometry::Finite(_)) {
            for i in 0..k {
                for j in 0..k {
                    let cap = bound.at(geom.l1(i + 1, j + 1));
                    // both are upper bounds; keep the smaller but never drop below g_n
                    next[(i, j)] = next[(i, j)].min(cap).max(g[(i, j)]);
                }
            }
        }
        g = next;
        levels.push(g.clone());
        bounds.push(bound);
        max_tail.push(worst_tail);
    }

    let weighted = levels
        .iter()
        .zip(&bounds)
        .map(|(t, b)| {
            (0..k)
                .map(|i| {
                    let inner: f64 =
                        (0..k).map(|j| t[(i, j)] * ((j + 1) as f64).powf(eps)).sum();
                    inner + weighted_tail(geom, *b, i + 1, k, eps)
                })
                .collect()
        })
        .collect();
    Ok(DecayTable { cutoff: k, eps, levels, bounds, weighted, max_tail })
}

/// Bound on `Σ_{k > K} g(i,k) k^eps` from a geometric envelope.
fn weighted_tail(geom: Geometry, b: GeoBound, i: usize, cutoff: usize, eps: f64) -> f64 {
    if b.c == 0.0 {
        return 0.0;
    }
    match geom {
        Geometry::Finite(_) => 0.0,
        Geometry::Line => {
            if b.r >= 1.0 {
                return f64::INFINITY;
            }
            let term = |k: usize| b.c * b.r.powf((k - i) as f64) * (k as f64).powf(eps);
            let ratio = |k: usize| b.r * (1.0 + 1.0 / k as f64).powf(eps);
            certified_series(cutoff + 1, term, ratio)
        }
        Geometry::Lattice(s) => {
            if b.r >= 1.0 {
                return f64::INFINITY;
            }
            let d = s.dim() as i32;
            let full = s.full_radius(cutoff).unwrap_or(0);
            let rho_i = s.chebyshev_radius(i) as f64;
            let p = (d - 1) as f64 + d as f64 * eps;
            // whole shells rho > full cover every index beyond the table
            let term = |rho: usize| {
                let side = 2.0 * rho as f64 + 1.0;
                2.0 * d as f64
                    * b.c
                    * side.powf(p)
                    * b.r.powf((rho as f64 - rho_i).max(0.0))
            };
            let ratio = |rho: usize| {
                let side = 2.0 * rho as f64 + 1.0;
                b.r * ((side + 2.0) / side).powf(p)
            };
            certified_series(full + 1, term, ratio)
        }
    }
}

/// Probed pairs must satisfy `|cov(i,j)| <= g_0(i,j)`.
pub fn validate_envelope(
    m: &CovarianceModel,
    envelope: &DecayEnvelope,
    probe: usize,
) -> Result<()> {
    let geom = Geometry::of(m);
    let n = match geom {
        Geometry::Finite(n) => probe.min(n),
        _ => probe,
    };
    let block = m.leading(n)?;
    for i in 0..n {
        for j in 0..n {
            let cov = block[(i, j)].abs();
            let bound = envelope.g0(geom, Some(m), i + 1, j + 1);
            if cov > bound * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::EnvelopeViolated { i: i + 1, j: j + 1, cov, bound });
            }
        }
    }
    Ok(())
}

/// Number of leading indices whose covariances are compared with the envelope.
pub const ENVELOPE_PROBE: usize = 60;

pub fn g_recursion(
    m: &CovarianceModel,
    envelope: &DecayEnvelope,
    cutoff: usize,
    eps: f64,
) -> Result<DecayTable> {
    validate_envelope(m, envelope, ENVELOPE_PROBE.min(cutoff.max(2)))?;
    g_recursion_from(envelope, Geometry::of(m), Some(m), cutoff, eps)
}

/// A reasonable envelope for each model class, if one is known.
pub fn default_envelope(m: &CovarianceModel) -> Option<DecayEnvelope> {
    match m {
        CovarianceModel::Explicit(_) => Some(DecayEnvelope::Exact),
        CovarianceModel::Ar { order, delta, .. } => Some(DecayEnvelope::Geometric {
            c: 1.0 / delta,
            rho: (1.0 - delta).powf(1.0 / *order as f64),
        }),
        CovarianceModel::Lattice { dim, alpha, scale } => {
            if *alpha == 2.0 {
                Some(DecayEnvelope::Gaussian { c: 1.0, v: *scale })
            } else if *alpha >= 1.0 {
                // |x|_2^alpha >= |x|_2 >= |x|_1 / sqrt(d) once |x| >= 1
                Some(DecayEnvelope::Geometric {
                    c: 1.0,
                    rho: (-1.0 / ((*dim as f64).sqrt() * scale)).exp(),
                })
            } else {
                None
            }
        }
        CovarianceModel::DiagDominant { lags, .. } => {
            let rho: f64 = 0.5;
            let c = lags
                .iter()
                .enumerate()
                .map(|(k, l)| l.abs() / rho.powi(k as i32))
                .fold(0.0, f64::max);
            Some(DecayEnvelope::Geometric { c, rho })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_envelope_stays_zero() {
        let t = g_recursion_from(&DecayEnvelope::Geometric { c: 0.0, rho: 0.5 }, Geometry::Line, None, 10, 0.5)
            .unwrap();
        assert!(t.levels.iter().all(|l| l.iter().all(|&x| x == 0.0)));
        assert!(t.weighted.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn diagonal_envelope_single_term() {
        let c = 0.3;
        let t = g_recursion_from(&DecayEnvelope::Geometric { c, rho: 0.0 }, Geometry::Line, None, 8, 0.5)
            .unwrap();
        assert!((t.levels[1][(3, 3)] - (c + c * c)).abs() < 1e-15);
        assert_eq!(t.levels[1][(3, 4)], 0.0);
    }

    #[test]
    fn finite_recursion_is_exact() {
        let m = CovarianceModel::explicit(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0])).unwrap();
        let t = g_recursion(&m, &DecayEnvelope::Exact, 10, 1.0).unwrap();
        let g0 = &t.levels[0];
        let expect = g0 + g0 * g0;
        assert!((&t.levels[1] - expect).abs().max() < 1e-15);
    }

    #[test]
    fn envelope_violation_named() {
        let m = CovarianceModel::ar_stationary(&[0.5], 0.25).unwrap();
        let bad = DecayEnvelope::Geometric { c: 1.0, rho: 0.1 };
        assert!(matches!(g_recursion(&m, &bad, 20, 0.5), Err(Error::EnvelopeViolated { .. })));
    }
}
