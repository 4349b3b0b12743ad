//! Gaussian processes indexed by the naturals or by a lattice: covariance
//! models, conditional laws, precision-based independence and the evidence
//! behind eigenvalue floors and decay recursions.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexSet;
use crate::lattice::{euclidean, SpiralIndex};

pub mod decay;
pub mod linalg;
pub mod symbol;
pub mod verify;

pub use decay::*;
pub use symbol::*;
pub use verify::*;

/// Largest leading block accepted by [`eigen_bounds`] unless raised.
pub const DEFAULT_SIZE_CAP: usize = 400;

/// Covariance of a centred process `X_1, X_2, ...`. Indices start at 1.
#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceModel {
    /// Finite index set `1..=n`.
    Explicit(DMatrix<f64>),
    /// `X_n = Σ_j β_{nj} X_{n-j} + ε_n` with `X_k = 0` for `k <= 0` and
    /// standard normal innovations. Row `n-1` of `coefficients` holds
    /// `β_{n,1..=order}`; the last row is reused beyond the table.
    Ar { order: usize, coefficients: Vec<Vec<f64>>, delta: f64 },
    /// `exp(-|c(i) - c(j)|^alpha / scale)` on shell-indexed `Z^dim`.
    Lattice { dim: usize, alpha: f64, scale: f64 },
    /// Stationary band: `cov(i, j) = lags[|i - j|]`, zero past the band,
    /// with diagonal dominance margin `epsilon` and diagonal cap `cap`.
    DiagDominant { lags: Vec<f64>, epsilon: f64, cap: f64 },
}

/// JSON form of a covariance model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovarianceSpec {
    Explicit { matrix: Vec<Vec<f64>> },
    Ar { order: usize, coefficients: Vec<Vec<f64>>, delta: f64 },
    Lattice { dim: usize, #[serde(default = "two")] alpha: f64, scale: f64 },
    DiagDominant { lags: Vec<f64>, epsilon: f64, cap: f64 },
}

fn two() -> f64 {
    2.0
}

impl CovarianceSpec {
    pub fn build(&self) -> Result<CovarianceModel> {
        match self.clone() {
            CovarianceSpec::Explicit { matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Domain("explicit covariance must be square".into()));
                }
                let flat: Vec<f64> = matrix.into_iter().flatten().collect();
                CovarianceModel::explicit(DMatrix::from_row_slice(n, n, &flat))
            }
            CovarianceSpec::Ar { order, coefficients, delta } => {
                CovarianceModel::ar(order, coefficients, delta)
            }
            CovarianceSpec::Lattice { dim, alpha, scale } => {
                CovarianceModel::lattice(dim, alpha, scale)
            }
            CovarianceSpec::DiagDominant { lags, epsilon, cap } => {
                CovarianceModel::diag_dominant(lags, epsilon, cap)
            }
        }
    }
}

impl CovarianceModel {
    pub fn explicit(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || !linalg::is_symmetric(&m, 1e-12) {
            return Err(Error::Domain("explicit covariance must be nonempty and symmetric".into()));
        }
        Ok(CovarianceModel::Explicit(m))
    }

    pub fn ar(order: usize, coefficients: Vec<Vec<f64>>, delta: f64) -> Result<Self> {
        if order == 0 || coefficients.is_empty() {
            return Err(Error::Domain("autoregression needs a positive order and coefficients".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("margin delta = {delta} must lie in (0, 1)")));
        }
        for (k, row) in coefficients.iter().enumerate() {
            if row.len() != order {
                return Err(Error::Domain(format!("coefficient row {} has length {}", k + 1, row.len())));
            }
            let s: f64 = row.iter().map(|b| b.abs()).sum();
            if !(s < 1.0 - delta) {
                return Err(Error::Domain(format!(
                    "row {}: sum of |beta| = {s} is not below 1 - delta = {}",
                    k + 1,
                    1.0 - delta
                )));
            }
        }
        Ok(CovarianceModel::Ar { order, coefficients, delta })
    }

    /// Constant-coefficient autoregression.
    pub fn ar_stationary(beta: &[f64], delta: f64) -> Result<Self> {
        Self::ar(beta.len(), vec![beta.to_vec()], delta)
    }

    pub fn lattice(dim: usize, alpha: f64, scale: f64) -> Result<Self> {
        if dim == 0 || !(alpha > 0.0 && alpha <= 2.0) || !(scale > 0.0) {
            return Err(Error::Domain(format!(
                "lattice kernel needs dim >= 1, alpha in (0, 2], scale > 0 (got {dim}, {alpha}, {scale})"
            )));
        }
        Ok(CovarianceModel::Lattice { dim, alpha, scale })
    }

    pub fn diag_dominant(lags: Vec<f64>, epsilon: f64, cap: f64) -> Result<Self> {
        if lags.is_empty() || !(epsilon > 0.0) {
            return Err(Error::Domain("need at least one lag and a positive margin".into()));
        }
        let off: f64 = 2.0 * lags[1..].iter().map(|x| x.abs()).sum::<f64>();
        if !(lags[0] > epsilon + off) {
            return Err(Error::Domain(format!(
                "diagonal {} does not exceed margin {epsilon} plus off-diagonal mass {off}",
                lags[0]
            )));
        }
        if lags[0] > cap {
            return Err(Error::Domain(format!("diagonal {} exceeds cap {cap}", lags[0])));
        }
        Ok(CovarianceModel::DiagDominant { lags, epsilon, cap })
    }

    pub fn identity() -> Self {
        CovarianceModel::DiagDominant { lags: vec![1.0], epsilon: 0.5, cap: 1.0 }
    }

    /// Number of indices, `None` for infinite processes.
    pub fn len(&self) -> Option<usize> {
        match self {
            CovarianceModel::Explicit(m) => Some(m.nrows()),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CovarianceModel::Explicit(_) => "explicit",
            CovarianceModel::Ar { .. } => "ar",
            CovarianceModel::Lattice { .. } => "lattice",
            CovarianceModel::DiagDominant { .. } => "diag-dominant",
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 {
            return Err(Error::Domain("process indices start at 1".into()));
        }
        if let Some(n) = self.len() {
            if i > n {
                return Err(Error::Domain(format!("index {i} beyond the {n} variables")));
            }
        }
        Ok(())
    }

    /// Covariance of `X_1..X_n` for an autoregression.
    fn ar_matrix(order: usize, coefficients: &[Vec<f64>], n: usize) -> DMatrix<f64> {
        let beta = |t: usize| -> &[f64] { &coefficients[(t - 1).min(coefficients.len() - 1)] };
        let mut c = DMatrix::<f64>::zeros(n, n);
        let at = |c: &DMatrix<f64>, i: isize, j: isize| -> f64 {
            if i <= 0 || j <= 0 {
                0.0
            } else {
                c[(i as usize - 1, j as usize - 1)]
            }
        };
        for t in 1..=n {
            let b = beta(t);
            for m in 1..t {
                let v: f64 = (1..=order)
                    .map(|j| b[j - 1] * at(&c, t as isize - j as isize, m as isize))
                    .sum();
                c[(t - 1, m - 1)] = v;
                c[(m - 1, t - 1)] = v;
            }
            let mut var = 1.0;
            for j in 1..=order {
                for k in 1..=order {
                    var += b[j - 1]
                        * b[k - 1]
                        * at(&c, t as isize - j as isize, t as isize - k as isize);
                }
            }
            c[(t - 1, t - 1)] = var;
        }
        c
    }

    pub fn covariance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(match self {
            CovarianceModel::Explicit(m) => m[(i - 1, j - 1)],
            CovarianceModel::Ar { order, coefficients, .. } => {
                Self::ar_matrix(*order, coefficients, i.max(j))[(i - 1, j - 1)]
            }
            CovarianceModel::Lattice { dim, alpha, scale } => {
                let s = SpiralIndex::new(*dim);
                let d = euclidean(&s.coord(i), &s.coord(j));
                (-d.powf(*alpha) / scale).exp()
            }
            CovarianceModel::DiagDominant { lags, .. } => {
                lags.get(i.abs_diff(j)).copied().unwrap_or(0.0)
            }
        })
    }

    /// Covariance block for the given indices, in order.
    pub fn block(&self, idx: &[usize]) -> Result<DMatrix<f64>> {
        for &i in idx {
            self.check_index(i)?;
        }
        Ok(match self {
            CovarianceModel::Ar { order, coefficients, .. } => {
                let n = idx.iter().copied().max().unwrap_or(0);
                let full = Self::ar_matrix(*order, coefficients, n);
                DMatrix::from_fn(idx.len(), idx.len(), |a, b| full[(idx[a] - 1, idx[b] - 1)])
            }
            CovarianceModel::Lattice { dim, alpha, scale } => {
                let s = SpiralIndex::new(*dim);
                let coords: Vec<_> = idx.iter().map(|&i| s.coord(i)).collect();
                DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
                    if a == b {
                        1.0
                    } else {
                        (-euclidean(&coords[a], &coords[b]).powf(*alpha) / scale).exp()
                    }
                })
            }
            _ => {
                let mut m = DMatrix::zeros(idx.len(), idx.len());
                for a in 0..idx.len() {
                    for b in 0..=a {
                        let v = self.covariance(idx[a], idx[b])?;
                        m[(a, b)] = v;
                        m[(b, a)] = v;
                    }
                }
                m
            }
        })
    }

    /// Leading block `X_1..X_n`.
    pub fn leading(&self, n: usize) -> Result<DMatrix<f64>> {
        self.block(&(1..=n).collect::<Vec<_>>())
    }

    /// Exact precision `(I - B)^T (I - B)` of `X_1..X_n` for an autoregression.
    pub fn ar_precision(&self, n: usize) -> Option<DMatrix<f64>> {
        let CovarianceModel::Ar { order, coefficients, .. } = self else {
            return None;
        };
        let mut l = DMatrix::<f64>::identity(n, n);
        for t in 1..=n {
            let b = &coefficients[(t - 1).min(coefficients.len() - 1)];
            for j in 1..=*order {
                if t > j {
                    l[(t - 1, t - j - 1)] = -b[j - 1];
                }
            }
        }
        Some(l.transpose() * l)
    }
}

/// Gaussian law, or a Gaussian base shifted by a common Bernoulli level:
/// `Y_i = X_i + θ` with `P(θ = 1) = weight`.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessModel {
    Gaussian(CovarianceModel),
    ShiftMixture { base: CovarianceModel, weight: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalGaussian {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// `Σ_AB Σ_B^{-1}`, the linear map from `x_B` to the conditional mean.
    pub coefficients: DMatrix<f64>,
    pub cov: DMatrix<f64>,
}

fn disjoint_lists(a: &[usize], b: &[usize]) -> Result<()> {
    let sa: VertexSet = a.iter().copied().collect();
    let sb: VertexSet = b.iter().copied().collect();
    if sa.len() != a.len() || sb.len() != b.len() || !sa.is_disjoint(&sb) {
        return Err(Error::InvalidSets("index lists must be duplicate-free and disjoint".into()));
    }
    Ok(())
}

/// Conditional law of `X_A` given `X_B`, with `b` in the given order.
pub fn conditional_ordered(m: &CovarianceModel, a: &[usize], b: &[usize]) -> Result<ConditionalGaussian> {
    disjoint_lists(a, b)?;
    let idx: Vec<usize> = a.iter().chain(b).copied().collect();
    let full = m.block(&idx)?;
    let pa: Vec<usize> = (0..a.len()).collect();
    let pb: Vec<usize> = (a.len()..idx.len()).collect();
    let (coefficients, cov) = linalg::conditional(&full, &pa, &pb)?;
    Ok(ConditionalGaussian { a: a.to_vec(), b: b.to_vec(), coefficients, cov })
}

pub fn conditional(m: &CovarianceModel, a: &VertexSet, b: &VertexSet) -> Result<ConditionalGaussian> {
    conditional_ordered(m, a.as_slice(), b.as_slice())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Precision {
    pub index: Vec<usize>,
    pub precision: DMatrix<f64>,
    pub partial_correlation: DMatrix<f64>,
}

/// Inverse of `Σ_S` and the partial correlations `-σ^{ij}/sqrt(σ^{ii}σ^{jj})`.
pub fn precision(m: &CovarianceModel, s: &VertexSet) -> Result<Precision> {
    let sigma = m.block(s.as_slice())?;
    let chol = linalg::checked_cholesky(&sigma)?;
    let mut p = chol.inverse();
    p = (&p + p.transpose()) * 0.5;
    let n = p.nrows();
    let pc = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            -p[(i, j)] / (p[(i, i)] * p[(j, j)]).sqrt()
        }
    });
    Ok(Precision { index: s.as_slice().to_vec(), precision: p, partial_correlation: pc })
}

/// Is the `(a, b)` block of `Σ_{a∪b | c}` entrywise within `tol` of zero?
pub fn ci_test(
    m: &ProcessModel,
    a: &VertexSet,
    b: &VertexSet,
    c: &VertexSet,
    tol: f64,
) -> Result<bool> {
    let ProcessModel::Gaussian(cov) = m else {
        return Err(Error::ModelClass(
            "independence by covariance needs a Gaussian law, not a mixture".into(),
        ));
    };
    if a.is_empty() || b.is_empty() || !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::InvalidSets(format!("{a}, {b}, {c} must be disjoint with nonempty sides")));
    }
    let ab: Vec<usize> = a.iter().chain(b.iter()).collect();
    let g = conditional_ordered(cov, &ab, c.as_slice())?;
    let k = a.len();
    Ok((0..k).all(|i| (k..ab.len()).all(|j| g.cov[(i, j)].abs() <= tol)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRecord {
    pub size: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_row_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenTrace {
    pub records: Vec<EigenRecord>,
    /// λ_min non-increasing and λ_max non-decreasing along increasing sizes.
    pub interlacing_ok: bool,
    /// λ_max never exceeds the max absolute row sum.
    pub row_sum_ok: bool,
}

pub const INTERLACING_TOL: f64 = 1e-10;

/// Extreme eigenvalues of the leading blocks of the requested sizes.
pub fn eigen_bounds(m: &CovarianceModel, sizes: &[usize], cap: usize) -> Result<EigenTrace> {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if let Some(&s) = sizes.iter().find(|&&s| s == 0 || s > cap) {
        return Err(Error::Domain(format!("block size {s} outside 1..={cap}")));
    }
    if let (Some(n), Some(&s)) = (m.len(), sizes.last()) {
        if s > n {
            return Err(Error::Domain(format!("block size {s} exceeds the {n} variables")));
        }
    }
    let largest = match sizes.last() {
        Some(&s) => m.leading(s)?,
        None => DMatrix::zeros(0, 0),
    };
    let records: Vec<EigenRecord> = sizes
        .par_iter()
        .map(|&s| {
            let block = largest.view((0, 0), (s, s)).into_owned();
            let (lo, hi) = linalg::eigen_extremes(&block);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!("eigen-solve failed at size {s}")));
            }
            Ok(EigenRecord {
                size: s,
                lambda_min: lo,
                lambda_max: hi,
                max_row_sum: linalg::max_abs_row_sum(&block),
            })
        })
        .collect::<Result<_>>()?;
    let interlacing_ok = records.windows(2).all(|w| {
        w[1].lambda_min <= w[0].lambda_min + INTERLACING_TOL
            && w[1].lambda_max >= w[0].lambda_max - INTERLACING_TOL
    });
    let row_sum_ok = records.iter().all(|r| r.lambda_max <= r.max_row_sum + INTERLACING_TOL);
    Ok(EigenTrace { records, interlacing_ok, row_sum_ok })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStep {
    pub n: usize,
    pub added: usize,
    pub cond_cov: Vec<f64>,
    pub delta_cov: f64,
    pub delta_coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub a: Vec<usize>,
    pub steps: Vec<ConvergenceStep>,
}

impl ConvergenceTrace {
    /// True when the last `window` successive differences are all below `tol`.
    pub fn settled(&self, tol: f64, window: usize) -> bool {
        self.steps.len() > window
            && self.steps[self.steps.len() - window..]
                .iter()
                .all(|s| s.delta_cov < tol && s.delta_coeff < tol)
    }
}

/// Conditional laws of `X_A` given growing prefixes of `b_order`, with the
/// max-norm change of the covariance and of the regression map per step.
pub fn conditional_convergence(
    m: &CovarianceModel,
    a: &VertexSet,
    b_order: &[usize],
    steps: usize,
) -> Result<ConvergenceTrace> {
    if a.is_empty() {
        return Err(Error::InvalidSets("target set must be nonempty".into()));
    }
    let steps = steps.min(b_order.len());
    disjoint_lists(a.as_slice(), &b_order[..steps])?;
    let mut prev = conditional_ordered(m, a.as_slice(), &[])?;
    let mut out = vec![];
    for n in 1..=steps {
        let cur = conditional_ordered(m, a.as_slice(), &b_order[..n])?;
        let delta_cov = linalg::max_abs(&(&cur.cov - &prev.cov));
        let mut padded = DMatrix::zeros(a.len(), n);
        padded.view_mut((0, 0), (a.len(), n - 1)).copy_from(&prev.coefficients);
        let delta_coeff = linalg::max_abs(&(&cur.coefficients - padded));
        out.push(ConvergenceStep {
            n,
            added: b_order[n - 1],
            cond_cov: cur.cov.iter().copied().collect(),
            delta_cov,
            delta_coeff,
        });
        prev = cur;
    }
    Ok(ConvergenceTrace { a: a.as_slice().to_vec(), steps: out })
}

/// The first `len` indices outside `a`.
pub fn default_order(a: &VertexSet, len: usize) -> Vec<usize> {
    (1..).filter(|i| !a.contains(*i)).take(len).collect()
}

/// The `len` lattice indices outside `a` closest to `a` in Euclidean
/// distance, nearest first; ties go to the smaller index.
pub fn nearest_first_order(dim: usize, a: &VertexSet, len: usize) -> Vec<usize> {
    let s = SpiralIndex::new(dim);
    let targets: Vec<_> = a.iter().map(|i| s.coord(i)).collect();
    let reach = a.iter().map(|i| s.chebyshev_radius(i) as usize).max().unwrap_or(0);
    // every candidate within the cube of this radius beats anything outside it
    let mut r = reach + 1;
    while s.cube_len(r) - s.cube_len(reach) < len + a.len() {
        r += 1;
    }
    let r = 2 * r + reach;
    let mut cands: Vec<(f64, usize)> = (1..=s.cube_len(r))
        .filter(|i| !a.contains(*i))
        .map(|i| {
            let c = s.coord(i);
            let d = targets.iter().map(|t| euclidean(t, &c)).fold(f64::INFINITY, f64::min);
            (d, i)
        })
        .collect();
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    cands.into_iter().take(len).map(|(_, i)| i).collect()
}
