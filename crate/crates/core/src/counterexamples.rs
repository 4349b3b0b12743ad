//! Exactly computable processes that satisfy the finite-dimensional
//! hypotheses of the equivalence results but not their infinite
//! conclusions: a parity construction with a summable Bernoulli tail, and a
//! Gaussian process shifted by a latent coin.
//!
//! Every conclusion here is drawn from a finite truncation; reports say so.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discrete::Pmf;
use crate::error::{Error, Result};
use crate::gaussian::linalg;
use crate::graph::{Vertex, VertexSet};
use crate::graphoid::{check_axiom, relation_from_discrete, Axiom, AxiomOptions, DEFAULT_DISCRETE_TOL};
use crate::report::{DiagnosticReport, Section, Verdict, Witness};

/// Pairwise statements in the parity process must hold to this accuracy.
pub const PAIRWISE_TOL: f64 = 1e-12;
/// The joint statement counts as failing above this factorization distance.
pub const JOINT_GAP: f64 = 0.05;
pub const MAX_PARITY_TRUNCATION: usize = 16;
pub const MAX_SHIFT_TRUNCATION: usize = 12;
const TRUNCATION_NOTE: &str = "truncation-level evidence for the infinite process";

fn open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// `Y0, Y1, Y2` independent coins, `X1 = Y1 + c1`, `X2 = Y2 + c2`,
/// `X3 = Y1 + Y2 + c3`, `X0 = X1 + Y0`, all mod 2, where `c_r` is the parity
/// of the tail coordinates `X_k`, `k >= 4`, with `k ≡ r (mod 3)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityProcessSpec {
    pub truncation: usize,
    pub p_y0: f64,
    pub p_y12: f64,
    /// `P(X_k = 1)` for `k = 4..=truncation`.
    pub tail: Vec<f64>,
}

impl ParityProcessSpec {
    /// Coins with parameter 1/4 and tail means `2^{-(k-3)}`.
    pub fn new(truncation: usize) -> Result<Self> {
        let tail = (4..=truncation).map(|k| 0.5f64.powi(k as i32 - 3)).collect();
        let s = ParityProcessSpec { truncation, p_y0: 0.25, p_y12: 0.25, tail };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation < 7 {
            return Err(Error::Domain(format!("truncation {} is below 7", self.truncation)));
        }
        if self.truncation > MAX_PARITY_TRUNCATION {
            return Err(Error::GroundSetTooLarge { size: self.truncation, cap: MAX_PARITY_TRUNCATION });
        }
        if self.tail.len() != self.truncation - 3 {
            return Err(Error::Domain(format!(
                "expected {} tail parameters, found {}",
                self.truncation - 3,
                self.tail.len()
            )));
        }
        for (name, p) in [("p_y0", self.p_y0), ("p_y12", self.p_y12)] {
            if !open_unit(p) {
                return Err(Error::Domain(format!("{name} = {p} outside (0, 1)")));
            }
        }
        if let Some(q) = self.tail.iter().find(|q| !open_unit(**q)) {
            return Err(Error::Domain(format!("tail parameter {q} outside (0, 1)")));
        }
        Ok(())
    }
}

fn coin(bit: usize, p: f64) -> f64 {
    if bit == 1 { p } else { 1.0 - p }
}

/// Joint law of `X_0..X_M`; bit `k` of a state is `X_k`.
pub fn parity_pmf(spec: &ParityProcessSpec) -> Result<Pmf> {
    spec.validate()?;
    let m = spec.truncation;
    let n_tail = m - 3;
    let mut probs = vec![0.0; 1 << (m + 1)];
    for tail in 0..1usize << n_tail {
        let mut w = 1.0;
        let mut c = [0usize; 3];
        for (t, &q) in spec.tail.iter().enumerate() {
            let b = (tail >> t) & 1;
            w *= coin(b, q);
            c[(t + 4) % 3] ^= b;
        }
        for y in 0..8usize {
            let (y0, y1, y2) = (y & 1, (y >> 1) & 1, (y >> 2) & 1);
            let p = w * coin(y0, spec.p_y0) * coin(y1, spec.p_y12) * coin(y2, spec.p_y12);
            let x1 = y1 ^ c[1];
            let x2 = y2 ^ c[2];
            let x3 = y1 ^ y2 ^ c[0];
            let x0 = x1 ^ y0;
            let s = x0 | (x1 << 1) | (x2 << 2) | (x3 << 3) | (tail << 4);
            probs[s] += p;
        }
    }
    Pmf::from_weights((0..=m).collect(), probs)
}

/// The four-variable core `X_0..X_3` with every tail coordinate at zero.
pub fn parity_core_pmf(p_y0: f64, p_y12: f64) -> Result<Pmf> {
    if !open_unit(p_y0) || !open_unit(p_y12) {
        return Err(Error::Domain("coin parameters must lie in (0, 1)".into()));
    }
    let mut probs = vec![0.0; 16];
    for y in 0..8usize {
        let (y0, y1, y2) = (y & 1, (y >> 1) & 1, (y >> 2) & 1);
        let x1 = y1;
        let s = (x1 ^ y0) | (x1 << 1) | (y2 << 2) | ((y1 ^ y2) << 3);
        probs[s] += coin(y0, p_y0) * coin(y1, p_y12) * coin(y2, p_y12);
    }
    Pmf::from_weights((0..4).collect(), probs)
}

/// Largest tail index of each residue class mod 3; dropping these makes the
/// remaining coordinates jointly positive.
fn parity_drop_set(m: usize) -> VertexSet {
    (0..3).filter_map(|r| (4..=m).filter(|k| k % 3 == r).max()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityOutcome {
    pub truncation: usize,
    /// `X0 ⊥ X1 | rest` and `X0 ⊥ X2 | rest`.
    pub pairwise: [f64; 2],
    /// `X0 ⊥ (X1, X2) | X3..X_M`.
    pub joint: f64,
    /// Range of `P(X0 = X1 | X3..X_M)` over positive conditioning states.
    pub agreement: (f64, f64),
    pub full_min_prob: f64,
    pub kept: VertexSet,
    pub kept_min_prob: f64,
    /// Verdict of the intersection axiom on the kept coordinates, when
    /// small enough to enumerate.
    pub kept_intersection: Option<Verdict>,
}

fn agreement_range(p: &Pmf, cond: &VertexSet) -> Result<(f64, f64)> {
    let pos = p.positions(cond)?;
    let mut same = vec![0.0; 1 << pos.len()];
    let mut total = vec![0.0; 1 << pos.len()];
    for (s, &q) in p.probs().iter().enumerate() {
        let c = pos.iter().enumerate().fold(0, |acc, (k, &b)| acc | (((s >> b) & 1) << k));
        total[c] += q;
        if (s & 1) == ((s >> 1) & 1) {
            same[c] += q;
        }
    }
    Ok(total
        .iter()
        .zip(&same)
        .filter(|(t, _)| **t > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (t, s)| (lo.min(s / t), hi.max(s / t))))
}

pub fn parity_analysis(spec: &ParityProcessSpec) -> Result<ParityOutcome> {
    let p = parity_pmf(spec)?;
    let m = spec.truncation;
    let x0 = VertexSet::from(vec![0]);
    let rest = |drop: &[Vertex]| -> VertexSet { (1..=m).filter(|k| !drop.contains(k)).collect() };
    let d1 = p.ci_distance(&x0, &VertexSet::from(vec![1]), &rest(&[1]))?;
    let d2 = p.ci_distance(&x0, &VertexSet::from(vec![2]), &rest(&[2]))?;
    let tail_cond = rest(&[1, 2]);
    let joint = p.ci_distance(&x0, &VertexSet::from(vec![1, 2]), &tail_cond)?;
    let agreement = agreement_range(&p, &tail_cond)?;
    let dropped = parity_drop_set(m);
    let kept: VertexSet = (0..=m).filter(|k| !dropped.contains(*k)).collect();
    let marg = p.marginal(&kept)?;
    let kept_intersection = if kept.len() <= crate::graphoid::DEFAULT_CAP {
        let r = relation_from_discrete(&marg, DEFAULT_DISCRETE_TOL);
        Some(check_axiom(&r, Axiom::Intersection, &AxiomOptions::default())?.verdict)
    } else {
        None
    };
    Ok(ParityOutcome {
        truncation: m,
        pairwise: [d1, d2],
        joint,
        agreement,
        full_min_prob: p.min_prob(),
        kept,
        kept_min_prob: marg.min_prob(),
        kept_intersection,
    })
}

pub fn parity_verdicts(spec: &ParityProcessSpec) -> Result<DiagnosticReport> {
    let o = parity_analysis(spec)?;
    let mut r = DiagnosticReport::new("counterexample").with_tolerance(PAIRWISE_TOL);
    for (k, d) in o.pairwise.iter().enumerate() {
        r.push(
            Section::new(format!("pairwise-x0-x{}", k + 1), "parity-pairwise-independence", Verdict::from_bool(*d <= PAIRWISE_TOL))
                .tolerance(PAIRWISE_TOL)
                .metric("distance", *d)
                .metric("truncation", o.truncation as f64),
        );
    }
    let persists = o.joint > JOINT_GAP;
    let mut joint = Section::new("joint-dependence", "parity-joint-dependence", Verdict::from_bool(persists))
        .tolerance(JOINT_GAP)
        .metric("distance", o.joint)
        .metric("agreement_min", o.agreement.0)
        .metric("agreement_max", o.agreement.1)
        .note(TRUNCATION_NOTE);
    if persists {
        joint = joint.witnesses(vec![Witness::new("X0 and (X1, X2) dependent given the tail")
            .set("a", VertexSet::from(vec![0]))
            .set("b", VertexSet::from(vec![1, 2]))
            .set("c", (3..=o.truncation).collect())
            .value("distance", o.joint)]);
    } else {
        joint = joint.note("joint statement holds; the separation signature is absent");
    }
    r.push(joint);
    let positive = o.kept_min_prob > 0.0 && o.kept_intersection.is_none_or(|v| v == Verdict::Pass);
    let mut pos = Section::new("finite-positivity", "finite-intersection-property", Verdict::from_bool(positive))
        .metric("kept_min_prob", o.kept_min_prob)
        .metric("full_min_prob", o.full_min_prob)
        .witnesses(vec![Witness::new("positive sub-tuple").set("kept", o.kept.clone())])
        .note("a finite sub-tuple with free tail parity in every class has a positive table");
    if o.kept_intersection.is_some() {
        pos = pos.note("intersection axiom checked exhaustively on the kept coordinates");
    }
    r.push(pos);
    r.push_informational(
        Section::new("tail-projection", "finitely-supported-tail", Verdict::Pass)
            .note("every state has finitely many nonzero coordinates, so tail events are projections onto the retained coordinates"),
    );
    Ok(r)
}

/// Base law of the shifted process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShiftBase {
    /// Independent standard normals.
    Iid,
    /// `A_1 = B_1`, `A_n = B_n + alpha B_{n-1}` with `B` independent standard normals.
    MovingAverage { alpha: f64 },
}

/// `Y_n = A_n + θ` with `θ ~ Bernoulli(weight)` independent of the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaShiftSpec {
    pub weight: f64,
    pub base: ShiftBase,
    pub truncation: usize,
}

impl ThetaShiftSpec {
    pub fn new(weight: f64, base: ShiftBase, truncation: usize) -> Result<Self> {
        let s = ThetaShiftSpec { weight, base, truncation };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !open_unit(self.weight) {
            return Err(Error::Domain(format!("mixture weight {} outside (0, 1)", self.weight)));
        }
        if let ShiftBase::MovingAverage { alpha } = self.base {
            if !open_unit(alpha) {
                return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1)")));
            }
        }
        if self.truncation < 3 {
            return Err(Error::Domain("truncation must be at least 3".into()));
        }
        if self.truncation > MAX_SHIFT_TRUNCATION {
            return Err(Error::GroundSetTooLarge { size: self.truncation, cap: MAX_SHIFT_TRUNCATION });
        }
        Ok(())
    }

    pub fn base_covariance(&self) -> DMatrix<f64> {
        base_covariance(self.base, self.truncation)
    }

    /// Covariance of `Y_1..Y_n`: base plus `w(1-w)` in every entry.
    pub fn mixture_covariance(&self) -> DMatrix<f64> {
        let v = self.weight * (1.0 - self.weight);
        self.base_covariance().map(|x| x + v)
    }
}

pub fn base_covariance(base: ShiftBase, n: usize) -> DMatrix<f64> {
    match base {
        ShiftBase::Iid => DMatrix::identity(n, n),
        ShiftBase::MovingAverage { alpha } => ma_covariance(alpha, n),
    }
}

pub fn ma_covariance(alpha: f64, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, k| match i.abs_diff(k) {
        0 if i == 0 => 1.0,
        0 => 1.0 + alpha * alpha,
        1 => alpha,
        _ => 0.0,
    })
}

/// `(Σ_N^{-1})_{ik} = (-α)^{|i-k|} Σ_{r=0}^{N-max(i,k)} α^{2r}`, 1-based.
pub fn ma_precision_entry(alpha: f64, n: usize, i: usize, k: usize) -> f64 {
    let head = (-alpha).powi(i.abs_diff(k) as i32);
    let a2 = alpha * alpha;
    head * (0..=n - i.max(k)).map(|r| a2.powi(r as i32)).sum::<f64>()
}

pub fn ma_precision(alpha: f64, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, k| ma_precision_entry(alpha, n, i + 1, k + 1))
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        s += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `E[π_0 π_1]` for the posterior of θ after observing a Gaussian block
/// with information `a = 1ᵀ Σ^{-1} 1`. The log-likelihood ratio is normal
/// with mean `∓a/2` and variance `a` under θ = 0 / 1.
pub fn posterior_overlap(weight: f64, information: f64) -> f64 {
    let prior = weight * (1.0 - weight);
    if information <= 0.0 {
        return prior;
    }
    let logit = (weight / (1.0 - weight)).ln();
    let sd = information.sqrt();
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let pq = |l: f64| {
        let e = (-l.abs()).exp();
        e / ((1.0 + e) * (1.0 + e))
    };
    let under = |mean: f64| simpson(|z| phi(z) * pq(logit + mean + sd * z), -12.0, 12.0, 4000);
    (1.0 - weight) * under(-information / 2.0) + weight * under(information / 2.0)
}

/// Law of `Y_A` given `Y_K`, averaged over the conditioning values:
/// `S + E[π_0 π_1] δ δᵀ` where `S` is the conditional covariance given θ and
/// `δ = 1_A − Σ_AK Σ_K^{-1} 1_K` is the conditional mean shift.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureConditional {
    pub latent_cov: DMatrix<f64>,
    pub shift: DVector<f64>,
    pub information: f64,
    pub overlap: f64,
    pub expected_cov: DMatrix<f64>,
}

/// `a`, `k` are 1-based indices into the truncation.
pub fn mixture_conditional(spec: &ThetaShiftSpec, a: &[usize], k: &[usize]) -> Result<MixtureConditional> {
    let n = spec.truncation;
    if a.iter().chain(k).any(|&i| i == 0 || i > n) {
        return Err(Error::Domain(format!("indices must lie in 1..={n}")));
    }
    let sigma = spec.base_covariance();
    let pa: Vec<usize> = a.iter().map(|i| i - 1).collect();
    let pk: Vec<usize> = k.iter().map(|i| i - 1).collect();
    let (coeff, latent_cov) = linalg::conditional(&sigma, &pa, &pk)?;
    let ones_k = DVector::from_element(k.len(), 1.0);
    let shift = DVector::from_element(a.len(), 1.0) - &coeff * &ones_k;
    let information = if k.is_empty() {
        0.0
    } else {
        let chol = linalg::checked_cholesky(&linalg::submatrix(&sigma, &pk, &pk))?;
        ones_k.dot(&chol.solve(&ones_k))
    };
    let overlap = posterior_overlap(spec.weight, information);
    let expected_cov = &latent_cov + &shift * shift.transpose() * overlap;
    Ok(MixtureConditional { latent_cov, shift, information, overlap, expected_cov })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftStep {
    pub conditioners: usize,
    pub information: f64,
    pub overlap: f64,
    pub cond_cov: f64,
}

/// Expected conditional covariance of `(Y_1, Y_2)` given `Y_3..Y_{k+2}` for
/// `k = 0..=n-2`.
pub fn theta_shift_trace(spec: &ThetaShiftSpec) -> Result<Vec<ShiftStep>> {
    spec.validate()?;
    (0..=spec.truncation - 2)
        .map(|k| {
            let cond: Vec<usize> = (3..k + 3).collect();
            let mc = mixture_conditional(spec, &[1, 2], &cond)?;
            Ok(ShiftStep { conditioners: k, information: mc.information, overlap: mc.overlap, cond_cov: mc.expected_cov[(0, 1)] })
        })
        .collect()
}

pub fn theta_shift_verdicts(spec: &ThetaShiftSpec) -> Result<DiagnosticReport> {
    spec.validate()?;
    let mut r = DiagnosticReport::new("counterexample");
    let prior = spec.weight * (1.0 - spec.weight);
    let cov = spec.mixture_covariance()[(0, 1)];
    let base = spec.base_covariance()[(0, 1)];
    r.push(
        Section::new("marginal-covariance", "latent-shift-covariance", Verdict::from_bool(cov - base == prior))
            .metric("cov", cov)
            .metric("expected", base + prior),
    );
    let rest: Vec<usize> = (3..=spec.truncation).collect();
    let given_latent = mixture_conditional(spec, &[1, 2], &rest)?.latent_cov[(0, 1)];
    r.push_informational(
        Section::new("latent-conditioning", "latent-shift-covariance", Verdict::Pass)
            .metric("cond_cov_given_latent", given_latent)
            .note("conditioning on the latent coin leaves the base covariance"),
    );
    let trace = theta_shift_trace(spec)?;
    let positive = trace.iter().all(|s| s.cond_cov > 0.0);
    let decreasing = trace.windows(2).all(|w| w[1].cond_cov < w[0].cond_cov);
    let (first, last) = (trace[0].cond_cov, trace[trace.len() - 1].cond_cov);
    let mut s = Section::new("conditional-dependence-persists", "latent-shift-global-failure", Verdict::from_bool(positive && decreasing))
        .metric("first", first)
        .metric("last", last)
        .metric("max_conditioners", (trace.len() - 1) as f64)
        .note("the pairwise graph is edgeless only in the limit; every finite conditioning set leaves positive dependence")
        .note(TRUNCATION_NOTE);
    if !positive {
        s = s.note("a conditional covariance reached zero");
    }
    if !decreasing {
        s = s.note("conditional covariance is not strictly decreasing");
    }
    r.push(s);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaCheck {
    pub alpha: f64,
    pub max_error: f64,
    pub min_offdiag: f64,
    pub sign_agrees: bool,
}

/// Closed-form precision against numeric inversion for every leading block
/// up to `n`.
pub fn ma_precision_check(alpha: f64, n: usize) -> Result<MaCheck> {
    let mut max_error: f64 = 0.0;
    let mut min_offdiag = f64::INFINITY;
    let mut sign_agrees = true;
    for size in 2..=n {
        let sigma = ma_covariance(alpha, size);
        let chol = linalg::checked_cholesky(&sigma)?;
        let numeric = chol.inverse();
        let closed = ma_precision(alpha, size);
        max_error = max_error.max(linalg::max_abs(&(&numeric - &closed)));
        for i in 0..size {
            for k in 0..size {
                if i != k {
                    min_offdiag = min_offdiag.min(closed[(i, k)].abs());
                    if closed[(i, k)].abs() > 1e-10 && closed[(i, k)].signum() != numeric[(i, k)].signum() {
                        sign_agrees = false;
                    }
                }
            }
        }
    }
    Ok(MaCheck { alpha, max_error, min_offdiag, sign_agrees })
}

/// Covariance of `Y_1` with `Y_j` and the information about θ carried by
/// the tail block `Y_j..Y_n`, for `j = 2..=n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailStep {
    pub start: usize,
    pub head_cov: f64,
    pub posterior_variance: f64,
}

pub fn tail_trace(spec: &ThetaShiftSpec) -> Result<Vec<TailStep>> {
    spec.validate()?;
    let cov = spec.mixture_covariance();
    let prior = spec.weight * (1.0 - spec.weight);
    (2..=spec.truncation)
        .map(|j| {
            let tail: Vec<usize> = (j..=spec.truncation).collect();
            let info = mixture_conditional(spec, &[1], &tail)?.information;
            Ok(TailStep { start: j, head_cov: cov[(0, j - 1)], posterior_variance: prior - posterior_overlap(spec.weight, info) })
        })
        .collect()
}

pub fn ma_shift_verdicts(spec: &ThetaShiftSpec) -> Result<DiagnosticReport> {
    spec.validate()?;
    let ShiftBase::MovingAverage { alpha } = spec.base else {
        return Err(Error::ModelClass("moving-average verdicts need a moving-average base".into()));
    };
    let mut r = DiagnosticReport::new("counterexample").with_tolerance(1e-10);
    let c = ma_precision_check(alpha, spec.truncation)?;
    r.push(
        Section::new("closed-form-precision", "moving-average-precision", Verdict::from_bool(c.max_error < 1e-10))
            .tolerance(1e-10)
            .metric("alpha", alpha)
            .metric("max_error", c.max_error),
    );
    r.push(
        Section::new("no-pairwise-independence", "moving-average-complete-graph", Verdict::from_bool(c.min_offdiag > 0.0 && c.sign_agrees))
            .metric("min_abs_offdiag", c.min_offdiag)
            .note("every off-diagonal precision entry is nonzero, so the pairwise graph is complete"),
    );
    let trace = tail_trace(spec)?;
    let prior = spec.weight * (1.0 - spec.weight);
    let far: Vec<&TailStep> = trace.iter().filter(|s| s.start >= 3).collect();
    let head_ok = far.iter().all(|s| (s.head_cov - prior).abs() < 1e-15);
    let min_info = trace.iter().map(|s| s.posterior_variance).fold(f64::INFINITY, f64::min);
    r.push(
        Section::new("tail-dependence-persists", "latent-shift-decorrelation-failure", Verdict::from_bool(head_ok && min_info > 0.0))
            .metric("head_cov_far", far.last().map_or(f64::NAN, |s| s.head_cov))
            .metric("min_tail_posterior_variance", min_info)
            .note("the first coordinate stays correlated with arbitrarily late coordinates through the latent coin")
            .note(TRUNCATION_NOTE),
    );
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_has_dependence() {
        let p = parity_core_pmf(0.25, 0.25).unwrap();
        let d = p.ci_distance(&VertexSet::from(vec![0]), &VertexSet::from(vec![1, 2]), &VertexSet::from(vec![3])).unwrap();
        assert!(d > JOINT_GAP);
    }

    #[test]
    fn overlap_without_information_is_prior() {
        assert_eq!(posterior_overlap(0.5, 0.0), 0.25);
        assert!(posterior_overlap(0.5, 1.0) < 0.25);
    }

    #[test]
    fn ma_closed_form_small() {
        assert!((ma_precision_entry(0.5, 4, 1, 3) - 0.3125).abs() < 1e-15);
        assert!((ma_precision_entry(0.5, 5, 1, 3) - 0.328125).abs() < 1e-15);
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(ParityProcessSpec::new(6).is_err());
        assert!(ParityProcessSpec::new(17).is_err());
        assert!(ThetaShiftSpec::new(1.0, ShiftBase::Iid, 5).is_err());
        assert!(ThetaShiftSpec::new(0.5, ShiftBase::MovingAverage { alpha: 1.0 }, 5).is_err());
        assert!(ThetaShiftSpec::new(0.5, ShiftBase::Iid, 13).is_err());
    }
}
