//! Two-state inhomogeneous Markov chains and the conditional-variance
//! diagnostic for tail events.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discrete::{Pmf, MAX_PMF_VARS};
use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet};

/// `P(X_1 = 1) = pi1`, `p[n-1] = P(X_{n+1} = 1 | X_n = 1)`,
/// `t[n-1] = P(X_{n+1} = 1 | X_n = 0)`. The last entries are reused past
/// the end of the tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovChainSpec {
    pub pi1: f64,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
}

fn open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl MarkovChainSpec {
    pub fn new(pi1: f64, p: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        let s = MarkovChainSpec { pi1, p, t };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.t.is_empty() {
            return Err(Error::Domain("transition tables must be nonempty".into()));
        }
        if !open_unit(self.pi1) {
            return Err(Error::Domain(format!("initial probability {} outside (0, 1)", self.pi1)));
        }
        for (k, &p) in self.p.iter().enumerate() {
            if !open_unit(p) {
                return Err(Error::Domain(format!("p_{} = {p} outside (0, 1)", k + 1)));
            }
        }
        for (k, &t) in self.t.iter().enumerate() {
            if !open_unit(t) {
                return Err(Error::Domain(format!("t_{} = {t} outside (0, 1)", k + 1)));
            }
        }
        Ok(())
    }

    /// Uniform draws of `pi1`, `p_r`, `t_r` in `[lo, 1 - lo]`.
    pub fn random<R: Rng>(len: usize, lo: f64, rng: &mut R) -> Self {
        let mut draw = || rng.gen_range(lo..=1.0 - lo);
        let pi1 = draw();
        let p = (0..len).map(|_| draw()).collect();
        let t = (0..len).map(|_| draw()).collect();
        MarkovChainSpec { pi1, p, t }
    }

    pub fn p_at(&self, r: usize) -> f64 {
        self.p[(r - 1).min(self.p.len() - 1)]
    }

    pub fn t_at(&self, r: usize) -> f64 {
        self.t[(r - 1).min(self.t.len() - 1)]
    }

    /// `Σ_{r=1}^{n} (1 - (p_r - t_r))`, which diverges exactly when the
    /// product bound tends to zero.
    pub fn divergence_partial_sum(&self, n: usize) -> f64 {
        (1..=n).map(|r| 1.0 - (self.p_at(r) - self.t_at(r))).sum()
    }

    /// `Π_{r=m}^{n'-2} |p_r - t_r|`.
    pub fn product_bound(&self, m: usize, n_prime: usize) -> f64 {
        (m..=n_prime.saturating_sub(2)).map(|r| (self.p_at(r) - self.t_at(r)).abs()).product()
    }
}

/// `P(X_n = 1)` by the forward recursion.
pub fn chain_marginal(c: &MarkovChainSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("chain indices start at 1".into()));
    }
    let mut pi = c.pi1;
    for r in 1..n {
        pi = c.p_at(r) * pi + c.t_at(r) * (1.0 - pi);
    }
    Ok(pi)
}

/// Exact law of `X_1..X_n`.
pub fn chain_pmf(c: &MarkovChainSpec, n: usize) -> Result<Pmf> {
    if n == 0 || n > MAX_PMF_VARS.min(22) {
        return Err(Error::GroundSetTooLarge { size: n, cap: 22 });
    }
    let mut probs = vec![0.0; 1 << n];
    probs[0] = 1.0 - c.pi1;
    probs[1] = c.pi1;
    for r in 1..n {
        let (p, t) = (c.p_at(r), c.t_at(r));
        // extend states on bits 0..r by bit r
        for s in (0..1usize << r).rev() {
            let q = probs[s];
            let up = if (s >> (r - 1)) & 1 == 1 { p } else { t };
            probs[s | (1 << r)] = q * up;
            probs[s] = q * (1.0 - up);
        }
    }
    Pmf::from_weights((1..=n).collect(), probs)
}

/// Indicator of an event on the coordinates in `support`: bit `k` of the
/// table index is the value of `support[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailEvent {
    pub support: Vec<Vertex>,
    pub table: Vec<bool>,
}

impl TailEvent {
    pub fn new(support: Vec<Vertex>, table: Vec<bool>) -> Result<Self> {
        if table.len() != 1 << support.len() {
            return Err(Error::Domain("event table must have 2^|support| entries".into()));
        }
        Ok(TailEvent { support, table })
    }

    /// `{X_v = 1}`.
    pub fn coordinate(v: Vertex) -> Self {
        TailEvent { support: vec![v], table: vec![false, true] }
    }

    /// Each assignment belongs to the event with probability 1/2.
    pub fn random<R: Rng>(support: Vec<Vertex>, rng: &mut R) -> Self {
        let table = (0..1usize << support.len()).map(|_| rng.gen_bool(0.5)).collect();
        TailEvent { support, table }
    }

    pub fn first(&self) -> Option<Vertex> {
        self.support.iter().copied().min()
    }
}

/// `Var(P(A | X_1..X_m, X_B) | X_B = x_B)`, computed exactly from the table.
pub fn dcp_variance(pmf: &Pmf, event: &TailEvent, m: usize, b: &VertexSet, x_b: &[u8]) -> Result<f64> {
    if x_b.len() != b.len() {
        return Err(Error::Domain("conditioning values must match the conditioning set".into()));
    }
    let head: VertexSet = (1..=m).collect();
    let a_pos: Vec<usize> = event
        .support
        .iter()
        .map(|&v| Ok(pmf.positions(&VertexSet::from(vec![v]))?[0]))
        .collect::<Result<_>>()?;
    let h_pos = pmf.positions(&head)?;
    let b_pos = pmf.positions(b)?;
    let mut joint = vec![0.0; 1 << m];
    let mut in_a = vec![0.0; 1 << m];
    let mut total = 0.0;
    for (s, &p) in pmf.probs().iter().enumerate() {
        if p == 0.0 || !b_pos.iter().zip(x_b).all(|(&q, &x)| ((s >> q) & 1) as u8 == x) {
            continue;
        }
        let h = h_pos.iter().enumerate().fold(0, |acc, (k, &q)| acc | (((s >> q) & 1) << k));
        let e = a_pos.iter().enumerate().fold(0, |acc, (k, &q)| acc | (((s >> q) & 1) << k));
        total += p;
        joint[h] += p;
        if event.table[e] {
            in_a[h] += p;
        }
    }
    if total <= 0.0 {
        return Err(Error::Domain(format!("conditioning event X_{b} = {x_b:?} has probability zero")));
    }
    let (mut mean, mut second) = (0.0, 0.0);
    for h in 0..1usize << m {
        if joint[h] > 0.0 {
            let w = joint[h] / total;
            let q = in_a[h] / joint[h];
            mean += w * q;
            second += w * q * q;
        }
    }
    Ok((second - mean * mean).max(0.0))
}

/// `θ ~ Bernoulli(weight)`, then `X_1..X_n` i.i.d. Bernoulli(`q0` or `q1`).
pub fn coin_mixture_pmf(n: usize, weight: f64, q0: f64, q1: f64) -> Result<Pmf> {
    if n == 0 || n > 22 {
        return Err(Error::GroundSetTooLarge { size: n, cap: 22 });
    }
    let probs = (0..1usize << n)
        .map(|s| {
            let ones = s.count_ones() as i32;
            let zeros = n as i32 - ones;
            (1.0 - weight) * q0.powi(ones) * (1.0 - q0).powi(zeros)
                + weight * q1.powi(ones) * (1.0 - q1).powi(zeros)
        })
        .collect();
    Pmf::from_weights((1..=n).collect(), probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fair_transitions_stay_fair() {
        let c = MarkovChainSpec::new(0.3, vec![0.5], vec![0.5]).unwrap();
        for n in 2..10 {
            assert!((chain_marginal(&c, n).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_fixed_point() {
        let c = MarkovChainSpec::new(0.5, vec![0.9], vec![0.1]).unwrap();
        assert!((chain_marginal(&c, 30).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_probabilities_rejected() {
        assert!(MarkovChainSpec::new(0.0, vec![0.5], vec![0.5]).is_err());
        assert!(MarkovChainSpec::new(0.5, vec![1.0], vec![0.5]).is_err());
    }

    #[test]
    fn independent_coordinates_have_no_variance() {
        let p = Pmf::product((1..=6).collect(), &[0.3, 0.6, 0.2, 0.7, 0.5, 0.4]).unwrap();
        let v = dcp_variance(&p, &TailEvent::coordinate(6), 2, &VertexSet::from(vec![4]), &[1]).unwrap();
        assert!(v < 1e-15);
    }
}
