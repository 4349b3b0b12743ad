//! Binary processes: exact probability tables, Ising models on `{0} ∪ N`
//! with a clamped field node, two-state Markov chains and decorrelation
//! variances.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet};

pub mod chain;
pub mod ising;

pub use chain::*;
pub use ising::*;

/// Probability table over `{0,1}^n`. Bit `k` of a state index is the value
/// of variable `vars[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    vars: Vec<Vertex>,
    probs: Vec<f64>,
}

pub const MAX_PMF_VARS: usize = 26;

fn gather(state: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((state >> p) & 1) << k))
}

impl Pmf {
    pub fn new(vars: Vec<Vertex>, probs: Vec<f64>) -> Result<Self> {
        if vars.len() > MAX_PMF_VARS {
            return Err(Error::Domain(format!("{} variables exceeds the table limit", vars.len())));
        }
        if VertexSet::from(vars.clone()).len() != vars.len() {
            return Err(Error::Domain("duplicate variable labels".into()));
        }
        if probs.len() != 1usize << vars.len() {
            return Err(Error::Domain(format!(
                "table has {} entries, expected 2^{}",
                probs.len(),
                vars.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Domain(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Pmf { vars, probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(vars: Vec<Vertex>, mut w: Vec<f64>) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Domain("weights must have a positive finite sum".into()));
        }
        w.iter_mut().for_each(|x| *x /= total);
        // renormalize once more so the sum is 1 to rounding
        let t2: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= t2);
        Pmf::new(vars, w)
    }

    /// I.i.d. uniforms on `[floor, 1]`, normalized.
    pub fn random_positive<R: Rng>(vars: Vec<Vertex>, floor: f64, rng: &mut R) -> Result<Self> {
        let n = 1usize << vars.len();
        let w = (0..n).map(|_| rng.gen_range(floor..=1.0)).collect();
        Pmf::from_weights(vars, w)
    }

    /// Product of random edge potentials (entries uniform on `[floor, 1]`)
    /// over a random graph on `1..=n` with the given edge density. Returns
    /// the table and the edges used.
    pub fn random_pairwise<R: Rng>(
        n: usize,
        density: f64,
        floor: f64,
        rng: &mut R,
    ) -> Result<(Self, Vec<(Vertex, Vertex)>)> {
        let mut pots = vec![];
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(density) {
                    let t: [f64; 4] = std::array::from_fn(|_| rng.gen_range(floor..=1.0));
                    pots.push((i, j, t));
                }
            }
        }
        let w = (0..1usize << n)
            .map(|s| pots.iter().map(|&(i, j, t)| t[((s >> i) & 1) | (((s >> j) & 1) << 1)]).product())
            .collect();
        let edges = pots.iter().map(|&(i, j, _)| (i + 1, j + 1)).collect();
        Ok((Pmf::from_weights((1..=n).collect(), w)?, edges))
    }

    /// Independent coins with `P(X_k = 1) = p[k]`.
    pub fn product(vars: Vec<Vertex>, p: &[f64]) -> Result<Self> {
        let n = vars.len();
        let w = (0..1usize << n)
            .map(|s| {
                (0..n)
                    .map(|k| if (s >> k) & 1 == 1 { p[k] } else { 1.0 - p[k] })
                    .product()
            })
            .collect();
        Pmf::from_weights(vars, w)
    }

    pub fn vars(&self) -> &[Vertex] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn ground_set(&self) -> VertexSet {
        self.vars.iter().copied().collect()
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn positions(&self, s: &VertexSet) -> Result<Vec<usize>> {
        s.iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|&w| w == v)
                    .ok_or(Error::UnknownVertex(v))
            })
            .collect()
    }

    /// Value of variable `v` in `state`.
    pub fn bit(&self, state: usize, v: Vertex) -> Option<u8> {
        self.vars.iter().position(|&w| w == v).map(|p| ((state >> p) & 1) as u8)
    }

    pub fn marginal(&self, keep: &VertexSet) -> Result<Pmf> {
        let pos = self.positions(keep)?;
        let mut out = vec![0.0; 1 << pos.len()];
        for (s, &p) in self.probs.iter().enumerate() {
            out[gather(s, &pos)] += p;
        }
        Pmf::from_weights(keep.iter().collect(), out)
    }

    /// Largest deviation, over conditioning values of positive probability,
    /// between `P(a, b | c)` and `P(a | c) P(b | c)`.
    pub fn ci_distance(&self, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<f64> {
        let (pa, pb, pc) = (self.positions(a)?, self.positions(b)?, self.positions(c)?);
        let (na, nb, nc) = (pa.len(), pb.len(), pc.len());
        let mut joint = vec![0.0; 1 << (na + nb + nc)];
        for (s, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let idx = gather(s, &pa) | (gather(s, &pb) << na) | (gather(s, &pc) << (na + nb));
            joint[idx] += p;
        }
        let mut worst: f64 = 0.0;
        let mut pa_c = vec![0.0; 1 << na];
        let mut pb_c = vec![0.0; 1 << nb];
        for ic in 0..1usize << nc {
            let base = ic << (na + nb);
            let block = &joint[base..base + (1 << (na + nb))];
            let pc_val: f64 = block.iter().sum();
            if pc_val <= 0.0 {
                continue;
            }
            pa_c.iter_mut().for_each(|x| *x = 0.0);
            pb_c.iter_mut().for_each(|x| *x = 0.0);
            for ib in 0..1usize << nb {
                for ia in 0..1usize << na {
                    let q = block[ia | (ib << na)];
                    pa_c[ia] += q;
                    pb_c[ib] += q;
                }
            }
            for ib in 0..1usize << nb {
                for ia in 0..1usize << na {
                    let q = block[ia | (ib << na)] / pc_val;
                    let d = (q - (pa_c[ia] / pc_val) * (pb_c[ib] / pc_val)).abs();
                    worst = worst.max(d);
                }
            }
        }
        Ok(worst)
    }

    /// `P(X_target = 1 | X_cond = values)`, `None` if the condition has
    /// probability zero.
    pub fn conditional_one(
        &self,
        target: Vertex,
        cond: &[(Vertex, u8)],
    ) -> Result<Option<f64>> {
        let t = self.positions(&VertexSet::from(vec![target]))?[0];
        let cpos: Vec<(usize, u8)> = cond
            .iter()
            .map(|&(v, x)| Ok((self.positions(&VertexSet::from(vec![v]))?[0], x)))
            .collect::<Result<_>>()?;
        let (mut num, mut den) = (0.0, 0.0);
        for (s, &p) in self.probs.iter().enumerate() {
            if cpos.iter().all(|&(q, x)| ((s >> q) & 1) as u8 == x) {
                den += p;
                if (s >> t) & 1 == 1 {
                    num += p;
                }
            }
        }
        Ok(if den > 0.0 { Some(num / den) } else { None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> Pmf {
        let w = (0..8)
            .map(|s: usize| {
                let (x1, x2, x3) = (s & 1, (s >> 1) & 1, (s >> 2) & 1);
                if x3 == x1 ^ x2 { 0.25 } else { 0.0 }
            })
            .collect();
        Pmf::new(vec![1, 2, 3], w).unwrap()
    }

    #[test]
    fn xor_triple() {
        let p = xor();
        assert!(p.ci_distance(&[1].into(), &[2].into(), &VertexSet::empty()).unwrap() < 1e-15);
        let d = p.ci_distance(&[1].into(), &[2].into(), &[3].into()).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_rejected() {
        assert!(Pmf::new(vec![1], vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![1], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn marginal_of_product() {
        let p = Pmf::product(vec![1, 2, 3], &[0.2, 0.5, 0.9]).unwrap();
        let m = p.marginal(&[3].into()).unwrap();
        assert!((m.prob(1) - 0.9).abs() < 1e-15);
        let c = p.conditional_one(3, &[(1, 1)]).unwrap().unwrap();
        assert!((c - m.prob(1)).abs() < 1e-14);
    }
}
