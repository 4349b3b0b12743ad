//! Ising models on `{0} ∪ N` with `X_0 = 1` clamped. Couplings to node 0
//! act as fields. Finite truncations are enumerated exactly.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::Pmf;
use crate::error::{Error, Result};
use crate::graph::{LazyGraph, Vertex, VertexSet};

pub const MAX_ISING_NODES: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Finitely many nodes.
    Finite,
    /// Absolutely summable couplings, finite degrees.
    Summable,
    /// Nonpositive couplings with fields `θ_k0 <= -2 log k`.
    Sparse,
}

/// Nearest-neighbour coupling `θ_{i,i+1}` for `i >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainRule {
    None,
    /// `scale · ratio^i`
    Geometric { scale: f64, ratio: f64 },
    /// `scale · i^{-exponent}`
    Power { scale: f64, exponent: f64 },
}

/// Field `θ_{k0}` for `k >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldRule {
    Zero,
    Constant { value: f64 },
    /// `scale · ratio^k`
    Geometric { scale: f64, ratio: f64 },
    /// `-c log k - offset`
    LogPower { c: f64, offset: f64 },
}

/// Bound on `Σ_{i >= from} i^{-p}` for `p > 1`, `from >= 1`.
fn zeta_tail(p: f64, from: usize) -> f64 {
    const EXPLICIT: usize = 1000;
    let mut s = 0.0;
    let mut i = from.max(1);
    while i < from.max(1) + EXPLICIT {
        s += (i as f64).powf(-p);
        i += 1;
    }
    let n = i as f64;
    s + n.powf(-p) + n.powf(1.0 - p) / (p - 1.0)
}

impl ChainRule {
    pub fn at(&self, i: usize) -> f64 {
        match *self {
            ChainRule::None => 0.0,
            ChainRule::Geometric { scale, ratio } => scale * ratio.powi(i as i32),
            ChainRule::Power { scale, exponent } => scale * (i as f64).powf(-exponent),
        }
    }

    /// Bound on `Σ_{i >= from} |θ_{i,i+1}|`.
    fn tail(&self, from: usize) -> f64 {
        let from = from.max(1);
        match *self {
            ChainRule::None => 0.0,
            ChainRule::Geometric { scale, ratio } => {
                let r = ratio.abs();
                if r >= 1.0 {
                    if scale == 0.0 { 0.0 } else { f64::INFINITY }
                } else {
                    scale.abs() * r.powi(from as i32) / (1.0 - r)
                }
            }
            ChainRule::Power { scale, exponent } => {
                if scale == 0.0 {
                    0.0
                } else if exponent <= 1.0 {
                    f64::INFINITY
                } else {
                    scale.abs() * zeta_tail(exponent, from)
                }
            }
        }
    }

    fn exact_tail(&self) -> bool {
        matches!(self, ChainRule::None | ChainRule::Geometric { .. })
    }
}

impl FieldRule {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            FieldRule::Zero => 0.0,
            FieldRule::Constant { value } => value,
            FieldRule::Geometric { scale, ratio } => scale * ratio.powi(k as i32),
            FieldRule::LogPower { c, offset } => -c * (k as f64).ln() - offset,
        }
    }

    fn tail(&self, from: usize) -> f64 {
        let from = from.max(1);
        match *self {
            FieldRule::Zero => 0.0,
            FieldRule::Constant { value } => if value == 0.0 { 0.0 } else { f64::INFINITY },
            FieldRule::Geometric { scale, ratio } => {
                let r = ratio.abs();
                if scale == 0.0 {
                    0.0
                } else if r >= 1.0 {
                    f64::INFINITY
                } else {
                    scale.abs() * r.powi(from as i32) / (1.0 - r)
                }
            }
            FieldRule::LogPower { .. } => f64::INFINITY,
        }
    }
}

/// JSON form of an Ising model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSpec {
    pub regime: Regime,
    #[serde(default = "no_chain")]
    pub chain: ChainRule,
    #[serde(default = "no_field")]
    pub field: FieldRule,
    /// Additional couplings `[i, j, θ]` between nonzero nodes.
    #[serde(default)]
    pub edges: Vec<(Vertex, Vertex, f64)>,
    /// Number of nodes, finite regime only.
    #[serde(default)]
    pub size: Option<usize>,
}

fn no_chain() -> ChainRule {
    ChainRule::None
}

fn no_field() -> FieldRule {
    FieldRule::Zero
}

impl IsingSpec {
    pub fn build(&self) -> Result<IsingModel> {
        IsingModel::new(self.regime, self.chain, self.field, self.edges.clone(), self.size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    regime: Regime,
    chain: ChainRule,
    field: FieldRule,
    /// Extra couplings keyed by `(min, max)` node.
    extra: BTreeMap<(Vertex, Vertex), f64>,
    size: Option<usize>,
}

impl IsingModel {
    pub fn new(
        regime: Regime,
        chain: ChainRule,
        field: FieldRule,
        edges: Vec<(Vertex, Vertex, f64)>,
        size: Option<usize>,
    ) -> Result<Self> {
        let mut extra = BTreeMap::new();
        for (i, j, t) in edges {
            if i == 0 || j == 0 || i == j {
                return Err(Error::Domain(format!("coupling ({i}, {j}) must join two distinct nonzero nodes")));
            }
            if !t.is_finite() {
                return Err(Error::Domain(format!("coupling ({i}, {j}) is not finite")));
            }
            *extra.entry((i.min(j), i.max(j))).or_insert(0.0) += t;
        }
        let m = IsingModel { regime, chain, field, extra, size };
        m.validate()?;
        Ok(m)
    }

    /// Couplings `θ_{i,i+1} = scale · ratio^i` and the given field on `0`.
    pub fn chain(regime: Regime, chain: ChainRule, field: FieldRule) -> Result<Self> {
        Self::new(regime, chain, field, vec![], None)
    }

    /// Finite model from explicit fields (index `k - 1` for node `k`) and couplings.
    pub fn finite(fields: &[f64], edges: Vec<(Vertex, Vertex, f64)>) -> Result<Self> {
        let n = fields.len();
        let mut m = Self::new(Regime::Finite, ChainRule::None, FieldRule::Zero, edges, Some(n))?;
        for (k, &f) in fields.iter().enumerate() {
            if f != 0.0 {
                // fields are stored as couplings to node 0 via a shifted map
                m.extra.insert((0, k + 1), f);
            }
        }
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let max_edge = self.extra.keys().map(|&(_, j)| j).max().unwrap_or(0);
        match self.regime {
            Regime::Finite => {
                let n = self.size.ok_or_else(|| Error::Regime("finite models need a size".into()))?;
                if max_edge > n {
                    return Err(Error::Domain(format!("coupling to node {max_edge} beyond size {n}")));
                }
            }
            Regime::Summable => {
                if self.size.is_some() {
                    return Err(Error::Regime("infinite regimes take no size".into()));
                }
                if !self.chain.tail(1).is_finite() {
                    return Err(Error::Regime(format!("chain couplings {:?} are not absolutely summable", self.chain)));
                }
                if !self.field.tail(1).is_finite() {
                    return Err(Error::Regime(format!("fields {:?} are not absolutely summable", self.field)));
                }
            }
            Regime::Sparse => {
                if self.size.is_some() {
                    return Err(Error::Regime("infinite regimes take no size".into()));
                }
                let FieldRule::LogPower { c, offset } = self.field else {
                    return Err(Error::Regime("sparse models need fields -c log k - offset".into()));
                };
                if !(c >= 2.0 && offset >= 0.0) {
                    return Err(Error::Regime(format!("need c >= 2 and offset >= 0 (got {c}, {offset})")));
                }
                let chain_ok = match self.chain {
                    ChainRule::None => true,
                    ChainRule::Geometric { scale, .. } | ChainRule::Power { scale, .. } => scale <= 0.0,
                };
                if !chain_ok || self.extra.values().any(|&t| t > 0.0) {
                    return Err(Error::Regime("sparse models need nonpositive couplings".into()));
                }
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn size(&self) -> Option<usize> {
        self.size
    }

    /// `θ_{ij}`, zero for absent edges; `θ_{k0}` is the field on `k`.
    pub fn theta(&self, i: Vertex, j: Vertex) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = (i.min(j), i.max(j));
        if let Some(n) = self.size {
            if b > n {
                return 0.0;
            }
        }
        let base = if a == 0 {
            if self.size.is_some() { 0.0 } else { self.field.at(b) }
        } else if b == a + 1 {
            self.chain.at(a)
        } else {
            0.0
        };
        base + self.extra.get(&(a, b)).copied().unwrap_or(0.0)
    }

    /// Nonzero neighbours of `j` among nodes `>= 1`.
    pub fn neighbors(&self, j: Vertex) -> VertexSet {
        let mut out = VertexSet::empty();
        if j >= 2 && self.theta(j - 1, j) != 0.0 {
            out.insert(j - 1);
        }
        if j >= 1 && self.theta(j, j + 1) != 0.0 {
            out.insert(j + 1);
        }
        for &(a, b) in self.extra.keys() {
            if a != 0 && (a == j || b == j) && self.theta(a, b) != 0.0 {
                out.insert(if a == j { b } else { a });
            }
        }
        out
    }

    /// Graph of nonzero couplings among nodes `1..=n`, node 0 excluded.
    pub fn interaction_graph(&self, n: usize) -> Result<LazyGraph> {
        let (_, edges) = self.energy_terms(n);
        let pairs: Vec<(Vertex, Vertex)> = edges.iter().map(|&(i, j, _)| (i, j)).collect();
        LazyGraph::explicit(VertexSet::range(1, n), &pairs)
    }

    /// Fields on `1..=n` and couplings `(i, j, θ)` with `1 <= i < j <= n`.
    fn energy_terms(&self, n: usize) -> (Vec<f64>, Vec<(Vertex, Vertex, f64)>) {
        let fields = (1..=n).map(|k| self.theta(0, k)).collect();
        let mut edges = vec![];
        for j in 2..=n {
            for i in self.neighbors(j).iter().filter(|&i| i < j) {
                edges.push((i, j, self.theta(i, j)));
            }
        }
        (fields, edges)
    }

    /// Bound on `Σ |θ|` over edges whose larger endpoint exceeds `k`
    /// (fields included).
    pub fn tail_mass_after(&self, k: usize) -> f64 {
        if let Some(n) = self.size {
            if k >= n {
                return 0.0;
            }
            let (f, e) = self.energy_terms(n);
            return f[k..].iter().map(|x| x.abs()).sum::<f64>()
                + e.iter().filter(|&&(_, j, _)| j > k).map(|&(_, _, t)| t.abs()).sum::<f64>();
        }
        let extra: f64 = self
            .extra
            .iter()
            .filter(|&(&(_, b), _)| b > k)
            .map(|(_, t)| t.abs())
            .sum();
        // edge (i, i+1) has larger endpoint i+1 > k iff i >= k
        self.chain.tail(k) + self.field.tail(k + 1) + extra
    }

    pub fn total_mass(&self) -> f64 {
        self.tail_mass_after(0)
    }

    /// Whether `total_mass` is exact rather than an upper bound.
    pub fn mass_is_exact(&self) -> bool {
        self.size.is_some() || (self.chain.exact_tail() && !matches!(self.field, FieldRule::LogPower { .. }))
    }

    /// Largest node outside `1..=m` coupled to a node in `1..=m`; `m` when none.
    pub fn prefix_reach(&self, m: usize) -> usize {
        let mut reach = m;
        if m >= 1 && self.theta(m, m + 1) != 0.0 {
            reach = m + 1;
        }
        for (&(a, b), _) in &self.extra {
            if a >= 1 && a <= m && b > m && self.theta(a, b) != 0.0 {
                reach = reach.max(b);
            }
        }
        reach
    }
}

fn check_nodes(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ISING_NODES {
        return Err(Error::GroundSetTooLarge { size: n, cap: MAX_ISING_NODES });
    }
    Ok(())
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Log-weights of all `2^n` states. Bit `k` of a state is `x_{k+1}`.
fn log_weights(fields: &[f64], edges: &[(Vertex, Vertex, f64)]) -> Vec<f64> {
    let n = fields.len();
    (0..1usize << n)
        .into_par_iter()
        .map(|s| {
            let mut e = 0.0;
            for (k, f) in fields.iter().enumerate() {
                if (s >> k) & 1 == 1 {
                    e += f;
                }
            }
            for &(i, j, t) in edges {
                if (s >> (i - 1)) & 1 == 1 && (s >> (j - 1)) & 1 == 1 {
                    e += t;
                }
            }
            e
        })
        .collect()
}

/// Exact law of `X_1..X_n` under the truncation to nodes `0..=n`.
pub fn ising_exact(m: &IsingModel, n: usize) -> Result<Pmf> {
    check_nodes(n)?;
    if let Some(size) = m.size() {
        if n > size {
            return Err(Error::Domain(format!("model has only {size} nodes")));
        }
    }
    let (fields, edges) = m.energy_terms(n);
    let lw = log_weights(&fields, &edges);
    let z = log_sum_exp(&lw);
    let probs: Vec<f64> = lw.par_iter().map(|x| (x - z).exp()).collect();
    Pmf::from_weights((1..=n).collect(), probs)
}

/// `P(X_j = 1 | X_{-j} = x)` as a logistic function of the neighbour values.
/// Only neighbours of `j` are read from `x`.
pub fn ising_conditional(m: &IsingModel, j: Vertex, x: &BTreeMap<Vertex, u8>) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("node 0 is clamped".into()));
    }
    let mut a = m.theta(0, j);
    for k in m.neighbors(j).iter() {
        let v = x.get(&k).ok_or_else(|| Error::Domain(format!("neighbour {k} of {j} is unassigned")))?;
        a += m.theta(j, k) * f64::from(*v);
    }
    Ok(1.0 / (1.0 + (-a).exp()))
}

/// `P(X_{1..mm} = v) / P(X_{1..mm} = 0)` under the truncation to `0..=n`,
/// by summing over `X_{mm+1..n}` only. The prefix weight
/// `exp(Σ_{0<=i<j<=mm} θ_ij v_i v_j)` (with `v_0 = 1`) multiplies the ratio
/// of the two tail sums.
pub fn ising_fmvn(m: &IsingModel, mm: usize, v: &[u8], n: usize) -> Result<f64> {
    Ok(ising_log_fmvn(m, mm, v, n)?.exp())
}

fn ising_log_fmvn(m: &IsingModel, mm: usize, v: &[u8], n: usize) -> Result<f64> {
    if v.len() != mm || mm == 0 || mm > n {
        return Err(Error::Domain(format!("prefix of length {} for m = {mm}, n = {n}", v.len())));
    }
    if n - mm > MAX_ISING_NODES {
        return Err(Error::GroundSetTooLarge { size: n - mm, cap: MAX_ISING_NODES });
    }
    let (fields, edges) = m.energy_terms(n);
    let on = |i: usize| i == 0 || (i <= mm && v[i - 1] == 1);
    let mut prefix = 0.0;
    for k in 1..=mm {
        if on(k) {
            prefix += fields[k - 1];
        }
    }
    // tail-local fields: own field plus couplings to the prefix
    let tail_n = n - mm;
    let mut tf_num = vec![0.0; tail_n];
    let mut tf_den = vec![0.0; tail_n];
    for k in 0..tail_n {
        tf_num[k] = fields[mm + k];
        tf_den[k] = fields[mm + k];
    }
    let mut tail_edges = vec![];
    for &(i, j, t) in &edges {
        match (i <= mm, j <= mm) {
            (true, true) => {
                if on(i) && on(j) {
                    prefix += t;
                }
            }
            (true, false) => {
                if on(i) {
                    tf_num[j - mm - 1] += t;
                }
            }
            (false, false) => tail_edges.push((i - mm, j - mm, t)),
            (false, true) => unreachable!("edges are ordered"),
        }
    }
    if tail_n == 0 {
        return Ok(prefix);
    }
    let num = log_sum_exp(&log_weights(&tf_num, &tail_edges));
    let den = log_sum_exp(&log_weights(&tf_den, &tail_edges));
    Ok(prefix + num - den)
}

fn prefix_bits(v: usize, m: usize) -> Vec<u8> {
    (0..m).map(|k| ((v >> k) & 1) as u8).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FmTrace {
    pub v: Vec<u8>,
    /// `f[n - m]` is `f_m(v, n)` for `n = m..=n_max`.
    pub f: Vec<f64>,
    /// `alpha[n - m]` is `f_m(v, n+1) / f_m(v, n)`.
    pub alpha: Vec<f64>,
    /// `P^m_n(v)` for `n = m..=n_max`.
    pub marginal: Vec<f64>,
    /// Certified interval for `lim f_m(v, n)` when available.
    pub limit: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsingConvergence {
    pub m: usize,
    pub n_max: usize,
    /// First `n` from which no later node is coupled to the prefix.
    pub qualifying_from: usize,
    /// `Σ_{j<=n} |θ_{nj}|` for `n = m..n_max`.
    pub beta: Vec<f64>,
    /// `Σ_{j<=n} |θ_{n+1,j}|`, the mass of the entering node.
    pub beta_next: Vec<f64>,
    /// `|α_n - 1| <= 2 β_next_n` for every `v`; `None` before qualifying.
    pub bound_ok: Vec<Option<bool>>,
    pub traces: Vec<FmTrace>,
    /// `exp(2 Σ |θ|)`, infinite outside the summable regime.
    pub sandwich_c: f64,
    pub sandwich_ok: Option<bool>,
    /// `Σ |θ|` over edges entering after `n_max`.
    pub tail_mass: f64,
}

impl IsingConvergence {
    pub fn alpha_bound_holds(&self) -> bool {
        self.bound_ok.iter().all(|b| b.unwrap_or(true))
    }

    /// Rows `(n, v, f_m, alpha, beta, bound_ok)`; `alpha` is empty at `n_max`.
    pub fn rows(&self) -> Vec<(usize, String, f64, Option<f64>, f64, Option<bool>)> {
        let mut out = vec![];
        for t in &self.traces {
            let label: String = t.v.iter().map(|b| char::from(b'0' + b)).collect();
            for (k, f) in t.f.iter().enumerate() {
                let n = self.m + k;
                let (alpha, beta, ok) = if n < self.n_max {
                    (Some(t.alpha[k]), self.beta_next[k], self.bound_ok[k])
                } else {
                    (None, f64::NAN, None)
                };
                out.push((n, label.clone(), *f, alpha, beta, ok));
            }
        }
        out
    }
}

pub fn ising_convergence(model: &IsingModel, m: usize, n_max: usize) -> Result<IsingConvergence> {
    if model.regime() == Regime::Finite {
        return Err(Error::Regime("convergence diagnostics need an infinite regime".into()));
    }
    check_nodes(n_max)?;
    if m == 0 || m >= n_max {
        return Err(Error::Domain(format!("need 1 <= m < n_max (got m = {m}, n_max = {n_max})")));
    }
    let node_mass = |k: usize| -> f64 { (0..k).map(|j| model.theta(k, j).abs()).sum() };
    let beta: Vec<f64> = (m..n_max).map(node_mass).collect();
    let beta_next: Vec<f64> = (m..n_max).map(|n| node_mass(n + 1)).collect();
    let qualifying_from = model.prefix_reach(m);

    let traces: Vec<FmTrace> = (0..1usize << m)
        .into_par_iter()
        .map(|vi| {
            let v = prefix_bits(vi, m);
            let f = (m..=n_max)
                .map(|n| ising_fmvn(model, m, &v, n))
                .collect::<Result<Vec<_>>>()?;
            let alpha = f.windows(2).map(|w| w[1] / w[0]).collect();
            Ok(FmTrace { v, f, alpha, marginal: vec![], limit: None })
        })
        .collect::<Result<_>>()?;
    let mut traces = traces;
    let len = n_max - m + 1;
    for k in 0..len {
        let total: f64 = traces.iter().map(|t| t.f[k]).sum();
        for t in traces.iter_mut() {
            t.marginal.push(t.f[k] / total);
        }
    }

    let bound_ok = (0..n_max - m)
        .map(|k| {
            let n = m + k;
            (n >= qualifying_from).then(|| {
                traces.iter().all(|t| (t.alpha[k] - 1.0).abs() <= 2.0 * beta_next[k] + 1e-12)
            })
        })
        .collect();

    let summable = model.regime() == Regime::Summable;
    let sandwich_c = if summable { (2.0 * model.total_mass()).exp() } else { f64::INFINITY };
    let sandwich_ok = summable.then(|| {
        let lo = 1.0 / (sandwich_c * f64::from(1u32 << m));
        let hi = sandwich_c / f64::from(1u32 << m);
        traces.iter().all(|t| t.marginal.iter().all(|&p| p >= lo * (1.0 - 1e-12) && p <= hi * (1.0 + 1e-12)))
    });

    // every later α_k with k >= n_max uses an entering node beyond n_max
    let tail_mass = model.tail_mass_after(n_max);
    if summable && n_max >= qualifying_from && tail_mass < 0.5 {
        for t in traces.iter_mut() {
            let f = *t.f.last().expect("nonempty trace");
            let lo = f * (-2.0 * tail_mass / (1.0 - 2.0 * tail_mass)).exp();
            let hi = f * (2.0 * tail_mass).exp();
            t.limit = Some((lo, hi));
        }
    }
    Ok(IsingConvergence {
        m,
        n_max,
        qualifying_from,
        beta,
        beta_next,
        bound_ok,
        traces,
        sandwich_c,
        sandwich_ok,
        tail_mass,
    })
}

/// Configurations with at most `support_cap` ones, all among `1..=index_cap`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseNormalizer {
    pub support_cap: usize,
    pub index_cap: usize,
    pub partial: f64,
    /// Bound on the weight of every configuration not enumerated.
    pub tail_bound: f64,
    /// `Σ_k exp(θ_k0)`, bounded above.
    pub field_mass: f64,
    pub terms: u64,
}

impl SparseNormalizer {
    pub fn upper(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

pub const MAX_SPARSE_TERMS: u64 = 50_000_000;

fn binomial_count(n: usize, up_to: usize) -> u64 {
    let mut total: u64 = 0;
    let mut c: u64 = 1;
    for k in 0..=up_to.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - k) as u64) / (k as u64 + 1);
    }
    total
}

pub fn sparse_ising_normalize(m: &IsingModel, support_cap: usize, index_cap: usize) -> Result<SparseNormalizer> {
    let FieldRule::LogPower { c, offset } = m.field else {
        return Err(Error::Regime("sparse normalization needs the sparse regime".into()));
    };
    if m.regime() != Regime::Sparse {
        return Err(Error::Regime("sparse normalization needs the sparse regime".into()));
    }
    let terms = binomial_count(index_cap, support_cap);
    if terms > MAX_SPARSE_TERMS {
        return Err(Error::BudgetExhausted(terms as usize));
    }
    let (fields, edges) = m.energy_terms(index_cap);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![vec![]; index_cap + 1];
    for &(i, j, t) in &edges {
        adj[j].push((i, t));
    }
    // depth-first over increasing index sets
    fn walk(
        start: usize,
        left: usize,
        energy: f64,
        chosen: &mut Vec<usize>,
        fields: &[f64],
        adj: &[Vec<(usize, f64)>],
        acc: &mut f64,
    ) {
        *acc += energy.exp();
        if left == 0 {
            return;
        }
        for k in start..fields.len() + 1 {
            let mut e = energy + fields[k - 1];
            for &(i, t) in &adj[k] {
                if chosen.contains(&i) {
                    e += t;
                }
            }
            chosen.push(k);
            walk(k + 1, left - 1, e, chosen, fields, adj, acc);
            chosen.pop();
        }
    }
    let mut partial = 0.0;
    walk(1, support_cap, 0.0, &mut vec![], &fields, &adj, &mut partial);

    let scale = (-offset).exp();
    let field_mass = scale * zeta_tail(c, 1);
    // Σ_{k>K} k^{-c} <= K^{1-c}/(c-1)
    let beyond = scale * (index_cap.max(1) as f64).powf(1.0 - c) / (c - 1.0);
    let mut head = 0.0;
    let mut term = 1.0;
    for n in 0..=support_cap {
        if n > 0 {
            term *= field_mass / n as f64;
        }
        head += term;
    }
    let more_ones = (field_mass.exp() - head).max(0.0);
    let tail_bound = more_ones + beyond * field_mass.exp();
    Ok(SparseNormalizer { support_cap, index_cap, partial, tail_bound, field_mass, terms })
}

/// `ε_m = exp(-Σ |θ| over edges touching 1..=m) / 2^m`, a lower bound on
/// `P(X_{1..m} = v | X_B = x_B)` for every finite `B` in the sparse regime.
pub fn sparse_conditional_floor(model: &IsingModel, m: usize) -> Result<f64> {
    if model.regime() != Regime::Sparse {
        return Err(Error::Regime("the conditional floor needs the sparse regime".into()));
    }
    let mut mass = 0.0;
    for k in 1..=m {
        mass += model.theta(0, k).abs();
        for j in model.neighbors(k).iter() {
            // count edges inside the prefix once
            if j > m || j < k {
                mass += model.theta(k, j).abs();
            }
        }
    }
    Ok((-mass).exp() / f64::from(1u32 << m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = IsingModel::finite(&[0.0; 3], vec![]).unwrap();
        let p = ising_exact(&m, 3).unwrap();
        assert!(p.probs().iter().all(|&x| (x - 0.125).abs() < 1e-15));
    }

    #[test]
    fn single_edge_table() {
        let m = IsingModel::finite(&[0.0, 0.0], vec![(1, 2, 2f64.ln())]).unwrap();
        let p = ising_exact(&m, 2).unwrap();
        let want = [0.2, 0.2, 0.2, 0.4];
        for (a, b) in p.probs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_node_logistic() {
        let m = IsingModel::finite(&[3f64.ln(), 0.0], vec![]).unwrap();
        let c = ising_conditional(&m, 1, &BTreeMap::new()).unwrap();
        assert!((c - 0.75).abs() < 1e-15);
    }

    #[test]
    fn harmonic_chain_rejected() {
        let r = IsingModel::chain(
            Regime::Summable,
            ChainRule::Power { scale: 1.0, exponent: 1.0 },
            FieldRule::Zero,
        );
        assert!(matches!(r, Err(Error::Regime(_))));
    }

    #[test]
    fn geometric_chain_mass() {
        let m = IsingModel::chain(
            Regime::Summable,
            ChainRule::Geometric { scale: 1.0, ratio: 0.5 },
            FieldRule::Zero,
        )
        .unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
        assert!((m.tail_mass_after(3) - 0.25).abs() < 1e-15);
        assert_eq!(m.prefix_reach(2), 3);
    }

    #[test]
    fn sparse_empty_support() {
        let m = IsingModel::chain(Regime::Sparse, ChainRule::None, FieldRule::LogPower { c: 2.0, offset: 0.0 }).unwrap();
        let z = sparse_ising_normalize(&m, 0, 50).unwrap();
        assert_eq!(z.partial, 1.0);
        assert_eq!(z.terms, 1);
    }
}
