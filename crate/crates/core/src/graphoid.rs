//! Ternary independence relations on finite ground sets: axiom checks,
//! set-Markov properties of undirected graphs and the audit of their
//! implications.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discrete::Pmf;
use crate::error::{Error, Result};
use crate::gaussian::linalg;
use crate::graph::{LazyGraph, Vertex, VertexSet};
use crate::report::{DiagnosticReport, Section, Verdict, Witness};

pub const DEFAULT_DISCRETE_TOL: f64 = 1e-9;
pub const DEFAULT_GAUSSIAN_TOL: f64 = 1e-8;
pub const DEFAULT_CAP: usize = 7;
const MAX_WITNESSES: usize = 16;

/// `a ⊥ b | c`, stored with `a <= b` so symmetric twins coincide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CIStatement {
    a: VertexSet,
    b: VertexSet,
    c: VertexSet,
}

impl CIStatement {
    pub fn new(a: VertexSet, b: VertexSet, c: VertexSet) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidSets("both sides of a statement must be nonempty".into()));
        }
        if !a.is_disjoint(&b) || !a.is_disjoint(&c) || !b.is_disjoint(&c) {
            return Err(Error::InvalidSets(format!("{a}, {b}, {c} are not pairwise disjoint")));
        }
        let (a, b) = if b < a { (b, a) } else { (a, b) };
        Ok(CIStatement { a, b, c })
    }

    pub fn a(&self) -> &VertexSet {
        &self.a
    }

    pub fn b(&self) -> &VertexSet {
        &self.b
    }

    pub fn c(&self) -> &VertexSet {
        &self.c
    }

    pub fn support(&self) -> VertexSet {
        self.a.union(&self.b).union(&self.c)
    }
}

impl fmt::Display for CIStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {} | {}", self.a, self.b, self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Explicit,
    DiscreteDistribution,
    Gaussian,
    Oracle,
}

pub type CiOracle = Arc<dyn Fn(&CIStatement) -> bool + Send + Sync>;

#[derive(Clone)]
enum Backend {
    Explicit(Arc<HashSet<CIStatement>>),
    Oracle(CiOracle),
}

/// A ternary relation on the subsets of a finite ground set. Answers are
/// memoized, so oracles must be deterministic.
pub struct CIRelation {
    ground: VertexSet,
    backend: Backend,
    provenance: Provenance,
    cache: RwLock<HashMap<(u64, u64, u64), bool>>,
}

impl Clone for CIRelation {
    fn clone(&self) -> Self {
        CIRelation {
            ground: self.ground.clone(),
            backend: self.backend.clone(),
            provenance: self.provenance,
            cache: RwLock::new(self.cache.read().unwrap().clone()),
        }
    }
}

impl fmt::Debug for CIRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CIRelation")
            .field("ground", &self.ground)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl CIRelation {
    pub fn explicit(
        ground: VertexSet,
        statements: impl IntoIterator<Item = CIStatement>,
    ) -> Result<Self> {
        let set: HashSet<CIStatement> = statements.into_iter().collect();
        for s in &set {
            if !s.support().is_subset(&ground) {
                return Err(Error::InvalidSets(format!("statement {s} leaves the ground set")));
            }
        }
        Ok(Self::with_backend(ground, Backend::Explicit(Arc::new(set)), Provenance::Explicit))
    }

    pub fn from_oracle(ground: VertexSet, provenance: Provenance, oracle: CiOracle) -> Self {
        Self::with_backend(ground, Backend::Oracle(oracle), provenance)
    }

    fn with_backend(ground: VertexSet, backend: Backend, provenance: Provenance) -> Self {
        CIRelation { ground, backend, provenance, cache: RwLock::new(HashMap::new()) }
    }

    pub fn ground_set(&self) -> &VertexSet {
        &self.ground
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    fn mask(&self, s: &VertexSet) -> Option<u64> {
        if self.ground.len() > 64 {
            return None;
        }
        let g = self.ground.as_slice();
        let mut m = 0u64;
        for v in s.iter() {
            m |= 1 << g.binary_search(&v).ok()?;
        }
        Some(m)
    }

    fn unmask(&self, m: u64) -> VertexSet {
        let g = self.ground.as_slice();
        (0..g.len()).filter(|k| (m >> k) & 1 == 1).map(|k| g[k]).collect()
    }

    fn evaluate(&self, s: &CIStatement) -> bool {
        match &self.backend {
            Backend::Explicit(set) => set.contains(s),
            Backend::Oracle(f) => f(s),
        }
    }

    pub fn holds(&self, s: &CIStatement) -> Result<bool> {
        if !s.support().is_subset(&self.ground) {
            return Err(Error::InvalidSets(format!("statement {s} leaves the ground set")));
        }
        match (self.mask(&s.a), self.mask(&s.b), self.mask(&s.c)) {
            (Some(a), Some(b), Some(c)) => Ok(self.holds_masks(a, b, c)),
            _ => Ok(self.evaluate(s)),
        }
    }

    pub fn query(&self, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<bool> {
        self.holds(&CIStatement::new(a.clone(), b.clone(), c.clone())?)
    }

    /// Membership for ground-set bit masks; `a`, `b` nonempty and disjoint.
    fn holds_masks(&self, a: u64, b: u64, c: u64) -> bool {
        let key = (a.min(b), a.max(b), c);
        if let Some(&v) = self.cache.read().unwrap().get(&key) {
            return v;
        }
        let st = CIStatement::new(self.unmask(a), self.unmask(b), self.unmask(c))
            .expect("masks are disjoint and nonempty");
        let v = self.evaluate(&st);
        self.cache.write().unwrap().insert(key, v);
        v
    }

    /// Set of all statements that hold (finite ground sets only).
    pub fn statements(&self) -> Result<Vec<CIStatement>> {
        let n = self.ground.len();
        if n > 12 {
            return Err(Error::GroundSetTooLarge { size: n, cap: 12 });
        }
        let mut out = vec![];
        for_each_labelling(n, 3, |lab| {
            let (a, b, c) = (lab[0], lab[1], lab[2]);
            if a != 0 && b != 0 && a < b && self.holds_masks(a, b, c) {
                out.push(
                    CIStatement::new(self.unmask(a), self.unmask(b), self.unmask(c)).unwrap(),
                );
            }
        });
        out.sort();
        Ok(out)
    }
}

/// Relation of conditional independence in a binary probability table.
pub fn relation_from_discrete(pmf: &Pmf, tol: f64) -> CIRelation {
    let pmf = Arc::new(pmf.clone());
    let ground = pmf.ground_set();
    let oracle: CiOracle = Arc::new(move |s: &CIStatement| {
        pmf.ci_distance(s.a(), s.b(), s.c()).map(|d| d <= tol).unwrap_or(false)
    });
    CIRelation::from_oracle(ground, Provenance::DiscreteDistribution, oracle)
}

/// Relation of conditional independence for a centred Gaussian vector whose
/// variables are labelled `labels` (rows of `cov` in order).
pub fn relation_from_gaussian(
    cov: &DMatrix<f64>,
    labels: &[Vertex],
    tol: f64,
) -> Result<CIRelation> {
    if !linalg::is_symmetric(cov, 1e-12) || cov.nrows() != labels.len() {
        return Err(Error::Domain("covariance must be square, symmetric and labelled".into()));
    }
    let (lo, _) = linalg::eigen_extremes(cov);
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite { lambda_min: lo });
    }
    let ground: VertexSet = labels.iter().copied().collect();
    if ground.len() != labels.len() {
        return Err(Error::Domain("duplicate labels".into()));
    }
    let cov = Arc::new(cov.clone());
    let labels = Arc::new(labels.to_vec());
    let oracle: CiOracle = Arc::new(move |s: &CIStatement| {
        let pos = |set: &VertexSet| -> Vec<usize> {
            set.iter().map(|v| labels.iter().position(|&w| w == v).unwrap()).collect()
        };
        let (pa, pb, pc) = (pos(s.a()), pos(s.b()), pos(s.c()));
        let ab: Vec<usize> = pa.iter().chain(pb.iter()).copied().collect();
        match linalg::conditional(&cov, &ab, &pc) {
            Ok((_, cond)) => {
                let k = pa.len();
                (0..k).all(|i| (k..ab.len()).all(|j| cond[(i, j)].abs() <= tol))
            }
            Err(_) => false,
        }
    });
    Ok(CIRelation::from_oracle(ground, Provenance::Gaussian, oracle))
}

/// Calls `f` with every assignment of the `n` ground positions to `k` sets
/// (or to none), as one bit mask per set.
fn for_each_labelling(n: usize, k: usize, mut f: impl FnMut(&[u64])) {
    let base = k + 1;
    let mut digits = vec![0usize; n];
    let mut masks = vec![0u64; k];
    loop {
        masks.iter_mut().for_each(|m| *m = 0);
        for (pos, &d) in digits.iter().enumerate() {
            if d < k {
                masks[d] |= 1 << pos;
            }
        }
        f(&masks);
        let mut p = 0;
        loop {
            if p == n {
                return;
            }
            digits[p] += 1;
            if digits[p] < base {
                break;
            }
            digits[p] = 0;
            p += 1;
        }
    }
}

fn random_labelling<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<u64> {
    let mut masks = vec![0u64; k];
    for pos in 0..n {
        let d = rng.gen_range(0..=k);
        if d < k {
            masks[d] |= 1 << pos;
        }
    }
    masks
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axiom {
    #[serde(rename = "P1*")]
    Symmetry,
    #[serde(rename = "P2*")]
    Decomposition,
    #[serde(rename = "P3*")]
    WeakUnion,
    #[serde(rename = "P4*")]
    Contraction,
    #[serde(rename = "P5")]
    Intersection,
    #[serde(rename = "P5*")]
    GeneralIntersection,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [
        Axiom::Symmetry,
        Axiom::Decomposition,
        Axiom::WeakUnion,
        Axiom::Contraction,
        Axiom::Intersection,
        Axiom::GeneralIntersection,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Axiom::Symmetry => "P1*",
            Axiom::Decomposition => "P2*",
            Axiom::WeakUnion => "P3*",
            Axiom::Contraction => "P4*",
            Axiom::Intersection => "P5",
            Axiom::GeneralIntersection => "P5*",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Symmetry => "symmetry",
            Axiom::Decomposition => "decomposition",
            Axiom::WeakUnion => "weak-union",
            Axiom::Contraction => "contraction",
            Axiom::Intersection => "intersection",
            Axiom::GeneralIntersection => "general-intersection",
        }
    }

    pub fn parse(s: &str) -> Option<Axiom> {
        let t = s.trim().to_ascii_lowercase();
        Axiom::ALL
            .into_iter()
            .find(|a| a.id().to_ascii_lowercase() == t || a.name() == t)
    }
}

#[derive(Clone, Debug)]
pub struct AxiomOptions {
    /// Largest ground set checked exhaustively.
    pub cap: usize,
    /// Number of random instantiations to draw above the cap.
    pub samples: Option<usize>,
    pub seed: u64,
    /// Enumerate every partition for the general intersection property.
    pub full_partitions: bool,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        AxiomOptions { cap: DEFAULT_CAP, samples: None, seed: 0, full_partitions: false }
    }
}

/// One violating instantiation. `blocks` is the partition of `x` used by the
/// general intersection check (empty for the other axioms).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomWitness {
    pub x: VertexSet,
    pub y: VertexSet,
    pub w: VertexSet,
    pub z: VertexSet,
    #[serde(default)]
    pub blocks: Vec<VertexSet>,
}

impl AxiomWitness {
    fn to_witness(&self, axiom: Axiom) -> Witness {
        let mut w = Witness::new(format!("{} violation", axiom.id()))
            .set("X", self.x.clone())
            .set("Y", self.y.clone())
            .set("Z", self.z.clone());
        if !self.w.is_empty() {
            w = w.set("W", self.w.clone());
        }
        for (k, b) in self.blocks.iter().enumerate() {
            w = w.set(&format!("X_{}", k + 1), b.clone());
        }
        w
    }

    /// True when the premises hold in `r` and the conclusion does not.
    pub fn recheck(&self, r: &CIRelation, axiom: Axiom) -> Result<bool> {
        let h = |a: &VertexSet, b: &VertexSet, c: &VertexSet| r.query(a, b, c);
        let yw = self.y.union(&self.w);
        let (x, y, w, z) = (&self.x, &self.y, &self.w, &self.z);
        Ok(match axiom {
            Axiom::Symmetry => h(x, y, z)? != h(y, x, z)?,
            Axiom::Decomposition => h(x, &yw, z)? && !(h(x, y, z)? && h(x, w, z)?),
            Axiom::WeakUnion => h(x, &yw, z)? && !h(x, y, &z.union(w))?,
            Axiom::Contraction => h(x, y, &z.union(w))? && h(x, w, z)? && !h(x, &yw, z)?,
            Axiom::Intersection => {
                h(x, y, &z.union(w))? && h(x, w, &z.union(y))? && !h(x, &yw, z)?
            }
            Axiom::GeneralIntersection => {
                if self.blocks.is_empty() {
                    return self.recheck(r, Axiom::Intersection);
                }
                let mut premises = true;
                for b in &self.blocks {
                    premises &= h(b, y, &z.union(&x.difference(b)))?;
                }
                premises && !h(x, y, z)?
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub witnesses: Vec<AxiomWitness>,
    pub violations: u64,
    pub instances: u64,
    pub exhaustive: bool,
}

impl AxiomReport {
    pub fn to_section(&self) -> Section {
        let mut s = Section::new(self.axiom.id(), self.axiom.name(), self.verdict)
            .metric("instances", self.instances as f64)
            .metric("violations", self.violations as f64)
            .witnesses(self.witnesses.iter().map(|w| w.to_witness(self.axiom)).collect());
        if !self.exhaustive {
            s = s.note("sampled instantiations");
        }
        s
    }
}

struct Tally {
    witnesses: Vec<AxiomWitness>,
    violations: u64,
    instances: u64,
}

impl Tally {
    fn new() -> Self {
        Tally { witnesses: vec![], violations: 0, instances: 0 }
    }

    fn record(&mut self, w: impl FnOnce() -> AxiomWitness) {
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w());
        }
    }
}

fn bits(m: u64) -> impl Iterator<Item = u64> {
    (0..64).filter(move |k| (m >> k) & 1 == 1).map(|k| 1u64 << k)
}

/// Calls `f` with each partition of `m` into at least two blocks.
fn for_each_partition(m: u64, f: &mut impl FnMut(&[u64])) {
    let elems: Vec<u64> = bits(m).collect();
    let mut blocks: Vec<u64> = vec![];
    fn rec(elems: &[u64], blocks: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        match elems.split_first() {
            None => {
                if blocks.len() >= 2 {
                    f(blocks)
                }
            }
            Some((&e, rest)) => {
                for k in 0..blocks.len() {
                    blocks[k] |= e;
                    rec(rest, blocks, f);
                    blocks[k] &= !e;
                }
                blocks.push(e);
                rec(rest, blocks, f);
                blocks.pop();
            }
        }
    }
    rec(&elems, &mut blocks, f);
}

fn check_instance(r: &CIRelation, axiom: Axiom, lab: &[u64], full: bool, t: &mut Tally) {
    let h = |a: u64, b: u64, c: u64| r.holds_masks(a, b, c);
    let wit = |x: u64, y: u64, w: u64, z: u64, blocks: &[u64]| AxiomWitness {
        x: r.unmask(x),
        y: r.unmask(y),
        w: r.unmask(w),
        z: r.unmask(z),
        blocks: blocks.iter().map(|&b| r.unmask(b)).collect(),
    };
    match axiom {
        Axiom::Symmetry => {
            let (x, y, z) = (lab[0], lab[1], lab[2]);
            if x == 0 || y == 0 {
                return;
            }
            t.instances += 1;
            if h(x, y, z) != h(y, x, z) {
                t.record(|| wit(x, y, 0, z, &[]));
            }
        }
        Axiom::GeneralIntersection => {
            let (x, y, z) = (lab[0], lab[1], lab[2]);
            if x.count_ones() < 2 || y == 0 {
                return;
            }
            let test = |blocks: &[u64], t: &mut Tally| {
                t.instances += 1;
                if blocks.iter().all(|&b| h(b, y, z | (x & !b))) && !h(x, y, z) {
                    t.record(|| wit(x, y, 0, z, blocks));
                }
            };
            if full {
                for_each_partition(x, &mut |blocks| test(blocks, t));
            } else {
                let singles: Vec<u64> = bits(x).collect();
                test(&singles, t);
            }
        }
        _ => {
            let (x, y, w, z) = (lab[0], lab[1], lab[2], lab[3]);
            if x == 0 || y == 0 || w == 0 {
                return;
            }
            t.instances += 1;
            let violated = match axiom {
                Axiom::Decomposition => h(x, y | w, z) && !(h(x, y, z) && h(x, w, z)),
                Axiom::WeakUnion => h(x, y | w, z) && !h(x, y, z | w),
                Axiom::Contraction => h(x, y, z | w) && h(x, w, z) && !h(x, y | w, z),
                Axiom::Intersection => h(x, y, z | w) && h(x, w, z | y) && !h(x, y | w, z),
                _ => unreachable!(),
            };
            if violated {
                t.record(|| wit(x, y, w, z, &[]));
            }
        }
    }
}

/// Instantiates `axiom` over disjoint subset tuples of the ground set.
/// The general intersection check also runs the two-block intersection
/// form, which together with singleton partitions settles it on finite sets.
pub fn check_axiom(r: &CIRelation, axiom: Axiom, opts: &AxiomOptions) -> Result<AxiomReport> {
    let n = r.ground.len();
    let exhaustive = n <= opts.cap;
    if !exhaustive && opts.samples.is_none() {
        return Err(Error::GroundSetTooLarge { size: n, cap: opts.cap });
    }
    if n > 64 {
        return Err(Error::GroundSetTooLarge { size: n, cap: 64 });
    }
    let arity = match axiom {
        Axiom::Symmetry | Axiom::GeneralIntersection => 3,
        _ => 4,
    };
    let mut tally = Tally::new();
    let run = |lab: &[u64], t: &mut Tally| check_instance(r, axiom, lab, opts.full_partitions, t);
    if exhaustive {
        for_each_labelling(n, arity, |lab| run(lab, &mut tally));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.samples.unwrap() {
            let lab = random_labelling(n, arity, &mut rng);
            run(&lab, &mut tally);
        }
    }
    if axiom == Axiom::GeneralIntersection {
        let p5 = check_axiom(r, Axiom::Intersection, opts)?;
        tally.instances += p5.instances;
        for w in p5.witnesses {
            if tally.witnesses.len() < MAX_WITNESSES {
                tally.witnesses.push(w);
            }
        }
        tally.violations += p5.violations;
    }
    Ok(AxiomReport {
        axiom,
        verdict: Verdict::from_bool(tally.violations == 0),
        witnesses: tally.witnesses,
        violations: tally.violations,
        instances: tally.instances,
        exhaustive,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MarkovProperty {
    #[serde(rename = "P*")]
    Pairwise,
    #[serde(rename = "L*")]
    Local,
    #[serde(rename = "G*")]
    Global,
}

impl MarkovProperty {
    pub const ALL: [MarkovProperty; 3] =
        [MarkovProperty::Pairwise, MarkovProperty::Local, MarkovProperty::Global];

    pub fn id(self) -> &'static str {
        match self {
            MarkovProperty::Pairwise => "P*",
            MarkovProperty::Local => "L*",
            MarkovProperty::Global => "G*",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkovProperty::Pairwise => "pairwise-markov",
            MarkovProperty::Local => "local-markov",
            MarkovProperty::Global => "global-markov",
        }
    }

    pub fn parse(s: &str) -> Option<MarkovProperty> {
        let t = s.trim().to_ascii_lowercase();
        MarkovProperty::ALL.into_iter().find(|p| {
            p.id().to_ascii_lowercase() == t
                || p.name() == t
                || p.name().trim_end_matches("-markov") == t
                || p.id().trim_end_matches('*').to_ascii_lowercase() == t
        })
    }
}

/// Adjacency of a finite graph as bit masks over the relation's ground set.
struct MaskGraph {
    adj: Vec<u64>,
}

impl MaskGraph {
    fn new(r: &CIRelation, g: &LazyGraph) -> Result<Self> {
        let vs = g.vertices()?;
        if vs != r.ground_set() {
            return Err(Error::Domain(format!(
                "graph vertices {vs} differ from the relation ground set {}",
                r.ground_set()
            )));
        }
        if vs.len() > 64 {
            return Err(Error::GroundSetTooLarge { size: vs.len(), cap: 64 });
        }
        let mut adj = vec![0u64; vs.len()];
        for (k, v) in vs.iter().enumerate() {
            for w in g.neighbors(v, usize::MAX)?.vertices.iter() {
                adj[k] |= r.mask(&VertexSet::from(vec![w])).unwrap();
            }
        }
        Ok(MaskGraph { adj })
    }

    fn reach_avoiding(&self, a: u64, s: u64) -> u64 {
        let mut seen = a;
        let mut frontier = a;
        while frontier != 0 {
            let mut next = 0;
            for b in bits(frontier) {
                next |= self.adj[b.trailing_zeros() as usize];
            }
            next &= !seen & !s;
            seen |= next;
            frontier = next;
        }
        seen
    }

    fn separates(&self, a: u64, b: u64, s: u64) -> bool {
        self.reach_avoiding(a, s) & b == 0
    }
}

fn statement_witness(r: &CIRelation, label: &str, a: u64, b: u64, c: u64) -> Witness {
    Witness::new(label)
        .set("A", r.unmask(a))
        .set("B", r.unmask(b))
        .set("S", r.unmask(c))
}

fn markov_section(
    r: &CIRelation,
    mg: &MaskGraph,
    which: MarkovProperty,
    cap: usize,
) -> Result<Section> {
    let n = r.ground.len();
    let full: u64 = if n == 64 { u64::MAX } else { (1 << n) - 1 };
    let mut witnesses = vec![];
    let mut violations = 0u64;
    let mut checked = 0u64;
    let mut fail = |w: Witness, witnesses: &mut Vec<Witness>| {
        violations += 1;
        if witnesses.len() < MAX_WITNESSES {
            witnesses.push(w);
        }
    };
    match which {
        MarkovProperty::Pairwise => {
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (1u64 << i, 1u64 << j);
                    if mg.adj[i] & b != 0 {
                        continue;
                    }
                    checked += 1;
                    let rest = full & !a & !b;
                    if !r.holds_masks(a, b, rest) {
                        fail(statement_witness(r, "non-adjacent pair", a, b, rest), &mut witnesses);
                    }
                }
            }
        }
        MarkovProperty::Local => {
            for i in 0..n {
                let a = 1u64 << i;
                let ne = mg.adj[i];
                let far = full & !a & !ne;
                if far == 0 {
                    continue;
                }
                checked += 1;
                if !r.holds_masks(a, far, ne) {
                    fail(statement_witness(r, "vertex and its non-neighbours", a, far, ne), &mut witnesses);
                }
            }
        }
        MarkovProperty::Global => {
            if n > cap {
                return Err(Error::GroundSetTooLarge { size: n, cap });
            }
            for_each_labelling(n, 3, |lab| {
                let (a, b, s) = (lab[0], lab[1], lab[2]);
                // each unordered pair {A, B} once
                if a == 0 || b == 0 || a.trailing_zeros() > b.trailing_zeros() {
                    return;
                }
                if !mg.separates(a, b, s) {
                    return;
                }
                checked += 1;
                if !r.holds_masks(a, b, s) {
                    fail(statement_witness(r, "separated sets", a, b, s), &mut witnesses);
                }
            });
        }
    }
    Ok(Section::new(which.id(), which.name(), Verdict::from_bool(violations == 0))
        .metric("statements", checked as f64)
        .metric("violations", violations as f64)
        .witnesses(witnesses))
}

/// Checks one set-Markov property of `r` with respect to `g`.
pub fn check_markov(r: &CIRelation, g: &LazyGraph, which: MarkovProperty) -> Result<DiagnosticReport> {
    let mg = MaskGraph::new(r, g)?;
    let mut rep = DiagnosticReport::new("check-markov");
    rep.push(markov_section(r, &mg, which, DEFAULT_CAP.max(10))?);
    Ok(rep)
}

/// Evaluates the three Markov properties and the axioms, then checks every
/// implication that the axioms license: global ⇒ local always, local ⇒
/// pairwise under the semi-graphoid axioms, pairwise ⇒ global when the
/// general intersection property holds too. Only the implication sections
/// carry the overall verdict.
pub fn equivalence_audit(
    r: &CIRelation,
    g: &LazyGraph,
    opts: &AxiomOptions,
) -> Result<DiagnosticReport> {
    let mg = MaskGraph::new(r, g)?;
    let cap = opts.cap.max(DEFAULT_CAP);
    let mut rep = DiagnosticReport::new("audit-equivalence");
    let props: Vec<Section> = MarkovProperty::ALL
        .iter()
        .map(|&p| markov_section(r, &mg, p, cap))
        .collect::<Result<_>>()?;
    let axioms: Vec<AxiomReport> = Axiom::ALL
        .iter()
        .map(|&a| check_axiom(r, a, opts))
        .collect::<Result<_>>()?;
    let ok = |s: &Section| s.verdict == Verdict::Pass;
    let (pw, local, global) = (&props[0], &props[1], &props[2]);
    let semi = axioms[..4].iter().all(|a| a.verdict == Verdict::Pass);
    let general = semi && axioms[5].verdict == Verdict::Pass;

    let implication = |name: &str, premise: &Section, concl: &Section, licensed: bool, why: &str| {
        let mut s = if !licensed {
            Section::new(name, "markov-implications", Verdict::Inconclusive)
                .note(format!("{why}; implication not asserted"))
        } else if ok(premise) && !ok(concl) {
            Section::new(name, "markov-implications", Verdict::Fail)
                .note("premise holds but conclusion fails")
                .witnesses(concl.witnesses.clone())
        } else {
            Section::new(name, "markov-implications", Verdict::Pass)
        };
        s = s.metric("premise_holds", ok(premise) as u8 as f64)
            .metric("conclusion_holds", ok(concl) as u8 as f64);
        s
    };
    let g_l = implication("G* => L*", global, local, true, "");
    let l_p = implication("L* => P*", local, pw, semi, "semi-graphoid axioms fail");
    let p_g = implication(
        "P* => G*",
        pw,
        global,
        general,
        if semi { "P5* fails" } else { "semi-graphoid axioms fail" },
    );
    for s in props {
        rep.push_informational(s);
    }
    for a in &axioms {
        rep.push_informational(a.to_section());
    }
    for s in [g_l, l_p, p_g] {
        let v = s.verdict;
        // unlicensed implications are reported but do not count as violations
        if v == Verdict::Inconclusive {
            rep.push_informational(s);
        } else {
            rep.push(s);
        }
    }
    Ok(rep)
}

/// Graph with an edge `{i, j}` exactly when `{i} ⊥ {j} | rest` fails.
pub fn pairwise_graph(r: &CIRelation) -> Result<LazyGraph> {
    let g = r.ground_set().as_slice().to_vec();
    let n = g.len();
    if n > 64 {
        return Err(Error::GroundSetTooLarge { size: n, cap: 64 });
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1 << n) - 1 };
    let mut edges = vec![];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (1u64 << i, 1u64 << j);
            if !r.holds_masks(a, b, full & !a & !b) {
                edges.push((g[i], g[j]));
            }
        }
    }
    LazyGraph::explicit(r.ground_set().clone(), &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(a: &[Vertex], b: &[Vertex], c: &[Vertex]) -> CIStatement {
        CIStatement::new(a.to_vec().into(), b.to_vec().into(), c.to_vec().into()).unwrap()
    }

    #[test]
    fn canonical_twins_coincide() {
        assert_eq!(st(&[3], &[1], &[2]), st(&[1], &[3], &[2]));
        assert!(CIStatement::new(VertexSet::empty(), [1].into(), VertexSet::empty()).is_err());
        assert!(CIStatement::new([1].into(), [1, 2].into(), VertexSet::empty()).is_err());
    }

    #[test]
    fn empty_relation_passes_every_axiom() {
        let r = CIRelation::explicit(VertexSet::range(1, 4), []).unwrap();
        for a in Axiom::ALL {
            let rep = check_axiom(&r, a, &AxiomOptions::default()).unwrap();
            assert_eq!(rep.verdict, Verdict::Pass, "{}", a.id());
        }
    }

    #[test]
    fn above_cap_needs_sampling() {
        let r = CIRelation::explicit(VertexSet::range(1, 9), []).unwrap();
        assert!(matches!(
            check_axiom(&r, Axiom::Decomposition, &AxiomOptions::default()),
            Err(Error::GroundSetTooLarge { size: 9, cap: 7 })
        ));
        let opts = AxiomOptions { samples: Some(200), ..Default::default() };
        assert_eq!(check_axiom(&r, Axiom::Decomposition, &opts).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn lone_statement_breaks_decomposition() {
        let r = CIRelation::explicit(VertexSet::range(1, 3), [st(&[1], &[2, 3], &[])]).unwrap();
        let rep = check_axiom(&r, Axiom::Decomposition, &AxiomOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        for w in &rep.witnesses {
            assert!(w.recheck(&r, Axiom::Decomposition).unwrap());
        }
    }

    #[test]
    fn partitions_counted_by_bell_numbers() {
        // partitions into >= 2 blocks: Bell(n) - 1
        for (n, bell) in [(2u32, 2), (3, 5), (4, 15), (5, 52)] {
            let mut count = 0;
            for_each_partition((1u64 << n) - 1, &mut |_| count += 1);
            assert_eq!(count, bell - 1);
        }
    }

    #[test]
    fn complete_graph_global_is_vacuous() {
        let r = CIRelation::explicit(VertexSet::range(1, 4), []).unwrap();
        let g = LazyGraph::complete(VertexSet::range(1, 4));
        let rep = check_markov(&r, &g, MarkovProperty::Global).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.sections[0].metrics["statements"], 0.0);
    }

    #[test]
    fn mismatched_vertex_sets_rejected() {
        let r = CIRelation::explicit(VertexSet::range(1, 4), []).unwrap();
        let g = LazyGraph::complete(VertexSet::range(1, 5));
        assert!(matches!(check_markov(&r, &g, MarkovProperty::Pairwise), Err(Error::Domain(_))));
    }

    #[test]
    fn parse_ids() {
        assert_eq!(Axiom::parse("p3*"), Some(Axiom::WeakUnion));
        assert_eq!(Axiom::parse("P5"), Some(Axiom::Intersection));
        assert_eq!(MarkovProperty::parse("G"), Some(MarkovProperty::Global));
        assert_eq!(MarkovProperty::parse("local"), Some(MarkovProperty::Local));
    }
}
