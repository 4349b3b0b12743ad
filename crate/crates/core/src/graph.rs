//! Undirected graphs on finite or countable vertex sets.
//!
//! Neighbourhoods are produced on demand, so infinite graphs (bands on the
//! naturals, the integer lattice, stars with an infinite hub) are handled by
//! budgeted searches rather than materialised adjacency.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SpiralIndex;

pub type Vertex = usize;

/// Sorted set of vertices without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<Vertex>", into = "Vec<Vertex>")]
pub struct VertexSet(Vec<Vertex>);

impl From<Vec<Vertex>> for VertexSet {
    fn from(mut v: Vec<Vertex>) -> Self {
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }
}

impl From<VertexSet> for Vec<Vertex> {
    fn from(s: VertexSet) -> Self {
        s.0
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        VertexSet::from(iter.into_iter().collect::<Vec<_>>())
    }
}

impl<const N: usize> From<[Vertex; N]> for VertexSet {
    fn from(a: [Vertex; N]) -> Self {
        VertexSet::from(a.to_vec())
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl VertexSet {
    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    pub fn range(lo: Vertex, hi_inclusive: Vertex) -> Self {
        VertexSet((lo..=hi_inclusive).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.0
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        match self.0.binary_search(&v) {
            Ok(_) => false,
            Err(p) => {
                self.0.insert(p, v);
                true
            }
        }
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.iter().filter(|v| !other.contains(*v)).collect())
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.iter().filter(|v| other.contains(*v)).collect())
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| !other.contains(v))
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn max(&self) -> Option<Vertex> {
        self.0.last().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Universe {
    Finite(VertexSet),
    /// All integers `>= start`.
    Naturals { start: Vertex },
}

impl Universe {
    pub fn contains(&self, v: Vertex) -> bool {
        match self {
            Universe::Finite(s) => s.contains(v),
            Universe::Naturals { start } => v >= *start,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Universe::Finite(_))
    }
}

/// A neighbourhood listing; `complete` is false when the enumeration budget
/// cut an infinite neighbourhood short.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighborhood {
    pub vertices: VertexSet,
    pub complete: bool,
}

/// User-supplied adjacency. Must be symmetric, pure and reentrant.
pub trait NeighborOracle: Send + Sync {
    fn neighbors(&self, v: Vertex, budget: usize) -> Neighborhood;
}

impl<F> NeighborOracle for F
where
    F: Fn(Vertex, usize) -> Neighborhood + Send + Sync,
{
    fn neighbors(&self, v: Vertex, budget: usize) -> Neighborhood {
        self(v, budget)
    }
}

#[derive(Clone)]
enum Adjacency {
    Explicit(BTreeMap<Vertex, VertexSet>),
    Band { order: usize },
    Lattice { index: SpiralIndex },
    Star { hub: Vertex },
    Oracle(Arc<dyn NeighborOracle>),
}

#[derive(Clone)]
pub struct LazyGraph {
    universe: Universe,
    adjacency: Adjacency,
}

impl fmt::Debug for LazyGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.adjacency {
            Adjacency::Explicit(_) => "explicit".to_string(),
            Adjacency::Band { order } => format!("band({order})"),
            Adjacency::Lattice { index } => format!("lattice({})", index.dim()),
            Adjacency::Star { hub } => format!("star({hub})"),
            Adjacency::Oracle(_) => "oracle".to_string(),
        };
        f.debug_struct("LazyGraph")
            .field("universe", &self.universe)
            .field("kind", &kind)
            .finish()
    }
}

pub const DEFAULT_NEIGHBOR_BUDGET: usize = 1 << 16;
pub const DEFAULT_SEARCH_BUDGET: usize = 1 << 20;

impl LazyGraph {
    /// Finite graph from an edge list. Self-loops are rejected.
    pub fn explicit(vertices: VertexSet, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut adj: BTreeMap<Vertex, VertexSet> =
            vertices.iter().map(|v| (v, VertexSet::empty())).collect();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidSets(format!("self-loop at {u}")));
            }
            for w in [u, v] {
                if !vertices.contains(w) {
                    return Err(Error::UnknownVertex(w));
                }
            }
            adj.get_mut(&u).unwrap().insert(v);
            adj.get_mut(&v).unwrap().insert(u);
        }
        Ok(LazyGraph {
            universe: Universe::Finite(vertices),
            adjacency: Adjacency::Explicit(adj),
        })
    }

    /// Finite graph from adjacency lists; asymmetric lists are an error.
    pub fn from_adjacency(adj: BTreeMap<Vertex, VertexSet>) -> Result<Self> {
        for (&u, ns) in &adj {
            for v in ns.iter() {
                match adj.get(&v) {
                    None => return Err(Error::UnknownVertex(v)),
                    Some(back) if !back.contains(u) => {
                        return Err(Error::AsymmetricAdjacency(u, v))
                    }
                    _ => {}
                }
                if u == v {
                    return Err(Error::InvalidSets(format!("self-loop at {u}")));
                }
            }
        }
        let vertices = adj.keys().copied().collect();
        Ok(LazyGraph {
            universe: Universe::Finite(vertices),
            adjacency: Adjacency::Explicit(adj),
        })
    }

    pub fn complete(vertices: VertexSet) -> Self {
        let adj = vertices
            .iter()
            .map(|v| (v, vertices.iter().filter(|&w| w != v).collect()))
            .collect();
        LazyGraph {
            universe: Universe::Finite(vertices),
            adjacency: Adjacency::Explicit(adj),
        }
    }

    /// `i ~ j` iff `0 < |i - j| <= order`, on `{1, ..., size}` or on all of `N`.
    pub fn band(order: usize, size: Option<usize>) -> Self {
        let universe = match size {
            Some(n) => Universe::Finite(VertexSet::range(1, n)),
            None => Universe::Naturals { start: 1 },
        };
        LazyGraph { universe, adjacency: Adjacency::Band { order } }
    }

    /// Nearest-neighbour grid on `Z^dim`, shell-indexed from 1; `radius`
    /// restricts it to the centred cube.
    pub fn lattice(dim: usize, radius: Option<usize>) -> Self {
        let index = SpiralIndex::new(dim);
        let universe = match radius {
            Some(m) => Universe::Finite(VertexSet::range(1, index.cube_len(m))),
            None => Universe::Naturals { start: 1 },
        };
        LazyGraph { universe, adjacency: Adjacency::Lattice { index } }
    }

    /// Hub `0` adjacent to every leaf `1..=leaves` (or to all of `N`).
    pub fn star(leaves: Option<usize>) -> Self {
        let universe = match leaves {
            Some(n) => Universe::Finite(VertexSet::range(0, n)),
            None => Universe::Naturals { start: 0 },
        };
        LazyGraph { universe, adjacency: Adjacency::Star { hub: 0 } }
    }

    pub fn from_oracle(universe: Universe, oracle: Arc<dyn NeighborOracle>) -> Self {
        LazyGraph { universe, adjacency: Adjacency::Oracle(oracle) }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn is_finite(&self) -> bool {
        self.universe.is_finite()
    }

    pub fn vertices(&self) -> Result<&VertexSet> {
        match &self.universe {
            Universe::Finite(s) => Ok(s),
            Universe::Naturals { .. } => Err(Error::NotFinite("vertex listing".into())),
        }
    }

    pub fn neighbors(&self, v: Vertex, budget: usize) -> Result<Neighborhood> {
        if !self.universe.contains(v) {
            return Err(Error::UnknownVertex(v));
        }
        let inside = |w: &Vertex| self.universe.contains(*w);
        let nb = match &self.adjacency {
            Adjacency::Explicit(adj) => Neighborhood {
                vertices: adj.get(&v).cloned().unwrap_or_default(),
                complete: true,
            },
            Adjacency::Band { order } => Neighborhood {
                vertices: (v.saturating_sub(*order)..=v + order)
                    .filter(|&w| w != v)
                    .filter(inside)
                    .collect(),
                complete: true,
            },
            Adjacency::Lattice { index } => {
                let c = index.coord(v);
                let mut out = Vec::with_capacity(2 * index.dim());
                for l in 0..index.dim() {
                    for step in [-1i64, 1] {
                        let mut d = c.clone();
                        d[l] += step;
                        out.push(index.index(&d));
                    }
                }
                Neighborhood {
                    vertices: out.into_iter().filter(inside).collect(),
                    complete: true,
                }
            }
            Adjacency::Star { hub } => {
                if v != *hub {
                    Neighborhood { vertices: VertexSet::from(vec![*hub]), complete: true }
                } else {
                    match &self.universe {
                        Universe::Finite(s) => Neighborhood {
                            vertices: s.iter().filter(|&w| w != *hub).collect(),
                            complete: true,
                        },
                        Universe::Naturals { start } => Neighborhood {
                            vertices: (*start..)
                                .filter(|&w| w != *hub)
                                .take(budget)
                                .collect(),
                            complete: false,
                        },
                    }
                }
            }
            Adjacency::Oracle(o) => {
                let mut nb = o.neighbors(v, budget);
                nb.vertices = nb.vertices.iter().filter(inside).collect();
                nb
            }
        };
        Ok(nb)
    }

    pub fn adjacent(&self, u: Vertex, v: Vertex) -> Result<bool> {
        let nb = self.neighbors(u, DEFAULT_NEIGHBOR_BUDGET)?;
        if nb.vertices.contains(v) {
            return Ok(true);
        }
        if nb.complete {
            return Ok(false);
        }
        let back = self.neighbors(v, DEFAULT_NEIGHBOR_BUDGET)?;
        if back.vertices.contains(u) || back.complete {
            return Ok(back.vertices.contains(u));
        }
        Err(Error::BudgetExhausted(DEFAULT_NEIGHBOR_BUDGET))
    }

    /// Closed neighbourhood `{v} ∪ ne(v)`.
    pub fn closure(&self, v: Vertex) -> Result<VertexSet> {
        let nb = self.neighbors(v, DEFAULT_NEIGHBOR_BUDGET)?;
        if !nb.complete {
            return Err(Error::BudgetExhausted(DEFAULT_NEIGHBOR_BUDGET));
        }
        let mut c = nb.vertices;
        c.insert(v);
        Ok(c)
    }

    /// Edges `(u, v)` with `u < v` of a finite graph.
    pub fn edges(&self) -> Result<Vec<(Vertex, Vertex)>> {
        let vs = self.vertices()?;
        let mut out = vec![];
        for u in vs.iter() {
            for v in self.neighbors(u, usize::MAX)?.vertices.iter() {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        Ok(out)
    }

    /// Vertices reachable from `a` by paths that avoid `s`, visiting at most
    /// `budget` vertices. The flag is true when the search ran to completion.
    pub fn reach_avoiding(
        &self,
        a: &VertexSet,
        s: &VertexSet,
        budget: usize,
    ) -> Result<(VertexSet, bool)> {
        if !a.is_disjoint(s) {
            return Err(Error::InvalidSets(format!("start set {a} meets blocked set {s}")));
        }
        for v in a.iter() {
            if !self.universe.contains(v) {
                return Err(Error::UnknownVertex(v));
            }
        }
        let mut seen = a.clone();
        let mut queue: VecDeque<Vertex> = a.iter().collect();
        let mut complete = true;
        while let Some(v) = queue.pop_front() {
            let nb = self.neighbors(v, budget)?;
            complete &= nb.complete;
            for w in nb.vertices.iter() {
                if s.contains(w) || seen.contains(w) {
                    continue;
                }
                if seen.len() >= budget {
                    return Ok((seen, false));
                }
                seen.insert(w);
                queue.push_back(w);
            }
        }
        Ok((seen, complete))
    }

    fn check_triple(&self, a: &VertexSet, b: &VertexSet, s: &VertexSet) -> Result<()> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidSets("separation needs nonempty end sets".into()));
        }
        if !a.is_disjoint(b) || !a.is_disjoint(s) || !b.is_disjoint(s) {
            return Err(Error::InvalidSets(format!("{a}, {b}, {s} are not pairwise disjoint")));
        }
        for v in a.iter().chain(b.iter()).chain(s.iter()) {
            if !self.universe.contains(v) {
                return Err(Error::UnknownVertex(v));
            }
        }
        Ok(())
    }

    /// Does every path from `a` to `b` meet `s`? `None` when the budget ran out.
    pub fn separates_within(
        &self,
        a: &VertexSet,
        b: &VertexSet,
        s: &VertexSet,
        budget: usize,
    ) -> Result<Option<bool>> {
        self.check_triple(a, b, s)?;
        let (reach, complete) = self.reach_avoiding(a, s, budget)?;
        if !reach.is_disjoint(b) {
            return Ok(Some(false));
        }
        Ok(if complete { Some(true) } else { None })
    }

    pub fn is_separator(&self, a: &VertexSet, b: &VertexSet, s: &VertexSet) -> Result<bool> {
        let budget = match &self.universe {
            Universe::Finite(vs) => vs.len() + 1,
            Universe::Naturals { .. } => DEFAULT_SEARCH_BUDGET,
        };
        self.separates_within(a, b, s, budget)?
            .ok_or(Error::BudgetExhausted(budget))
    }

    /// Probes random vertex pairs for symmetric adjacency.
    pub fn validate_symmetry(&self, probes: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = |rng: &mut ChaCha8Rng| -> Vertex {
            match &self.universe {
                Universe::Finite(s) => s.as_slice()[rng.gen_range(0..s.len())],
                Universe::Naturals { start } => start + rng.gen_range(0..256),
            }
        };
        if let Universe::Finite(s) = &self.universe {
            if s.is_empty() {
                return Ok(());
            }
        }
        for _ in 0..probes {
            let u = pick(&mut rng);
            let nb = self.neighbors(u, DEFAULT_NEIGHBOR_BUDGET)?;
            for v in nb.vertices.iter() {
                let back = self.neighbors(v, DEFAULT_NEIGHBOR_BUDGET)?;
                if back.complete && !back.vertices.contains(u) {
                    return Err(Error::AsymmetricAdjacency(u, v));
                }
            }
        }
        Ok(())
    }
}

/// JSON description of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    Explicit { vertices: Vec<Vertex>, edges: Vec<[Vertex; 2]> },
    Band { order: usize, #[serde(default)] size: Option<usize> },
    Lattice { dim: usize, #[serde(default)] radius: Option<usize> },
    Star { #[serde(default)] leaves: Option<usize> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<LazyGraph> {
        match self {
            GraphSpec::Explicit { vertices, edges } => {
                let edges: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                LazyGraph::explicit(VertexSet::from(vertices.clone()), &edges)
            }
            GraphSpec::Band { order, size } => Ok(LazyGraph::band(*order, *size)),
            GraphSpec::Lattice { dim, radius } => {
                if *dim == 0 {
                    return Err(Error::Domain("lattice dimension must be positive".into()));
                }
                Ok(LazyGraph::lattice(*dim, *radius))
            }
            GraphSpec::Star { leaves } => Ok(LazyGraph::star(*leaves)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> LazyGraph {
        LazyGraph::explicit(VertexSet::range(1, 4), &[(1, 2), (2, 3), (3, 4)]).unwrap()
    }

    #[test]
    fn path_separation() {
        let g = path4();
        assert!(g.is_separator(&[1].into(), &[4].into(), &[2].into()).unwrap());
        assert!(!g.is_separator(&[1].into(), &[4].into(), &VertexSet::empty()).unwrap());
    }

    #[test]
    fn overlapping_sets_rejected() {
        let g = path4();
        assert!(matches!(
            g.is_separator(&[1, 2].into(), &[2, 4].into(), &VertexSet::empty()),
            Err(Error::InvalidSets(_))
        ));
    }

    #[test]
    fn reach_on_path() {
        let (r, done) = path4().reach_avoiding(&[1].into(), &[3].into(), 100).unwrap();
        assert_eq!(r, VertexSet::from([1, 2]));
        assert!(done);
    }

    #[test]
    fn reach_on_infinite_band() {
        let g = LazyGraph::band(1, None);
        let (r, done) = g.reach_avoiding(&[1].into(), &[10].into(), 100).unwrap();
        assert_eq!(r, VertexSet::range(1, 9));
        assert!(done);
        let (r, done) = g.reach_avoiding(&[20].into(), &[10].into(), 50).unwrap();
        assert_eq!(r.len(), 50);
        assert!(!done);
    }

    #[test]
    fn lattice_origin_has_four_neighbours() {
        let g = LazyGraph::lattice(2, None);
        let nb = g.neighbors(1, 10).unwrap();
        assert_eq!(nb.vertices.len(), 4);
        assert!(nb.complete);
        let idx = SpiralIndex::new(2);
        for v in nb.vertices.iter() {
            let c = idx.coord(v);
            assert_eq!(c.iter().map(|x| x.abs()).sum::<i64>(), 1);
        }
    }

    #[test]
    fn infinite_star_hub_is_incomplete() {
        let g = LazyGraph::star(None);
        let nb = g.neighbors(0, 10).unwrap();
        assert_eq!(nb.vertices.len(), 10);
        assert!(!nb.complete);
        assert_eq!(g.neighbors(7, 10).unwrap().vertices, VertexSet::from([0]));
    }

    #[test]
    fn asymmetric_oracle_detected() {
        let oracle = Arc::new(|v: Vertex, _b: usize| Neighborhood {
            vertices: if v == 1 { VertexSet::from([2]) } else { VertexSet::empty() },
            complete: true,
        });
        let g = LazyGraph::from_oracle(Universe::Finite(VertexSet::range(1, 2)), oracle);
        assert!(matches!(g.validate_symmetry(50, 1), Err(Error::AsymmetricAdjacency(1, 2))));
    }

    #[test]
    fn spec_parses_and_rejects_unknown_keys() {
        let s: GraphSpec = serde_json::from_str(r#"{"kind":"band","order":2,"size":6}"#).unwrap();
        assert_eq!(s.build().unwrap().vertices().unwrap().len(), 6);
        assert!(serde_json::from_str::<GraphSpec>(r#"{"kind":"band","order":2,"bogus":1}"#).is_err());
    }
}
