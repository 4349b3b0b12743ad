//! Shell-ordered enumeration of the integer lattice `Z^d`.
//!
//! Index `1` is the origin. Points are grouped into shells of equal Chebyshev
//! radius and ordered lexicographically inside a shell, so the first
//! `(2m+1)^d` indices are exactly the cube `[-m, m]^d`.

pub type Coord = Vec<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpiralIndex {
    dim: usize,
}

fn cube(side: i64, dim: usize) -> u128 {
    (side.max(0) as u128).pow(dim as u32)
}

impl SpiralIndex {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "lattice dimension must be positive");
        SpiralIndex { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of indices covering the cube of Chebyshev radius `m`.
    pub fn cube_len(&self, m: usize) -> usize {
        cube(2 * m as i64 + 1, self.dim) as usize
    }

    /// Largest radius `m` whose full cube fits in the first `k` indices, if any.
    pub fn full_radius(&self, k: usize) -> Option<usize> {
        if k == 0 {
            return None;
        }
        let mut m = 0;
        while self.cube_len(m + 1) <= k {
            m += 1;
        }
        Some(m)
    }

    // points of shell `rho` with the given prefix fixed and `rest` free coordinates
    fn completions(rho: i64, prefix_on_shell: bool, rest: usize) -> u128 {
        if prefix_on_shell {
            cube(2 * rho + 1, rest)
        } else {
            cube(2 * rho + 1, rest) - cube(2 * rho - 1, rest)
        }
    }

    pub fn coord(&self, index: usize) -> Coord {
        assert!(index >= 1, "lattice indices start at 1");
        let k = (index - 1) as u128;
        let mut rho: i64 = 0;
        while cube(2 * rho + 1, self.dim) <= k {
            rho += 1;
        }
        let mut offset = k - if rho == 0 { 0 } else { cube(2 * rho - 1, self.dim) };
        let mut out = Vec::with_capacity(self.dim);
        let mut on_shell = false;
        for l in 0..self.dim {
            let rest = self.dim - l - 1;
            let mut chosen = None;
            for v in -rho..=rho {
                let hit = on_shell || v.abs() == rho;
                let n = Self::completions(rho, hit, rest);
                if offset < n {
                    chosen = Some((v, hit));
                    break;
                }
                offset -= n;
            }
            let (v, hit) = chosen.expect("offset inside shell");
            out.push(v);
            on_shell = hit;
        }
        out
    }

    pub fn index(&self, c: &[i64]) -> usize {
        assert_eq!(c.len(), self.dim);
        let rho = c.iter().map(|x| x.abs()).max().unwrap_or(0);
        let mut k = if rho == 0 { 0 } else { cube(2 * rho - 1, self.dim) };
        let mut on_shell = false;
        for (l, &cl) in c.iter().enumerate() {
            let rest = self.dim - l - 1;
            for v in -rho..cl {
                k += Self::completions(rho, on_shell || v.abs() == rho, rest);
            }
            on_shell = on_shell || cl.abs() == rho;
        }
        (k + 1) as usize
    }

    pub fn chebyshev_radius(&self, index: usize) -> i64 {
        self.coord(index).iter().map(|x| x.abs()).max().unwrap_or(0)
    }
}

pub fn euclidean(a: &[i64], b: &[i64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn manhattan(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_cube_is_centered_square() {
        let s = SpiralIndex::new(2);
        assert_eq!(s.coord(1), vec![0, 0]);
        let mut pts: Vec<_> = (1..=25).map(|i| s.coord(i)).collect();
        pts.sort();
        let mut expect = vec![];
        for x in -2..=2 {
            for y in -2..=2 {
                expect.push(vec![x, y]);
            }
        }
        assert_eq!(pts, expect);
    }

    #[test]
    fn index_inverts_coord() {
        for d in 1..=3 {
            let s = SpiralIndex::new(d);
            for i in 1..=400 {
                assert_eq!(s.index(&s.coord(i)), i);
            }
        }
    }

    #[test]
    fn full_radius() {
        let s = SpiralIndex::new(2);
        assert_eq!(s.full_radius(8), Some(0));
        assert_eq!(s.full_radius(9), Some(1));
        assert_eq!(s.full_radius(48), Some(2));
        assert_eq!(s.full_radius(49), Some(3));
    }
}
