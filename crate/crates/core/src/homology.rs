//! Betti curves along the alpha filtration.
//!
//! beta0 is tracked with a union-find; beta1 falls out of the Euler identity
//! chi = V - E + F = beta0 - beta1 (beta2 = 0 for a planar 2-complex). A
//! boundary-matrix rank computation over GF(2) serves as the independent
//! oracle for tests.

use crate::error::{Error, Result};
use crate::filtration::{Filtration, Simplex};

/// Union-find with union by rank and path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Returns true when the union merged two components.
    pub fn union(&mut self, i: usize, j: usize) -> bool {
        let (a, b) = (self.find(i), self.find(j));
        if a == b {
            return false;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// State of the complex after one filtration event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub alpha: f64,
    pub beta0: usize,
    pub beta1: usize,
    pub chi: i64,
}

/// Betti curve records: the state at alpha = 0 (all vertices present)
/// followed by one record per edge/triangle insertion, in event order.
#[derive(Debug, Clone)]
pub struct BettiCurve {
    pub events: Vec<CurvePoint>,
    pub vertex_count: usize,
}

/// Sweeps the filtration, maintaining beta0/beta1/chi. The Euler identity
/// is asserted after every insertion; a mismatch is an invariant error,
/// never silent.
pub fn betti_curve(f: &Filtration) -> Result<BettiCurve> {
    let n = f.vertex_count;
    let mut uf = UnionFind::new(n);
    let mut beta0: usize = 0;
    let mut beta1: usize = 0;
    let (mut v_in, mut e_in, mut f_in) = (0i64, 0i64, 0i64);
    let mut records: Vec<CurvePoint> = Vec::with_capacity(f.events.len() - n + 1);

    let mut vertices_done = false;
    for ev in &f.events {
        match ev.simplex {
            Simplex::Vertex(_) => {
                if vertices_done {
                    return Err(Error::Invariant("vertex event after an edge event".into()));
                }
                beta0 += 1;
                v_in += 1;
            }
            Simplex::Edge(i, j) => {
                if !vertices_done {
                    if v_in as usize != n {
                        return Err(Error::Invariant("edge before all vertices entered".into()));
                    }
                    records.push(CurvePoint {
                        alpha: 0.0,
                        beta0,
                        beta1,
                        chi: v_in,
                    });
                    vertices_done = true;
                }
                e_in += 1;
                if uf.union(i, j) {
                    beta0 -= 1;
                } else {
                    beta1 += 1;
                }
                let chi = v_in - e_in + f_in;
                if chi != beta0 as i64 - beta1 as i64 {
                    return Err(Error::Invariant(format!(
                        "Euler identity broken at alpha {}: chi {} vs beta0-beta1 {}",
                        ev.alpha,
                        chi,
                        beta0 as i64 - beta1 as i64
                    )));
                }
                records.push(CurvePoint {
                    alpha: ev.alpha,
                    beta0,
                    beta1,
                    chi,
                });
            }
            Simplex::Triangle(..) => {
                f_in += 1;
                if beta1 == 0 {
                    return Err(Error::Invariant(
                        "triangle inserted with no loop to fill".into(),
                    ));
                }
                beta1 -= 1;
                let chi = v_in - e_in + f_in;
                if chi != beta0 as i64 - beta1 as i64 {
                    return Err(Error::Invariant(format!(
                        "Euler identity broken at alpha {}: chi {} vs beta0-beta1 {}",
                        ev.alpha,
                        chi,
                        beta0 as i64 - beta1 as i64
                    )));
                }
                records.push(CurvePoint {
                    alpha: ev.alpha,
                    beta0,
                    beta1,
                    chi,
                });
            }
        }
    }
    if !vertices_done {
        // No edges at all (pure vertex set).
        records.push(CurvePoint {
            alpha: 0.0,
            beta0,
            beta1,
            chi: v_in,
        });
    }
    Ok(BettiCurve {
        events: records,
        vertex_count: n,
    })
}

impl BettiCurve {
    /// State of the complex at scale `alpha` (right-continuous step
    /// convention: a simplex is present at its entry value).
    pub fn state_at(&self, alpha: f64) -> CurvePoint {
        let idx = self.events.partition_point(|p| p.alpha <= alpha);
        if idx == 0 {
            // Before alpha = 0: only meaningful for negative alpha.
            return CurvePoint {
                alpha,
                beta0: 0,
                beta1: 0,
                chi: 0,
            };
        }
        self.events[idx - 1]
    }

    /// Projection of the events to (alpha, chi).
    pub fn euler_curve(&self) -> Vec<(f64, i64)> {
        self.events.iter().map(|p| (p.alpha, p.chi)).collect()
    }

    /// Step-function evaluation on an ascending grid.
    pub fn resample(&self, grid: &[f64]) -> Vec<CurvePoint> {
        grid.iter()
            .map(|&g| {
                let mut s = self.state_at(g);
                s.alpha = g;
                s
            })
            .collect()
    }

    /// Curve CSV `alpha,beta0,beta1,chi`. `resampled` only flags the header
    /// comment; rows are whatever `points` holds.
    pub fn export_csv<W: std::io::Write>(
        points: &[CurvePoint],
        resampled: bool,
        out: &mut W,
    ) -> Result<()> {
        writeln!(
            out,
            "# rows: {}",
            if resampled { "resampled" } else { "events" }
        )?;
        writeln!(out, "alpha,beta0,beta1,chi")?;
        for p in points {
            writeln!(out, "{},{},{},{}", p.alpha, p.beta0, p.beta1, p.chi)?;
        }
        Ok(())
    }
}

/// Brute-force Betti numbers of a fixed complex via boundary-matrix ranks
/// over GF(2). Cost is cubic; capped to keep the oracle honestly small.
pub fn betti_brute_force(
    vertex_count: usize,
    edges: &[(usize, usize)],
    triangles: &[(usize, usize, usize)],
) -> Result<(usize, usize)> {
    let total = vertex_count + edges.len() + triangles.len();
    if total > 600 {
        return Err(Error::SizeGuard(format!(
            "brute-force oracle capped at 600 simplices, got {total}"
        )));
    }
    // rank of d1: rows = edges, columns = vertices.
    let d1: Vec<Vec<usize>> = edges.iter().map(|&(i, j)| vec![i, j]).collect();
    let rank_d1 = gf2_rank(&d1, vertex_count);
    // rank of d2: rows = triangles, columns = edges.
    let edge_index: std::collections::HashMap<(usize, usize), usize> = edges
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| ((i.min(j), i.max(j)), k))
        .collect();
    let mut d2: Vec<Vec<usize>> = Vec::with_capacity(triangles.len());
    for &(i, j, k) in triangles {
        let mut row = Vec::with_capacity(3);
        for (a, b) in [(i, j), (i, k), (j, k)] {
            let idx = edge_index
                .get(&(a.min(b), a.max(b)))
                .ok_or_else(|| Error::Invariant(format!("triangle edge ({a},{b}) absent")))?;
            row.push(*idx);
        }
        d2.push(row);
    }
    let rank_d2 = gf2_rank(&d2, edges.len());

    let beta0 = vertex_count - rank_d1;
    let beta1 = edges.len() - rank_d1 - rank_d2;
    Ok((beta0, beta1))
}

/// Rank of a sparse 0/1 matrix over GF(2); rows given as column-index lists.
fn gf2_rank(rows: &[Vec<usize>], cols: usize) -> usize {
    let words = cols.div_ceil(64);
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for row in rows {
        let mut bits = vec![0u64; words];
        for &c in row {
            bits[c / 64] ^= 1 << (c % 64);
        }
        loop {
            let lead = match bits.iter().enumerate().find(|(_, w)| **w != 0) {
                Some((wi, w)) => wi * 64 + w.trailing_zeros() as usize,
                None => break,
            };
            if let Some(pos) = pivots.iter().position(|&p| p == lead) {
                for (b, x) in bits.iter_mut().zip(&basis[pos]) {
                    *b ^= x;
                }
            } else {
                basis.push(bits);
                pivots.push(lead);
                rank += 1;
                break;
            }
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::build_filtration;
    use crate::geometry::delaunay_with;

    #[test]
    fn oracle_triangle_boundary_and_disk() {
        // Hollow triangle: one component, one loop.
        assert_eq!(
            betti_brute_force(3, &[(0, 1), (0, 2), (1, 2)], &[]).unwrap(),
            (1, 1)
        );
        // Filled triangle: a disk.
        assert_eq!(
            betti_brute_force(3, &[(0, 1), (0, 2), (1, 2)], &[(0, 1, 2)]).unwrap(),
            (1, 0)
        );
        // Two disjoint filled triangles.
        assert_eq!(
            betti_brute_force(
                6,
                &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)],
                &[(0, 1, 2), (3, 4, 5)]
            )
            .unwrap(),
            (2, 0)
        );
    }

    #[test]
    fn oracle_size_cap() {
        let edges: Vec<(usize, usize)> = (0..700).map(|i| (i, i + 1)).collect();
        assert!(matches!(
            betti_brute_force(701, &edges, &[]),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn isolated_vertices_state() {
        let pts = [[0.0, 0.0], [100.0, 0.0], [50.0, 90.0]];
        let tri = delaunay_with(&pts, 0, 0.0).unwrap();
        let f = build_filtration(&tri).unwrap();
        let c = betti_curve(&f).unwrap();
        let s = c.state_at(1.0); // below every edge entry
        assert_eq!((s.beta0, s.beta1, s.chi), (3, 0, 3));
        assert_eq!(c.events[0].beta0, 3);
        assert_eq!(c.events[0].chi, 3);
    }

    #[test]
    fn unit_square_loop_at_mid_alpha() {
        // Side edges enter at 0.5, diagonal and triangles near sqrt(2)/2;
        // at alpha = 0.6 the square boundary is a single loop.
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let tri = delaunay_with(&pts, 0, 1e-9).unwrap();
        let f = build_filtration(&tri).unwrap();
        let c = betti_curve(&f).unwrap();
        let s = c.state_at(0.6);
        assert_eq!((s.beta0, s.beta1, s.chi), (1, 1, 0));
    }

    #[test]
    fn contractible_final_state() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let tri = delaunay_with(&pts, 0, 0.0).unwrap();
        let f = build_filtration(&tri).unwrap();
        let c = betti_curve(&f).unwrap();
        let last = *c.events.last().unwrap();
        assert_eq!((last.beta0, last.beta1, last.chi), (1, 0, 1));
        assert_eq!(c.euler_curve().last().unwrap().1, 1);
    }

    #[test]
    fn resample_consistency() {
        let pts: Vec<[f64; 2]> = (0..30)
            .map(|i| {
                let a = i as f64;
                [10.0 * (a * 0.61).sin() + a * 0.3, 10.0 * (a * 0.37).cos()]
            })
            .collect();
        let tri = delaunay_with(&pts, 3, 1e-6).unwrap();
        let f = build_filtration(&tri).unwrap();
        let c = betti_curve(&f).unwrap();
        // Resampling at exact event alphas reproduces the event states.
        let alphas: Vec<f64> = c.events.iter().map(|p| p.alpha).collect();
        let rs = c.resample(&alphas);
        for (r, want_alpha) in rs.iter().zip(&alphas) {
            let direct = c.state_at(*want_alpha);
            assert_eq!((r.beta0, r.beta1, r.chi), (direct.beta0, direct.beta1, direct.chi));
        }
        // Before the first event: all vertices, nothing else.
        let s = c.state_at(-1.0);
        assert_eq!(s.beta0, 0);
        let s0 = c.state_at(0.0);
        assert_eq!(s0.beta0, 30);
        // beta0 never increases over alpha > 0.
        let mut prev = usize::MAX;
        for p in &c.events {
            assert!(p.beta0 <= prev || p.alpha == 0.0);
            prev = p.beta0;
        }
    }

    #[test]
    fn matches_brute_force_on_small_sets() {
        for seed in 0..25u64 {
            let n = 8 + (seed as usize * 7) % 22;
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|i| {
                    let h = |k: u64| {
                        let mut z = (seed + 1)
                            .wrapping_mul(0x9e3779b97f4a7c15)
                            .wrapping_add((i as u64) << 32 | k);
                        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                        (z ^ (z >> 31)) as f64 / u64::MAX as f64
                    };
                    [100.0 * h(1), 100.0 * h(2)]
                })
                .collect();
            let tri = match delaunay_with(&pts, seed, 1e-6) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let f = build_filtration(&tri).unwrap();
            let c = betti_curve(&f).unwrap();
            for q in [0.1, 0.3, 0.5, 0.7, 0.95] {
                let alpha = q * f.max_alpha();
                let edges: Vec<(usize, usize)> = f
                    .edges
                    .iter()
                    .filter(|e| e.2 <= alpha)
                    .map(|e| (e.0, e.1))
                    .collect();
                let tris: Vec<(usize, usize, usize)> = f
                    .triangles
                    .iter()
                    .filter(|t| t.3 <= alpha)
                    .map(|t| (t.0, t.1, t.2))
                    .collect();
                let (b0, b1) = betti_brute_force(n, &edges, &tris).unwrap();
                let s = c.state_at(alpha);
                assert_eq!((s.beta0, s.beta1), (b0, b1), "seed {seed} q {q}");
            }
        }
    }
}
