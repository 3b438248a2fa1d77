//! Robust planar Delaunay triangulation and circumcircle computations.
//!
//! Orientation and in-circle tests use adaptive-precision predicates (fast
//! floating-point filter with an exact fallback); everything else runs in
//! double precision. Inputs are jittered by a deterministic, index-seeded
//! perturbation before triangulating so that cocircular and collinear
//! configurations cannot reach the incremental construction.

use std::collections::HashMap;

use robust::{incircle, orient2d, Coord};

use crate::error::{Error, Result};

/// Default perturbation magnitude in meters. Far below the 1 m dedup
/// tolerance, so no topology of interest changes.
pub const DEFAULT_PERTURBATION: f64 = 1e-6;

/// Result of the exact in-circle test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirclePosition {
    Inside,
    Outside,
    On,
}

fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Exact sign of the orientation determinant: positive when `a, b, c` are
/// counter-clockwise, zero when collinear.
pub fn orientation(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

/// Exact position of `d` relative to the circle through `a, b, c`
/// (which must be counter-clockwise).
pub fn in_circle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> CirclePosition {
    let det = incircle(coord(a), coord(b), coord(c), coord(d));
    if det > 0.0 {
        CirclePosition::Inside
    } else if det < 0.0 {
        CirclePosition::Outside
    } else {
        CirclePosition::On
    }
}

/// Circumcenter and circumradius of the triangle `a, b, c`.
pub fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Result<([f64; 2], f64)> {
    if orientation(a, b, c) == 0.0 {
        return Err(Error::Degenerate(
            "circumcircle of collinear points".into(),
        ));
    }
    let bx = b[0] - a[0];
    let by = b[1] - a[1];
    let cx = c[0] - a[0];
    let cy = c[1] - a[1];
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let center = [a[0] + ux, a[1] + uy];
    let radius = (ux * ux + uy * uy).sqrt();
    Ok((center, radius))
}

/// An undirected edge of the triangulation with its incident triangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRef {
    /// Vertex indices, `v[0] < v[1]`.
    pub v: [usize; 2],
    /// Indices into `Triangulation::triangles`; hull edges have one.
    pub tris: [Option<usize>; 2],
}

/// Delaunay triangulation of a planar point set.
#[derive(Debug, Clone)]
pub struct Triangulation {
    /// The (perturbed) input points.
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Undirected edges with incident-triangle references.
    pub edges: Vec<EdgeRef>,
    /// Whether the deterministic perturbation was applied.
    pub perturbed: bool,
}

/// Triangulates with the default seed and perturbation magnitude.
pub fn delaunay(points: &[[f64; 2]]) -> Result<Triangulation> {
    delaunay_with(points, 0, DEFAULT_PERTURBATION)
}

/// Triangulates `points` after applying an index-seeded jitter of magnitude
/// `perturbation` (pass 0.0 to disable). Deterministic for a fixed seed.
pub fn delaunay_with(points: &[[f64; 2]], seed: u64, perturbation: f64) -> Result<Triangulation> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "delaunay needs >= 3 points, got {}",
            points.len()
        )));
    }
    for p in points {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::Format("non-finite coordinate".into()));
        }
    }

    let n = points.len();
    let verts: Vec<[f64; 2]> = if perturbation > 0.0 {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                [
                    p[0] + perturbation * unit_jitter(seed, i as u64, 0),
                    p[1] + perturbation * unit_jitter(seed, i as u64, 1),
                ]
            })
            .collect()
    } else {
        points.to_vec()
    };

    let mut b = Builder::new(&verts);
    for i in 0..n {
        b.insert(i)?;
    }
    b.finish(perturbation > 0.0)
}

/// Deterministic jitter in [-1, 1] from (seed, index, axis) via splitmix64.
fn unit_jitter(seed: u64, index: u64, axis: u64) -> f64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(axis.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(0x94d049bb133111eb);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    // 53 random bits mapped to [-1, 1]
    2.0 * ((z >> 11) as f64 / (1u64 << 53) as f64) - 1.0
}

/// Incremental Bowyer-Watson over a far-away enclosing super-triangle.
struct Builder {
    /// Real vertices followed by the 3 super-triangle vertices.
    verts: Vec<[f64; 2]>,
    real: usize,
    tris: Vec<[usize; 3]>,
    /// neighbors[t][i] is the triangle across the edge opposite vertex i.
    neighbors: Vec<[Option<usize>; 3]>,
    alive: Vec<bool>,
    hint: usize,
}

impl Builder {
    fn new(points: &[[f64; 2]]) -> Builder {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            min[0] = min[0].min(p[0]);
            min[1] = min[1].min(p[1]);
            max[0] = max[0].max(p[0]);
            max[1] = max[1].max(p[1]);
        }
        let cx = 0.5 * (min[0] + max[0]);
        let cy = 0.5 * (min[1] + max[1]);
        let extent = (max[0] - min[0]).max(max[1] - min[1]).max(1.0);
        // Far enough that no circumcircle of real points can reach a super
        // vertex once sub-perturbation degeneracies are jittered away.
        let r = extent * 1e12;
        let mut verts = points.to_vec();
        let real = verts.len();
        for k in 0..3 {
            let theta = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::FRAC_PI_3;
            verts.push([cx + r * theta.cos(), cy + r * theta.sin()]);
        }
        Builder {
            verts,
            real,
            tris: vec![[real, real + 1, real + 2]],
            neighbors: vec![[None; 3]],
            alive: vec![true],
            hint: 0,
        }
    }

    fn tri_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.tris[t];
        [self.verts[a], self.verts[b], self.verts[c]]
    }

    fn contains(&self, t: usize, p: [f64; 2]) -> bool {
        let [a, b, c] = self.tri_points(t);
        orientation(a, b, p) >= 0.0 && orientation(b, c, p) >= 0.0 && orientation(c, a, p) >= 0.0
    }

    /// Walks from the hint toward the triangle containing `p`, falling back
    /// to a linear scan if the walk does not settle.
    fn locate(&self, p: [f64; 2]) -> Result<usize> {
        let mut t = self.hint;
        if !self.alive[t] {
            t = (0..self.tris.len())
                .find(|&i| self.alive[i])
                .ok_or_else(|| Error::Invariant("no alive triangle".into()))?;
        }
        let max_steps = 4 * self.tris.len() + 16;
        for _ in 0..max_steps {
            let [a, b, c] = self.tris[t];
            let pa = self.verts[a];
            let pb = self.verts[b];
            let pc = self.verts[c];
            let mut moved = false;
            for (u, v, slot) in [(pa, pb, 2), (pb, pc, 0), (pc, pa, 1)] {
                if orientation(u, v, p) < 0.0 {
                    match self.neighbors[t][slot] {
                        Some(nb) => {
                            t = nb;
                            moved = true;
                            break;
                        }
                        None => {
                            return Err(Error::Invariant(
                                "walk left the super-triangle".into(),
                            ))
                        }
                    }
                }
            }
            if !moved {
                return Ok(t);
            }
        }
        // Degenerate walk cycle; exhaustive scan still finds the triangle.
        (0..self.tris.len())
            .find(|&i| self.alive[i] && self.contains(i, p))
            .ok_or_else(|| Error::Invariant("point location failed".into()))
    }

    fn insert(&mut self, vi: usize) -> Result<()> {
        let p = self.verts[vi];
        let t0 = self.locate(p)?;

        // Cavity: all triangles whose circumcircle strictly contains p,
        // grown by adjacency from the containing triangle (which joins the
        // cavity unconditionally; p lies inside it).
        let mut in_cavity: HashMap<usize, bool> = HashMap::new();
        in_cavity.insert(t0, true);
        let mut queue = vec![t0];
        let mut cavity = vec![t0];
        while let Some(t) = queue.pop() {
            for slot in 0..3 {
                if let Some(nb) = self.neighbors[t][slot] {
                    if in_cavity.contains_key(&nb) {
                        continue;
                    }
                    let [a, b, c] = self.tri_points(nb);
                    let bad = in_circle(a, b, c, p) == CirclePosition::Inside;
                    in_cavity.insert(nb, bad);
                    if bad {
                        queue.push(nb);
                        cavity.push(nb);
                    }
                }
            }
        }

        // Boundary edges of the cavity, directed CCW as seen from inside.
        let mut boundary: Vec<(usize, usize, Option<usize>)> = Vec::new();
        for &t in &cavity {
            let [a, b, c] = self.tris[t];
            for (u, v, slot) in [(b, c, 0), (c, a, 1), (a, b, 2)] {
                let nb = self.neighbors[t][slot];
                let nb_in_cavity = nb.map(|x| in_cavity.get(&x) == Some(&true)).unwrap_or(false);
                if !nb_in_cavity {
                    boundary.push((u, v, nb));
                }
            }
        }

        for &t in &cavity {
            self.alive[t] = false;
        }

        // Retriangulate the cavity as a fan around p.
        let mut edge_slot: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let first_new = self.tris.len();
        for &(u, v, outer) in &boundary {
            let t = self.tris.len();
            self.tris.push([u, v, vi]);
            self.neighbors.push([None, None, outer]);
            self.alive.push(true);
            if let Some(o) = outer {
                let [oa, ob, oc] = self.tris[o];
                for (x, y, slot) in [(ob, oc, 0), (oc, oa, 1), (oa, ob, 2)] {
                    if (x, y) == (v, u) {
                        self.neighbors[o][slot] = Some(t);
                    }
                }
            }
            // Edge (v, p) is opposite u (slot 0 holds vertices v, vi);
            // edge (p, u) is opposite v (slot 1).
            edge_slot.insert((v, vi), (t, 0));
            edge_slot.insert((vi, u), (t, 1));
        }
        for (&(x, y), &(t, slot)) in &edge_slot {
            if let Some(&(t2, _)) = edge_slot.get(&(y, x)) {
                self.neighbors[t][slot] = Some(t2);
            }
        }
        if first_new < self.tris.len() {
            self.hint = first_new;
        }
        Ok(())
    }

    fn finish(self, perturbed: bool) -> Result<Triangulation> {
        let mut triangles = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            if tri.iter().any(|&v| v >= self.real) {
                continue;
            }
            triangles.push(*tri);
        }
        if triangles.is_empty() {
            return Err(Error::Degenerate(
                "all points collinear, no triangulation".into(),
            ));
        }
        let vertices: Vec<[f64; 2]> = self.verts[..self.real].to_vec();
        for tri in &triangles {
            let [a, b, c] = *tri;
            if orientation(vertices[a], vertices[b], vertices[c]) <= 0.0 {
                return Err(Error::Invariant("non-CCW triangle produced".into()));
            }
        }

        let mut edge_map: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for (ti, tri) in triangles.iter().enumerate() {
            for (i, j) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let key = [i.min(j), i.max(j)];
                edge_map.entry(key).or_default().push(ti);
            }
        }
        let mut edges: Vec<EdgeRef> = Vec::with_capacity(edge_map.len());
        for (key, tris) in edge_map {
            if tris.len() > 2 {
                return Err(Error::Invariant(format!(
                    "edge {key:?} has {} incident triangles",
                    tris.len()
                )));
            }
            edges.push(EdgeRef {
                v: key,
                tris: [Some(tris[0]), tris.get(1).copied()],
            });
        }
        edges.sort_by_key(|e| e.v);

        Ok(Triangulation {
            vertices,
            triangles,
            edges,
            perturbed,
        })
    }
}

impl Triangulation {
    /// Euler relation audit for a connected planar triangulation:
    /// V - E + F_interior = 1.
    pub fn euler_relation(&self) -> (usize, usize, usize) {
        (self.vertices.len(), self.edges.len(), self.triangles.len())
    }

    /// Debug dump: edge list `i,j` and triangle list `i,j,k` CSVs.
    pub fn dump_csv<W: std::io::Write>(&self, edges_out: &mut W, tris_out: &mut W) -> Result<()> {
        writeln!(edges_out, "i,j")?;
        for e in &self.edges {
            writeln!(edges_out, "{},{}", e.v[0], e.v[1])?;
        }
        writeln!(tris_out, "i,j,k")?;
        for t in &self.triangles {
            writeln!(tris_out, "{},{},{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
