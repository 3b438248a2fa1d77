//! Alpha-complex filtration over a Delaunay triangulation.
//!
//! Entry values are radii (lengths in meters): a triangle enters at its
//! circumradius; an edge enters at half its length when its diametral circle
//! is empty (Gabriel edge) and otherwise at the smallest circumradius of its
//! incident triangles; vertices enter at 0.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{circumcircle, Triangulation};

/// A simplex identified by its sorted vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Simplex {
    Vertex(usize),
    Edge(usize, usize),
    Triangle(usize, usize, usize),
}

impl Simplex {
    pub fn dim(&self) -> usize {
        match self {
            Simplex::Vertex(_) => 0,
            Simplex::Edge(..) => 1,
            Simplex::Triangle(..) => 2,
        }
    }

    fn lex_key(&self) -> [usize; 3] {
        match *self {
            Simplex::Vertex(a) => [a, usize::MAX, usize::MAX],
            Simplex::Edge(a, b) => [a, b, usize::MAX],
            Simplex::Triangle(a, b, c) => [a, b, c],
        }
    }
}

/// One insertion event of the filtration.
#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub alpha: f64,
    pub simplex: Simplex,
}

/// The alpha-complex filtration: every simplex of the Delaunay
/// triangulation together with its entry value, plus the sorted event list.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub vertex_count: usize,
    /// (i, j, alpha_entry), i < j.
    pub edges: Vec<(usize, usize, f64)>,
    /// (i, j, k, alpha_entry), sorted indices.
    pub triangles: Vec<(usize, usize, usize, f64)>,
    /// All events sorted by (alpha, dimension, lexicographic indices).
    pub events: Vec<Event>,
}

/// Computes entry values for every simplex of `tri`.
pub fn build_filtration(tri: &Triangulation) -> Result<Filtration> {
    let pts = &tri.vertices;

    let mut tri_alpha: Vec<f64> = Vec::with_capacity(tri.triangles.len());
    for t in &tri.triangles {
        let (_, r) = circumcircle(pts[t[0]], pts[t[1]], pts[t[2]])?;
        tri_alpha.push(r);
    }

    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(tri.edges.len());
    for e in &tri.edges {
        let [i, j] = e.v;
        let a = pts[i];
        let b = pts[j];
        let half_len = 0.5 * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];

        // Gabriel test: within a Delaunay triangulation it suffices to test
        // the opposite vertices of the incident triangles.
        let mut gabriel = true;
        let mut min_incident = f64::INFINITY;
        for tref in e.tris.iter().flatten() {
            min_incident = min_incident.min(tri_alpha[*tref]);
            let opp = tri.triangles[*tref]
                .iter()
                .copied()
                .find(|v| *v != i && *v != j)
                .ok_or_else(|| Error::Invariant("edge/triangle incidence broken".into()))?;
            let p = pts[opp];
            let d2 = (p[0] - mid[0]).powi(2) + (p[1] - mid[1]).powi(2);
            if d2 < half_len * half_len {
                gabriel = false;
            }
        }
        let alpha = if gabriel { half_len } else { min_incident };
        edges.push((i, j, alpha));
    }

    // Filtration monotonicity cleanup against floating-point slack: a
    // triangle may not precede any of its edges.
    let mut triangles: Vec<(usize, usize, usize, f64)> = Vec::with_capacity(tri.triangles.len());
    let edge_alpha: std::collections::HashMap<(usize, usize), f64> = edges
        .iter()
        .map(|&(i, j, a)| ((i, j), a))
        .collect();
    for (ti, t) in tri.triangles.iter().enumerate() {
        let mut v = *t;
        v.sort_unstable();
        let mut alpha = tri_alpha[ti];
        for (a, b) in [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])] {
            alpha = alpha.max(edge_alpha[&(a, b)]);
        }
        triangles.push((v[0], v[1], v[2], alpha));
    }

    let mut events: Vec<Event> = Vec::with_capacity(pts.len() + edges.len() + triangles.len());
    for i in 0..pts.len() {
        events.push(Event {
            alpha: 0.0,
            simplex: Simplex::Vertex(i),
        });
    }
    for &(i, j, a) in &edges {
        events.push(Event {
            alpha: a,
            simplex: Simplex::Edge(i, j),
        });
    }
    for &(i, j, k, a) in &triangles {
        events.push(Event {
            alpha: a,
            simplex: Simplex::Triangle(i, j, k),
        });
    }
    events.sort_by(|x, y| {
        x.alpha
            .partial_cmp(&y.alpha)
            .unwrap_or(Ordering::Equal)
            .then(x.simplex.dim().cmp(&y.simplex.dim()))
            .then(x.simplex.lex_key().cmp(&y.simplex.lex_key()))
    });

    let f = Filtration {
        vertex_count: pts.len(),
        edges,
        triangles,
        events,
    };
    f.check_monotone()?;
    Ok(f)
}

impl Filtration {
    /// Every face must enter no later than its cofaces.
    fn check_monotone(&self) -> Result<()> {
        let edge_alpha: std::collections::HashMap<(usize, usize), f64> = self
            .edges
            .iter()
            .map(|&(i, j, a)| ((i, j), a))
            .collect();
        for &(i, j, k, a) in &self.triangles {
            for (x, y) in [(i, j), (i, k), (j, k)] {
                let ea = edge_alpha
                    .get(&(x, y))
                    .ok_or_else(|| Error::Invariant(format!("triangle edge ({x},{y}) missing")))?;
                if *ea > a {
                    return Err(Error::Invariant(format!(
                        "edge ({x},{y}) enters after its triangle: {ea} > {a}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Simplex counts (V, E, F) of the complex at scale `alpha`.
    pub fn complex_at(&self, alpha: f64) -> (usize, usize, usize) {
        if alpha < 0.0 {
            return (0, 0, 0);
        }
        let e = self.edges.iter().filter(|&&(_, _, a)| a <= alpha).count();
        let f = self
            .triangles
            .iter()
            .filter(|&&(_, _, _, a)| a <= alpha)
            .count();
        (self.vertex_count, e, f)
    }

    /// Largest entry value in the filtration.
    pub fn max_alpha(&self) -> f64 {
        self.events.last().map(|e| e.alpha).unwrap_or(0.0)
    }

    /// Entry values of all edges, ascending.
    pub fn edge_alphas(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.edges.iter().map(|e| e.2).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Interchange CSV `dim,v0,v1,v2,alpha_entry` in event order
    /// (v1/v2 empty for lower-dimensional simplices).
    pub fn export_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "dim,v0,v1,v2,alpha_entry")?;
        for ev in &self.events {
            match ev.simplex {
                Simplex::Vertex(a) => writeln!(out, "0,{a},,,{}", ev.alpha)?,
                Simplex::Edge(a, b) => writeln!(out, "1,{a},{b},,{}", ev.alpha)?,
                Simplex::Triangle(a, b, c) => writeln!(out, "2,{a},{b},{c},{}", ev.alpha)?,
            }
        }
        Ok(())
    }
}
