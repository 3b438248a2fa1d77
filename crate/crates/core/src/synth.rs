//! Synthetic point generators: homogeneous Poisson fields and hierarchical
//! multiplicative-cascade fractals (keep b of m^2 sub-cells per level).
//!
//! Both are deterministic per (spec, seed). The RNG family is ChaCha8,
//! recorded in output metadata so golden files stay valid across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Name of the RNG algorithm embedded in sidecar metadata.
pub const RNG_NAME: &str = "chacha8";

const MAX_POINTS: f64 = 1e7;

/// Axis-aligned generation region in meters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn unit_km() -> Region {
        Region {
            x0: 0.0,
            y0: 0.0,
            x1: 1000.0,
            y1: 1000.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    fn validate(&self) -> Result<()> {
        if !(self.x0 < self.x1 && self.y0 < self.y1) {
            return Err(Error::Format("region must have positive extent".into()));
        }
        Ok(())
    }
}

/// Parameters of one generator run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenKind {
    Poisson {
        /// Intensity per square meter.
        intensity: f64,
    },
    Fractal {
        /// Recursion depth L; final point count is branching^levels.
        levels: u32,
        /// m: each active cell splits into an m x m grid.
        subdivision: u32,
        /// b: sub-cells kept per cell, 1 <= b <= m^2.
        branching: u32,
        /// Point scatter around each surviving cell center, as a fraction
        /// of the final cell size, in [0, 0.5].
        scatter: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenSpec {
    #[serde(flatten)]
    pub kind: GenKind,
    pub region: Region,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        match self.kind {
            GenKind::Poisson { intensity } => {
                if !(intensity > 0.0) {
                    return Err(Error::Format("poisson intensity must be > 0".into()));
                }
                if intensity * self.region.area() > MAX_POINTS {
                    return Err(Error::SizeGuard(format!(
                        "expected count {} exceeds {MAX_POINTS}",
                        intensity * self.region.area()
                    )));
                }
            }
            GenKind::Fractal {
                levels,
                subdivision,
                branching,
                scatter,
            } => {
                if levels < 1 {
                    return Err(Error::Format("fractal levels must be >= 1".into()));
                }
                if subdivision < 2 {
                    return Err(Error::Format("fractal subdivision must be >= 2".into()));
                }
                if branching < 1 || branching > subdivision * subdivision {
                    return Err(Error::Format(
                        "fractal branching must satisfy 1 <= b <= m^2".into(),
                    ));
                }
                if !(0.0..=0.5).contains(&scatter) {
                    return Err(Error::Format("fractal scatter must be in [0, 0.5]".into()));
                }
                if (branching as f64).powi(levels as i32) > MAX_POINTS {
                    return Err(Error::SizeGuard(format!(
                        "b^L = {} exceeds {MAX_POINTS}",
                        (branching as f64).powi(levels as i32)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs the generator described by `spec`.
pub fn generate(spec: &GenSpec) -> Result<PointSet> {
    spec.validate()?;
    match spec.kind {
        GenKind::Poisson { intensity } => gen_poisson(spec, intensity),
        GenKind::Fractal {
            levels,
            subdivision,
            branching,
            scatter,
        } => gen_fractal(spec, levels, subdivision, branching, scatter),
    }
}

fn gen_poisson(spec: &GenSpec, intensity: f64) -> Result<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mean = intensity * spec.region.area();
    let count = Poisson::new(mean)
        .map_err(|e| Error::Format(format!("poisson({mean}): {e}")))?
        .sample(&mut rng) as usize;
    let r = spec.region;
    let points = (0..count)
        .map(|_| {
            [
                rng.random_range(r.x0..r.x1),
                rng.random_range(r.y0..r.y1),
            ]
        })
        .collect();
    Ok(PointSet {
        points,
        origin: None,
        source: "synthetic:poisson".into(),
    })
}

fn gen_fractal(
    spec: &GenSpec,
    levels: u32,
    m: u32,
    b: u32,
    scatter: f64,
) -> Result<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let r = spec.region;

    // Active cells as (x, y, w, h) of their lower-left corner and size.
    let mut cells: Vec<[f64; 4]> = vec![[r.x0, r.y0, r.width(), r.height()]];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(cells.len() * b as usize);
        for cell in &cells {
            let cw = cell[2] / m as f64;
            let ch = cell[3] / m as f64;
            for idx in sample_without_replacement(&mut rng, m * m, b) {
                let i = idx % m;
                let j = idx / m;
                next.push([cell[0] + i as f64 * cw, cell[1] + j as f64 * ch, cw, ch]);
            }
        }
        cells = next;
    }

    let points = cells
        .iter()
        .map(|cell| {
            let cx = cell[0] + 0.5 * cell[2];
            let cy = cell[1] + 0.5 * cell[3];
            if scatter > 0.0 {
                [
                    cx + rng.random_range(-scatter..scatter) * cell[2],
                    cy + rng.random_range(-scatter..scatter) * cell[3],
                ]
            } else {
                [cx, cy]
            }
        })
        .collect();
    Ok(PointSet {
        points,
        origin: None,
        source: "synthetic:fractal".into(),
    })
}

/// Draws `k` distinct values from 0..n via a partial Fisher-Yates shuffle,
/// returned in draw order.
fn sample_without_replacement(rng: &mut ChaCha8Rng, n: u32, k: u32) -> Vec<u32> {
    let mut pool: Vec<u32> = (0..n).collect();
    for i in 0..k as usize {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k as usize);
    pool
}
