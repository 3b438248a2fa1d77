//! Planar point clouds with provenance metadata, plus their on-disk format:
//! a CSV of projected coordinates (`x_m,y_m`) and a JSON sidecar carrying
//! origin, source and count.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A planar point cloud in a local metric frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    /// Coordinates in meters, local planar frame.
    pub points: Vec<[f64; 2]>,
    /// Geodetic origin (lon, lat in degrees) of the local frame, when the
    /// set came from geodetic data. Synthetic sets have no origin.
    pub origin: Option<(f64, f64)>,
    /// Free-form provenance tag.
    pub source: String,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Axis-aligned bounding box as (min_x, min_y, max_x, max_y).
    pub fn bounding_box(&self) -> Option<[f64; 4]> {
        let mut it = self.points.iter();
        let first = it.next()?;
        let mut bb = [first[0], first[1], first[0], first[1]];
        for p in it {
            bb[0] = bb[0].min(p[0]);
            bb[1] = bb[1].min(p[1]);
            bb[2] = bb[2].max(p[0]);
            bb[3] = bb[3].max(p[1]);
        }
        Some(bb)
    }
}

/// JSON sidecar written next to every point CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub origin: Option<(f64, f64)>,
    pub source: String,
    pub count: usize,
    /// Producer-specific metadata (generator spec, ingest stats, effective
    /// config). Kept opaque so every producer can embed what it knows.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

/// Writes `<base>.csv` with header `x_m,y_m` and `<base>.json` with the
/// sidecar. Float formatting is the shortest round-trip representation, so
/// identical inputs give byte-identical files.
pub fn write_point_set(ps: &PointSet, base: &Path, meta: serde_json::Value) -> Result<()> {
    let csv_path = base.with_extension("csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(w, "x_m,y_m")?;
    for p in &ps.points {
        writeln!(w, "{},{}", p[0], p[1])?;
    }
    w.flush()?;

    let sidecar = Sidecar {
        origin: ps.origin,
        source: ps.source.clone(),
        count: ps.points.len(),
        meta,
    };
    let json_path = base.with_extension("json");
    let mut jw = std::io::BufWriter::new(std::fs::File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut jw, &sidecar)
        .map_err(|e| Error::Format(format!("sidecar serialization: {e}")))?;
    jw.write_all(b"\n")?;
    Ok(())
}

/// Reads a point CSV (and its sidecar when present) written by
/// [`write_point_set`].
pub fn read_point_set(csv_path: &Path) -> Result<PointSet> {
    let file = std::fs::File::open(csv_path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty point file".into()))??;
    if header.trim() != "x_m,y_m" {
        return Err(Error::Format(format!(
            "expected header 'x_m,y_m', got '{}'",
            header.trim()
        )));
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let (xs, ys) = match (it.next(), it.next()) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::Format(format!("row {}: expected 2 columns", i + 2))),
        };
        let x: f64 = xs
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {}: bad x '{}'", i + 2, xs)))?;
        let y: f64 = ys
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {}: bad y '{}'", i + 2, ys)))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Format(format!("row {}: non-finite coordinate", i + 2)));
        }
        points.push([x, y]);
    }

    let sidecar_path = csv_path.with_extension("json");
    let (origin, source) = if sidecar_path.exists() {
        let sc: Sidecar = serde_json::from_reader(std::fs::File::open(&sidecar_path)?)
            .map_err(|e| Error::Format(format!("sidecar parse: {e}")))?;
        (sc.origin, sc.source)
    } else {
        (None, csv_path.display().to_string())
    };

    Ok(PointSet {
        points,
        origin,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("demo.points");
        let ps = PointSet {
            points: vec![[0.0, 1.5], [-2.25, 3.0]],
            origin: Some((126.98, 37.57)),
            source: "test".into(),
        };
        write_point_set(&ps, &base, serde_json::Value::Null).unwrap();
        let back = read_point_set(&base.with_extension("csv")).unwrap();
        assert_eq!(back, ps);
    }

    #[test]
    fn rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_point_set(&p), Err(Error::Format(_))));
    }
}
