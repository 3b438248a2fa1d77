//! Parsing of raw base-station location records, city clipping,
//! deduplication and projection to a local planar frame.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Mean Earth radius used by the local equirectangular projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// One syntactically valid input row. Remaining columns are kept verbatim.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub radio: String,
    pub lon: f64,
    pub lat: f64,
    pub aux: Vec<String>,
}

/// Geodetic bounding box of a city, user-supplied via config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CityBounds {
    pub name: String,
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl CityBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.lon_min < self.lon_max && self.lat_min < self.lat_max) {
            return Err(Error::Format(format!(
                "bounds '{}': require lon_min < lon_max and lat_min < lat_max",
                self.name
            )));
        }
        Ok(())
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.lon_min && lon <= self.lon_max && lat >= self.lat_min && lat <= self.lat_max
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.lon_min + self.lon_max),
            0.5 * (self.lat_min + self.lat_max),
        )
    }
}

/// Names of the columns holding the fields we need. The default matches the
/// OpenCellID export header (lon before lat).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub lon: String,
    pub lat: String,
    pub radio: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            lon: "lon".into(),
            lat: "lat".into(),
            radio: Some("radio".into()),
        }
    }
}

/// Result of [`parse_records`]: valid records plus the malformed-row count.
#[derive(Debug)]
pub struct ParseOutcome {
    pub records: Vec<RawRecord>,
    pub skipped: usize,
}

/// Counts reported alongside every ingested point set, so raw and deduped
/// sizes are both visible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestStats {
    pub input: usize,
    pub in_bounds: usize,
    pub kept: usize,
}

/// Parses delimiter-separated text with a header row. Malformed rows
/// (unparseable or out-of-range lon/lat) are counted and skipped.
pub fn parse_records<R: Read>(reader: R, columns: &ColumnMap) -> Result<ParseOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?
        .clone();
    let index: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();

    let lon_idx = *index
        .get(columns.lon.as_str())
        .ok_or_else(|| Error::Format(format!("header missing lon column '{}'", columns.lon)))?;
    let lat_idx = *index
        .get(columns.lat.as_str())
        .ok_or_else(|| Error::Format(format!("header missing lat column '{}'", columns.lat)))?;
    let radio_idx = columns
        .radio
        .as_ref()
        .and_then(|name| index.get(name.as_str()).copied());

    let mut records = Vec::new();
    let mut skipped = 0usize;
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let lon = row.get(lon_idx).and_then(|s| s.trim().parse::<f64>().ok());
        let lat = row.get(lat_idx).and_then(|s| s.trim().parse::<f64>().ok());
        let (lon, lat) = match (lon, lat) {
            (Some(lon), Some(lat)) => (lon, lat),
            _ => {
                skipped += 1;
                continue;
            }
        };
        if !((-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat)) {
            skipped += 1;
            continue;
        }
        let radio = radio_idx
            .and_then(|i| row.get(i))
            .unwrap_or("")
            .to_string();
        let aux = row
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != lon_idx && *i != lat_idx && Some(*i) != radio_idx)
            .map(|(_, s)| s.to_string())
            .collect();
        records.push(RawRecord {
            radio,
            lon,
            lat,
            aux,
        });
    }
    Ok(ParseOutcome { records, skipped })
}

/// Local equirectangular projection about `origin` (lon0, lat0 in degrees).
/// Adequate for city-scale boxes; distortion stays below 0.5% under 100 km.
pub fn project(lon: f64, lat: f64, origin: (f64, f64)) -> Result<(f64, f64)> {
    if lat.abs() >= 85.0 || origin.1.abs() >= 85.0 {
        return Err(Error::Degenerate(format!(
            "latitude {lat} out of projection domain (|lat| < 85)"
        )));
    }
    let rad = std::f64::consts::PI / 180.0;
    let x = EARTH_RADIUS_M * (lon - origin.0) * rad * (origin.1 * rad).cos();
    let y = EARTH_RADIUS_M * (lat - origin.1) * rad;
    Ok((x, y))
}

/// Inverse of [`project`], used for consistency checks.
pub fn unproject(x: f64, y: f64, origin: (f64, f64)) -> (f64, f64) {
    let rad = std::f64::consts::PI / 180.0;
    let lon = origin.0 + x / (EARTH_RADIUS_M * rad * (origin.1 * rad).cos());
    let lat = origin.1 + y / (EARTH_RADIUS_M * rad);
    (lon, lat)
}

/// Clips records to `bounds`, projects them about the box center and drops
/// near-duplicates. The first record in file order wins a dedup tie.
pub fn clip_and_dedup(
    records: &[RawRecord],
    bounds: &CityBounds,
    tol: f64,
) -> Result<(PointSet, IngestStats)> {
    bounds.validate()?;
    if tol < 0.0 || !tol.is_finite() {
        return Err(Error::Format(format!("dedup tolerance must be >= 0, got {tol}")));
    }
    let origin = bounds.center();

    let mut projected = Vec::new();
    for r in records {
        if bounds.contains(r.lon, r.lat) {
            let (x, y) = project(r.lon, r.lat, origin)?;
            projected.push([x, y]);
        }
    }
    let in_bounds = projected.len();

    let kept = dedup_keep_first(&projected, tol);
    if kept.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no records survive clipping to '{}'",
            bounds.name
        )));
    }
    let stats = IngestStats {
        input: records.len(),
        in_bounds,
        kept: kept.len(),
    };
    Ok((
        PointSet {
            points: kept,
            origin: Some(origin),
            source: bounds.name.clone(),
        },
        stats,
    ))
}

/// Grid-hash dedup: keeps a point iff no earlier kept point lies within
/// `tol` (Euclidean). With tol = 0 only exactly coincident points collapse.
fn dedup_keep_first(points: &[[f64; 2]], tol: f64) -> Vec<[f64; 2]> {
    let cell = if tol > 0.0 { tol } else { 1.0 };
    let key = |p: &[f64; 2]| -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    };
    let mut grid: HashMap<(i64, i64), Vec<[f64; 2]>> = HashMap::new();
    let mut out = Vec::new();
    'next: for p in points {
        let (cx, cy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    for q in bucket {
                        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                        if d2 <= tol * tol {
                            continue 'next;
                        }
                    }
                }
            }
        }
        grid.entry((cx, cy)).or_default().push(*p);
        out.push(*p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const HEADER: &str =
        "radio,mcc,net,area,cell,unit,lon,lat,range,samples,changeable,created,updated,averageSignal";

    fn bounds() -> CityBounds {
        CityBounds {
            name: "seoul".into(),
            lon_min: 126.8,
            lon_max: 127.2,
            lat_min: 37.4,
            lat_max: 37.7,
        }
    }

    #[test]
    fn parses_valid_row() {
        let data = format!("{HEADER}\nLTE,450,1,1,1,0,126.98,37.57,100,3,1,0,0,0\n");
        let out = parse_records(data.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.skipped, 0);
        assert_relative_eq!(out.records[0].lon, 126.98);
        assert_relative_eq!(out.records[0].lat, 37.57);
        assert_eq!(out.records[0].radio, "LTE");
    }

    #[test]
    fn skips_malformed_rows() {
        let data = format!("{HEADER}\nLTE,450,1,1,1,0,126.98,abc,100,3,1,0,0,0\n");
        let out = parse_records(data.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(out.records.len(), 0);
        assert_eq!(out.skipped, 1);
    }

    #[test]
    fn skips_out_of_range_coordinates() {
        let data = format!("{HEADER}\nLTE,450,1,1,1,0,226.98,37.57,100,3,1,0,0,0\n");
        let out = parse_records(data.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(out.records.len(), 0);
        assert_eq!(out.skipped, 1);
    }

    #[test]
    fn empty_body_is_empty_list() {
        let data = format!("{HEADER}\n");
        let out = parse_records(data.as_bytes(), &ColumnMap::default()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.skipped, 0);
    }

    #[test]
    fn missing_lon_column_is_format_error() {
        let data = "radio,lat\nLTE,37.5\n";
        let err = parse_records(data.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, Error::Format(msg) if msg.contains("lon")));
    }

    #[test]
    fn project_origin_to_origin() {
        let (x, y) = project(126.98, 37.57, (126.98, 37.57)).unwrap();
        assert_relative_eq!(x, 0.0);
        assert_relative_eq!(y, 0.0);
    }

    #[test]
    fn project_one_degree_north() {
        let (_, y) = project(0.0, 38.0, (0.0, 37.0)).unwrap();
        assert_relative_eq!(y, 111_194.9, epsilon = 0.1);
    }

    #[test]
    fn project_one_degree_east_at_60n() {
        let (x, _) = project(1.0, 60.0, (0.0, 60.0)).unwrap();
        assert_relative_eq!(x, 55_597.46, epsilon = 0.1);
    }

    #[test]
    fn project_rejects_polar_latitudes() {
        assert!(matches!(
            project(0.0, 89.0, (0.0, 89.0)),
            Err(Error::Degenerate(_))
        ));
    }

    fn rec(lon: f64, lat: f64) -> RawRecord {
        RawRecord {
            radio: String::new(),
            lon,
            lat,
            aux: vec![],
        }
    }

    #[test]
    fn exact_duplicates_collapse() {
        let records = vec![rec(127.0, 37.5), rec(127.0, 37.5)];
        let (ps, stats) = clip_and_dedup(&records, &bounds(), 1.0).unwrap();
        assert_eq!(ps.points.len(), 1);
        assert_eq!(stats.input, 2);
        assert_eq!(stats.in_bounds, 2);
        assert_eq!(stats.kept, 1);
    }

    #[test]
    fn out_of_bounds_excluded() {
        let records = vec![rec(127.0, 37.5), rec(10.0, 50.0)];
        let (ps, stats) = clip_and_dedup(&records, &bounds(), 1.0).unwrap();
        assert_eq!(ps.points.len(), 1);
        assert_eq!(stats.in_bounds, 1);
    }

    #[test]
    fn zero_survivors_is_error() {
        let records = vec![rec(10.0, 50.0)];
        assert!(matches!(
            clip_and_dedup(&records, &bounds(), 1.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn dedup_matches_naive_oracle() {
        // 1000 pseudo-random records in a 0.1 x 0.1 degree box, tol = 0:
        // all distinct records kept, and the grid dedup agrees with the
        // naive O(n^2) oracle for a positive tolerance too.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let records: Vec<RawRecord> = (0..1000)
            .map(|_| rec(126.9 + 0.1 * next(), 37.45 + 0.1 * next()))
            .collect();
        let (ps, _) = clip_and_dedup(&records, &bounds(), 0.0).unwrap();
        assert_eq!(ps.points.len(), 1000);

        let origin = bounds().center();
        let projected: Vec<[f64; 2]> = records
            .iter()
            .map(|r| {
                let (x, y) = project(r.lon, r.lat, origin).unwrap();
                [x, y]
            })
            .collect();
        for tol in [0.0, 5.0, 50.0] {
            let got = dedup_keep_first(&projected, tol);
            let mut naive: Vec<[f64; 2]> = Vec::new();
            for p in &projected {
                if naive
                    .iter()
                    .all(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) > tol * tol)
                {
                    naive.push(*p);
                }
            }
            assert_eq!(got, naive, "tol={tol}");
        }
    }

    #[test]
    fn dedup_monotone_in_tol() {
        let records: Vec<RawRecord> = (0..50)
            .map(|i| rec(126.9 + 1e-4 * i as f64, 37.5 + 3e-5 * (i % 7) as f64))
            .collect();
        let mut prev = usize::MAX;
        for tol in [0.0, 1.0, 10.0, 100.0, 1000.0] {
            let (ps, _) = clip_and_dedup(&records, &bounds(), tol).unwrap();
            assert!(ps.points.len() <= prev);
            prev = ps.points.len();
        }
    }
}
