//! Euler-characteristic sampling, empirical PDFs, and RMSE-ranked
//! distribution fits.
//!
//! Chi samples can be zero or negative, while the heavy-tailed candidate
//! families need positive support, so every fit runs on samples shifted by
//! `1 - min` (see [`shift_for_support`]); the shift is recorded in all
//! downstream results rather than discarding samples.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::build_filtration;
use crate::geometry::delaunay_with;
use crate::points::PointSet;

/// How to pick the evaluation alpha for each spatial block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum AlphaRule {
    /// One global alpha (meters) for every block.
    Fixed { alpha: f64 },
    /// Per-block quantile of the block's edge entry values. Normalizes for
    /// density differences between blocks; a fixed alpha would leave sparse
    /// blocks as all-vertices complexes.
    EdgeQuantile { q: f64 },
}

impl Default for AlphaRule {
    fn default() -> Self {
        AlphaRule::EdgeQuantile { q: 0.5 }
    }
}

const MIN_BLOCK_POINTS: usize = 10;

/// Slides a `block`x`block` window over the point set with the given stride
/// and evaluates the Euler characteristic of each block's alpha complex at
/// the alpha chosen by `rule`. Blocks with fewer than 10 points are skipped.
pub fn euler_samples(
    ps: &PointSet,
    block: f64,
    stride: f64,
    rule: AlphaRule,
) -> Result<Vec<i64>> {
    if !(block > 0.0) || !(stride > 0.0) {
        return Err(Error::Format(format!(
            "block and stride must be positive, got {block} / {stride}"
        )));
    }
    if let AlphaRule::EdgeQuantile { q } = rule {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Format(format!("quantile out of [0,1]: {q}")));
        }
    }
    let bb = ps
        .bounding_box()
        .ok_or_else(|| Error::InsufficientData("empty point set".into()))?;
    let [min_x, min_y, max_x, max_y] = bb;

    let mut chis = Vec::new();
    let mut iy = 0u64;
    let mut y0 = min_y;
    loop {
        let mut ix = 0u64;
        let mut x0 = min_x;
        loop {
            let points: Vec<[f64; 2]> = ps
                .points
                .iter()
                .filter(|p| {
                    p[0] >= x0 && p[0] < x0 + block && p[1] >= y0 && p[1] < y0 + block
                })
                .cloned()
                .collect();
            if points.len() >= MIN_BLOCK_POINTS {
                let seed = (iy << 32) | ix;
                chis.push(block_chi(&points, seed, rule)?);
            }
            ix += 1;
            x0 = min_x + ix as f64 * stride;
            if x0 + block > max_x + 1e-9 {
                break;
            }
        }
        iy += 1;
        y0 = min_y + iy as f64 * stride;
        if y0 + block > max_y + 1e-9 {
            break;
        }
    }
    if chis.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no block of {block} m contains >= {MIN_BLOCK_POINTS} points"
        )));
    }
    Ok(chis)
}

fn block_chi(points: &[[f64; 2]], seed: u64, rule: AlphaRule) -> Result<i64> {
    let tri = delaunay_with(points, seed, crate::geometry::DEFAULT_PERTURBATION)?;
    let filt = build_filtration(&tri)?;
    let alpha = match rule {
        AlphaRule::Fixed { alpha } => alpha,
        AlphaRule::EdgeQuantile { q } => {
            let mut edges = filt.edge_alphas();
            edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if edges.is_empty() {
                0.0
            } else {
                edges[((edges.len() - 1) as f64 * q).round() as usize]
            }
        }
    };
    let (v, e, f) = filt.complex_at(alpha);
    Ok(v as i64 - e as i64 + f as i64)
}

/// Histogram binning rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "binning", rename_all = "snake_case")]
pub enum Binning {
    /// Freedman-Diaconis bin width, 2*IQR/n^(1/3).
    FreedmanDiaconis,
    Fixed { n_bins: usize },
}

impl Default for Binning {
    fn default() -> Self {
        Binning::FreedmanDiaconis
    }
}

/// Normalized histogram of (possibly shifted) samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalPdf {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub sample_count: usize,
    pub shift_applied: f64,
}

impl EmpiricalPdf {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }
}

/// Builds a normalized histogram. Needs at least 30 samples.
pub fn empirical_pdf(samples: &[f64], binning: Binning) -> Result<EmpiricalPdf> {
    if samples.len() < 30 {
        return Err(Error::InsufficientData(format!(
            "empirical pdf needs >= 30 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (lo, hi) = (sorted[0], sorted[n - 1]);

    let n_bins = match binning {
        Binning::Fixed { n_bins } => {
            if n_bins == 0 {
                return Err(Error::Format("n_bins must be positive".into()));
            }
            n_bins
        }
        Binning::FreedmanDiaconis => {
            let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
            let width = 2.0 * iqr / (n as f64).cbrt();
            if width > 0.0 && hi > lo {
                ((hi - lo) / width).ceil() as usize
            } else {
                1
            }
        }
    };
    // Degenerate all-equal input still gets one unit-wide occupied bin.
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();

    let mut counts = vec![0usize; n_bins];
    for &s in samples {
        let mut b = ((s - lo) / width) as usize;
        if b >= n_bins {
            b = n_bins - 1; // right edge of the last bin is inclusive
        }
        counts[b] += 1;
    }
    let densities: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (n as f64 * width))
        .collect();
    Ok(EmpiricalPdf {
        bin_edges: edges,
        densities,
        sample_count: n,
        shift_applied: 0.0,
    })
}

/// Interpolated quantile of a pre-sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Shifts samples to positive support: shift = 1 - min when min <= 0, else 0.
/// Preserves ordering and spacing exactly.
pub fn shift_for_support(samples: &[f64]) -> (Vec<f64>, f64) {
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = if min <= 0.0 { 1.0 - min } else { 0.0 };
    (samples.iter().map(|&s| s + shift).collect(), shift)
}

/// Candidate distribution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LogNormal,
    Weibull,
    GeneralizedPareto,
    Poisson,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::LogNormal,
        Family::Weibull,
        Family::GeneralizedPareto,
        Family::Poisson,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::LogNormal => "log-normal",
            Family::Weibull => "weibull",
            Family::GeneralizedPareto => "generalized-pareto",
            Family::Poisson => "poisson",
        }
    }
}

/// Fitted parameters, one variant per family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyParams {
    LogNormal { mu: f64, sigma: f64 },
    Weibull { shape: f64, scale: f64 },
    /// Location is 0 after the support shift.
    GeneralizedPareto { xi: f64, sigma: f64 },
    Poisson { rate: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub params: FamilyParams,
    /// Filled in by `rmse_rank`; density units.
    pub rmse: Option<f64>,
    pub shift_applied: f64,
    /// Set when a guard kicked in (e.g. all-equal samples).
    pub degenerate: bool,
}

const SIGMA_MIN: f64 = 1e-6;
const WEIBULL_MAX_ITER: usize = 200;

/// Fits one family to samples that are already shifted to positive support.
pub fn fit(family: Family, shifted: &[f64], shift: f64) -> Result<FitResult> {
    if shifted.is_empty() {
        return Err(Error::InsufficientData("no samples to fit".into()));
    }
    if shifted.iter().any(|&x| x <= 0.0) {
        return Err(Error::Format(
            "fit requires positive samples; apply shift_for_support first".into(),
        ));
    }
    let mut degenerate = false;
    let params = match family {
        Family::LogNormal => {
            let logs: Vec<f64> = shifted.iter().map(|x| x.ln()).collect();
            let mu = mean(&logs);
            let mut sigma = std_pop(&logs, mu);
            if sigma < SIGMA_MIN {
                sigma = SIGMA_MIN;
                degenerate = true;
            }
            FamilyParams::LogNormal { mu, sigma }
        }
        Family::Weibull => {
            let (shape, scale, flagged) = fit_weibull(shifted)?;
            degenerate = flagged;
            FamilyParams::Weibull { shape, scale }
        }
        Family::GeneralizedPareto => {
            let (xi, sigma) = fit_gpd_pwm(shifted)?;
            FamilyParams::GeneralizedPareto { xi, sigma }
        }
        Family::Poisson => {
            let rate = mean(&shifted.iter().map(|x| x.round()).collect::<Vec<_>>());
            if !(rate > 0.0) {
                return Err(Error::FitFailure {
                    family: family.name().into(),
                    reason: format!("nonpositive rate {rate}"),
                });
            }
            FamilyParams::Poisson { rate }
        }
    };
    Ok(FitResult {
        family,
        params,
        rmse: None,
        shift_applied: shift,
        degenerate,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_pop(xs: &[f64], mean: f64) -> f64 {
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Weibull MLE: the shape k solves
///   sum(x^k ln x)/sum(x^k) - 1/k - mean(ln x) = 0,
/// which is monotone increasing in k; bisection after bracket expansion.
fn fit_weibull(xs: &[f64]) -> Result<(f64, f64, bool)> {
    let mean_ln = mean(&xs.iter().map(|x| x.ln()).collect::<Vec<_>>());
    let g = |k: f64| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for &x in xs {
            let xk = x.powf(k);
            num += xk * x.ln();
            den += xk;
        }
        num / den - 1.0 / k - mean_ln
    };

    let fail = |reason: String| Error::FitFailure {
        family: "weibull".into(),
        reason,
    };
    let mut iter = 0usize;
    let mut lo = 1e-3;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        iter += 1;
        if iter >= WEIBULL_MAX_ITER || !hi.is_finite() {
            return Err(fail(format!("no bracket above k={hi}")));
        }
    }
    while g(lo) > 0.0 {
        lo *= 0.5;
        iter += 1;
        if iter >= WEIBULL_MAX_ITER || lo == 0.0 {
            return Err(fail(format!("no bracket below k={lo}")));
        }
    }
    let mut k;
    loop {
        iter += 1;
        if iter >= WEIBULL_MAX_ITER {
            return Err(fail(format!(
                "bisection not converged after {WEIBULL_MAX_ITER} iterations"
            )));
        }
        k = 0.5 * (lo + hi);
        let gk = g(k);
        if !gk.is_finite() {
            return Err(fail(format!("objective not finite at k={k}")));
        }
        if hi - lo < 1e-10 * k.max(1.0) {
            break;
        }
        if gk > 0.0 {
            hi = k;
        } else {
            lo = k;
        }
    }
    let scale = (xs.iter().map(|x| x.powf(k)).sum::<f64>() / xs.len() as f64).powf(1.0 / k);
    // All-equal samples push k toward the bracket ceiling; flag rather than hide.
    let degenerate = std_pop(xs, mean(xs)) < SIGMA_MIN;
    Ok((k, scale, degenerate))
}

/// Generalized Pareto via probability-weighted moments:
///   a0 = mean, a1 = (1/n) sum x_(i) (n-i)/(n-1) over ascending order stats,
///   xi = 2 - a0/(a0 - 2 a1), sigma = 2 a0 a1/(a0 - 2 a1).
fn fit_gpd_pwm(xs: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "generalized-pareto fit needs >= 2 samples".into(),
        ));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let a0 = mean(&sorted);
    let mut a1 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        // i is 0-based; the order statistic index is i+1.
        a1 += x * (n - (i + 1)) as f64 / (n - 1) as f64;
    }
    a1 /= n as f64;
    let denom = a0 - 2.0 * a1;
    if !(denom > 0.0) {
        return Err(Error::FitFailure {
            family: "generalized-pareto".into(),
            reason: format!("pwm denominator a0 - 2 a1 = {denom} not positive"),
        });
    }
    let xi = 2.0 - a0 / denom;
    let sigma = 2.0 * a0 * a1 / denom;
    if !(sigma > 0.0) {
        return Err(Error::FitFailure {
            family: "generalized-pareto".into(),
            reason: format!("nonpositive scale {sigma}"),
        });
    }
    Ok((xi, sigma))
}

/// Density (continuous families) or pmf at round(x) (Poisson) at a point of
/// the *shifted* axis. Outside the support the density is 0.
pub fn pdf_eval(fit: &FitResult, x: f64) -> f64 {
    match fit.params {
        FamilyParams::LogNormal { mu, sigma } => {
            if x <= 0.0 {
                return 0.0;
            }
            let z = (x.ln() - mu) / sigma;
            (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
        }
        FamilyParams::Weibull { shape, scale } => {
            if x < 0.0 {
                return 0.0;
            }
            if x == 0.0 {
                // k = 1 reduces to the exponential with density 1/lambda at 0;
                // k < 1 diverges, k > 1 vanishes.
                return if shape == 1.0 { 1.0 / scale } else { 0.0 };
            }
            let t = x / scale;
            (shape / scale) * t.powf(shape - 1.0) * (-t.powf(shape)).exp()
        }
        FamilyParams::GeneralizedPareto { xi, sigma } => {
            if x < 0.0 {
                return 0.0;
            }
            if xi.abs() < 1e-9 {
                return (-x / sigma).exp() / sigma;
            }
            let t = 1.0 + xi * x / sigma;
            if t <= 0.0 {
                return 0.0; // past the upper endpoint for xi < 0
            }
            t.powf(-1.0 / xi - 1.0) / sigma
        }
        FamilyParams::Poisson { rate } => {
            let k = x.round();
            if k < 0.0 {
                return 0.0;
            }
            (k * rate.ln() - rate - ln_factorial(k as u64)).exp()
        }
    }
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Evaluates each fit against the empirical PDF at its bin centers and
/// returns the fits sorted ascending by RMSE. The Poisson pmf is divided by
/// the bin width here so its units match the continuous densities.
pub fn rmse_rank(epdf: &EmpiricalPdf, fits: &[FitResult]) -> Result<Vec<FitResult>> {
    if fits.is_empty() {
        return Err(Error::InsufficientData("no successful fits to rank".into()));
    }
    let centers = epdf.bin_centers();
    let width = epdf.bin_width();
    let mut ranked: Vec<FitResult> = fits
        .iter()
        .map(|f| {
            let mut sq = 0.0;
            for (&x, &d) in centers.iter().zip(&epdf.densities) {
                let mut fitted = pdf_eval(f, x);
                if f.family == Family::Poisson {
                    fitted /= width;
                }
                sq += (d - fitted).powi(2);
            }
            let mut out = f.clone();
            out.rmse = Some((sq / centers.len() as f64).sqrt());
            out
        })
        .collect();
    ranked.sort_by(|a, b| a.rmse.unwrap().partial_cmp(&b.rmse.unwrap()).unwrap());
    Ok(ranked)
}

/// Overlay table for external plotting:
/// `x,emp_density,lognormal,weibull,genpareto,poisson` per bin center.
/// Absent families (failed fits) get empty cells.
pub fn export_overlay_csv<W: Write>(
    epdf: &EmpiricalPdf,
    fits: &[FitResult],
    out: &mut W,
) -> Result<()> {
    writeln!(out, "x,emp_density,lognormal,weibull,genpareto,poisson")?;
    let width = epdf.bin_width();
    let centers = epdf.bin_centers();
    for (&x, &d) in centers.iter().zip(&epdf.densities) {
        write!(out, "{x},{d}")?;
        for family in Family::ALL {
            match fits.iter().find(|f| f.family == family) {
                Some(f) => {
                    let mut v = pdf_eval(f, x);
                    if family == Family::Poisson {
                        v /= width;
                    }
                    write!(out, ",{v}")?;
                }
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
