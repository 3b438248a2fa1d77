//! `bstopo` — topological descriptors of planar station deployments.
//!
//! Subcommands wire the library pipeline into reproducible runs: every
//! command is deterministic given (config, seed) and each output file has a
//! sidecar or header with the effective configuration and tool version.
//! Alphas in all outputs are circumradii in meters (not squared).

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use bstopo::filtration::build_filtration;
use bstopo::fractal::{
    extract_features, hurst_rs, series_from_points, Traversal,
};
use bstopo::geometry::{delaunay_with, DEFAULT_PERTURBATION};
use bstopo::homology::{betti_curve, BettiCurve};
use bstopo::ingest::{clip_and_dedup, parse_records};
use bstopo::points::{read_point_set, write_point_set};
use bstopo::stats::{
    empirical_pdf, euler_samples, export_overlay_csv, fit, rmse_rank, shift_for_support,
    AlphaRule, Binning, Family,
};
use bstopo::synth::{generate, GenSpec, Region, RNG_NAME};
use bstopo::{Error, Result};

use config::RunConfig;

const VERSION: &str = env!("CARGO_PKG_VERSION");
const ALPHA_CONVENTION: &str = "radius_m";

#[derive(Parser)]
#[command(name = "bstopo", version, about = "Topological descriptors of planar point deployments")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for anything randomized (generation, tie-break jitter).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw records, clip to a city box, dedup, project to meters.
    Ingest {
        /// Raw delimiter-separated input with a header row.
        #[arg(long)]
        input: PathBuf,
        /// Name of a bounds entry in the config.
        #[arg(long)]
        city: String,
        /// Output basename; writes <out>.csv and <out>.json.
        #[arg(long)]
        out: PathBuf,
        /// Dedup tolerance in meters.
        #[arg(long)]
        dedup_tol: Option<f64>,
    },
    /// Generate a synthetic point set from a preset.
    Generate {
        /// Preset name from the preset table.
        #[arg(long)]
        preset: String,
        /// Alternative preset table.
        #[arg(long)]
        presets: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Betti curves and ripple/peak features of the alpha complex.
    Betti {
        /// Point set CSV (x_m,y_m) as written by ingest/generate.
        #[arg(long)]
        points: PathBuf,
        /// Output basename; writes <out>.curve.csv and <out>.features.json.
        #[arg(long)]
        out: PathBuf,
        /// Resample the curve on this many uniform alphas instead of
        /// emitting one row per event.
        #[arg(long)]
        grid: Option<usize>,
        /// Ripple strength threshold override.
        #[arg(long)]
        min_strength: Option<f64>,
        /// Peak prominence fraction override.
        #[arg(long)]
        min_prominence: Option<f64>,
    },
    /// Rescaled-range Hurst estimate of the grid-count series.
    Hurst {
        #[arg(long)]
        points: PathBuf,
        /// Output basename; writes <out>.hurst.json and <out>.rs.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        grid_k: Option<usize>,
        /// Cell traversal: hilbert or row_major.
        #[arg(long)]
        traversal: Option<String>,
    },
    /// Euler-characteristic PDF with RMSE-ranked distribution fits.
    Eulerfit {
        #[arg(long)]
        points: PathBuf,
        /// Output basename; writes <out>.fit.json and <out>.overlay.csv.
        #[arg(long)]
        out: PathBuf,
        /// Block edge in meters.
        #[arg(long)]
        block: Option<f64>,
        /// Stride in meters (defaults to the block edge).
        #[arg(long)]
        stride: Option<f64>,
        /// Fixed evaluation alpha in meters.
        #[arg(long, conflicts_with = "quantile")]
        alpha: Option<f64>,
        /// Per-block edge-entry quantile in [0,1].
        #[arg(long)]
        quantile: Option<f64>,
        /// Fixed histogram bin count (default: Freedman-Diaconis).
        #[arg(long)]
        n_bins: Option<usize>,
    },
    /// Bundle analysis JSON files into one report.
    Report {
        /// JSON outputs of the other subcommands.
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) | Error::Format(_) | Error::SizeGuard(_) => 2,
                Error::InsufficientData(_)
                | Error::Degenerate(_)
                | Error::FitFailure { .. } => 3,
                Error::Invariant(_) => 4,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);

    match cli.command {
        Command::Ingest {
            input,
            city,
            out,
            dedup_tol,
        } => cmd_ingest(&cfg, &input, &city, &out, dedup_tol),
        Command::Generate {
            preset,
            presets,
            out,
        } => cmd_generate(&cfg, &preset, presets.as_deref(), seed, &out),
        Command::Betti {
            points,
            out,
            grid,
            min_strength,
            min_prominence,
        } => cmd_betti(&cfg, &points, &out, grid, seed, min_strength, min_prominence),
        Command::Hurst {
            points,
            out,
            grid_k,
            traversal,
        } => cmd_hurst(&cfg, &points, &out, grid_k, traversal.as_deref()),
        Command::Eulerfit {
            points,
            out,
            block,
            stride,
            alpha,
            quantile,
            n_bins,
        } => cmd_eulerfit(&cfg, &points, &out, block, stride, alpha, quantile, n_bins),
        Command::Report { inputs, out } => cmd_report(&inputs, &out),
    }
}

fn cmd_ingest(
    cfg: &RunConfig,
    input: &Path,
    city: &str,
    out: &Path,
    dedup_tol: Option<f64>,
) -> Result<()> {
    let bounds = cfg.city(city)?;
    let tol = dedup_tol.unwrap_or(cfg.ingest.dedup_tol);
    let file = File::open(input)?;
    let outcome = parse_records(file, &cfg.ingest.columns)?;
    let (ps, stats) = clip_and_dedup(&outcome.records, bounds, tol)?;
    let meta = json!({
        "command": "ingest",
        "version": VERSION,
        "alpha_convention": ALPHA_CONVENTION,
        "config": {
            "columns": cfg.ingest.columns,
            "bounds": bounds,
            "dedup_tol": tol,
        },
        "stats": stats,
        "skipped_rows": outcome.skipped,
    });
    write_point_set(&ps, out, meta)?;
    println!(
        "{}: kept {} of {} in-bounds records ({} parsed)",
        bounds.name, stats.kept, stats.in_bounds, stats.input
    );
    Ok(())
}

fn cmd_generate(
    cfg: &RunConfig,
    preset: &str,
    presets_flag: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let path = presets_flag.or(cfg.presets.as_deref());
    let table = config::load_presets(path)?;
    let entry = table.presets.get(preset).ok_or_else(|| {
        let known: Vec<&str> = table.presets.keys().map(|s| s.as_str()).collect();
        Error::Format(format!(
            "unknown preset '{preset}'; available: {}",
            known.join(", ")
        ))
    })?;
    let spec = GenSpec {
        kind: entry.kind.clone(),
        region: entry.region.unwrap_or(Region::unit_km()),
        seed,
    };
    let ps = generate(&spec)?;
    let meta = json!({
        "command": "generate",
        "version": VERSION,
        "alpha_convention": ALPHA_CONVENTION,
        "preset": preset,
        "preset_table_version": table.version,
        "spec": spec,
        "rng": RNG_NAME,
    });
    write_point_set(&ps, out, meta)?;
    println!("{preset}: {} points (seed {seed})", ps.len());
    Ok(())
}

fn cmd_betti(
    cfg: &RunConfig,
    points: &Path,
    out: &Path,
    grid: Option<usize>,
    seed: u64,
    min_strength: Option<f64>,
    min_prominence: Option<f64>,
) -> Result<()> {
    let ps = read_point_set(points)?;
    let mut params = cfg.features;
    if let Some(s) = min_strength {
        params.min_strength = s;
    }
    if let Some(p) = min_prominence {
        params.min_prominence_frac = p;
    }

    let tri = delaunay_with(&ps.points, seed, DEFAULT_PERTURBATION)?;
    let filt = build_filtration(&tri)?;
    let curve = betti_curve(&filt)?;
    let report = extract_features(&curve, &params)?;

    let curve_path = out.with_extension("curve.csv");
    let mut w = BufWriter::new(File::create(&curve_path)?);
    writeln!(
        w,
        "# bstopo {VERSION}; alpha = circumradius in meters; seed {seed}"
    )?;
    match grid {
        Some(n) => {
            if n < 2 {
                return Err(Error::Format("--grid must be >= 2".into()));
            }
            let hi = filt.max_alpha();
            let alphas: Vec<f64> =
                (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect();
            BettiCurve::export_csv(&curve.resample(&alphas), true, &mut w)?;
        }
        None => BettiCurve::export_csv(&curve.events, false, &mut w)?,
    }
    w.flush()?;

    let sidecar = json!({
        "command": "betti",
        "version": VERSION,
        "alpha_convention": ALPHA_CONVENTION,
        "seed": seed,
        "source": ps.source,
        "points": ps.len(),
        "config": { "features": params, "grid": grid },
        "report": report,
    });
    write_json(&out.with_extension("features.json"), &sidecar)?;
    println!(
        "{} ripples, {} peaks, {} pairs",
        report.ripples.len(),
        report.peaks.len(),
        report.pairing.pairs.len()
    );
    Ok(())
}

fn cmd_hurst(
    cfg: &RunConfig,
    points: &Path,
    out: &Path,
    grid_k: Option<usize>,
    traversal: Option<&str>,
) -> Result<()> {
    let ps = read_point_set(points)?;
    let grid_k = grid_k.unwrap_or(cfg.hurst.grid_k);
    let traversal = match traversal {
        Some("hilbert") => Traversal::Hilbert,
        Some("row_major") => Traversal::RowMajor,
        Some(other) => {
            return Err(Error::Format(format!(
                "unknown traversal '{other}' (hilbert or row_major)"
            )))
        }
        None => cfg.hurst.traversal,
    };
    let series = series_from_points(&ps, grid_k, traversal)?;
    let est = hurst_rs(&series)?;

    let mut w = BufWriter::new(File::create(out.with_extension("rs.csv"))?);
    writeln!(w, "# bstopo {VERSION}; R/S ladder, grid_k {grid_k}")?;
    bstopo::fractal::export_rs_csv(&est, &mut w)?;
    w.flush()?;

    let sidecar = json!({
        "command": "hurst",
        "version": VERSION,
        "source": ps.source,
        "points": ps.len(),
        "config": { "grid_k": grid_k, "traversal": traversal },
        "estimate": est,
    });
    write_json(&out.with_extension("hurst.json"), &sidecar)?;
    println!("H = {:.3} (r2 {:.3})", est.h, est.r2);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eulerfit(
    cfg: &RunConfig,
    points: &Path,
    out: &Path,
    block: Option<f64>,
    stride: Option<f64>,
    alpha: Option<f64>,
    quantile: Option<f64>,
    n_bins: Option<usize>,
) -> Result<()> {
    let ps = read_point_set(points)?;
    let block = block.unwrap_or(cfg.eulerfit.block);
    let stride = stride.or(cfg.eulerfit.stride).unwrap_or(block);
    let rule = match (alpha, quantile) {
        (Some(a), _) => AlphaRule::Fixed { alpha: a },
        (None, Some(q)) => AlphaRule::EdgeQuantile { q },
        (None, None) => cfg.eulerfit.alpha_rule,
    };
    let binning = match n_bins {
        Some(n) => Binning::Fixed { n_bins: n },
        None => cfg.eulerfit.binning,
    };

    let chis = euler_samples(&ps, block, stride, rule)?;
    let raw: Vec<f64> = chis.iter().map(|&c| c as f64).collect();
    let (shifted, shift) = shift_for_support(&raw);
    let mut epdf = empirical_pdf(&shifted, binning)?;
    epdf.shift_applied = shift;

    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for family in Family::ALL {
        match fit(family, &shifted, shift) {
            Ok(f) => fits.push(f),
            Err(e) => failures.push(json!({
                "family": family.name(),
                "error": e.to_string(),
            })),
        }
    }
    let ranked = rmse_rank(&epdf, &fits)?;

    let mut w = BufWriter::new(File::create(out.with_extension("overlay.csv"))?);
    export_overlay_csv(&epdf, &ranked, &mut w)?;
    w.flush()?;

    let sidecar = json!({
        "command": "eulerfit",
        "version": VERSION,
        "alpha_convention": ALPHA_CONVENTION,
        "source": ps.source,
        "points": ps.len(),
        "config": {
            "block": block,
            "stride": stride,
            "alpha_rule": rule,
            "binning": binning,
        },
        "sample_count": chis.len(),
        "shift_applied": shift,
        "pdf": epdf,
        "ranked": ranked,
        "failed": failures,
    });
    write_json(&out.with_extension("fit.json"), &sidecar)?;
    let best = &ranked[0];
    println!(
        "{} blocks; best fit {} (rmse {:.4})",
        chis.len(),
        best.family.name(),
        best.rmse.unwrap()
    );
    Ok(())
}

fn cmd_report(inputs: &[PathBuf], out: &Path) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Format("report needs at least one input file".into()));
    }
    let mut entries = serde_json::Map::new();
    for path in inputs {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let key = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        entries.insert(key, value);
    }
    let report = json!({
        "command": "report",
        "version": VERSION,
        "alpha_convention": ALPHA_CONVENTION,
        "entries": entries,
    });
    write_json(out, &report)?;
    println!("bundled {} inputs", inputs.len());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Format(format!("serialize {}: {e}", path.display())))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
