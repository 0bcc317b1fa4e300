//! Batch driver for the polaron numerics: parameter sweeps over a declarative
//! TOML config, CSV results and a JSON manifest per run.

pub mod config;
pub mod studies;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use polaron_core::scattering::rate_fit;
use polaron_core::Error;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{Study, StudyConfig};
use studies::{evaluate, grid_points, header, Point, Row};

pub const EXIT_OK: i32 = 0;
/// Output files could not be written.
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_ACCURACY: i32 = 4;

/// Invalid configuration or arguments; the message starts with the
/// offending field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit status for a failure raised by the numerics.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::Accuracy(_) | Error::NonConvergence { .. } => EXIT_ACCURACY,
        Error::Io(_) => EXIT_IO,
        Error::Domain(_) | Error::Contract(_) | Error::Lookup(_) | Error::Parse(_) => EXIT_USAGE,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub label: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
    pub rows: usize,
    pub wall_seconds: f64,
    #[serde(skip)]
    pub data: Vec<Row>,
}

/// Everything a finished study produced, before it touches the disk.
#[derive(Debug, Clone)]
pub struct StudyRun {
    pub study: Study,
    pub config: StudyConfig,
    pub header: Vec<&'static str>,
    pub points: Vec<PointRecord>,
    pub summary: BTreeMap<String, f64>,
    pub wall_seconds: f64,
}

impl StudyRun {
    /// RFC-4180 CSV of every successful point, in grid order.
    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for p in &self.points {
            for row in &p.data {
                w.write_record(row).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is ASCII")
    }

    /// The most severe per-point status.
    pub fn exit_code(&self) -> i32 {
        self.points.iter().map(|p| p.exit_code).max().unwrap_or(EXIT_OK)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PointRecord> {
        self.points.iter().filter(|p| p.status != "ok")
    }

    /// Parsed numeric column of the CSV output, one entry per data row.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.header.iter().position(|h| *h == name) else {
            return Vec::new();
        };
        self.points
            .iter()
            .flat_map(|p| p.data.iter())
            .map(|row| row[j].parse().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn file_stem(&self) -> String {
        self.config.output.name.clone().unwrap_or_else(|| self.study.name().to_string())
    }

    pub fn manifest(&self, csv_name: &str, csv_text: &str) -> serde_json::Value {
        let digest = Sha256::digest(csv_text.as_bytes());
        let sha: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        serde_json::json!({
            "tool": "polaron",
            "version": env!("CARGO_PKG_VERSION"),
            "study": self.study.name(),
            "subcommand": self.study.subcommand(),
            "seed": self.config.seed,
            "workers": self.config.workers,
            "config": self.config,
            "outputs": [{
                "path": csv_name,
                "rows": self.points.iter().map(|p| p.rows).sum::<usize>(),
                "sha256": sha,
            }],
            "points": self.points,
            "summary": self.summary,
            "exit_code": self.exit_code(),
            "wall_seconds": self.wall_seconds,
        })
    }

    /// Writes `<stem>.csv` and `<stem>.manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = self.file_stem();
        let csv_name = format!("{stem}.csv");
        let text = self.csv();
        let csv_path = dir.join(&csv_name);
        std::fs::write(&csv_path, &text)?;
        let manifest_path = dir.join(format!("{stem}.manifest.json"));
        let json = serde_json::to_string_pretty(&self.manifest(&csv_name, &text)).expect("manifest serializes");
        std::fs::write(&manifest_path, json + "\n")?;
        Ok((csv_path, manifest_path))
    }
}

/// Runs the configured study over its whole grid on a pool of
/// `config.workers` threads. Point failures are recorded, never fatal.
pub fn run_study(config: &StudyConfig) -> Result<StudyRun, UsageError> {
    config.validate()?;
    let study = config.study()?;
    let points = grid_points(config, study);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| UsageError(format!("workers: cannot start pool: {e}")))?;
    let start = Instant::now();
    let records: Vec<PointRecord> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, pt)| run_point(config, study, index, pt))
            .collect()
    });
    let mut run = StudyRun {
        study,
        config: config.clone(),
        header: header(study),
        points: records,
        summary: BTreeMap::new(),
        wall_seconds: 0.0,
    };
    run.summary = summarize(&run);
    run.wall_seconds = start.elapsed().as_secs_f64();
    Ok(run)
}

fn run_point(config: &StudyConfig, study: Study, index: usize, pt: &Point) -> PointRecord {
    let t = Instant::now();
    let label = pt.label(study);
    let result = evaluate(config, study, pt);
    let wall_seconds = t.elapsed().as_secs_f64();
    match result {
        Ok(data) => PointRecord {
            index,
            label,
            status: "ok",
            error: None,
            exit_code: EXIT_OK,
            rows: data.len(),
            wall_seconds,
            data,
        },
        Err(e) => {
            log::warn!("grid point {index} ({label}) failed: {e}");
            PointRecord {
                index,
                label,
                status: "failed",
                error: Some(e.to_string()),
                exit_code: exit_code(&e),
                rows: 0,
                wall_seconds,
                data: Vec::new(),
            }
        }
    }
}

/// Study-level fits that only make sense across points.
fn summarize(run: &StudyRun) -> BTreeMap<String, f64> {
    let mut s = BTreeMap::new();
    let fit = |xs: Vec<f64>, ys: Vec<f64>| -> Option<f64> {
        let pairs: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
        rate_fit(&pairs).ok().map(|(slope, _)| slope)
    };
    match run.study {
        Study::ScatteringRate => {
            if let Some(e) = fit(run.column("n"), run.column("abs_error")) {
                s.insert("error_exponent".into(), e);
            }
        }
        Study::Lhy => {
            let a: Vec<f64> = run.column("a_v");
            if a.windows(2).all(|w| w[0] == w[1]) {
                if let Some(e) = fit(run.column("cutoff"), run.column("increment").iter().map(|x| x.abs()).collect()) {
                    s.insert("increment_exponent".into(), e);
                }
            }
        }
        _ => {}
    }
    s
}

#[derive(Debug, Parser)]
#[command(name = "polaron", version, about = "Parameter sweeps for the Bose polaron numerics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Torus vs free-space scattering length under rescaling.
    Scatter(RunArgs),
    /// Low levels of the cutoff Hamiltonian against the counterterms.
    Flow(RunArgs),
    /// Low spectrum of full momentum sectors.
    Spectrum(RunArgs),
    /// Residual of the Weyl-dressing identity on small lattices.
    Weyl(RunArgs),
    /// Per-log-N slope of the second-order double sum.
    Logterm(RunArgs),
    /// Dyadic increments of the Bogoliubov lattice sum.
    Lhy(RunArgs),
    /// Term-by-term large-N energy expansion.
    Expand(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config, or a manifest written by an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Command {
    fn parts(&self) -> (Study, &RunArgs) {
        match self {
            Command::Scatter(a) => (Study::ScatteringRate, a),
            Command::Flow(a) => (Study::RenormFlow, a),
            Command::Spectrum(a) => (Study::SpectrumGaps, a),
            Command::Weyl(a) => (Study::WeylIdentity, a),
            Command::Logterm(a) => (Study::LogTerm, a),
            Command::Lhy(a) => (Study::Lhy, a),
            Command::Expand(a) => (Study::Expansion, a),
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn resolve_config(study: Study, args: &RunArgs) -> Result<StudyConfig, UsageError> {
    let mut cfg = StudyConfig::load(&args.config)?;
    match cfg.study {
        Some(s) if s != study => {
            return Err(UsageError(format!(
                "study: config names `{}` but the subcommand runs `{}`",
                s.name(),
                study.name()
            )))
        }
        _ => cfg.study = Some(study),
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Full command-line entry point; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (study, args) = cli.command.parts();
    let cfg = match resolve_config(study, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("usage error: {e}");
            return EXIT_USAGE;
        }
    };
    let run = match run_study(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("usage error: {e}");
            return EXIT_USAGE;
        }
    };
    for p in run.failures() {
        eprintln!(
            "point {} ({}) failed: {}",
            p.index,
            p.label,
            p.error.as_deref().unwrap_or("unknown error")
        );
    }
    match run.write(&cfg.output.dir) {
        Ok((csv, manifest)) => {
            println!("{}", csv.display());
            println!("{}", manifest.display());
        }
        Err(e) => {
            eprintln!("cannot write outputs to {}: {e}", cfg.output.dir.display());
            return EXIT_IO;
        }
    }
    run.exit_code()
}
