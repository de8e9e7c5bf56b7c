//! `mwpose` command line: `synth`, `track` and `eval`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io_eval::observations::GROUNDTRUTH_FILE;
use crate::io_eval::{
    diagnostics_csv, evaluate_ate, load_observations, read_text, read_trajectory,
    save_observations, write_text, write_trajectory_file,
};
use crate::pipeline::{run_sequence, TrackerConfig};
use crate::synthworld::{generate_sequence, SequenceConfig, TrajectoryStyle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mwpose",
    version,
    about = "Manhattan-world vanishing-point pose tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic Manhattan-world sequence into an observation directory.
    Synth(SynthArgs),
    /// Track an observation directory and write a TUM trajectory.
    Track(TrackArgs),
    /// Absolute trajectory error of an estimate against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    frames: u64,
    /// Gaussian pixel noise on every projected coordinate, pixels.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    noise_px: f64,
    /// Fraction of point observations replaced by random pixels.
    #[arg(long, default_value_t = 0.0, value_parser = fraction)]
    outlier_frac: f64,
    #[arg(long, default_value = "corridor")]
    style: TrajectoryStyle,
    #[arg(long)]
    segments_per_axis: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TrackArgs {
    #[arg(long)]
    obs_dir: PathBuf,
    /// TOML tracker configuration; omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-frame diagnostics CSV [default: <out>.diagnostics.csv].
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Write `timestamp,residual` per associated pose.
    #[arg(long)]
    residuals: Option<PathBuf>,
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("expected a finite number >= 0, got `{s}`")),
    }
}

fn fraction(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a number in [0, 1], got `{s}`")),
    }
}

/// Runs the command line with process stdout/stderr.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, A>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(&a, out),
        Command::Track(a) => track(&a, out),
        Command::Eval(a) => eval(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = SequenceConfig {
        seed: a.seed,
        frames: a.frames as usize,
        style: a.style,
        ..Default::default()
    };
    cfg.render.pixel_noise_sigma = a.noise_px;
    cfg.render.outlier_fraction = a.outlier_frac;
    if let Some(n) = a.segments_per_axis {
        cfg.segments_per_axis = n;
    }
    if let Some(n) = a.points {
        cfg.points = n;
    }
    let seq = generate_sequence(&cfg)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|source| Error::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    save_observations(&a.out_dir, &seq.intrinsics, &seq.observations())?;
    write_trajectory_file(&a.out_dir.join(GROUNDTRUTH_FILE), &seq.ground_truth())?;
    let _ = writeln!(
        out,
        "wrote {} frames to {}",
        seq.frames.len(),
        a.out_dir.display()
    );
    Ok(())
}

/// Reads a TOML tracker configuration, reporting errors with their line.
pub fn load_tracker_config(path: &Path) -> Result<TrackerConfig> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| {
        let line = e.span().map_or(1, |s| {
            text[..s.start.min(text.len())].matches('\n').count() + 1
        });
        Error::Parse {
            origin: path.display().to_string(),
            line,
            message: e.message().to_string(),
        }
    })
}

fn default_diagnostics_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".diagnostics.csv");
    PathBuf::from(name)
}

fn track(a: &TrackArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => load_tracker_config(path)?,
        None => TrackerConfig::default(),
    };
    let set = load_observations(&a.obs_dir)?;
    let result = run_sequence(&set.frames, &set.intrinsics, &cfg)?;
    write_trajectory_file(&a.out, &result.poses)?;
    let diag_path = a
        .diagnostics
        .clone()
        .unwrap_or_else(|| default_diagnostics_path(&a.out));
    write_text(&diag_path, &diagnostics_csv(&result.diagnostics))?;
    let fallback_frames = result
        .diagnostics
        .iter()
        .filter(|d| !d.fallbacks.is_empty())
        .count();
    let _ = writeln!(
        out,
        "tracked {} frames ({} with fallbacks)",
        result.poses.len(),
        fallback_frames
    );
    Ok(())
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let est = read_trajectory(&a.est)?;
    let gt = read_trajectory(&a.gt)?;
    let report = evaluate_ate(&est, &gt)?;
    if let Some(path) = &a.residuals {
        write_text(path, &report.residual_csv(&est))?;
    }
    let _ = writeln!(out, "{:.6}", report.rmse);
    Ok(())
}
