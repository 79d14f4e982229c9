// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line frontend.
//!
//! CSV files are comma separated with a header row and `.` decimals. Numbers
//! are written in shortest round-trip form, so outputs are byte-stable and
//! re-reading them recovers the same values.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::error::TvError;
use crate::experiment::{run_bench, run_experiment, BenchConfig, ExperimentConfig};
use crate::monitor::{run_monitor, Baseline, MonitorConfig};
use crate::path::compute_merge_path;
use crate::select::{select_lambda, SelectorConfig, DEFAULT_Q};
use crate::sim::{add_noise, default_steps, generate_signal, NoiseModel};
use crate::tv::{solution_at_lambda, WindowSamples};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ALERT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}, line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] TvError),
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "tvwin",
    version,
    about = "Total-variation denoising and noise variance monitoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Restore a t,y series at a fixed or automatically chosen lambda.
    Denoise(DenoiseArgs),
    /// Sliding-window noise estimation with shift alerts (exit code 2 on alert).
    Monitor(MonitorArgs),
    /// Write a simulated noisy trace as t,y,u_net.
    Trace(TraceArgs),
    /// Run the simulation study and write rows.csv and summary.json.
    Simulate(SimulateArgs),
    /// Time sliding updates and write bench.csv and bench.json.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    input: PathBuf,
    #[arg(long, conflicts_with = "auto", required_unless_present = "auto")]
    lambda: Option<f64>,
    #[arg(long)]
    auto: bool,
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    input: PathBuf,
    #[arg(long)]
    window: usize,
    #[arg(long, conflicts_with = "warmup", required_unless_present = "warmup")]
    baseline: Option<f64>,
    /// Calibrate the baseline as the median over the first k windows.
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, default_value_t = 1.2)]
    threshold: f64,
    #[arg(long, default_value_t = 5)]
    consecutive: usize,
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Reference noise model 1 to 4.
    #[arg(long, default_value_t = 1)]
    model: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Window length; repeat for a sweep.
    #[arg(long = "window")]
    windows: Vec<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "window")]
    windows: Vec<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Denoise(a) => denoise(a),
        Command::Monitor(a) => monitor(a),
        Command::Trace(a) => trace(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads the `t` and `y` columns of a headed CSV file.
pub fn read_series(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_series(&text, path)
}

fn parse_series(text: &str, path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let parse_err = |line: u64, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))
    };
    let (ti, yi) = (col("t")?, col("y")?);
    let (mut t, mut y, mut lines) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> CliResult<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("column `{name}`: invalid number `{raw}`")))
        };
        t.push(field(ti, "t")?);
        y.push(field(yi, "y")?);
        lines.push(line);
    }
    if let Some(k) = t.windows(2).position(|p| !(p[1] > p[0])) {
        return Err(parse_err(
            lines[k + 1],
            "timestamps must be strictly increasing".into(),
        ));
    }
    Ok((t, y))
}

fn open_sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(io_err(p))?)),
        None => Box::new(io::BufWriter::new(io::stdout())),
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    let mut sink = open_sink(out)?;
    let label = out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    sink.write_all(text.as_bytes())
        .and_then(|_| sink.flush())
        .map_err(io_err(&label))
}

fn denoise(a: DenoiseArgs) -> CliResult<i32> {
    let (t, y) = read_series(&a.input)?;
    let w = WindowSamples::new(y, t)?;
    let path = compute_merge_path(&w)?;
    let lambda = match a.lambda {
        Some(l) => l,
        None => {
            let l = select_lambda(&path, &w, &SelectorConfig::plateau(a.q))?;
            eprintln!("selected lambda: {l}");
            l
        }
    };
    let seg = solution_at_lambda(&w, &path, lambda)?;
    let u = seg.to_signal();
    let ids = seg.segment_ids();
    let rows = (0..w.len()).map(|i| {
        vec![
            w.t()[i].to_string(),
            w.y()[i].to_string(),
            u[i].to_string(),
            ids[i].to_string(),
        ]
    });
    emit(
        a.out.as_deref(),
        &csv_text(&["t", "y", "u_star", "segment_id"], rows),
    )?;
    Ok(EXIT_OK)
}

fn monitor(a: MonitorArgs) -> CliResult<i32> {
    let (t, y) = read_series(&a.input)?;
    if y.len() < a.window {
        return Err(CliError::Usage(format!(
            "series has {} samples, fewer than the window length {}",
            y.len(),
            a.window
        )));
    }
    let baseline = match (a.baseline, a.warmup) {
        (Some(s), _) => Baseline::Fixed(s),
        (None, Some(k)) => Baseline::Warmup(k),
        (None, None) => return Err(CliError::Usage("--baseline or --warmup is required".into())),
    };
    let mut cfg = MonitorConfig::new(a.window, baseline);
    cfg.selector = SelectorConfig::plateau(a.q);
    cfg.ratio_threshold = a.threshold;
    cfg.consecutive_windows = a.consecutive;
    let run = run_monitor(&y, &t, &cfg)?;
    let rows = run.records.iter().map(|r| {
        vec![
            r.window_start_index.to_string(),
            r.sigma_star.to_string(),
            r.lambda_used.to_string(),
            r.mad_sigma.to_string(),
            r.shift_alert.to_string(),
        ]
    });
    let header = [
        "start_index",
        "sigma_star",
        "lambda_used",
        "mad_sigma",
        "shift_alert",
    ];
    emit(a.out.as_deref(), &csv_text(&header, rows))?;
    if let Some(b) = run.baseline_sigma {
        eprintln!("baseline sigma: {b}");
    }
    Ok(if run.any_alert() { EXIT_ALERT } else { EXIT_OK })
}

fn trace(a: TraceArgs) -> CliResult<i32> {
    let model = NoiseModel::reference(a.model)
        .ok_or_else(|| CliError::Usage(format!("unknown noise model {}", a.model)))?;
    let steps: Vec<(f64, f64)> = default_steps()
        .into_iter()
        .filter(|s| s.0 < a.n as f64)
        .collect();
    let clean = generate_signal(&steps, a.n, 1.0)?;
    let tr = add_noise(&clean, &model, a.seed)?;
    let rows = (0..tr.y.len()).map(|i| {
        vec![
            tr.t[i].to_string(),
            tr.y[i].to_string(),
            tr.u_net[i].to_string(),
        ]
    });
    emit(a.out.as_deref(), &csv_text(&["t", "y", "u_net"], rows))?;
    Ok(EXIT_OK)
}

fn read_config(path: Option<&Path>) -> CliResult<Option<String>> {
    path.map(|p| fs::read_to_string(p).map_err(io_err(p)))
        .transpose()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn simulate(a: SimulateArgs) -> CliResult<i32> {
    let mut cfg = match read_config(a.config.as_deref())? {
        Some(text) => ExperimentConfig::from_json(&text)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.repetitions {
        cfg.repetitions = r;
    }
    if !a.windows.is_empty() {
        cfg.windows = a.windows;
    }
    let report = run_experiment(&cfg)?;
    create_dir(&a.out_dir)?;
    let header = [
        "window",
        "repetition",
        "seed",
        "rve_ours",
        "rve_mad",
        "bias_ours",
        "bias_mad",
        "mean_lambda",
        "incremental_share",
    ];
    let rows = report.rows.iter().map(|r| {
        vec![
            r.window.to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            r.rve_ours.to_string(),
            r.rve_mad.to_string(),
            r.bias_ours.to_string(),
            r.bias_mad.to_string(),
            r.mean_lambda.to_string(),
            r.incremental_share.to_string(),
        ]
    });
    write_text(&a.out_dir.join("rows.csv"), &csv_text(&header, rows))?;
    write_text(&a.out_dir.join("summary.json"), &to_json(&report))?;
    for s in &report.summaries {
        println!(
            "m = {}: median RVE ours {:.4}, MAD {:.4}; median bias ours {:.4}, MAD {:.4}",
            s.window, s.rve_ours.median, s.rve_mad.median, s.bias_ours.median, s.bias_mad.median
        );
    }
    Ok(EXIT_OK)
}

fn bench(a: BenchArgs) -> CliResult<i32> {
    let mut cfg = match read_config(a.config.as_deref())? {
        Some(text) => BenchConfig::from_json(&text)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if !a.windows.is_empty() {
        cfg.windows = a.windows;
    }
    let rows = run_bench(&cfg)?;
    create_dir(&a.out_dir)?;
    let header = [
        "window",
        "slides",
        "mean_slide_seconds",
        "mean_rewritten",
        "mean_non_right_isolated",
        "max_non_right_isolated",
        "incremental_share",
    ];
    let lines = rows.iter().map(|r| {
        vec![
            r.window.to_string(),
            r.slides.to_string(),
            r.mean_slide_seconds.to_string(),
            r.mean_rewritten.to_string(),
            r.mean_non_right_isolated.to_string(),
            r.max_non_right_isolated.to_string(),
            r.incremental_share.to_string(),
        ]
    });
    write_text(&a.out_dir.join("bench.csv"), &csv_text(&header, lines))?;
    write_text(
        &a.out_dir.join("bench.json"),
        &to_json(&serde_json::json!({ "config": cfg, "rows": rows })),
    )?;
    for r in &rows {
        println!(
            "m = {}: {:.1} us/slide, {:.1} boundaries rewritten",
            r.window,
            r.mean_slide_seconds * 1e6,
            r.mean_rewritten
        );
    }
    Ok(EXIT_OK)
}
