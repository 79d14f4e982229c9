// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation study and slide benchmark drivers.
//!
//! Repetition `r` draws its noise with seed `seed + r`, so every row of a
//! report can be reproduced on its own.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TvError};
use crate::monitor::{median, run_monitor, Baseline, MonitorConfig};
use crate::select::{SelectorConfig, DEFAULT_Q};
use crate::sim::{
    add_noise, default_steps, generate_signal, mean_bias, reference_sigma, rve_score, NoiseModel,
};
use crate::stream::{CuttingPolicy, StreamConfig, StreamState};
use crate::tv::WindowSamples;

fn default_model() -> NoiseModel {
    NoiseModel::reference(1).expect("model 1 exists")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub noise_model: NoiseModel,
    pub steps: Vec<(f64, f64)>,
    pub n: usize,
    pub dt: f64,
    pub windows: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub q: usize,
    pub cutting: CuttingPolicy,
    pub epsilon_lambda: Option<f64>,
    pub histogram_bins: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            noise_model: default_model(),
            steps: default_steps(),
            n: 2000,
            dt: 1.0,
            windows: vec![400],
            repetitions: 20,
            seed: 0,
            q: DEFAULT_Q,
            cutting: CuttingPolicy::PreviousSelection,
            epsilon_lambda: None,
            histogram_bins: 20,
        }
    }
}

const EXPERIMENT_FIELDS: &[&str] = &[
    "noise_model",
    "steps",
    "n",
    "dt",
    "windows",
    "repetitions",
    "seed",
    "q",
    "cutting",
    "epsilon_lambda",
    "histogram_bins",
];

const BENCH_FIELDS: &[&str] = &[
    "steps",
    "n",
    "sigma",
    "windows",
    "seed",
    "cutting",
    "epsilon_lambda",
];

/// Parses JSON, reporting every unknown key before attempting the typed
/// decode.
fn parse_config<T: serde::de::DeserializeOwned>(text: &str, known: &[&str]) -> Result<T> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| TvError::InvalidConfig(vec![e.to_string()]))?;
    let Some(obj) = value.as_object() else {
        return Err(TvError::InvalidConfig(vec![
            "top level must be an object".into()
        ]));
    };
    let unknown: Vec<String> = obj
        .keys()
        .filter(|k| !known.contains(&k.as_str()))
        .map(|k| format!("{k}: unknown field"))
        .collect();
    if !unknown.is_empty() {
        return Err(TvError::InvalidConfig(unknown));
    }
    serde_json::from_value(value).map_err(|e| TvError::InvalidConfig(vec![e.to_string()]))
}

fn check_windows(windows: &[usize], n: usize, problems: &mut Vec<String>) {
    if windows.is_empty() {
        problems.push("windows: at least one window length is required".into());
    }
    for &m in windows {
        if m < 4 || m > n {
            problems.push(format!("windows: {m} must lie in [4, n = {n}]"));
        }
    }
}

fn check_stream(cutting: CuttingPolicy, epsilon_lambda: Option<f64>, problems: &mut Vec<String>) {
    let s = StreamConfig {
        cutting,
        epsilon_lambda: None,
    };
    if let Err(e) = s.validate() {
        problems.push(format!("cutting: {e}"));
    }
    if let Some(e) = epsilon_lambda {
        if !(e > 0.0) || !e.is_finite() {
            problems.push("epsilon_lambda: must be positive".into());
        }
    }
}

fn check_steps(steps: &[(f64, f64)], n: usize, dt: f64, problems: &mut Vec<String>) {
    if let Err(e) = generate_signal(steps, n.max(1), if dt > 0.0 { dt } else { 1.0 }) {
        problems.push(format!("steps: {e}"));
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_config(text, EXPERIMENT_FIELDS)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 4 {
            problems.push("n: must be at least 4".into());
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            problems.push("dt: must be positive".into());
        }
        check_windows(&self.windows, self.n, &mut problems);
        if self.repetitions == 0 {
            problems.push("repetitions: must be at least 1".into());
        }
        if self.q == 0 {
            problems.push("q: must be at least 1".into());
        }
        if self.histogram_bins == 0 {
            problems.push("histogram_bins: must be at least 1".into());
        }
        check_stream(self.cutting, self.epsilon_lambda, &mut problems);
        check_steps(&self.steps, self.n, self.dt, &mut problems);
        if self.n >= 1 && self.dt > 0.0 {
            let t: Vec<f64> = (0..self.n).map(|i| i as f64 * self.dt).collect();
            if let Err(e) = self.noise_model.validate(&t) {
                problems.push(format!("noise_model: {e}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(TvError::InvalidConfig(problems))
        }
    }
}

/// Outcome of one repetition at one window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRow {
    pub window: usize,
    pub repetition: usize,
    pub seed: u64,
    pub rve_ours: f64,
    pub rve_mad: f64,
    pub bias_ours: f64,
    pub bias_mad: f64,
    pub mean_lambda: f64,
    pub incremental_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Quantiles {
    /// Linear-interpolation quantiles; `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let x = p * (v.len() - 1) as f64;
            let lo = x.floor() as usize;
            let hi = x.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (x - lo as f64)
        };
        Some(Self {
            min: v[0],
            q25: at(0.25),
            median: median(&v).expect("nonempty"),
            q75: at(0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Counts of non-right-isolated lengths in bins `[k * width, (k + 1) * width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: usize,
    pub counts: Vec<u64>,
    pub max: usize,
}

impl Histogram {
    pub fn new(values: &[usize], upper: usize, bins: usize) -> Self {
        let bins = bins.max(1);
        let bin_width = upper.div_ceil(bins).max(1);
        let mut counts = vec![0u64; upper / bin_width + 1];
        for &v in values {
            let k = (v / bin_width).min(counts.len() - 1);
            counts[k] += 1;
        }
        Self {
            bin_width,
            counts,
            max: values.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: usize,
    pub rve_ours: Quantiles,
    pub rve_mad: Quantiles,
    pub bias_ours: Quantiles,
    pub bias_mad: Quantiles,
    /// Share of repetitions where our estimate is below the oracle on average.
    pub underestimate_share: f64,
    pub non_right_isolated: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<RepetitionRow>,
    pub summaries: Vec<WindowSummary>,
}

struct RepOutcome {
    row: RepetitionRow,
    isolated_lengths: Vec<usize>,
}

fn run_repetition(cfg: &ExperimentConfig, window: usize, repetition: usize) -> Result<RepOutcome> {
    let seed = cfg.seed.wrapping_add(repetition as u64);
    let clean = generate_signal(&cfg.steps, cfg.n, cfg.dt)?;
    let trace = add_noise(&clean, &cfg.noise_model, seed)?;
    let hat = reference_sigma(&trace, window)?;

    let mut mcfg = MonitorConfig::new(window, Baseline::Fixed(1.0));
    mcfg.selector = SelectorConfig::plateau(cfg.q);
    mcfg.stream = StreamConfig {
        cutting: cfg.cutting,
        epsilon_lambda: cfg.epsilon_lambda,
    };
    let run = run_monitor(&trace.y, &trace.t, &mcfg)?;
    let ours: Vec<f64> = run.records.iter().map(|r| r.sigma_star).collect();
    let mad: Vec<f64> = run.records.iter().map(|r| r.mad_sigma).collect();
    let lambdas: Vec<f64> = run.records.iter().map(|r| r.lambda_used).collect();
    let incremental = run
        .slides
        .iter()
        .filter(|s| s.branch == crate::stream::Branch::Incremental)
        .count();

    Ok(RepOutcome {
        row: RepetitionRow {
            window,
            repetition,
            seed,
            rve_ours: rve_score(&hat, &ours)?,
            rve_mad: rve_score(&hat, &mad)?,
            bias_ours: mean_bias(&hat, &ours)?,
            bias_mad: mean_bias(&hat, &mad)?,
            mean_lambda: lambdas.iter().sum::<f64>() / lambdas.len() as f64,
            incremental_share: if run.slides.is_empty() {
                1.0
            } else {
                incremental as f64 / run.slides.len() as f64
            },
        },
        isolated_lengths: run
            .slides
            .iter()
            .map(|s| s.non_right_isolated_len)
            .collect(),
    })
}

/// Runs every (window, repetition) pair in parallel; the report does not
/// depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .windows
        .iter()
        .flat_map(|&m| (0..cfg.repetitions).map(move |r| (m, r)))
        .collect();
    let outcomes: Vec<RepOutcome> = jobs
        .par_iter()
        .map(|&(m, r)| run_repetition(cfg, m, r))
        .collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(cfg.windows.len());
    for &m in &cfg.windows {
        let mine: Vec<&RepOutcome> = outcomes.iter().filter(|o| o.row.window == m).collect();
        let col =
            |f: fn(&RepetitionRow) -> f64| -> Vec<f64> { mine.iter().map(|o| f(&o.row)).collect() };
        let lengths: Vec<usize> = mine
            .iter()
            .flat_map(|o| o.isolated_lengths.iter().copied())
            .collect();
        let under = mine.iter().filter(|o| o.row.bias_ours > 0.0).count();
        summaries.push(WindowSummary {
            window: m,
            rve_ours: Quantiles::of(&col(|r| r.rve_ours)).expect("repetitions > 0"),
            rve_mad: Quantiles::of(&col(|r| r.rve_mad)).expect("repetitions > 0"),
            bias_ours: Quantiles::of(&col(|r| r.bias_ours)).expect("repetitions > 0"),
            bias_mad: Quantiles::of(&col(|r| r.bias_mad)).expect("repetitions > 0"),
            underestimate_share: under as f64 / mine.len() as f64,
            non_right_isolated: Histogram::new(&lengths, m, cfg.histogram_bins),
        });
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows: outcomes.into_iter().map(|o| o.row).collect(),
        summaries,
    })
}

/// Slide benchmark on a piecewise-constant signal with stationary Gaussian
/// noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub steps: Vec<(f64, f64)>,
    pub n: usize,
    pub sigma: f64,
    pub windows: Vec<usize>,
    pub seed: u64,
    pub cutting: CuttingPolicy,
    pub epsilon_lambda: Option<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            n: 2000,
            sigma: 1.0,
            windows: vec![100, 200, 400],
            seed: 0,
            cutting: CuttingPolicy::Fixed(2.0),
            epsilon_lambda: None,
        }
    }
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_config(text, BENCH_FIELDS)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 5 {
            problems.push("n: must be at least 5".into());
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            problems.push("sigma: must be positive".into());
        }
        check_windows(&self.windows, self.n.saturating_sub(1), &mut problems);
        check_stream(self.cutting, self.epsilon_lambda, &mut problems);
        check_steps(&self.steps, self.n, 1.0, &mut problems);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(TvError::InvalidConfig(problems))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub window: usize,
    pub slides: usize,
    pub mean_slide_seconds: f64,
    pub mean_rewritten: f64,
    pub mean_non_right_isolated: f64,
    pub max_non_right_isolated: usize,
    pub incremental_share: f64,
}

/// Times `slide` alone; lambda selection for the previous-selection policy
/// happens outside the timed region.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let clean = generate_signal(&cfg.steps, cfg.n, 1.0)?;
    let model = NoiseModel::GaussianLinearSigma {
        base: cfg.sigma,
        slope: 0.0,
    };
    let trace = add_noise(&clean, &model, cfg.seed)?;
    let stream = StreamConfig {
        cutting: cfg.cutting,
        epsilon_lambda: cfg.epsilon_lambda,
    };
    let selector = SelectorConfig::default();
    let mut rows = Vec::with_capacity(cfg.windows.len());
    for &m in &cfg.windows {
        let first = WindowSamples::new(trace.y[..m].to_vec(), trace.t[..m].to_vec())?;
        let mut state = StreamState::new(first, stream)?;
        let mut elapsed = 0.0;
        let (mut rewritten, mut isolated, mut max_isolated, mut incremental) =
            (0usize, 0usize, 0usize, 0usize);
        let slides = cfg.n - m;
        for i in m..cfg.n {
            if cfg.cutting == CuttingPolicy::PreviousSelection {
                state.restore_current(&selector)?;
            }
            let start = Instant::now();
            let s = state.slide(trace.y[i], trace.t[i])?;
            elapsed += start.elapsed().as_secs_f64();
            rewritten += s.rewritten;
            isolated += s.non_right_isolated_len;
            max_isolated = max_isolated.max(s.non_right_isolated_len);
            incremental += usize::from(s.branch == crate::stream::Branch::Incremental);
        }
        let k = slides as f64;
        rows.push(BenchRow {
            window: m,
            slides,
            mean_slide_seconds: elapsed / k,
            mean_rewritten: rewritten as f64 / k,
            mean_non_right_isolated: isolated as f64 / k,
            max_non_right_isolated: max_isolated,
            incremental_share: incremental as f64 / k,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
