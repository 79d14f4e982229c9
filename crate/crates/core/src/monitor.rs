// SPDX-License-Identifier: MIT OR Apache-2.0

//! Windowed residual-variance estimation, the MAD baseline and
//! variance-shift alerts.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::select::SelectorConfig;
use crate::stream::{SlideStats, StreamConfig, StreamState};
use crate::tv::WindowSamples;

/// Gaussian consistency constant of the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;

/// Unweighted residual standard deviation `sqrt(sum (r - mean r)^2 / (m - 1))`.
pub fn window_residual_sigma(w: &WindowSamples, u_star: &[f64]) -> Result<f64> {
    if u_star.len() != w.len() {
        return contract(format!(
            "restoration has {} values, window has {}",
            u_star.len(),
            w.len()
        ));
    }
    let r: Vec<f64> = w.y().iter().zip(u_star).map(|(y, u)| y - u).collect();
    sample_sigma(&r)
}

pub(crate) fn sample_sigma(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return contract("need at least 2 values for a sample deviation");
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (n - 1.0)).sqrt())
}

/// Median; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Robust noise scale from `sqrt(2)`-scaled first differences.
pub fn mad_sigma(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return contract("MAD needs at least 2 samples");
    }
    let b: Vec<f64> = y
        .windows(2)
        .map(|p| std::f64::consts::SQRT_2 * (p[1] - p[0]))
        .collect();
    let med = median(&b).unwrap_or(0.0);
    let dev: Vec<f64> = b.iter().map(|x| (x - med).abs()).collect();
    Ok(MAD_SCALE * median(&dev).unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub window_start_index: usize,
    pub sigma_star: f64,
    pub lambda_used: f64,
    pub mad_sigma: f64,
    pub shift_alert: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftPolicy {
    pub baseline_sigma: f64,
    pub ratio_threshold: f64,
    pub consecutive_windows: usize,
}

impl ShiftPolicy {
    pub const DEFAULT_RATIO: f64 = 1.2;
    pub const DEFAULT_CONSECUTIVE: usize = 5;

    pub fn new(baseline_sigma: f64) -> Self {
        Self {
            baseline_sigma,
            ratio_threshold: Self::DEFAULT_RATIO,
            consecutive_windows: Self::DEFAULT_CONSECUTIVE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.baseline_sigma > 0.0) || !self.baseline_sigma.is_finite() {
            return contract("baseline sigma must be positive");
        }
        if !(self.ratio_threshold > 1.0) || !self.ratio_threshold.is_finite() {
            return contract("ratio threshold must exceed 1");
        }
        if self.consecutive_windows == 0 {
            return contract("consecutive_windows must be at least 1");
        }
        Ok(())
    }

    pub fn is_elevated(&self, sigma: f64) -> bool {
        sigma > self.ratio_threshold * self.baseline_sigma
    }

    /// Alert for `sigma` given the sigmas of the preceding records.
    pub fn alert(&self, history: &[f64], sigma: f64) -> bool {
        let need = self.consecutive_windows - 1;
        self.is_elevated(sigma)
            && history.len() >= need
            && history[history.len() - need..]
                .iter()
                .all(|&s| self.is_elevated(s))
    }
}

/// Restores the current window and evaluates the shift rule against the
/// preceding records.
pub fn monitor_step(
    state: &mut StreamState,
    cfg: &SelectorConfig,
    policy: &ShiftPolicy,
    window_start_index: usize,
    history: &[MonitorRecord],
) -> Result<MonitorRecord> {
    policy.validate()?;
    let (lambda, seg) = state.restore_current(cfg)?;
    let sigma_star = window_residual_sigma(state.window(), &seg.to_signal())?;
    let mad = mad_sigma(state.window().y())?;
    let need = policy
        .consecutive_windows
        .saturating_sub(1)
        .min(history.len());
    let prior: Vec<f64> = history[history.len() - need..]
        .iter()
        .map(|r| r.sigma_star)
        .collect();
    Ok(MonitorRecord {
        window_start_index,
        sigma_star,
        lambda_used: lambda,
        mad_sigma: mad,
        shift_alert: policy.alert(&prior, sigma_star),
    })
}

/// Source of the stable-regime sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Fixed(f64),
    /// Median sigma of the first `k` windows; no alerts during warm-up.
    Warmup(usize),
}

#[derive(Debug, Clone)]
pub struct MonitorConfig {
    pub window: usize,
    pub selector: SelectorConfig,
    pub stream: StreamConfig,
    pub baseline: Baseline,
    pub ratio_threshold: f64,
    pub consecutive_windows: usize,
}

impl MonitorConfig {
    pub fn new(window: usize, baseline: Baseline) -> Self {
        Self {
            window,
            selector: SelectorConfig::default(),
            stream: StreamConfig::default(),
            baseline,
            ratio_threshold: ShiftPolicy::DEFAULT_RATIO,
            consecutive_windows: ShiftPolicy::DEFAULT_CONSECUTIVE,
        }
    }
}

/// Output of a monitoring pass over a series.
#[derive(Debug, Clone)]
pub struct MonitorRun {
    pub records: Vec<MonitorRecord>,
    pub baseline_sigma: Option<f64>,
    pub slides: Vec<SlideStats>,
}

impl MonitorRun {
    pub fn any_alert(&self) -> bool {
        self.records.iter().any(|r| r.shift_alert)
    }
}

/// Slides a window over the whole series, one record per window.
pub fn run_monitor(y: &[f64], t: &[f64], cfg: &MonitorConfig) -> Result<MonitorRun> {
    let m = cfg.window;
    if y.len() != t.len() {
        return contract("y and t lengths differ");
    }
    if m < 4 {
        return contract("window length must be at least 4");
    }
    if y.len() < m {
        return contract(format!(
            "series has {} samples, fewer than the window length {m}",
            y.len()
        ));
    }
    cfg.selector.validate()?;
    let mut policy = match cfg.baseline {
        Baseline::Fixed(s) => Some(ShiftPolicy {
            baseline_sigma: s,
            ratio_threshold: cfg.ratio_threshold,
            consecutive_windows: cfg.consecutive_windows,
        }),
        Baseline::Warmup(0) => return contract("warm-up needs at least one window"),
        Baseline::Warmup(_) => None,
    };
    if let Some(p) = &policy {
        p.validate()?;
    }

    let first = WindowSamples::new(y[..m].to_vec(), t[..m].to_vec())?;
    let mut state = StreamState::new(first, cfg.stream)?;
    let count = y.len() - m + 1;
    let mut records: Vec<MonitorRecord> = Vec::with_capacity(count);
    let mut slides = Vec::with_capacity(count - 1);
    for i in 0..count {
        if i > 0 {
            slides.push(state.slide(y[i + m - 1], t[i + m - 1])?);
        }
        let rec = match &policy {
            Some(p) => monitor_step(&mut state, &cfg.selector, p, i, &records)?,
            None => {
                let (lambda, seg) = state.restore_current(&cfg.selector)?;
                MonitorRecord {
                    window_start_index: i,
                    sigma_star: window_residual_sigma(state.window(), &seg.to_signal())?,
                    lambda_used: lambda,
                    mad_sigma: mad_sigma(state.window().y())?,
                    shift_alert: false,
                }
            }
        };
        records.push(rec);
        if let (None, Baseline::Warmup(k)) = (&policy, cfg.baseline) {
            if records.len() == k {
                let sig: Vec<f64> = records.iter().map(|r| r.sigma_star).collect();
                let p = ShiftPolicy {
                    baseline_sigma: median(&sig).unwrap_or(0.0),
                    ratio_threshold: cfg.ratio_threshold,
                    consecutive_windows: cfg.consecutive_windows,
                };
                p.validate()?;
                policy = Some(p);
            }
        }
    }
    Ok(MonitorRun {
        records,
        baseline_sigma: policy.map(|p| p.baseline_sigma),
        slides,
    })
}
