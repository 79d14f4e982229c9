// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulated traces and the scores used to evaluate variance tracking.
//!
//! Noise is drawn from a `ChaCha8Rng` seeded with `seed_from_u64(seed)`, one
//! draw per sample in time order (model 4 draws the Gaussian term first,
//! then the uniform term), so traces can be reproduced elsewhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, TvError};
use crate::monitor::sample_sigma;

/// Noise with a time-varying scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `N(0, s(t)^2)`, `s(t) = base + slope * t`.
    GaussianLinearSigma { base: f64, slope: f64 },
    /// `N(0, s(t)^2)`, `s(t) = before` up to `switch_time`, then
    /// `base + slope * t`.
    GaussianPiecewiseSigma {
        before: f64,
        switch_time: f64,
        base: f64,
        slope: f64,
    },
    /// `U(-d(t), d(t))`, `d(t) = base + slope * t`.
    UniformLinearHalfwidth { base: f64, slope: f64 },
    /// `N(0, s(t)^2) + U(-h, h)`, `s(t) = base + slope * t`.
    GaussianPlusUniform {
        base: f64,
        slope: f64,
        half_width: f64,
    },
}

impl NoiseModel {
    /// The four reference models, numbered 1 to 4.
    pub fn reference(index: u8) -> Option<Self> {
        Some(match index {
            1 => Self::GaussianLinearSigma {
                base: 1.0,
                slope: 0.0005,
            },
            2 => Self::GaussianPiecewiseSigma {
                before: 1.0,
                switch_time: 1000.0,
                base: 1.0,
                slope: 0.001,
            },
            3 => Self::UniformLinearHalfwidth {
                base: 1.0,
                slope: 0.0005,
            },
            4 => Self::GaussianPlusUniform {
                base: 1.0,
                slope: 0.0005,
                half_width: 1.0,
            },
            _ => return None,
        })
    }

    /// Scale of the time-varying term at `t`.
    pub fn scale(&self, t: f64) -> f64 {
        match *self {
            Self::GaussianLinearSigma { base, slope }
            | Self::UniformLinearHalfwidth { base, slope }
            | Self::GaussianPlusUniform { base, slope, .. } => base + slope * t,
            Self::GaussianPiecewiseSigma {
                before,
                switch_time,
                base,
                slope,
            } => {
                if t <= switch_time {
                    before
                } else {
                    base + slope * t
                }
            }
        }
    }

    /// Standard deviation of the noise at `t`.
    pub fn sigma(&self, t: f64) -> f64 {
        let s = self.scale(t);
        match *self {
            Self::UniformLinearHalfwidth { .. } => s / 3f64.sqrt(),
            Self::GaussianPlusUniform { half_width, .. } => {
                (s * s + half_width * half_width / 3.0).sqrt()
            }
            _ => s,
        }
    }

    pub fn validate(&self, t: &[f64]) -> Result<()> {
        if let Self::GaussianPlusUniform { half_width, .. } = *self {
            if !(half_width > 0.0) {
                return contract("uniform half width must be positive");
            }
        }
        if let Some(&bad) = t.iter().find(|&&ti| !(self.scale(ti) > 0.0)) {
            return contract(format!("noise scale is not positive at t = {bad}"));
        }
        Ok(())
    }

    fn draw(&self, t: f64, rng: &mut ChaCha8Rng) -> f64 {
        let s = self.scale(t);
        match *self {
            Self::GaussianLinearSigma { .. } | Self::GaussianPiecewiseSigma { .. } => {
                s * rng.sample::<f64, _>(StandardNormal)
            }
            Self::UniformLinearHalfwidth { .. } => s * rng.random_range(-1.0..1.0),
            Self::GaussianPlusUniform { half_width, .. } => {
                let g = s * rng.sample::<f64, _>(StandardNormal);
                g + half_width * rng.random_range(-1.0..1.0)
            }
        }
    }
}

/// Clean signal, its noisy observation and the noise realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedTrace {
    pub u_net: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    pub epsilon_hat: Vec<f64>,
}

/// Step layout used when none is configured: `(start time, level)` pairs
/// over a 2000-sample horizon.
pub fn default_steps() -> Vec<(f64, f64)> {
    vec![
        (0.0, 0.0),
        (250.0, 6.0),
        (450.0, 2.0),
        (700.0, 8.0),
        (1000.0, 3.0),
        (1250.0, 9.0),
        (1500.0, 4.0),
        (1750.0, 10.0),
    ]
}

/// Piecewise-constant signal sampled at `t = 0, dt, ..., (n - 1) dt`.
///
/// `steps` holds `(start time, level)` pairs; the first level also covers
/// any time before the first start.
pub fn generate_signal(steps: &[(f64, f64)], n: usize, dt: f64) -> Result<SimulatedTrace> {
    if steps.is_empty() {
        return contract("step list is empty");
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return contract("dt must be positive");
    }
    if steps.windows(2).any(|p| !(p[1].0 > p[0].0)) {
        return contract("step times must be strictly increasing");
    }
    let horizon = (n.max(1) - 1) as f64 * dt;
    if steps.iter().any(|s| !s.1.is_finite() || s.0 > horizon) {
        return contract("step times must lie within the horizon and levels be finite");
    }
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let u_net: Vec<f64> = t
        .iter()
        .map(|&ti| {
            let k = steps.partition_point(|s| s.0 <= ti);
            steps[k.saturating_sub(1)].1
        })
        .collect();
    Ok(SimulatedTrace {
        y: u_net.clone(),
        epsilon_hat: vec![0.0; n],
        u_net,
        t,
    })
}

/// Adds noise drawn from `model` to the clean part of `trace`.
pub fn add_noise(trace: &SimulatedTrace, model: &NoiseModel, seed: u64) -> Result<SimulatedTrace> {
    model.validate(&trace.t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<f64> = trace.t.iter().map(|&t| model.draw(t, &mut rng)).collect();
    let y: Vec<f64> = trace.u_net.iter().zip(&eps).map(|(u, e)| u + e).collect();
    let epsilon_hat = y.iter().zip(&trace.u_net).map(|(y, u)| y - u).collect();
    Ok(SimulatedTrace {
        u_net: trace.u_net.clone(),
        y,
        t: trace.t.clone(),
        epsilon_hat,
    })
}

/// Sliding sample deviation of the noise realisation, one per window.
pub fn reference_sigma(trace: &SimulatedTrace, m: usize) -> Result<Vec<f64>> {
    let n = trace.epsilon_hat.len();
    if m < 2 || m > n {
        return contract(format!("window length {m} invalid for {n} samples"));
    }
    trace.epsilon_hat.windows(m).map(sample_sigma).collect()
}

fn check_pair(sigma_hat: &[f64], sigma_star: &[f64]) -> Result<()> {
    if sigma_hat.len() != sigma_star.len() {
        return contract("sigma series lengths differ");
    }
    if sigma_hat.len() < 2 {
        return contract("need at least 2 windows");
    }
    Ok(())
}

/// Average of `sigma_hat - sigma_star`.
pub fn mean_bias(sigma_hat: &[f64], sigma_star: &[f64]) -> Result<f64> {
    check_pair(sigma_hat, sigma_star)?;
    let n = sigma_hat.len() as f64;
    Ok(sigma_hat
        .iter()
        .zip(sigma_star)
        .map(|(a, b)| a - b)
        .sum::<f64>()
        / n)
}

/// Share of the variation of `sigma_hat` explained by `sigma_star` once the
/// mean bias is removed.
pub fn rve_score(sigma_hat: &[f64], sigma_star: &[f64]) -> Result<f64> {
    let bias = mean_bias(sigma_hat, sigma_star)?;
    let n = sigma_hat.len() as f64;
    let mean = sigma_hat.iter().sum::<f64>() / n;
    let den: f64 = sigma_hat.iter().map(|s| (s - mean) * (s - mean)).sum();
    if !(den > 0.0) {
        return Err(TvError::UndefinedRve);
    }
    let num: f64 = sigma_hat
        .iter()
        .zip(sigma_star)
        .map(|(h, s)| (h - bias - s) * (h - bias - s))
        .sum();
    Ok(1.0 - num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_two_step_signals() {
        let tr = generate_signal(&[(0.0, 3.0)], 5, 1.0).unwrap();
        assert_eq!(tr.u_net, vec![3.0; 5]);
        let tr = generate_signal(&[(0.0, 0.0), (1000.0, 5.0)], 2000, 1.0).unwrap();
        assert!(tr.u_net[..1000].iter().all(|&v| v == 0.0));
        assert!(tr.u_net[1000..].iter().all(|&v| v == 5.0));
        assert!(generate_signal(&[], 10, 1.0).is_err());
        assert!(generate_signal(&[(0.0, 1.0), (20.0, 2.0)], 10, 1.0).is_err());
    }

    #[test]
    fn reference_model_scales() {
        let m1 = NoiseModel::reference(1).unwrap();
        assert_eq!(m1.sigma(0.0), 1.0);
        assert_eq!(m1.sigma(2000.0), 2.0);
        let m2 = NoiseModel::reference(2).unwrap();
        assert_eq!(m2.sigma(1000.0), 1.0);
        assert!((m2.sigma(1500.0) - 2.5).abs() < 1e-12);
        let m3 = NoiseModel::reference(3).unwrap();
        assert_eq!(m3.scale(0.0), 1.0);
        assert!(NoiseModel::reference(5).is_none());
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let clean = generate_signal(&default_steps(), 2000, 1.0).unwrap();
        for k in 1..=4 {
            let model = NoiseModel::reference(k).unwrap();
            let a = add_noise(&clean, &model, 42).unwrap();
            let b = add_noise(&clean, &model, 42).unwrap();
            assert_eq!(a, b);
            let c = add_noise(&clean, &model, 43).unwrap();
            assert_ne!(a.y, c.y);
            for i in 0..a.y.len() {
                assert_eq!(a.epsilon_hat[i], a.y[i] - a.u_net[i]);
            }
        }
    }

    #[test]
    fn uniform_noise_is_bounded() {
        let clean = generate_signal(&[(0.0, 0.0)], 500, 1.0).unwrap();
        let tr = add_noise(&clean, &NoiseModel::reference(3).unwrap(), 1).unwrap();
        for (e, t) in tr.epsilon_hat.iter().zip(&tr.t) {
            assert!(e.abs() <= 1.0 + 0.0005 * t);
        }
    }

    #[test]
    fn reference_sigma_examples() {
        let mut tr = generate_signal(&[(0.0, 0.0)], 6, 1.0).unwrap();
        assert_eq!(reference_sigma(&tr, 3).unwrap(), vec![0.0; 4]);
        tr.epsilon_hat = vec![0.0, 2.0, 0.0, 2.0, 0.0, 2.0];
        for s in reference_sigma(&tr, 2).unwrap() {
            assert!((s - 2f64.sqrt()).abs() < 1e-15);
        }
        assert!(reference_sigma(&tr, 7).is_err());
    }

    #[test]
    fn rve_examples() {
        let hat = [1.0, 1.5, 2.0, 1.2];
        let shifted: Vec<f64> = hat.iter().map(|h| h - 0.3).collect();
        assert!((rve_score(&hat, &shifted).unwrap() - 1.0).abs() < 1e-12);
        assert!((mean_bias(&hat, &shifted).unwrap() - 0.3).abs() < 1e-12);
        let flat = [1.425; 4];
        assert!(rve_score(&hat, &flat).unwrap().abs() < 1e-12);
        assert_eq!(
            rve_score(&[1.0; 3], &[1.0, 2.0, 3.0]),
            Err(TvError::UndefinedRve)
        );
        assert!(rve_score(&hat, &hat[..3]).is_err());
    }
}
