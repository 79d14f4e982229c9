// SPDX-License-Identifier: MIT OR Apache-2.0

//! Test-only oracles, independent of the library's path machinery.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Periods from timestamps, with the first period copied from the second.
pub fn periods(t: &[f64]) -> Vec<f64> {
    let mut tau: Vec<f64> = t.windows(2).map(|p| p[1] - p[0]).collect();
    tau.insert(0, tau[0]);
    tau
}

pub fn functional(y: &[f64], tau: &[f64], u: &[f64], lambda: f64) -> f64 {
    let fit: f64 = (0..y.len()).map(|i| tau[i] * (y[i] - u[i]).powi(2)).sum();
    let tv: f64 = u.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
    fit + lambda * tv
}

/// Result of the dual solver: a primal point and a certified lower bound.
pub struct ConvexSolution {
    pub u: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
}

/// Minimises the weighted TV functional by exact coordinate descent on the
/// box-constrained dual `min 1/4 z'DW^-1D'z - z'Dy, |z| <= lambda`, with
/// `u = y - W^-1 D'z / 2`. Stops once the duality gap is below `gap`.
pub fn convex_minimizer(y: &[f64], tau: &[f64], lambda: f64, gap: f64) -> ConvexSolution {
    let m = y.len();
    let nb = m - 1;
    let dy: Vec<f64> = (0..nb).map(|b| y[b + 1] - y[b]).collect();
    let inv: Vec<f64> = tau.iter().map(|t| 1.0 / t).collect();
    let mut z = vec![0.0; nb];
    let primal_of = |z: &[f64]| {
        let u: Vec<f64> = (0..m)
            .map(|i| {
                let left = if i > 0 { z[i - 1] } else { 0.0 };
                let right = if i < nb { z[i] } else { 0.0 };
                y[i] - 0.5 * inv[i] * (left - right)
            })
            .collect();
        u
    };
    let mut best: Option<ConvexSolution> = None;
    for sweep in 0..2_000_000 {
        for b in 0..nb {
            // Q = D W^-1 D' / 2 is tridiagonal
            let diag = 0.5 * (inv[b] + inv[b + 1]);
            let mut off = 0.0;
            if b > 0 {
                off -= 0.5 * inv[b] * z[b - 1];
            }
            if b + 1 < nb {
                off -= 0.5 * inv[b + 1] * z[b + 1];
            }
            z[b] = ((dy[b] - off) / diag).clamp(-lambda, lambda);
        }
        if sweep % 16 == 0 {
            let u = primal_of(&z);
            let primal = functional(y, tau, &u, lambda);
            // Lagrangian at u(z) is the dual value
            let fit: f64 = (0..m).map(|i| tau[i] * (y[i] - u[i]).powi(2)).sum();
            let coupling: f64 = (0..nb).map(|b| z[b] * (u[b + 1] - u[b])).sum();
            let dual = fit + coupling;
            let done = primal - dual <= gap;
            best = Some(ConvexSolution { u, primal, dual });
            if done {
                break;
            }
        }
    }
    best.expect("at least one sweep")
}

/// Random window with `m` points and periods drawn from `[lo, hi]`.
pub fn random_window(r: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut t = Vec::with_capacity(m);
    let mut acc = 0.0;
    for _ in 0..m {
        acc += r.random_range(lo..=hi);
        t.push(acc);
    }
    let y = (0..m).map(|_| r.random_range(-3.0..3.0)).collect();
    (y, t)
}

/// Piecewise-constant levels with Gaussian-like noise, uniform timestamps.
pub fn noisy_steps(r: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            if r.random_bool(0.02) {
                level = r.random_range(-5.0..5.0);
            }
            // sum of uniforms, variance sigma^2
            let e: f64 = (0..3).map(|_| r.random_range(-1.0..1.0)).sum();
            level + sigma * e
        })
        .collect()
}
