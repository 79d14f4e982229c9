// SPDX-License-Identifier: MIT OR Apache-2.0

//! Automatic choice of lambda from the extremum-count curve.

use std::fmt;
use std::sync::Arc;

use crate::error::{contract, Result};
use crate::path::{initial_extrema, MergePath};
use crate::tv::WindowSamples;

/// Default derivative approximation length (`log10(q) = 1`).
pub const DEFAULT_Q: usize = 10;

pub type ExternalSelector = Arc<dyn Fn(&MergePath, &WindowSamples) -> f64 + Send + Sync>;

#[derive(Clone, Default)]
pub enum SelectorKind {
    /// First lambda after which g drops by at most one over a factor `q`
    /// increase of lambda.
    #[default]
    GPlateau,
    /// Same test with the span counted in merge events instead of lambda.
    GPlateauRanks,
    Fixed(f64),
    External(ExternalSelector),
}

impl fmt::Debug for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GPlateau => f.write_str("GPlateau"),
            Self::GPlateauRanks => f.write_str("GPlateauRanks"),
            Self::Fixed(l) => f.debug_tuple("Fixed").field(l).finish(),
            Self::External(_) => f.write_str("External(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectorConfig {
    pub q: usize,
    pub kind: SelectorKind,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            q: DEFAULT_Q,
            kind: SelectorKind::GPlateau,
        }
    }
}

impl SelectorConfig {
    pub fn plateau(q: usize) -> Self {
        Self {
            q,
            kind: SelectorKind::GPlateau,
        }
    }

    pub fn fixed(lambda: f64) -> Self {
        Self {
            q: DEFAULT_Q,
            kind: SelectorKind::Fixed(lambda),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return contract("q must be at least 1");
        }
        if let SelectorKind::Fixed(l) = self.kind {
            if !(l >= 0.0) || !l.is_finite() {
                return contract("fixed lambda must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

/// Chooses lambda for a window from its merge path.
///
/// Noise-induced extrema disappear quickly as lambda grows while extrema of
/// the underlying signal persist over a long range, so g(lambda) shows a
/// plateau once the noise is smoothed out. The default rule walks the steps
/// of g in ascending lambda and returns the first step start `l` where g
/// drops by at most one between `l` and `q * l`. Lambda = 0 qualifies only
/// when the window has at most one extremum, and positive steps are
/// considered once at most half of the initial extrema remain. The rank
/// variant measures the span as the next `q` merge events instead. Either
/// way, if no step qualifies before g reaches zero, the lambda where g first
/// reaches zero is returned.
pub fn select_lambda(path: &MergePath, w: &WindowSamples, cfg: &SelectorConfig) -> Result<f64> {
    cfg.validate()?;
    if path.is_empty() {
        return contract("cannot select lambda on an empty path");
    }
    path.check_window(w)?;
    match &cfg.kind {
        SelectorKind::Fixed(l) => Ok(*l),
        SelectorKind::External(f) => {
            let l = f(path, w);
            if !(l >= 0.0) || !l.is_finite() {
                return contract("external selector returned an invalid lambda");
            }
            Ok(l)
        }
        SelectorKind::GPlateau => Ok(plateau_over_lambda(path, w, cfg.q)),
        SelectorKind::GPlateauRanks => Ok(plateau_over_ranks(path, w, cfg.q)),
    }
}

fn plateau_over_lambda(path: &MergePath, w: &WindowSamples, q: usize) -> f64 {
    let (lambda_at, g) = g_by_rank(path, w);
    let last = g.len() - 1;
    let span = q as f64;
    // g just after all merges at or below lambda
    let g_at = |lambda: f64| {
        let k = lambda_at.partition_point(|&l| l <= lambda);
        g[k.saturating_sub(1)]
    };
    for k in 0..=last {
        // the flat stretch before the bulk of the noise merges is not a plateau
        if k > 0 && (g[k] == g[k - 1] || 2 * g[k] > g[0]) {
            continue;
        }
        let settled = if k == 0 {
            g[0] <= 1
        } else {
            g[k] - g_at(span * lambda_at[k]) <= 1
        };
        if settled {
            return lambda_at[k];
        }
        if g[k] == 0 {
            break;
        }
    }
    let first_zero = g.iter().position(|&v| v == 0).unwrap_or(last);
    lambda_at[first_zero]
}

/// Lambda and g after each rank of the positive merge events; rank 0 is the
/// unmerged (tie-collapsed) window at lambda = 0.
fn g_by_rank(path: &MergePath, w: &WindowSamples) -> (Vec<f64>, Vec<usize>) {
    let lambdas = path.lambdas();
    let drops = path.g_drops();
    let order: Vec<usize> = path
        .event_order()
        .into_iter()
        .filter(|&b| lambdas[b] > 0.0)
        .collect();
    let mut lambda_at = Vec::with_capacity(order.len() + 1);
    let mut g = Vec::with_capacity(order.len() + 1);
    let mut cur = initial_extrema(w.y());
    lambda_at.push(0.0);
    g.push(cur);
    for &b in &order {
        cur = cur.saturating_sub(usize::from(drops[b]));
        lambda_at.push(lambdas[b]);
        g.push(cur);
    }
    (lambda_at, g)
}

fn plateau_over_ranks(path: &MergePath, w: &WindowSamples, q: usize) -> f64 {
    let (lambda_at, g) = g_by_rank(path, w);
    let last = g.len() - 1;
    for k in 0..=last {
        if g[k] - g[(k + q).min(last)] <= 1 {
            return lambda_at[k];
        }
        if g[k] == 0 {
            break;
        }
    }
    let first_zero = g.iter().position(|&v| v == 0).unwrap_or(last);
    lambda_at[first_zero]
}
