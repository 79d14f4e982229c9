// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sliding-window maintenance of the merge path.
//!
//! A slide removes the oldest sample and appends a new one. At the cutting
//! point `lambda_hat` the old restoration splits into a head influenced by
//! the removed sample, a tail influenced by the new one and an isolated
//! middle whose merge values below `lambda_hat` carry over unchanged. Head
//! and tail are recomputed on small padded problems, everything above
//! `lambda_hat` is recomputed on the segment-level sequence, and the result
//! is spliced. Before committing, the spliced restoration at `lambda_hat` is
//! checked against the optimality conditions; if the check fails the slide
//! falls back to a full recomputation, so the maintained path always equals
//! the offline one.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, TvError};
use crate::path::{compute_merge_path, merge_path_weighted, MergePath};
use crate::select::{select_lambda, SelectorConfig};
use crate::tv::{sign, solution_at_lambda, Segmentation, WindowSamples};

/// How the cutting point is chosen before each slide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CuttingPolicy {
    /// The lambda selected on the previous window.
    PreviousSelection,
    Fixed(f64),
    /// Quantile in `[0, 1]` of the current merge values.
    Quantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    pub cutting: CuttingPolicy,
    /// Sentinel padding; `None` uses `max(1e-9, 1e-9 * lambda_hat)`.
    pub epsilon_lambda: Option<f64>,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            cutting: CuttingPolicy::PreviousSelection,
            epsilon_lambda: None,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        match self.cutting {
            CuttingPolicy::Fixed(l) if !(l >= 0.0) || !l.is_finite() => {
                return contract("fixed cutting point must be finite and nonnegative")
            }
            CuttingPolicy::Quantile(q) if !(0.0..=1.0).contains(&q) => {
                return contract("cutting quantile must lie in [0, 1]")
            }
            _ => {}
        }
        if let Some(e) = self.epsilon_lambda {
            if !(e > 0.0) || !e.is_finite() {
                return contract("epsilon_lambda must be positive");
            }
        }
        Ok(())
    }

    fn epsilon_for(&self, lambda_hat: f64) -> f64 {
        self.epsilon_lambda
            .unwrap_or_else(|| (1e-9 * lambda_hat).max(1e-9))
    }
}

/// A bound of the non-isolated head or tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bound {
    pub point: usize,
    pub segment: usize,
}

/// Limits of the parts of a restoration a slide can influence.
///
/// `right.point` is the first point of the non right-isolated tail;
/// `left.point` is the last point of the non left-isolated head.
/// `None` means the whole window is exposed on that side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsolationBounds {
    pub left: Option<Bound>,
    pub right: Option<Bound>,
}

impl IsolationBounds {
    /// Isolated points `p + 1 .. l`, if the incremental branch applies.
    pub fn isolated(&self) -> Option<std::ops::Range<usize>> {
        let (p, l) = (self.left?.point, self.right?.point);
        (p + 2 < l).then(|| p + 1..l)
    }
}

/// Finds the isolation bounds of a restoration for removing `y_removed`
/// (the first sample) and appending `y_new`.
pub fn find_isolation_bounds(seg: &Segmentation, y_removed: f64, y_new: f64) -> IsolationBounds {
    let v = seg.levels();
    let s = seg.signs();
    let k = v.len();
    // sign(v[j-1] - v[j]) == -s[j]
    let tail = sign(v[k - 1] - y_new);
    let right = if tail == 0 {
        None
    } else {
        (1..k).rev().find(|&j| -s[j] == tail).map(|j| Bound {
            point: seg.starts()[j],
            segment: j,
        })
    };
    let head = sign(v[0] - y_removed);
    let left = if head == 0 {
        None
    } else {
        (1..k).find(|&j| -s[j] == head).map(|j| Bound {
            point: seg.segment_range(j).end - 1,
            segment: j,
        })
    };
    IsolationBounds { left, right }
}

fn sentinel_offset(lambda_hat: f64, eps: f64, s: i8) -> f64 {
    (lambda_hat + eps) / (2.0 * f64::from(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// First segment: right sentinel only.
    Left,
    /// Last segment: left sentinel only.
    Right,
    Interior,
    /// The only segment: no sentinel.
    Whole,
}

/// A segment padded with unit-weight sentinel samples.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualSegment {
    pub y: Vec<f64>,
    pub tau: Vec<f64>,
    pub side: Side,
}

impl VirtualSegment {
    fn has_left(&self) -> bool {
        matches!(self.side, Side::Right | Side::Interior)
    }

    fn has_right(&self) -> bool {
        matches!(self.side, Side::Left | Side::Interior)
    }
}

/// Pads segment `j` of `seg` (a restoration of `w` at `lambda_hat`) with
/// sentinels `v_j - c_{j-1}` and `v_j + c_j`, `c = (lambda_hat + eps) / (2 s)`.
pub fn build_virtual_segment(
    w: &WindowSamples,
    seg: &Segmentation,
    j: usize,
    lambda_hat: f64,
    eps: f64,
) -> Result<VirtualSegment> {
    if !(eps > 0.0) {
        return contract("epsilon_lambda must be positive");
    }
    if seg.len() != w.len() {
        return contract("segmentation does not match the window");
    }
    let k = seg.num_segments();
    if j >= k {
        return contract(format!("segment {j} out of range ({k} segments)"));
    }
    let side = match (j == 0, j + 1 == k) {
        (true, true) => Side::Whole,
        (true, false) => Side::Left,
        (false, true) => Side::Right,
        (false, false) => Side::Interior,
    };
    let r = seg.segment_range(j);
    let v = seg.levels()[j];
    let s = seg.signs();
    let mut y = Vec::with_capacity(r.len() + 2);
    let mut tau = Vec::with_capacity(r.len() + 2);
    let out = VirtualSegment {
        y: Vec::new(),
        tau: Vec::new(),
        side,
    };
    if out.has_left() {
        if s[j] == 0 {
            return contract(format!("zero junction sign left of segment {j}"));
        }
        y.push(v - sentinel_offset(lambda_hat, eps, s[j]));
        tau.push(1.0);
    }
    y.extend_from_slice(&w.y()[r.clone()]);
    tau.extend_from_slice(&w.tau()[r]);
    if out.has_right() {
        if s[j + 1] == 0 {
            return contract(format!("zero junction sign right of segment {j}"));
        }
        y.push(v + sentinel_offset(lambda_hat, eps, s[j + 1]));
        tau.push(1.0);
    }
    Ok(VirtualSegment { y, tau, ..out })
}

/// Merge values at or below `lambda_hat`, computed segment by segment on
/// virtual segments. Entry `b` is `None` for boundaries cut at `lambda_hat`.
pub fn virtual_subpaths(
    w: &WindowSamples,
    seg: &Segmentation,
    lambda_hat: f64,
    eps: f64,
) -> Result<Vec<Option<f64>>> {
    let mut out = vec![None; w.len() - 1];
    for j in 0..seg.num_segments() {
        let vs = build_virtual_segment(w, seg, j, lambda_hat, eps)?;
        let sub = merge_path_weighted(&vs.y, &vs.tau);
        let lam = sub.lambdas();
        let lo = usize::from(vs.has_left());
        let n = seg.segment_range(j).len();
        let start = seg.starts()[j];
        for (i, &l) in lam[lo..lo + n - 1].iter().enumerate() {
            out[start + i] = Some(l);
        }
    }
    Ok(out)
}

/// Which update branch a slide took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Incremental,
    /// No isolated middle: recomputed offline.
    OfflineNoIsolation,
    /// The spliced result failed verification: recomputed offline.
    OfflineGuard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlideStats {
    pub branch: Branch,
    pub lambda_hat: f64,
    pub bounds: IsolationBounds,
    /// Boundaries whose merge value was recomputed.
    pub rewritten: usize,
    /// Length of the non right-isolated tail of the previous window.
    pub non_right_isolated_len: usize,
}

/// Single-owner streaming state for one sensor.
#[derive(Debug, Clone)]
pub struct StreamState {
    window: WindowSamples,
    path: MergePath,
    cutting_point: f64,
    selected_lambda: f64,
    epsilon_lambda: f64,
    config: StreamConfig,
    last: Option<SlideStats>,
}

impl StreamState {
    pub fn new(window: WindowSamples, config: StreamConfig) -> Result<Self> {
        config.validate()?;
        if window.len() < 4 {
            return contract("streaming windows need at least 4 samples");
        }
        let path = compute_merge_path(&window)?;
        Ok(Self {
            window,
            path,
            cutting_point: 0.0,
            selected_lambda: 0.0,
            epsilon_lambda: config.epsilon_for(0.0),
            config,
            last: None,
        })
    }

    pub fn window(&self) -> &WindowSamples {
        &self.window
    }

    pub fn path(&self) -> &MergePath {
        &self.path
    }

    /// Cutting point used by the last slide.
    pub fn cutting_point(&self) -> f64 {
        self.cutting_point
    }

    pub fn selected_lambda(&self) -> f64 {
        self.selected_lambda
    }

    pub fn set_selected_lambda(&mut self, lambda: f64) {
        self.selected_lambda = lambda;
    }

    pub fn epsilon_lambda(&self) -> f64 {
        self.epsilon_lambda
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn last_slide(&self) -> Option<&SlideStats> {
        self.last.as_ref()
    }

    fn next_cutting_point(&self) -> f64 {
        match self.config.cutting {
            CuttingPolicy::PreviousSelection => self.selected_lambda,
            CuttingPolicy::Fixed(l) => l,
            CuttingPolicy::Quantile(q) => {
                let mut v = self.path.lambdas().to_vec();
                v.sort_by(f64::total_cmp);
                let idx = ((v.len() - 1) as f64 * q).round() as usize;
                v[idx]
            }
        }
    }

    /// Drops the oldest sample and appends `(y, t)`.
    ///
    /// On error the state is unchanged.
    pub fn slide(&mut self, y: f64, t: f64) -> Result<SlideStats> {
        if !y.is_finite() || !t.is_finite() {
            return Err(TvError::RejectedSample("non-finite sample".into()));
        }
        let t_last = *self.window.t().last().expect("window is nonempty");
        if !(t > t_last) {
            return Err(TvError::RejectedSample(format!(
                "timestamp {t} does not follow {t_last}"
            )));
        }
        let lambda_hat = self.next_cutting_point();
        let eps = self.config.epsilon_for(lambda_hat);

        let old = &self.window;
        let mut ny = Vec::with_capacity(old.len());
        ny.extend_from_slice(&old.y()[1..]);
        ny.push(y);
        let mut nt = Vec::with_capacity(old.len());
        nt.extend_from_slice(&old.t()[1..]);
        nt.push(t);
        let next =
            WindowSamples::new(ny, nt).map_err(|e| TvError::RejectedSample(e.to_string()))?;

        let old_seg = solution_at_lambda(old, &self.path, lambda_hat)?;
        let bounds = find_isolation_bounds(&old_seg, old.y()[0], y);
        let m = old.len();
        let non_right_isolated_len = bounds.right.map_or(m, |b| m - b.point);

        let spliced = if bounds.isolated().is_some() {
            splice(old, &old_seg, &self.path, &next, &bounds, lambda_hat, eps)
        } else {
            None
        };
        let (path, branch, rewritten) = match spliced {
            Some((p, rewritten)) => (p, Branch::Incremental, rewritten),
            None => {
                let branch = if bounds.isolated().is_some() {
                    Branch::OfflineGuard
                } else {
                    Branch::OfflineNoIsolation
                };
                (compute_merge_path(&next)?, branch, m - 1)
            }
        };
        if path.lambdas().iter().any(|l| !l.is_finite()) {
            return Err(TvError::CorruptedState(
                "slide produced a non-finite merge value".into(),
            ));
        }

        let stats = SlideStats {
            branch,
            lambda_hat,
            bounds,
            rewritten,
            non_right_isolated_len,
        };
        self.window = next;
        self.path = path;
        self.cutting_point = lambda_hat;
        self.epsilon_lambda = eps;
        self.last = Some(stats);
        Ok(stats)
    }

    /// Selects lambda on the current window and restores it.
    pub fn restore_current(&mut self, cfg: &SelectorConfig) -> Result<(f64, Segmentation)> {
        let lambda = select_lambda(&self.path, &self.window, cfg)?;
        let seg = solution_at_lambda(&self.window, &self.path, lambda)?;
        self.selected_lambda = lambda;
        Ok((lambda, seg))
    }
}

/// Functional form of [`StreamState::slide`].
pub fn slide_update(state: &StreamState, y: f64, t: f64) -> Result<StreamState> {
    let mut next = state.clone();
    next.slide(y, t)?;
    Ok(next)
}

/// Incremental path of `next`, or `None` when the splice cannot be verified.
fn splice(
    old: &WindowSamples,
    old_seg: &Segmentation,
    old_path: &MergePath,
    next: &WindowSamples,
    bounds: &IsolationBounds,
    lambda_hat: f64,
    eps: f64,
) -> Option<(MergePath, usize)> {
    let left = bounds.left?;
    let right = bounds.right?;
    let (p, l) = (left.point, right.point);
    let m = old.len();
    let (ny, ntau) = (next.y(), next.tau());
    let levels = old_seg.levels();
    let signs = old_seg.signs();

    // head: new points 0..p, then a sentinel standing in for old point p + 1
    let s_head = signs[left.segment + 1];
    let mut hy = ny[..p].to_vec();
    let mut ht = ntau[..p].to_vec();
    hy.push(levels[left.segment] + sentinel_offset(lambda_hat, eps, s_head));
    ht.push(1.0);
    let head = merge_path_weighted(&hy, &ht);

    // tail: a sentinel for old point l - 1, then new points l - 1..m
    let s_tail = signs[right.segment];
    let mut ty = Vec::with_capacity(m - l + 2);
    let mut tt = Vec::with_capacity(m - l + 2);
    ty.push(levels[right.segment] - sentinel_offset(lambda_hat, eps, s_tail));
    tt.push(1.0);
    ty.extend_from_slice(&ny[l - 1..]);
    tt.extend_from_slice(&ntau[l - 1..]);
    let tail = merge_path_weighted(&ty, &tt);

    if !(head.lambdas()[p - 1] > lambda_hat) || !(tail.lambdas()[0] > lambda_hat) {
        return None;
    }

    let nb = m - 1;
    let mut lambdas = Vec::with_capacity(nb);
    let mut drops = Vec::with_capacity(nb);
    lambdas.extend_from_slice(head.lambdas());
    drops.extend_from_slice(head.g_drops());
    lambdas.extend_from_slice(&old_path.lambdas()[p + 1..l - 1]);
    drops.extend_from_slice(&old_path.g_drops()[p + 1..l - 1]);
    lambdas.extend_from_slice(tail.lambdas());
    drops.extend_from_slice(tail.g_drops());
    debug_assert_eq!(lambdas.len(), nb);

    let cuts: Vec<usize> = (0..nb).filter(|&b| lambdas[b] > lambda_hat).collect();
    let seg = Segmentation::from_cuts(next, &cuts, lambda_hat).ok()?;
    if !is_optimal(next, &seg, lambda_hat) {
        return None;
    }

    // above lambda_hat: path of the segment-level sequence, shifted
    let reduced = merge_path_weighted(seg.levels(), seg.lengths());
    for (r, &b) in cuts.iter().enumerate() {
        let lam = lambda_hat + reduced.lambdas()[r];
        if !(lam > lambda_hat) {
            return None;
        }
        lambdas[b] = lam;
        drops[b] = reduced.g_drops()[r];
    }
    let rewritten = p + (m - l + 1) + cuts.len();
    Some((MergePath::from_parts(lambdas, drops).ok()?, rewritten))
}

/// Checks the optimality conditions of a restoration at `lambda`.
fn is_optimal(w: &WindowSamples, seg: &Segmentation, lambda: f64) -> bool {
    const TOL: f64 = 1e-9;
    let (y, tau) = (w.y(), w.tau());
    let v = seg.levels();
    let s = seg.signs();
    for j in 1..v.len() {
        if (v[j] - v[j - 1]) * f64::from(s[j]) <= 0.0 {
            return false;
        }
    }
    for j in 0..v.len() {
        let r = seg.segment_range(j);
        if lambda == 0.0 {
            if y[r].iter().any(|&yi| yi != v[j]) {
                return false;
            }
            continue;
        }
        let mut z = f64::from(s[j]);
        for i in r.start..r.end - 1 {
            z += 2.0 / lambda * tau[i] * (v[j] - y[i]);
            if z.abs() > 1.0 + TOL {
                return false;
            }
        }
    }
    true
}

/// Fixed-capacity buffer that turns a sample stream into sliding windows.
#[derive(Debug, Clone)]
pub struct WindowFeeder {
    capacity: usize,
    y: VecDeque<f64>,
    t: VecDeque<f64>,
}

impl WindowFeeder {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            y: VecDeque::with_capacity(capacity),
            t: VecDeque::with_capacity(capacity),
        }
    }

    /// Buffers a sample; returns the first full window once available.
    pub fn push(&mut self, y: f64, t: f64) -> Option<Result<WindowSamples>> {
        self.y.push_back(y);
        self.t.push_back(t);
        if self.y.len() > self.capacity {
            self.y.pop_front();
            self.t.pop_front();
        }
        (self.y.len() == self.capacity).then(|| {
            WindowSamples::new(
                self.y.iter().copied().collect(),
                self.t.iter().copied().collect(),
            )
        })
    }
}
