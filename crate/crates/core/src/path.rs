// SPDX-License-Identifier: MIT OR Apache-2.0

//! Event-driven merge path of the weighted 1D TV problem.
//!
//! Between merge events every segment level moves linearly in lambda with
//! slope `(s_right - s_left) / (2 T)`. Adjacent levels never cross, so the
//! sign across a surviving boundary is always the sign of the data jump at
//! that boundary, and a segment once formed is never split again.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{contract, Result};
use crate::tv::{count_extrema, sign, WindowSamples};

const NONE: usize = usize::MAX;

/// Per-boundary merge values and extremum-count drops for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct MergePath {
    lambdas: Vec<f64>,
    g_drops: Vec<u8>,
}

/// One merge on the path, in replay order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeEvent {
    pub lambda: f64,
    /// First point of the left segment before the merge.
    pub left_segment: usize,
    /// First point of the right segment before the merge.
    pub right_segment: usize,
    pub boundary_index: usize,
    pub g_before: usize,
    pub g_after: usize,
}

impl MergePath {
    pub fn from_parts(lambdas: Vec<f64>, g_drops: Vec<u8>) -> Result<Self> {
        if lambdas.len() != g_drops.len() {
            return contract("lambdas and g_drops lengths differ");
        }
        if let Some(i) = lambdas.iter().position(|l| !(*l >= 0.0) || l.is_nan()) {
            return contract(format!("merge value {i} is negative or NaN"));
        }
        if g_drops.iter().any(|&d| d > 2) {
            return contract("a single merge removes at most two extrema");
        }
        Ok(Self { lambdas, g_drops })
    }

    /// Number of boundaries (`m - 1`).
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn g_drops(&self) -> &[u8] {
        &self.g_drops
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambdas.iter().copied().fold(0.0, f64::max)
    }

    /// Boundaries sorted by ascending merge value, ties by boundary index.
    pub fn event_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.lambdas.len()).collect();
        order.sort_by(|&a, &b| self.lambdas[a].total_cmp(&self.lambdas[b]).then(a.cmp(&b)));
        order
    }

    /// Boundaries still cut at `lambda`: `{b : lambda_b > lambda}`.
    pub fn cuts_above(&self, lambda: f64) -> Vec<usize> {
        self.lambdas
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > lambda)
            .map(|(b, _)| b)
            .collect()
    }

    /// Replays the path in event order.
    pub fn events(&self, w: &WindowSamples) -> Result<Vec<MergeEvent>> {
        self.check_window(w)?;
        let m = w.len();
        // start_of[end] / end_of[start] for the live segments
        let mut start_of: Vec<usize> = (0..m).collect();
        let mut end_of: Vec<usize> = (0..m).collect();
        let mut g = initial_extrema(w.y());
        let mut out = Vec::with_capacity(self.len());
        for b in self.event_order() {
            let ls = start_of[b];
            let rs = b + 1;
            let re = end_of[rs];
            start_of[re] = ls;
            end_of[ls] = re;
            let drop = usize::from(self.g_drops[b]);
            let g_after = g.checked_sub(drop).ok_or_else(|| {
                crate::error::TvError::Contract("extremum drops exceed the initial count".into())
            })?;
            out.push(MergeEvent {
                lambda: self.lambdas[b],
                left_segment: ls,
                right_segment: rs,
                boundary_index: b,
                g_before: g,
                g_after,
            });
            g = g_after;
        }
        Ok(out)
    }

    /// Largest relative difference between matching merge values.
    pub fn max_relative_diff(&self, other: &MergePath) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.lambdas
            .iter()
            .zip(&other.lambdas)
            .map(|(a, b)| {
                let scale = a.abs().max(b.abs()).max(1e-300);
                if a == b {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_window(&self, w: &WindowSamples) -> Result<()> {
        if self.len() + 1 != w.len() {
            return contract(format!(
                "path has {} boundaries but the window has {} points",
                self.len(),
                w.len()
            ));
        }
        Ok(())
    }
}

/// Extremum count at lambda = 0, with runs of equal samples collapsed.
pub fn initial_extrema(y: &[f64]) -> usize {
    let mut signs = Vec::with_capacity(y.len() + 1);
    signs.push(0i8);
    signs.extend(y.windows(2).map(|p| sign(p[1] - p[0])).filter(|&s| s != 0));
    signs.push(0);
    count_extrema(&signs)
}

/// Full merge path of a window.
pub fn compute_merge_path(w: &WindowSamples) -> Result<MergePath> {
    if w.len() < 2 {
        return contract("a merge path needs at least 2 samples");
    }
    Ok(merge_path_weighted(w.y(), w.tau()))
}

/// Step function of the extremum count: `(lambda, g)` pairs where `g` holds
/// from `lambda` up to the next step.
pub fn g_curve(path: &MergePath, w: &WindowSamples) -> Result<Vec<(f64, usize)>> {
    path.check_window(w)?;
    let mut g = initial_extrema(w.y());
    let mut steps = vec![(0.0, g)];
    for b in path.event_order() {
        let d = usize::from(path.g_drops[b]);
        if d == 0 {
            continue;
        }
        g = g.saturating_sub(d);
        let lambda = path.lambdas[b];
        match steps.last_mut() {
            Some(last) if last.0 == lambda => last.1 = g,
            _ => steps.push((lambda, g)),
        }
    }
    Ok(steps)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    lambda: f64,
    boundary: usize,
    version: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lambda
            .total_cmp(&self.lambda)
            .then(other.boundary.cmp(&self.boundary))
            .then(other.version.cmp(&self.version))
    }
}

fn extremum(a: i8, b: i8) -> u8 {
    u8::from(a != 0 && a == -b)
}

struct Homotopy {
    jump: Vec<i8>,
    end: Vec<usize>,
    prev: Vec<usize>,
    next: Vec<usize>,
    weight: Vec<f64>,
    weighted_sum: Vec<f64>,
    version: Vec<u32>,
    heap: BinaryHeap<Candidate>,
    lambdas: Vec<f64>,
    drops: Vec<u8>,
}

impl Homotopy {
    fn left_sign(&self, s: usize) -> i8 {
        if self.prev[s] == NONE {
            0
        } else {
            self.jump[s - 1]
        }
    }

    fn right_sign(&self, s: usize) -> i8 {
        if self.next[s] == NONE {
            0
        } else {
            self.jump[self.end[s]]
        }
    }

    fn slope(&self, s: usize) -> f64 {
        f64::from(self.right_sign(s) - self.left_sign(s)) / (2.0 * self.weight[s])
    }

    fn mean(&self, s: usize) -> f64 {
        self.weighted_sum[s] / self.weight[s]
    }

    /// Queues the merge candidate of segment `s` with its right neighbour.
    fn push_candidate(&mut self, s: usize, current: f64) {
        let n = self.next[s];
        if n == NONE {
            return;
        }
        let b = self.end[s];
        self.version[b] = self.version[b].wrapping_add(1);
        let rate = self.slope(s) - self.slope(n);
        if f64::from(self.jump[b]) * rate <= 0.0 {
            // parallel levels: waits until a neighbour changes
            return;
        }
        let lambda = ((self.mean(n) - self.mean(s)) / rate).max(current);
        self.heap.push(Candidate {
            lambda,
            boundary: b,
            version: self.version[b],
        });
    }

    fn run(mut self) -> (Vec<f64>, Vec<u8>) {
        let mut s = 0;
        while s != NONE {
            self.push_candidate(s, 0.0);
            s = self.next[s];
        }
        while let Some(c) = self.heap.pop() {
            if c.version != self.version[c.boundary] {
                continue;
            }
            let b = c.boundary;
            let right = b + 1;
            let left = self.prev[right];
            let sl = self.left_sign(left);
            let sm = self.jump[b];
            let sr = self.right_sign(right);
            let before = extremum(sl, sm) + extremum(sm, sr);
            let after = extremum(sl, sr);
            self.lambdas[b] = c.lambda;
            self.drops[b] = before - after;

            self.weight[left] += self.weight[right];
            self.weighted_sum[left] += self.weighted_sum[right];
            self.end[left] = self.end[right];
            let nn = self.next[right];
            self.next[left] = nn;
            if nn != NONE {
                self.prev[nn] = left;
            }
            let pl = self.prev[left];
            if pl != NONE {
                self.push_candidate(pl, c.lambda);
            }
            self.push_candidate(left, c.lambda);
        }
        (self.lambdas, self.drops)
    }
}

/// Merge path for arbitrary positive weights (virtual and reduced problems).
pub(crate) fn merge_path_weighted(y: &[f64], tau: &[f64]) -> MergePath {
    let m = y.len();
    debug_assert_eq!(tau.len(), m);
    let nb = m.saturating_sub(1);
    let jump: Vec<i8> = y.windows(2).map(|p| sign(p[1] - p[0])).collect();

    let mut end = vec![NONE; m];
    let mut prev = vec![NONE; m];
    let mut next = vec![NONE; m];
    let mut weight = vec![0.0; m];
    let mut weighted_sum = vec![0.0; m];
    let lambdas = vec![0.0; nb];
    let drops = vec![0u8; nb];

    // equal neighbours start merged
    let mut last = NONE;
    let mut i = 0;
    while i < m {
        let start = i;
        let mut w = tau[i];
        let mut wy = tau[i] * y[i];
        while i + 1 < m && jump[i] == 0 {
            i += 1;
            w += tau[i];
            wy += tau[i] * y[i];
        }
        end[start] = i;
        weight[start] = w;
        weighted_sum[start] = wy;
        prev[start] = last;
        if last != NONE {
            next[last] = start;
        }
        last = start;
        i += 1;
    }

    let h = Homotopy {
        jump,
        end,
        prev,
        next,
        weight,
        weighted_sum,
        version: vec![0; nb],
        heap: BinaryHeap::with_capacity(nb),
        lambdas,
        drops,
    };
    let (lambdas, g_drops) = h.run();
    MergePath { lambdas, g_drops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tv::{extremum_count, solution_at_lambda};

    fn unit(y: &[f64]) -> WindowSamples {
        WindowSamples::uniform(y.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn two_points() {
        let p = compute_merge_path(&unit(&[0.0, 2.0])).unwrap();
        assert_eq!(p.lambdas(), &[2.0]);
        assert_eq!(p.g_drops(), &[0]);
    }

    #[test]
    fn three_points() {
        let w = unit(&[0.0, 2.0, 1.0]);
        let p = compute_merge_path(&w).unwrap();
        assert!((p.lambdas()[0] - 2.0).abs() < 1e-15);
        assert!((p.lambdas()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.event_order(), vec![1, 0]);
        let ev = p.events(&w).unwrap();
        assert_eq!(ev[0].boundary_index, 1);
        assert_eq!((ev[0].left_segment, ev[0].right_segment), (1, 2));
        assert_eq!((ev[0].g_before, ev[0].g_after), (1, 0));
        assert_eq!((ev[1].left_segment, ev[1].right_segment), (0, 1));
        assert_eq!(
            g_curve(&p, &w).unwrap(),
            vec![(0.0, 1), (p.lambdas()[1], 0)]
        );
    }

    #[test]
    fn constant_window_is_all_ties() {
        let w = WindowSamples::new(vec![4.0; 3], vec![0.0, 0.3, 1.0]).unwrap();
        let p = compute_merge_path(&w).unwrap();
        assert_eq!(p.lambdas(), &[0.0, 0.0]);
        assert_eq!(g_curve(&p, &w).unwrap(), vec![(0.0, 0)]);
    }

    #[test]
    fn monotone_has_flat_g() {
        let w = unit(&[0.0, 1.0, 1.5, 4.0, 4.5]);
        let p = compute_merge_path(&w).unwrap();
        assert_eq!(g_curve(&p, &w).unwrap(), vec![(0.0, 0)]);
        assert!(p.lambdas().iter().all(|l| l.is_finite()));
    }

    #[test]
    fn short_window_rejected() {
        assert!(MergePath::from_parts(vec![-1.0], vec![0]).is_err());
        assert!(MergePath::from_parts(vec![1.0], vec![3]).is_err());
        let w = unit(&[1.0, 2.0]);
        let p = MergePath::from_parts(vec![1.0, 1.0], vec![0, 0]).unwrap();
        assert!(g_curve(&p, &w).is_err());
    }

    #[test]
    fn drops_match_segmentations() {
        let w = unit(&[0.3, 2.0, -1.0, 0.5, 0.4, 3.0, 2.5, -0.7, 1.1]);
        let p = compute_merge_path(&w).unwrap();
        for ev in p.events(&w).unwrap() {
            let below = solution_at_lambda(&w, &p, ev.lambda * (1.0 - 1e-9)).unwrap();
            let at = solution_at_lambda(&w, &p, ev.lambda).unwrap();
            assert_eq!(extremum_count(&below), ev.g_before);
            assert_eq!(extremum_count(&at), ev.g_after);
        }
    }

    #[test]
    fn last_merge_gives_single_segment() {
        let w = unit(&[0.3, 2.0, -1.0, 0.5, 0.4]);
        let p = compute_merge_path(&w).unwrap();
        assert_eq!(p.cuts_above(p.max_lambda()), Vec::<usize>::new());
    }
}
