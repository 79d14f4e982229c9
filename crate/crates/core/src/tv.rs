// SPDX-License-Identifier: MIT OR Apache-2.0

//! Weighted 1D total-variation restoration: samples, segmentations and the
//! closed-form evaluations shared by the path, streaming and monitoring code.
//!
//! Indices are 0-based throughout. Boundary `b` separates points `b` and
//! `b + 1`, so a window of `m` points has `m - 1` boundaries.

use std::ops::Range;

use crate::error::{contract, Result};
use crate::path::MergePath;

/// One window of samples: values, timestamps and derived sampling periods.
///
/// `tau[i] = t[i] - t[i-1]` for `i >= 1` and `tau[0] = tau[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSamples {
    y: Vec<f64>,
    t: Vec<f64>,
    tau: Vec<f64>,
}

impl WindowSamples {
    pub fn new(y: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        if y.len() != t.len() {
            return contract(format!("y has {} samples but t has {}", y.len(), t.len()));
        }
        if y.len() < 2 {
            return contract("a window needs at least 2 samples");
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return contract(format!("y[{i}] is not finite"));
        }
        let tau = periods_from_timestamps(&t)?;
        Ok(Self { y, t, tau })
    }

    /// Samples at `t = 0, dt, 2 dt, ...`.
    pub fn uniform(y: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return contract("dt must be positive and finite");
        }
        let t = (0..y.len()).map(|i| i as f64 * dt).collect();
        Self::new(y, t)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn total_length(&self) -> f64 {
        self.tau.iter().sum()
    }

    /// Consumes the window and returns `(y, t)`.
    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.y, self.t)
    }
}

/// Sampling periods for strictly increasing timestamps, with `tau[0] = tau[1]`.
pub fn periods_from_timestamps(t: &[f64]) -> Result<Vec<f64>> {
    if t.len() < 2 {
        return contract("at least 2 timestamps are required");
    }
    let mut tau = Vec::with_capacity(t.len());
    tau.push(0.0);
    for i in 1..t.len() {
        let d = t[i] - t[i - 1];
        if !(d > 0.0) || !d.is_finite() {
            return contract(format!(
                "timestamps must be strictly increasing (t[{}]={}, t[{}]={})",
                i - 1,
                t[i - 1],
                i,
                t[i]
            ));
        }
        tau.push(d);
    }
    tau[0] = tau[1];
    Ok(tau)
}

pub(crate) fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Piecewise-constant restoration in segment form.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    len: usize,
    cut_boundaries: Vec<usize>,
    starts: Vec<usize>,
    levels: Vec<f64>,
    lengths: Vec<f64>,
    signs: Vec<i8>,
}

impl Segmentation {
    /// Builds the restoration at `lambda` for a given set of cut boundaries.
    ///
    /// Junction signs are taken from the data across each cut, which is the
    /// sign the adjacent levels keep along the whole merge path.
    pub fn from_cuts(w: &WindowSamples, cuts: &[usize], lambda: f64) -> Result<Self> {
        Self::from_weighted(w.y(), w.tau(), cuts, lambda)
    }

    pub(crate) fn from_weighted(
        y: &[f64],
        tau: &[f64],
        cuts: &[usize],
        lambda: f64,
    ) -> Result<Self> {
        let m = y.len();
        if tau.len() != m {
            return contract("y and tau lengths differ");
        }
        check_cuts(cuts, m)?;
        let mut signs = Vec::with_capacity(cuts.len() + 2);
        signs.push(0);
        for &b in cuts {
            let s = sign(y[b + 1] - y[b]);
            if s == 0 {
                return contract(format!("cut at boundary {b} separates equal samples"));
            }
            signs.push(s);
        }
        signs.push(0);
        let starts = starts_from_cuts(cuts);
        let (levels, lengths) = levels_for(y, tau, &starts, &signs, lambda);
        Ok(Self {
            len: m,
            cut_boundaries: cuts.to_vec(),
            starts,
            levels,
            lengths,
            signs,
        })
    }

    /// Number of points covered.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_segments(&self) -> usize {
        self.levels.len()
    }

    pub fn cut_boundaries(&self) -> &[usize] {
        &self.cut_boundaries
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Summed sampling periods of each segment.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `signs[0] = signs[K] = 0`, `signs[j] = sign(levels[j] - levels[j-1])`.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn segment_range(&self, j: usize) -> Range<usize> {
        let end = self.starts.get(j + 1).copied().unwrap_or(self.len);
        self.starts[j]..end
    }

    /// Index of the segment containing point `i`.
    pub fn segment_of(&self, i: usize) -> usize {
        self.starts.partition_point(|&s| s <= i) - 1
    }

    /// Per-point restored values.
    pub fn to_signal(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len);
        for (j, &v) in self.levels.iter().enumerate() {
            let r = self.segment_range(j);
            out.extend(std::iter::repeat_n(v, r.len()));
        }
        out
    }

    /// Segment index of every point.
    pub fn segment_ids(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len);
        for j in 0..self.num_segments() {
            out.extend(std::iter::repeat_n(j, self.segment_range(j).len()));
        }
        out
    }
}

fn check_cuts(cuts: &[usize], m: usize) -> Result<()> {
    for (k, &b) in cuts.iter().enumerate() {
        if b + 1 >= m {
            return contract(format!("boundary {b} out of range for {m} points"));
        }
        if k > 0 && cuts[k - 1] >= b {
            return contract("cut boundaries must be strictly increasing");
        }
    }
    Ok(())
}

fn starts_from_cuts(cuts: &[usize]) -> Vec<usize> {
    std::iter::once(0)
        .chain(cuts.iter().map(|b| b + 1))
        .collect()
}

fn levels_for(
    y: &[f64],
    tau: &[f64],
    starts: &[usize],
    signs: &[i8],
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let k = starts.len();
    let mut levels = Vec::with_capacity(k);
    let mut lengths = Vec::with_capacity(k);
    for j in 0..k {
        let end = starts.get(j + 1).copied().unwrap_or(y.len());
        let mut w = 0.0;
        let mut wy = 0.0;
        for i in starts[j]..end {
            w += tau[i];
            wy += tau[i] * y[i];
        }
        let mean = if end - starts[j] == 1 {
            y[starts[j]]
        } else {
            wy / w
        };
        let ds = f64::from(signs[j + 1] - signs[j]);
        levels.push(mean + lambda * ds / (2.0 * w));
        lengths.push(w);
    }
    (levels, lengths)
}

/// Weighted TV functional: `sum tau_i (y_i - u_i)^2 + lambda * sum |u_{i+1} - u_i|`.
pub fn evaluate_functional(w: &WindowSamples, u: &[f64], lambda: f64) -> Result<f64> {
    if u.len() != w.len() {
        return contract(format!("u has {} values, window has {}", u.len(), w.len()));
    }
    if !(lambda >= 0.0) {
        return contract("lambda must be nonnegative");
    }
    Ok(functional_weighted(w.y(), w.tau(), u, lambda))
}

pub(crate) fn functional_weighted(y: &[f64], tau: &[f64], u: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y
        .iter()
        .zip(tau)
        .zip(u)
        .map(|((y, t), u)| t * (y - u) * (y - u))
        .sum();
    let tv: f64 = u.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
    fit + lambda * tv
}

/// Segment levels for a fixed segmentation and junction signs.
///
/// `signs` has one entry per segment plus one, with zeros at both ends.
pub fn segment_levels(
    w: &WindowSamples,
    boundaries: &[usize],
    signs: &[i8],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_cuts(boundaries, w.len())?;
    let k = boundaries.len() + 1;
    if signs.len() != k + 1 {
        return contract(format!("expected {} signs, got {}", k + 1, signs.len()));
    }
    if signs[0] != 0 || signs[k] != 0 {
        return contract("end signs must be zero");
    }
    if signs.iter().any(|s| !(-1..=1).contains(s)) {
        return contract("signs must be -1, 0 or +1");
    }
    let starts = starts_from_cuts(boundaries);
    Ok(levels_for(w.y(), w.tau(), &starts, signs, lambda).0)
}

/// Restoration at `lambda`: cut every boundary whose merge value exceeds it.
pub fn solution_at_lambda(
    w: &WindowSamples,
    path: &MergePath,
    lambda: f64,
) -> Result<Segmentation> {
    if path.len() + 1 != w.len() {
        return contract(format!(
            "path has {} boundaries, window needs {}",
            path.len(),
            w.len() - 1
        ));
    }
    if !(lambda >= 0.0) {
        return contract("lambda must be nonnegative");
    }
    let cuts = path.cuts_above(lambda);
    Segmentation::from_cuts(w, &cuts, lambda)
}

/// Number of strict interior peaks and valleys of the level sequence.
pub fn extremum_count(seg: &Segmentation) -> usize {
    count_extrema(seg.signs())
}

pub(crate) fn count_extrema(signs: &[i8]) -> usize {
    signs
        .windows(2)
        .filter(|p| p[0] != 0 && p[0] == -p[1])
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::compute_merge_path;

    fn unit(y: &[f64]) -> WindowSamples {
        WindowSamples::uniform(y.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn periods_repeat_first_gap() {
        let w = WindowSamples::new(vec![0.0; 4], vec![0.0, 0.5, 1.5, 1.75]).unwrap();
        assert_eq!(w.tau(), &[0.5, 0.5, 1.0, 0.25]);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(WindowSamples::new(vec![1.0], vec![0.0]).is_err());
        assert!(WindowSamples::new(vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
        assert!(WindowSamples::new(vec![1.0, 2.0, 3.0], vec![0.0, 2.0, 1.0]).is_err());
        assert!(WindowSamples::new(vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(WindowSamples::new(vec![1.0, f64::NAN], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn functional_examples() {
        let w = unit(&[0.0, 2.0]);
        assert_eq!(evaluate_functional(&w, &[1.0, 1.0], 3.0).unwrap(), 2.0);
        assert_eq!(evaluate_functional(&w, &[0.0, 2.0], 1.0).unwrap(), 2.0);
        let w = unit(&[1.0, -2.0, 0.5]);
        // u = y leaves only the penalty
        assert_eq!(evaluate_functional(&w, w.y(), 2.0).unwrap(), 2.0 * 5.5);
        assert!(evaluate_functional(&w, &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn levels_examples() {
        let w = unit(&[0.0, 2.0]);
        assert_eq!(
            segment_levels(&w, &[0], &[0, 1, 0], 1.0).unwrap(),
            vec![0.5, 1.5]
        );
        let w = unit(&[0.0, 2.0, 1.0]);
        assert_eq!(
            segment_levels(&w, &[0], &[0, 1, 0], 1.0).unwrap(),
            vec![0.5, 1.25]
        );
        let w = WindowSamples::new(vec![1.0, 3.0, 5.0], vec![0.0, 1.0, 4.0]).unwrap();
        // tau = (1, 1, 3): weighted mean = (1 + 3 + 15) / 5
        assert_eq!(
            segment_levels(&w, &[], &[0, 0], 7.0).unwrap(),
            vec![19.0 / 5.0]
        );
        assert!(segment_levels(&w, &[], &[1, 0], 7.0).is_err());
        assert!(segment_levels(&w, &[2], &[0, 1, 0], 7.0).is_err());
    }

    #[test]
    fn solution_examples() {
        let w = unit(&[0.0, 2.0, 1.0]);
        let path = compute_merge_path(&w).unwrap();
        let seg = solution_at_lambda(&w, &path, 1.0).unwrap();
        assert_eq!(seg.cut_boundaries(), &[0]);
        assert_eq!(seg.to_signal(), vec![0.5, 1.25, 1.25]);
        assert_eq!(seg.segment_ids(), vec![0, 1, 1]);

        let seg0 = solution_at_lambda(&w, &path, 0.0).unwrap();
        assert_eq!(seg0.to_signal(), w.y());

        let big = solution_at_lambda(&w, &path, 10.0).unwrap();
        assert_eq!(big.num_segments(), 1);
        assert_eq!(big.to_signal(), vec![1.0; 3]);
    }

    #[test]
    fn ties_collapse_at_zero() {
        let w = unit(&[1.0, 1.0, 3.0, 3.0, 0.0]);
        let path = compute_merge_path(&w).unwrap();
        let seg = solution_at_lambda(&w, &path, 0.0).unwrap();
        assert_eq!(seg.num_segments(), 3);
        assert_eq!(seg.to_signal(), w.y());
    }

    #[test]
    fn extremum_examples() {
        let w = unit(&[1.0, 2.0, 3.0]);
        let seg = Segmentation::from_cuts(&w, &[0, 1], 0.0).unwrap();
        assert_eq!(extremum_count(&seg), 0);
        let w = unit(&[0.0, 2.0, 1.0]);
        let seg = Segmentation::from_cuts(&w, &[0, 1], 0.0).unwrap();
        assert_eq!(extremum_count(&seg), 1);
        let seg = Segmentation::from_cuts(&w, &[], 0.0).unwrap();
        assert_eq!(extremum_count(&seg), 0);
        let w = unit(&[0.0, 2.0, 1.0, 3.0]);
        let seg = Segmentation::from_cuts(&w, &[0, 1, 2], 0.0).unwrap();
        assert_eq!(extremum_count(&seg), 2);
    }

    #[test]
    fn segment_lookup() {
        let w = unit(&[0.0, 5.0, 5.5, 1.0, 2.0]);
        let seg = Segmentation::from_cuts(&w, &[0, 2], 0.0).unwrap();
        assert_eq!(seg.starts(), &[0, 1, 3]);
        assert_eq!(seg.segment_of(0), 0);
        assert_eq!(seg.segment_of(2), 1);
        assert_eq!(seg.segment_of(4), 2);
        assert_eq!(seg.segment_range(1), 1..3);
        let total: f64 = seg.lengths().iter().sum();
        assert_eq!(total, w.total_length());
    }
}
