// SPDX-License-Identifier: MIT OR Apache-2.0

//! Weighted 1D total-variation denoising with full merge paths, automatic
//! lambda selection, sliding-window updates and residual-variance monitoring.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiment;
pub mod monitor;
pub mod path;
pub mod select;
pub mod sim;
pub mod stream;
pub mod tv;

pub use error::{Result, TvError};
pub use path::{compute_merge_path, g_curve, MergeEvent, MergePath};
pub use select::{select_lambda, SelectorConfig, SelectorKind};
pub use stream::{
    build_virtual_segment, find_isolation_bounds, slide_update, CuttingPolicy, IsolationBounds,
    StreamConfig, StreamState,
};
pub use tv::{
    evaluate_functional, extremum_count, segment_levels, solution_at_lambda, Segmentation,
    WindowSamples,
};
