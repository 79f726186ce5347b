//! Fixed and sliding window segmentation of a normalized series.

use thiserror::Error;

use crate::model::{MotionLabel, NormalizedSeries, Provenance, CHANNELS};
use crate::num::Real;

/// Window length grid used by the parameter sweep, seconds.
pub const LENGTH_GRID_S: [f64; 3] = [2.0, 4.0, 6.0];
/// Overlap grid for the sweep; 0 is the fixed-window case.
pub const OVERLAP_GRID: [f64; 5] = [0.0, 0.25, 0.30, 0.50, 0.60];

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("series too short: {len} samples, window needs {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("invalid window spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    Fixed,
    Sliding,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub length_s: f64,
    pub overlap_frac: f64,
    pub mode: WindowMode,
}

impl WindowSpec {
    pub fn fixed(length_s: f64) -> Result<WindowSpec, WindowError> {
        WindowSpec::new(length_s, 0.0, WindowMode::Fixed)
    }

    pub fn sliding(length_s: f64, overlap_frac: f64) -> Result<WindowSpec, WindowError> {
        WindowSpec::new(length_s, overlap_frac, WindowMode::Sliding)
    }

    pub fn new(
        length_s: f64,
        overlap_frac: f64,
        mode: WindowMode,
    ) -> Result<WindowSpec, WindowError> {
        if !(length_s > 0.0) {
            return Err(WindowError::InvalidSpec(format!(
                "length_s must be positive, got {length_s}"
            )));
        }
        if !(0.0..1.0).contains(&overlap_frac) {
            return Err(WindowError::InvalidSpec(format!(
                "overlap_frac must be in [0,1), got {overlap_frac}"
            )));
        }
        if mode == WindowMode::Fixed && overlap_frac != 0.0 {
            return Err(WindowError::InvalidSpec(
                "fixed mode forces overlap_frac = 0".into(),
            ));
        }
        Ok(WindowSpec {
            length_s,
            overlap_frac,
            mode,
        })
    }

    /// Window length in samples at the given rate.
    pub fn samples(&self, sample_rate_hz: f64) -> usize {
        (self.length_s * sample_rate_hz).round() as usize
    }

    /// Stride between window starts, samples.
    pub fn stride(&self, sample_rate_hz: f64) -> usize {
        let w = self.samples(sample_rate_hz) as f64;
        ((w * (1.0 - self.overlap_frac)).round() as usize).max(1)
    }
}

/// Closed-form window count for a series of `len` samples.
pub fn window_count(len: usize, window: usize, stride: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / stride + 1
    }
}

/// One analysis window referencing a contiguous slice of its source series.
#[derive(Debug, Clone)]
pub struct Window<'a, F: Real> {
    /// Row-major samples, `n` rows by 16 channels.
    pub x: &'a [F],
    pub n: usize,
    pub start_index: usize,
    pub label: MotionLabel,
    pub provenance: Provenance,
}

impl<'a, F: Real> Window<'a, F> {
    pub fn channel_iter(&self, channel: usize) -> impl Iterator<Item = F> + 'a {
        self.x[channel..].iter().step_by(CHANNELS).copied()
    }
}

/// Cut a series into windows of `spec`, discarding the trailing remainder.
pub fn segment<'a, F: Real>(
    series: &'a NormalizedSeries<F>,
    spec: &WindowSpec,
) -> Result<Vec<Window<'a, F>>, WindowError> {
    let w = spec.samples(series.sample_rate_hz);
    let stride = spec.stride(series.sample_rate_hz);
    let len = series.len();
    if len < w {
        return Err(WindowError::SeriesTooShort { len, window: w });
    }
    let count = window_count(len, w, stride);
    let mut out = Vec::with_capacity(count);
    let mut start = 0usize;
    while start + w <= len {
        out.push(Window {
            x: series.rows_slice(start, w),
            n: w,
            start_index: start,
            label: series.provenance.motion,
            provenance: series.provenance.clone(),
        });
        start += stride;
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}
