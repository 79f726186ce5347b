//! The three clinical analyses: gait cycle parameters, 30-second chair-stand
//! counting, and tandem-stance balance timing. All three work on a single
//! activation envelope derived from the normalized 16-channel series.

use thiserror::Error;

use crate::model::{NormalizedSeries, CHANNELS};
use crate::num::Real;

#[derive(Debug, Error, PartialEq)]
pub enum HealthError {
    #[error("empty series")]
    EmptySeries,
    #[error("no gait cycles detected")]
    NoCyclesDetected,
    #[error("rest segment is empty or out of range")]
    NoRestSegment,
    #[error("series too short: {span_s:.2} s, need {needed_s:.2} s")]
    SeriesTooShort { span_s: f64, needed_s: f64 },
}

/// Detection knobs for the event-based analyses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventParams {
    /// Moving-average width for the envelope, seconds.
    pub smooth_s: f64,
    /// Hysteresis high threshold multiplier over rest sigma.
    pub theta_factor: f64,
    /// Hysteresis low (release) threshold multiplier over rest sigma.
    pub release_factor: f64,
    /// Events shorter than this are discarded, seconds.
    pub min_event_gap_s: f64,
    /// Minimum peak prominence for chair-stand counting, relative units.
    pub min_prominence: f64,
    /// Minimum spacing between counted chair-stand peaks, seconds.
    pub min_peak_gap_s: f64,
    /// Chair-stand counting window, seconds.
    pub chair_window_s: f64,
    /// Balance-loss threshold multiplier over rest sigma (tandem).
    pub loss_factor: f64,
}

impl Default for EventParams {
    fn default() -> Self {
        EventParams {
            smooth_s: 0.25,
            theta_factor: 3.0,
            release_factor: 1.5,
            min_event_gap_s: 0.4,
            min_prominence: 0.05,
            min_peak_gap_s: 1.0,
            chair_window_s: 30.0,
            loss_factor: 10.0,
        }
    }
}

/// One detected gait cycle: a stance and the swing that follows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitCycle {
    pub start_s: f64,
    pub stance_s: f64,
    pub swing_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaitReport {
    pub cycles: Vec<GaitCycle>,
    pub stance_pct: f64,
    pub swing_pct: f64,
    /// Cycles per minute of the instrumented leg (one step per cycle).
    pub cadence_spm: f64,
    /// Mean gait-cycle duration, seconds.
    pub cycle_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChairStandReport {
    pub count: usize,
    pub window_s: f64,
    pub stand_times_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TandemReport {
    pub shake_onset_s: Option<f64>,
    pub balance_loss_s: Option<f64>,
    pub rest_sigma: f64,
}

/// Per-sample mean of |x| across the 16 channels, then moving-average
/// smoothed over `smooth_s` (centered, truncated at the edges).
pub fn activation_envelope<F: Real>(
    series: &NormalizedSeries<F>,
    params: &EventParams,
) -> Result<Vec<f64>, HealthError> {
    if series.is_empty() {
        return Err(HealthError::EmptySeries);
    }
    let n = series.len();
    let mut raw = Vec::with_capacity(n);
    for t in 0..n {
        let sum: f64 = series
            .row(t)
            .iter()
            .map(|v| v.to_f64_lossy().abs())
            .sum();
        raw.push(sum / CHANNELS as f64);
    }
    Ok(moving_average(&raw, params.smooth_s, series.sample_rate_hz))
}

fn moving_average(x: &[f64], width_s: f64, rate_hz: f64) -> Vec<f64> {
    let n = x.len();
    let mut half = ((width_s * rate_hz).round() as usize / 2).max(0);
    if half * 2 + 1 > n {
        half = (n - 1) / 2;
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Mean and population std of `x` over the sample range for `rest` seconds.
fn rest_stats(
    envelope: &[f64],
    rate_hz: f64,
    rest: (f64, f64),
) -> Result<(f64, f64), HealthError> {
    let lo = (rest.0 * rate_hz).round() as usize;
    let hi = ((rest.1 * rate_hz).round() as usize).min(envelope.len());
    if lo >= hi {
        return Err(HealthError::NoRestSegment);
    }
    let seg = &envelope[lo..hi];
    let mean = seg.iter().sum::<f64>() / seg.len() as f64;
    let var = seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / seg.len() as f64;
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start_s: f64,
    end_s: f64,
}

/// Hysteresis thresholding, then half-amplitude boundary refinement per
/// segment. Refinement removes the widening that envelope smoothing adds to
/// near-rest threshold crossings; crossings are linearly interpolated.
fn activation_segments(
    envelope: &[f64],
    rate_hz: f64,
    rest_mean: f64,
    rest_sigma: f64,
    params: &EventParams,
) -> Vec<Segment> {
    let high = rest_mean + params.theta_factor * rest_sigma;
    let low = rest_mean + params.release_factor * rest_sigma;
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut active_from: Option<usize> = None;
    for (i, &v) in envelope.iter().enumerate() {
        match active_from {
            None if v > high => active_from = Some(i),
            Some(s) if v < low => {
                raw.push((s, i));
                active_from = None;
            }
            _ => {}
        }
    }
    if let Some(s) = active_from {
        raw.push((s, envelope.len()));
    }

    let min_len = params.min_event_gap_s * rate_hz;
    let mut out = Vec::new();
    for (s, e) in raw {
        if ((e - s) as f64) < min_len {
            continue;
        }
        out.push(refine_half_amplitude(envelope, rate_hz, rest_mean, s, e));
    }
    out
}

fn refine_half_amplitude(
    envelope: &[f64],
    rate_hz: f64,
    base: f64,
    s: usize,
    e: usize,
) -> Segment {
    let seg = &envelope[s..e.max(s + 1)];
    let (peak_off, peak) = seg
        .iter()
        .enumerate()
        .fold((0usize, f64::MIN), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    let half = base + 0.5 * (peak - base);
    let peak_idx = s + peak_off;

    // walk left from the peak to the half-amplitude crossing
    let mut i = peak_idx;
    while i > 0 && envelope[i - 1] > half {
        i -= 1;
    }
    let start = crossing_time(envelope, i, half, rate_hz, true);

    let mut j = peak_idx;
    while j + 1 < envelope.len() && envelope[j + 1] > half {
        j += 1;
    }
    let end = crossing_time(envelope, j, half, rate_hz, false);
    Segment {
        start_s: start,
        end_s: end.max(start),
    }
}

/// Interpolated time where the envelope crosses `level` adjacent to index
/// `i`; `rising` selects the sample before (rise) or after (fall).
fn crossing_time(envelope: &[f64], i: usize, level: f64, rate_hz: f64, rising: bool) -> f64 {
    if rising {
        if i == 0 {
            return 0.0;
        }
        let (a, b) = (envelope[i - 1], envelope[i]);
        let frac = if b > a { (level - a) / (b - a) } else { 1.0 };
        ((i - 1) as f64 + frac.clamp(0.0, 1.0)) / rate_hz
    } else {
        if i + 1 >= envelope.len() {
            return (envelope.len() - 1) as f64 / rate_hz;
        }
        let (a, b) = (envelope[i], envelope[i + 1]);
        let frac = if a > b { (a - level) / (a - b) } else { 1.0 };
        (i as f64 + frac.clamp(0.0, 1.0)) / rate_hz
    }
}

/// Stance/swing segmentation of a gait recording. Above-threshold segments
/// are stance; the gap to the next stance is the paired swing.
pub fn gait_analyze<F: Real>(
    series: &NormalizedSeries<F>,
    params: &EventParams,
    rest_segment: (f64, f64),
) -> Result<GaitReport, HealthError> {
    let envelope = activation_envelope(series, params)?;
    let rate = series.sample_rate_hz;
    let (rest_mean, rest_sigma) = rest_stats(&envelope, rate, rest_segment)?;
    let segments = activation_segments(&envelope, rate, rest_mean, rest_sigma, params);
    if segments.len() < 2 {
        return Err(HealthError::NoCyclesDetected);
    }
    let mut cycles = Vec::with_capacity(segments.len() - 1);
    for pair in segments.windows(2) {
        let stance_s = pair[0].end_s - pair[0].start_s;
        let swing_s = pair[1].start_s - pair[0].end_s;
        if stance_s <= 0.0 || swing_s <= 0.0 {
            continue;
        }
        cycles.push(GaitCycle {
            start_s: pair[0].start_s,
            stance_s,
            swing_s,
        });
    }
    if cycles.is_empty() {
        return Err(HealthError::NoCyclesDetected);
    }
    let stance_pct = cycles
        .iter()
        .map(|c| c.stance_s / (c.stance_s + c.swing_s) * 100.0)
        .sum::<f64>()
        / cycles.len() as f64;
    let cycle_s =
        cycles.iter().map(|c| c.stance_s + c.swing_s).sum::<f64>() / cycles.len() as f64;
    Ok(GaitReport {
        stance_pct,
        swing_pct: 100.0 - stance_pct,
        cadence_spm: 60.0 / cycle_s,
        cycle_s,
        cycles,
    })
}

/// Count sit-to-stand repetitions in the first `chair_window_s` seconds via
/// prominence-filtered peak picking on the envelope.
pub fn chair_stand_count<F: Real>(
    series: &NormalizedSeries<F>,
    params: &EventParams,
) -> Result<ChairStandReport, HealthError> {
    let envelope = activation_envelope(series, params)?;
    let rate = series.sample_rate_hz;
    let span_s = (series.len() - 1) as f64 / rate;
    if span_s < params.chair_window_s {
        return Err(HealthError::SeriesTooShort {
            span_s,
            needed_s: params.chair_window_s,
        });
    }
    let limit = ((params.chair_window_s * rate).round() as usize).min(envelope.len());
    let window = &envelope[..limit];
    let peaks = prominent_peaks(window, params.min_prominence);
    let min_gap = (params.min_peak_gap_s * rate).round() as usize;
    let kept = enforce_min_gap(window, &peaks, min_gap);
    let mut stand_times_s: Vec<f64> = kept.iter().map(|&i| i as f64 / rate).collect();
    stand_times_s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ChairStandReport {
        count: stand_times_s.len(),
        window_s: params.chair_window_s,
        stand_times_s,
    })
}

/// Indices of local maxima whose prominence is at least `min_prominence`.
fn prominent_peaks(x: &[f64], min_prominence: f64) -> Vec<usize> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1usize;
    while i + 1 < n {
        if x[i] > x[i - 1] && x[i] >= x[i + 1] {
            // plateau: advance to its right edge
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 >= n || x[j + 1] < x[i] {
                let mid = (i + j) / 2;
                if prominence(x, mid) >= min_prominence {
                    peaks.push(mid);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Topographic prominence: height above the higher of the two valley floors
/// between this peak and the nearest higher terrain (or the signal edge).
fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    let mut i = peak;
    while i > 0 {
        i -= 1;
        left_min = left_min.min(x[i]);
        if x[i] > h {
            break;
        }
    }
    let mut right_min = h;
    let mut j = peak;
    while j + 1 < x.len() {
        j += 1;
        right_min = right_min.min(x[j]);
        if x[j] > h {
            break;
        }
    }
    h - left_min.max(right_min)
}

/// Greedy tallest-first selection with a minimum index gap.
fn enforce_min_gap(x: &[f64], peaks: &[usize], min_gap: usize) -> Vec<usize> {
    let mut order: Vec<usize> = peaks.to_vec();
    order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap().then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for p in order {
        if kept.iter().all(|&q| p.abs_diff(q) >= min_gap) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    kept
}

/// Shake-onset and balance-loss timing from the rolling standard deviation
/// of the envelope over 0.5 s (trailing window).
pub fn tandem_analyze<F: Real>(
    series: &NormalizedSeries<F>,
    params: &EventParams,
    rest_segment: (f64, f64),
) -> Result<TandemReport, HealthError> {
    let envelope = activation_envelope(series, params)?;
    let rate = series.sample_rate_hz;
    let (_, rest_sigma) = rest_stats(&envelope, rate, rest_segment)?;
    let roll = rolling_std(&envelope, (0.5 * rate).round() as usize);

    let shake_level = params.theta_factor * rest_sigma;
    let loss_level = params.loss_factor * rest_sigma;
    let sustain = (0.5 * rate).round() as usize;

    let mut shake_onset_s = None;
    let mut run_start: Option<usize> = None;
    for (i, &v) in roll.iter().enumerate() {
        if v > shake_level {
            let s = *run_start.get_or_insert(i);
            if i - s + 1 >= sustain {
                shake_onset_s = Some(s as f64 / rate);
                break;
            }
        } else {
            run_start = None;
        }
    }
    let balance_loss_s = roll
        .iter()
        .position(|&v| v > loss_level)
        .map(|i| i as f64 / rate);

    Ok(TandemReport {
        shake_onset_s,
        balance_loss_s,
        rest_sigma,
    })
}

/// Population std over a trailing window of `width` samples (shorter at the
/// start while the window fills).
fn rolling_std(x: &[f64], width: usize) -> Vec<f64> {
    let width = width.max(2);
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for i in 0..n {
        sum += x[i];
        sumsq += x[i] * x[i];
        if i >= width {
            sum -= x[i - width];
            sumsq -= x[i - width] * x[i - width];
        }
        let m = (i + 1).min(width) as f64;
        let mean = sum / m;
        let var = (sumsq / m - mean * mean).max(0.0);
        out.push(var.sqrt());
    }
    out
}
