//! Domain types shared by the whole pipeline: raw frames, sessions, the
//! motion vocabulary, baseline estimation and relative-rate-of-change
//! normalization.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::num::Real;

/// Number of sensor channels on the array.
pub const CHANNELS: usize = 16;

/// Baselines with magnitude at or below this are rejected as degenerate.
pub const EPSILON_V0: f64 = 1e-6;

/// Default rest window used to estimate the per-channel baseline, seconds.
pub const DEFAULT_BASELINE_WINDOW_S: f64 = 2.0;

/// Nominal frame rate of the 16-channel array, Hz. Timestamps are
/// authoritative; this is metadata.
pub const NOMINAL_SAMPLE_RATE_HZ: f64 = 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("insufficient data: frames span {span_s:.3} s, need {needed_s:.3} s")]
    InsufficientData { span_s: f64, needed_s: f64 },
    #[error("degenerate baseline on channel {channel}: |v0| = {value:e} <= {epsilon:e}")]
    DegenerateBaseline {
        channel: usize,
        value: f64,
        epsilon: f64,
    },
    #[error("unknown motion label {0:?}")]
    UnknownLabel(String),
}

/// One timestamped 16-channel voltage sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    /// Microseconds since session start.
    pub timestamp_us: u64,
    /// Channel voltages, index 0..15 maps to ch01..ch16.
    pub volts: [f64; CHANNELS],
    /// Monotonically increasing frame counter.
    pub seq: u32,
}

impl SensorFrame {
    pub fn time_s(&self) -> f64 {
        self.timestamp_us as f64 * 1e-6
    }
}

/// The ten lower-limb motions plus rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionLabel {
    /// A1: lift heel
    LiftHeel,
    /// A2: lift toes
    LiftToes,
    /// A3: foot inversion (sitting)
    FootInversion,
    /// A4: stretch leg forward
    StretchForward,
    /// A5: stretch leg backward
    StretchBackward,
    /// A6: standing with foot inversion
    StandingInversion,
    /// A7: turn round
    TurnRound,
    /// A8: step in situ
    StepInSitu,
    /// A9: walk forward
    WalkForward,
    /// A10: walk backward
    WalkBackward,
    /// Stationary rest
    Rest,
}

impl MotionLabel {
    /// The ten activity labels, in order A1..A10 (rest excluded).
    pub const MOTIONS: [MotionLabel; 10] = [
        MotionLabel::LiftHeel,
        MotionLabel::LiftToes,
        MotionLabel::FootInversion,
        MotionLabel::StretchForward,
        MotionLabel::StretchBackward,
        MotionLabel::StandingInversion,
        MotionLabel::TurnRound,
        MotionLabel::StepInSitu,
        MotionLabel::WalkForward,
        MotionLabel::WalkBackward,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MotionLabel::LiftHeel => "A1",
            MotionLabel::LiftToes => "A2",
            MotionLabel::FootInversion => "A3",
            MotionLabel::StretchForward => "A4",
            MotionLabel::StretchBackward => "A5",
            MotionLabel::StandingInversion => "A6",
            MotionLabel::TurnRound => "A7",
            MotionLabel::StepInSitu => "A8",
            MotionLabel::WalkForward => "A9",
            MotionLabel::WalkBackward => "A10",
            MotionLabel::Rest => "REST",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            MotionLabel::LiftHeel => "lift heel",
            MotionLabel::LiftToes => "lift toes",
            MotionLabel::FootInversion => "foot inversion",
            MotionLabel::StretchForward => "stretch leg forward",
            MotionLabel::StretchBackward => "stretch leg backward",
            MotionLabel::StandingInversion => "standing with foot inversion",
            MotionLabel::TurnRound => "turn round",
            MotionLabel::StepInSitu => "step in situ",
            MotionLabel::WalkForward => "walk forward",
            MotionLabel::WalkBackward => "walk backward",
            MotionLabel::Rest => "rest",
        }
    }
}

impl fmt::Display for MotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MotionLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A1" => Ok(MotionLabel::LiftHeel),
            "A2" => Ok(MotionLabel::LiftToes),
            "A3" => Ok(MotionLabel::FootInversion),
            "A4" => Ok(MotionLabel::StretchForward),
            "A5" => Ok(MotionLabel::StretchBackward),
            "A6" => Ok(MotionLabel::StandingInversion),
            "A7" => Ok(MotionLabel::TurnRound),
            "A8" => Ok(MotionLabel::StepInSitu),
            "A9" => Ok(MotionLabel::WalkForward),
            "A10" => Ok(MotionLabel::WalkBackward),
            "REST" => Ok(MotionLabel::Rest),
            other => Err(ModelError::UnknownLabel(other.to_string())),
        }
    }
}

/// Where a recording (or a window cut from it) came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub subject: String,
    pub motion: MotionLabel,
    pub set_index: u8,
}

/// One recorded trial: a subject performing one motion for one set.
#[derive(Debug, Clone)]
pub struct Session {
    pub subject_id: String,
    pub motion: MotionLabel,
    /// 1-based set number, 1..=4.
    pub set_index: u8,
    pub frames: Vec<SensorFrame>,
    pub sample_rate_hz: f64,
}

impl Session {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            subject: self.subject_id.clone(),
            motion: self.motion,
            set_index: self.set_index,
        }
    }

    /// Duration covered by the frames, seconds.
    pub fn span_s(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => (b.timestamp_us - a.timestamp_us) as f64 * 1e-6,
            _ => 0.0,
        }
    }
}

/// Per-channel baseline voltage V0 estimated from a rest window.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEstimate {
    pub v0: [f64; CHANNELS],
    pub window_s: f64,
}

impl BaselineEstimate {
    fn validate(&self) -> Result<(), ModelError> {
        for (c, &v) in self.v0.iter().enumerate() {
            if !v.is_finite() || v.abs() <= EPSILON_V0 {
                return Err(ModelError::DegenerateBaseline {
                    channel: c,
                    value: v,
                    epsilon: EPSILON_V0,
                });
            }
        }
        Ok(())
    }
}

/// Relative-rate-of-change series X = (V - V0) / V0, row-major,
/// rows = time, columns = the 16 channels.
#[derive(Debug, Clone)]
pub struct NormalizedSeries<F: Real> {
    data: Vec<F>,
    rows: usize,
    pub sample_rate_hz: f64,
    pub provenance: Provenance,
}

impl<F: Real> NormalizedSeries<F> {
    pub fn from_rows(
        data: Vec<F>,
        sample_rate_hz: f64,
        provenance: Provenance,
    ) -> NormalizedSeries<F> {
        assert!(data.len() % CHANNELS == 0, "row-major data must be a multiple of 16");
        let rows = data.len() / CHANNELS;
        NormalizedSeries {
            data,
            rows,
            sample_rate_hz,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, t: usize) -> &[F] {
        &self.data[t * CHANNELS..(t + 1) * CHANNELS]
    }

    pub fn rows_slice(&self, start: usize, n: usize) -> &[F] {
        &self.data[start * CHANNELS..(start + n) * CHANNELS]
    }

    pub fn value(&self, t: usize, channel: usize) -> F {
        self.data[t * CHANNELS + channel]
    }
}

/// Mean voltage per channel over the first `window_s` seconds of `frames`.
pub fn estimate_baseline(
    frames: &[SensorFrame],
    window_s: f64,
) -> Result<BaselineEstimate, ModelError> {
    assert!(window_s > 0.0, "window_s must be positive");
    let span_s = match (frames.first(), frames.last()) {
        (Some(a), Some(b)) => (b.timestamp_us - a.timestamp_us) as f64 * 1e-6,
        _ => 0.0,
    };
    if span_s < window_s {
        return Err(ModelError::InsufficientData {
            span_s,
            needed_s: window_s,
        });
    }
    let t0 = frames[0].timestamp_us;
    let limit_us = t0 + (window_s * 1e6).round() as u64;
    let mut sums = [0.0f64; CHANNELS];
    let mut n = 0usize;
    for f in frames.iter().take_while(|f| f.timestamp_us < limit_us) {
        for c in 0..CHANNELS {
            sums[c] += f.volts[c];
        }
        n += 1;
    }
    let mut v0 = [0.0f64; CHANNELS];
    for c in 0..CHANNELS {
        v0[c] = sums[c] / n as f64;
    }
    let est = BaselineEstimate { v0, window_s };
    est.validate()?;
    Ok(est)
}

/// X[t][c] = (V[t][c] - V0[c]) / V0[c] for every frame and channel.
pub fn normalize<F: Real>(
    session: &Session,
    baseline: &BaselineEstimate,
) -> Result<NormalizedSeries<F>, ModelError> {
    baseline.validate()?;
    let mut data = Vec::with_capacity(session.frames.len() * CHANNELS);
    for frame in &session.frames {
        for c in 0..CHANNELS {
            let x = (frame.volts[c] - baseline.v0[c]) / baseline.v0[c];
            data.push(F::from_f64_lossy(x));
        }
    }
    Ok(NormalizedSeries::from_rows(
        data,
        session.sample_rate_hz,
        session.provenance(),
    ))
}
