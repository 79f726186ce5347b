//! Synthetic 16-channel recordings with known ground truth: the ten motions,
//! the three health-test scenarios, and wire-protocol streaming.
//!
//! Everything is a pure function of (seed, config); the same seed yields
//! bit-identical sessions.

use std::io::Write;
use std::net::TcpStream;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{MotionLabel, SensorFrame, Session, CHANNELS};
use crate::wire::{encode_frame, volts_to_adc, AdcScale, WireFrame};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("negative pressure {0} kPa")]
    NegativePressure(f64),
    #[error("invalid scenario parameters: {0}")]
    InvalidScenarioParams(String),
    #[error("connection refused to {endpoint}: {source}")]
    ConnectionRefused {
        endpoint: String,
        source: std::io::Error,
    },
    #[error("send stalled past the backpressure timeout")]
    BackpressureTimeout,
}

/// Piecewise-linear pressure response: steep below the knee, shallower
/// above, clamped at saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureModel {
    pub knee_kpa: f64,
    /// Relative voltage change per kPa below the knee.
    pub s_low: f64,
    /// Per kPa above the knee; strictly smaller than s_low.
    pub s_high: f64,
    /// Maximum relative change.
    pub saturation: f64,
}

impl Default for PressureModel {
    fn default() -> Self {
        PressureModel {
            knee_kpa: 10.0,
            s_low: 0.02,
            s_high: 0.005,
            saturation: 0.5,
        }
    }
}

pub fn pressure_to_relative(p_kpa: f64, model: &PressureModel) -> Result<f64, SimError> {
    if p_kpa < 0.0 {
        return Err(SimError::NegativePressure(p_kpa));
    }
    let rel = if p_kpa <= model.knee_kpa {
        model.s_low * p_kpa
    } else {
        model.s_low * model.knee_kpa + model.s_high * (p_kpa - model.knee_kpa)
    };
    Ok(rel.min(model.saturation))
}

/// Per-motion signal shape: channel weights, burst cadence and amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionProfile {
    pub label: MotionLabel,
    /// Per-channel pressure amplitude weights in [0, 1]; ch05 dominant.
    pub spatial_gain: [f64; CHANNELS],
    /// Active fraction of each repetition period.
    pub duty: f64,
    pub rep_hz: f64,
    pub amplitude_kpa: f64,
}

impl MotionProfile {
    /// The fixed default profile for each motion. Channel 5 (index 4) has
    /// the maximal gain everywhere; the secondary response center, width,
    /// duty and amplitude differ per motion.
    pub fn for_motion(label: MotionLabel) -> MotionProfile {
        // (secondary center, secondary width, duty, amplitude kPa)
        let (center, width, duty, amplitude_kpa) = match label {
            MotionLabel::LiftHeel => (0.0, 1.2, 0.40, 12.0),
            MotionLabel::LiftToes => (2.0, 1.0, 0.55, 8.0),
            MotionLabel::FootInversion => (7.0, 0.9, 0.45, 6.0),
            MotionLabel::StretchForward => (9.0, 1.4, 0.60, 10.0),
            MotionLabel::StretchBackward => (11.0, 1.0, 0.35, 14.0),
            MotionLabel::StandingInversion => (13.0, 1.3, 0.50, 7.0),
            MotionLabel::TurnRound => (15.0, 1.1, 0.65, 16.0),
            MotionLabel::StepInSitu => (6.0, 2.2, 0.42, 18.0),
            MotionLabel::WalkForward => (10.0, 2.6, 0.58, 17.0),
            MotionLabel::WalkBackward => (14.0, 2.4, 0.38, 15.0),
            MotionLabel::Rest => {
                return MotionProfile {
                    label,
                    spatial_gain: [0.0; CHANNELS],
                    duty: 0.0,
                    rep_hz: 0.5,
                    amplitude_kpa: 0.0,
                }
            }
        };
        let mut spatial_gain = [0.0f64; CHANNELS];
        for (c, g) in spatial_gain.iter_mut().enumerate() {
            let primary = gauss_bump(c as f64, 4.0, 1.5);
            let secondary = 0.8 * gauss_bump(c as f64, center, width);
            *g = primary + secondary;
        }
        // rescale so the dominant channel (ch05) sits at 1.0
        let max = spatial_gain[4];
        for g in spatial_gain.iter_mut() {
            *g = (*g / max).min(1.0);
        }
        MotionProfile {
            label,
            spatial_gain,
            duty,
            rep_hz: 0.5,
            amplitude_kpa,
        }
    }
}

fn gauss_bump(x: f64, center: f64, width: f64) -> f64 {
    (-((x - center) * (x - center)) / (2.0 * width * width)).exp()
}

/// Corpus-level generation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub subjects: usize,
    pub sets_per_motion: usize,
    pub trial_s: f64,
    pub sample_rate_hz: f64,
    /// Additive Gaussian noise, relative units.
    pub noise_sigma: f64,
    /// Linear baseline drift, relative units per second.
    pub drift_per_s: f64,
    /// Log-normal inter-subject amplitude sigma.
    pub subject_scale_sigma: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            subjects: 10,
            sets_per_motion: 4,
            trial_s: 90.0,
            sample_rate_hz: 60.0,
            noise_sigma: 0.02,
            drift_per_s: 0.0,
            subject_scale_sigma: 0.1,
            seed: 0,
        }
    }
}

/// Rest preamble before activity in every generated session, seconds.
pub const PREAMBLE_S: f64 = 2.0;
const BASELINE_V: f64 = 1.0;

/// Ground truth accompanying one synthetic motion session.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTruth {
    /// Start of each complete burst, seconds.
    pub burst_times_s: Vec<f64>,
    pub duty: f64,
    pub rep_hz: f64,
}

pub fn subject_name(index: usize) -> String {
    format!("s{:02}", index + 1)
}

/// Synthesize one motion trial: rest preamble, then a raised-cosine burst
/// train shaped by the motion profile, per-subject scaling, noise and drift.
pub fn synth_session(
    motion: MotionLabel,
    subject_index: usize,
    set_index: u8,
    cfg: &SimConfig,
) -> (Session, MotionTruth) {
    let profile = MotionProfile::for_motion(motion);
    let pressure = PressureModel::default();

    // subject-level variation is reproducible independent of motion/set
    let mut subj_rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0x5B, subject_index as u64, 0));
    let subject_scale = (cfg.subject_scale_sigma * normal(&mut subj_rng)).exp();
    let mut gain_jitter = [0.0f64; CHANNELS];
    for j in gain_jitter.iter_mut() {
        *j = 1.0 + 0.05 * normal(&mut subj_rng);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix(
        cfg.seed,
        motion as u64 + 1,
        subject_index as u64,
        set_index as u64,
    ));

    let n = (cfg.trial_s * cfg.sample_rate_hz).round() as usize;
    let period = 1.0 / profile.rep_hz;
    let burst_len = profile.duty * period;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.sample_rate_hz;
        let active = t >= PREAMBLE_S && profile.amplitude_kpa > 0.0;
        let burst = if active {
            let phase = (t - PREAMBLE_S) % period;
            if phase < burst_len {
                0.5 * (1.0 - (2.0 * std::f64::consts::PI * phase / burst_len).cos())
            } else {
                0.0
            }
        } else {
            0.0
        };
        let mut volts = [0.0f64; CHANNELS];
        for c in 0..CHANNELS {
            let p_kpa = (profile.amplitude_kpa
                * profile.spatial_gain[c]
                * gain_jitter[c]
                * subject_scale
                * burst)
                .max(0.0);
            let rel = pressure_to_relative(p_kpa, &pressure).expect("non-negative pressure");
            let noise = cfg.noise_sigma * normal(&mut rng);
            volts[c] = BASELINE_V * (1.0 + rel + cfg.drift_per_s * t + noise);
        }
        frames.push(SensorFrame {
            timestamp_us: (t * 1e6).round() as u64,
            volts,
            seq: i as u32,
        });
    }

    let mut burst_times_s = Vec::new();
    if profile.amplitude_kpa > 0.0 {
        let mut start = PREAMBLE_S;
        while start + burst_len <= cfg.trial_s {
            burst_times_s.push(start);
            start += period;
        }
    }
    let session = Session {
        subject_id: subject_name(subject_index),
        motion,
        set_index,
        frames,
        sample_rate_hz: cfg.sample_rate_hz,
    };
    (
        session,
        MotionTruth {
            burst_times_s,
            duty: profile.duty,
            rep_hz: profile.rep_hz,
        },
    )
}

/// Health-test scenarios with their ground-truth parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HealthScenario {
    Gait {
        /// Stance fraction of the cycle.
        duty: f64,
        cycle_s: f64,
        n_cycles: usize,
    },
    ChairStand {
        stands: usize,
    },
    Tandem {
        shake_s: Option<f64>,
        loss_s: Option<f64>,
        total_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum HealthTruth {
    Gait {
        duty: f64,
        cycle_s: f64,
        cadence_cpm: f64,
    },
    ChairStand {
        stand_times_s: Vec<f64>,
    },
    Tandem {
        shake_s: Option<f64>,
        loss_s: Option<f64>,
    },
}

/// Gait edge smoothing, seconds. Edges are centered on the nominal
/// stance/swing transitions so the half-amplitude width of each pulse equals
/// the ground-truth stance duration.
const GAIT_EDGE_S: f64 = 0.1;

pub fn synth_health(
    scenario: HealthScenario,
    cfg: &SimConfig,
) -> Result<(Session, HealthTruth), SimError> {
    match scenario {
        HealthScenario::Gait {
            duty,
            cycle_s,
            n_cycles,
        } => {
            if !(0.0 < duty && duty < 1.0) || cycle_s <= 0.0 || n_cycles < 2 {
                return Err(SimError::InvalidScenarioParams(format!(
                    "gait duty {duty}, cycle {cycle_s}, cycles {n_cycles}"
                )));
            }
            if duty * cycle_s <= GAIT_EDGE_S || (1.0 - duty) * cycle_s <= GAIT_EDGE_S {
                return Err(SimError::InvalidScenarioParams(
                    "stance or swing shorter than the edge smoothing".into(),
                ));
            }
            let total_s = PREAMBLE_S + n_cycles as f64 * cycle_s + 0.5;
            let stance_len = duty * cycle_s;
            let session = synth_envelope_session(
                cfg,
                total_s,
                MotionLabel::WalkForward,
                |t| {
                    if t < PREAMBLE_S {
                        return 0.0;
                    }
                    let ta = t - PREAMBLE_S;
                    if ta >= n_cycles as f64 * cycle_s {
                        return 0.0;
                    }
                    let phase = ta % cycle_s;
                    // raised-cosine edges straddling the transitions
                    let rise = smooth_step(phase + GAIT_EDGE_S / 2.0, GAIT_EDGE_S);
                    let fall = smooth_step(stance_len - phase + GAIT_EDGE_S / 2.0, GAIT_EDGE_S);
                    rise.min(fall).max(0.0)
                },
                0x6A17,
            );
            Ok((
                session,
                HealthTruth::Gait {
                    duty,
                    cycle_s,
                    cadence_cpm: 60.0 / cycle_s,
                },
            ))
        }
        HealthScenario::ChairStand { stands } => {
            if stands == 0 {
                return Err(SimError::InvalidScenarioParams("zero stands".into()));
            }
            let first = 3.0;
            let last = 29.0;
            let spacing = if stands > 1 {
                (last - first) / (stands - 1) as f64
            } else {
                0.0
            };
            let width = spacing.min(1.8).max(0.8);
            let centers: Vec<f64> = (0..stands).map(|k| first + k as f64 * spacing).collect();
            let total_s = 32.0;
            let centers_for_signal = centers.clone();
            let session = synth_envelope_session(
                cfg,
                total_s,
                MotionLabel::Rest,
                move |t| {
                    centers_for_signal
                        .iter()
                        .map(|&c| hann_burst(t, c, width))
                        .sum()
                },
                0xC4A1,
            );
            Ok((
                session,
                HealthTruth::ChairStand {
                    stand_times_s: centers,
                },
            ))
        }
        HealthScenario::Tandem {
            shake_s,
            loss_s,
            total_s,
        } => {
            if let (Some(s), Some(l)) = (shake_s, loss_s) {
                if s > l {
                    return Err(SimError::InvalidScenarioParams(
                        "shake must not follow loss".into(),
                    ));
                }
            }
            if total_s <= PREAMBLE_S + 2.0 {
                return Err(SimError::InvalidScenarioParams("trial too short".into()));
            }
            let session = synth_tandem_session(cfg, total_s, shake_s, loss_s);
            Ok((
                session,
                HealthTruth::Tandem {
                    shake_s,
                    loss_s,
                },
            ))
        }
    }
}

/// Shared scaffolding: map a unitless envelope shape in [0,1] through the
/// pressure model at a fixed 15 kPa peak, add noise and drift.
fn synth_envelope_session(
    cfg: &SimConfig,
    total_s: f64,
    label: MotionLabel,
    shape: impl Fn(f64) -> f64,
    stream_tag: u64,
) -> Session {
    let profile = MotionProfile::for_motion(MotionLabel::WalkForward);
    let pressure = PressureModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, stream_tag, 0, 0));
    let n = (total_s * cfg.sample_rate_hz).round() as usize;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.sample_rate_hz;
        let burst = shape(t).clamp(0.0, 1.5);
        let mut volts = [0.0f64; CHANNELS];
        for c in 0..CHANNELS {
            let p_kpa = 15.0 * profile.spatial_gain[c] * burst;
            let rel = pressure_to_relative(p_kpa, &pressure).expect("non-negative pressure");
            let noise = cfg.noise_sigma * normal(&mut rng);
            volts[c] = BASELINE_V * (1.0 + rel + cfg.drift_per_s * t + noise);
        }
        frames.push(SensorFrame {
            timestamp_us: (t * 1e6).round() as u64,
            volts,
            seq: i as u32,
        });
    }
    Session {
        subject_id: "sim".into(),
        motion: label,
        set_index: 1,
        frames,
        sample_rate_hz: cfg.sample_rate_hz,
    }
}

/// Tandem stance: quiet hold, then a low-amplitude sway ramping in at the
/// shake time, then a large erratic excursion at the loss time.
fn synth_tandem_session(
    cfg: &SimConfig,
    total_s: f64,
    shake_s: Option<f64>,
    loss_s: Option<f64>,
) -> Session {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0x7A2D, 0, 0));
    let n = (total_s * cfg.sample_rate_hz).round() as usize;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.sample_rate_hz;
        let mut common = 0.0f64;
        if let Some(s) = shake_s {
            if t >= s {
                // sway amplitude ramps in briefly to avoid a step
                // discontinuity; kept short so the onset stays sharp
                let ramp = ((t - s) / 0.3).min(1.0);
                common += 0.045 * ramp * (2.0 * std::f64::consts::PI * 1.5 * (t - s)).sin();
            }
        }
        if let Some(l) = loss_s {
            if t >= l {
                common += 0.6 * (2.0 * std::f64::consts::PI * 2.0 * (t - l)).sin()
                    + 0.4 * normal(&mut rng);
            }
        }
        let mut volts = [0.0f64; CHANNELS];
        for v in volts.iter_mut() {
            let noise = cfg.noise_sigma * normal(&mut rng);
            *v = BASELINE_V * (1.0 + common + cfg.drift_per_s * t + noise);
        }
        frames.push(SensorFrame {
            timestamp_us: (t * 1e6).round() as u64,
            volts,
            seq: i as u32,
        });
    }
    Session {
        subject_id: "sim".into(),
        motion: MotionLabel::Rest,
        set_index: 1,
        frames,
        sample_rate_hz: cfg.sample_rate_hz,
    }
}

fn smooth_step(u: f64, edge: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= edge {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * (1.0 - u / edge)).cos())
    }
}

fn hann_burst(t: f64, center: f64, width: f64) -> f64 {
    let u = (t - center) / (width / 2.0);
    if u.abs() < 1.0 {
        0.5 * (1.0 + (std::f64::consts::PI * u).cos())
    } else {
        0.0
    }
}

/// Standard normal via Box-Muller on the seeded stream.
fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// splitmix64-style seed derivation; each stream gets its own generator.
fn mix(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(b.wrapping_mul(0xBF58476D1CE4E5B9))
        .wrapping_add(c.wrapping_mul(0x94D049BB133111EB));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SendStats {
    pub frames_sent: u64,
}

/// Encode a session over the wire protocol and send it at
/// `sample_rate * rate_multiplier`, pre-encoding so pacing is independent of
/// generation time.
pub fn stream_session(
    session: &Session,
    endpoint: &str,
    rate_multiplier: f64,
    scale: &AdcScale,
) -> Result<SendStats, SimError> {
    let encoded: Vec<[u8; crate::wire::FRAME_LEN]> = session
        .frames
        .iter()
        .map(|f| {
            let mut adc = [0u16; CHANNELS];
            for (a, &v) in adc.iter_mut().zip(&f.volts) {
                *a = volts_to_adc(v, scale);
            }
            encode_frame(&WireFrame {
                seq: f.seq,
                timestamp_us: f.timestamp_us,
                adc,
            })
        })
        .collect();

    let mut stream = TcpStream::connect(endpoint).map_err(|source| SimError::ConnectionRefused {
        endpoint: endpoint.to_string(),
        source,
    })?;
    stream
        .set_write_timeout(Some(Duration::from_secs(10)))
        .ok();

    let frame_interval = 1.0 / (session.sample_rate_hz * rate_multiplier.max(1e-9));
    let start = Instant::now();
    let mut sent = 0u64;
    for (i, bytes) in encoded.iter().enumerate() {
        let target = frame_interval * i as f64;
        let elapsed = start.elapsed().as_secs_f64();
        if target > elapsed {
            std::thread::sleep(Duration::from_secs_f64(target - elapsed));
        }
        match stream.write_all(bytes) {
            Ok(()) => sent += 1,
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock
                || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                return Err(SimError::BackpressureTimeout)
            }
            Err(source) => {
                return Err(SimError::ConnectionRefused {
                    endpoint: endpoint.to_string(),
                    source,
                })
            }
        }
    }
    Ok(SendStats { frames_sent: sent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressure_response_piecewise_values() {
        let m = PressureModel::default();
        assert_eq!(pressure_to_relative(0.0, &m).unwrap(), 0.0);
        // continuity at the knee from both branches
        let at_knee = pressure_to_relative(10.0, &m).unwrap();
        assert!((at_knee - 0.2).abs() < 1e-15);
        let above = pressure_to_relative(10.0 + 1e-9, &m).unwrap();
        assert!((above - at_knee).abs() < 1e-10);
        // p=15: 0.02*10 + 0.005*5 = 0.225
        assert!((pressure_to_relative(15.0, &m).unwrap() - 0.225).abs() < 1e-15);
        assert!(matches!(
            pressure_to_relative(-1.0, &m),
            Err(SimError::NegativePressure(_))
        ));
    }

    #[test]
    fn pressure_response_is_monotone() {
        let m = PressureModel::default();
        let mut last = -1.0;
        let mut p = 0.0;
        while p <= 50.0 {
            let r = pressure_to_relative(p, &m).unwrap();
            assert!(r >= last, "non-monotone at {p} kPa");
            last = r;
            p += 0.1;
        }
    }

    #[test]
    fn profiles_have_ch05_dominant_and_are_separated() {
        let profiles: Vec<MotionProfile> = MotionLabel::MOTIONS
            .iter()
            .map(|&m| MotionProfile::for_motion(m))
            .collect();
        for p in &profiles {
            let max = p
                .spatial_gain
                .iter()
                .cloned()
                .fold(f64::MIN, f64::max);
            assert_eq!(p.spatial_gain[4], max, "{}: ch05 not dominant", p.label);
            assert!(p.spatial_gain.iter().any(|&g| g > 0.0));
        }
        // pairwise distance between unit-normalized gain vectors >= 0.15
        for i in 0..profiles.len() {
            for j in (i + 1)..profiles.len() {
                let a = unit(&profiles[i].spatial_gain);
                let b = unit(&profiles[j].spatial_gain);
                let d: f64 = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    d >= 0.15,
                    "{} vs {}: distance {d}",
                    profiles[i].label,
                    profiles[j].label
                );
            }
        }
    }

    fn unit(g: &[f64; CHANNELS]) -> Vec<f64> {
        let norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        g.iter().map(|v| v / norm).collect()
    }

    #[test]
    fn burst_count_matches_closed_form() {
        let cfg = SimConfig::default();
        let (_, truth) = synth_session(MotionLabel::WalkForward, 0, 1, &cfg);
        // floor((90 - 2) * 0.5) = 44 complete bursts
        assert_eq!(truth.burst_times_s.len(), 44);
        assert_eq!(truth.burst_times_s[0], 2.0);
    }

    #[test]
    fn noiseless_rest_is_exactly_baseline() {
        let cfg = SimConfig {
            noise_sigma: 0.0,
            drift_per_s: 0.0,
            trial_s: 5.0,
            ..SimConfig::default()
        };
        let (session, truth) = synth_session(MotionLabel::Rest, 2, 3, &cfg);
        assert!(truth.burst_times_s.is_empty());
        for f in &session.frames {
            for &v in &f.volts {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SimConfig {
            trial_s: 10.0,
            ..SimConfig::default()
        };
        let (a, _) = synth_session(MotionLabel::TurnRound, 1, 2, &cfg);
        let (b, _) = synth_session(MotionLabel::TurnRound, 1, 2, &cfg);
        assert_eq!(a.frames, b.frames);
        let cfg2 = SimConfig { seed: 1, ..cfg };
        let (c, _) = synth_session(MotionLabel::TurnRound, 1, 2, &cfg2);
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn rest_envelope_varies_less_than_motion() {
        let cfg = SimConfig {
            trial_s: 20.0,
            ..SimConfig::default()
        };
        let rest_std = session_envelope_std(&synth_session(MotionLabel::Rest, 0, 1, &cfg).0);
        for &motion in &MotionLabel::MOTIONS {
            let std = session_envelope_std(&synth_session(motion, 0, 1, &cfg).0);
            assert!(std > rest_std, "{motion}: {std} <= rest {rest_std}");
        }
    }

    fn session_envelope_std(session: &Session) -> f64 {
        let env: Vec<f64> = session
            .frames
            .iter()
            .map(|f| {
                f.volts.iter().map(|v| (v - 1.0).abs()).sum::<f64>() / CHANNELS as f64
            })
            .collect();
        let mean = env.iter().sum::<f64>() / env.len() as f64;
        (env.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / env.len() as f64).sqrt()
    }

    #[test]
    fn gait_truth_markers() {
        let cfg = SimConfig::default();
        let (session, truth) = synth_health(
            HealthScenario::Gait {
                duty: 0.6,
                cycle_s: 1.2,
                n_cycles: 10,
            },
            &cfg,
        )
        .unwrap();
        match truth {
            HealthTruth::Gait {
                duty,
                cycle_s,
                cadence_cpm,
            } => {
                assert_eq!(duty, 0.6);
                assert_eq!(cycle_s, 1.2);
                assert!((cadence_cpm - 50.0).abs() < 1e-12);
            }
            other => panic!("wrong truth {other:?}"),
        }
        assert!(session.span_s() > 12.0);
    }

    #[test]
    fn gait_noiseless_stance_fraction_is_exact() {
        // half-amplitude support of the noiseless pulse = duty * cycle
        let cfg = SimConfig {
            noise_sigma: 0.0,
            ..SimConfig::default()
        };
        let (session, _) = synth_health(
            HealthScenario::Gait {
                duty: 0.6,
                cycle_s: 1.2,
                n_cycles: 5,
            },
            &cfg,
        )
        .unwrap();
        // measure one cycle on channel 5 against the half-peak level
        let rate = session.sample_rate_hz;
        let lo = (PREAMBLE_S * rate) as usize;
        let hi = ((PREAMBLE_S + 1.2) * rate) as usize;
        let peak = session.frames[lo..hi]
            .iter()
            .map(|f| f.volts[4] - 1.0)
            .fold(f64::MIN, f64::max);
        let above = session.frames[lo..hi]
            .iter()
            .filter(|f| f.volts[4] - 1.0 > peak / 2.0)
            .count();
        let fraction = above as f64 / (hi - lo) as f64;
        assert!((fraction - 0.6).abs() < 0.02, "fraction {fraction}");
    }

    #[test]
    fn chairstand_truth_counts() {
        let cfg = SimConfig::default();
        let (_, truth) =
            synth_health(HealthScenario::ChairStand { stands: 12 }, &cfg).unwrap();
        match truth {
            HealthTruth::ChairStand { stand_times_s } => {
                assert_eq!(stand_times_s.len(), 12);
                for pair in stand_times_s.windows(2) {
                    assert!(pair[1] > pair[0]);
                    assert!(pair[1] <= 30.0);
                }
            }
            other => panic!("wrong truth {other:?}"),
        }
    }

    #[test]
    fn tandem_truth_markers() {
        let cfg = SimConfig::default();
        let (_, truth) = synth_health(
            HealthScenario::Tandem {
                shake_s: Some(8.0),
                loss_s: Some(12.0),
                total_s: 16.0,
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(
            truth,
            HealthTruth::Tandem {
                shake_s: Some(8.0),
                loss_s: Some(12.0)
            }
        );
        assert!(matches!(
            synth_health(
                HealthScenario::Tandem {
                    shake_s: Some(12.0),
                    loss_s: Some(8.0),
                    total_s: 16.0
                },
                &cfg
            ),
            Err(SimError::InvalidScenarioParams(_))
        ));
    }
}
