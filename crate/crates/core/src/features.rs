//! The four per-channel time-domain features (mean, RMS, standard deviation,
//! signal energy) and assembly of the 64-dimensional window feature vector.

use thiserror::Error;

use crate::model::{MotionLabel, Provenance, CHANNELS};
use crate::num::Real;
use crate::windowing::Window;

/// Features per channel: mean, rms, std, energy, in this order.
pub const FEATURES_PER_CHANNEL: usize = 4;
/// Total feature vector length.
pub const FEATURE_DIM: usize = CHANNELS * FEATURES_PER_CHANNEL;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("empty window")]
    EmptyWindow,
}

/// Feature vector for one window, ordered
/// (ch01.mean, ch01.rms, ch01.std, ch01.energy, ch02.mean, ...).
#[derive(Debug, Clone)]
pub struct FeatureVector<F: Real> {
    pub values: Vec<F>,
    pub label: MotionLabel,
    pub provenance: Provenance,
    pub window_start: usize,
}

pub fn feat_mean<F: Real>(x: &[F]) -> Result<F, FeatureError> {
    if x.is_empty() {
        return Err(FeatureError::EmptyWindow);
    }
    let n = F::from_f64_lossy(x.len() as f64);
    Ok(x.iter().copied().sum::<F>() / n)
}

pub fn feat_rms<F: Real>(x: &[F]) -> Result<F, FeatureError> {
    Ok(feat_energy(x)?.sqrt())
}

/// Population standard deviation (divisor N).
pub fn feat_std<F: Real>(x: &[F]) -> Result<F, FeatureError> {
    let mean = feat_mean(x)?;
    let n = F::from_f64_lossy(x.len() as f64);
    let ss = x
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<F>();
    Ok((ss / n).sqrt())
}

/// Mean of squares, exactly RMS^2.
pub fn feat_energy<F: Real>(x: &[F]) -> Result<F, FeatureError> {
    if x.is_empty() {
        return Err(FeatureError::EmptyWindow);
    }
    let n = F::from_f64_lossy(x.len() as f64);
    Ok(x.iter().map(|&v| v * v).sum::<F>() / n)
}

/// All four features of one channel sequence.
pub fn channel_features<F: Real>(x: &[F]) -> Result<[F; FEATURES_PER_CHANNEL], FeatureError> {
    Ok([feat_mean(x)?, feat_rms(x)?, feat_std(x)?, feat_energy(x)?])
}

/// 16 channels x 4 features in canonical order.
pub fn featurize<F: Real>(window: &Window<'_, F>) -> Result<FeatureVector<F>, FeatureError> {
    if window.n == 0 {
        return Err(FeatureError::EmptyWindow);
    }
    let mut values = Vec::with_capacity(FEATURE_DIM);
    let mut column = Vec::with_capacity(window.n);
    for c in 0..CHANNELS {
        column.clear();
        column.extend(window.channel_iter(c));
        values.extend(channel_features(&column)?);
    }
    Ok(FeatureVector {
        values,
        label: window.label,
        provenance: window.provenance.clone(),
        window_start: window.start_index,
    })
}

/// CSV header for exported feature matrices.
pub fn feature_csv_header() -> String {
    let mut h = String::from("label,subject,set");
    for c in 1..=CHANNELS {
        for name in ["mean", "rms", "std", "energy"] {
            h.push_str(&format!(",ch{c:02}_{name}"));
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NormalizedSeries;
    use crate::windowing::{segment, WindowSpec};
    use proptest::prelude::*;

    #[test]
    fn mean_cases() {
        assert_eq!(feat_mean(&[5.0; 7]).unwrap(), 5.0);
        assert_eq!(feat_mean(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(feat_mean(&[-1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(feat_mean::<f64>(&[]), Err(FeatureError::EmptyWindow));
    }

    #[test]
    fn rms_cases() {
        assert!((feat_rms(&[2.5f64; 9]).unwrap() - 2.5).abs() < 1e-15);
        assert!((feat_rms(&[1.0, 2.0, 3.0]).unwrap() - (14.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(feat_rms(&[3.0, -3.0]).unwrap(), 3.0);
    }

    #[test]
    fn std_cases() {
        assert_eq!(feat_std(&[4.2; 5]).unwrap(), 0.0);
        assert!((feat_std(&[1.0, 2.0, 3.0]).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        // translation invariance
        let a: f64 = feat_std(&[1.0, 2.0, 5.0, 9.0]).unwrap();
        let b = feat_std(&[101.0, 102.0, 105.0, 109.0]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn energy_cases() {
        assert_eq!(feat_energy(&[0.0; 4]).unwrap(), 0.0);
        assert!((feat_energy(&[1.0f64, 2.0, 3.0]).unwrap() - 14.0 / 3.0).abs() < 1e-12);
    }

    fn one_window(data: Vec<f64>, n: usize) -> NormalizedSeries<f64> {
        assert_eq!(data.len(), n * CHANNELS);
        NormalizedSeries::from_rows(
            data,
            n as f64, // 1-second window at rate n
            Provenance {
                subject: "s".into(),
                motion: MotionLabel::LiftHeel,
                set_index: 1,
            },
        )
    }

    #[test]
    fn featurize_zero_window_is_zero() {
        let s = one_window(vec![0.0; 10 * CHANNELS], 10);
        let w = segment(&s, &WindowSpec::fixed(1.0).unwrap()).unwrap();
        let f = featurize(&w[0]).unwrap();
        assert_eq!(f.values.len(), FEATURE_DIM);
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn featurize_is_channel_local() {
        // only ch05 (index 4) carries signal; only slots 16..20 respond
        let n = 12;
        let mut data = vec![0.0f64; n * CHANNELS];
        for t in 0..n {
            data[t * CHANNELS + 4] = (t + 1) as f64;
        }
        let s = one_window(data, n);
        let w = segment(&s, &WindowSpec::fixed(1.0).unwrap()).unwrap();
        let f = featurize(&w[0]).unwrap();
        for (i, &v) in f.values.iter().enumerate() {
            if (16..20).contains(&i) {
                assert!(v != 0.0, "slot {i} should be nonzero");
            } else {
                assert_eq!(v, 0.0, "slot {i} should be zero");
            }
        }
    }

    proptest! {
        #[test]
        fn algebraic_identities(x in prop::collection::vec(-10.0f64..10.0, 1..64)) {
            let e = feat_energy(&x).unwrap();
            let r = feat_rms(&x).unwrap();
            let s = feat_std(&x).unwrap();
            let m = feat_mean(&x).unwrap();
            let scale = e.abs().max(1e-30);
            prop_assert!((e - r * r).abs() / scale < 1e-12);
            prop_assert!((s * s - (e - m * m)).abs() / scale.max(1.0) < 1e-12);
        }

        #[test]
        fn scaling_behavior(
            x in prop::collection::vec(-5.0f64..5.0, 2..32),
            a in -3.0f64..3.0,
        ) {
            let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
            let tol = 1e-10;
            prop_assert!((feat_mean(&scaled).unwrap() - a * feat_mean(&x).unwrap()).abs() < tol);
            prop_assert!((feat_rms(&scaled).unwrap() - a.abs() * feat_rms(&x).unwrap()).abs() < tol);
            prop_assert!((feat_std(&scaled).unwrap() - a.abs() * feat_std(&x).unwrap()).abs() < tol);
            prop_assert!((feat_energy(&scaled).unwrap() - a * a * feat_energy(&x).unwrap()).abs() < tol);
        }

        #[test]
        fn shift_leaves_std_invariant(
            x in prop::collection::vec(-5.0f64..5.0, 2..32),
            c in -5.0f64..5.0,
        ) {
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            prop_assert!((feat_std(&shifted).unwrap() - feat_std(&x).unwrap()).abs() < 1e-10);
            prop_assert!(
                (feat_mean(&shifted).unwrap() - (feat_mean(&x).unwrap() + c)).abs() < 1e-10
            );
        }
    }
}
