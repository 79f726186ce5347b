//! One-vs-one multi-class wrapper: one binary model per unordered class
//! pair, majority vote with deterministic tie-breaking.

use crate::model::MotionLabel;
use crate::num::Real;
use crate::pca::{pca_transform, PcaModel};

use super::kernel::KernelSpec;
use super::smo::{train_binary, BinaryModel, TrainConfig};
use super::SvmError;

/// Per-feature zero-mean / unit-variance scaling fit on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<F: Real> {
    pub mean: Vec<F>,
    pub std: Vec<F>,
}

impl<F: Real> Standardizer<F> {
    pub fn fit<R: AsRef<[F]>>(rows: &[R]) -> Standardizer<F> {
        let m = rows.len().max(1);
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mf = F::from_f64_lossy(m as f64);
        let mut mean = vec![F::zero(); d];
        for r in rows {
            for (s, &v) in mean.iter_mut().zip(r.as_ref()) {
                *s = *s + v;
            }
        }
        for s in &mut mean {
            *s = *s / mf;
        }
        let mut var = vec![F::zero(); d];
        for r in rows {
            for ((s, &v), &mu) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                let dv = v - mu;
                *s = *s + dv * dv;
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / mf).sqrt();
                // constant features pass through unscaled
                if s > F::zero() {
                    s
                } else {
                    F::one()
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[F]) -> Vec<F> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&v, &mu), &s)| (v - mu) / s)
            .collect()
    }
}

/// Trained one-vs-one ensemble plus the preprocessing that inputs must pass
/// through before the pairwise decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiClassModel<F: Real> {
    pub classes: Vec<MotionLabel>,
    /// (class index a, class index b, model) with a < b; the binary label
    /// +1 means class a.
    pub pairs: Vec<(usize, usize, BinaryModel<F>)>,
    pub standardizer: Option<Standardizer<F>>,
    pub pca: Option<PcaModel<F>>,
}

impl<F: Real> MultiClassModel<F> {
    /// Apply the recorded preprocessing to a raw feature vector.
    pub fn preprocess(&self, x: &[F]) -> Result<Vec<F>, SvmError> {
        let mut v = match &self.standardizer {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        };
        if let Some(pca) = &self.pca {
            v = pca_transform(pca, &v)
                .map_err(|e| SvmError::Parse(format!("pca transform: {e}")))?;
        }
        Ok(v)
    }

    pub fn predict(&self, x: &[F]) -> Result<MotionLabel, SvmError> {
        let z = self.preprocess(x)?;
        Ok(self.predict_preprocessed(&z))
    }

    /// Majority vote over the pairwise models; ties break on summed
    /// decision-value magnitude, then on class order.
    pub fn predict_preprocessed(&self, z: &[F]) -> MotionLabel {
        let k = self.classes.len();
        let mut votes = vec![0usize; k];
        let mut score = vec![F::zero(); k];
        for (a, b, model) in &self.pairs {
            let d = model.decision(z);
            let winner = if d >= F::zero() { *a } else { *b };
            votes[winner] += 1;
            score[winner] = score[winner] + d.abs();
        }
        let mut best = 0usize;
        for i in 1..k {
            if votes[i] > votes[best]
                || (votes[i] == votes[best] && score[i] > score[best])
            {
                best = i;
            }
        }
        self.classes[best]
    }

    pub fn class_index(&self, label: MotionLabel) -> Option<usize> {
        self.classes.iter().position(|&c| c == label)
    }
}

/// Train the pairwise ensemble on already-preprocessed feature rows.
/// Preprocessing records are attached by the caller.
pub fn train_multiclass<F: Real, R: AsRef<[F]>>(
    rows: &[R],
    labels: &[MotionLabel],
    kernel: KernelSpec<F>,
    cfg: &TrainConfig,
) -> Result<MultiClassModel<F>, SvmError> {
    assert_eq!(rows.len(), labels.len());
    let mut classes: Vec<MotionLabel> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(if classes.len() == 1 {
            SvmError::SingleClassInput
        } else {
            SvmError::TooFewClasses
        });
    }
    for &cl in &classes {
        let n = labels.iter().filter(|&&l| l == cl).count();
        if n < 2 {
            return Err(SvmError::ClassTooSmall(cl.as_str().to_string(), n));
        }
    }

    let mut pairs = Vec::with_capacity(classes.len() * (classes.len() - 1) / 2);
    for a in 0..classes.len() {
        for b in (a + 1)..classes.len() {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (row, &label) in rows.iter().zip(labels) {
                if label == classes[a] {
                    x.push(row.as_ref());
                    y.push(1i8);
                } else if label == classes[b] {
                    x.push(row.as_ref());
                    y.push(-1i8);
                }
            }
            let pair_cfg = TrainConfig {
                seed: mix_seed(cfg.seed, a as u64, b as u64),
                ..*cfg
            };
            let model = train_binary(&x, &y, kernel, &pair_cfg)?;
            pairs.push((a, b, model));
        }
    }
    Ok(MultiClassModel {
        classes,
        pairs,
        standardizer: None,
        pca: None,
    })
}

/// splitmix64-style mixing so each pairwise trainer gets its own stream.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(b.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn clusters(seed: u64) -> (Vec<Vec<f64>>, Vec<MotionLabel>) {
        let centers = [
            (vec![0.0, 0.0], MotionLabel::LiftHeel),
            (vec![5.0, 0.0], MotionLabel::LiftToes),
            (vec![0.0, 5.0], MotionLabel::FootInversion),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (center, label) in &centers {
            for _ in 0..30 {
                rows.push(vec![
                    center[0] + rng.gen::<f64>() - 0.5,
                    center[1] + rng.gen::<f64>() - 0.5,
                ]);
                labels.push(*label);
            }
        }
        (rows, labels)
    }

    #[test]
    fn separable_clusters_classify_perfectly() {
        let (rows, labels) = clusters(1);
        let model = train_multiclass(
            &rows,
            &labels,
            KernelSpec::Rbf { gamma: 0.5 },
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(model.pairs.len(), 3);
        for (row, &label) in rows.iter().zip(&labels) {
            assert_eq!(model.predict_preprocessed(row), label);
        }
    }

    #[test]
    fn two_classes_reduce_to_one_binary_model() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<MotionLabel> = (0..20)
            .map(|i| {
                if i < 10 {
                    MotionLabel::LiftHeel
                } else {
                    MotionLabel::LiftToes
                }
            })
            .collect();
        let cfg = TrainConfig::default();
        let model = train_multiclass(&rows, &labels, KernelSpec::Linear, &cfg).unwrap();
        assert_eq!(model.pairs.len(), 1);
        for (row, &label) in rows.iter().zip(&labels) {
            assert_eq!(model.predict_preprocessed(row), label);
        }
    }

    #[test]
    fn sample_order_does_not_change_predictions() {
        let (mut rows, mut labels) = clusters(5);
        let cfg = TrainConfig {
            seed: 99,
            ..TrainConfig::default()
        };
        let m1 = train_multiclass(&rows, &labels, KernelSpec::Rbf { gamma: 0.5 }, &cfg).unwrap();
        // deterministically permute sample order
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        idx.shuffle(&mut rng);
        let rows2: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
        let labels2: Vec<MotionLabel> = idx.iter().map(|&i| labels[i]).collect();
        rows = rows2;
        labels = labels2;
        let m2 = train_multiclass(&rows, &labels, KernelSpec::Rbf { gamma: 0.5 }, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = vec![rng.gen::<f64>() * 6.0 - 0.5, rng.gen::<f64>() * 6.0 - 0.5];
            assert_eq!(m1.predict_preprocessed(&p), m2.predict_preprocessed(&p));
        }
    }

    #[test]
    fn class_too_small_is_named() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = vec![
            MotionLabel::LiftHeel,
            MotionLabel::LiftHeel,
            MotionLabel::TurnRound,
        ];
        match train_multiclass(&rows, &labels, KernelSpec::Linear, &TrainConfig::default()) {
            Err(SvmError::ClassTooSmall(name, 1)) => assert_eq!(name, "A7"),
            other => panic!("expected ClassTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 10.0], vec![3.0, 30.0]];
        let s = Standardizer::fit(&rows);
        let z = s.apply(&[1.0, 10.0]);
        assert!((z[0] + 1.0).abs() < 1e-12);
        assert!((z[1] + 1.0).abs() < 1e-12);
        // constant column passes through
        let s = Standardizer::fit(&[vec![2.0], vec![2.0]]);
        assert_eq!(s.apply(&[2.0]), vec![0.0]);
    }
}
