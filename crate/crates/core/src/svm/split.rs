//! Grouped 50/50 train/test split: whole recording sets go to one side so
//! overlapping windows from one set never straddle the split.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureVector;
use crate::model::MotionLabel;
use crate::num::Real;

use super::multiclass::mix_seed;

#[derive(Debug, Clone, Default)]
pub struct SplitResult {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// One entry per (subject, motion) that did not have exactly 4 sets.
    pub warnings: Vec<String>,
}

/// Assign whole sets to train or test, 2/2 per (subject, motion) when the
/// expected 4 sets are present, seeded and deterministic. Groups with a
/// different set count fall back to a grouped 50/50 split with a warning.
pub fn split_dataset<F: Real>(features: &[FeatureVector<F>], seed: u64) -> SplitResult {
    // (subject, motion) -> sorted set indices
    let mut groups: BTreeMap<(String, MotionLabel), Vec<u8>> = BTreeMap::new();
    for f in features {
        let key = (f.provenance.subject.clone(), f.provenance.motion);
        let sets = groups.entry(key).or_default();
        if !sets.contains(&f.provenance.set_index) {
            sets.push(f.provenance.set_index);
        }
    }

    let mut result = SplitResult::default();
    let mut train_sets: BTreeMap<(String, MotionLabel), Vec<u8>> = BTreeMap::new();
    for ((subject, motion), sets) in &mut groups {
        sets.sort_unstable();
        if sets.len() != 4 {
            result.warnings.push(format!(
                "{subject}/{motion}: expected 4 sets, found {}",
                sets.len()
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
            seed,
            fnv1a(subject.as_bytes()),
            *motion as u64,
        ));
        let mut shuffled = sets.clone();
        shuffled.shuffle(&mut rng);
        let n_train = (shuffled.len() + 1) / 2;
        shuffled.truncate(n_train);
        train_sets.insert((subject.clone(), *motion), shuffled);
    }

    for (i, f) in features.iter().enumerate() {
        let key = (f.provenance.subject.clone(), f.provenance.motion);
        if train_sets[&key].contains(&f.provenance.set_index) {
            result.train.push(i);
        } else {
            result.test.push(i);
        }
    }
    result
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Provenance;

    fn feature(subject: &str, motion: MotionLabel, set: u8, start: usize) -> FeatureVector<f64> {
        FeatureVector {
            values: vec![0.0; 4],
            label: motion,
            provenance: Provenance {
                subject: subject.into(),
                motion,
                set_index: set,
            },
            window_start: start,
        }
    }

    fn corpus() -> Vec<FeatureVector<f64>> {
        let mut out = Vec::new();
        for subject in ["s01", "s02", "s03"] {
            for motion in [MotionLabel::LiftHeel, MotionLabel::WalkForward] {
                for set in 1..=4u8 {
                    for w in 0..5 {
                        out.push(feature(subject, motion, set, w * 60));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn two_sets_each_side_per_condition() {
        let features = corpus();
        let split = split_dataset(&features, 7);
        assert!(split.warnings.is_empty());
        assert_eq!(split.train.len() + split.test.len(), features.len());
        let mut per_group: BTreeMap<(String, MotionLabel), (Vec<u8>, Vec<u8>)> = BTreeMap::new();
        for &i in &split.train {
            let f = &features[i];
            let e = per_group
                .entry((f.provenance.subject.clone(), f.provenance.motion))
                .or_default();
            if !e.0.contains(&f.provenance.set_index) {
                e.0.push(f.provenance.set_index);
            }
        }
        for &i in &split.test {
            let f = &features[i];
            let e = per_group
                .entry((f.provenance.subject.clone(), f.provenance.motion))
                .or_default();
            if !e.1.contains(&f.provenance.set_index) {
                e.1.push(f.provenance.set_index);
            }
        }
        for (key, (train, test)) in per_group {
            assert_eq!(train.len(), 2, "{key:?}");
            assert_eq!(test.len(), 2, "{key:?}");
            for s in &train {
                assert!(!test.contains(s), "{key:?} set {s} on both sides");
            }
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let features = corpus();
        let a = split_dataset(&features, 42);
        let b = split_dataset(&features, 42);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        let c = split_dataset(&features, 43);
        assert!(c.train != a.train || c.test != a.test);
    }

    #[test]
    fn no_set_straddles_the_split() {
        let features = corpus();
        let split = split_dataset(&features, 3);
        for &i in &split.train {
            let f = &features[i];
            for &j in &split.test {
                let g = &features[j];
                assert!(
                    f.provenance != g.provenance,
                    "set {:?} is on both sides",
                    f.provenance
                );
            }
        }
    }

    #[test]
    fn missing_sets_warn_and_fall_back() {
        let mut features = corpus();
        features.retain(|f| {
            !(f.provenance.subject == "s01"
                && f.provenance.motion == MotionLabel::LiftHeel
                && f.provenance.set_index > 2)
        });
        let split = split_dataset(&features, 7);
        assert_eq!(split.warnings.len(), 1);
        assert!(split.warnings[0].contains("s01/A1"));
        assert_eq!(split.train.len() + split.test.len(), features.len());
    }
}
