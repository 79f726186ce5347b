//! End-to-end orchestration: sessions -> normalized series -> windows ->
//! features -> grouped split -> standardize -> PCA -> pairwise SVMs ->
//! recall metrics. The CLI and the integration tests both drive this.

use thiserror::Error;

use crate::features::{featurize, FeatureError, FeatureVector};
use crate::model::{estimate_baseline, normalize, ModelError, Session, DEFAULT_BASELINE_WINDOW_S};
use crate::pca::{fit_pca, PcaError};
use crate::svm::{
    default_gamma, evaluate, split_dataset, train_multiclass, ConfusionMatrix, KernelSpec,
    Metrics, MultiClassModel, SplitResult, Standardizer, SvmError, TrainConfig,
};
use crate::windowing::{segment, WindowError, WindowSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("no feature windows were produced")]
    NoFeatures,
}

/// Kernel request before the data-dependent gamma default is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Linear,
    /// `None` picks 1 / (d * mean feature variance) on the training rows.
    Rbf { gamma: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub window: WindowSpec,
    pub baseline_window_s: f64,
    /// PCA retained-variance target; `None` skips the projection.
    pub variance_target: Option<f64>,
    pub kernel: KernelChoice,
    pub train: TrainConfig,
    pub split_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window: WindowSpec::sliding(2.0, 0.5).expect("valid default window"),
            baseline_window_s: DEFAULT_BASELINE_WINDOW_S,
            variance_target: Some(0.95),
            kernel: KernelChoice::Rbf { gamma: None },
            train: TrainConfig::default(),
            split_seed: 0,
        }
    }
}

/// Baseline-normalize every session and featurize its windows.
pub fn extract_features(
    sessions: &[Session],
    spec: &WindowSpec,
    baseline_window_s: f64,
) -> Result<Vec<FeatureVector<f64>>, PipelineError> {
    let mut features = Vec::new();
    for session in sessions {
        let baseline = estimate_baseline(&session.frames, baseline_window_s)?;
        let series = normalize::<f64>(session, &baseline)?;
        for window in segment(&series, spec)? {
            features.push(featurize(&window)?);
        }
    }
    Ok(features)
}

#[derive(Debug)]
pub struct TrainedPipeline {
    pub model: MultiClassModel<f64>,
    pub split: SplitResult,
    /// Gamma actually used, when the kernel is RBF.
    pub gamma: Option<f64>,
    pub pca_k: Option<usize>,
}

/// Split the features by whole sets, fit the preprocessing on the training
/// half only, and train the pairwise ensemble.
pub fn train_pipeline(
    features: &[FeatureVector<f64>],
    cfg: &PipelineConfig,
) -> Result<TrainedPipeline, PipelineError> {
    if features.is_empty() {
        return Err(PipelineError::NoFeatures);
    }
    let split = split_dataset(features, cfg.split_seed);
    let train_rows: Vec<&[f64]> = split
        .train
        .iter()
        .map(|&i| features[i].values.as_slice())
        .collect();
    let train_labels: Vec<_> = split.train.iter().map(|&i| features[i].label).collect();

    let standardizer = Standardizer::fit(&train_rows);
    let mut rows: Vec<Vec<f64>> = train_rows.iter().map(|r| standardizer.apply(r)).collect();

    let pca = match cfg.variance_target {
        Some(target) => {
            let model = fit_pca(&rows, target)?;
            rows = rows
                .iter()
                .map(|r| crate::pca::pca_transform(&model, r))
                .collect::<Result<_, _>>()?;
            Some(model)
        }
        None => None,
    };

    let (kernel, gamma) = match cfg.kernel {
        KernelChoice::Linear => (KernelSpec::Linear, None),
        KernelChoice::Rbf { gamma } => {
            let g = gamma.unwrap_or_else(|| default_gamma(&rows));
            (KernelSpec::Rbf { gamma: g }, Some(g))
        }
    };

    let mut model = train_multiclass(&rows, &train_labels, kernel, &cfg.train)?;
    model.standardizer = Some(standardizer);
    let pca_k = pca.as_ref().map(|p| p.k);
    model.pca = pca;
    Ok(TrainedPipeline {
        model,
        split,
        gamma,
        pca_k,
    })
}

/// Score the model on the features at the given indices (raw, un-preprocessed).
pub fn evaluate_indices(
    model: &MultiClassModel<f64>,
    features: &[FeatureVector<f64>],
    indices: &[usize],
) -> Result<(ConfusionMatrix, Metrics), PipelineError> {
    let rows: Vec<&[f64]> = indices
        .iter()
        .map(|&i| features[i].values.as_slice())
        .collect();
    let labels: Vec<_> = indices.iter().map(|&i| features[i].label).collect();
    Ok(evaluate(model, &rows, &labels)?)
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub warnings: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub gamma: Option<f64>,
    pub pca_k: Option<usize>,
}

/// Full train/evaluate round on a session corpus.
pub fn run_experiment(
    sessions: &[Session],
    cfg: &PipelineConfig,
) -> Result<ExperimentReport, PipelineError> {
    let features = extract_features(sessions, &cfg.window, cfg.baseline_window_s)?;
    let trained = train_pipeline(&features, cfg)?;
    let (confusion, metrics) = evaluate_indices(&trained.model, &features, &trained.split.test)?;
    Ok(ExperimentReport {
        confusion,
        metrics,
        warnings: trained.split.warnings,
        n_train: trained.split.train.len(),
        n_test: trained.split.test.len(),
        gamma: trained.gamma,
        pca_k: trained.pca_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MotionLabel;
    use crate::sim::{synth_session, SimConfig};

    fn small_corpus() -> Vec<Session> {
        let cfg = SimConfig {
            subjects: 2,
            trial_s: 20.0,
            ..SimConfig::default()
        };
        let motions = [
            MotionLabel::LiftHeel,
            MotionLabel::StretchBackward,
            MotionLabel::WalkForward,
        ];
        let mut sessions = Vec::new();
        for subject in 0..cfg.subjects {
            for &motion in &motions {
                for set in 1..=cfg.sets_per_motion as u8 {
                    sessions.push(synth_session(motion, subject, set, &cfg).0);
                }
            }
        }
        sessions
    }

    #[test]
    fn small_corpus_trains_and_scores_well() {
        let sessions = small_corpus();
        let report = run_experiment(&sessions, &PipelineConfig::default()).unwrap();
        assert!(report.warnings.is_empty());
        assert!(report.n_train > 0 && report.n_test > 0);
        assert!(
            report.metrics.macro_recall > 0.9,
            "macro recall {}",
            report.metrics.macro_recall
        );
        assert!(report.gamma.unwrap() > 0.0);
        assert!(report.pca_k.unwrap() >= 1);
    }

    #[test]
    fn preprocessing_is_fit_on_training_rows_only() {
        let sessions = small_corpus();
        let features =
            extract_features(&sessions, &WindowSpec::sliding(2.0, 0.5).unwrap(), 2.0).unwrap();
        let trained = train_pipeline(&features, &PipelineConfig::default()).unwrap();
        // the standardizer reproduces the training-row mean, not the global one
        let std = trained.model.standardizer.as_ref().unwrap();
        let mut train_mean = 0.0;
        for &i in &trained.split.train {
            train_mean += features[i].values[0];
        }
        train_mean /= trained.split.train.len() as f64;
        assert!((std.mean[0] - train_mean).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            train_pipeline(&[], &PipelineConfig::default()),
            Err(PipelineError::NoFeatures)
        ));
    }
}
