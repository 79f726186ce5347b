//! Confusion matrix, per-class recall and macro-recall.

use std::fmt::Write as _;

use crate::model::MotionLabel;
use crate::num::Real;

use super::multiclass::MultiClassModel;
use super::SvmError;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub classes: Vec<MotionLabel>,
    /// Row-major K x K counts, rows = true class, columns = predicted.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn count(&self, true_idx: usize, pred_idx: usize) -> u64 {
        self.counts[true_idx * self.k() + pred_idx]
    }

    pub fn row_sum(&self, true_idx: usize) -> u64 {
        let k = self.k();
        self.counts[true_idx * k..(true_idx + 1) * k].iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (i, c) in self.classes.iter().enumerate() {
            let _ = write!(out, "{c}");
            for j in 0..self.k() {
                let _ = write!(out, ",{}", self.count(i, j));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// recall_i = TP_i / (TP_i + FN_i) for each class with test samples.
    pub recall_per_class: Vec<(MotionLabel, f64)>,
    /// Unweighted mean of the per-class recalls.
    pub macro_recall: f64,
    pub n_classes: usize,
}

/// Predict every test sample and derive the recall metrics.
pub fn evaluate<F: Real, R: AsRef<[F]>>(
    model: &MultiClassModel<F>,
    rows: &[R],
    labels: &[MotionLabel],
) -> Result<(ConfusionMatrix, Metrics), SvmError> {
    if rows.is_empty() {
        return Err(SvmError::EmptyTestSet);
    }
    let k = model.classes.len();
    let mut counts = vec![0u64; k * k];
    for (row, &label) in rows.iter().zip(labels) {
        let true_idx = model
            .class_index(label)
            .ok_or_else(|| SvmError::UnknownLabel(label.as_str().to_string()))?;
        let pred = model.predict(row.as_ref())?;
        let pred_idx = model.class_index(pred).expect("prediction is a model class");
        counts[true_idx * k + pred_idx] += 1;
    }
    let matrix = ConfusionMatrix {
        classes: model.classes.clone(),
        counts,
    };
    let metrics = metrics_from_confusion(&matrix);
    Ok((matrix, metrics))
}

/// Recall metrics from an existing confusion matrix; classes without test
/// samples do not enter the macro average.
pub fn metrics_from_confusion(matrix: &ConfusionMatrix) -> Metrics {
    let mut recall_per_class = Vec::new();
    for (i, &class) in matrix.classes.iter().enumerate() {
        let total = matrix.row_sum(i);
        if total == 0 {
            continue;
        }
        let tp = matrix.count(i, i);
        recall_per_class.push((class, tp as f64 / total as f64));
    }
    let n = recall_per_class.len();
    let macro_recall = if n == 0 {
        0.0
    } else {
        recall_per_class.iter().map(|(_, r)| r).sum::<f64>() / n as f64
    };
    Metrics {
        recall_per_class,
        macro_recall,
        n_classes: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(classes: Vec<MotionLabel>, counts: Vec<u64>) -> ConfusionMatrix {
        ConfusionMatrix { classes, counts }
    }

    #[test]
    fn perfect_predictions_give_unit_macro_recall() {
        let m = matrix(
            vec![MotionLabel::LiftHeel, MotionLabel::LiftToes],
            vec![7, 0, 0, 9],
        );
        let metrics = metrics_from_confusion(&m);
        assert_eq!(metrics.macro_recall, 1.0);
        assert_eq!(metrics.n_classes, 2);
    }

    #[test]
    fn direct_recall_formula() {
        // class A: TP=9, FN=1 -> recall 0.9; class B perfect
        let m = matrix(
            vec![MotionLabel::LiftHeel, MotionLabel::LiftToes],
            vec![9, 1, 0, 10],
        );
        let metrics = metrics_from_confusion(&m);
        assert_eq!(metrics.recall_per_class[0], (MotionLabel::LiftHeel, 0.9));
        // recalls [0.9, 1.0] -> macro 0.95
        assert!((metrics.macro_recall - 0.95).abs() < 1e-15);
    }

    #[test]
    fn macro_recall_is_unweighted_mean() {
        // recalls [1.0, 0.8] with very different class sizes -> 0.9
        let m = matrix(
            vec![MotionLabel::LiftHeel, MotionLabel::LiftToes],
            vec![100, 0, 2, 8],
        );
        let metrics = metrics_from_confusion(&m);
        assert!((metrics.macro_recall - 0.9).abs() < 1e-15);
    }

    #[test]
    fn absent_class_is_excluded_from_macro() {
        let m = matrix(
            vec![
                MotionLabel::LiftHeel,
                MotionLabel::LiftToes,
                MotionLabel::TurnRound,
            ],
            vec![5, 0, 0, 0, 5, 0, 0, 0, 0],
        );
        let metrics = metrics_from_confusion(&m);
        assert_eq!(metrics.n_classes, 2);
        assert_eq!(metrics.macro_recall, 1.0);
    }

    #[test]
    fn csv_export_shape() {
        let m = matrix(
            vec![MotionLabel::LiftHeel, MotionLabel::LiftToes],
            vec![1, 2, 3, 4],
        );
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "true\\pred,A1,A2");
        assert_eq!(lines[1], "A1,1,2");
        assert_eq!(lines[2], "A2,3,4");
    }
}
