use ndarray::{Array1, ArrayView2};

use crate::error::{Error, Result};

/// `1 − SS_res/SS_tot` per column, with the mean taken over `y_true` itself.
/// A constant target column scores 0.
pub fn r2_score_per_target(y_true: ArrayView2<'_, f64>, y_pred: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if y_true.dim() != y_pred.dim() {
        return Err(Error::ShapeMismatch(format!(
            "y_true {:?} vs y_pred {:?}",
            y_true.dim(),
            y_pred.dim()
        )));
    }
    let n = y_true.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples(format!("r2 needs at least 2 samples, got {n}")));
    }
    Ok(y_true
        .columns()
        .into_iter()
        .zip(y_pred.columns())
        .map(|(t, p)| {
            let mean = t.sum() / n as f64;
            let ss_tot: f64 = t.iter().map(|v| (v - mean).powi(2)).sum();
            if ss_tot == 0.0 {
                return 0.0;
            }
            let ss_res: f64 = t.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum();
            1.0 - ss_res / ss_tot
        })
        .collect())
}

/// Fraction of exact matches.
pub fn accuracy_score(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::TooFewSamples("accuracy of an empty set".into()));
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn r2_cases() {
        let t = array![[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]];
        let r = r2_score_per_target(t.view(), t.view()).unwrap();
        assert_eq!(r[0], 1.0);
        assert_eq!(r[1], 0.0);
        let mean = array![[1.0], [1.0], [1.0]];
        let col = array![[0.0], [1.0], [2.0]];
        assert_eq!(r2_score_per_target(col.view(), mean.view()).unwrap()[0], 0.0);
        let zeros = array![[0.0], [0.0], [0.0]];
        assert!((r2_score_per_target(col.view(), zeros.view()).unwrap()[0] + 1.5).abs() < 1e-15);
        assert!(matches!(
            r2_score_per_target(col.view(), t.view()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy_score(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(accuracy_score(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(accuracy_score(&[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap(), 0.5);
        assert!(matches!(accuracy_score(&[1.0], &[]), Err(Error::LengthMismatch { .. })));
    }
}
