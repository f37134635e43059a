//! Univariate ANOVA screening and k-best feature selection.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::volume::DataMatrix;

/// One-way ANOVA F statistic of every column of `x` against class ids
/// `labels` (values in `0..n_classes`).
///
/// Features with zero within-class spread and a positive between-class spread
/// score `+∞`; features with no between-class spread score 0.
pub fn f_classif(x: ArrayView2<'_, f64>, labels: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if n_classes < 2 {
        return Err(Error::SingleClass(format!("n_classes = {n_classes}")));
    }
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        if l >= n_classes {
            return Err(Error::BadParameter(format!("label {l} >= n_classes {n_classes}")));
        }
        counts[l] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty));
    }
    if n <= n_classes {
        return Err(Error::TooFewSamples(format!(
            "{n} samples for {n_classes} classes"
        )));
    }
    let df_between = (n_classes - 1) as f64;
    let df_within = (n - n_classes) as f64;

    let scores = x
        .columns()
        .into_iter()
        .map(|col| {
            let mut sums = vec![0.0; n_classes];
            for (&v, &l) in col.iter().zip(labels) {
                sums[l] += v;
            }
            let grand = sums.iter().sum::<f64>() / n as f64;
            let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
            let ss_between: f64 = means
                .iter()
                .zip(&counts)
                .map(|(m, &c)| c as f64 * (m - grand).powi(2))
                .sum();
            let ss_within: f64 = col
                .iter()
                .zip(labels)
                .map(|(&v, &l)| (v - means[l]).powi(2))
                .sum();
            let ss_total = ss_between + ss_within;
            if ss_between <= f64::EPSILON * ss_total {
                0.0
            } else if ss_within <= f64::EPSILON * ss_total {
                f64::INFINITY
            } else {
                (ss_between / df_between) / (ss_within / df_within)
            }
        })
        .collect();
    Ok(scores)
}

/// Fitted k-best selection: which features survive and why.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelector {
    pub scores: Vec<f64>,
    pub support: Vec<bool>,
    pub k: usize,
}

/// Keeps the `k` highest scores; ties go to the lower feature index and
/// `+∞` outranks every finite score. `k` larger than the feature count
/// selects everything.
pub fn select_k_best(scores: &[f64], k: usize) -> Result<FeatureSelector> {
    if k == 0 {
        return Err(Error::BadK("k must be at least 1".into()));
    }
    let k = k.min(scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut support = vec![false; scores.len()];
    for &i in &order[..k] {
        support[i] = true;
    }
    Ok(FeatureSelector {
        scores: scores.to_vec(),
        support,
        k,
    })
}

/// Number of features kept by a percentile rule: `ceil(p·n/100)`.
pub fn percentile_to_k(percentile: f64, n_features: usize) -> usize {
    ((percentile * n_features as f64 / 100.0).ceil() as usize).clamp(1, n_features.max(1))
}

impl FeatureSelector {
    pub fn n_features(&self) -> usize {
        self.support.len()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        self.support
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    /// Restricts `x` to the selected columns, preserving their order.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<DataMatrix> {
        if x.ncols() != self.n_features() {
            return Err(Error::LengthMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        Ok(x.select(ndarray::Axis(1), &self.selected_indices()))
    }

    /// Scatters reduced columns back to their original positions, zeros
    /// elsewhere.
    pub fn inverse_transform(&self, w: ArrayView2<'_, f64>) -> Result<DataMatrix> {
        let idx = self.selected_indices();
        if w.ncols() != idx.len() {
            return Err(Error::LengthMismatch {
                expected: idx.len(),
                got: w.ncols(),
            });
        }
        let mut out = Array2::zeros((w.nrows(), self.n_features()));
        for (j, &orig) in idx.iter().enumerate() {
            out.column_mut(orig).assign(&w.column(j));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Straightforward two-pass ANOVA, written independently of `f_classif`.
    fn brute_force_f(values: &[f64], labels: &[usize], g: usize) -> f64 {
        let n = values.len();
        let grand = values.iter().sum::<f64>() / n as f64;
        let mut ssb = 0.0;
        let mut ssw = 0.0;
        for c in 0..g {
            let members: Vec<f64> = values
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(&v, _)| v)
                .collect();
            let m = members.iter().sum::<f64>() / members.len() as f64;
            ssb += members.len() as f64 * (m - grand) * (m - grand);
            for v in members {
                ssw += (v - m) * (v - m);
            }
        }
        (ssb / (g - 1) as f64) / (ssw / (n - g) as f64)
    }

    #[test]
    fn hand_anova_cases() {
        let labels = [0, 0, 0, 1, 1, 1];
        let x = array![[1.0, 0.0, 1.0], [2.0, 0.0, 2.0], [3.0, 0.0, 1.0], [2.0, 1.0, 2.0], [3.0, 1.0, 1.0], [4.0, 1.0, 2.0]];
        let f = f_classif(x.view(), &labels, 2).unwrap();
        assert!((f[0] - 1.5).abs() <= 1e-12);
        assert_eq!(f[1], f64::INFINITY);
        assert!((brute_force_f(&[1.0, 2.0, 3.0, 2.0, 3.0, 4.0], &labels, 2) - 1.5).abs() < 1e-12);

        let same = array![[1.0], [2.0], [1.0], [2.0]];
        let f = f_classif(same.view(), &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn anova_errors() {
        let x = array![[1.0], [2.0], [3.0]];
        assert!(matches!(f_classif(x.view(), &[0, 0, 0], 1), Err(Error::SingleClass(_))));
        assert!(matches!(f_classif(x.view(), &[0, 0, 2], 3), Err(Error::EmptyClass(1))));
        assert!(matches!(f_classif(x.view(), &[0, 1], 2), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn matches_brute_force_and_is_affine_invariant() {
        let mut s = 99u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for g in 2..=4 {
            let labels: Vec<usize> = (0..20).map(|i| i % g).collect();
            let x = Array2::from_shape_fn((20, 30), |_| next() * 4.0 - 2.0);
            let f = f_classif(x.view(), &labels, g).unwrap();
            for (j, col) in x.columns().into_iter().enumerate() {
                let oracle = brute_force_f(&col.to_vec(), &labels, g);
                assert!((f[j] - oracle).abs() <= 1e-10 * oracle.max(1.0));
            }
            let shifted = x.mapv(|v| -3.5 * v + 11.0);
            let f2 = f_classif(shifted.view(), &labels, g).unwrap();
            for (a, b) in f.iter().zip(&f2) {
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn k_best_ordering_and_ties() {
        let s = select_k_best(&[0.1, 5.0, 3.0], 2).unwrap();
        assert_eq!(s.selected_indices(), vec![1, 2]);
        let s = select_k_best(&[1.0; 4], 2).unwrap();
        assert_eq!(s.selected_indices(), vec![0, 1]);
        let s = select_k_best(&[1e300, f64::INFINITY, 0.0], 1).unwrap();
        assert_eq!(s.selected_indices(), vec![1]);
        let s = select_k_best(&[3.0, 1.0], 10).unwrap();
        assert_eq!(s.k, 2);
        assert!(s.support.iter().all(|&b| b));
        assert_eq!(percentile_to_k(10.0, 45), 5);
    }

    #[test]
    fn whole_brain_scale_selection() {
        let scores: Vec<f64> = (0..40_000).map(|i| ((i * 7919) % 40_000) as f64).collect();
        let s = select_k_best(&scores, 500).unwrap();
        assert_eq!(s.support.iter().filter(|&&b| b).count(), 500);
    }

    #[test]
    fn transform_and_inverse() {
        let x = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let all = select_k_best(&[1.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(all.transform(x.view()).unwrap(), x);
        let one = FeatureSelector {
            scores: vec![0.0, 1.0, 0.0],
            support: vec![false, true, false],
            k: 1,
        };
        assert_eq!(one.transform(x.view()).unwrap(), array![[2.0], [5.0]]);

        let sel = FeatureSelector {
            scores: vec![2.0, 0.0, 1.0],
            support: vec![true, false, true],
            k: 2,
        };
        let w = array![[0.5, -1.5]];
        assert_eq!(sel.inverse_transform(w.view()).unwrap(), array![[0.5, 0.0, -1.5]]);
        let z = Array2::<f64>::zeros((1, 2));
        assert!(sel.inverse_transform(z.view()).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(
            sel.transform(sel.inverse_transform(w.view()).unwrap().view()).unwrap(),
            w
        );
        let t = sel.transform(x.view()).unwrap();
        let again = sel
            .transform(sel.inverse_transform(t.view()).unwrap().view())
            .unwrap();
        assert_eq!(t, again);
        assert!(matches!(sel.transform(w.view()), Err(Error::LengthMismatch { .. })));
    }
}
