//! Linear estimators.
//!
//! Two regularization conventions coexist, and mixing them up is the usual
//! source of cross-parameterization bugs:
//!
//! * classifiers minimize `penalty(w) + C · Σᵢ loss(yᵢ (w·xᵢ + b))`, the loss
//!   summed (not averaged) so a larger `C` means weaker regularization;
//! * the lasso family minimizes `(1/2n)‖y − Xw − b‖² + α‖w‖₁`, so a larger
//!   `α` means stronger regularization;
//! * ridge minimizes the unscaled `‖y − Xw − b‖² + α‖w‖²`.
//!
//! Classifier intercepts are never penalized. All coordinate-descent solvers
//! visit coordinates in a fixed cyclic order, so fits are reproducible.

mod cd;
mod lars;
mod lasso;
mod logistic;
mod metrics;
mod ridge;
mod svm;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub use lars::{fit_lasso_lars_cv, lars_path, LarsPath, LassoLarsCv};
pub use lasso::{fit_lasso_cd, fit_lasso_cd_with, lasso_objective, LASSO_DEFAULTS};
pub use logistic::{fit_logistic, fit_logistic_with};
pub use metrics::{accuracy_score, r2_score_per_target};
pub use ridge::fit_ridge;
pub use svm::{fit_linear_svc, fit_linear_svc_with, SVC_DEFAULTS};

/// Stopping rule shared by the iterative solvers. `max_iter` counts epochs
/// (full coordinate sweeps), Newton steps or, for the dual SVM solver,
/// multiples of the sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    Hinge,
    SquaredHinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    SvcHingeL2,
    SvcSquaredHingeL2,
    SvcSquaredHingeL1,
    LogisticL1,
    LogisticL2,
    Ridge,
    Lasso,
    LassoLars,
}

impl ModelKind {
    pub fn is_classifier(self) -> bool {
        matches!(
            self,
            ModelKind::SvcHingeL2
                | ModelKind::SvcSquaredHingeL2
                | ModelKind::SvcSquaredHingeL1
                | ModelKind::LogisticL1
                | ModelKind::LogisticL2
        )
    }
}

/// Outcome of an iterative solver. A fit that hits its iteration budget is
/// still returned, with `converged == false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

impl Convergence {
    pub(crate) fn exact(objective: f64) -> Self {
        Convergence {
            converged: true,
            iterations: 1,
            objective,
        }
    }

    pub(crate) fn warn_if_needed(&self, what: &str) {
        if !self.converged {
            log::warn!(
                "{what}: no convergence after {} iterations (objective {:.6e})",
                self.iterations,
                self.objective
            );
        }
    }

    /// The [`Error::NoConvergence`] this outcome corresponds to, if any.
    pub fn as_error(&self) -> Option<Error> {
        (!self.converged).then_some(Error::NoConvergence {
            iterations: self.iterations,
            objective: self.objective,
        })
    }
}

/// Fitted linear predictor: `values = X · coefᵀ + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `n_targets × n_features`
    pub coef: Array2<f64>,
    pub intercept: Array1<f64>,
    pub kind: ModelKind,
    /// `C` for classifiers, `α` for regressors.
    pub reg: f64,
    /// External labels of the negative and positive class (classifiers only).
    pub classes: Option<[f64; 2]>,
    pub convergence: Convergence,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.coef.ncols()
    }

    /// Weights of the first target.
    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.coef.row(0)
    }

    pub fn n_nonzero(&self) -> usize {
        self.coef.iter().filter(|&&v| v != 0.0).count()
    }

    fn check_features(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_features() {
            return Err(Error::LengthMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// `n_samples × n_targets` predictions.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_features(&x)?;
        Ok(x.dot(&self.coef.t()) + &self.intercept.view().insert_axis(Axis(0)))
    }

    /// Margins of the first (for classifiers: only) target.
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_features(&x)?;
        Ok(x.dot(&self.coef.row(0)) + self.intercept[0])
    }

    /// External labels; a margin of exactly zero goes to the positive class.
    pub fn classify(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let classes = self.classes.ok_or_else(|| {
            Error::BadParameter(format!("{:?} is not a classifier", self.kind))
        })?;
        Ok(self
            .decision_function(x)?
            .iter()
            .map(|&m| if m >= 0.0 { classes[1] } else { classes[0] })
            .collect())
    }
}

/// Binary labels mapped to ±1. The smaller external value becomes −1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLabels {
    pub classes: [f64; 2],
    pub signs: Array1<f64>,
}

impl ClassLabels {
    pub fn new(y: &[f64]) -> Result<Self> {
        let mut distinct: Vec<f64> = Vec::new();
        for &v in y {
            if !v.is_finite() {
                return Err(Error::NonFiniteData("label".into()));
            }
            if !distinct.contains(&v) {
                distinct.push(v);
                if distinct.len() > 2 {
                    return Err(Error::BadParameter(
                        "only binary classification is supported".into(),
                    ));
                }
            }
        }
        if distinct.len() < 2 {
            return Err(Error::SingleClass(format!(
                "{} distinct label(s) in {} samples",
                distinct.len(),
                y.len()
            )));
        }
        distinct.sort_by(f64::total_cmp);
        let classes = [distinct[0], distinct[1]];
        let signs = y.iter().map(|&v| if v == classes[1] { 1.0 } else { -1.0 }).collect();
        Ok(ClassLabels { classes, signs })
    }

    /// Class ids (0 for the negative class, 1 for the positive one).
    pub fn ids(&self) -> Vec<usize> {
        self.signs.iter().map(|&s| usize::from(s > 0.0)).collect()
    }
}

pub(crate) fn check_xy(x: &ArrayView2<'_, f64>, n_targets_rows: usize) -> Result<()> {
    if x.nrows() != n_targets_rows {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            got: n_targets_rows,
        });
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::BadShape(format!("empty design matrix {:?}", x.dim())));
    }
    Ok(())
}

/// Column means and the centered copy of `x`.
pub(crate) fn center_columns(x: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &mean.view().insert_axis(Axis(0));
    (mean, centered)
}

pub(crate) fn mean_of(v: ArrayView1<'_, f64>) -> f64 {
    v.sum() / v.len() as f64
}

/// `log(1 + exp(-t))` without overflow.
#[inline]
pub(crate) fn log1p_exp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-t))` without overflow.
#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Newton step of `min_d g·d + ½h·d² + |w + d|` (one ℓ1-penalized coordinate).
pub(crate) fn l1_newton_direction(w: f64, g: f64, h: f64) -> f64 {
    if g + 1.0 <= h * w {
        -(g + 1.0) / h
    } else if g - 1.0 >= h * w {
        -(g - 1.0) / h
    } else {
        -w
    }
}
