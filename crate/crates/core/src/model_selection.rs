//! Splitters, cross-validated scoring and exhaustive grid search.
//!
//! Estimators are described declaratively ([`PipelineSpec`]) and refit from
//! scratch on every training split, feature scaling and selection included,
//! so nothing learned from test rows reaches the model.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linear::{
    accuracy_score, fit_lasso_cd, fit_lasso_lars_cv, fit_linear_svc, fit_logistic, fit_ridge,
    r2_score_per_target, ClassLabels, LinearModel, Loss, Penalty,
};
use crate::select::{f_classif, select_k_best, FeatureSelector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    pub n_samples: usize,
}

/// `k` contiguous test blocks (the first `n mod k` one sample larger), over a
/// seeded permutation when `shuffle` is set.
pub fn kfold(n: usize, k: usize, shuffle: bool, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::BadK(format!("k = {k} folds for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(FoldPlan { folds, n_samples: n })
}

/// `n_iter` independent random partitions with `round(test_fraction·n)` test
/// samples (at least one, leaving at least one for training).
pub fn shuffle_split(n: usize, n_iter: usize, test_fraction: f64, seed: u64) -> Result<FoldPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::BadFraction(test_fraction));
    }
    if n_iter == 0 || n < 2 {
        return Err(Error::BadK(format!("{n_iter} iterations over {n} samples")));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let folds = (0..n_iter)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut test = order[..n_test].to_vec();
            let mut train = order[n_test..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { folds, n_samples: n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    LinearSvc { penalty: Penalty, loss: Loss, c: f64 },
    Logistic { penalty: Penalty, c: f64 },
    Ridge { alpha: f64 },
    Lasso { alpha: f64 },
    LassoLarsCv { n_folds: usize, max_iter: usize },
}

impl ModelSpec {
    pub fn is_classifier(&self) -> bool {
        matches!(self, ModelSpec::LinearSvc { .. } | ModelSpec::Logistic { .. })
    }

    pub fn fit(&self, x: ArrayView2<'_, f64>, y: &[f64]) -> Result<LinearModel> {
        let yv = ndarray::ArrayView1::from(y);
        match *self {
            ModelSpec::LinearSvc { penalty, loss, c } => fit_linear_svc(x, y, penalty, loss, c),
            ModelSpec::Logistic { penalty, c } => fit_logistic(x, y, penalty, c),
            ModelSpec::Ridge { alpha } => fit_ridge(x, yv.insert_axis(Axis(1)), alpha),
            ModelSpec::Lasso { alpha } => fit_lasso_cd(x, yv, alpha),
            ModelSpec::LassoLarsCv { n_folds, max_iter } => Ok(fit_lasso_lars_cv(x, yv, n_folds, max_iter)?.model),
        }
    }
}

/// Optional standardization, then optional ANOVA k-best selection, then a
/// linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSpec {
    pub standardize: bool,
    pub select_k: Option<usize>,
    pub model: ModelSpec,
}

impl PipelineSpec {
    pub fn model(model: ModelSpec) -> Self {
        PipelineSpec {
            standardize: false,
            select_k: None,
            model,
        }
    }

    /// Copy with one named hyperparameter replaced: `C`, `alpha` or `k`.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = *self;
        match (name, &mut out.model) {
            ("C", ModelSpec::LinearSvc { c, .. }) | ("C", ModelSpec::Logistic { c, .. }) => *c = value,
            ("alpha", ModelSpec::Ridge { alpha }) | ("alpha", ModelSpec::Lasso { alpha }) => *alpha = value,
            ("k", _) => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::BadK(format!("k = {value}")));
                }
                out.select_k = Some(value as usize);
            }
            _ => {
                return Err(Error::BadParameter(format!(
                    "parameter {name} does not apply to {:?}",
                    self.model
                )))
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct Scaler {
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl Scaler {
    fn fit(x: ArrayView2<'_, f64>) -> Self {
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
        Scaler { mean, scale }
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean.view().insert_axis(Axis(0))) / &self.scale.view().insert_axis(Axis(0))
    }
}

fn preprocess(
    scaler: Option<&Scaler>,
    selector: Option<&FeatureSelector>,
    x: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let mut z = match scaler {
        Some(s) => {
            if x.ncols() != s.mean.len() {
                return Err(Error::LengthMismatch {
                    expected: s.mean.len(),
                    got: x.ncols(),
                });
            }
            s.apply(x)
        }
        None => x.to_owned(),
    };
    if let Some(sel) = selector {
        z = sel.transform(z.view())?;
    }
    Ok(z)
}

/// A pipeline fitted on one training set.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    scaler: Option<Scaler>,
    pub selector: Option<FeatureSelector>,
    pub model: LinearModel,
}

impl FittedPipeline {
    fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        preprocess(self.scaler.as_ref(), self.selector.as_ref(), x)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.model.predict(self.transform(x)?.view())
    }

    pub fn classify(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.model.classify(self.transform(x)?.view())
    }

    /// First-target weights expressed on the original (unscaled, unselected)
    /// features; unselected features get 0.
    pub fn full_weights(&self) -> Result<Array1<f64>> {
        let w = self.model.coef.row(0).insert_axis(Axis(0));
        let mut full = match &self.selector {
            Some(sel) => sel.inverse_transform(w)?.row(0).to_owned(),
            None => w.row(0).to_owned(),
        };
        if let Some(s) = &self.scaler {
            full /= &s.scale;
        }
        Ok(full)
    }
}

pub fn fit_pipeline(spec: &PipelineSpec, x: ArrayView2<'_, f64>, y: &[f64]) -> Result<FittedPipeline> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let (scaler, selector, z) = fit_preprocessing(spec, x, y)?;
    let model = spec.model.fit(z.view(), y)?;
    Ok(FittedPipeline {
        scaler,
        selector,
        model,
    })
}

/// Standardization and selection of `spec` fitted on `x`, plus the
/// transformed training matrix.
fn fit_preprocessing(
    spec: &PipelineSpec,
    x: ArrayView2<'_, f64>,
    y: &[f64],
) -> Result<(Option<Scaler>, Option<FeatureSelector>, Array2<f64>)> {
    let scaler = spec.standardize.then(|| Scaler::fit(x));
    let mut z = match &scaler {
        Some(s) => s.apply(x),
        None => x.to_owned(),
    };
    let selector = match spec.select_k {
        Some(k) => {
            if !spec.model.is_classifier() {
                return Err(Error::BadParameter("ANOVA selection needs a classifier".into()));
            }
            let labels = ClassLabels::new(y)?;
            let scores = f_classif(z.view(), &labels.ids(), 2)?;
            let sel = select_k_best(&scores, k)?;
            z = sel.transform(z.view())?;
            Some(sel)
        }
        None => None,
    };
    Ok((scaler, selector, z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    R2,
}

pub fn score(fitted: &FittedPipeline, x: ArrayView2<'_, f64>, y: &[f64], metric: Metric) -> Result<f64> {
    score_transformed(&fitted.model, fitted.transform(x)?.view(), y, metric)
}

/// Score of `model` on already preprocessed features.
fn score_transformed(model: &LinearModel, z: ArrayView2<'_, f64>, y: &[f64], metric: Metric) -> Result<f64> {
    match metric {
        Metric::Accuracy => accuracy_score(y, &model.classify(z)?),
        Metric::R2 => {
            let pred = model.predict(z)?;
            let truth = ndarray::ArrayView1::from(y).insert_axis(Axis(1));
            Ok(r2_score_per_target(truth, pred.column(0).insert_axis(Axis(1)))?[0])
        }
    }
}

/// Per-fold test scores of `spec` refit on each training split.
pub fn cross_val_score(
    spec: &PipelineSpec,
    x: ArrayView2<'_, f64>,
    y: &[f64],
    plan: &FoldPlan,
    metric: Metric,
) -> Result<Vec<f64>> {
    if plan.n_samples != x.nrows() || y.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            expected: plan.n_samples,
            got: x.nrows().min(y.len()),
        });
    }
    plan.folds
        .iter()
        .map(|fold| {
            let xt = x.select(Axis(0), &fold.train);
            let yt: Vec<f64> = fold.train.iter().map(|&i| y[i]).collect();
            let fitted = fit_pipeline(spec, xt.view(), &yt)?;
            let xs = x.select(Axis(0), &fold.test);
            let ys: Vec<f64> = fold.test.iter().map(|&i| y[i]).collect();
            score(&fitted, xs.view(), &ys, metric)
        })
        .collect()
}

/// Per-fold test scores of several models behind the preprocessing of
/// `base` (its own model is ignored). Standardization and selection are
/// fitted once per fold and shared, so row `m` equals
/// `cross_val_score` of `base` with `models[m]`.
pub fn cross_val_score_models(
    base: &PipelineSpec,
    models: &[ModelSpec],
    x: ArrayView2<'_, f64>,
    y: &[f64],
    plan: &FoldPlan,
    metric: Metric,
) -> Result<Vec<Vec<f64>>> {
    if plan.n_samples != x.nrows() || y.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            expected: plan.n_samples,
            got: x.nrows().min(y.len()),
        });
    }
    if base.select_k.is_some() && models.iter().any(|m| !m.is_classifier()) {
        return Err(Error::BadParameter("ANOVA selection needs a classifier".into()));
    }
    let mut scores = vec![Vec::with_capacity(plan.folds.len()); models.len()];
    for fold in &plan.folds {
        let xt = x.select(Axis(0), &fold.train);
        let yt: Vec<f64> = fold.train.iter().map(|&i| y[i]).collect();
        let (scaler, selector, z) = fit_preprocessing(base, xt.view(), &yt)?;
        let xs = x.select(Axis(0), &fold.test);
        let ys: Vec<f64> = fold.test.iter().map(|&i| y[i]).collect();
        let zs = preprocess(scaler.as_ref(), selector.as_ref(), xs.view())?;
        for (model, out) in models.iter().zip(scores.iter_mut()) {
            let fitted = model.fit(z.view(), &yt)?;
            out.push(score_transformed(&fitted, zs.view(), &ys, metric)?);
        }
    }
    Ok(scores)
}

pub fn mean_and_std(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    if scores.len() < 2 {
        return (mean, 0.0);
    }
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Named hyperparameter lists; the Cartesian product is enumerated with the
/// last parameter varying fastest.
pub type ParamGrid = Vec<(String, Vec<f64>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub params: Vec<(String, f64)>,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub entries: Vec<GridEntry>,
    /// Index of the first entry with the highest mean.
    pub best: usize,
    /// Best combination refit on every sample.
    pub best_fit: FittedPipeline,
}

impl GridResult {
    pub fn best_entry(&self) -> &GridEntry {
        &self.entries[self.best]
    }
}

fn expand_grid(grid: &ParamGrid) -> Vec<Vec<(String, f64)>> {
    let mut combos: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (name, values) in grid {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut c = prefix.clone();
                    c.push((name.clone(), v));
                    c
                })
            })
            .collect();
    }
    combos
}

pub fn grid_search(
    template: &PipelineSpec,
    grid: &ParamGrid,
    x: ArrayView2<'_, f64>,
    y: &[f64],
    plan: &FoldPlan,
    metric: Metric,
) -> Result<GridResult> {
    if grid.is_empty() || grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::BadParameter("empty parameter grid".into()));
    }
    let combos = expand_grid(grid);
    let specs: Vec<PipelineSpec> = combos
        .iter()
        .map(|combo| {
            combo
                .iter()
                .try_fold(*template, |spec, (name, v)| spec.with_param(name, *v))
        })
        .collect::<Result<_>>()?;
    let entries: Vec<GridEntry> = specs
        .par_iter()
        .zip(combos.par_iter())
        .map(|(spec, combo)| {
            let scores = cross_val_score(spec, x, y, plan, metric)?;
            let (mean, std) = mean_and_std(&scores);
            Ok(GridEntry {
                params: combo.clone(),
                mean,
                std,
                scores,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.mean > entries[best].mean {
            best = i;
        }
    }
    let best_fit = fit_pipeline(&specs[best], x, y)?;
    Ok(GridResult {
        entries,
        best,
        best_fit,
    })
}
