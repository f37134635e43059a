use std::path::Path;

use brainkit::linear::{ClassLabels, Loss, Penalty};
use brainkit::masking::apply_mask;
use brainkit::model_selection::{cross_val_score, fit_pipeline, kfold, mean_and_std, Metric, ModelSpec, PipelineSpec};
use brainkit::select::f_classif;
use brainkit::signal::{clean, CleanConfig};
use brainkit::{BrainMask, DataMatrix, Error, Volume4D};
use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ensure_dir, write_map, write_summary, SliceChoice};
use crate::error::CliResult;
use crate::tables::write_table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classifier {
    /// ℓ2 linear SVM, hinge loss.
    Svc,
    /// ℓ2 logistic regression.
    LogReg,
}

impl std::str::FromStr for Classifier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "svc" => Ok(Classifier::Svc),
            "logreg" => Ok(Classifier::LogReg),
            _ => Err(format!("classifier must be svc or logreg, got {s:?}")),
        }
    }
}

impl Classifier {
    pub fn spec(self, c: f64) -> ModelSpec {
        match self {
            Classifier::Svc => ModelSpec::LinearSvc {
                penalty: Penalty::L2,
                loss: Loss::Hinge,
                c,
            },
            Classifier::LogReg => ModelSpec::Logistic { penalty: Penalty::L2, c },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeParams {
    pub k: usize,
    pub classifier: Classifier,
    pub c: f64,
    pub n_folds: usize,
    pub shuffle: bool,
    pub seed: u64,
    pub clean: CleanConfig,
    /// Shuffle the labels first (chance-level control).
    pub permute_labels: bool,
    pub slice: SliceChoice,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            k: 500,
            classifier: Classifier::Svc,
            c: 1.0,
            n_folds: 5,
            shuffle: false,
            seed: 0,
            clean: CleanConfig::default(),
            permute_labels: false,
            slice: SliceChoice::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Per masked voxel, zero outside the selected features.
    pub weights: Array1<f64>,
    pub selected: Vec<usize>,
    pub f_scores: Vec<f64>,
}

pub(crate) fn masked_clean(vol: &Volume4D, mask: &BrainMask, cfg: &CleanConfig) -> CliResult<DataMatrix> {
    let x = apply_mask(vol, mask)?;
    if *cfg == CleanConfig::default() {
        return Ok(x);
    }
    Ok(clean(x.view(), cfg)?)
}

pub(crate) fn check_labels(n_frames: usize, labels: &[f64]) -> CliResult<()> {
    if labels.len() != n_frames {
        return Err(Error::LengthMismatch {
            expected: n_frames,
            got: labels.len(),
        }
        .into());
    }
    Ok(())
}

/// Masking and cleaning, cross-validated ANOVA k-best plus a linear
/// classifier, then a refit on all trials for the weight map.
pub fn run_decode(
    vol: &Volume4D,
    mask: &BrainMask,
    labels: &[f64],
    params: &DecodeParams,
    out: &Path,
) -> CliResult<DecodeReport> {
    ensure_dir(out)?;
    check_labels(vol.n_frames(), labels)?;
    let x = masked_clean(vol, mask, &params.clean)?;
    let mut y = labels.to_vec();
    if params.permute_labels {
        y.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));
    }
    let spec = PipelineSpec {
        standardize: false,
        select_k: Some(params.k.min(x.ncols())),
        model: params.classifier.spec(params.c),
    };
    let plan = kfold(x.nrows(), params.n_folds, params.shuffle, params.seed)?;
    let fold_scores = cross_val_score(&spec, x.view(), &y, &plan, Metric::Accuracy)?;
    let (mean, std) = mean_and_std(&fold_scores);

    let fitted = fit_pipeline(&spec, x.view(), &y)?;
    let weights = fitted.full_weights()?;
    let selected = fitted.selector.as_ref().map(|s| s.selected_indices()).unwrap_or_default();
    let ids = ClassLabels::new(&y)?.ids();
    let f_scores = f_classif(x.view(), &ids, 2)?;

    let background = vol.mean_frame();
    write_map(weights.view(), mask, Some(&background), params.slice, out, "weights")?;
    write_map(ArrayView1::from(&f_scores), mask, Some(&background), params.slice, out, "fscores")?;
    let rows: Vec<Vec<String>> = fold_scores
        .iter()
        .enumerate()
        .map(|(i, s)| vec![i.to_string(), s.to_string()])
        .collect();
    write_table(&out.join("cv_scores.csv"), &["fold", "accuracy"], &rows)?;
    write_summary(
        out,
        &[
            ("classifier", format!("{:?}", params.classifier)),
            ("C", params.c.to_string()),
            ("k", spec.select_k.unwrap_or(0).to_string()),
            ("mean_accuracy", mean.to_string()),
            ("std_accuracy", std.to_string()),
        ],
    )?;
    Ok(DecodeReport {
        fold_scores,
        mean,
        std,
        weights,
        selected,
        f_scores,
    })
}
