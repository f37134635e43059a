use std::path::Path;

use brainkit::linear::{Loss, Penalty};
use brainkit::model_selection::{cross_val_score_models, kfold, mean_and_std, Metric, ModelSpec, PipelineSpec};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::{ensure_dir, write_summary};
use crate::error::CliResult;
use crate::tables::write_table;

/// Regularization values of the reference table; the run multiplies them by
/// [`PixelParams::c_scale`].
pub const BASE_C_GRID: [f64; 6] = [0.0005, 0.001, 0.005, 0.01, 0.05, 0.1];

pub const PIXEL_MODELS: [(&str, ModelSpec); 4] = [
    ("l1_logistic", ModelSpec::Logistic { penalty: Penalty::L1, c: 1.0 }),
    ("l2_logistic", ModelSpec::Logistic { penalty: Penalty::L2, c: 1.0 }),
    (
        "l1_svc",
        ModelSpec::LinearSvc {
            penalty: Penalty::L1,
            loss: Loss::SquaredHinge,
            c: 1.0,
        },
    ),
    (
        "l2_svc",
        ModelSpec::LinearSvc {
            penalty: Penalty::L2,
            loss: Loss::Hinge,
            c: 1.0,
        },
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PixelParams {
    pub c_scale: f64,
    /// In-fold ANOVA k-best; `None` keeps every voxel.
    pub k: Option<usize>,
    pub n_folds: usize,
    pub standardize: bool,
}

impl Default for PixelParams {
    fn default() -> Self {
        PixelParams {
            c_scale: 4.0,
            k: Some(50),
            n_folds: 5,
            standardize: true,
        }
    }
}

/// Rows follow [`PIXEL_MODELS`], columns the scaled C grid. Each cell is the
/// mean (and n−1 standard deviation) over pixels of the mean CV accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelTable {
    pub models: Vec<String>,
    pub cs: Vec<f64>,
    pub mean: Array2<f64>,
    pub std: Array2<f64>,
    /// Pixels skipped because they never change.
    pub skipped: Vec<usize>,
}

/// Decodes every stimulus pixel from the voxel responses with each model
/// and C value.
pub fn run_decode_pixels(
    stimuli: ArrayView2<'_, f64>,
    bold: ArrayView2<'_, f64>,
    params: &PixelParams,
    out: &Path,
) -> CliResult<PixelTable> {
    ensure_dir(out)?;
    let cs: Vec<f64> = BASE_C_GRID.iter().map(|c| c * params.c_scale).collect();
    let plan = kfold(bold.nrows(), params.n_folds, false, 0)?;
    let (pixels, skipped): (Vec<usize>, Vec<usize>) = (0..stimuli.ncols()).partition(|&p| {
        let col = stimuli.column(p);
        col.iter().any(|&v| v != col[0])
    });
    if !skipped.is_empty() {
        log::warn!("{} constant pixels skipped", skipped.len());
    }
    let k = params.k.map(|k| k.min(bold.ncols()));
    // model-major, C varying fastest
    let mut specs = Vec::with_capacity(PIXEL_MODELS.len() * cs.len());
    for (_, model) in &PIXEL_MODELS {
        for &c in &cs {
            specs.push(PipelineSpec::model(*model).with_param("C", c)?.model);
        }
    }
    let base = PipelineSpec {
        standardize: params.standardize,
        select_k: k,
        model: specs[0],
    };

    // per pixel: one accuracy per (model, C)
    let per_pixel: Vec<Vec<f64>> = pixels
        .par_iter()
        .map(|&p| {
            let y: Vec<f64> = stimuli.column(p).to_vec();
            let scores = cross_val_score_models(&base, &specs, bold, &y, &plan, Metric::Accuracy)?;
            Ok(scores.iter().map(|s| mean_and_std(s).0).collect())
        })
        .collect::<brainkit::Result<_>>()?;

    let (n_models, n_cs) = (PIXEL_MODELS.len(), cs.len());
    let mut mean = Array2::zeros((n_models, n_cs));
    let mut std = Array2::zeros((n_models, n_cs));
    for m in 0..n_models {
        for j in 0..n_cs {
            let column: Vec<f64> = per_pixel.iter().map(|cells| cells[m * n_cs + j]).collect();
            let (mu, sd) = mean_and_std(&column);
            mean[[m, j]] = mu;
            std[[m, j]] = sd;
        }
    }
    let models: Vec<String> = PIXEL_MODELS.iter().map(|(n, _)| n.to_string()).collect();

    let mut header = vec!["model".to_string()];
    header.extend(cs.iter().map(|c| c.to_string()));
    let wide: Vec<Vec<String>> = (0..n_models)
        .map(|m| {
            let mut row = vec![models[m].clone()];
            row.extend((0..n_cs).map(|j| format!("{:.2} ± {:.2}", mean[[m, j]], std[[m, j]])));
            row
        })
        .collect();
    write_table(&out.join("table.csv"), &header, &wide)?;
    let long: Vec<Vec<String>> = (0..n_models)
        .flat_map(|m| {
            let models = &models;
            let (mean, std, cs) = (&mean, &std, &cs);
            (0..n_cs).map(move |j| {
                vec![
                    models[m].clone(),
                    cs[j].to_string(),
                    mean[[m, j]].to_string(),
                    std[[m, j]].to_string(),
                ]
            })
        })
        .collect();
    write_table(&out.join("table_long.csv"), &["model", "C", "mean", "std"], &long)?;
    write_summary(
        out,
        &[
            ("pixels", pixels.len().to_string()),
            ("skipped", skipped.len().to_string()),
            ("folds", params.n_folds.to_string()),
            ("c_scale", params.c_scale.to_string()),
        ],
    )?;
    Ok(PixelTable {
        models,
        cs,
        mean,
        std,
        skipped,
    })
}
