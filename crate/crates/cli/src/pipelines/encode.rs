use std::path::Path;

use brainkit::linear::{fit_lasso_lars_cv, fit_ridge, r2_score_per_target};
use brainkit::model_selection::kfold;
use brainkit::synth::IMAGE_SIDE;
use brainkit::{BrainMask, Error};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{ensure_dir, write_map, write_summary, SliceChoice};
use crate::error::CliResult;
use crate::tables::{write_matrix, write_table};

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeParams {
    pub alpha: f64,
    pub n_folds: usize,
    /// Number of best-predicted voxels that get a receptive field.
    pub n_fields: usize,
    pub lars_folds: usize,
    pub lars_max_iter: usize,
    pub slice: SliceChoice,
}

impl Default for EncodeParams {
    fn default() -> Self {
        EncodeParams {
            alpha: 100.0,
            n_folds: 10,
            n_fields: 50,
            lars_folds: 5,
            lars_max_iter: 500,
            slice: SliceChoice::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeReport {
    /// Mean held-out r² per voxel.
    pub r2: Array1<f64>,
    /// Voxels by decreasing r².
    pub top_voxels: Vec<usize>,
    /// `top_voxels.len() × n_pixels` receptive fields.
    pub fields: Array2<f64>,
}

/// Ridge encoding of every voxel from the stimuli with k-fold predictive
/// r², then sparse receptive fields for the best voxels.
pub fn run_encode(
    stimuli: ArrayView2<'_, f64>,
    bold: ArrayView2<'_, f64>,
    mask: &BrainMask,
    params: &EncodeParams,
    out: &Path,
) -> CliResult<EncodeReport> {
    ensure_dir(out)?;
    if stimuli.nrows() != bold.nrows() {
        return Err(Error::LengthMismatch {
            expected: bold.nrows(),
            got: stimuli.nrows(),
        }
        .into());
    }
    let plan = kfold(bold.nrows(), params.n_folds, false, 0)?;
    let mut r2 = Array1::<f64>::zeros(bold.ncols());
    for fold in &plan.folds {
        let model = fit_ridge(
            stimuli.select(Axis(0), &fold.train).view(),
            bold.select(Axis(0), &fold.train).view(),
            params.alpha,
        )?;
        let pred = model.predict(stimuli.select(Axis(0), &fold.test).view())?;
        r2 += &r2_score_per_target(bold.select(Axis(0), &fold.test).view(), pred.view())?;
    }
    r2 /= plan.folds.len() as f64;

    let mut order: Vec<usize> = (0..bold.ncols()).collect();
    order.sort_by(|&a, &b| r2[b].total_cmp(&r2[a]).then(a.cmp(&b)));
    let top_voxels: Vec<usize> = order.into_iter().take(params.n_fields).collect();
    let mut fields = Array2::zeros((top_voxels.len(), stimuli.ncols()));
    let field_dir = out.join("fields");
    ensure_dir(&field_dir)?;
    for (rank, &v) in top_voxels.iter().enumerate() {
        let fit = fit_lasso_lars_cv(stimuli, bold.column(v), params.lars_folds, params.lars_max_iter)?;
        let w = fit.model.coef.row(0);
        fields.row_mut(rank).assign(&w);
        if w.len() == IMAGE_SIDE * IMAGE_SIDE {
            let grid = w.to_owned().into_shape_with_order((IMAGE_SIDE, IMAGE_SIDE)).expect("square image");
            write_matrix(&field_dir.join(format!("voxel_{v:05}.csv")), None, grid.view())?;
        }
    }

    write_map(r2.view(), mask, None, params.slice, out, "r2")?;
    let rows: Vec<Vec<String>> = r2.iter().enumerate().map(|(v, s)| vec![v.to_string(), s.to_string()]).collect();
    write_table(&out.join("r2.csv"), &["voxel", "r2"], &rows)?;
    write_summary(
        out,
        &[
            ("alpha", params.alpha.to_string()),
            ("folds", params.n_folds.to_string()),
            ("max_r2", r2.fold(f64::NEG_INFINITY, |m, &v| m.max(v)).to_string()),
            ("fields", top_voxels.len().to_string()),
        ],
    )?;
    Ok(EncodeReport {
        r2,
        top_voxels,
        fields,
    })
}
