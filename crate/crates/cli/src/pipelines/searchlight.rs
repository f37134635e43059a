use std::path::Path;

use brainkit::model_selection::{kfold, PipelineSpec};
use brainkit::searchlight::{build_spheres, searchlight_map};
use brainkit::signal::CleanConfig;
use brainkit::{BrainMask, Volume4D};
use ndarray::ArrayView1;

use super::decode::{check_labels, masked_clean, Classifier};
use super::{ensure_dir, write_map, write_summary, SliceChoice};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchlightParams {
    pub radius_mm: f64,
    pub n_folds: usize,
    pub classifier: Classifier,
    pub c: f64,
    pub clean: CleanConfig,
    pub slice: SliceChoice,
}

impl SearchlightParams {
    pub fn new(radius_mm: f64) -> Self {
        SearchlightParams {
            radius_mm,
            n_folds: 5,
            classifier: Classifier::Svc,
            c: 1.0,
            clean: CleanConfig::default(),
            slice: SliceChoice::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchlightReport {
    /// Mean CV accuracy per masked voxel.
    pub scores: Vec<f64>,
    pub mean_neighbors: f64,
}

pub fn run_searchlight(
    vol: &Volume4D,
    mask: &BrainMask,
    labels: &[f64],
    params: &SearchlightParams,
    out: &Path,
) -> CliResult<SearchlightReport> {
    ensure_dir(out)?;
    check_labels(vol.n_frames(), labels)?;
    let x = masked_clean(vol, mask, &params.clean)?;
    let index = build_spheres(mask, params.radius_mm)?;
    let spec = PipelineSpec::model(params.classifier.spec(params.c));
    let plan = kfold(x.nrows(), params.n_folds, false, 0)?;
    let scores = searchlight_map(x.view(), labels, &index, &spec, &plan)?;
    let mean_neighbors = index.total_neighbors() as f64 / index.n_centers() as f64;
    write_map(ArrayView1::from(&scores), mask, Some(&vol.mean_frame()), params.slice, out, "searchlight")?;
    write_summary(
        out,
        &[
            ("radius_mm", params.radius_mm.to_string()),
            ("centers", index.n_centers().to_string()),
            ("mean_neighbors", mean_neighbors.to_string()),
            ("max_score", scores.iter().fold(0.0f64, |m, &s| m.max(s)).to_string()),
        ],
    )?;
    Ok(SearchlightReport { scores, mean_neighbors })
}
