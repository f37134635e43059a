//! Subcommand bodies. Each `run_*` takes loaded inputs, writes its outputs
//! under `out` and returns the numbers it wrote.

mod decode;
mod encode;
mod pixels;
mod rest;
mod searchlight;
mod synth;

use std::path::{Path, PathBuf};

use brainkit::masking::unmask_row;
use brainkit::nifti::write_nifti;
use brainkit::{BrainMask, Volume4D};
use ndarray::ArrayView1;

use crate::error::CliResult;
use crate::render::{render_slice, SliceAxis};
use crate::tables::write_table;

pub use decode::{run_decode, Classifier, DecodeParams, DecodeReport};
pub use encode::{run_encode, EncodeParams, EncodeReport};
pub use pixels::{run_decode_pixels, PixelParams, PixelTable, BASE_C_GRID, PIXEL_MODELS};
pub use rest::{run_cluster, run_ica, ClusterParams, ClusterReport, IcaParams, IcaReport, Method};
pub use searchlight::{run_searchlight, SearchlightParams, SearchlightReport};
pub use synth::{run_synth, SynthKind};

/// Slice used for PGM previews.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceChoice {
    pub axis: SliceAxis,
    /// `None` picks the middle of the axis.
    pub index: Option<usize>,
}

impl Default for SliceChoice {
    fn default() -> Self {
        SliceChoice {
            axis: SliceAxis::Z,
            index: None,
        }
    }
}

impl SliceChoice {
    pub(crate) fn resolve(&self, shape: [usize; 3]) -> usize {
        let extent = match self.axis {
            SliceAxis::X => shape[0],
            SliceAxis::Y => shape[1],
            SliceAxis::Z => shape[2],
        };
        self.index.unwrap_or(extent / 2)
    }
}

pub(crate) fn ensure_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// Writes `<stem>.nii` and a `<stem>.pgm` preview over `background`.
pub(crate) fn write_map(
    values: ArrayView1<'_, f64>,
    mask: &BrainMask,
    background: Option<&Volume4D>,
    slice: SliceChoice,
    out: &Path,
    stem: &str,
) -> CliResult<PathBuf> {
    let vol = unmask_row(values, mask)?;
    let path = out.join(format!("{stem}.nii"));
    write_nifti(&vol, &path)?;
    let index = slice.resolve(mask.shape());
    render_slice(&vol, background, slice.axis, index)?.write(&out.join(format!("{stem}.pgm")))?;
    Ok(path)
}

/// `key,value` rows.
pub(crate) fn write_summary(out: &Path, rows: &[(&str, String)]) -> CliResult<()> {
    let rows: Vec<Vec<String>> = rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    write_table(&out.join("summary.csv"), &["key", "value"], &rows)
}
