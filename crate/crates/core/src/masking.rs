//! Conversion between 4D volumes and `time × voxel` data matrices.
//!
//! Feature `j` of a masked matrix is the `j`-th masked voxel in x-fastest
//! scan order (x, then y, then z). Every function that maps features back to
//! space relies on that ordering.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::volume::{BrainMask, DataMatrix, Volume4D, AFFINE_TOLERANCE};

/// Intensity-based mask of a single-frame (mean) image.
///
/// The threshold is the mean of the `lower_q` and `upper_q` quantiles of the
/// nonzero intensities; voxels strictly above it are kept. When the threshold
/// reaches the maximum intensity (e.g. a constant image) the comparison is
/// relaxed to `>=` so the mask is not empty.
pub fn compute_mask(mean_vol: &Volume4D, lower_q: f64, upper_q: f64) -> Result<BrainMask> {
    if !(0.0..=1.0).contains(&lower_q) || !(0.0..=1.0).contains(&upper_q) || lower_q >= upper_q {
        return Err(Error::BadParameter(format!(
            "quantiles must satisfy 0 <= lower ({lower_q}) < upper ({upper_q}) <= 1"
        )));
    }
    if mean_vol.n_frames() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "compute_mask expects a single frame, got {}",
            mean_vol.n_frames()
        )));
    }
    let frame = mean_vol.frame(0);
    let mut nonzero: Vec<f64> = frame.iter().copied().filter(|&v| v != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::EmptyMask);
    }
    nonzero.sort_by(f64::total_cmp);
    let threshold = 0.5 * (quantile_sorted(&nonzero, lower_q) + quantile_sorted(&nonzero, upper_q));
    let max = *nonzero.last().expect("non-empty");
    let flags: Vec<bool> = if threshold >= max {
        frame.iter().map(|&v| v != 0.0 && v >= threshold).collect()
    } else {
        frame.iter().map(|&v| v > threshold).collect()
    };
    BrainMask::new(mean_vol.spatial_shape(), flags, *mean_vol.affine())
}

/// Linear-interpolated quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn check_compatible(vol: &Volume4D, mask: &BrainMask) -> Result<()> {
    if vol.spatial_shape() != mask.shape() {
        return Err(Error::ShapeMismatch(format!(
            "volume {:?} vs mask {:?}",
            vol.spatial_shape(),
            mask.shape()
        )));
    }
    let diff = vol.affine().max_abs_diff(mask.affine());
    if diff > AFFINE_TOLERANCE {
        return Err(Error::AffineMismatch(diff));
    }
    Ok(())
}

/// `nt × n_voxels` matrix of the masked time series.
pub fn apply_mask(vol: &Volume4D, mask: &BrainMask) -> Result<DataMatrix> {
    check_compatible(vol, mask)?;
    let voxels = mask.voxel_indices();
    let nt = vol.n_frames();
    let mut x = Array2::zeros((nt, voxels.len()));
    for t in 0..nt {
        let frame = vol.frame(t);
        for (j, &v) in voxels.iter().enumerate() {
            x[[t, j]] = frame[v];
        }
    }
    Ok(x)
}

/// Scatters each row into a 3D frame (zeros off-mask), stacking rows along
/// the fourth axis.
pub fn unmask(rows: ArrayView2<'_, f64>, mask: &BrainMask) -> Result<Volume4D> {
    if rows.ncols() != mask.n_voxels() {
        return Err(Error::LengthMismatch {
            expected: mask.n_voxels(),
            got: rows.ncols(),
        });
    }
    let [nx, ny, nz] = mask.shape();
    let n = nx * ny * nz;
    let voxels = mask.voxel_indices();
    let mut data = vec![0.0; n * rows.nrows().max(1)];
    for (t, row) in rows.outer_iter().enumerate() {
        for (j, &v) in voxels.iter().enumerate() {
            data[t * n + v] = row[j];
        }
    }
    Volume4D::new([nx, ny, nz, rows.nrows().max(1)], data, *mask.affine())
}

/// Single-row convenience wrapper around [`unmask`].
pub fn unmask_row(row: ArrayView1<'_, f64>, mask: &BrainMask) -> Result<Volume4D> {
    unmask(row.insert_axis(ndarray::Axis(0)), mask)
}
