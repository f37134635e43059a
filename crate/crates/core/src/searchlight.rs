//! Cross-validated decoding restricted to spherical neighborhoods.

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model_selection::{cross_val_score, mean_and_std, FoldPlan, Metric, PipelineSpec};
use crate::volume::BrainMask;

const RADIUS_SLACK: f64 = 1e-9;

/// For every masked voxel (feature index), the sorted feature indices of the
/// masked voxels within `radius_mm` in world space, itself included.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereIndex {
    pub neighbors: Vec<Vec<usize>>,
    pub radius_mm: f64,
}

impl SphereIndex {
    pub fn n_centers(&self) -> usize {
        self.neighbors.len()
    }

    pub fn total_neighbors(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }
}

/// Lattice offsets whose world-space length (through the affine's linear
/// part) is at most `radius_mm`.
fn ball_offsets(mask: &BrainMask, radius_mm: f64) -> Vec<[i64; 3]> {
    let affine = mask.affine();
    let inv = affine.inverse();
    let m = inv.matrix();
    let extent: Vec<i64> = (0..3)
        .map(|r| {
            let row_norm = (m[r][0].powi(2) + m[r][1].powi(2) + m[r][2].powi(2)).sqrt();
            (radius_mm * row_norm + RADIUS_SLACK).floor() as i64
        })
        .collect();
    let mut offsets = Vec::new();
    for dz in -extent[2]..=extent[2] {
        for dy in -extent[1]..=extent[1] {
            for dx in -extent[0]..=extent[0] {
                let w = affine.apply_linear([dx as f64, dy as f64, dz as f64]);
                let dist = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
                if dist <= radius_mm + RADIUS_SLACK {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }
    offsets
}

pub fn build_spheres(mask: &BrainMask, radius_mm: f64) -> Result<SphereIndex> {
    if !(radius_mm > 0.0 && radius_mm.is_finite()) {
        return Err(Error::BadParameter(format!("radius must be positive, got {radius_mm}")));
    }
    let offsets = ball_offsets(mask, radius_mm);
    let [nx, ny, nz] = mask.shape();
    let lookup = mask.feature_lookup();
    let neighbors = mask
        .voxel_indices()
        .par_iter()
        .map(|&v| {
            let (x, y, z) = ((v % nx) as i64, ((v / nx) % ny) as i64, (v / (nx * ny)) as i64);
            let mut list: Vec<usize> = offsets
                .iter()
                .filter_map(|o| {
                    let (px, py, pz) = (x + o[0], y + o[1], z + o[2]);
                    if px < 0 || py < 0 || pz < 0 || px >= nx as i64 || py >= ny as i64 || pz >= nz as i64 {
                        return None;
                    }
                    lookup[px as usize + nx * (py as usize + ny * pz as usize)]
                })
                .collect();
            list.sort_unstable();
            list
        })
        .collect();
    Ok(SphereIndex { neighbors, radius_mm })
}

/// Mean cross-validated accuracy using only the `neighbors` columns.
pub fn score_center(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    neighbors: &[usize],
    spec: &PipelineSpec,
    plan: &FoldPlan,
) -> Result<f64> {
    let local = x.select(Axis(1), neighbors);
    let scores = cross_val_score(spec, local.view(), y, plan, Metric::Accuracy)?;
    Ok(mean_and_std(&scores).0)
}

/// One score per center, in feature order. Any failing center aborts the run.
pub fn searchlight_map(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    index: &SphereIndex,
    spec: &PipelineSpec,
    plan: &FoldPlan,
) -> Result<Vec<f64>> {
    if !spec.model.is_classifier() {
        return Err(Error::BadParameter("searchlight needs a classifier".into()));
    }
    if let Some(bad) = index.neighbors.iter().flatten().find(|&&j| j >= x.ncols()) {
        return Err(Error::LengthMismatch {
            expected: x.ncols(),
            got: bad + 1,
        });
    }
    index
        .neighbors
        .par_iter()
        .map(|nb| score_center(x, y, nb, spec, plan))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{Loss, Penalty};
    use crate::model_selection::{kfold, ModelSpec};
    use crate::volume::Affine4;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feature_of(mask: &BrainMask, x: usize, y: usize, z: usize) -> usize {
        let [nx, ny, _] = mask.shape();
        mask.feature_lookup()[x + nx * (y + ny * z)].unwrap()
    }

    #[test]
    fn sub_voxel_radius_gives_singletons() {
        let mask = BrainMask::full([4, 4, 4], Affine4::diagonal([2.0, 2.0, 2.0])).unwrap();
        let s = build_spheres(&mask, 1.5).unwrap();
        assert!(s.neighbors.iter().enumerate().all(|(i, nb)| nb == &vec![i]));
    }

    #[test]
    fn isotropic_unit_ball() {
        let mask = BrainMask::full([5, 5, 5], Affine4::identity()).unwrap();
        let s = build_spheres(&mask, 1.0).unwrap();
        let c = feature_of(&mask, 2, 2, 2);
        assert_eq!(s.neighbors[c].len(), 7);
        assert_eq!(s.neighbors[feature_of(&mask, 0, 0, 0)].len(), 4);
    }

    #[test]
    fn anisotropic_ball_follows_the_affine() {
        let mask = BrainMask::full([5, 5, 5], Affine4::diagonal([3.0, 1.0, 1.0])).unwrap();
        let s = build_spheres(&mask, 2.0).unwrap();
        let nb = &s.neighbors[feature_of(&mask, 2, 2, 2)];
        assert_eq!(nb.len(), 13);
        assert!(!nb.contains(&feature_of(&mask, 1, 2, 2)));
        assert!(nb.contains(&feature_of(&mask, 2, 0, 2)));
        assert!(nb.contains(&feature_of(&mask, 2, 2, 4)));
        assert!(nb.contains(&feature_of(&mask, 2, 3, 3)));
    }

    #[test]
    fn neighborhoods_are_symmetric_and_masked() {
        let mask = BrainMask::from_fn([6, 5, 4], Affine4::diagonal([1.0, 1.5, 2.5]), |x, y, z| (x * y + z) % 3 != 0)
            .unwrap();
        let s = build_spheres(&mask, 3.0).unwrap();
        for (i, nb) in s.neighbors.iter().enumerate() {
            assert!(nb.contains(&i));
            for &j in nb {
                assert!(j < mask.n_voxels());
                assert!(s.neighbors[j].contains(&i));
            }
        }
    }

    fn line_problem(seed: u64, informative: usize) -> (BrainMask, Array2<f64>, Vec<f64>) {
        let mask = BrainMask::full([12, 1, 1], Affine4::identity()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 40;
        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let x = Array2::from_shape_fn((n, 12), |(i, j)| {
            let signal = if j < informative { 2.0 * (y[i] - 0.5) } else { 0.0 };
            signal + rng.random_range(-1.0..1.0)
        });
        (mask, x, y)
    }

    fn svc() -> PipelineSpec {
        PipelineSpec::model(ModelSpec::LinearSvc {
            penalty: Penalty::L2,
            loss: Loss::Hinge,
            c: 1.0,
        })
    }

    #[test]
    fn informative_region_stands_out() {
        let (mask, x, y) = line_problem(1, 3);
        let index = build_spheres(&mask, 1.0).unwrap();
        let plan = kfold(40, 5, false, 0).unwrap();
        let map = searchlight_map(x.view(), &y, &index, &svc(), &plan).unwrap();
        assert!(map[..2].iter().all(|&s| s >= 0.9), "{map:?}");
        assert!(map[6..].iter().sum::<f64>() / 6.0 <= 0.65, "{map:?}");
        assert!(map.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn single_voxel_balls_equal_per_feature_cv() {
        let (mask, x, y) = line_problem(2, 2);
        let index = build_spheres(&mask, 0.5).unwrap();
        let plan = kfold(40, 4, false, 0).unwrap();
        let map = searchlight_map(x.view(), &y, &index, &svc(), &plan).unwrap();
        for j in 0..12 {
            let col = x.select(Axis(1), &[j]);
            let s = cross_val_score(&svc(), col.view(), &y, &plan, Metric::Accuracy).unwrap();
            assert_eq!(map[j], mean_and_std(&s).0);
        }
    }

    #[test]
    fn center_order_does_not_matter() {
        let (mask, x, y) = line_problem(3, 4);
        let index = build_spheres(&mask, 2.0).unwrap();
        let plan = kfold(40, 5, false, 0).unwrap();
        let map = searchlight_map(x.view(), &y, &index, &svc(), &plan).unwrap();
        for i in (0..12).rev() {
            let s = score_center(x.view(), &y, &index.neighbors[i], &svc(), &plan).unwrap();
            assert_eq!(s.to_bits(), map[i].to_bits());
        }
    }

    #[test]
    fn regression_spec_is_rejected() {
        let (mask, x, y) = line_problem(4, 1);
        let index = build_spheres(&mask, 1.0).unwrap();
        let plan = kfold(40, 5, false, 0).unwrap();
        let spec = PipelineSpec::model(ModelSpec::Ridge { alpha: 1.0 });
        assert!(searchlight_map(x.view(), &y, &index, &spec, &plan).is_err());
    }
}
