//! Resampling a volume onto another grid described by an affine and a shape.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::{linear_index, Affine4, Volume4D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Nearest,
    Trilinear,
}

// slack for coordinates that land on the last index up to rounding
const EDGE_EPS: f64 = 1e-9;

/// Samples `vol` at every voxel of the target grid. Each target index `i`
/// is mapped to source index space through `source⁻¹ · target · i`; targets
/// falling outside the source grid are set to 0. Frames are resampled
/// independently.
pub fn resample(
    vol: &Volume4D,
    target_affine: &Affine4,
    target_shape: [usize; 3],
    interp: Interpolation,
) -> Result<Volume4D> {
    if target_shape.iter().any(|&d| d == 0) {
        return Err(Error::BadShape(format!("target shape {target_shape:?}")));
    }
    let to_source = vol.affine().inverse().compose(target_affine);
    let src = vol.spatial_shape();
    let nt = vol.n_frames();
    let n_target: usize = target_shape.iter().product();

    // precompute the source coordinate of each target voxel once
    let coords: Vec<[f64; 3]> = (0..n_target)
        .map(|i| {
            let x = i % target_shape[0];
            let y = (i / target_shape[0]) % target_shape[1];
            let z = i / (target_shape[0] * target_shape[1]);
            to_source.apply([x as f64, y as f64, z as f64])
        })
        .collect();

    let frames: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|t| {
            let frame = vol.frame(t);
            coords
                .iter()
                .map(|&c| match interp {
                    Interpolation::Nearest => sample_nearest(frame, src, c),
                    Interpolation::Trilinear => sample_trilinear(frame, src, c),
                })
                .collect()
        })
        .collect();

    Volume4D::new(
        [target_shape[0], target_shape[1], target_shape[2], nt],
        frames.concat(),
        *target_affine,
    )
}

fn sample_nearest(frame: &[f64], shape: [usize; 3], c: [f64; 3]) -> f64 {
    let mut idx = [0usize; 3];
    for k in 0..3 {
        let r = c[k].round();
        if r < 0.0 || r > (shape[k] - 1) as f64 {
            return 0.0;
        }
        idx[k] = r as usize;
    }
    frame[linear_index(shape, idx[0], idx[1], idx[2])]
}

fn sample_trilinear(frame: &[f64], shape: [usize; 3], c: [f64; 3]) -> f64 {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut frac = [0.0; 3];
    for k in 0..3 {
        let max = (shape[k] - 1) as f64;
        if c[k] < -EDGE_EPS || c[k] > max + EDGE_EPS {
            return 0.0;
        }
        let v = c[k].clamp(0.0, max);
        let f = v.floor();
        lo[k] = f as usize;
        hi[k] = (lo[k] + 1).min(shape[k] - 1);
        frac[k] = v - f;
    }
    let at = |x: usize, y: usize, z: usize| frame[linear_index(shape, x, y, z)];
    let lerp = |a: f64, b: f64, t: f64| if t == 0.0 { a } else { a + (b - a) * t };
    let c00 = lerp(at(lo[0], lo[1], lo[2]), at(hi[0], lo[1], lo[2]), frac[0]);
    let c10 = lerp(at(lo[0], hi[1], lo[2]), at(hi[0], hi[1], lo[2]), frac[0]);
    let c01 = lerp(at(lo[0], lo[1], hi[2]), at(hi[0], lo[1], hi[2]), frac[0]);
    let c11 = lerp(at(lo[0], hi[1], hi[2]), at(hi[0], hi[1], hi[2]), frac[0]);
    let c0 = lerp(c00, c10, frac[1]);
    let c1 = lerp(c01, c11, frac[1]);
    lerp(c0, c1, frac[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_volume(shape: [usize; 4], affine: Affine4) -> Volume4D {
        let mut s = 12345u64;
        Volume4D::from_fn(shape, affine, |_, _, _, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap()
    }

    #[test]
    fn identity_resample_is_identity() {
        let a = Affine4::new([
            [2.0, 0.1, 0.0, 5.0],
            [0.0, 3.0, 0.0, -1.0],
            [0.2, 0.0, 2.5, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let v = random_volume([5, 4, 3, 2], a);
        for interp in [Interpolation::Trilinear, Interpolation::Nearest] {
            let r = resample(&v, &a, [5, 4, 3], interp).unwrap();
            for (x, y) in v.data().iter().zip(r.data()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn constant_volume_stays_constant() {
        let src = Affine4::diagonal([1.0, 1.0, 1.0]);
        let v = Volume4D::from_fn([8, 8, 8, 1], src, |_, _, _, _| 7.0).unwrap();
        // 2 mm grid covering the same field of view
        let target = Affine4::diagonal_with_origin([2.0, 2.0, 2.0], [0.5, 0.5, 0.5]);
        let r = resample(&v, &target, [4, 4, 4], Interpolation::Trilinear).unwrap();
        assert!(r.data().iter().all(|&x| (x - 7.0).abs() < 1e-12));
    }

    #[test]
    fn ramp_midpoints() {
        let src = Affine4::identity();
        let v = Volume4D::new([4, 1, 1, 1], vec![0.0, 1.0, 2.0, 3.0], src).unwrap();
        let target = Affine4::diagonal_with_origin([1.0, 1.0, 1.0], [0.5, 0.0, 0.0]);
        let r = resample(&v, &target, [3, 1, 1], Interpolation::Trilinear).unwrap();
        let expected = [0.5, 1.5, 2.5];
        for (a, b) in r.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn out_of_bounds_is_zero() {
        let v = Volume4D::from_fn([3, 3, 3, 1], Affine4::identity(), |_, _, _, _| 1.0).unwrap();
        let target = Affine4::diagonal_with_origin([1.0, 1.0, 1.0], [10.0, 0.0, 0.0]);
        for interp in [Interpolation::Trilinear, Interpolation::Nearest] {
            let r = resample(&v, &target, [2, 2, 2], interp).unwrap();
            assert!(r.data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn nearest_picks_closest_voxel() {
        let v = Volume4D::new([4, 1, 1, 1], vec![0.0, 10.0, 20.0, 30.0], Affine4::identity())
            .unwrap();
        let target = Affine4::diagonal_with_origin([1.0, 1.0, 1.0], [0.4, 0.0, 0.0]);
        let r = resample(&v, &target, [3, 1, 1], Interpolation::Nearest).unwrap();
        assert_eq!(r.data(), &[0.0, 10.0, 20.0]);
    }
}
