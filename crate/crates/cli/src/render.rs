//! Binary PGM (P5) slice rendering.
//!
//! Images are `width × height` with the first in-plane axis running left to
//! right and the second running bottom to top:
//! * `z` slices: x across, y up
//! * `y` slices: x across, z up
//! * `x` slices: y across, z up

use std::path::Path;

use brainkit::{Error, Volume4D};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for SliceAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "x" => Ok(SliceAxis::X),
            "y" => Ok(SliceAxis::Y),
            "z" => Ok(SliceAxis::Z),
            _ => Err(format!("axis must be x, y or z, got {s:?}")),
        }
    }
}

/// Grayscale 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

/// Voxel values of frame 0 on the requested slice, in image row-major order.
fn slice_values(vol: &Volume4D, axis: SliceAxis, index: usize) -> brainkit::Result<(usize, usize, Vec<f64>)> {
    let [nx, ny, nz] = vol.spatial_shape();
    let bound = match axis {
        SliceAxis::X => nx,
        SliceAxis::Y => ny,
        SliceAxis::Z => nz,
    };
    if index >= bound {
        return Err(Error::BadSlice(format!("index {index} on {axis:?} axis of extent {bound}")));
    }
    let (w, h) = match axis {
        SliceAxis::X => (ny, nz),
        SliceAxis::Y => (nx, nz),
        SliceAxis::Z => (nx, ny),
    };
    let mut values = Vec::with_capacity(w * h);
    for row in 0..h {
        let up = h - 1 - row;
        for col in 0..w {
            let (x, y, z) = match axis {
                SliceAxis::X => (index, col, up),
                SliceAxis::Y => (col, index, up),
                SliceAxis::Z => (col, up, index),
            };
            values.push(vol.get(x, y, z, 0));
        }
    }
    Ok((w, h, values))
}

/// Min-max scaled background with nonzero `map` voxels burned in on the
/// upper half of the gray ramp (`128 + 127·|v| / max|v|`).
pub fn render_slice(map: &Volume4D, background: Option<&Volume4D>, axis: SliceAxis, index: usize) -> brainkit::Result<Pgm> {
    let (width, height, overlay) = slice_values(map, axis, index)?;
    let mut pixels = vec![0u8; width * height];
    if let Some(bg) = background {
        if bg.spatial_shape() != map.spatial_shape() {
            return Err(Error::ShapeMismatch(format!(
                "background {:?} vs map {:?}",
                bg.spatial_shape(),
                map.spatial_shape()
            )));
        }
        let (_, _, base) = slice_values(bg, axis, index)?;
        let lo = base.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            for (p, v) in pixels.iter_mut().zip(&base) {
                *p = (255.0 * (v - lo) / (hi - lo)).round() as u8;
            }
        }
    }
    let peak = overlay.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for (p, v) in pixels.iter_mut().zip(&overlay) {
            if *v != 0.0 {
                *p = 128 + (127.0 * v.abs() / peak).round() as u8;
            }
        }
    }
    Ok(Pgm { width, height, pixels })
}

/// Integer label slice with a seeded random gray level per label; label 0
/// stays black.
pub fn render_labels(labels: &Volume4D, axis: SliceAxis, index: usize, seed: u64) -> brainkit::Result<Pgm> {
    let (width, height, values) = slice_values(labels, axis, index)?;
    let n_labels = labels.data().iter().fold(0.0f64, |m, &v| m.max(v)) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels: Vec<u8> = (0..n_labels).map(|l| 40 + (l * 215 / n_labels.max(1)) as u8).collect();
    levels.shuffle(&mut rng);
    let pixels = values
        .iter()
        .map(|&v| if v >= 1.0 { levels[v as usize - 1] } else { 0 })
        .collect();
    Ok(Pgm { width, height, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use brainkit::Affine4;

    fn ramp() -> Volume4D {
        Volume4D::from_fn([3, 2, 2, 1], Affine4::identity(), |x, y, z, _| (x + 3 * y + 6 * z) as f64).unwrap()
    }

    #[test]
    fn zero_map_is_pure_background() {
        let bg = ramp();
        let zero = Volume4D::zeros([3, 2, 2, 1], Affine4::identity()).unwrap();
        let img = render_slice(&zero, Some(&bg), SliceAxis::Z, 0).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        // top row is y = 1
        assert_eq!(img.pixels, vec![153, 204, 255, 0, 51, 102]);
        assert_eq!(&img.to_bytes()[..11], b"P5\n3 2\n255\n");
    }

    #[test]
    fn overlay_and_bounds() {
        let bg = ramp();
        let map = Volume4D::from_fn([3, 2, 2, 1], Affine4::identity(), |x, _, _, _| if x == 0 { -2.0 } else { 0.0 }).unwrap();
        let img = render_slice(&map, Some(&bg), SliceAxis::X, 0).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 255));
        assert!(matches!(render_slice(&map, None, SliceAxis::Y, 2), Err(Error::BadSlice(_))));
        let a = render_slice(&map, Some(&bg), SliceAxis::Y, 1).unwrap();
        assert_eq!(a, render_slice(&map, Some(&bg), SliceAxis::Y, 1).unwrap());
    }

    #[test]
    fn labels_get_distinct_levels() {
        let labels = Volume4D::from_fn([3, 1, 1, 1], Affine4::identity(), |x, _, _, _| x as f64).unwrap();
        let img = render_labels(&labels, SliceAxis::Z, 0, 5).unwrap();
        assert_eq!(img.pixels[0], 0);
        assert_ne!(img.pixels[1], img.pixels[2]);
        assert_eq!(img, render_labels(&labels, SliceAxis::Z, 0, 5).unwrap());
    }
}
