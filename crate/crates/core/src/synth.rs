//! Seeded synthetic datasets with known ground truth.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::volume::{Affine4, BrainMask, DataMatrix, Volume4D};

pub const IMAGE_SIDE: usize = 10;
pub const N_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const REST_AR_COEF: f64 = 0.5;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Two-class trials over a 3D grid. Labels are `0`/`1`, interleaved; class
/// `1` trials carry `+snr` inside `truth_support` on top of unit noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingSet {
    pub volume: Volume4D,
    pub mask: BrainMask,
    pub labels: Vec<f64>,
    pub truth_support: BrainMask,
    pub snr: f64,
}

/// Ellipsoid with semi-axes `radii` (voxels) around `center`.
fn ellipsoid(shape: [usize; 3], center: [f64; 3], radii: [f64; 3]) -> Vec<bool> {
    let [nx, ny, nz] = shape;
    let mut flags = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = [x as f64, y as f64, z as f64];
                let r: f64 = (0..3).map(|a| ((p[a] - center[a]) / radii[a]).powi(2)).sum();
                flags.push(r <= 1.0);
            }
        }
    }
    flags
}

pub fn make_decoding(shape: [usize; 3], n_per_class: usize, snr: f64, seed: u64) -> Result<DecodingSet> {
    if shape.iter().any(|&s| s < 8) {
        return Err(Error::BadShape(format!("{shape:?} is below 8×8×8")));
    }
    if n_per_class < 10 {
        return Err(Error::BadParameter(format!("{n_per_class} trials per class, need 10")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let affine = Affine4::diagonal([3.0, 3.0, 3.0]);
    let half = shape.map(|s| (s as f64 - 1.0) / 2.0);
    let brain = ellipsoid(shape, half, shape.map(|s| s as f64 / 2.0 + 0.25));
    let mask = BrainMask::new(shape, brain, affine)?;

    let center: [f64; 3] = std::array::from_fn(|a| {
        let lo = shape[a] as f64 * 0.35;
        let hi = shape[a] as f64 * 0.65;
        rng.random_range(lo..hi).round()
    });
    let radii: [f64; 3] = std::array::from_fn(|_| rng.random_range(1.2..2.2));
    let truth = ellipsoid(shape, center, radii);
    let truth_support = BrainMask::new(shape, truth, affine)?;

    let n = 2 * n_per_class;
    let labels: Vec<f64> = (0..n).map(|t| (t % 2) as f64).collect();
    let n_vox = shape.iter().product::<usize>();
    let mut data = Vec::with_capacity(n_vox * n);
    for &label in &labels {
        for v in 0..n_vox {
            let signal = if label > 0.5 && truth_support.flags()[v] { snr } else { 0.0 };
            data.push(signal + normal(&mut rng));
        }
    }
    let volume = Volume4D::new([shape[0], shape[1], shape[2], n], data, affine)?;
    Ok(DecodingSet {
        volume,
        mask,
        labels,
        truth_support,
        snr,
    })
}

/// Binary 10×10 stimuli and voxel responses driven by small receptive
/// patches. Patch positions follow a serpentine path over the image, so
/// neighboring voxels see neighboring pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingSet {
    /// `n_trials × 100`, entries 0 or 1, pixel index `row·10 + col`.
    pub stimuli: DataMatrix,
    /// `n_trials × n_voxels`
    pub bold: DataMatrix,
    /// `n_voxels × 100`
    pub true_fields: Array2<f64>,
    pub noise_sigma: f64,
}

const PATCH_SHAPES: [(usize, usize); 4] = [(2, 2), (2, 2), (1, 2), (2, 1)];

pub fn make_encoding(n_trials: usize, n_voxels: usize, noise_sigma: f64, seed: u64) -> Result<EncodingSet> {
    if n_trials < 50 {
        return Err(Error::BadParameter(format!("{n_trials} trials, need 50")));
    }
    if n_voxels == 0 {
        return Err(Error::BadParameter("no voxels".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::BadParameter(format!("noise sigma {noise_sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = IMAGE_SIDE - 1;
    let n_pos = side * side;
    let mut true_fields = Array2::zeros((n_voxels, N_PIXELS));
    for v in 0..n_voxels {
        let pos = v * n_pos / n_voxels;
        let (row, step) = (pos / side, pos % side);
        let col = if row % 2 == 0 { step } else { side - 1 - step };
        let (h, w) = PATCH_SHAPES[rng.random_range(0..PATCH_SHAPES.len())];
        for r in row..row + h {
            for c in col..col + w {
                true_fields[[v, r * IMAGE_SIDE + c]] = rng.random_range(1.0..2.0);
            }
        }
    }
    let stimuli = Array2::from_shape_fn((n_trials, N_PIXELS), |_| if rng.random::<bool>() { 1.0 } else { 0.0 });
    let mut bold = stimuli.dot(&true_fields.t());
    if noise_sigma > 0.0 {
        bold.mapv_inplace(|b| b + noise_sigma * normal(&mut rng));
    }
    Ok(EncodingSet {
        stimuli,
        bold,
        true_fields,
        noise_sigma,
    })
}

/// Resting-state analog: every subject sees the same spatial networks with
/// its own AR(1) time courses, plus noise and per-voxel linear drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct RestSet {
    /// One `nt × n_voxels` matrix per subject.
    pub subjects: Vec<DataMatrix>,
    pub mask: BrainMask,
    /// `n_networks × n_voxels`, ellipsoidal plateaus of height one.
    pub true_maps: Array2<f64>,
    /// One `nt × n_networks` matrix per subject, unit variance.
    pub true_timecourses: Vec<DataMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestNoise {
    pub noise_sigma: f64,
    /// Maximum per-voxel drift over the whole run.
    pub drift: f64,
}

impl Default for RestNoise {
    fn default() -> Self {
        RestNoise {
            noise_sigma: 0.2,
            drift: 2.0,
        }
    }
}

pub const MAX_NETWORKS: usize = 8;
const MAX_MAP_CORRELATION: f64 = 0.3;

pub fn make_rest(n_subjects: usize, nt: usize, shape: [usize; 3], n_networks: usize, seed: u64) -> Result<RestSet> {
    make_rest_with(n_subjects, nt, shape, n_networks, seed, RestNoise::default())
}

pub fn make_rest_with(
    n_subjects: usize,
    nt: usize,
    shape: [usize; 3],
    n_networks: usize,
    seed: u64,
    noise: RestNoise,
) -> Result<RestSet> {
    if n_networks == 0 || n_networks > MAX_NETWORKS {
        return Err(Error::BadComponentCount(format!(
            "{n_networks} networks, allowed 1..={MAX_NETWORKS}"
        )));
    }
    if n_subjects == 0 || nt < 2 {
        return Err(Error::BadParameter(format!("{n_subjects} subjects of {nt} frames")));
    }
    if shape.iter().any(|&s| s < 4) {
        return Err(Error::BadShape(format!("{shape:?} is below 4×4×4")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = BrainMask::full(shape, Affine4::diagonal([3.0, 3.0, 3.0]))?;
    let n_vox = mask.n_voxels();
    let mut maps: Vec<Array1<f64>> = Vec::with_capacity(n_networks);
    let mut attempts = 0;
    while maps.len() < n_networks {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::BadShape(format!("{shape:?} too small for {n_networks} separated networks")));
        }
        let center: [f64; 3] = std::array::from_fn(|a| rng.random_range(0.0..shape[a] as f64 - 1.0));
        let radii: [f64; 3] = std::array::from_fn(|a| rng.random_range(0.12..0.22) * shape[a] as f64 + 0.6);
        let map = Array1::from_iter(ellipsoid(shape, center, radii).into_iter().map(|b| b as u8 as f64));
        let count = map.sum();
        if count < 4.0 || count > 0.4 * n_vox as f64 {
            continue;
        }
        if maps
            .iter()
            .all(|m| crate::decomposition::correlation(m.view(), map.view()) <= MAX_MAP_CORRELATION)
        {
            maps.push(map);
        }
    }
    let views: Vec<_> = maps.iter().map(|m| m.view()).collect();
    let true_maps = ndarray::stack(ndarray::Axis(0), &views).expect("equal lengths");

    let innovation = (1.0 - REST_AR_COEF * REST_AR_COEF).sqrt();
    let mut subjects = Vec::with_capacity(n_subjects);
    let mut true_timecourses = Vec::with_capacity(n_subjects);
    for _ in 0..n_subjects {
        let mut tc = Array2::zeros((nt, n_networks));
        for k in 0..n_networks {
            let mut prev = normal(&mut rng);
            for t in 0..nt {
                tc[[t, k]] = prev;
                prev = REST_AR_COEF * prev + innovation * normal(&mut rng);
            }
        }
        let mut data = tc.dot(&true_maps);
        let slopes: Vec<f64> = (0..n_vox).map(|_| rng.random_range(-noise.drift..=noise.drift)).collect();
        let offsets: Vec<f64> = (0..n_vox).map(|_| rng.random_range(-1.0..1.0)).collect();
        let span = (nt - 1) as f64;
        for ((t, v), value) in data.indexed_iter_mut() {
            let drift = offsets[v] + slopes[v] * t as f64 / span;
            let eps = if noise.noise_sigma > 0.0 {
                noise.noise_sigma * normal(&mut rng)
            } else {
                0.0
            };
            *value += drift + eps;
        }
        subjects.push(data);
        true_timecourses.push(tc);
    }
    Ok(RestSet {
        subjects,
        mask,
        true_maps,
        true_timecourses,
    })
}
