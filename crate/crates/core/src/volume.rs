//! Volumes, masks and the affine that ties voxel indices to millimeters.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Dense `samples × features` matrix, the input of every estimator.
pub type DataMatrix = Array2<f64>;

/// Tolerance used when comparing affines coming from different files.
pub const AFFINE_TOLERANCE: f64 = 1e-6;

/// Row-major 4×4 voxel-to-world transform. The last row is always `0 0 0 1`
/// and the linear block is invertible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine4 {
    m: [[f64; 4]; 4],
}

impl Affine4 {
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        if m[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::SingularAffine(format!(
                "last row must be (0,0,0,1), got {:?}",
                m[3]
            )));
        }
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::SingularAffine("non-finite entry".into()));
        }
        let a = Affine4 { m };
        let det = a.det3();
        if det.abs() <= 1e-12 {
            return Err(Error::SingularAffine(format!("|det| = {det:e}")));
        }
        Ok(a)
    }

    pub fn identity() -> Self {
        Self::diagonal([1.0, 1.0, 1.0])
    }

    /// Scaling affine with zero origin. Panics on a zero pitch.
    pub fn diagonal(pitch: [f64; 3]) -> Self {
        Self::diagonal_with_origin(pitch, [0.0; 3])
    }

    pub fn diagonal_with_origin(pitch: [f64; 3], origin: [f64; 3]) -> Self {
        Affine4::new([
            [pitch[0], 0.0, 0.0, origin[0]],
            [0.0, pitch[1], 0.0, origin[1]],
            [0.0, 0.0, pitch[2], origin[2]],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .expect("diagonal affine with non-zero pitch")
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    fn det3(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Maps fractional voxel indices to world millimeters.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
        }
        out
    }

    /// Applies only the linear 3×3 block (index offsets → world offsets).
    pub fn apply_linear(&self, d: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = m[r][0] * d[0] + m[r][1] * d[1] + m[r][2] * d[2];
        }
        out
    }

    pub fn inverse(&self) -> Affine4 {
        let m = &self.m;
        let det = self.det3();
        let mut inv = [[0.0; 4]; 4];
        // adjugate of the 3×3 block
        inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
        inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
        inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
        inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
        inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
        inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
        inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
        inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
        inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
        for r in 0..3 {
            inv[r][3] = -(inv[r][0] * m[0][3] + inv[r][1] * m[1][3] + inv[r][2] * m[2][3]);
        }
        inv[3] = [0.0, 0.0, 0.0, 1.0];
        Affine4 { m: inv }
    }

    /// `self · other`
    pub fn compose(&self, other: &Affine4) -> Affine4 {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.m[r][k] * other.m[k][c]).sum();
            }
        }
        out[3] = [0.0, 0.0, 0.0, 1.0];
        Affine4 { m: out }
    }

    pub fn max_abs_diff(&self, other: &Affine4) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Affine4, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Length of one index step along each axis, in millimeters.
    pub fn voxel_pitch(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|r| self.m[r][c] * self.m[r][c]).sum::<f64>().sqrt();
        }
        out
    }
}

impl Default for Affine4 {
    fn default() -> Self {
        Self::identity()
    }
}

/// Storage type of a volume on disk. In memory values are always `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl ElementKind {
    pub fn from_nifti_code(code: i16) -> Option<Self> {
        match code {
            2 => Some(Self::U8),
            4 => Some(Self::I16),
            8 => Some(Self::I32),
            16 => Some(Self::F32),
            64 => Some(Self::F64),
            _ => None,
        }
    }

    pub fn nifti_code(self) -> i16 {
        match self {
            Self::U8 => 2,
            Self::I16 => 4,
            Self::I32 => 8,
            Self::F32 => 16,
            Self::F64 => 64,
        }
    }

    pub fn byte_size(self) -> usize {
        match self {
            Self::U8 => 1,
            Self::I16 => 2,
            Self::I32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

/// Flat index of `(x, y, z)` in x-fastest order.
#[inline]
pub fn linear_index(shape: [usize; 3], x: usize, y: usize, z: usize) -> usize {
    x + shape[0] * (y + shape[1] * z)
}

/// Inverse of [`linear_index`].
#[inline]
pub fn grid_coords(shape: [usize; 3], idx: usize) -> [usize; 3] {
    let x = idx % shape[0];
    let y = (idx / shape[0]) % shape[1];
    let z = idx / (shape[0] * shape[1]);
    [x, y, z]
}

/// A 3D grid with a time (or trial) axis. Data is stored x-fastest, then y,
/// z and finally t, like a NIfTI payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume4D {
    shape: [usize; 4],
    data: Vec<f64>,
    affine: Affine4,
    element_kind: ElementKind,
}

impl Volume4D {
    pub fn new(shape: [usize; 4], data: Vec<f64>, affine: Affine4) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::BadShape(format!("zero extent in {shape:?}")));
        }
        let expected = shape.iter().product::<usize>();
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData(format!("voxel value at flat index {i}")));
        }
        Ok(Volume4D {
            shape,
            data,
            affine,
            element_kind: ElementKind::F64,
        })
    }

    pub fn zeros(shape: [usize; 4], affine: Affine4) -> Result<Self> {
        Self::new(shape, vec![0.0; shape.iter().product()], affine)
    }

    pub fn from_fn(
        shape: [usize; 4],
        affine: Affine4,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.iter().product());
        for t in 0..shape[3] {
            for z in 0..shape[2] {
                for y in 0..shape[1] {
                    for x in 0..shape[0] {
                        data.push(f(x, y, z, t));
                    }
                }
            }
        }
        Self::new(shape, data, affine)
    }

    pub(crate) fn with_element_kind(mut self, kind: ElementKind) -> Self {
        self.element_kind = kind;
        self
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn spatial_shape(&self) -> [usize; 3] {
        [self.shape[0], self.shape[1], self.shape[2]]
    }

    pub fn n_voxels(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn n_frames(&self) -> usize {
        self.shape[3]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn affine(&self) -> &Affine4 {
        &self.affine
    }

    pub fn element_kind(&self) -> ElementKind {
        self.element_kind
    }

    /// One 3D frame as a flat x-fastest slice.
    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.n_voxels();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, z: usize, t: usize) -> f64 {
        let s = self.spatial_shape();
        self.data[linear_index(s, x, y, z) + t * self.n_voxels()]
    }

    /// Voxel-wise mean over the time axis, as a single-frame volume.
    pub fn mean_frame(&self) -> Volume4D {
        let n = self.n_voxels();
        let nt = self.n_frames() as f64;
        let mut acc = vec![0.0; n];
        for t in 0..self.n_frames() {
            for (a, v) in acc.iter_mut().zip(self.frame(t)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= nt);
        Volume4D {
            shape: [self.shape[0], self.shape[1], self.shape[2], 1],
            data: acc,
            affine: self.affine,
            element_kind: ElementKind::F64,
        }
    }
}

/// Boolean 3D grid selecting the voxels that become features.
#[derive(Debug, Clone, PartialEq)]
pub struct BrainMask {
    shape: [usize; 3],
    flags: Vec<bool>,
    affine: Affine4,
    n_voxels: usize,
}

impl BrainMask {
    pub fn new(shape: [usize; 3], flags: Vec<bool>, affine: Affine4) -> Result<Self> {
        let expected = shape.iter().product::<usize>();
        if flags.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: flags.len(),
            });
        }
        let n_voxels = flags.iter().filter(|&&f| f).count();
        if n_voxels == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(BrainMask {
            shape,
            flags,
            affine,
            n_voxels,
        })
    }

    pub fn full(shape: [usize; 3], affine: Affine4) -> Result<Self> {
        Self::new(shape, vec![true; shape.iter().product()], affine)
    }

    pub fn from_fn(
        shape: [usize; 3],
        affine: Affine4,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut flags = Vec::with_capacity(shape.iter().product());
        for z in 0..shape[2] {
            for y in 0..shape[1] {
                for x in 0..shape[0] {
                    flags.push(f(x, y, z));
                }
            }
        }
        Self::new(shape, flags, affine)
    }

    /// Any nonzero voxel of the first frame is in the mask.
    pub fn from_volume(vol: &Volume4D) -> Result<Self> {
        let flags = vol.frame(0).iter().map(|&v| v != 0.0).collect();
        Self::new(vol.spatial_shape(), flags, *vol.affine())
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn affine(&self) -> &Affine4 {
        &self.affine
    }

    pub fn n_voxels(&self) -> usize {
        self.n_voxels
    }

    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        self.flags[linear_index(self.shape, x, y, z)]
    }

    /// Flat grid indices of the masked voxels, in feature order.
    pub fn voxel_indices(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }

    /// Grid index → feature index (`None` off-mask).
    pub fn feature_lookup(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.flags
            .iter()
            .map(|&f| {
                f.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    /// Single-frame 0/1 volume.
    pub fn to_volume(&self) -> Volume4D {
        let data = self.flags.iter().map(|&f| f64::from(u8::from(f))).collect();
        Volume4D::new(
            [self.shape[0], self.shape[1], self.shape[2], 1],
            data,
            self.affine,
        )
        .expect("mask volume")
        .with_element_kind(ElementKind::U8)
    }
}
