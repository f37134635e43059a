//! PCA, FastICA and multi-subject concatenation ICA.
//!
//! Component order and sign are not identifiable for ICA; compare
//! decompositions through [`greedy_match`].

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_symmetric, thin_svd};
use crate::linear::Convergence;
use crate::signal::detrend;
use crate::volume::DataMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// `n_components × n_features`, orthonormal rows.
    pub components: Array2<f64>,
    pub singular_values: Array1<f64>,
    pub mean: Array1<f64>,
    /// Per-component variance (`s² / (n − 1)`).
    pub explained_variance: Array1<f64>,
    pub explained_variance_ratio: Array1<f64>,
}

/// Flips each row so its largest-magnitude entry is positive (first such
/// entry on ties). Returns the applied signs.
fn canonical_signs(rows: &mut Array2<f64>) -> Vec<f64> {
    rows.outer_iter_mut()
        .map(|mut row| {
            let mut pick = 0;
            for (j, v) in row.iter().enumerate() {
                if v.abs() > row[pick].abs() {
                    pick = j;
                }
            }
            let sign = if row[pick] < 0.0 { -1.0 } else { 1.0 };
            if sign < 0.0 {
                row.mapv_inplace(|v| -v);
            }
            sign
        })
        .collect()
}

pub fn pca_fit(x: ArrayView2<'_, f64>, n_components: usize) -> Result<PcaModel> {
    let (n, d) = x.dim();
    if n_components == 0 || n_components > n.min(d) {
        return Err(Error::BadComponentCount(format!(
            "{n_components} components for a {n}×{d} matrix"
        )));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &mean.view().insert_axis(Axis(0));
    let svd = thin_svd(centered.view());
    let mut components = svd.vt.slice(s![..n_components, ..]).to_owned();
    canonical_signs(&mut components);
    let denom = (n.max(2) - 1) as f64;
    let all_var = svd.s.mapv(|v| v * v / denom);
    let total: f64 = all_var.sum();
    let explained_variance = all_var.slice(s![..n_components]).to_owned();
    let explained_variance_ratio = if total > 0.0 {
        &explained_variance / total
    } else {
        Array1::zeros(n_components)
    };
    Ok(PcaModel {
        components,
        singular_values: svd.s.slice(s![..n_components]).to_owned(),
        mean,
        explained_variance,
        explained_variance_ratio,
    })
}

impl PcaModel {
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean.view().insert_axis(Axis(0))).dot(&self.components.t())
    }

    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        z.dot(&self.components) + &self.mean.view().insert_axis(Axis(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    LogCosh,
    Cube,
}

impl Nonlinearity {
    /// `g(u)` and `g'(u)`.
    fn eval(self, u: f64) -> (f64, f64) {
        match self {
            Nonlinearity::LogCosh => {
                let t = u.tanh();
                (t, 1.0 - t * t)
            }
            Nonlinearity::Cube => (u * u * u, 3.0 * u * u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcaOptions {
    pub nonlinearity: Nonlinearity,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IcaOptions {
    fn default() -> Self {
        IcaOptions {
            nonlinearity: Nonlinearity::LogCosh,
            seed: 0,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// Fitted FastICA: `sources = unmixing · whiteningᵀ · (x − mean)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcaModel {
    /// `k × k`, orthogonal, acting on whitened data.
    pub unmixing: Array2<f64>,
    /// `n_channels × k`
    pub whitening: Array2<f64>,
    pub mean: Array1<f64>,
    /// `k × n_observations`, zero mean and unit variance per row.
    pub sources: Array2<f64>,
    pub options: IcaOptions,
    pub convergence: Convergence,
}

impl IcaModel {
    /// `k × n_channels` unmixing in the original channel space.
    pub fn full_unmixing(&self) -> Array2<f64> {
        self.unmixing.dot(&self.whitening.t())
    }
}

fn symmetric_decorrelation(w: &Array2<f64>) -> Result<Array2<f64>> {
    let r = inv_sqrt_symmetric(w.dot(&w.t()).view())?;
    Ok(r.dot(w))
}

/// Symmetric FastICA on `x_obs` (`n_observations × n_channels`).
///
/// Whitened signals have unit variance with the sign of each whitened signal
/// fixed by its largest-magnitude observation, so the result depends on the
/// channel space only through its span.
pub fn fastica(x_obs: ArrayView2<'_, f64>, n_components: usize, opts: &IcaOptions) -> Result<IcaModel> {
    let (n, c) = x_obs.dim();
    if n_components == 0 || n_components > c || n_components > n {
        return Err(Error::BadComponentCount(format!(
            "{n_components} components for {c} channels and {n} observations"
        )));
    }
    let mean = x_obs.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x_obs - &mean.view().insert_axis(Axis(0));
    let svd = thin_svd(centered.view());
    if svd.s[n_components - 1] <= 1e-12 * svd.s[0].max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateCorrelation(format!(
            "rank below {n_components} components"
        )));
    }
    let nf = n as f64;
    let mut whitening = Array2::zeros((c, n_components));
    for k in 0..n_components {
        let scale = nf.sqrt() / svd.s[k];
        whitening.column_mut(k).assign(&svd.vt.row(k).mapv(|v| v * scale));
    }
    let mut z_t = whitening.t().dot(&centered.t());
    let signs = canonical_signs(&mut z_t);
    for (k, s) in signs.iter().enumerate() {
        if *s < 0.0 {
            whitening.column_mut(k).mapv_inplace(|v| -v);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let init = Array2::from_shape_fn((n_components, n_components), |_| StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&init)?;
    let mut converged = false;
    let mut iterations = 0;
    let mut lim = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let wz = w.dot(&z_t);
        let mut g = Array2::zeros(wz.raw_dim());
        let mut g_prime_mean = Array1::zeros(n_components);
        for (k, row) in wz.outer_iter().enumerate() {
            let mut acc = 0.0;
            for (o, &u) in row.iter().enumerate() {
                let (gu, gpu) = opts.nonlinearity.eval(u);
                g[[k, o]] = gu;
                acc += gpu;
            }
            g_prime_mean[k] = acc / nf;
        }
        let update = g.dot(&z_t.t()) / nf - &(&w * &g_prime_mean.view().insert_axis(Axis(1)));
        let w_new = symmetric_decorrelation(&update)?;
        lim = w_new
            .outer_iter()
            .zip(w.outer_iter())
            .map(|(a, b)| (a.dot(&b).abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < opts.tol {
            converged = true;
            break;
        }
    }
    let convergence = Convergence {
        converged,
        iterations,
        objective: lim,
    };
    convergence.warn_if_needed("fastica");
    let mut sources = w.dot(&z_t);
    for mut row in sources.outer_iter_mut() {
        let m = row.sum() / nf;
        let sd = (row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / nf).sqrt();
        row.mapv_inplace(|v| (v - m) / sd);
    }
    Ok(IcaModel {
        unmixing: w,
        whitening,
        mean,
        sources,
        options: *opts,
        convergence,
    })
}

/// Normalized Amari index of a square matrix `p` (estimated unmixing times
/// true mixing): 0 for a scaled permutation, at most 1.
pub fn amari_index(p: ArrayView2<'_, f64>) -> f64 {
    let k = p.nrows();
    if k < 2 {
        return 0.0;
    }
    let a = p.mapv(f64::abs);
    let rows: f64 = a
        .outer_iter()
        .map(|r| r.sum() / r.fold(0.0f64, |m, &v| m.max(v)) - 1.0)
        .sum();
    let cols: f64 = a
        .columns()
        .into_iter()
        .map(|c| c.sum() / c.fold(0.0f64, |m, &v| m.max(v)) - 1.0)
        .sum();
    (rows + cols) / (2.0 * k as f64 * (k as f64 - 1.0))
}

/// Pearson correlation of two equally long rows.
pub fn correlation(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Greedy one-to-one matching of the rows of `reference` to rows of
/// `estimate` by decreasing |correlation|. Returns, for each reference row,
/// the matched estimate row and the signed correlation.
pub fn greedy_match(reference: ArrayView2<'_, f64>, estimate: ArrayView2<'_, f64>) -> Vec<(usize, f64)> {
    let (r, e) = (reference.nrows(), estimate.nrows());
    let corr = Array2::from_shape_fn((r, e), |(i, j)| correlation(reference.row(i), estimate.row(j)));
    let mut pairs: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..e).map(move |j| (i, j))).collect();
    pairs.sort_by(|&(a, b), &(c, d)| corr[[c, d]].abs().total_cmp(&corr[[a, b]].abs()).then((a, b).cmp(&(c, d))));
    let mut out = vec![(usize::MAX, 0.0); r];
    let mut used = vec![false; e];
    for (i, j) in pairs {
        if out[i].0 == usize::MAX && !used[j] {
            out[i] = (j, corr[[i, j]]);
            used[j] = true;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ConcatIca {
    /// `n_components × n_voxels`, zero mean and unit variance per map.
    pub maps: Array2<f64>,
    pub ica: IcaModel,
}

/// Group spatial ICA: each subject's `time × voxel` matrix is detrended and
/// reduced to its `per_subject_dim` leading temporal components, the reduced
/// series are stacked, and FastICA treats voxels as observations.
pub fn concat_ica(
    subjects: &[DataMatrix],
    n_components: usize,
    per_subject_dim: usize,
    opts: &IcaOptions,
) -> Result<ConcatIca> {
    let first = subjects
        .first()
        .ok_or_else(|| Error::BadParameter("no subjects".into()))?;
    let n_voxels = first.ncols();
    if let Some(bad) = subjects.iter().find(|s| s.ncols() != n_voxels) {
        return Err(Error::VoxelCountMismatch(format!("{} vs {n_voxels}", bad.ncols())));
    }
    if per_subject_dim < n_components || n_components == 0 {
        return Err(Error::BadComponentCount(format!(
            "per-subject dimension {per_subject_dim} below {n_components} components"
        )));
    }
    let mut reduced = Vec::with_capacity(subjects.len());
    for s in subjects {
        if per_subject_dim > s.nrows().min(n_voxels) {
            return Err(Error::BadComponentCount(format!(
                "per-subject dimension {per_subject_dim} exceeds {}×{n_voxels}",
                s.nrows()
            )));
        }
        let clean = detrend(s.view())?;
        let svd = thin_svd(clean.view());
        let mut r = svd.vt.slice(s![..per_subject_dim, ..]).to_owned();
        for (mut row, sv) in r.outer_iter_mut().zip(svd.s.iter()) {
            row *= *sv;
        }
        reduced.push(r);
    }
    let views: Vec<ArrayView2<'_, f64>> = reduced.iter().map(|r| r.view()).collect();
    let stacked = ndarray::concatenate(Axis(0), &views).expect("equal widths");
    let ica = fastica(stacked.t(), n_components, opts)?;
    let maps = ica.sources.clone();
    Ok(ConcatIca { maps, ica })
}
