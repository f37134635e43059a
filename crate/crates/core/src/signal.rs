//! Per-voxel time-series cleaning. Every function works column-wise on a
//! `time × voxels` matrix and preserves its shape.

use ndarray::{Array2, ArrayView2, Axis};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::volume::DataMatrix;

/// Switches for [`clean`]. Steps run in the order detrend → band-pass →
/// standardize.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfig {
    pub detrend: bool,
    pub standardize: bool,
    pub low_cut_hz: Option<f64>,
    pub high_cut_hz: Option<f64>,
    pub tr_seconds: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            detrend: false,
            standardize: false,
            low_cut_hz: None,
            high_cut_hz: None,
            tr_seconds: 1.0,
        }
    }
}

impl CleanConfig {
    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.tr_seconds
    }

    pub fn has_band(&self) -> bool {
        self.low_cut_hz.is_some() || self.high_cut_hz.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tr_seconds > 0.0 && self.tr_seconds.is_finite()) {
            return Err(Error::BadBand(format!("tr must be positive, got {}", self.tr_seconds)));
        }
        let nyq = self.nyquist_hz();
        if let Some(lo) = self.low_cut_hz {
            if !(lo >= 0.0 && lo < nyq) {
                return Err(Error::BadBand(format!("low cut {lo} Hz outside [0, {nyq})")));
            }
        }
        if let Some(hi) = self.high_cut_hz {
            if !(hi > 0.0 && hi < nyq) {
                return Err(Error::BadBand(format!("high cut {hi} Hz outside (0, {nyq})")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.low_cut_hz, self.high_cut_hz) {
            if lo >= hi {
                return Err(Error::BadBand(format!("low cut {lo} >= high cut {hi}")));
            }
        }
        Ok(())
    }
}

/// Removes the least-squares line `a·t + b` (t = 0..n-1) from every column.
pub fn detrend(x: ArrayView2<'_, f64>) -> Result<DataMatrix> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewTimepoints(n));
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let t_centered: Vec<f64> = (0..n).map(|t| t as f64 - t_mean).collect();
    let s_tt: f64 = t_centered.iter().map(|t| t * t).sum();
    let mut out = x.to_owned();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n as f64;
        let slope = col.iter().zip(&t_centered).map(|(v, t)| (v - mean) * t).sum::<f64>() / s_tt;
        for (v, t) in col.iter_mut().zip(&t_centered) {
            *v -= mean + slope * t;
        }
    }
    Ok(out)
}

/// Zero mean, unit population variance per column. Columns whose spread is
/// negligible relative to their magnitude become all zeros.
pub fn standardize(x: ArrayView2<'_, f64>) -> DataMatrix {
    let n = x.nrows() as f64;
    let mut out = x.to_owned();
    for mut col in out.axis_iter_mut(Axis(1)) {
        if col.is_empty() {
            continue;
        }
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sd <= 1e-12 * scale || sd == 0.0 {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| (v - mean) / sd);
        }
    }
    out
}

/// Frequency (Hz) of FFT bin `k` for a length-`n` transform.
fn bin_frequency(k: usize, n: usize, tr: f64) -> f64 {
    let k = k.min(n - k);
    k as f64 / (n as f64 * tr)
}

/// Ideal band-pass: per column, zero every FFT bin whose frequency lies
/// below `low_cut_hz` or above `high_cut_hz` (the DC bin goes whenever the
/// low cut is positive) and transform back. No padding; bin `k` is
/// `k / (n·tr)` Hz.
pub fn bandpass(x: ArrayView2<'_, f64>, cfg: &CleanConfig) -> Result<DataMatrix> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Ok(x.to_owned());
    }
    let keep: Vec<bool> = (0..n)
        .map(|k| {
            let f = bin_frequency(k, n, cfg.tr_seconds);
            let above = match cfg.low_cut_hz {
                Some(lo) if lo > 0.0 => k != 0 && f >= lo,
                _ => true,
            };
            let below = cfg.high_cut_hz.is_none_or(|hi| f <= hi);
            above && below
        })
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut out = Array2::zeros(x.raw_dim());
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (src, mut dst) in x.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
        for (b, &v) in buf.iter_mut().zip(src.iter()) {
            *b = Complex::new(v, 0.0);
        }
        fwd.process(&mut buf);
        for (b, &k) in buf.iter_mut().zip(&keep) {
            if !k {
                *b = Complex::new(0.0, 0.0);
            }
        }
        inv.process(&mut buf);
        for (d, b) in dst.iter_mut().zip(&buf) {
            *d = b.re / n as f64;
        }
    }
    Ok(out)
}

/// Runs the enabled steps in the order detrend → band-pass → standardize.
pub fn clean(x: ArrayView2<'_, f64>, cfg: &CleanConfig) -> Result<DataMatrix> {
    cfg.validate()?;
    let mut out = x.to_owned();
    if cfg.detrend {
        out = detrend(out.view())?;
    }
    if cfg.has_band() {
        out = bandpass(out.view(), cfg)?;
    }
    if cfg.standardize {
        out = standardize(out.view());
    }
    Ok(out)
}
