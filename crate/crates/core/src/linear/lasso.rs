//! Lasso by cyclic coordinate descent on centered data.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};

use super::{center_columns, check_xy, mean_of, soft_threshold, Convergence, LinearModel, ModelKind, SolverOptions};
use crate::error::{Error, Result};

/// KKT tolerance and epoch budget used by [`fit_lasso_cd`].
pub const LASSO_DEFAULTS: SolverOptions = SolverOptions {
    tol: 1e-8,
    max_iter: 10_000,
};

/// `(1/2n)‖y − Xw − b‖² + α‖w‖₁`.
pub fn lasso_objective(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, w: ArrayView1<'_, f64>, b: f64, alpha: f64) -> f64 {
    let r = &y - &(x.dot(&w) + b);
    r.dot(&r) / (2.0 * y.len() as f64) + alpha * w.iter().map(|v| v.abs()).sum::<f64>()
}

pub fn fit_lasso_cd(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, alpha: f64) -> Result<LinearModel> {
    fit_lasso_cd_with(x, y, alpha, &LASSO_DEFAULTS, None)
}

/// `warm_start` seeds the coefficients (e.g. from a neighboring `α`).
pub fn fit_lasso_cd_with(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    alpha: f64,
    opts: &SolverOptions,
    warm_start: Option<ArrayView1<'_, f64>>,
) -> Result<LinearModel> {
    check_xy(&x, y.len())?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::BadParameter(format!("alpha must be positive, got {alpha}")));
    }
    let (n, d) = x.dim();
    let nf = n as f64;
    let (x_mean, xc) = center_columns(x);
    let y_mean = mean_of(y);
    let xt = xc.t().as_standard_layout().into_owned();
    let col_sq: Vec<f64> = xt.outer_iter().map(|c| c.dot(&c) / nf).collect();

    let mut w = match warm_start {
        Some(w0) if w0.len() == d => w0.to_owned(),
        Some(w0) => {
            return Err(Error::LengthMismatch {
                expected: d,
                got: w0.len(),
            })
        }
        None => Array1::zeros(d),
    };
    let mut r = y.mapv(|v| v - y_mean) - xc.dot(&w);

    let mut converged = false;
    let mut epochs = 0;
    while epochs < opts.max_iter {
        epochs += 1;
        for j in 0..d {
            if col_sq[j] == 0.0 {
                w[j] = 0.0;
                continue;
            }
            let col = xt.row(j);
            let old = w[j];
            let rho = col.dot(&r) / nf + col_sq[j] * old;
            let new = soft_threshold(rho, alpha) / col_sq[j];
            if new != old {
                r.scaled_add(old - new, &col);
                w[j] = new;
            }
        }
        if kkt_violation(&xt, &r, &w, alpha) <= opts.tol {
            converged = true;
            break;
        }
    }
    let b = y_mean - x_mean.dot(&w);
    let convergence = Convergence {
        converged,
        iterations: epochs,
        objective: r.dot(&r) / (2.0 * nf) + alpha * w.iter().map(|v| v.abs()).sum::<f64>(),
    };
    convergence.warn_if_needed("lasso");
    Ok(LinearModel {
        coef: w.insert_axis(Axis(0)),
        intercept: Array1::from_elem(1, b),
        kind: ModelKind::Lasso,
        reg: alpha,
        classes: None,
        convergence,
    })
}

fn kkt_violation(xt: &ndarray::Array2<f64>, r: &Array1<f64>, w: &Array1<f64>, alpha: f64) -> f64 {
    let nf = r.len() as f64;
    xt.outer_iter()
        .zip(w)
        .map(|(col, &wj)| {
            let g = col.dot(r) / nf;
            if wj == 0.0 {
                (g.abs() - alpha).max(0.0)
            } else {
                (g - alpha * wj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}
