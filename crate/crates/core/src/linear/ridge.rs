//! Multi-target ridge regression, `min ‖Y − XW − b‖² + α‖W‖²` per target.

use ndarray::{Array2, ArrayView2};

use super::{center_columns, Convergence, LinearModel, ModelKind};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, symmetric_eigen};

const RANK_TOLERANCE: f64 = 1e-10;

/// `y` is `n_samples × n_targets`. Uses the `d × d` normal equations, or the
/// `n × n` kernel form when features outnumber samples and `α > 0`.
pub fn fit_ridge(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, alpha: f64) -> Result<LinearModel> {
    if x.nrows() != y.nrows() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            got: y.nrows(),
        });
    }
    if x.nrows() == 0 || x.ncols() == 0 || y.ncols() == 0 {
        return Err(Error::BadShape(format!("empty problem {:?} -> {:?}", x.dim(), y.dim())));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::BadParameter(format!("alpha must be non-negative, got {alpha}")));
    }
    let (n, d) = x.dim();
    let (x_mean, xc) = center_columns(x);
    let (y_mean, yc) = center_columns(y);

    let w: Array2<f64> = if d > n && alpha > 0.0 {
        let mut k = xc.dot(&xc.t());
        k.diag_mut().mapv_inplace(|v| v + alpha);
        let dual = cholesky_solve(k.view(), yc.view())?;
        xc.t().dot(&dual)
    } else {
        let mut g = xc.t().dot(&xc);
        if alpha == 0.0 {
            let (values, _) = symmetric_eigen(g.view());
            let top = values[0].max(f64::MIN_POSITIVE);
            if values[values.len() - 1] <= RANK_TOLERANCE * top {
                return Err(Error::SingularSystem(
                    "alpha = 0 with a rank-deficient design".into(),
                ));
            }
        }
        g.diag_mut().mapv_inplace(|v| v + alpha);
        cholesky_solve(g.view(), xc.t().dot(&yc).view())?
    };
    let coef = w.t().to_owned();
    let intercept = &y_mean - &coef.dot(&x_mean);
    let resid = &yc - &xc.dot(&w);
    let objective = resid.iter().map(|v| v * v).sum::<f64>() + alpha * w.iter().map(|v| v * v).sum::<f64>();
    Ok(LinearModel {
        coef,
        intercept,
        kind: ModelKind::Ridge,
        reg: alpha,
        classes: None,
        convergence: Convergence::exact(objective),
    })
}
