//! Least-angle regression with the lasso modification, and the
//! cross-validated choice of `α` along its path.
//!
//! Columns are centered but not rescaled, so the path is exactly the lasso
//! solution path of `(1/2n)‖y − Xw − b‖² + α‖w‖₁` and agrees with
//! [`super::fit_lasso_cd`] at every `α`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{center_columns, check_xy, mean_of, Convergence, LinearModel, ModelKind};
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::model_selection::kfold;

const STEP_EPS: f64 = 1e-12;

/// Breakpoints in decreasing `α` with the coefficients at each; coefficients
/// are linear in `α` between breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct LarsPath {
    pub alphas: Vec<f64>,
    pub coefs: Vec<Array1<f64>>,
    pub x_mean: Array1<f64>,
    pub y_mean: f64,
}

impl LarsPath {
    pub fn n_steps(&self) -> usize {
        self.alphas.len() - 1
    }

    /// Coefficients at `alpha`: zero above the first breakpoint, frozen at
    /// the last one below the end of the path.
    pub fn coef_at(&self, alpha: f64) -> Array1<f64> {
        if alpha >= self.alphas[0] {
            return self.coefs[0].clone();
        }
        for k in 0..self.alphas.len() - 1 {
            let (hi, lo) = (self.alphas[k], self.alphas[k + 1]);
            if alpha >= lo {
                if hi - lo <= 0.0 {
                    return self.coefs[k + 1].clone();
                }
                let t = (hi - alpha) / (hi - lo);
                return &self.coefs[k] + &(t * (&self.coefs[k + 1] - &self.coefs[k]));
            }
        }
        self.coefs[self.coefs.len() - 1].clone()
    }

    pub fn intercept_for(&self, coef: &Array1<f64>) -> f64 {
        self.y_mean - self.x_mean.dot(coef)
    }

    pub fn model_at(&self, alpha: f64) -> LinearModel {
        let coef = self.coef_at(alpha);
        let b = self.intercept_for(&coef);
        LinearModel {
            coef: coef.insert_axis(Axis(0)),
            intercept: Array1::from_elem(1, b),
            kind: ModelKind::LassoLars,
            reg: alpha,
            classes: None,
            convergence: Convergence {
                converged: true,
                iterations: self.n_steps(),
                objective: f64::NAN,
            },
        }
    }
}

/// At most `max_iter` steps; each step adds the inactive feature with the
/// largest absolute residual correlation (lower index on ties) or drops an
/// active feature whose coefficient crosses zero. A singular active Gram
/// matrix ends the path early.
pub fn lars_path(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, max_iter: usize) -> Result<LarsPath> {
    check_xy(&x, y.len())?;
    if max_iter == 0 {
        return Err(Error::BadParameter("max_iter must be at least 1".into()));
    }
    let (n, d) = x.dim();
    let nf = n as f64;
    let (x_mean, xc) = center_columns(x);
    let y_mean = mean_of(y);
    let yc = y.mapv(|v| v - y_mean);
    let rank_limit = d.min(n.saturating_sub(1));

    let mut coef = Array1::<f64>::zeros(d);
    let corr0 = xc.t().dot(&yc);
    let mut level = corr0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let start = level;
    let mut alphas = vec![level / nf];
    let mut coefs = vec![coef.clone()];
    let mut active: Vec<usize> = Vec::new();
    let mut just_dropped = false;

    for _ in 0..max_iter {
        if level <= STEP_EPS * start || start == 0.0 {
            break;
        }
        let corr = xc.t().dot(&(&yc - &xc.dot(&coef)));
        if !just_dropped {
            if active.len() >= rank_limit {
                break;
            }
            let mut best: Option<usize> = None;
            for j in 0..d {
                if active.contains(&j) {
                    continue;
                }
                if best.is_none_or(|b| corr[j].abs() > corr[b].abs()) {
                    best = Some(j);
                }
            }
            match best {
                Some(j) => active.push(j),
                None => break,
            }
        }
        let signs = Array1::from_iter(active.iter().map(|&j| if corr[j] >= 0.0 { 1.0 } else { -1.0 }));
        let xa = xc.select(Axis(1), &active);
        let gram = xa.t().dot(&xa);
        let dir = match cholesky_solve(gram.view(), signs.view().insert_axis(Axis(1))) {
            Ok(sol) => sol.column(0).to_owned(),
            Err(_) => {
                log::warn!("lars: singular active set of size {}, truncating path", active.len());
                if !just_dropped {
                    active.pop();
                }
                break;
            }
        };
        let u = xa.dot(&dir);
        let a = xc.t().dot(&u);

        let mut gamma = level;
        if active.len() < rank_limit {
            for j in 0..d {
                if active.contains(&j) {
                    continue;
                }
                for cand in [(level - corr[j]) / (1.0 - a[j]), (level + corr[j]) / (1.0 + a[j])] {
                    if cand.is_finite() && cand > STEP_EPS * level && cand < gamma {
                        gamma = cand;
                    }
                }
            }
        }
        let mut drop = None;
        for (k, &j) in active.iter().enumerate() {
            if dir[k] != 0.0 {
                let cross = -coef[j] / dir[k];
                if cross > STEP_EPS * level && cross < gamma {
                    gamma = cross;
                    drop = Some(k);
                }
            }
        }
        for (k, &j) in active.iter().enumerate() {
            coef[j] += gamma * dir[k];
        }
        level -= gamma;
        just_dropped = false;
        if let Some(k) = drop {
            coef[active[k]] = 0.0;
            active.remove(k);
            just_dropped = true;
        }
        alphas.push(level.max(0.0) / nf);
        coefs.push(coef.clone());
    }
    Ok(LarsPath {
        alphas,
        coefs,
        x_mean,
        y_mean,
    })
}

/// Cross-validated LARS-lasso.
#[derive(Debug, Clone)]
pub struct LassoLarsCv {
    /// Refit on all samples at the selected `α`.
    pub model: LinearModel,
    pub alpha: f64,
    /// Union of every fold's breakpoints, decreasing.
    pub alphas: Vec<f64>,
    pub mean_mse: Vec<f64>,
    /// `n_folds × alphas.len()`
    pub fold_mse: Array2<f64>,
    pub path: LarsPath,
}

/// Contiguous (unshuffled) folds. The selected `α` minimizes the mean test
/// MSE over the breakpoint grid; ties keep the larger `α`.
pub fn fit_lasso_lars_cv(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    n_folds: usize,
    max_iter: usize,
) -> Result<LassoLarsCv> {
    check_xy(&x, y.len())?;
    let plan = kfold(x.nrows(), n_folds, false, 0)?;
    let mut paths = Vec::with_capacity(plan.folds.len());
    for fold in &plan.folds {
        let xt = x.select(Axis(0), &fold.train);
        let yt = y.select(Axis(0), &fold.train);
        paths.push(lars_path(xt.view(), yt.view(), max_iter)?);
    }
    let mut grid: Vec<f64> = paths.iter().flat_map(|p| p.alphas.iter().copied()).collect();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();

    let mut fold_mse = Array2::zeros((plan.folds.len(), grid.len()));
    for (f, (fold, path)) in plan.folds.iter().zip(&paths).enumerate() {
        let xs = x.select(Axis(0), &fold.test);
        let ys = y.select(Axis(0), &fold.test);
        for (g, &alpha) in grid.iter().enumerate() {
            let coef = path.coef_at(alpha);
            let b = path.intercept_for(&coef);
            let r = &ys - &(xs.dot(&coef) + b);
            fold_mse[[f, g]] = r.dot(&r) / ys.len() as f64;
        }
    }
    let mean_mse = fold_mse.mean_axis(Axis(0)).expect("at least one fold").to_vec();
    let mut best = 0;
    for (g, &m) in mean_mse.iter().enumerate() {
        if m < mean_mse[best] {
            best = g;
        }
    }
    let alpha = grid[best];
    let path = lars_path(x, y, max_iter)?;
    let model = path.model_at(alpha);
    Ok(LassoLarsCv {
        model,
        alpha,
        alphas: grid,
        mean_mse,
        fold_mse,
        path,
    })
}
