//! Cyclic coordinate descent for `‖w‖₁ + C·Σ loss(mᵢ)`, `mᵢ = yᵢ(w·xᵢ + b)`.
//! One Newton step per coordinate with a backtracking line search; the
//! intercept is the last coordinate and carries no penalty.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::{l1_newton_direction, log1p_exp_neg, sigmoid, Convergence, SolverOptions};

const ARMIJO_SIGMA: f64 = 0.01;
const MAX_HALVINGS: usize = 30;
const CURVATURE_FLOOR: f64 = 1e-12;

pub(crate) trait MarginLoss {
    fn value(&self, m: f64) -> f64;
    /// First derivative in `m`.
    fn slope(&self, m: f64) -> f64;
    /// Second (generalized) derivative in `m`.
    fn curvature(&self, m: f64) -> f64;
    /// Value, slope and curvature together.
    fn eval(&self, m: f64) -> (f64, f64, f64) {
        (self.value(m), self.slope(m), self.curvature(m))
    }
}

pub(crate) struct SquaredHinge;

impl MarginLoss for SquaredHinge {
    fn value(&self, m: f64) -> f64 {
        let s = (1.0 - m).max(0.0);
        s * s
    }
    fn slope(&self, m: f64) -> f64 {
        -2.0 * (1.0 - m).max(0.0)
    }
    fn curvature(&self, m: f64) -> f64 {
        if m < 1.0 {
            2.0
        } else {
            0.0
        }
    }
}

pub(crate) struct Logistic;

impl MarginLoss for Logistic {
    fn value(&self, m: f64) -> f64 {
        log1p_exp_neg(m)
    }
    fn slope(&self, m: f64) -> f64 {
        -sigmoid(-m)
    }
    fn curvature(&self, m: f64) -> f64 {
        sigmoid(m) * sigmoid(-m)
    }
    fn eval(&self, m: f64) -> (f64, f64, f64) {
        let e = (-m.abs()).exp();
        let value = if m > 0.0 { e.ln_1p() } else { e.ln_1p() - m };
        let p_wrong = if m >= 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + e) };
        (value, -p_wrong, e / ((1.0 + e) * (1.0 + e)))
    }
}

pub(crate) struct CdFit {
    pub w: Array1<f64>,
    pub b: f64,
    pub convergence: Convergence,
}

/// `signs` holds ±1 labels. Stops when the KKT violation drops to
/// `opts.tol` or an epoch lowers the objective by at most
/// `stall · max(1, |F|)`.
pub(crate) fn l1_margin_cd<L: MarginLoss>(
    loss: &L,
    x: ArrayView2<'_, f64>,
    signs: ArrayView1<'_, f64>,
    c: f64,
    opts: &SolverOptions,
    stall: f64,
) -> CdFit {
    let (n, d) = x.dim();
    let xt = x.t().as_standard_layout().into_owned();
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut margin = Array1::<f64>::zeros(n);
    let mut loss_sum: f64 = margin.iter().map(|&m| loss.value(m)).sum();
    let mut trial = vec![0.0; n];
    let mut trial_slope = vec![0.0; n];
    let mut trial_curv = vec![0.0; n];
    let mut slope: Vec<f64> = margin.iter().map(|&m| loss.slope(m)).collect();
    let mut curv: Vec<f64> = margin.iter().map(|&m| loss.curvature(m)).collect();
    let objective = |w: &Array1<f64>, loss_sum: f64| w.iter().map(|v| v.abs()).sum::<f64>() + c * loss_sum;
    let mut f_prev = objective(&w, loss_sum);

    for epoch in 1..=opts.max_iter {
        let mut violation = 0.0f64;
        for j in 0..=d {
            let col = (j < d).then(|| xt.row(j));
            let feature = |i: usize| col.map_or(1.0, |c| c[i]);
            let (mut g, mut h) = (0.0, 0.0);
            for i in 0..n {
                let xi = feature(i);
                g += slope[i] * signs[i] * xi;
                h += curv[i] * xi * xi;
            }
            g *= c;
            h = c * h + CURVATURE_FLOOR;

            let current = if j < d { w[j] } else { b };
            let penalized = j < d;
            let pen = |v: f64| if penalized { v.abs() } else { 0.0 };
            let (step_dir, viol) = if penalized {
                let viol = if current > 0.0 {
                    (g + 1.0).abs()
                } else if current < 0.0 {
                    (g - 1.0).abs()
                } else {
                    (g.abs() - 1.0).max(0.0)
                };
                (l1_newton_direction(current, g, h), viol)
            } else {
                (-g / h, g.abs())
            };
            violation = violation.max(viol);
            if step_dir.abs() <= 1e-15 * (1.0 + current.abs()) {
                continue;
            }

            let predicted = g * step_dir + pen(current + step_dir) - pen(current);
            let mut step = 1.0;
            for _ in 0..MAX_HALVINGS {
                let delta = step * step_dir;
                let mut new_sum = 0.0;
                for i in 0..n {
                    trial[i] = margin[i] + delta * signs[i] * feature(i);
                    let (v, sl, cu) = loss.eval(trial[i]);
                    new_sum += v;
                    trial_slope[i] = sl;
                    trial_curv[i] = cu;
                }
                let change = c * (new_sum - loss_sum) + pen(current + delta) - pen(current);
                if change <= ARMIJO_SIGMA * step * predicted {
                    margin.as_slice_mut().expect("contiguous").copy_from_slice(&trial);
                    slope.copy_from_slice(&trial_slope);
                    curv.copy_from_slice(&trial_curv);
                    loss_sum = new_sum;
                    if penalized {
                        w[j] = current + delta;
                    } else {
                        b = current + delta;
                    }
                    break;
                }
                step *= 0.5;
            }
        }
        let f = objective(&w, loss_sum);
        let stalled = f_prev - f <= stall * f.abs().max(1.0);
        if violation <= opts.tol || stalled {
            return CdFit {
                w,
                b,
                convergence: Convergence {
                    converged: true,
                    iterations: epoch,
                    objective: f,
                },
            };
        }
        f_prev = f;
    }
    let f = objective(&w, loss_sum);
    CdFit {
        w,
        b,
        convergence: Convergence {
            converged: false,
            iterations: opts.max_iter,
            objective: f,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_derivatives_match_finite_differences() {
        let h = 1e-6;
        for &m in &[-2.0, 0.3, 0.99, 1.5, 4.0] {
            for loss in [&SquaredHinge as &dyn MarginLoss, &Logistic] {
                let fd = (loss.value(m + h) - loss.value(m - h)) / (2.0 * h);
                assert!((fd - loss.slope(m)).abs() < 1e-6);
                let fd2 = (loss.slope(m + h) - loss.slope(m - h)) / (2.0 * h);
                assert!((fd2 - loss.curvature(m)).abs() < 1e-5);
                let (v, sl, cu) = loss.eval(m);
                assert!((v - loss.value(m)).abs() < 1e-14);
                assert!((sl - loss.slope(m)).abs() < 1e-14);
                assert!((cu - loss.curvature(m)).abs() < 1e-14);
            }
        }
    }
}
