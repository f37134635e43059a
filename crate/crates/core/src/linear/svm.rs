//! Linear support vector classification.
//!
//! ℓ2 models are solved in the dual by sequential minimal optimization with
//! second-order working-set selection over a precomputed Gram matrix; the
//! equality constraint `Σ αᵢyᵢ = 0` keeps the intercept unpenalized. The
//! squared hinge adds `1/(2C)` to the Gram diagonal and lifts the upper bound.
//! ℓ1 models use primal coordinate descent on the squared hinge.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::cd::{l1_margin_cd, SquaredHinge};
use super::{check_xy, ClassLabels, Convergence, LinearModel, Loss, ModelKind, Penalty, SolverOptions};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;
/// Relative objective decrease per epoch that ends ℓ1 coordinate descent.
const L1_STALL: f64 = 1e-8;

/// KKT tolerance and epoch budget used by [`fit_linear_svc`].
pub const SVC_DEFAULTS: SolverOptions = SolverOptions {
    tol: 1e-8,
    max_iter: 2000,
};

pub fn fit_linear_svc(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    penalty: Penalty,
    loss: Loss,
    c: f64,
) -> Result<LinearModel> {
    fit_linear_svc_with(x, y, penalty, loss, c, &SVC_DEFAULTS)
}

pub fn fit_linear_svc_with(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    penalty: Penalty,
    loss: Loss,
    c: f64,
    opts: &SolverOptions,
) -> Result<LinearModel> {
    check_xy(&x, y.len())?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::BadParameter(format!("C must be positive, got {c}")));
    }
    let labels = ClassLabels::new(y)?;
    let (w, b, convergence, kind) = match (penalty, loss) {
        (Penalty::L1, Loss::Hinge) => {
            return Err(Error::BadParameter(
                "the l1 penalty requires the squared hinge loss".into(),
            ))
        }
        (Penalty::L1, Loss::SquaredHinge) => {
            let fit = l1_margin_cd(&SquaredHinge, x, labels.signs.view(), c, opts, L1_STALL);
            (fit.w, fit.b, fit.convergence, ModelKind::SvcSquaredHingeL1)
        }
        (Penalty::L2, loss) => {
            let (w, b, mut conv) = dual_svc(x, labels.signs.view(), loss, c, opts);
            conv.objective = primal_objective(x, labels.signs.view(), &w, b, Penalty::L2, loss, c);
            let kind = match loss {
                Loss::Hinge => ModelKind::SvcHingeL2,
                Loss::SquaredHinge => ModelKind::SvcSquaredHingeL2,
            };
            (w, b, conv, kind)
        }
    };
    convergence.warn_if_needed("linear SVC");
    Ok(LinearModel {
        coef: w.insert_axis(ndarray::Axis(0)),
        intercept: Array1::from_elem(1, b),
        kind,
        reg: c,
        classes: Some(labels.classes),
        convergence,
    })
}

pub(crate) fn primal_objective(
    x: ArrayView2<'_, f64>,
    signs: ArrayView1<'_, f64>,
    w: &Array1<f64>,
    b: f64,
    penalty: Penalty,
    loss: Loss,
    c: f64,
) -> f64 {
    let reg = match penalty {
        Penalty::L1 => w.iter().map(|v| v.abs()).sum::<f64>(),
        Penalty::L2 => 0.5 * w.dot(w),
    };
    let margins = x.dot(w) + b;
    let data: f64 = margins
        .iter()
        .zip(signs)
        .map(|(m, s)| {
            let slack = (1.0 - s * m).max(0.0);
            match loss {
                Loss::Hinge => slack,
                Loss::SquaredHinge => slack * slack,
            }
        })
        .sum();
    reg + c * data
}

fn dual_svc(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    loss: Loss,
    c: f64,
    opts: &SolverOptions,
) -> (Array1<f64>, f64, Convergence) {
    let n = y.len();
    let (upper, diag) = match loss {
        Loss::Hinge => (c, 0.0),
        Loss::SquaredHinge => (f64::INFINITY, 0.5 / c),
    };
    let y: Vec<f64> = y.to_vec();
    let gram = x.dot(&x.t());
    // row-major and symmetric, so row `i` doubles as column `i`
    let q: Vec<f64> = Array2::from_shape_fn((n, n), |(i, j)| {
        y[i] * y[j] * gram[[i, j]] + if i == j { diag } else { 0.0 }
    })
    .into_raw_vec_and_offset()
    .0;
    let q_diag: Vec<f64> = (0..n).map(|t| q[t * n + t]).collect();
    let row = |i: usize| &q[i * n..(i + 1) * n];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let at_upper = |a: f64| a >= upper;
    let at_lower = |a: f64| a <= 0.0;
    let max_steps = opts.max_iter.saturating_mul(n.max(1));

    let mut converged = false;
    let mut steps = 0;
    while steps < max_steps {
        // i: most violating index in the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut pick_i = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !at_upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    pick_i = Some(t);
                }
            } else if !at_lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                pick_i = Some(t);
            }
        }
        // j: largest second-order decrease in the "low" set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut pick_j = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = pick_i {
            let q_i = row(i);
            for t in 0..n {
                let (gd, quad) = if y[t] > 0.0 {
                    if at_lower(alpha[t]) {
                        continue;
                    }
                    gmax2 = gmax2.max(grad[t]);
                    (gmax + grad[t], q_diag[i] + q_diag[t] - 2.0 * y[i] * q_i[t])
                } else {
                    if at_upper(alpha[t]) {
                        continue;
                    }
                    gmax2 = gmax2.max(-grad[t]);
                    (gmax - grad[t], q_diag[i] + q_diag[t] + 2.0 * y[i] * q_i[t])
                };
                if gd > 0.0 {
                    let obj = -(gd * gd) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best_obj {
                        best_obj = obj;
                        pick_j = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (pick_i, pick_j) else {
            converged = true;
            break;
        };
        if gmax + gmax2 < opts.tol {
            converged = true;
            break;
        }
        steps += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q_diag[i] + q_diag[j] + 2.0 * row(i)[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > upper {
                    alpha[i] = upper;
                    alpha[j] = upper - diff;
                }
            } else if alpha[j] > upper {
                alpha[j] = upper;
                alpha[i] = upper + diff;
            }
        } else {
            let quad = (q_diag[i] + q_diag[j] - 2.0 * row(i)[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > upper {
                if alpha[i] > upper {
                    alpha[i] = upper;
                    alpha[j] = sum - upper;
                }
                if alpha[j] > upper {
                    alpha[j] = upper;
                    alpha[i] = sum - upper;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for ((g, &qi), &qj) in grad.iter_mut().zip(row(i)).zip(row(j)) {
            *g += qi * di + qj * dj;
        }
    }

    // intercept from the KKT conditions: average over free vectors, else
    // the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if at_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        0.5 * (ub + lb)
    };

    let coef_weights = Array1::from_iter(alpha.iter().zip(&y).map(|(a, s)| a * s));
    let w = x.t().dot(&coef_weights);
    let conv = Convergence {
        converged,
        iterations: steps,
        objective: f64::NAN,
    };
    (w, -rho, conv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, concatenate, Axis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_problem(n: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let x = Array2::from_shape_fn((n, d), |(i, j)| {
            let shift = if j < 2 { 0.6 * y[i] } else { 0.0 };
            shift + rng.random_range(-1.0..1.0)
        });
        (x, y)
    }

    #[test]
    fn max_margin_in_one_dimension() {
        let x = array![[-1.0], [1.0]];
        let m = fit_linear_svc(x.view(), &[-1.0, 1.0], Penalty::L2, Loss::Hinge, 1000.0).unwrap();
        assert!((m.coef[[0, 0]] - 1.0).abs() <= 1e-2);
        assert!(m.intercept[0].abs() <= 1e-2);
        assert!(m.convergence.converged);
    }

    #[test]
    fn duplicated_samples_with_half_c_agree() {
        let (x, y) = noisy_problem(40, 5, 3);
        let x2 = concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        for loss in [Loss::Hinge, Loss::SquaredHinge] {
            let a = fit_linear_svc(x.view(), &y, Penalty::L2, loss, 0.5).unwrap();
            let b = fit_linear_svc(x2.view(), &y2, Penalty::L2, loss, 0.25).unwrap();
            let da = a.decision_function(x.view()).unwrap();
            let db = b.decision_function(x.view()).unwrap();
            for (p, q) in da.iter().zip(db.iter()) {
                assert!((p - q).abs() <= 1e-6, "{loss:?}: {p} vs {q}");
            }
        }
        let a = fit_linear_svc(x.view(), &y, Penalty::L1, Loss::SquaredHinge, 0.5).unwrap();
        let b = fit_linear_svc(x2.view(), &y2, Penalty::L1, Loss::SquaredHinge, 0.25).unwrap();
        let da = a.decision_function(x.view()).unwrap();
        let db = b.decision_function(x.view()).unwrap();
        for (p, q) in da.iter().zip(db.iter()) {
            assert!((p - q).abs() <= 1e-4);
        }
    }

    #[test]
    fn l2_hinge_solution_is_primal_optimal() {
        let (x, y) = noisy_problem(60, 4, 11);
        let c = 0.3;
        let m = fit_linear_svc(x.view(), &y, Penalty::L2, Loss::Hinge, c).unwrap();
        let w = m.weights().to_owned();
        let b = m.intercept[0];
        let f0 = primal_objective(x.view(), Array1::from(y.clone()).view(), &w, b, Penalty::L2, Loss::Hinge, c);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let dw = Array1::from_shape_fn(4, |_| rng.random_range(-1e-3..1e-3));
            let db: f64 = rng.random_range(-1e-3..1e-3);
            let f = primal_objective(
                x.view(),
                Array1::from(y.clone()).view(),
                &(&w + &dw),
                b + db,
                Penalty::L2,
                Loss::Hinge,
                c,
            );
            assert!(f >= f0 - 1e-9, "perturbation lowered the objective: {f} < {f0}");
        }
    }

    #[test]
    fn squared_hinge_l2_gradient_vanishes() {
        let (x, y) = noisy_problem(50, 6, 17);
        let c = 2.0;
        let m = fit_linear_svc(x.view(), &y, Penalty::L2, Loss::SquaredHinge, c).unwrap();
        let w = m.weights();
        let margins = m.decision_function(x.view()).unwrap();
        let mut gw = w.to_owned();
        let mut gb = 0.0;
        for i in 0..50 {
            let slack = (1.0 - y[i] * margins[i]).max(0.0);
            gw.scaled_add(-2.0 * c * slack * y[i], &x.row(i));
            gb += -2.0 * c * slack * y[i];
        }
        assert!(gw.iter().all(|g| g.abs() < 1e-5), "{gw}");
        assert!(gb.abs() < 1e-5);
    }

    #[test]
    fn tiny_c_l1_gives_zero_weights_and_majority_intercept() {
        let (x, _) = noisy_problem(21, 5, 2);
        let y: Vec<f64> = (0..21).map(|i| if i < 13 { 1.0 } else { -1.0 }).collect();
        let m = fit_linear_svc(x.view(), &y, Penalty::L1, Loss::SquaredHinge, 1e-6).unwrap();
        assert_eq!(m.n_nonzero(), 0);
        let labels = m.classify(x.view()).unwrap();
        assert!(labels.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn parameter_errors() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            fit_linear_svc(x.view(), &[1.0, 1.0], Penalty::L2, Loss::Hinge, 1.0),
            Err(Error::SingleClass(_))
        ));
        assert!(matches!(
            fit_linear_svc(x.view(), &[0.0, 1.0], Penalty::L1, Loss::Hinge, 1.0),
            Err(Error::BadParameter(_))
        ));
        assert!(matches!(
            fit_linear_svc(x.view(), &[0.0, 1.0], Penalty::L2, Loss::Hinge, 0.0),
            Err(Error::BadParameter(_))
        ));
    }

    #[test]
    fn swapping_labels_negates_the_model() {
        let (x, y) = noisy_problem(30, 3, 8);
        let swapped: Vec<f64> = y.iter().map(|v| -v).collect();
        for (pen, loss) in [(Penalty::L2, Loss::Hinge), (Penalty::L1, Loss::SquaredHinge)] {
            let a = fit_linear_svc(x.view(), &y, pen, loss, 1.0).unwrap();
            let b = fit_linear_svc(x.view(), &swapped, pen, loss, 1.0).unwrap();
            for (p, q) in a.coef.iter().zip(b.coef.iter()) {
                assert!((p + q).abs() < 1e-6);
            }
            assert!((a.intercept[0] + b.intercept[0]).abs() < 1e-6);
        }
    }
}
