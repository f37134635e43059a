//! Binary logistic regression.
//!
//! ℓ2: truncated Newton (conjugate-gradient inner solves, Armijo line search)
//! on all coefficients plus the intercept. ℓ1: cyclic coordinate descent.

use ndarray::{s, Array1, ArrayView1, ArrayView2, Axis};

use super::cd::{l1_margin_cd, Logistic, MarginLoss};
use super::{check_xy, ClassLabels, Convergence, LinearModel, ModelKind, Penalty, SolverOptions};
use crate::error::{Error, Result};

const ARMIJO_SIGMA: f64 = 1e-4;
const BIAS_CURVATURE_FLOOR: f64 = 1e-12;

pub fn fit_logistic(x: ArrayView2<'_, f64>, y: &[f64], penalty: Penalty, c: f64) -> Result<LinearModel> {
    fit_logistic_with(x, y, penalty, c, &SolverOptions::default())
}

pub fn fit_logistic_with(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    penalty: Penalty,
    c: f64,
    opts: &SolverOptions,
) -> Result<LinearModel> {
    check_xy(&x, y.len())?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::BadParameter(format!("C must be positive, got {c}")));
    }
    let labels = ClassLabels::new(y)?;
    let (w, b, convergence, kind) = match penalty {
        Penalty::L1 => {
            let fit = l1_margin_cd(&Logistic, x, labels.signs.view(), c, opts, 0.0);
            (fit.w, fit.b, fit.convergence, ModelKind::LogisticL1)
        }
        Penalty::L2 => {
            let (w, b, conv) = newton_cg(x, labels.signs.view(), c, opts);
            (w, b, conv, ModelKind::LogisticL2)
        }
    };
    convergence.warn_if_needed("logistic regression");
    Ok(LinearModel {
        coef: w.insert_axis(Axis(0)),
        intercept: Array1::from_elem(1, b),
        kind,
        reg: c,
        classes: Some(labels.classes),
        convergence,
    })
}

struct L2Problem<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    c: f64,
}

impl L2Problem<'_> {
    fn margins(&self, theta: &Array1<f64>) -> Array1<f64> {
        let d = self.x.ncols();
        (self.x.dot(&theta.slice(s![..d])) + theta[d]) * &self.y
    }

    fn objective(&self, theta: &Array1<f64>) -> f64 {
        let d = self.x.ncols();
        let w = theta.slice(s![..d]);
        0.5 * w.dot(&w) + self.c * self.margins(theta).iter().map(|&m| Logistic.value(m)).sum::<f64>()
    }

    fn gradient(&self, theta: &Array1<f64>, margins: &Array1<f64>) -> Array1<f64> {
        let d = self.x.ncols();
        let coeff = Array1::from_iter(margins.iter().zip(self.y).map(|(&m, &s)| self.c * Logistic.slope(m) * s));
        let mut g = Array1::zeros(d + 1);
        g.slice_mut(s![..d]).assign(&(&theta.slice(s![..d]) + &self.x.t().dot(&coeff)));
        g[d] = coeff.sum();
        g
    }

    fn hessian_product(&self, curvature: &Array1<f64>, v: &Array1<f64>) -> Array1<f64> {
        let d = self.x.ncols();
        let xv = (self.x.dot(&v.slice(s![..d])) + v[d]) * curvature;
        let mut out = Array1::zeros(d + 1);
        out.slice_mut(s![..d]).assign(&(&v.slice(s![..d]) + &self.x.t().dot(&xv)));
        out[d] = xv.sum() + BIAS_CURVATURE_FLOOR * v[d];
        out
    }
}

fn conjugate_gradient(
    problem: &L2Problem<'_>,
    curvature: &Array1<f64>,
    rhs: &Array1<f64>,
    rel_tol: f64,
) -> Array1<f64> {
    let mut p = Array1::zeros(rhs.len());
    let mut r = rhs.clone();
    let mut dir = r.clone();
    let mut rr = r.dot(&r);
    let stop = rel_tol * rr.sqrt();
    for _ in 0..(2 * rhs.len()).max(10) {
        if rr.sqrt() <= stop {
            break;
        }
        let hd = problem.hessian_product(curvature, &dir);
        let dhd = dir.dot(&hd);
        if dhd <= 0.0 {
            break;
        }
        let step = rr / dhd;
        p.scaled_add(step, &dir);
        r.scaled_add(-step, &hd);
        let rr_new = r.dot(&r);
        dir = &r + &(rr_new / rr * &dir);
        rr = rr_new;
    }
    p
}

fn newton_cg(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    c: f64,
    opts: &SolverOptions,
) -> (Array1<f64>, f64, Convergence) {
    let d = x.ncols();
    let problem = L2Problem { x, y, c };
    let mut theta = Array1::<f64>::zeros(d + 1);
    let mut f = problem.objective(&theta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let margins = problem.margins(&theta);
        let g = problem.gradient(&theta, &margins);
        let gnorm = g.dot(&g).sqrt();
        if gnorm <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let curvature = margins.mapv(|m| c * Logistic.curvature(m));
        let rel_tol = gnorm.sqrt().min(0.1);
        let p = conjugate_gradient(&problem, &curvature, &(-&g), rel_tol);
        let slope = g.dot(&p);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &theta + &(step * &p);
            let fc = problem.objective(&candidate);
            if fc <= f + ARMIJO_SIGMA * step * slope {
                theta = candidate;
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let b = theta[d];
    (
        theta.slice(s![..d]).to_owned(),
        b,
        Convergence {
            converged,
            iterations,
            objective: f,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky_solve;
    use ndarray::{concatenate, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(n: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let truth = Array1::from_shape_fn(d, |j| if j < 3 { 1.5 } else { 0.0 });
        let y = (0..n)
            .map(|i| {
                let p = 1.0 / (1.0 + f64::exp(-x.row(i).dot(&truth)));
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        (x, y)
    }

    fn signs(y: &[f64]) -> Array1<f64> {
        y.iter().map(|&v| if v > 0.0 { 1.0 } else { -1.0 }).collect()
    }

    /// Plain Newton with the dense (d+1)² Hessian and full steps.
    fn dense_newton_oracle(x: &Array2<f64>, y: &Array1<f64>, c: f64) -> Array1<f64> {
        let (n, d) = x.dim();
        let xa = concatenate(Axis(1), &[x.view(), Array2::ones((n, 1)).view()]).unwrap();
        let mut theta = Array1::<f64>::zeros(d + 1);
        for _ in 0..100 {
            let z = xa.dot(&theta);
            let mut g = theta.clone();
            g[d] = 0.0;
            let mut h = Array2::<f64>::eye(d + 1);
            h[[d, d]] = 0.0;
            for i in 0..n {
                let m = y[i] * z[i];
                let p = 1.0 / (1.0 + m.exp());
                g.scaled_add(-c * p * y[i], &xa.row(i));
                let wgt = c * p * (1.0 - p);
                for a in 0..=d {
                    for b in 0..=d {
                        h[[a, b]] += wgt * xa[[i, a]] * xa[[i, b]];
                    }
                }
            }
            let step = cholesky_solve(h.view(), g.view().insert_axis(Axis(1))).unwrap();
            theta -= &step.column(0);
            if g.dot(&g).sqrt() < 1e-13 {
                break;
            }
        }
        theta
    }

    #[test]
    fn l2_matches_dense_newton() {
        let (x, y) = problem(30, 10, 1);
        for c in [0.1, 1.0, 10.0] {
            let m = fit_logistic(x.view(), &y, Penalty::L2, c).unwrap();
            let oracle = dense_newton_oracle(&x, &signs(&y), c);
            for j in 0..10 {
                assert!((m.coef[[0, j]] - oracle[j]).abs() <= 1e-5);
            }
            assert!((m.intercept[0] - oracle[10]).abs() <= 1e-5);
        }
    }

    #[test]
    fn l2_gradient_norm_is_small() {
        for seed in 0..5 {
            let (x, y) = problem(40, 6, seed);
            let c = 0.5 + seed as f64;
            let m = fit_logistic(x.view(), &y, Penalty::L2, c).unwrap();
            let margins = m.decision_function(x.view()).unwrap() * &signs(&y);
            let mut g = m.weights().to_owned();
            let mut gb = 0.0;
            for i in 0..40 {
                let s = -c * sigmoid_neg(margins[i]) * signs(&y)[i];
                g.scaled_add(s, &x.row(i));
                gb += s;
            }
            let norm = (g.dot(&g) + gb * gb).sqrt();
            let wnorm = m.weights().dot(&m.weights()).sqrt();
            assert!(norm <= 1e-5 * (1.0 + wnorm), "seed {seed}: {norm}");
        }
    }

    fn sigmoid_neg(m: f64) -> f64 {
        1.0 / (1.0 + m.exp())
    }

    #[test]
    fn symmetric_data_has_zero_intercept() {
        let (x, y) = problem(20, 4, 9);
        let xs = concatenate(Axis(0), &[x.view(), (-&x).view()]).unwrap();
        let ys: Vec<f64> = y.iter().chain(y.iter().map(|&v| if v > 0.0 { &0.0 } else { &1.0 })).copied().collect();
        let m = fit_logistic(xs.view(), &ys, Penalty::L2, 1.0).unwrap();
        assert!(m.intercept[0].abs() <= 1e-8, "{}", m.intercept[0]);
    }

    #[test]
    fn l1_kkt_and_shrinkage() {
        let (x, y) = problem(60, 12, 4);
        let z = fit_logistic(x.view(), &y, Penalty::L1, 1e-6).unwrap();
        assert_eq!(z.n_nonzero(), 0);

        let c = 0.8;
        let m = fit_logistic(x.view(), &y, Penalty::L1, c).unwrap();
        assert!(m.convergence.converged);
        let sy = signs(&y);
        let margins = m.decision_function(x.view()).unwrap() * &sy;
        let coeff = Array1::from_iter((0..60).map(|i| -c * sigmoid_neg(margins[i]) * sy[i]));
        let g = x.t().dot(&coeff);
        for (j, &wj) in m.weights().iter().enumerate() {
            if wj == 0.0 {
                assert!(g[j].abs() <= 1.0 + 1e-6, "feature {j}: {}", g[j]);
            } else {
                assert!((g[j] + wj.signum()).abs() <= 1e-6, "feature {j}: {}", g[j]);
            }
        }
        assert!(coeff.sum().abs() <= 1e-6);
    }

    #[test]
    fn l1_sparsity_is_monotone_in_c() {
        for seed in 0..4 {
            let (x, y) = problem(50, 15, 100 + seed);
            let counts: Vec<usize> = [1.0, 1e-3, 1e-6]
                .iter()
                .map(|&c| fit_logistic(x.view(), &y, Penalty::L1, c).unwrap().n_nonzero())
                .collect();
            assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
        }
    }
}
