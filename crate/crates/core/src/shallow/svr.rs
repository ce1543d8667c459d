//! ε-insensitive support vector regression with an RBF kernel, trained by
//! sequential minimal optimization on the 2N-variable dual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// `None` picks `1 / (d · Var(X))`.
    pub gamma: Option<f64>,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support: Matrix,
    /// `α − α*` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final dual objective `½ βᵀKβ + ε Σ|β| − yᵀβ` (with `β = α − α*`).
    pub objective: f64,
}

#[inline]
pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

/// `1 / (d · Var(X))` over every entry of `x`; `1` when `X` is constant.
pub fn scale_gamma(x: &Matrix) -> f64 {
    let data = x.as_slice();
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.cols() as f64 * var)
    } else {
        1.0
    }
}

fn validate(x: &Matrix, y: &[f64], params: &SvrParams) -> Result<f64> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput("no training samples for SVR".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension(format!("{} samples for {} targets", x.rows(), y.len())));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("svr", "non-finite training data"));
    }
    if !(params.c > 0.0) || !(params.epsilon >= 0.0) || !(params.tol > 0.0) {
        return Err(Error::Config(format!(
            "SVR needs C > 0, epsilon >= 0 and tol > 0 (got C = {}, epsilon = {}, tol = {})",
            params.c, params.epsilon, params.tol
        )));
    }
    let gamma = params.gamma.unwrap_or_else(|| scale_gamma(x));
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Config(format!("RBF gamma {gamma} must be > 0")));
    }
    Ok(gamma)
}

/// Solves `min ½ aᵀQa + pᵀa` s.t. `Σ sᵢaᵢ = 0`, `0 ≤ a ≤ C` over
/// `a = (α, α*)` with `sᵢ = ±1`, `Q = s sᵀ ∘ [K K; K K]`,
/// `p = (ε − y, ε + y)`. Working pairs are the maximal KKT violators.
pub fn fit_svr(x: &Matrix, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    let gamma = validate(x, y, params)?;
    let n = x.rows();
    let c = params.c;

    let mut kernel = Matrix::zeros(n, n);
    for i in 0..n {
        kernel[(i, i)] = 1.0;
        for j in 0..i {
            let k = rbf(gamma, x.row(i), x.row(j));
            kernel[(i, j)] = k;
            kernel[(j, i)] = k;
        }
    }

    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |a: usize, b: usize| sign(a) * sign(b) * kernel[(a % n, b % n)];
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..l {
            let s = sign(t);
            let v = -s * grad[t];
            let up = if s > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if s > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > g_max {
                g_max = v;
                i = t;
            }
            if low && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qii = q(i, i);
        let qjj = q(j, j);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
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
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }
    if !converged {
        log::warn!("SVR stopped at the iteration cap ({}) before reaching tol {}", params.max_iter, params.tol);
    }

    // ρ from free variables, else the midpoint of the feasible interval
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..l {
        let s = sign(t);
        let yg = s * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let beta: Vec<f64> = (0..n).map(|k| alpha[k] - alpha[k + n]).collect();
    let objective = dual_objective(&kernel, y, params.epsilon, &beta);
    let kept: Vec<usize> = (0..n).filter(|&k| beta[k] != 0.0).collect();
    let mut support = Matrix::zeros(kept.len(), x.cols());
    for (r, &k) in kept.iter().enumerate() {
        support.row_mut(r).copy_from_slice(x.row(k));
    }
    Ok(SvrModel {
        support,
        coefficients: kept.iter().map(|&k| beta[k]).collect(),
        bias: -rho,
        gamma,
        epsilon: params.epsilon,
        c,
        converged,
        iterations,
        objective,
    })
}

/// `½ βᵀKβ + ε Σ|β| − yᵀβ`, the dual objective at the optimum where `α`
/// and `α*` are never both positive.
pub fn dual_objective(kernel: &Matrix, y: &[f64], epsilon: f64, beta: &[f64]) -> f64 {
    let mut kb = vec![0.0; beta.len()];
    kernel.matvec_add_into(beta, &mut kb);
    let quad: f64 = beta.iter().zip(&kb).map(|(b, k)| b * k).sum();
    let lin: f64 = beta.iter().zip(y).map(|(b, yy)| epsilon * b.abs() - yy * b).sum();
    0.5 * quad + lin
}

impl SvrModel {
    pub fn input_width(&self) -> usize {
        self.support.cols()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if self.support.rows() > 0 && x.len() != self.support.cols() {
            return Err(Error::Dimension(format!(
                "input of width {} for an SVR over {} features",
                x.len(),
                self.support.cols()
            )));
        }
        let mut f = self.bias;
        for (r, coef) in self.coefficients.iter().enumerate() {
            f += coef * rbf(self.gamma, x, self.support.row(r));
        }
        Ok(f)
    }
}
