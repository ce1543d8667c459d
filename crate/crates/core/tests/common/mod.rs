//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tbm_forecast::dataset::WindowedSample;
use tbm_forecast::lasso::soft_threshold;
use tbm_forecast::neural::{CellKind, FnnConfig, FnnParams, Network, Parameters, RecurrentConfig, RecurrentParams};
use tbm_forecast::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Matrix {
    let v = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, v).unwrap()
}

pub fn random_samples(n: usize, tau: usize, inputs: usize, outputs: usize, rng: &mut impl Rng) -> Vec<WindowedSample> {
    (0..n)
        .map(|i| WindowedSample {
            inputs: random_matrix(tau, inputs, 1.0, rng),
            target: (0..outputs).map(|_| rng.random_range(-1.0..1.0)).collect(),
            anchor: i,
        })
        .collect()
}

/// Small networks of every kind: `I` features per step, `hidden` units,
/// window `tau`, `outputs` targets.
pub fn small_networks(inputs: usize, hidden: usize, tau: usize, outputs: usize, seed: u64) -> Vec<Network> {
    let mut r = rng(seed);
    let mut nets = Vec::new();
    let mut fnn = FnnConfig::standard(tau * inputs, outputs, true);
    fnn.hidden = vec![hidden, hidden];
    nets.push(Network::Fnn(FnnParams::init(fnn, &mut r)));
    for kind in [CellKind::Rnn, CellKind::Lstm, CellKind::Gru] {
        let mut cfg = RecurrentConfig::standard(kind, inputs, outputs, true);
        cfg.hidden = hidden;
        cfg.head = vec![hidden, hidden];
        nets.push(Network::Recurrent(RecurrentParams::init(cfg, &mut r)));
    }
    nets
}

/// Largest relative error between the analytic gradient and central
/// differences of the batch loss, over every parameter.
pub fn max_gradient_error(network: &Network, samples: &[WindowedSample], step: f64) -> f64 {
    let batch: Vec<&WindowedSample> = samples.iter().collect();
    let (grads, _) = tbm_forecast::neural::compute_gradients(network, &batch).unwrap();
    let analytic: Vec<f64> = grads
        .named_tensors()
        .iter()
        .flat_map(|(_, t)| t.as_slice().to_vec())
        .collect();
    let mut probe = network.clone();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    let tensors = probe.tensors_mut().len();
    for ti in 0..tensors {
        let len = probe.tensors_mut()[ti].as_slice().len();
        for i in 0..len {
            let orig = probe.tensors_mut()[ti].as_slice()[i];
            probe.tensors_mut()[ti].as_mut_slice()[i] = orig + step;
            let up = probe.loss(&batch).unwrap();
            probe.tensors_mut()[ti].as_mut_slice()[i] = orig - step;
            let down = probe.loss(&batch).unwrap();
            probe.tensors_mut()[ti].as_mut_slice()[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[k];
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(err);
            k += 1;
        }
    }
    assert_eq!(k, analytic.len());
    worst
}

/// Column means / population std standardization and centered response, the
/// coordinates the lasso solver works in.
pub fn standardized(x: &Matrix, y: &[f64]) -> (Matrix, Vec<f64>) {
    let s = tbm_forecast::lasso::Standardization::fit(x);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (s.apply(x), y.iter().map(|v| v - mean).collect())
}

/// ISTA on `½‖y − Xβ‖² + λ‖β‖₁` with step `1/L`, `L` the largest eigenvalue
/// of `XᵀX` (power iteration).
pub fn proximal_gradient_lasso(x: &Matrix, y: &[f64], lambda: f64, iterations: usize) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut gram = vec![vec![0.0; p]; p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            for k in 0..p {
                gram[j][k] += row[j] * row[k];
            }
        }
    }
    let apply = |v: &[f64]| -> Vec<f64> { gram.iter().map(|g| g.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
    let mut v = vec![1.0; p];
    let mut l = 0.0;
    for _ in 0..500 {
        let w = apply(&v);
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        l = norm / v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = w.iter().map(|a| a / norm).collect();
    }
    let step = 1.0 / (l * 1.0001).max(1e-12);
    let mut xty = vec![0.0; p];
    x.tr_matvec_add_into(y, &mut xty);
    let mut beta = vec![0.0; p];
    let mut g = vec![0.0; p];
    for _ in 0..iterations {
        for j in 0..p {
            g[j] = gram[j].iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() - xty[j];
        }
        for j in 0..p {
            beta[j] = soft_threshold(beta[j] - step * g[j], step * lambda);
        }
    }
    beta
}

/// Largest violation of the lasso optimality conditions:
/// `xⱼᵀr = λ·sign(βⱼ)` on the support and `|xⱼᵀr| ≤ λ` off it.
pub fn kkt_violation(x: &Matrix, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let (n, p) = x.shape();
    let mut fitted = vec![0.0; n];
    x.matvec_add_into(beta, &mut fitted);
    let r: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mut corr = vec![0.0; p];
    x.tr_matvec_add_into(&r, &mut corr);
    (0..p)
        .map(|j| {
            if beta[j] != 0.0 {
                (corr[j] - lambda * beta[j].signum()).abs()
            } else {
                (corr[j].abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Ordinary least squares with intercept by Gaussian elimination with
/// partial pivoting on the normal equations. Returns `(β, β₀)`.
pub fn least_squares(x: &Matrix, y: &[f64]) -> (Vec<f64>, f64) {
    let (n, p) = x.shape();
    let d = p + 1;
    let row = |i: usize| {
        let mut r = x.row(i).to_vec();
        r.push(1.0);
        r
    };
    let mut a = vec![vec![0.0; d + 1]; d];
    for i in 0..n {
        let ri = row(i);
        for j in 0..d {
            for k in 0..d {
                a[j][k] += ri[j] * ri[k];
            }
            a[j][d] += ri[j] * y[i];
        }
    }
    for c in 0..d {
        let pivot = (c..d).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, pivot);
        for r in 0..d {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=d {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let sol: Vec<f64> = (0..d).map(|i| a[i][d] / a[i][i]).collect();
    (sol[..p].to_vec(), sol[p])
}
