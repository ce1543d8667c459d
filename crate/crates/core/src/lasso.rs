//! ℓ₁-penalized least squares by cyclic coordinate descent, and the
//! coefficient-magnitude feature selection built on top of it.
//!
//! The objective is `½ Σ (yᵢ − ⟨xᵢ, β⟩ − β₀)² + λ‖β‖₁` with an unpenalized
//! intercept. Features are standardized internally (zero mean, unit
//! population variance) so every column has squared norm `N`.

use std::io::Write;

use serde::Serialize;

use crate::dataset::{FeatureSchema, SeriesTable, Target};
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Matrix};

/// Soft-threshold operator `S(z, γ) = sign(z)·max(|z| − γ, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Outcome of [`coordinate_descent`].
#[derive(Debug, Clone)]
pub struct CdSolution {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective value after each completed sweep.
    pub objective_trace: Vec<f64>,
}

/// Minimizes `½‖y − Xβ‖² + λ‖β‖₁` (no intercept) by cyclic coordinate
/// descent. Stops once the largest coefficient change in a sweep drops below
/// `tol`, or after `max_iter` sweeps.
pub fn coordinate_descent(
    design: &Matrix,
    response: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> CdSolution {
    let (n, p) = design.shape();
    debug_assert_eq!(response.len(), n);
    let columns = design.transpose();
    let norms: Vec<f64> = (0..p).map(|j| dot(columns.row(j), columns.row(j))).collect();

    let mut beta = warm_start.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let mut residual = response.to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            axpy(-b, columns.row(j), &mut residual);
        }
    }

    let objective = |r: &[f64], b: &[f64]| 0.5 * dot(r, r) + lambda * b.iter().map(|v| v.abs()).sum::<f64>();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_iter {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let col = columns.row(j);
            let rho = dot(col, &residual) + norms[j] * beta[j];
            let updated = soft_threshold(rho, lambda) / norms[j];
            let delta = updated - beta[j];
            if delta != 0.0 {
                axpy(-delta, col, &mut residual);
                beta[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        trace.push(objective(&residual, &beta));
        if max_change < tol {
            converged = true;
            break;
        }
    }
    CdSolution {
        beta,
        sweeps,
        converged,
        objective_trace: trace,
    }
}

/// Column means and population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Zero for constant columns; those columns standardize to all zeros.
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn fit(x: &Matrix) -> Self {
        let (n, p) = x.shape();
        let mut mean = vec![0.0; p];
        for r in 0..n {
            axpy(1.0, x.row(r), &mut mean);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; p];
        for r in 0..n {
            for (j, &v) in x.row(r).iter().enumerate() {
                var[j] += (v - mean[j]) * (v - mean[j]);
            }
        }
        let scale = var
            .iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    0.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = if self.scale[j] > 0.0 {
                    (*v - self.mean[j]) / self.scale[j]
                } else {
                    0.0
                };
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LassoModel {
    /// Coefficients on the standardized features.
    pub beta: Vec<f64>,
    /// Intercept in standardized coordinates (the response mean).
    pub beta0: f64,
    pub lambda: f64,
    pub standardization: Standardization,
    /// Coefficients mapped back to the input feature units.
    pub beta_original_scale: Vec<f64>,
    pub intercept_original_scale: f64,
    pub converged: bool,
    pub sweeps: usize,
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl LassoModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept_original_scale + dot(&self.beta_original_scale, x)
    }

    pub fn nonzero_count(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

fn validate_problem(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} design rows for {} responses",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() < 2 {
        return Err(Error::InsufficientData("lasso needs at least two samples".into()));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("lasso input", "non-finite value"));
    }
    Ok(())
}

fn centered(y: &[f64]) -> (f64, Vec<f64>) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (mean, y.iter().map(|v| v - mean).collect())
}

/// Smallest λ at which every standardized coefficient is zero:
/// `‖Xᶜᵀ(y − ȳ)‖∞`.
pub fn lambda_max(x: &Matrix, y: &[f64]) -> Result<f64> {
    validate_problem(x, y)?;
    let xs = Standardization::fit(x).apply(x);
    let (_, yc) = centered(y);
    let mut grad = vec![0.0; xs.cols()];
    xs.tr_matvec_add_into(&yc, &mut grad);
    Ok(grad.iter().fold(0.0, |m, g| m.max(g.abs())))
}

pub fn fit_lasso(x: &Matrix, y: &[f64], lambda: f64, tol: f64, max_iter: usize) -> Result<LassoModel> {
    fit_lasso_warm(x, y, lambda, tol, max_iter, None)
}

fn fit_lasso_warm(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<LassoModel> {
    validate_problem(x, y)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be a finite value >= 0, got {lambda}")));
    }
    let standardization = Standardization::fit(x);
    let xs = standardization.apply(x);
    let (y_mean, yc) = centered(y);
    let solution = coordinate_descent(&xs, &yc, lambda, tol, max_iter, warm_start);
    if !solution.converged {
        log::warn!("lasso did not converge in {max_iter} sweeps (lambda = {lambda})");
    }
    let beta_original_scale: Vec<f64> = solution
        .beta
        .iter()
        .zip(&standardization.scale)
        .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
        .collect();
    let intercept_original_scale = y_mean - dot(&beta_original_scale, &standardization.mean);
    Ok(LassoModel {
        beta: solution.beta,
        beta0: y_mean,
        lambda,
        standardization,
        beta_original_scale,
        intercept_original_scale,
        converged: solution.converged,
        sweeps: solution.sweeps,
        objective_trace: solution.objective_trace,
    })
}

/// How the validation curve is turned into a single λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// λ with the lowest validation MSE.
    MinValidation,
    /// Largest λ whose validation MSE is within one standard error of the
    /// minimum.
    OneStandardError,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSearch {
    pub grid_size: usize,
    /// Smallest grid value as a fraction of λ_max.
    pub min_ratio: f64,
    /// Trailing fraction of the rows held out for validation.
    pub validation_fraction: f64,
    pub rule: LambdaRule,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        Self {
            grid_size: 50,
            min_ratio: 1e-3,
            validation_fraction: 0.2,
            rule: LambdaRule::OneStandardError,
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaChoice {
    /// λ on the fitting rows.
    pub lambda_fit: f64,
    /// λ rescaled to the full row count, used for the final refit.
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub validation_mse: Vec<f64>,
}

/// Geometric grid from `lambda_max` down to `lambda_max · min_ratio`.
pub fn lambda_grid(lambda_max: f64, size: usize, min_ratio: f64) -> Vec<f64> {
    if size <= 1 {
        return vec![lambda_max];
    }
    let step = min_ratio.ln() / (size - 1) as f64;
    (0..size).map(|k| lambda_max * (step * k as f64).exp()).collect()
}

/// Chooses λ on a held-out tail of the rows, then refits on all rows.
pub fn fit_lasso_validated(x: &Matrix, y: &[f64], search: &LambdaSearch) -> Result<(LassoModel, LambdaChoice)> {
    validate_problem(x, y)?;
    let n = x.rows();
    let n_val = ((n as f64) * search.validation_fraction).round() as usize;
    let n_fit = n - n_val;
    if n_val == 0 || n_fit < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} rows cannot be split for lambda validation"
        )));
    }
    let x_fit = x.slice_rows(0, n_fit);
    let y_fit = &y[..n_fit];
    let grid = lambda_grid(lambda_max(&x_fit, y_fit)?, search.grid_size, search.min_ratio);

    let mut warm: Option<Vec<f64>> = None;
    let mut mse = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let model = fit_lasso_warm(&x_fit, y_fit, lambda, search.tol, search.max_iter, warm.as_deref())?;
        let errs: Vec<f64> = (n_fit..n)
            .map(|r| {
                let e = model.predict(x.row(r)) - y[r];
                e * e
            })
            .collect();
        let mean = errs.iter().sum::<f64>() / n_val as f64;
        let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n_val.max(2) - 1) as f64;
        mse.push(mean);
        se.push((var / n_val as f64).sqrt());
        warm = Some(model.beta);
    }

    // grid is descending: the first index that meets the bar is the largest λ
    let best = (0..grid.len())
        .min_by(|&a, &b| mse[a].total_cmp(&mse[b]).then(a.cmp(&b)))
        .expect("non-empty grid");
    let chosen = match search.rule {
        LambdaRule::MinValidation => best,
        LambdaRule::OneStandardError => {
            let bar = mse[best] + se[best];
            (0..=best).find(|&k| mse[k] <= bar).unwrap_or(best)
        }
    };
    // the penalty multiplies a sum over rows, so it scales with the row count
    let lambda = grid[chosen] * n as f64 / n_fit as f64;
    let model = fit_lasso(x, y, lambda, search.tol, search.max_iter)?;
    Ok((
        model,
        LambdaChoice {
            lambda_fit: grid[chosen],
            lambda,
            grid,
            validation_mse: mse,
        },
    ))
}

/// One `(feature, coefficient)` line of a coefficient report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientEntry {
    pub index: usize,
    pub feature: String,
    pub coefficient: f64,
}

/// Indices with `|standardized coefficient| ≥ threshold`, plus a report of
/// their original-scale coefficients sorted by descending magnitude.
///
/// `names[j]` labels coefficient `j`; `columns[j]` is the schema index it
/// maps back to.
pub fn select_features(
    model: &LassoModel,
    threshold: f64,
    names: &[String],
    columns: &[usize],
) -> (Vec<usize>, Vec<CoefficientEntry>) {
    let kept: Vec<usize> = (0..model.beta.len())
        .filter(|&j| model.beta[j].abs() >= threshold)
        .collect();
    let mut report: Vec<CoefficientEntry> = kept
        .iter()
        .map(|&j| CoefficientEntry {
            index: columns[j],
            feature: names[j].clone(),
            coefficient: model.beta_original_scale[j],
        })
        .collect();
    report.sort_by(|a, b| b.coefficient.abs().total_cmp(&a.coefficient.abs()).then(a.index.cmp(&b.index)));
    let mut indices: Vec<usize> = kept.iter().map(|&j| columns[j]).collect();
    indices.sort_unstable();
    (indices, report)
}

/// `{targets} ∪ {retained features of every target}`, ascending.
pub fn union_features<'a>(selections: impl IntoIterator<Item = &'a [usize]>, target_indices: &[usize]) -> Vec<usize> {
    let mut all: Vec<usize> = target_indices.to_vec();
    for s in selections {
        all.extend_from_slice(s);
    }
    all.sort_unstable();
    all.dedup();
    all
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetSelection {
    pub target: Target,
    /// Schema column of the target itself.
    pub target_column: usize,
    /// Retained feature columns (never including the target's own column).
    pub indices: Vec<usize>,
    pub report: Vec<CoefficientEntry>,
    pub lambda: Option<f64>,
}

impl TargetSelection {
    /// Model input set for this target: its retained features plus itself.
    pub fn input_columns(&self) -> Vec<usize> {
        union_features([self.indices.as_slice()], &[self.target_column])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeatureSelection {
    pub per_target: Vec<TargetSelection>,
    pub threshold: f64,
    pub union: Vec<usize>,
}

impl FeatureSelection {
    pub fn new(per_target: Vec<TargetSelection>, threshold: f64) -> Self {
        let targets: Vec<usize> = per_target.iter().map(|s| s.target_column).collect();
        let union = union_features(per_target.iter().map(|s| s.indices.as_slice()), &targets);
        Self {
            per_target,
            threshold,
            union,
        }
    }

    pub fn for_target(&self, target: Target) -> Option<&TargetSelection> {
        self.per_target.iter().find(|s| s.target == target)
    }

    /// Coefficient table: one row per retained feature, one column per
    /// target, blank where the feature was not retained for that target.
    pub fn write_report<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows: Vec<(usize, String)> = Vec::new();
        for sel in &self.per_target {
            for entry in &sel.report {
                if !rows.iter().any(|(i, _)| *i == entry.index) {
                    rows.push((entry.index, entry.feature.clone()));
                }
            }
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature", "torque_coef", "advance_rate_coef", "thrust_coef"])?;
        for (index, name) in rows {
            let mut record = vec![name];
            for target in Target::ALL {
                let cell = self
                    .for_target(target)
                    .and_then(|s| s.report.iter().find(|e| e.index == index))
                    .map(|e| e.coefficient.to_string())
                    .unwrap_or_default();
                record.push(cell);
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<coefficient report>", e))?;
        Ok(())
    }
}

/// One-step regression design for `target_column`: rows `x_t` (all columns
/// except the target's own) against `y_{t+1}`, for every `t + 1 < end`.
/// Returns the design, the response and the schema columns of the design.
pub fn one_step_design(series: &SeriesTable, target_column: usize, end: usize) -> Result<(Matrix, Vec<f64>, Vec<usize>)> {
    let end = end.min(series.len());
    if end < 3 {
        return Err(Error::InsufficientData(format!("{end} rows are too few for a lasso design")));
    }
    if target_column >= series.width() {
        return Err(Error::Index {
            index: target_column,
            len: series.width(),
        });
    }
    let columns: Vec<usize> = (0..series.width()).filter(|&c| c != target_column).collect();
    let values = series.values();
    let x = values.slice_rows(0, end - 1).select_columns(&columns);
    let y = (1..end).map(|r| values[(r, target_column)]).collect();
    Ok((x, y, columns))
}

/// How λ is chosen for each target.
#[derive(Debug, Clone, Serialize)]
pub enum LambdaSetting {
    Fixed(f64),
    Validated(LambdaSearch),
}

/// Runs the per-target lasso on the rows before `end` and assembles the
/// retained sets.
pub fn select_for_targets(
    series: &SeriesTable,
    end: usize,
    lambda: &LambdaSetting,
    threshold: f64,
) -> Result<FeatureSelection> {
    let schema: &FeatureSchema = series.schema();
    let mut per_target = Vec::new();
    for &(target, column) in schema.targets() {
        let (x, y, columns) = one_step_design(series, column, end)?;
        let (model, chosen) = match lambda {
            LambdaSetting::Fixed(l) => (fit_lasso(&x, &y, *l, 1e-7, 10_000)?, *l),
            LambdaSetting::Validated(search) => {
                let (m, c) = fit_lasso_validated(&x, &y, search)?;
                (m, c.lambda)
            }
        };
        let names: Vec<String> = columns.iter().map(|&c| schema.names()[c].clone()).collect();
        let (indices, report) = select_features(&model, threshold, &names, &columns);
        log::info!(
            "lasso {target}: lambda = {chosen:.6e}, retained {} of {} features",
            indices.len(),
            columns.len()
        );
        per_target.push(TargetSelection {
            target,
            target_column: column,
            indices,
            report,
            lambda: Some(chosen),
        });
    }
    Ok(FeatureSelection::new(per_target, threshold))
}

/// Features reported for each load parameter in the reference coefficient
/// table, with their reported coefficients. Names follow [`crate::dataset::TBM_FEATURES`].
pub const REFERENCE_SELECTION: [(Target, &[(&str, f64)]); 3] = [
    (
        Target::Torque,
        &[
            ("Rotation speed of cutter(r/min)", 29.912),
            ("Cutter power (kw)", 28.871),
            ("Pressure of chamber at top left (bar)", -9.126),
            ("Pressure of chamber at bottom right (bar)", 1.451),
            ("Temperature of oil tank (°C)", 0.813),
        ],
    ),
    (
        Target::AdvanceRate,
        &[
            ("Rotation speed of cutter(r/min)", 4.178),
            ("Pressure of Shield tail seal at left front (bar)", 48.521),
            ("Rolling angle (°)", -29.760),
            ("Propelling pressure (bar)", 0.075),
            ("Propelling pressure of C group (bar)", 0.041),
            ("Pressure of screw pump (bar)", 0.023),
        ],
    ),
    (
        Target::Thrust,
        &[
            ("Propelling pressure of C group (bar)", 30.267),
            ("Pressure of Shield tail seal at top left back (bar)", 36.896),
            ("Propelling pressure of A group (bar)", 29.833),
            ("Propelling pressure of B group (bar)", 26.638),
            ("Propelling pressure of D group (bar)", 5.219),
            ("Displacement of A group of thrust cylinders (mm)", -0.001),
        ],
    ),
];

/// The reference selection resolved against `schema`.
pub fn reference_selection(schema: &FeatureSchema) -> Result<FeatureSelection> {
    let mut per_target = Vec::new();
    for (target, entries) in REFERENCE_SELECTION {
        let target_column = schema.target_index(target).ok_or_else(|| Error::MissingColumn {
            column: target.feature_name().to_string(),
        })?;
        let mut report = Vec::new();
        for &(name, coefficient) in entries {
            let index = schema.index_of(name).ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })?;
            report.push(CoefficientEntry {
                index,
                feature: name.to_string(),
                coefficient,
            });
        }
        let mut indices: Vec<usize> = report.iter().map(|e| e.index).collect();
        indices.sort_unstable();
        per_target.push(TargetSelection {
            target,
            target_column,
            indices,
            report,
            lambda: None,
        });
    }
    Ok(FeatureSelection::new(per_target, 1e-3))
}
