//! End-to-end runs: load → normalize → (lasso) → window → train → evaluate,
//! for every requested (setting, model, target) cell, plus the files each
//! run leaves behind.

mod config;

pub use config::{DataSource, ExperimentConfig, ModelKind, ReportSpace, SelectionSource, CONFIG_KEYS};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::checkpoint::{AnyModel, Checkpoint};
use crate::dataset::{
    apply_normalizer, fit_normalizer, load_records, make_windows, restrict_features, FeatureSchema, Normalizer,
    SeriesTable, Target, WindowedSample,
};
use crate::error::{Error, Result};
use crate::lasso::{reference_selection, select_for_targets, FeatureSelection};
use crate::metrics::{build_report, rmse, EvaluationReport, RunMetrics, Setting};
use crate::neural::{CellKind, FnnConfig, FnnParams, Network, RecurrentConfig, RecurrentParams};
use crate::optim::{train, LossPoint, TrainConfig};
use crate::plot::write_actual_vs_predicted;
use crate::shallow::{fit_rf, fit_svr, MultiOutput};
use crate::synthetic::{generate_series, SyntheticSpec};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const LOSS_HISTORY_FILE: &str = "loss_history.csv";
pub const LASSO_REPORT_FILE: &str = "lasso_coefficients.csv";
pub const CHECKPOINT_FILE: &str = "model.json";
pub const CELLS_DIR: &str = "cells";

/// One (setting, model, targets) job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSpec {
    pub setting: Setting,
    pub model: ModelKind,
    /// One target in single-output settings, all three in multi-output ones.
    pub targets: Vec<Target>,
}

impl CellSpec {
    pub fn id(&self) -> String {
        let target = if self.setting.is_multi_output() {
            "multi".to_string()
        } else {
            self.targets.iter().map(|t| t.key()).collect::<Vec<_>>().join("+")
        };
        format!("{}_{}_{}", self.setting.code(), self.model, target)
    }
}

/// Cells in run order: settings, then models, then targets.
pub fn cells(config: &ExperimentConfig) -> Vec<CellSpec> {
    let mut out = Vec::new();
    for &setting in &config.settings {
        for &model in &config.models {
            if setting.is_multi_output() {
                out.push(CellSpec {
                    setting,
                    model,
                    targets: Target::ALL.to_vec(),
                });
            } else {
                for &t in &config.targets {
                    out.push(CellSpec {
                        setting,
                        model,
                        targets: vec![t],
                    });
                }
            }
        }
    }
    out
}

/// A cell's resolved inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellPlan {
    pub id: String,
    pub setting: Setting,
    pub model: String,
    pub targets: Vec<Target>,
    /// Schema columns fed to the model at every step, ascending.
    pub columns: Vec<usize>,
    pub features: Vec<String>,
    /// Positions of the targets within `columns`.
    pub target_positions: Vec<usize>,
    /// Schema columns of the targets.
    pub target_columns: Vec<usize>,
    pub per_step_width: usize,
    pub flattened_width: usize,
}

pub fn plan_cell(
    spec: &CellSpec,
    schema: &FeatureSchema,
    selection: Option<&FeatureSelection>,
    tau: usize,
) -> Result<CellPlan> {
    let target_columns = spec
        .targets
        .iter()
        .map(|&t| {
            schema.target_index(t).ok_or_else(|| Error::MissingColumn {
                column: t.feature_name().to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<usize> = match (spec.setting, selection) {
        (Setting::SingleWithoutLasso | Setting::MultiWithoutLasso, _) => (0..schema.len()).collect(),
        (Setting::SingleWithLasso, Some(sel)) => sel
            .for_target(spec.targets[0])
            .ok_or_else(|| Error::Config(format!("no lasso selection for {}", spec.targets[0])))?
            .input_columns(),
        (Setting::MultiWithLasso, Some(sel)) => sel.union.clone(),
        (_, None) => return Err(Error::Config(format!("{} needs a lasso selection", spec.setting.label()))),
    };
    let target_positions = target_columns
        .iter()
        .map(|c| {
            columns
                .iter()
                .position(|k| k == c)
                .ok_or_else(|| Error::Config(format!("target column {c} is missing from the cell's inputs")))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_step_width = columns.len();
    Ok(CellPlan {
        id: spec.id(),
        setting: spec.setting,
        model: spec.model.to_string(),
        targets: spec.targets.clone(),
        features: columns.iter().map(|&c| schema.names()[c].clone()).collect(),
        columns,
        target_positions,
        target_columns,
        per_step_width,
        flattened_width: per_step_width * tau,
    })
}

/// Data shared by every cell of a run.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub raw: SeriesTable,
    pub normalizer: Normalizer,
    pub normalized: SeriesTable,
    pub selection: Option<FeatureSelection>,
}

pub fn load_series(config: &ExperimentConfig) -> Result<SeriesTable> {
    match &config.data {
        DataSource::Csv(path) => load_records(path, &FeatureSchema::tbm()),
        DataSource::Synthetic => {
            let mut spec = SyntheticSpec::random(
                config.synthetic_features,
                config.synthetic_length,
                config.synthetic_support,
                config.synthetic_seed,
            )?;
            spec.noise_scale = config.synthetic_noise_scale;
            Ok(generate_series(&spec)?.table)
        }
    }
}

pub fn prepare(config: &ExperimentConfig, raw: SeriesTable) -> Result<PreparedData> {
    let split = config.split();
    split.validate(raw.len())?;
    let normalizer = fit_normalizer(&raw, config.effective_normalization(), &split)?;
    let normalized = apply_normalizer(&normalizer, &raw, false)?;
    let selection = if config.settings.iter().any(|s| s.uses_lasso()) {
        Some(match config.lasso_selection {
            SelectionSource::Fitted => select_for_targets(
                &normalized,
                config.train_end,
                &config.lambda_setting(),
                config.lasso_threshold,
            )?,
            SelectionSource::Reference => reference_selection(raw.schema())?,
        })
    } else {
        None
    };
    Ok(PreparedData {
        raw,
        normalizer,
        normalized,
        selection,
    })
}

/// Test-set output of one cell, in the reported space.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPredictions {
    /// Zero-based row index of each forecast target.
    pub target_rows: Vec<usize>,
    /// `actual[k][i]`: output `k`, test window `i`.
    pub actual: Vec<Vec<f64>>,
    pub predicted: Vec<Vec<f64>>,
    pub persistence: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CellRun {
    pub plan: CellPlan,
    pub metrics: Vec<RunMetrics>,
    pub persistence_rmse: Vec<f64>,
    pub predictions: CellPredictions,
    pub history: Vec<LossPoint>,
    pub n_train: usize,
    pub n_test: usize,
    pub model: AnyModel,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub spec: CellSpec,
    pub plan: Option<CellPlan>,
    pub result: std::result::Result<CellRun, String>,
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub cells: Vec<CellOutcome>,
    pub report: Option<EvaluationReport>,
    pub out_dir: PathBuf,
}

impl ExperimentOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.cells.iter().all(|c| c.result.is_ok())
    }

    pub fn failures(&self) -> Vec<(&str, &str)> {
        self.cells
            .iter()
            .filter_map(|c| {
                c.result
                    .as_ref()
                    .err()
                    .map(|e| (c.plan.as_ref().map_or("?", |p| p.id.as_str()), e.as_str()))
            })
            .collect()
    }
}

fn training_mse(model: &AnyModel, samples: &[WindowedSample]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        let out = model.predict(&s.inputs)?;
        total += out.iter().zip(&s.target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
    }
    Ok(total / samples.len() as f64)
}

/// Initializes and trains the cell's model on `train`.
pub fn fit_model(
    config: &ExperimentConfig,
    plan: &CellPlan,
    model: ModelKind,
    train_set: &[WindowedSample],
) -> Result<(AnyModel, Vec<LossPoint>)> {
    let outputs = plan.targets.len();
    let bias = config.effective_bias();
    let train_config = |budget| TrainConfig {
        budget,
        seed: config.seed,
        eval_every: config.eval_every,
        clip: config.clip,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match model {
        ModelKind::Fnn => {
            let mut cfg = FnnConfig::standard(plan.flattened_width, outputs, bias);
            cfg.hidden = vec![config.hidden; 2];
            let net = Network::Fnn(FnnParams::init(cfg, &mut rng));
            let out = train(net, train_set, &train_config(config.fnn_budget), config.optimizer(model))?;
            Ok((AnyModel::Network(out.network), out.history))
        }
        ModelKind::Rnn | ModelKind::Lstm | ModelKind::Gru => {
            let kind = match model {
                ModelKind::Rnn => CellKind::Rnn,
                ModelKind::Lstm => CellKind::Lstm,
                _ => CellKind::Gru,
            };
            let mut cfg = RecurrentConfig::standard(kind, plan.per_step_width, outputs, bias);
            cfg.hidden = config.hidden;
            cfg.head = vec![config.hidden; 2];
            (cfg.head_activation, cfg.output_activation) = config.recurrent_activations();
            let net = Network::Recurrent(RecurrentParams::init(cfg, &mut rng));
            let out = train(
                net,
                train_set,
                &train_config(config.recurrent_budget),
                config.optimizer(model),
            )?;
            Ok((AnyModel::Network(out.network), out.history))
        }
        ModelKind::Svr => {
            let params = config.svr_params();
            let m = AnyModel::Svr(MultiOutput::fit(train_set, |x, y| fit_svr(x, y, &params))?);
            let mse = training_mse(&m, train_set)?;
            Ok((m, vec![LossPoint { update: 0, train_mse: mse }]))
        }
        ModelKind::Rf => {
            let params = config.forest_params();
            let m = AnyModel::Rf(MultiOutput::fit(train_set, |x, y| fit_rf(x, y, &params))?);
            let mse = training_mse(&m, train_set)?;
            Ok((m, vec![LossPoint { update: 0, train_mse: mse }]))
        }
    }
}

/// Runs one cell in memory.
pub fn run_cell(config: &ExperimentConfig, data: &PreparedData, plan: &CellPlan, model: ModelKind) -> Result<CellRun> {
    debug_assert_eq!(plan.flattened_width, plan.per_step_width * config.tau);
    log::info!(
        "cell {}: per-step input width {}, flattened input width {}",
        plan.id,
        plan.per_step_width,
        plan.flattened_width
    );
    let series = restrict_features(&data.normalized, &plan.columns)?;
    let (train_set, test_set) = make_windows(&series, config.tau, &plan.target_positions, &config.split())?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} training and {} test windows",
            train_set.len(),
            test_set.len()
        )));
    }
    let (fitted, history) = fit_model(config, plan, model, &train_set)?;

    let outputs = plan.targets.len();
    let to_report = |k: usize, v: f64| match config.report_space {
        ReportSpace::Physical => data.normalizer.denormalize_value(plan.target_columns[k], v),
        ReportSpace::Normalized => v,
    };
    let mut predictions = CellPredictions {
        target_rows: test_set.iter().map(WindowedSample::target_row).collect(),
        actual: vec![Vec::with_capacity(test_set.len()); outputs],
        predicted: vec![Vec::with_capacity(test_set.len()); outputs],
        persistence: vec![Vec::with_capacity(test_set.len()); outputs],
    };
    for w in &test_set {
        let out = fitted.predict(&w.inputs)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(plan.id.clone(), "non-finite forecast"));
        }
        let last = w.inputs.row(w.inputs.rows() - 1);
        for k in 0..outputs {
            predictions.actual[k].push(to_report(k, w.target[k]));
            predictions.predicted[k].push(to_report(k, out[k]));
            predictions.persistence[k].push(to_report(k, last[plan.target_positions[k]]));
        }
    }

    let mut metrics = Vec::with_capacity(outputs);
    let mut persistence_rmse = Vec::with_capacity(outputs);
    for (k, &target) in plan.targets.iter().enumerate() {
        metrics.push(RunMetrics::evaluate(
            target,
            &plan.model,
            plan.setting,
            &predictions.predicted[k],
            &predictions.actual[k],
        )?);
        persistence_rmse.push(rmse(&predictions.persistence[k], &predictions.actual[k])?);
    }
    Ok(CellRun {
        plan: plan.clone(),
        metrics,
        persistence_rmse,
        predictions,
        history,
        n_train: train_set.len(),
        n_test: test_set.len(),
        model: fitted,
    })
}

fn write_predictions(path: &Path, plan: &CellPlan, p: &CellPredictions) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["index".to_string(), "target_row".to_string()];
    for t in &plan.targets {
        header.push(format!("{}_actual", t.key()));
        header.push(format!("{}_predicted", t.key()));
    }
    w.write_record(&header)?;
    for i in 0..p.target_rows.len() {
        let mut rec = vec![i.to_string(), p.target_rows[i].to_string()];
        for k in 0..plan.targets.len() {
            rec.push(p.actual[k][i].to_string());
            rec.push(p.predicted[k][i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_history(path: &Path, history: &[LossPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["update", "train_mse"])?;
    for h in history {
        w.write_record([h.update.to_string(), h.train_mse.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_cell_outputs(config: &ExperimentConfig, data: &PreparedData, dir: &Path, run: &CellRun) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_predictions(&dir.join(PREDICTIONS_FILE), &run.plan, &run.predictions)?;
    write_history(&dir.join(LOSS_HISTORY_FILE), &run.history)?;
    if config.plots {
        for (k, t) in run.plan.targets.iter().enumerate() {
            let title = format!("{} | {} | {}", t.feature_name(), run.plan.model, run.plan.setting.label());
            write_actual_vs_predicted(
                &dir.join(format!("{}.svg", t.key())),
                &title,
                &run.predictions.actual[k],
                &run.predictions.predicted[k],
            )?;
        }
    }
    if config.save_models {
        let ck = Checkpoint::new(
            run.model.clone(),
            config.tau,
            run.plan.features.clone(),
            run.plan.targets.clone(),
            run.plan.target_positions.clone(),
            Some(data.normalizer.restrict(&run.plan.columns)),
        )?;
        ck.save(&dir.join(CHECKPOINT_FILE))?;
    }
    Ok(())
}

/// Creates `dir` and proves it writable.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Fixed interpretation choices recorded in every manifest.
pub fn interpretation_flags(config: &ExperimentConfig) -> BTreeMap<&'static str, String> {
    let (head, output) = config.recurrent_activations();
    let mut m = BTreeMap::new();
    m.insert("window_target", "window rows t-tau+1..t forecast row t+1; train windows have target row < train_end".into());
    m.insert("test_context", config.test_context.to_string());
    m.insert("normalization_scope", format!("{:?}", config.effective_normalization()));
    m.insert("normalization_zero_range", "constant features map to 0".into());
    m.insert("network_bias", config.effective_bias().to_string());
    m.insert("fnn_activations", "sigmoid hidden and output layers".into());
    m.insert("recurrent_head", format!("two {head} layers, {output} output"));
    m.insert("recurrent_initial_state", "zero".into());
    m.insert("weight_init", "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), seeded".into());
    m.insert("loss", "batch mean of squared error summed over outputs".into());
    m.insert("sgd_sampling", "one window per update, reshuffled every pass".into());
    m.insert("lasso_stage", "training rows only, on normalized data".into());
    m.insert("lasso_design", "x_t without the target column predicts target at t+1".into());
    m.insert("lasso_standardization", "columns standardized, intercept unpenalized".into());
    m.insert(
        "lasso_lambda_rule",
        match (config.lasso_lambda, config.lasso_rule) {
            (Some(l), _) => format!("fixed {l}"),
            (None, crate::lasso::LambdaRule::OneStandardError) => "one standard error on trailing validation".into(),
            (None, crate::lasso::LambdaRule::MinValidation) => "minimum trailing-validation MSE".into(),
        },
    );
    m.insert("lasso_threshold_scale", "standardized coefficients".into());
    m.insert("lasso_selection_source", format!("{:?}", config.lasso_selection));
    m.insert("lasso_feature_set", "retained features plus the target itself; union of both for multi-output".into());
    m.insert("shallow_inputs", "flattened window".into());
    m.insert("shallow_multi_output", "one independent model per output".into());
    m.insert("svr_gamma", render_gamma(config.svr_gamma));
    m.insert("svr_working_set", "maximal violating pair".into());
    m.insert("rf_split", "variance reduction over ceil(d/3) random features; ties to lowest feature then threshold".into());
    m.insert("report_space", format!("{:?}", config.report_space));
    m.insert("mape_guard", format!("actuals with |y| <= {} skipped and counted", crate::metrics::MAPE_GUARD));
    m.insert("gain_metric", "RMSE".into());
    m.insert("multi_output_target_flag", "ignored; multi-output cells forecast all three targets".into());
    m
}

fn render_gamma(g: Option<f64>) -> String {
    g.map_or_else(|| "1/(d*Var(X))".into(), |v| v.to_string())
}

fn selection_json(sel: &FeatureSelection, schema: &FeatureSchema) -> Value {
    let names = |idx: &[usize]| idx.iter().map(|&i| schema.names()[i].clone()).collect::<Vec<_>>();
    json!({
        "threshold": sel.threshold,
        "per_target": sel.per_target.iter().map(|s| json!({
            "target": s.target.key(),
            "lambda": s.lambda,
            "retained": names(&s.indices),
            "inputs": names(&s.input_columns()),
        })).collect::<Vec<_>>(),
        "union": names(&sel.union),
    })
}

fn manifest(config: &ExperimentConfig, data: &PreparedData, outcomes: &[CellOutcome]) -> Value {
    let config_map: serde_json::Map<String, Value> = config
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let cells: Vec<Value> = outcomes
        .iter()
        .map(|c| {
            let mut v = json!({
                "id": c.spec.id(),
                "setting": c.spec.setting.code(),
                "model": c.spec.model.name(),
                "targets": c.spec.targets.iter().map(|t| t.key()).collect::<Vec<_>>(),
                "status": if c.result.is_ok() { "ok" } else { "failed" },
            });
            if let Some(p) = &c.plan {
                v["per_step_width"] = json!(p.per_step_width);
                v["flattened_width"] = json!(p.flattened_width);
                v["features"] = json!(p.features);
            }
            match &c.result {
                Ok(run) => {
                    v["n_train"] = json!(run.n_train);
                    v["n_test"] = json!(run.n_test);
                    v["updates"] = json!(run.history.last().map_or(0, |h| h.update));
                    v["rmse"] = json!(run.metrics.iter().map(|m| m.rmse).collect::<Vec<_>>());
                    v["persistence_rmse"] = json!(run.persistence_rmse);
                }
                Err(e) => v["error"] = json!(e),
            }
            v
        })
        .collect();
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_map,
        "interpretation": interpretation_flags(config),
        "data": {
            "rows": data.raw.len(),
            "features": data.raw.width(),
            "normalization": {
                "scope": format!("{:?}", data.normalizer.scope),
            },
        },
        "lasso": data.selection.as_ref().map(|s| selection_json(s, data.raw.schema())),
        "cells": cells,
    })
}

/// Runs every cell of `config` and writes results, per-cell outputs and the
/// manifest under `config.out`. Cell failures are recorded, not returned;
/// configuration, data and I/O problems before the cells start are errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let out_dir = config.out.clone();
    ensure_writable(&out_dir)?;

    let raw = load_series(config)?;
    let data = prepare(config, raw)?;
    let specs = cells(config);
    let schema = data.raw.schema().clone();

    let mut plans = Vec::with_capacity(specs.len());
    for spec in &specs {
        plans.push(plan_cell(spec, &schema, data.selection.as_ref(), config.tau)?);
    }

    if let Some(sel) = &data.selection {
        let path = out_dir.join(LASSO_REPORT_FILE);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        sel.write_report(file)?;
    }

    let slots: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; specs.len()]);
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= specs.len() {
            break;
        }
        let (spec, plan) = (&specs[i], &plans[i]);
        let dir = out_dir.join(CELLS_DIR).join(&plan.id);
        let result = run_cell(config, &data, plan, spec.model)
            .and_then(|run| write_cell_outputs(config, &data, &dir, &run).map(|_| run))
            .map_err(|e| {
                log::error!("cell {} failed: {e}", plan.id);
                e.to_string()
            });
        slots.lock().expect("cell slots")[i] = Some(CellOutcome {
            spec: spec.clone(),
            plan: Some(plan.clone()),
            result,
            dir,
        });
    };
    let workers = config.workers.min(specs.len()).max(1);
    if workers == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(worker);
            }
        });
    }
    let outcomes: Vec<CellOutcome> = slots
        .into_inner()
        .expect("cell slots")
        .into_iter()
        .map(|o| o.expect("every cell ran"))
        .collect();

    let runs: Vec<RunMetrics> = outcomes
        .iter()
        .filter_map(|c| c.result.as_ref().ok())
        .flat_map(|r| r.metrics.iter().cloned())
        .collect();
    let report = if runs.is_empty() {
        EvaluationReport::default().write_csv(&out_dir.join(RESULTS_FILE))?;
        None
    } else {
        let report = build_report(&runs)?;
        report.write_csv(&out_dir.join(RESULTS_FILE))?;
        Some(report)
    };

    let manifest_path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest(config, &data, &outcomes))
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;

    Ok(ExperimentOutcome {
        cells: outcomes,
        report,
        out_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::reference_selection;

    #[test]
    fn cell_expansion() {
        let mut c = ExperimentConfig::default();
        c.settings = vec![Setting::SingleWithoutLasso, Setting::MultiWithLasso];
        c.models = vec![ModelKind::Rf, ModelKind::Gru];
        let cells = cells(&c);
        assert_eq!(cells.len(), 2 * 3 + 2);
        assert_eq!(cells[0].id(), "swol_rf_torque");
        assert_eq!(cells.last().unwrap().id(), "mwl_gru_multi");
        assert_eq!(cells.last().unwrap().targets.len(), 3);
    }

    #[test]
    fn reference_plans_have_expected_widths() {
        let schema = FeatureSchema::tbm();
        let sel = reference_selection(&schema).unwrap();
        let plan = |setting, targets: Vec<Target>| {
            plan_cell(
                &CellSpec {
                    setting,
                    model: ModelKind::Fnn,
                    targets,
                },
                &schema,
                Some(&sel),
                5,
            )
            .unwrap()
        };
        let full = plan(Setting::SingleWithoutLasso, vec![Target::Torque]);
        assert_eq!((full.per_step_width, full.flattened_width), (44, 220));
        let t = plan(Setting::SingleWithLasso, vec![Target::Torque]);
        assert_eq!((t.per_step_width, t.flattened_width), (6, 30));
        let a = plan(Setting::SingleWithLasso, vec![Target::AdvanceRate]);
        assert_eq!((a.per_step_width, a.flattened_width), (7, 35));
        let th = plan(Setting::SingleWithLasso, vec![Target::Thrust]);
        assert_eq!((th.per_step_width, th.flattened_width), (7, 35));
        let m = plan(Setting::MultiWithLasso, Target::ALL.to_vec());
        assert_eq!((m.per_step_width, m.flattened_width), (18, 90));
        for p in [&t, &a, &th, &m] {
            for (k, &pos) in p.target_positions.iter().enumerate() {
                assert_eq!(p.columns[pos], p.target_columns[k]);
            }
        }
    }

    #[test]
    fn lasso_setting_without_selection_fails() {
        let schema = FeatureSchema::tbm();
        let spec = CellSpec {
            setting: Setting::SingleWithLasso,
            model: ModelKind::Rf,
            targets: vec![Target::Thrust],
        };
        assert!(matches!(plan_cell(&spec, &schema, None, 5), Err(Error::Config(_))));
    }
}
