//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use tbm_forecast::dataset::{make_windows, FeatureSchema, SplitSpec, Target};
use tbm_forecast::experiment::{cells, plan_cell, run_experiment, ExperimentConfig, ModelKind, PREDICTIONS_FILE};
use tbm_forecast::lasso::{
    fit_lasso, lambda_max, reference_selection, select_for_targets, soft_threshold, LambdaSearch, LambdaSetting,
};
use tbm_forecast::metrics::{mape, perf_gain, rmse, Setting};
use tbm_forecast::neural::{gru_step, lstm_step, rnn_step, CellKind, Parameters, RecurrentConfig, RecurrentParams};
use tbm_forecast::synthetic::{generate_series, SyntheticSpec, DEFAULT_SUPPORT};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn gradient_correctness() -> Check {
    let (inputs, hidden, tau, outputs) = (3, 4, 3, 2);
    let mut r = common::rng(11);
    let samples = common::random_samples(4, tau, inputs, outputs, &mut r);
    let mut worst = Vec::new();
    for net in common::small_networks(inputs, hidden, tau, outputs, 5) {
        worst.push((net.kind_name(), common::max_gradient_error(&net, &samples, 1e-5)));
    }
    let pass = worst.iter().all(|(_, e)| *e < 1e-4);
    let detail = worst
        .iter()
        .map(|(k, e)| format!("{k} {e:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(pass, format!("max relative error: {detail} (bound 1e-4)"))
}

fn lasso_oracle() -> Check {
    const TOL: f64 = 1e-10;
    let kkt_bound = 10.0 * TOL * 30.0;
    let mut r = common::rng(21);
    let mut worst_coef: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    for _ in 0..20 {
        let x = common::random_matrix(30, 5, 1.0, &mut r);
        let truth: Vec<f64> = (0..5).map(|_| r.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..30)
            .map(|i| tbm_forecast::matrix::dot(x.row(i), &truth) + r.random_range(-0.5..0.5))
            .collect();
        let (xs, yc) = common::standardized(&x, &y);
        let lmax = lambda_max(&x, &y).unwrap();
        for frac in [0.01, 0.05, 0.2, 0.5, 0.9] {
            let lambda = frac * lmax;
            let model = fit_lasso(&x, &y, lambda, TOL, 1_000_000).unwrap();
            let oracle = common::proximal_gradient_lasso(&xs, &yc, lambda, 1_000_000);
            for (a, b) in model.beta.iter().zip(&oracle) {
                worst_coef = worst_coef.max((a - b).abs());
            }
            worst_kkt = worst_kkt.max(common::kkt_violation(&xs, &yc, &model.beta, lambda));
        }
    }
    check(
        worst_coef < 1e-5 && worst_kkt <= kkt_bound,
        format!(
            "100 fits: max |cd - ista| {worst_coef:.2e} (bound 1e-5), max KKT violation {worst_kkt:.2e} (bound {kkt_bound:.0e})"
        ),
    )
}

fn lasso_closed_forms() -> Check {
    let mut r = common::rng(31);
    let x = common::random_matrix(30, 5, 1.0, &mut r);
    let y: Vec<f64> = (0..30).map(|i| 0.5 + x.row(i)[0] - 2.0 * x.row(i)[3] + r.random_range(-0.3..0.3)).collect();
    let (ols, ols0) = common::least_squares(&x, &y);
    let m0 = fit_lasso(&x, &y, 0.0, 1e-14, 1_000_000).unwrap();
    let ls_err = m0
        .beta_original_scale
        .iter()
        .zip(&ols)
        .map(|(a, b)| (a - b).abs())
        .fold((m0.intercept_original_scale - ols0).abs(), f64::max);
    let lmax = lambda_max(&x, &y).unwrap();
    let zero = [lmax, 1.5 * lmax]
        .iter()
        .all(|&l| fit_lasso(&x, &y, l, 1e-10, 10_000).unwrap().beta.iter().all(|b| *b == 0.0));
    let st = soft_threshold(2.0, 0.5);
    check(
        ls_err < 1e-6 && zero && st == 1.5,
        format!("lambda=0 vs OLS {ls_err:.2e} (bound 1e-6); lambda>=lambda_max all zero: {zero}; S(2,0.5) = {st}"),
    )
}

fn support_recovery() -> Check {
    let mut recovered = 0;
    let mut misses = Vec::new();
    for seed in 0..20 {
        let spec = SyntheticSpec::random(44, 3000, DEFAULT_SUPPORT, seed).unwrap();
        let g = generate_series(&spec).unwrap();
        let sel = select_for_targets(&g.table, 2500, &LambdaSetting::Validated(LambdaSearch::default()), 1e-3).unwrap();
        let exact = Target::ALL.iter().all(|&t| {
            let mut truth = g.true_support(t).unwrap().columns();
            truth.sort_unstable();
            let mut got = sel.for_target(t).unwrap().indices.clone();
            got.sort_unstable();
            got == truth
        });
        if exact {
            recovered += 1;
        } else {
            misses.push(seed);
        }
    }
    check(
        recovered >= 18,
        format!("exact support on {recovered}/20 seeds (need 18); misses {misses:?}"),
    )
}

fn forecast_skill() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default();
    config.models = vec![ModelKind::Rnn, ModelKind::Lstm, ModelKind::Gru];
    config.settings = vec![Setting::SingleWithoutLasso];
    config.targets = Target::ALL.to_vec();
    config.plots = false;
    config.out = dir.path().to_path_buf();
    let outcome = run_experiment(&config).unwrap();
    let mut pass = outcome.all_succeeded();
    let mut parts = Vec::new();
    for cell in &outcome.cells {
        match &cell.result {
            Ok(run) => {
                for (m, base) in run.metrics.iter().zip(&run.persistence_rmse) {
                    let ratio = m.rmse / base;
                    pass &= ratio <= 0.8;
                    parts.push(format!("{}/{} {ratio:.3}", m.model, m.target.key()));
                }
            }
            Err(e) => parts.push(format!("{}: {e}", cell.spec.id())),
        }
    }
    check(pass, format!("rmse/persistence: {} (bound 0.8)", parts.join(", ")))
}

fn structural_widths() -> Check {
    let schema = FeatureSchema::tbm();
    let sel = reference_selection(&schema).unwrap();
    let mut config = ExperimentConfig::default();
    config.settings = Setting::ALL.to_vec();
    config.models = vec![ModelKind::Gru];
    let mut got = Vec::new();
    for spec in cells(&config) {
        let plan = plan_cell(&spec, &schema, Some(&sel), 5).unwrap();
        got.push((plan.id, plan.flattened_width, plan.per_step_width));
    }
    let expected = [
        ("swol_gru_torque", 220, 44),
        ("swol_gru_advance_rate", 220, 44),
        ("swol_gru_thrust", 220, 44),
        ("swl_gru_torque", 30, 6),
        ("swl_gru_advance_rate", 35, 7),
        ("swl_gru_thrust", 35, 7),
        ("mwol_gru_multi", 220, 44),
        ("mwl_gru_multi", 90, 18),
    ];
    let widths_ok = got.len() == expected.len()
        && got
            .iter()
            .zip(&expected)
            .all(|(g, e)| g.0 == e.0 && g.1 == e.1 && g.2 == e.2);

    let spec = SyntheticSpec::random(44, 3000, DEFAULT_SUPPORT, 0).unwrap();
    let series = generate_series(&spec).unwrap().table;
    let split = SplitSpec {
        train_end: 2500,
        total: 3000,
        context_across_boundary: true,
    };
    let (train, test) = make_windows(&series, 5, &[0], &split).unwrap();
    let windows = train.len() + test.len();
    let summary = got
        .iter()
        .map(|(id, f, s)| format!("{id} {f}/{s}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        widths_ok && windows == 2995,
        format!("{summary}; windows {windows} (expect 2995)"),
    )
}

fn metric_formulas() -> Check {
    let g1 = perf_gain(98.204, 36.510).unwrap();
    let g2 = perf_gain(85.340, 99.354).unwrap();
    let ok1 = (g1 - 62.882).abs() <= 0.001;
    let ok2 = (g2 + 16.421).abs() <= 0.001;
    let r0 = rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    let r1 = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
    let m1 = mape(&[110.0], &[100.0]).unwrap();
    let m0 = mape(&[5.0, 7.0], &[5.0, 7.0]).unwrap();
    let mz = mape(&[1.0, 110.0], &[0.0, 100.0]).unwrap();
    let hand = r0 == 0.0
        && r1 == 12.5f64.sqrt()
        && m1.percent == 10.0
        && m0.percent == 0.0
        && mz.percent == 10.0
        && mz.skipped == 1
        && mz.evaluated == 1;
    check(
        ok1 && ok2 && hand,
        format!(
            "perf_gain(98.204, 36.510) = {g1:.4}% (expect 62.882 +/- 0.001: {}), \
             perf_gain(85.340, 99.354) = {g2:.4}% (expect -16.421: {}), hand cases: {}",
            if ok1 { "ok" } else { "off" },
            if ok2 { "ok" } else { "off" },
            if hand { "ok" } else { "off" }
        ),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let mut config = ExperimentConfig::default();
        config.models = vec![ModelKind::Gru, ModelKind::Rf];
        config.targets = vec![Target::Torque];
        config.recurrent_budget = "3000 updates".parse().unwrap();
        config.plots = false;
        config.seed = 7;
        config.out = dir.path().join(name);
        let outcome = run_experiment(&config).unwrap();
        assert!(outcome.all_succeeded());
        outcome
            .cells
            .iter()
            .map(|c| fs::read(c.dir.join(PREDICTIONS_FILE)).unwrap())
            .collect::<Vec<_>>()
    };
    let a = run("a");
    let b = run("b");
    let identical = a == b && a.iter().all(|f| !f.is_empty());
    check(identical, format!("{} predictions files byte-identical across two runs: {identical}", a.len()))
}

fn boundedness() -> Check {
    let mut r = common::rng(41);
    let (inputs, hidden) = (3, 4);
    let random_params = |kind, r: &mut rand_chacha::ChaCha8Rng| {
        let mut p = RecurrentParams::init(RecurrentConfig::standard(kind, inputs, 1, true), r);
        let cfg = RecurrentConfig {
            hidden,
            ..p.config().clone()
        };
        p = RecurrentParams::init(cfg, r);
        for t in p.tensors_mut() {
            for v in t.as_mut_slice() {
                *v = r.random_range(-3.0..3.0);
            }
        }
        p
    };
    let vec_in = |n: usize, s: f64, r: &mut rand_chacha::ChaCha8Rng| (0..n).map(|_| r.random_range(-s..s)).collect::<Vec<f64>>();
    let mut violations = 0;
    let evaluations = 10_000;
    for i in 0..evaluations {
        let x = vec_in(inputs, 5.0, &mut r);
        let h = vec_in(hidden, 1.0, &mut r);
        match i % 3 {
            0 => {
                let p = random_params(CellKind::Rnn, &mut r);
                let out = rnn_step(&p, &x, &h).unwrap();
                violations += out.iter().filter(|v| !(-1.0..=1.0).contains(*v)).count();
            }
            1 => {
                let p = random_params(CellKind::Gru, &mut r);
                let out = gru_step(&p, &x, &h).unwrap();
                violations += out.iter().filter(|v| !(-1.0..=1.0).contains(*v)).count();
            }
            _ => {
                let p = random_params(CellKind::Lstm, &mut r);
                let c = vec_in(hidden, 5.0, &mut r);
                let (out, _) = lstm_step(&p, &x, &h, &c).unwrap();
                violations += out.iter().filter(|v| !(v.abs() < 1.0)).count();
            }
        }
    }
    let mut zero = RecurrentParams::zeros(RecurrentConfig {
        hidden,
        ..RecurrentConfig::standard(CellKind::Gru, inputs, 1, true)
    });
    for t in zero.tensors_mut() {
        t.fill(0.0);
    }
    let h_prev = vec_in(hidden, 1.0, &mut r);
    let stepped = gru_step(&zero, &vec_in(inputs, 5.0, &mut r), &h_prev).unwrap();
    let half = stepped.iter().zip(&h_prev).all(|(a, b)| *a == 0.5 * b);
    check(
        violations == 0 && half,
        format!("{evaluations} random steps, {violations} out-of-range states; zero-weight GRU step = 0.5*h_prev exactly: {half}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, Duration); 9] = [
        ("gradient correctness", gradient_correctness, Duration::from_secs(10)),
        ("lasso oracle equivalence", lasso_oracle, Duration::from_secs(30)),
        ("lasso closed forms", lasso_closed_forms, Duration::MAX),
        ("support recovery", support_recovery, Duration::from_secs(120)),
        ("forecast skill", forecast_skill, Duration::from_secs(1800)),
        ("structural arithmetic", structural_widths, Duration::MAX),
        ("metric and gain formulas", metric_formulas, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
        ("boundedness invariants", boundedness, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let c = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = c.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if budget == Duration::MAX {
            format!("{:.1}s", elapsed.as_secs_f64())
        } else {
            format!("{:.1}s of {}s", elapsed.as_secs_f64(), budget.as_secs())
        };
        println!("{} {name}: {} [{timing}]", if pass { "PASS" } else { "FAIL" }, c.detail);
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
