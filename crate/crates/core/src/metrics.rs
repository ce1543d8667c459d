//! RMSE, MAPE, performance gain and the per-run results table.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Target;
use crate::error::{Error, Result};

/// Actuals with `|y|` at or below this are skipped by [`mape`].
pub const MAPE_GUARD: f64 = 1e-8;

fn check_lengths(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} actuals",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("no points to evaluate".into()));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    let sq: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mape {
    pub percent: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// `100/n · Σ|ŷ − y|/|y|` over the points with `|y| > MAPE_GUARD`.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<Mape> {
    check_lengths(pred, actual)?;
    let mut sum = 0.0;
    let mut evaluated = 0;
    for (p, a) in pred.iter().zip(actual) {
        if a.abs() > MAPE_GUARD {
            sum += (p - a).abs() / a.abs();
            evaluated += 1;
        }
    }
    if evaluated == 0 {
        return Err(Error::UndefinedMetric("every actual value is zero; MAPE is undefined".into()));
    }
    Ok(Mape {
        percent: 100.0 * sum / evaluated as f64,
        evaluated,
        skipped: pred.len() - evaluated,
    })
}

/// Relative improvement of `improved` over `baseline`, in percent.
pub fn perf_gain(baseline: f64, improved: f64) -> Result<f64> {
    if baseline == 0.0 || !baseline.is_finite() {
        return Err(Error::UndefinedMetric(format!("gain against baseline {baseline}")));
    }
    Ok(100.0 * (baseline - improved) / baseline)
}

/// The four experimental settings: single or multiple output, with or
/// without lasso feature selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "swol")]
    SingleWithoutLasso,
    #[serde(rename = "swl")]
    SingleWithLasso,
    #[serde(rename = "mwol")]
    MultiWithoutLasso,
    #[serde(rename = "mwl")]
    MultiWithLasso,
}

impl Setting {
    pub const ALL: [Setting; 4] = [
        Setting::SingleWithoutLasso,
        Setting::SingleWithLasso,
        Setting::MultiWithoutLasso,
        Setting::MultiWithLasso,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Setting::SingleWithoutLasso => "swol",
            Setting::SingleWithLasso => "swl",
            Setting::MultiWithoutLasso => "mwol",
            Setting::MultiWithLasso => "mwl",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Setting::SingleWithoutLasso => "s.w/o.l",
            Setting::SingleWithLasso => "s.w.l",
            Setting::MultiWithoutLasso => "m.w/o.l",
            Setting::MultiWithLasso => "m.w.l",
        }
    }

    pub fn is_multi_output(self) -> bool {
        matches!(self, Setting::MultiWithoutLasso | Setting::MultiWithLasso)
    }

    pub fn uses_lasso(self) -> bool {
        matches!(self, Setting::SingleWithLasso | Setting::MultiWithLasso)
    }

    /// The same output mode with the lasso stage toggled.
    pub fn counterpart(self) -> Setting {
        match self {
            Setting::SingleWithoutLasso => Setting::SingleWithLasso,
            Setting::SingleWithLasso => Setting::SingleWithoutLasso,
            Setting::MultiWithoutLasso => Setting::MultiWithLasso,
            Setting::MultiWithLasso => Setting::MultiWithoutLasso,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|k| k.code() == s || k.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown setting {s:?} (expected swol, swl, mwol or mwl)")))
    }
}

/// Metrics of one (target, model, setting) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub target: Target,
    pub model: String,
    pub setting: Setting,
    pub rmse: f64,
    pub mape_pct: f64,
    pub n_eval: usize,
    pub n_skipped: usize,
}

impl RunMetrics {
    pub fn evaluate(target: Target, model: &str, setting: Setting, pred: &[f64], actual: &[f64]) -> Result<Self> {
        let r = rmse(pred, actual)?;
        let m = mape(pred, actual)?;
        Ok(Self {
            target,
            model: model.to_string(),
            setting,
            rmse: r,
            mape_pct: m.percent,
            n_eval: m.evaluated,
            n_skipped: m.skipped,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub target: Target,
    pub model: String,
    pub setting: Setting,
    pub rmse: f64,
    pub mape_pct: f64,
    pub n_eval: usize,
    pub n_skipped: usize,
    /// RMSE gain of s.w.l over s.w/o.l for this target and model.
    pub gain_single_pct: Option<f64>,
    /// RMSE gain of m.w.l over m.w/o.l for this target and model.
    pub gain_multi_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
}

fn lookup_rmse(runs: &[RunMetrics], target: Target, model: &str, setting: Setting) -> Option<f64> {
    runs.iter()
        .find(|r| r.target == target && r.model == model && r.setting == setting)
        .map(|r| r.rmse)
}

fn gain_between(runs: &[RunMetrics], target: Target, model: &str, without: Setting, with: Setting) -> Option<f64> {
    let base = lookup_rmse(runs, target, model, without)?;
    let improved = lookup_rmse(runs, target, model, with)?;
    perf_gain(base, improved).ok()
}

/// One row per run, with both gain columns filled wherever the two settings
/// they compare are present for the row's target and model.
pub fn build_report(runs: &[RunMetrics]) -> Result<EvaluationReport> {
    if runs.is_empty() {
        return Err(Error::EmptyInput("no runs to report".into()));
    }
    let rows = runs
        .iter()
        .map(|r| ReportRow {
            target: r.target,
            model: r.model.clone(),
            setting: r.setting,
            rmse: r.rmse,
            mape_pct: r.mape_pct,
            n_eval: r.n_eval,
            n_skipped: r.n_skipped,
            gain_single_pct: gain_between(
                runs,
                r.target,
                &r.model,
                Setting::SingleWithoutLasso,
                Setting::SingleWithLasso,
            ),
            gain_multi_pct: gain_between(
                runs,
                r.target,
                &r.model,
                Setting::MultiWithoutLasso,
                Setting::MultiWithLasso,
            ),
        })
        .collect();
    Ok(EvaluationReport { rows })
}

impl EvaluationReport {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "target",
                "model",
                "setting",
                "rmse",
                "mape_pct",
                "n_eval",
                "n_skipped",
                "gain_single_pct",
                "gain_multi_pct",
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }
}
