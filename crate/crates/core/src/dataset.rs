//! Loading, normalizing and windowing of multivariate operational series.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sensor channels recorded by the machine, in canonical column order.
pub const TBM_FEATURES: [&str; 44] = [
    "Temperature of oil tank (°C)",
    "Temperature of gear oil (°C)",
    "Rotation speed of cutter(r/min)",
    "Cutter power (kw)",
    "Propelling pressure (bar)",
    "Propelling pressure of A group (bar)",
    "Propelling pressure of B group (bar)",
    "Propelling pressure of C group (bar)",
    "Propelling pressure of D group (bar)",
    "Pressure of equipment bridge (bar)",
    "Pressure of articulation system (bar)",
    "Pressure of Shield tail seal at top right front (bar)",
    "Pressure of Shield tail seal at right front (bar)",
    "Pressure of Shield tail seal at bottom left front (bar)",
    "Pressure of Shield tail seal at top right back (bar)",
    "Pressure of Shield tail seal at right back (bar)",
    "Pressure of Shield tail seal at bottom left back (bar)",
    "Pressure of Shield tail seal at left front (bar)",
    "Pressure of Shield tail seal at top left front (bar)",
    "Pressure of Shield tail seal at left back (bar)",
    "Pressure of Shield tail seal at top left back (bar)",
    "Pressure of Shield tail seal at bottom right back (bar)",
    "Rolling angle (°)",
    "Pressure of screw pump at back (bar)",
    "Pressure of chamber at top left (bar)",
    "Pressure of chamber at bottom left (bar)",
    "Pressure of chamber at bottom right (bar)",
    "Bentonite pressure (bar)",
    "Temperature of screw conveyor (°C)",
    "Pitch angle (°)",
    "Thrust of cutterhead (kN)",
    "Advance rate (mm/min)",
    "Torque of cutterhead (kNm)",
    "Displacement of A group of thrust cylinders (mm)",
    "Displacement of B group of thrust cylinders (mm)",
    "Displacement of C group of thrust cylinders (mm)",
    "Displacement of D group of thrust cylinders (mm)",
    "Displacement of articulated system at top right (mm)",
    "Displacement of articulated system at bottom left (mm)",
    "Displacement of articulated system at top left (mm)",
    "Displacement of articulated system at bottom right (mm)",
    "Bentonite pressure of shield shell (bar)",
    "Pressure of screw conveyor at front (bar)",
    "Pressure of screw pump (bar)",
];

/// Optional leading column carrying a monotone time index.
pub const TIMESTAMP_COLUMN: &str = "timestamp";

/// The three load parameters being forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Torque,
    AdvanceRate,
    Thrust,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Torque, Target::AdvanceRate, Target::Thrust];

    pub fn feature_name(self) -> &'static str {
        match self {
            Target::Torque => "Torque of cutterhead (kNm)",
            Target::AdvanceRate => "Advance rate (mm/min)",
            Target::Thrust => "Thrust of cutterhead (kN)",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Target::Torque => "torque",
            Target::AdvanceRate => "advance_rate",
            Target::Thrust => "thrust",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torque" => Ok(Target::Torque),
            "advance_rate" => Ok(Target::AdvanceRate),
            "thrust" => Ok(Target::Thrust),
            other => Err(Error::Config(format!("unknown target {other:?}"))),
        }
    }
}

/// Ordered feature labels plus the positions of the forecast targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    names: Vec<String>,
    targets: Vec<(Target, usize)>,
}

impl FeatureSchema {
    pub fn new(names: Vec<String>, targets: Vec<(Target, usize)>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Schema("schema has no features".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature {name:?}")));
            }
        }
        let mut seen_idx = HashSet::new();
        let mut seen_target = HashSet::new();
        for &(target, idx) in &targets {
            if idx >= names.len() {
                return Err(Error::Index {
                    index: idx,
                    len: names.len(),
                });
            }
            if !seen_idx.insert(idx) || !seen_target.insert(target) {
                return Err(Error::Schema(format!(
                    "target {target} or column {idx} assigned twice"
                )));
            }
        }
        Ok(Self { names, targets })
    }

    /// The 44-channel machine schema with torque, advance rate and thrust as
    /// targets.
    pub fn tbm() -> Self {
        let names: Vec<String> = TBM_FEATURES.iter().map(|s| s.to_string()).collect();
        let targets = Target::ALL
            .iter()
            .map(|&t| {
                let idx = TBM_FEATURES
                    .iter()
                    .position(|n| *n == t.feature_name())
                    .expect("target present in feature table");
                (t, idx)
            })
            .collect();
        Self { names, targets }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `(target, column)` pairs in target order.
    pub fn targets(&self) -> &[(Target, usize)] {
        &self.targets
    }

    pub fn target_indices(&self) -> Vec<usize> {
        self.targets.iter().map(|&(_, i)| i).collect()
    }

    pub fn target_index(&self, target: Target) -> Option<usize> {
        self.targets
            .iter()
            .find(|&&(t, _)| t == target)
            .map(|&(_, i)| i)
    }

    /// Sub-schema over `keep` (in that order). Targets not kept are dropped.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Index {
                index: 0,
                len: 0,
            });
        }
        for &k in keep {
            if k >= self.names.len() {
                return Err(Error::Index {
                    index: k,
                    len: self.names.len(),
                });
            }
        }
        let names = keep.iter().map(|&k| self.names[k].clone()).collect();
        let targets = self
            .targets
            .iter()
            .filter_map(|&(t, idx)| keep.iter().position(|&k| k == idx).map(|p| (t, p)))
            .collect();
        Self::new(names, targets)
    }
}

/// A time-ordered `T × I` table of finite readings.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    values: Matrix,
    timestamps: Option<Vec<f64>>,
    schema: FeatureSchema,
}

impl SeriesTable {
    pub fn new(values: Matrix, schema: FeatureSchema) -> Result<Self> {
        if values.cols() != schema.len() {
            return Err(Error::Dimension(format!(
                "{} columns for a {}-feature schema",
                values.cols(),
                schema.len()
            )));
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos / values.cols(), pos % values.cols());
            return Err(Error::Parse {
                row,
                column: schema.names()[col].clone(),
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            values,
            timestamps: None,
            schema,
        })
    }

    pub fn with_timestamps(mut self, timestamps: Vec<f64>) -> Result<Self> {
        if timestamps.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} timestamps for {} rows",
                timestamps.len(),
                self.len()
            )));
        }
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Schema("timestamps are not strictly increasing".into()));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = Vec::with_capacity(self.width() + 1);
        if self.timestamps.is_some() {
            header.push(TIMESTAMP_COLUMN);
        }
        header.extend(self.schema.names().iter().map(String::as_str));
        writer.write_record(&header)?;
        for r in 0..self.len() {
            let mut record: Vec<String> = Vec::with_capacity(header.len());
            if let Some(ts) = &self.timestamps {
                record.push(ts[r].to_string());
            }
            record.extend(self.values.row(r).iter().map(|v| v.to_string()));
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Reads a headered CSV and reorders its columns into `schema` order.
/// Extra columns are ignored; a `timestamp` column, if present, becomes the
/// time index.
pub fn load_records(path: &Path, schema: &FeatureSchema) -> Result<SeriesTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers()?.clone();
    if header.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no header", path.display())));
    }
    let mut positions = Vec::with_capacity(schema.len());
    for name in schema.names() {
        let pos = header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.clone(),
            })?;
        positions.push(pos);
    }
    let ts_pos = header.iter().position(|h| h.trim() == TIMESTAMP_COLUMN);

    let mut data = Vec::new();
    let mut timestamps = Vec::new();
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (&pos, name) in positions.iter().zip(schema.names()) {
            data.push(parse_cell(record.get(pos), row, name)?);
        }
        if let Some(p) = ts_pos {
            timestamps.push(parse_cell(record.get(p), row, TIMESTAMP_COLUMN)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyInput(format!("{} has no data rows", path.display())));
    }
    log::debug!("loaded {rows} rows x {} features from {}", schema.len(), path.display());
    let table = SeriesTable::new(Matrix::from_vec(rows, schema.len(), data)?, schema.clone())?;
    match ts_pos {
        Some(_) => table.with_timestamps(timestamps),
        None => Ok(table),
    }
}

fn parse_cell(cell: Option<&str>, row: usize, column: &str) -> Result<f64> {
    let parse_err = |message: String| Error::Parse {
        row,
        column: column.to_string(),
        message,
    };
    let raw = cell.ok_or_else(|| parse_err("missing cell".into()))?.trim();
    let value: f64 = raw
        .parse()
        .map_err(|_| parse_err(format!("not a number: {raw:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(format!("non-finite value {raw:?}")));
    }
    Ok(value)
}

/// Contiguous train/test split of the first `total` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_end: usize,
    pub total: usize,
    /// Test windows may draw input rows from the tail of the training span.
    pub context_across_boundary: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_end: 2500,
            total: 3000,
            context_across_boundary: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.train_end == 0 || self.train_end >= self.total {
            return Err(Error::Config(format!(
                "split requires 0 < train_end ({}) < total ({})",
                self.train_end, self.total
            )));
        }
        if self.total > series_len {
            return Err(Error::InsufficientData(format!(
                "split needs {} rows, series has {series_len}",
                self.total
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    TrainOnly,
    WholeSeries,
}

impl FromStr for FitScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train_only" => Ok(FitScope::TrainOnly),
            "whole_series" => Ok(FitScope::WholeSeries),
            other => Err(Error::Config(format!("unknown normalization scope {other:?}"))),
        }
    }
}

/// Per-feature min/range scaling onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    /// `max - min`, equal to the largest pairwise absolute difference.
    pub range: Vec<f64>,
    pub scope: FitScope,
    names: Vec<String>,
}

impl Normalizer {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn normalize_value(&self, feature: usize, x: f64) -> f64 {
        let range = self.range[feature];
        if range > 0.0 {
            (x - self.min[feature]) / range
        } else {
            0.0
        }
    }

    pub fn denormalize_value(&self, feature: usize, x: f64) -> f64 {
        let range = self.range[feature];
        if range > 0.0 {
            x * range + self.min[feature]
        } else {
            self.min[feature]
        }
    }

    /// Statistics for the columns `keep`, in that order.
    pub fn restrict(&self, keep: &[usize]) -> Normalizer {
        Normalizer {
            min: keep.iter().map(|&k| self.min[k]).collect(),
            range: keep.iter().map(|&k| self.range[k]).collect(),
            scope: self.scope,
            names: keep.iter().map(|&k| self.names[k].clone()).collect(),
        }
    }
}

pub fn fit_normalizer(series: &SeriesTable, scope: FitScope, split: &SplitSpec) -> Result<Normalizer> {
    if series.is_empty() {
        return Err(Error::EmptyInput("cannot fit a normalizer on an empty series".into()));
    }
    let rows = match scope {
        FitScope::WholeSeries => series.len(),
        FitScope::TrainOnly => {
            split.validate(series.len())?;
            split.train_end
        }
    };
    let width = series.width();
    let mut min = vec![f64::INFINITY; width];
    let mut max = vec![f64::NEG_INFINITY; width];
    for r in 0..rows {
        for (c, &v) in series.values().row(r).iter().enumerate() {
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    let range = min.iter().zip(&max).map(|(lo, hi)| hi - lo).collect();
    Ok(Normalizer {
        min,
        range,
        scope,
        names: series.schema().names().to_vec(),
    })
}

pub fn apply_normalizer(normalizer: &Normalizer, series: &SeriesTable, inverse: bool) -> Result<SeriesTable> {
    if normalizer.names() != series.schema().names() {
        return Err(Error::Dimension(format!(
            "normalizer fitted on {} features does not match series schema of {}",
            normalizer.names().len(),
            series.width()
        )));
    }
    let mut values = series.values().clone();
    for r in 0..values.rows() {
        for (c, v) in values.row_mut(r).iter_mut().enumerate() {
            *v = if inverse {
                normalizer.denormalize_value(c, *v)
            } else {
                normalizer.normalize_value(c, *v)
            };
        }
    }
    Ok(SeriesTable {
        values,
        timestamps: series.timestamps.clone(),
        schema: series.schema.clone(),
    })
}

/// `τ` consecutive input rows and the next-step target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    /// Rows `anchor - τ + 1 ..= anchor`, oldest first.
    pub inputs: Matrix,
    /// Target columns of row `anchor + 1`.
    pub target: Vec<f64>,
    /// Zero-based row index of the last input row.
    pub anchor: usize,
}

impl WindowedSample {
    /// Zero-based row index of the target.
    pub fn target_row(&self) -> usize {
        self.anchor + 1
    }

    pub fn flattened(&self) -> &[f64] {
        self.inputs.as_slice()
    }
}

/// Slides a width-`tau` window over the first `split.total` rows. Samples
/// whose target row falls before `split.train_end` form the training set.
pub fn make_windows(
    series: &SeriesTable,
    tau: usize,
    target_indices: &[usize],
    split: &SplitSpec,
) -> Result<(Vec<WindowedSample>, Vec<WindowedSample>)> {
    if tau == 0 {
        return Err(Error::Config("window width must be at least 1".into()));
    }
    let total = split.total.min(series.len());
    if total < tau + 1 {
        return Err(Error::InsufficientData(format!(
            "{total} rows cannot form a window of width {tau} with a target"
        )));
    }
    split.validate(series.len())?;
    for &t in target_indices {
        if t >= series.width() {
            return Err(Error::Index {
                index: t,
                len: series.width(),
            });
        }
    }
    let values = series.values();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for anchor in (tau - 1)..(total - 1) {
        let target_row = anchor + 1;
        let first = anchor + 1 - tau;
        let is_train = target_row < split.train_end;
        if !is_train && !split.context_across_boundary && first < split.train_end {
            continue;
        }
        let sample = WindowedSample {
            inputs: values.slice_rows(first, anchor + 1),
            target: target_indices.iter().map(|&c| values[(target_row, c)]).collect(),
            anchor,
        };
        if is_train {
            train.push(sample);
        } else {
            test.push(sample);
        }
    }
    Ok((train, test))
}

/// Keeps columns `keep` in the given order.
pub fn restrict_features(series: &SeriesTable, keep: &[usize]) -> Result<SeriesTable> {
    let schema = series.schema().restrict(keep)?;
    Ok(SeriesTable {
        values: series.values().select_columns(keep),
        timestamps: series.timestamps.clone(),
        schema,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn one_feature(values: &[f64]) -> SeriesTable {
        let schema = FeatureSchema::new(vec!["x".into()], vec![]).unwrap();
        SeriesTable::new(Matrix::column(values.to_vec()), schema).unwrap()
    }

    fn ramp(rows: usize, cols: usize) -> SeriesTable {
        let names = (0..cols).map(|c| format!("f{c}")).collect();
        let schema = FeatureSchema::new(names, vec![(Target::Torque, 0)]).unwrap();
        let data = (0..rows * cols).map(|k| k as f64).collect();
        SeriesTable::new(Matrix::from_vec(rows, cols, data).unwrap(), schema).unwrap()
    }

    fn whole(len: usize) -> SplitSpec {
        SplitSpec {
            train_end: len - 1,
            total: len,
            context_across_boundary: true,
        }
    }

    #[test]
    fn tbm_schema_is_well_formed() {
        let schema = FeatureSchema::tbm();
        assert_eq!(schema.len(), 44);
        let unique: HashSet<_> = schema.names().iter().collect();
        assert_eq!(unique.len(), 44);
        let idx = schema.target_indices();
        assert_eq!(idx.len(), 3);
        assert_eq!(schema.names()[idx[0]], "Torque of cutterhead (kNm)");
        assert_eq!(schema.names()[idx[1]], "Advance rate (mm/min)");
        assert_eq!(schema.names()[idx[2]], "Thrust of cutterhead (kN)");
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(FeatureSchema::new(vec!["a".into(), "a".into()], vec![]).is_err());
        assert!(FeatureSchema::new(vec!["a".into()], vec![(Target::Torque, 3)]).is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_reorders_columns_and_ignores_extras() {
        let schema = FeatureSchema::new(vec!["b".into(), "a".into()], vec![]).unwrap();
        let f = write_tmp("a,extra,b\n1,9,2\n3,9,4\n");
        let table = load_records(f.path(), &schema).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.values().row(0), &[2.0, 1.0]);
        assert_eq!(table.values().row(1), &[4.0, 3.0]);
    }

    #[test]
    fn load_single_zero_row() {
        let schema = FeatureSchema::tbm();
        let header = schema.names().join(",");
        let zeros = vec!["0"; 44].join(",");
        let f = write_tmp(&format!("{header}\n{zeros}\n"));
        let table = load_records(f.path(), &schema).unwrap();
        assert_eq!(table.len(), 1);
        assert!(table.values().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn load_missing_column_names_it() {
        let schema = FeatureSchema::tbm();
        let header: Vec<_> = schema
            .names()
            .iter()
            .filter(|n| n.as_str() != "Cutter power (kw)")
            .cloned()
            .collect();
        let f = write_tmp(&format!("{}\n{}\n", header.join(","), vec!["1"; 43].join(",")));
        match load_records(f.path(), &schema) {
            Err(Error::MissingColumn { column }) => assert_eq!(column, "Cutter power (kw)"),
            other => panic!("expected missing column, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_bad_cells() {
        let schema = FeatureSchema::new(vec!["a".into(), "b".into()], vec![]).unwrap();
        let f = write_tmp("a,b\n1,2\n3,oops\n");
        match load_records(f.path(), &schema) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_tmp("a,b\n1,inf\n");
        assert!(matches!(load_records(f.path(), &schema), Err(Error::Parse { .. })));
        let f = write_tmp("");
        assert!(matches!(load_records(f.path(), &schema), Err(Error::EmptyInput(_))));
        let f = write_tmp("a,b\n");
        assert!(matches!(load_records(f.path(), &schema), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn timestamps_must_increase() {
        let schema = FeatureSchema::new(vec!["a".into()], vec![]).unwrap();
        let f = write_tmp("timestamp,a\n0,1\n1,2\n");
        let table = load_records(f.path(), &schema).unwrap();
        assert_eq!(table.timestamps(), Some(&[0.0, 1.0][..]));
        let f = write_tmp("timestamp,a\n1,1\n1,2\n");
        assert!(load_records(f.path(), &schema).is_err());
    }

    #[test]
    fn normalizer_statistics() {
        let split = whole(3);
        let n = fit_normalizer(&one_feature(&[0.0, 1.0, 2.0]), FitScope::WholeSeries, &split).unwrap();
        assert_eq!((n.min[0], n.range[0]), (0.0, 2.0));
        assert_eq!(n.normalize_value(0, 1.0), 0.5);

        let n = fit_normalizer(&one_feature(&[5.0, 5.0, 5.0]), FitScope::WholeSeries, &split).unwrap();
        assert_eq!((n.min[0], n.range[0]), (5.0, 0.0));
        let out = apply_normalizer(&n, &one_feature(&[5.0, 5.0, 5.0]), false).unwrap();
        assert!(out.values().as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(n.denormalize_value(0, 0.3), 5.0);

        let n = fit_normalizer(&one_feature(&[-1.0, 3.0]), FitScope::WholeSeries, &whole(2)).unwrap();
        assert_eq!(n.range[0], 4.0);
    }

    #[test]
    fn normalizer_round_trip() {
        let series = one_feature(&[-1.0, 3.0]);
        let n = fit_normalizer(&series, FitScope::WholeSeries, &whole(2)).unwrap();
        let fwd = apply_normalizer(&n, &series, false).unwrap();
        let back = apply_normalizer(&n, &fwd, true).unwrap();
        for (a, b) in back.values().as_slice().iter().zip(series.values().as_slice()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn train_only_scope_ignores_test_rows() {
        let series = one_feature(&[0.0, 1.0, 2.0, 100.0]);
        let split = SplitSpec {
            train_end: 3,
            total: 4,
            context_across_boundary: true,
        };
        let n = fit_normalizer(&series, FitScope::TrainOnly, &split).unwrap();
        assert_eq!(n.range[0], 2.0);
        // test rows may leave [0, 1]
        assert_eq!(n.normalize_value(0, 100.0), 50.0);
    }

    #[test]
    fn normalizer_schema_mismatch() {
        let n = fit_normalizer(&ramp(4, 2), FitScope::WholeSeries, &whole(4)).unwrap();
        assert!(matches!(apply_normalizer(&n, &ramp(4, 3), false), Err(Error::Dimension(_))));
    }

    #[test]
    fn window_counts() {
        let series = ramp(3000, 2);
        let split = SplitSpec::default();
        let (train, test) = make_windows(&series, 5, &[0], &split).unwrap();
        assert_eq!(train.len() + test.len(), 2995);
        assert_eq!((train.len(), test.len()), (2495, 500));

        let no_ctx = SplitSpec {
            context_across_boundary: false,
            ..split
        };
        let (train, test) = make_windows(&series, 5, &[0], &no_ctx).unwrap();
        assert_eq!((train.len(), test.len()), (2495, 495));
        assert!(test.iter().all(|s| s.anchor + 1 - 5 >= 2500));
    }

    #[test]
    fn smallest_series_gives_one_window() {
        let series = ramp(6, 1);
        let split = SplitSpec {
            train_end: 5,
            total: 6,
            context_across_boundary: true,
        };
        let (train, test) = make_windows(&series, 5, &[0], &split).unwrap();
        assert!(train.is_empty());
        assert_eq!(test.len(), 1);
        assert_eq!(test[0].anchor, 4);
        assert_eq!(test[0].target, vec![5.0]);
        assert_eq!(test[0].inputs.col(0), vec![0.0, 1.0, 2.0, 3.0, 4.0]);

        assert!(matches!(
            make_windows(&ramp(5, 1), 5, &[0], &whole(5)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn restrict_keeps_order() {
        let series = ramp(3, 4);
        let same = restrict_features(&series, &[0, 1, 2, 3]).unwrap();
        assert_eq!(same, series);
        let r = restrict_features(&series, &[3, 1]).unwrap();
        assert_eq!(r.width(), 2);
        assert_eq!(r.values().row(0), &[3.0, 1.0]);
        assert_eq!(r.schema().names(), &["f3".to_string(), "f1".to_string()]);
        assert!(r.schema().targets().is_empty());
        assert!(matches!(restrict_features(&series, &[]), Err(Error::Index { .. })));
        assert!(matches!(restrict_features(&series, &[7]), Err(Error::Index { index: 7, .. })));
    }

    #[test]
    fn restrict_torque_selection_to_six_columns() {
        let schema = FeatureSchema::tbm();
        let values = Matrix::zeros(10, 44);
        let series = SeriesTable::new(values, schema.clone()).unwrap();
        let keep: Vec<usize> = [
            "Temperature of oil tank (°C)",
            "Rotation speed of cutter(r/min)",
            "Cutter power (kw)",
            "Pressure of chamber at top left (bar)",
            "Pressure of chamber at bottom right (bar)",
            "Torque of cutterhead (kNm)",
        ]
        .iter()
        .map(|n| schema.index_of(n).unwrap())
        .collect();
        let r = restrict_features(&series, &keep).unwrap();
        assert_eq!((r.len(), r.width()), (10, 6));
        assert_eq!(r.schema().target_index(Target::Torque), Some(5));
        assert_eq!(r.schema().target_index(Target::Thrust), None);
    }
}
