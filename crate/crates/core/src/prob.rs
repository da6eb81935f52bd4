//! Discrete distributions, joint distributions and their ingestion.

use std::path::Path;

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::rng::{stream_rng, Stream};

/// Tolerance on `|sum - 1|` for every probability vector and joint table.
pub const SUM_TOLERANCE: f64 = 1e-9;

fn check_entries(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeMass { index, value });
        }
    }
    Ok(())
}

/// A probability distribution over `{0, .., d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec(Vec<f64>);

impl ProbVec {
    /// Wraps an already-normalized vector.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateInput);
        }
        check_entries(&values)?;
        let sum = pairwise_sum(&values);
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(ProbVec(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ProbVec {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Divides a non-negative vector by its entry sum.
pub fn normalize_l1(raw: &[f64]) -> Result<ProbVec> {
    check_entries(raw)?;
    let sum = pairwise_sum(raw);
    if sum <= 0.0 {
        return Err(Error::DegenerateInput);
    }
    Ok(ProbVec(raw.iter().map(|v| v / sum).collect()))
}

/// Entrywise square root of a distribution; a point on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtVec(Vec<f64>);

impl SqrtVec {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Euclidean distance between two embedded points.
    pub fn distance(&self, other: &SqrtVec) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn sqrt_embed(p: &ProbVec) -> SqrtVec {
    SqrtVec(p.0.iter().map(|v| v.sqrt()).collect())
}

/// The un-normalized column `[p(c, x) : c]` of a joint table for one feature value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    values: Vec<f64>,
    mass: f64,
}

impl FeatureColumn {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_entries(&values)?;
        let mass = pairwise_sum(&values);
        if mass > 1.0 + SUM_TOLERANCE {
            return Err(Error::param("column", format!("mass {mass} exceeds 1")));
        }
        Ok(FeatureColumn { values, mass })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `p(x) = sum_c p(c, x)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn num_labels(&self) -> usize {
        self.values.len()
    }
}

/// A joint distribution `p(c, x)` over labels (rows) and feature values (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    /// Row-major, `labels.len()` rows by `features.len()` columns.
    probs: Vec<f64>,
    labels: Vec<String>,
    features: Vec<String>,
}

impl JointDist {
    pub fn new(labels: Vec<String>, features: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || features.is_empty() {
            return Err(Error::DegenerateInput);
        }
        if probs.len() != labels.len() * features.len() {
            return Err(Error::DimensionMismatch {
                left: probs.len(),
                right: labels.len() * features.len(),
            });
        }
        check_entries(&probs)?;
        let sum = pairwise_sum(&probs);
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(JointDist {
            probs,
            labels,
            features,
        })
    }

    /// Normalizes a table of non-negative weights into a joint distribution.
    pub fn from_weights(labels: Vec<String>, features: Vec<String>, weights: &[f64]) -> Result<Self> {
        let probs = normalize_l1(weights)?.into_inner();
        Self::new(labels, features, probs)
    }

    /// Joint with default ids `c0..` and `x0..`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_labels = rows.len();
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::param("rows", "ragged joint table"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_weights(
            (0..n_labels).map(|c| format!("c{c}")).collect(),
            (0..n_features).map(|x| format!("x{x}")).collect(),
            &flat,
        )
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn get(&self, label: usize, feature: usize) -> f64 {
        self.probs[label * self.features.len() + feature]
    }

    /// Row-major probability table.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn feature_index(&self, id: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f == id)
            .ok_or_else(|| Error::UnknownFeature(id.to_string()))
    }

    /// Column of feature `x` by position.
    pub fn column(&self, x: usize) -> FeatureColumn {
        let values: Vec<f64> = (0..self.num_labels()).map(|c| self.get(c, x)).collect();
        let mass = pairwise_sum(&values);
        FeatureColumn { values, mass }
    }

    pub fn columns(&self) -> Vec<FeatureColumn> {
        (0..self.num_features()).map(|x| self.column(x)).collect()
    }

    /// Marginal `p(x)` for every feature value.
    pub fn feature_marginal(&self) -> Vec<f64> {
        (0..self.num_features()).map(|x| self.column(x).mass).collect()
    }

    /// Marginal `p(c)` for every label.
    pub fn label_marginal(&self) -> Vec<f64> {
        let nf = self.num_features();
        (0..self.num_labels())
            .map(|c| pairwise_sum(&self.probs[c * nf..(c + 1) * nf]))
            .collect()
    }
}

pub fn feature_column(joint: &JointDist, x: &str) -> Result<FeatureColumn> {
    Ok(joint.column(joint.feature_index(x)?))
}

/// `p(c | X = x)` for every label.
pub fn conditional(joint: &JointDist, x: &str) -> Result<ProbVec> {
    column_conditional(&feature_column(joint, x)?).ok_or_else(|| Error::UnsupportedFeature(x.to_string()))
}

/// The column divided by its mass; `None` for a zero-mass column.
pub fn column_conditional(col: &FeatureColumn) -> Option<ProbVec> {
    if col.mass <= 0.0 {
        return None;
    }
    Some(ProbVec(col.values.iter().map(|v| v / col.mass).collect()))
}

fn dirichlet_draw(alpha: f64, d: usize, seed: u64, index: u64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated");
    let mut rng = stream_rng(seed, Stream::Dataset, index, 0);
    loop {
        let draws: Vec<f64> = (0..d).map(|_| gamma.sample(&mut rng)).collect();
        let sum = pairwise_sum(&draws);
        // Very small alpha can underflow every coordinate; redraw from the same stream.
        if sum > 0.0 && sum.is_finite() {
            return draws.iter().map(|v| v / sum).collect();
        }
    }
}

/// `n` i.i.d. symmetric Dirichlet(`alpha`) vectors in dimension `d`.
///
/// Point `i` depends only on `(seed, i)`, so output is identical for any
/// thread count.
pub fn dirichlet_dataset(alpha: f64, d: usize, n: usize, seed: u64) -> Result<Vec<ProbVec>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    if d < 2 {
        return Err(Error::param("d", format!("must be at least 2, got {d}")));
    }
    if n < 1 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| ProbVec(dirichlet_draw(alpha, d, seed, i)))
        .collect())
}

/// A random joint table: the flattened `labels x features` cells are one
/// symmetric Dirichlet(`alpha`) draw.
pub fn dirichlet_joint(alpha: f64, labels: usize, features: usize, seed: u64) -> Result<JointDist> {
    if labels < 1 || features < 1 {
        return Err(Error::param("shape", "joint needs at least one label and one feature"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    let cells = if labels * features == 1 {
        vec![1.0]
    } else {
        dirichlet_draw(alpha, labels * features, seed, u64::MAX)
    };
    JointDist::new(
        (0..labels).map(|c| format!("c{c}")).collect(),
        (0..features).map(|x| format!("x{x}")).collect(),
        cells,
    )
}

fn parse_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_records(path: &Path, delimiter: u8) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let records = reader
        .records()
        .filter(|r| !matches!(r, Ok(rec) if rec.iter().all(str::is_empty)))
        .collect::<Result<Vec<_>, _>>()?;
    if records.is_empty() {
        return Err(parse_err(path, "empty file"));
    }
    Ok(records)
}

fn parse_row(path: &Path, line: usize, cells: impl Iterator<Item = impl AsRef<str>>) -> Result<Vec<f64>> {
    cells
        .enumerate()
        .map(|(col, cell)| {
            let cell = cell.as_ref();
            cell.parse::<f64>().map_err(|_| {
                parse_err(
                    path,
                    format!("line {line}, column {}: non-numeric cell {cell:?}", col + 1),
                )
            })
        })
        .collect()
}

fn is_numeric_row(record: &csv::StringRecord) -> bool {
    record.iter().all(|c| c.parse::<f64>().is_ok())
}

/// Reads one data point per row and L1-normalizes each row.
///
/// A first line that does not parse as numbers is treated as a header.
pub fn load_csv(path: impl AsRef<Path>, delimiter: u8) -> Result<Vec<ProbVec>> {
    let path = path.as_ref();
    let records = read_records(path, delimiter)?;
    let skip = usize::from(!is_numeric_row(&records[0]));
    let width = records
        .get(skip)
        .map(|r| r.len())
        .ok_or_else(|| parse_err(path, "no data rows"))?;
    records
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(i, record)| {
            if record.len() != width {
                return Err(parse_err(
                    path,
                    format!(
                        "line {}: ragged row with {} cells, expected {width}",
                        i + 1,
                        record.len()
                    ),
                ));
            }
            let row = parse_row(path, i + 1, record.iter())?;
            normalize_l1(&row).map_err(|e| parse_err(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Reads a joint table: first row holds feature ids, first column label ids.
/// The whole table is normalized to sum to one.
pub fn load_joint_csv(path: impl AsRef<Path>) -> Result<JointDist> {
    let path = path.as_ref();
    let records = read_records(path, b',')?;
    let header = &records[0];
    if header.len() < 2 {
        return Err(parse_err(path, "joint table needs at least one feature column"));
    }
    let features: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for (i, record) in records.iter().enumerate().skip(1) {
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                format!(
                    "line {}: ragged row with {} cells, expected {}",
                    i + 1,
                    record.len(),
                    header.len()
                ),
            ));
        }
        labels.push(record[0].to_string());
        weights.extend(parse_row(path, i + 1, record.iter().skip(1))?);
    }
    if labels.is_empty() {
        return Err(parse_err(path, "joint table has no label rows"));
    }
    JointDist::from_weights(labels, features, &weights).map_err(|e| parse_err(path, e.to_string()))
}

/// Writes points one per row. `{:?}` on f64 is shortest round-trip, so
/// reading the file back reproduces the values.
pub fn write_csv<W: std::io::Write>(out: W, points: &[ProbVec]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for p in points {
        writer.write_record(p.values().iter().map(|v| format!("{v:?}")))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_joint_csv<W: std::io::Write>(out: W, joint: &JointDist) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(std::iter::once("").chain(joint.features().iter().map(String::as_str)))?;
    for (c, label) in joint.labels().iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..joint.num_features()).map(|x| format!("{:?}", joint.get(c, x))));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
