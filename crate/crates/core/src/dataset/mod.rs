//! Flow datasets: schema, records, CSV ingestion, schema alignment and
//! class-distribution audits.

mod align;
mod csv_io;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use align::align_schemas;
pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
}

/// Column layout shared by every record of a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    feature_names: Vec<String>,
    label_column: String,
    feature_kinds: Vec<FeatureKind>,
}

impl Schema {
    pub fn new(feature_names: Vec<String>, label_column: impl Into<String>) -> Result<Self> {
        let label_column = label_column.into();
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if *name == label_column || !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        let feature_kinds = vec![FeatureKind::Numeric; feature_names.len()];
        Ok(Schema {
            feature_names,
            label_column,
            feature_kinds,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.feature_kinds
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        let name = name.trim();
        self.feature_names.iter().position(|f| f == name)
    }

    pub(crate) fn with_label_column(&self, label_column: &str) -> Schema {
        Schema {
            label_column: label_column.to_string(),
            ..self.clone()
        }
    }
}

/// How a loaded cell was tagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Finite,
    Missing,
    NonFinite,
}

impl CellKind {
    /// Missing cells are stored as NaN and non-finite ones as signed infinity.
    #[inline]
    pub fn of(v: f64) -> CellKind {
        if v.is_nan() {
            CellKind::Missing
        } else if v.is_infinite() {
            CellKind::NonFinite
        } else {
            CellKind::Finite
        }
    }
}

/// One flow: numeric feature values and a class label.
///
/// Missing values are held as NaN and non-finite ones as `±inf`; see
/// [`CellKind`]. Equality is bitwise so tagged cells compare equal to
/// themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowRecord {
    pub values: Vec<f64>,
    pub label: String,
}

impl FlowRecord {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Self {
        FlowRecord {
            values,
            label: label.into(),
        }
    }

    pub fn cell(&self, i: usize) -> CellKind {
        CellKind::of(self.values[i])
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| v.is_infinite())
    }
}

impl PartialEq for FlowRecord {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for FlowRecord {}

impl std::hash::Hash for FlowRecord {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.label.hash(state);
        for v in &self.values {
            v.to_bits().hash(state);
        }
    }
}

/// An immutable table of flow records. Transforms return new datasets.
///
/// Equality compares schema and records; provenance is not part of it.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Schema,
    records: Vec<FlowRecord>,
    provenance: String,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.records == other.records
    }
}

impl Eq for Dataset {}

impl Dataset {
    pub fn new(schema: Schema, records: Vec<FlowRecord>, provenance: impl Into<String>) -> Result<Self> {
        let dim = schema.dim();
        if let Some(bad) = records.iter().find(|r| r.values.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: bad.values.len(),
            });
        }
        Ok(Dataset {
            schema,
            records,
            provenance: provenance.into(),
        })
    }

    /// Builds a dataset from feature names, rows of values and labels.
    pub fn from_rows(
        feature_names: &[&str],
        label_column: &str,
        rows: Vec<(Vec<f64>, String)>,
    ) -> Result<Self> {
        let schema = Schema::new(feature_names.iter().map(|s| s.to_string()).collect(), label_column)?;
        let records = rows.into_iter().map(|(v, l)| FlowRecord::new(v, l)).collect();
        Dataset::new(schema, records, "memory")
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[FlowRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Derives a dataset with the same schema from a subset of records.
    pub(crate) fn derive(&self, records: Vec<FlowRecord>, step: &str) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records,
            provenance: format!("{} | {}", self.provenance, step),
        }
    }

    pub(crate) fn derive_indices(&self, indices: &[usize], step: &str) -> Dataset {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        self.derive(records, step)
    }

    pub(crate) fn with_schema(&self, schema: Schema, records: Vec<FlowRecord>, step: &str) -> Dataset {
        Dataset {
            schema,
            records,
            provenance: format!("{} | {}", self.provenance, step),
        }
    }

    /// Keeps only `names`, in the given order.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.schema
                    .index_of(n.as_ref())
                    .ok_or_else(|| Error::UnknownFeature(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let schema = Schema::new(
            idx.iter().map(|&i| self.schema.feature_names[i].clone()).collect(),
            self.schema.label_column.clone(),
        )?;
        let records = self
            .records
            .iter()
            .map(|r| FlowRecord::new(idx.iter().map(|&i| r.values[i]).collect(), r.label.clone()))
            .collect();
        Ok(self.with_schema(schema, records, &format!("select {} features", idx.len())))
    }

    /// Drops the named features, keeping the rest in schema order.
    pub fn without_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let mut drop = HashSet::new();
        for n in names {
            let i = self
                .schema
                .index_of(n.as_ref())
                .ok_or_else(|| Error::UnknownFeature(n.as_ref().to_string()))?;
            drop.insert(i);
        }
        let keep: Vec<&str> = self
            .schema
            .feature_names
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, n)| n.as_str())
            .collect();
        self.select_features(&keep)
    }

    /// Distinct labels in lexicographic order.
    pub fn labels(&self) -> Vec<String> {
        self.label_counts().into_keys().collect()
    }

    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.label.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Record indices grouped by label, labels in lexicographic order.
    pub(crate) fn indices_by_label(&self) -> Vec<(String, Vec<usize>)> {
        let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in self.records.iter().enumerate() {
            groups.entry(r.label.as_str()).or_default().push(i);
        }
        let mut out: Vec<(String, Vec<usize>)> =
            groups.into_iter().map(|(l, v)| (l.to_string(), v)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

/// Count and share of one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub label: String,
    pub count: usize,
    /// Fraction of the total in `[0, 1]`.
    pub percent: f64,
}

/// Per-label counts sorted by descending count (ties by label).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub classes: Vec<ClassShare>,
}

impl ClassDistribution {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut merged: BTreeMap<String, usize> = BTreeMap::new();
        for (l, c) in counts {
            *merged.entry(l.into()).or_insert(0) += c;
        }
        let total: usize = merged.values().sum();
        let mut classes: Vec<ClassShare> = merged
            .into_iter()
            .map(|(label, count)| ClassShare {
                label,
                count,
                percent: if total > 0 { count as f64 / total as f64 } else { 0.0 },
            })
            .collect();
        classes.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
        ClassDistribution { classes }
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn get(&self, label: &str) -> Option<&ClassShare> {
        self.classes.iter().find(|c| c.label == label)
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

impl fmt::Display for ClassDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.classes.iter().map(|c| c.label.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:<width$}  {:>12}  {:>9}", "class", "rows", "share")?;
        for c in &self.classes {
            writeln!(f, "{:<width$}  {:>12}  {:>8.4}%", c.label, c.count, c.percent * 100.0)?;
        }
        write!(f, "{:<width$}  {:>12}", "total", self.total())
    }
}

pub fn class_distribution(d: &Dataset) -> ClassDistribution {
    ClassDistribution::from_counts(d.label_counts())
}
