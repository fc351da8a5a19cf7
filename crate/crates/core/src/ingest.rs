//! CSV ingestion: schema-driven typing, one-hot encoding of categoricals,
//! min-max normalization with recorded bounds, and the attribute partition
//! feeding model construction.
//!
//! The bank-telemarketing helper encodes the UCI `bank-additional` layout:
//! rows containing the literal `unknown` in any used column are dropped,
//! categoricals are one-hot encoded with deterministic (sorted) category
//! order, and numerics are min-max normalized to [0, 1].

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Binary,
    Categorical,
}

/// One raw CSV column the ingest should use.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Declarative ingestion options, loadable from a JSON schema file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaSpec {
    pub columns: Vec<ColumnSpec>,
    pub label: String,
    /// Label value mapped to 1; everything else maps to 0.
    pub positive_label: String,
    /// Raw column names fed to the additive component.
    pub linear: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Drop rows containing the literal cell `unknown` in any used column.
    #[serde(default)]
    pub drop_unknown: bool,
}

fn default_delimiter() -> char {
    ','
}

impl SchemaSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: SchemaSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::schema("schema declares no columns"));
        }
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::schema(format!("duplicate column '{}'", c.name)));
            }
            if c.name == self.label {
                return Err(Error::schema("label column also listed as a feature"));
            }
        }
        if self.linear.is_empty() {
            return Err(Error::schema(
                "linear attribute list is empty; the model requires an interpretable part",
            ));
        }
        for name in &self.linear {
            if !self.columns.iter().any(|c| &c.name == name) {
                return Err(Error::schema(format!(
                    "linear attribute '{name}' is not a declared column"
                )));
            }
        }
        Ok(())
    }
}

/// Post-encoding schema: one entry per encoded attribute column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    /// Encoded column names; categoricals appear as `column=value`.
    pub attribute_names: Vec<String>,
    /// Raw (min, max) per encoded column, for inverse mapping. Binary and
    /// one-hot columns record (0, 1).
    pub bounds: Vec<(f64, f64)>,
    /// Indices of encoded columns in the linear component.
    pub linear_attrs: Vec<usize>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    /// Row-major attribute values, all in [0, 1].
    pub rows: Vec<Vec<f64>>,
    /// Labels in {0, 1}.
    pub labels: Vec<f64>,
    pub schema: DatasetSchema,
    /// Raw rows dropped during ingestion (e.g. `unknown` cells).
    pub dropped_rows: usize,
}

fn cell_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Ingest {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn parse_binary(cell: &str) -> Option<f64> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "yes" | "true" | "1" => Some(1.0),
        "no" | "false" | "0" => Some(0.0),
        _ => None,
    }
}

/// Load and encode a delimited file per the schema.
pub fn load_csv(path: &Path, spec: &SchemaSpec) -> Result<TabularDataset> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .from_path(path)
        .map_err(Error::from)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(Error::from)?
        .iter()
        .map(|h| h.trim().trim_matches('"').to_string())
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(format!("column '{name}' missing from header")))
    };
    let label_idx = col_index(&spec.label)?;
    let used: Vec<(usize, &ColumnSpec)> = spec
        .columns
        .iter()
        .map(|c| Ok((col_index(&c.name)?, c)))
        .collect::<Result<_>>()?;

    // Buffer the raw cells so categoricals can be encoded deterministically
    // from the full set of observed values.
    let mut raw: Vec<(usize, Vec<String>, f64)> = Vec::new();
    let mut dropped = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(Error::from)?;
        let row_no = line + 2; // header is line 1
        let mut cells = Vec::with_capacity(used.len());
        let mut drop = false;
        for &(idx, col) in &used {
            let cell = record
                .get(idx)
                .ok_or_else(|| cell_error(row_no, &col.name, "missing cell"))?
                .trim()
                .trim_matches('"')
                .to_string();
            if cell.is_empty() {
                return Err(cell_error(row_no, &col.name, "empty cell"));
            }
            if spec.drop_unknown && cell == "unknown" {
                drop = true;
            }
            cells.push(cell);
        }
        let label_cell = record
            .get(label_idx)
            .ok_or_else(|| cell_error(row_no, &spec.label, "missing cell"))?
            .trim()
            .trim_matches('"');
        if spec.drop_unknown && label_cell == "unknown" {
            drop = true;
        }
        if drop {
            dropped += 1;
            continue;
        }
        let label = if label_cell == spec.positive_label {
            1.0
        } else {
            0.0
        };
        raw.push((row_no, cells, label));
    }

    // Category inventories, sorted for run-to-run stability.
    let mut categories: Vec<Option<Vec<String>>> = vec![None; used.len()];
    for (slot, &(_, col)) in used.iter().enumerate() {
        if col.kind == ColumnKind::Categorical {
            let set: BTreeSet<String> = raw.iter().map(|(_, cells, _)| cells[slot].clone()).collect();
            categories[slot] = Some(set.into_iter().collect());
        }
    }

    // Encoded layout.
    let mut attribute_names = Vec::new();
    let mut layout = Vec::new(); // (slot, encoded offset, width)
    for (slot, &(_, col)) in used.iter().enumerate() {
        let offset = attribute_names.len();
        match col.kind {
            ColumnKind::Numeric | ColumnKind::Binary => attribute_names.push(col.name.clone()),
            ColumnKind::Categorical => {
                for value in categories[slot].as_ref().unwrap() {
                    attribute_names.push(format!("{}={}", col.name, value));
                }
            }
        }
        layout.push((slot, offset, attribute_names.len() - offset));
    }

    let width = attribute_names.len();
    let mut rows = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    for (row_no, cells, label) in &raw {
        let mut row = vec![0.0; width];
        for &(slot, offset, _) in &layout {
            let col = used[slot].1;
            let cell = &cells[slot];
            match col.kind {
                ColumnKind::Numeric => {
                    row[offset] = cell.parse::<f64>().map_err(|_| {
                        cell_error(*row_no, &col.name, format!("unparseable numeric '{cell}'"))
                    })?;
                }
                ColumnKind::Binary => {
                    row[offset] = parse_binary(cell).ok_or_else(|| {
                        cell_error(*row_no, &col.name, format!("unparseable binary '{cell}'"))
                    })?;
                }
                ColumnKind::Categorical => {
                    let cats = categories[slot].as_ref().unwrap();
                    let pos = cats.binary_search(cell).map_err(|_| {
                        cell_error(*row_no, &col.name, format!("unseen category '{cell}'"))
                    })?;
                    row[offset + pos] = 1.0;
                }
            }
        }
        rows.push(row);
        labels.push(*label);
    }

    // Min-max normalize numerics; record bounds for every encoded column.
    let mut bounds = vec![(0.0, 1.0); width];
    for &(slot, offset, _) in &layout {
        if used[slot].1.kind != ColumnKind::Numeric {
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &rows {
            lo = lo.min(row[offset]);
            hi = hi.max(row[offset]);
        }
        bounds[offset] = (lo, hi);
        if rows.is_empty() {
            continue;
        }
        if lo == hi {
            eprintln!(
                "warning: column '{}' is constant ({lo}); normalized to zero",
                used[slot].1.name
            );
            for row in rows.iter_mut() {
                row[offset] = 0.0;
            }
        } else {
            let span = hi - lo;
            for row in rows.iter_mut() {
                row[offset] = (row[offset] - lo) / span;
            }
        }
    }

    let linear_attrs = attribute_partition_layout(spec, &used, &layout, &attribute_names)?;
    Ok(TabularDataset {
        rows,
        labels,
        schema: DatasetSchema {
            attribute_names,
            bounds,
            linear_attrs,
            label: spec.label.clone(),
        },
        dropped_rows: dropped,
    })
}

fn attribute_partition_layout(
    spec: &SchemaSpec,
    used: &[(usize, &ColumnSpec)],
    layout: &[(usize, usize, usize)],
    attribute_names: &[String],
) -> Result<Vec<usize>> {
    let mut linear = Vec::new();
    for name in &spec.linear {
        let slot = used
            .iter()
            .position(|(_, c)| &c.name == name)
            .ok_or_else(|| Error::schema(format!("unknown linear attribute '{name}'")))?;
        let (_, offset, width) = layout[slot];
        linear.extend(offset..offset + width);
    }
    linear.sort_unstable();
    linear.dedup();
    if linear.is_empty() || linear.iter().any(|&i| i >= attribute_names.len()) {
        return Err(Error::schema("invalid linear attribute partition"));
    }
    Ok(linear)
}

/// Indices of the linear-component columns within the encoded schema, given
/// raw column names; categorical names expand to all their one-hot columns.
pub fn attribute_partition(schema: &DatasetSchema, linear: &[String]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for name in linear {
        let mut matched = false;
        for (i, enc) in schema.attribute_names.iter().enumerate() {
            if enc == name || enc.starts_with(&format!("{name}=")) {
                out.push(i);
                matched = true;
            }
        }
        if !matched {
            return Err(Error::schema(format!("unknown attribute '{name}'")));
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(Error::schema("empty linear attribute partition"));
    }
    Ok(out)
}

/// Map a normalized x value back to raw units using recorded bounds.
pub fn denormalize_x(x: f64, bounds: (f64, f64)) -> f64 {
    bounds.0 + x * (bounds.1 - bounds.0)
}

/// Map a whole curve's x-axis back to raw units; y values are untouched.
pub fn denormalize_curve(samples: &[(f64, f64)], bounds: (f64, f64)) -> Vec<(f64, f64)> {
    samples
        .iter()
        .map(|&(x, y)| (denormalize_x(x, bounds), y))
        .collect()
}

/// Ingestion options for the UCI `bank-additional` telemarketing file
/// (semicolon-delimited, `y` label, yes/no binaries, `unknown` rows dropped).
pub fn bank_schema() -> SchemaSpec {
    let numeric = [
        "age",
        "duration",
        "campaign",
        "pdays",
        "previous",
        "emp.var.rate",
        "cons.price.idx",
        "cons.conf.idx",
        "euribor3m",
        "nr.employed",
    ];
    let binary = ["default", "housing", "loan"];
    let categorical = [
        "job",
        "marital",
        "education",
        "contact",
        "month",
        "day_of_week",
        "poutcome",
    ];
    let mut columns = Vec::new();
    for name in numeric {
        columns.push(ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Numeric,
        });
    }
    for name in binary {
        columns.push(ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Binary,
        });
    }
    for name in categorical {
        columns.push(ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Categorical,
        });
    }
    SchemaSpec {
        columns,
        label: "y".into(),
        positive_label: "yes".into(),
        linear: numeric.iter().map(|s| s.to_string()).collect(),
        delimiter: ';',
        drop_unknown: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn numeric_schema(names: &[&str]) -> SchemaSpec {
        SchemaSpec {
            columns: names
                .iter()
                .map(|&n| ColumnSpec {
                    name: n.into(),
                    kind: ColumnKind::Numeric,
                })
                .collect(),
            label: "y".into(),
            positive_label: "1".into(),
            linear: names.iter().map(|s| s.to_string()).collect(),
            delimiter: ',',
            drop_unknown: false,
        }
    }

    #[test]
    fn minmax_endpoints() {
        let f = write_csv("a,y\n0,1\n10,0\n");
        let ds = load_csv(f.path(), &numeric_schema(&["a"])).unwrap();
        assert_eq!(ds.rows, vec![vec![0.0], vec![1.0]]);
        assert_eq!(ds.labels, vec![1.0, 0.0]);
        assert_eq!(ds.schema.bounds[0], (0.0, 10.0));
    }

    #[test]
    fn constant_column_zeroed() {
        let f = write_csv("a,b,y\n5,1,1\n5,2,0\n5,3,0\n");
        let ds = load_csv(f.path(), &numeric_schema(&["a", "b"])).unwrap();
        for row in &ds.rows {
            assert_eq!(row[0], 0.0);
        }
        assert_eq!(ds.schema.bounds[0], (5.0, 5.0));
        assert_eq!(ds.rows[2][1], 1.0);
    }

    #[test]
    fn normalization_is_order_preserving() {
        let f = write_csv("a,y\n3,1\n-2,0\n7,1\n0,0\n");
        let ds = load_csv(f.path(), &numeric_schema(&["a"])).unwrap();
        let raw = [3.0, -2.0, 7.0, 0.0];
        for i in 0..4 {
            for k in 0..4 {
                assert_eq!(
                    raw[i] < raw[k],
                    ds.rows[i][0] < ds.rows[k][0],
                    "order broken at ({i},{k})"
                );
            }
        }
    }

    #[test]
    fn errors_carry_coordinates() {
        let f = write_csv("a,y\n1,1\nnope,0\n");
        let err = load_csv(f.path(), &numeric_schema(&["a"])).unwrap_err();
        match err {
            Error::Ingest { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected error {other:?}"),
        }

        let f = write_csv("b,y\n1,1\n");
        assert!(load_csv(f.path(), &numeric_schema(&["a"])).is_err());
    }

    #[test]
    fn one_hot_and_binary_encoding() {
        let mut spec = numeric_schema(&["a"]);
        spec.columns.push(ColumnSpec {
            name: "color".into(),
            kind: ColumnKind::Categorical,
        });
        spec.columns.push(ColumnSpec {
            name: "flag".into(),
            kind: ColumnKind::Binary,
        });
        let f = write_csv("a,color,flag,y\n0,red,yes,1\n1,blue,no,0\n2,red,no,1\n");
        let ds = load_csv(f.path(), &spec).unwrap();
        assert_eq!(
            ds.schema.attribute_names,
            vec!["a", "color=blue", "color=red", "flag"]
        );
        assert_eq!(ds.rows[0], vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(ds.rows[1], vec![0.5, 1.0, 0.0, 0.0]);
        assert_eq!(ds.schema.bounds[1], (0.0, 1.0));
    }

    #[test]
    fn unknown_rows_dropped() {
        let mut spec = numeric_schema(&["a"]);
        spec.columns.push(ColumnSpec {
            name: "c".into(),
            kind: ColumnKind::Categorical,
        });
        spec.drop_unknown = true;
        let f = write_csv("a,c,y\n1,x,1\n2,unknown,0\n3,x,0\n");
        let ds = load_csv(f.path(), &spec).unwrap();
        assert_eq!(ds.rows.len(), 2);
        assert_eq!(ds.dropped_rows, 1);
        // 'unknown' never becomes a category
        assert!(ds
            .schema
            .attribute_names
            .iter()
            .all(|n| !n.contains("unknown")));
    }

    #[test]
    fn ingestion_is_deterministic() {
        let f = write_csv("a,y\n1,1\n2,0\n3,1\n");
        let spec = numeric_schema(&["a"]);
        let a = load_csv(f.path(), &spec).unwrap();
        let b = load_csv(f.path(), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_expansion() {
        let schema = DatasetSchema {
            attribute_names: vec![
                "age".into(),
                "job=admin".into(),
                "job=services".into(),
                "balance".into(),
            ],
            bounds: vec![(0.0, 1.0); 4],
            linear_attrs: vec![],
            label: "y".into(),
        };
        assert_eq!(
            attribute_partition(&schema, &["age".into(), "balance".into()]).unwrap(),
            vec![0, 3]
        );
        assert_eq!(
            attribute_partition(&schema, &["job".into()]).unwrap(),
            vec![1, 2]
        );
        let all: Vec<String> = vec!["age".into(), "job".into(), "balance".into()];
        assert_eq!(attribute_partition(&schema, &all).unwrap(), vec![0, 1, 2, 3]);
        assert!(attribute_partition(&schema, &["nope".into()]).is_err());
        assert!(attribute_partition(&schema, &[]).is_err());
    }

    #[test]
    fn empty_linear_list_rejected() {
        let mut spec = numeric_schema(&["a"]);
        spec.linear.clear();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn denormalize_round_trip() {
        assert_eq!(denormalize_x(0.5, (0.0, 10.0)), 5.0);
        assert_eq!(denormalize_x(0.25, (0.0, 1.0)), 0.25);
        let lo = -3.0;
        let hi = 17.0;
        for i in 0..=20 {
            let raw = lo + (hi - lo) * i as f64 / 20.0;
            let norm = (raw - lo) / (hi - lo);
            assert!((denormalize_x(norm, (lo, hi)) - raw).abs() < 1e-12);
        }
        let curve = vec![(0.0, 2.0), (1.0, 3.0)];
        let mapped = denormalize_curve(&curve, (10.0, 20.0));
        assert_eq!(mapped, vec![(10.0, 2.0), (20.0, 3.0)]);
    }

    #[test]
    fn bank_schema_shape() {
        let spec = bank_schema();
        assert_eq!(spec.delimiter, ';');
        assert!(spec.drop_unknown);
        assert_eq!(spec.linear.len(), 10);
        assert_eq!(spec.columns.len(), 20);
        spec.validate().unwrap();
    }

    #[test]
    fn schema_json_round_trip() {
        let spec = bank_schema();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(serde_json::to_string_pretty(&spec).unwrap().as_bytes())
            .unwrap();
        let loaded = SchemaSpec::from_json_file(f.path()).unwrap();
        assert_eq!(loaded.label, "y");
        assert_eq!(loaded.columns.len(), 20);
    }
}
