//! Strict schemas for every CSV table the tool writes.

use std::io::Read;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Int,
    Float,
    /// one of the listed tags
    Tag(&'static [&'static str]),
    Text,
}

#[derive(Debug, Clone, Copy)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [(&'static str, Column)],
}

const CLASSES: &[&str] = &["zero", "type1", "type2", "ordinary"];
const CANDIDATES: &[&str] = &["I*S", "I*S*L1"];

pub const EXPSUM: Schema = Schema {
    name: "expsum",
    columns: &[
        ("q", Column::Int),
        ("q1", Column::Int),
        ("q2", Column::Int),
        ("c1", Column::Int),
        ("c2", Column::Int),
        ("c3", Column::Int),
        ("re", Column::Float),
        ("im", Column::Float),
        ("abs", Column::Float),
        ("class", Column::Tag(CLASSES)),
    ],
};

pub const DENSITY: Schema = Schema {
    name: "density",
    columns: &[
        ("p", Column::Int),
        ("psi", Column::Int),
        ("k_star", Column::Int),
        ("count", Column::Int),
        ("numerator", Column::Int),
        ("denominator", Column::Int),
        ("value", Column::Float),
        ("factor", Column::Float),
    ],
};

pub const DELTA_CHECK: Schema = Schema {
    name: "delta_check",
    columns: &[("n", Column::Int), ("Q", Column::Float), ("value", Column::Float), ("deviation", Column::Float)],
};

pub const COMPARE: Schema = Schema {
    name: "compare",
    columns: &[
        ("h", Column::Int),
        ("N", Column::Int),
        ("sqrt_n", Column::Float),
        ("gamma", Column::Float),
        ("candidate", Column::Tag(CANDIDATES)),
        ("main", Column::Float),
        ("residual", Column::Float),
    ],
};

pub const ALL: [Schema; 4] = [EXPSUM, DENSITY, DELTA_CHECK, COMPARE];

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("{schema}: header {found:?} does not match {expected:?}")]
    Header { schema: &'static str, expected: Vec<String>, found: Vec<String> },
    #[error("{schema}: row {row}, column `{column}`: bad value `{value}`")]
    Value { schema: &'static str, row: usize, column: &'static str, value: String },
    #[error("{schema}: row {row} has {found} fields, expected {expected}")]
    Width { schema: &'static str, row: usize, expected: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn accepts(column: Column, value: &str) -> bool {
    match column {
        Column::Int => value.parse::<i128>().is_ok(),
        // NaN is never a valid measurement
        Column::Float => value.parse::<f64>().map(|v| !v.is_nan()).unwrap_or(false),
        Column::Tag(tags) => tags.contains(&value),
        Column::Text => true,
    }
}

impl Schema {
    pub fn header(&self) -> Vec<&'static str> {
        self.columns.iter().map(|c| c.0).collect()
    }

    /// Validates a whole table and returns its number of data rows.
    pub fn validate(&self, input: impl Read) -> Result<usize, SchemaError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
        let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let expected: Vec<String> = self.header().into_iter().map(str::to_string).collect();
        if found != expected {
            return Err(SchemaError::Header { schema: self.name, expected, found });
        }
        let mut rows = 0;
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != self.columns.len() {
                return Err(SchemaError::Width { schema: self.name, row, expected: self.columns.len(), found: record.len() });
            }
            for (&(column, kind), value) in self.columns.iter().zip(record.iter()) {
                if !accepts(kind, value) {
                    return Err(SchemaError::Value { schema: self.name, row, column, value: value.to_string() });
                }
            }
            rows += 1;
        }
        Ok(rows)
    }
}

/// The schema whose name is the file stem.
pub fn for_file(path: &std::path::Path) -> Option<Schema> {
    let stem = path.file_stem()?.to_str()?;
    ALL.into_iter().find(|s| s.name == stem)
}
