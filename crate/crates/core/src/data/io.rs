use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::schema::{Dataset, FeatureKind, Row, Schema, Value};
use crate::{Error, Result};

/// Layout options for [`load_csv_with`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Column holding the class label; `None` means the last column.
    pub class_column: Option<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { has_header: true, class_column: None }
    }
}

/// Loads a comma-separated file whose header names the hint's features
/// followed by the class column.
pub fn load_csv(path: impl AsRef<Path>, schema_hint: &Schema) -> Result<Dataset> {
    load_csv_with(path, schema_hint, &CsvOptions::default())
}

pub fn load_csv_with(
    path: impl AsRef<Path>,
    schema_hint: &Schema,
    opts: &CsvOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &path.display().to_string(), schema_hint, opts)
}

/// Parses CSV text against a schema hint.
///
/// Categorical symbols already listed in the hint keep their positions; new
/// ones are interned in first-appearance order. If the hint lists class
/// names, any other label is an error; otherwise labels are interned too.
pub fn read_csv<R: Read>(
    reader: R,
    source: &str,
    schema_hint: &Schema,
    opts: &CsvOptions,
) -> Result<Dataset> {
    let mut schema = schema_hint.clone();
    let strict_classes = !schema.class_names.is_empty();
    let n_features = schema.features.len();
    let n_cols = n_features + 1;
    let class_col = opts.class_column.unwrap_or(n_features);
    if class_col >= n_cols {
        return Err(Error::Schema(format!(
            "class column {class_col} out of range for {n_cols} columns"
        )));
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let load_err = |line: usize, msg: String| Error::Load { path: source.to_string(), line, msg };

    let mut rows = Vec::new();
    let mut header_pending = opts.has_header;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            load_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != n_cols {
            return Err(load_err(
                line,
                format!("expected {n_cols} fields, found {}", record.len()),
            ));
        }
        if header_pending {
            header_pending = false;
            let names: Vec<&str> = (0..n_cols).filter(|&c| c != class_col).map(|c| &record[c]).collect();
            for (f, name) in schema.features.iter().zip(&names) {
                if f.name != *name {
                    return Err(load_err(
                        line,
                        format!("header names '{name}' where the schema expects '{}'", f.name),
                    ));
                }
            }
            continue;
        }

        let mut values = Vec::with_capacity(n_features);
        let mut fi = 0;
        for (c, field) in record.iter().enumerate() {
            if c == class_col {
                continue;
            }
            let feature = &mut schema.features[fi];
            if field.is_empty() || field == "?" {
                return Err(load_err(line, format!("missing value for '{}'", feature.name)));
            }
            let v = match feature.kind {
                FeatureKind::Numeric => {
                    let x: f64 = field.parse().map_err(|_| {
                        load_err(line, format!("'{field}' is not a number ('{}')", feature.name))
                    })?;
                    if !x.is_finite() {
                        return Err(load_err(line, format!("non-finite value for '{}'", feature.name)));
                    }
                    Value::Num(x)
                }
                FeatureKind::Categorical => Value::Cat(intern(&mut feature.symbols, field)),
            };
            values.push(v);
            fi += 1;
        }

        let label = &record[class_col];
        let class = match schema.class_index(label) {
            Some(c) => c,
            None if strict_classes => {
                return Err(load_err(line, format!("unknown class label '{label}'")));
            }
            None => {
                schema.class_names.push(label.to_string());
                schema.class_names.len() - 1
            }
        };
        rows.push(Row { values, class });
    }

    if rows.is_empty() {
        return Err(Error::NoRows(source.to_string()));
    }
    Dataset::new(schema, rows)
}

fn intern(symbols: &mut Vec<String>, field: &str) -> u32 {
    match symbols.iter().position(|s| s == field) {
        Some(i) => i as u32,
        None => {
            symbols.push(field.to_string());
            (symbols.len() - 1) as u32
        }
    }
}

/// Writes a dataset as CSV with a header row and the class as last column.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let schema = dataset.schema();
    let mut wtr = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Format(e.to_string());
    let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
    header.push("class");
    wtr.write_record(&header).map_err(to_err)?;
    for row in dataset.rows() {
        let mut fields: Vec<String> = row
            .values
            .iter()
            .zip(&schema.features)
            .map(|(v, f)| match v {
                Value::Cat(s) => f.symbols[*s as usize].clone(),
                Value::Num(x) => x.to_string(),
            })
            .collect();
        fields.push(schema.class_names[row.class].clone());
        wtr.write_record(&fields).map_err(to_err)?;
    }
    wtr.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}
