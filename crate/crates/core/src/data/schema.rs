use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical,
    Numeric,
}

/// A column of the table. Categorical features carry their interned symbol
/// table; a symbol's position is the value stored in [`Value::Cat`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symbols: Vec<String>,
}

impl Feature {
    pub fn categorical(name: impl Into<String>, symbols: &[&str]) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical,
            symbols: symbols.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Feature { name: name.into(), kind: FeatureKind::Numeric, symbols: Vec::new() }
    }

    pub fn symbol(&self, index: u32) -> Option<&str> {
        self.symbols.get(index as usize).map(String::as_str)
    }

    pub fn symbol_index(&self, name: &str) -> Option<u32> {
        self.symbols.iter().position(|s| s == name).map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<Feature>,
    pub class_names: Vec<String>,
}

impl Schema {
    pub fn new(features: Vec<Feature>, class_names: Vec<String>) -> Result<Self> {
        let schema = Schema { features, class_names };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name '{}'", f.name)));
            }
        }
        if self.class_names.len() < 2 {
            return Err(Error::Schema(format!(
                "need at least 2 classes, got {}",
                self.class_names.len()
            )));
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn all_categorical(&self) -> bool {
        self.features.iter().all(|f| f.kind == FeatureKind::Categorical)
    }

    pub fn all_numeric(&self) -> bool {
        self.features.iter().all(|f| f.kind == FeatureKind::Numeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Cat(u32),
    Num(f64),
}

impl Value {
    pub fn as_symbol(self) -> Option<u32> {
        match self {
            Value::Cat(s) => Some(s),
            Value::Num(_) => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Value::Cat(s) => s as f64,
            Value::Num(x) => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<Value>,
    pub class: usize,
}

/// An immutable table. Client shares, folds and training sets are index
/// views over it; rows are never copied or mutated after load.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    rows: Vec<Row>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self> {
        schema.validate()?;
        for (i, row) in rows.iter().enumerate() {
            check_row(&schema, row).map_err(|m| Error::Schema(format!("row {i}: {m}")))?;
        }
        Ok(Dataset { schema: Arc::new(schema), rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn shared_schema(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Row {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn classes(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.class).collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.rows.len()).collect()
    }

    pub fn view<'a>(&'a self, indices: &'a [usize]) -> DataView<'a> {
        DataView { data: self, indices }
    }
}

fn check_row(schema: &Schema, row: &Row) -> std::result::Result<(), String> {
    if row.values.len() != schema.features.len() {
        return Err(format!(
            "expected {} values, found {}",
            schema.features.len(),
            row.values.len()
        ));
    }
    if row.class >= schema.class_count() {
        return Err(format!("class index {} out of range", row.class));
    }
    for (f, v) in schema.features.iter().zip(&row.values) {
        match (f.kind, v) {
            (FeatureKind::Categorical, Value::Cat(s)) if (*s as usize) < f.symbols.len() => {}
            (FeatureKind::Numeric, Value::Num(x)) if x.is_finite() => {}
            _ => return Err(format!("value {v:?} does not fit feature '{}'", f.name)),
        }
    }
    Ok(())
}

/// A borrowed subset of a dataset's rows.
#[derive(Debug, Clone, Copy)]
pub struct DataView<'a> {
    data: &'a Dataset,
    indices: &'a [usize],
}

impl<'a> DataView<'a> {
    pub fn schema(&self) -> &'a Schema {
        self.data.schema()
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    pub fn indices(&self) -> &'a [usize] {
        self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a Row> + 'a {
        let data = self.data;
        self.indices.iter().map(move |&i| data.row(i))
    }

    pub fn classes(&self) -> Vec<usize> {
        self.rows().map(|r| r.class).collect()
    }
}
