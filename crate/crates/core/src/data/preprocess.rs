use serde::{Deserialize, Serialize};

use super::schema::{Dataset, Feature, FeatureKind, Row, Schema, Value};
use crate::{Error, Result};

/// Cut points for one numeric feature. A value falls in bin `i` where `i` is
/// the number of cuts that are `<=` the value.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBins {
    pub cuts: Vec<f64>,
}

impl QuantileBins {
    /// Quantile cut points over `values`. When the feature has no more
    /// distinct values than `bins`, every distinct value gets its own bin.
    pub fn fit(values: &[f64], bins: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut distinct = sorted.clone();
        distinct.dedup();
        if distinct.len() <= bins {
            return QuantileBins { cuts: distinct.into_iter().skip(1).collect() };
        }
        let n = sorted.len();
        let mut cuts: Vec<f64> = (1..bins).map(|j| sorted[j * n / bins]).collect();
        cuts.dedup();
        // A cut equal to the minimum would leave bin 0 empty.
        cuts.retain(|&c| c > sorted[0]);
        QuantileBins { cuts }
    }

    pub fn bin(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c <= x)
    }

    pub fn bin_count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn labels(&self) -> Vec<String> {
        let c = &self.cuts;
        if c.is_empty() {
            return vec!["all".to_string()];
        }
        let mut out = Vec::with_capacity(c.len() + 1);
        out.push(format!("<{}", c[0]));
        for w in c.windows(2) {
            out.push(format!("[{},{})", w[0], w[1]));
        }
        out.push(format!(">={}", c[c.len() - 1]));
        out
    }
}

/// Replaces every numeric feature with a categorical one whose symbols are
/// quantile bins computed over the whole dataset.
pub fn discretize_numeric(d: &Dataset, bins: usize) -> Result<Dataset> {
    if bins < 2 {
        return Err(Error::Config(format!("bins must be at least 2, got {bins}")));
    }
    let schema = d.schema();
    let fitted: Vec<Option<QuantileBins>> = schema
        .features
        .iter()
        .enumerate()
        .map(|(fi, f)| match f.kind {
            FeatureKind::Numeric => {
                let col: Vec<f64> = d.rows().iter().map(|r| r.values[fi].as_f64()).collect();
                Some(QuantileBins::fit(&col, bins))
            }
            FeatureKind::Categorical => None,
        })
        .collect();

    let features = schema
        .features
        .iter()
        .zip(&fitted)
        .map(|(f, q)| match q {
            Some(q) => Feature {
                name: f.name.clone(),
                kind: FeatureKind::Categorical,
                symbols: q.labels(),
            },
            None => f.clone(),
        })
        .collect();
    let rows = d
        .rows()
        .iter()
        .map(|r| Row {
            values: r
                .values
                .iter()
                .zip(&fitted)
                .map(|(v, q)| match q {
                    Some(q) => Value::Cat(q.bin(v.as_f64()) as u32),
                    None => *v,
                })
                .collect(),
            class: r.class,
        })
        .collect();
    Dataset::new(Schema { features, class_names: schema.class_names.clone() }, rows)
}

/// Replaces every categorical feature with a numeric one holding the symbol
/// index, for CART training.
pub fn encode_ordinal(d: &Dataset) -> Result<Dataset> {
    let schema = d.schema();
    let features = schema
        .features
        .iter()
        .map(|f| Feature::numeric(f.name.clone()))
        .collect();
    let rows = d
        .rows()
        .iter()
        .map(|r| Row {
            values: r.values.iter().map(|v| Value::Num(v.as_f64())).collect(),
            class: r.class,
        })
        .collect();
    Dataset::new(Schema { features, class_names: schema.class_names.clone() }, rows)
}

/// How one raw input column becomes the value a trained tree expects, so a
/// single instance can be encoded without the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum FeatureEncoding {
    /// Categorical kept as is; unknown symbols map past the known ones.
    Symbols { symbols: Vec<String> },
    /// Numeric discretized into quantile bins.
    Bins { cuts: Vec<f64> },
    /// Categorical replaced by its symbol index as a number.
    Ordinal { symbols: Vec<String> },
    Numeric,
}

impl FeatureEncoding {
    pub fn encode(&self, raw: &str) -> Result<Value> {
        let raw = raw.trim();
        let number = || {
            raw.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Schema(format!("expected a number, got '{raw}'")))
        };
        Ok(match self {
            FeatureEncoding::Symbols { symbols } => {
                Value::Cat(symbols.iter().position(|s| s == raw).unwrap_or(symbols.len()) as u32)
            }
            FeatureEncoding::Bins { cuts } => {
                Value::Cat(QuantileBins { cuts: cuts.clone() }.bin(number()?) as u32)
            }
            FeatureEncoding::Ordinal { symbols } => match symbols.iter().position(|s| s == raw) {
                Some(i) => Value::Num(i as f64),
                None => return Err(Error::Schema(format!("unknown symbol '{raw}'"))),
            },
            FeatureEncoding::Numeric => Value::Num(number()?),
        })
    }
}

/// Encodings matching [`discretize_numeric`] (`categorical = true`) or
/// [`encode_ordinal`] (`categorical = false`) on `d`.
pub fn feature_encodings(d: &Dataset, categorical: bool, bins: usize) -> Vec<FeatureEncoding> {
    d.schema()
        .features
        .iter()
        .enumerate()
        .map(|(fi, f)| match (f.kind, categorical) {
            (FeatureKind::Categorical, true) => FeatureEncoding::Symbols { symbols: f.symbols.clone() },
            (FeatureKind::Categorical, false) => FeatureEncoding::Ordinal { symbols: f.symbols.clone() },
            (FeatureKind::Numeric, true) => {
                let col: Vec<f64> = d.rows().iter().map(|r| r.values[fi].as_f64()).collect();
                FeatureEncoding::Bins { cuts: QuantileBins::fit(&col, bins).cuts }
            }
            (FeatureKind::Numeric, false) => FeatureEncoding::Numeric,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_dataset(values: &[f64]) -> Dataset {
        let schema = Schema {
            features: vec![Feature::numeric("x")],
            class_names: vec!["a".into(), "b".into()],
        };
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &x)| Row { values: vec![Value::Num(x)], class: i % 2 })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    #[test]
    fn quintiles_of_one_to_hundred() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let d = discretize_numeric(&numeric_dataset(&values), 5).unwrap();
        let bins: Vec<u32> = d.rows().iter().map(|r| r.values[0].as_symbol().unwrap()).collect();
        assert_eq!(bins[2], 0); // value 3
        assert_eq!(bins[98], 4); // value 99

        // Oracle: rank-based membership, 20 sorted values per bin.
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, &x) in values.iter().enumerate() {
            let rank = sorted.iter().position(|&s| s == x).unwrap();
            assert_eq!(bins[i] as usize, rank / 20, "value {x}");
        }
        assert_eq!(d.schema().features[0].symbols.len(), 5);
    }

    #[test]
    fn constant_feature_gets_single_symbol() {
        let d = discretize_numeric(&numeric_dataset(&[4.0; 10]), 5).unwrap();
        assert_eq!(d.schema().features[0].symbols.len(), 1);
        assert!(d.rows().iter().all(|r| r.values[0] == Value::Cat(0)));
    }

    #[test]
    fn few_distinct_values_use_distinct_count() {
        let d = discretize_numeric(&numeric_dataset(&[1.0, 2.0, 2.0, 3.0, 1.0]), 5).unwrap();
        assert_eq!(d.schema().features[0].symbols.len(), 3);
        let bins: Vec<u32> = d.rows().iter().map(|r| r.values[0].as_symbol().unwrap()).collect();
        assert_eq!(bins, vec![0, 1, 1, 2, 0]);
    }

    #[test]
    fn categorical_dataset_is_untouched() {
        let schema = Schema {
            features: vec![Feature::categorical("c", &["u", "v"])],
            class_names: vec!["a".into(), "b".into()],
        };
        let rows = vec![
            Row { values: vec![Value::Cat(1)], class: 0 },
            Row { values: vec![Value::Cat(0)], class: 1 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        assert_eq!(discretize_numeric(&d, 5).unwrap(), d);
    }

    #[test]
    fn ordinal_encoding_uses_interning_order() {
        let schema = Schema {
            features: vec![Feature::categorical("parents", &["usual", "pretentious"])],
            class_names: vec!["a".into(), "b".into()],
        };
        let rows = vec![
            Row { values: vec![Value::Cat(0)], class: 0 },
            Row { values: vec![Value::Cat(1)], class: 1 },
        ];
        let e = encode_ordinal(&Dataset::new(schema, rows).unwrap()).unwrap();
        assert_eq!(e.row(0).values, vec![Value::Num(0.0)]);
        assert_eq!(e.row(1).values, vec![Value::Num(1.0)]);
        assert!(e.schema().all_numeric());
        let again = encode_ordinal(&e).unwrap();
        assert_eq!(again, e);
    }

    #[test]
    fn bins_below_two_rejected() {
        assert!(discretize_numeric(&numeric_dataset(&[1.0, 2.0]), 1).is_err());
    }
}
