//! Column tables and design matrices with categorical encoding.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Column-oriented table of optional numeric and categorical values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    n: usize,
    numeric: BTreeMap<String, Vec<Option<f64>>>,
    categorical: BTreeMap<String, Vec<Option<String>>>,
    /// Optional row labels (author ids).
    pub ids: Vec<String>,
}

impl Table {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add_numeric(&mut self, name: &str, values: Vec<Option<f64>>) {
        assert_eq!(values.len(), self.n, "column {name} has wrong length");
        self.numeric.insert(name.to_string(), values);
    }

    pub fn add_complete(&mut self, name: &str, values: &[f64]) {
        self.add_numeric(name, values.iter().copied().map(Some).collect());
    }

    pub fn add_categorical(&mut self, name: &str, values: Vec<Option<String>>) {
        assert_eq!(values.len(), self.n, "column {name} has wrong length");
        self.categorical.insert(name.to_string(), values);
    }

    pub fn numeric(&self, name: &str) -> Result<&[Option<f64>]> {
        self.numeric
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn categorical(&self, name: &str) -> Result<&[Option<String>]> {
        self.categorical
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn numeric_mut(&mut self, name: &str) -> Result<&mut Vec<Option<f64>>> {
        self.numeric
            .get_mut(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn has_numeric(&self, name: &str) -> bool {
        self.numeric.contains_key(name)
    }

    pub fn numeric_names(&self) -> impl Iterator<Item = &String> {
        self.numeric.keys()
    }

    /// Rows `idx` (with repetition) as a new table.
    pub fn take(&self, idx: &[usize]) -> Table {
        let mut t = Table::new(idx.len());
        for (k, v) in &self.numeric {
            t.numeric.insert(k.clone(), idx.iter().map(|&i| v[i]).collect());
        }
        for (k, v) in &self.categorical {
            t.categorical.insert(k.clone(), idx.iter().map(|&i| v[i].clone()).collect());
        }
        if !self.ids.is_empty() {
            t.ids = idx.iter().map(|&i| self.ids[i].clone()).collect();
        }
        t
    }

    /// Complete numeric values of a column (missing entries skipped).
    pub fn complete(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.numeric(name)?.iter().flatten().copied().collect())
    }
}

/// One regressor specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Term {
    Numeric(String),
    /// Indicator columns for every level except the reference (the
    /// lexicographically smallest unless given).
    Categorical { name: String, reference: Option<String> },
}

impl Term {
    pub fn num(name: &str) -> Term {
        Term::Numeric(name.to_string())
    }

    pub fn cat(name: &str) -> Term {
        Term::Categorical {
            name: name.to_string(),
            reference: None,
        }
    }

    pub fn cat_ref(name: &str, reference: &str) -> Term {
        Term::Categorical {
            name: name.to_string(),
            reference: Some(reference.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Numeric(n) => n,
            Term::Categorical { name, .. } => name,
        }
    }
}

pub const INTERCEPT: &str = "(intercept)";

/// Encoded regressors over the complete cases of a table.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    /// Table rows used, in table order.
    pub rows: Vec<usize>,
    /// Rows dropped for missing values.
    pub dropped: usize,
    pub response: String,
}

impl DesignMatrix {
    /// Builds `y ~ 1 + terms` over complete cases.
    pub fn build(table: &Table, response: &str, terms: &[Term]) -> Result<Self> {
        Self::build_with(table, response, terms, true)
    }

    pub fn build_with(table: &Table, response: &str, terms: &[Term], intercept: bool) -> Result<Self> {
        let y_col = table.numeric(response)?;
        let mut num_cols = Vec::new();
        let mut cat_cols = Vec::new();
        for t in terms {
            match t {
                Term::Numeric(n) => num_cols.push(table.numeric(n)?),
                Term::Categorical { name, .. } => cat_cols.push(table.categorical(name)?),
            }
        }
        let rows: Vec<usize> = (0..table.len())
            .filter(|&i| {
                y_col[i].is_some_and(f64::is_finite)
                    && num_cols.iter().all(|c| c[i].is_some_and(f64::is_finite))
                    && cat_cols.iter().all(|c| c[i].is_some())
            })
            .collect();

        let mut names = Vec::new();
        let mut columns: Vec<Vec<f64>> = Vec::new();
        if intercept {
            names.push(INTERCEPT.to_string());
            columns.push(vec![1.0; rows.len()]);
        }
        for t in terms {
            match t {
                Term::Numeric(n) => {
                    let c = table.numeric(n)?;
                    names.push(n.clone());
                    columns.push(rows.iter().map(|&i| c[i].expect("complete")).collect());
                }
                Term::Categorical { name, reference } => {
                    let c = table.categorical(name)?;
                    let levels: BTreeSet<&String> = rows.iter().map(|&i| c[i].as_ref().expect("complete")).collect();
                    let reference = match reference {
                        Some(r) => r.clone(),
                        None => levels.iter().next().map(|s| s.to_string()).unwrap_or_default(),
                    };
                    for level in levels {
                        if *level == reference {
                            continue;
                        }
                        names.push(format!("{name}[{level}]"));
                        columns.push(
                            rows.iter()
                                .map(|&i| f64::from(u8::from(c[i].as_ref() == Some(level))))
                                .collect(),
                        );
                    }
                }
            }
        }
        let n = rows.len();
        let k = columns.len();
        let x = DMatrix::from_fn(n, k, |r, c| columns[c][r]);
        let y = rows.iter().map(|&i| y_col[i].expect("complete")).collect();
        Ok(Self {
            names,
            x,
            y,
            dropped: table.len() - n,
            rows,
            response: response.to_string(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.x.column(j).iter().copied().collect())
    }
}

/// Population standard deviation.
pub fn population_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_reference_is_smallest() {
        let mut t = Table::new(4);
        t.add_complete("y", &[1.0, 2.0, 3.0, 4.0]);
        t.add_categorical(
            "g",
            ["b", "a", "c", "a"].iter().map(|s| Some(s.to_string())).collect(),
        );
        let d = DesignMatrix::build(&t, "y", &[Term::cat("g")]).unwrap();
        assert_eq!(d.names, vec![INTERCEPT, "g[b]", "g[c]"]);
        for r in 0..4 {
            assert!(d.x[(r, 1)] + d.x[(r, 2)] <= 1.0);
        }
    }

    #[test]
    fn missing_rows_dropped_and_missing_variable_named() {
        let mut t = Table::new(3);
        t.add_numeric("y", vec![Some(1.0), None, Some(3.0)]);
        t.add_complete("x", &[1.0, 2.0, 3.0]);
        let d = DesignMatrix::build(&t, "y", &[Term::num("x")]).unwrap();
        assert_eq!(d.rows, vec![0, 2]);
        assert_eq!(d.dropped, 1);
        match DesignMatrix::build(&t, "y", &[Term::num("nope")]) {
            Err(Error::MissingVariable(v)) => assert_eq!(v, "nope"),
            other => panic!("{other:?}"),
        }
    }
}
