//! Numerical comparison of two run directories.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::io::{read_json, Table};
use crate::run::MANIFEST;

#[derive(Debug, Clone, Serialize)]
pub struct ColumnDiff {
    pub column: String,
    pub max_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDiff {
    pub file: String,
    pub rows: usize,
    pub columns: Vec<ColumnDiff>,
}

impl FileDiff {
    pub fn max_abs(&self) -> f64 {
        self.columns.iter().map(|c| c.max_abs).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub experiment: String,
    pub engines: [String; 2],
    pub files: Vec<FileDiff>,
}

impl Comparison {
    pub fn max_abs(&self) -> f64 {
        self.files.iter().map(FileDiff::max_abs).fold(0.0, f64::max)
    }

    pub fn file(&self, name: &str) -> Option<&FileDiff> {
        self.files.iter().find(|f| f.file == name)
    }
}

fn manifest_field(dir: &Path, key: &str) -> Result<String> {
    let m = read_json(&dir.join(MANIFEST))?;
    m[key]
        .as_str()
        .map(String::from)
        .ok_or_else(|| HarnessError::Incompatible(format!("{} has no '{key}' in its manifest", dir.display())))
}

fn csv_names(dir: &Path) -> Result<BTreeSet<String>> {
    let m = read_json(&dir.join(MANIFEST))?;
    Ok(m["files"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|f| f["path"].as_str())
        .filter(|p| p.ends_with(".csv"))
        .map(String::from)
        .collect())
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

/// Compare two tables cell by cell. Columns where every non-empty cell is
/// numeric in both get a maximum absolute deviation; other columns must
/// match exactly.
pub fn compare_tables(name: &str, a: &Table, b: &Table) -> Result<FileDiff> {
    if a.header != b.header {
        return Err(HarnessError::Incompatible(format!("{name}: headers differ ({:?} vs {:?})", a.header, b.header)));
    }
    if a.rows.len() != b.rows.len() {
        return Err(HarnessError::Incompatible(format!("{name}: {} rows vs {}", a.rows.len(), b.rows.len())));
    }
    let mut columns = Vec::new();
    for (c, col) in a.header.iter().enumerate() {
        let cells = || a.rows.iter().zip(&b.rows).map(|(x, y)| (x[c].as_str(), y[c].as_str()));
        let numeric = cells().all(|(x, y)| (x.is_empty() || is_number(x)) && (y.is_empty() || is_number(y)))
            && cells().any(|(x, y)| !x.is_empty() || !y.is_empty());
        if numeric {
            let mut max_abs: f64 = 0.0;
            for (row, (x, y)) in cells().enumerate() {
                match (x.parse::<f64>(), y.parse::<f64>()) {
                    (Ok(u), Ok(v)) => {
                        let d = (u - v).abs();
                        max_abs = max_abs.max(if u == v { 0.0 } else if d.is_nan() { f64::INFINITY } else { d });
                    }
                    (Err(_), Err(_)) => {}
                    _ => {
                        return Err(HarnessError::Incompatible(format!(
                            "{name}: column {col} row {row} is empty in one run only"
                        )))
                    }
                }
            }
            columns.push(ColumnDiff { column: col.clone(), max_abs });
        } else if let Some((row, (x, y))) = cells().enumerate().find(|(_, (x, y))| x != y) {
            return Err(HarnessError::Incompatible(format!("{name}: column {col} row {row}: '{x}' vs '{y}'")));
        }
    }
    Ok(FileDiff { file: name.to_string(), rows: a.rows.len(), columns })
}

/// Compare every CSV the two runs have in common.
pub fn compare_runs(a: &Path, b: &Path) -> Result<Comparison> {
    let (ea, eb) = (manifest_field(a, "experiment")?, manifest_field(b, "experiment")?);
    if ea != eb {
        return Err(HarnessError::Incompatible(format!("experiments differ: {ea} vs {eb}")));
    }
    let common: Vec<String> = csv_names(a)?.intersection(&csv_names(b)?).cloned().collect();
    if common.is_empty() {
        return Err(HarnessError::Incompatible("no tables in common".into()));
    }
    let files = common
        .iter()
        .map(|name| compare_tables(name, &Table::read(&a.join(name))?, &Table::read(&b.join(name))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { experiment: ea, engines: [manifest_field(a, "engine")?, manifest_field(b, "engine")?], files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[&str; 2]]) -> Table {
        let mut t = Table::new(&["label", "x"]);
        for r in rows {
            t.push(r.iter().map(|s| s.to_string()).collect());
        }
        t
    }

    #[test]
    fn numeric_and_label_columns() {
        let a = table(&[["p", "1.0"], ["q", ""]]);
        let b = table(&[["p", "1.25"], ["q", ""]]);
        let d = compare_tables("t.csv", &a, &b).unwrap();
        assert_eq!(d.columns.len(), 1);
        assert_eq!(d.max_abs(), 0.25);
        let c = table(&[["p", "1.0"], ["r", ""]]);
        assert!(matches!(compare_tables("t.csv", &a, &c), Err(HarnessError::Incompatible(_))));
        let e = table(&[["p", "1.0"]]);
        assert!(compare_tables("t.csv", &a, &e).is_err());
    }
}
