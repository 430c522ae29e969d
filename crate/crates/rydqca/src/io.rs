//! File formats: shot files, CSV tables and JSON reports.
//!
//! Shot file (`.shots`): `#`-prefixed `key: value` header lines followed by
//! one `0`/`1` string per shot, site 0 first.
//!
//! ```text
//! # rydqca-shots 1
//! # n_sites: 5
//! # step: 3
//! # basis_angle: 1.5707963267948966
//! # seed: 7
//! # postselected: false
//! # flags: even
//! # pattern: ABABA
//! 01010
//! 00000
//! ```
//!
//! `step`, `basis_angle`, `flags` and `pattern` are optional.

use std::fs;
use std::io::Write;
use std::path::Path;

use rydqca_core::{ShotEnsemble, ShotMeta};

use crate::error::{format_err, io_err, HarnessError, Result};

pub const SHOTS_MAGIC: &str = "rydqca-shots 1";

/// Shots with the species pattern of the chain they were taken on.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotFile {
    pub ensemble: ShotEnsemble,
    pub pattern: Option<String>,
}

pub fn format_shots(file: &ShotFile) -> String {
    let e = &file.ensemble;
    let mut out = format!("# {SHOTS_MAGIC}\n# n_sites: {}\n", e.n_sites());
    if let Some(s) = e.meta.step {
        out += &format!("# step: {s}\n");
    }
    if let Some(a) = e.meta.basis_angle {
        out += &format!("# basis_angle: {a}\n");
    }
    out += &format!("# seed: {}\n# postselected: {}\n", e.meta.seed, e.meta.postselected);
    if !e.meta.flags.is_empty() {
        out += &format!("# flags: {}\n", e.meta.flags.join(","));
    }
    if let Some(p) = &file.pattern {
        out += &format!("# pattern: {p}\n");
    }
    for b in &e.bitstrings {
        out.extend(b.iter().map(|&x| if x == 1 { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

pub fn parse_shots(text: &str, path: &Path) -> Result<ShotFile> {
    let mut lines = text.lines().enumerate().peekable();
    match lines.next() {
        Some((_, l)) if l.trim_start_matches('#').trim() == SHOTS_MAGIC => {}
        _ => return Err(format_err(path, format!("line 1: expected '# {SHOTS_MAGIC}'"))),
    }
    let mut meta = ShotMeta::default();
    let mut n_sites = None;
    let mut pattern = None;
    let mut bitstrings = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim();
        let lineno = i + 1;
        let bad = |m: String| format_err(path, format!("line {lineno}: {m}"));
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            let (k, v) = h.split_once(':').ok_or_else(|| bad(format!("header '{h}' lacks ':'")))?;
            let v = v.trim();
            let num = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("'{v}' is not an integer")));
            match k.trim() {
                "n_sites" => n_sites = Some(num(v)? as usize),
                "step" => meta.step = Some(num(v)? as usize),
                "seed" => meta.seed = num(v)?,
                "basis_angle" => {
                    meta.basis_angle = Some(v.parse().map_err(|_| bad(format!("'{v}' is not a number")))?)
                }
                "postselected" => meta.postselected = v == "true",
                "flags" => meta.flags = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
                "pattern" => pattern = Some(v.to_string()),
                other => return Err(bad(format!("unknown header key '{other}'"))),
            }
            continue;
        }
        let bits = line
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0u8),
                b'1' => Ok(1u8),
                _ => Err(bad(format!("unexpected character '{}'", c as char))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if let Some(n) = n_sites {
            if bits.len() != n {
                return Err(bad(format!("shot has {} sites, header says {n}", bits.len())));
            }
        }
        bitstrings.push(bits);
    }
    if let (Some(p), Some(n)) = (&pattern, n_sites) {
        if p.len() != n {
            return Err(format_err(path, format!("pattern '{p}' does not have {n} sites")));
        }
    }
    let ensemble = ShotEnsemble::try_new(bitstrings, meta).map_err(|e| format_err(path, e.to_string()))?;
    Ok(ShotFile { ensemble, pattern })
}

pub fn read_shots(path: &Path) -> Result<ShotFile> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_shots(&text, path)
}

pub fn write_shots(path: &Path, file: &ShotFile) -> Result<()> {
    write_text(path, &format_shots(file))
}

/// A CSV table held as text cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column `name` parsed as floats (empty cells become NaN).
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        Some(self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| HarnessError::InvalidArgument(e.to_string());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e.to_string()))?;
        let header = r.headers().map_err(|e| format_err(path, e.to_string()))?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(|e| format_err(path, e.to_string()))?;
        Ok(Table { header, rows })
    }
}

/// Float cell: shortest round-trip representation, exponent form for very
/// small or large magnitudes.
pub fn f(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shot_file_round_trip() {
        let meta = ShotMeta { step: Some(4), basis_angle: Some(0.25), seed: 9, postselected: true, flags: vec!["odd".into()] };
        let file = ShotFile {
            ensemble: ShotEnsemble::new(vec![vec![0, 1, 0], vec![1, 1, 0]], meta),
            pattern: Some("ABA".into()),
        };
        let text = format_shots(&file);
        assert_eq!(parse_shots(&text, Path::new("x")).unwrap(), file);
    }

    #[test]
    fn malformed_shot_files() {
        let p = Path::new("x");
        assert!(parse_shots("01\n", p).is_err());
        let head = format!("# {SHOTS_MAGIC}\n# n_sites: 3\n");
        assert!(parse_shots(&format!("{head}012\n"), p).unwrap_err().to_string().contains("line 3"));
        assert!(parse_shots(&format!("{head}01\n"), p).is_err());
        assert!(parse_shots(&format!("{head}# colour: red\n"), p).is_err());
        assert!(parse_shots(&format!("{head}# pattern: AB\n010\n"), p).is_err());
        let empty = parse_shots(&head, p).unwrap();
        assert!(empty.ensemble.is_empty());
    }

    #[test]
    fn table_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["step", "value"]);
        t.push(vec!["0".into(), f(0.1 + 0.2)]);
        t.push(vec!["1".into(), f(-1.0)]);
        let path = dir.path().join("t.csv");
        write_text(&path, &t.to_csv().unwrap()).unwrap();
        let back = Table::read(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.floats("value").unwrap(), vec![0.1 + 0.2, -1.0]);
    }
}
