//! Tabular output and run manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use super::config::{Format, RunConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) => s.serialize_f64(*x),
            Cell::Int(n) => s.serialize_u64(*n),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

/// 17 significant digits, exponent notation; round-trips every `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| Cell::Num(x)).collect());
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")
    }

    pub fn write(&self, path: &Path, format: Format) -> std::io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        match format {
            Format::Csv => self.write_csv(file),
            Format::Json => self.write_json(file),
        }
    }
}

struct Row<'a>(&'a [String], &'a [Cell]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

/// A JSON array of row objects, keys in column order.
impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for row in &self.rows {
            seq.serialize_element(&Row(&self.columns, row))?;
        }
        seq.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `le`: pass when `value ≤ tolerance`; `ge`: pass when `value ≥ tolerance`.
    pub comparison: &'static str,
    pub passed: bool,
}

impl Invariant {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, comparison: "le", passed: value <= tolerance }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, comparison: "ge", passed: value >= tolerance }
    }
}

/// Everything an experiment produces besides the file layout.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub invariants: Vec<Invariant>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.passed)
    }

    pub fn diag(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.into(), value);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub hardytime: &'static str,
    pub manifest: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self { hardytime: env!("CARGO_PKG_VERSION"), manifest: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'static str,
    pub config: &'a RunConfig,
    pub versions: Versions,
    pub parallel: bool,
    pub output: String,
    pub columns: &'a [String],
    pub rows: usize,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub invariants: &'a [Invariant],
    pub diagnostics: &'a BTreeMap<String, f64>,
    pub passed: bool,
}

/// `dir/stem.manifest.json` next to the data file.
pub fn manifest_path(data: &Path) -> std::path::PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    data.with_file_name(format!("{stem}.manifest.json"))
}

pub fn write_manifest(path: &Path, manifest: &Manifest<'_>) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, manifest)?;
    file.write_all(b"\n")?;
    file.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, -2.5e-300, 1e300, 0.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_and_json_layout() {
        let mut t = Table::new(&["t", "mass_low"]);
        t.push_nums(&[0.5, 0.25]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,mass_low\n5.0000000000000000e-1,2.5000000000000000e-1\n");
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"[{"t":0.5,"mass_low":0.25}]"#);
    }

    #[test]
    fn manifest_sits_next_to_data() {
        assert_eq!(manifest_path(Path::new("out/xmu.csv")), Path::new("out/xmu.manifest.json"));
    }
}
