//! CSV tables with a JSON metadata side-car.

use crate::CliError;
use screenwave::diagnostics::SweepResult;
use screenwave::Complex64;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One CSV cell. Floats are written with 17 significant digits so that
/// parsing them back is exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Float(v) => write!(out, "{v:.16e}").unwrap(),
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            Cell::Text(s) => out.push_str(s),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Table {
        Table { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

/// Header names for a coordinate vector of length `dim`.
pub fn coord_names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

pub fn complex_cells(z: Complex64) -> [Cell; 2] {
    [Cell::Float(z.re), Cell::Float(z.im)]
}

/// Params, value columns and a pass flag per sweep point.
pub fn sweep_table(r: &SweepResult) -> Table {
    let header: Vec<String> = r.param_names.iter().chain(&r.columns).cloned().chain(["pass".to_string()]).collect();
    let mut t = Table::new(&header);
    for p in &r.points {
        let mut row: Vec<Cell> = p.params.iter().chain(&p.values).map(|&v| Cell::Float(v)).collect();
        row.push(Cell::Int(p.pass as u64));
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct Meta<'a> {
    file: &'a str,
    command: &'a str,
    config_sha256: &'a str,
    library_version: &'a str,
    cli_version: &'a str,
    seed: u64,
    rows: usize,
}

/// Writes files into the output directory, each with its side-car.
pub struct Writer {
    dir: PathBuf,
    command: &'static str,
    config_sha256: String,
    seed: u64,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, command: &'static str, config_sha256: String, seed: u64) -> Result<Writer, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Writer { dir: dir.to_path_buf(), command, config_sha256, seed, written: Vec::new() })
    }

    pub fn emit(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_file(&path, &table.render())?;
        let meta = Meta {
            file: name,
            command: self.command,
            config_sha256: &self.config_sha256,
            library_version: screenwave::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            rows: table.rows.len(),
        };
        let mut json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))?;
        json.push('\n');
        let mut side = path.clone().into_os_string();
        side.push(".meta.json");
        write_file(Path::new(&side), &json)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["k", "value"]);
        assert_eq!(t.render(), "k,value\n");
    }

    #[test]
    fn side_car_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = Writer::new(dir.path(), "solve", "abc".into(), 7).unwrap();
        let mut t = Table::new(&["a"]);
        t.push(vec![Cell::Float(1.5)]);
        w.emit("a.csv", &t).unwrap();
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["config_sha256"], "abc");
        assert_eq!(meta["rows"], 1);
        assert_eq!(meta["library_version"], screenwave::VERSION);
    }

    proptest! {
        #[test]
        fn floats_round_trip_bitwise(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let mut s = String::new();
            Cell::Float(v).render(&mut s);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
