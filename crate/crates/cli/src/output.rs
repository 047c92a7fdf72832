//! Output directory writer. Every file carries the artifact version and the
//! config hash; nothing time-dependent is written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    #[serde(skip)]
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    version: &'static str,
    config_hash: &'a str,
    config: &'a RunConfig,
    out: &'a Path,
    format: &'a [Format],
}

pub struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
    hash: String,
}

impl Output {
    /// Creates the directory and echoes the resolved config into `config.json`.
    pub fn create(config: &RunConfig) -> Result<Self, CliError> {
        let dir = config.out.clone();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let out = Self { dir, formats: config.formats.clone(), hash: config.hash() };
        let echo = ConfigEcho {
            version: VERSION,
            config_hash: &out.hash,
            config,
            out: &config.out,
            format: &config.formats,
        };
        out.write("config.json", &to_json(&echo))?;
        Ok(out)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `{name}` as JSON regardless of the format selection.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf, CliError> {
        let env = Envelope { version: VERSION, config_hash: &self.hash, body };
        self.write(name, &to_json(&env))
    }

    /// Writes the table as `{name}.csv` and/or `{name}.json`.
    pub fn table(&self, table: &Table) -> Result<(), CliError> {
        for f in &self.formats {
            match f {
                Format::Csv => {
                    let mut s = format!("# superharm {VERSION} config {}\n", self.hash);
                    s.push_str(&table.columns.join(","));
                    s.push('\n');
                    for row in &table.rows {
                        let cells: Vec<String> = row.iter().map(Cell::render).collect();
                        let _ = writeln!(s, "{}", cells.join(","));
                    }
                    self.write(&format!("{}.csv", table.name), &s)?;
                }
                Format::Json => {
                    self.json(&format!("{}.json", table.name), table)?;
                }
            }
        }
        Ok(())
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        self.write(name, body)
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serialises");
    s.push('\n');
    s
}
