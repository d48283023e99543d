//! CSV, JSON and gnuplot writers.

use crate::config::OutputBlock;
use crate::error::CliResult;
use serde::Serialize;
use shearspec::extended::ExtendedReal;
use std::fs;
use std::path::{Path, PathBuf};

/// A float with 17 significant digits, `inf`/`-inf`/`nan` otherwise.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn ext(x: ExtendedReal) -> String {
    match x {
        ExtendedReal::Finite(v) => num(v),
        ExtendedReal::PosInf => "inf".into(),
        ExtendedReal::NegInf => "-inf".into(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
    }
}

/// Writes the files of one run into the output directory.
pub struct Emitter {
    dir: PathBuf,
    block: OutputBlock,
    pub written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, block: &OutputBlock) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), block: block.clone(), written: vec![] })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> CliResult<()> {
        if self.block.wants("csv") {
            self.put(name, &table.to_bytes()?)?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        if self.block.wants("json") {
            let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
            text.push('\n');
            self.put(name, text.as_bytes())?;
        }
        Ok(())
    }

    /// Gnuplot script for a CSV written by the same run.
    pub fn gnuplot(&mut self, name: &str, csv_name: &str, setup: &[&str], plots: &[(usize, usize, &str)]) -> CliResult<()> {
        if !self.block.wants("gnuplot") {
            return Ok(());
        }
        let mut s = String::from("set datafile separator ','\nset key top right\n");
        for line in setup {
            s.push_str(line);
            s.push('\n');
        }
        let parts: Vec<String> = plots
            .iter()
            .enumerate()
            .map(|(i, (x, y, title))| {
                let file = if i == 0 { format!("'{csv_name}'") } else { "''".to_string() };
                format!("{file} using {x}:{y} every ::1 with linespoints title '{title}'")
            })
            .collect();
        s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
        self.put(name, s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mant = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mant.len(), 17);
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(ext(ExtendedReal::NegInf), "-inf");
    }

    #[test]
    fn table_uses_newlines() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![num(1.5), num(-2.0)]);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1.5000000000000000e0,-2.0000000000000000e0\n");
    }
}
