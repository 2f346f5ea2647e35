//! Table writers. Every table is a list of flat rows written as `<name>.csv`
//! and/or `<name>.json`; the JSON file is an array of the same rows, so the
//! two carry identical content.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

pub struct Sink {
    dir: PathBuf,
    format: Format,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            format,
        })
    }

    pub fn write<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<()> {
        if matches!(self.format, Format::Csv | Format::Both) {
            let path = self.dir.join(format!("{name}.csv"));
            let mut w = csv::Writer::from_path(&path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        if matches!(self.format, Format::Json | Format::Both) {
            let path = self.dir.join(format!("{name}.json"));
            let file =
                File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
            w.flush()?;
        }
        Ok(())
    }
}
