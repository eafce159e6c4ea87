//! Output directory bookkeeping: every written file is recorded for the
//! manifest, in write order.

use std::fs;
use std::path::{Path, PathBuf};

use exciton2des::error::Result;
use exciton2des::gridio::GridFile;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub file: String,
    pub kind: &'static str,
    pub description: String,
}

pub struct Output {
    dir: PathBuf,
    csv: bool,
    pub records: Vec<Record>,
}

impl Output {
    pub fn create(dir: &Path, csv: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), csv, records: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes a grid file (and its CSV export when enabled).
    pub fn grid(&mut self, grid: GridFile, description: &str) -> Result<()> {
        let file = format!("{}.grid", grid.name);
        grid.write(&self.dir.join(&file))?;
        self.records.push(Record { file, kind: "grid", description: description.into() });
        if self.csv {
            let file = format!("{}.csv", grid.name);
            fs::write(self.dir.join(&file), grid.to_csv()?)?;
            self.records.push(Record { file, kind: "csv", description: description.into() });
        }
        Ok(())
    }

    /// Writes a text artifact (TSV table or report).
    pub fn text(&mut self, file: &str, content: &str, description: &str) -> Result<()> {
        fs::write(self.dir.join(file), content)?;
        let kind = if file.ends_with(".tsv") { "table" } else { "text" };
        self.records.push(Record { file: file.into(), kind, description: description.into() });
        Ok(())
    }
}
