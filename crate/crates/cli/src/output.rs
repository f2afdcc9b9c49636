//! CSV artifacts with JSON mirrors, plus the human-readable summary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::error::CliError;

pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<&str>) -> Self {
        Self {
            out: out.map(PathBuf::from),
        }
    }

    /// Writes rows as CSV to the output path and as a JSON array beside it,
    /// or as CSV to stdout when no path is configured.
    pub fn emit<T: Serialize>(&self, rows: &[T]) -> Result<(), CliError> {
        match &self.out {
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                write_csv(BufWriter::new(File::create(path)?), rows)?;
                let mut json = BufWriter::new(File::create(path.with_extension("json"))?);
                serde_json::to_writer_pretty(&mut json, rows)?;
                json.write_all(b"\n")?;
                json.flush()?;
            }
            None => write_csv(io::stdout().lock(), rows)?,
        }
        Ok(())
    }

    /// Summary lines go to stdout when the artifact is a file, else to stderr.
    pub fn summary(&self, line: impl AsRef<str>) {
        match self.out {
            Some(_) => println!("{}", line.as_ref()),
            None => eprintln!("{}", line.as_ref()),
        }
    }
}

fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
