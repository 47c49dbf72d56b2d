use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// A double at 17 significant digits, so it round-trips exactly.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Where a command writes its machine output: a file under the output
/// directory, or standard output.
pub struct Sink {
    out: Box<dyn Write>,
    path: Option<PathBuf>,
}

impl Sink {
    pub fn open(out_dir: Option<&Path>, name: &str) -> Result<Sink> {
        match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(name);
                let f = File::create(&path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
                Ok(Sink {
                    out: Box::new(BufWriter::new(f)),
                    path: Some(path),
                })
            }
            None => Ok(Sink {
                out: Box::new(BufWriter::new(io::stdout())),
                path: None,
            }),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")?;
        Ok(())
    }

    /// One CSV row of 17-digit numbers, optionally led by integer columns.
    pub fn csv_row(&mut self, ints: &[u64], vals: &[f64]) -> Result<()> {
        let cells: Vec<String> = ints.iter().map(u64::to_string).chain(vals.iter().map(|&v| fmt17(v))).collect();
        self.line(&cells.join(","))
    }

    pub fn json<T: Serialize>(&mut self, v: &T) -> Result<()> {
        let s = serde_json::to_string(v).map_err(|e| Error::Input(format!("serialisation failed: {e}")))?;
        self.line(&s)
    }

    pub fn finish(mut self) -> Result<Option<PathBuf>> {
        self.out.flush()?;
        Ok(self.path)
    }
}
