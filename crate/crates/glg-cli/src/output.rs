//! Report and CSV emission, config loading and exit-code mapping.

use glg_core::report::{write_atomic, ExperimentReport};
use glg_core::Error;
use serde::de::DeserializeOwned;
use std::path::{Path, PathBuf};

pub type CliResult<T> = std::result::Result<T, Error>;

/// 1 for bad input (usage, config, shapes, io), 2 for numerical failures.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::InvalidModel(_)
        | Error::ShapeMismatch(_)
        | Error::OutOfRange(_)
        | Error::RegionOutOfBounds
        | Error::GridExceedsProfile
        | Error::DegenerateForm
        | Error::DegenerateResidues => 1,
        _ => 2,
    }
}

/// Parameters from an optional JSON file, defaults elsewhere.
pub fn load_params<P: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<P> {
    match path {
        None => Ok(P::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

pub struct Output {
    pub dir: PathBuf,
    pub csv: bool,
    pub print: bool,
}

impl Output {
    /// Writes `<dir>/<stem>.json`, prints the summary line and returns the exit code.
    pub fn finish(&self, rep: &ExperimentReport, stem: &str) -> CliResult<u8> {
        let path = self.dir.join(format!("{stem}.json"));
        rep.write(&path)?;
        if self.print {
            println!("{}", rep.to_json());
        }
        println!("{} -> {}", rep.summary_line(), path.display());
        Ok(if rep.passed { 0 } else { 2 })
    }

    pub fn csv(&self, stem: &str, body: &str) -> CliResult<()> {
        if self.csv {
            write_atomic(&self.dir.join(format!("{stem}.csv")), body.as_bytes())?;
        }
        Ok(())
    }
}
