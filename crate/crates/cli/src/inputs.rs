//! Reading and writing files, and turning path arguments into run logs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use padbench_core::metrics::{parse_csv, RunLog};

use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::data(path, e))
}

/// Writes via a sibling temporary file and a rename, so readers never see a
/// half-written file.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| {
            let _ = fs::remove_file(&tmp);
            CliError::data(path, e)
        })
}

/// Writes to stdout. A closed pipe (`padbench ... | head`) is not an error.
pub fn emit(text: &str) -> Result<(), CliError> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err(CliError::Data(format!("writing output: {e}")))
        }
        _ => Ok(()),
    }
}

/// Expands directories to the `.csv` files directly inside them, sorted by
/// name. Plain files are kept as given.
pub fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| CliError::data(path, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}

/// Logs grouped by condition name, with the logs in each group in input
/// order.
pub struct LoadedLogs {
    pub groups: BTreeMap<String, Vec<RunLog>>,
    pub skipped: usize,
}

impl LoadedLogs {
    /// Groups with the first `k` trials of every run dropped.
    pub fn without_warmup(&self, k: u32) -> Vec<(String, Vec<RunLog>)> {
        self.groups
            .iter()
            .map(|(name, logs)| {
                let logs = if k == 0 {
                    logs.clone()
                } else {
                    logs.iter().map(|l| l.exclude_warmup(k)).collect()
                };
                (name.clone(), logs)
            })
            .collect()
    }
}

/// Parses every input, reporting bad files on stderr and carrying on.
/// Fails only when nothing usable is left.
pub fn load_logs(paths: &[PathBuf]) -> Result<LoadedLogs, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("no input files given".into()));
    }
    let files = expand(paths)?;
    if files.is_empty() {
        return Err(CliError::Usage(
            "no .csv files found in the given directories".into(),
        ));
    }
    let mut groups: BTreeMap<String, Vec<RunLog>> = BTreeMap::new();
    let mut skipped = 0;
    for file in &files {
        let parsed =
            read_text(file).and_then(|text| parse_csv(&text).map_err(|e| CliError::data(file, e)));
        match parsed {
            Ok(log) => {
                groups
                    .entry(log.header.condition.clone())
                    .or_default()
                    .push(log);
            }
            Err(e) => {
                eprintln!("padbench: skipping {e}");
                skipped += 1;
            }
        }
    }
    if groups.is_empty() {
        return Err(CliError::Data(format!(
            "none of the {} input files could be read",
            files.len()
        )));
    }
    Ok(LoadedLogs { groups, skipped })
}
