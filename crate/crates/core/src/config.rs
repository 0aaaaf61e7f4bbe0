//! Scenario files: TOML with unit-suffixed quantities.

use std::path::{Path, PathBuf};

use crate::scenario::Scenario;
use crate::{Error, Result};

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let sc: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    sc.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(sc)
}

pub fn to_toml(sc: &Scenario) -> Result<String> {
    toml::to_string(sc).map_err(|e| Error::Config(e.to_string()))
}

/// Read, parse and validate a scenario file. A relative `trace_file` is
/// taken relative to the scenario file's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario file {}: {e}", path.display())))?;
    let mut sc = parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if let Some(trace) = &sc.physio.trace_file {
        if trace.is_relative() {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_else(PathBuf::new);
            sc.physio.trace_file = Some(base.join(trace));
        }
        if !sc.physio.trace_file.as_ref().is_some_and(|p| p.exists()) {
            return Err(Error::Config(format!(
                "{}: trace file {} does not exist",
                path.display(),
                sc.physio.trace_file.as_ref().unwrap().display()
            )));
        }
    }
    Ok(sc)
}

pub fn save_scenario(sc: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, to_toml(sc)?)?;
    Ok(())
}
