use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub const RUN_JSON: &str = "run.json";

/// Resolved parameters of one invocation. Keys are flag names with `-`
/// written as `_`; `null` marks a flag left unset.
#[derive(Serialize)]
struct RunRecord<'a, P: Serialize> {
    command: &'a str,
    version: &'a str,
    #[serde(flatten)]
    params: &'a P,
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn write_run_json<P: Serialize>(dir: &Path, command: &str, params: &P) -> Result<(), CliError> {
    let record = RunRecord {
        command,
        version: fastkm::VERSION,
        params,
    };
    write_json(&dir.join(RUN_JSON), &record)
}
