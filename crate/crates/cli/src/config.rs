//! TOML overrides. Top-level keys override the global flags; the table at
//! the subcommand path (`[bench.gridworld]`, `[serve]`, ...) overrides that
//! subcommand's flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::CliError;
use crate::GlobalArgs;

const SECTIONS: [&str; 6] = ["bench", "learn", "solve", "export", "simulate", "serve"];

pub fn load(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.parse::<Table>().map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
}

fn overlay<T: Serialize + DeserializeOwned>(args: &T, overrides: &Table, context: &str) -> Result<T, CliError> {
    let mut base = match Value::try_from(args) {
        Ok(Value::Table(t)) => t,
        Ok(_) => unreachable!("argument structs serialize to tables"),
        Err(e) => return Err(CliError::Run(e.to_string())),
    };
    for (k, v) in overrides {
        base.insert(k.clone(), v.clone());
    }
    Value::Table(base)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("config [{context}]: {}", e.message())))
}

pub fn merge_global(args: &GlobalArgs, file: Option<&Table>) -> Result<GlobalArgs, CliError> {
    let Some(file) = file else { return Ok(args.clone()) };
    let top: Table =
        file.iter().filter(|(k, _)| !SECTIONS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
    let mut merged = overlay(args, &top, "top level")?;
    merged.config = args.config.clone();
    Ok(merged)
}

pub fn merge<T: Serialize + DeserializeOwned + Clone>(
    args: &T,
    file: Option<&Table>,
    path: &[&str],
) -> Result<T, CliError> {
    let mut table = file;
    for key in path {
        table = match table.and_then(|t| t.get(*key)) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(CliError::Usage(format!("config key `{key}` must be a table"))),
            None => None,
        };
    }
    match table {
        Some(t) => overlay(args, t, &path.join(".")),
        None => Ok(args.clone()),
    }
}
