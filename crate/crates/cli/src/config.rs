//! `key = value` config files merged under command-line flags.
//!
//! Keys are long flag names (`-` and `_` are interchangeable). A key may
//! repeat for multi-valued flags. Flags given on the command line win over
//! every config entry with the same key.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push(Entry { line: i + 1, key, value: value.trim().to_string() });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    parse(&text).map_err(|e| e.context(path.display()))
}

fn given(argv: &[OsString], long: &str, short: Option<char>) -> bool {
    argv.iter().filter_map(|a| a.to_str()).any(|a| {
        a == format!("--{long}")
            || a.starts_with(&format!("--{long}="))
            || short.is_some_and(|s| a.starts_with('-') && !a.starts_with("--") && a[1..].starts_with(s))
    })
}

fn truthy(entry: &Entry) -> Result<bool> {
    match entry.value.as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(CliError::Usage(format!("config line {}: `{}` expects true or false, got `{other}`", entry.line, entry.key))),
    }
}

/// Appends config entries for `subcommand` to `argv` as flags, skipping keys
/// already given on the command line. Keys unknown to every subcommand are
/// errors; keys belonging only to other subcommands are ignored.
pub fn merge(cmd: &Command, subcommand: &str, mut argv: Vec<OsString>, entries: &[Entry]) -> Result<Vec<OsString>> {
    let original = argv.clone();
    let sub = cmd.find_subcommand(subcommand).expect("parsed subcommand exists");
    for entry in entries {
        if entry.key == "config" {
            continue;
        }
        let find = |c: &Command| c.get_arguments().find(|a| a.get_long() == Some(entry.key.as_str())).cloned();
        let Some(arg) = find(sub).or_else(|| find(cmd).filter(|a| a.is_global_set())) else {
            if cmd.get_subcommands().any(|s| find(s).is_some()) {
                continue;
            }
            return Err(CliError::Usage(format!("config line {}: unknown key `{}`", entry.line, entry.key)));
        };
        if given(&original, &entry.key, arg.get_short()) {
            continue;
        }
        let flag = OsString::from(format!("--{}", entry.key));
        match arg.get_action() {
            ArgAction::SetTrue => {
                if truthy(entry)? {
                    argv.push(flag);
                }
            }
            ArgAction::Count => {
                let n: usize = entry
                    .value
                    .parse()
                    .map_err(|_| CliError::Usage(format!("config line {}: `{}` expects a count", entry.line, entry.key)))?;
                argv.extend(std::iter::repeat_n(flag, n));
            }
            _ => {
                argv.push(flag);
                argv.push(entry.value.clone().into());
            }
        }
    }
    Ok(argv)
}
