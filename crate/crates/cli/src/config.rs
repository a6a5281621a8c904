//! Flat `key = value` config files.
//!
//! Keys are the long flag names of the chosen subcommand. Entries are
//! spliced into the argument list unless the same flag was given on the
//! command line, so flags always win and clap validates both sources.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Command;

use crate::common::usage;

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return usage(format!("config line {}: expected key = value", no + 1));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return usage(format!("config line {}: empty key", no + 1));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn given(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// Returns `args` with config-file entries appended.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("cannot read config file {}", path.to_string_lossy()))?;
    let entries = parse(&text)?;
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(sub_name) = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).find(|a| names.contains(a)) else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(&sub_name).expect("listed above");

    let mut out = args.clone();
    for (key, value) in entries {
        if key == "config" || given(&args, &key) {
            continue;
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            return usage(format!("config key '{key}' is not a flag of '{sub_name}'"));
        };
        if arg.get_action().takes_values() {
            out.push(format!("--{key}").into());
            out.push(value.into());
        } else {
            match value.as_str() {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => return usage(format!("config key '{key}' expects true or false")),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse("# sweep\nbase_seed = 4\n\ntrials=2 # short\n").unwrap();
        assert_eq!(e, vec![("base-seed".into(), "4".into()), ("trials".into(), "2".into())]);
        assert!(parse("oops").is_err());
    }
}
