//! `key=value` config files. Each key names a long flag of the subcommand;
//! the file's flags are inserted before the command-line ones, so the
//! command line wins.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};

/// Flags read from a config file, in file order.
pub fn parse(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got {line:?}", lineno + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') {
            bail!("config line {}: bad key {key:?}", lineno + 1);
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Removes `--config PATH` (or `--config=PATH`) from `args` and splices the
/// file's flags in right after the subcommand name.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path: Option<OsString> = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => path = Some(it.next().context("--config needs a path")?),
            Some(s) if s.starts_with("--config=") => path = Some(s["--config=".len()..].into()),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let flags = parse(&text)?;
    // rest[0] is the program name and rest[1] the subcommand.
    if rest.len() < 2 {
        return Ok(rest);
    }
    let tail = rest.split_off(2);
    rest.extend(flags);
    rest.extend(tail);
    Ok(rest)
}
