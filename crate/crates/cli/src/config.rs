//! Flat `key=value` config files, expanded into command-line flags.

use std::path::Path;

/// Keys are long flag names; `command` names the subcommand when none is
/// given on the command line. `true` turns a switch on, `false` leaves it
/// off.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value, got `{line}`", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Index of the first positional argument, which is the subcommand.
fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Inserts the flags of the `--config` file right after the subcommand so
/// that flags given explicitly, which come later, take precedence.
pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config `{path}`: {e}"))?;
    let entries = parse(&text)?;
    let mut flags = Vec::new();
    let mut command = None;
    for (k, v) in entries {
        if k == "command" {
            command = Some(v);
            continue;
        }
        match v.as_str() {
            "true" => flags.push(format!("--{k}")),
            "false" => {}
            _ => {
                flags.push(format!("--{k}"));
                flags.extend(v.split_whitespace().map(str::to_string));
            }
        }
    }
    let at = match subcommand_index(&args) {
        Some(i) => i + 1,
        None => {
            let cmd = command.ok_or_else(|| "no command given on the command line or in the config".to_string())?;
            args.push(cmd);
            args.len()
        }
    };
    args.splice(at..at, flags);
    Ok(args)
}
