//! Flat `key = value` configuration files.
//!
//! Keys are long flag names without the dashes (`patience = 20`), so a file
//! can set anything a flag can. The file's settings are spliced in ahead of
//! the command-line flags; clap keeps the last occurrence, so flags win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::Usage;

/// Parses a config file into flag arguments.
pub fn config_args(path: &Path) -> Result<Vec<OsString>, Usage> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let mut args = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Usage(format!("{}:{}: expected key = value", path.display(), n + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(Usage(format!("{}:{}: bad key `{key}`", path.display(), n + 1)));
        }
        if key == "config" {
            return Err(Usage(format!("{}:{}: config files do not nest", path.display(), n + 1)));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// The `--config` path, if any, found without a full parse.
pub fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// `argv` with `extra` inserted right after the subcommand.
pub fn splice(argv: Vec<OsString>, subcommands: &[String], extra: Vec<OsString>) -> Vec<OsString> {
    match argv.iter().position(|a| subcommands.iter().any(|s| a == s.as_str())) {
        Some(i) => {
            let mut out = argv[..=i].to_vec();
            out.extend(extra);
            out.extend_from_slice(&argv[i + 1..]);
            out
        }
        None => argv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[OsString]) -> Vec<String> {
        v.iter().map(|s| s.to_string_lossy().into_owned()).collect()
    }

    #[test]
    fn parses_flat_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(
            &path,
            "# training\npatience = 20\nbatch_size=32\n\nshared-vocab = true\nsame-full-name = false\nblock = Y Chen\n",
        )
        .unwrap();
        assert_eq!(
            strs(&config_args(&path).unwrap()),
            [
                "--patience",
                "20",
                "--batch-size",
                "32",
                "--shared-vocab",
                "--block",
                "Y Chen"
            ]
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        fs::write(&path, "patience 20\n").unwrap();
        assert!(config_args(&path).is_err());
        fs::write(&path, "pat ience = 20\n").unwrap();
        assert!(config_args(&path).is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let argv: Vec<OsString> = ["namesake", "--seed", "3", "train", "--patience", "5"]
            .iter()
            .map(Into::into)
            .collect();
        let subs = vec!["train".to_string(), "predict".to_string()];
        let out = splice(argv.clone(), &subs, vec!["--patience".into(), "9".into()]);
        assert_eq!(
            strs(&out),
            ["namesake", "--seed", "3", "train", "--patience", "9", "--patience", "5"]
        );
        assert_eq!(config_path(&argv), None);
        let with: Vec<OsString> = ["namesake", "train", "--config=a.conf"]
            .iter()
            .map(Into::into)
            .collect();
        assert_eq!(config_path(&with), Some("a.conf".into()));
    }
}
