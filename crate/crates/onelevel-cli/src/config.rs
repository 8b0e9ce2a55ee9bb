//! Flat `key = value` configuration files.
//!
//! Keys are exactly the long flag names without the leading dashes, one
//! assignment per line. Blank lines and lines starting with `#` are
//! skipped; later assignments to the same key win. Command-line flags
//! always override file entries.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key a configuration file may set.
pub const VALID_KEYS: &[&str] = &[
    "family",
    "test",
    "sigma",
    "weight-a",
    "weight-b",
    "X",
    "mode",
    "Z",
    "q",
    "limit",
    "n",
    "p-max",
    "poisson-c",
    "poisson-height",
    "poisson-step",
    "threads",
    "cache-dir",
    "out",
    "format",
];

#[derive(Debug)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig {
            entries: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "config line {}: expected key = value, got '{line}'",
                    index + 1
                )));
            };
            let key = key.trim();
            if !VALID_KEYS.contains(&key) {
                return Err(CliError::usage(format!(
                    "unknown config key '{key}'; valid keys: {}",
                    VALID_KEYS.join(", ")
                )));
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    /// The flag value when present, otherwise the file entry parsed into
    /// the same type.
    pub fn merge<T: FromStr>(
        &self,
        flag: Option<T>,
        key: &'static str,
    ) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key} = '{raw}': {e}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_assignments_comments_and_blanks() {
        let file = FileConfig::parse(
            "# experiment defaults\nsigma = 0.8\n\nX = 1e3,1e4\nmode=full\nsigma = 1.0\n",
        )
        .unwrap();
        assert_eq!(file.merge::<f64>(None, "sigma").unwrap(), Some(1.0));
        assert_eq!(
            file.merge::<String>(None, "X").unwrap().as_deref(),
            Some("1e3,1e4")
        );
        assert_eq!(
            file.merge::<String>(None, "mode").unwrap().as_deref(),
            Some("full")
        );
        assert_eq!(file.merge::<f64>(None, "Z").unwrap(), None);
    }

    #[test]
    fn flags_override_file_entries() {
        let file = FileConfig::parse("sigma = 0.5\n").unwrap();
        assert_eq!(file.merge(Some(1.2f64), "sigma").unwrap(), Some(1.2));
    }

    #[test]
    fn unknown_keys_are_listed_against_the_valid_set() {
        let err = FileConfig::parse("sigmaa = 1\n").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("sigmaa"));
        assert!(err.message.contains("weight-a"));
        assert!(err.message.contains("poisson-step"));
    }

    #[test]
    fn malformed_lines_and_values_are_usage_errors() {
        let err = FileConfig::parse("sigma\n").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("line 1"));

        let file = FileConfig::parse("sigma = not-a-number\n").unwrap();
        let err = file.merge::<f64>(None, "sigma").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("not-a-number"));
    }
}
