use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use serde::Deserialize;

/// Settings read from a TOML file. Flags and `REGEXPASSPORT_*` variables
/// take precedence over every key here.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub dialect: Option<String>,
    pub format: Option<String>,
    #[serde(default, with = "humantime_serde_opt")]
    pub budget: Option<Duration>,
    #[serde(default, with = "humantime_serde_opt")]
    pub timeout: Option<Duration>,
    #[serde(default, with = "humantime_serde_opt")]
    pub threshold: Option<Duration>,
    pub count: Option<usize>,
    pub min_len: Option<usize>,
}

/// Name looked up in the working directory when no file is given.
pub const DEFAULT_CONFIG_FILE: &str = "regexpassport.toml";

impl FileConfig {
    pub fn load(explicit: Option<&Path>) -> anyhow::Result<FileConfig> {
        let path: PathBuf = match explicit {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_CONFIG_FILE).is_file() => DEFAULT_CONFIG_FILE.into(),
            None => return Ok(FileConfig::default()),
        };
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

mod humantime_serde_opt {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| humantime::parse_duration(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_durations() {
        let c: FileConfig =
            toml::from_str("jobs = 3\nbudget = \"2s\"\ntimeout = \"150ms\"").unwrap();
        assert_eq!(c.jobs, Some(3));
        assert_eq!(c.budget, Some(Duration::from_secs(2)));
        assert_eq!(c.timeout, Some(Duration::from_millis(150)));
        assert!(toml::from_str::<FileConfig>("nope = 1").is_err());
    }
}
