use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

/// Environment variable that overrides every configured command template.
pub const SOLVER_CMD_ENV: &str = "ENSROB_SOLVER_CMD";

/// Config file looked up in the working directory when `--config` is absent.
pub const DEFAULT_CONFIG: &str = "ensrob.toml";

/// Backend command templates. `{file}` is replaced by the model path and
/// `{sol}` by a solution path the solver may write.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub lp_command: Option<String>,
    pub smt_command: Option<String>,
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).with_context(|| format!("invalid config {}", origin.display()))
    }

    /// Reads `explicit`, or the default file if it exists, or nothing.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        let path: PathBuf = match explicit {
            Some(p) => p.to_path_buf(),
            None => {
                let p = PathBuf::from(DEFAULT_CONFIG);
                if !p.exists() {
                    return Ok(Config::default());
                }
                p
            }
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, &path)
    }
}

/// Picks the command template: environment, then flag, then config.
pub fn resolve_command(env: Option<String>, flag: Option<&str>, configured: Option<&str>) -> Option<String> {
    env.filter(|s| !s.trim().is_empty())
        .or_else(|| flag.map(str::to_owned))
        .or_else(|| configured.map(str::to_owned))
}
