use std::path::Path;

use serde::{Deserialize, Serialize};
use vallab::construction::WConstructionParams;
use vallab::exponents::{beta, is_prime};
use vallab::Exp;

use crate::error::{CliError, CliResult};

/// Environment variable naming a JSON [`RunConfig`].
pub const CONFIG_ENV: &str = "VALLAB_CONFIG";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    #[default]
    Text,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub p: u32,
    pub q: u32,
    pub m: u32,
    pub depth: u32,
    /// Target precision; `β_{depth+1}` when absent.
    pub prec: Option<Exp>,
    pub max_iter: u32,
    pub seed: u64,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 2,
            q: 3,
            m: 1,
            depth: 6,
            prec: None,
            max_iter: 8,
            seed: 1,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// The file named by `VALLAB_CONFIG`, or defaults.
    pub fn from_env() -> CliResult<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) => RunConfig::from_file(Path::new(&path)),
            None => Ok(RunConfig::default()),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !is_prime(v as u64) {
                return Err(CliError::Config(format!("{name} = {v} is not a prime")));
            }
        }
        if self.p == self.q {
            return Err(CliError::Config(format!("p and q must differ (both {})", self.p)));
        }
        if self.m == 0 || self.depth == 0 {
            return Err(CliError::Config("m and depth must be positive".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> WConstructionParams {
        WConstructionParams {
            p: self.p,
            q: self.q,
            start: 0,
            depth: self.depth,
        }
    }

    pub fn target_prec(&self) -> Exp {
        self.prec.clone().unwrap_or_else(|| beta(self.depth + 1, self.q))
    }

    pub fn json(&self) -> bool {
        self.output.format == Format::Json
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_json() {
        let c: RunConfig = serde_json::from_str(r#"{"p":3,"q":2,"prec":"7/8"}"#).unwrap();
        assert_eq!((c.p, c.q, c.depth), (3, 2, 6));
        assert_eq!(c.target_prec(), Exp::new(7, 8));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_equal_primes() {
        let c = RunConfig {
            q: 2,
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let c = RunConfig {
            p: 4,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_prec_follows_depth() {
        assert_eq!(RunConfig::default().target_prec(), beta(7, 3));
    }
}
