//! Run configuration: seed, tolerances, smoothing profile and constants ranges.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expand::{ClassifyTolerances, ConstantsRanges, GeometryTolerances};

pub const SEED_ENV: &str = "ARBOREAL_SEED";

const TOLERANCE_NAMES: [&str; 7] =
    ["membership", "injectivity", "profile", "margin", "transversality", "direction", "classify_transversality"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub delta: f64,
    /// points per axis for the profile check
    pub grid: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig { delta: 0.1, grid: 512 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub profile: ProfileConfig,
    /// samples per vertex for the comparison check
    pub samples: usize,
    pub constants: ConstantsRanges,
}

impl Default for Config {
    fn default() -> Self {
        let tolerances = [
            ("membership", 1e-6),
            ("injectivity", 1e-8),
            ("profile", 1e-6),
            ("margin", 1e-6),
            ("transversality", 1e-3),
            ("direction", 1e-6),
            ("classify_transversality", 1e-3),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Config { seed: 1, tolerances, profile: ProfileConfig::default(), samples: 10_000, constants: ConstantsRanges::default() }
    }
}

impl Config {
    /// Parse TOML; missing tolerances keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut c: Config = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {}", e.message())))?;
        for (k, v) in Config::default().tolerances {
            c.tolerances.entry(k).or_insert(v);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_toml(&text)
    }

    /// Defaults or `path`, then the seed override from the environment.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        let mut c = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Ok(s) = std::env::var(SEED_ENV) {
            c.seed = s.trim().parse().map_err(|_| Error::Parse(format!("{SEED_ENV}: '{s}' is not an unsigned integer")))?;
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.tolerances {
            if !TOLERANCE_NAMES.contains(&k.as_str()) {
                return Err(Error::Validation(format!("unknown tolerance '{k}'")));
            }
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Validation(format!("tolerance '{k}' must be positive, got {v}")));
            }
        }
        if !(self.profile.delta > 0.0 && self.profile.delta <= 1.0) {
            return Err(Error::Validation(format!("profile delta {} must lie in (0, 1]", self.profile.delta)));
        }
        if self.profile.grid < 2 {
            return Err(Error::Validation("profile grid needs at least 2 points per axis".into()));
        }
        if self.samples == 0 {
            return Err(Error::Validation("samples must be positive".into()));
        }
        self.constants.validate()
    }

    /// The single generator every randomized command draws from.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| Config::default().tolerances.get(name).copied())
            .expect("known tolerance name")
    }

    pub fn geometry(&self) -> GeometryTolerances {
        GeometryTolerances { margin: self.tolerance("margin"), transversality: self.tolerance("transversality") }
    }

    pub fn classify(&self) -> ClassifyTolerances {
        ClassifyTolerances {
            direction: self.tolerance("direction"),
            transversality: self.tolerance("classify_transversality"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml("seed = 9\n[tolerances]\nmembership = 1e-5\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.tolerance("membership"), 1e-5);
        assert_eq!(c.tolerance("injectivity"), 1e-8);
        assert_eq!(c.profile.grid, 512);
    }

    #[test]
    fn rejects_bad_values() {
        assert_eq!(Config::from_toml("[tolerances]\nmembership = -1.0\n").unwrap_err().code(), "validation");
        assert_eq!(Config::from_toml("[tolerances]\nbogus = 1.0\n").unwrap_err().code(), "validation");
        assert_eq!(Config::from_toml("[constants]\narc_radius = [0.1, 0.2]\n").unwrap_err().code(), "validation");
        assert_eq!(Config::from_toml("seed = \"x\"\n").unwrap_err().code(), "parse");
    }
}
