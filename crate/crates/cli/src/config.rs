//! TOML scenario files.
//!
//! ```toml
//! profile = "test"
//! bit_length = 64
//! dim = 8
//! n = 2
//! t = 2
//! ttl = 400
//! payload_hex = "68656c6c6f"   # or payload_file = "msg.bin"
//! seed = "00ff"
//!
//! [faults]
//! kill_c = 2
//! wrong_h = true
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use deaddrop_core::math::Profile;
use deaddrop_sim::session::Scenario;
use deaddrop_sim::world::Faults;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub kill_c: Option<usize>,
    pub corrupt_c: Option<usize>,
    pub omit_proof: Option<usize>,
    #[serde(default)]
    pub shared_intermediary: bool,
    #[serde(default)]
    pub wrong_h: bool,
    #[serde(default)]
    pub skip_retrieve: bool,
    #[serde(default)]
    pub forge_finalize: bool,
}

/// Every field is optional; missing ones take the simulator defaults.
#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub profile: Option<String>,
    pub bit_length: Option<u64>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub ttl: Option<u64>,
    pub amount: Option<u64>,
    pub subnets: Option<usize>,
    pub payload_hex: Option<String>,
    pub payload_file: Option<PathBuf>,
    /// Hex.
    pub seed: Option<String>,
    #[serde(default)]
    pub faults: FaultConfig,
}

pub fn parse_seed(hex_seed: &str) -> Result<Vec<u8>, CliError> {
    let seed = hex::decode(hex_seed.trim()).map_err(|e| CliError::Config(format!("seed is not hex: {e}")))?;
    if seed.is_empty() {
        return Err(CliError::Config("seed must be nonempty".into()));
    }
    Ok(seed)
}

pub fn parse_profile(s: &str) -> Result<Profile, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("profile must be test or production, got {s:?}")))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml(&read(path)?)
    }

    /// Resolves against the defaults. `base` anchors a relative
    /// `payload_file`; `seed` and `profile` come from the command line and
    /// win over the file.
    pub fn to_scenario(&self, base: &Path, seed: Option<&str>, profile: Option<&str>) -> Result<Scenario, CliError> {
        let mut s = Scenario::default();
        let profile = profile.or(self.profile.as_deref()).map(parse_profile).transpose()?;
        if profile == Some(Profile::Production) {
            s.bit_length = 192;
        }
        s.profile = profile;
        s.bit_length = self.bit_length.unwrap_or(s.bit_length);
        s.dim = self.dim.unwrap_or(s.dim);
        s.n = self.n.unwrap_or(s.n);
        s.t = self.t.unwrap_or(s.t);
        s.ttl = self.ttl.unwrap_or(s.ttl);
        s.amount = self.amount.unwrap_or(s.amount);
        s.subnets = self.subnets.unwrap_or(s.subnets);
        if let Some(seed) = seed.or(self.seed.as_deref()) {
            s.seed = parse_seed(seed)?;
        }
        s.payload = match (&self.payload_hex, &self.payload_file) {
            (Some(_), Some(_)) => return Err(CliError::Config("set payload_hex or payload_file, not both".into())),
            (Some(h), None) => hex::decode(h).map_err(|e| CliError::Config(format!("payload_hex: {e}")))?,
            (None, Some(f)) => {
                let path = base.join(f);
                fs::read(&path).map_err(|source| CliError::Io { path, source })?
            }
            (None, None) => s.payload,
        };
        let f = &self.faults;
        s.faults = Faults {
            kill_c: f.kill_c,
            corrupt_c: f.corrupt_c,
            omit_proof: f.omit_proof,
            shared_intermediary: f.shared_intermediary,
        };
        s.wrong_h = f.wrong_h;
        s.skip_retrieve = f.skip_retrieve;
        s.forge_finalize = f.forge_finalize;
        s.validate()?;
        Ok(s)
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}
