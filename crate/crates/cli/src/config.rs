use std::path::Path;

use riskplace_core::netgraph::{build_network, NetworkSpec};
use riskplace_core::risk::ScenarioConfig;
use riskplace_core::UncertainNetwork;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

/// The shipped example, also used by `reproduce` when no config is given.
pub const EXAMPLE_CONFIG: &str = include_str!("../../../configs/example.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSpec,
    pub scenario: ScenarioConfig,
}

/// A parsed config together with the exact text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub network: UncertainNetwork,
    pub text: String,
    pub source: String,
}

impl LoadedConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, Failure> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Failure::Config(format!("{source}: {}", e.message())))?;
        let network = build_network(&config.network).map_err(|e| Failure::Config(format!("{source}: {e}")))?;
        config.scenario.validate_parameters().map_err(|e| Failure::Config(format!("{source}: {e}")))?;
        Ok(LoadedConfig { config, network, text: text.to_string(), source: source.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn example() -> Self {
        Self::parse(EXAMPLE_CONFIG, "example.toml").expect("shipped example config is valid")
    }

    pub fn digest(&self) -> String {
        digest_hex(self.text.as_bytes())
    }
}

pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
