//! Run configuration files.
//!
//! Every key is namespaced: `run.*` for the run itself, `policy.*` for the
//! search policy and `guards.*` for the guard toggles. Unknown keys are errors.
//!
//! ```toml
//! run.policy = "gear-fixed"
//! run.steps = 100
//! run.seed = 7
//! run.landscape = "ladder"
//! policy.beta = 0.5
//! guards.block_when_no_untried_pair = true
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use gear_core::harness::{LandscapeSpec, PolicyKind, RunConfig};
use gear_core::policy::PolicyConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GearError, Result};
use crate::fixture::{resolve_landscape, BUILTIN_LADDER};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `ladder` or a landscape file, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landscape: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    policy: toml::Table,
    #[serde(default)]
    guards: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub run: RunSection,
    pub policy: PolicyConfig,
    /// Directory relative landscape paths are resolved against.
    pub base_dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub policy: Option<PolicyKind>,
    pub steps: Option<u32>,
    pub seed: Option<u64>,
    pub landscape: Option<String>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| GearError::config(origin, e.to_string()))?;
        let mut policy = raw.policy;
        if policy.contains_key("guards") {
            return Err(GearError::config(origin, "guard toggles belong under guards.*, not policy.guards"));
        }
        policy.insert("guards".into(), toml::Value::Table(raw.guards));
        let policy: PolicyConfig = toml::Value::Table(policy)
            .try_into()
            .map_err(|e: toml::de::Error| GearError::config(origin, e.to_string()))?;
        policy.validate().map_err(|e| GearError::config(origin, e.to_string()))?;
        Ok(ConfigFile { run: raw.run, policy, base_dir: origin.parent().map(Path::to_path_buf) })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GearError::io(path, e))?;
        ConfigFile::parse(&text, path)
    }

    /// `path` when given, otherwise all defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let encode = |e: toml::ser::Error| GearError::Usage(format!("cannot encode config: {e}"));
        let mut policy = match toml::Value::try_from(&self.policy).map_err(encode)? {
            toml::Value::Table(t) => t,
            _ => unreachable!("policy config is a table"),
        };
        let guards = policy.remove("guards").expect("policy config has guards");
        let mut top = toml::Table::new();
        top.insert("run".into(), toml::Value::try_from(&self.run).map_err(encode)?);
        top.insert("policy".into(), toml::Value::Table(policy));
        top.insert("guards".into(), guards);
        toml::to_string(&top).map_err(encode)
    }

    pub fn landscape(&self, overrides: &Overrides) -> Result<LandscapeSpec> {
        let reference =
            overrides.landscape.as_deref().or(self.run.landscape.as_deref()).unwrap_or(BUILTIN_LADDER);
        let base = if overrides.landscape.is_some() { None } else { self.base_dir.as_deref() };
        resolve_landscape(reference, base)
    }

    pub fn run_config(&self, overrides: &Overrides) -> Result<RunConfig> {
        let config = RunConfig {
            policy_kind: overrides.policy.or(self.run.policy).unwrap_or(PolicyKind::GearFixed),
            steps: overrides.steps.or(self.run.steps).unwrap_or(100),
            seed: overrides.seed.or(self.run.seed).unwrap_or(0),
            landscape: self.landscape(overrides)?,
            policy: self.policy.clone(),
        };
        config.validate().map_err(|e| GearError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Serialize)]
struct DigestInput<'a> {
    policy_kind: PolicyKind,
    policy: &'a PolicyConfig,
    landscape: &'a LandscapeSpec,
}

/// SHA-256 over everything that shapes decisions except the seed and the
/// step budget, so a shorter run is a valid prefix of a longer one.
pub fn config_digest(config: &RunConfig) -> String {
    let input =
        DigestInput { policy_kind: config.policy_kind, policy: &config.policy, landscape: &config.landscape };
    let bytes = serde_json::to_vec(&input).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}
