use std::path::{Path, PathBuf};

use abrlab_core::env::{LinkConfig, PlayerConfig};
use abrlab_core::rl::PpoConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Training run description. Relative paths resolve against the directory
/// holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub trace_dir: PathBuf,
    /// Omitted means the built-in 48-chunk default manifest.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default = "default_qoe")]
    pub qoe: String,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub player: PlayerSettings,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub ppo: PpoConfig,
}

fn default_qoe() -> String {
    "lin".into()
}

/// Player fields a config may set. The start offset is always randomized
/// during training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlayerSettings {
    pub buffer_cap_s: f64,
    pub history_len: usize,
    pub observe_link: bool,
}

impl Default for PlayerSettings {
    fn default() -> Self {
        let p = PlayerConfig::default();
        Self {
            buffer_cap_s: p.buffer_cap_s,
            history_len: p.history_len,
            observe_link: p.observe_link,
        }
    }
}

impl PlayerSettings {
    pub fn to_player(self) -> PlayerConfig {
        PlayerConfig {
            buffer_cap_s: self.buffer_cap_s,
            history_len: self.history_len,
            observe_link: self.observe_link,
            ..PlayerConfig::default()
        }
    }
}

/// Parsed config plus whether the file pinned the seed itself.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub seed_in_file: bool,
}

pub fn load_run_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let seed_in_file = value.get("seed").is_some();
    let mut config: RunConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config.trace_dir = resolve(base, &config.trace_dir);
    config.manifest = config.manifest.map(|m| resolve(base, &m));
    config.out_dir = config.out_dir.map(|o| resolve(base, &o));
    Ok(LoadedConfig {
        config,
        seed_in_file,
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Hex SHA-256 over everything that shapes the trained weights. Paths are
/// left out so the same run from different directories hashes alike.
pub fn config_hash(
    algo: &str,
    config: &RunConfig,
    manifest_json: &str,
    trace_ids: &[String],
) -> String {
    #[derive(Serialize)]
    struct Hashed<'a> {
        algo: &'a str,
        ppo: &'a PpoConfig,
        qoe: &'a str,
        link: &'a LinkConfig,
        player: &'a PlayerSettings,
        manifest: &'a str,
        traces: &'a [String],
    }
    let canonical = serde_json::to_string(&Hashed {
        algo,
        ppo: &config.ppo,
        qoe: &config.qoe,
        link: &config.link,
        player: &config.player,
        manifest: manifest_json,
        traces: trace_ids,
    })
    .expect("config serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
