use std::path::Path;

use anyhow::Context;
use m2o::actors::{GroupConfig, DEFAULT_DELTA_T};
use m2o::crypto::KeySize;
use serde::Deserialize;

use crate::{usage, SimArgs};

/// Keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    nc: Option<usize>,
    seed: Option<u64>,
    delta_t: Option<u32>,
    key_size: Option<String>,
    scenario: Option<String>,
    out: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nc: usize,
    pub seed: u64,
    pub delta_t: u32,
    pub key_size: KeySize,
    pub scenario: String,
    pub out: Option<String>,
    pub replay_cache: bool,
}

fn read_file(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Flags override the file; the file overrides defaults.
    pub fn resolve(
        sim: &SimArgs,
        nc: Option<usize>,
        scenario: Option<&str>,
        out: Option<&Path>,
    ) -> anyhow::Result<Self> {
        let file = read_file(sim.config.as_deref())?;
        let key_size = sim.key_size.clone().or(file.key_size).unwrap_or_else(|| "full-3072".into());
        let cfg = Self {
            nc: nc.or(file.nc).unwrap_or(3),
            seed: sim.seed.or(file.seed).unwrap_or(0),
            delta_t: sim.delta_t.or(file.delta_t).unwrap_or(DEFAULT_DELTA_T),
            key_size: key_size.parse().map_err(usage)?,
            scenario: scenario.map(str::to_owned).or(file.scenario).unwrap_or_else(|| "honest".into()),
            out: out.map(|p| p.display().to_string()).or(file.out),
            replay_cache: !sim.break_replay_cache,
        };
        if cfg.nc < 2 {
            return Err(usage(format!("--nc must be at least 2, got {}", cfg.nc)));
        }
        if cfg.delta_t == 0 {
            return Err(usage("--delta-t must be positive"));
        }
        Ok(cfg)
    }

    pub fn group(&self, nc: usize) -> anyhow::Result<GroupConfig> {
        let mut g = GroupConfig::with_size(nc).map_err(|e| usage(e.to_string()))?.with_delta_t(self.delta_t);
        g.replay_cache = self.replay_cache;
        Ok(g)
    }
}
