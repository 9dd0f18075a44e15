//! The experiment config file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{benchmark_specs, SpecDef, WorldConfig};
use crate::error::{Error, Result};
use crate::eval::elman::ElmanConfig;
use crate::harden::DistillConfig;
use crate::rdtlgn::{CellConfig, TrainConfig};
use crate::stl::{depth_bound, state_complexity, Pipeline};

fn six() -> usize {
    6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sizing {
    /// `S = B(φ)`, `L = max(depth bound, min_layers)`, `K = 1`.
    AutoFromFormula {
        #[serde(default = "six")]
        min_layers: usize,
        #[serde(default)]
        hidden: Option<usize>,
    },
    Explicit { state: usize, layers: usize, hidden: usize },
}

impl Default for Sizing {
    fn default() -> Self {
        Sizing::AutoFromFormula { min_layers: 6, hidden: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Trajectories generated before balanced selection.
    pub pool: usize,
    /// Trajectories kept.
    pub count: usize,
    pub length: usize,
    pub train_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { pool: 1200, count: 400, length: 20, train_fraction: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SpecDef,
    pub pipelines: Vec<Pipeline>,
    pub delta: f64,
    pub sizing: Sizing,
    pub train: TrainConfig,
    pub distill: DistillConfig,
    pub world: WorldConfig,
    pub data: DataConfig,
    /// Elman baseline; `null` skips it.
    pub rnn: Option<ElmanConfig>,
    /// Every stage seed is derived from this one.
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spec: benchmark_specs().remove(0),
            pipelines: vec![Pipeline::Ctq, Pipeline::Qtc],
            delta: 0.2,
            sizing: Sizing::default(),
            train: TrainConfig::default(),
            distill: DistillConfig::default(),
            world: WorldConfig::default(),
            data: DataConfig::default(),
            rnn: Some(ElmanConfig::default()),
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Offsets mixed into the run seed per stage.
pub(crate) mod stage_seed {
    pub const DATA: u64 = 0;
    pub const SPLIT: u64 = 1;
    pub const CELL: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const RNN: u64 = 4;
    pub const EVAL: u64 = 5;
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(bytes).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.parse()?;
        if self.pipelines.is_empty() {
            return Err(Error::Config("at least one pipeline is required".into()));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::Config(format!("delta {} outside [0, 1)", self.delta)));
        }
        let d = &self.data;
        if d.count == 0 || d.length == 0 || d.pool < d.count {
            return Err(Error::Config("need 1 <= count <= pool and length >= 1".into()));
        }
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        self.train.validate()?;
        self.distill.validate()?;
        self.world.validate()?;
        Ok(())
    }

    pub fn stage_seed(&self, offset: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(offset)
    }

    /// Hex SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
        }
        let bytes = serde_json::to_vec(&v).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn cell_config(&self) -> Result<CellConfig> {
        let phi = self.spec.parse()?;
        let p = self.spec.predicates.len();
        let b = state_complexity(&phi);
        let (s, layers, hidden) = match &self.sizing {
            Sizing::AutoFromFormula { min_layers, hidden } => {
                let l = depth_bound(&phi).max(*min_layers).max(1);
                (b, l, hidden.unwrap_or_else(|| CellConfig::default_hidden_width(p, b, 1)))
            }
            Sizing::Explicit { state, layers, hidden } => {
                if *state < b {
                    log::warn!("state size {state} is below the realizability bound B = {b}; proceeding");
                }
                (*state, *layers, *hidden)
            }
        };
        let cfg = CellConfig::uniform(p, s, 1, layers, hidden, self.stage_seed(stage_seed::CELL));
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_sizing_for_default_spec() {
        let c = ExperimentConfig::default().cell_config().unwrap();
        assert_eq!((c.predicates, c.state, c.outputs, c.layers()), (2, 12, 1, 6));
        assert_eq!(*c.widths.last().unwrap(), 13);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = ExperimentConfig::from_json(br#"{"seed": 3, "data": {"count": 50, "pool": 60}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.data.length, 20);
        assert_eq!(c.pipelines.len(), 2);
    }

    #[test]
    fn unknown_fields_and_bad_formula_rejected() {
        assert!(ExperimentConfig::from_json(br#"{"sed": 3}"#).is_err());
        let bad = br#"{"spec": {"name": "x", "formula": "G[3,1] p0", "predicates": ["goal"]}}"#;
        assert!(ExperimentConfig::from_json(bad).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn explicit_undersized_state_still_builds() {
        let mut c = ExperimentConfig::default();
        c.sizing = Sizing::Explicit { state: 2, layers: 2, hidden: 4 };
        assert_eq!(c.cell_config().unwrap().state, 2);
    }
}
