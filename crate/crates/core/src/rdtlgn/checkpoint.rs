//! Versioned JSON checkpoints.
//!
//! Field order: `format`, `version`, `config`, `connectivity` (per layer, a
//! `[left, right]` parent pair per neuron), `coeffs` (per layer, per neuron,
//! nine decimal strings in monomial order). Decimal strings use the
//! shortest round-trip representation, so save/load is lossless.

use serde::{Deserialize, Serialize};

use super::cell::{CellConfig, ConnectivityMap, SoftCell};
use crate::error::{Error, Result};
use crate::pst::PolyCoeffs;
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "rdtlgn-soft-cell";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: CellConfig,
    connectivity: Vec<Vec<[usize; 2]>>,
    coeffs: Vec<Vec<Vec<String>>>,
}

pub fn save_checkpoint<T: Scalar>(cell: &SoftCell<T>) -> Result<Vec<u8>> {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: cell.config.clone(),
        connectivity: cell.connectivity.layers.clone(),
        coeffs: cell
            .coeffs
            .iter()
            .map(|layer| layer.iter().map(|w| w.0.iter().map(|x| x.to_string()).collect()).collect())
            .collect(),
    };
    Ok(serde_json::to_vec_pretty(&file)?)
}

pub fn load_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<SoftCell<T>> {
    let file: CheckpointFile =
        serde_json::from_slice(bytes).map_err(|e| Error::Checkpoint(format!("malformed: {e}")))?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unexpected format {:?}", file.format)));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", file.version)));
    }
    let coeffs = file
        .coeffs
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|w| {
                    if w.len() != 9 {
                        return Err(Error::Checkpoint("neuron must have 9 coefficients".into()));
                    }
                    let mut c = [T::zero(); 9];
                    for (dst, s) in c.iter_mut().zip(w) {
                        *dst = s
                            .parse()
                            .map_err(|_| Error::Checkpoint(format!("bad coefficient {s:?}")))?;
                    }
                    Ok(PolyCoeffs(c))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SoftCell::from_parts(file.config, ConnectivityMap { layers: file.connectivity }, coeffs)
        .map_err(|e| Error::Checkpoint(e.to_string()))
}
