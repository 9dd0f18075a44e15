//! The soft recurrent cell.
//!
//! At each step the cell reads `z_t = [p_t; h_{t-1}]`, pushes it through
//! `L` layers of polynomial neurons (each followed by `clip`), and splits the
//! last layer into the next state (first `S` entries) and the output (last
//! `K`). The state starts at all-zero, the unknown state.

mod cell;
mod checkpoint;
mod train;

pub use cell::{
    recurrent_path, CellConfig, ConnectivityMap, SoftCell, Tape, INIT_NOISE, INIT_PASS_WEIGHT,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use train::{
    class_weights, objective, soft_verdict, train, EpochRecord, LossKind, Objective, TrainConfig,
    VERDICT_THRESHOLD,
};
