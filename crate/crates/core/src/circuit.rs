//! Hardened ternary circuits: streaming inference by table lookup, gate
//! census, and predicate masking.
//!
//! The state starts at all-unknown. With that start an Always-style
//! recurrence `h_t = p_t ∧ h_{t-1}` outputs unknown at `t = 0` even when
//! `p_0 = +1` (`AND(+1, 0) = 0`), and only commits once evidence has
//! accumulated. Accuracy at early timesteps should be read with that in
//! mind.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rdtlgn::{CellConfig, ConnectivityMap};
use crate::ternary::{class_of, GateId, GateTable, Trit};

pub const CIRCUIT_FORMAT: &str = "rdtlgn-hard-circuit";
pub const CIRCUIT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HardCircuit {
    config: CellConfig,
    connectivity: ConnectivityMap,
    gates: Vec<Vec<GateId>>,
    /// Gate tables as digit arrays, `tables[l][j][3*ord(a)+ord(b)]`.
    tables: Vec<Vec<[u8; 9]>>,
}

fn digits(id: GateId) -> [u8; 9] {
    let t = GateTable::from_id(id);
    let mut d = [0u8; 9];
    for (x, e) in d.iter_mut().zip(t.entries()) {
        *x = e.ord() as u8;
    }
    d
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    format: String,
    version: u32,
    config: CellConfig,
    connectivity: Vec<Vec<[usize; 2]>>,
    gates: Vec<Vec<GateId>>,
}

impl HardCircuit {
    pub fn new(config: CellConfig, connectivity: ConnectivityMap, gates: Vec<Vec<GateId>>) -> Result<Self> {
        config.validate()?;
        connectivity.validate(&config)?;
        if gates.len() != config.layers() || gates.iter().zip(&config.widths).any(|(g, &w)| g.len() != w) {
            return Err(Error::Shape("gate array does not match widths".into()));
        }
        let tables = gates.iter().map(|layer| layer.iter().map(|&g| digits(g)).collect()).collect();
        Ok(Self { config, connectivity, gates, tables })
    }

    pub fn config(&self) -> &CellConfig {
        &self.config
    }

    pub fn connectivity(&self) -> &ConnectivityMap {
        &self.connectivity
    }

    pub fn gates(&self) -> &[Vec<GateId>] {
        &self.gates
    }

    pub fn gate(&self, layer: usize, neuron: usize) -> GateId {
        self.gates[layer][neuron]
    }

    pub fn set_gate(&mut self, layer: usize, neuron: usize, id: GateId) {
        self.gates[layer][neuron] = id;
        self.tables[layer][neuron] = digits(id);
    }

    pub(crate) fn tables(&self) -> &[Vec<[u8; 9]>] {
        &self.tables
    }

    /// One evaluation of the state-update map on digit-encoded inputs
    /// (`0, 1, 2` for `-1, 0, +1`). Returns the last layer.
    pub(crate) fn eval_digits(&self, z: &[u8], buf: &mut Vec<u8>, out: &mut Vec<u8>) {
        out.clear();
        out.extend_from_slice(z);
        for (layer, tables) in self.connectivity.layers.iter().zip(&self.tables) {
            std::mem::swap(buf, out);
            out.clear();
            out.extend(layer.iter().zip(tables).map(|(ps, tb)| tb[3 * buf[ps[0]] as usize + buf[ps[1]] as usize]));
        }
    }

    /// `F(p, h)`: returns `(h', y)`.
    pub fn state_update(&self, p: &[Trit], h: &[Trit]) -> Result<(Vec<Trit>, Vec<Trit>)> {
        if p.len() != self.config.predicates || h.len() != self.config.state {
            return Err(Error::Shape(format!(
                "circuit expects {} predicates and {} state trits",
                self.config.predicates, self.config.state
            )));
        }
        let z: Vec<u8> = p.iter().chain(h).map(|t| t.ord() as u8).collect();
        let (mut buf, mut out) = (Vec::new(), Vec::new());
        self.eval_digits(&z, &mut buf, &mut out);
        let mut all: Vec<Trit> = out.iter().map(|&d| Trit::from_ord(d as usize)).collect();
        let y = all.split_off(self.config.state);
        Ok((all, y))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let file = CircuitFile {
            format: CIRCUIT_FORMAT.into(),
            version: CIRCUIT_VERSION,
            config: self.config.clone(),
            connectivity: self.connectivity.layers.clone(),
            gates: self.gates.clone(),
        };
        Ok(serde_json::to_vec_pretty(&file)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: CircuitFile = serde_json::from_slice(bytes)?;
        if file.format != CIRCUIT_FORMAT || file.version != CIRCUIT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported circuit file {} v{}",
                file.format, file.version
            )));
        }
        Self::new(file.config, ConnectivityMap { layers: file.connectivity }, file.gates)
    }
}

/// Hidden state of a streaming monitor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonitorState {
    pub h: Vec<Trit>,
    pub t: usize,
}

impl MonitorState {
    /// The all-unknown start.
    pub fn bottom(state: usize) -> Self {
        Self { h: vec![Trit::Zero; state], t: 0 }
    }
}

/// Predicates forced to unknown.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputMask {
    pub masked: BTreeSet<usize>,
}

impl InputMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn of(indices: impl IntoIterator<Item = usize>) -> Self {
        Self { masked: indices.into_iter().collect() }
    }

    pub fn all(p: usize) -> Self {
        Self::of(0..p)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.masked.contains(&i)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self.masked.iter().next_back() {
            Some(&i) if i >= p => Err(Error::Shape(format!("mask index {i} >= {p} predicates"))),
            _ => Ok(()),
        }
    }
}

pub fn circuit_step(c: &HardCircuit, p: &[Trit], st: &MonitorState) -> Result<(MonitorState, Vec<Trit>)> {
    let (h, y) = c.state_update(p, &st.h)?;
    Ok((MonitorState { h, t: st.t + 1 }, y))
}

/// Streams the circuit from the all-unknown state; returns `K × T` verdicts.
pub fn run(c: &HardCircuit, trit_signals: &Matrix<Trit>, mask: &InputMask) -> Result<Matrix<Trit>> {
    let cfg = c.config();
    if trit_signals.rows() != cfg.predicates {
        return Err(Error::Shape(format!(
            "circuit expects {} predicates, signals have {}",
            cfg.predicates,
            trit_signals.rows()
        )));
    }
    mask.validate(cfg.predicates)?;
    let (p, s, k, len) = (cfg.predicates, cfg.state, cfg.outputs, trit_signals.cols());
    let mut z = vec![1u8; p + s];
    let (mut buf, mut out) = (Vec::new(), Vec::new());
    let mut verdicts = Matrix::filled(k, len, Trit::Zero);
    for t in 0..len {
        for i in 0..p {
            z[i] = if mask.contains(i) { 1 } else { trit_signals.get(i, t).ord() as u8 };
        }
        c.eval_digits(&z, &mut buf, &mut out);
        z[p..].copy_from_slice(&out[..s]);
        for j in 0..k {
            verdicts.set(j, t, Trit::from_ord(out[s + j] as usize));
        }
    }
    Ok(verdicts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateCensus {
    pub total: usize,
    pub nm: usize,
    pub im: usize,
    pub nm_and_im: usize,
    pub constant: usize,
    pub fraction_nm: f64,
    pub fraction_im: f64,
    pub fraction_nm_and_im: f64,
}

pub fn gate_census(c: &HardCircuit) -> GateCensus {
    let classes: Vec<_> = c.gates().iter().flatten().map(|&g| class_of(g)).collect();
    let total = classes.len();
    let nm = classes.iter().filter(|c| c.is_nm).count();
    let im = classes.iter().filter(|c| c.is_im).count();
    let nm_and_im = classes.iter().filter(|c| c.is_nm && c.is_im).count();
    let constant = classes.iter().filter(|c| c.is_constant).count();
    let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    GateCensus {
        total,
        nm,
        im,
        nm_and_im,
        constant,
        fraction_nm: frac(nm),
        fraction_im: frac(im),
        fraction_nm_and_im: frac(nm_and_im),
    }
}
