//! Hardening a soft cell into a ternary circuit.
//!
//! Per-neuron rounding alone gives incoherent recurrent dynamics, so the
//! circuit is instead fitted to the soft cell's own verdicts: a greedy
//! coordinate descent over gates (phase 1, NM vocabulary) followed by an
//! attempt to move each NM-only gate into NM∩IM at bounded accuracy cost
//! (phase 2).

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{gate_census, HardCircuit, GateCensus};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pst::{round_table, table_values, PolyCoeffs};
use crate::rdtlgn::{SoftCell, VERDICT_THRESHOLD};
use crate::scalar::Scalar;
use crate::stl::{quantize_signal, Pipeline};
use crate::ternary::{
    enumerate_vocabulary, hamming_distance, GateId, GateTable, Trit, VocabularyKind, VocabularyTag,
};

/// Gate whose truth table is the rounded grid evaluation of `w`.
pub fn round_neuron<T: Scalar>(w: &PolyCoeffs<T>) -> GateId {
    round_table(w).id()
}

/// Closest vocabulary gate to the soft truth table of `w` in squared
/// distance; ties go to the lower id.
pub fn nearest_in_vocabulary<T: Scalar>(w: &PolyCoeffs<T>, vocab: &[GateId]) -> GateId {
    let t = table_values(w);
    let mut best = (f64::INFINITY, vocab[0]);
    for &id in vocab {
        let d: f64 = t
            .iter()
            .zip(id.table().entries())
            .map(|(x, e)| (x.to_f64_lossy() - e.as_f64()).powi(2))
            .sum();
        if d < best.0 {
            best = (d, id);
        }
    }
    best.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    pub vocabulary: VocabularyKind,
    pub max_sweeps: usize,
    /// Largest accepted calibration accuracy loss per phase-2 swap, as a
    /// fraction (0.001 = 0.1 percentage points).
    pub eta: f64,
    /// Use only the first `calib_count` calibration trajectories.
    #[serde(default)]
    pub calib_count: Option<usize>,
    pub teacher_threshold: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            vocabulary: VocabularyKind::new(VocabularyTag::Nm, true),
            max_sweeps: 10,
            eta: 0.001,
            calib_count: None,
            teacher_threshold: VERDICT_THRESHOLD,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) {
            return Err(Error::Config("eta must be nonnegative".into()));
        }
        if self.calib_count == Some(0) {
            return Err(Error::Config("calibration count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Calibration trajectories as seen by the soft teacher and by the circuit.
#[derive(Clone, Debug)]
pub struct Calibration<T> {
    pub soft_inputs: Vec<Matrix<T>>,
    pub trit_inputs: Vec<Matrix<Trit>>,
}

impl<T: Scalar> Calibration<T> {
    /// The circuit always reads quantized predicates; the teacher reads
    /// continuous ones for CtQ and quantized ones for QtC.
    pub fn from_signals(signals: &[Matrix<T>], pipeline: Pipeline, delta: T) -> Self {
        let trit_inputs: Vec<Matrix<Trit>> = signals.iter().map(|s| quantize_signal(s, delta)).collect();
        let soft_inputs = match pipeline {
            Pipeline::Ctq => signals.to_vec(),
            Pipeline::Qtc => trit_inputs.iter().map(|m| m.map(|t| T::lit(t.as_f64()))).collect(),
        };
        Self { soft_inputs, trit_inputs }
    }

    pub fn len(&self) -> usize {
        self.trit_inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trit_inputs.is_empty()
    }

    fn truncated(&self, n: Option<usize>) -> Self {
        let n = n.unwrap_or(self.len()).min(self.len());
        Self { soft_inputs: self.soft_inputs[..n].to_vec(), trit_inputs: self.trit_inputs[..n].to_vec() }
    }
}

fn threshold<T: Scalar>(y: T, th: T) -> Trit {
    if y > th {
        Trit::Pos
    } else if y < -th {
        Trit::Neg
    } else {
        Trit::Zero
    }
}

/// Soft cell outputs thresholded at `±threshold`, one `K × T` matrix per
/// trajectory.
pub fn teacher_verdicts<T: Scalar>(cell: &SoftCell<T>, inputs: &[Matrix<T>], threshold_at: f64) -> Result<Vec<Matrix<Trit>>> {
    let th = T::lit(threshold_at);
    inputs
        .par_iter()
        .map(|x| Ok(cell.run(x)?.map(|&y| threshold(y, th))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub layer: usize,
    pub neuron: usize,
    pub old_gate: GateId,
    pub new_gate: GateId,
    /// Calibration accuracy change (new minus old), as a fraction.
    pub accuracy_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillReport {
    pub calibration_trajectories: usize,
    pub total_verdicts: usize,
    /// Warm-start gates that fell outside the vocabulary and were projected.
    pub warm_start_projected: usize,
    pub initial_disagreement: usize,
    /// Disagreement after each completed sweep.
    pub sweep_disagreement: Vec<usize>,
    /// Disagreement after each neuron visit in phase 1.
    pub neuron_trace: Vec<usize>,
    pub converged: bool,
    pub census_phase1: GateCensus,
    pub phase2_swaps: Vec<SwapRecord>,
    pub census_final: GateCensus,
    pub final_disagreement: usize,
}

impl DistillReport {
    pub fn teacher_agreement(&self) -> f64 {
        if self.total_verdicts == 0 {
            return 1.0;
        }
        1.0 - self.final_disagreement as f64 / self.total_verdicts as f64
    }
}

/// Cached activations of the current circuit over the calibration set, and
/// exact incremental scoring of single-gate replacements.
///
/// Levels: level 0 is `[p; h]`, level `l + 1` is the output of layer `l`.
struct Simulator<'a> {
    inputs: &'a [Matrix<Trit>],
    teacher: &'a [Matrix<Trit>],
    offsets: Vec<usize>,
    nodes: usize,
    /// `acts[n][t * nodes + node]`.
    acts: Vec<Vec<u8>>,
    /// Output mismatches per trajectory and timestep.
    mismatch: Vec<Vec<u8>>,
    total: usize,
}

impl<'a> Simulator<'a> {
    fn new(c: &HardCircuit, inputs: &'a [Matrix<Trit>], teacher: &'a [Matrix<Trit>]) -> Self {
        let cfg = c.config();
        let mut offsets = vec![0, cfg.input_width()];
        for &w in &cfg.widths {
            offsets.push(offsets.last().unwrap() + w);
        }
        let nodes = *offsets.last().unwrap();
        let mut sim = Self { inputs, teacher, offsets, nodes, acts: Vec::new(), mismatch: Vec::new(), total: 0 };
        sim.refresh(c);
        sim
    }

    fn verdict_count(&self) -> usize {
        self.teacher.iter().map(|m| m.rows() * m.cols()).sum()
    }

    fn refresh(&mut self, c: &HardCircuit) {
        let results: Vec<(Vec<u8>, Vec<u8>)> = (0..self.inputs.len())
            .into_par_iter()
            .map(|n| self.simulate_full(c, n))
            .collect();
        self.total = results.iter().map(|(_, m)| m.iter().map(|&x| x as usize).sum::<usize>()).sum();
        (self.acts, self.mismatch) = results.into_iter().unzip();
    }

    fn simulate_full(&self, c: &HardCircuit, n: usize) -> (Vec<u8>, Vec<u8>) {
        let cfg = c.config();
        let (p, s, k) = (cfg.predicates, cfg.state, cfg.outputs);
        let x = &self.inputs[n];
        let len = x.cols();
        let mut acts = vec![1u8; len * self.nodes];
        let mut mism = vec![0u8; len];
        let mut h = vec![1u8; s];
        for t in 0..len {
            let row = &mut acts[t * self.nodes..(t + 1) * self.nodes];
            for i in 0..p {
                row[i] = x.get(i, t).ord() as u8;
            }
            row[p..p + s].copy_from_slice(&h);
            self.eval_levels(c, row, 0, None);
            let last = &row[self.offsets[cfg.layers()]..];
            h.copy_from_slice(&last[..s]);
            mism[t] = self.count_mismatch(n, t, &last[s..s + k]);
        }
        (acts, mism)
    }

    fn count_mismatch(&self, n: usize, t: usize, y: &[u8]) -> u8 {
        y.iter()
            .enumerate()
            .filter(|(j, &d)| self.teacher[n].get(*j, t).ord() as u8 != d)
            .count() as u8
    }

    /// Evaluates layers `from..` in place in `row`, with an optional
    /// replacement table for one neuron.
    fn eval_levels(&self, c: &HardCircuit, row: &mut [u8], from: usize, swap: Option<(usize, usize, &[u8; 9])>) {
        let tables = c.tables();
        for l in from..c.config().layers() {
            let (inp, out) = row.split_at_mut(self.offsets[l + 1]);
            let inp = &inp[self.offsets[l]..];
            for (j, ps) in c.connectivity().layers[l].iter().enumerate() {
                let tb = match swap {
                    Some((sl, sj, t)) if sl == l && sj == j => t,
                    _ => &tables[l][j],
                };
                out[j] = tb[3 * inp[ps[0]] as usize + inp[ps[1]] as usize];
            }
        }
    }

    /// Disagreement with neuron `(l, j)` replaced by `cand`, or `None` once
    /// the running count exceeds `bound`.
    fn score(&self, c: &HardCircuit, l: usize, j: usize, cand: &[u8; 9], bound: &AtomicUsize) -> Option<usize> {
        let cfg = c.config();
        let (p, s, k) = (cfg.predicates, cfg.state, cfg.outputs);
        let ps = c.connectivity().layers[l][j];
        let (lo, node) = (self.offsets[l], self.offsets[l + 1] + j);
        let last = self.offsets[cfg.layers()];
        let mut row = vec![0u8; self.nodes];
        let mut total = 0usize;
        for n in 0..self.inputs.len() {
            let acts = &self.acts[n];
            let len = self.inputs[n].cols();
            let mut diverged = false;
            for t in 0..len {
                let base = &acts[t * self.nodes..(t + 1) * self.nodes];
                if !diverged {
                    let out = cand[3 * base[lo + ps[0]] as usize + base[lo + ps[1]] as usize];
                    if out == base[node] {
                        total += self.mismatch[n][t] as usize;
                        continue;
                    }
                    row.copy_from_slice(base);
                    self.eval_levels(c, &mut row, l, Some((l, j, cand)));
                } else {
                    let prev_h: Vec<u8> = row[last..last + s].to_vec();
                    for i in 0..p {
                        row[i] = self.inputs[n].get(i, t).ord() as u8;
                    }
                    row[p..p + s].copy_from_slice(&prev_h);
                    self.eval_levels(c, &mut row, 0, Some((l, j, cand)));
                }
                total += self.count_mismatch(n, t, &row[last + s..last + s + k]) as usize;
                diverged = row[last..last + s] != base[last..last + s];
            }
            if total > bound.load(Ordering::Relaxed) {
                return None;
            }
        }
        Some(total)
    }
}

fn digits(id: GateId) -> [u8; 9] {
    let mut d = [0u8; 9];
    for (x, e) in d.iter_mut().zip(id.table().entries()) {
        *x = e.ord() as u8;
    }
    d
}

/// Output-to-input visiting order: last layer first, descending index.
fn sweep_order(c: &HardCircuit) -> Vec<(usize, usize)> {
    let widths = &c.config().widths;
    (0..widths.len()).rev().flat_map(|l| (0..widths[l]).rev().map(move |j| (l, j))).collect()
}

fn check_calibration(c: &HardCircuit, inputs: &[Matrix<Trit>], teacher: &[Matrix<Trit>]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if inputs.len() != teacher.len() {
        return Err(Error::Shape("calibration inputs and teacher verdicts differ in count".into()));
    }
    let cfg = c.config();
    for (x, y) in inputs.iter().zip(teacher) {
        if x.rows() != cfg.predicates || y.rows() != cfg.outputs || x.cols() != y.cols() {
            return Err(Error::Shape("calibration trajectory shape does not match circuit".into()));
        }
    }
    Ok(())
}

/// Phase-1 coordinate descent of an existing circuit against fixed teacher
/// verdicts. Every visit keeps the best vocabulary gate (incumbent on ties,
/// then lowest id), so disagreement never increases.
pub fn coordinate_descent(
    circuit: &mut HardCircuit,
    inputs: &[Matrix<Trit>],
    teacher: &[Matrix<Trit>],
    vocab: &[GateId],
    max_sweeps: usize,
) -> Result<(Vec<usize>, Vec<usize>, bool)> {
    check_calibration(circuit, inputs, teacher)?;
    let candidates: Vec<(GateId, [u8; 9])> = vocab.iter().map(|&g| (g, digits(g))).collect();
    let mut sim = Simulator::new(circuit, inputs, teacher);
    let mut sweeps = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_sweeps {
        let start = sim.total;
        for (l, j) in sweep_order(circuit) {
            let incumbent = circuit.gate(l, j);
            let bound = AtomicUsize::new(sim.total);
            let scores: Vec<Option<usize>> = candidates
                .par_iter()
                .map(|(_, d)| {
                    let r = sim.score(circuit, l, j, d, &bound);
                    if let Some(v) = r {
                        bound.fetch_min(v, Ordering::Relaxed);
                    }
                    r
                })
                .collect();
            let best = scores.iter().flatten().copied().min();
            if let Some(best) = best {
                let in_vocab_incumbent = candidates
                    .iter()
                    .zip(&scores)
                    .any(|((g, _), s)| *g == incumbent && *s == Some(best));
                if !in_vocab_incumbent {
                    let (g, _) = candidates
                        .iter()
                        .zip(&scores)
                        .find(|(_, s)| **s == Some(best))
                        .map(|(c, _)| *c)
                        .unwrap();
                    circuit.set_gate(l, j, g);
                    sim.refresh(circuit);
                    debug_assert_eq!(sim.total, best);
                }
            }
            trace.push(sim.total);
        }
        sweeps.push(sim.total);
        if sim.total >= start {
            converged = true;
            break;
        }
    }
    Ok((sweeps, trace, converged))
}

/// Full phase 1: teacher verdicts, warm start by rounding against the full
/// library (projected into the vocabulary where needed), then sweeps.
pub fn distill<T: Scalar>(
    cell: &SoftCell<T>,
    calib: &Calibration<T>,
    dc: &DistillConfig,
) -> Result<(HardCircuit, Vec<Matrix<Trit>>, DistillReport)> {
    dc.validate()?;
    let calib = calib.truncated(dc.calib_count);
    if calib.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let teacher = teacher_verdicts(cell, &calib.soft_inputs, dc.teacher_threshold)?;
    let vocab = enumerate_vocabulary(dc.vocabulary);
    if vocab.is_empty() {
        return Err(Error::Config("empty distillation vocabulary".into()));
    }
    let mut projected = 0;
    let gates: Vec<Vec<GateId>> = cell
        .coeffs
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|w| {
                    let g = round_neuron(w);
                    if dc.vocabulary.contains(g) {
                        g
                    } else {
                        projected += 1;
                        nearest_in_vocabulary(w, &vocab)
                    }
                })
                .collect()
        })
        .collect();
    let mut circuit = HardCircuit::new(cell.config.clone(), cell.connectivity.clone(), gates)?;
    let initial = Simulator::new(&circuit, &calib.trit_inputs, &teacher).total;
    let (sweeps, trace, converged) =
        coordinate_descent(&mut circuit, &calib.trit_inputs, &teacher, &vocab, dc.max_sweeps)?;
    let final_disagreement = sweeps.last().copied().unwrap_or(initial);
    let census = gate_census(&circuit);
    let report = DistillReport {
        calibration_trajectories: calib.len(),
        total_verdicts: teacher.iter().map(|m| m.rows() * m.cols()).sum(),
        warm_start_projected: projected,
        initial_disagreement: initial,
        sweep_disagreement: sweeps,
        neuron_trace: trace,
        converged,
        census_phase1: census.clone(),
        phase2_swaps: Vec::new(),
        census_final: census,
        final_disagreement,
    };
    Ok((circuit, teacher, report))
}

/// Phase 2: replace NM-only gates with the nearest non-constant NM∩IM gate
/// (Hamming distance, then lower id) whose calibration accuracy loss is
/// below `eta`. Gates already in NM∩IM are untouched.
pub fn refine_to_intersection(
    mut circuit: HardCircuit,
    teacher: &[Matrix<Trit>],
    inputs: &[Matrix<Trit>],
    dc: &DistillConfig,
    mut report: DistillReport,
) -> Result<(HardCircuit, DistillReport)> {
    check_calibration(&circuit, inputs, teacher)?;
    let target = VocabularyKind::new(VocabularyTag::NmAndIm, true);
    let pool = enumerate_vocabulary(target);
    let mut sim = Simulator::new(&circuit, inputs, teacher);
    let verdicts = sim.verdict_count().max(1) as f64;
    for (l, j) in sweep_order(&circuit) {
        let current = circuit.gate(l, j);
        if target.contains(current) {
            continue;
        }
        let cur_table: GateTable = current.table();
        let mut order: Vec<GateId> = pool.clone();
        order.sort_by_key(|g| (hamming_distance(&cur_table, &g.table()), *g));
        let unbounded = AtomicUsize::new(usize::MAX);
        for cand in order {
            let score = sim.score(&circuit, l, j, &digits(cand), &unbounded).unwrap();
            let delta = (sim.total as f64 - score as f64) / verdicts;
            if -delta < dc.eta {
                circuit.set_gate(l, j, cand);
                sim.refresh(&circuit);
                report.phase2_swaps.push(SwapRecord {
                    layer: l,
                    neuron: j,
                    old_gate: current,
                    new_gate: cand,
                    accuracy_delta: delta,
                });
                break;
            }
        }
    }
    report.census_final = gate_census(&circuit);
    report.final_disagreement = sim.total;
    Ok((circuit, report))
}

/// Disagreement of a circuit against teacher verdicts by plain re-running.
pub fn disagreement(c: &HardCircuit, inputs: &[Matrix<Trit>], teacher: &[Matrix<Trit>]) -> Result<usize> {
    let mut total = 0;
    for (x, y) in inputs.iter().zip(teacher) {
        let v = crate::circuit::run(c, x, &crate::circuit::InputMask::none())?;
        total += v.as_slice().iter().zip(y.as_slice()).filter(|(a, b)| a != b).count();
    }
    Ok(total)
}
