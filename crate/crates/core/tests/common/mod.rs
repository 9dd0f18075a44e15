//! Generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rdtlgn_core::circuit::HardCircuit;
use rdtlgn_core::rdtlgn::{CellConfig, ConnectivityMap};
use rdtlgn_core::stl::{Formula, Interval};
use rdtlgn_core::ternary::{enumerate_vocabulary, VocabularyKind, VocabularyTag, ALL_TRITS};
use rdtlgn_core::{GateId, Matrix, Trit};

/// Random formula over `preds` predicates with at most `depth` nested
/// operators and intervals inside `[0, 3]`.
pub fn random_formula(rng: &mut impl Rng, depth: usize, preds: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::pred(rng.gen_range(0..preds));
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => Formula::not(random_formula(rng, d, preds)),
        1 => Formula::and(random_formula(rng, d, preds), random_formula(rng, d, preds)),
        2 => Formula::or(random_formula(rng, d, preds), random_formula(rng, d, preds)),
        3 => Formula::always(random_interval(rng), random_formula(rng, d, preds)),
        4 => Formula::eventually(random_interval(rng), random_formula(rng, d, preds)),
        _ => Formula::until(random_interval(rng), random_formula(rng, d, preds), random_formula(rng, d, preds)),
    }
}

fn random_interval(rng: &mut impl Rng) -> Interval {
    let a = rng.gen_range(0..=2);
    Interval::new(a, rng.gen_range(a..=3)).unwrap()
}

pub fn random_signals(rng: &mut impl Rng, preds: usize, len: usize) -> Matrix<f64> {
    Matrix::from_fn(preds, len, |_, _| rng.gen_range(-1.0..=1.0))
}

pub fn random_trits(rng: &mut impl Rng, rows: usize, len: usize) -> Matrix<Trit> {
    Matrix::from_fn(rows, len, |_, _| *ALL_TRITS.choose(rng).unwrap())
}

/// Circuit of `layers` layers whose gates are drawn from `vocab`, with
/// uniformly random wiring.
pub fn random_circuit(
    rng: &mut impl Rng,
    predicates: usize,
    state: usize,
    outputs: usize,
    layers: usize,
    hidden: usize,
    vocab: &[GateId],
) -> HardCircuit {
    let cfg = CellConfig::uniform(predicates, state, outputs, layers, hidden, 0);
    let conn = ConnectivityMap {
        layers: (0..cfg.layers())
            .map(|l| {
                let w_in = cfg.layer_input_width(l);
                (0..cfg.widths[l]).map(|_| [rng.gen_range(0..w_in), rng.gen_range(0..w_in)]).collect()
            })
            .collect(),
    };
    let gates = cfg.widths.iter().map(|&w| (0..w).map(|_| *vocab.choose(rng).unwrap()).collect()).collect();
    HardCircuit::new(cfg, conn, gates).unwrap()
}

pub fn im_vocabulary() -> Vec<GateId> {
    enumerate_vocabulary(VocabularyKind::new(VocabularyTag::Im, true))
}

/// Every vector in `{-1, 0, +1}^n`.
pub fn all_trit_vectors(n: usize) -> Vec<Vec<Trit>> {
    (0..3usize.pow(n as u32))
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let t = Trit::from_ord(k % 3);
                    k /= 3;
                    t
                })
                .collect()
        })
        .collect()
}

/// Vectors at or above `v` in the information order.
pub fn refinements(v: &[Trit]) -> Vec<Vec<Trit>> {
    let mut out = vec![Vec::with_capacity(v.len())];
    for &x in v {
        let choices: &[Trit] = if x.is_known() { &[x][..] } else { &ALL_TRITS[..] };
        out = out
            .into_iter()
            .flat_map(|pre| {
                choices.iter().map(move |&c| {
                    let mut p = pre.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}
