//! Metrics: accuracy, preservation under single-predicate dropout, lattice
//! compliance over predicate subsets, abstention profiles, and the
//! fixed-point probe.

pub mod elman;

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{run, GateCensus, HardCircuit, InputMask};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::stl::Pipeline;
use crate::ternary::{leq_information, leq_information_vec, Trit};
use elman::ElmanBaseline;

/// Largest predicate count for which the subset lattice is enumerated.
pub const MAX_LATTICE_PREDICATES: usize = 12;
/// Mask sample size per abstention level when enumeration is too large.
pub const ABSTENTION_SAMPLES: usize = 64;

/// Anything that maps a predicate trace to a `K × T` verdict trace and can
/// have predicates masked out.
pub trait Monitor: Sync {
    type Input: Send + Sync;
    fn predicates(&self) -> usize;
    fn verdicts_masked(&self, x: &Matrix<Self::Input>, mask: &InputMask) -> Result<Matrix<Trit>>;
}

impl Monitor for HardCircuit {
    type Input = Trit;

    fn predicates(&self) -> usize {
        self.config().predicates
    }

    fn verdicts_masked(&self, x: &Matrix<Trit>, mask: &InputMask) -> Result<Matrix<Trit>> {
        run(self, x, mask)
    }
}

/// Masked predicates are fed as zero.
impl<T: Scalar> Monitor for ElmanBaseline<T> {
    type Input = T;

    fn predicates(&self) -> usize {
        self.inputs
    }

    fn verdicts_masked(&self, x: &Matrix<T>, mask: &InputMask) -> Result<Matrix<Trit>> {
        mask.validate(self.inputs)?;
        let masked = Matrix::from_fn(x.rows(), x.cols(), |i, t| if mask.contains(i) { T::zero() } else { *x.get(i, t) });
        let v = self.verdicts(&masked)?;
        Matrix::from_rows(vec![v])
    }
}

/// Exact-match fraction pooled over all timesteps.
pub fn accuracy(verdicts: &[Vec<Trit>], labels: &[Vec<Trit>]) -> Result<f64> {
    if verdicts.len() != labels.len() {
        return Err(Error::Shape("verdict and label trajectory counts differ".into()));
    }
    let mut hit = 0usize;
    let mut total = 0usize;
    for (v, y) in verdicts.iter().zip(labels) {
        if v.len() != y.len() {
            return Err(Error::Shape("verdict and label lengths differ".into()));
        }
        hit += v.iter().zip(y).filter(|(a, b)| a == b).count();
        total += v.len();
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}

fn is_flip(base: Trit, masked: Trit) -> bool {
    base.is_known() && masked.is_known() && base != masked
}

/// `1 - flips / total` over every (trajectory, predicate, timestep, output);
/// a flip is a sign reversal, abstention counts as preserved.
pub fn preservation<M: Monitor>(m: &M, signals: &[Matrix<M::Input>]) -> Result<f64> {
    let p = m.predicates();
    let counts: Vec<(usize, usize)> = signals
        .par_iter()
        .map(|x| {
            let base = m.verdicts_masked(x, &InputMask::none())?;
            let mut flips = 0;
            let mut total = 0;
            for i in 0..p {
                let v = m.verdicts_masked(x, &InputMask::of([i]))?;
                flips += base.as_slice().iter().zip(v.as_slice()).filter(|(a, b)| is_flip(**a, **b)).count();
                total += base.as_slice().len();
            }
            Ok((flips, total))
        })
        .collect::<Result<_>>()?;
    let (flips, total) = counts.iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    Ok(if total == 0 { 1.0 } else { 1.0 - flips as f64 / total as f64 })
}

/// Which comparable subset pairs `A ⊂ B` are scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSet {
    All,
    /// Only `|B ∖ A| = 1`.
    Covering,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub ok: usize,
    pub total: usize,
}

impl Tally {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.ok as f64 / self.total as f64
        }
    }

    fn add(self, o: Tally) -> Tally {
        Tally { ok: self.ok + o.ok, total: self.total + o.total }
    }
}

/// Verdict traces for every available-predicate subset `U` (bit `i` set =
/// predicate `i` observed), indexed by `U`.
fn lattice_runs<M: Monitor>(m: &M, x: &Matrix<M::Input>) -> Result<Vec<Matrix<Trit>>> {
    let p = m.predicates();
    (0..1usize << p)
        .map(|u| m.verdicts_masked(x, &InputMask::of((0..p).filter(|i| u & (1 << i) == 0))))
        .collect()
}

pub fn lattice_tally<M: Monitor>(m: &M, signals: &[Matrix<M::Input>], pairs: PairSet) -> Result<Tally> {
    let p = m.predicates();
    if p > MAX_LATTICE_PREDICATES {
        return Err(Error::TooManyPredicates(p));
    }
    let tallies: Vec<Tally> = signals
        .par_iter()
        .map(|x| {
            let runs = lattice_runs(m, x)?;
            let mut tally = Tally::default();
            for b in 0..runs.len() {
                let vb = runs[b].as_slice();
                let mut score = |a: usize| {
                    for (va, vb) in runs[a].as_slice().iter().zip(vb) {
                        tally.ok += usize::from(leq_information(*va, *vb));
                        tally.total += 1;
                    }
                };
                match pairs {
                    PairSet::All => {
                        // Proper submasks of b.
                        let mut a = b;
                        while a != 0 {
                            a = (a - 1) & b;
                            score(a);
                        }
                    }
                    PairSet::Covering => {
                        for i in 0..p {
                            if b & (1 << i) != 0 {
                                score(b & !(1 << i));
                            }
                        }
                    }
                }
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;
    Ok(tallies.into_iter().fold(Tally::default(), Tally::add))
}

/// Fraction of (pair `A ⊂ B`, timestep, trajectory) triples with
/// `verdict_A ⊑ verdict_B`, over all comparable pairs.
pub fn lattice_compliance<M: Monitor>(m: &M, signals: &[Matrix<M::Input>]) -> Result<f64> {
    Ok(lattice_tally(m, signals, PairSet::All)?.fraction())
}

fn k_subsets(p: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..p {
            cur.push(i);
            rec(i + 1, p, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, p, k, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Masks of size `k`: all of them, or a seeded sample of 64 when there are
/// more.
pub fn dropout_masks(p: usize, k: usize, seed: u64) -> Vec<InputMask> {
    if binomial(p, k) <= ABSTENTION_SAMPLES as u128 {
        return k_subsets(p, k).into_iter().map(InputMask::of).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k as u64);
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < ABSTENTION_SAMPLES {
        let mut s: Vec<usize> = sample(&mut rng, p, k).into_vec();
        s.sort_unstable();
        seen.insert(s);
    }
    seen.into_iter().map(InputMask::of).collect()
}

/// Mean fraction of abstaining verdicts per dropout level.
pub fn abstention_profile<M: Monitor>(
    m: &M,
    signals: &[Matrix<M::Input>],
    levels: &[usize],
    seed: u64,
) -> Result<BTreeMap<usize, f64>> {
    let p = m.predicates();
    let mut curve = BTreeMap::new();
    for &k in levels {
        if k > p {
            return Err(Error::Shape(format!("dropout level {k} exceeds {p} predicates")));
        }
        let masks = dropout_masks(p, k, seed);
        let tallies: Vec<Tally> = signals
            .par_iter()
            .map(|x| {
                let mut t = Tally::default();
                for mask in &masks {
                    let v = m.verdicts_masked(x, mask)?;
                    t.ok += v.as_slice().iter().filter(|v| !v.is_known()).count();
                    t.total += v.as_slice().len();
                }
                Ok(t)
            })
            .collect::<Result<_>>()?;
        let t = tallies.into_iter().fold(Tally::default(), Tally::add);
        curve.insert(k, if t.total == 0 { 0.0 } else { t.ok as f64 / t.total as f64 });
    }
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointProbe {
    pub converged: bool,
    /// Index `k` of the first state with `h_{k+1} = h_k`, or the number of
    /// steps taken before stopping.
    pub steps: usize,
    pub cycle_period: Option<usize>,
    /// Every step so far satisfied `h_k ⊑ h_{k+1}`.
    pub ascending: bool,
}

/// Iterates `h ← F(p, h)` from the all-unknown state under constant input.
pub fn fixed_point_probe(c: &HardCircuit, p: &[Trit], max_steps: usize) -> Result<FixedPointProbe> {
    fixed_point_probe_from(c, p, &vec![Trit::Zero; c.config().state], max_steps)
}

pub fn fixed_point_probe_from(c: &HardCircuit, p: &[Trit], start: &[Trit], max_steps: usize) -> Result<FixedPointProbe> {
    let mut h = start.to_vec();
    let mut seen: HashMap<Vec<Trit>, usize> = HashMap::new();
    let mut ascending = true;
    for k in 0..max_steps {
        seen.insert(h.clone(), k);
        let (next, _) = c.state_update(p, &h)?;
        ascending &= leq_information_vec(&h, &next);
        if next == h {
            return Ok(FixedPointProbe { converged: true, steps: k, cycle_period: None, ascending });
        }
        if let Some(&j) = seen.get(&next) {
            return Ok(FixedPointProbe { converged: false, steps: k + 1, cycle_period: Some(k + 1 - j), ascending });
        }
        h = next;
    }
    Ok(FixedPointProbe { converged: false, steps: max_steps, cycle_period: None, ascending })
}

/// One row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: String,
    pub formula: String,
    pub system: String,
    pub pipeline: Option<Pipeline>,
    pub accuracy: f64,
    pub preservation: Option<f64>,
    pub lattice_compliance: Option<f64>,
    pub lattice_compliance_covering: Option<f64>,
    pub abstention_curve: BTreeMap<usize, f64>,
    pub gate_census: Option<GateCensus>,
}

/// First output row of each verdict matrix.
pub fn first_output(v: &[Matrix<Trit>]) -> Vec<Vec<Trit>> {
    v.iter().map(|m| m.row(0).to_vec()).collect()
}

/// Full metric set for a monitor with subset-lattice support.
pub fn evaluate_monitor<M: Monitor>(
    m: &M,
    signals: &[Matrix<M::Input>],
    labels: &[Vec<Trit>],
    with_lattice: bool,
    seed: u64,
) -> Result<(f64, f64, Option<(f64, f64)>, BTreeMap<usize, f64>)> {
    let verdicts: Vec<Matrix<Trit>> =
        signals.par_iter().map(|x| m.verdicts_masked(x, &InputMask::none())).collect::<Result<_>>()?;
    let acc = accuracy(&first_output(&verdicts), labels)?;
    let pres = preservation(m, signals)?;
    let lattice = if with_lattice {
        Some((
            lattice_tally(m, signals, PairSet::All)?.fraction(),
            lattice_tally(m, signals, PairSet::Covering)?.fraction(),
        ))
    } else {
        None
    };
    let levels: Vec<usize> = (0..=m.predicates()).collect();
    let curve = abstention_profile(m, signals, &levels, seed)?;
    Ok((acc, pres, lattice, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::tests::{always_circuit, not_recurrence};
    use crate::rdtlgn::{CellConfig, ConnectivityMap};
    use crate::ternary::{gates, ALL_TRITS};
    use rand::Rng;

    fn trits(rows: Vec<Vec<i8>>) -> Matrix<Trit> {
        Matrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(|v| Trit::from_i8(v).unwrap()).collect()).collect())
            .unwrap()
    }

    /// Two predicates, no state; output neuron computes `¬p0 ∨ p1`, the
    /// first a projection.
    fn mixed_circuit(g: crate::GateId) -> HardCircuit {
        let cfg = CellConfig { predicates: 2, state: 0, outputs: 1, widths: vec![2, 1], seed: 0 };
        let conn = ConnectivityMap { layers: vec![vec![[0, 1], [1, 0]], vec![[0, 1]]] };
        HardCircuit::new(cfg, conn, vec![vec![g, gates::proj_first().id()], vec![gates::kleene_or().id()]]).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        let a = vec![vec![Trit::Pos, Trit::Neg]];
        assert_eq!(accuracy(&a, &a).unwrap(), 1.0);
        let zeros = vec![vec![Trit::Zero, Trit::Zero]];
        assert_eq!(accuracy(&zeros, &a).unwrap(), 0.0);
        assert!(accuracy(&a, &[vec![Trit::Pos]]).is_err());
    }

    #[test]
    fn im_circuit_metrics_are_perfect() {
        let c = always_circuit();
        let xs = vec![trits(vec![vec![1, 1, -1, 0, 1]]), trits(vec![vec![-1, 1, 1, 1, 1]])];
        assert_eq!(preservation(&c, &xs).unwrap(), 1.0);
        assert_eq!(lattice_compliance(&c, &xs).unwrap(), 1.0);
        let curve = abstention_profile(&c, &xs, &[1], 0).unwrap();
        assert_eq!(curve[&1], 1.0);
    }

    #[test]
    fn constant_output_preserves() {
        let cfg = CellConfig { predicates: 2, state: 0, outputs: 1, widths: vec![1], seed: 0 };
        let conn = ConnectivityMap { layers: vec![vec![[0, 1]]] };
        let c = HardCircuit::new(cfg, conn, vec![vec![gates::const_pos().id()]]).unwrap();
        let xs = vec![trits(vec![vec![1, -1], vec![0, 1]])];
        assert_eq!(preservation(&c, &xs).unwrap(), 1.0);
        assert_eq!(abstention_profile(&c, &xs, &[0, 2], 0).unwrap()[&0], 0.0);
    }

    /// Independent recount with explicit nested loops over every mask.
    fn naive_metrics(c: &HardCircuit, xs: &[Matrix<Trit>]) -> (f64, f64) {
        let p = c.config().predicates;
        let (mut flips, mut total) = (0, 0);
        let (mut ok, mut pairs) = (0, 0);
        for x in xs {
            let base = run(c, x, &InputMask::none()).unwrap();
            for i in 0..p {
                let v = run(c, x, &InputMask::of([i])).unwrap();
                for t in 0..x.cols() {
                    let (b, m) = (*base.get(0, t), *v.get(0, t));
                    if b.value() * m.value() == -1 {
                        flips += 1;
                    }
                    total += 1;
                }
            }
            for a in 0..1usize << p {
                for b in 0..1usize << p {
                    if a == b || a & b != a {
                        continue;
                    }
                    let mask = |u: usize| InputMask::of((0..p).filter(move |i| u >> i & 1 == 0));
                    let va = run(c, x, &mask(a)).unwrap();
                    let vb = run(c, x, &mask(b)).unwrap();
                    for t in 0..x.cols() {
                        let (ya, yb) = (*va.get(0, t), *vb.get(0, t));
                        ok += usize::from(ya == Trit::Zero || ya == yb);
                        pairs += 1;
                    }
                }
            }
        }
        (1.0 - flips as f64 / total as f64, ok as f64 / pairs as f64)
    }

    #[test]
    fn metrics_match_naive_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = mixed_circuit(gates::kleene_not().id());
        let xs: Vec<Matrix<Trit>> = (0..5).map(|_| Matrix::from_fn(2, 3, |_, _| ALL_TRITS[rng.gen_range(0..3)])).collect();
        let (pres, lat) = naive_metrics(&c, &xs);
        assert_eq!(preservation(&c, &xs).unwrap(), pres);
        assert_eq!(lattice_compliance(&c, &xs).unwrap(), lat);
        // A gate that fabricates certainty from unknown input breaks the lattice.
        let bad = crate::GateTable::from_fn(|a, _| if a == Trit::Zero { Trit::Pos } else { a.not() });
        let c = mixed_circuit(bad.id());
        let (pres, lat) = naive_metrics(&c, &xs);
        assert_eq!(preservation(&c, &xs).unwrap(), pres);
        assert_eq!(lattice_compliance(&c, &xs).unwrap(), lat);
        assert!(lat < 1.0);
    }

    #[test]
    fn single_predicate_lattice_is_one_pair() {
        let c = always_circuit();
        let x = vec![trits(vec![vec![1, 1]])];
        let t = lattice_tally(&c, &x, PairSet::All).unwrap();
        assert_eq!(t.total, 2);
        assert_eq!(lattice_tally(&c, &x, PairSet::Covering).unwrap(), t);
    }

    #[test]
    fn too_many_predicates_rejected() {
        let cfg = CellConfig { predicates: 13, state: 0, outputs: 1, widths: vec![1], seed: 0 };
        let conn = ConnectivityMap { layers: vec![vec![[0, 1]]] };
        let c = HardCircuit::new(cfg, conn, vec![vec![gates::kleene_and().id()]]);
        if let Ok(c) = c {
            let x = vec![Matrix::filled(13, 1, Trit::Pos)];
            assert!(matches!(lattice_compliance(&c, &x), Err(Error::TooManyPredicates(13))));
        }
    }

    #[test]
    fn probe_examples() {
        let c = always_circuit();
        for p in ALL_TRITS {
            let r = fixed_point_probe(&c, &[p], 10).unwrap();
            assert!(r.converged && r.ascending && r.steps <= 1);
        }
        let n = not_recurrence();
        let r = fixed_point_probe(&n, &[Trit::Pos], 10).unwrap();
        assert_eq!((r.converged, r.steps), (true, 0));
        let r = fixed_point_probe_from(&n, &[Trit::Pos], &[Trit::Pos], 10).unwrap();
        assert_eq!(r.cycle_period, Some(2));
        assert!(!r.converged && !r.ascending);
    }

    #[test]
    fn sampled_masks_are_distinct_and_sized() {
        let m = dropout_masks(10, 5, 3);
        assert_eq!(m.len(), ABSTENTION_SAMPLES);
        assert!(m.iter().all(|x| x.masked.len() == 5));
        assert_eq!(dropout_masks(5, 2, 0).len(), 10);
        assert_eq!(dropout_masks(5, 2, 0), dropout_masks(5, 2, 9));
    }
}
