//! Synthetic 2D navigation data: a point mass steering toward a goal among
//! box-shaped hazards, five normalized predicates per timestep, balanced
//! selection, seeded splits, and CSV/JSON persistence.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stl::{make_labels, parse_formula, Formula, LabelConfig, Pipeline};
use crate::ternary::Trit;

pub const DATASET_FORMAT: &str = "rdtlgn-dataset";
pub const DATASET_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 11] = ["traj_id", "t", "px", "py", "vx", "vy", "mu_g", "mu_s", "mu_m", "mu_h", "mu_p"];

/// The five predicates, in the canonical row order of the full signal
/// matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateKind {
    /// At the goal.
    Goal,
    /// Clear of hazards.
    Safe,
    /// Moving faster than the speed threshold.
    Moving,
    /// Velocity pointing toward the goal.
    Heading,
    /// Closing in on the goal.
    Approach,
}

impl PredicateKind {
    pub const ALL: [PredicateKind; 5] = [Self::Goal, Self::Safe, Self::Moving, Self::Heading, Self::Approach];

    pub fn row(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        CSV_HEADER[6 + self.row()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Aabb {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    /// Euclidean distance to the box, negative inside (depth to the nearest
    /// face).
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let dx = (self.min[0] - p[0]).max(p[0] - self.max[0]);
        let dy = (self.min[1] - p[1]).max(p[1] - self.max[1]);
        if dx <= 0.0 && dy <= 0.0 {
            dx.max(dy)
        } else {
            dx.max(0.0).hypot(dy.max(0.0))
        }
    }
}

/// Scales of the tanh saturation maps, one per predicate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateScales {
    pub goal: f64,
    pub safe: f64,
    pub moving: f64,
    pub approach: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub bounds: Aabb,
    pub goal: [f64; 2],
    pub goal_radius: f64,
    pub obstacles: Vec<Aabb>,
    /// Distance from a hazard below which `mu_s` turns negative.
    pub safe_margin: f64,
    pub speed_threshold: f64,
    pub max_speed: f64,
    /// Standard deviation of the per-step heading perturbation (radians).
    pub heading_noise: f64,
    pub speed_noise: f64,
    /// Probability that an agent first steers to a random waypoint.
    pub detour_prob: f64,
    pub scales: PredicateScales,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            bounds: Aabb { min: [0.0, 0.0], max: [10.0, 10.0] },
            goal: [7.5, 7.5],
            goal_radius: 1.0,
            obstacles: vec![
                Aabb { min: [3.0, 5.5], max: [5.0, 7.0] },
                Aabb { min: [5.5, 2.5], max: [7.0, 4.5] },
            ],
            safe_margin: 0.5,
            speed_threshold: 0.15,
            max_speed: 0.9,
            heading_noise: 0.35,
            speed_noise: 0.08,
            detour_prob: 0.35,
            scales: PredicateScales { goal: 0.5, safe: 0.5, moving: 0.1, approach: 0.25 },
            seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.bounds.contains(self.goal) {
            return Err(Error::Config("goal lies outside the world bounds".into()));
        }
        if self.obstacles.iter().any(|o| !self.bounds.contains_box(o)) {
            return Err(Error::Config("obstacle lies outside the world bounds".into()));
        }
        let s = &self.scales;
        if [self.goal_radius, self.safe_margin, self.max_speed, s.goal, s.safe, s.moving, s.approach]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return Err(Error::Config("radii, margins, speeds and scales must be positive".into()));
        }
        if !(self.heading_noise >= 0.0 && self.speed_noise >= 0.0 && (0.0..=1.0).contains(&self.detour_prob)) {
            return Err(Error::Config("noise must be nonnegative and detour_prob in [0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    (a + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn simulate(world: &WorldConfig, len: usize, rng: &mut ChaCha8Rng) -> Trajectory {
    let b = &world.bounds;
    let uniform_point = |rng: &mut ChaCha8Rng| [rng.gen_range(b.min[0]..=b.max[0]), rng.gen_range(b.min[1]..=b.max[1])];
    let mut pos = uniform_point(rng);
    let mut heading: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let mut speed = rng.gen_range(0.0..world.max_speed);
    let gain = rng.gen_range(0.3..0.9);
    let mut waypoint = if rng.gen_bool(world.detour_prob) { Some(uniform_point(rng)) } else { None };
    let heading_n = Normal::new(0.0, world.heading_noise).unwrap();
    let speed_n = Normal::new(0.0, world.speed_noise).unwrap();
    let mut states = Vec::with_capacity(len);
    for _ in 0..len {
        if let Some(w) = waypoint {
            if norm(sub(w, pos)) < world.goal_radius {
                waypoint = None;
            }
        }
        let target = waypoint.unwrap_or(world.goal);
        let to = sub(target, pos);
        let dist = norm(to);
        if dist > 1e-12 {
            heading = wrap_angle(heading + gain * wrap_angle(to[1].atan2(to[0]) - heading));
        }
        heading += heading_n.sample(rng);
        speed = (speed + speed_n.sample(rng)).clamp(0.0, world.max_speed);
        // Ease in so the agent can stop on the goal instead of orbiting it.
        let step = if waypoint.is_none() { speed.min(dist) } else { speed };
        // The recorded velocity is the one about to be applied.
        let vel = [step * heading.cos(), step * heading.sin()];
        states.push(State { pos, vel });
        pos = [
            (pos[0] + vel[0]).clamp(b.min[0], b.max[0]),
            (pos[1] + vel[1]).clamp(b.min[1], b.max[1]),
        ];
    }
    Trajectory { states }
}

/// `count` trajectories of length `len`; trajectory `i` uses its own RNG
/// stream so results do not depend on scheduling.
pub fn gen_trajectories(world: &WorldConfig, count: usize, len: usize, seed: u64) -> Result<Vec<Trajectory>> {
    world.validate()?;
    if count == 0 || len == 0 {
        return Err(Error::Config("trajectory count and length must be at least 1".into()));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            simulate(world, len, &mut rng)
        })
        .collect())
}

fn clip1(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Full `5 × T` predicate matrix in canonical row order.
pub fn compute_predicates(traj: &Trajectory, world: &WorldConfig) -> Matrix<f64> {
    let s = &world.scales;
    let mut m = Matrix::filled(5, traj.len(), 0.0);
    for (t, st) in traj.states.iter().enumerate() {
        let to_goal = sub(world.goal, st.pos);
        let dist = norm(to_goal);
        let speed = norm(st.vel);
        let r = world.goal_radius;
        let mu_g = clip1(((r - dist) / s.goal).tanh() / (r / s.goal).tanh());
        let clearance = world.obstacles.iter().map(|o| o.signed_distance(st.pos)).fold(f64::INFINITY, f64::min);
        let margin = world.safe_margin;
        let mu_s = if clearance.is_finite() {
            clip1(((clearance - margin) / s.safe).tanh() / (margin / s.safe).tanh())
        } else {
            1.0
        };
        let mu_m = clip1(((speed - world.speed_threshold) / s.moving).tanh());
        let (mu_h, mu_p) = if speed > 0.0 && dist > 0.0 {
            let radial = (st.vel[0] * to_goal[0] + st.vel[1] * to_goal[1]) / dist;
            (clip1(radial / speed), clip1((radial / s.approach).tanh()))
        } else {
            (0.0, 0.0)
        };
        for (k, v) in [mu_g, mu_s, mu_m, mu_h, mu_p].into_iter().enumerate() {
            m.set(k, t, v);
        }
    }
    m
}

/// A formula over a subset of the predicates: `p<i>` reads
/// `predicates[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecDef {
    pub name: String,
    pub formula: String,
    pub predicates: Vec<PredicateKind>,
}

impl SpecDef {
    pub fn parse(&self) -> Result<Formula> {
        let f = parse_formula(&self.formula)?;
        if f.predicate_count() > self.predicates.len() {
            return Err(Error::Config(format!(
                "{} uses p{} but names only {} predicates",
                self.name,
                f.predicate_count() - 1,
                self.predicates.len()
            )));
        }
        Ok(f)
    }

    /// Rows of the full matrix this spec reads, in `p<i>` order.
    pub fn select(&self, full: &Matrix<f64>) -> Matrix<f64> {
        full.select_rows(&self.predicates.iter().map(|k| k.row()).collect::<Vec<_>>())
    }
}

/// The six navigation benchmarks. Predicates are indexed in canonical
/// order among those used (goal, safe, moving, heading, approach).
pub fn benchmark_specs() -> Vec<SpecDef> {
    use PredicateKind::*;
    let spec = |name: &str, formula: &str, predicates: Vec<PredicateKind>| SpecDef {
        name: name.into(),
        formula: formula.into(),
        predicates,
    };
    vec![
        spec("S01", "G[0,3](p1 U[0,3] p0)", vec![Goal, Heading]),
        spec("S02", "G[0,2]((p1 | p2) U[0,3] p0)", vec![Goal, Heading, Approach]),
        spec("S03", "G[0,2]((p2 | p1) U[0,3] (p0 | p3))", vec![Goal, Safe, Heading, Approach]),
        spec("S04", "G[0,2]((p2 | p3) U[0,3] (p0 | p1))", vec![Goal, Safe, Heading, Approach]),
        spec("S05", "G[0,2]((p3 | p1) U[0,3] p0) & F[0,3](p4 | p2)", vec![Goal, Safe, Moving, Heading, Approach]),
        spec("S06", "G[0,2]((p3 | p4 | p2) U[0,3] (p0 | p1))", vec![Goal, Safe, Moving, Heading, Approach]),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub world: WorldConfig,
    pub trajectories: Vec<Trajectory>,
    /// Full `5 × T` predicate matrices.
    pub signals: Vec<Matrix<f64>>,
}

impl Dataset {
    pub fn generate(world: &WorldConfig, count: usize, len: usize, seed: u64) -> Result<Self> {
        let trajectories = gen_trajectories(world, count, len, seed)?;
        let signals = trajectories.par_iter().map(|t| compute_predicates(t, world)).collect();
        Ok(Self { world: world.clone(), trajectories, signals })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            world: self.world.clone(),
            trajectories: idx.iter().map(|&i| self.trajectories[i].clone()).collect(),
            signals: idx.iter().map(|&i| self.signals[i].clone()).collect(),
        }
    }

    pub fn spec_signals(&self, spec: &SpecDef) -> Vec<Matrix<f64>> {
        self.signals.iter().map(|m| spec.select(m)).collect()
    }

    pub fn labels(&self, spec: &SpecDef, pipeline: Pipeline, delta: f64) -> Result<Vec<Vec<Trit>>> {
        let phi = spec.parse()?;
        let cfg = LabelConfig::new(pipeline, delta)?;
        self.spec_signals(spec).par_iter().map(|x| make_labels(&phi, x, &cfg)).collect()
    }
}

/// Per-class label frequencies for `-1, 0, +1`.
pub fn class_frequencies(labels: &[Vec<Trit>]) -> [f64; 3] {
    let mut c = [0usize; 3];
    for t in labels.iter().flatten() {
        c[t.ord()] += 1;
    }
    let n = c.iter().sum::<usize>().max(1) as f64;
    c.map(|v| v as f64 / n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected pool indices, ascending.
    pub indices: Vec<usize>,
    pub frequencies: [f64; 3],
    /// Some class is absent from the selection.
    pub degenerate: bool,
}

/// Greedy selection of `n` trajectories maximizing the smallest class
/// frequency of the pooled labels (ties: smaller largest frequency, then
/// lower index).
pub fn balance_select(labels: &[Vec<Trit>], n: usize) -> Result<Selection> {
    if n > labels.len() {
        return Err(Error::Config(format!("cannot select {n} of {} trajectories", labels.len())));
    }
    let counts: Vec<[usize; 3]> = labels
        .iter()
        .map(|y| {
            let mut c = [0usize; 3];
            y.iter().for_each(|t| c[t.ord()] += 1);
            c
        })
        .collect();
    let mut taken = vec![false; labels.len()];
    let mut total = [0usize; 3];
    let mut indices = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, c) in counts.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let sum: usize = (0..3).map(|k| total[k] + c[k]).sum();
            let f = |k: usize| (total[k] + c[k]) as f64 / sum.max(1) as f64;
            let (lo, hi) = (f(0).min(f(1)).min(f(2)), f(0).max(f(1)).max(f(2)));
            if best.is_none_or(|(_, blo, bhi)| lo > blo || (lo == blo && hi < bhi)) {
                best = Some((i, lo, hi));
            }
        }
        let (i, _, _) = best.expect("pool holds at least n trajectories");
        taken[i] = true;
        (0..3).for_each(|k| total[k] += counts[i][k]);
        indices.push(i);
    }
    indices.sort_unstable();
    let sum = total.iter().sum::<usize>().max(1) as f64;
    let frequencies = total.map(|c| c as f64 / sum);
    let degenerate = total.contains(&0);
    if degenerate {
        log::warn!("balanced selection could not represent every class: {frequencies:?}");
    }
    Ok(Selection { indices, frequencies, degenerate })
}

/// Seeded shuffle split into `(train, eval)` index lists.
pub fn split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64) * train_fraction).round() as usize;
    let eval = idx.split_off(cut.min(n));
    (idx, eval)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub spec: SpecDef,
    pub ctq: Vec<Vec<Trit>>,
    pub qtc: Vec<Vec<Trit>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub world: WorldConfig,
    pub delta: f64,
    pub traj_ids: Vec<usize>,
    pub labels: Vec<LabelSet>,
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn save_split(
    dir: &Path,
    stem: &str,
    data: &Dataset,
    traj_ids: &[usize],
    labels: Vec<LabelSet>,
    delta: f64,
    config_hash: &str,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
    w.write_record(CSV_HEADER)?;
    for ((traj, sig), id) in data.trajectories.iter().zip(&data.signals).zip(traj_ids) {
        for (t, st) in traj.states.iter().enumerate() {
            let mut rec = vec![id.to_string(), t.to_string()];
            rec.extend([st.pos[0], st.pos[1], st.vel[0], st.vel[1]].iter().map(|v| v.to_string()));
            rec.extend((0..5).map(|k| sig.get(k, t).to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    let side = Sidecar {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        config_hash: config_hash.into(),
        world: data.world.clone(),
        delta,
        traj_ids: traj_ids.to_vec(),
        labels,
    };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&side)?)?;
    Ok(())
}

/// Reads a split written by [`save_split`]. Predicate columns are read
/// back as stored, not recomputed.
pub fn load_split(dir: &Path, stem: &str) -> Result<(Dataset, Sidecar)> {
    let side: Sidecar = serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json")))?)?;
    if side.format != DATASET_FORMAT || side.version != DATASET_VERSION {
        return Err(Error::Checkpoint(format!("unsupported dataset file {} v{}", side.format, side.version)));
    }
    let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
    if r.headers()?.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Checkpoint("unexpected dataset CSV header".into()));
    }
    let mut rows: Vec<(usize, Vec<(State, [f64; 5])>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| Error::Checkpoint(format!("bad number {:?}: {e}", &rec[i])))
        };
        let id: usize = rec[0].parse().map_err(|_| Error::Checkpoint("bad traj_id".into()))?;
        let st = State { pos: [num(2)?, num(3)?], vel: [num(4)?, num(5)?] };
        let mu = [num(6)?, num(7)?, num(8)?, num(9)?, num(10)?];
        match rows.last_mut() {
            Some((last, v)) if *last == id => v.push((st, mu)),
            _ => rows.push((id, vec![(st, mu)])),
        }
    }
    if rows.iter().map(|(id, _)| *id).ne(side.traj_ids.iter().copied()) {
        return Err(Error::Checkpoint("CSV trajectories do not match the sidecar".into()));
    }
    let mut data = Dataset { world: side.world.clone(), trajectories: Vec::new(), signals: Vec::new() };
    for (_, v) in rows {
        data.signals.push(Matrix::from_fn(5, v.len(), |k, t| v[t].1[k]));
        data.trajectories.push(Trajectory { states: v.into_iter().map(|(s, _)| s).collect() });
    }
    Ok((data, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::state_complexity;

    #[test]
    fn generation_is_deterministic() {
        let w = WorldConfig::default();
        let a = Dataset::generate(&w, 20, 12, 5).unwrap();
        let b = Dataset::generate(&w, 20, 12, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, Dataset::generate(&w, 20, 12, 6).unwrap());
    }

    #[test]
    fn default_shape() {
        let d = Dataset::generate(&WorldConfig::default(), 816, 20, 0).unwrap();
        assert_eq!(d.len(), 816);
        assert!(d.trajectories.iter().all(|t| t.len() == 20));
        assert!(d.signals.iter().all(|m| m.rows() == 5 && m.cols() == 20));
        assert!(d.signals.iter().flat_map(|m| m.as_slice()).all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn noiseless_controller_approaches_goal() {
        let w = WorldConfig { heading_noise: 0.0, speed_noise: 0.0, detour_prob: 0.0, ..Default::default() };
        for t in gen_trajectories(&w, 30, 20, 1).unwrap() {
            let d0 = norm(sub(w.goal, t.states[0].pos));
            let d1 = norm(sub(w.goal, t.states.last().unwrap().pos));
            assert!(d1 < d0 || d0 == 0.0, "{d0} -> {d1}");
        }
    }

    #[test]
    fn predicate_geometry() {
        let w = WorldConfig::default();
        let at_goal = Trajectory { states: vec![State { pos: w.goal, vel: [0.0, 0.0] }] };
        let m = compute_predicates(&at_goal, &w);
        assert_eq!(*m.get(0, 0), 1.0);
        assert!(*m.get(2, 0) < 0.0);
        assert_eq!(*m.get(3, 0), 0.0);
        let o = w.obstacles[0];
        let inside = Trajectory { states: vec![State { pos: [(o.min[0] + o.max[0]) / 2.0, (o.min[1] + o.max[1]) / 2.0], vel: [0.1, 0.0] }] };
        assert_eq!(*compute_predicates(&inside, &w).get(1, 0), -1.0);
        let p = [2.0, 7.5];
        let toward = Trajectory { states: vec![State { pos: p, vel: [0.5, 0.0] }] };
        let m = compute_predicates(&toward, &w);
        assert!((*m.get(3, 0) - 1.0).abs() < 1e-12);
        assert!(*m.get(4, 0) > 0.9);
    }

    #[test]
    fn signed_distance() {
        let b = Aabb { min: [0.0, 0.0], max: [2.0, 2.0] };
        assert_eq!(b.signed_distance([1.0, 1.0]), -1.0);
        assert_eq!(b.signed_distance([5.0, 1.0]), 3.0);
        assert_eq!(b.signed_distance([5.0, 6.0]), 5.0);
    }

    #[test]
    fn benchmark_state_complexity() {
        let s: Vec<usize> = benchmark_specs().iter().map(|s| state_complexity(&s.parse().unwrap())).collect();
        assert_eq!(s, vec![12, 11, 11, 11, 15, 11]);
        for s in benchmark_specs() {
            assert_eq!(s.parse().unwrap().predicate_count(), s.predicates.len());
        }
    }

    #[test]
    fn balance_examples() {
        let all_pos = vec![vec![Trit::Pos; 4]; 5];
        let s = balance_select(&all_pos, 3).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.indices.len(), 3);
        let mixed = vec![
            vec![Trit::Pos, Trit::Pos],
            vec![Trit::Neg, Trit::Neg],
            vec![Trit::Zero, Trit::Pos],
            vec![Trit::Pos, Trit::Pos],
        ];
        assert_eq!(balance_select(&mixed, 4).unwrap().indices, vec![0, 1, 2, 3]);
        let s = balance_select(&mixed, 3).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2]);
        assert!(s.frequencies.iter().all(|f| *f >= 0.1));
        assert!(balance_select(&mixed, 5).is_err());
    }

    #[test]
    fn default_world_balances_every_benchmark() {
        let d = Dataset::generate(&WorldConfig::default(), 1200, 20, 0).unwrap();
        for spec in benchmark_specs() {
            let y = d.labels(&spec, Pipeline::Ctq, 0.2).unwrap();
            let s = balance_select(&y, 400).unwrap();
            assert!(s.frequencies.iter().all(|f| *f >= 0.1), "{}: {:?}", spec.name, s.frequencies);
        }
    }

    #[test]
    fn split_is_seeded_partition() {
        let (a, b) = split(10, 0.8, 3);
        assert_eq!((a.len(), b.len()), (8, 2));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split(10, 0.8, 3), (a, b));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = WorldConfig::default();
        let d = Dataset::generate(&w, 4, 6, 2).unwrap();
        let spec = benchmark_specs().remove(0);
        let labels = vec![LabelSet {
            ctq: d.labels(&spec, Pipeline::Ctq, 0.2).unwrap(),
            qtc: d.labels(&spec, Pipeline::Qtc, 0.2).unwrap(),
            spec,
        }];
        save_split(dir.path(), "train", &d, &[3, 5, 7, 9], labels.clone(), 0.2, "abc").unwrap();
        let (back, side) = load_split(dir.path(), "train").unwrap();
        assert_eq!(side.labels, labels);
        assert_eq!(back.trajectories, d.trajectories);
        assert_eq!(back.signals, d.signals);
    }
}
