use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pst::{clip, clip_grad, coeffs_from_table, eval_poly, monomials, poly_input_grad, PolyCoeffs};
use crate::scalar::Scalar;
use crate::ternary::gates;

/// Weight of the pass-through projection in the initial coefficients.
pub const INIT_PASS_WEIGHT: f64 = 0.7;
/// Half-width of the uniform coefficient noise mixed into the initialization.
pub const INIT_NOISE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellConfig {
    /// Predicate inputs `P`.
    pub predicates: usize,
    /// Hidden state trits `S`.
    pub state: usize,
    /// Output trits `K`.
    pub outputs: usize,
    /// Layer widths; the last equals `state + outputs`.
    pub widths: Vec<usize>,
    pub seed: u64,
}

impl CellConfig {
    /// `layers` layers, all hidden layers of width `hidden`.
    pub fn uniform(predicates: usize, state: usize, outputs: usize, layers: usize, hidden: usize, seed: u64) -> Self {
        let mut widths = vec![hidden; layers.saturating_sub(1)];
        widths.push(state + outputs);
        Self { predicates, state, outputs, widths, seed }
    }

    /// Default hidden width: twice the output layer, and wide enough that
    /// every input can feed at least one first-layer neuron.
    pub fn default_hidden_width(predicates: usize, state: usize, outputs: usize) -> usize {
        (2 * (state + outputs)).max((predicates + state).div_ceil(2)).max(2)
    }

    pub fn layers(&self) -> usize {
        self.widths.len()
    }

    pub fn input_width(&self) -> usize {
        self.predicates + self.state
    }

    /// Width of the vector feeding layer `l`.
    pub fn layer_input_width(&self, l: usize) -> usize {
        if l == 0 {
            self.input_width()
        } else {
            self.widths[l - 1]
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.widths.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.outputs == 0 {
            return Err(Error::Config("cell needs at least one output trit".into()));
        }
        if self.widths.is_empty() {
            return Err(Error::Config("cell needs at least one layer".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.input_width() == 0 {
            return Err(Error::Config("cell has no inputs".into()));
        }
        let last = *self.widths.last().unwrap();
        if last != self.state + self.outputs {
            return Err(Error::Config(format!(
                "last layer width {last} != state {} + outputs {}",
                self.state, self.outputs
            )));
        }
        Ok(())
    }
}

/// Two parents per neuron, indexing into the previous layer (or into
/// `[p; h]` for the first layer).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityMap {
    pub layers: Vec<Vec<[usize; 2]>>,
}

impl ConnectivityMap {
    /// Uniform random parents followed by a repair pass that gives every
    /// node of the previous layer at least one child when the layer has
    /// enough input slots.
    pub fn random(cfg: &CellConfig, rng: &mut ChaCha8Rng) -> ConnectivityMap {
        let mut layers = Vec::with_capacity(cfg.layers());
        for (l, &width) in cfg.widths.iter().enumerate() {
            let in_w = cfg.layer_input_width(l);
            let mut parents: Vec<[usize; 2]> = (0..width)
                .map(|_| {
                    let s = rng.gen_range(0..in_w);
                    let mut t = rng.gen_range(0..in_w);
                    while in_w > 1 && t == s {
                        t = rng.gen_range(0..in_w);
                    }
                    [s, t]
                })
                .collect();
            repair_coverage(&mut parents, in_w, rng);
            layers.push(parents);
        }
        ConnectivityMap { layers }
    }

    pub fn validate(&self, cfg: &CellConfig) -> Result<()> {
        if self.layers.len() != cfg.layers() {
            return Err(Error::Shape("connectivity layer count".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.len() != cfg.widths[l] {
                return Err(Error::Shape(format!("connectivity layer {l} width")));
            }
            let in_w = cfg.layer_input_width(l);
            if layer.iter().flatten().any(|&p| p >= in_w) {
                return Err(Error::Shape(format!("parent index out of range in layer {l}")));
            }
        }
        Ok(())
    }

    /// For each layer, which nodes have a forward path to the last layer.
    pub fn reaches_output(&self, cfg: &CellConfig) -> Vec<Vec<bool>> {
        let layers = cfg.layers();
        let mut reach: Vec<Vec<bool>> = cfg.widths.iter().map(|&w| vec![false; w]).collect();
        reach[layers - 1].iter_mut().for_each(|r| *r = true);
        for l in (1..layers).rev() {
            for (j, ps) in self.layers[l].iter().enumerate() {
                if reach[l][j] {
                    for &p in ps {
                        reach[l - 1][p] = true;
                    }
                }
            }
        }
        reach
    }
}

fn repair_coverage(parents: &mut [[usize; 2]], in_w: usize, rng: &mut ChaCha8Rng) {
    let mut count = vec![0usize; in_w];
    for &p in parents.iter().flatten() {
        count[p] += 1;
    }
    let slots = parents.len() * 2;
    for u in 0..in_w {
        if count[u] > 0 {
            continue;
        }
        let start = rng.gen_range(0..slots);
        for k in 0..slots {
            let slot = (start + k) % slots;
            let (j, side) = (slot / 2, slot % 2);
            let cur = parents[j][side];
            if count[cur] >= 2 && parents[j][1 - side] != u {
                count[cur] -= 1;
                parents[j][side] = u;
                count[u] += 1;
                break;
            }
        }
    }
}

/// Neurons that lie on a path from a state input to a state output.
pub fn recurrent_path(cfg: &CellConfig, conn: &ConnectivityMap) -> Vec<Vec<bool>> {
    let layers = cfg.layers();
    let mut from_state: Vec<Vec<bool>> = Vec::with_capacity(layers);
    for (l, layer) in conn.layers.iter().enumerate() {
        let row: Vec<bool> = layer
            .iter()
            .map(|ps| {
                ps.iter().any(|&p| {
                    if l == 0 {
                        p >= cfg.predicates
                    } else {
                        from_state[l - 1][p]
                    }
                })
            })
            .collect();
        from_state.push(row);
    }
    let mut to_state: Vec<Vec<bool>> = cfg.widths.iter().map(|&w| vec![false; w]).collect();
    for j in 0..cfg.state {
        to_state[layers - 1][j] = true;
    }
    for l in (1..layers).rev() {
        for (j, ps) in conn.layers[l].iter().enumerate() {
            if to_state[l][j] {
                for &p in ps {
                    to_state[l - 1][p] = true;
                }
            }
        }
    }
    from_state
        .into_iter()
        .zip(to_state)
        .map(|(a, b)| a.into_iter().zip(b).map(|(x, y)| x && y).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoftCell<T> {
    pub config: CellConfig,
    pub connectivity: ConnectivityMap,
    /// `coeffs[l][j]` for neuron `j` of layer `l`.
    pub coeffs: Vec<Vec<PolyCoeffs<T>>>,
}

/// Activations recorded during an unroll, for backpropagation.
#[derive(Clone, Debug, Default)]
pub struct Tape<T> {
    /// `z_t` per timestep.
    pub inputs: Vec<Vec<T>>,
    /// Pre-clip activations per timestep and layer.
    pub pre: Vec<Vec<Vec<T>>>,
    /// Post-clip activations per timestep and layer.
    pub post: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> SoftCell<T> {
    /// Seeded connectivity and pass-through-biased coefficients.
    pub fn build(cfg: CellConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let connectivity = ConnectivityMap::random(&cfg, &mut rng);
        let reach = connectivity.reaches_output(&cfg);
        if let Some(l) = reach.iter().position(|r| r.iter().any(|x| !x)) {
            return Err(Error::Config(format!(
                "layer {l} has neurons with no path to the output; widen later layers"
            )));
        }
        let projections: [PolyCoeffs<T>; 2] =
            [coeffs_from_table(&gates::proj_first()), coeffs_from_table(&gates::proj_second())];
        let pass = T::lit(INIT_PASS_WEIGHT);
        let noise = T::lit(1.0 - INIT_PASS_WEIGHT);
        let coeffs = cfg
            .widths
            .iter()
            .map(|&w| {
                (0..w)
                    .map(|_| {
                        let base = projections.choose(&mut rng).unwrap();
                        let mut c = [T::zero(); 9];
                        for (ci, bi) in c.iter_mut().zip(base.0) {
                            let u = T::lit(rng.gen_range(-INIT_NOISE..INIT_NOISE));
                            *ci = pass * bi + noise * u;
                        }
                        PolyCoeffs(c)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { config: cfg, connectivity, coeffs })
    }

    /// Cell with the given coefficients on an existing wiring.
    pub fn from_parts(config: CellConfig, connectivity: ConnectivityMap, coeffs: Vec<Vec<PolyCoeffs<T>>>) -> Result<Self> {
        config.validate()?;
        connectivity.validate(&config)?;
        if coeffs.len() != config.layers()
            || coeffs.iter().zip(&config.widths).any(|(c, &w)| c.len() != w)
        {
            return Err(Error::Shape("coefficient array does not match widths".into()));
        }
        Ok(Self { config, connectivity, coeffs })
    }

    pub fn param_count(&self) -> usize {
        9 * self.config.neuron_count()
    }

    pub fn flat_params(&self) -> Vec<T> {
        self.coeffs.iter().flatten().flat_map(|c| c.0).collect()
    }

    pub fn set_flat_params(&mut self, params: &[T]) {
        assert_eq!(params.len(), self.param_count());
        let mut chunks = params.chunks_exact(9);
        for c in self.coeffs.iter_mut().flatten() {
            c.0.copy_from_slice(chunks.next().unwrap());
        }
    }

    fn forward_layers(&self, z: &[T], mut pre: Option<&mut Vec<Vec<T>>>, mut post: Option<&mut Vec<Vec<T>>>) -> Vec<T> {
        let mut x: Vec<T> = z.to_vec();
        for (l, layer) in self.connectivity.layers.iter().enumerate() {
            let mut p = Vec::with_capacity(layer.len());
            let y: Vec<T> = layer
                .iter()
                .zip(&self.coeffs[l])
                .map(|(ps, w)| {
                    let v = eval_poly(w, x[ps[0]], x[ps[1]]);
                    p.push(v);
                    clip(v)
                })
                .collect();
            if let Some(pre) = pre.as_deref_mut() {
                pre.push(p);
            }
            if let Some(post) = post.as_deref_mut() {
                post.push(y.clone());
            }
            x = y;
        }
        x
    }

    /// One step: returns `(h_t, y_t)`.
    pub fn cell_step(&self, p: &[T], h_prev: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        if p.len() != self.config.predicates || h_prev.len() != self.config.state {
            return Err(Error::Shape(format!(
                "cell step expects {} predicates and {} state entries",
                self.config.predicates, self.config.state
            )));
        }
        let z: Vec<T> = p.iter().chain(h_prev).copied().collect();
        let mut out = self.forward_layers(&z, None, None);
        let y = out.split_off(self.config.state);
        Ok((out, y))
    }

    fn check_inputs(&self, pred_seq: &Matrix<T>) -> Result<()> {
        if pred_seq.rows() != self.config.predicates {
            return Err(Error::Shape(format!(
                "cell expects {} predicates, sequence has {}",
                self.config.predicates,
                pred_seq.rows()
            )));
        }
        Ok(())
    }

    /// Runs from the zero state; returns outputs `K × T` and the tape.
    pub fn unroll(&self, pred_seq: &Matrix<T>) -> Result<(Matrix<T>, Tape<T>)> {
        self.check_inputs(pred_seq)?;
        let (s, k, len) = (self.config.state, self.config.outputs, pred_seq.cols());
        let mut h = vec![T::zero(); s];
        let mut out = Matrix::filled(k, len, T::zero());
        let mut tape = Tape::default();
        for t in 0..len {
            let z: Vec<T> = pred_seq.column(t).into_iter().chain(h.iter().copied()).collect();
            let mut pre = Vec::with_capacity(self.config.layers());
            let mut post = Vec::with_capacity(self.config.layers());
            let last = self.forward_layers(&z, Some(&mut pre), Some(&mut post));
            h.copy_from_slice(&last[..s]);
            for j in 0..k {
                out.set(j, t, last[s + j]);
            }
            tape.inputs.push(z);
            tape.pre.push(pre);
            tape.post.push(post);
        }
        Ok((out, tape))
    }

    /// Outputs only, without recording a tape.
    pub fn run(&self, pred_seq: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_inputs(pred_seq)?;
        let (s, k, len) = (self.config.state, self.config.outputs, pred_seq.cols());
        let mut h = vec![T::zero(); s];
        let mut out = Matrix::filled(k, len, T::zero());
        for t in 0..len {
            let z: Vec<T> = pred_seq.column(t).into_iter().chain(h.iter().copied()).collect();
            let last = self.forward_layers(&z, None, None);
            h.copy_from_slice(&last[..s]);
            for j in 0..k {
                out.set(j, t, last[s + j]);
            }
        }
        Ok(out)
    }

    /// Backpropagation through time. `d_out` holds `∂loss/∂y` (`K × T`);
    /// returns `∂loss/∂w` in the layout of `coeffs`.
    pub fn backward(&self, tape: &Tape<T>, d_out: &Matrix<T>) -> Vec<Vec<[T; 9]>> {
        let cfg = &self.config;
        let (p, s, k) = (cfg.predicates, cfg.state, cfg.outputs);
        let mut grads: Vec<Vec<[T; 9]>> = cfg.widths.iter().map(|&w| vec![[T::zero(); 9]; w]).collect();
        let mut dh_next = vec![T::zero(); s];
        for t in (0..tape.inputs.len()).rev() {
            let mut d_cur: Vec<T> = dh_next.iter().copied().chain((0..k).map(|j| *d_out.get(j, t))).collect();
            for l in (0..cfg.layers()).rev() {
                let x_in = if l == 0 { &tape.inputs[t] } else { &tape.post[t][l - 1] };
                let mut d_in = vec![T::zero(); x_in.len()];
                for (j, ps) in self.connectivity.layers[l].iter().enumerate() {
                    let g = d_cur[j] * clip_grad(tape.pre[t][l][j]);
                    if g == T::zero() {
                        continue;
                    }
                    let (a, b) = (x_in[ps[0]], x_in[ps[1]]);
                    let m = monomials(a, b);
                    for (gi, mi) in grads[l][j].iter_mut().zip(m) {
                        *gi += g * mi;
                    }
                    let (da, db) = poly_input_grad(&self.coeffs[l][j], a, b);
                    d_in[ps[0]] += g * da;
                    d_in[ps[1]] += g * db;
                }
                d_cur = d_in;
            }
            dh_next = d_cur[p..p + s].to_vec();
        }
        grads
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ternary::{gates, Trit, ALL_TRITS};
    use crate::pst::coeffs_from_table;

    fn s01_config(seed: u64) -> CellConfig {
        let hidden = CellConfig::default_hidden_width(2, 12, 1);
        CellConfig::uniform(2, 12, 1, 6, hidden, seed)
    }

    #[test]
    fn build_s01_sized_cell() {
        let cell: SoftCell<f64> = SoftCell::build(s01_config(3)).unwrap();
        assert_eq!(cell.config.widths.len(), 6);
        assert_eq!(*cell.config.widths.last().unwrap(), 13);
        let again: SoftCell<f64> = SoftCell::build(s01_config(3)).unwrap();
        assert_eq!(cell, again);
        let other: SoftCell<f64> = SoftCell::build(s01_config(4)).unwrap();
        assert_ne!(cell.connectivity, other.connectivity);
    }

    #[test]
    fn every_node_feeds_forward() {
        for seed in 0..20 {
            let cfg = s01_config(seed);
            let cell: SoftCell<f64> = SoftCell::build(cfg.clone()).unwrap();
            // Every input and every hidden node has a child.
            for l in 0..cfg.layers() {
                let in_w = cfg.layer_input_width(l);
                let mut seen = vec![false; in_w];
                for &p in cell.connectivity.layers[l].iter().flatten() {
                    seen[p] = true;
                }
                assert!(seen.iter().all(|x| *x), "seed {seed} layer {l}");
            }
        }
    }

    #[test]
    fn inconsistent_widths_rejected() {
        let mut cfg = s01_config(0);
        *cfg.widths.last_mut().unwrap() = 12;
        assert!(SoftCell::<f64>::build(cfg).is_err());
        let cfg = CellConfig { predicates: 2, state: 1, outputs: 0, widths: vec![1], seed: 0 };
        assert!(SoftCell::<f64>::build(cfg).is_err());
    }

    /// One neuron: h_t = AND(p_t, h_{t-1}), mirrored to the output by a
    /// second neuron in the same layer.
    pub(crate) fn always_cell() -> SoftCell<f64> {
        let cfg = CellConfig { predicates: 1, state: 1, outputs: 1, widths: vec![2], seed: 0 };
        let conn = ConnectivityMap { layers: vec![vec![[0, 1], [0, 1]]] };
        let and: PolyCoeffs<f64> = coeffs_from_table(&gates::kleene_and());
        SoftCell::from_parts(cfg, conn, vec![vec![and, and]]).unwrap()
    }

    #[test]
    fn always_cell_from_determined_start() {
        let cell = always_cell();
        let mut h = vec![1.0];
        let mut ys = Vec::new();
        for p in [1.0, 1.0, -1.0] {
            let (h2, y) = cell.cell_step(&[p], &h).unwrap();
            h = h2;
            ys.push(y[0]);
        }
        assert_eq!(ys, vec![1.0, 1.0, -1.0]);
    }

    #[test]
    fn zero_propagates_through_projections() {
        let cfg = CellConfig::uniform(2, 2, 1, 3, 4, 1);
        let mut cell: SoftCell<f64> = SoftCell::build(cfg).unwrap();
        let proj: PolyCoeffs<f64> = coeffs_from_table(&gates::proj_second());
        cell.coeffs.iter_mut().flatten().for_each(|c| *c = proj);
        let (h, y) = cell.cell_step(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(h.iter().chain(&y).all(|v| *v == 0.0));
    }

    #[test]
    fn grid_inputs_stay_on_grid_for_exact_gates() {
        let cfg = CellConfig::uniform(2, 3, 1, 4, 6, 9);
        let mut cell: SoftCell<f64> = SoftCell::build(cfg).unwrap();
        let pool = [gates::kleene_and(), gates::kleene_or(), gates::kleene_not(), gates::kleene_xor()];
        let mut i = 0;
        for c in cell.coeffs.iter_mut().flatten() {
            *c = coeffs_from_table(&pool[i % pool.len()]);
            i += 1;
        }
        let seq = Matrix::from_fn(2, 9, |r, t| ALL_TRITS[(r + 2 * t) % 3].as_f64());
        let (_, tape) = cell.unroll(&seq).unwrap();
        for v in tape.post.iter().flatten().flatten() {
            assert!(ALL_TRITS.iter().any(|t| t.as_f64() == *v), "{v}");
        }
        let _ = Trit::Zero;
    }

    #[test]
    fn unroll_edge_cases() {
        let cell: SoftCell<f64> = SoftCell::build(s01_config(1)).unwrap();
        let (out, tape) = cell.unroll(&Matrix::filled(2, 0, 0.0)).unwrap();
        assert_eq!(out.cols(), 0);
        assert!(tape.inputs.is_empty());
        assert!(cell.unroll(&Matrix::filled(3, 4, 0.0)).is_err());
        let seq = Matrix::from_fn(2, 10, |r, t| ((r * 7 + t * 3) as f64).sin());
        let (out, tape) = cell.unroll(&seq).unwrap();
        assert!(out.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(tape.post.iter().flatten().flatten().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(cell.run(&seq).unwrap(), out);
    }

    #[test]
    fn recurrent_path_of_always_cell() {
        let cell = always_cell();
        let rp = recurrent_path(&cell.config, &cell.connectivity);
        assert_eq!(rp, vec![vec![true, false]]);
    }
}
