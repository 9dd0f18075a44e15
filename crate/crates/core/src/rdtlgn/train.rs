use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell::{recurrent_path, SoftCell};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::optim::{Adam, AdamConfig};
use crate::pst::{anneal_lambda, commitment_penalty, nearest_table_penalty, AnnealSchedule};
use crate::scalar::Scalar;
use crate::ternary::{enumerate_vocabulary, GateTable, Trit, VocabularyKind, VocabularyTag};

/// Soft outputs beyond `±1/3` read as determined verdicts.
pub const VERDICT_THRESHOLD: f64 = 1.0 / 3.0;

pub fn soft_verdict<T: Scalar>(y: T) -> Trit {
    let th = T::lit(VERDICT_THRESHOLD);
    if y > th {
        Trit::Pos
    } else if y < -th {
        Trit::Neg
    } else {
        Trit::Zero
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Class-weighted squared error against the target trit.
    #[default]
    MseTrit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// `total_steps = 0` means "the whole run".
    pub anneal: AnnealSchedule,
    #[serde(default)]
    pub loss_kind: LossKind,
    /// Per-class weights for `-1, 0, +1`; derived from label frequencies
    /// when absent.
    #[serde(default)]
    pub class_weights: Option<[f64; 3]>,
    /// Pull recurrent-path neurons toward the nearest NM table.
    #[serde(default = "default_true")]
    pub nm_enforce: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 32,
            learning_rate: 0.01,
            anneal: AnnealSchedule::linear(0.3, 0).with_warmup(0.1),
            loss_kind: LossKind::MseTrit,
            class_weights: None,
            nm_enforce: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::Config("epochs, batch size and learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lambda: f64,
    pub task_loss: f64,
    pub commitment: f64,
    pub total_loss: f64,
    pub accuracy: f64,
}

/// Weights inversely proportional to class frequency; absent classes get 0.
pub fn class_weights(labels: &[Vec<Trit>]) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for t in labels.iter().flatten() {
        counts[t.ord()] += 1;
    }
    let total: usize = counts.iter().sum();
    let present = counts.iter().filter(|c| **c > 0).count().max(1);
    let mut w = [0.0; 3];
    for (wi, c) in w.iter_mut().zip(counts) {
        if c > 0 {
            *wi = total as f64 / (present as f64 * c as f64);
        }
    }
    w
}

/// Loss value split into its parts, with gradient in flat parameter layout.
#[derive(Clone, Debug)]
pub struct Objective<T> {
    pub task: T,
    pub commitment: T,
    pub total: T,
    pub grad: Vec<T>,
}

/// Gradient of the mean per-trajectory task loss, plus outputs.
fn task_loss_grad<T: Scalar>(
    cell: &SoftCell<T>,
    inputs: &Matrix<T>,
    labels: &[Trit],
    weights: &[T; 3],
) -> Result<(T, Vec<Vec<[T; 9]>>, Matrix<T>)> {
    let (out, tape) = cell.unroll(inputs)?;
    let (k, len) = (out.rows(), out.cols());
    if labels.len() != len {
        return Err(Error::Shape(format!("{} labels for a trajectory of length {len}", labels.len())));
    }
    let norm = T::lit((k * len).max(1) as f64);
    let mut loss = T::zero();
    let mut d_out = Matrix::filled(k, len, T::zero());
    for t in 0..len {
        let target = T::lit(labels[t].as_f64());
        let c = weights[labels[t].ord()];
        for j in 0..k {
            let e = *out.get(j, t) - target;
            loss += c * e * e / norm;
            d_out.set(j, t, T::lit(2.0) * c * e / norm);
        }
    }
    Ok((loss, cell.backward(&tape, &d_out), out))
}

struct Regularizer {
    nm_tables: Vec<GateTable>,
    recurrent: Vec<Vec<bool>>,
}

impl Regularizer {
    fn new<T: Scalar>(cell: &SoftCell<T>, nm_enforce: bool) -> Self {
        let nm_tables = enumerate_vocabulary(VocabularyKind::new(VocabularyTag::Nm, true))
            .into_iter()
            .map(|id| id.table())
            .collect();
        let recurrent = if nm_enforce {
            recurrent_path(&cell.config, &cell.connectivity)
        } else {
            cell.config.widths.iter().map(|&w| vec![false; w]).collect()
        };
        Self { nm_tables, recurrent }
    }

    /// Mean commitment over neurons, with gradient in flat layout.
    fn eval<T: Scalar>(&self, cell: &SoftCell<T>) -> (T, Vec<T>) {
        let n = T::lit(cell.config.neuron_count() as f64);
        let mut value = T::zero();
        let mut grad = Vec::with_capacity(cell.param_count());
        for (l, layer) in cell.coeffs.iter().enumerate() {
            for (j, w) in layer.iter().enumerate() {
                let (mut v, mut g) = commitment_penalty(w);
                if self.recurrent[l][j] {
                    let (v2, g2) = nearest_table_penalty(w, &self.nm_tables);
                    v += v2;
                    g.iter_mut().zip(g2).for_each(|(a, b)| *a += b);
                }
                value += v / n;
                grad.extend(g.iter().map(|gi| *gi / n));
            }
        }
        (value, grad)
    }
}

/// Total loss `mean task loss + λ · mean commitment` on a batch, with its
/// gradient. Per-trajectory gradients are reduced in input order.
pub fn objective<T: Scalar>(
    cell: &SoftCell<T>,
    inputs: &[&Matrix<T>],
    labels: &[&[Trit]],
    weights: [f64; 3],
    lambda: f64,
    nm_enforce: bool,
) -> Result<Objective<T>> {
    let reg = Regularizer::new(cell, nm_enforce);
    let w = weights.map(T::lit);
    objective_with(cell, inputs, labels, &w, lambda, &reg).map(|(o, _)| o)
}

fn objective_with<T: Scalar>(
    cell: &SoftCell<T>,
    inputs: &[&Matrix<T>],
    labels: &[&[Trit]],
    weights: &[T; 3],
    lambda: f64,
    reg: &Regularizer,
) -> Result<(Objective<T>, Vec<Matrix<T>>)> {
    if inputs.len() != labels.len() || inputs.is_empty() {
        return Err(Error::Shape("inputs and labels must be non-empty and paired".into()));
    }
    let parts: Vec<_> = inputs
        .par_iter()
        .zip(labels.par_iter())
        .map(|(x, y)| task_loss_grad(cell, x, y, weights))
        .collect::<Result<Vec<_>>>()?;
    let n = T::lit(inputs.len() as f64);
    let mut grad = vec![T::zero(); cell.param_count()];
    let mut task = T::zero();
    let mut outputs = Vec::with_capacity(parts.len());
    for (loss, g, out) in parts {
        task += loss / n;
        for (dst, src) in grad.chunks_exact_mut(9).zip(g.iter().flatten()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += *s / n;
            }
        }
        outputs.push(out);
    }
    let (commitment, rgrad) = reg.eval(cell);
    let lam = T::lit(lambda);
    for (g, r) in grad.iter_mut().zip(rgrad) {
        *g += lam * r;
    }
    Ok((Objective { task, commitment, total: task + lam * commitment, grad }, outputs))
}

/// Minibatch training with full BPTT and Adam. Returns the trained cell and
/// one record per epoch.
pub fn train<T: Scalar>(
    mut cell: SoftCell<T>,
    inputs: &[Matrix<T>],
    labels: &[Vec<Trit>],
    tc: &TrainConfig,
) -> Result<(SoftCell<T>, Vec<EpochRecord>)> {
    tc.validate()?;
    if inputs.len() != labels.len() || inputs.is_empty() {
        return Err(Error::Shape("training needs paired, non-empty inputs and labels".into()));
    }
    for (x, y) in inputs.iter().zip(labels) {
        if x.rows() != cell.config.predicates || x.cols() != y.len() {
            return Err(Error::Shape("trajectory shape does not match cell or labels".into()));
        }
    }
    let weights = tc.class_weights.unwrap_or_else(|| class_weights(labels)).map(T::lit);
    let reg = Regularizer::new(&cell, tc.nm_enforce);
    let steps_per_epoch = inputs.len().div_ceil(tc.batch_size);
    let mut sched = tc.anneal;
    if sched.total_steps == 0 {
        sched.total_steps = tc.epochs * steps_per_epoch;
    }
    let mut opt = Adam::new(AdamConfig { learning_rate: tc.learning_rate, ..Default::default() }, cell.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = Vec::with_capacity(tc.epochs);
    let mut step = 0usize;
    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut task_sum = 0.0;
        let mut correct = 0usize;
        let mut seen = 0usize;
        let mut last = (0.0, 0.0, 0.0);
        for batch in order.chunks(tc.batch_size) {
            let lambda = anneal_lambda(&sched, step.min(sched.total_steps))?;
            let xs: Vec<&Matrix<T>> = batch.iter().map(|&i| &inputs[i]).collect();
            let ys: Vec<&[Trit]> = batch.iter().map(|&i| labels[i].as_slice()).collect();
            let (obj, outs) = objective_with(&cell, &xs, &ys, &weights, lambda, &reg)?;
            task_sum += obj.task.to_f64_lossy() * batch.len() as f64;
            for (out, y) in outs.iter().zip(&ys) {
                for (t, label) in y.iter().enumerate() {
                    correct += usize::from(soft_verdict(*out.get(0, t)) == *label);
                    seen += 1;
                }
            }
            last = (lambda, obj.commitment.to_f64_lossy(), obj.total.to_f64_lossy());
            let mut params = cell.flat_params();
            opt.step(&mut params, &obj.grad);
            cell.set_flat_params(&params);
            step += 1;
        }
        let task_loss = task_sum / inputs.len() as f64;
        history.push(EpochRecord {
            epoch,
            lambda: last.0,
            task_loss,
            commitment: last.1,
            total_loss: task_loss + last.0 * last.1,
            accuracy: if seen == 0 { 0.0 } else { correct as f64 / seen as f64 },
        });
        log::debug!("epoch {epoch}: task {task_loss:.4} commit {:.4} λ {:.3}", last.1, last.0);
    }
    Ok((cell, history))
}
