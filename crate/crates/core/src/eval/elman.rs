//! Vanilla tanh RNN with a three-class head, the learned baseline.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::optim::{Adam, AdamConfig};
use crate::rdtlgn::class_weights;
use crate::scalar::Scalar;
use crate::ternary::Trit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElmanConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ElmanConfig {
    fn default() -> Self {
        Self { epochs: 60, batch_size: 32, learning_rate: 0.01, seed: 0 }
    }
}

/// `h_t = tanh(Wx x_t + Wh h_{t-1} + bh)`, logits `Wy h_t + by` over
/// classes `-1, 0, +1`. Parameters live in one flat vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElmanBaseline<T> {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<T>,
}

struct Layout {
    wx: usize,
    wh: usize,
    bh: usize,
    wy: usize,
    by: usize,
    len: usize,
}

fn softmax3<T: Scalar>(z: [T; 3]) -> [T; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = z.map(|v| (v - m).exp());
    let s = e[0] + e[1] + e[2];
    e.map(|v| v / s)
}

impl<T: Scalar> ElmanBaseline<T> {
    pub fn new(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self { inputs, hidden, params: Vec::new() };
        let lay = m.layout();
        let sx = 1.0 / (inputs.max(1) as f64).sqrt();
        let sh = 1.0 / (hidden.max(1) as f64).sqrt();
        m.params = (0..lay.len)
            .map(|i| {
                let scale = if i < lay.wh {
                    sx
                } else if i < lay.bh || (lay.wy..lay.by).contains(&i) {
                    sh
                } else {
                    0.0
                };
                T::lit(rng.gen_range(-scale..=scale))
            })
            .collect();
        m
    }

    fn layout(&self) -> Layout {
        let (p, h) = (self.inputs, self.hidden);
        let wx = 0;
        let wh = wx + h * p;
        let bh = wh + h * h;
        let wy = bh + h;
        let by = wy + 3 * h;
        Layout { wx, wh, bh, wy, by, len: by + 3 }
    }

    pub fn param_count(&self) -> usize {
        self.layout().len
    }

    /// Hidden states and class probabilities per timestep.
    fn forward(&self, x: &Matrix<T>) -> (Vec<Vec<T>>, Vec<[T; 3]>) {
        let (p, hd) = (self.inputs, self.hidden);
        let lay = self.layout();
        let w = &self.params;
        let mut hs = Vec::with_capacity(x.cols());
        let mut probs = Vec::with_capacity(x.cols());
        let mut h = vec![T::zero(); hd];
        for t in 0..x.cols() {
            let mut next = vec![T::zero(); hd];
            for (i, n) in next.iter_mut().enumerate() {
                let mut a = w[lay.bh + i];
                for j in 0..p {
                    a += w[lay.wx + i * p + j] * *x.get(j, t);
                }
                for j in 0..hd {
                    a += w[lay.wh + i * hd + j] * h[j];
                }
                *n = a.tanh();
            }
            let mut z = [T::zero(); 3];
            for (c, zc) in z.iter_mut().enumerate() {
                *zc = w[lay.by + c];
                for j in 0..hd {
                    *zc += w[lay.wy + c * hd + j] * next[j];
                }
            }
            probs.push(softmax3(z));
            h = next.clone();
            hs.push(next);
        }
        (hs, probs)
    }

    /// Argmax class per timestep, lowest class on ties.
    pub fn verdicts(&self, x: &Matrix<T>) -> Result<Vec<Trit>> {
        if x.rows() != self.inputs {
            return Err(Error::Shape(format!("RNN expects {} inputs, got {}", self.inputs, x.rows())));
        }
        let (_, probs) = self.forward(x);
        Ok(probs
            .iter()
            .map(|pr| {
                let mut best = 0;
                for c in 1..3 {
                    if pr[c] > pr[best] {
                        best = c;
                    }
                }
                Trit::from_ord(best)
            })
            .collect())
    }

    /// Weighted cross-entropy summed over timesteps and divided by `norm`,
    /// with its gradient by BPTT.
    fn loss_grad(&self, x: &Matrix<T>, labels: &[Trit], weights: &[T; 3], norm: T) -> (T, Vec<T>) {
        let (p, hd) = (self.inputs, self.hidden);
        let lay = self.layout();
        let w = &self.params;
        let (hs, probs) = self.forward(x);
        let mut g = vec![T::zero(); lay.len];
        let mut loss = T::zero();
        let mut dh_next = vec![T::zero(); hd];
        let zero = vec![T::zero(); hd];
        for t in (0..x.cols()).rev() {
            let c = labels[t].ord();
            let wc = weights[c] / norm;
            loss -= wc * probs[t][c].ln();
            let mut dz = probs[t].map(|v| v * wc);
            dz[c] -= wc;
            let mut dh = dh_next.clone();
            for k in 0..3 {
                g[lay.by + k] += dz[k];
                for j in 0..hd {
                    g[lay.wy + k * hd + j] += dz[k] * hs[t][j];
                    dh[j] += dz[k] * w[lay.wy + k * hd + j];
                }
            }
            let h_prev = if t == 0 { &zero } else { &hs[t - 1] };
            dh_next.iter_mut().for_each(|v| *v = T::zero());
            for i in 0..hd {
                let da = dh[i] * (T::one() - hs[t][i] * hs[t][i]);
                g[lay.bh + i] += da;
                for j in 0..p {
                    g[lay.wx + i * p + j] += da * *x.get(j, t);
                }
                for j in 0..hd {
                    g[lay.wh + i * hd + j] += da * h_prev[j];
                    dh_next[j] += da * w[lay.wh + i * hd + j];
                }
            }
        }
        (loss, g)
    }

    /// Mean weighted cross-entropy per timestep over a batch, and gradient.
    pub fn objective(&self, inputs: &[&Matrix<T>], labels: &[&[Trit]], weights: [f64; 3]) -> Result<(T, Vec<T>)> {
        if inputs.len() != labels.len() || inputs.is_empty() {
            return Err(Error::Shape("inputs and labels must be non-empty and paired".into()));
        }
        for (x, y) in inputs.iter().zip(labels) {
            if x.rows() != self.inputs || x.cols() != y.len() {
                return Err(Error::Shape("trajectory shape does not match RNN or labels".into()));
            }
        }
        let steps: usize = labels.iter().map(|y| y.len()).sum();
        let norm = T::lit(steps.max(1) as f64);
        let w = weights.map(T::lit);
        let parts: Vec<(T, Vec<T>)> =
            inputs.par_iter().zip(labels.par_iter()).map(|(x, y)| self.loss_grad(x, y, &w, norm)).collect();
        let mut grad = vec![T::zero(); self.param_count()];
        let mut loss = T::zero();
        for (l, g) in parts {
            loss += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        Ok((loss, grad))
    }
}

/// Trains on continuous predicates against ternary labels with class
/// weighting and the same Adam defaults as the ternary cell.
pub fn train_elman<T: Scalar>(
    inputs: &[Matrix<T>],
    labels: &[Vec<Trit>],
    hidden: usize,
    cfg: &ElmanConfig,
) -> Result<ElmanBaseline<T>> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::Shape("training needs paired, non-empty inputs and labels".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Config("epochs and batch size must be positive".into()));
    }
    let mut model = ElmanBaseline::new(inputs[0].rows(), hidden, cfg.seed);
    let weights = class_weights(labels);
    let mut opt = Adam::new(AdamConfig { learning_rate: cfg.learning_rate, ..Default::default() }, model.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&Matrix<T>> = batch.iter().map(|&i| &inputs[i]).collect();
            let ys: Vec<&[Trit]> = batch.iter().map(|&i| labels[i].as_slice()).collect();
            let (loss, grad) = model.objective(&xs, &ys, weights)?;
            total += loss.to_f64_lossy();
            opt.step(&mut model.params, &grad);
        }
        log::debug!("rnn epoch {epoch}: loss {total:.4}");
    }
    Ok(model)
}

pub fn eval_elman<T: Scalar>(model: &ElmanBaseline<T>, inputs: &[Matrix<T>]) -> Result<Vec<Vec<Trit>>> {
    inputs.par_iter().map(|x| model.verdicts(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..3 {
            let model: ElmanBaseline<f64> = ElmanBaseline::new(3, 4, seed);
            let x = Matrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
            let y = vec![Trit::Pos, Trit::Zero];
            let w = [1.0, 2.0, 0.5];
            let (_, g) = model.objective(&[&x], &[&y], w).unwrap();
            let h = 1e-6;
            for i in 0..model.param_count() {
                let mut a = model.clone();
                a.params[i] += h;
                let mut b = model.clone();
                b.params[i] -= h;
                let fd = (a.objective(&[&x], &[&y], w).unwrap().0 - b.objective(&[&x], &[&y], w).unwrap().0) / (2.0 * h);
                let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
                assert!(rel < 1e-4 || (fd - g[i]).abs() < 1e-9, "param {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn learns_constant_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<Matrix<f64>> = (0..8).map(|_| Matrix::from_fn(2, 5, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let ys = vec![vec![Trit::Neg; 5]; 8];
        let cfg = ElmanConfig { epochs: 200, batch_size: 8, learning_rate: 0.01, seed: 1 };
        let model = train_elman(&xs, &ys, 3, &cfg).unwrap();
        let v = eval_elman(&model, &xs).unwrap();
        assert!(v.iter().flatten().all(|t| *t == Trit::Neg));
    }

    #[test]
    fn f32_forward_runs() {
        let model: ElmanBaseline<f32> = ElmanBaseline::new(2, 2, 0);
        let v = model.verdicts(&Matrix::filled(2, 3, 0.5f32)).unwrap();
        assert_eq!(v.len(), 3);
    }
}
