//! Quantitative semantics, evaluated once over any value domain with a
//! negation, a meet and a join: real robustness (oracle), robustness
//! intervals (causal prefix evaluation), and trits (ternary evaluation).
//!
//! Until uses the closed-prefix form
//! `max_{τ ∈ [t+a, t+b]} min(ρ(ψ, τ), min_{s ∈ [t, τ]} ρ(φ, s))`.
//! Windows are clamped to the trace; a window starting past the end
//! collapses to the last sample.

use serde::{Deserialize, Serialize};

use super::bounds::horizon;
use super::formula::Formula;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::ternary::Trit;

/// Magnitude bound of normalized predicates; stands in for unobserved
/// samples in causal evaluation.
pub const R_BOUND: f64 = 1.0;

pub trait RobustDomain: Copy {
    fn neg(self) -> Self;
    fn meet(self, other: Self) -> Self;
    fn join(self, other: Self) -> Self;
}

impl<T: Scalar> RobustDomain for T {
    fn neg(self) -> Self {
        -self
    }
    fn meet(self, other: Self) -> Self {
        self.min(other)
    }
    fn join(self, other: Self) -> Self {
        self.max(other)
    }
}

impl RobustDomain for Trit {
    fn neg(self) -> Self {
        self.not()
    }
    fn meet(self, other: Self) -> Self {
        self.and(other)
    }
    fn join(self, other: Self) -> Self {
        self.or(other)
    }
}

/// Enclosure `[lo, hi]` of the robustness over all admissible completions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessInterval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> RobustnessInterval<T> {
    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn unknown() -> Self {
        Self { lo: T::lit(-R_BOUND), hi: T::lit(R_BOUND) }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }
}

impl<T: Scalar> RobustDomain for RobustnessInterval<T> {
    fn neg(self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }
    fn meet(self, o: Self) -> Self {
        Self { lo: self.lo.min(o.lo), hi: self.hi.min(o.hi) }
    }
    fn join(self, o: Self) -> Self {
        Self { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }
}

fn fold_window<V: RobustDomain>(xs: &[V], lo: usize, hi: usize, f: fn(V, V) -> V) -> V {
    xs[lo + 1..=hi].iter().fold(xs[lo], |acc, &x| f(acc, x))
}

/// Values of `phi` at every `t` in `0..len`, with `leaf(i, τ)` supplying
/// predicate `i` at time `τ`.
pub fn eval_trace<V: RobustDomain>(
    phi: &Formula,
    len: usize,
    leaf: &dyn Fn(usize, usize) -> V,
) -> Vec<V> {
    if len == 0 {
        return Vec::new();
    }
    match phi {
        Formula::Predicate(i) => (0..len).map(|t| leaf(*i, t)).collect(),
        Formula::Not(c) => eval_trace(c, len, leaf).into_iter().map(V::neg).collect(),
        Formula::And(l, r) | Formula::Or(l, r) => {
            let op: fn(V, V) -> V = if matches!(phi, Formula::And(..)) { V::meet } else { V::join };
            let (l, r) = (eval_trace(l, len, leaf), eval_trace(r, len, leaf));
            l.into_iter().zip(r).map(|(x, y)| op(x, y)).collect()
        }
        Formula::Always(iv, c) | Formula::Eventually(iv, c) => {
            let op: fn(V, V) -> V =
                if matches!(phi, Formula::Always(..)) { V::meet } else { V::join };
            let xs = eval_trace(c, len, leaf);
            (0..len)
                .map(|t| {
                    let (lo, hi) = iv.window(t, len);
                    fold_window(&xs, lo, hi, op)
                })
                .collect()
        }
        Formula::Until(iv, l, r) => {
            let (ls, rs) = (eval_trace(l, len, leaf), eval_trace(r, len, leaf));
            (0..len)
                .map(|t| {
                    let (lo, hi) = iv.window(t, len);
                    let mut prefix = fold_window(&ls, t, lo, V::meet);
                    let mut best = rs[lo].meet(prefix);
                    for tau in lo + 1..=hi {
                        prefix = prefix.meet(ls[tau]);
                        best = best.join(rs[tau].meet(prefix));
                    }
                    best
                })
                .collect()
        }
    }
}

fn check_predicates<V>(phi: &Formula, signals: &Matrix<V>) -> Result<()> {
    if phi.predicate_count() > signals.rows() {
        return Err(Error::Shape(format!(
            "formula uses {} predicates, signals have {}",
            phi.predicate_count(),
            signals.rows()
        )));
    }
    Ok(())
}

fn check_time(t: usize, len: usize) -> Result<()> {
    if t >= len {
        return Err(Error::Shape(format!("time {t} outside trace of length {len}")));
    }
    Ok(())
}

/// Oracle robustness at every timestep of the full trace.
pub fn robustness_trace<T: Scalar>(phi: &Formula, signals: &Matrix<T>) -> Result<Vec<T>> {
    check_predicates(phi, signals)?;
    Ok(eval_trace(phi, signals.cols(), &|i, t| *signals.get(i, t)))
}

pub fn robustness_oracle<T: Scalar>(phi: &Formula, signals: &Matrix<T>, t: usize) -> Result<T> {
    check_time(t, signals.cols())?;
    Ok(robustness_trace(phi, signals)?[t])
}

/// Robustness enclosure at time `t` from the observed prefix `0..=t`.
///
/// `trace_len` is the full trajectory length when known (windows are then
/// clamped exactly as the oracle clamps them); `None` treats the trace as
/// unbounded. Unobserved samples contribute `[-R_BOUND, R_BOUND]`.
pub fn robustness_causal<T: Scalar>(
    phi: &Formula,
    prefix: &Matrix<T>,
    t: usize,
    trace_len: Option<usize>,
) -> Result<RobustnessInterval<T>> {
    check_predicates(phi, prefix)?;
    if prefix.cols() <= t {
        return Err(Error::Shape(format!("prefix has {} samples, need {}", prefix.cols(), t + 1)));
    }
    let len = match trace_len {
        Some(n) => {
            check_time(t, n)?;
            n
        }
        None => t + horizon(phi) + 1,
    };
    let leaf = |i: usize, tau: usize| {
        if tau <= t {
            RobustnessInterval::point(*prefix.get(i, tau))
        } else {
            RobustnessInterval::unknown()
        }
    };
    Ok(eval_trace(phi, len, &leaf)[t])
}

/// Ternary evaluation over quantized predicates at every timestep.
pub fn qtc_trace(phi: &Formula, trits: &Matrix<Trit>) -> Result<Vec<Trit>> {
    check_predicates(phi, trits)?;
    Ok(eval_trace(phi, trits.cols(), &|i, t| *trits.get(i, t)))
}

pub fn robustness_qtc(phi: &Formula, trits: &Matrix<Trit>, t: usize) -> Result<Trit> {
    check_time(t, trits.cols())?;
    Ok(qtc_trace(phi, trits)?[t])
}
