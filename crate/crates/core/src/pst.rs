//! Polynomial surrogate neurons.
//!
//! A neuron is the degree-(2,2) polynomial `p_w(a, b) = wᵀ m(a, b)` over the
//! monomial basis `[1, a, b, ab, a², b², a²b, ab², a²b²]`. Evaluating the
//! basis at the nine grid points of `T²` (in gate table order) gives the
//! Vandermonde matrix `V`, so a truth table `t` and coefficients `w` are
//! related by `t = V w`. The inverse is computed once in exact rational
//! arithmetic; all its entries are multiples of 1/4.

use std::sync::OnceLock;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::ternary::{entry_inputs, GateTable, Trit};
use crate::Exact;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs<T>(pub [T; 9]);

impl<T: Scalar> Default for PolyCoeffs<T> {
    fn default() -> Self {
        Self([T::zero(); 9])
    }
}

/// Monomial basis at `(a, b)`.
#[inline]
pub fn monomials<T: Scalar>(a: T, b: T) -> [T; 9] {
    let (a2, b2) = (a * a, b * b);
    [T::one(), a, b, a * b, a2, b2, a2 * b, a * b2, a2 * b2]
}

#[inline]
pub fn eval_poly<T: Scalar>(w: &PolyCoeffs<T>, a: T, b: T) -> T {
    let m = monomials(a, b);
    let w = &w.0;
    w[0] * m[0] + w[1] * m[1] + w[2] * m[2] + w[3] * m[3] + w[4] * m[4]
        + w[5] * m[5] + w[6] * m[6] + w[7] * m[7] + w[8] * m[8]
}

/// Partial derivatives `(∂p/∂a, ∂p/∂b)`.
#[inline]
pub fn poly_input_grad<T: Scalar>(w: &PolyCoeffs<T>, a: T, b: T) -> (T, T) {
    let w = &w.0;
    let two = T::lit(2.0);
    let da = w[1] + w[3] * b + two * w[4] * a + two * w[6] * a * b + w[7] * b * b
        + two * w[8] * a * b * b;
    let db = w[2] + w[3] * a + two * w[5] * b + w[6] * a * a + two * w[7] * a * b
        + two * w[8] * a * a * b;
    (da, db)
}

/// `max(-1, min(1, x))`.
#[inline]
pub fn clip<T: Scalar>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}

/// Subgradient of [`clip`]: 1 on the closed interval `[-1, 1]`, else 0.
#[inline]
pub fn clip_grad<T: Scalar>(x: T) -> T {
    if x >= -T::one() && x <= T::one() {
        T::one()
    } else {
        T::zero()
    }
}

/// Exact `V` and `V⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct VandermondeMatrix {
    pub v: [[Exact; 9]; 9],
    pub v_inv: [[Exact; 9]; 9],
}

fn exact_v() -> [[Exact; 9]; 9] {
    let mut v = [[Exact::zero(); 9]; 9];
    for (i, row) in v.iter_mut().enumerate() {
        let (a, b) = entry_inputs(i);
        let m = monomials(a.as_f64(), b.as_f64());
        for (dst, x) in row.iter_mut().zip(m) {
            *dst = Exact::from_integer(x as i64);
        }
    }
    v
}

fn gauss_jordan_inverse(m: &[[Exact; 9]; 9]) -> Option<[[Exact; 9]; 9]> {
    let mut a = *m;
    let mut inv = [[Exact::zero(); 9]; 9];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Exact::one();
    }
    for col in 0..9 {
        let pivot = (col..9).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..9 {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..9 {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for j in 0..9 {
                    let (ac, ic) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    Some(inv)
}

pub fn vandermonde() -> &'static VandermondeMatrix {
    static VM: OnceLock<VandermondeMatrix> = OnceLock::new();
    VM.get_or_init(|| {
        let v = exact_v();
        let v_inv = gauss_jordan_inverse(&v).expect("grid Vandermonde matrix is invertible");
        VandermondeMatrix { v, v_inv }
    })
}

/// `V` as small integers.
fn v_int() -> &'static [[i8; 9]; 9] {
    static V: OnceLock<[[i8; 9]; 9]> = OnceLock::new();
    V.get_or_init(|| {
        let mut out = [[0i8; 9]; 9];
        for (i, row) in vandermonde().v.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                out[i][j] = x.to_integer() as i8;
            }
        }
        out
    })
}

/// `V⁻¹` scaled by 4, as integers.
pub fn v_inv_quarters() -> &'static [[i8; 9]; 9] {
    static Q: OnceLock<[[i8; 9]; 9]> = OnceLock::new();
    Q.get_or_init(|| {
        let mut out = [[0i8; 9]; 9];
        for (i, row) in vandermonde().v_inv.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let q = *x * Exact::from_integer(4);
                assert!(q.is_integer(), "V⁻¹ entry {x} is not a multiple of 1/4");
                out[i][j] = q.to_integer() as i8;
            }
        }
        out
    })
}

/// Soft truth table `V w`.
pub fn table_values<T: Scalar>(w: &PolyCoeffs<T>) -> [T; 9] {
    let v = v_int();
    let mut t = [T::zero(); 9];
    for (ti, row) in t.iter_mut().zip(v.iter()) {
        *ti = row
            .iter()
            .zip(w.0.iter())
            .filter(|(vij, _)| **vij != 0)
            .map(|(vij, wj)| T::lit(f64::from(*vij)) * *wj)
            .sum();
    }
    t
}

/// `Vᵀ x`.
fn v_transpose_mul<T: Scalar>(x: &[T; 9]) -> [T; 9] {
    let v = v_int();
    let mut out = [T::zero(); 9];
    for (i, row) in v.iter().enumerate() {
        for (j, vij) in row.iter().enumerate() {
            if *vij != 0 {
                out[j] += T::lit(f64::from(*vij)) * x[i];
            }
        }
    }
    out
}

/// `V⁻¹ t` for real values on the grid.
pub fn coeffs_from_values<T: Scalar>(t: &[T; 9]) -> PolyCoeffs<T> {
    let q = v_inv_quarters();
    let quarter = T::lit(0.25);
    let mut w = [T::zero(); 9];
    for (wi, row) in w.iter_mut().zip(q.iter()) {
        let s: T = row.iter().zip(t.iter()).map(|(qij, tj)| T::lit(f64::from(*qij)) * *tj).sum();
        *wi = s * quarter;
    }
    PolyCoeffs(w)
}

/// Interpolating coefficients of a gate. Exact for both `f32` and `f64`.
pub fn coeffs_from_table<T: Scalar>(g: &GateTable) -> PolyCoeffs<T> {
    let exact = coeffs_from_table_exact(g);
    let mut w = [T::zero(); 9];
    for (dst, x) in w.iter_mut().zip(exact) {
        *dst = T::lit(*x.numer() as f64 / *x.denom() as f64);
    }
    PolyCoeffs(w)
}

pub fn coeffs_from_table_exact(g: &GateTable) -> [Exact; 9] {
    let vm = vandermonde();
    let mut w = [Exact::zero(); 9];
    for (wi, row) in w.iter_mut().zip(vm.v_inv.iter()) {
        for (x, e) in row.iter().zip(g.entries()) {
            *wi += *x * Exact::from_integer(i64::from(e.value()));
        }
    }
    w
}

/// Nearest trit; `|x| <= 0.5` rounds to unknown.
pub fn round_trit<T: Scalar>(x: T) -> Trit {
    let half = T::lit(0.5);
    if x > half {
        Trit::Pos
    } else if x < -half {
        Trit::Neg
    } else {
        Trit::Zero
    }
}

/// Rounds the soft truth table of `w`.
pub fn round_table<T: Scalar>(w: &PolyCoeffs<T>) -> GateTable {
    let t = table_values(w);
    let mut entries = [Trit::Zero; 9];
    for (e, x) in entries.iter_mut().zip(t) {
        *e = round_trit(x);
    }
    GateTable(entries)
}

/// Squared distance of the soft truth table to its rounding, and its
/// gradient with the rounding held fixed.
pub fn commitment_penalty<T: Scalar>(w: &PolyCoeffs<T>) -> (T, [T; 9]) {
    let t = table_values(w);
    let mut resid = [T::zero(); 9];
    for (r, x) in resid.iter_mut().zip(t) {
        *r = x - T::lit(round_trit(x).as_f64());
    }
    penalty_from_residual(&resid)
}

/// Squared distance of the soft truth table to the closest of `targets`
/// (ties to the earliest), with gradient.
pub fn nearest_table_penalty<T: Scalar>(w: &PolyCoeffs<T>, targets: &[GateTable]) -> (T, [T; 9]) {
    let t = table_values(w);
    let mut best: Option<(T, [T; 9])> = None;
    for g in targets {
        let mut resid = [T::zero(); 9];
        for ((r, x), e) in resid.iter_mut().zip(t).zip(g.entries()) {
            *r = x - T::lit(e.as_f64());
        }
        let d: T = resid.iter().map(|r| *r * *r).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, resid));
        }
    }
    match best {
        Some((_, resid)) => penalty_from_residual(&resid),
        None => (T::zero(), [T::zero(); 9]),
    }
}

fn penalty_from_residual<T: Scalar>(resid: &[T; 9]) -> (T, [T; 9]) {
    let value = resid.iter().map(|r| *r * *r).sum();
    let mut g = v_transpose_mul(resid);
    for gi in g.iter_mut() {
        *gi *= T::lit(2.0);
    }
    (value, g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AnnealShape {
    #[default]
    Linear,
}

/// Commitment weight schedule: zero during warmup, then a linear ramp
/// reaching `lambda_max` at `total_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub lambda_max: f64,
    pub total_steps: usize,
    #[serde(default)]
    pub shape: AnnealShape,
    #[serde(default)]
    pub warmup_fraction: f64,
}

impl AnnealSchedule {
    pub fn linear(lambda_max: f64, total_steps: usize) -> Self {
        Self { lambda_max, total_steps, shape: AnnealShape::Linear, warmup_fraction: 0.0 }
    }

    pub fn with_warmup(mut self, fraction: f64) -> Self {
        self.warmup_fraction = fraction;
        self
    }
}

pub fn anneal_lambda(sched: &AnnealSchedule, step: usize) -> Result<f64> {
    if step > sched.total_steps {
        return Err(Error::StepOutOfRange { step, total: sched.total_steps });
    }
    if sched.total_steps == 0 {
        return Ok(sched.lambda_max);
    }
    let total = sched.total_steps as f64;
    let warm = (sched.warmup_fraction.clamp(0.0, 1.0) * total).floor();
    let s = step as f64;
    if s <= warm || warm >= total {
        return Ok(if step == sched.total_steps { sched.lambda_max } else { 0.0 });
    }
    Ok(sched.lambda_max * (s - warm) / (total - warm))
}
