//! Ternary label pipelines and the causal baseline verdicts.

use serde::{Deserialize, Serialize};

use super::formula::Formula;
use super::semantics::{eval_trace, qtc_trace, robustness_trace, RobustnessInterval};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::ternary::Trit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Robustness from continuous predicates, then thresholded.
    Ctq,
    /// Predicates quantized first, then evaluated over trits.
    Qtc,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Ctq => "ctq",
            Pipeline::Qtc => "qtc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub pipeline: Pipeline,
    pub dead_band: f64,
}

impl LabelConfig {
    pub fn new(pipeline: Pipeline, dead_band: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&dead_band) {
            return Err(Error::Config(format!("dead band {dead_band} outside [0, 1)")));
        }
        Ok(Self { pipeline, dead_band })
    }
}

/// Sign-preserving quantization; `|x| = δ` maps to unknown.
pub fn quantize<T: Scalar>(x: T, delta: T) -> Trit {
    if x > delta {
        Trit::Pos
    } else if x < -delta {
        Trit::Neg
    } else {
        Trit::Zero
    }
}

pub fn quantize_signal<T: Scalar>(signals: &Matrix<T>, delta: T) -> Matrix<Trit> {
    signals.map(|&x| quantize(x, delta))
}

/// Thresholds a robustness value at `±δ`.
pub fn ctq_threshold<T: Scalar>(rho: T, delta: T) -> Trit {
    quantize(rho, delta)
}

pub fn make_labels<T: Scalar>(phi: &Formula, signals: &Matrix<T>, cfg: &LabelConfig) -> Result<Vec<Trit>> {
    let delta = T::lit(cfg.dead_band);
    match cfg.pipeline {
        Pipeline::Ctq => Ok(robustness_trace(phi, signals)?
            .into_iter()
            .map(|r| ctq_threshold(r, delta))
            .collect()),
        Pipeline::Qtc => qtc_trace(phi, &quantize_signal(signals, delta)),
    }
}

/// `+1` if the enclosure lies above `δ`, `-1` if below `-δ`, else unknown.
pub fn causal_verdict<T: Scalar>(r: RobustnessInterval<T>, delta: T) -> Trit {
    if r.lo > delta {
        Trit::Pos
    } else if r.hi < -delta {
        Trit::Neg
    } else {
        Trit::Zero
    }
}

/// Verdicts of the causal baseline at every timestep of a trajectory of
/// known length, each computed from the prefix observed so far.
pub fn causal_verdicts<T: Scalar>(phi: &Formula, signals: &Matrix<T>, delta: T) -> Result<Vec<Trit>> {
    if phi.predicate_count() > signals.rows() {
        return Err(Error::Shape("formula uses more predicates than provided".into()));
    }
    let len = signals.cols();
    Ok((0..len)
        .map(|t| {
            let leaf = |i: usize, tau: usize| {
                if tau <= t {
                    RobustnessInterval::point(*signals.get(i, tau))
                } else {
                    RobustnessInterval::unknown()
                }
            };
            causal_verdict(eval_trace(phi, len, &leaf)[t], delta)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_formula;

    #[test]
    fn quantize_boundaries() {
        assert_eq!(quantize(0.5, 0.2), Trit::Pos);
        assert_eq!(quantize(0.1, 0.2), Trit::Zero);
        assert_eq!(quantize(-0.2, 0.2), Trit::Zero);
        assert_eq!(quantize(-0.21, 0.2), Trit::Neg);
    }

    #[test]
    fn ctq_thresholding() {
        let got: Vec<_> = [0.5, -0.01, -0.4].iter().map(|&r| ctq_threshold(r, 0.2)).collect();
        assert_eq!(got, vec![Trit::Pos, Trit::Zero, Trit::Neg]);
    }

    #[test]
    fn qtc_all_positive_window() {
        let s = Matrix::from_rows(vec![vec![0.9, 0.8, 0.7]]).unwrap();
        let f = parse_formula("G[0,2] p0").unwrap();
        let cfg = LabelConfig::new(Pipeline::Qtc, 0.2).unwrap();
        assert_eq!(make_labels(&f, &s, &cfg).unwrap()[0], Trit::Pos);
    }

    #[test]
    fn ctq_labels_follow_robustness() {
        let s = Matrix::from_rows(vec![vec![0.5, -0.01, -0.4]]).unwrap();
        let cfg = LabelConfig::new(Pipeline::Ctq, 0.2).unwrap();
        let got = make_labels(&parse_formula("p0").unwrap(), &s, &cfg).unwrap();
        assert_eq!(got, vec![Trit::Pos, Trit::Zero, Trit::Neg]);
    }

    #[test]
    fn dead_band_must_be_below_one() {
        assert!(LabelConfig::new(Pipeline::Ctq, 1.0).is_err());
        assert!(LabelConfig::new(Pipeline::Ctq, -0.1).is_err());
    }

    #[test]
    fn causal_settles_violation_early() {
        let s = Matrix::from_rows(vec![vec![0.6, -0.3, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9]]).unwrap();
        let f = parse_formula("G[0,5] p0").unwrap();
        let v = causal_verdicts(&f, &s, 0.2).unwrap();
        assert_eq!(v[0], Trit::Zero);
        assert_eq!(v[1], Trit::Neg);
        // Horizon clamped at the end of the trace: fully determined.
        assert_eq!(v[7], Trit::Pos);
    }
}
