//! Bounded signal temporal logic: syntax, parsing, quantitative semantics
//! over three value domains, label pipelines, and the realizability bounds.

mod bounds;
mod formula;
mod labels;
mod parse;
mod semantics;

pub use bounds::{depth_bound, horizon, max_interval_width, state_complexity, temporal_depth};
pub use formula::{Formula, Interval};
pub use labels::{
    causal_verdict, causal_verdicts, ctq_threshold, make_labels, quantize, quantize_signal,
    LabelConfig, Pipeline,
};
pub use parse::parse_formula;
pub use semantics::{
    eval_trace, robustness_causal, robustness_oracle, robustness_qtc, robustness_trace,
    qtc_trace, RobustDomain, RobustnessInterval, R_BOUND,
};
