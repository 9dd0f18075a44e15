//! Structural measures of a formula: future reach, state complexity, and
//! the per-timestep depth bound.

use super::formula::Formula;

/// How far past `t` the value at `t` can look.
pub fn horizon(phi: &Formula) -> usize {
    match phi {
        Formula::Predicate(_) => 0,
        Formula::Not(c) => horizon(c),
        Formula::And(l, r) | Formula::Or(l, r) => horizon(l).max(horizon(r)),
        Formula::Always(i, c) | Formula::Eventually(i, c) => i.hi() + horizon(c),
        Formula::Until(i, l, r) => i.hi() + horizon(l).max(horizon(r)),
    }
}

/// Minimum hidden-state trit count: one shift register of the interval
/// width per unary temporal operator, two per Until, summed over the tree.
pub fn state_complexity(phi: &Formula) -> usize {
    match phi {
        Formula::Predicate(_) => 0,
        Formula::Not(c) => state_complexity(c),
        Formula::And(l, r) | Formula::Or(l, r) => state_complexity(l) + state_complexity(r),
        Formula::Always(i, c) | Formula::Eventually(i, c) => i.width() + state_complexity(c),
        Formula::Until(i, l, r) => 2 * i.width() + state_complexity(l) + state_complexity(r),
    }
}

/// Temporal operators on the deepest root-to-leaf path.
pub fn temporal_depth(phi: &Formula) -> usize {
    match phi {
        Formula::Predicate(_) => 0,
        Formula::Not(c) => temporal_depth(c),
        Formula::And(l, r) | Formula::Or(l, r) => temporal_depth(l).max(temporal_depth(r)),
        Formula::Always(_, c) | Formula::Eventually(_, c) => 1 + temporal_depth(c),
        Formula::Until(_, l, r) => 1 + temporal_depth(l).max(temporal_depth(r)),
    }
}

/// Widest temporal interval, 0 when there is none.
pub fn max_interval_width(phi: &Formula) -> usize {
    match phi {
        Formula::Predicate(_) => 0,
        Formula::Not(c) => max_interval_width(c),
        Formula::And(l, r) | Formula::Or(l, r) => max_interval_width(l).max(max_interval_width(r)),
        Formula::Always(i, c) | Formula::Eventually(i, c) => i.width().max(max_interval_width(c)),
        Formula::Until(i, l, r) => {
            i.width().max(max_interval_width(l)).max(max_interval_width(r))
        }
    }
}

fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

/// `d · ⌈log₂ k_max⌉`.
pub fn depth_bound(phi: &Formula) -> usize {
    temporal_depth(phi) * ceil_log2(max_interval_width(phi))
}
