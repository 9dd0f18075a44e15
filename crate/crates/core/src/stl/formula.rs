use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discrete bounded interval `[a, b]`, `a <= b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    a: usize,
    b: usize,
}

impl Interval {
    pub fn new(a: usize, b: usize) -> Result<Interval> {
        if a > b {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn lo(&self) -> usize {
        self.a
    }

    pub fn hi(&self) -> usize {
        self.b
    }

    pub fn width(&self) -> usize {
        self.b - self.a + 1
    }

    /// Window `[t+a, t+b]` clamped to a trace of length `len`; a window
    /// starting past the end collapses to the last sample.
    pub fn window(&self, t: usize, len: usize) -> (usize, usize) {
        debug_assert!(len > 0);
        let last = len - 1;
        let lo = t + self.a;
        if lo > last {
            (last, last)
        } else {
            (lo, (t + self.b).min(last))
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Predicate(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn pred(i: usize) -> Formula {
        Formula::Predicate(i)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn always(i: Interval, f: Formula) -> Formula {
        Formula::Always(i, Box::new(f))
    }

    pub fn eventually(i: Interval, f: Formula) -> Formula {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn until(i: Interval, l: Formula, r: Formula) -> Formula {
        Formula::Until(i, Box::new(l), Box::new(r))
    }

    /// Largest predicate index plus one.
    pub fn predicate_count(&self) -> usize {
        match self {
            Formula::Predicate(i) => i + 1,
            Formula::Not(c) | Formula::Always(_, c) | Formula::Eventually(_, c) => {
                c.predicate_count()
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => {
                l.predicate_count().max(r.predicate_count())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Until(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(_) | Formula::Always(..) | Formula::Eventually(..) => 3,
            Formula::Predicate(_) => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let paren = self.precedence() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Formula::Predicate(i) => write!(f, "p{i}")?,
            Formula::Not(c) => {
                f.write_str("!")?;
                c.write_at(f, 3)?;
            }
            Formula::And(l, r) => {
                l.write_at(f, 2)?;
                f.write_str(" & ")?;
                r.write_at(f, 3)?;
            }
            Formula::Or(l, r) => {
                l.write_at(f, 1)?;
                f.write_str(" | ")?;
                r.write_at(f, 2)?;
            }
            Formula::Always(i, c) | Formula::Eventually(i, c) => {
                let op = if matches!(self, Formula::Always(..)) { "G" } else { "F" };
                write!(f, "{op}{i}")?;
                if c.precedence() >= 3 {
                    f.write_str(" ")?;
                }
                c.write_at(f, 3)?;
            }
            Formula::Until(i, l, r) => {
                l.write_at(f, 1)?;
                write!(f, " U{i} ")?;
                r.write_at(f, 0)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}
