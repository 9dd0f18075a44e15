//! The ternary domain `{-1, 0, +1}`, its numerical and information orders,
//! and the library of all 19,683 two-input gates.
//!
//! Truth tables are stored row-major with the first input outer and the
//! second inner, both iterated in the order `-1, 0, +1`: entry
//! `3 * ord(a) + ord(b)` with `ord(-1) = 0`, `ord(0) = 1`, `ord(+1) = 2`.
//! A table's [`GateId`] is its base-3 encoding with entry `i` as digit `i`
//! (least significant first) using the same digit map.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A ternary value. `Zero` is "unknown", the bottom of the information order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(i8)]
pub enum Trit {
    Neg = -1,
    #[default]
    Zero = 0,
    Pos = 1,
}

pub const ALL_TRITS: [Trit; 3] = [Trit::Neg, Trit::Zero, Trit::Pos];

impl Trit {
    pub const BOTTOM: Trit = Trit::Zero;

    /// Position in `-1, 0, +1` order (0, 1, 2). Also the base-3 digit.
    #[inline]
    pub const fn ord(self) -> usize {
        (self as i8 + 1) as usize
    }

    #[inline]
    pub const fn from_ord(o: usize) -> Trit {
        match o {
            0 => Trit::Neg,
            1 => Trit::Zero,
            _ => Trit::Pos,
        }
    }

    pub fn from_i8(v: i8) -> Option<Trit> {
        match v {
            -1 => Some(Trit::Neg),
            0 => Some(Trit::Zero),
            1 => Some(Trit::Pos),
            _ => None,
        }
    }

    /// Sign of a real number; zero maps to `Zero`.
    pub fn sign_of(x: f64) -> Trit {
        if x > 0.0 {
            Trit::Pos
        } else if x < 0.0 {
            Trit::Neg
        } else {
            Trit::Zero
        }
    }

    #[inline]
    pub const fn value(self) -> i8 {
        self as i8
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self as i8)
    }

    pub fn is_known(self) -> bool {
        self != Trit::Zero
    }

    /// Kleene negation.
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Trit {
        Trit::from_ord(2 - self.ord())
    }

    /// Kleene conjunction: numerical minimum.
    pub fn and(self, other: Trit) -> Trit {
        self.min(other)
    }

    /// Kleene disjunction: numerical maximum.
    pub fn or(self, other: Trit) -> Trit {
        self.max(other)
    }
}

impl fmt::Display for Trit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for Trit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Trit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Trit::from_i8(v).ok_or_else(|| serde::de::Error::custom(format!("not a trit: {v}")))
    }
}

/// `a <= b` under `-1 <= 0 <= +1`.
pub fn leq_numerical(a: Trit, b: Trit) -> bool {
    a.value() <= b.value()
}

/// `a ⊑ b`: unknown is below both determined values, which are incomparable.
pub fn leq_information(a: Trit, b: Trit) -> bool {
    a == Trit::Zero || a == b
}

/// Componentwise information order on vectors of equal length.
pub fn leq_information_vec(a: &[Trit], b: &[Trit]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| leq_information(x, y))
}

/// Number of distinct two-input ternary gates, `3^9`.
pub const GATE_COUNT: usize = 19_683;

/// Nine-entry truth table of a gate `T x T -> T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GateTable(pub [Trit; 9]);

/// Canonical base-3 index of a [`GateTable`], in `[0, 19683)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateId(u16);

impl GateId {
    pub fn new(id: usize) -> Option<GateId> {
        (id < GATE_COUNT).then_some(GateId(id as u16))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn table(self) -> GateTable {
        GateTable::from_id(self)
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[inline]
pub const fn entry_index(a: Trit, b: Trit) -> usize {
    3 * a.ord() + b.ord()
}

/// Input pair at table entry `i`.
#[inline]
pub const fn entry_inputs(i: usize) -> (Trit, Trit) {
    (Trit::from_ord(i / 3), Trit::from_ord(i % 3))
}

impl GateTable {
    pub fn from_fn(f: impl Fn(Trit, Trit) -> Trit) -> GateTable {
        let mut entries = [Trit::Zero; 9];
        for (i, e) in entries.iter_mut().enumerate() {
            let (a, b) = entry_inputs(i);
            *e = f(a, b);
        }
        GateTable(entries)
    }

    pub fn constant(c: Trit) -> GateTable {
        GateTable([c; 9])
    }

    pub fn from_id(id: GateId) -> GateTable {
        let mut rest = id.index();
        let mut entries = [Trit::Zero; 9];
        for e in entries.iter_mut() {
            *e = Trit::from_ord(rest % 3);
            rest /= 3;
        }
        GateTable(entries)
    }

    pub fn id(&self) -> GateId {
        let id = self.0.iter().rev().fold(0usize, |acc, t| acc * 3 + t.ord());
        GateId(id as u16)
    }

    #[inline]
    pub fn apply(&self, a: Trit, b: Trit) -> Trit {
        self.0[entry_index(a, b)]
    }

    pub fn entries(&self) -> &[Trit; 9] {
        &self.0
    }
}

impl From<GateId> for GateTable {
    fn from(id: GateId) -> Self {
        GateTable::from_id(id)
    }
}

pub fn apply_gate(g: &GateTable, a: Trit, b: Trit) -> Trit {
    g.apply(a, b)
}

/// Named gates. Each is defined by its truth table.
pub mod gates {
    use super::{GateTable, Trit};

    pub fn kleene_and() -> GateTable {
        GateTable::from_fn(Trit::and)
    }

    pub fn kleene_or() -> GateTable {
        GateTable::from_fn(Trit::or)
    }

    /// Negation of the first input, `g(a, b) = ¬a`.
    pub fn kleene_not() -> GateTable {
        GateTable::from_fn(|a, _| a.not())
    }

    pub fn kleene_nand() -> GateTable {
        GateTable::from_fn(|a, b| a.and(b).not())
    }

    pub fn kleene_nor() -> GateTable {
        GateTable::from_fn(|a, b| a.or(b).not())
    }

    /// `¬a ∨ b`.
    pub fn kleene_implies() -> GateTable {
        GateTable::from_fn(|a, b| a.not().or(b))
    }

    /// Kleene XOR: `(a ∧ ¬b) ∨ (¬a ∧ b)`.
    pub fn kleene_xor() -> GateTable {
        GateTable::from_fn(|a, b| a.and(b.not()).or(a.not().and(b)))
    }

    /// First projection, `g(a, b) = a`.
    pub fn proj_first() -> GateTable {
        GateTable::from_fn(|a, _| a)
    }

    /// Second projection, `g(a, b) = b`.
    pub fn proj_second() -> GateTable {
        GateTable::from_fn(|_, b| b)
    }

    pub fn const_neg() -> GateTable {
        GateTable::constant(Trit::Neg)
    }

    pub fn const_zero() -> GateTable {
        GateTable::constant(Trit::Zero)
    }

    pub fn const_pos() -> GateTable {
        GateTable::constant(Trit::Pos)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateClass {
    pub is_nm: bool,
    pub is_im: bool,
    pub is_constant: bool,
}

fn is_monotone(g: &GateTable, leq: fn(Trit, Trit) -> bool) -> bool {
    for i in 0..9 {
        let (a, b) = entry_inputs(i);
        for j in 0..9 {
            let (a2, b2) = entry_inputs(j);
            if leq(a, a2) && leq(b, b2) && !leq(g.0[i], g.0[j]) {
                return false;
            }
        }
    }
    true
}

/// Exhaustive monotonicity check under both orders.
pub fn classify_gate(g: &GateTable) -> GateClass {
    GateClass {
        is_nm: is_monotone(g, leq_numerical),
        is_im: is_monotone(g, leq_information),
        is_constant: g.0.iter().all(|&e| e == g.0[0]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VocabularyTag {
    Full,
    Nm,
    Im,
    NmAndIm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VocabularyKind {
    pub tag: VocabularyTag,
    pub exclude_constants: bool,
}

impl VocabularyKind {
    pub const fn new(tag: VocabularyTag, exclude_constants: bool) -> Self {
        Self { tag, exclude_constants }
    }

    pub fn admits(&self, class: GateClass) -> bool {
        if self.exclude_constants && class.is_constant {
            return false;
        }
        match self.tag {
            VocabularyTag::Full => true,
            VocabularyTag::Nm => class.is_nm,
            VocabularyTag::Im => class.is_im,
            VocabularyTag::NmAndIm => class.is_nm && class.is_im,
        }
    }

    pub fn contains(&self, id: GateId) -> bool {
        self.admits(class_of(id))
    }
}

fn class_table() -> &'static [GateClass] {
    static TABLE: OnceLock<Vec<GateClass>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..GATE_COUNT)
            .map(|i| classify_gate(&GateTable::from_id(GateId(i as u16))))
            .collect()
    })
}

/// Cached classification of a gate id.
pub fn class_of(id: GateId) -> GateClass {
    class_table()[id.index()]
}

/// All gate ids in the vocabulary, ascending.
pub fn enumerate_vocabulary(kind: VocabularyKind) -> Vec<GateId> {
    class_table()
        .iter()
        .enumerate()
        .filter(|(_, c)| kind.admits(**c))
        .map(|(i, _)| GateId(i as u16))
        .collect()
}

pub fn hamming_distance(g1: &GateTable, g2: &GateTable) -> usize {
    g1.0.iter().zip(g2.0.iter()).filter(|(x, y)| x != y).count()
}
