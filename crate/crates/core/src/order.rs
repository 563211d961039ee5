//! Finite posets, the extended real line, and Galois connections.
//!
//! A monotone map `g` between complete posets has a left adjoint `f` exactly
//! when `g` preserves all meets, and then `f(y)` is the meet of
//! `{x : y <= g(x)}`. On the finite carriers used here that meet is an
//! explicit scan, so adjoints are computed rather than assumed, and the
//! adjunction `f(y) <= x  iff  y <= g(x)` can be replayed over any sample of
//! pairs as a law check.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// Tolerance used when comparing finite extended-real values that have been
/// through floating-point arithmetic.
pub const EXT_EQ_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OrderError {
    #[error("relation is not a lattice: {0}")]
    NotALattice(String),
    #[error("map is not monotone: {0}")]
    NotMonotone(String),
    #[error("map does not preserve meets: {0}")]
    NotMeetPreserving(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("element does not belong to the carrier: {0}")]
    BadElement(String),
}

/// The extended real line, a complete chain with endpoints `-inf` and `inf`.
///
/// `Finite` never holds a NaN: constructors panic on NaN input, which keeps
/// the total order honest and lets this type implement `Eq` and `Ord`.
#[derive(Clone, Copy, Debug)]
pub enum ExtendedReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtendedReal {
    /// Wraps a finite value. Panics on NaN or infinite input.
    pub fn finite(x: f64) -> Self {
        assert!(x.is_finite(), "ExtendedReal::finite given {x}");
        ExtendedReal::Finite(x)
    }

    /// Converts an `f64`, mapping IEEE infinities to the endpoints.
    /// Panics on NaN.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "ExtendedReal::from_f64 given NaN");
        if x == f64::INFINITY {
            ExtendedReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtendedReal::NegInf
        } else {
            ExtendedReal::Finite(x)
        }
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// Equality up to `tol` on the finite part; endpoints compare exactly.
    pub fn approx_eq(self, other: Self, tol: f64) -> bool {
        match (self, other) {
            (ExtendedReal::NegInf, ExtendedReal::NegInf) => true,
            (ExtendedReal::PosInf, ExtendedReal::PosInf) => true,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs() <= tol,
            _ => false,
        }
    }
}

impl PartialEq for ExtendedReal {
    fn eq(&self, other: &Self) -> bool {
        matches!(self.cmp(other), Ordering::Equal)
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtendedReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.partial_cmp(b).expect("NaN in ExtendedReal"),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInf => write!(f, "-inf"),
            ExtendedReal::PosInf => write!(f, "inf"),
            ExtendedReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::NegInf => s.serialize_str("-inf"),
            ExtendedReal::PosInf => s.serialize_str("inf"),
            ExtendedReal::Finite(x) => s.serialize_f64(*x),
        }
    }
}

struct ExtVisitor;

impl Visitor<'_> for ExtVisitor {
    type Value = ExtendedReal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number, \"-inf\", or \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtendedReal, E> {
        if v.is_nan() {
            return Err(E::custom("NaN is not an extended real"));
        }
        Ok(ExtendedReal::from_f64(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtendedReal, E> {
        Ok(ExtendedReal::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtendedReal, E> {
        Ok(ExtendedReal::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtendedReal, E> {
        match v {
            "-inf" => Ok(ExtendedReal::NegInf),
            "inf" | "+inf" => Ok(ExtendedReal::PosInf),
            other => Err(E::custom(format!("bad extended real {other:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ExtVisitor)
    }
}

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

fn bit(row: &[u64], j: usize) -> bool {
    row[j / WORD] >> (j % WORD) & 1 == 1
}

fn set_bit(row: &mut [u64], j: usize) {
    row[j / WORD] |= 1 << (j % WORD);
}

/// A finite lattice given by its full order relation.
///
/// All pairwise meets and joins are computed and tabulated at construction;
/// construction fails if any pair lacks one. Desk-scale sizes keep the scans
/// exact and cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteLattice {
    labels: Vec<String>,
    n: usize,
    words: usize,
    /// Row `i` holds the up-set of `i`: bit `j` set iff `i <= j`.
    up: Vec<u64>,
    /// Row `i` holds the down-set of `i`: bit `j` set iff `j <= i`.
    down: Vec<u64>,
    meet_table: Vec<u32>,
    join_table: Vec<u32>,
    top: usize,
    bottom: usize,
}

impl FiniteLattice {
    /// Builds a lattice from generating relation pairs `(a, b)` meaning
    /// `a <= b`. The reflexive-transitive closure is taken first; failures of
    /// antisymmetry or of any pairwise meet/join reject the input.
    pub fn new<S: Into<String>>(labels: Vec<S>, pairs: &[(usize, usize)]) -> Result<Self, OrderError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        if n == 0 {
            return Err(OrderError::NotALattice("empty carrier".into()));
        }
        let words = words_for(n);
        let mut up = vec![0u64; n * words];
        for i in 0..n {
            set_bit(&mut up[i * words..(i + 1) * words], i);
        }
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(OrderError::BadElement(format!("pair ({a}, {b}) out of range")));
            }
            set_bit(&mut up[a * words..(a + 1) * words], b);
        }
        // Warshall closure: if i <= k then everything above k is above i.
        for k in 0..n {
            for i in 0..n {
                if bit(&up[i * words..(i + 1) * words], k) {
                    for w in 0..words {
                        let row_k = up[k * words + w];
                        up[i * words + w] |= row_k;
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                if bit(&up[i * words..(i + 1) * words], j) && bit(&up[j * words..(j + 1) * words], i) {
                    return Err(OrderError::NotALattice(format!(
                        "antisymmetry fails between {:?} and {:?}",
                        labels[j], labels[i]
                    )));
                }
            }
        }
        Self::finish(labels, up)
    }

    /// A chain ordered by list position: `labels[0]` is the bottom.
    pub fn chain<S: Into<String>>(labels: Vec<S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        assert!(n >= 1, "chain needs at least one element");
        let words = words_for(n);
        let mut up = vec![0u64; n * words];
        for i in 0..n {
            for j in i..n {
                set_bit(&mut up[i * words..(i + 1) * words], j);
            }
        }
        Self::finish(labels, up).expect("chains are lattices")
    }

    /// The Boolean lattice of all subsets of the given atoms, ordered by
    /// inclusion. Element `m` is the subset with atom `i` present iff bit `i`
    /// of `m` is set.
    pub fn boolean(atoms: &[&str]) -> Self {
        let k = atoms.len();
        assert!(k <= 12, "boolean lattice limited to 12 atoms");
        let n = 1usize << k;
        let words = words_for(n);
        let mut labels = Vec::with_capacity(n);
        for m in 0..n {
            if m == 0 {
                labels.push("{}".to_string());
            } else {
                let names: Vec<&str> = (0..k).filter(|i| m >> i & 1 == 1).map(|i| atoms[i]).collect();
                labels.push(format!("{{{}}}", names.join(",")));
            }
        }
        let mut up = vec![0u64; n * words];
        for m in 0..n {
            for t in 0..n {
                if m & !t == 0 {
                    set_bit(&mut up[m * words..(m + 1) * words], t);
                }
            }
        }
        Self::finish(labels, up).expect("powersets are lattices")
    }

    fn finish(labels: Vec<String>, up: Vec<u64>) -> Result<Self, OrderError> {
        let n = labels.len();
        let words = words_for(n);
        let mut down = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if bit(&up[i * words..(i + 1) * words], j) {
                    set_bit(&mut down[j * words..(j + 1) * words], i);
                }
            }
        }
        let mut meet_table = vec![0u32; n * n];
        let mut join_table = vec![0u32; n * n];
        let mut scratch = vec![0u64; words];
        for a in 0..n {
            for b in a..n {
                let m = Self::extreme(&down, words, a, b, &mut scratch).ok_or_else(|| {
                    OrderError::NotALattice(format!("no meet for {:?} and {:?}", labels[a], labels[b]))
                })?;
                meet_table[a * n + b] = m as u32;
                meet_table[b * n + a] = m as u32;
                let j = Self::extreme(&up, words, a, b, &mut scratch).ok_or_else(|| {
                    OrderError::NotALattice(format!("no join for {:?} and {:?}", labels[a], labels[b]))
                })?;
                join_table[a * n + b] = j as u32;
                join_table[b * n + a] = j as u32;
            }
        }
        let mut top = 0;
        let mut bottom = 0;
        for i in 1..n {
            top = join_table[top * n + i] as usize;
            bottom = meet_table[bottom * n + i] as usize;
        }
        Ok(FiniteLattice {
            labels,
            n,
            words,
            up,
            down,
            meet_table,
            join_table,
            top,
            bottom,
        })
    }

    /// Greatest element of `rows[a] & rows[b]` when `rows` is the down-set
    /// table (dually: least upper bound with the up-set table).
    fn extreme(rows: &[u64], words: usize, a: usize, b: usize, buf: &mut [u64]) -> Option<usize> {
        for w in 0..words {
            buf[w] = rows[a * words + w] & rows[b * words + w];
        }
        let n = rows.len() / words;
        for c in 0..n {
            if !bit(buf, c) {
                continue;
            }
            let row = &rows[c * words..(c + 1) * words];
            if (0..words).all(|w| buf[w] & !row[w] == 0) {
                return Some(c);
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        bit(&self.up[a * self.words..(a + 1) * self.words], b)
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet_table[a * self.n + b] as usize
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join_table[a * self.n + b] as usize
    }

    /// Meet of a finite family; the empty family gives the top.
    pub fn meet_set(&self, xs: &[usize]) -> usize {
        xs.iter().fold(self.top, |acc, &x| self.meet(acc, x))
    }

    /// Join of a finite family; the empty family gives the bottom.
    pub fn join_set(&self, xs: &[usize]) -> usize {
        xs.iter().fold(self.bottom, |acc, &x| self.join(acc, x))
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }
}

/// An element of a [`Carrier`]: either an index into a finite lattice or an
/// extended real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PosetElem {
    Id(usize),
    Ext(ExtendedReal),
}

impl fmt::Display for PosetElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosetElem::Id(i) => write!(f, "#{i}"),
            PosetElem::Ext(x) => write!(f, "{x}"),
        }
    }
}

/// A complete poset that can serve as the domain or codomain of a
/// [`MonotoneMap`].
///
/// `UnitInterval` is `[0, 1]` with its own endpoints as top and bottom, which
/// is what makes a probability measure a map into a complete lattice: its
/// empty meet is 1, not `inf`.
#[derive(Clone, Debug, PartialEq)]
pub enum Carrier {
    Lattice(FiniteLattice),
    ExtendedReals,
    UnitInterval,
}

impl Carrier {
    fn describe(&self) -> &'static str {
        match self {
            Carrier::Lattice(_) => "finite lattice",
            Carrier::ExtendedReals => "extended reals",
            Carrier::UnitInterval => "unit interval",
        }
    }

    fn check_elem(&self, e: &PosetElem) -> Result<(), OrderError> {
        match (self, e) {
            (Carrier::Lattice(l), PosetElem::Id(i)) if *i < l.len() => Ok(()),
            (Carrier::ExtendedReals, PosetElem::Ext(_)) => Ok(()),
            (Carrier::UnitInterval, PosetElem::Ext(x)) => match x.as_finite() {
                Some(v) if (0.0..=1.0).contains(&v) => Ok(()),
                _ => Err(OrderError::BadElement(format!("{x} outside the unit interval"))),
            },
            _ => Err(OrderError::BadElement(format!("{e} not in {}", self.describe()))),
        }
    }

    pub fn leq(&self, a: &PosetElem, b: &PosetElem) -> Result<bool, OrderError> {
        self.check_elem(a)?;
        self.check_elem(b)?;
        match (self, a, b) {
            (Carrier::Lattice(l), PosetElem::Id(i), PosetElem::Id(j)) => Ok(l.leq(*i, *j)),
            (_, PosetElem::Ext(x), PosetElem::Ext(y)) => Ok(x <= y),
            _ => unreachable!("check_elem filtered mixed elements"),
        }
    }

    pub fn meet(&self, a: &PosetElem, b: &PosetElem) -> Result<PosetElem, OrderError> {
        self.check_elem(a)?;
        self.check_elem(b)?;
        match (self, a, b) {
            (Carrier::Lattice(l), PosetElem::Id(i), PosetElem::Id(j)) => Ok(PosetElem::Id(l.meet(*i, *j))),
            (_, PosetElem::Ext(x), PosetElem::Ext(y)) => Ok(PosetElem::Ext(*x.min(y))),
            _ => unreachable!(),
        }
    }

    pub fn join(&self, a: &PosetElem, b: &PosetElem) -> Result<PosetElem, OrderError> {
        self.check_elem(a)?;
        self.check_elem(b)?;
        match (self, a, b) {
            (Carrier::Lattice(l), PosetElem::Id(i), PosetElem::Id(j)) => Ok(PosetElem::Id(l.join(*i, *j))),
            (_, PosetElem::Ext(x), PosetElem::Ext(y)) => Ok(PosetElem::Ext(*x.max(y))),
            _ => unreachable!(),
        }
    }

    pub fn top(&self) -> PosetElem {
        match self {
            Carrier::Lattice(l) => PosetElem::Id(l.top()),
            Carrier::ExtendedReals => PosetElem::Ext(ExtendedReal::PosInf),
            Carrier::UnitInterval => PosetElem::Ext(ExtendedReal::Finite(1.0)),
        }
    }

    pub fn bottom(&self) -> PosetElem {
        match self {
            Carrier::Lattice(l) => PosetElem::Id(l.bottom()),
            Carrier::ExtendedReals => PosetElem::Ext(ExtendedReal::NegInf),
            Carrier::UnitInterval => PosetElem::Ext(ExtendedReal::Finite(0.0)),
        }
    }

    /// All elements, when the carrier is finite.
    pub fn elements(&self) -> Option<Vec<PosetElem>> {
        match self {
            Carrier::Lattice(l) => Some((0..l.len()).map(PosetElem::Id).collect()),
            _ => None,
        }
    }

    /// Equality of elements: exact on lattice indices, `EXT_EQ_TOL` on
    /// extended reals.
    pub fn elems_eq(&self, a: &PosetElem, b: &PosetElem) -> bool {
        match (a, b) {
            (PosetElem::Id(i), PosetElem::Id(j)) => i == j,
            (PosetElem::Ext(x), PosetElem::Ext(y)) => x.approx_eq(*y, EXT_EQ_TOL),
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
enum MapRule {
    /// Value per domain-lattice element.
    Table(Vec<PosetElem>),
    /// Right-continuous step map on the extended reals: on
    /// `[breakpoints[i-1], breakpoints[i])` the value is `values[i]`, below
    /// the first breakpoint it is `values[0]`, and from the last breakpoint
    /// on it is `values[breakpoints.len()]`.
    Step { breakpoints: Vec<f64>, values: Vec<PosetElem> },
}

/// A monotone map between carriers, represented so that it can be evaluated
/// and scanned exhaustively. Monotonicity is verified at construction.
#[derive(Clone, Debug)]
pub struct MonotoneMap {
    dom: Carrier,
    cod: Carrier,
    rule: MapRule,
}

impl MonotoneMap {
    /// A map off a finite lattice given by its value table.
    pub fn from_table(dom: FiniteLattice, cod: Carrier, values: Vec<PosetElem>) -> Result<Self, OrderError> {
        if values.len() != dom.len() {
            return Err(OrderError::DomainMismatch(format!(
                "table has {} entries for a lattice of {}",
                values.len(),
                dom.len()
            )));
        }
        for v in &values {
            cod.check_elem(v)?;
        }
        for a in 0..dom.len() {
            for b in 0..dom.len() {
                if dom.leq(a, b) && !cod.leq(&values[a], &values[b])? {
                    return Err(OrderError::NotMonotone(format!(
                        "{:?} <= {:?} but {} > {}",
                        dom.label(a),
                        dom.label(b),
                        values[a],
                        values[b]
                    )));
                }
            }
        }
        Ok(MonotoneMap { dom: Carrier::Lattice(dom), cod, rule: MapRule::Table(values) })
    }

    /// A right-continuous step map on the extended reals. Breakpoints must be
    /// strictly increasing and `values` must be ascending in the codomain,
    /// with one more value than there are breakpoints.
    pub fn step(cod: Carrier, breakpoints: Vec<f64>, values: Vec<PosetElem>) -> Result<Self, OrderError> {
        if values.len() != breakpoints.len() + 1 {
            return Err(OrderError::DomainMismatch(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(OrderError::BadElement("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OrderError::NotMonotone("breakpoints must be strictly increasing".into()));
        }
        for v in &values {
            cod.check_elem(v)?;
        }
        for w in values.windows(2) {
            if !cod.leq(&w[0], &w[1])? {
                return Err(OrderError::NotMonotone(format!("step values {} > {}", w[0], w[1])));
            }
        }
        Ok(MonotoneMap { dom: Carrier::ExtendedReals, cod, rule: MapRule::Step { breakpoints, values } })
    }

    pub fn identity(lat: FiniteLattice) -> Self {
        let values = (0..lat.len()).map(PosetElem::Id).collect();
        MonotoneMap {
            dom: Carrier::Lattice(lat.clone()),
            cod: Carrier::Lattice(lat),
            rule: MapRule::Table(values),
        }
    }

    pub fn dom(&self) -> &Carrier {
        &self.dom
    }

    pub fn cod(&self) -> &Carrier {
        &self.cod
    }

    pub fn apply(&self, x: &PosetElem) -> Result<PosetElem, OrderError> {
        self.dom.check_elem(x)?;
        match (&self.rule, x) {
            (MapRule::Table(values), PosetElem::Id(i)) => Ok(values[*i]),
            (MapRule::Step { breakpoints, values }, PosetElem::Ext(r)) => {
                let idx = match r {
                    ExtendedReal::NegInf => 0,
                    ExtendedReal::PosInf => breakpoints.len(),
                    ExtendedReal::Finite(x) => breakpoints.iter().take_while(|b| **b <= *x).count(),
                };
                Ok(values[idx])
            }
            _ => unreachable!("check_elem filtered mismatched shapes"),
        }
    }

    /// Domain elements that determine the map: every lattice element, or the
    /// endpoints plus all breakpoints of a step map.
    pub fn probe_elements(&self) -> Vec<PosetElem> {
        match &self.rule {
            MapRule::Table(_) => self.dom.elements().expect("table maps have lattice domains"),
            MapRule::Step { breakpoints, .. } => {
                let mut out = vec![PosetElem::Ext(ExtendedReal::NegInf)];
                out.extend(breakpoints.iter().map(|b| PosetElem::Ext(ExtendedReal::Finite(*b))));
                out.push(PosetElem::Ext(ExtendedReal::PosInf));
                out
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreservationKind {
    Meets,
    Joins,
}

/// Reports whether `g` preserves meets or joins of arbitrary finite families,
/// the empty family included.
///
/// On a finite lattice domain it suffices to check the empty family and all
/// pairs; larger families follow by induction. For a step map on the extended
/// reals, binary meets and joins come free with monotonicity since the domain
/// is a chain, and descending nets land on the right-continuity built into
/// the representation, so the content is the endpoint condition plus, for
/// joins, continuity from the left at each breakpoint.
pub fn check_preservation(g: &MonotoneMap, kind: PreservationKind) -> bool {
    preservation_counterexample(g, kind).is_none()
}

pub(crate) fn preservation_counterexample(g: &MonotoneMap, kind: PreservationKind) -> Option<String> {
    match &g.rule {
        MapRule::Table(values) => {
            let lat = match &g.dom {
                Carrier::Lattice(l) => l,
                _ => unreachable!(),
            };
            type Combine = fn(&Carrier, &PosetElem, &PosetElem) -> Result<PosetElem, OrderError>;
            let (unit, unit_cod, combine): (usize, PosetElem, Combine) = match kind {
                PreservationKind::Meets => (lat.top(), g.cod.top(), Carrier::meet),
                PreservationKind::Joins => (lat.bottom(), g.cod.bottom(), Carrier::join),
            };
            if !g.cod.elems_eq(&values[unit], &unit_cod) {
                return Some(format!(
                    "empty family: g({:?}) = {} but the codomain unit is {}",
                    lat.label(unit),
                    values[unit],
                    unit_cod
                ));
            }
            for a in 0..lat.len() {
                for b in 0..lat.len() {
                    let ab = match kind {
                        PreservationKind::Meets => lat.meet(a, b),
                        PreservationKind::Joins => lat.join(a, b),
                    };
                    let lhs = values[ab];
                    let rhs = combine(&g.cod, &values[a], &values[b]).expect("validated values");
                    if !g.cod.elems_eq(&lhs, &rhs) {
                        return Some(format!(
                            "g({:?} op {:?}) = {} but g({:?}) op g({:?}) = {}",
                            lat.label(a),
                            lat.label(b),
                            lhs,
                            lat.label(a),
                            lat.label(b),
                            rhs
                        ));
                    }
                }
            }
            None
        }
        MapRule::Step { breakpoints, values } => match kind {
            PreservationKind::Meets => {
                let top = g.cod.top();
                let at_top = values.last().expect("nonempty values");
                if !g.cod.elems_eq(at_top, &top) {
                    Some(format!("empty family: g(inf) = {at_top} but the codomain top is {top}"))
                } else {
                    None
                }
            }
            PreservationKind::Joins => {
                let bottom = g.cod.bottom();
                let at_bottom = &values[0];
                if !g.cod.elems_eq(at_bottom, &bottom) {
                    return Some(format!(
                        "empty family: g(-inf) = {at_bottom} but the codomain bottom is {bottom}"
                    ));
                }
                for (i, b) in breakpoints.iter().enumerate() {
                    if !g.cod.elems_eq(&values[i], &values[i + 1]) {
                        return Some(format!(
                            "sup of {{r : r < {b}}} maps to {} but g({b}) = {}",
                            values[i],
                            values[i + 1]
                        ));
                    }
                }
                None
            }
        },
    }
}

/// Left adjoint of a meet-preserving monotone map, evaluated at `y` in the
/// codomain of `g`: the meet of `{x : y <= g(x)}`, with the empty meet giving
/// the top of the domain of `g`.
///
/// Meet preservation is verified first and a counterexample rejects the call,
/// since without it the scan below computes something that fails the
/// adjunction law.
pub fn left_adjoint(g: &MonotoneMap, y: &PosetElem) -> Result<PosetElem, OrderError> {
    g.cod.check_elem(y)?;
    if let Some(witness) = preservation_counterexample(g, PreservationKind::Meets) {
        return Err(OrderError::NotMeetPreserving(witness));
    }
    match &g.rule {
        MapRule::Table(values) => {
            let lat = match &g.dom {
                Carrier::Lattice(l) => l,
                _ => unreachable!(),
            };
            let qualifying: Vec<usize> =
                (0..lat.len()).filter(|&x| g.cod.leq(y, &values[x]).unwrap_or(false)).collect();
            Ok(PosetElem::Id(lat.meet_set(&qualifying)))
        }
        MapRule::Step { breakpoints, values } => {
            // The qualifying set {r : y <= g(r)} is up-closed and, by
            // right-continuity, contains its infimum when nonempty.
            if g.cod.leq(y, &values[0])? {
                return Ok(PosetElem::Ext(ExtendedReal::NegInf));
            }
            for (i, b) in breakpoints.iter().enumerate() {
                if g.cod.leq(y, &values[i + 1])? {
                    return Ok(PosetElem::Ext(ExtendedReal::Finite(*b)));
                }
            }
            Ok(PosetElem::Ext(ExtendedReal::PosInf))
        }
    }
}

/// One failed instance of the adjunction law.
#[derive(Clone, Debug)]
pub struct GaloisViolation {
    pub y: PosetElem,
    pub x: PosetElem,
    /// Whether `f(y) <= x` held.
    pub left: bool,
    /// Whether `y <= g(x)` held.
    pub right: bool,
}

impl fmt::Display for GaloisViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "y = {}, x = {}: f(y) <= x is {} but y <= g(x) is {}",
            self.y, self.x, self.left, self.right
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct GaloisReport {
    pub checked: usize,
    pub violations: Vec<GaloisViolation>,
}

impl GaloisReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replays `f(y) <= x  iff  y <= g(x)` over the sample pairs, where `f` goes
/// from the codomain of `g` back to its domain. Carrier mismatches between
/// the two maps are rejected before any evaluation.
pub fn verify_galois_pair(
    f: &MonotoneMap,
    g: &MonotoneMap,
    samples: &[(PosetElem, PosetElem)],
) -> Result<GaloisReport, OrderError> {
    if f.dom != g.cod || f.cod != g.dom {
        return Err(OrderError::DomainMismatch(
            "left adjoint must map the codomain of g to its domain".into(),
        ));
    }
    let mut report = GaloisReport::default();
    for (y, x) in samples {
        let fy = f.apply(y)?;
        let left = f.cod.leq(&fy, x)?;
        let gx = g.apply(x)?;
        let right = g.cod.leq(y, &gx)?;
        report.checked += 1;
        if left != right {
            report.violations.push(GaloisViolation { y: *y, x: *x, left, right });
        }
    }
    Ok(report)
}

/// All `(y, x)` pairs with `y` in the codomain of `g` and `x` in its domain,
/// when both carriers are finite. The exhaustive sample for
/// [`verify_galois_pair`].
pub fn exhaustive_samples(g: &MonotoneMap) -> Option<Vec<(PosetElem, PosetElem)>> {
    let ys = g.cod.elements()?;
    let xs = g.dom.elements()?;
    let mut out = Vec::with_capacity(ys.len() * xs.len());
    for y in &ys {
        for x in &xs {
            out.push((*y, *x));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ext(x: f64) -> PosetElem {
        PosetElem::Ext(ExtendedReal::finite(x))
    }

    #[test]
    fn extended_real_orders_and_prints() {
        let neg = ExtendedReal::NegInf;
        let pos = ExtendedReal::PosInf;
        let z = ExtendedReal::finite(0.0);
        assert!(neg < z && z < pos && neg < pos);
        assert_eq!(ExtendedReal::from_f64(f64::INFINITY), pos);
        assert_eq!(ExtendedReal::from_f64(f64::NEG_INFINITY), neg);
        assert!(z.approx_eq(ExtendedReal::finite(5e-10), EXT_EQ_TOL));
        assert!(!z.approx_eq(neg, EXT_EQ_TOL));
        assert_eq!(format!("{neg} {z} {pos}"), "-inf 0 inf");
    }

    #[test]
    fn extended_real_round_trips_through_json() {
        for v in [ExtendedReal::NegInf, ExtendedReal::finite(2.5), ExtendedReal::PosInf] {
            let s = serde_json::to_string(&v).unwrap();
            let back: ExtendedReal = serde_json::from_str(&s).unwrap();
            assert_eq!(v, back);
        }
        assert_eq!(serde_json::from_str::<ExtendedReal>("\"-inf\"").unwrap(), ExtendedReal::NegInf);
        assert!(serde_json::from_str::<ExtendedReal>("\"wide\"").is_err());
    }

    #[test]
    fn boolean_lattice_has_subset_order() {
        let b = FiniteLattice::boolean(&["a", "b"]);
        assert_eq!(b.len(), 4);
        let empty = b.index_of("{}").unwrap();
        let a = b.index_of("{a}").unwrap();
        let ab = b.index_of("{a,b}").unwrap();
        assert!(b.leq(empty, a) && b.leq(a, ab));
        assert!(!b.leq(a, b.index_of("{b}").unwrap()));
        assert_eq!(b.top(), ab);
        assert_eq!(b.bottom(), empty);
        assert_eq!(b.meet(a, b.index_of("{b}").unwrap()), empty);
        assert_eq!(b.join(a, b.index_of("{b}").unwrap()), ab);
        assert_eq!(b.meet_set(&[]), ab);
        assert_eq!(b.join_set(&[]), empty);
    }

    #[test]
    fn non_lattice_relations_are_rejected() {
        // Two incomparable elements with two incomparable upper bounds: no join.
        let r = FiniteLattice::new(vec!["a", "b", "x", "y"], &[(0, 2), (0, 3), (1, 2), (1, 3)]);
        assert!(matches!(r, Err(OrderError::NotALattice(_))));
        let cyc = FiniteLattice::new(vec!["a", "b"], &[(0, 1), (1, 0)]);
        assert!(matches!(cyc, Err(OrderError::NotALattice(_))));
    }

    #[test]
    fn adjoint_of_identity_is_identity() {
        let b = FiniteLattice::boolean(&["a", "b"]);
        let g = MonotoneMap::identity(b.clone());
        let top = PosetElem::Id(b.top());
        assert_eq!(left_adjoint(&g, &top).unwrap(), top);
        for i in 0..b.len() {
            assert_eq!(left_adjoint(&g, &PosetElem::Id(i)).unwrap(), PosetElem::Id(i));
        }
    }

    #[test]
    fn adjoint_of_threshold_step_hits_the_breakpoint() {
        // g(r) = 1 for r >= 2, else 0, into the two-element chain.
        let two = FiniteLattice::chain(vec!["0", "1"]);
        let g = MonotoneMap::step(
            Carrier::Lattice(two),
            vec![2.0],
            vec![PosetElem::Id(0), PosetElem::Id(1)],
        )
        .unwrap();
        assert_eq!(left_adjoint(&g, &PosetElem::Id(1)).unwrap(), ext(2.0));
        assert_eq!(
            left_adjoint(&g, &PosetElem::Id(0)).unwrap(),
            PosetElem::Ext(ExtendedReal::NegInf)
        );
    }

    #[test]
    fn adjoint_of_constant_top_is_constant_bottom() {
        let b = FiniteLattice::boolean(&["a", "b"]);
        let top = PosetElem::Id(b.top());
        let g = MonotoneMap::from_table(b.clone(), Carrier::Lattice(b.clone()), vec![top; 4]).unwrap();
        for y in 0..b.len() {
            assert_eq!(left_adjoint(&g, &PosetElem::Id(y)).unwrap(), PosetElem::Id(b.bottom()));
        }
    }

    #[test]
    fn measures_fail_meet_preservation_but_point_masses_pass() {
        // Three atoms with masses 0.2, 0.3, 0.5; mu({c}) = 0.5 and
        // mu({a,b}) = 0.5 but their intersection is empty.
        let b = FiniteLattice::boolean(&["a", "b", "c"]);
        let mut mu_values = Vec::new();
        let mut dirac_values = Vec::new();
        let masses = [0.2, 0.3, 0.5];
        for m in 0..b.len() {
            let total: f64 = (0..3).filter(|i| m >> i & 1 == 1).map(|i| masses[i]).sum();
            mu_values.push(ext(total));
            dirac_values.push(ext(if m >> 2 & 1 == 1 { 1.0 } else { 0.0 }));
        }
        let mu = MonotoneMap::from_table(b.clone(), Carrier::UnitInterval, mu_values).unwrap();
        assert!(!check_preservation(&mu, PreservationKind::Meets));
        assert!(!check_preservation(&mu, PreservationKind::Joins));
        let dirac = MonotoneMap::from_table(b.clone(), Carrier::UnitInterval, dirac_values).unwrap();
        assert!(check_preservation(&dirac, PreservationKind::Meets));
        assert!(matches!(
            left_adjoint(&mu, &ext(0.4)),
            Err(OrderError::NotMeetPreserving(_))
        ));
    }

    #[test]
    fn lattice_isomorphisms_preserve_both() {
        let c = FiniteLattice::chain(vec!["x", "y", "z"]);
        let g = MonotoneMap::identity(c);
        assert!(check_preservation(&g, PreservationKind::Meets));
        assert!(check_preservation(&g, PreservationKind::Joins));
    }

    #[test]
    fn galois_pair_of_identities_has_no_violations() {
        let b = FiniteLattice::boolean(&["a", "b"]);
        let g = MonotoneMap::identity(b.clone());
        let f = MonotoneMap::identity(b);
        let samples = exhaustive_samples(&g).unwrap();
        let report = verify_galois_pair(&f, &g, &samples).unwrap();
        assert_eq!(report.checked, 16);
        assert!(report.passed());
    }

    #[test]
    fn shifted_candidate_adjoint_is_caught() {
        // g = identity on a 4-chain; the true adjoint is the identity, so a
        // shift up by one step must produce violations.
        let c = FiniteLattice::chain(vec!["0", "1", "2", "3"]);
        let g = MonotoneMap::identity(c.clone());
        let shifted: Vec<PosetElem> =
            (0..4).map(|i| PosetElem::Id((i + 1).min(3))).collect();
        let f = MonotoneMap::from_table(c.clone(), Carrier::Lattice(c), shifted).unwrap();
        let samples = exhaustive_samples(&g).unwrap();
        let report = verify_galois_pair(&f, &g, &samples).unwrap();
        assert!(!report.passed());
        assert!(report.violations.iter().all(|v| v.left != v.right));
    }

    #[test]
    fn mismatched_carriers_are_rejected() {
        let b = FiniteLattice::boolean(&["a"]);
        let c = FiniteLattice::chain(vec!["0", "1", "2"]);
        let f = MonotoneMap::identity(b);
        let g = MonotoneMap::identity(c);
        assert!(matches!(verify_galois_pair(&f, &g, &[]), Err(OrderError::DomainMismatch(_))));
    }

    #[test]
    fn non_monotone_tables_are_rejected() {
        let c = FiniteLattice::chain(vec!["0", "1"]);
        let r = MonotoneMap::from_table(
            c.clone(),
            Carrier::Lattice(c),
            vec![PosetElem::Id(1), PosetElem::Id(0)],
        );
        assert!(matches!(r, Err(OrderError::NotMonotone(_))));
    }

    /// A meet-preserving map on a Boolean lattice: join with a fixed element.
    /// Distributivity gives binary meets and `top | t = top` gives the empty
    /// one, so a left adjoint exists (it is `y & !t`).
    fn join_with(b: &FiniteLattice, t: usize) -> MonotoneMap {
        let values = (0..b.len()).map(|x| PosetElem::Id(b.join(x, t))).collect();
        MonotoneMap::from_table(b.clone(), Carrier::Lattice(b.clone()), values).unwrap()
    }

    proptest! {
        #[test]
        fn adjunction_law_holds_exhaustively(atoms in 1usize..=3, t_bits in 0usize..8) {
            let names = ["a", "b", "c"];
            let b = FiniteLattice::boolean(&names[..atoms]);
            let t = t_bits % b.len();
            let g = join_with(&b, t);
            prop_assert!(check_preservation(&g, PreservationKind::Meets));
            let mut f_values = Vec::new();
            for y in 0..b.len() {
                match left_adjoint(&g, &PosetElem::Id(y)).unwrap() {
                    PosetElem::Id(v) => f_values.push(PosetElem::Id(v)),
                    other => prop_assert!(false, "unexpected adjoint value {other}"),
                }
            }
            let f = MonotoneMap::from_table(b.clone(), Carrier::Lattice(b.clone()), f_values).unwrap();
            let samples = exhaustive_samples(&g).unwrap();
            let report = verify_galois_pair(&f, &g, &samples).unwrap();
            prop_assert!(report.passed(), "violations: {:?}", report.violations);
        }

        #[test]
        fn left_adjoints_preserve_joins(atoms in 1usize..=3, t_bits in 0usize..8) {
            let names = ["a", "b", "c"];
            let b = FiniteLattice::boolean(&names[..atoms]);
            let g = join_with(&b, t_bits % b.len());
            let f_of = |y: usize| match left_adjoint(&g, &PosetElem::Id(y)).unwrap() {
                PosetElem::Id(v) => v,
                _ => unreachable!(),
            };
            // Binary joins and the empty join.
            prop_assert_eq!(f_of(b.bottom()), b.bottom());
            for y1 in 0..b.len() {
                for y2 in 0..b.len() {
                    prop_assert_eq!(f_of(b.join(y1, y2)), b.join(f_of(y1), f_of(y2)));
                }
            }
        }

        #[test]
        fn monotone_chain_maps_with_top_fixed_preserve_meets(vals in proptest::collection::vec(0usize..5, 5)) {
            let c = FiniteLattice::chain(vec!["0", "1", "2", "3", "4"]);
            let mut sorted = vals.clone();
            sorted.sort_unstable();
            *sorted.last_mut().unwrap() = c.top();
            let table = sorted.iter().map(|&v| PosetElem::Id(v)).collect();
            let g = MonotoneMap::from_table(c.clone(), Carrier::Lattice(c), table).unwrap();
            prop_assert!(check_preservation(&g, PreservationKind::Meets));
        }

        #[test]
        fn step_adjoint_is_monotone(bps in proptest::collection::vec(-5.0f64..5.0, 1..4)) {
            let mut bps = bps;
            bps.sort_by(f64::total_cmp);
            bps.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let k = bps.len();
            let chain = FiniteLattice::chain((0..=k).map(|i| i.to_string()).collect::<Vec<_>>());
            let values = (0..=k).map(PosetElem::Id).collect();
            let g = MonotoneMap::step(Carrier::Lattice(chain), bps.clone(), values).unwrap();
            let mut last = PosetElem::Ext(ExtendedReal::NegInf);
            for y in 0..=k {
                let fy = left_adjoint(&g, &PosetElem::Id(y)).unwrap();
                let (PosetElem::Ext(prev), PosetElem::Ext(cur)) = (last, fy) else { unreachable!() };
                prop_assert!(prev <= cur);
                last = fy;
            }
        }
    }
}
