//! Classical probability on a finite sample space, with exact rational
//! weights.
//!
//! The cumulative map `r -> {A <= r}` lands in the event lattice and the
//! quantile map goes back; together they decompose the numeric CDF and
//! quantile function through lattice-valued intermediates. Measures are
//! `BigRational`, so every law in this module can be checked with no
//! floating-point slack at all.
//!
//! The quantile correspondence here is restricted to the chain of cumulative
//! events. The fully global version, which meets over every event of given
//! mass, is also provided because it fails to be adjoint, and keeping it
//! around makes that failure demonstrable; see [`kappa_global`].

use crate::order::ExtendedReal;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub type Weight = BigRational;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("mismatched carriers: {0}")]
    DomainMismatch(String),
    #[error("bad fixture: {0}")]
    BadFixture(String),
}

/// A finite sample space with distinct, nonempty point labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSampleSpace {
    points: Vec<String>,
}

impl FiniteSampleSpace {
    pub fn new<S: Into<String>>(points: Vec<S>) -> Result<Self, ClassicalError> {
        let points: Vec<String> = points.into_iter().map(Into::into).collect();
        if points.is_empty() {
            return Err(ClassicalError::BadFixture("sample space must be nonempty".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &points {
            if p.is_empty() || !seen.insert(p.clone()) {
                return Err(ClassicalError::BadFixture(format!("bad or repeated point label {p:?}")));
            }
        }
        Ok(FiniteSampleSpace { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> &str {
        &self.points[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.points
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }
}

/// A subset of a sample space, stored by point index.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event(BTreeSet<usize>);

impl Event {
    pub fn empty() -> Self {
        Event(BTreeSet::new())
    }

    pub fn full(n: usize) -> Self {
        Event((0..n).collect())
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(ix: I) -> Self {
        Event(ix.into_iter().collect())
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Event) -> Event {
        Event(self.0.union(&other.0).copied().collect())
    }

    pub fn intersect(&self, other: &Event) -> Event {
        Event(self.0.intersection(&other.0).copied().collect())
    }

    pub fn complement(&self, n: usize) -> Event {
        Event((0..n).filter(|i| !self.0.contains(i)).collect())
    }

    pub fn symmetric_difference(&self, other: &Event) -> Event {
        Event(self.0.symmetric_difference(&other.0).copied().collect())
    }

    pub fn subset_of(&self, other: &Event) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Braced label list, e.g. `{a,c}`.
    pub fn label(&self, space: &FiniteSampleSpace) -> String {
        let names: Vec<&str> = self.indices().map(|i| space.label(i)).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// A real-valued function on a sample space, stored point by point.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomVariable {
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Result<Self, ClassicalError> {
        if values.is_empty() {
            return Err(ClassicalError::BadFixture("random variable needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ClassicalError::BadFixture("random variable values must be finite".into()));
        }
        Ok(RandomVariable { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Distinct attained values, ascending.
    pub fn image(&self) -> Vec<f64> {
        let mut vals = self.values.clone();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }
}

/// Exact rational probability weights over a sample space: nonnegative,
/// summing to one exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbabilityMeasure {
    weights: Vec<Weight>,
}

impl ProbabilityMeasure {
    pub fn new(weights: Vec<Weight>) -> Result<Self, ClassicalError> {
        if weights.is_empty() {
            return Err(ClassicalError::BadFixture("measure needs at least one weight".into()));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(ClassicalError::BadFixture("weights must be nonnegative".into()));
        }
        let total: Weight = weights.iter().sum();
        if !total.is_one() {
            return Err(ClassicalError::BadFixture(format!("weights sum to {total}, not 1")));
        }
        Ok(ProbabilityMeasure { weights })
    }

    /// Parses decimal, integer, or `a/b` strings into exact weights.
    pub fn from_strings(texts: &[&str]) -> Result<Self, ClassicalError> {
        let weights = texts.iter().map(|t| parse_weight(t)).collect::<Result<Vec<_>, _>>()?;
        ProbabilityMeasure::new(weights)
    }

    /// Converts floating weights exactly to rationals and renormalizes by the
    /// exact total, which must be within `1e-9` of one. Entries within
    /// rounding noise below zero are clamped to zero first.
    pub fn from_f64_renormalized(ws: &[f64]) -> Result<Self, ClassicalError> {
        let mut weights = Vec::with_capacity(ws.len());
        for &w in ws {
            if !w.is_finite() || w < -1e-12 {
                return Err(ClassicalError::BadFixture(format!("bad weight {w}")));
            }
            let w = w.max(0.0);
            weights.push(BigRational::from_float(w).expect("finite float"));
        }
        let total: Weight = weights.iter().sum();
        let one = Weight::one();
        let drift = (&total - &one).abs();
        if drift > BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000u64)) {
            return Err(ClassicalError::BadFixture(format!("weights sum to {total}, too far from 1")));
        }
        if total.is_zero() {
            return Err(ClassicalError::BadFixture("weights sum to zero".into()));
        }
        for w in &mut weights {
            *w /= &total;
        }
        ProbabilityMeasure::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn measure(&self, e: &Event) -> Weight {
        e.indices().map(|i| &self.weights[i]).sum()
    }
}

/// Exact parse of `"0.25"`, `"1"`, or `"3/8"` into a rational.
pub fn parse_weight(text: &str) -> Result<Weight, ClassicalError> {
    let t = text.trim();
    let bad = |detail: &str| ClassicalError::BadFixture(format!("cannot parse weight {text:?}: {detail}"));
    if t.is_empty() {
        return Err(bad("empty"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|e| bad(&e.to_string()))?;
        let d = BigInt::from_str(den.trim()).map_err(|e| bad(&e.to_string()))?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.trim_start().starts_with('-');
        let w = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|e| bad(&e.to_string()))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("bad fractional part"));
        }
        let f = BigInt::from_str(frac).map_err(|e| bad(&e.to_string()))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let mag = w.abs() * &scale + f;
        let signed = if negative { -mag } else { mag };
        return Ok(BigRational::new(signed, scale));
    }
    let n = BigInt::from_str(t).map_err(|e| bad(&e.to_string()))?;
    Ok(BigRational::from(n))
}

/// Lattice-valued CDF: the event `{A <= r}`.
pub fn lcdf(var: &RandomVariable, r: ExtendedReal) -> Event {
    Event::from_indices((0..var.len()).filter(|&i| ExtendedReal::finite(var.value(i)) <= r))
}

/// Lattice-valued quantile: the largest value attained on the event, `-inf`
/// on the empty one.
pub fn lquantile(var: &RandomVariable, s: &Event) -> ExtendedReal {
    s.indices()
        .map(|i| ExtendedReal::finite(var.value(i)))
        .max()
        .unwrap_or(ExtendedReal::NegInf)
}

fn check_aligned(var: &RandomVariable, mu: &ProbabilityMeasure) -> Result<(), ClassicalError> {
    if var.len() != mu.len() {
        return Err(ClassicalError::DomainMismatch(format!(
            "variable on {} points, measure on {}",
            var.len(),
            mu.len()
        )));
    }
    Ok(())
}

/// Numeric CDF as the measure of the cumulative event.
pub fn cdf(var: &RandomVariable, mu: &ProbabilityMeasure, r: ExtendedReal) -> Result<Weight, ClassicalError> {
    check_aligned(var, mu)?;
    Ok(mu.measure(&lcdf(var, r)))
}

fn check_prob(p: &Weight) -> Result<(), ClassicalError> {
    if p.is_negative() || p > &Weight::one() {
        return Err(ClassicalError::OutOfRange(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Numeric quantile: the least `r` with `cdf(r) >= p`. Exact rational
/// comparisons throughout; `p = 0` gives `-inf`.
pub fn quantile(var: &RandomVariable, mu: &ProbabilityMeasure, p: &Weight) -> Result<ExtendedReal, ClassicalError> {
    check_aligned(var, mu)?;
    check_prob(p)?;
    if p.is_zero() {
        return Ok(ExtendedReal::NegInf);
    }
    let mut acc = Weight::zero();
    for v in var.image() {
        for i in 0..var.len() {
            if var.value(i) == v {
                acc += mu.weight(i);
            }
        }
        if &acc >= p {
            return Ok(ExtendedReal::finite(v));
        }
    }
    // Unreachable while weights sum to one and p <= 1.
    Ok(ExtendedReal::PosInf)
}

/// Chain-restricted event quantile: the smallest cumulative event whose
/// measure reaches `s`. Since the candidates form the chain
/// `{} = {A <= -inf} <= {A <= v_1} <= ...`, the scan is the left adjoint of
/// the measure restricted to that chain.
pub fn kappa_chain(var: &RandomVariable, mu: &ProbabilityMeasure, s: &Weight) -> Result<Event, ClassicalError> {
    check_aligned(var, mu)?;
    check_prob(s)?;
    let mut best = Event::empty();
    if mu.measure(&best).lt(s) {
        for v in var.image() {
            let e = lcdf(var, ExtendedReal::finite(v));
            if &mu.measure(&e) >= s {
                best = e;
                break;
            }
        }
    }
    Ok(best)
}

/// Unrestricted event quantile: the intersection of every event of measure at
/// least `s`, over the full powerset.
///
/// This is what the adjoint recipe would suggest without the chain
/// restriction, and it is kept as a demonstration that the recipe fails
/// there: the measure does not preserve meets, distinct events of equal mass
/// intersect away to nothing, and the result can have measure below `s`.
pub fn kappa_global(mu: &ProbabilityMeasure, s: &Weight) -> Result<Event, ClassicalError> {
    check_prob(s)?;
    let n = mu.len();
    if n > 20 {
        return Err(ClassicalError::BadFixture(format!("powerset scan over {n} points refused")));
    }
    let mut acc = Event::full(n);
    for mask in 0u32..(1u32 << n) {
        let e = Event::from_indices((0..n).filter(|i| mask >> i & 1 == 1));
        if &mu.measure(&e) >= s {
            acc = acc.intersect(&e);
        }
    }
    Ok(acc)
}

/// Whether two events agree up to a set of measure zero.
pub fn events_equal_mod_null(mu: &ProbabilityMeasure, a: &Event, b: &Event) -> bool {
    mu.measure(&a.symmetric_difference(b)).is_zero()
}

/// Outcome of an exact grid scan of a law; `violations` lists human-readable
/// witnesses.
#[derive(Clone, Debug, Default)]
pub struct GridCheckReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl GridCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn grid(denom: u32) -> impl Iterator<Item = Weight> {
    (0..=denom).map(move |k| BigRational::new(BigInt::from(k), BigInt::from(denom)))
}

/// Probe arguments for the real line: both endpoints, every attained value,
/// and midpoints between consecutive attained values.
fn real_probes(var: &RandomVariable) -> Vec<ExtendedReal> {
    let image = var.image();
    let mut probes = vec![ExtendedReal::NegInf, ExtendedReal::PosInf];
    for (i, v) in image.iter().enumerate() {
        probes.push(ExtendedReal::finite(*v));
        if i + 1 < image.len() {
            probes.push(ExtendedReal::finite(0.5 * (v + image[i + 1])));
        }
    }
    probes.push(ExtendedReal::finite(image[0] - 1.0));
    probes.push(ExtendedReal::finite(image[image.len() - 1] + 1.0));
    probes
}

/// Exact adjunction scan: `quantile(p) <= r  iff  p <= cdf(r)` for every `p`
/// on the `1/denom` grid and every probe `r`.
pub fn check_cdf_quantile_adjunction(
    var: &RandomVariable,
    mu: &ProbabilityMeasure,
    denom: u32,
) -> Result<GridCheckReport, ClassicalError> {
    check_aligned(var, mu)?;
    let probes = real_probes(var);
    let mut report = GridCheckReport::default();
    for p in grid(denom) {
        let q = quantile(var, mu, &p)?;
        for r in &probes {
            let lhs = q <= *r;
            let rhs = p <= cdf(var, mu, *r)?;
            report.checked += 1;
            if lhs != rhs {
                report.violations.push(format!(
                    "p = {p}, r = {r}: quantile(p) = {q} so lhs = {lhs}, cdf(r) = {} so rhs = {rhs}",
                    cdf(var, mu, *r)?
                ));
            }
        }
    }
    Ok(report)
}

/// Exact left-continuity scan on the grid: for `p > 0`, the quantile at any
/// rational strictly between the last attained CDF value below `p` and `p`
/// itself must equal the quantile at `p`.
pub fn check_quantile_left_continuity(
    var: &RandomVariable,
    mu: &ProbabilityMeasure,
    denom: u32,
) -> Result<GridCheckReport, ClassicalError> {
    check_aligned(var, mu)?;
    let mut attained: Vec<Weight> = vec![Weight::zero()];
    for v in var.image() {
        attained.push(cdf(var, mu, ExtendedReal::finite(v))?);
    }
    let mut report = GridCheckReport::default();
    for p in grid(denom) {
        if p.is_zero() {
            let q = quantile(var, mu, &p)?;
            report.checked += 1;
            if q != ExtendedReal::NegInf {
                report.violations.push(format!("quantile(0) = {q}, expected -inf"));
            }
            continue;
        }
        let below = attained.iter().filter(|c| **c < p).max().expect("zero is always below");
        let midpoint = (below + &p) / BigRational::from(BigInt::from(2));
        let q_mid = quantile(var, mu, &midpoint)?;
        let q_p = quantile(var, mu, &p)?;
        report.checked += 1;
        if q_mid != q_p {
            report.violations.push(format!(
                "p = {p}: quantile({midpoint}) = {q_mid} but quantile({p}) = {q_p}"
            ));
        }
    }
    Ok(report)
}

/// A bundled sample space, random variable, and measure, the unit the
/// command-line tools pass around.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawFixture", into = "RawFixture")]
pub struct ClassicalFixture {
    pub space: FiniteSampleSpace,
    pub variable: RandomVariable,
    pub measure: ProbabilityMeasure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawFixture {
    points: Vec<String>,
    weights: BTreeMap<String, WeightSpec>,
    variable: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightSpec {
    Text(String),
    Number(f64),
}

impl TryFrom<RawFixture> for ClassicalFixture {
    type Error = ClassicalError;

    fn try_from(raw: RawFixture) -> Result<Self, ClassicalError> {
        let space = FiniteSampleSpace::new(raw.points.clone())?;
        let mut weights = Vec::with_capacity(space.len());
        let mut values = Vec::with_capacity(space.len());
        for p in space.labels() {
            let w = raw
                .weights
                .get(p)
                .ok_or_else(|| ClassicalError::BadFixture(format!("missing weight for {p:?}")))?;
            weights.push(match w {
                WeightSpec::Text(t) => parse_weight(t)?,
                WeightSpec::Number(x) => BigRational::from_float(*x)
                    .ok_or_else(|| ClassicalError::BadFixture(format!("bad weight {x} for {p:?}")))?,
            });
            values.push(
                *raw.variable
                    .get(p)
                    .ok_or_else(|| ClassicalError::BadFixture(format!("missing value for {p:?}")))?,
            );
        }
        if raw.weights.len() != space.len() || raw.variable.len() != space.len() {
            return Err(ClassicalError::BadFixture("weights or values name unknown points".into()));
        }
        Ok(ClassicalFixture {
            space,
            variable: RandomVariable::new(values)?,
            measure: ProbabilityMeasure::new(weights)?,
        })
    }
}

impl From<ClassicalFixture> for RawFixture {
    fn from(f: ClassicalFixture) -> RawFixture {
        let mut weights = BTreeMap::new();
        let mut variable = BTreeMap::new();
        for (i, p) in f.space.labels().iter().enumerate() {
            weights.insert(p.clone(), WeightSpec::Text(f.measure.weight(i).to_string()));
            variable.insert(p.clone(), f.variable.value(i));
        }
        RawFixture { points: f.space.labels().to_vec(), weights, variable }
    }
}

impl fmt::Display for ClassicalFixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.space.labels().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}: A = {}, w = {}", self.variable.value(i), self.measure.weight(i))?;
        }
        Ok(())
    }
}

impl ClassicalFixture {
    /// Three points `a, b, c` with values 1, 1, 4 and masses 0.2, 0.3, 0.5;
    /// small enough to inspect by hand, rich enough to exhibit ties, jumps,
    /// and the chain/global quantile discrepancy.
    pub fn canonical() -> Self {
        ClassicalFixture {
            space: FiniteSampleSpace::new(vec!["a", "b", "c"]).expect("labels"),
            variable: RandomVariable::new(vec![1.0, 1.0, 4.0]).expect("values"),
            measure: ProbabilityMeasure::from_strings(&["0.2", "0.3", "0.5"]).expect("weights"),
        }
    }
}
