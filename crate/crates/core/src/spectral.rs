//! Spectral families, q-observable functions, and the order isomorphism
//! between them.
//!
//! A spectral family assigns to each real `r` the projection onto the part of
//! the spectrum at or below `r`, right-continuously, reaching 0 at `-inf` and
//! 1 at `inf`. Its adjoint partner, the q-observable function, sends a
//! projection `P` to the smallest `r` whose family projection dominates `P`.
//! On a finite-dimensional operator both are finite step objects, so each
//! direction of the correspondence is an explicit scan and the round trip can
//! be checked numerically.

use crate::linop::{
    eig_hermitian, proj_join_set, proj_leq, CMatrix, Eigendecomposition, HermitianOperator,
    LinopError, Projection, C64, PROJECTION_TOL,
};
use crate::order::ExtendedReal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comparison slack for evaluating step data at a real argument: a query
/// within this distance of a breakpoint is treated as sitting on it.
pub const BREAKPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("not a spectral family: {0}")]
    NotAFamily(String),
    #[error("q-observable axiom violated: {0}")]
    AxiomViolation(String),
    #[error("map is not monotone: {0}")]
    NotMonotone(String),
    #[error(transparent)]
    Linop(#[from] LinopError),
}

/// A right-continuous non-decreasing projection-valued step function on the
/// extended reals, stored by its finitely many jumps.
///
/// `breakpoints` are strictly increasing with gaps above [`BREAKPOINT_TOL`];
/// `cumulative[i]` is the value on `[breakpoints[i], breakpoints[i+1])`. The
/// value below every breakpoint is 0 and the last cumulative projection must
/// be the identity, so the endpoint conventions `E(-inf) = 0`, `E(inf) = 1`
/// hold by construction.
#[derive(Clone, Debug)]
pub struct SpectralFamily {
    dim: usize,
    breakpoints: Vec<f64>,
    cumulative: Vec<Projection>,
}

impl SpectralFamily {
    pub fn new(dim: usize, breakpoints: Vec<f64>, cumulative: Vec<Projection>) -> Result<Self, SpectralError> {
        if breakpoints.is_empty() || breakpoints.len() != cumulative.len() {
            return Err(SpectralError::NotAFamily(format!(
                "{} breakpoints against {} projections",
                breakpoints.len(),
                cumulative.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(SpectralError::NotAFamily("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] - w[0] <= BREAKPOINT_TOL) {
            return Err(SpectralError::NotAFamily(
                "breakpoints must increase by more than the breakpoint tolerance".into(),
            ));
        }
        for (i, p) in cumulative.iter().enumerate() {
            if p.dim() != dim {
                return Err(SpectralError::DimMismatch(p.dim(), dim));
            }
            if i > 0 && !proj_leq(&cumulative[i - 1], p)? {
                return Err(SpectralError::NotAFamily(format!(
                    "projections at breakpoints {} and {} are not nested",
                    breakpoints[i - 1],
                    breakpoints[i]
                )));
            }
        }
        let last = cumulative.last().expect("nonempty");
        if !last.approx_eq(&Projection::identity(dim), PROJECTION_TOL) {
            return Err(SpectralError::NotAFamily("family must reach the identity".into()));
        }
        Ok(SpectralFamily { dim, breakpoints, cumulative })
    }

    /// The spectral family of a Hermitian operator: jumps at the clustered
    /// eigenvalues, cumulative sums of the eigenprojections as values.
    pub fn of(a: &HermitianOperator) -> Self {
        let decomp = eig_hermitian(a, None);
        Self::from_decomposition(a.dim(), &decomp)
    }

    pub fn from_decomposition(dim: usize, decomp: &Eigendecomposition) -> Self {
        let mut cumulative = Vec::with_capacity(decomp.projections.len());
        let mut acc = CMatrix::zeros(dim, dim);
        for p in &decomp.projections {
            acc += p.matrix();
            cumulative.push(Projection::new(acc.clone()).expect("partial sums of eigenprojections"));
        }
        SpectralFamily { dim, breakpoints: decomp.eigenvalues.clone(), cumulative }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cumulative(&self) -> &[Projection] {
        &self.cumulative
    }

    /// Evaluates the step function, snapping queries within
    /// [`BREAKPOINT_TOL`] of a breakpoint onto it.
    pub fn value_at(&self, r: ExtendedReal) -> Projection {
        match r {
            ExtendedReal::NegInf => Projection::zero(self.dim),
            ExtendedReal::PosInf => Projection::identity(self.dim),
            ExtendedReal::Finite(x) => {
                let idx = self.breakpoints.iter().take_while(|b| **b <= x + BREAKPOINT_TOL).count();
                if idx == 0 {
                    Projection::zero(self.dim)
                } else {
                    self.cumulative[idx - 1].clone()
                }
            }
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim
            && self.breakpoints.len() == other.breakpoints.len()
            && self
                .breakpoints
                .iter()
                .zip(&other.breakpoints)
                .all(|(a, b)| (a - b).abs() <= tol)
            && self
                .cumulative
                .iter()
                .zip(&other.cumulative)
                .all(|(p, q)| p.approx_eq(q, tol))
    }
}

/// The q-observable function of an operator: `P` goes to the smallest `r`
/// with `P <= E(r)`, the zero projection to `-inf`.
///
/// Stored through its spectral family, which the evaluation scans; the
/// construction from a hand-built value table checks the two axioms that
/// characterize such functions (no nonzero projection at `-inf`, and the
/// finite-valued entries must cover the identity) and fails with
/// [`SpectralError::AxiomViolation`] otherwise.
#[derive(Clone, Debug)]
pub struct QObservableFunction {
    family: SpectralFamily,
}

impl QObservableFunction {
    pub fn of(a: &HermitianOperator) -> Self {
        QObservableFunction { family: SpectralFamily::of(a) }
    }

    pub fn from_family(family: SpectralFamily) -> Self {
        QObservableFunction { family }
    }

    /// Builds the join-preserving extension of a finite table
    /// `projection -> value`. The resulting function sends `P` to the least
    /// table value `r` such that the entries valued at or below `r` join to a
    /// projection dominating `P`.
    pub fn from_table(dim: usize, entries: &[(Projection, ExtendedReal)]) -> Result<Self, SpectralError> {
        for (p, _) in entries {
            if p.dim() != dim {
                return Err(SpectralError::DimMismatch(p.dim(), dim));
            }
        }
        let mut finite: Vec<(&Projection, f64)> = Vec::new();
        for (p, v) in entries {
            let zero = p.is_zero(PROJECTION_TOL);
            match v {
                ExtendedReal::NegInf => {
                    if !zero {
                        return Err(SpectralError::AxiomViolation(
                            "a nonzero projection is assigned -inf".into(),
                        ));
                    }
                }
                ExtendedReal::PosInf => {
                    return Err(SpectralError::AxiomViolation(
                        "no projection may be assigned inf: the finite-valued entries must already cover the identity".into(),
                    ));
                }
                ExtendedReal::Finite(x) => {
                    if zero {
                        return Err(SpectralError::AxiomViolation(
                            "the zero projection can only be assigned -inf".into(),
                        ));
                    }
                    finite.push((p, *x));
                }
            }
        }
        let cover = proj_join_set(dim, &finite.iter().map(|(p, _)| (*p).clone()).collect::<Vec<_>>())?;
        if !cover.approx_eq(&Projection::identity(dim), PROJECTION_TOL) {
            return Err(SpectralError::AxiomViolation(
                "finite-valued entries do not join to the identity".into(),
            ));
        }
        // Distinct values become breakpoints; values within the breakpoint
        // tolerance of each other are fused.
        let mut values: Vec<f64> = finite.iter().map(|(_, v)| *v).collect();
        values.sort_by(f64::total_cmp);
        let mut breakpoints: Vec<f64> = Vec::new();
        for v in values {
            match breakpoints.last() {
                Some(last) if v - last <= BREAKPOINT_TOL => {}
                _ => breakpoints.push(v),
            }
        }
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        for b in &breakpoints {
            let below: Vec<Projection> = finite
                .iter()
                .filter(|(_, v)| *v <= b + BREAKPOINT_TOL)
                .map(|(p, _)| (*p).clone())
                .collect();
            cumulative.push(proj_join_set(dim, &below)?);
        }
        let family = SpectralFamily::new(dim, breakpoints, cumulative)?;
        Ok(QObservableFunction { family })
    }

    pub fn family(&self) -> &SpectralFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim
    }

    /// Smallest breakpoint whose cumulative projection dominates `p`; the
    /// zero projection gives `-inf`.
    pub fn evaluate(&self, p: &Projection) -> Result<ExtendedReal, SpectralError> {
        if p.dim() != self.family.dim {
            return Err(SpectralError::DimMismatch(p.dim(), self.family.dim));
        }
        if p.is_zero(PROJECTION_TOL) {
            return Ok(ExtendedReal::NegInf);
        }
        for (b, e) in self.family.breakpoints.iter().zip(&self.family.cumulative) {
            if proj_leq(p, e)? {
                return Ok(ExtendedReal::Finite(*b));
            }
        }
        // Unreachable for valid input: the last cumulative projection is the
        // identity, which dominates everything.
        Ok(ExtendedReal::PosInf)
    }
}

/// `o^A(P)` in one call.
pub fn q_observable(a: &HermitianOperator, p: &Projection) -> Result<ExtendedReal, SpectralError> {
    QObservableFunction::of(a).evaluate(p)
}

/// Rebuilds the spectral family from a q-observable function by the join
/// formula `E(r) = join of {P : o(P) <= r}` over the generating projections.
/// The round trip through [`QObservableFunction::of`] reproduces the family
/// of the operator on its breakpoints.
pub fn spectral_family_from_q(o: &QObservableFunction) -> Result<SpectralFamily, SpectralError> {
    let fam = o.family();
    let dim = fam.dim;
    let mut generators: Vec<(Projection, f64)> = Vec::with_capacity(fam.cumulative.len());
    for p in &fam.cumulative {
        match o.evaluate(p)? {
            ExtendedReal::Finite(v) => generators.push((p.clone(), v)),
            other => {
                return Err(SpectralError::NotAFamily(format!(
                    "generating projection evaluated to {other}"
                )))
            }
        }
    }
    let mut cumulative = Vec::with_capacity(fam.breakpoints.len());
    for b in &fam.breakpoints {
        let below: Vec<Projection> = generators
            .iter()
            .filter(|(_, v)| *v <= b + BREAKPOINT_TOL)
            .map(|(p, _)| p.clone())
            .collect();
        cumulative.push(proj_join_set(dim, &below)?);
    }
    SpectralFamily::new(dim, fam.breakpoints.clone(), cumulative)
}

/// Spectral order: `A <=s B` iff `E^A(r) >= E^B(r)` for every `r`. Both step
/// functions are constant between their merged breakpoints, so the scan over
/// that grid is exhaustive.
pub fn spectral_order_leq(a: &HermitianOperator, b: &HermitianOperator) -> Result<bool, SpectralError> {
    if a.dim() != b.dim() {
        return Err(SpectralError::DimMismatch(a.dim(), b.dim()));
    }
    let fa = SpectralFamily::of(a);
    let fb = SpectralFamily::of(b);
    let mut grid: Vec<f64> = fa.breakpoints.iter().chain(&fb.breakpoints).copied().collect();
    grid.sort_by(f64::total_cmp);
    for r in grid {
        let ea = fa.value_at(ExtendedReal::Finite(r));
        let eb = fb.value_at(ExtendedReal::Finite(r));
        if !proj_leq(&eb, &ea)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A subset of the real line assembled from finitely many intervals and
/// isolated points, kept normalized: intervals pairwise disjoint, ascending,
/// non-degenerate; points sorted, deduplicated, and outside every interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawBorelSet", into = "RawBorelSet")]
pub struct BorelSet {
    intervals: Vec<Interval>,
    points: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Interval {
    pub lo: ExtendedReal,
    pub hi: ExtendedReal,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => !(self.lo_closed && self.hi_closed) || !self.lo.is_finite(),
            std::cmp::Ordering::Less => false,
        }
    }

    /// Exact membership for a finite query, no tolerance.
    fn contains_exact(&self, x: f64) -> bool {
        let above_lo = match self.lo {
            ExtendedReal::NegInf => true,
            ExtendedReal::PosInf => false,
            ExtendedReal::Finite(l) => {
                if self.lo_closed {
                    x >= l
                } else {
                    x > l
                }
            }
        };
        let below_hi = match self.hi {
            ExtendedReal::PosInf => true,
            ExtendedReal::NegInf => false,
            ExtendedReal::Finite(h) => {
                if self.hi_closed {
                    x <= h
                } else {
                    x < h
                }
            }
        };
        above_lo && below_hi
    }

    /// Tolerance-aware membership: closed endpoints absorb queries within
    /// `tol` outside them, open endpoints repel queries within `tol` inside.
    fn contains(&self, x: f64, tol: f64) -> bool {
        let above_lo = match self.lo {
            ExtendedReal::NegInf => true,
            ExtendedReal::PosInf => false,
            ExtendedReal::Finite(l) => {
                if self.lo_closed {
                    x >= l - tol
                } else {
                    x > l + tol
                }
            }
        };
        let below_hi = match self.hi {
            ExtendedReal::PosInf => true,
            ExtendedReal::NegInf => false,
            ExtendedReal::Finite(h) => {
                if self.hi_closed {
                    x <= h + tol
                } else {
                    x < h - tol
                }
            }
        };
        above_lo && below_hi
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawBorelSet {
    #[serde(default)]
    intervals: Vec<Interval>,
    #[serde(default)]
    points: Vec<f64>,
}

impl TryFrom<RawBorelSet> for BorelSet {
    type Error = SpectralError;

    fn try_from(raw: RawBorelSet) -> Result<Self, SpectralError> {
        BorelSet::new(raw.intervals, raw.points)
    }
}

impl From<BorelSet> for RawBorelSet {
    fn from(b: BorelSet) -> RawBorelSet {
        RawBorelSet { intervals: b.intervals, points: b.points }
    }
}

impl BorelSet {
    pub fn new(intervals: Vec<Interval>, points: Vec<f64>) -> Result<Self, SpectralError> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(SpectralError::NotAFamily("isolated points must be finite".into()));
        }
        let mut ivs: Vec<Interval> = intervals.into_iter().filter(|iv| !iv.is_empty()).collect();
        ivs.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::new();
        for iv in ivs {
            match merged.last_mut() {
                Some(prev) if overlaps_or_touches(prev, &iv) => {
                    if iv.hi > prev.hi || (iv.hi == prev.hi && iv.hi_closed) {
                        prev.hi = iv.hi;
                        prev.hi_closed = if iv.hi == prev.hi { iv.hi_closed || prev.hi_closed } else { iv.hi_closed };
                    }
                }
                _ => merged.push(iv),
            }
        }
        let mut pts: Vec<f64> = points;
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.retain(|x| !merged.iter().any(|iv| iv.contains_exact(*x)));
        Ok(BorelSet { intervals: merged, points: pts })
    }

    pub fn empty() -> Self {
        BorelSet { intervals: Vec::new(), points: Vec::new() }
    }

    /// The whole line.
    pub fn full() -> Self {
        BorelSet {
            intervals: vec![Interval {
                lo: ExtendedReal::NegInf,
                hi: ExtendedReal::PosInf,
                lo_closed: false,
                hi_closed: false,
            }],
            points: Vec::new(),
        }
    }

    pub fn of_points(pts: &[f64]) -> Self {
        BorelSet::new(Vec::new(), pts.to_vec()).expect("finite points")
    }

    pub fn interval(lo: ExtendedReal, hi: ExtendedReal, lo_closed: bool, hi_closed: bool) -> Self {
        BorelSet::new(vec![Interval { lo, hi, lo_closed, hi_closed }], Vec::new()).expect("one interval")
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn isolated_points(&self) -> &[f64] {
        &self.points
    }

    /// Membership with endpoint slack `tol`; see [`Interval::contains`].
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x, tol))
            || self.points.iter().any(|p| (x - p).abs() <= tol)
    }
}

fn overlaps_or_touches(a: &Interval, b: &Interval) -> bool {
    // Sorted by lower endpoint, so b.lo >= a.lo; they merge when b starts
    // before a ends, or exactly where a ends with at least one closed side.
    match b.lo.cmp(&a.hi) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Equal => b.lo_closed || a.hi_closed,
        std::cmp::Ordering::Greater => false,
    }
}

/// The projection-valued spectral measure of an operator, supported on its
/// clustered eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    dim: usize,
    decomp: Eigendecomposition,
}

impl SpectralMeasure {
    pub fn of(a: &HermitianOperator) -> Self {
        SpectralMeasure { dim: a.dim(), decomp: eig_hermitian(a, None) }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.decomp.eigenvalues
    }

    pub fn decomposition(&self) -> &Eigendecomposition {
        &self.decomp
    }

    /// Sum of the eigenprojections whose eigenvalue lies in `delta`, with
    /// membership decided at [`BREAKPOINT_TOL`].
    pub fn evaluate(&self, delta: &BorelSet) -> Projection {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (l, p) in self.decomp.eigenvalues.iter().zip(&self.decomp.projections) {
            if delta.contains(*l, BREAKPOINT_TOL) {
                acc += p.matrix();
            }
        }
        Projection::new(acc).expect("sums of orthogonal eigenprojections")
    }
}

/// `e^A(delta)` in one call.
pub fn spectral_measure(a: &HermitianOperator, delta: &BorelSet) -> Projection {
    SpectralMeasure::of(a).evaluate(delta)
}

/// A monotone piecewise-linear map on the reals, clamped to constants outside
/// its node range. As a map of extended reals it fixes `-inf` and sends
/// `inf` to its supremum, which is the join-preserving extension.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct MonotonePiecewiseLinear {
    nodes: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for MonotonePiecewiseLinear {
    type Error = SpectralError;

    fn try_from(nodes: Vec<(f64, f64)>) -> Result<Self, SpectralError> {
        MonotonePiecewiseLinear::new(nodes)
    }
}

impl From<MonotonePiecewiseLinear> for Vec<(f64, f64)> {
    fn from(f: MonotonePiecewiseLinear) -> Self {
        f.nodes
    }
}

impl MonotonePiecewiseLinear {
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self, SpectralError> {
        if nodes.is_empty() {
            return Err(SpectralError::NotMonotone("need at least one node".into()));
        }
        if nodes.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(SpectralError::NotMonotone("nodes must be finite".into()));
        }
        for w in nodes.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SpectralError::NotMonotone(format!(
                    "abscissas must strictly increase: {} then {}",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(SpectralError::NotMonotone(format!(
                    "ordinates must not decrease: {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        Ok(MonotonePiecewiseLinear { nodes })
    }

    pub fn identity(lo: f64, hi: f64) -> Self {
        MonotonePiecewiseLinear::new(vec![(lo, lo), (hi, hi)]).expect("identity nodes")
    }

    pub fn constant(c: f64) -> Self {
        MonotonePiecewiseLinear::new(vec![(0.0, c)]).expect("constant node")
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn eval(&self, x: f64) -> f64 {
        let first = self.nodes[0];
        let last = *self.nodes.last().expect("nonempty");
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        for w in self.nodes.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x <= x1 {
                let t = (x - x0) / (x1 - x0);
                return y0 + t * (y1 - y0);
            }
        }
        last.1
    }

    pub fn eval_ext(&self, x: ExtendedReal) -> ExtendedReal {
        match x {
            ExtendedReal::NegInf => ExtendedReal::NegInf,
            ExtendedReal::PosInf => ExtendedReal::Finite(self.nodes.last().expect("nonempty").1),
            ExtendedReal::Finite(v) => ExtendedReal::Finite(self.eval(v)),
        }
    }
}

/// `f(A)` by functional calculus: apply `f` to each clustered eigenvalue.
pub fn rescale_operator(a: &HermitianOperator, f: &MonotonePiecewiseLinear) -> HermitianOperator {
    let decomp = eig_hermitian(a, None);
    let mut acc = CMatrix::zeros(a.dim(), a.dim());
    for (l, p) in decomp.eigenvalues.iter().zip(&decomp.projections) {
        acc += p.matrix() * C64::new(f.eval(*l), 0.0);
    }
    HermitianOperator::new(acc).expect("functional calculus preserves Hermiticity")
}

#[derive(Clone, Debug)]
pub struct RescaleViolation {
    pub sample: usize,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
}

/// Outcome of replaying the rescaling law `o(f(A)) = f(o(A))`.
#[derive(Clone, Debug, Default)]
pub struct RescaleReport {
    pub checked: usize,
    pub violations: Vec<RescaleViolation>,
    pub notes: Vec<String>,
}

impl RescaleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the rescaling law on every eigenprojection of `A` plus the given
/// extra sample, comparing both sides at `tol`.
///
/// The zero projection is skipped when it appears in the sample: both sides
/// are `-inf` there by the join-preservation convention rather than by
/// computation, and the report records the skip.
pub fn rescale_check(
    a: &HermitianOperator,
    f: &MonotonePiecewiseLinear,
    extra: &[Projection],
    tol: f64,
) -> Result<RescaleReport, SpectralError> {
    let fa = rescale_operator(a, f);
    let o_a = QObservableFunction::of(a);
    let o_fa = QObservableFunction::of(&fa);
    let decomp = eig_hermitian(a, None);
    let mut report = RescaleReport::default();
    let samples: Vec<&Projection> = decomp.projections.iter().chain(extra.iter()).collect();
    for (i, p) in samples.into_iter().enumerate() {
        if p.is_zero(PROJECTION_TOL) {
            report.notes.push(format!(
                "sample {i}: zero projection skipped; both sides are -inf by convention"
            ));
            continue;
        }
        let lhs = o_fa.evaluate(p)?;
        let rhs = f.eval_ext(o_a.evaluate(p)?);
        report.checked += 1;
        if !lhs.approx_eq(rhs, tol) {
            report.violations.push(RescaleViolation { sample: i, lhs, rhs });
        }
    }
    Ok(report)
}
