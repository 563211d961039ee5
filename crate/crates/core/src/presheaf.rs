//! Context-indexed subobjects and the probability calculus over them.
//!
//! Over a fixed context poset, a clopen subobject picks a set of blocks in
//! every context, compatibly with restriction: whatever is picked in a fine
//! context must land inside what is picked in every coarsening. Projections
//! embed by outer approximation, states evaluate to antitone functions, and
//! the Born weight of a projection reappears as a minimum over contexts.
//!
//! Joins of subobjects are computed blockwise and are exact; meets are
//! blockwise too, and compatibility survives both, so no repair step is
//! needed. Negation splits into an intuitionistic pair: the largest
//! subobject missing `S` and the smallest one covering its complement,
//! which differ exactly when daseinisation has blurred `S` across blocks.

use crate::contexts::{Character, Context, ContextError, ContextPoset};
use crate::linop::{frobenius, HermitianOperator, LinopError, Projection};
use crate::order::ExtendedReal;
use crate::quantum::{DensityState, QuantumError, MASS_TOL};
use crate::spectral::{BorelSet, SpectralError, SpectralFamily, SpectralMeasure};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Overlap threshold deciding whether a block participates in the outer
/// approximation of a projection.
pub const DASEIN_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PresheafError {
    #[error("not a subobject: {0}")]
    NotASubobject(String),
    #[error("mismatched carriers: {0}")]
    DomainMismatch(String),
    #[error("no context contains the operator {0}")]
    MissingOperatorContext(String),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// A compatible choice of blocks in every context of a poset: restriction
/// maps what is chosen in a finer context into what is chosen in a coarser
/// one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClopenSubobject {
    chosen: Vec<BTreeSet<usize>>,
}

impl ClopenSubobject {
    pub fn new(poset: &ContextPoset, chosen: Vec<BTreeSet<usize>>) -> Result<Self, PresheafError> {
        let s = ClopenSubobject { chosen };
        s.validate(poset)?;
        Ok(s)
    }

    pub fn empty(poset: &ContextPoset) -> Self {
        ClopenSubobject { chosen: vec![BTreeSet::new(); poset.len()] }
    }

    pub fn top(poset: &ContextPoset) -> Self {
        ClopenSubobject {
            chosen: (0..poset.len()).map(|v| (0..poset.context(v).len()).collect()).collect(),
        }
    }

    fn validate(&self, poset: &ContextPoset) -> Result<(), PresheafError> {
        if self.chosen.len() != poset.len() {
            return Err(PresheafError::DomainMismatch(format!(
                "{} components for a poset of {} contexts",
                self.chosen.len(),
                poset.len()
            )));
        }
        for (v, set) in self.chosen.iter().enumerate() {
            if set.iter().any(|&i| i >= poset.context(v).len()) {
                return Err(PresheafError::NotASubobject(format!(
                    "block index out of range at {:?}",
                    poset.context(v).label()
                )));
            }
        }
        for w in 0..poset.len() {
            for v in 0..poset.len() {
                if v == w || !poset.leq(v, w) {
                    continue;
                }
                for &j in &self.chosen[w] {
                    let down = poset.restrict_character(Character { context: w, block: j }, v)?;
                    if !self.chosen[v].contains(&down.block) {
                        return Err(PresheafError::NotASubobject(format!(
                            "block {j} of {:?} restricts to block {} of {:?}, which is not chosen",
                            poset.context(w).label(),
                            down.block,
                            poset.context(v).label()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn blocks_at(&self, v: usize) -> &BTreeSet<usize> {
        &self.chosen[v]
    }

    pub fn components(&self) -> &[BTreeSet<usize>] {
        &self.chosen
    }

    pub fn leq(&self, other: &ClopenSubobject) -> bool {
        self.chosen.len() == other.chosen.len()
            && self.chosen.iter().zip(&other.chosen).all(|(a, b)| a.is_subset(b))
    }

    /// The projection this subobject stands for at one context.
    pub fn projection_at(&self, poset: &ContextPoset, v: usize) -> Projection {
        let ctx = poset.context(v);
        let mut sum = crate::linop::CMatrix::zeros(ctx.dim(), ctx.dim());
        for &i in &self.chosen[v] {
            sum += ctx.blocks()[i].matrix();
        }
        Projection::new(sum).expect("sums of orthogonal blocks project")
    }
}

/// Blocks of one context that see the projection at all: the indices whose
/// block does not annihilate it. Their sum is the smallest block sum
/// dominating the projection.
pub fn daseinise_to_context(p: &Projection, ctx: &Context) -> BTreeSet<usize> {
    let mut chosen = BTreeSet::new();
    for (i, b) in ctx.blocks().iter().enumerate() {
        if frobenius(&(b.matrix() * p.matrix())) > DASEIN_TOL {
            chosen.insert(i);
        }
    }
    chosen
}

/// Outer approximation of a projection across a whole poset. Compatibility
/// is automatic: a coarse block contains each fine block it dominates, so it
/// cannot annihilate anything the fine block sees.
pub fn daseinise(p: &Projection, poset: &ContextPoset) -> ClopenSubobject {
    ClopenSubobject {
        chosen: (0..poset.len()).map(|v| daseinise_to_context(p, poset.context(v))).collect(),
    }
}

/// Componentwise intersection. Compatibility is preserved: a block chosen in
/// both restricts into both components at every coarsening.
pub fn subobject_meet(
    poset: &ContextPoset,
    a: &ClopenSubobject,
    b: &ClopenSubobject,
) -> Result<ClopenSubobject, PresheafError> {
    ClopenSubobject::new(
        poset,
        a.chosen.iter().zip(&b.chosen).map(|(x, y)| x.intersection(y).copied().collect()).collect(),
    )
}

/// Componentwise union; preserved for the same reason as the meet.
pub fn subobject_join(
    poset: &ContextPoset,
    a: &ClopenSubobject,
    b: &ClopenSubobject,
) -> Result<ClopenSubobject, PresheafError> {
    ClopenSubobject::new(
        poset,
        a.chosen.iter().zip(&b.chosen).map(|(x, y)| x.union(y).copied().collect()).collect(),
    )
}

/// The largest genuine subobject inside an arbitrary per-context choice of
/// blocks: repeatedly deletes fine blocks whose restriction is not chosen
/// until nothing more is forced out.
#[allow(clippy::needless_range_loop)]
pub fn largest_subobject_below(
    poset: &ContextPoset,
    raw: Vec<BTreeSet<usize>>,
) -> Result<ClopenSubobject, PresheafError> {
    if raw.len() != poset.len() {
        return Err(PresheafError::DomainMismatch(format!(
            "{} components for a poset of {} contexts",
            raw.len(),
            poset.len()
        )));
    }
    for (v, set) in raw.iter().enumerate() {
        if set.iter().any(|&i| i >= poset.context(v).len()) {
            return Err(PresheafError::NotASubobject(format!(
                "block index out of range at {:?}",
                poset.context(v).label()
            )));
        }
    }
    let mut chosen = raw;
    loop {
        let mut changed = false;
        for w in 0..poset.len() {
            let mut keep = chosen[w].clone();
            for &j in &chosen[w] {
                for v in 0..poset.len() {
                    if v == w || !poset.leq(v, w) {
                        continue;
                    }
                    let down = poset.restrict_character(Character { context: w, block: j }, v)?;
                    if !chosen[v].contains(&down.block) {
                        keep.remove(&j);
                        break;
                    }
                }
            }
            if keep.len() != chosen[w].len() {
                chosen[w] = keep;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    ClopenSubobject::new(poset, chosen)
}

/// Intuitionistic complement: the largest subobject disjoint from `s`. A
/// block survives at `V` only if its image in every coarsening of `V`,
/// including `V` itself, avoids `s` there.
pub fn heyting_neg(poset: &ContextPoset, s: &ClopenSubobject) -> ClopenSubobject {
    let mut chosen = Vec::with_capacity(poset.len());
    for v in 0..poset.len() {
        let mut set = BTreeSet::new();
        'blocks: for j in 0..poset.context(v).len() {
            for u in 0..poset.len() {
                if !poset.leq(u, v) {
                    continue;
                }
                let down = poset
                    .restrict_character(Character { context: v, block: j }, u)
                    .expect("restriction along a tabulated inclusion");
                if s.chosen[u].contains(&down.block) {
                    continue 'blocks;
                }
            }
            set.insert(j);
        }
        chosen.push(set);
    }
    ClopenSubobject { chosen }
}

/// Co-intuitionistic complement: the smallest subobject that joins with `s`
/// to the top. A block enters at `V` if some refinement of `V` has an
/// unchosen block sitting inside it.
pub fn coheyting_neg(poset: &ContextPoset, s: &ClopenSubobject) -> ClopenSubobject {
    let mut chosen = Vec::with_capacity(poset.len());
    for v in 0..poset.len() {
        let mut set = BTreeSet::new();
        for j in 0..poset.context(v).len() {
            'finer: for w in 0..poset.len() {
                if !poset.leq(v, w) {
                    continue;
                }
                for k in 0..poset.context(w).len() {
                    if s.chosen[w].contains(&k) {
                        continue;
                    }
                    let down = poset
                        .restrict_character(Character { context: w, block: k }, v)
                        .expect("restriction along a tabulated inclusion");
                    if down.block == j {
                        set.insert(j);
                        break 'finer;
                    }
                }
            }
        }
        chosen.push(set);
    }
    ClopenSubobject { chosen }
}

/// The cumulative projections of an observable, pushed through outer
/// approximation into subobjects over a poset: `r` goes to the
/// approximation of the projection onto everything at or below `r`.
pub struct PresheafCdf<'a> {
    family: SpectralFamily,
    poset: &'a ContextPoset,
}

impl<'a> PresheafCdf<'a> {
    pub fn of(a: &HermitianOperator, poset: &'a ContextPoset) -> Self {
        PresheafCdf { family: SpectralFamily::of(a), poset }
    }

    pub fn from_family(family: SpectralFamily, poset: &'a ContextPoset) -> Self {
        PresheafCdf { family, poset }
    }

    pub fn family(&self) -> &SpectralFamily {
        &self.family
    }

    pub fn value_at(&self, r: ExtendedReal) -> ClopenSubobject {
        daseinise(&self.family.value_at(r), self.poset)
    }

    /// Least threshold whose cumulative subobject dominates `s`; the
    /// subobject analogue of the numeric quantile. On approximations of
    /// single projections it agrees with the plain scalar scan, because
    /// approximation and the cumulative family commute blockwise. Empty
    /// input gives negative infinity.
    pub fn quantile_of(&self, s: &ClopenSubobject) -> ExtendedReal {
        if s.leq(&self.value_at(ExtendedReal::NegInf)) {
            return ExtendedReal::NegInf;
        }
        for b in self.family.breakpoints() {
            if s.leq(&self.value_at(ExtendedReal::finite(*b))) {
                return ExtendedReal::finite(*b);
            }
        }
        ExtendedReal::PosInf
    }
}

/// Minimum over contexts of the state's weight on the approximated
/// cumulative projection. Equals the plain numeric CDF whenever some context
/// contains the observable, since there the approximation is exact and
/// every other context can only overshoot.
pub fn breve_cdf(
    rho: &DensityState,
    family: &SpectralFamily,
    poset: &ContextPoset,
    r: ExtendedReal,
) -> f64 {
    let e = family.value_at(r);
    (0..poset.len())
        .map(|v| {
            let s = daseinise_to_context(&e, poset.context(v));
            let mut mass = 0.0;
            for &i in &s {
                mass += rho.mass(&poset.context(v).blocks()[i]);
            }
            mass.clamp(0.0, 1.0)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Least breakpoint at which [`breve_cdf`] reaches `s`, with the same mass
/// slack as the chain quantile.
pub fn breve_quantile(
    rho: &DensityState,
    family: &SpectralFamily,
    poset: &ContextPoset,
    s: f64,
) -> Result<ExtendedReal, PresheafError> {
    if !((-MASS_TOL)..=1.0 + MASS_TOL).contains(&s) {
        return Err(QuantumError::OutOfRange(format!("probability {s} outside [0, 1]")).into());
    }
    if 0.0 >= s - MASS_TOL {
        return Ok(ExtendedReal::NegInf);
    }
    for &b in family.breakpoints() {
        if breve_cdf(rho, family, poset, ExtendedReal::finite(b)) >= s - MASS_TOL {
            return Ok(ExtendedReal::finite(b));
        }
    }
    Ok(ExtendedReal::PosInf)
}

/// A number per context; the shape measures of subobjects take.
#[derive(Clone, Debug, PartialEq)]
pub struct AntitoneFunction {
    values: Vec<f64>,
}

impl AntitoneFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// First pair `(coarser, finer)` whose values increase upward, violating
    /// antitonicity; `None` when the function is antitone within `tol`.
    pub fn antitone_violation(&self, poset: &ContextPoset, tol: f64) -> Option<(usize, usize)> {
        for v in 0..poset.len() {
            for w in 0..poset.len() {
                if v != w && poset.leq(v, w) && self.values[v] < self.values[w] - tol {
                    return Some((v, w));
                }
            }
        }
        None
    }
}

/// A state read as a measure on subobjects over a fixed poset: each
/// subobject evaluates to its per-context weights, which always decrease
/// toward coarser contexts.
pub struct MeasureOnSig<'a> {
    state: DensityState,
    poset: &'a ContextPoset,
}

impl<'a> MeasureOnSig<'a> {
    pub fn new(state: DensityState, poset: &'a ContextPoset) -> Self {
        MeasureOnSig { state, poset }
    }

    pub fn state(&self) -> &DensityState {
        &self.state
    }

    pub fn poset(&self) -> &'a ContextPoset {
        self.poset
    }

    pub fn evaluate(&self, s: &ClopenSubobject) -> AntitoneFunction {
        AntitoneFunction {
            values: (0..self.poset.len())
                .map(|v| self.state.mass(&s.projection_at(self.poset, v)))
                .collect(),
        }
    }

    /// Mixture of two measures over the same poset; evaluation is affine in
    /// the state, so this is the pointwise mixture of the two functions.
    pub fn convex_combine(
        &self,
        other: &MeasureOnSig<'a>,
        t: f64,
    ) -> Result<MeasureOnSig<'a>, PresheafError> {
        if !std::ptr::eq(self.poset, other.poset) {
            return Err(PresheafError::DomainMismatch(
                "measures live over different posets".into(),
            ));
        }
        Ok(MeasureOnSig { state: self.state.mix(&other.state, t)?, poset: self.poset })
    }
}

/// Where the Born weight of an observable-in-a-set comes from, context by
/// context: the subobject picked out, its weight everywhere, and the
/// minimum with the context achieving it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BornReport {
    pub contexts: Vec<String>,
    pub inclusion_edges: Vec<(String, String)>,
    pub subobject: BTreeMap<String, Vec<usize>>,
    pub measure: BTreeMap<String, f64>,
    pub minimum: f64,
    pub argmin: String,
}

/// Evaluates the Born weight of `a` landing in `delta` through the context
/// machinery. Requires some context of the poset to contain `a`; the
/// minimum over contexts then reproduces `tr(rho P)` for the spectral
/// projection `P`, attained at such a context.
pub fn born_report(
    rho: &DensityState,
    a: &HermitianOperator,
    delta: &BorelSet,
    poset: &ContextPoset,
) -> Result<BornReport, PresheafError> {
    if poset.context_of_operator(a).is_none() {
        return Err(PresheafError::MissingOperatorContext(format!("dim {}", a.dim())));
    }
    let p = SpectralMeasure::of(a).evaluate(delta);
    let sub = daseinise(&p, poset);
    let measure = MeasureOnSig::new(rho.clone(), poset).evaluate(&sub);
    let minimum = measure.min();
    let argmin = (0..poset.len())
        .find(|&v| measure.value_at(v) <= minimum + MASS_TOL)
        .expect("some context attains the minimum");
    Ok(BornReport {
        contexts: poset.contexts().iter().map(|c| c.label().to_string()).collect(),
        inclusion_edges: poset
            .inclusion_edges()
            .into_iter()
            .map(|(lo, hi)| {
                (poset.context(lo).label().to_string(), poset.context(hi).label().to_string())
            })
            .collect(),
        subobject: (0..poset.len())
            .map(|v| {
                (
                    poset.context(v).label().to_string(),
                    sub.blocks_at(v).iter().copied().collect(),
                )
            })
            .collect(),
        measure: (0..poset.len())
            .map(|v| (poset.context(v).label().to_string(), measure.value_at(v)))
            .collect(),
        minimum,
        argmin: poset.context(argmin).label().to_string(),
    })
}

/// Enumerates every global section: one block per context, consistent
/// under all restriction maps. Plain backtracking over contexts in index
/// order; the result is empty when no compatible choice exists.
pub fn global_section_search(poset: &ContextPoset) -> Vec<Vec<usize>> {
    fn consistent(poset: &ContextPoset, chosen: &[Option<usize>]) -> bool {
        for (w, cw) in chosen.iter().enumerate() {
            let Some(jw) = *cw else { continue };
            for (v, cv) in chosen.iter().enumerate() {
                let Some(jv) = *cv else { continue };
                if v != w && poset.leq(v, w) {
                    let down = poset
                        .restrict_character(Character { context: w, block: jw }, v)
                        .expect("restriction along a tabulated inclusion");
                    if down.block != jv {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn step(
        poset: &ContextPoset,
        chosen: &mut Vec<Option<usize>>,
        next: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if next == poset.len() {
            out.push(chosen.iter().map(|c| c.expect("filled by the search")).collect());
            return;
        }
        for j in 0..poset.context(next).len() {
            chosen[next] = Some(j);
            if consistent(poset, chosen) {
                step(poset, chosen, next + 1, out);
            }
        }
        chosen[next] = None;
    }

    let mut chosen = vec![None; poset.len()];
    let mut out = Vec::new();
    step(poset, &mut chosen, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::ClosurePolicy;
    use crate::linop::{proj_join, proj_leq_tol, C64};
    use crate::quantum::quantum_cdf;
    use crate::spectral::q_observable;
    use crate::sampling::{random_projection, rng_from_seed};

    fn coord(dim: usize, ix: &[usize]) -> Projection {
        Projection::coordinate(dim, ix)
    }

    /// Vz and Vx for a qubit: incomparable, no closure additions.
    fn qubit_poset() -> ContextPoset {
        let vz = Context::from_commuting("Vz", &[HermitianOperator::diag(&[1.0, 3.0])]).unwrap();
        let x_plus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let x_minus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unwrap();
        let vx = Context::new("Vx", vec![x_plus, x_minus]).unwrap();
        ContextPoset::build(vec![vz, vx], ClosurePolicy::None).unwrap()
    }

    /// A three-block context with all its proper coarsenings.
    fn qutrit_poset() -> ContextPoset {
        let fine =
            Context::new("V", vec![coord(3, &[0]), coord(3, &[1]), coord(3, &[2])]).unwrap();
        ContextPoset::build(vec![fine], ClosurePolicy::Coarsenings).unwrap()
    }

    #[test]
    fn outer_approximation_dominates_blockwise() {
        let poset = qubit_poset();
        let x_plus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let sub = daseinise(&x_plus, &poset);
        let vz = poset.index_of("Vz").unwrap();
        let vx = poset.index_of("Vx").unwrap();
        // In its own context the approximation is exact; in the
        // incompatible one it blurs to the identity.
        assert_eq!(sub.blocks_at(vx).len(), 1);
        assert_eq!(sub.blocks_at(vz).len(), 2);
        for v in 0..poset.len() {
            assert!(proj_leq_tol(&x_plus, &sub.projection_at(&poset, v), 1e-9).unwrap());
        }
        assert_eq!(daseinise(&Projection::zero(2), &poset), ClopenSubobject::empty(&poset));
        assert_eq!(daseinise(&Projection::identity(2), &poset), ClopenSubobject::top(&poset));
    }

    #[test]
    fn incompatible_choices_fail_validation() {
        let poset = qutrit_poset();
        let fine = poset.index_of("V").unwrap();
        let mut chosen: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); poset.len()];
        // Choose a fine block but nothing anywhere else: its restriction to
        // every coarsening is missing.
        chosen[fine].insert(0);
        let err = ClopenSubobject::new(&poset, chosen.clone()).unwrap_err();
        assert!(matches!(err, PresheafError::NotASubobject(_)));
        // The repair keeps nothing.
        let fixed = largest_subobject_below(&poset, chosen).unwrap();
        assert_eq!(fixed, ClopenSubobject::empty(&poset));
    }

    #[test]
    fn repair_keeps_what_is_already_compatible() {
        let poset = qutrit_poset();
        let e0 = coord(3, &[0]);
        let sub = daseinise(&e0, &poset);
        let repaired = largest_subobject_below(&poset, sub.components().to_vec()).unwrap();
        assert_eq!(repaired, sub);
        // Adding stray fine blocks without their coarse support gets
        // trimmmed back.
        let mut raw = sub.components().to_vec();
        let fine = poset.index_of("V").unwrap();
        raw[fine] = (0..3).collect();
        let trimmed = largest_subobject_below(&poset, raw).unwrap();
        assert!(sub.leq(&trimmed));
        assert!(trimmed.validate(&poset).is_ok());
    }

    #[test]
    fn joins_of_approximations_are_exact() {
        let mut rng = rng_from_seed(11);
        let poset = qutrit_poset();
        for _ in 0..20 {
            let p = random_projection(&mut rng, 3);
            let q = random_projection(&mut rng, 3);
            let join = proj_join(&p, &q).unwrap();
            let lhs = daseinise(&join, &poset);
            let rhs =
                subobject_join(&poset, &daseinise(&p, &poset), &daseinise(&q, &poset)).unwrap();
            assert_eq!(lhs, rhs);
            // Monotone in both arguments.
            assert!(daseinise(&p, &poset).leq(&lhs));
            assert!(daseinise(&q, &poset).leq(&lhs));
        }
    }

    #[test]
    fn meets_of_approximations_only_shrink() {
        // Two rays meeting in zero whose approximations share blocks: the
        // approximation of the meet is empty, the meet of approximations is
        // not.
        let poset = qubit_poset();
        let x_plus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let tilted = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]).unwrap();
        let meet_first = daseinise(&crate::linop::proj_meet(&x_plus, &tilted).unwrap(), &poset);
        let meet_after = subobject_meet(&poset, &daseinise(&x_plus, &poset), &daseinise(&tilted, &poset)).unwrap();
        assert_eq!(meet_first, ClopenSubobject::empty(&poset));
        assert!(meet_first.leq(&meet_after));
        assert_ne!(meet_first, meet_after);
    }

    /// All valid subobjects of a small poset, by brute enumeration.
    fn enumerate_subobjects(poset: &ContextPoset) -> Vec<ClopenSubobject> {
        let sizes: Vec<usize> = (0..poset.len()).map(|v| poset.context(v).len()).collect();
        let total: usize = sizes.iter().map(|n| 1usize << n).product();
        assert!(total <= 1 << 13, "enumeration would be too large");
        let mut out = Vec::new();
        for code in 0..total {
            let mut rem = code;
            let mut chosen = Vec::with_capacity(poset.len());
            for &n in &sizes {
                let mask = rem % (1 << n);
                rem /= 1 << n;
                chosen.push((0..n).filter(|i| mask >> i & 1 == 1).collect::<BTreeSet<_>>());
            }
            if let Ok(s) = ClopenSubobject::new(poset, chosen) {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn negation_is_the_largest_disjoint_subobject() {
        let poset = qutrit_poset();
        let all = enumerate_subobjects(&poset);
        assert!(all.len() > 2);
        for s in &all {
            let neg = heyting_neg(&poset, s);
            assert!(neg.validate(&poset).is_ok());
            assert_eq!(
                subobject_meet(&poset, s, &neg).unwrap(),
                ClopenSubobject::empty(&poset)
            );
            for t in &all {
                let disjoint = subobject_meet(&poset, s, t).unwrap()
                    == ClopenSubobject::empty(&poset);
                if disjoint {
                    assert!(t.leq(&neg), "a disjoint subobject escaped the negation");
                }
            }
            // Double negation can grow but never shrink.
            assert!(s.leq(&heyting_neg(&poset, &neg)));
        }
    }

    #[test]
    fn conegation_is_the_smallest_covering_subobject() {
        let poset = qutrit_poset();
        let all = enumerate_subobjects(&poset);
        let top = ClopenSubobject::top(&poset);
        for s in &all {
            let coneg = coheyting_neg(&poset, s);
            assert!(coneg.validate(&poset).is_ok());
            assert_eq!(subobject_join(&poset, s, &coneg).unwrap(), top);
            for t in &all {
                if subobject_join(&poset, s, t).unwrap() == top {
                    assert!(coneg.leq(t), "a covering subobject undercut the conegation");
                }
            }
            // Double conegation can shrink but never grow.
            assert!(coheyting_neg(&poset, &coneg).leq(s));
        }
    }

    #[test]
    fn the_two_negations_differ_once_inclusions_bite() {
        // On an antichain both negations collapse to the componentwise
        // complement; inclusions are what pulls them apart. Here the
        // complement of a ray keeps nothing at the fine context under the
        // strict negation, while the lax one keeps everything missing it.
        let poset = qutrit_poset();
        let s = daseinise(&coord(3, &[0]), &poset);
        let neg = heyting_neg(&poset, &s);
        let coneg = coheyting_neg(&poset, &s);
        assert!(neg.leq(&coneg));
        assert_ne!(neg, coneg);
        let fine = poset.index_of("V").unwrap();
        assert!(neg.blocks_at(fine).is_empty());
        assert_eq!(coneg.blocks_at(fine).len(), 2);
    }

    #[test]
    fn presheaf_cdf_is_constant_between_jumps() {
        let poset = qubit_poset();
        let a = HermitianOperator::diag(&[1.0, 3.0]);
        let cdf = PresheafCdf::of(&a, &poset);
        assert_eq!(cdf.value_at(ExtendedReal::NegInf), ClopenSubobject::empty(&poset));
        assert_eq!(cdf.value_at(ExtendedReal::PosInf), ClopenSubobject::top(&poset));
        let at_one = cdf.value_at(ExtendedReal::finite(1.0));
        assert_eq!(at_one, cdf.value_at(ExtendedReal::finite(1.5)));
        assert_eq!(at_one, cdf.value_at(ExtendedReal::finite(2.999)));
        assert_ne!(at_one, cdf.value_at(ExtendedReal::finite(3.0)));
        assert_eq!(cdf.value_at(ExtendedReal::finite(3.0)), ClopenSubobject::top(&poset));
    }

    #[test]
    fn minimum_over_contexts_recovers_the_numeric_cdf() {
        let poset = qubit_poset();
        let rho = DensityState::diagonal(&[0.7, 0.3]).unwrap();
        let a = HermitianOperator::diag(&[1.0, 3.0]);
        let fam = SpectralFamily::of(&a);
        for r in [
            ExtendedReal::NegInf,
            ExtendedReal::finite(0.0),
            ExtendedReal::finite(1.0),
            ExtendedReal::finite(2.0),
            ExtendedReal::finite(3.0),
            ExtendedReal::PosInf,
        ] {
            let plain = quantum_cdf(&rho, &fam, r);
            let breve = breve_cdf(&rho, &fam, &poset, r);
            assert!(
                (plain - breve).abs() < 1e-9,
                "at {r}: plain {plain}, over contexts {breve}"
            );
        }
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let plain = crate::quantum::quantum_quantile(&rho, &fam, s).unwrap();
            let breve = breve_quantile(&rho, &fam, &poset, s).unwrap();
            assert!(plain.approx_eq(breve, 1e-9), "at mass {s}: {plain} vs {breve}");
        }
    }

    #[test]
    fn subobject_quantile_agrees_with_the_projection_scan() {
        let poset = qubit_poset();
        let a = HermitianOperator::diag(&[1.0, 3.0]);
        let cdf = PresheafCdf::of(&a, &poset);

        assert_eq!(cdf.quantile_of(&ClopenSubobject::empty(&poset)), ExtendedReal::NegInf);
        assert_eq!(cdf.quantile_of(&ClopenSubobject::top(&poset)), ExtendedReal::finite(3.0));

        let mut rng = rng_from_seed(11);
        let mut probes = vec![
            Projection::coordinate(2, &[0]),
            Projection::coordinate(2, &[1]),
            Projection::identity(2),
        ];
        for _ in 0..10 {
            probes.push(random_projection(&mut rng, 2));
        }
        for p in &probes {
            if p.rank() == 0 {
                continue;
            }
            let direct = q_observable(&a, p).unwrap();
            let lifted = cdf.quantile_of(&daseinise(p, &poset));
            assert_eq!(lifted, direct, "scans split on a rank {} projection", p.rank());
        }
    }

    #[test]
    fn dropping_the_home_context_inflates_the_minimum() {
        // Only the incompatible context remains: the approximation
        // overshoots and the minimum with it.
        let x_plus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let x_minus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unwrap();
        let vx = Context::new("Vx", vec![x_plus, x_minus]).unwrap();
        let poset = ContextPoset::build(vec![vx], ClosurePolicy::None).unwrap();
        let rho = DensityState::diagonal(&[0.7, 0.3]).unwrap();
        let a = HermitianOperator::diag(&[1.0, 3.0]);
        let fam = SpectralFamily::of(&a);
        let plain = quantum_cdf(&rho, &fam, ExtendedReal::finite(1.0));
        let breve = breve_cdf(&rho, &fam, &poset, ExtendedReal::finite(1.0));
        assert!((plain - 0.7).abs() < 1e-12);
        // E(1) = e0 seeds both x blocks, so the approximation is the
        // identity and the only context reports full mass.
        assert!((breve - 1.0).abs() < 1e-12);
        assert!(breve > plain + 0.1);
    }

    #[test]
    fn measures_decrease_toward_coarser_contexts() {
        let poset = qutrit_poset();
        let mut rng = rng_from_seed(23);
        for seed in 0..10u64 {
            let rho = DensityState::new(crate::sampling::random_density_matrix(
                &mut rng, 3,
            ))
            .unwrap();
            let p = random_projection(&mut rng, 3);
            let sub = daseinise(&p, &poset);
            let m = MeasureOnSig::new(rho, &poset).evaluate(&sub);
            assert_eq!(m.antitone_violation(&poset, 1e-9), None, "seed {seed}");
        }
    }

    #[test]
    fn measure_of_top_is_one_everywhere() {
        let poset = qubit_poset();
        let rho = DensityState::maximally_mixed(2);
        let m = MeasureOnSig::new(rho, &poset).evaluate(&ClopenSubobject::top(&poset));
        for v in 0..poset.len() {
            assert!((m.value_at(v) - 1.0).abs() < 1e-12);
        }
        let z = MeasureOnSig::new(DensityState::maximally_mixed(2), &poset)
            .evaluate(&ClopenSubobject::empty(&poset));
        assert_eq!(z.min(), 0.0);
    }

    #[test]
    fn convex_combinations_mix_pointwise() {
        let poset = qubit_poset();
        let m1 = MeasureOnSig::new(DensityState::diagonal(&[1.0, 0.0]).unwrap(), &poset);
        let m2 = MeasureOnSig::new(DensityState::diagonal(&[0.0, 1.0]).unwrap(), &poset);
        let mixed = m1.convex_combine(&m2, 0.25).unwrap();
        let x_plus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let s = daseinise(&x_plus, &poset);
        let a = m1.evaluate(&s);
        let b = m2.evaluate(&s);
        let c = mixed.evaluate(&s);
        for v in 0..poset.len() {
            let want = 0.25 * a.value_at(v) + 0.75 * b.value_at(v);
            assert!((c.value_at(v) - want).abs() < 1e-12);
        }
        let other = qubit_poset();
        let m3 = MeasureOnSig::new(DensityState::maximally_mixed(2), &other);
        assert!(matches!(
            m1.convex_combine(&m3, 0.5),
            Err(PresheafError::DomainMismatch(_))
        ));
    }

    #[test]
    fn born_weight_is_the_minimum_over_contexts() {
        let poset = qubit_poset();
        let rho = DensityState::diagonal(&[0.7, 0.3]).unwrap();
        let a = HermitianOperator::diag(&[1.0, 3.0]);
        let report = born_report(&rho, &a, &BorelSet::of_points(&[3.0]), &poset).unwrap();
        assert!((report.minimum - 0.3).abs() < 1e-9);
        assert_eq!(report.argmin, "Vz");
        assert_eq!(report.measure["Vz"], report.minimum);
        assert!((report.measure["Vx"] - 1.0).abs() < 1e-9);
        assert_eq!(report.subobject["Vz"], vec![1]);
        assert_eq!(report.subobject["Vx"], vec![0, 1]);
        assert!(report.inclusion_edges.is_empty());
        // Direct agreement with the plain pairing.
        let direct = crate::quantum::pairing(&rho, &a, &BorelSet::of_points(&[3.0]));
        assert!((report.minimum - direct).abs() < 1e-9);
    }

    #[test]
    fn born_report_requires_a_home_context() {
        let x_plus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let x_minus = Projection::onto_vector(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unwrap();
        let vx = Context::new("Vx", vec![x_plus, x_minus]).unwrap();
        let poset = ContextPoset::build(vec![vx], ClosurePolicy::None).unwrap();
        let rho = DensityState::maximally_mixed(2);
        let a = HermitianOperator::diag(&[1.0, 3.0]);
        let err = born_report(&rho, &a, &BorelSet::full(), &poset).unwrap_err();
        assert!(matches!(err, PresheafError::MissingOperatorContext(_)));
    }

    #[test]
    fn global_sections_exist_for_compatible_families() {
        // One fine choice forces every coarsening, so the qutrit poset has
        // exactly one section per fine block.
        let poset = qutrit_poset();
        let sections = global_section_search(&poset);
        assert_eq!(sections.len(), 3);
        for section in &sections {
            for w in 0..poset.len() {
                for v in 0..poset.len() {
                    if v != w && poset.leq(v, w) {
                        let down = poset
                            .restrict_character(
                                Character { context: w, block: section[w] },
                                v,
                            )
                            .unwrap();
                        assert_eq!(down.block, section[v]);
                    }
                }
            }
        }
        // Incomparable contexts impose no constraints at all: every
        // combination of block choices goes through.
        assert_eq!(global_section_search(&qubit_poset()).len(), 4);
    }

    #[test]
    fn report_serialization_is_stable() {
        let poset = qubit_poset();
        let rho = DensityState::diagonal(&[0.7, 0.3]).unwrap();
        let a = HermitianOperator::diag(&[1.0, 3.0]);
        let report = born_report(&rho, &a, &BorelSet::of_points(&[1.0]), &poset).unwrap();
        let one = serde_json::to_string(&report).unwrap();
        let two = serde_json::to_string(
            &born_report(&rho, &a, &BorelSet::of_points(&[1.0]), &poset).unwrap(),
        )
        .unwrap();
        assert_eq!(one, two);
        let back: BornReport = serde_json::from_str(&one).unwrap();
        assert_eq!(back.argmin, report.argmin);
    }

    mod random_projections {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn approximation_laws_hold(seed in 0u64..4000) {
                let mut rng = rng_from_seed(seed);
                let poset = qutrit_poset();
                let p = random_projection(&mut rng, 3);
                let q = random_projection(&mut rng, 3);
                let dp = daseinise(&p, &poset);
                prop_assert!(dp.validate(&poset).is_ok());
                // Blockwise domination.
                for v in 0..poset.len() {
                    prop_assert!(proj_leq_tol(&p, &dp.projection_at(&poset, v), 1e-8).unwrap());
                }
                // Monotone.
                let join = proj_join(&p, &q).unwrap();
                prop_assert!(dp.leq(&daseinise(&join, &poset)));
                // Join exact.
                let dq = daseinise(&q, &poset);
                prop_assert_eq!(
                    daseinise(&join, &poset),
                    subobject_join(&poset, &dp, &dq).unwrap()
                );
            }
        }
    }
}
