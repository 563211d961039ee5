//! Density states and the state-side probability calculus.
//!
//! A state assigns each projection its occupation probability `tr(rho P)`.
//! Composing with a cumulative projection family gives a numeric CDF, and
//! scanning the family for the first projection of given mass gives the
//! quantile. The scan must stay on the family's chain: the unrestricted
//! variant that meets over arbitrary qualifying projections is provided too,
//! precisely because it collapses, see [`kappa_rho_global`].

use crate::linop::{proj_meet_set, trace_re, CMatrix, HermitianOperator, LinopError, Projection};
use crate::order::ExtendedReal;
use crate::spectral::{BorelSet, SpectralError, SpectralFamily, SpectralMeasure};
use thiserror::Error;

/// Slack for comparing occupation probabilities against thresholds. Shared by
/// the quantile and both event-quantile scans so they qualify the same
/// projections.
pub const MASS_TOL: f64 = 1e-9;

/// Eigenvalue floor and trace tolerance for admitting a density matrix.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Linop(#[from] LinopError),
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    mat: CMatrix,
}

impl DensityState {
    pub fn new(mat: CMatrix) -> Result<Self, QuantumError> {
        let herm = HermitianOperator::new(mat)
            .map_err(|e| QuantumError::NotAState(format!("not Hermitian: {e}")))?;
        let eig = crate::linop::eig_hermitian(&herm, None);
        if let Some(l) = eig.eigenvalues.iter().find(|l| **l < -STATE_TOL) {
            return Err(QuantumError::NotAState(format!("negative eigenvalue {l}")));
        }
        let tr = trace_re(herm.matrix());
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::NotAState(format!("trace {tr} is not 1")));
        }
        Ok(DensityState { mat: herm.matrix().clone() })
    }

    /// Rank-one state along the given vector, normalized here.
    pub fn pure(v: &[crate::linop::C64]) -> Result<Self, QuantumError> {
        let p = Projection::onto_vector(v)
            .map_err(|e| QuantumError::NotAState(format!("bad state vector: {e}")))?;
        DensityState::new(p.matrix().clone())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let w = 1.0 / dim as f64;
        DensityState::diagonal(&vec![w; dim]).expect("uniform weights")
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self, QuantumError> {
        DensityState::new(HermitianOperator::diag(weights).matrix().clone())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Occupation probability of a projection, clamped into `[0, 1]`.
    pub fn mass(&self, p: &Projection) -> f64 {
        trace_re(&(&self.mat * p.matrix())).clamp(0.0, 1.0)
    }

    pub fn expectation(&self, a: &HermitianOperator) -> f64 {
        trace_re(&(&self.mat * a.matrix()))
    }

    /// Mixes two states with weight `t` on `self`.
    pub fn mix(&self, other: &DensityState, t: f64) -> Result<Self, QuantumError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(QuantumError::OutOfRange(format!("mixing weight {t}")));
        }
        if self.dim() != other.dim() {
            return Err(QuantumError::NotAState("dimension mismatch in mixture".into()));
        }
        let s = nalgebra::Complex::new(t, 0.0);
        let o = nalgebra::Complex::new(1.0 - t, 0.0);
        DensityState::new(&self.mat * s + &other.mat * o)
    }
}

/// `tr(rho P)`, the Born weight of a projection in a state.
pub fn mu_rho(rho: &DensityState, p: &Projection) -> f64 {
    rho.mass(p)
}

fn check_mass_arg(s: f64) -> Result<(), QuantumError> {
    if !((-MASS_TOL)..=1.0 + MASS_TOL).contains(&s) {
        return Err(QuantumError::OutOfRange(format!("probability {s} outside [0, 1]")));
    }
    Ok(())
}

fn reaches(mass: f64, s: f64) -> bool {
    mass >= s - MASS_TOL
}

/// Numeric CDF of an observable in a state: the mass of the cumulative
/// projection at `r`.
pub fn quantum_cdf(rho: &DensityState, family: &SpectralFamily, r: ExtendedReal) -> f64 {
    rho.mass(&family.value_at(r))
}

/// Smallest projection on the cumulative chain whose mass reaches `s`. The
/// chain starts at the zero projection, so `s = 0` returns it.
pub fn kappa_rho_chain(
    rho: &DensityState,
    family: &SpectralFamily,
    s: f64,
) -> Result<Projection, QuantumError> {
    check_mass_arg(s)?;
    let zero = Projection::zero(family.dim());
    if reaches(rho.mass(&zero), s) {
        return Ok(zero);
    }
    for p in family.cumulative() {
        if reaches(rho.mass(p), s) {
            return Ok(p.clone());
        }
    }
    // The chain tops out at the identity, whose mass is one.
    Ok(Projection::identity(family.dim()))
}

/// Meet of every sampled projection whose mass reaches `s`, with no chain
/// restriction. The identity always qualifies, so an empty sample gives it.
///
/// This is the operator analogue of intersecting all events of mass `>= s`,
/// and it breaks the same way: two qualifying projections can meet in the
/// zero projection, leaving a result whose own mass is far below `s`. Kept
/// as the counterexample generator for that failure.
pub fn kappa_rho_global(
    rho: &DensityState,
    s: f64,
    sample: &[Projection],
) -> Result<Projection, QuantumError> {
    check_mass_arg(s)?;
    let dim = sample.first().map_or(rho.dim(), Projection::dim);
    let qualifying: Vec<Projection> =
        sample.iter().filter(|p| reaches(rho.mass(p), s)).cloned().collect();
    Ok(proj_meet_set(dim, &qualifying)?)
}

/// Numeric quantile: the least `r` at which the CDF reaches `s`, read off
/// the cumulative chain with the same mass comparisons as
/// [`kappa_rho_chain`].
pub fn quantum_quantile(
    rho: &DensityState,
    family: &SpectralFamily,
    s: f64,
) -> Result<ExtendedReal, QuantumError> {
    check_mass_arg(s)?;
    if reaches(0.0, s) {
        return Ok(ExtendedReal::NegInf);
    }
    for (p, b) in family.cumulative().iter().zip(family.breakpoints()) {
        if reaches(rho.mass(p), s) {
            return Ok(ExtendedReal::finite(*b));
        }
    }
    Err(QuantumError::OutOfRange(format!(
        "cumulative chain never reaches mass {s}; family does not top out at the identity"
    )))
}

/// Probability that a measurement of `a` in state `rho` lands in `delta`.
pub fn pairing(rho: &DensityState, a: &HermitianOperator, delta: &BorelSet) -> f64 {
    rho.mass(&SpectralMeasure::of(a).evaluate(delta))
}
