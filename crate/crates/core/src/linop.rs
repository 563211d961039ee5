//! Dense complex Hermitian operators, their eigendecompositions, and the
//! lattice of orthogonal projections.
//!
//! Projections ordered by `P <= Q iff QP = P` form a complete orthomodular
//! lattice. Meets and joins are computed spectrally: the meet projects onto
//! the kernel of `(1 - P) + (1 - Q)` and the join onto the support of
//! `P + Q`. Every rank decision is made at a relative tolerance so that the
//! results are stable under the usual floating-point noise.

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Allowed asymmetry `max |M[i][j] - conj(M[j][i])|` at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation from idempotency for projections, and the default slack
/// for the order comparison `QP = P`.
pub const PROJECTION_TOL: f64 = 1e-9;
/// Relative eigenvalue threshold for kernel and support decisions.
pub const RANK_REL_TOL: f64 = 1e-9;
/// Absolute floor under the rank threshold, so that matrices that are zero up
/// to roundoff report an empty support instead of rank read from noise.
pub const RANK_ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinopError {
    #[error("matrix is not Hermitian: asymmetry {0:.3e}")]
    NotHermitian(f64),
    #[error("matrix is not a projection: {0}")]
    NotProjection(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("matrix must be square and finite")]
    BadShape,
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// Frobenius distance between two matrices of equal shape.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b))
}

pub fn mats_close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && frobenius_distance(a, b) <= tol
}

/// Real part of the trace.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

/// `|| AB - BA ||` in Frobenius norm.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a * b - b * a))
}

/// Row-major nested-array form with each entry as `[re, im]`, the wire
/// encoding used for matrices.
pub fn cmatrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn cmatrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, LinopError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(LinopError::BadShape);
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// A finite-dimensional self-adjoint operator.
///
/// Construction symmetrizes the input as `(M + M*) / 2` after checking that
/// the asymmetry is below [`HERMITIAN_TOL`], so stored matrices are exactly
/// Hermitian.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    pub fn new(mat: CMatrix) -> Result<Self, LinopError> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(LinopError::BadShape);
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinopError::BadShape);
        }
        let adj = mat.adjoint();
        let asym = (0..mat.nrows())
            .flat_map(|i| (0..mat.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (mat[(i, j)] - adj[(i, j)]).norm())
            .fold(0.0f64, f64::max);
        if asym > HERMITIAN_TOL {
            return Err(LinopError::NotHermitian(asym));
        }
        Ok(HermitianOperator { mat: (&mat + adj) * C64::new(0.5, 0.0) })
    }

    /// Diagonal operator with the given real diagonal.
    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        assert!(n > 0, "diagonal operator needs at least one entry");
        let mat = CMatrix::from_fn(n, n, |i, j| {
            if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        HermitianOperator { mat }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator { mat: CMatrix::identity(dim, dim) }
    }

    pub fn zero(dim: usize) -> Self {
        HermitianOperator { mat: CMatrix::zeros(dim, dim) }
    }

    /// Real symmetric input given row by row; panics if the rows are ragged
    /// or asymmetric beyond [`HERMITIAN_TOL`].
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mat = CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0));
        HermitianOperator::new(mat).expect("real symmetric input")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.mat)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        mats_close(&self.mat, &other.mat, tol)
    }
}

/// An orthogonal projection, validated to be Hermitian and idempotent within
/// [`PROJECTION_TOL`].
#[derive(Clone, Debug)]
pub struct Projection {
    mat: CMatrix,
}

impl Projection {
    pub fn new(mat: CMatrix) -> Result<Self, LinopError> {
        let op = HermitianOperator::new(mat)?;
        let mat = op.mat;
        let idem = frobenius_distance(&(&mat * &mat), &mat);
        if idem > PROJECTION_TOL {
            return Err(LinopError::NotProjection(format!(
                "||P^2 - P|| = {idem:.3e} exceeds {PROJECTION_TOL:.1e}"
            )));
        }
        Ok(Projection { mat })
    }

    pub fn zero(dim: usize) -> Self {
        Projection { mat: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Projection { mat: CMatrix::identity(dim, dim) }
    }

    /// Projection onto the diagonal coordinates listed in `coords`.
    pub fn coordinate(dim: usize, coords: &[usize]) -> Self {
        let mut mat = CMatrix::zeros(dim, dim);
        for &c in coords {
            mat[(c, c)] = C64::new(1.0, 0.0);
        }
        Projection { mat }
    }

    /// `B B*` for a matrix `B` whose columns are orthonormal. The caller is
    /// responsible for orthonormality; it is only spot-checked in debug
    /// builds.
    pub fn from_basis(basis: &CMatrix) -> Self {
        debug_assert!(
            mats_close(&(basis.adjoint() * basis), &CMatrix::identity(basis.ncols(), basis.ncols()), 1e-8),
            "from_basis columns must be orthonormal"
        );
        let mat = basis * basis.adjoint();
        Projection { mat: symmetrize(&mat) }
    }

    /// Projection onto the span of a single nonzero vector.
    pub fn onto_vector(v: &[C64]) -> Result<Self, LinopError> {
        let n = v.len();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0 || norm < 1e-12 {
            return Err(LinopError::BadShape);
        }
        let b = CMatrix::from_fn(n, 1, |i, _| v[i] / C64::new(norm, 0.0));
        Ok(Projection::from_basis(&b))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn as_operator(&self) -> HermitianOperator {
        HermitianOperator { mat: self.mat.clone() }
    }

    /// Rank read off the trace, which is within noise of an integer for any
    /// valid projection.
    pub fn rank(&self) -> usize {
        trace_re(&self.mat).round().max(0.0) as usize
    }

    pub fn trace_re(&self) -> f64 {
        trace_re(&self.mat)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        frobenius(&self.mat) <= tol
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        mats_close(&self.mat, &other.mat, tol)
    }
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues in strictly ascending order after clustering, with the
/// orthogonal eigenprojections and their multiplicities.
#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    pub eigenvalues: Vec<f64>,
    pub projections: Vec<Projection>,
    pub multiplicities: Vec<usize>,
}

impl Eigendecomposition {
    /// Reassembles `sum_i lambda_i P_i`.
    pub fn reconstruct(&self, dim: usize) -> CMatrix {
        let mut out = CMatrix::zeros(dim, dim);
        for (l, p) in self.eigenvalues.iter().zip(&self.projections) {
            out += p.matrix() * C64::new(*l, 0.0);
        }
        out
    }
}

/// Raw (unclustered) spectral data: ascending eigenvalue list with matching
/// orthonormal eigenvector columns.
fn raw_eig(mat: &CMatrix) -> (Vec<f64>, CMatrix) {
    let se = mat.clone().symmetric_eigen();
    let n = mat.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn basis_columns(vectors: &CMatrix, picks: &[usize]) -> CMatrix {
    CMatrix::from_fn(vectors.nrows(), picks.len(), |r, c| vectors[(r, picks[c])])
}

/// Eigendecomposition of a Hermitian operator with eigenvalue clustering.
///
/// Eigenvalues closer than `cluster_tol` are merged into one spectral point
/// (reported as the cluster mean) whose projection is the sum of the merged
/// eigenprojections. The default tolerance scales with the operator:
/// `1e-8 * (1 + ||A||)`.
pub fn eig_hermitian(a: &HermitianOperator, cluster_tol: Option<f64>) -> Eigendecomposition {
    let tol = cluster_tol.unwrap_or_else(|| 1e-8 * (1.0 + a.frobenius_norm()));
    let (values, vectors) = raw_eig(a.matrix());
    let n = values.len();
    let mut eigenvalues = Vec::new();
    let mut projections = Vec::new();
    let mut multiplicities = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        let picks: Vec<usize> = (start..end).collect();
        let mean = values[start..end].iter().sum::<f64>() / picks.len() as f64;
        eigenvalues.push(mean);
        projections.push(Projection::from_basis(&basis_columns(&vectors, &picks)));
        multiplicities.push(picks.len());
        start = end;
    }
    Eigendecomposition { eigenvalues, projections, multiplicities }
}

/// `P <= Q` in the projection order, decided as `||QP - P|| <= tol`.
pub fn proj_leq_tol(p: &Projection, q: &Projection, tol: f64) -> Result<bool, LinopError> {
    if p.dim() != q.dim() {
        return Err(LinopError::DimMismatch(p.dim(), q.dim()));
    }
    Ok(frobenius_distance(&(q.matrix() * p.matrix()), p.matrix()) <= tol)
}

/// `P <= Q` at the default tolerance [`PROJECTION_TOL`].
pub fn proj_leq(p: &Projection, q: &Projection) -> Result<bool, LinopError> {
    proj_leq_tol(p, q, PROJECTION_TOL)
}

/// Kernel projection of a positive-semidefinite Hermitian matrix, with the
/// kernel/support split made at `RANK_REL_TOL` relative to the largest
/// eigenvalue.
fn kernel_support(mat: &CMatrix) -> (Projection, Projection) {
    let (values, vectors) = raw_eig(mat);
    let n = values.len();
    let lmax = values.last().copied().unwrap_or(0.0).max(0.0);
    let thresh = RANK_REL_TOL * lmax + RANK_ABS_FLOOR;
    let kernel_picks: Vec<usize> = (0..n).filter(|&i| values[i] <= thresh).collect();
    let support_picks: Vec<usize> = (0..n).filter(|&i| values[i] > thresh).collect();
    let kernel = if kernel_picks.is_empty() {
        Projection::zero(n)
    } else {
        Projection::from_basis(&basis_columns(&vectors, &kernel_picks))
    };
    let support = if support_picks.is_empty() {
        Projection::zero(n)
    } else {
        Projection::from_basis(&basis_columns(&vectors, &support_picks))
    };
    (kernel, support)
}

/// Greatest lower bound of two projections: the projection onto
/// `ran P intersect ran Q`, computed as the kernel of `(1-P) + (1-Q)`.
pub fn proj_meet(p: &Projection, q: &Projection) -> Result<Projection, LinopError> {
    if p.dim() != q.dim() {
        return Err(LinopError::DimMismatch(p.dim(), q.dim()));
    }
    let n = p.dim();
    let id = CMatrix::identity(n, n);
    let s = (&id - p.matrix()) + (&id - q.matrix());
    Ok(kernel_support(&s).0)
}

/// Least upper bound of two projections: the projection onto
/// `ran P + ran Q`, computed as the support of `P + Q`.
pub fn proj_join(p: &Projection, q: &Projection) -> Result<Projection, LinopError> {
    if p.dim() != q.dim() {
        return Err(LinopError::DimMismatch(p.dim(), q.dim()));
    }
    Ok(kernel_support(&(p.matrix() + q.matrix())).1)
}

/// `1 - P`.
pub fn orthocomplement(p: &Projection) -> Projection {
    let n = p.dim();
    Projection { mat: CMatrix::identity(n, n) - p.matrix() }
}

/// Join of a finite family; the empty join is the zero projection.
pub fn proj_join_set(dim: usize, ps: &[Projection]) -> Result<Projection, LinopError> {
    let mut acc = Projection::zero(dim);
    for p in ps {
        acc = proj_join(&acc, p)?;
    }
    Ok(acc)
}

/// Meet of a finite family; the empty meet is the identity.
pub fn proj_meet_set(dim: usize, ps: &[Projection]) -> Result<Projection, LinopError> {
    let mut acc = Projection::identity(dim);
    for p in ps {
        acc = proj_meet(&acc, p)?;
    }
    Ok(acc)
}
