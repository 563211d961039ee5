//! Seeded random instances for law checks: Hermitian operators, projections,
//! density matrices, and node lists for monotone rescaling maps.
//!
//! Everything is driven by an explicit ChaCha stream so that suites and
//! reports are reproducible from a single recorded seed.

use crate::linop::{CMatrix, HermitianOperator, Projection, C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random::<f64>();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn gaussian_matrix(rng: &mut impl Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| C64::new(normal(rng), normal(rng)))
}

/// Haar-ish random unitary: Q factor of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    gaussian_matrix(rng, dim).qr().q()
}

/// Random Hermitian operator with entries on the order of `scale`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize, scale: f64) -> HermitianOperator {
    let g = gaussian_matrix(rng, dim) * C64::new(scale, 0.0);
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    HermitianOperator::new(h).expect("symmetrized Gaussian is Hermitian")
}

/// Random Hermitian operator whose eigenvalues are drawn from `spectrum`
/// candidates, guaranteeing controlled degeneracies and gaps.
pub fn random_hermitian_with_spectrum(rng: &mut impl Rng, dim: usize, spectrum: &[f64]) -> HermitianOperator {
    let u = random_unitary(rng, dim);
    let d = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(spectrum[rng.random_range(0..spectrum.len())], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let m = &u * d * u.adjoint();
    HermitianOperator::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).expect("conjugated diagonal is Hermitian")
}

/// Random projection of uniformly chosen rank, including 0 and full rank.
pub fn random_projection(rng: &mut impl Rng, dim: usize) -> Projection {
    let rank = rng.random_range(0..=dim);
    random_projection_of_rank(rng, dim, rank)
}

pub fn random_projection_of_rank(rng: &mut impl Rng, dim: usize, rank: usize) -> Projection {
    assert!(rank <= dim);
    if rank == 0 {
        return Projection::zero(dim);
    }
    let u = random_unitary(rng, dim);
    let b = CMatrix::from_fn(dim, rank, |r, c| u[(r, c)]);
    Projection::from_basis(&b)
}

/// Random density matrix: a random mixture over a random orthonormal frame.
pub fn random_density_matrix(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let u = random_unitary(rng, dim);
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-6).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let d = CMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(weights[i], 0.0) } else { C64::new(0.0, 0.0) });
    let m = &u * d * u.adjoint();
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Node list for a monotone piecewise-linear map on `[lo, hi]`: abscissas
/// strictly increasing, ordinates non-decreasing with each rise either zero
/// or at least `min_rise`. The gap rule keeps distinct output values well
/// separated from eigenvalue-clustering tolerances downstream.
pub fn random_monotone_nodes(rng: &mut impl Rng, lo: f64, hi: f64, min_rise: f64) -> Vec<(f64, f64)> {
    let k = rng.random_range(2..=5);
    let mut xs: Vec<f64> = Vec::with_capacity(k);
    let span = hi - lo;
    for i in 0..k {
        let base = lo + span * i as f64 / k as f64;
        xs.push(base + rng.random::<f64>() * span / (2.0 * k as f64));
    }
    let mut y = -3.0 + 6.0 * rng.random::<f64>();
    let mut nodes = Vec::with_capacity(k);
    for &x in &xs {
        nodes.push((x, y));
        if rng.random::<f64>() < 0.35 {
            // flat segment
        } else {
            y += min_rise + 2.0 * rng.random::<f64>();
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{frobenius_distance, mats_close};

    #[test]
    fn seeded_streams_are_reproducible() {
        let mut a = rng_from_seed(7);
        let mut b = rng_from_seed(7);
        let ha = random_hermitian(&mut a, 4, 1.0);
        let hb = random_hermitian(&mut b, 4, 1.0);
        assert!(frobenius_distance(ha.matrix(), hb.matrix()) == 0.0);
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = rng_from_seed(11);
        for dim in 2..6 {
            let u = random_unitary(&mut rng, dim);
            let id = CMatrix::identity(dim, dim);
            assert!(mats_close(&(u.adjoint() * &u), &id, 1e-10));
        }
    }

    #[test]
    fn random_density_matrices_have_unit_trace() {
        let mut rng = rng_from_seed(13);
        let rho = random_density_matrix(&mut rng, 5);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!(rho.trace().im.abs() < 1e-12);
    }

    #[test]
    fn monotone_nodes_are_monotone() {
        let mut rng = rng_from_seed(17);
        for _ in 0..50 {
            let nodes = random_monotone_nodes(&mut rng, -2.0, 2.0, 0.1);
            for w in nodes.windows(2) {
                assert!(w[0].0 < w[1].0);
                assert!(w[0].1 <= w[1].1);
                let rise = w[1].1 - w[0].1;
                assert!(rise == 0.0 || rise >= 0.1 - 1e-12);
            }
        }
    }
}
