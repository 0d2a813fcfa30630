//! Seeded generators for test families and randomized suites.
//!
//! Every generator draws from a caller-supplied ChaCha stream so a suite is
//! reproducible from its seed alone.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::OperatorMatrix;

pub type SuiteRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian (real and imaginary parts each N(0, 1)).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng))
}

/// `(G + G*)/2`, rescaled onto the ball `‖A‖ ≤ cap` when it falls outside.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, cap: f64, rng: &mut R) -> OperatorMatrix {
    let g = gaussian_matrix(d, rng);
    let a = OperatorMatrix::from_matrix((&g + g.adjoint()) * Complex64::new(0.5, 0.0))
        .expect("square finite matrix");
    let norm = a.operator_norm();
    if norm > cap {
        a.scale_real(cap / norm)
    } else {
        a
    }
}

/// Haar-like unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    gaussian_matrix(d, rng).qr().q()
}

/// `V·diag(u)·V*` with `u` uniform in `[0, 1]`.
pub fn random_positive_contraction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> OperatorMatrix {
    let v = random_unitary(d, rng);
    let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let diag = DMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(u[i], 0.0) } else { Complex64::new(0.0, 0.0) });
    let b = &v * diag * v.adjoint();
    // symmetrize away rounding so the result is exactly self-adjoint
    OperatorMatrix::from_matrix(b).expect("square finite matrix").re_part()
}

/// Uniform point in the disc of radius `r_max`.
pub fn random_disc_point<R: Rng + ?Sized>(r_max: f64, rng: &mut R) -> Complex64 {
    let r = r_max * rng.random::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    Complex64::from_polar(r, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_repeat() {
        let a = random_hermitian(3, 2.0, &mut rng(5));
        let b = random_hermitian(3, 2.0, &mut rng(5));
        assert_eq!(a, b);
        assert!(a.is_self_adjoint(0.0));
        assert!(a.operator_norm() <= 2.0 + 1e-12);
    }

    #[test]
    fn unitary_is_unitary() {
        let v = random_unitary(4, &mut rng(1));
        let err = (&v * v.adjoint() - DMatrix::<Complex64>::identity(4, 4)).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
