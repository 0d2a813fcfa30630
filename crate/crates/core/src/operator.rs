//! Dense complex matrices standing in for bounded operators on a
//! finite-dimensional Hilbert space.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative threshold below which the smallest singular value counts as zero.
pub const SINGULARITY_RTOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A `d × d` complex matrix.
#[derive(Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<Complex64>);

/// Self-adjoint decomposition `T = re + i·im`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPair {
    pub real_part: OperatorMatrix,
    pub imag_part: OperatorMatrix,
}

impl OperatorMatrix {
    /// Wraps a square, finite matrix.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::Invalid(format!(
                "operator matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Invalid("operator matrix has non-finite entries".into()));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Invalid("matrix literal must have d rows of length d".into()));
        }
        Self::from_matrix(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    /// `c·I`.
    pub fn scalar(d: usize, c: Complex64) -> Self {
        Self(DMatrix::from_diagonal_element(d, d, c))
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        Self(DMatrix::from_fn(diag.len(), diag.len(), |i, j| if i == j { diag[i] } else { ZERO }))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(Complex64::new(x, 0.0))
    }

    /// `(T + T*)/2`.
    pub fn re_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// `(T − T*)/(2i)`.
    pub fn im_part(&self) -> Self {
        Self((&self.0 - self.0.adjoint()) * Complex64::new(0.0, -0.5))
    }

    pub fn hermitian_pair(&self) -> HermitianPair {
        HermitianPair { real_part: self.re_part(), imag_part: self.im_part() }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus of `T − T*`.
    pub fn hermitian_deviation(&self) -> f64 {
        (&self.0 - self.0.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    fn require_self_adjoint(&self, tol: f64) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation <= tol {
            Ok(())
        } else {
            Err(Error::NotSelfAdjoint { deviation, tol })
        }
    }

    /// Ascending eigenvalues of the Hermitian part; errors if `T` is not
    /// self-adjoint within `tol`.
    pub fn hermitian_eigenvalues(&self, tol: f64) -> Result<Vec<f64>> {
        self.require_self_adjoint(tol)?;
        Ok(hermitian_spectrum(&self.re_part().0))
    }

    /// Whether every eigenvalue lies in `[−tol, 1 + tol]`.
    pub fn is_positive_contraction(&self, tol: f64) -> Result<bool> {
        let eig = self.hermitian_eigenvalues(tol)?;
        Ok(eig.iter().all(|&l| l >= -tol && l <= 1.0 + tol))
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        singular_values(&self.0).iter().copied().fold(0.0, f64::max)
    }

    pub fn min_singular_value(&self) -> f64 {
        singular_values(&self.0).iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest eigenvalue of `(M + M*)/2`.
    pub fn numerical_abscissa(&self) -> f64 {
        let spec = hermitian_spectrum(&self.re_part().0);
        spec[spec.len() - 1]
    }

    /// `MN − NM`.
    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Inverse, refusing matrices whose smallest singular value is at most
    /// `SINGULARITY_RTOL · ‖M‖`.
    pub fn try_inverse(&self, what: &str) -> Result<Self> {
        self.check_invertible(what)?;
        self.0
            .clone()
            .try_inverse()
            .map(Self)
            .ok_or_else(|| Error::Singular { what: what.into(), sigma_min: 0.0 })
    }

    /// Smallest singular value, or a singularity error.
    pub fn check_invertible(&self, what: &str) -> Result<f64> {
        let sv = singular_values(&self.0);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > SINGULARITY_RTOL * smax) {
            return Err(Error::Singular { what: what.into(), sigma_min: smin });
        }
        Ok(smin)
    }

    /// `ψ = (h − I)(h + I)⁻¹`.
    pub fn cayley(&self) -> Result<Self> {
        let id = Self::identity(self.dim());
        let inv = (self + &id).try_inverse("h + I")?;
        Ok(&(self - &id) * &inv)
    }

    /// `h = (I + ψ)(I − ψ)⁻¹`; fails exactly when `1` is numerically in the
    /// spectrum of `ψ`.
    pub fn inverse_cayley(&self) -> Result<Self> {
        let id = Self::identity(self.dim());
        let inv = (&id - self).try_inverse("I - psi")?;
        Ok(&(&id + self) * &inv)
    }

    /// Matrix exponential.
    pub fn exp(&self) -> Self {
        Self(crate::expm::expm(&self.0))
    }
}

fn hermitian_spectrum(h: &DMatrix<Complex64>) -> Vec<f64> {
    let mut eig: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.clone().singular_values().iter().copied().collect()
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorMatrix(")?;
        let d = self.dim();
        for i in 0..d {
            write!(f, "[")?;
            for j in 0..d {
                let c = self.0[(i, j)];
                write!(f, "{}{:+}i", c.re, c.im)?;
                if j + 1 < d {
                    write!(f, ", ")?;
                }
            }
            write!(f, "]")?;
        }
        write!(f, ")")
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<Complex64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Complex64) -> OperatorMatrix {
        OperatorMatrix(&self.0 * rhs)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix(-&self.0)
    }
}

impl Add for OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(self.0 + rhs.0)
    }
}

impl Sub for OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(self.0 - rhs.0)
    }
}

/// JSON literal: an array of rows, each entry a `[re, im]` pair.
impl Serialize for OperatorMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let rows: Vec<Vec<[f64; 2]>> = (0..d)
            .map(|i| (0..d).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        OperatorMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}
