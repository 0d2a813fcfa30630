//! Factorizations of the shift semigroup on `H²(E)`, `dim E = d`.
//!
//! A pair `(A, B)` with `A = A*` and `0 ⪯ B ⪯ I` gives the commuting
//! contractive semigroups
//!
//! ```text
//! φ₁,ₜ(z) = exp(t[iA − φ(z)B]),   φ₂,ₜ(z) = exp(t[−iA − φ(z)(I − B)])
//! ```
//!
//! whose product is `exp(−tφ(z))·I`. Internally `h₁(z) = φ(z)B − iA` and
//! `h₂ = φ·I − h₁`, so that `φ_{j,t} = exp(−t·h_j)`, and the Schur-class pair
//! is `ψ_j = cayley(h_j)`. Conversely any factorizing pair determines
//! `(A, B)` from `h₁(0)`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc::{mobius_phi, varphi_t, ComplexValue, DiscGrid, I};
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use crate::random::{random_hermitian, random_positive_contraction};
use crate::rigidity::OperatorFunction;

/// Tolerance used to validate `A = A*` and `0 ⪯ B ⪯ I`.
pub const PARAMS_TOL: f64 = 1e-12;

/// Largest exponent norm `t·(‖A‖ + |φ(z)|)` the verifier will evaluate.
pub const EXPONENT_BUDGET: f64 = 100.0;

/// Default time samples.
pub const DEFAULT_T_LIST: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorParams {
    dim: usize,
    #[serde(rename = "A")]
    a: OperatorMatrix,
    #[serde(rename = "B")]
    b: OperatorMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    dim: usize,
    #[serde(rename = "A")]
    a: OperatorMatrix,
    #[serde(rename = "B")]
    b: OperatorMatrix,
}

impl<'de> Deserialize<'de> for FactorParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        if raw.a.dim() != raw.dim || raw.b.dim() != raw.dim {
            return Err(serde::de::Error::custom(format!(
                "dim = {} but A is {}x{} and B is {}x{}",
                raw.dim,
                raw.a.dim(),
                raw.a.dim(),
                raw.b.dim(),
                raw.b.dim()
            )));
        }
        FactorParams::new(raw.a, raw.b).map_err(serde::de::Error::custom)
    }
}

impl FactorParams {
    /// Validates `A = A*` and `0 ⪯ B ⪯ I`.
    pub fn new(a: OperatorMatrix, b: OperatorMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Invalid(format!("A is {0}x{0} but B is {1}x{1}", a.dim(), b.dim())));
        }
        if !a.is_self_adjoint(PARAMS_TOL) {
            return Err(Error::Invalid(format!(
                "A must be self-adjoint (A = A*), deviation {:e}",
                a.hermitian_deviation()
            )));
        }
        let eig = b.hermitian_eigenvalues(PARAMS_TOL).map_err(|_| {
            Error::Invalid(format!("B must be self-adjoint with 0 <= B <= I, deviation {:e}", b.hermitian_deviation()))
        })?;
        let (lo, hi) = (eig[0], eig[eig.len() - 1]);
        if lo < -PARAMS_TOL || hi > 1.0 + PARAMS_TOL {
            return Err(Error::Invalid(format!(
                "B violates 0 <= B <= I: eigenvalues span [{lo}, {hi}]"
            )));
        }
        Ok(Self { dim: a.dim(), a, b })
    }

    /// `A = (G + G*)/2` capped at `‖A‖ ≤ 2`; `B = V·diag(u)·V*`, `u ∈ [0, 1]`.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let a = random_hermitian(d, 2.0, rng);
        let b = random_positive_contraction(d, rng);
        Self::new(a, b).expect("generator respects the invariants")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &OperatorMatrix {
        &self.a
    }

    pub fn b(&self) -> &OperatorMatrix {
        &self.b
    }
}

/// Which factor of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    First,
    Second,
}

impl Factor {
    pub fn index(self) -> u8 {
        match self {
            Factor::First => 1,
            Factor::Second => 2,
        }
    }
}

fn require_disc(z: ComplexValue, what: &str) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: |z| = {} is not < 1", z.norm())))
    }
}

/// `h₁(z) = φ(z)·B − i·A`.
pub fn build_h1(params: &FactorParams, z: ComplexValue) -> Result<OperatorMatrix> {
    require_disc(z, "build_h1")?;
    Ok(&params.b.scale(mobius_phi(z)?) - &params.a.scale(I))
}

/// `h₂(z) = φ(z)·(I − B) + i·A`.
pub fn build_h2(params: &FactorParams, z: ComplexValue) -> Result<OperatorMatrix> {
    require_disc(z, "build_h2")?;
    let phi = mobius_phi(z)?;
    Ok(&OperatorMatrix::scalar(params.dim, phi) - &build_h1(params, z)?)
}

/// Two Schur-class functions `ψ₁, ψ₂` on the disc.
#[derive(Debug, Clone)]
pub struct FactorPair {
    pub psi1: OperatorFunction,
    pub psi2: OperatorFunction,
}

impl FactorPair {
    pub fn new(psi1: OperatorFunction, psi2: OperatorFunction) -> Result<Self> {
        if psi1.dim() != psi2.dim() {
            return Err(Error::Invalid("psi1 and psi2 act on spaces of different dimension".into()));
        }
        Ok(Self { psi1, psi2 })
    }

    pub fn dim(&self) -> usize {
        self.psi1.dim()
    }
}

/// `ψ₁ = cayley(h₁)`, `ψ₂ = cayley(φ·I − h₁)`.
pub fn pair_from_params(params: &FactorParams) -> FactorPair {
    let d = params.dim;
    let p1 = params.clone();
    let p2 = params.clone();
    FactorPair {
        psi1: OperatorFunction::new(d, "psi1", move |z| build_h1(&p1, z)?.cayley()),
        psi2: OperatorFunction::new(d, "psi2", move |z| build_h2(&p2, z)?.cayley()),
    }
}

/// Exponent `t·[iA − φ(z)B]` (j = 1) or `t·[−iA − φ(z)(I − B)]` (j = 2),
/// written with `(z+1)(z−1)⁻¹ = −φ(z)`.
fn exponent(params: &FactorParams, j: Factor, t: f64, z: ComplexValue) -> Result<OperatorMatrix> {
    let h = match j {
        Factor::First => build_h1(params, z)?,
        Factor::Second => build_h2(params, z)?,
    };
    Ok(h.scale_real(-t))
}

/// `φ_{j,t}(z)`.
pub fn phi_jt(params: &FactorParams, j: Factor, t: f64, z: ComplexValue) -> Result<OperatorMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("phi_jt: t = {t} must be finite and >= 0")));
    }
    Ok(exponent(params, j, t, z)?.exp())
}

/// Worst residual of one check and whether it is within tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckResidual {
    pub worst: f64,
    pub pass: bool,
}

impl CheckResidual {
    fn new(worst: f64, tol: f64) -> Self {
        Self { worst, pass: worst <= tol }
    }
}

/// Residuals of the four factorization checks at one point `z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PointResiduals {
    pub product: f64,
    pub commutation: f64,
    pub contractivity: f64,
    pub semigroup: f64,
    /// `(t, z)` combinations left out because the exponent exceeded the budget.
    pub skipped: usize,
}

impl PointResiduals {
    pub fn worst(&self) -> f64 {
        self.product.max(self.commutation).max(self.contractivity).max(self.semigroup)
    }
}

fn within_budget(params: &FactorParams, t: f64, z: ComplexValue) -> Result<bool> {
    Ok(t * (params.a.operator_norm() + mobius_phi(z)?.norm()) <= EXPONENT_BUDGET)
}

/// Product, commutation, contractivity and semigroup residuals at `z`.
pub fn point_residuals(params: &FactorParams, t_list: &[f64], z: ComplexValue) -> Result<PointResiduals> {
    let d = params.dim;
    let mut out = PointResiduals::default();
    for &t in t_list {
        if !within_budget(params, t, z)? {
            out.skipped += 1;
            continue;
        }
        let p1 = phi_jt(params, Factor::First, t, z)?;
        let p2 = phi_jt(params, Factor::Second, t, z)?;
        let prod = &p1 * &p2;
        let target = OperatorMatrix::scalar(d, varphi_t(t, z)?);
        out.product = out.product.max((&prod - &target).operator_norm());
        out.commutation = out.commutation.max((&prod - &(&p2 * &p1)).operator_norm());
        for p in [&p1, &p2] {
            out.contractivity = out.contractivity.max(p.operator_norm() - 1.0);
        }
    }
    for w in t_list.windows(2) {
        let (t, s) = (w[0], w[1]);
        if !within_budget(params, t + s, z)? {
            out.skipped += 1;
            continue;
        }
        for j in [Factor::First, Factor::Second] {
            let lhs = phi_jt(params, j, t + s, z)?;
            let rhs = &phi_jt(params, j, t, z)? * &phi_jt(params, j, s, z)?;
            out.semigroup = out.semigroup.max((&lhs - &rhs).operator_norm());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationReport {
    /// `‖φ₁,ₜφ₂,ₜ − e^{−tφ}·I‖`.
    pub product: CheckResidual,
    /// `‖φ₁,ₜφ₂,ₜ − φ₂,ₜφ₁,ₜ‖`.
    pub commutation: CheckResidual,
    /// `max(‖φ_{j,t}‖ − 1, 0)`.
    pub contractivity: CheckResidual,
    /// `‖φ_{j,t+s} − φ_{j,t}φ_{j,s}‖` for consecutive `t, s`.
    pub semigroup: CheckResidual,
    pub evaluated_points: usize,
    pub skipped: usize,
}

impl FactorizationReport {
    pub fn pass(&self) -> bool {
        self.product.pass && self.commutation.pass && self.contractivity.pass && self.semigroup.pass
    }
}

/// Runs the four factorization checks over every `t` and grid point.
pub fn verify_factorization(
    params: &FactorParams,
    t_list: &[f64],
    grid: &DiscGrid,
    tol: f64,
) -> Result<FactorizationReport> {
    let per_point: Vec<Result<PointResiduals>> =
        grid.points().into_par_iter().map(|z| point_residuals(params, t_list, z)).collect();
    let mut acc = PointResiduals::default();
    let mut evaluated = 0;
    for r in per_point {
        let r = r?;
        acc.product = acc.product.max(r.product);
        acc.commutation = acc.commutation.max(r.commutation);
        acc.contractivity = acc.contractivity.max(r.contractivity);
        acc.semigroup = acc.semigroup.max(r.semigroup);
        acc.skipped += r.skipped;
        evaluated += 1;
    }
    Ok(FactorizationReport {
        product: CheckResidual::new(acc.product, tol),
        commutation: CheckResidual::new(acc.commutation, tol),
        contractivity: CheckResidual::new(acc.contractivity, tol),
        semigroup: CheckResidual::new(acc.semigroup, tol),
        evaluated_points: evaluated,
        skipped: acc.skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterReport {
    /// `max_z ‖h(ψ₁) + h(ψ₂) − φ(z)·I‖` with `h(ψ) = (I+ψ)(I−ψ)⁻¹`.
    pub residual: f64,
    pub worst_at: [f64; 2],
    /// `min_z min_j σ_min(I − ψ_j(z))`.
    pub min_margin: f64,
    pub pass: bool,
}

/// Master equation `h(ψ₁) + h(ψ₂) = φ·I` on the grid.
pub fn verify_master(pair: &FactorPair, grid: &DiscGrid, tol: f64) -> Result<MasterReport> {
    let d = pair.dim();
    let points = grid.points();
    let per_point: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|&z| {
            let mut margin = f64::INFINITY;
            let mut sum = OperatorMatrix::zeros(d);
            for (j, psi) in [(1, &pair.psi1), (2, &pair.psi2)] {
                let p = psi.eval(z)?;
                let gap = &OperatorMatrix::identity(d) - &p;
                let sigma = gap.check_invertible(&format!("I - psi{j}")).map_err(|e| match e {
                    Error::Singular { sigma_min, .. } => Error::Singular {
                        what: format!("I - psi{j}(z) at z = {}{:+}i", z.re, z.im),
                        sigma_min,
                    },
                    other => other,
                })?;
                margin = margin.min(sigma);
                sum = sum + p.inverse_cayley()?;
            }
            let residual = (&sum - &OperatorMatrix::scalar(d, mobius_phi(z)?)).operator_norm();
            Ok((residual, margin))
        })
        .collect();
    let mut residual = 0.0_f64;
    let mut worst_at = points[0];
    let mut min_margin = f64::INFINITY;
    for (r, &z) in per_point.into_iter().zip(&points) {
        let (res, margin) = r?;
        if res > residual {
            residual = res;
            worst_at = z;
        }
        min_margin = min_margin.min(margin);
    }
    Ok(MasterReport { residual, worst_at: [worst_at.re, worst_at.im], min_margin, pass: residual <= tol })
}

/// Reads `(A, B)` off `h₁(0) = (I+ψ₁(0))(I−ψ₁(0))⁻¹` and measures how far
/// `h(ψ₁(z))` is from `φ(z)B − iA` on the grid.
pub fn recover_params(pair: &FactorPair, grid: &DiscGrid) -> Result<(FactorParams, f64)> {
    let origin = Complex64::new(0.0, 0.0);
    let h0 = pair.psi1.eval(origin)?.inverse_cayley()?;
    let b = h0.re_part();
    let a = h0.im_part().scale_real(-1.0);
    let params = FactorParams::new(a, b)?;
    let values: Vec<Result<f64>> = grid
        .points()
        .into_par_iter()
        .map(|z| {
            let h = pair.psi1.eval(z)?.inverse_cayley()?;
            Ok((&h - &build_h1(&params, z)?).operator_norm())
        })
        .collect();
    let residual = crate::disc::max_in_order(values)?;
    Ok((params, residual))
}
