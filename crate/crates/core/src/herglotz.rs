//! Boundary-measure analysis for analytic functions with positive real part.
//!
//! For `h(z) = i·Im h(0) + ∫ (e^{it} + z)/(e^{it} − z) dΣ(t)` the real part
//! on the circle of radius `r` is the Poisson extension of `Σ`, so its
//! Fourier coefficients are `r^{|n|}·Σ̂(n)` with `Σ̂(n) = ∫ e^{−int} dΣ`.
//! Sampling `Re h` at `N` equispaced angles and dividing the discrete
//! Fourier transform by `r^{|n|}` estimates the moments; the trapezoid
//! rule adds an aliasing bias `Σ_{j≠0} r^{|n+jN|−|n|}·Σ̂(n+jN)`.
//!
//! A point mass at `e^{iθ₀}` is read off as the Dirichlet mean
//! `(2M+1)⁻¹ Σ_{|n|≤M} Σ̂(n)·e^{inθ₀}` (Wiener's formula).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc::{mobius_phi, I};
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use crate::rigidity::OperatorFunction;

/// Samples-per-moment ratio used when the moment order is raised.
pub const SAMPLES_PER_MOMENT: usize = 64;

/// `(r, N, M)`: sampling radius, sample count, highest moment order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingParams {
    pub r: f64,
    pub n_samples: usize,
    pub max_order: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { r: 0.999, n_samples: 4096, max_order: 64 }
    }
}

impl SamplingParams {
    /// Radius 0.999 with `N = 64·M`, which keeps the aliasing weight
    /// `r^{N−M}` shrinking as `M` grows. `M = 64` gives the defaults.
    pub fn for_order(max_order: usize) -> Self {
        Self { r: 0.999, n_samples: SAMPLES_PER_MOMENT * max_order, max_order }
    }

    /// `r^{N−M}`, the weight of the first wrapped-around term.
    pub fn aliasing_weight(&self) -> f64 {
        self.r.powi((self.n_samples - self.max_order.min(self.n_samples)) as i32)
    }
}

/// `Re h` sampled at `r·e^{2πik/N}`, `k = 0..N`.
#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    pub r: f64,
    pub samples: Vec<OperatorMatrix>,
}

impl BoundaryProfile {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }
}

pub fn sample_boundary(h: &OperatorFunction, r: f64, n: usize) -> Result<BoundaryProfile> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("sampling radius r = {r} must lie in (0, 1)")));
    }
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Precondition(format!("sample count N = {n} must be a power of two >= 8")));
    }
    let samples: Vec<Result<OperatorMatrix>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let z = Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64);
            Ok(h.eval(z)?.re_part())
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BoundaryProfile { r, samples })
}

/// Moment estimates `Σ̂(n)` for `|n| ≤ M`.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub r: f64,
    pub max_order: usize,
    /// Index `n + M` holds `Σ̂(n)`.
    moments: Vec<OperatorMatrix>,
}

impl MomentEstimate {
    pub fn moment(&self, n: i64) -> &OperatorMatrix {
        assert!(n.unsigned_abs() as usize <= self.max_order, "moment order {n} out of range");
        &self.moments[(n + self.max_order as i64) as usize]
    }

    pub fn orders(&self) -> impl Iterator<Item = i64> {
        let m = self.max_order as i64;
        -m..=m
    }

    pub fn dim(&self) -> usize {
        self.moments[0].dim()
    }
}

/// Entrywise DFT of the profile divided by `r^{|n|}`. Requires `M < N/4`.
pub fn estimate_moments(profile: &BoundaryProfile, max_order: usize) -> Result<MomentEstimate> {
    let n = profile.n_samples();
    if 4 * max_order >= n {
        return Err(Error::Precondition(format!("moment order M = {max_order} must be < N/4 = {}", n / 4)));
    }
    let d = profile.dim();
    let twiddle: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64)).collect();
    let m = max_order as i64;
    let moments: Vec<OperatorMatrix> = (-m..=m)
        .into_par_iter()
        .map(|order| {
            let mut acc = nalgebra::DMatrix::<Complex64>::zeros(d, d);
            let step = order.rem_euclid(n as i64) as usize;
            for (k, s) in profile.samples.iter().enumerate() {
                acc += s.matrix() * twiddle[(step * k) % n];
            }
            let scale = 1.0 / (n as f64 * profile.r.powi(order.abs() as i32));
            OperatorMatrix::from_matrix(acc * Complex64::new(scale, 0.0)).expect("finite moments")
        })
        .collect();
    Ok(MomentEstimate { r: profile.r, max_order, moments })
}

/// Dirichlet mean `(2M+1)⁻¹ Σ_{|n|≤M} Σ̂(n)·e^{inθ₀}`, which tends to
/// `Σ({e^{iθ₀}})`. The Hermitian part is returned.
pub fn atom_at_angle(est: &MomentEstimate, theta0: f64) -> OperatorMatrix {
    let d = est.dim();
    let mut acc = OperatorMatrix::zeros(d);
    for n in est.orders() {
        acc = acc + est.moment(n).scale(Complex64::from_polar(1.0, n as f64 * theta0));
    }
    acc.scale_real(1.0 / (2 * est.max_order + 1) as f64).re_part()
}

/// Fejér mean `Σ_{|n|≤M} (1 − |n|/(M+1))·Σ̂(n)·e^{inθ}`: a non-negative
/// smoothing of the measure for positive `Σ`.
pub fn fejer_density(est: &MomentEstimate, theta: f64) -> OperatorMatrix {
    let d = est.dim();
    let m1 = (est.max_order + 1) as f64;
    let mut acc = OperatorMatrix::zeros(d);
    for n in est.orders() {
        let w = 1.0 - n.unsigned_abs() as f64 / m1;
        acc = acc + est.moment(n).scale(Complex64::from_polar(w, n as f64 * theta));
    }
    acc.re_part()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concentration {
    pub atom_mass: OperatorMatrix,
    pub leak: f64,
    pub concentrated: bool,
}

/// Compares the total mass with the atom at `1`: `leak = ‖Σ̂(0) − atom‖`.
pub fn dirac_concentration_test(est: &MomentEstimate, tol_atom: f64) -> Concentration {
    let atom_mass = atom_at_angle(est, 0.0);
    let leak = (est.moment(0) - &atom_mass).operator_norm();
    Concentration { atom_mass, leak, concentrated: leak <= tol_atom }
}

/// `max(1e−2, 4‖Σ̂(0)‖/M)`.
pub fn default_tol_atom(est: &MomentEstimate) -> f64 {
    (4.0 * est.moment(0).operator_norm() / est.max_order as f64).max(1e-2)
}

/// `i·im_at_0 + φ(z)·atom_mass`.
pub fn herglotz_reconstruct(atom_mass: &OperatorMatrix, im_at_0: &OperatorMatrix, z: Complex64) -> Result<OperatorMatrix> {
    if !(z.norm() < 1.0) {
        return Err(Error::Domain(format!("herglotz_reconstruct: |z| = {} is not < 1", z.norm())));
    }
    Ok(&im_at_0.scale(I) + &atom_mass.scale(mobius_phi(z)?))
}

/// Moments, atom at `1`, leak and `Im h(0)` for one function.
#[derive(Debug, Clone)]
pub struct HerglotzApprox {
    pub params: SamplingParams,
    pub moments: MomentEstimate,
    pub atom_mass_at_1: OperatorMatrix,
    pub leak_mass: f64,
    pub im_at_0: OperatorMatrix,
}

pub fn analyze(h: &OperatorFunction, params: &SamplingParams) -> Result<HerglotzApprox> {
    let profile = sample_boundary(h, params.r, params.n_samples)?;
    let moments = estimate_moments(&profile, params.max_order)?;
    let atom = atom_at_angle(&moments, 0.0);
    let leak_mass = (moments.moment(0) - &atom).operator_norm();
    let im_at_0 = h.eval(Complex64::new(0.0, 0.0))?.im_part();
    Ok(HerglotzApprox { params: *params, moments, atom_mass_at_1: atom, leak_mass, im_at_0 })
}

/// `max_{|n|≤M} ‖Σ̂₁(n) + Σ̂₂(n) − Σ̂_{φI}(n)‖`.
pub fn split_additivity_check(h1: &OperatorFunction, h2: &OperatorFunction, params: &SamplingParams) -> Result<f64> {
    let d = h1.dim();
    if h2.dim() != d {
        return Err(Error::Invalid("split halves have different dimensions".into()));
    }
    let phi = OperatorFunction::new(d, "phi*I", move |z| Ok(OperatorMatrix::scalar(d, mobius_phi(z)?)));
    let est = |h: &OperatorFunction| -> Result<MomentEstimate> {
        estimate_moments(&sample_boundary(h, params.r, params.n_samples)?, params.max_order)
    };
    let (m1, m2, mp) = (est(h1)?, est(h2)?, est(&phi)?);
    let mut worst = 0.0_f64;
    for n in m1.orders() {
        let diff = &(m1.moment(n) + m2.moment(n)) - mp.moment(n);
        worst = worst.max(diff.operator_norm());
    }
    Ok(worst)
}

/// Function `z ↦ i·A + φ(z)·B`.
pub fn herglotz_function(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorFunction {
    let (a, b) = (a.clone(), b.clone());
    OperatorFunction::new(a.dim(), "iA+phi*B", move |z| herglotz_reconstruct(&b, &a, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::poisson_factor;
    use crate::random::{random_hermitian, random_positive_contraction, rng};

    fn scalar_fn(name: &str, f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> OperatorFunction {
        OperatorFunction::new(1, name, move |z| Ok(OperatorMatrix::scalar(1, f(z))))
    }

    fn phi_fn() -> OperatorFunction {
        OperatorFunction::new(1, "phi", |z| Ok(OperatorMatrix::scalar(1, mobius_phi(z)?)))
    }

    /// Closed-form DFT bias for the pure atom at 1:
    /// `Σ_j r^{|n+jN|}/r^{|n|}`, summed until negligible.
    fn atom_alias_oracle(r: f64, n_samples: usize, n: i64) -> f64 {
        let big = n_samples as i64;
        let mut total = 0.0;
        for j in -50i64..=50 {
            total += r.powi((n + j * big).abs() as i32);
        }
        total / r.powi(n.abs() as i32)
    }

    #[test]
    fn sample_examples() {
        let p = sample_boundary(&phi_fn(), 0.5, 8).unwrap();
        for (k, s) in p.samples.iter().enumerate() {
            let z = Complex64::from_polar(0.5, 2.0 * PI * k as f64 / 8.0);
            assert!((s.get(0, 0).re - poisson_factor(z).unwrap()).abs() < 1e-14);
        }
        let p = sample_boundary(&scalar_fn("ic", |_| Complex64::new(0.0, 3.0)), 0.5, 16).unwrap();
        assert!(p.samples.iter().all(|s| s.max_abs() == 0.0));
        let p = sample_boundary(&scalar_fn("1", |_| Complex64::new(1.0, 0.0)), 0.5, 16).unwrap();
        assert!(p.samples.iter().all(|s| s.get(0, 0) == Complex64::new(1.0, 0.0)));
        assert!(sample_boundary(&phi_fn(), 1.0, 16).is_err());
        assert!(sample_boundary(&phi_fn(), 0.5, 12).is_err());
    }

    #[test]
    fn phi_moments_carry_only_aliasing_bias() {
        // Default sampling: every moment equals the closed-form alias sum.
        let params = SamplingParams::default();
        let est = estimate_moments(&sample_boundary(&phi_fn(), params.r, params.n_samples).unwrap(), params.max_order).unwrap();
        for n in est.orders() {
            let oracle = atom_alias_oracle(params.r, params.n_samples, n);
            assert!((est.moment(n).get(0, 0).re - oracle).abs() < 1e-9, "n={n}");
            assert!(est.moment(n).get(0, 0).im.abs() < 1e-9);
        }
        // With N = 32768 the bias is below 1e-6 and moments are ≡ 1.
        let est = estimate_moments(&sample_boundary(&phi_fn(), 0.999, 32768).unwrap(), 64).unwrap();
        for n in est.orders() {
            assert!((est.moment(n).get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn constant_moments() {
        let p = sample_boundary(&scalar_fn("1", |_| Complex64::new(1.0, 0.0)), 0.999, 4096).unwrap();
        let est = estimate_moments(&p, 64).unwrap();
        assert!((est.moment(0).get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        for n in est.orders().filter(|&n| n != 0) {
            assert!(est.moment(n).max_abs() < 1e-10, "n={n}");
        }
        let p = sample_boundary(&scalar_fn("5i", |_| Complex64::new(0.0, 5.0)), 0.999, 4096).unwrap();
        let est = estimate_moments(&p, 64).unwrap();
        assert!(est.orders().all(|n| est.moment(n).max_abs() == 0.0));
        assert!(matches!(estimate_moments(&p, 1024), Err(Error::Precondition(_))));
    }

    #[test]
    fn atom_examples() {
        let params = SamplingParams::default();
        let est = estimate_moments(&sample_boundary(&phi_fn(), params.r, params.n_samples).unwrap(), 64).unwrap();
        assert!((atom_at_angle(&est, 0.0).get(0, 0).re - 1.0).abs() < 5e-2);
        // Dirichlet mean at θ₀ = π: (2M+1)⁻¹ Σ (−1)^n·(1 + bias) for even M
        let at_pi = atom_at_angle(&est, PI).get(0, 0).re;
        let oracle: f64 = est
            .orders()
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * atom_alias_oracle(params.r, params.n_samples, n))
            .sum::<f64>()
            / 129.0;
        assert!((at_pi - oracle).abs() < 1e-9);
        assert!(at_pi.abs() <= 2.0 / 129.0);

        let p = sample_boundary(&scalar_fn("1", |_| Complex64::new(1.0, 0.0)), 0.999, 4096).unwrap();
        let est = estimate_moments(&p, 64).unwrap();
        assert!((atom_at_angle(&est, 0.0).get(0, 0).re - 1.0 / 129.0).abs() < 1e-10);
    }

    #[test]
    fn concentration_examples() {
        let mut g = rng(4);
        let a = random_hermitian(3, 2.0, &mut g);
        let b = random_positive_contraction(3, &mut g);
        let approx = analyze(&herglotz_function(&a, &b), &SamplingParams::default()).unwrap();
        let c = dirac_concentration_test(&approx.moments, 2.0 * b.operator_norm() / 64.0);
        assert!((&c.atom_mass - &b).operator_norm() < 5e-2);
        assert!(c.concentrated);
        assert!((&approx.im_at_0 - &a).max_abs() < 1e-14);

        let one = OperatorFunction::constant(OperatorMatrix::identity(2), "I");
        let approx = analyze(&one, &SamplingParams::default()).unwrap();
        let c = dirac_concentration_test(&approx.moments, default_tol_atom(&approx.moments));
        assert!(!c.concentrated);
        assert!((c.leak - (1.0 - 1.0 / 129.0)).abs() < 1e-10);

        let zero = OperatorFunction::constant(OperatorMatrix::zeros(2), "0");
        let approx = analyze(&zero, &SamplingParams::default()).unwrap();
        let c = dirac_concentration_test(&approx.moments, default_tol_atom(&approx.moments));
        assert!(c.concentrated && c.leak == 0.0 && c.atom_mass.max_abs() == 0.0);
    }

    #[test]
    fn reconstruct_examples() {
        let id = OperatorMatrix::identity(2);
        let zero = OperatorMatrix::zeros(2);
        assert!((&herglotz_reconstruct(&id, &zero, Complex64::new(0.0, 0.0)).unwrap() - &id).max_abs() < 1e-15);
        let a = OperatorMatrix::from_real_diag(&[1.0, -2.0]);
        let z = Complex64::new(0.3, -0.4);
        assert!((&herglotz_reconstruct(&zero, &a, z).unwrap() - &a.scale(I)).max_abs() < 1e-15);
        let b = OperatorMatrix::from_real_diag(&[0.2, 0.7]);
        let expected = &a.scale(I) + &b.scale_real(3.0);
        assert!((&herglotz_reconstruct(&b, &a, Complex64::new(0.5, 0.0)).unwrap() - &expected).max_abs() < 1e-14);
        assert!(herglotz_reconstruct(&b, &a, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn additivity_examples() {
        let params = SamplingParams::default();
        let half = OperatorFunction::new(2, "phi/2", |z| Ok(OperatorMatrix::scalar(2, 0.5 * mobius_phi(z)?)));
        assert!(split_additivity_check(&half, &half, &params).unwrap() <= 1e-9);
        let full = OperatorFunction::new(2, "phi", |z| Ok(OperatorMatrix::scalar(2, mobius_phi(z)?)));
        let zero = OperatorFunction::constant(OperatorMatrix::zeros(2), "0");
        assert!(split_additivity_check(&full, &zero, &params).unwrap() <= 1e-9);
    }

    #[test]
    fn moment_symmetry_and_fejer_positivity() {
        let mut g = rng(9);
        let a = random_hermitian(2, 2.0, &mut g);
        let b = random_positive_contraction(2, &mut g);
        let h = herglotz_function(&a, &b);
        // mix in a diffuse part
        let h = OperatorFunction::new(2, "mixed", move |z| Ok(&h.eval(z)? + &OperatorMatrix::scalar(2, Complex64::new(0.3, 0.0))));
        let approx = analyze(&h, &SamplingParams::default()).unwrap();
        let est = &approx.moments;
        for n in 0..=64 {
            assert!((est.moment(-n) - &est.moment(n).adjoint()).max_abs() < 1e-10);
        }
        assert!(est.moment(0).hermitian_eigenvalues(1e-10).unwrap()[0] >= -1e-10);
        for k in 0..64 {
            let f = fejer_density(est, 2.0 * PI * k as f64 / 64.0);
            assert!(f.hermitian_eigenvalues(1e-10).unwrap()[0] >= -1e-10);
        }
    }
}
