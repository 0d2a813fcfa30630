//! Scalar primitives on the open unit disc.
//!
//! The Möbius map `φ(z) = (1+z)/(1−z)` sends the disc onto the right
//! half-plane; `exp(−tφ)` is the symbol of the shift semigroup on the
//! Hardy space. Holomorphy of sampled functions is tested with a central
//! difference approximation of the Wirtinger derivative `∂̄ = ½(∂x + i∂y)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the complex plane.
pub type ComplexValue = Complex64;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_finite(z: Complex64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: non-finite input {z}")))
    }
}

fn check_in_disc(z: Complex64, what: &str) -> Result<()> {
    check_finite(z, what)?;
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: |z| = {} is not < 1", z.norm())))
    }
}

/// `φ(z) = (1+z)/(1−z)`.
pub fn mobius_phi(z: ComplexValue) -> Result<ComplexValue> {
    check_finite(z, "mobius_phi")?;
    if z == ONE {
        return Err(Error::Domain("mobius_phi: pole at z = 1".into()));
    }
    Ok((ONE + z) / (ONE - z))
}

/// `φ⁻¹(w) = (w−1)/(w+1)`.
pub fn inverse_mobius(w: ComplexValue) -> Result<ComplexValue> {
    check_finite(w, "inverse_mobius")?;
    if w == -ONE {
        return Err(Error::Domain("inverse_mobius: pole at w = -1".into()));
    }
    Ok((w - ONE) / (w + ONE))
}

/// Symbol of the shift semigroup, `exp(−t·φ(z))`.
pub fn varphi_t(t: f64, z: ComplexValue) -> Result<ComplexValue> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("varphi_t: t = {t} must be finite and >= 0")));
    }
    check_in_disc(z, "varphi_t")?;
    Ok((-t * mobius_phi(z)?).exp())
}

/// `(1−|z|²)/|1−z|²`, the real part of `φ(z)`.
pub fn poisson_factor(z: ComplexValue) -> Result<f64> {
    check_in_disc(z, "poisson_factor")?;
    Ok((1.0 - z.norm_sqr()) / (ONE - z).norm_sqr())
}

/// A named pure function `C → C`.
#[derive(Clone)]
pub struct ScalarFunction {
    name: String,
    eval: Arc<dyn Fn(ComplexValue) -> ComplexValue + Send + Sync>,
}

impl ScalarFunction {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(ComplexValue) -> ComplexValue + Send + Sync + 'static,
    {
        Self { name: name.into(), eval: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, z: ComplexValue) -> ComplexValue {
        (self.eval)(z)
    }
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction").field("name", &self.name).finish()
    }
}

/// Polar sampling of the disc used to discretize "for all z in D".
///
/// Points are the centre `0` followed by `r·e^{2πik/n_angles}` for every
/// radius. Every stencil `z ± h`, `z ± ih` stays inside the disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscGrid {
    radii: Vec<f64>,
    n_angles: usize,
    stencil_h: f64,
}

impl DiscGrid {
    pub fn new(radii: Vec<f64>, n_angles: usize, stencil_h: f64) -> Result<Self> {
        let grid = Self { radii, n_angles, stencil_h };
        grid.validate()?;
        Ok(grid)
    }

    /// Checks the grid invariants; also used after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::Invalid("grid needs at least one radius".into()));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0 && *r < 1.0)) {
            return Err(Error::Invalid("grid radii must lie in (0, 1)".into()));
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("grid radii must be strictly ascending".into()));
        }
        if self.n_angles < 8 {
            return Err(Error::Invalid(format!("n_angles = {} must be >= 8", self.n_angles)));
        }
        if !(self.stencil_h.is_finite() && self.stencil_h > 0.0) {
            return Err(Error::Invalid("stencil_h must be > 0".into()));
        }
        let r_max = self.radii[self.radii.len() - 1];
        if r_max + self.stencil_h >= 1.0 {
            return Err(Error::Invalid(format!(
                "max radius {r_max} + stencil_h {} must stay below 1",
                self.stencil_h
            )));
        }
        Ok(())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn stencil_h(&self) -> f64 {
        self.stencil_h
    }

    pub fn with_radii(&self, radii: Vec<f64>) -> Result<Self> {
        Self::new(radii, self.n_angles, self.stencil_h)
    }

    pub fn angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_angles as f64
    }

    /// Number of sample points, including the centre.
    pub fn len(&self) -> usize {
        1 + self.radii.len() * self.n_angles
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All sample points in a fixed order: centre first, then radius-major.
    pub fn points(&self) -> Vec<ComplexValue> {
        let mut pts = Vec::with_capacity(self.len());
        pts.push(Complex64::new(0.0, 0.0));
        for &r in &self.radii {
            for k in 0..self.n_angles {
                pts.push(Complex64::from_polar(r, self.angle(k)));
            }
        }
        pts
    }

    /// Points on the polar lattice as `(radius index, angle index, z)`.
    pub fn polar_points(&self) -> Vec<(usize, usize, ComplexValue)> {
        let mut pts = Vec::with_capacity(self.radii.len() * self.n_angles);
        for (i, &r) in self.radii.iter().enumerate() {
            for k in 0..self.n_angles {
                pts.push((i, k, Complex64::from_polar(r, self.angle(k))));
            }
        }
        pts
    }
}

impl Default for DiscGrid {
    /// Radii 0.1, …, 0.9 and 0.95; 64 angles; stencil step 1e-4.
    fn default() -> Self {
        let mut radii: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        radii.push(0.95);
        Self { radii, n_angles: 64, stencil_h: 1e-4 }
    }
}

/// The four stencil points `z+h, z−h, z+ih, z−ih`, all required in the disc.
pub(crate) fn stencil(z: ComplexValue, h: f64) -> Result<[ComplexValue; 4]> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("stencil step h = {h} must be > 0")));
    }
    let pts = [z + h, z - h, z + I * h, z - I * h];
    for p in pts {
        if !(p.norm() < 1.0) {
            return Err(Error::Domain(format!("stencil point {p} around {z} leaves the disc")));
        }
    }
    Ok(pts)
}

/// Central-difference Wirtinger derivative `½(∂x + i∂y)f` at `z`.
pub fn wirtinger_dbar(f: &ScalarFunction, z: ComplexValue, h: f64) -> Result<ComplexValue> {
    let [xp, xm, yp, ym] = stencil(z, h)?;
    let dx = (f.eval(xp) - f.eval(xm)) / (2.0 * h);
    let dy = (f.eval(yp) - f.eval(ym)) / (2.0 * h);
    Ok(0.5 * (dx + I * dy))
}

/// Largest `|∂̄f|` over the grid.
pub fn holomorphy_residual(f: &ScalarFunction, grid: &DiscGrid) -> Result<f64> {
    let h = grid.stencil_h();
    let values: Vec<Result<f64>> = grid
        .points()
        .into_par_iter()
        .map(|z| wirtinger_dbar(f, z, h).map(|d| d.norm()))
        .collect();
    max_in_order(values)
}

/// Fixed-order max reduction; the first error wins.
pub(crate) fn max_in_order(values: Vec<Result<f64>>) -> Result<f64> {
    let mut best = 0.0_f64;
    for v in values {
        best = best.max(v?);
    }
    Ok(best)
}
