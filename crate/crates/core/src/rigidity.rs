//! Rigidity checks: a function whose real part is a positive contraction and
//! whose transform `F(z) + zF(z)*` is holomorphic must be constant.
//!
//! The transform `g = F + zF*` is inverted pointwise by
//! `(1 − |z|²)F(z) = g(z) − z·g(z)*`, which needs no holomorphy. Dividing `g`
//! by `1 − z` gives `h₁ = φ·Re F + i·Im F`, with `h₂ = φ·I − h₁`, and both
//! halves have non-negative real part on the disc.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc::{self, mobius_phi, poisson_factor, ComplexValue, DiscGrid, ScalarFunction, I, ONE};
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

/// A named operator-valued function on the disc.
#[derive(Clone)]
pub struct OperatorFunction {
    dim: usize,
    name: String,
    eval: Arc<dyn Fn(ComplexValue) -> Result<OperatorMatrix> + Send + Sync>,
}

impl OperatorFunction {
    pub fn new<F>(dim: usize, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(ComplexValue) -> Result<OperatorMatrix> + Send + Sync + 'static,
    {
        Self { dim, name: name.into(), eval: Arc::new(f) }
    }

    /// Constant function `z ↦ c`.
    pub fn constant(c: OperatorMatrix, name: impl Into<String>) -> Self {
        Self::new(c.dim(), name, move |_| Ok(c.clone()))
    }

    /// Scalar function embedded as `1 × 1` matrices.
    pub fn from_scalar(f: &ScalarFunction) -> Self {
        let f = f.clone();
        Self::new(1, f.name().to_string(), move |z| Ok(OperatorMatrix::scalar(1, f.eval(z))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, z: ComplexValue) -> Result<OperatorMatrix> {
        let v = (self.eval)(z)?;
        if v.dim() != self.dim {
            return Err(Error::Invalid(format!(
                "{} returned a {}x{} matrix, expected dimension {}",
                self.name,
                v.dim(),
                v.dim(),
                self.dim
            )));
        }
        Ok(v)
    }
}

impl fmt::Debug for OperatorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFunction").field("dim", &self.dim).field("name", &self.name).finish()
    }
}

/// `(LF)(z) = F(z) + z·conj(F(z))`.
pub fn l_transform(f: &ScalarFunction) -> ScalarFunction {
    let f = f.clone();
    ScalarFunction::new(format!("L[{}]", f.name()), move |z| {
        let v = f.eval(z);
        v + z * v.conj()
    })
}

/// `g(z) = F(z) + z·F(z)*`.
pub fn g_transform(f: &OperatorFunction) -> OperatorFunction {
    let f = f.clone();
    OperatorFunction::new(f.dim(), format!("g[{}]", f.name()), move |z| {
        let v = f.eval(z)?;
        Ok(&v + &v.adjoint().scale(z))
    })
}

/// `F(z) = (g(z) − z·g(z)*)/(1 − |z|²)`.
pub fn recover_f(g: &OperatorFunction, z: ComplexValue) -> Result<OperatorMatrix> {
    let denom = 1.0 - z.norm_sqr();
    if !(denom > 0.0) {
        return Err(Error::Domain(format!("recover_f: |z| = {} is not < 1", z.norm())));
    }
    let gz = g.eval(z)?;
    Ok((&gz - &gz.adjoint().scale(z)).scale_real(1.0 / denom))
}

/// `h₁ = g/(1 − z)` and `h₂ = φ·I − h₁`.
pub fn h_split(g: &OperatorFunction) -> (OperatorFunction, OperatorFunction) {
    let d = g.dim();
    let g1 = g.clone();
    let h1 = OperatorFunction::new(d, format!("h1[{}]", g.name()), move |z| {
        if z == ONE {
            return Err(Error::Domain("h1: pole at z = 1".into()));
        }
        Ok(g1.eval(z)?.scale(ONE / (ONE - z)))
    });
    let h1c = h1.clone();
    let h2 = OperatorFunction::new(d, format!("h2[{}]", g.name()), move |z| {
        let phi = mobius_phi(z)?;
        Ok(&OperatorMatrix::scalar(d, phi) - &h1c.eval(z)?)
    });
    (h1, h2)
}

/// Max over the grid of `‖Re h₁(z) − Re F(z)·(1−|z|²)/|1−z|²‖`.
pub fn re_h1_identity_check(f: &OperatorFunction, grid: &DiscGrid) -> Result<f64> {
    let (h1, _) = h_split(&g_transform(f));
    let values: Vec<Result<f64>> = grid
        .points()
        .into_par_iter()
        .map(|z| {
            let lhs = h1.eval(z)?.re_part();
            let rhs = f.eval(z)?.re_part().scale_real(poisson_factor(z)?);
            Ok((&lhs - &rhs).operator_norm())
        })
        .collect();
    disc::max_in_order(values)
}

/// Result of the scalar extreme-point diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConvexityOutcome {
    /// `max_j max_z |f_j(z) − φ(z)|`.
    Deviation { max_deviation: f64 },
    /// `Re h_j(0) ≤ tol`: `h_j` is an imaginary constant and `f_j` is undefined.
    Degenerate { index: u8, re_h_at_0: f64 },
}

/// Normalizes `h_j` to `f_j = (h_j − i·Im h_j(0))/Re h_j(0)`, which has
/// `f_j(0) = 1`, and measures how far each `f_j` is from `φ`.
pub fn convexity_diagnostic(f: &ScalarFunction, grid: &DiscGrid, tol: f64) -> Result<ConvexityOutcome> {
    let g = l_transform(f);
    let h1 = |z: Complex64| g.eval(z) / (ONE - z);
    let h2 = |z: Complex64| -> Result<Complex64> { Ok(mobius_phi(z)? - h1(z)) };
    let origin = Complex64::new(0.0, 0.0);
    let at0 = [h1(origin), h2(origin)?];
    for (j, h0) in at0.iter().enumerate() {
        if h0.re <= tol {
            return Ok(ConvexityOutcome::Degenerate { index: j as u8 + 1, re_h_at_0: h0.re });
        }
    }
    let normalize = |hz: Complex64, h0: Complex64| (hz - I * h0.im) / h0.re;
    for h0 in at0 {
        let f0 = normalize(h0, h0);
        if (f0 - ONE).norm() > 1e-12 {
            return Err(Error::Invalid(format!("normalized f_j(0) = {f0} is not 1")));
        }
    }
    let mut worst = 0.0_f64;
    for z in grid.points() {
        let phi = mobius_phi(z)?;
        let f1 = normalize(h1(z), at0[0]);
        let f2 = normalize(h2(z)?, at0[1]);
        worst = worst.max((f1 - phi).norm()).max((f2 - phi).norm());
    }
    Ok(ConvexityOutcome::Deviation { max_deviation: worst })
}

/// Central-difference `∂̄` applied entrywise to an operator function.
pub fn operator_wirtinger_dbar(f: &OperatorFunction, z: ComplexValue, h: f64) -> Result<OperatorMatrix> {
    let [xp, xm, yp, ym] = disc::stencil(z, h)?;
    let dx = (&f.eval(xp)? - &f.eval(xm)?).scale_real(0.5 / h);
    let dy = (&f.eval(yp)? - &f.eval(ym)?).scale_real(0.5 / h);
    Ok((&dx + &dy.scale(I)).scale_real(0.5))
}

/// Largest entry of `|∂̄f|` over the grid, with the point where it occurs.
pub fn operator_holomorphy_residual(f: &OperatorFunction, grid: &DiscGrid) -> Result<(f64, ComplexValue)> {
    let h = grid.stencil_h();
    let points = grid.points();
    let values: Vec<Result<f64>> =
        points.par_iter().map(|&z| operator_wirtinger_dbar(f, z, h).map(|d| d.max_abs())).collect();
    let mut best = (0.0, points[0]);
    for (v, &z) in values.into_iter().zip(&points) {
        let v = v?;
        if v > best.0 {
            best = (v, z);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ConstantConfirmed,
    HypothesisViolated,
    /// Hypotheses hold numerically but `F` is not constant. Never expected
    /// while rigidity holds and the discretization is adequate.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ConstantConfirmed => "CONSTANT_CONFIRMED",
            Verdict::HypothesisViolated => "HYPOTHESIS_VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidityTolerances {
    pub eps_holo: f64,
    pub eps_const: f64,
    /// Slack on the eigenvalue bounds `0 ≤ Re F ≤ I`.
    pub strip_tol: f64,
}

impl Default for RigidityTolerances {
    fn default() -> Self {
        Self { eps_holo: 1e-6, eps_const: 1e-8, strip_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub strip_ok: bool,
    /// First grid point where `Re F` leaves `[0, I]`, if any.
    pub strip_violation_at: Option<[f64; 2]>,
    pub holo_residual: f64,
    pub holo_worst_at: [f64; 2],
    pub constancy_deviation: f64,
    /// `F(0)` read back from `g` through the inversion formula.
    pub recovered_constant: OperatorMatrix,
    pub verdict: Verdict,
}

/// Checks the hypotheses (real part in `[0, I]`, `F + zF*` holomorphic) and
/// the conclusion (`F ≡ F(0)`) on the grid.
pub fn rigidity_verdict(f: &OperatorFunction, grid: &DiscGrid, tol: &RigidityTolerances) -> Result<RigidityReport> {
    let points = grid.points();
    let origin = Complex64::new(0.0, 0.0);
    let f0 = f.eval(origin)?;

    let per_point: Vec<Result<(bool, f64)>> = points
        .par_iter()
        .map(|&z| {
            let fz = f.eval(z)?;
            let in_strip = fz.re_part().is_positive_contraction(tol.strip_tol)?;
            Ok((in_strip, (&fz - &f0).operator_norm()))
        })
        .collect();
    let mut strip_violation_at = None;
    let mut deviation = 0.0_f64;
    for (r, z) in per_point.into_iter().zip(&points) {
        let (in_strip, dev) = r?;
        if !in_strip && strip_violation_at.is_none() {
            strip_violation_at = Some([z.re, z.im]);
        }
        deviation = deviation.max(dev);
    }

    let g = g_transform(f);
    let (holo_residual, worst) = operator_holomorphy_residual(&g, grid)?;
    let strip_ok = strip_violation_at.is_none();
    let verdict = if !strip_ok || holo_residual > tol.eps_holo {
        Verdict::HypothesisViolated
    } else if deviation <= tol.eps_const {
        Verdict::ConstantConfirmed
    } else {
        Verdict::Inconclusive
    };
    Ok(RigidityReport {
        strip_ok,
        strip_violation_at,
        holo_residual,
        holo_worst_at: [worst.re, worst.im],
        constancy_deviation: deviation,
        recovered_constant: recover_f(&g, origin)?,
        verdict,
    })
}

/// Built-in scalar test functions, selectable by id.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub id: String,
    pub function: ScalarFunction,
    pub expected: Verdict,
}

/// Ids: `const:re,im`, `linear` (`z/2 + ½`), `re-plus-half` (`Re z + ½`),
/// `abs-shift` (`|z|/2 + ¼`).
pub fn test_family(id: &str) -> Result<TestFamily> {
    let (function, expected) = match id {
        "linear" => (ScalarFunction::new(id, |z: Complex64| 0.5 * z + 0.5), Verdict::HypothesisViolated),
        "re-plus-half" => (ScalarFunction::new(id, |z: Complex64| Complex64::new(z.re + 0.5, 0.0)), Verdict::HypothesisViolated),
        "abs-shift" => (
            ScalarFunction::new(id, |z: Complex64| Complex64::new(0.5 * z.norm() + 0.25, 0.0)),
            Verdict::HypothesisViolated,
        ),
        _ => {
            let Some(args) = id.strip_prefix("const:") else {
                return Err(Error::Invalid(format!("unknown test family '{id}'")));
            };
            let parts: Vec<&str> = args.split(',').collect();
            let parsed: Vec<f64> = parts
                .iter()
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Invalid(format!("test family '{id}': expected const:re,im")))?;
            let [re, im] = parsed[..] else {
                return Err(Error::Invalid(format!("test family '{id}': expected const:re,im")));
            };
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::Invalid(format!("test family '{id}': non-finite constant")));
            }
            let c = Complex64::new(re, im);
            let expected = if (0.0..=1.0).contains(&re) { Verdict::ConstantConfirmed } else { Verdict::HypothesisViolated };
            (ScalarFunction::new(id, move |_| c), expected)
        }
    };
    Ok(TestFamily { id: id.to_string(), function, expected })
}

/// The non-constant members of the built-in registry.
pub const NON_CONSTANT_FAMILY: [&str; 3] = ["re-plus-half", "abs-shift", "linear"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_positive_contraction, rng};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn konst(v: Complex64) -> ScalarFunction {
        ScalarFunction::new("const", move |_| v)
    }

    #[test]
    fn l_transform_examples() {
        assert!((l_transform(&konst(ONE)).eval(c(0.5, 0.0)) - c(1.5, 0.0)).norm() < 1e-15);
        assert!((l_transform(&konst(I)).eval(c(0.3, 0.0)) - c(0.0, 0.7)).norm() < 1e-15);
        let id = ScalarFunction::new("z", |z| z);
        assert!((l_transform(&id).eval(c(0.0, 0.2)) - c(0.04, 0.2)).norm() < 1e-15);
    }

    #[test]
    fn l_transform_is_real_linear() {
        let f = ScalarFunction::new("f", |z: Complex64| z * z + c(0.1, 0.3));
        let g = ScalarFunction::new("g", |z: Complex64| z.conj() * 2.0);
        let a = 1.7;
        let combo = {
            let (f, g) = (f.clone(), g.clone());
            ScalarFunction::new("af+g", move |z| a * f.eval(z) + g.eval(z))
        };
        let z = c(0.2, -0.4);
        let lhs = l_transform(&combo).eval(z);
        let rhs = a * l_transform(&f).eval(z) + l_transform(&g).eval(z);
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn g_transform_examples() {
        let cm = OperatorMatrix::from_rows(&[vec![c(0.2, 1.0), c(1.0, -0.5)], vec![c(0.0, 0.3), c(0.7, 0.0)]]).unwrap();
        let g = g_transform(&OperatorFunction::constant(cm.clone(), "C"));
        let z = c(0.3, -0.6);
        let expected = &cm + &cm.adjoint().scale(z);
        assert!((&g.eval(z).unwrap() - &expected).max_abs() < 1e-15);
        let zero = g_transform(&OperatorFunction::constant(OperatorMatrix::zeros(2), "0"));
        assert_eq!(zero.eval(z).unwrap(), OperatorMatrix::zeros(2));
        let id = g_transform(&OperatorFunction::constant(OperatorMatrix::identity(3), "I"));
        assert!((&id.eval(c(0.5, 0.0)).unwrap() - &OperatorMatrix::scalar(3, c(1.5, 0.0))).max_abs() < 1e-15);
    }

    #[test]
    fn g_agrees_with_l_in_dimension_one() {
        let mut g = rng(3);
        for _ in 0..50 {
            let (a, b, k) = (g.random::<f64>(), g.random::<f64>(), g.random_range(0..4));
            let f = ScalarFunction::new("poly", move |z: Complex64| c(a, b) * z.powi(k) + c(b, -a) * z.conj());
            let z = crate::random::random_disc_point(0.95, &mut g);
            let lhs = l_transform(&f).eval(z);
            let rhs = g_transform(&OperatorFunction::from_scalar(&f)).eval(z).unwrap().get(0, 0);
            assert!((lhs - rhs).norm() <= 1e-15);
        }
    }

    #[test]
    fn recover_examples() {
        let cc = c(1.0, 2.0);
        let g = OperatorFunction::new(1, "C+zC*", move |z| Ok(OperatorMatrix::scalar(1, cc + z * cc.conj())));
        assert!((recover_f(&g, c(0.5, 0.0)).unwrap().get(0, 0) - cc).norm() < 1e-15);
        let zero = OperatorFunction::constant(OperatorMatrix::zeros(2), "0");
        assert_eq!(recover_f(&zero, c(0.1, 0.1)).unwrap(), OperatorMatrix::zeros(2));
        let n = OperatorMatrix::from_rows(&[vec![c(0.0, 0.0), ONE], vec![c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let g = g_transform(&OperatorFunction::constant(n.clone(), "N"));
        assert!((&recover_f(&g, c(0.3, 0.3)).unwrap() - &n).max_abs() < 1e-12);
        assert!(matches!(recover_f(&g, c(1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn h_split_examples() {
        let grid = DiscGrid::default();
        let pairs = [(1.0, 1.0, 0.0), (0.0, 0.0, 1.0), (0.5, 0.5, 0.5)];
        for (fval, w1, w2) in pairs {
            let f = OperatorFunction::constant(OperatorMatrix::scalar(2, c(fval, 0.0)), "F");
            let (h1, h2) = h_split(&g_transform(&f));
            for z in grid.points().into_iter().step_by(7) {
                let phi = mobius_phi(z).unwrap();
                let e1 = OperatorMatrix::scalar(2, phi * w1);
                let e2 = OperatorMatrix::scalar(2, phi * w2);
                assert!((&h1.eval(z).unwrap() - &e1).max_abs() < 1e-12);
                assert!((&h2.eval(z).unwrap() - &e2).max_abs() < 1e-12);
            }
        }
        let f = OperatorFunction::constant(OperatorMatrix::identity(1), "I");
        assert!(h_split(&g_transform(&f)).0.eval(ONE).is_err());
    }

    #[test]
    fn re_h1_identity() {
        let grid = DiscGrid::default();
        for m in [OperatorMatrix::from_real_diag(&[0.3, 0.9]), OperatorMatrix::zeros(2), OperatorMatrix::identity(2)] {
            let f = OperatorFunction::constant(m, "F");
            assert!(re_h1_identity_check(&f, &grid).unwrap() <= 1e-12);
        }
        // holds without holomorphy
        let f = OperatorFunction::new(1, "re z", |z: Complex64| Ok(OperatorMatrix::from_real_diag(&[z.re])));
        assert!(re_h1_identity_check(&f, &grid).unwrap() <= 1e-12);
    }

    #[test]
    fn convexity_examples() {
        let grid = DiscGrid::default();
        match convexity_diagnostic(&konst(c(0.5, 0.0)), &grid, 1e-12).unwrap() {
            ConvexityOutcome::Deviation { max_deviation } => assert!(max_deviation <= 1e-10),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            convexity_diagnostic(&konst(ONE), &grid, 1e-12).unwrap(),
            ConvexityOutcome::Degenerate { index: 2, .. }
        ));
        assert!(matches!(
            convexity_diagnostic(&konst(c(0.0, 0.4)), &grid, 1e-12).unwrap(),
            ConvexityOutcome::Degenerate { index: 1, .. }
        ));
        match convexity_diagnostic(&konst(c(0.25, 0.1)), &grid, 1e-12).unwrap() {
            ConvexityOutcome::Deviation { max_deviation } => assert!(max_deviation <= 1e-10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn convexity_invariant_under_imaginary_shift() {
        let grid = DiscGrid::default();
        let base = ScalarFunction::new("z/2+1/2", |z: Complex64| 0.5 * z + 0.5);
        let shifted = ScalarFunction::new("z/2+1/2+0.7i", |z: Complex64| 0.5 * z + c(0.5, 0.7));
        let dev = |f| match convexity_diagnostic(f, &grid, 1e-12).unwrap() {
            ConvexityOutcome::Deviation { max_deviation } => max_deviation,
            other => panic!("{other:?}"),
        };
        let (a, b) = (dev(&base), dev(&shifted));
        assert!(a > 1e-3);
        assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn verdict_examples() {
        let grid = DiscGrid::default();
        let tol = RigidityTolerances::default();
        let f = OperatorFunction::from_scalar(&konst(c(0.3, 0.7)));
        let r = rigidity_verdict(&f, &grid, &tol).unwrap();
        assert_eq!(r.verdict, Verdict::ConstantConfirmed);
        assert_eq!(r.constancy_deviation, 0.0);
        assert!((r.recovered_constant.get(0, 0) - c(0.3, 0.7)).norm() < 1e-15);

        let fam = test_family("re-plus-half").unwrap();
        let r = rigidity_verdict(&OperatorFunction::from_scalar(&fam.function), &grid, &tol).unwrap();
        assert_eq!(r.verdict, Verdict::HypothesisViolated);
        // ∂̄(LF)(0) = ½ at the centre
        let at0 = operator_wirtinger_dbar(&g_transform(&OperatorFunction::from_scalar(&fam.function)), c(0.0, 0.0), 1e-4)
            .unwrap();
        assert!((at0.get(0, 0) - c(0.5, 0.0)).norm() < 1e-8);
        assert!(r.holo_residual >= 0.5);

        let f = OperatorFunction::constant(OperatorMatrix::from_real_diag(&[0.0, 1.0]), "diag(0,1)");
        assert_eq!(rigidity_verdict(&f, &grid, &tol).unwrap().verdict, Verdict::ConstantConfirmed);
    }

    #[test]
    fn registry() {
        for id in NON_CONSTANT_FAMILY {
            let fam = test_family(id).unwrap();
            let f = OperatorFunction::from_scalar(&fam.function);
            let r = rigidity_verdict(&f, &DiscGrid::default(), &RigidityTolerances::default()).unwrap();
            assert_eq!(r.verdict, Verdict::HypothesisViolated, "{id}");
            assert!(r.holo_residual >= 1e-3, "{id}: {}", r.holo_residual);
        }
        assert_eq!(test_family("const:0.2,-3").unwrap().expected, Verdict::ConstantConfirmed);
        assert_eq!(test_family("const:1.2,0").unwrap().expected, Verdict::HypothesisViolated);
        assert!(test_family("const:1").is_err());
        assert!(test_family("nope").is_err());
    }

    #[test]
    fn random_operator_constants_confirmed() {
        let mut g = rng(21);
        let grid = DiscGrid::new(vec![0.3, 0.6, 0.9], 16, 1e-4).unwrap();
        for d in 1..=4 {
            let b = random_positive_contraction(d, &mut g);
            let a = random_hermitian(d, 2.0, &mut g);
            let f = OperatorFunction::constant(&b + &a.scale(I), "B+iA");
            let r = rigidity_verdict(&f, &grid, &RigidityTolerances::default()).unwrap();
            assert_eq!(r.verdict, Verdict::ConstantConfirmed);
        }
    }
}
