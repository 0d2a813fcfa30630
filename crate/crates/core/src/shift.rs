//! Truncated shift semigroup on `L²(ℝ₊)` and its Hardy-space picture.
//!
//! In the Laguerre basis `ℓ_n(x) = √2·e^{−x}·L_n(2x)` the right shift `S_t`
//! is lower triangular Toeplitz with entries `⟨S_t ℓ_m, ℓ_n⟩ = c_{n−m}(t)`,
//! the Taylor coefficients of `exp(−t(1+z)/(1−z))`. Matrix elements are
//! computed by panel Gauss–Legendre quadrature and compared with the series
//! coefficients, which are computed by power-series composition.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{phi_jt, Factor, FactorParams};
use crate::operator::OperatorMatrix;

/// First `N` Taylor coefficients of `φ_t(z) = exp(−tφ(z))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorCoeffs {
    pub t: f64,
    pub coeffs: Vec<f64>,
}

/// Writes `φ_t = e^{−t}·exp(u)` with `u(z) = −2tz/(1−z) = −2t Σ_{k≥1} z^k`
/// and expands `exp(u)` by `n·e_n = Σ_{k=1}^{n} k·u_k·e_{n−k}`.
pub fn taylor_varphi_t(t: f64, n: usize) -> Result<TaylorCoeffs> {
    if n == 0 {
        return Err(Error::Precondition("need at least one Taylor coefficient".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t = {t} must be finite and >= 0")));
    }
    let u = -2.0 * t;
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    for k in 1..n {
        let s: f64 = (1..=k).map(|j| j as f64 * u * e[k - j]).sum();
        e[k] = s / k as f64;
    }
    let scale = (-t).exp();
    Ok(TaylorCoeffs { t, coeffs: e.into_iter().map(|c| c * scale).collect() })
}

/// First `n` coefficients of the product of two power series.
pub fn cauchy_product(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (0..=k).filter(|&i| i < a.len() && k - i < b.len()).map(|i| a[i] * b[k - i]).sum())
        .collect()
}

/// Circle sampling used to expand matrix symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSampling {
    pub r: f64,
    pub n_samples: usize,
}

impl Default for SymbolSampling {
    fn default() -> Self {
        Self { r: 0.9, n_samples: 2048 }
    }
}

/// Matrix-valued Taylor coefficients.
#[derive(Debug, Clone)]
pub struct MatrixTaylorCoeffs {
    pub t: f64,
    pub coeffs: Vec<OperatorMatrix>,
    /// `r^{samples − N}`, the weight of the first aliased coefficient.
    pub aliasing_weight: f64,
    pub warnings: Vec<String>,
}

/// Coefficients of `z ↦ φ_{j,t}(z)` from an `r^{−n}`-scaled DFT on `|z| = r`.
pub fn taylor_matrix_symbol(
    params: &FactorParams,
    j: Factor,
    t: f64,
    n: usize,
    sampling: &SymbolSampling,
) -> Result<MatrixTaylorCoeffs> {
    let SymbolSampling { r, n_samples } = *sampling;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("sampling radius r = {r} must lie in (0, 1)")));
    }
    if n == 0 || 4 * n > n_samples {
        return Err(Error::Precondition(format!("order N = {n} must satisfy 1 <= N <= samples/4 = {}", n_samples / 4)));
    }
    let d = params.dim();
    let samples: Vec<Result<OperatorMatrix>> = (0..n_samples)
        .into_par_iter()
        .map(|k| phi_jt(params, j, t, Complex64::from_polar(r, 2.0 * PI * k as f64 / n_samples as f64)))
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let coeffs: Vec<OperatorMatrix> = (0..n)
        .into_par_iter()
        .map(|order| {
            let mut acc = DMatrix::<Complex64>::zeros(d, d);
            for (k, s) in samples.iter().enumerate() {
                let angle = -2.0 * PI * ((order * k) % n_samples) as f64 / n_samples as f64;
                acc += s.matrix() * Complex64::from_polar(1.0, angle);
            }
            let scale = 1.0 / (n_samples as f64 * r.powi(order as i32));
            OperatorMatrix::from_matrix(acc * Complex64::new(scale, 0.0)).expect("finite coefficients")
        })
        .collect();
    let aliasing_weight = r.powi((n_samples - n) as i32);
    let mut warnings = Vec::new();
    if aliasing_weight > 1e-10 {
        warnings.push(format!("aliasing weight r^(samples-N) = {aliasing_weight:e} exceeds 1e-10"));
    }
    Ok(MatrixTaylorCoeffs { t, coeffs, aliasing_weight, warnings })
}

/// Lower block-triangular Toeplitz matrix of a multiplication operator in
/// the monomial basis: block `(i, j)` is `c_{i−j}` for `i ≥ j`.
#[derive(Debug, Clone)]
pub struct ToeplitzTruncation {
    pub order: usize,
    pub dim: usize,
    pub matrix: DMatrix<Complex64>,
}

impl ToeplitzTruncation {
    fn from_block_fn(order: usize, dim: usize, block: impl Fn(usize) -> DMatrix<Complex64>) -> Self {
        let mut matrix = DMatrix::<Complex64>::zeros(order * dim, order * dim);
        for diag in 0..order {
            let b = block(diag);
            for col in 0..order - diag {
                let row = col + diag;
                matrix.view_mut((row * dim, col * dim), (dim, dim)).copy_from(&b);
            }
        }
        Self { order, dim, matrix }
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<Complex64> {
        self.matrix.view((i * self.dim, j * self.dim), (self.dim, self.dim)).into_owned()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!((self.order, self.dim), (other.order, other.dim), "truncation shapes differ");
        Self { order: self.order, dim: self.dim, matrix: &self.matrix * &other.matrix }
    }
}

/// Scalar symbol acting diagonally on `E = ℂ^d`.
pub fn toeplitz_of(coeffs: &TaylorCoeffs, d: usize) -> ToeplitzTruncation {
    ToeplitzTruncation::from_block_fn(coeffs.coeffs.len(), d, |k| {
        DMatrix::from_diagonal_element(d, d, Complex64::new(coeffs.coeffs[k], 0.0))
    })
}

pub fn toeplitz_of_blocks(coeffs: &MatrixTaylorCoeffs) -> ToeplitzTruncation {
    let d = coeffs.coeffs[0].dim();
    ToeplitzTruncation::from_block_fn(coeffs.coeffs.len(), d, |k| coeffs.coeffs[k].matrix().clone())
}

/// `√2·e^{−x}·L_n(2x)`.
pub fn laguerre_fn(n: usize, x: f64) -> f64 {
    laguerre_fns(n + 1, x)[n]
}

/// `ℓ_0(x), …, ℓ_{count−1}(x)` by the three-term recurrence
/// `(k+1)L_{k+1} = (2k+1−y)L_k − k·L_{k−1}`.
pub fn laguerre_fns(count: usize, x: f64) -> Vec<f64> {
    let y = 2.0 * x;
    let pre = std::f64::consts::SQRT_2 * (-x).exp();
    let mut out = Vec::with_capacity(count);
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..count {
        out.push(pre * cur);
        let next = ((2 * k + 1) as f64 - y) * cur - k as f64 * prev;
        prev = cur;
        cur = next / (k + 1) as f64;
    }
    out
}

/// Composite Gauss–Legendre rule on `[0, X]` for the Laguerre basis.
#[derive(Debug, Clone)]
pub struct LaguerreQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub basis_order: usize,
    /// Panel edges; the integrand may have a kink only at one of these.
    pub edges: Vec<f64>,
    /// `max |G − I|` for the Gram matrix of `ℓ_0, …, ℓ_{N−1}`.
    pub gram_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub basis_order: usize,
    pub x_max: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    /// Extra panel edges, e.g. the shift amounts `t` to be tested.
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

impl Default for QuadratureSpec {
    /// 16 basis functions, `[0, 60]`, 20 panels of 20 nodes.
    fn default() -> Self {
        Self { basis_order: 16, x_max: 60.0, panels: 20, nodes_per_panel: 20, breakpoints: Vec::new() }
    }
}

/// Gram residual allowed at construction.
pub const GRAM_REJECT: f64 = 1e-6;
/// Gram residual above which results carry an accuracy warning.
pub const GRAM_WARN: f64 = 1e-8;

impl LaguerreQuadrature {
    pub fn new(spec: &QuadratureSpec) -> Result<Self> {
        let QuadratureSpec { basis_order, x_max, panels, nodes_per_panel, ref breakpoints } = *spec;
        if basis_order == 0 || panels == 0 || nodes_per_panel == 0 || !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::Invalid("quadrature needs positive basis order, panels, nodes and x_max".into()));
        }
        let mut edges: Vec<f64> = (0..=panels).map(|i| x_max * i as f64 / panels as f64).collect();
        for &b in breakpoints {
            if !(b > 0.0 && b < x_max) {
                return Err(Error::Invalid(format!("breakpoint {b} must lie in (0, {x_max})")));
            }
            edges.push(b);
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let degree = std::num::NonZeroUsize::new(nodes_per_panel).expect("checked above");
        let rule = gauss_quad::legendre::GaussLegendre::new(degree);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            for &(x, wt) in rule.as_node_weight_pairs() {
                nodes.push(0.5 * (b - a) * x + 0.5 * (a + b));
                weights.push(0.5 * (b - a) * wt);
            }
        }
        let mut quad = Self { nodes, weights, basis_order, edges, gram_residual: 0.0 };
        quad.gram_residual = quad.gram_residual_of(basis_order);
        if quad.gram_residual > GRAM_REJECT {
            return Err(Error::Invalid(format!(
                "Laguerre Gram residual {:e} exceeds {GRAM_REJECT:e}; enlarge x_max or add nodes",
                quad.gram_residual
            )));
        }
        Ok(quad)
    }

    fn gram_residual_of(&self, order: usize) -> f64 {
        let values: Vec<Vec<f64>> = self.nodes.iter().map(|&x| laguerre_fns(order, x)).collect();
        let mut worst = 0.0_f64;
        for m in 0..order {
            for n in 0..=m {
                let g: f64 = values.iter().zip(&self.weights).map(|(v, w)| w * v[m] * v[n]).sum();
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn has_edge(&self, t: f64) -> bool {
        t == 0.0 || self.edges.iter().any(|&e| (e - t).abs() < 1e-12)
    }
}

/// `⟨S_t ℓ_m, ℓ_n⟩` at `(n, m)` for `n, m < N`, with any accuracy warnings.
#[derive(Debug, Clone)]
pub struct ShiftMatrix {
    pub t: f64,
    pub elements: DMatrix<f64>,
    pub warnings: Vec<String>,
}

pub fn shift_matrix_elements(t: f64, n: usize, quad: &LaguerreQuadrature) -> Result<ShiftMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("shift amount t = {t} must be finite and >= 0")));
    }
    if n == 0 || n > quad.basis_order {
        return Err(Error::Precondition(format!("order {n} must lie in 1..={}", quad.basis_order)));
    }
    let mut warnings = Vec::new();
    if quad.gram_residual > GRAM_WARN {
        warnings.push(format!("quadrature Gram residual {:e} exceeds {GRAM_WARN:e}", quad.gram_residual));
    }
    if !quad.has_edge(t) {
        warnings.push(format!("t = {t} is not a panel edge; the indicator kink lies inside a panel"));
    }
    let mut elements = DMatrix::<f64>::zeros(n, n);
    for ((&x, &w), _) in quad.nodes.iter().zip(&quad.weights).zip(0..) {
        if x < t {
            continue;
        }
        let shifted = laguerre_fns(n, x - t);
        let plain = laguerre_fns(n, x);
        for row in 0..n {
            for col in 0..n {
                elements[(row, col)] += w * shifted[col] * plain[row];
            }
        }
    }
    Ok(ShiftMatrix { t, elements, warnings })
}

/// Which identification of the basis with monomials the data supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisConvention {
    /// `ℓ_n ↦ z^n`.
    Standard,
    /// `(−1)^n ℓ_n ↦ z^n`.
    Alternating,
    Neither,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugationReport {
    pub t: f64,
    pub n_check: usize,
    /// `max |⟨S_t ℓ_m, ℓ_n⟩ − c_{n−m}(t)|` over `m ≤ n < N_check`.
    pub max_deviation: f64,
    /// Same with `(−1)^{n−m} c_{n−m}(t)`.
    pub alternating_deviation: f64,
    /// `max |⟨S_t ℓ_m, ℓ_n⟩|` over `n < m < N_check`.
    pub above_diagonal: f64,
    pub convention: BasisConvention,
    /// `max_m |Σ_{n<N} |⟨S_t ℓ_m, ℓ_n⟩|² + Σ_{k ≥ N−m} c_k(t)² − 1|`: the
    /// columns of an isometry, with truncated modes accounted for by the
    /// series tail.
    pub isometry_defect: f64,
    pub warnings: Vec<String>,
}

/// Series tail `Σ_{k≥K} c_k(t)² = 1 − Σ_{k<K} c_k(t)²`; `|φ_t| = 1` on the
/// circle so the full sum is 1.
fn tail_energy(coeffs: &[f64], k: usize) -> f64 {
    1.0 - coeffs[..k].iter().map(|c| c * c).sum::<f64>()
}

/// Compares quadrature matrix elements with Taylor coefficients.
pub fn conjugation_check(t: f64, n_check: usize, quad: &LaguerreQuadrature, tol: f64) -> Result<ConjugationReport> {
    let n = quad.basis_order;
    if n_check == 0 || 2 * n_check > n {
        return Err(Error::Precondition(format!("N_check = {n_check} must satisfy 1 <= N_check <= N/2 = {}", n / 2)));
    }
    let shift = shift_matrix_elements(t, n, quad)?;
    let c = taylor_varphi_t(t, n)?;
    let s = &shift.elements;
    let (mut dev, mut alt, mut upper) = (0.0_f64, 0.0_f64, 0.0_f64);
    for row in 0..n_check {
        for col in 0..n_check {
            let v = s[(row, col)];
            if row >= col {
                let k = row - col;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                dev = dev.max((v - c.coeffs[k]).abs());
                alt = alt.max((v - sign * c.coeffs[k]).abs());
            } else {
                upper = upper.max(v.abs());
            }
        }
    }
    let mut isometry_defect = 0.0_f64;
    for col in 0..n_check {
        let column: f64 = (0..n).map(|row| s[(row, col)].powi(2)).sum();
        isometry_defect = isometry_defect.max((column + tail_energy(&c.coeffs, n - col) - 1.0).abs());
    }
    let convention = if dev <= tol {
        BasisConvention::Standard
    } else if alt <= tol {
        BasisConvention::Alternating
    } else {
        BasisConvention::Neither
    };
    Ok(ConjugationReport {
        t,
        n_check,
        max_deviation: dev,
        alternating_deviation: alt,
        above_diagonal: upper,
        convention,
        isometry_defect,
        warnings: shift.warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedFactorization {
    /// `‖T₁T₂ − T‖`.
    pub product: f64,
    /// `‖T₁T₂ − T₂T₁‖`.
    pub commutation: f64,
}

impl TruncatedFactorization {
    pub fn residual(&self) -> f64 {
        self.product.max(self.commutation)
    }
}

/// Block-Toeplitz form of the factorization at truncation order `N`.
pub fn truncated_factorization_check(
    params: &FactorParams,
    t: f64,
    n: usize,
    sampling: &SymbolSampling,
) -> Result<TruncatedFactorization> {
    let t1 = toeplitz_of_blocks(&taylor_matrix_symbol(params, Factor::First, t, n, sampling)?);
    let t2 = toeplitz_of_blocks(&taylor_matrix_symbol(params, Factor::Second, t, n, sampling)?);
    let target = toeplitz_of(&taylor_varphi_t(t, n)?, params.dim());
    let p12 = t1.mul(&t2);
    let p21 = t2.mul(&t1);
    let norm = |m: DMatrix<Complex64>| m.singular_values().max();
    Ok(TruncatedFactorization {
        product: norm(&p12.matrix - &target.matrix),
        commutation: norm(&p12.matrix - &p21.matrix),
    })
}
