//! Scaling-and-squaring matrix exponential with a degree-13 Padé core
//! (Higham 2005, "The scaling and squaring method for the matrix
//! exponential revisited").

use nalgebra::DMatrix;
use num_complex::Complex64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub(crate) fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, a[(0, 0)].exp());
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = a * cr(0.5f64.powi(s));

    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = PADE13;

    let w1 = &a6 * cr(b[13]) + &a4 * cr(b[11]) + &a2 * cr(b[9]);
    let w = &a6 * w1 + &a6 * cr(b[7]) + &a4 * cr(b[5]) + &a2 * cr(b[3]) + &id * cr(b[1]);
    let u = &a * w;
    let z1 = &a6 * cr(b[12]) + &a4 * cr(b[10]) + &a2 * cr(b[8]);
    let v = &a6 * z1 + &a6 * cr(b[6]) + &a4 * cr(b[4]) + &a2 * cr(b[2]) + &id * cr(b[0]);

    let p = &v + &u;
    let q = &v - &u;
    // q is well conditioned for ‖a‖₁ ≤ θ₁₃
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
