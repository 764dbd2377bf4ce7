//! Transfer-function numerators through the Faddeev-LeVerrier resolvent
//! expansion, and polynomial roots from companion matrices.

use nalgebra::{Complex, DMatrix, DVector};

/// Resolvent expansion of a square matrix `A`:
///
/// ```text
/// adj(sI - A) = sum_{k=0}^{n-1} terms[k] * s^(n-1-k)
/// det(sI - A) = s^n + charpoly[1] s^(n-1) + ... + charpoly[n]
/// ```
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub terms: Vec<DMatrix<f64>>,
    /// Monic characteristic polynomial, descending powers, `charpoly[0] == 1`.
    pub charpoly: Vec<f64>,
}

pub fn faddeev_leverrier(a: &DMatrix<f64>) -> Resolvent {
    let n = a.nrows();
    let mut terms = Vec::with_capacity(n);
    let mut charpoly = Vec::with_capacity(n + 1);
    charpoly.push(1.0);
    let mut nk = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        let mk = a * &nk;
        let ck = -mk.trace() / k as f64;
        charpoly.push(ck);
        terms.push(nk);
        nk = mk + DMatrix::identity(n, n) * ck;
    }
    Resolvent { terms, charpoly }
}

/// Coefficients of `c^T adj(sI - A) b`, descending from `s^(n-1)`.
pub fn numerator_coefficients(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Vec<f64> {
    faddeev_leverrier(a).terms.iter().map(|nk| c.dot(&(nk * b))).collect()
}

/// Evaluates a real polynomial (descending coefficients) and its derivative.
fn eval_with_derivative(coeffs: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a polynomial with descending coefficients and nonzero leading
/// term, via the eigenvalues of its companion matrix followed by two Newton
/// polishing steps.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    assert!(!coeffs.is_empty() && coeffs[0] != 0.0, "leading coefficient must be nonzero");
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    let mut comp = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        comp[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues()
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..2 {
                let (p, dp) = eval_with_derivative(coeffs, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
                    break;
                }
                z -= step;
            }
            z
        })
        .collect()
}
