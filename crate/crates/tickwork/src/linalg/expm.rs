//! Matrix exponential by scaling and squaring with a Taylor kernel.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::operator::Operator;
use crate::error::{Error, Result};

/// One-norm (maximum absolute column sum).
fn one_norm(m: &Array2<C64>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// `exp(t a)` for a square complex matrix, accurate to ~1e-12 relative at
/// desk-scale norms. The matrix is scaled down to one-norm <= 1/4, summed as
/// a Taylor series to machine-epsilon truncation, then squared back up.
pub fn matrix_exp(a: &Operator, t: f64) -> Result<Operator> {
    if !t.is_finite() {
        return Err(Error::InvalidInput("matrix_exp: non-finite time".into()));
    }
    let dim = a.dim();
    let scaled = a.matrix() * C64::new(t, 0.0);
    let norm = one_norm(&scaled);
    if !norm.is_finite() {
        return Err(Error::InvalidInput("matrix_exp: non-finite entries".into()));
    }
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let b = &scaled / C64::new(2.0_f64.powi(squarings as i32), 0.0);

    let mut result = Array2::<C64>::eye(dim);
    let mut term = Array2::<C64>::eye(dim);
    for k in 1..=40u32 {
        term = term.dot(&b) / C64::new(k as f64, 0.0);
        result = result + &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Operator::new(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let a = Operator::zeros(3);
        let e = matrix_exp(&a, 1.0).unwrap();
        assert!((e.sub(&Operator::identity(3))).frobenius_norm() < 1e-14);
    }

    #[test]
    fn diagonal_case() {
        let a = Operator::from_diag(&[c(-1.0, 0.0), c(0.0, 1.0)]);
        let e = matrix_exp(&a, 2.0).unwrap();
        let expected = Operator::from_diag(&[c((-2.0f64).exp(), 0.0), c(2.0f64.cos(), 2.0f64.sin())]);
        assert!((e.sub(&expected)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn matches_truncated_taylor_series() {
        // 30-term Taylor oracle on a random-ish 4x4 with small norm, so the
        // plain series itself converges far below the comparison tolerance.
        let a = array![
            [c(0.1, 0.2), c(-0.3, 0.05), c(0.02, -0.1), c(0.0, 0.15)],
            [c(0.25, -0.1), c(-0.2, 0.3), c(0.1, 0.1), c(-0.05, 0.0)],
            [c(0.0, -0.2), c(0.15, 0.0), c(0.05, -0.25), c(0.3, 0.1)],
            [c(-0.1, 0.1), c(0.0, 0.05), c(-0.2, -0.1), c(0.1, 0.0)],
        ];
        let mut oracle = Array2::<C64>::eye(4);
        let mut term = Array2::<C64>::eye(4);
        for k in 1..=30u32 {
            term = term.dot(&a) / c(k as f64, 0.0);
            oracle = oracle + &term;
        }
        let e = matrix_exp(&Operator::new(a).unwrap(), 1.0).unwrap();
        let diff = e.matrix() - &oracle;
        let err: f64 = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-9, "taylor oracle mismatch: {err}");
    }

    #[test]
    fn rejects_non_finite_time() {
        let a = Operator::zeros(2);
        assert!(matrix_exp(&a, f64::NAN).is_err());
    }
}
