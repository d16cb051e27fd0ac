//! Dense complex linear algebra for non-Hermitian effective generators.

mod expm;
mod operator;
mod sylvester;

pub use expm::matrix_exp;
pub use operator::{
    anticommutator, commutator, dagger, frobenius_norm, trace, DensityMatrix, EffectiveGenerator,
    Operator, StateVector,
};
pub use sylvester::{sylvester_solve, SylvesterSolver};

use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;

use crate::error::Result;

extern "C" {
    fn openblas_set_num_threads(num: std::os::raw::c_int);
}

/// Pins OpenBLAS to one thread per call. The library parallelizes over
/// restarts, sweep points and grid cells with rayon; OpenBLAS's own worker
/// threads are unsafe under that kind of concurrent entry and the matrices
/// here are small anyway.
pub(crate) fn blas_single_thread() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Eigenvalues sorted by real part ascending, ties broken by imaginary part.
pub fn spectrum(a: &Operator) -> Result<Vec<C64>> {
    blas_single_thread();
    let (eigs, _) = a.matrix().eig()?;
    let mut vals: Vec<C64> = eigs.to_vec();
    vals.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn spectrum_sorted_by_real_then_imag() {
        let a = Operator::new(array![
            [c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-1.0, 2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(-1.0, -3.0)],
        ])
        .unwrap();
        let s = spectrum(&a).unwrap();
        assert!((s[0] - c(-1.0, -3.0)).norm() < 1e-12);
        assert!((s[1] - c(-1.0, 2.0)).norm() < 1e-12);
        assert!((s[2] - c(0.0, 1.0)).norm() < 1e-12);
    }
}
