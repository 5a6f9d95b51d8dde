//! Small complex linear-algebra kernels shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Rank-revealing least-squares solve of `a * x = b` (minimum-norm solution).
///
/// Singular values below `max(nrows, ncols) * eps * s_max` are treated as zero.
pub(crate) fn lstsq(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let svd = a.clone().svd(true, true);
    let cutoff = svd_cutoff(a.nrows(), a.ncols(), svd.singular_values.as_slice());
    svd.solve(b, cutoff).expect("svd least-squares solve")
}

pub(crate) fn svd_cutoff(nrows: usize, ncols: usize, singular_values: &[f64]) -> f64 {
    let s_max = singular_values.iter().cloned().fold(0.0f64, f64::max);
    nrows.max(ncols) as f64 * f64::EPSILON * s_max
}

/// One draw of a circularly-symmetric complex Gaussian CN(0, variance).
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Squared Frobenius norm.
pub(crate) fn norm_sq(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn vec_norm_sq(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
