//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;

/// `a^H b` for two equally long complex slices.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum()
}

/// Row vector `h^H W` returned as a plain vector of length `W.ncols()`.
pub fn row_product(h: &[C64], w: &DMatrix<C64>) -> Vec<C64> {
    assert_eq!(h.len(), w.nrows());
    (0..w.ncols())
        .map(|j| inner(h, w.column(j).as_slice()))
        .collect()
}

/// `‖h^H M‖²` for an explicit square matrix `M`.
pub fn projected_norm_sq(h: &[C64], m: &DMatrix<C64>) -> f64 {
    norm_sq(&row_product(h, m))
}

/// One circularly-symmetric complex Gaussian draw with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// `rows × cols` matrix with i.i.d. `CN(0, variance)` entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> DMatrix<C64> {
    // column-major fill keeps draws reproducible regardless of storage order
    let data: Vec<C64> = (0..rows * cols)
        .map(|_| complex_gaussian(rng, variance))
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Ratio of the extreme eigenvalues of a Hermitian positive semi-definite
/// matrix. Returns `f64::INFINITY` when the smallest eigenvalue is not
/// positive.
pub fn hermitian_condition_number(m: &DMatrix<C64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Hermitian-ness residual `‖M − M^H‖_F`.
pub fn hermitian_residual(m: &DMatrix<C64>) -> f64 {
    frobenius_sq(&(m - m.adjoint())).sqrt()
}

pub fn column_vec(m: &DMatrix<C64>, j: usize) -> DVector<C64> {
    m.column(j).into_owned()
}
