//! Null-space artificial noise, RZF initialization and the MRT / far-field
//! baselines.

use nalgebra::DMatrix;

use crate::channel::{ChannelSet, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, hermitian_condition_number, C64};

/// Condition number of `H^H H` above which a Tikhonov term is added.
pub const REGULARIZE_ABOVE: f64 = 1e10;
/// Condition number treated as numerically rank deficient.
pub const RANK_DEFICIENT_ABOVE: f64 = 1e15;

/// Scaling applied to the null-space projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnNormalization {
    /// `V = I − H(H^H H)^{-1}H^H` as is; `tr(V^H V) = N_b − K`.
    #[default]
    Projector,
    /// Projector scaled by `√(N_b/(N_b−K))` so that `tr(V^H V) = N_b`.
    FullTrace,
}

/// Null-space AN matrix together with the conditioning of the Gram matrix
/// it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct AnMatrix {
    pub v: DMatrix<C64>,
    pub condition_number: f64,
    pub regularized: bool,
}

/// Orthogonal projector onto the complement of the span of `H_b`'s columns.
pub fn null_space_an(h: &DMatrix<C64>, normalization: AnNormalization) -> Result<AnMatrix> {
    let n = h.nrows();
    let k = h.ncols();
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("cannot project out {k} channels in dimension {n}")));
    }
    let mut gram = h.ad_mul(h);
    let condition = hermitian_condition_number(&gram);
    if !condition.is_finite() || condition > RANK_DEFICIENT_ABOVE {
        return Err(Error::RankDeficient { condition });
    }
    let regularized = condition > REGULARIZE_ABOVE;
    if regularized {
        let tikhonov = 1e-12 * gram.trace().re / k as f64;
        for i in 0..k {
            gram[(i, i)] += C64::new(tikhonov, 0.0);
        }
    }
    let chol = gram
        .cholesky()
        .ok_or(Error::RankDeficient { condition })?;
    let x = chol.solve(&h.adjoint());
    let mut v = DMatrix::<C64>::identity(n, n) - h * x;
    // remove the rounding-level anti-Hermitian part
    v = (&v + v.adjoint()).scale(0.5);
    if normalization == AnNormalization::FullTrace && n > k {
        v.scale_mut((n as f64 / (n - k) as f64).sqrt());
    }
    Ok(AnMatrix { v, condition_number: condition, regularized })
}

/// Rescales `w` so that `‖W‖_F² = K` (number of columns). A zero matrix is
/// returned unchanged.
pub fn normalize_frobenius(mut w: DMatrix<C64>) -> DMatrix<C64> {
    let p = frobenius_sq(&w);
    if p > 0.0 {
        w.scale_mut((w.ncols() as f64 / p).sqrt());
    }
    w
}

/// Regularized zero-forcing `(H H^H + σ²I)^{-1} H`, normalized to
/// `‖W‖_F² = K`.
///
/// Evaluated through the push-through identity
/// `(H H^H + σ²I)^{-1} H = H (H^H H + σ²I)^{-1}` so only a `K × K` system
/// is factored.
pub fn rzf_init(h: &DMatrix<C64>, sigma2: f64) -> Result<DMatrix<C64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain(format!("noise power must be positive, got {sigma2}")));
    }
    let k = h.ncols();
    let mut gram = h.ad_mul(h);
    for i in 0..k {
        gram[(i, i)] += C64::new(sigma2, 0.0);
    }
    let inv = gram
        .cholesky()
        .ok_or_else(|| Error::domain("regularized Gram matrix is not positive definite"))?
        .inverse();
    Ok(normalize_frobenius(h * inv))
}

/// Matched filter with unit-norm columns.
pub fn mrt_beamfocus(h: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let mut w = h.clone();
    for (k, mut col) in w.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::domain(format!("LUE {k} has an all-zero channel")));
        }
        col.unscale_mut(norm);
    }
    Ok(w)
}

/// RZF designed on the planar-wave approximation of the LUE channels.
/// Returns the precoder together with the far-field channel set it was
/// designed on.
pub fn ff_beamform(scenario: &Scenario) -> Result<(DMatrix<C64>, ChannelSet)> {
    let ff = scenario.far_field_channels()?;
    let w = rzf_init(ff.lue_matrix(), scenario.sigma2)?;
    Ok((w, ff))
}

/// Per-stream data power `ε_s` and per-dimension AN power `ε_a` (watts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub eps_s: f64,
    pub eps_a: f64,
}

pub fn power_split(epsilon: f64, p_b: f64, k: usize, n_b: usize) -> Result<PowerSplit> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!("power allocation factor must lie in (0, 1], got {epsilon}")));
    }
    Ok(PowerSplit {
        eps_s: epsilon * p_b / k as f64,
        eps_a: (1.0 - epsilon) * p_b / n_b as f64,
    })
}

/// Beamfocusing matrix, AN matrix and power-allocation factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingState {
    pub w: DMatrix<C64>,
    pub v: DMatrix<C64>,
    pub epsilon: f64,
}

impl PrecodingState {
    pub fn split(&self, p_b: f64) -> Result<PowerSplit> {
        power_split(self.epsilon, p_b, self.w.ncols(), self.w.nrows())
    }

    /// Radiated power `ε_s‖W‖_F² + ε_a tr(V^H V)`.
    pub fn radiated_power(&self, p_b: f64) -> Result<f64> {
        let s = self.split(p_b)?;
        Ok(s.eps_s * frobenius_sq(&self.w) + s.eps_a * frobenius_sq(&self.v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, hermitian_residual, row_product, norm_sq};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn projector_of_first_basis_vector() {
        let mut h = DMatrix::zeros(4, 1);
        h[(0, 0)] = c(1.0);
        let v = null_space_an(&h, AnNormalization::Projector).unwrap().v;
        let mut expected = DMatrix::<C64>::identity(4, 4);
        expected[(0, 0)] = c(0.0);
        assert!(frobenius_sq(&(v - expected)) < 1e-28);
    }

    #[test]
    fn projector_with_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gaussian_matrix(&mut rng, 8, 3, 1.0);
        let q = g.qr().q();
        let v = null_space_an(&q, AnNormalization::Projector).unwrap().v;
        let expected = DMatrix::<C64>::identity(8, 8) - &q * q.adjoint();
        assert!(frobenius_sq(&(v - expected)).sqrt() < 1e-12);
    }

    #[test]
    fn random_projector_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = gaussian_matrix(&mut rng, 16, 3, 1.0);
        let an = null_space_an(&h, AnNormalization::Projector).unwrap();
        assert!(!an.regularized);
        let v = an.v;
        assert!(frobenius_sq(&h.ad_mul(&v)).sqrt() <= 1e-10);
        let mut eig: Vec<f64> = v.clone().symmetric_eigenvalues().iter().cloned().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, e) in eig.iter().enumerate() {
            let want = if i < 3 { 0.0 } else { 1.0 };
            assert!((e - want).abs() < 1e-8, "eig {i} = {e}");
        }
        assert!(hermitian_residual(&v) < 1e-12);
        assert!((v.trace().re - 13.0).abs() < 1e-9);
    }

    #[test]
    fn full_trace_rescale() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = gaussian_matrix(&mut rng, 9, 2, 1.0);
        let v = null_space_an(&h, AnNormalization::FullTrace).unwrap().v;
        assert!((frobenius_sq(&v) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let col = gaussian_matrix(&mut rng, 6, 1, 1.0);
        let h = DMatrix::from_columns(&[col.column(0), col.column(0)]);
        match null_space_an(&h, AnNormalization::Projector) {
            Err(Error::RankDeficient { condition }) => assert!(condition > 1e10),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn ill_conditioned_is_regularized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian_matrix(&mut rng, 6, 1, 1.0);
        let b = gaussian_matrix(&mut rng, 6, 1, 1.0);
        let nearly = &a + b.scale(1e-6);
        let h = DMatrix::from_columns(&[a.column(0), nearly.column(0)]);
        let an = null_space_an(&h, AnNormalization::Projector).unwrap();
        assert!(an.regularized);
        assert!(an.condition_number > REGULARIZE_ABOVE);
    }

    #[test]
    fn rzf_normalized_and_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = gaussian_matrix(&mut rng, 9, 2, 1.0);
        let sigma2 = 0.3;
        let w = rzf_init(&h, sigma2).unwrap();
        assert!((frobenius_sq(&w) - 2.0).abs() < 1e-12);

        // oracle: solve the 9x9 system column by column with an LU factorization
        let mut a = &h * h.adjoint();
        for i in 0..9 {
            a[(i, i)] += c(sigma2);
        }
        let lu = a.lu();
        let cols: Vec<DVector<C64>> = (0..2)
            .map(|j| lu.solve(&h.column(j).into_owned()).unwrap())
            .collect();
        let raw = DMatrix::from_columns(&cols);
        let oracle = normalize_frobenius(raw);
        assert!(frobenius_sq(&(w - oracle)).sqrt() < 1e-10);
    }

    #[test]
    fn rzf_high_noise_tends_to_mrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = gaussian_matrix(&mut rng, 5, 1, 1.0);
        let w = rzf_init(&h, 1e9).unwrap();
        let cos = h.column(0).dotc(&w.column(0)).norm() / (h.column(0).norm() * w.column(0).norm());
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mrt_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = gaussian_matrix(&mut rng, 7, 1, 1.0);
        let w = mrt_beamfocus(&h).unwrap();
        let expected = h.column(0).unscale(h.column(0).norm());
        assert!((w.column(0) - expected).norm() < 1e-14);

        let h = gaussian_matrix(&mut rng, 7, 3, 1.0);
        let w = mrt_beamfocus(&h).unwrap();
        assert!((frobenius_sq(&w) - 3.0).abs() < 1e-12);

        let z = DMatrix::<C64>::zeros(4, 2);
        assert!(mrt_beamfocus(&z).is_err());
    }

    #[test]
    fn mrt_orthogonal_channels_do_not_interfere() {
        let mut h = DMatrix::<C64>::zeros(4, 2);
        h[(0, 0)] = c(2.0);
        h[(3, 1)] = C64::new(0.0, 1.5);
        let w = mrt_beamfocus(&h).unwrap();
        let row = row_product(h.column(0).as_slice(), &w);
        assert_eq!(row[1], c(0.0));
    }

    #[test]
    fn power_split_values() {
        let s = power_split(1.0, 1e-3, 4, 81).unwrap();
        assert_eq!(s.eps_a, 0.0);
        let s = power_split(0.5, 1e-3, 4, 81).unwrap();
        assert!((s.eps_s - 1.25e-4).abs() < 1e-18);
        assert!((s.eps_a - 6.172_839_506_172_84e-6).abs() < 1e-15);
        assert!(power_split(0.0, 1.0, 1, 1).is_err());
        assert!(power_split(1.2, 1.0, 1, 1).is_err());
    }

    #[test]
    fn radiated_power_within_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = gaussian_matrix(&mut rng, 12, 3, 1.0);
        let v = null_space_an(&h, AnNormalization::Projector).unwrap().v;
        let w = rzf_init(&h, 0.1).unwrap();
        for eps in [0.1, 0.5, 1.0] {
            let st = PrecodingState { w: w.clone(), v: v.clone(), epsilon: eps };
            assert!(st.radiated_power(2.0).unwrap() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn an_vanishes_at_every_lue() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let h = gaussian_matrix(&mut rng, 20, 4, 1.0);
        let v = null_space_an(&h, AnNormalization::Projector).unwrap().v;
        for k in 0..4 {
            let hk = h.column(k);
            let leak = norm_sq(&row_product(hk.as_slice(), &v));
            assert!(leak <= 1e-12 * hk.norm_squared(), "{leak}");
        }
    }
}
