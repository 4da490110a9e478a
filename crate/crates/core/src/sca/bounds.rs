//! Concave lower / convex upper bounds of `ln(1 + ‖g1‖²/(‖g2‖² + σ²))`
//! around an expansion point `(g1_t, g2_t)`. Both bounds are tight at the
//! expansion point.
//!
//! Gradients use the real convention: for a complex coordinate `x + jy` the
//! returned value is `∂f/∂x + j ∂f/∂y`.

use crate::linalg::{norm_sq, C64};

/// `ln(1 + ‖g1‖²/(‖g2‖² + σ²))`
pub fn log_ratio(g1: &[C64], g2: &[C64], sigma2: f64) -> f64 {
    (norm_sq(g1) / (norm_sq(g2) + sigma2)).ln_1p()
}

/// Scalars of an expansion point shared by both bounds.
#[derive(Debug, Clone, Copy)]
struct Expansion {
    /// `‖g1_t‖²`
    a: f64,
    /// `‖g2_t‖²`
    b: f64,
    sigma2: f64,
}

impl Expansion {
    fn new(g1_t: &[C64], g2_t: &[C64], sigma2: f64) -> Self {
        Self { a: norm_sq(g1_t), b: norm_sq(g2_t), sigma2 }
    }

    fn value(&self) -> f64 {
        (self.a / (self.b + self.sigma2)).ln_1p()
    }

    fn total(&self) -> f64 {
        self.a + self.b + self.sigma2
    }

    fn interference(&self) -> f64 {
        self.b + self.sigma2
    }
}

fn dist_sq(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

impl Expansion {
    /// Part shared by both bounds, written as deviations from the expansion
    /// point so that it vanishes there without cancellation.
    fn shared(&self, g1: &[C64], g2: &[C64]) -> f64 {
        let d1 = norm_sq(g1) - self.a;
        let d2 = norm_sq(g2) - self.b;
        self.value() + d1 / self.total() - self.a * d2 / (self.total() * self.interference())
    }
}

/// Concave minorant `f₁` (linear in `g1`, minus a quadratic).
pub fn f1_lower(g1: &[C64], g2: &[C64], g1_t: &[C64], g2_t: &[C64], sigma2: f64) -> f64 {
    let x = Expansion::new(g1_t, g2_t, sigma2);
    x.shared(g1, g2) - dist_sq(g1, g1_t) / x.interference()
}

/// Convex majorant `f₂`.
pub fn f2_upper(g1: &[C64], g2: &[C64], g1_t: &[C64], g2_t: &[C64], sigma2: f64) -> f64 {
    let x = Expansion::new(g1_t, g2_t, sigma2);
    x.shared(g1, g2) + dist_sq(g2, g2_t) / sigma2
}

/// Gradient of [`f1_lower`] with respect to `(g1, g2)`.
pub fn f1_lower_grad(
    g1: &[C64],
    g2: &[C64],
    g1_t: &[C64],
    g2_t: &[C64],
    sigma2: f64,
) -> (Vec<C64>, Vec<C64>) {
    let x = Expansion::new(g1_t, g2_t, sigma2);
    let alpha = x.a / (x.total() * x.interference());
    let d1 = g1
        .iter()
        .zip(g1_t)
        .map(|(g, t)| t * (2.0 / x.interference()) - g * (2.0 * alpha))
        .collect();
    let d2 = g2.iter().map(|g| g * (-2.0 * alpha)).collect();
    (d1, d2)
}

/// Gradient of [`f2_upper`] with respect to `(g1, g2)`.
pub fn f2_upper_grad(
    g1: &[C64],
    g2: &[C64],
    g1_t: &[C64],
    g2_t: &[C64],
    sigma2: f64,
) -> (Vec<C64>, Vec<C64>) {
    let x = Expansion::new(g1_t, g2_t, sigma2);
    let s = sigma2;
    let d1 = g1.iter().map(|g| g * (2.0 / x.total())).collect();
    let quad = 2.0 / x.total() + 2.0 * x.b / (x.interference() * s);
    let d2 = g2
        .iter()
        .zip(g2_t)
        .map(|(g, t)| g * quad - t * (2.0 / s))
        .collect();
    (d1, d2)
}
