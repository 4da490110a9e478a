//! Power allocation between data and artificial noise.
//!
//! For a fixed `W` the secrecy rate of one pair depends on `ε` only through
//! five scalars ([`PowerCoefficients`]); it is unimodal in `ε`, so the
//! optimizer is a golden-section search. The closed-form derivative and the
//! approximate stationary point are kept for validation and bracketing.

use nalgebra::DMatrix;

use crate::channel::UeId;
use crate::error::{Error, Result};
use crate::linalg::{row_product, C64};
use crate::rates::RateEvaluator;

/// Smallest admissible power-allocation factor.
pub const EPS_LO: f64 = 1e-3;

/// `(√5 − 1)/2`
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCoefficients {
    /// `|h_k^H w_k|²`
    pub a1: f64,
    /// `‖h_k^H W_k‖²`
    pub b1: f64,
    /// `|h_e^H w_k|²`
    pub a2: f64,
    /// `‖h_e^H W_k‖²`
    pub b2: f64,
    /// `‖h_e^H V‖²`
    pub v: f64,
    /// `‖h_k^H V‖²`, zero for a null-space AN matrix.
    pub v_lue: f64,
    pub k_users: usize,
    pub n_b: usize,
    pub p_b: f64,
    pub sigma2: f64,
}

impl PowerCoefficients {
    /// Coefficients of pair `(e, k)` for precoder `w`.
    pub fn for_pair(ev: &RateEvaluator<'_>, w: &DMatrix<C64>, e: usize, k: usize) -> Result<Self> {
        let ch = ev.channels();
        if e >= ch.num_eue() {
            return Err(Error::Index { what: "EUE", index: e, limit: ch.num_eue() });
        }
        if k >= ch.num_lue() {
            return Err(Error::Index { what: "LUE", index: k, limit: ch.num_lue() });
        }
        let zk = row_product(ch.channel(UeId::Lue(k)), w);
        let ze = row_product(ch.channel(UeId::Eue(e)), w);
        Ok(Self::from_rows(&zk, &ze, k, (ev.lue_leakage()[k], ev.an_leakage()[e]), ev, w))
    }

    fn from_rows(
        zk: &[C64],
        ze: &[C64],
        k: usize,
        (v_lue, v): (f64, f64),
        ev: &RateEvaluator<'_>,
        w: &DMatrix<C64>,
    ) -> Self {
        let a1 = zk[k].norm_sqr();
        let a2 = ze[k].norm_sqr();
        Self {
            a1,
            b1: (zk.iter().map(|x| x.norm_sqr()).sum::<f64>() - a1).max(0.0),
            a2,
            b2: (ze.iter().map(|x| x.norm_sqr()).sum::<f64>() - a2).max(0.0),
            v,
            v_lue,
            k_users: w.ncols(),
            n_b: w.nrows(),
            p_b: ev.p_b(),
            sigma2: ev.sigma2(),
        }
    }

    /// Coefficients of every pair, indexed `[e][k]`.
    pub fn all_pairs(ev: &RateEvaluator<'_>, w: &DMatrix<C64>) -> Vec<Vec<Self>> {
        let ch = ev.channels();
        let lue_rows: Vec<Vec<C64>> = (0..ch.num_lue())
            .map(|k| row_product(ch.channel(UeId::Lue(k)), w))
            .collect();
        (0..ch.num_eue())
            .map(|e| {
                let ze = row_product(ch.channel(UeId::Eue(e)), w);
                (0..ch.num_lue())
                    .map(|k| {
                        let leak = (ev.lue_leakage()[k], ev.an_leakage()[e]);
                        Self::from_rows(&lue_rows[k], &ze, k, leak, ev, w)
                    })
                    .collect()
            })
            .collect()
    }

    fn powers(&self, eps: f64) -> (f64, f64) {
        (eps * self.p_b / self.k_users as f64, (1.0 - eps) * self.p_b / self.n_b as f64)
    }

    /// `R_kk(ε)`
    pub fn lue_rate(&self, eps: f64) -> f64 {
        let (es, ea) = self.powers(eps);
        (es * self.a1 / (es * self.b1 + ea * self.v_lue + self.sigma2)).ln_1p()
    }

    /// `R_ek(ε)`
    pub fn eue_rate(&self, eps: f64) -> f64 {
        let (es, ea) = self.powers(eps);
        (es * self.a2 / (es * self.b2 + ea * self.v + self.sigma2)).ln_1p()
    }

    /// `R_kk(ε) − R_ek(ε)` (not clamped).
    pub fn secrecy_gap(&self, eps: f64) -> f64 {
        self.lue_rate(eps) - self.eue_rate(eps)
    }
}

/// Closed-form `∂S_{e,k}/∂ε`, assuming no AN reaches the LUE
/// (`v_lue = 0`).
pub fn secrecy_derivative(eps: f64, c: &PowerCoefficients) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(format!("power allocation factor must lie in (0, 1], got {eps}")));
    }
    let k = c.k_users as f64;
    let n = c.n_b as f64;
    let (p, s2) = (c.p_b, c.sigma2);
    let first = c.a1 * s2 / ((s2 * k + c.b1 * p * eps) * (s2 * k + (c.a1 + c.b1) * p * eps));
    let an = k * p * c.v * (1.0 - eps);
    let second = c.a2 * n * (s2 * n + p * c.v)
        / ((s2 * k * n + c.b2 * n * p * eps + an) * (s2 * k * n + (c.a2 + c.b2) * n * p * eps + an));
    Ok(k * p * (first - second))
}

/// Both branches of the simplified stationary-point formula
/// `(−KV ± √(A₂N_bKV)) / (A₂N_b − KV)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxRoots {
    pub minus: f64,
    pub plus: f64,
}

/// Returns `None` when the denominator `A₂N_b − KV` is numerically zero.
pub fn approx_roots(c: &PowerCoefficients) -> Option<ApproxRoots> {
    let kv = c.k_users as f64 * c.v;
    let an = c.a2 * c.n_b as f64;
    let den = an - kv;
    if den.abs() <= 1e-12 * (an.abs() + kv.abs()).max(f64::MIN_POSITIVE) {
        return None;
    }
    let root = (an * kv).max(0.0).sqrt();
    Some(ApproxRoots { minus: (-kv - root) / den, plus: (-kv + root) / den })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GssResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    /// Final bracket `[lo, hi]`.
    pub bracket: (f64, f64),
}

/// Golden-section maximization of `f` on `[lo, hi]`. Stops once the bracket
/// is no wider than `tol` and returns its midpoint. On a function that is
/// not unimodal the result is a local maximum.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> GssResult {
    assert!(lo < hi, "golden_section needs lo < hi");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    GssResult { x, value: f(x), iterations, bracket: (a, b) }
}

/// Which function of `ε` the power-allocation step maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsilonTarget {
    /// The pair with the smallest secrecy gap at the current `ε`.
    #[default]
    BottleneckPair,
    /// `min_{e,k}` over every pair.
    AllPairs,
    /// `min_k R_kk` (EUE channels unknown).
    MinLueRate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonChoice {
    pub epsilon: f64,
    /// Objective value at `epsilon`.
    pub value: f64,
    /// Pair `(e, k)` the search was run on, if any.
    pub pair: Option<(usize, usize)>,
}

/// Picks `ε ∈ [EPS_LO, 1]` for a fixed precoder. `current` is the factor
/// used to identify the bottleneck pair; `fixed` bypasses the search.
pub fn optimize_epsilon(
    ev: &RateEvaluator<'_>,
    w: &DMatrix<C64>,
    target: EpsilonTarget,
    current: f64,
    tol: f64,
    fixed: Option<f64>,
) -> Result<EpsilonChoice> {
    if let Some(eps) = fixed {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::domain(format!("power allocation factor must lie in (0, 1], got {eps}")));
        }
        return Ok(EpsilonChoice { epsilon: eps, value: f64::NAN, pair: None });
    }
    let coeffs = PowerCoefficients::all_pairs(ev, w);
    let choice = match target {
        EpsilonTarget::BottleneckPair => {
            let pair = ev.min_secrecy_rate(w, current)?.gap_pair;
            let c = coeffs[pair.0][pair.1];
            let r = golden_section(|x| c.secrecy_gap(x), EPS_LO, 1.0, tol);
            EpsilonChoice { epsilon: r.x, value: r.value, pair: Some(pair) }
        }
        EpsilonTarget::AllPairs => {
            let f = |x: f64| {
                coeffs
                    .iter()
                    .flatten()
                    .map(|c| c.secrecy_gap(x))
                    .fold(f64::INFINITY, f64::min)
            };
            let r = golden_section(f, EPS_LO, 1.0, tol);
            EpsilonChoice { epsilon: r.x, value: r.value, pair: None }
        }
        EpsilonTarget::MinLueRate => {
            let lue: Vec<PowerCoefficients> = coeffs[0].clone();
            let f = |x: f64| lue.iter().map(|c| c.lue_rate(x)).fold(f64::INFINITY, f64::min);
            let r = golden_section(f, EPS_LO, 1.0, tol);
            EpsilonChoice { epsilon: r.x, value: r.value, pair: None }
        }
    };
    Ok(EpsilonChoice { epsilon: choice.epsilon.clamp(EPS_LO, 1.0), ..choice })
}
