//! Per-pair surrogates `g_{k,e}(W) = f₁(LUE k) − f₂(EUE e, stream k)`.
//!
//! The bounds are invariant to scaling a user's channel by `c` and its
//! noise by `c²`, so internally every channel is whitened by its effective
//! noise `σ_ε²` and the bounds are evaluated with unit noise.

use nalgebra::DMatrix;

use super::bounds::{f1_lower, f2_upper};
use crate::channel::{ChannelSet, UeId};
use crate::error::{Error, Result};
use crate::linalg::{row_product, C64};

/// Expansion point `W^{(t)}` with the per-user quantities the surrogates
/// need.
#[derive(Debug, Clone)]
pub struct SurrogatePoint {
    pub w_t: DMatrix<C64>,
    pub sigma_eps2_lue: Vec<f64>,
    pub sigma_eps2_eue: Vec<f64>,
    /// When false only the LUE terms are kept (EUE channels unknown).
    pub eavesdroppers: bool,
    // whitened channels g_u = h_u / σ_ε,u as columns
    lue: DMatrix<C64>,
    eue: DMatrix<C64>,
    // rows g_u^H W^{(t)}, one row per user
    lue_rows: DMatrix<C64>,
    eue_rows: DMatrix<C64>,
    pairs: Vec<(usize, usize)>,
    terms: Terms,
}

/// Precomputed scalar coefficients of every surrogate term.
#[derive(Debug, Clone)]
struct Terms {
    // per LUE k: (constant, linear weight 2/(b+1), quadratic weight α)
    lue: Vec<(f64, f64, f64)>,
    // per (e, k): (constant, 1/(a+b+1), b/(b+1))
    eue: DMatrix<(f64, f64, f64)>,
}

fn whiten(h: &DMatrix<C64>, noise: &[f64]) -> DMatrix<C64> {
    let mut g = h.clone();
    for (j, mut col) in g.column_iter_mut().enumerate() {
        col.unscale_mut(noise[j].sqrt());
    }
    g
}

impl SurrogatePoint {
    pub fn new(
        channels: &ChannelSet,
        w_t: DMatrix<C64>,
        sigma_eps2_lue: Vec<f64>,
        sigma_eps2_eue: Vec<f64>,
        eavesdroppers: bool,
    ) -> Result<Self> {
        let (k, e) = (channels.num_lue(), channels.num_eue());
        if w_t.nrows() != channels.n_b() || w_t.ncols() != k {
            return Err(Error::Dimension(format!(
                "expansion point is {}x{}, expected {}x{k}",
                w_t.nrows(),
                w_t.ncols(),
                channels.n_b()
            )));
        }
        if sigma_eps2_lue.len() != k || sigma_eps2_eue.len() != e {
            return Err(Error::Dimension("one effective noise per user is required".into()));
        }
        if sigma_eps2_lue.iter().chain(&sigma_eps2_eue).any(|s| !(*s > 0.0)) {
            return Err(Error::domain("effective noise must be positive"));
        }
        let lue = whiten(channels.lue_matrix(), &sigma_eps2_lue);
        let eue = whiten(channels.eue_matrix(), &sigma_eps2_eue);
        let lue_rows = lue.ad_mul(&w_t);
        let eue_rows = eue.ad_mul(&w_t);

        let lue_terms = (0..k)
            .map(|kk| {
                let a = lue_rows[(kk, kk)].norm_sqr();
                let b = lue_rows.row(kk).norm_squared() - a;
                let (i, t) = (b + 1.0, a + b + 1.0);
                let constant = (a / i).ln_1p() - (a + 1.0) / i + 1.0 / t;
                (constant, 2.0 / i, a / (t * i))
            })
            .collect();
        let eue_terms = DMatrix::from_fn(e, k, |ee, kk| {
            let a = eue_rows[(ee, kk)].norm_sqr();
            let b = eue_rows.row(ee).norm_squared() - a;
            let (i, t) = (b + 1.0, a + b + 1.0);
            let constant = (a / i).ln_1p() + b - a / (t * i);
            (constant, 1.0 / t, b / i)
        });
        let pairs = if eavesdroppers {
            (0..e).flat_map(|ee| (0..k).map(move |kk| (kk, ee))).collect()
        } else {
            (0..k).map(|kk| (kk, usize::MAX)).collect()
        };
        Ok(Self {
            w_t,
            sigma_eps2_lue,
            sigma_eps2_eue,
            eavesdroppers,
            lue,
            eue,
            lue_rows,
            eue_rows,
            pairs,
            terms: Terms { lue: lue_terms, eue: eue_terms },
        })
    }

    pub fn num_lue(&self) -> usize {
        self.lue.ncols()
    }

    /// Surrogate terms as `(k, e)`; `e == usize::MAX` marks an LUE-only term.
    pub(crate) fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `|h_u^H w_k^{(t)}|²` (unwhitened).
    pub fn signal_at(&self, u: UeId, k: usize) -> f64 {
        let (rows, noise) = self.rows_and_noise(u);
        rows.0[(rows.1, k)].norm_sqr() * noise
    }

    /// `‖h_u^H W_k^{(t)}‖²` (unwhitened).
    pub fn interference_at(&self, u: UeId, k: usize) -> f64 {
        self.total_at(u) - self.signal_at(u, k)
    }

    /// `‖h_u^H W^{(t)}‖²` (unwhitened).
    pub fn total_at(&self, u: UeId) -> f64 {
        let (rows, noise) = self.rows_and_noise(u);
        rows.0.row(rows.1).norm_squared() * noise
    }

    fn rows_and_noise(&self, u: UeId) -> ((&DMatrix<C64>, usize), f64) {
        match u {
            UeId::Lue(k) => ((&self.lue_rows, k), self.sigma_eps2_lue[k]),
            UeId::Eue(e) => ((&self.eue_rows, e), self.sigma_eps2_eue[e]),
        }
    }

    /// Received rows `(G_L^H W, G_E^H W)` of the whitened channels.
    pub(crate) fn rows(&self, w: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
        (self.lue.ad_mul(w), self.eue.ad_mul(w))
    }

    /// Value of every surrogate term for the rows of some `W`, in the
    /// order of [`Self::pairs`].
    pub(crate) fn term_values(&self, zl: &DMatrix<C64>, ze: &DMatrix<C64>, out: &mut Vec<f64>) {
        out.clear();
        for &(k, e) in &self.pairs {
            let mut g = self.lue_term(zl, k);
            if e != usize::MAX {
                g -= self.eue_term(ze, e, k);
            }
            out.push(g);
        }
    }

    fn lue_term(&self, zl: &DMatrix<C64>, k: usize) -> f64 {
        let (c, lin, quad) = self.terms.lue[k];
        let t = self.lue_rows[(k, k)];
        c + lin * (t.conj() * zl[(k, k)]).re - quad * zl.row(k).norm_squared()
    }

    fn eue_term(&self, ze: &DMatrix<C64>, e: usize, k: usize) -> f64 {
        let (c, inv_total, interf) = self.terms.eue[(e, k)];
        let mut cross = 0.0;
        let mut others = 0.0;
        for j in 0..ze.ncols() {
            if j != k {
                cross += (self.eue_rows[(e, j)].conj() * ze[(e, j)]).re;
                others += ze[(e, j)].norm_sqr();
            }
        }
        c + inv_total * ze.row(e).norm_squared() - 2.0 * cross + interf * others
    }

    /// Accumulates `weight · ∇_Z g_p` for term `p` into the row gradients.
    pub(crate) fn accumulate_grad(
        &self,
        p: usize,
        weight: f64,
        zl: &DMatrix<C64>,
        ze: &DMatrix<C64>,
        dl: &mut DMatrix<C64>,
        de: &mut DMatrix<C64>,
    ) {
        let (k, e) = self.pairs[p];
        let (_, lin, quad) = self.terms.lue[k];
        for j in 0..zl.ncols() {
            dl[(k, j)] -= zl[(k, j)] * (2.0 * quad * weight);
        }
        dl[(k, k)] += self.lue_rows[(k, k)] * (lin * weight);
        if e == usize::MAX {
            return;
        }
        let (_, inv_total, interf) = self.terms.eue[(e, k)];
        for j in 0..ze.ncols() {
            let mut d = -ze[(e, j)] * (2.0 * inv_total);
            if j != k {
                d += self.eue_rows[(e, j)] * 2.0 - ze[(e, j)] * (2.0 * interf);
            }
            de[(e, j)] += d * weight;
        }
    }

    /// Maps row gradients back to a gradient on `W`.
    pub(crate) fn grad_w(&self, dl: &DMatrix<C64>, de: &DMatrix<C64>) -> DMatrix<C64> {
        &self.lue * dl + &self.eue * de
    }
}

/// Reference evaluation of `g_{k,e}(W)` through the generic bounds on
/// unwhitened channels (`f₁` with the LUE's `σ_ε²`, `f₂` with the EUE's).
pub fn pair_surrogate(
    k: usize,
    e: usize,
    w: &DMatrix<C64>,
    point: &SurrogatePoint,
    channels: &ChannelSet,
) -> f64 {
    let split = |h: &[C64], m: &DMatrix<C64>| {
        let row = row_product(h, m);
        let g1 = vec![row[k]];
        let g2: Vec<C64> = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, x)| *x)
            .collect();
        (g1, g2)
    };
    let hk = channels.channel(UeId::Lue(k));
    let (g1, g2) = split(hk, w);
    let (g1_t, g2_t) = split(hk, &point.w_t);
    let f1 = f1_lower(&g1, &g2, &g1_t, &g2_t, point.sigma_eps2_lue[k]);
    if !point.eavesdroppers {
        return f1;
    }
    let he = channels.channel(UeId::Eue(e));
    let (g1, g2) = split(he, w);
    let (g1_t, g2_t) = split(he, &point.w_t);
    f1 - f2_upper(&g1, &g2, &g1_t, &g2_t, point.sigma_eps2_eue[e])
}
