//! SINRs, spectral efficiencies and secrecy rates, all in nats.

use nalgebra::DMatrix;

pub use crate::channel::UeId;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, projected_norm_sq, row_product, C64};
use crate::precoding::power_split;

/// Effective noise `σ_ε² = ε_s^{-1}(𝟙_EUE ε_a ‖h^H V‖² + σ²)`.
pub fn effective_noise(
    is_eue: bool,
    h: &[C64],
    v: &DMatrix<C64>,
    eps_s: f64,
    eps_a: f64,
    sigma2: f64,
) -> Result<f64> {
    if !(eps_s > 0.0) {
        return Err(Error::domain("data power ε_s must be positive"));
    }
    let an = if is_eue && eps_a > 0.0 { eps_a * projected_norm_sq(h, v) } else { 0.0 };
    Ok((an + sigma2) / eps_s)
}

/// Rate of stream `k` at a receiver with channel `h`, written with explicit
/// transmit powers and a sum over the AN columns `v_n`.
pub fn rate_power_form(
    h: &[C64],
    w: &DMatrix<C64>,
    k: usize,
    v: &DMatrix<C64>,
    is_eue: bool,
    eps_s: f64,
    eps_a: f64,
    sigma2: f64,
) -> f64 {
    let z = row_product(h, w);
    let signal = eps_s * z[k].norm_sqr();
    let interference: f64 = z
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, x)| eps_s * x.norm_sqr())
        .sum();
    let an: f64 = if is_eue {
        v.column_iter()
            .map(|col| eps_a * crate::linalg::inner(h, col.as_slice()).norm_sqr())
            .sum()
    } else {
        0.0
    };
    (signal / (interference + an + sigma2)).ln_1p()
}

/// The pieces of one rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBreakdown {
    /// `|h^H w_k|²`
    pub signal_power: f64,
    /// `Σ_{j≠k} |h^H w_j|²`
    pub interference: f64,
    /// `‖h^H V‖²`
    pub an_power: f64,
    pub sigma_eps2: f64,
    pub rate_nats: f64,
}

impl RateBreakdown {
    pub fn sinr(&self) -> f64 {
        self.signal_power / (self.interference + self.sigma_eps2)
    }
}

/// Minimum secrecy rate over all pairs and the pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSecrecy {
    /// `min_{e,k} [R_kk − R_ek]⁺`
    pub value: f64,
    /// `min_{e,k} (R_kk − R_ek)` before clamping.
    pub gap: f64,
    /// `(e, k)` minimizing the clamped rate; ties resolve to the
    /// lexicographically smallest pair.
    pub pair: (usize, usize),
    /// `(e, k)` minimizing the unclamped gap.
    pub gap_pair: (usize, usize),
}

/// Evaluates rates for a fixed channel set and AN matrix.
///
/// The AN leakage `‖h_u^H V‖²` of every user is computed once on
/// construction.
#[derive(Debug, Clone)]
pub struct RateEvaluator<'a> {
    channels: &'a ChannelSet,
    an_leakage: Vec<f64>,
    lue_leakage: Vec<f64>,
    p_b: f64,
    sigma2: f64,
}

impl<'a> RateEvaluator<'a> {
    pub fn new(channels: &'a ChannelSet, v: &DMatrix<C64>, p_b: f64, sigma2: f64) -> Self {
        let an_leakage = (0..channels.num_eue())
            .map(|e| projected_norm_sq(channels.channel(UeId::Eue(e)), v))
            .collect();
        let lue_leakage = (0..channels.num_lue())
            .map(|k| projected_norm_sq(channels.channel(UeId::Lue(k)), v))
            .collect();
        Self { channels, an_leakage, lue_leakage, p_b, sigma2 }
    }

    pub fn channels(&self) -> &ChannelSet {
        self.channels
    }

    pub fn p_b(&self) -> f64 {
        self.p_b
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `‖h_e^H V‖²` for every EUE.
    pub fn an_leakage(&self) -> &[f64] {
        &self.an_leakage
    }

    /// `‖h_k^H V‖²` for every LUE; zero up to rounding when `V` projects
    /// onto the null space of the LUE channels.
    pub fn lue_leakage(&self) -> &[f64] {
        &self.lue_leakage
    }

    fn check(&self, u: UeId, k: usize) -> Result<()> {
        let (num_k, num_e) = (self.channels.num_lue(), self.channels.num_eue());
        match u {
            UeId::Lue(i) if i >= num_k => {
                return Err(Error::Index { what: "LUE", index: i, limit: num_k })
            }
            UeId::Eue(i) if i >= num_e => {
                return Err(Error::Index { what: "EUE", index: i, limit: num_e })
            }
            _ => {}
        }
        if k >= num_k {
            return Err(Error::Index { what: "stream", index: k, limit: num_k });
        }
        Ok(())
    }

    /// `σ_ε²` of user `u` at power-allocation factor `epsilon`. AN reaching
    /// an LUE is counted too, which only matters when `V` was designed on
    /// other channels than the ones evaluated.
    pub fn effective_noise(&self, u: UeId, epsilon: f64) -> Result<f64> {
        let split = power_split(epsilon, self.p_b, self.channels.num_lue(), self.channels.n_b())?;
        let an = match u {
            UeId::Lue(k) => split.eps_a * self.lue_leakage[k],
            UeId::Eue(e) => split.eps_a * self.an_leakage[e],
        };
        Ok((an + self.sigma2) / split.eps_s)
    }

    fn breakdown_from_row(&self, u: UeId, k: usize, z: &[C64], sigma_eps2: f64) -> RateBreakdown {
        let signal_power = z[k].norm_sqr();
        let interference = norm_sq(z) - signal_power;
        let an_power = match u {
            UeId::Lue(k) => self.lue_leakage[k],
            UeId::Eue(e) => self.an_leakage[e],
        };
        RateBreakdown {
            signal_power,
            interference: interference.max(0.0),
            an_power,
            sigma_eps2,
            rate_nats: (signal_power / (interference.max(0.0) + sigma_eps2)).ln_1p(),
        }
    }

    pub fn breakdown(&self, u: UeId, k: usize, w: &DMatrix<C64>, epsilon: f64) -> Result<RateBreakdown> {
        self.check(u, k)?;
        let z = row_product(self.channels.channel(u), w);
        let s = self.effective_noise(u, epsilon)?;
        Ok(self.breakdown_from_row(u, k, &z, s))
    }

    /// `R_{u,k}`: rate of UE `u` decoding the stream of LUE `k`.
    pub fn rate(&self, u: UeId, k: usize, w: &DMatrix<C64>, epsilon: f64) -> Result<f64> {
        Ok(self.breakdown(u, k, w, epsilon)?.rate_nats)
    }

    /// `S_{e,k} = [R_kk − R_ek]⁺`.
    pub fn secrecy_rate(&self, e: usize, k: usize, w: &DMatrix<C64>, epsilon: f64) -> Result<f64> {
        Ok(self.secrecy_gap(e, k, w, epsilon)?.max(0.0))
    }

    /// `R_kk − R_ek` without the clamp.
    pub fn secrecy_gap(&self, e: usize, k: usize, w: &DMatrix<C64>, epsilon: f64) -> Result<f64> {
        Ok(self.rate(UeId::Lue(k), k, w, epsilon)? - self.rate(UeId::Eue(e), k, w, epsilon)?)
    }

    /// All unclamped gaps as an `E × K` matrix.
    pub fn gap_table(&self, w: &DMatrix<C64>, epsilon: f64) -> Result<DMatrix<f64>> {
        let (num_k, num_e) = (self.channels.num_lue(), self.channels.num_eue());
        if w.ncols() != num_k || w.nrows() != self.channels.n_b() {
            return Err(Error::Dimension(format!(
                "precoder is {}x{}, expected {}x{}",
                w.nrows(),
                w.ncols(),
                self.channels.n_b(),
                num_k
            )));
        }
        let lue_rates: Vec<f64> = (0..num_k)
            .map(|k| {
                let u = UeId::Lue(k);
                let z = row_product(self.channels.channel(u), w);
                let s = self.effective_noise(u, epsilon)?;
                Ok(self.breakdown_from_row(u, k, &z, s).rate_nats)
            })
            .collect::<Result<_>>()?;
        let mut table = DMatrix::zeros(num_e, num_k);
        for e in 0..num_e {
            let u = UeId::Eue(e);
            let z = row_product(self.channels.channel(u), w);
            let s = self.effective_noise(u, epsilon)?;
            for k in 0..num_k {
                table[(e, k)] = lue_rates[k] - self.breakdown_from_row(u, k, &z, s).rate_nats;
            }
        }
        Ok(table)
    }

    /// Clamped secrecy rates `S_{e,k}` as an `E × K` matrix.
    pub fn secrecy_table(&self, w: &DMatrix<C64>, epsilon: f64) -> Result<DMatrix<f64>> {
        Ok(self.gap_table(w, epsilon)?.map(|x| x.max(0.0)))
    }

    pub fn min_secrecy_rate(&self, w: &DMatrix<C64>, epsilon: f64) -> Result<MinSecrecy> {
        let table = self.gap_table(w, epsilon)?;
        let mut best = (f64::INFINITY, (0, 0));
        for e in 0..table.nrows() {
            for k in 0..table.ncols() {
                if table[(e, k)] < best.0 {
                    best = (table[(e, k)], (e, k));
                }
            }
        }
        // clamped ties: every pair at or below zero reports 0, so the first
        // non-positive pair wins
        let (gap, gap_pair) = best;
        let mut pair = gap_pair;
        if gap <= 0.0 {
            'scan: for e in 0..table.nrows() {
                for k in 0..table.ncols() {
                    if table[(e, k)] <= 0.0 {
                        pair = (e, k);
                        break 'scan;
                    }
                }
            }
        }
        Ok(MinSecrecy { value: gap.max(0.0), gap, pair, gap_pair })
    }

    /// `min_k R_kk`, the objective when EUE channels are unknown.
    pub fn min_lue_rate(&self, w: &DMatrix<C64>, epsilon: f64) -> Result<(f64, usize)> {
        let mut best = (f64::INFINITY, 0);
        for k in 0..self.channels.num_lue() {
            let r = self.rate(UeId::Lue(k), k, w, epsilon)?;
            if r < best.0 {
                best = (r, k);
            }
        }
        Ok(best)
    }
}
