//! Two-stage alternating optimization and the baseline schemes.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use nalgebra::DMatrix;

use crate::channel::{ChannelSet, Scenario};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, C64};
use crate::power::{optimize_epsilon, EpsilonTarget};
use crate::precoding::{
    ff_beamform, mrt_beamfocus, null_space_an, rzf_init, AnNormalization, PrecodingState,
};
use crate::rates::RateEvaluator;
use crate::sca::{sca_round, SolverOptions};

const MAX_EXTRAPOLATION: f64 = 1024.0;

/// What the base station knows about the eavesdroppers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum CsiMode {
    /// EUE channels unknown; the design maximizes the minimum LUE rate.
    S1,
    /// EUE channels perfectly known.
    #[default]
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Scheme {
    #[default]
    Proposed,
    NoAn,
    MrtAn,
    Ffb,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::NoAn, Scheme::MrtAn, Scheme::Ffb];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::NoAn => "no-an",
            Scheme::MrtAn => "mrt-an",
            Scheme::Ffb => "ffb",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

impl CsiMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CsiMode::S1 => "s1",
            CsiMode::S2 => "s2",
        }
    }
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(CsiMode::S1),
            "s2" => Ok(CsiMode::S2),
            _ => Err(Error::Config(format!("unknown CSI mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub mode: CsiMode,
    pub eta_out: f64,
    pub max_outer: usize,
    /// Fixes `ε` instead of optimizing it.
    pub epsilon_override: Option<f64>,
    pub scheme: Scheme,
    pub solver: SolverOptions,
    /// Bracket width at which the golden-section search stops.
    pub gss_tol: f64,
    pub epsilon_target: EpsilonTarget,
    pub an_normalization: AnNormalization,
    /// After each beamfocusing round, try longer steps along the direction
    /// the round moved in and keep the best one under the true objective.
    pub extrapolate: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: CsiMode::S2,
            eta_out: 1e-4,
            max_outer: 50,
            epsilon_override: None,
            scheme: Scheme::Proposed,
            solver: SolverOptions::default(),
            gss_tol: 1e-6,
            epsilon_target: EpsilonTarget::BottleneckPair,
            an_normalization: AnNormalization::Projector,
            extrapolate: true,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_out > 0.0) {
            return Err(Error::Config(format!("eta_out must be positive, got {}", self.eta_out)));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if let Some(eps) = self.epsilon_override {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::Config(format!("epsilon must lie in (0, 1], got {eps}")));
            }
        }
        if !(self.gss_tol > 0.0) {
            return Err(Error::Config("gss_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub scheme: Scheme,
    pub mode: CsiMode,
    /// Design objective after initialization and after every outer
    /// iteration: the unclamped minimum secrecy gap in S2 mode, the minimum
    /// LUE rate in S1 mode.
    pub xi_trace: Vec<f64>,
    pub state: PrecodingState,
    /// Minimum secrecy rate on the true channels, nats/s/Hz.
    pub min_sr_nats: f64,
    /// `(e, k)` attaining the minimum.
    pub argmin: (usize, usize),
    /// Secrecy rates `S_{e,k}` indexed `(e, k)`.
    pub secrecy_table: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub inner_iterations: usize,
    /// `ε_s‖W‖_F² + ε_a tr(V^H V)` of the final state.
    pub radiated_power: f64,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

impl SolutionReport {
    pub fn min_sr_bits(&self) -> f64 {
        crate::nats_to_bits(self.min_sr_nats)
    }
}

/// Transmit power budget and noise power, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub p_b: f64,
    pub sigma2: f64,
}

impl From<&Scenario> for LinkBudget {
    fn from(s: &Scenario) -> Self {
        Self { p_b: s.p_b, sigma2: s.sigma2 }
    }
}

/// Relative change test; falls back to the absolute change when the
/// previous value is zero.
fn small_change(prev: f64, cur: f64, eta: f64) -> bool {
    let diff = (cur - prev).abs();
    if prev == 0.0 {
        diff < eta
    } else {
        diff / prev.abs() < eta
    }
}

struct Design<'a> {
    evaluator: RateEvaluator<'a>,
    mode: CsiMode,
}

impl Design<'_> {
    fn objective(&self, w: &DMatrix<C64>, eps: f64) -> Result<f64> {
        match self.mode {
            CsiMode::S2 => Ok(self.evaluator.min_secrecy_rate(w, eps)?.gap),
            CsiMode::S1 => Ok(self.evaluator.min_lue_rate(w, eps)?.0),
        }
    }

    /// Doubles the step `next − w` while the objective keeps improving.
    fn extrapolate(
        &self,
        w: &DMatrix<C64>,
        next: DMatrix<C64>,
        value: f64,
        eps: f64,
    ) -> Result<(DMatrix<C64>, f64)> {
        let budget = w.ncols() as f64;
        let dir = &next - w;
        let mut best = (next, value);
        let mut alpha = 2.0;
        while alpha <= MAX_EXTRAPOLATION {
            let mut cand = w + dir.scale(alpha);
            let p = frobenius_sq(&cand);
            if p > budget {
                cand.scale_mut((budget / p).sqrt());
            }
            let v = self.objective(&cand, eps)?;
            if !(v > best.1) {
                break;
            }
            best = (cand, v);
            alpha *= 2.0;
        }
        Ok(best)
    }

    fn target(&self, requested: EpsilonTarget) -> EpsilonTarget {
        match self.mode {
            CsiMode::S2 => requested,
            CsiMode::S1 => EpsilonTarget::MinLueRate,
        }
    }
}

fn finish(
    budget: LinkBudget,
    channels: &ChannelSet,
    opts: &RunOptions,
    state: PrecodingState,
    xi_trace: Vec<f64>,
    converged: bool,
    inner_iterations: usize,
    clock: Stopwatch,
    mut warnings: Vec<String>,
) -> Result<SolutionReport> {
    let truth = RateEvaluator::new(channels, &state.v, budget.p_b, budget.sigma2);
    let min = truth.min_secrecy_rate(&state.w, state.epsilon)?;
    let secrecy_table = truth.secrecy_table(&state.w, state.epsilon)?;
    let radiated_power = state.radiated_power(budget.p_b)?;
    if radiated_power > budget.p_b * (1.0 + 1e-6) {
        warnings.push(format!(
            "radiated power {radiated_power:.6e} W exceeds the budget {:.6e} W",
            budget.p_b
        ));
    }
    let iterations = xi_trace.len().saturating_sub(1);
    Ok(SolutionReport {
        scheme: opts.scheme,
        mode: opts.mode,
        xi_trace,
        state,
        min_sr_nats: min.value,
        argmin: min.pair,
        secrecy_table,
        converged,
        iterations,
        inner_iterations,
        radiated_power,
        wall_time: clock.elapsed(),
        warnings,
    })
}

fn check_inputs(budget: LinkBudget, channels: &ChannelSet, opts: &RunOptions) -> Result<()> {
    opts.validate()?;
    if channels.num_lue() == 0 {
        return Err(Error::Config("at least one LUE is required".into()));
    }
    if !(budget.p_b > 0.0) || !(budget.sigma2 > 0.0) {
        return Err(Error::Config("power budget and noise power must be positive".into()));
    }
    Ok(())
}

fn check_geometry(scenario: &Scenario, channels: &ChannelSet) -> Result<()> {
    if channels.n_b() != scenario.geometry.n_b() {
        return Err(Error::Dimension(format!(
            "channels have {} antennas, scenario geometry has {}",
            channels.n_b(),
            scenario.geometry.n_b()
        )));
    }
    Ok(())
}

fn an_matrix(h: &DMatrix<C64>, opts: &RunOptions, warnings: &mut Vec<String>) -> Result<DMatrix<C64>> {
    let an = null_space_an(h, opts.an_normalization)?;
    if an.regularized {
        warnings.push(format!(
            "LUE Gram matrix is ill-conditioned (condition number {:.3e}); AN projector regularized",
            an.condition_number
        ));
    }
    Ok(an.v)
}

/// Alternates SCA beamfocusing rounds and power-allocation updates,
/// starting from normalized RZF and `ε = 1`, until the relative change of
/// the design objective drops below `eta_out` or `max_outer` rounds ran.
pub fn run_algorithm1(scenario: &Scenario, channels: &ChannelSet, opts: &RunOptions) -> Result<SolutionReport> {
    check_geometry(scenario, channels)?;
    optimize_channels(channels, scenario.into(), opts)
}

/// [`run_algorithm1`] on an arbitrary channel set, without a geometry.
pub fn optimize_channels(channels: &ChannelSet, budget: LinkBudget, opts: &RunOptions) -> Result<SolutionReport> {
    check_inputs(budget, channels, opts)?;
    run_alternating(budget, channels, opts, opts.epsilon_override)
}

/// `pinned` keeps `ε` fixed throughout.
fn run_alternating(
    budget: LinkBudget,
    channels: &ChannelSet,
    opts: &RunOptions,
    pinned: Option<f64>,
) -> Result<SolutionReport> {
    let clock = Stopwatch::start();
    let mut warnings = Vec::new();
    let v = an_matrix(channels.lue_matrix(), opts, &mut warnings)?;
    let design = Design {
        evaluator: RateEvaluator::new(channels, &v, budget.p_b, budget.sigma2),
        mode: opts.mode,
    };
    let eavesdroppers = opts.mode == CsiMode::S2;
    let target = design.target(opts.epsilon_target);

    let mut w = rzf_init(channels.lue_matrix(), budget.sigma2)?;
    let mut eps = pinned.unwrap_or(1.0);
    let mut xi = design.objective(&w, eps)?;
    let mut trace = vec![xi];
    let mut converged = false;
    let mut inner = 0;
    let mut unconverged_rounds = 0;

    for _ in 0..opts.max_outer {
        let round = sca_round(&design.evaluator, &w, eps, eavesdroppers, &opts.solver)?;
        inner += round.inner_iterations;
        if !round.converged {
            unconverged_rounds += 1;
        }
        if round.feasibility_violation > opts.solver.tol_feas {
            warnings.push(format!(
                "beamfocusing round exceeded the power budget by {:.3e}",
                round.feasibility_violation
            ));
        }
        let mut candidate = round.w_next;
        let mut after_w = design.objective(&candidate, eps)?;
        if opts.extrapolate {
            (candidate, after_w) = design.extrapolate(&w, candidate, after_w, eps)?;
        }
        if after_w >= xi {
            w = candidate;
        }

        if pinned.is_none() {
            let choice = optimize_epsilon(&design.evaluator, &w, target, eps, opts.gss_tol, None)?;
            // the search may target a single pair; keep the old split if the
            // overall objective would drop
            if design.objective(&w, choice.epsilon)? >= design.objective(&w, eps)? {
                eps = choice.epsilon;
            }
        }

        let next = design.objective(&w, eps)?;
        trace.push(next);
        let done = small_change(xi, next, opts.eta_out);
        xi = next;
        if done {
            converged = true;
            break;
        }
    }
    if unconverged_rounds > 0 {
        log::debug!("{unconverged_rounds} beamfocusing rounds hit the inner iteration cap");
    }
    if !converged {
        warnings.push(format!("outer loop did not converge within {} iterations", opts.max_outer));
    }
    let state = PrecodingState { w, v, epsilon: eps };
    finish(budget, channels, opts, state, trace, converged, inner, clock, warnings)
}

/// Fixed precoder with the power allocation optimized (or taken from the
/// override) on `design`, which may differ from the evaluated `channels`.
#[allow(clippy::too_many_arguments)]
fn run_fixed_w(
    budget: LinkBudget,
    channels: &ChannelSet,
    design: &ChannelSet,
    opts: &RunOptions,
    w: DMatrix<C64>,
    v: DMatrix<C64>,
    mut warnings: Vec<String>,
    clock: Stopwatch,
) -> Result<SolutionReport> {
    let design = Design {
        evaluator: RateEvaluator::new(design, &v, budget.p_b, budget.sigma2),
        mode: opts.mode,
    };
    let start = design.objective(&w, 1.0)?;
    let target = match design.target(opts.epsilon_target) {
        EpsilonTarget::BottleneckPair => EpsilonTarget::AllPairs,
        t => t,
    };
    let choice = optimize_epsilon(&design.evaluator, &w, target, 1.0, opts.gss_tol, opts.epsilon_override)?;
    let mut eps = choice.epsilon;
    if opts.epsilon_override.is_none() && design.objective(&w, eps)? < start {
        eps = 1.0;
    }
    let end = design.objective(&w, eps)?;
    if !end.is_finite() {
        warnings.push("objective is not finite".into());
    }
    let state = PrecodingState { w, v, epsilon: eps };
    finish(budget, channels, opts, state, vec![start, end], true, 0, clock, warnings)
}

/// Runs the scheme selected in `opts.scheme`. The far-field baseline is
/// designed entirely on the planar-wave channels of the scenario; the
/// minimum secrecy rate in the report is always evaluated on `channels`.
pub fn run_scheme(scenario: &Scenario, channels: &ChannelSet, opts: &RunOptions) -> Result<SolutionReport> {
    check_geometry(scenario, channels)?;
    if opts.scheme == Scheme::Ffb {
        check_inputs(scenario.into(), channels, opts)?;
        let clock = Stopwatch::start();
        let mut warnings = Vec::new();
        let (w, ff) = ff_beamform(scenario)?;
        let v = an_matrix(ff.lue_matrix(), opts, &mut warnings)?;
        return run_fixed_w(scenario.into(), channels, &ff, opts, w, v, warnings, clock);
    }
    run_scheme_on_channels(channels, scenario.into(), opts)
}

/// [`run_scheme`] on an arbitrary channel set. The far-field baseline needs
/// a geometry and is rejected here.
pub fn run_scheme_on_channels(
    channels: &ChannelSet,
    budget: LinkBudget,
    opts: &RunOptions,
) -> Result<SolutionReport> {
    check_inputs(budget, channels, opts)?;
    match opts.scheme {
        Scheme::Proposed => run_alternating(budget, channels, opts, opts.epsilon_override),
        Scheme::NoAn => run_alternating(budget, channels, opts, Some(1.0)),
        Scheme::MrtAn => {
            let clock = Stopwatch::start();
            let mut warnings = Vec::new();
            let v = an_matrix(channels.lue_matrix(), opts, &mut warnings)?;
            let w = mrt_beamfocus(channels.lue_matrix())?;
            run_fixed_w(budget, channels, channels, opts, w, v, warnings, clock)
        }
        Scheme::Ffb => Err(Error::Config(
            "the far-field baseline needs a scenario geometry".into(),
        )),
    }
}
