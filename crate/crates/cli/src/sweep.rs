//! Monte-Carlo sweeps over ε or the transmit power.

use std::time::Instant;

use rayon::prelude::*;

use nfsec::algorithm::{run_scheme, CsiMode, Scheme, SolutionReport};
use nfsec::channel::{generate_scenario, ChannelSet, Scenario};
use nfsec::dbm_to_watts;

use crate::config::{ExperimentConfig, SweepVar};
use crate::CliError;

/// One (trial, scheme, mode, sweep value) result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub trial: usize,
    pub scheme: Scheme,
    pub mode: CsiMode,
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub min_sr_nats: f64,
    pub min_sr_bits: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Wall time in milliseconds, only filled when timing is enabled.
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub trial: usize,
    pub scheme: Scheme,
    pub mode: CsiMode,
    pub sweep_value: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// Runs one scheme on one scenario, with the power budget replaced by
/// `power_dbm` when given.
pub fn run_single(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    channels: &ChannelSet,
    scheme: Scheme,
    mode: CsiMode,
    epsilon: Option<f64>,
    power_dbm: Option<f64>,
) -> Result<SolutionReport, CliError> {
    let mut scenario = scenario.clone();
    if let Some(p) = power_dbm {
        scenario.p_b = dbm_to_watts(p);
    }
    let opts = cfg.run_options(scheme, mode, epsilon);
    opts.validate()?;
    Ok(run_scheme(&scenario, channels, &opts)?)
}

struct Job {
    trial: usize,
    scheme: Scheme,
    mode: CsiMode,
    value: f64,
}

/// Runs every (trial, scheme, mode, sweep value) combination in parallel.
/// Individual failures are collected and the remaining jobs still run.
/// Rows come back sorted by scheme, mode, sweep value and trial.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    let (var, values) = cfg.sweep_points();
    let schemes = cfg.schemes();
    let modes = cfg.modes();

    let scenarios = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let sc = cfg.scenario_config(t)?;
            Ok(generate_scenario(&sc)?)
        })
        .collect::<Result<Vec<(Scenario, ChannelSet)>, CliError>>()?;

    let mut jobs = Vec::new();
    for trial in 0..cfg.trials {
        for &scheme in &schemes {
            for &mode in &modes {
                for &value in &values {
                    jobs.push(Job { trial, scheme, mode, value });
                }
            }
        }
    }

    let results: Vec<Result<SweepRow, SweepFailure>> = jobs
        .par_iter()
        .map(|job| {
            let (scenario, channels) = &scenarios[job.trial];
            let (epsilon, power) = match var {
                SweepVar::Epsilon => (Some(job.value), None),
                SweepVar::PowerDbm => (None, Some(job.value)),
                SweepVar::None => (None, None),
            };
            let start = Instant::now();
            match run_single(cfg, scenario, channels, job.scheme, job.mode, epsilon, power) {
                Ok(report) => Ok(SweepRow {
                    trial: job.trial,
                    scheme: job.scheme,
                    mode: job.mode,
                    sweep_var: var,
                    sweep_value: job.value,
                    min_sr_nats: report.min_sr_nats,
                    min_sr_bits: report.min_sr_bits(),
                    epsilon: report.state.epsilon,
                    iterations: report.iterations,
                    converged: report.converged,
                    wall_ms: cfg.output.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
                }),
                Err(e) => Err(SweepFailure {
                    trial: job.trial,
                    scheme: job.scheme,
                    mode: job.mode,
                    sweep_value: job.value,
                    message: e.to_string(),
                }),
            }
        })
        .collect();

    let mut out = SweepOutcome::default();
    for r in results {
        match r {
            Ok(row) => out.rows.push(row),
            Err(f) => {
                log::warn!(
                    "trial {} {} {} at {}: {}",
                    f.trial, f.scheme, f.mode, f.sweep_value, f.message
                );
                out.failures.push(f);
            }
        }
    }
    out.rows.sort_by(|a, b| {
        (a.scheme.as_str(), a.mode.as_str())
            .cmp(&(b.scheme.as_str(), b.mode.as_str()))
            .then(a.sweep_value.total_cmp(&b.sweep_value))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.n_x = 9;
        cfg.scenario.num_lue = 2;
        cfg.scenario.num_eue = 2;
        cfg.trials = 2;
        cfg.schemes = vec!["mrt-an".into(), "no-an".into()];
        cfg.solver.max_outer = 5;
        cfg.solver.max_inner = 200;
        cfg
    }

    #[test]
    fn rows_cover_the_grid_in_order() {
        let mut cfg = tiny();
        cfg.sweep.epsilon = Some(vec![0.8, 0.2]);
        let out = run_sweep(&cfg).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.rows.len(), 2 * 2 * 2 * 2);
        let first = &out.rows[0];
        assert_eq!((first.scheme, first.sweep_value, first.trial), (Scheme::MrtAn, 0.2, 0));
        for r in out.rows.iter().filter(|r| r.scheme == Scheme::MrtAn) {
            assert_eq!(r.epsilon, r.sweep_value);
            assert!(r.wall_ms.is_none());
        }
    }

    #[test]
    fn power_sweep_changes_the_budget() {
        let mut cfg = tiny();
        cfg.schemes = vec!["no-an".into()];
        cfg.modes = vec!["s2".into()];
        cfg.trials = 1;
        cfg.sweep.power_dbm = Some(vec![-10.0, 20.0]);
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.rows[1].min_sr_nats > out.rows[0].min_sr_nats, "{:?}", out.rows);
    }
}
