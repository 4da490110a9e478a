//! Experiment configuration: a TOML document with every key optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nfsec::algorithm::{CsiMode, RunOptions, Scheme};
use nfsec::channel::{ArrayGeometry, Cell, Point, ScenarioConfig};
use nfsec::power::EpsilonTarget;
use nfsec::precoding::AnNormalization;
use nfsec::sca::SolverOptions;
use nfsec::dbm_to_watts;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub schemes: Vec<String>,
    pub modes: Vec<String>,
    /// Power-allocation factor used by the proposed scheme in S1 mode when
    /// no sweep or override fixes it.
    pub s1_epsilon: f64,
    pub scenario: ScenarioSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub beampattern: BeamPatternSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub carrier_ghz: f64,
    pub n_x: usize,
    pub n_z: usize,
    pub num_lue: usize,
    pub num_eue: usize,
    pub power_dbm: f64,
    pub sigma2_dbm: f64,
    pub cell_width: f64,
    pub cell_height: f64,
    pub bs: [f64; 2],
    pub lue_distance: [f64; 2],
    pub max_offset_deg: f64,
    pub min_separation: f64,
    pub collinear: bool,
    pub eue_distance_ratio: f64,
    pub nlos_paths: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub epsilon: Option<Vec<f64>>,
    pub power_dbm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub eta_out: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub gss_tol: f64,
    pub extrapolate: bool,
    /// "bottleneck" or "all-pairs".
    pub epsilon_target: String,
    /// "projector" or "full-trace".
    pub an_normalization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// "csv", "svg" or "both".
    pub format: String,
    /// Fill the wall_ms column. Off by default so reruns are byte-identical.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamPatternSection {
    pub nx: usize,
    pub ny: usize,
    pub scheme: String,
    pub mode: String,
    pub epsilon: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 5,
            schemes: Scheme::ALL.iter().map(|s| s.to_string()).collect(),
            modes: vec!["s2".into(), "s1".into()],
            s1_epsilon: 0.5,
            scenario: ScenarioSection::default(),
            sweep: SweepSection::default(),
            solver: SolverSection::default(),
            output: OutputSection::default(),
            beampattern: BeamPatternSection::default(),
        }
    }
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            carrier_ghz: 2.0,
            n_x: 65,
            n_z: 3,
            num_lue: 4,
            num_eue: 4,
            power_dbm: 0.0,
            sigma2_dbm: -96.0,
            cell_width: 100.0,
            cell_height: 100.0,
            bs: [50.0, 100.0],
            lue_distance: [10.0, 30.0],
            max_offset_deg: 60.0,
            min_separation: 2.0,
            collinear: true,
            eue_distance_ratio: 0.5,
            nlos_paths: 0,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let run = RunOptions::default();
        Self {
            eta_out: run.eta_out,
            max_outer: run.max_outer,
            max_inner: run.solver.max_inner,
            gss_tol: run.gss_tol,
            extrapolate: run.extrapolate,
            epsilon_target: "bottleneck".into(),
            an_normalization: "projector".into(),
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: "both".into(), timing: false }
    }
}

impl Default for BeamPatternSection {
    fn default() -> Self {
        Self { nx: 100, ny: 100, scheme: "proposed".into(), mode: "s2".into(), epsilon: Some(0.5) }
    }
}

/// Which variable a sweep runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepVar {
    Epsilon,
    PowerDbm,
    /// A single point at the configured power.
    None,
}

impl SweepVar {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVar::Epsilon => "epsilon",
            SweepVar::PowerDbm => "power_dbm",
            SweepVar::None => "none",
        }
    }

    pub fn axis_label(&self) -> &'static str {
        match self {
            SweepVar::Epsilon => "power allocation factor ε",
            SweepVar::PowerDbm => "transmit power budget P_b (dBm)",
            SweepVar::None => "run",
        }
    }
}

/// Output formats selected by `--format` / `output.format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            "both" => Ok(Format::Both),
            _ => Err(CliError::Config(format!("output.format: expected csv, svg or both, got '{s}'"))),
        }
    }

    pub fn csv(&self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn svg(&self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    s.parse().map_err(|_| {
        CliError::Config(format!("unknown scheme '{s}' (expected proposed, no-an, mrt-an or ffb)"))
    })
}

pub fn parse_mode(s: &str) -> Result<CsiMode, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("unknown mode '{s}' (expected s1 or s2)")))
}

fn check(cond: bool, key: &str, msg: impl std::fmt::Display) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: {msg}")))
    }
}

fn check_epsilon(key: &str, e: f64) -> Result<(), CliError> {
    check(e > 0.0 && e <= 1.0, key, format!("must lie in (0, 1], got {e}"))
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check(self.trials >= 1, "trials", "must be at least 1")?;
        check(!self.schemes.is_empty(), "schemes", "must list at least one scheme")?;
        check(!self.modes.is_empty(), "modes", "must list at least one mode")?;
        for s in &self.schemes {
            parse_scheme(s)?;
        }
        for m in &self.modes {
            parse_mode(m)?;
        }
        check_epsilon("s1_epsilon", self.s1_epsilon)?;

        let sc = &self.scenario;
        check(sc.carrier_ghz > 0.0 && sc.carrier_ghz.is_finite(), "scenario.carrier_ghz", "must be positive")?;
        for (key, n) in [("scenario.n_x", sc.n_x), ("scenario.n_z", sc.n_z)] {
            check(n % 2 == 1, key, format!("must be odd, got {n}"))?;
        }
        check(sc.num_lue >= 1, "scenario.num_lue", "must be at least 1")?;
        check(sc.num_eue >= 1, "scenario.num_eue", "must be at least 1")?;
        check(sc.num_lue <= sc.n_x * sc.n_z, "scenario.num_lue", "cannot exceed the number of antennas")?;
        check(sc.power_dbm.is_finite(), "scenario.power_dbm", "must be finite")?;
        check(sc.sigma2_dbm.is_finite(), "scenario.sigma2_dbm", "must be finite")?;
        check(sc.cell_width > 0.0 && sc.cell_height > 0.0, "scenario.cell_width/cell_height", "must be positive")?;
        check(
            sc.lue_distance[0] > 0.0 && sc.lue_distance[1] >= sc.lue_distance[0],
            "scenario.lue_distance",
            "must be [min, max] with 0 < min <= max",
        )?;
        check(
            (0.0..=90.0).contains(&sc.max_offset_deg),
            "scenario.max_offset_deg",
            "must lie in [0, 90]",
        )?;
        check(sc.min_separation >= 0.0, "scenario.min_separation", "must be non-negative")?;
        check(sc.eue_distance_ratio > 0.0, "scenario.eue_distance_ratio", "must be positive")?;

        match (&self.sweep.epsilon, &self.sweep.power_dbm) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("sweep: give either epsilon or power_dbm, not both".into()))
            }
            (Some(v), None) => {
                check(!v.is_empty(), "sweep.epsilon", "must not be empty")?;
                for &e in v {
                    check_epsilon("sweep.epsilon", e)?;
                }
            }
            (None, Some(v)) => {
                check(!v.is_empty(), "sweep.power_dbm", "must not be empty")?;
                for &p in v {
                    check(p.is_finite(), "sweep.power_dbm", format!("must be finite, got {p}"))?;
                }
            }
            (None, None) => {}
        }

        let so = &self.solver;
        check(so.eta_out > 0.0, "solver.eta_out", "must be positive")?;
        check(so.max_outer >= 1, "solver.max_outer", "must be at least 1")?;
        check(so.max_inner >= 1, "solver.max_inner", "must be at least 1")?;
        check(so.gss_tol > 0.0, "solver.gss_tol", "must be positive")?;
        self.epsilon_target()?;
        self.an_normalization()?;
        Format::parse(&self.output.format)?;

        let bp = &self.beampattern;
        check(bp.nx >= 2 && bp.ny >= 2, "beampattern.nx/ny", "grid must be at least 2x2")?;
        parse_scheme(&bp.scheme)?;
        parse_mode(&bp.mode)?;
        if let Some(e) = bp.epsilon {
            check_epsilon("beampattern.epsilon", e)?;
        }
        self.scenario_config(0)?.validate().map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        Ok(())
    }

    fn epsilon_target(&self) -> Result<EpsilonTarget, CliError> {
        match self.solver.epsilon_target.as_str() {
            "bottleneck" => Ok(EpsilonTarget::BottleneckPair),
            "all-pairs" => Ok(EpsilonTarget::AllPairs),
            s => Err(CliError::Config(format!(
                "solver.epsilon_target: expected bottleneck or all-pairs, got '{s}'"
            ))),
        }
    }

    fn an_normalization(&self) -> Result<AnNormalization, CliError> {
        match self.solver.an_normalization.as_str() {
            "projector" => Ok(AnNormalization::Projector),
            "full-trace" => Ok(AnNormalization::FullTrace),
            s => Err(CliError::Config(format!(
                "solver.an_normalization: expected projector or full-trace, got '{s}'"
            ))),
        }
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        self.schemes.iter().map(|s| parse_scheme(s).expect("validated")).collect()
    }

    pub fn modes(&self) -> Vec<CsiMode> {
        self.modes.iter().map(|m| parse_mode(m).expect("validated")).collect()
    }

    pub fn format(&self) -> Format {
        Format::parse(&self.output.format).expect("validated")
    }

    pub fn sweep_points(&self) -> (SweepVar, Vec<f64>) {
        match (&self.sweep.epsilon, &self.sweep.power_dbm) {
            (Some(v), _) => (SweepVar::Epsilon, v.clone()),
            (None, Some(v)) => (SweepVar::PowerDbm, v.clone()),
            (None, None) => (SweepVar::None, vec![self.scenario.power_dbm]),
        }
    }

    /// Scenario sampler settings for one Monte-Carlo trial.
    pub fn scenario_config(&self, trial: usize) -> Result<ScenarioConfig, CliError> {
        let sc = &self.scenario;
        let geometry = ArrayGeometry::from_carrier(sc.n_x, sc.n_z, sc.carrier_ghz * 1e9)
            .map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        Ok(ScenarioConfig {
            geometry,
            num_lue: sc.num_lue,
            num_eue: sc.num_eue,
            p_b: dbm_to_watts(sc.power_dbm),
            sigma2: dbm_to_watts(sc.sigma2_dbm),
            cell: Cell { width: sc.cell_width, height: sc.cell_height },
            bs: Point::new(sc.bs[0], sc.bs[1]),
            lue_distance: (sc.lue_distance[0], sc.lue_distance[1]),
            max_offset: sc.max_offset_deg.to_radians(),
            min_separation: sc.min_separation,
            collinear: sc.collinear,
            eue_distance_ratio: sc.eue_distance_ratio,
            nlos_paths: sc.nlos_paths,
            seed: trial_seed(self.seed, trial),
        })
    }

    /// Options for one run. `fixed_epsilon` comes from an ε sweep point or
    /// an explicit override.
    pub fn run_options(&self, scheme: Scheme, mode: CsiMode, fixed_epsilon: Option<f64>) -> RunOptions {
        let so = &self.solver;
        let epsilon_override = fixed_epsilon.or(
            (mode == CsiMode::S1 && scheme == Scheme::Proposed).then_some(self.s1_epsilon),
        );
        RunOptions {
            mode,
            eta_out: so.eta_out,
            max_outer: so.max_outer,
            epsilon_override,
            scheme,
            solver: SolverOptions { max_inner: so.max_inner, ..SolverOptions::default() },
            gss_tol: so.gss_tol,
            epsilon_target: self.epsilon_target().expect("validated"),
            an_normalization: self.an_normalization().expect("validated"),
            extrapolate: so.extrapolate,
        }
    }
}

/// Seed of Monte-Carlo trial `trial`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}
