//! Browser bindings: solve a scenario (optionally sampling its beam pattern)
//! and sweep ε for MRT with AN.

use wasm_bindgen::prelude::*;

use nfsec::algorithm::{run_scheme, CsiMode, RunOptions, Scheme, SolutionReport};
use nfsec::channel::{generate_scenario, ArrayGeometry, ChannelSet, Scenario, ScenarioConfig};
use nfsec::pattern::{beam_pattern, Grid};
use nfsec::{dbm_to_watts, nats_to_bits};

/// Scenario knobs exposed to the page.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoScenario {
    pub seed: u32,
    /// Horizontal antennas (odd); the array is always 3 rows tall.
    pub n_x: usize,
    pub users: usize,
    pub power_dbm: f64,
}

#[wasm_bindgen]
impl DemoScenario {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, n_x: usize, users: usize, power_dbm: f64) -> Self {
        Self { seed, n_x, users, power_dbm }
    }
}

impl DemoScenario {
    fn build(&self) -> Result<(Scenario, ChannelSet), String> {
        let geometry = ArrayGeometry::from_carrier(self.n_x, 3, 2e9).map_err(|e| e.to_string())?;
        let cfg = ScenarioConfig {
            geometry,
            num_lue: self.users,
            num_eue: self.users,
            p_b: dbm_to_watts(self.power_dbm),
            seed: u64::from(self.seed),
            ..ScenarioConfig::default()
        };
        generate_scenario(&cfg).map_err(|e| e.to_string())
    }
}

/// Summary of one solved scenario.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub min_sr_bits: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub bottleneck_eue: usize,
    pub bottleneck_lue: usize,
    lue_xy: Vec<f64>,
    eue_xy: Vec<f64>,
    pattern_dbm: Vec<f64>,
}

#[wasm_bindgen]
impl Summary {
    /// LUE positions as `[x0, y0, x1, y1, ...]` in meters.
    #[wasm_bindgen(getter)]
    pub fn lue_xy(&self) -> Vec<f64> {
        self.lue_xy.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn eue_xy(&self) -> Vec<f64> {
        self.eue_xy.clone()
    }

    /// Signal then AN power in dBm over a `grid × grid` raster, row-major
    /// with row 0 at small y. Empty when no grid was requested.
    #[wasm_bindgen(getter)]
    pub fn pattern_dbm(&self) -> Vec<f64> {
        self.pattern_dbm.clone()
    }
}

fn options(scheme: &str, mode: &str, epsilon: Option<f64>) -> Result<RunOptions, String> {
    let scheme: Scheme = scheme.parse().map_err(|_| format!("unknown scheme '{scheme}'"))?;
    let mode: CsiMode = mode.parse().map_err(|_| format!("unknown mode '{mode}'"))?;
    let opts = RunOptions {
        scheme,
        mode,
        epsilon_override: epsilon,
        max_outer: 30,
        ..RunOptions::default()
    };
    opts.validate().map_err(|e| e.to_string())?;
    Ok(opts)
}

fn solve_inner(
    sc: &DemoScenario,
    scheme: &str,
    mode: &str,
    epsilon: Option<f64>,
) -> Result<(Scenario, SolutionReport), String> {
    let (scenario, channels) = sc.build()?;
    let report = run_scheme(&scenario, &channels, &options(scheme, mode, epsilon)?)
        .map_err(|e| e.to_string())?;
    Ok((scenario, report))
}

fn points(scenario: &Scenario, lue: bool) -> Vec<f64> {
    let list = if lue { &scenario.lues } else { &scenario.eues };
    list.iter()
        .flat_map(|u| {
            let p = u.to_point(scenario.bs);
            [p.x, p.y]
        })
        .collect()
}

/// Solves one scenario; `grid > 0` also samples the beam pattern.
pub fn summarize(
    sc: &DemoScenario,
    scheme: &str,
    mode: &str,
    epsilon: Option<f64>,
    grid: usize,
) -> Result<Summary, String> {
    let (scenario, r) = solve_inner(sc, scheme, mode, epsilon)?;
    let pattern_dbm = if grid > 0 {
        let g = Grid::new(grid, grid).map_err(|e| e.to_string())?;
        let bp = beam_pattern(&scenario, &r.state, g).map_err(|e| e.to_string())?;
        let dbm = |w: f64| (10.0 * (w * 1e3).log10()).max(-250.0);
        bp.signal.iter().chain(&bp.an).map(|&w| dbm(w)).collect()
    } else {
        Vec::new()
    };
    Ok(Summary {
        min_sr_bits: r.min_sr_bits(),
        epsilon: r.state.epsilon,
        iterations: r.iterations,
        converged: r.converged,
        bottleneck_eue: r.argmin.0,
        bottleneck_lue: r.argmin.1,
        lue_xy: points(&scenario, true),
        eue_xy: points(&scenario, false),
        pattern_dbm,
    })
}

/// Minimum secrecy rate in bits/s/Hz of MRT with AN at each ε.
pub fn mrt_curve(sc: &DemoScenario, eps: &[f64]) -> Result<Vec<f64>, String> {
    let (scenario, channels) = sc.build()?;
    eps.iter()
        .map(|&e| {
            let opts = options("mrt-an", "s2", Some(e))?;
            run_scheme(&scenario, &channels, &opts)
                .map(|r| nats_to_bits(r.min_sr_nats))
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Solves one scenario. `epsilon <= 0` lets the scheme choose ε and
/// `grid = 0` skips the beam pattern.
#[wasm_bindgen]
pub fn solve(sc: &DemoScenario, scheme: &str, mode: &str, epsilon: f64, grid: usize) -> Result<Summary, JsError> {
    js(summarize(sc, scheme, mode, (epsilon > 0.0).then_some(epsilon), grid))
}

#[wasm_bindgen]
pub fn epsilon_sweep(sc: &DemoScenario, eps: &[f64]) -> Result<Vec<f64>, JsError> {
    js(mrt_curve(sc, eps))
}
