//! Received signal and AN power over a grid of virtual receivers.

use crate::channel::{los_channel, lsfc, Point, Scenario, UePlacement, UeRole};
use crate::error::{Error, Result};
use crate::linalg::projected_norm_sq;
use crate::precoding::PrecodingState;

/// Cell-centered sampling grid over the scenario's cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("beam-pattern grid must be at least 2x2, got {nx}x{ny}")));
        }
        Ok(Self { nx, ny })
    }
}

/// Row-major rasters (`ny` rows of `nx` values, row 0 at `y` closest to 0).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub grid: Grid,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `ε_s ‖h_p^H W‖²` in watts.
    pub signal: Vec<f64>,
    /// `ε_a ‖h_p^H V‖²` in watts.
    pub an: Vec<f64>,
}

impl BeamPattern {
    pub fn at(&self, ix: usize, iy: usize) -> (f64, f64) {
        let i = iy * self.grid.nx + ix;
        (self.signal[i], self.an[i])
    }
}

/// Received powers at a single point from a line-of-sight channel.
pub fn received_power(scenario: &Scenario, state: &PrecodingState, p: Point) -> Result<(f64, f64)> {
    let place = UePlacement::from_point(scenario.bs, p, UeRole::Lue, 0)?;
    let beta = lsfc(place.distance)?;
    let h = los_channel(&scenario.geometry, beta, place.azimuth, place.elevation, place.distance)?;
    let split = state.split(scenario.p_b)?;
    let signal = split.eps_s * projected_norm_sq(h.as_slice(), &state.w);
    let an = if split.eps_a > 0.0 {
        split.eps_a * projected_norm_sq(h.as_slice(), &state.v)
    } else {
        0.0
    };
    Ok((signal, an))
}

pub fn beam_pattern(scenario: &Scenario, state: &PrecodingState, grid: Grid) -> Result<BeamPattern> {
    if state.w.nrows() != scenario.geometry.n_b() {
        return Err(Error::Dimension("precoder does not match the array".into()));
    }
    let cell = scenario.cell;
    let xs: Vec<f64> = (0..grid.nx).map(|i| (i as f64 + 0.5) * cell.width / grid.nx as f64).collect();
    let ys: Vec<f64> = (0..grid.ny).map(|j| (j as f64 + 0.5) * cell.height / grid.ny as f64).collect();
    let mut signal = Vec::with_capacity(grid.nx * grid.ny);
    let mut an = Vec::with_capacity(grid.nx * grid.ny);
    for &y in &ys {
        for &x in &xs {
            let (s, a) = received_power(scenario, state, Point::new(x, y))?;
            signal.push(s);
            an.push(a);
        }
    }
    Ok(BeamPattern { grid, xs, ys, signal, an })
}
