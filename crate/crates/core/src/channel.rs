//! Near-field geometry, array responses, large-scale fading and scenario
//! generation.
//!
//! Conventions: the BS array lies in the x-z plane and radiates towards
//! negative y in the plan view of the cell. A UE is described in BS-centric
//! spherical coordinates `(θ, φ, d)` where the unit direction is
//! `(sinφ cosθ, sinφ sinθ, cosφ)`; UEs on the ground plane have `φ = π/2`.
//!
//! Channels are stored as column vectors `h_u` so that the received sample
//! for a precoder `w` is `h_u^H w`. The line-of-sight part therefore is
//! `h_u = β^{1/2} e^{+j2πd/λ} conj(a(θ, φ, d))`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform planar array with an odd number of elements along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    n_x: usize,
    n_z: usize,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(n_x: usize, n_z: usize, wavelength: f64) -> Result<Self> {
        if n_x % 2 == 0 || n_z % 2 == 0 {
            return Err(Error::Config(format!(
                "array dimensions must be odd, got {n_x}x{n_z}"
            )));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::Config(format!("wavelength must be positive, got {wavelength}")));
        }
        Ok(Self { n_x, n_z, wavelength })
    }

    pub fn from_carrier(n_x: usize, n_z: usize, carrier_hz: f64) -> Result<Self> {
        if !(carrier_hz > 0.0) {
            return Err(Error::Config(format!("carrier must be positive, got {carrier_hz}")));
        }
        Self::new(n_x, n_z, SPEED_OF_LIGHT / carrier_hz)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    /// Total element count `N_b`.
    pub fn n_b(&self) -> usize {
        self.n_x * self.n_z
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Element spacing, always half a wavelength.
    pub fn spacing(&self) -> f64 {
        self.wavelength / 2.0
    }

    /// Largest element offset `N̄` along x.
    pub fn half_x(&self) -> i64 {
        (self.n_x / 2) as i64
    }

    pub fn half_z(&self) -> i64 {
        (self.n_z / 2) as i64
    }

    /// Phase factor of the x-axis element with signed offset `nbar`.
    pub fn steering_phase_x(&self, theta: f64, phi: f64, d: f64, nbar: i64) -> Result<C64> {
        check_distance(d)?;
        let lam = self.wavelength;
        let n = nbar as f64;
        let dir = theta.cos() * phi.sin();
        let phase = TAU / lam
            * (n * lam / 2.0 * dir + n * n / (2.0 * d) * lam * lam / 4.0 * (1.0 - dir * dir));
        Ok(C64::from_polar(1.0, -phase))
    }

    /// Phase factor of the z-axis element with signed offset `nbar`.
    pub fn steering_phase_z(&self, phi: f64, d: f64, nbar: i64) -> Result<C64> {
        check_distance(d)?;
        let lam = self.wavelength;
        let n = nbar as f64;
        let s = phi.sin();
        let phase = TAU / lam * (n * lam / 2.0 * phi.cos() + n * n / (2.0 * d) * lam * lam / 4.0 * s * s);
        Ok(C64::from_polar(1.0, -phase))
    }

    /// Near-field array response `a_x ⊗ a_z`. Element `(ix, iz)` sits at
    /// index `ix * n_z + iz`, with `ix = nbar_x + N̄_x`.
    pub fn array_response(&self, theta: f64, phi: f64, d: f64) -> Result<DVector<C64>> {
        check_distance(d)?;
        let ax = (-self.half_x()..=self.half_x())
            .map(|n| self.steering_phase_x(theta, phi, d, n))
            .collect::<Result<Vec<_>>>()?;
        let az = (-self.half_z()..=self.half_z())
            .map(|n| self.steering_phase_z(phi, d, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(kron(&ax, &az))
    }

    /// Planar-wave steering vector: the near-field response with every
    /// distance-dependent quadratic phase dropped.
    pub fn far_field_response(&self, theta: f64, phi: f64) -> DVector<C64> {
        let dir_x = theta.cos() * phi.sin();
        let dir_z = phi.cos();
        let ax: Vec<C64> = (-self.half_x()..=self.half_x())
            .map(|n| C64::from_polar(1.0, -PI * n as f64 * dir_x))
            .collect();
        let az: Vec<C64> = (-self.half_z()..=self.half_z())
            .map(|n| C64::from_polar(1.0, -PI * n as f64 * dir_z))
            .collect();
        kron(&ax, &az)
    }

    /// Aperture diagonal `D`.
    pub fn aperture(&self) -> f64 {
        let dx = (self.n_x - 1) as f64;
        let dz = (self.n_z - 1) as f64;
        (dx * dx + dz * dz).sqrt() * self.spacing()
    }

    /// Rayleigh distance `2D²/λ` using the aperture diagonal.
    pub fn rayleigh_distance(&self) -> f64 {
        let d = self.aperture();
        2.0 * d * d / self.wavelength
    }
}

fn kron(ax: &[C64], az: &[C64]) -> DVector<C64> {
    DVector::from_iterator(
        ax.len() * az.len(),
        ax.iter().flat_map(|x| az.iter().map(move |z| x * z)),
    )
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("distance must be positive and finite, got {d}")))
    }
}

/// Large-scale fading in dB for the urban-microcell model at 2 GHz.
pub fn path_loss_db(d: f64) -> Result<f64> {
    check_distance(d)?;
    Ok(-33.05 - 36.7 * d.log10())
}

/// Linear large-scale fading coefficient `β`.
pub fn lsfc(d: f64) -> Result<f64> {
    Ok(10f64.powf(path_loss_db(d)? / 10.0))
}

/// Line-of-sight channel column `h = β^{1/2} e^{j2πd/λ} conj(a)`.
pub fn los_channel(
    geom: &ArrayGeometry,
    beta: f64,
    theta: f64,
    phi: f64,
    d: f64,
) -> Result<DVector<C64>> {
    if !(beta > 0.0) {
        return Err(Error::domain(format!("LSFC must be positive, got {beta}")));
    }
    let a = geom.array_response(theta, phi, d)?;
    let carrier = C64::from_polar(beta.sqrt(), TAU * d / geom.wavelength());
    Ok(a.map(|x| carrier * x.conj()))
}

/// Line-of-sight channel built on the planar-wave approximation (same `β`
/// and carrier phase, no curvature).
pub fn far_field_channel(
    geom: &ArrayGeometry,
    beta: f64,
    theta: f64,
    phi: f64,
    d: f64,
) -> Result<DVector<C64>> {
    check_distance(d)?;
    let a = geom.far_field_response(theta, phi);
    let carrier = C64::from_polar(beta.sqrt(), TAU * d / geom.wavelength());
    Ok(a.map(|x| carrier * x.conj()))
}

/// One non-line-of-sight path: a point scatterer seen from the BS and the
/// complex gain of the bounce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub theta: f64,
    pub phi: f64,
    pub distance: f64,
    pub gain: C64,
}

/// Sum of the scatterer paths, in the same column convention as
/// [`los_channel`]. An empty slice gives the zero vector.
pub fn nlos_channel(geom: &ArrayGeometry, scatterers: &[Scatterer]) -> Result<DVector<C64>> {
    let mut h = DVector::zeros(geom.n_b());
    for s in scatterers {
        let a = geom.array_response(s.theta, s.phi, s.distance)?;
        h += a.map(|x| (s.gain * x).conj());
    }
    Ok(h)
}

/// Draws `count` scatterers uniformly in the cell, each with a
/// `CN(0, β(d))` gain where `d` is the BS-scatterer distance.
pub fn sample_scatterers<R: Rng + ?Sized>(
    cell: &Cell,
    bs: Point,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Scatterer>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Point::new(rng.random::<f64>() * cell.width, rng.random::<f64>() * cell.height);
        let d = bs.distance(p);
        if d < 1.0 {
            continue;
        }
        let place = UePlacement::from_point(bs, p, UeRole::Lue, 0)?;
        out.push(Scatterer {
            theta: place.azimuth,
            phi: place.elevation,
            distance: d,
            gain: complex_gaussian(rng, lsfc(d)?),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rectangular cell `[0, width] × [0, height]` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub width: f64,
    pub height: f64,
}

impl Cell {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

impl Default for Cell {
    fn default() -> Self {
        Self { width: 100.0, height: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UeRole {
    Lue,
    Eue,
}

/// Identifies one user of the scenario by role and 0-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UeId {
    Lue(usize),
    Eue(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UePlacement {
    /// θ in `[0, 2π)`.
    pub azimuth: f64,
    /// φ in `(0, π)`.
    pub elevation: f64,
    pub distance: f64,
    pub role: UeRole,
    pub index: usize,
}

impl UePlacement {
    pub fn new(azimuth: f64, elevation: f64, distance: f64, role: UeRole, index: usize) -> Result<Self> {
        check_distance(distance)?;
        if !(elevation > 0.0 && elevation < PI) {
            return Err(Error::domain(format!("elevation must lie in (0, π), got {elevation}")));
        }
        Ok(Self {
            azimuth: azimuth.rem_euclid(TAU),
            elevation,
            distance,
            role,
            index,
        })
    }

    /// Placement of a ground-plane point `p` as seen from the BS at `bs`.
    pub fn from_point(bs: Point, p: Point, role: UeRole, index: usize) -> Result<Self> {
        let (dx, dy) = (p.x - bs.x, p.y - bs.y);
        Self::new(dy.atan2(dx), FRAC_PI_2, dx.hypot(dy), role, index)
    }

    /// Ground-plane projection of the placement.
    pub fn to_point(&self, bs: Point) -> Point {
        let r = self.distance * self.elevation.sin();
        Point::new(bs.x + r * self.azimuth.cos(), bs.y + r * self.azimuth.sin())
    }
}

/// Everything needed to generate a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    pub num_lue: usize,
    pub num_eue: usize,
    /// Transmit power budget in watts.
    pub p_b: f64,
    /// Noise power in watts.
    pub sigma2: f64,
    pub cell: Cell,
    pub bs: Point,
    /// LUE distances are drawn uniformly from this range (meters).
    pub lue_distance: (f64, f64),
    /// LUE azimuths are drawn within this offset from broadside (radians).
    pub max_offset: f64,
    /// Minimum distance between two LUEs (meters).
    pub min_separation: f64,
    /// When set, EUE `e` shares the direction of LUE `e mod K`.
    pub collinear: bool,
    /// Collinear EUE distance as a fraction of its paired LUE distance.
    pub eue_distance_ratio: f64,
    pub nlos_paths: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            geometry: ArrayGeometry::from_carrier(65, 3, 2e9).expect("valid default geometry"),
            num_lue: 4,
            num_eue: 4,
            p_b: crate::dbm_to_watts(0.0),
            sigma2: crate::dbm_to_watts(-96.0),
            cell: Cell::default(),
            bs: Point::new(50.0, 100.0),
            lue_distance: (10.0, 30.0),
            max_offset: 60f64.to_radians(),
            min_separation: 2.0,
            collinear: true,
            eue_distance_ratio: 0.5,
            nlos_paths: 0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_lue == 0 || self.num_eue == 0 {
            return Err(Error::Config("need at least one LUE and one EUE".into()));
        }
        if !(self.p_b > 0.0 && self.p_b.is_finite()) {
            return Err(Error::Config(format!("power budget must be positive, got {}", self.p_b)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!("noise power must be positive, got {}", self.sigma2)));
        }
        let (lo, hi) = self.lue_distance;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config(format!("bad LUE distance range ({lo}, {hi})")));
        }
        if self.collinear && !(self.eue_distance_ratio > 0.0) {
            return Err(Error::Config(format!(
                "infeasible EUE placement: distance ratio {} gives a non-positive distance",
                self.eue_distance_ratio
            )));
        }
        if !self.cell.contains(self.bs) {
            return Err(Error::Config("BS must lie inside (or on the edge of) the cell".into()));
        }
        Ok(())
    }
}

/// Static description of a deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub lues: Vec<UePlacement>,
    pub eues: Vec<UePlacement>,
    pub p_b: f64,
    pub sigma2: f64,
    pub cell: Cell,
    pub bs: Point,
    pub nlos_paths: usize,
    pub rng_seed: u64,
}

impl Scenario {
    pub fn num_lue(&self) -> usize {
        self.lues.len()
    }

    pub fn num_eue(&self) -> usize {
        self.eues.len()
    }

    /// Builds LoS (+ optional scatterer) channels for every user. Scatterers
    /// are drawn from a generator seeded with `rng_seed`.
    pub fn channels(&self) -> Result<ChannelSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed ^ 0x5eed_c4a7);
        self.channels_with(&mut rng)
    }

    fn channels_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSet> {
        let n_b = self.geometry.n_b();
        let mut build = |ues: &[UePlacement]| -> Result<DMatrix<C64>> {
            let mut m = DMatrix::zeros(n_b, ues.len());
            for (j, u) in ues.iter().enumerate() {
                let mut h = los_channel(
                    &self.geometry,
                    lsfc(u.distance)?,
                    u.azimuth,
                    u.elevation,
                    u.distance,
                )?;
                if self.nlos_paths > 0 {
                    let sc = sample_scatterers(&self.cell, self.bs, self.nlos_paths, rng)?;
                    h += nlos_channel(&self.geometry, &sc)?;
                }
                m.set_column(j, &h);
            }
            Ok(m)
        };
        let lue = build(&self.lues)?;
        let eue = build(&self.eues)?;
        ChannelSet::new(lue, eue)
    }

    /// Far-field approximation of the LUE and EUE channels (LoS only).
    pub fn far_field_channels(&self) -> Result<ChannelSet> {
        let n_b = self.geometry.n_b();
        let build = |ues: &[UePlacement]| -> Result<DMatrix<C64>> {
            let mut m = DMatrix::zeros(n_b, ues.len());
            for (j, u) in ues.iter().enumerate() {
                let h = far_field_channel(
                    &self.geometry,
                    lsfc(u.distance)?,
                    u.azimuth,
                    u.elevation,
                    u.distance,
                )?;
                m.set_column(j, &h);
            }
            Ok(m)
        };
        ChannelSet::new(build(&self.lues)?, build(&self.eues)?)
    }
}

/// Samples UE positions and builds the matching channels. A pure function
/// of the configuration (including its seed).
pub fn generate_scenario(config: &ScenarioConfig) -> Result<(Scenario, ChannelSet)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bs = config.bs;
    let broadside = 1.5 * PI;

    let mut lues: Vec<UePlacement> = Vec::with_capacity(config.num_lue);
    let mut attempts = 0;
    while lues.len() < config.num_lue {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Config(
                "could not place LUEs inside the cell with the requested separation".into(),
            ));
        }
        let (lo, hi) = config.lue_distance;
        let d = lo + (hi - lo) * rng.random::<f64>();
        let theta = broadside + config.max_offset * (2.0 * rng.random::<f64>() - 1.0);
        let cand = UePlacement::new(theta, FRAC_PI_2, d, UeRole::Lue, lues.len())?;
        let p = cand.to_point(bs);
        if !config.cell.contains(p) {
            continue;
        }
        if lues.iter().any(|u| u.to_point(bs).distance(p) < config.min_separation) {
            continue;
        }
        lues.push(cand);
    }

    let mut eues = Vec::with_capacity(config.num_eue);
    for e in 0..config.num_eue {
        let eue = if config.collinear {
            let pair = &lues[e % config.num_lue];
            let d = pair.distance * config.eue_distance_ratio;
            UePlacement::new(pair.azimuth, pair.elevation, d, UeRole::Eue, e)
                .map_err(|_| Error::Config(format!("infeasible EUE distance {d}")))?
        } else {
            loop {
                let p = Point::new(
                    rng.random::<f64>() * config.cell.width,
                    rng.random::<f64>() * config.cell.height,
                );
                if bs.distance(p) >= 1.0 {
                    break UePlacement::from_point(bs, p, UeRole::Eue, e)?;
                }
            }
        };
        if !config.cell.contains(eue.to_point(bs)) {
            return Err(Error::Config(format!("EUE {e} falls outside the cell")));
        }
        eues.push(eue);
    }

    let scenario = Scenario {
        geometry: config.geometry,
        lues,
        eues,
        p_b: config.p_b,
        sigma2: config.sigma2,
        cell: config.cell,
        bs,
        nlos_paths: config.nlos_paths,
        rng_seed: config.seed,
    };
    let channels = scenario.channels_with(&mut rng)?;
    Ok((scenario, channels))
}

/// Channel columns of all LUEs (`H_b`, `N_b × K`) and all EUEs (`N_b × E`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    lue: DMatrix<C64>,
    eue: DMatrix<C64>,
}

impl ChannelSet {
    pub fn new(lue: DMatrix<C64>, eue: DMatrix<C64>) -> Result<Self> {
        if lue.ncols() == 0 {
            return Err(Error::Dimension("at least one LUE channel is required".into()));
        }
        if eue.nrows() != lue.nrows() {
            return Err(Error::Dimension(format!(
                "LUE channels have {} entries but EUE channels have {}",
                lue.nrows(),
                eue.nrows()
            )));
        }
        if lue.iter().chain(eue.iter()).any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::domain("channel entries must be finite"));
        }
        Ok(Self { lue, eue })
    }

    pub fn n_b(&self) -> usize {
        self.lue.nrows()
    }

    pub fn num_lue(&self) -> usize {
        self.lue.ncols()
    }

    pub fn num_eue(&self) -> usize {
        self.eue.ncols()
    }

    /// Stacked LUE matrix `H_b`.
    pub fn lue_matrix(&self) -> &DMatrix<C64> {
        &self.lue
    }

    pub fn eue_matrix(&self) -> &DMatrix<C64> {
        &self.eue
    }

    pub fn channel(&self, u: UeId) -> &[C64] {
        let n = self.n_b();
        match u {
            UeId::Lue(k) => &self.lue.as_slice()[k * n..(k + 1) * n],
            UeId::Eue(e) => &self.eue.as_slice()[e * n..(e + 1) * n],
        }
    }

    /// Same LUE channels with every EUE channel replaced by zeros.
    pub fn without_eavesdroppers(&self) -> Self {
        Self {
            lue: self.lue.clone(),
            eue: DMatrix::zeros(self.eue.nrows(), self.eue.ncols()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(nx: usize, nz: usize) -> ArrayGeometry {
        ArrayGeometry::new(nx, nz, 0.15).unwrap()
    }

    #[test]
    fn rejects_even_dimensions() {
        assert!(ArrayGeometry::new(4, 3, 0.1).is_err());
        assert!(ArrayGeometry::new(3, 2, 0.1).is_err());
    }

    #[test]
    fn center_offsets_have_unit_phase() {
        let g = geom(3, 3);
        assert_eq!(g.steering_phase_x(0.3, 1.1, 4.0, 0).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(g.steering_phase_z(1.1, 4.0, 0).unwrap(), C64::new(1.0, 0.0));
        let a = g.array_response(0.3, 1.1, 4.0).unwrap();
        assert!((a[4] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_phase_x_broadside() {
        let g = geom(3, 3);
        let v = g.steering_phase_x(FRAC_PI_2, FRAC_PI_2, 5.0, 1).unwrap();
        let expected = C64::from_polar(1.0, -(TAU / 0.15) * (0.15 * 0.15 / (8.0 * 5.0)));
        assert!((v - expected).norm() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn steering_phase_z_examples() {
        let g = geom(3, 3);
        let v = g.steering_phase_z(FRAC_PI_2, 5.0, 1).unwrap();
        assert!((v - C64::from_polar(1.0, -0.023_561_944_901_923_45)).norm() < 1e-12);
        // φ = 0: only the linear term survives, (2π/λ)(λ/2) = π
        let v = g.steering_phase_z(0.0, 5.0, 1).unwrap();
        assert!((v - C64::from_polar(1.0, -PI)).norm() < 1e-12);
    }

    #[test]
    fn far_field_limit_of_phase_x() {
        let g = geom(5, 1);
        let (theta, phi) = (1.2, 1.4);
        let v = g.steering_phase_x(theta, phi, 1e9, 2).unwrap();
        let planar = -(TAU / 0.15) * 2.0 * 0.075 * theta.cos() * phi.sin();
        let diff = (v.arg() - planar).rem_euclid(TAU);
        let diff = diff.min(TAU - diff);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn distance_must_be_positive() {
        let g = geom(3, 3);
        assert!(matches!(g.steering_phase_x(0.0, 1.0, 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(g.steering_phase_z(1.0, -1.0, 1), Err(Error::Domain(_))));
        assert!(g.array_response(0.0, 1.0, 0.0).is_err());
        assert!(path_loss_db(0.0).is_err());
    }

    #[test]
    fn single_element_response() {
        let g = geom(1, 1);
        let a = g.array_response(0.4, 0.9, 3.0).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0], C64::new(1.0, 0.0));
        assert_eq!(g.rayleigh_distance(), 0.0);
    }

    #[test]
    fn path_loss_values() {
        assert!((path_loss_db(1.0).unwrap() + 33.05).abs() < 1e-12);
        assert!((path_loss_db(10.0).unwrap() + 69.75).abs() < 1e-12);
        assert!((path_loss_db(100.0).unwrap() + 106.45).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_distance_3x3() {
        let g = geom(3, 3);
        assert!((g.aperture() - 8f64.sqrt() * 0.075).abs() < 1e-12);
        assert!((g.rayleigh_distance() - 0.6).abs() < 1e-12);
        let g2 = ArrayGeometry::new(3, 3, 0.3).unwrap();
        assert!((g2.rayleigh_distance() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn los_channel_norm_and_phase() {
        let g = geom(1, 1);
        let h = los_channel(&g, 1.0, 0.3, 1.0, 7.0).unwrap();
        assert!((h[0].norm() - 1.0).abs() < 1e-12);

        let g = geom(5, 3);
        let (theta, phi, d) = (4.4, 1.3, 12.5);
        let h = los_channel(&g, 4.0, theta, phi, d).unwrap();
        assert!((h.norm() - 2.0 * 15f64.sqrt()).abs() < 1e-9);
        let carrier = C64::from_polar(1.0, -TAU * d / 0.15);
        let mut idx = 0;
        for nx in -2..=2 {
            for nz in -1..=1 {
                let a = g.steering_phase_x(theta, phi, d, nx).unwrap()
                    * g.steering_phase_z(phi, d, nz).unwrap();
                let row = h[idx].conj() / 2.0;
                assert!((row - carrier * a).norm() < 1e-12);
                idx += 1;
            }
        }
        assert!(los_channel(&g, 0.0, theta, phi, d).is_err());
    }

    #[test]
    fn nlos_degenerate_cases() {
        let g = geom(3, 3);
        let h = nlos_channel(&g, &[]).unwrap();
        assert!(h.iter().all(|x| *x == C64::new(0.0, 0.0)));

        let s = Scatterer { theta: 4.0, phi: 1.2, distance: 30.0, gain: C64::new(1.0, 0.0) };
        let h = nlos_channel(&g, &[s]).unwrap();
        let a = g.array_response(4.0, 1.2, 30.0).unwrap();
        assert!((h - a.map(|x| x.conj())).norm() < 1e-14);
    }

    #[test]
    fn nlos_is_seed_deterministic() {
        let g = geom(3, 3);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sc = sample_scatterers(&Cell::default(), Point::new(50.0, 100.0), 3, &mut rng).unwrap();
            nlos_channel(&g, &sc).unwrap()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn placement_round_trip_through_cell_point() {
        let bs = Point::new(50.0, 100.0);
        let p = Point::new(37.0, 81.0);
        let u = UePlacement::from_point(bs, p, UeRole::Lue, 0).unwrap();
        assert!((0.0..TAU).contains(&u.azimuth));
        let q = u.to_point(bs);
        assert!(p.distance(q) < 1e-12);
    }

    #[test]
    fn collinear_pair_shares_direction() {
        let g = geom(9, 9);
        let l = UePlacement::new(4.5, FRAC_PI_2, 20.0, UeRole::Lue, 0).unwrap();
        let e = UePlacement::new(l.azimuth, l.elevation, 10.0, UeRole::Eue, 0).unwrap();
        let sc = Scenario {
            geometry: g,
            lues: vec![l],
            eues: vec![e],
            p_b: 1e-3,
            sigma2: 1e-13,
            cell: Cell::default(),
            bs: Point::new(50.0, 100.0),
            nlos_paths: 0,
            rng_seed: 1,
        };
        let ch = sc.channels().unwrap();
        assert_eq!(ch.num_lue(), 1);
        assert_eq!(sc.eues[0].azimuth, sc.lues[0].azimuth);
        assert_eq!(sc.eues[0].elevation, sc.lues[0].elevation);
    }

    #[test]
    fn generated_scenario_respects_config() {
        let cfg = ScenarioConfig { seed: 42, ..Default::default() };
        let (sc, ch) = generate_scenario(&cfg).unwrap();
        assert_eq!(sc.num_lue(), 4);
        assert_eq!(sc.num_eue(), 4);
        assert_eq!(ch.n_b(), 195);
        for u in sc.lues.iter().chain(&sc.eues) {
            assert!(sc.cell.contains(u.to_point(sc.bs)));
        }
        for (e, eue) in sc.eues.iter().enumerate() {
            let l = &sc.lues[e % 4];
            assert_eq!(eue.azimuth, l.azimuth);
            assert!((eue.distance - 0.5 * l.distance).abs() < 1e-12);
        }
        let (sc2, ch2) = generate_scenario(&cfg).unwrap();
        assert_eq!(sc, sc2);
        assert_eq!(ch, ch2);
    }

    #[test]
    fn infeasible_eue_distance_is_config_error() {
        let cfg = ScenarioConfig { eue_distance_ratio: 0.0, ..Default::default() };
        assert!(matches!(generate_scenario(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn near_field_default_separates_collinear_users() {
        // Correlation of LUE (20 m) and EUE (10 m) responses on the default array.
        let g = ScenarioConfig::default().geometry;
        let a = g.array_response(1.5 * PI, FRAC_PI_2, 20.0).unwrap();
        let b = g.array_response(1.5 * PI, FRAC_PI_2, 10.0).unwrap();
        let corr = (a.dotc(&b)).norm() / g.n_b() as f64;
        assert!(corr < 0.5, "{corr}");
        assert!(g.rayleigh_distance() > 30.0);
    }
}
