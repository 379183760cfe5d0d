//! Downlink channel model: Rician small-scale fading, a two-level sectorial
//! antenna pattern, free-space link budget and the composite per-user
//! coefficient A that the NOMA allocator consumes.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudget {
    /// Channel bandwidth B (Hz).
    pub bandwidth: f64,
    /// Receiver noise temperature (K).
    pub noise_temperature: f64,
    /// Carrier wavelength (m).
    pub wavelength: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub path_loss_exponent: f64,
    /// Boltzmann constant (J/K).
    pub boltzmann: f64,
    /// Normalised noise power σ².
    pub noise_power: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            bandwidth: 20e6,
            noise_temperature: 870.0,
            wavelength: 0.15,
            tx_gain: 2.0,
            rx_gain: 1.0,
            path_loss_exponent: 2.0,
            boltzmann: 1.38e-23,
            noise_power: 1.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("bandwidth", self.bandwidth),
            ("noise_temperature", self.noise_temperature),
            ("wavelength", self.wavelength),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("path_loss_exponent", self.path_loss_exponent),
            ("boltzmann", self.boltzmann),
            ("noise_power", self.noise_power),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain("link budget", format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrayPattern {
    /// Gain inside the main lobe, M_b.
    pub mainlobe_gain: f64,
    /// Gain everywhere else, m_b.
    pub backlobe_gain: f64,
    /// Half-power beamwidth θ_b (rad).
    pub half_beamwidth: f64,
}

impl Default for ArrayPattern {
    fn default() -> Self {
        Self { mainlobe_gain: 2.0, backlobe_gain: 0.5, half_beamwidth: PI / 6.0 }
    }
}

impl ArrayPattern {
    pub fn validate(&self) -> Result<()> {
        if !(self.backlobe_gain > 0.0 && self.backlobe_gain < self.mainlobe_gain) {
            return Err(Error::domain("array pattern", "need 0 < backlobe_gain < mainlobe_gain"));
        }
        if !(self.half_beamwidth > 0.0) {
            return Err(Error::domain("array pattern", "half_beamwidth must be positive"));
        }
        Ok(())
    }
}

/// Sectorial gain: M_b inside the (closed) main lobe, m_b outside it.
pub fn array_gain(pattern: &ArrayPattern, departure_angle: f64) -> f64 {
    if departure_angle.abs() <= pattern.half_beamwidth {
        pattern.mainlobe_gain
    } else {
        pattern.backlobe_gain
    }
}

/// One centre cell ringed by `num_cells − 1` edge cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellTopology {
    pub num_cells: usize,
    pub users_per_cell: usize,
    /// Elevation angle (rad) separating the centre cell from the ring.
    pub center_boundary: f64,
    /// Lowest elevation angle (rad) served by the ring.
    pub edge_boundary: f64,
    /// Rician shape factor of every link.
    pub rician_k: f64,
}

impl Default for CellTopology {
    fn default() -> Self {
        Self {
            num_cells: 7,
            users_per_cell: 8,
            center_boundary: PI / 6.0,
            edge_boundary: PI / 13.33,
            rician_k: 4.5,
        }
    }
}

impl CellTopology {
    pub fn validate(&self) -> Result<()> {
        if self.num_cells == 0 || self.users_per_cell == 0 {
            return Err(Error::domain("topology", "num_cells and users_per_cell must be at least 1"));
        }
        if !(0.0 < self.edge_boundary && self.edge_boundary < self.center_boundary && self.center_boundary < FRAC_PI_2) {
            return Err(Error::domain("topology", "need 0 < edge_boundary < center_boundary < π/2"));
        }
        if !(self.rician_k >= 0.0) {
            return Err(Error::domain("topology", "rician_k must be non-negative"));
        }
        Ok(())
    }

    /// Interfering cells J_m (0-based; cell 0 is the centre). The centre
    /// hears every ring cell, a ring cell hears the centre and its two ring
    /// neighbours.
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let ring = self.num_cells.saturating_sub(1);
        if cell == 0 {
            return (1..self.num_cells).collect();
        }
        let pos = cell - 1;
        let mut out = vec![0];
        for r in [(pos + ring - 1) % ring, (pos + 1) % ring] {
            let c = r + 1;
            if c != cell && !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    /// Elevation band [lo, hi] (rad) occupied by users of `cell`.
    pub fn elevation_band(&self, cell: usize) -> (f64, f64) {
        if cell == 0 {
            (self.center_boundary, FRAC_PI_2)
        } else {
            (self.edge_boundary, self.center_boundary)
        }
    }
}

/// Deterministic generator for time instant `instant` of a run seeded with
/// `seed`. Each instant gets its own ChaCha stream.
pub fn instant_rng(seed: u64, instant: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instant);
    rng
}

/// |g|² for a unit-mean-power Rician envelope with shape factor `k`.
/// `k = ∞` is the pure line-of-sight limit.
pub fn sample_rician_power<R: Rng + ?Sized>(k: f64, rng: &mut R) -> Result<f64> {
    if k.is_nan() || k < 0.0 {
        return Err(Error::domain("rician shape factor", format!("must be non-negative, got {k}")));
    }
    if k.is_infinite() {
        return Ok(1.0);
    }
    let los = (k / (k + 1.0)).sqrt();
    let sigma = (0.5 / (k + 1.0)).sqrt();
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    let re = los + sigma * x;
    let im = sigma * y;
    Ok(re * re + im * im)
}

/// Space-link path loss 16π²·k_B·B·T_n·H^β/(λ²·G_r·G_t·sin^β ψ), normalised
/// by the noise power convention of the link budget.
pub fn path_loss(params: &LinkBudget, altitude: f64, elevation: f64) -> Result<f64> {
    if !(elevation > 0.0 && elevation <= FRAC_PI_2 + 1e-12) {
        return Err(Error::domain("elevation angle", format!("must lie in (0, π/2], got {elevation}")));
    }
    if !(altitude > 0.0) {
        return Err(Error::domain("altitude", "must be positive"));
    }
    let beta = params.path_loss_exponent;
    Ok(16.0 * PI * PI * params.boltzmann * params.bandwidth * params.noise_temperature * altitude.powf(beta)
        / (params.wavelength * params.wavelength * params.rx_gain * params.tx_gain * elevation.sin().powf(beta)))
}

/// The random part of a user's channel, independent of altitude and power.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDraw {
    pub cell: usize,
    /// Index of the user within its cell, in draw order.
    pub user: usize,
    /// Elevation angle ψ (rad).
    pub elevation: f64,
    /// |g|² towards the serving beam.
    pub serving_fade: f64,
    /// (cell j, |g|²) for every interfering cell.
    pub interferer_fades: Vec<(usize, f64)>,
}

/// Places users uniformly in each cell's elevation band and draws their
/// fades. Outer index is the cell.
pub fn draw_users<R: Rng + ?Sized>(topology: &CellTopology, rng: &mut R) -> Result<Vec<Vec<UserDraw>>> {
    topology.validate()?;
    let mut cells = Vec::with_capacity(topology.num_cells);
    for cell in 0..topology.num_cells {
        let (lo, hi) = topology.elevation_band(cell);
        let band = Uniform::new_inclusive(lo, hi).map_err(|e| Error::domain("elevation band", e.to_string()))?;
        let neighbors = topology.neighbors(cell);
        let mut users = Vec::with_capacity(topology.users_per_cell);
        for user in 0..topology.users_per_cell {
            let elevation = band.sample(rng);
            let serving_fade = sample_rician_power(topology.rician_k, rng)?;
            let mut interferer_fades = Vec::with_capacity(neighbors.len());
            for &j in &neighbors {
                interferer_fades.push((j, sample_rician_power(topology.rician_k, rng)?));
            }
            users.push(UserDraw { cell, user, elevation, serving_fade, interferer_fades });
        }
        cells.push(users);
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserLink {
    pub cell: usize,
    pub user: usize,
    pub elevation: f64,
    pub serving_fade: f64,
    pub interferer_fades: Vec<(usize, f64)>,
    pub path_loss: f64,
    /// Composite interference-plus-noise coefficient A (larger is weaker).
    pub composite: f64,
}

/// A = (m_b²/(M_b²·P_m·|g_m|²))·Σ_j P_j·|g_j|² + L/(ϱ_m·M_b²·|g_m|²), ϱ_m = P_m/σ².
pub fn composite_coefficient(
    draw: &UserDraw,
    path_loss: f64,
    pattern: &ArrayPattern,
    params: &LinkBudget,
    cell_powers: &[f64],
) -> f64 {
    let p_m = cell_powers[draw.cell];
    let mb2 = pattern.mainlobe_gain * pattern.mainlobe_gain;
    let interference: f64 = draw.interferer_fades.iter().map(|&(j, g)| cell_powers[j] * g).sum();
    let snr = p_m / params.noise_power;
    pattern.backlobe_gain * pattern.backlobe_gain * interference / (mb2 * p_m * draw.serving_fade)
        + path_loss / (snr * mb2 * draw.serving_fade)
}

/// Evaluates the draws at `altitude` with per-cell transmit powers and
/// sorts each cell by decreasing A (stable on user index).
pub fn compose_links(
    draws: &[Vec<UserDraw>],
    pattern: &ArrayPattern,
    params: &LinkBudget,
    altitude: f64,
    cell_powers: &[f64],
) -> Result<Vec<Vec<UserLink>>> {
    if cell_powers.len() != draws.len() {
        return Err(Error::Dimension { what: "cell powers", expected: draws.len(), got: cell_powers.len() });
    }
    if let Some(p) = cell_powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::domain("cell power", format!("must be positive, got {p}")));
    }
    let mut out = Vec::with_capacity(draws.len());
    for cell in draws {
        if cell.is_empty() {
            return Err(Error::domain("cell", "has no users"));
        }
        let mut links = Vec::with_capacity(cell.len());
        for d in cell {
            let l = path_loss(params, altitude, d.elevation)?;
            links.push(UserLink {
                cell: d.cell,
                user: d.user,
                elevation: d.elevation,
                serving_fade: d.serving_fade,
                interferer_fades: d.interferer_fades.clone(),
                path_loss: l,
                composite: composite_coefficient(d, l, pattern, params, cell_powers),
            });
        }
        links.sort_by(|a, b| b.composite.total_cmp(&a.composite));
        out.push(links);
    }
    Ok(out)
}

/// Draws users and composes their links in one go.
pub fn build_links<R: Rng + ?Sized>(
    topology: &CellTopology,
    pattern: &ArrayPattern,
    params: &LinkBudget,
    altitude: f64,
    cell_powers: &[f64],
    rng: &mut R,
) -> Result<Vec<Vec<UserLink>>> {
    let draws = draw_users(topology, rng)?;
    compose_links(&draws, pattern, params, altitude, cell_powers)
}

/// Moment estimate of the Rician K factor from |g|² samples:
/// K = sqrt(2m₂² − m₄)/(m₂ − sqrt(2m₂² − m₄)), with m₂ = E|g|², m₄ = E|g|⁴.
pub fn estimate_k_factor(powers: &[f64]) -> f64 {
    let n = powers.len() as f64;
    let m2 = powers.iter().sum::<f64>() / n;
    let m4 = powers.iter().map(|p| p * p).sum::<f64>() / n;
    let root = (2.0 * m2 * m2 - m4).max(0.0).sqrt();
    root / (m2 - root)
}
