use chrono::{DateTime, Utc};

use super::System;
use crate::aero::FlightModel;
use crate::channel::{compose_links, UserDraw, UserLink};
use crate::error::Result;
use crate::noma::{allocate, evaluate_network, Regime, RateReport};

/// Power split of the whole network, addressed by (cell, user id) so it
/// survives a re-sort of the users when the altitude changes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkAllocation {
    /// α[cell][user id].
    pub fractions: Vec<Vec<f64>>,
    pub regimes: Vec<Regime>,
    /// Closed-form network sum (bit/s/Hz).
    pub spectral_efficiency: f64,
}

impl NetworkAllocation {
    pub fn zeros(cells: usize, users: usize) -> Self {
        Self { fractions: vec![vec![0.0; users]; cells], regimes: vec![Regime::Feasible; cells], spectral_efficiency: 0.0 }
    }

    pub fn equal(cells: usize, users: usize) -> Self {
        Self {
            fractions: vec![vec![1.0 / users as f64; users]; cells],
            regimes: vec![Regime::Feasible; cells],
            spectral_efficiency: f64::NAN,
        }
    }

    /// Fractions of one cell in the order of `links`.
    pub fn sorted_for(&self, links: &[UserLink]) -> Vec<f64> {
        links.iter().map(|l| self.fractions[l.cell][l.user]).collect()
    }

    pub fn partial_cells(&self) -> usize {
        self.regimes.iter().filter(|r| matches!(r, Regime::Partial { .. })).count()
    }
}

/// P1(a): the closed-form NOMA split of every cell for the given links.
pub fn solve_p1a(links: &[Vec<UserLink>], omega: f64) -> Result<NetworkAllocation> {
    let users = links.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = NetworkAllocation::zeros(links.len(), users);
    for (m, cell) in links.iter().enumerate() {
        let a: Vec<f64> = cell.iter().map(|l| l.composite).collect();
        let alloc = allocate(&a, omega)?;
        for (link, alpha) in cell.iter().zip(&alloc.fractions) {
            out.fractions[m][link.user] = *alpha;
        }
        out.regimes[m] = alloc.regime;
        out.spectral_efficiency += alloc.spectral_efficiency;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeChoice {
    pub altitude: f64,
    /// Whether P_a − P_req ≥ P_st holds there.
    pub storage_met: bool,
}

/// P1(b). Path loss grows with altitude, so the lowest altitude that still
/// leaves the storage set-aside is optimal. If none does, the altitude with
/// the most spare power is returned and flagged.
pub fn solve_p1b(system: &System, utc: DateTime<Utc>, storage: f64) -> Result<AltitudeChoice> {
    let b = system.flight.bounds;
    let margin = |h: f64| -> Result<f64> {
        let v = solve_p1c(&system.flight, h)?;
        Ok(system.harvested(h, utc)? - system.flight.required_power(h, v)? - storage)
    };
    let steps = ((b.max_altitude - b.min_altitude) / system.params.altitude_scan_step).ceil() as usize;
    let mut best = (b.min_altitude, f64::NEG_INFINITY);
    for i in 0..=steps {
        let h = (b.min_altitude + i as f64 * system.params.altitude_scan_step).min(b.max_altitude);
        let m = margin(h)?;
        if m >= 0.0 {
            return Ok(AltitudeChoice { altitude: h, storage_met: true });
        }
        if m > best.1 {
            best = (h, m);
        }
    }
    Ok(AltitudeChoice { altitude: best.0, storage_met: false })
}

/// P1(c): the minimum-propulsion-power airspeed at `altitude`.
pub fn solve_p1c(flight: &FlightModel, altitude: f64) -> Result<f64> {
    flight.optimal_speed(altitude)
}

pub(crate) fn zero_report(cells: usize, users: usize) -> RateReport {
    RateReport {
        sinr: vec![vec![0.0; users]; cells],
        user_rates: vec![vec![0.0; users]; cells],
        qos_met: vec![vec![false; users]; cells],
        cell_rates: vec![0.0; cells],
        sum_rate: 0.0,
    }
}

/// Rates obtained with `allocation` when flying at `altitude` and
/// transmitting `transmit` watts in total. Zero transmit power yields a
/// zero-rate report.
pub fn evaluate_at(
    system: &System,
    draws: &[Vec<UserDraw>],
    altitude: f64,
    transmit: f64,
    allocation: &NetworkAllocation,
    qos_rate: f64,
) -> Result<(Option<Vec<Vec<UserLink>>>, RateReport)> {
    let t = &system.topology;
    if transmit <= 0.0 {
        return Ok((None, zero_report(t.num_cells, t.users_per_cell)));
    }
    let powers = vec![system.cell_power(transmit); t.num_cells];
    let links = compose_links(draws, &system.pattern, &system.link, altitude, &powers)?;
    let composites: Vec<Vec<f64>> = links.iter().map(|c| c.iter().map(|l| l.composite).collect()).collect();
    let fractions: Vec<Vec<f64>> = links.iter().map(|c| allocation.sorted_for(c)).collect();
    let report = evaluate_network(&composites, &fractions, system.link.bandwidth, qos_rate)?;
    Ok((Some(links), report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayDecision {
    pub altitude: f64,
    pub airspeed: f64,
    pub harvested: f64,
    pub propulsion: f64,
    pub required: f64,
    /// Set-aside for the battery (W).
    pub storage: f64,
    /// Total transmit power P_T (W), zero when the sun cannot cover it.
    pub transmit: f64,
    pub allocation: NetworkAllocation,
    pub report: RateReport,
    pub iterations: usize,
    pub converged: bool,
    /// Network spectral efficiency (bit/s/Hz) after each iteration.
    pub trace: Vec<f64>,
    /// P_a − P_req − P_st ≤ 0 at the emitted point.
    pub insufficient_power: bool,
    pub storage_met: bool,
}

impl DayDecision {
    /// The objective (bit/s/Hz) the loop converged on.
    pub fn objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(0.0)
    }
}

/// The day loop for one daylight instant: alternate P1(a)–(c) from
/// (H₀, k·V_s(H₀)) until the network spectral efficiency changes by less
/// than δ. The channel draw stays fixed throughout.
pub fn run_algorithm1(
    system: &System,
    utc: DateTime<Utc>,
    draws: &[Vec<UserDraw>],
    omega: f64,
    storage: f64,
) -> Result<DayDecision> {
    let flight = &system.flight;
    let t = &system.topology;
    let params = &system.params;
    let qos_rate = omega * system.link.bandwidth;

    let mut h = params.initial_altitude;
    let mut v = (params.initial_speed_factor * flight.stall_speed(h)?).min(flight.bounds.max_airspeed);
    let mut trace = Vec::new();
    let mut prev: Option<f64> = None;
    let mut converged = false;
    let mut storage_met = true;
    let mut allocation = NetworkAllocation::zeros(t.num_cells, t.users_per_cell);
    let mut report = zero_report(t.num_cells, t.users_per_cell);
    let mut iterations = 0;

    for i in 1..=params.max_iterations {
        iterations = i;
        let transmit = system.harvested(h, utc)? - flight.required_power(h, v)? - storage;
        allocation = if transmit > 0.0 {
            let powers = vec![system.cell_power(transmit); t.num_cells];
            let links = compose_links(draws, &system.pattern, &system.link, h, &powers)?;
            solve_p1a(&links, omega)?
        } else {
            NetworkAllocation::zeros(t.num_cells, t.users_per_cell)
        };

        let choice = solve_p1b(system, utc, storage)?;
        storage_met = choice.storage_met;
        h = choice.altitude;
        v = solve_p1c(flight, h)?;

        let transmit = system.harvested(h, utc)? - flight.required_power(h, v)? - storage;
        report = evaluate_at(system, draws, h, transmit, &allocation, qos_rate)?.1;
        let objective = report.sum_rate / system.link.bandwidth;
        trace.push(objective);
        if let Some(p) = prev {
            if (objective - p).abs() < params.tolerance {
                converged = true;
                break;
            }
        }
        prev = Some(objective);
    }

    let harvested = system.harvested(h, utc)?;
    let state = flight.flight_state(h, v)?;
    let transmit = harvested - state.required_power - storage;
    Ok(DayDecision {
        altitude: h,
        airspeed: v,
        harvested,
        propulsion: state.propulsion_power,
        required: state.required_power,
        storage,
        transmit: transmit.max(0.0),
        allocation,
        report,
        iterations,
        converged,
        trace,
        insufficient_power: transmit <= 0.0,
        storage_met,
    })
}
