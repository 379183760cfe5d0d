use super::day::{evaluate_at, run_algorithm1, solve_p1a, NetworkAllocation};
use super::night::run_algorithm2;
use super::System;
use crate::channel::{compose_links, draw_users, instant_rng};
use crate::config::{DateScenario, ScenarioConfig, TimeInstant};
use crate::energy::{night_budget, EnergyLedger};
use crate::error::Result;
use crate::noma::RateReport;
use crate::solar::solar_elevation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Day,
    Night,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Day => "day",
            Phase::Night => "night",
        }
    }
}

/// Everything decided and observed during one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct HourRecord {
    pub instant: usize,
    /// Local clock hour at the start of the instant.
    pub hour: f64,
    pub phase: Phase,
    /// Solar elevation (deg).
    pub elevation: f64,
    pub altitude: f64,
    pub airspeed: f64,
    pub stall_speed: f64,
    pub harvested: f64,
    pub propulsion: f64,
    pub required: f64,
    pub storage: f64,
    pub transmit: f64,
    /// Per-cell antenna power P_m (W).
    pub cell_power: f64,
    pub allocation: NetworkAllocation,
    pub report: RateReport,
    pub iterations: usize,
    pub converged: bool,
    /// Day: network spectral efficiency per iteration. Night: P_pro per
    /// iteration, starting point included.
    pub trace: Vec<f64>,
    /// No transmit power was available.
    pub outage: bool,
    pub storage_met: bool,
}

impl HourRecord {
    pub fn sum_rate(&self) -> f64 {
        self.report.sum_rate
    }

    pub fn qos_users(&self) -> usize {
        self.report.qos_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayTrace {
    pub date: DateScenario,
    pub qos_mbps: f64,
    pub baseline: bool,
    pub records: Vec<HourRecord>,
    pub ledger: EnergyLedger,
}

impl DayTrace {
    /// Σ over instants of the network sum rate (bit/s).
    pub fn total_rate(&self) -> f64 {
        self.records.iter().map(HourRecord::sum_rate).sum()
    }

    pub fn daylight_instants(&self) -> usize {
        self.records.iter().filter(|r| r.phase == Phase::Day).count()
    }
}

/// Night instants from `n` up to the next daylight instant, wrapping past
/// midnight into the pre-dawn block when `n` lies in the evening.
fn night_run(day: &[bool], n: usize) -> usize {
    let len = day[n..].iter().take_while(|d| !**d).count();
    let reached_end = n + len == day.len();
    let had_day_before = day[..n].iter().any(|d| *d);
    if reached_end && had_day_before {
        len + day.iter().take_while(|d| !**d).count()
    } else {
        len
    }
}

/// Daylight instants from `n` to the end of its block, and the length of
/// the night that follows.
fn day_block(day: &[bool], n: usize) -> (usize, usize) {
    let end = n + day[n..].iter().take_while(|d| **d).count();
    let night = if end == day.len() { day.iter().take_while(|d| !**d).count() } else { night_run(day, end) };
    (end, night)
}

/// Runs one calendar day for one rate target. The operating mode (optimised
/// or fixed baseline) comes from `config.baseline`.
///
/// Energy policy: the battery starts at its configured charge at local
/// midnight. Each night block spends what is stored above the reserve at a
/// constant transmit power fixed when the block starts. By day, the gap
/// between the charge and the energy the coming night would use at the
/// target transmit power (capped at capacity) is set aside hour by hour in
/// proportion to each hour's forecast surplus.
pub fn simulate_day(config: &ScenarioConfig, date: &DateScenario, qos_mbps: f64) -> Result<DayTrace> {
    config.validate()?;
    let system = System::new(config, date);
    let flight = &system.flight;
    let battery = &system.battery;
    let t = &system.topology;
    let omega = config.qos_spectral_efficiency(qos_mbps);
    let qos_rate = qos_mbps * 1e6;
    let grid: Vec<TimeInstant> = config.time_grid(date)?;
    let dt_h = config.dt_hours();
    let dt_s = dt_h * 3600.0;
    let elevations: Vec<f64> = grid.iter().map(|g| solar_elevation(&system.solar, g.utc)).collect();
    let day: Vec<bool> = elevations.iter().map(|e| *e > 0.0).collect();

    // Night operating point, and the day point used to forecast surplus.
    let (night_h, night_v, night_iters, night_converged, night_trace) = if config.baseline {
        let (h, v) = system.baseline_state()?;
        (h, v, 0, true, vec![flight.propulsion_power(h, v)?])
    } else {
        let d = run_algorithm2(flight, &system.params)?;
        let trace = d.trace.iter().map(|x| x.2).collect();
        (d.altitude, d.airspeed, d.iterations, d.converged, trace)
    };
    let night_required = flight.required_power(night_h, night_v)?;
    let (nominal_h, nominal_v) = if config.baseline {
        system.baseline_state()?
    } else {
        let h = flight.bounds.min_altitude;
        (h, flight.optimal_speed(h)?)
    };
    let nominal_required = flight.required_power(nominal_h, nominal_v)?;

    let mut ledger = EnergyLedger::new(battery.initial_energy(), dt_s);
    let mut night_plan: Option<f64> = None;
    let mut records = Vec::with_capacity(grid.len());

    for (n, instant) in grid.iter().enumerate() {
        let draws = draw_users(t, &mut instant_rng(config.seed, n as u64))?;
        let energy = ledger.energy();
        let record = if day[n] {
            night_plan = None;
            let (end, night_len) = day_block(&day, n);
            let mut surplus = Vec::with_capacity(end - n);
            for g in &grid[n..end] {
                surplus.push((system.harvested(nominal_h, g.utc)? - nominal_required).max(0.0));
            }
            let night_energy = night_len as f64 * dt_s * (night_required + system.params.night_transmit_target)
                / battery.discharge_efficiency;
            let need = (battery.reserve() + night_energy).min(battery.capacity());
            let gap = (need - energy).max(0.0);
            let total: f64 = surplus.iter().sum();
            let storage = if total > 0.0 {
                (gap / (battery.charge_efficiency * dt_s) * surplus[0] / total).min(surplus[0])
            } else {
                0.0
            };

            if config.baseline {
                let (h, v) = system.baseline_state()?;
                let harvested = system.harvested(h, instant.utc)?;
                let state = flight.flight_state(h, v)?;
                let raw = harvested - state.required_power - storage;
                let transmit = raw.max(0.0);
                let allocation = NetworkAllocation::equal(t.num_cells, t.users_per_cell);
                let report = evaluate_at(&system, &draws, h, transmit, &allocation, qos_rate)?.1;
                HourRecord {
                    instant: n,
                    hour: instant.hour,
                    phase: Phase::Day,
                    elevation: elevations[n],
                    altitude: h,
                    airspeed: v,
                    stall_speed: flight.stall_speed(h)?,
                    harvested,
                    propulsion: state.propulsion_power,
                    required: state.required_power,
                    storage,
                    transmit,
                    cell_power: system.cell_power(transmit),
                    allocation,
                    report,
                    iterations: 0,
                    converged: true,
                    trace: vec![],
                    outage: raw <= 0.0,
                    storage_met: raw >= 0.0,
                }
            } else {
                let d = run_algorithm1(&system, instant.utc, &draws, omega, storage)?;
                HourRecord {
                    instant: n,
                    hour: instant.hour,
                    phase: Phase::Day,
                    elevation: elevations[n],
                    altitude: d.altitude,
                    airspeed: d.airspeed,
                    stall_speed: flight.stall_speed(d.altitude)?,
                    harvested: d.harvested,
                    propulsion: d.propulsion,
                    required: d.required,
                    storage,
                    transmit: d.transmit,
                    cell_power: system.cell_power(d.transmit),
                    allocation: d.allocation,
                    report: d.report,
                    iterations: d.iterations,
                    converged: d.converged,
                    trace: d.trace,
                    outage: d.insufficient_power,
                    storage_met: d.storage_met,
                }
            }
        } else {
            let transmit = *night_plan.get_or_insert_with(|| {
                let hours = night_run(&day, n) as f64 * dt_h;
                let usable = (energy - battery.reserve()).max(0.0);
                night_budget(usable, hours, night_required - flight.aircraft.accessory_power, flight.aircraft.accessory_power, battery)
            });
            let allocation = if config.baseline {
                NetworkAllocation::equal(t.num_cells, t.users_per_cell)
            } else if transmit > 0.0 {
                let powers = vec![system.cell_power(transmit); t.num_cells];
                let links = compose_links(&draws, &system.pattern, &system.link, night_h, &powers)?;
                solve_p1a(&links, omega)?
            } else {
                NetworkAllocation::zeros(t.num_cells, t.users_per_cell)
            };
            let report = evaluate_at(&system, &draws, night_h, transmit, &allocation, qos_rate)?.1;
            let state = flight.flight_state(night_h, night_v)?;
            HourRecord {
                instant: n,
                hour: instant.hour,
                phase: Phase::Night,
                elevation: elevations[n],
                altitude: night_h,
                airspeed: night_v,
                stall_speed: flight.stall_speed(night_h)?,
                harvested: system.harvested(night_h, instant.utc)?,
                propulsion: state.propulsion_power,
                required: state.required_power,
                storage: 0.0,
                transmit,
                cell_power: system.cell_power(transmit),
                allocation,
                report,
                iterations: night_iters,
                converged: night_converged,
                trace: night_trace.clone(),
                outage: transmit <= 0.0,
                storage_met: true,
            }
        };
        ledger.record(
            n,
            record.hour,
            record.harvested,
            record.required,
            record.transmit,
            record.storage,
            record.outage,
            battery,
        );
        records.push(record);
    }

    Ok(DayTrace { date: date.clone(), qos_mbps, baseline: config.baseline, records, ledger })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineComparison {
    pub date: String,
    pub qos_mbps: f64,
    /// Σ over instants of the optimised network sum rate (bit/s).
    pub optimized: f64,
    pub baseline: f64,
    /// (optimised − baseline)/baseline.
    pub gain: f64,
    /// Instants where the baseline left some user below target or had no
    /// transmit power.
    pub baseline_flagged: Vec<usize>,
    pub optimized_flagged: Vec<usize>,
}

fn flagged(trace: &DayTrace) -> Vec<usize> {
    trace
        .records
        .iter()
        .filter(|r| r.outage || r.report.qos_count() < r.report.user_count())
        .map(|r| r.instant)
        .collect()
}

/// Runs the optimiser and the fixed baseline on the same seeds for every
/// rate target and reports the relative gain in day-total sum rate.
pub fn compare_baseline(config: &ScenarioConfig, date: &DateScenario) -> Result<Vec<BaselineComparison>> {
    let mut opt_cfg = config.clone();
    opt_cfg.baseline = false;
    let mut base_cfg = config.clone();
    base_cfg.baseline = true;
    let mut out = Vec::with_capacity(config.qos_mbps.len());
    for &q in &config.qos_mbps {
        let opt = simulate_day(&opt_cfg, date, q)?;
        let base = simulate_day(&base_cfg, date, q)?;
        let (o, b) = (opt.total_rate(), base.total_rate());
        out.push(BaselineComparison {
            date: date.name.clone(),
            qos_mbps: q,
            optimized: o,
            baseline: b,
            gain: (o - b) / b,
            baseline_flagged: flagged(&base),
            optimized_flagged: flagged(&opt),
        });
    }
    Ok(out)
}
