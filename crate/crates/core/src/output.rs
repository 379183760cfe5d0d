//! Sweep orchestration and CSV/TOML persistence.
//!
//! Every date of a sweep produces five files, named after the date:
//! `<date>_transmit_power.csv`, `<date>_sum_rate.csv`, `<date>_flight.csv`,
//! `<date>_energy.csv` and `<date>_manifest.toml`. Column headers carry their
//! units. With traces enabled, `<date>_traces.csv` holds the per-iteration
//! objective of every instant.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{DateScenario, ScenarioConfig};
use crate::energy::JOULES_PER_KWH;
use crate::error::{Error, Result};
use crate::optimizer::{compare_baseline, simulate_day, BaselineComparison, DayTrace, Phase};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// All runs of one date, one per rate target, in config order.
#[derive(Debug, Clone)]
pub struct DateRun {
    pub date: DateScenario,
    pub traces: Vec<DayTrace>,
}

pub fn run_date(config: &ScenarioConfig, date: &DateScenario) -> Result<DateRun> {
    let traces = config.qos_mbps.iter().map(|&q| simulate_day(config, date, q)).collect::<Result<_>>()?;
    Ok(DateRun { date: date.clone(), traces })
}

// Field names are the CSV headers, units included.
#[allow(non_snake_case)]
#[derive(Serialize)]
struct TransmitRow<'a> {
    hour_local_h: f64,
    phase: &'a str,
    solar_elevation_deg: f64,
    harvested_power_W: f64,
    required_power_W: f64,
    storage_power_W: f64,
    transmit_power_W: f64,
    cell_power_W: f64,
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct RateRow<'a> {
    qos_Mbit_per_s: f64,
    hour_local_h: f64,
    phase: &'a str,
    sum_rate_Mbit_per_s: f64,
    users_meeting_qos: usize,
    users: usize,
    partial_cells: usize,
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct FlightRow<'a> {
    hour_local_h: f64,
    phase: &'a str,
    altitude_m: f64,
    airspeed_m_per_s: f64,
    stall_speed_m_per_s: f64,
    propulsion_power_W: f64,
    iterations: usize,
    converged: bool,
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct EnergyRow {
    hour_local_h: f64,
    stored_energy_J: f64,
    stored_energy_kWh: f64,
    state_of_charge: f64,
    net_power_W: f64,
    harvested_power_W: f64,
    required_power_W: f64,
    transmit_power_W: f64,
    storage_power_W: f64,
    battery_efficiency: f64,
    deficit_J: f64,
    overflow_J: f64,
    flags: String,
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct TraceRow<'a> {
    qos_Mbit_per_s: f64,
    hour_local_h: f64,
    phase: &'a str,
    iteration: usize,
    /// Day: network spectral efficiency (bit/s/Hz). Night: P_pro (W).
    quantity: &'a str,
    value: f64,
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct GainRow<'a> {
    date: &'a str,
    qos_Mbit_per_s: f64,
    optimized_rate_sum_Mbit_per_s: f64,
    baseline_rate_sum_Mbit_per_s: f64,
    gain_percent: f64,
    baseline_flagged_instants: usize,
    optimized_flagged_instants: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    software: &'a str,
    version: &'a str,
    seed: u64,
    config_hash: String,
    mode: &'a str,
    date: &'a str,
    qos_mbps: &'a [f64],
    files: Vec<String>,
    config: &'a ScenarioConfig,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn mode(config: &ScenarioConfig) -> &'static str {
    if config.baseline {
        "baseline"
    } else {
        "optimized"
    }
}

fn write_manifest(path: &Path, config: &ScenarioConfig, date: &str, files: Vec<String>) -> Result<()> {
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME"),
        version: VERSION,
        seed: config.seed,
        config_hash: config.hash(),
        mode: mode(config),
        date,
        qos_mbps: &config.qos_mbps,
        files,
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the files of one date into `dir` and returns their paths. The
/// transmit power and flight files describe the first rate target, which
/// does not change either of them.
pub fn write_date_run(dir: &Path, config: &ScenarioConfig, run: &DateRun, traces: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = &run.date.name;
    let first = run.traces.first().ok_or_else(|| Error::domain("sweep", "no rate targets were run"))?;
    let path = |suffix: &str| dir.join(format!("{name}_{suffix}"));
    let mut written = Vec::new();

    let p = path("transmit_power.csv");
    write_csv(
        &p,
        first.records.iter().map(|r| TransmitRow {
            hour_local_h: r.hour,
            phase: r.phase.as_str(),
            solar_elevation_deg: r.elevation,
            harvested_power_W: r.harvested,
            required_power_W: r.required,
            storage_power_W: r.storage,
            transmit_power_W: r.transmit,
            cell_power_W: r.cell_power,
        }),
    )?;
    written.push(p);

    let p = path("sum_rate.csv");
    write_csv(
        &p,
        run.traces.iter().flat_map(|t| {
            t.records.iter().map(move |r| RateRow {
                qos_Mbit_per_s: t.qos_mbps,
                hour_local_h: r.hour,
                phase: r.phase.as_str(),
                sum_rate_Mbit_per_s: r.sum_rate() / 1e6,
                users_meeting_qos: r.qos_users(),
                users: r.report.user_count(),
                partial_cells: r.allocation.partial_cells(),
            })
        }),
    )?;
    written.push(p);

    let p = path("flight.csv");
    write_csv(
        &p,
        first.records.iter().map(|r| FlightRow {
            hour_local_h: r.hour,
            phase: r.phase.as_str(),
            altitude_m: r.altitude,
            airspeed_m_per_s: r.airspeed,
            stall_speed_m_per_s: r.stall_speed,
            propulsion_power_W: r.propulsion,
            iterations: r.iterations,
            converged: r.converged,
        }),
    )?;
    written.push(p);

    let p = path("energy.csv");
    let capacity = config.battery.capacity();
    write_csv(
        &p,
        first.ledger.rows.iter().map(|r| EnergyRow {
            hour_local_h: r.hour,
            stored_energy_J: r.energy,
            stored_energy_kWh: r.energy / JOULES_PER_KWH,
            state_of_charge: r.energy / capacity,
            net_power_W: r.net_power,
            harvested_power_W: r.harvested,
            required_power_W: r.required,
            transmit_power_W: r.transmit,
            storage_power_W: r.storage,
            battery_efficiency: r.efficiency,
            deficit_J: r.deficit,
            overflow_J: r.overflow,
            flags: r.flags.label(),
        }),
    )?;
    written.push(p);

    if traces {
        let p = path("traces.csv");
        write_csv(
            &p,
            run.traces.iter().flat_map(|t| {
                t.records.iter().flat_map(move |r| {
                    let quantity = match r.phase {
                        Phase::Day => "spectral_efficiency_bit_per_s_per_Hz",
                        Phase::Night => "propulsion_power_W",
                    };
                    r.trace.iter().enumerate().map(move |(i, &value)| TraceRow {
                        qos_Mbit_per_s: t.qos_mbps,
                        hour_local_h: r.hour,
                        phase: r.phase.as_str(),
                        iteration: i,
                        quantity,
                        value,
                    })
                })
            }),
        )?;
        written.push(p);
    }

    let p = path("manifest.toml");
    write_manifest(&p, config, &run.date.date, written.iter().map(|f| file_name(f)).collect())?;
    written.push(p);
    Ok(written)
}

/// Runs and writes every date. Returns the runs and the files written.
pub fn run_sweep(config: &ScenarioConfig, dates: &[DateScenario], dir: &Path, traces: bool) -> Result<(Vec<DateRun>, Vec<PathBuf>)> {
    config.validate()?;
    let mut runs = Vec::with_capacity(dates.len());
    let mut files = Vec::new();
    for date in dates {
        log::info!("simulating {} ({}) in {} mode", date.name, date.date, mode(config));
        let run = run_date(config, date)?;
        files.extend(write_date_run(dir, config, &run, traces)?);
        runs.push(run);
    }
    Ok((runs, files))
}

/// Compares the optimiser with the baseline on every date and writes
/// `gains.csv` with its manifest.
pub fn run_comparison(config: &ScenarioConfig, dates: &[DateScenario], dir: &Path) -> Result<(Vec<BaselineComparison>, Vec<PathBuf>)> {
    config.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut all = Vec::new();
    for date in dates {
        log::info!("comparing against the baseline on {} ({})", date.name, date.date);
        all.extend(compare_baseline(config, date)?);
    }
    let csv_path = dir.join("gains.csv");
    write_csv(
        &csv_path,
        all.iter().map(|c| GainRow {
            date: &c.date,
            qos_Mbit_per_s: c.qos_mbps,
            optimized_rate_sum_Mbit_per_s: c.optimized / 1e6,
            baseline_rate_sum_Mbit_per_s: c.baseline / 1e6,
            gain_percent: 100.0 * c.gain,
            baseline_flagged_instants: c.baseline_flagged.len(),
            optimized_flagged_instants: c.optimized_flagged.len(),
        }),
    )?;
    let manifest = dir.join("gains_manifest.toml");
    let names: Vec<&str> = dates.iter().map(|d| d.date.as_str()).collect();
    write_manifest(&manifest, config, &names.join(","), vec![file_name(&csv_path)])?;
    Ok((all, vec![csv_path, manifest]))
}
