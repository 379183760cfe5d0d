//! Power balance and battery bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const JOULES_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryParams {
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Usable capacity (kWh).
    pub capacity_kwh: f64,
    /// Net power (W) at or above which the battery counts as charging.
    pub charge_threshold: f64,
    /// State of charge at local midnight, as a fraction of capacity.
    pub initial_soc: f64,
    /// Fraction of capacity the night plan keeps in hand.
    pub reserve_fraction: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            charge_efficiency: 0.93,
            discharge_efficiency: 0.97,
            capacity_kwh: 120.0,
            charge_threshold: 0.0,
            initial_soc: 0.5,
            reserve_fraction: 0.05,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("charge_efficiency", self.charge_efficiency), ("discharge_efficiency", self.discharge_efficiency)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::OutOfRange { quantity: name, value: v, min: 0.0, max: 1.0 });
            }
        }
        if !(self.capacity_kwh > 0.0 && self.capacity_kwh.is_finite()) {
            return Err(Error::domain("battery", "capacity_kwh must be positive"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::OutOfRange { quantity: "initial_soc", value: self.initial_soc, min: 0.0, max: 1.0 });
        }
        if !(0.0..1.0).contains(&self.reserve_fraction) {
            return Err(Error::OutOfRange { quantity: "reserve_fraction", value: self.reserve_fraction, min: 0.0, max: 1.0 });
        }
        Ok(())
    }

    /// Capacity E_max (J).
    pub fn capacity(&self) -> f64 {
        self.capacity_kwh * JOULES_PER_KWH
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_soc * self.capacity()
    }

    pub fn reserve(&self) -> f64 {
        self.reserve_fraction * self.capacity()
    }

    /// η_b: the charging efficiency when `net_power ≥ μ`, otherwise the
    /// discharging one.
    pub fn efficiency_for(&self, net_power: f64) -> f64 {
        if net_power >= self.charge_threshold {
            self.charge_efficiency
        } else {
            self.discharge_efficiency
        }
    }
}

/// P_net = P_a − P_req − P_T.
pub fn net_power(harvested: f64, required: f64, transmit: f64) -> f64 {
    harvested - required - transmit
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    /// Stored energy after the step (J), within [0, E_max].
    pub energy: f64,
    pub efficiency: f64,
    /// Energy the step wanted below empty (J, ≥ 0).
    pub deficit: f64,
    /// Energy that did not fit (J, ≥ 0).
    pub overflow: f64,
}

/// E ← clamp(E + η_b·P_net·Δt, 0, E_max).
pub fn step_battery(energy: f64, net_power: f64, dt_seconds: f64, params: &BatteryParams) -> BatteryStep {
    let efficiency = params.efficiency_for(net_power);
    let unclamped = energy + efficiency * net_power * dt_seconds;
    let cap = params.capacity();
    BatteryStep {
        energy: unclamped.clamp(0.0, cap),
        efficiency,
        deficit: (-unclamped).max(0.0),
        overflow: (unclamped - cap).max(0.0),
    }
}

/// Constant transmit power the stored energy can fund over the night after
/// flight and accessories: max(0, η_d·E/(h·3600) − P_pro − P_acc).
pub fn night_budget(energy: f64, night_hours: f64, propulsion_power: f64, accessory_power: f64, params: &BatteryParams) -> f64 {
    if !(night_hours > 0.0) {
        return 0.0;
    }
    (params.discharge_efficiency * energy / (night_hours * 3600.0) - propulsion_power - accessory_power).max(0.0)
}

/// Daytime power set-aside that, spread over the remaining daylight, banks
/// enough for the night load:
/// (h_night·(P_pro + P_acc + P_T)/η_d)/(η_c·h_day).
pub fn storage_requirement(
    night_hours: f64,
    propulsion_power: f64,
    accessory_power: f64,
    night_transmit: f64,
    params: &BatteryParams,
    remaining_daylight_hours: f64,
) -> f64 {
    if !(remaining_daylight_hours > 0.0) {
        return 0.0;
    }
    let load = propulsion_power + accessory_power + night_transmit;
    night_hours * load / params.discharge_efficiency / (params.charge_efficiency * remaining_daylight_hours)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LedgerFlags {
    pub deficit: bool,
    pub overflow: bool,
    /// The hour ran without enough power to transmit.
    pub outage: bool,
}

impl LedgerFlags {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.deficit {
            parts.push("deficit");
        }
        if self.overflow {
            parts.push("overflow");
        }
        if self.outage {
            parts.push("outage");
        }
        parts.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub instant: usize,
    /// Local clock hour at the start of the instant.
    pub hour: f64,
    /// Stored energy at the end of the instant (J).
    pub energy: f64,
    pub net_power: f64,
    pub harvested: f64,
    pub required: f64,
    pub transmit: f64,
    /// Day-time storage set-aside (W); zero at night.
    pub storage: f64,
    pub efficiency: f64,
    pub deficit: f64,
    pub overflow: f64,
    pub flags: LedgerFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub initial_energy: f64,
    pub dt_seconds: f64,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn new(initial_energy: f64, dt_seconds: f64) -> Self {
        Self { initial_energy, dt_seconds, rows: Vec::new() }
    }

    pub fn energy(&self) -> f64 {
        self.rows.last().map_or(self.initial_energy, |r| r.energy)
    }

    /// Applies one instant and records it.
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        instant: usize,
        hour: f64,
        harvested: f64,
        required: f64,
        transmit: f64,
        storage: f64,
        outage: bool,
        params: &BatteryParams,
    ) -> LedgerRow {
        let p_net = net_power(harvested, required, transmit);
        let step = step_battery(self.energy(), p_net, self.dt_seconds, params);
        let row = LedgerRow {
            instant,
            hour,
            energy: step.energy,
            net_power: p_net,
            harvested,
            required,
            transmit,
            storage,
            efficiency: step.efficiency,
            deficit: step.deficit,
            overflow: step.overflow,
            flags: LedgerFlags { deficit: step.deficit > 0.0, overflow: step.overflow > 0.0, outage },
        };
        self.rows.push(row);
        row
    }

    pub fn deficit_count(&self) -> usize {
        self.rows.iter().filter(|r| r.flags.deficit).count()
    }

    pub fn overflow_count(&self) -> usize {
        self.rows.iter().filter(|r| r.flags.overflow).count()
    }

    /// Ends the horizon with at least the starting charge and never ran dry.
    pub fn is_self_sustaining(&self) -> bool {
        self.energy() >= self.initial_energy && self.deficit_count() == 0
    }

    /// Largest discrepancy (J) between the recorded energies and a replay of
    /// Σ η_b·P_net·Δt with the recorded clamp losses.
    pub fn conservation_error(&self) -> f64 {
        let mut e = self.initial_energy;
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            e += r.efficiency * r.net_power * self.dt_seconds + r.deficit - r.overflow;
            worst = worst.max((e - r.energy).abs());
        }
        worst
    }
}
