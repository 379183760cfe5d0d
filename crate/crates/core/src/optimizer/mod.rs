//! Day and night decision making.
//!
//! By day the flight state and the per-cell power split are found by
//! alternating between three subproblems: the NOMA split (P1a), altitude
//! (P1b) and airspeed (P1c). By night the platform only minimises propulsion
//! power, alternating between speed and altitude (P2).

mod day;
mod night;
mod simulate;

pub use day::{
    evaluate_at, run_algorithm1, solve_p1a, solve_p1b, solve_p1c, AltitudeChoice, DayDecision, NetworkAllocation,
};
pub use night::{run_algorithm2, NightDecision};
pub use simulate::{compare_baseline, simulate_day, BaselineComparison, DayTrace, HourRecord, Phase};

use chrono::{DateTime, Utc};

use crate::aero::FlightModel;
use crate::channel::{ArrayPattern, CellTopology, LinkBudget};
use crate::config::{BaselineParams, DateScenario, OptimizerParams, ScenarioConfig};
use crate::energy::BatteryParams;
use crate::error::Result;
use crate::solar::{harvested_power, PanelConfig, SolarContext};

/// Everything physical about one simulated day, resolved from a config.
#[derive(Debug, Clone)]
pub struct System {
    pub flight: FlightModel,
    pub solar: SolarContext,
    pub panel: PanelConfig,
    pub battery: BatteryParams,
    pub link: LinkBudget,
    pub pattern: ArrayPattern,
    pub topology: CellTopology,
    pub params: OptimizerParams,
    pub reference: BaselineParams,
}

impl System {
    pub fn new(config: &ScenarioConfig, date: &DateScenario) -> Self {
        Self {
            flight: config.flight_model(),
            solar: config.solar_context(date),
            panel: config.panel,
            battery: config.battery,
            link: config.link,
            pattern: config.pattern,
            topology: config.topology,
            params: config.optimizer,
            reference: config.reference,
        }
    }

    pub fn harvested(&self, altitude: f64, utc: DateTime<Utc>) -> Result<f64> {
        harvested_power(&self.flight.atmosphere, altitude, utc, &self.solar, &self.panel)
    }

    /// Per-cell antenna power P_m = Υ·P_T/M.
    pub fn cell_power(&self, transmit: f64) -> f64 {
        self.params.feed_fraction * transmit / self.topology.num_cells as f64
    }

    /// The fixed (H, V) of the comparison baseline.
    pub fn baseline_state(&self) -> Result<(f64, f64)> {
        let h = self.reference.altitude;
        let v = (self.reference.speed_factor * self.flight.stall_speed(h)?).min(self.flight.bounds.max_airspeed);
        Ok((h, v))
    }
}
