//! Scenario configuration: TOML in, validated structs out.
//!
//! Every field has a default, so an empty document is a complete scenario.
//! Keys that do not correspond to a field are rejected, all of them at once.

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aero::{Aircraft, FlightBounds, FlightModel};
use crate::atmosphere::{Atmosphere, AtmosphereConstants, DensityModel};
use crate::channel::{ArrayPattern, CellTopology, LinkBudget};
use crate::energy::BatteryParams;
use crate::error::{Error, Result};
use crate::solar::{EccentricityPhase, PanelConfig, SolarContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Site {
    /// Degrees east.
    pub longitude: f64,
    /// Degrees north.
    pub latitude: f64,
    /// Solar constant (W/m²).
    pub solar_constant: f64,
    pub eccentricity_phase: EccentricityPhase,
    /// Offset of local standard time from UTC (h). Hours in the outputs are
    /// local.
    pub utc_offset_hours: f64,
}

impl Default for Site {
    fn default() -> Self {
        Self {
            longitude: 39.1047,
            latitude: 22.3095,
            solar_constant: 1361.0,
            eccentricity_phase: EccentricityPhase::DayOfYear,
            utc_offset_hours: 3.0,
        }
    }
}

/// One simulated calendar day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DateScenario {
    pub name: String,
    /// ISO date, `YYYY-MM-DD`.
    pub date: String,
    /// Clear-sky extinction coefficient for that day.
    pub extinction: f64,
}

impl Default for DateScenario {
    fn default() -> Self {
        Self { name: "ws".into(), date: "2021-12-21".into(), extinction: 0.29 }
    }
}

impl DateScenario {
    pub fn winter_solstice() -> Self {
        Self::default()
    }

    pub fn summer_solstice() -> Self {
        Self { name: "ss".into(), date: "2021-06-21".into(), extinction: 0.465 }
    }

    pub fn naive_date(&self) -> Result<NaiveDate> {
        NaiveDate::parse_from_str(&self.date, "%Y-%m-%d")
            .map_err(|e| Error::domain("date", format!("{:?} is not YYYY-MM-DD: {e}", self.date)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    /// Share of P_T that reaches the antennas after feed-line losses (Υ).
    pub feed_fraction: f64,
    /// Stopping tolerance δ on successive objective values.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starting altitude of both alternating loops (m).
    pub initial_altitude: f64,
    /// Starting airspeed as a multiple of the stall speed there.
    pub initial_speed_factor: f64,
    /// Night transmit power (W) the daytime set-aside aims to bank for.
    pub night_transmit_target: f64,
    /// Altitude resolution (m) of the storage-feasibility scan.
    pub altitude_scan_step: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            feed_fraction: 0.1,
            tolerance: 1e-4,
            max_iterations: 100,
            initial_altitude: 21_000.0,
            initial_speed_factor: 1.1,
            night_transmit_target: 6000.0,
            altitude_scan_step: 100.0,
        }
    }
}

/// The fixed operating point the optimised system is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    pub altitude: f64,
    /// Airspeed as a multiple of the stall speed at `altitude`.
    pub speed_factor: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { altitude: 21_000.0, speed_factor: 1.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Per-user rate targets (Mbit/s), one run per entry.
    pub qos_mbps: Vec<f64>,
    /// Length of one time instant (min); must divide a day.
    pub time_step_minutes: u32,
    pub density_model: DensityModel,
    /// Run the fixed baseline instead of the optimiser.
    pub baseline: bool,
    /// Station-keeping circle radius (m). Informational only.
    pub trajectory_radius: f64,
    pub site: Site,
    pub dates: Vec<DateScenario>,
    pub atmosphere: AtmosphereConstants,
    pub aircraft: Aircraft,
    pub bounds: FlightBounds,
    pub panel: PanelConfig,
    pub battery: BatteryParams,
    pub link: LinkBudget,
    pub pattern: ArrayPattern,
    pub topology: CellTopology,
    pub optimizer: OptimizerParams,
    pub reference: BaselineParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 2021,
            qos_mbps: vec![1.0, 2.0, 4.0],
            time_step_minutes: 60,
            density_model: DensityModel::Standard,
            baseline: false,
            trajectory_radius: 3000.0,
            site: Site::default(),
            dates: vec![DateScenario::winter_solstice(), DateScenario::summer_solstice()],
            atmosphere: AtmosphereConstants::default(),
            aircraft: Aircraft::default(),
            bounds: FlightBounds::default(),
            panel: PanelConfig::default(),
            battery: BatteryParams::default(),
            link: LinkBudget::default(),
            pattern: ArrayPattern::default(),
            topology: CellTopology::default(),
            optimizer: OptimizerParams::default(),
            reference: BaselineParams::default(),
        }
    }
}

/// Local time instant of a simulated day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInstant {
    pub index: usize,
    /// Local clock hour at the start of the instant.
    pub hour: f64,
    pub utc: DateTime<Utc>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.atmosphere.validate()?;
        self.aircraft.validate()?;
        self.bounds.validate()?;
        self.panel.validate()?;
        self.battery.validate()?;
        self.link.validate()?;
        self.pattern.validate()?;
        self.topology.validate()?;
        if self.qos_mbps.is_empty() {
            return Err(Error::domain("qos_mbps", "needs at least one target"));
        }
        if let Some(q) = self.qos_mbps.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
            return Err(Error::domain("qos_mbps", format!("targets must be non-negative, got {q}")));
        }
        if self.time_step_minutes == 0 || 1440 % self.time_step_minutes != 0 {
            return Err(Error::domain("time_step_minutes", "must be positive and divide 1440"));
        }
        if !(-14.0..=14.0).contains(&self.site.utc_offset_hours) {
            return Err(Error::OutOfRange {
                quantity: "site.utc_offset_hours",
                value: self.site.utc_offset_hours,
                min: -14.0,
                max: 14.0,
            });
        }
        if self.dates.is_empty() {
            return Err(Error::domain("dates", "needs at least one date"));
        }
        for d in &self.dates {
            d.naive_date()?;
            self.solar_context(d).validate()?;
        }
        let o = &self.optimizer;
        if !(o.feed_fraction > 0.0 && o.feed_fraction <= 1.0) {
            return Err(Error::OutOfRange { quantity: "optimizer.feed_fraction", value: o.feed_fraction, min: 0.0, max: 1.0 });
        }
        if !(o.tolerance > 0.0) || o.max_iterations == 0 {
            return Err(Error::domain("optimizer", "tolerance and max_iterations must be positive"));
        }
        for (name, h) in [("optimizer.initial_altitude", o.initial_altitude), ("reference.altitude", self.reference.altitude)] {
            if !(self.bounds.min_altitude..=self.bounds.max_altitude).contains(&h) {
                return Err(Error::OutOfRange { quantity: name, value: h, min: self.bounds.min_altitude, max: self.bounds.max_altitude });
            }
        }
        for (name, f) in [("optimizer.initial_speed_factor", o.initial_speed_factor), ("reference.speed_factor", self.reference.speed_factor)] {
            if !(f >= 1.0) {
                return Err(Error::domain("speed factor", format!("{name} must be at least 1 (no flight below stall), got {f}")));
            }
        }
        if !(o.night_transmit_target >= 0.0) || !(o.altitude_scan_step > 0.0) {
            return Err(Error::domain("optimizer", "night_transmit_target must be ≥ 0 and altitude_scan_step > 0"));
        }
        let flight = self.flight_model();
        let v_s_top = flight.stall_speed(self.bounds.max_altitude)?;
        if v_s_top > self.bounds.max_airspeed {
            return Err(Error::domain(
                "bounds.max_airspeed",
                format!("{} m/s is below the stall speed {v_s_top:.2} m/s at max_altitude", self.bounds.max_airspeed),
            ));
        }
        Ok(())
    }

    pub fn atmosphere_model(&self) -> Atmosphere {
        Atmosphere::new(self.atmosphere, self.density_model)
    }

    pub fn flight_model(&self) -> FlightModel {
        FlightModel::new(self.aircraft, self.atmosphere_model(), self.bounds)
    }

    pub fn solar_context(&self, date: &DateScenario) -> SolarContext {
        SolarContext {
            longitude: self.site.longitude,
            latitude: self.site.latitude,
            extinction: date.extinction,
            solar_constant: self.site.solar_constant,
            eccentricity_phase: self.site.eccentricity_phase,
        }
    }

    pub fn dt_hours(&self) -> f64 {
        f64::from(self.time_step_minutes) / 60.0
    }

    pub fn instants_per_day(&self) -> usize {
        (1440 / self.time_step_minutes) as usize
    }

    /// Instants covering local midnight to midnight of `date`.
    pub fn time_grid(&self, date: &DateScenario) -> Result<Vec<TimeInstant>> {
        let day = date.naive_date()?;
        let midnight: NaiveDateTime = day.and_hms_opt(0, 0, 0).expect("midnight exists");
        let offset_s = (self.site.utc_offset_hours * 3600.0).round() as i64;
        let start = Utc.from_utc_datetime(&midnight) - Duration::seconds(offset_s);
        Ok((0..self.instants_per_day())
            .map(|i| {
                let minutes = i as i64 * i64::from(self.time_step_minutes);
                TimeInstant { index: i, hour: minutes as f64 / 60.0, utc: start + Duration::minutes(minutes) }
            })
            .collect())
    }

    /// Resolves `ws`, `ss`, a configured name, or an ISO date. An ISO date
    /// that is not configured borrows the extinction of the configured date
    /// closest to it in day of year.
    pub fn select_date(&self, selector: &str) -> Result<DateScenario> {
        let key = selector.trim().to_ascii_lowercase();
        if let Some(d) = self.dates.iter().find(|d| d.name.eq_ignore_ascii_case(&key) || d.date == key) {
            return Ok(d.clone());
        }
        match key.as_str() {
            "ws" => return Ok(DateScenario::winter_solstice()),
            "ss" => return Ok(DateScenario::summer_solstice()),
            _ => {}
        }
        let target = NaiveDate::parse_from_str(&key, "%Y-%m-%d")
            .map_err(|_| Error::domain("date selector", format!("{selector:?} is not ws, ss, a configured name or YYYY-MM-DD")))?;
        let doy = |d: NaiveDate| f64::from(d.ordinal());
        let circular = |a: f64, b: f64| {
            let d = (a - b).abs();
            d.min(365.0 - d)
        };
        let nearest = self
            .dates
            .iter()
            .filter_map(|d| d.naive_date().ok().map(|n| (d, circular(doy(n), doy(target)))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(d, _)| d.extinction)
            .unwrap_or(DateScenario::default().extinction);
        Ok(DateScenario { name: key.clone(), date: key, extinction: nearest })
    }

    /// Converts a rate target to spectral efficiency (bit/s/Hz).
    pub fn qos_spectral_efficiency(&self, mbps: f64) -> f64 {
        mbps * 1e6 / self.link.bandwidth
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

fn unknown_keys(input: &toml::Table, reference: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in input {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match (value, reference.get(key)) {
            (_, None) => out.push(path),
            (toml::Value::Table(t), Some(toml::Value::Table(r))) => unknown_keys(t, r, &path, out),
            (toml::Value::Array(items), Some(toml::Value::Array(r))) => {
                if let Some(toml::Value::Table(shape)) = r.first() {
                    for (i, item) in items.iter().enumerate() {
                        if let toml::Value::Table(t) = item {
                            unknown_keys(t, shape, &format!("{path}[{i}]"), out);
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

fn leaf_overrides(table: &toml::Table, prefix: &str, out: &mut Vec<(String, String)>) {
    for (key, value) in table {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match value {
            toml::Value::Table(t) => leaf_overrides(t, &path, out),
            other => out.push((path, other.to_string())),
        }
    }
}

/// Parses, checks for unknown keys, fills defaults and validates. Every
/// explicitly set value is logged.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let defaults = toml::Table::try_from(ScenarioConfig::default()).expect("defaults serialise to a table");
    let mut unknown = Vec::new();
    unknown_keys(&table, &defaults, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    let config: ScenarioConfig = table.clone().try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let mut overrides = Vec::new();
    leaf_overrides(&table, "", &mut overrides);
    for (path, value) in overrides {
        log::info!("config override: {path} = {value}");
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config_file(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_config(&text)
}
