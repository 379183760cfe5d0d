//! Sun position, clear-sky attenuation and the power the panels harvest.
//!
//! The ephemeris is the NOAA fractional-year approximation (declination and
//! equation of time as short Fourier series). It is good to a few tenths of a
//! degree in elevation, which is ample here: elevation only enters through the
//! air mass.

use std::f64::consts::PI;

use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::atmosphere::Atmosphere;
use crate::error::{Error, Result};

/// Julian day of the Unix epoch.
const UNIX_EPOCH_JD: f64 = 2_440_587.5;

/// Which day count drives the orbital-eccentricity cosine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EccentricityPhase {
    /// Day of year (1–366): perihelion lands in early January.
    #[default]
    DayOfYear,
    /// The astronomical Julian day number plugged in directly.
    JulianDay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarContext {
    /// Degrees east.
    pub longitude: f64,
    /// Degrees north.
    pub latitude: f64,
    /// Clear-sky extinction coefficient.
    pub extinction: f64,
    /// Solar constant (W/m²).
    pub solar_constant: f64,
    pub eccentricity_phase: EccentricityPhase,
}

impl SolarContext {
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::OutOfRange { quantity: "latitude (deg)", value: self.latitude, min: -90.0, max: 90.0 });
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::OutOfRange {
                quantity: "longitude (deg)",
                value: self.longitude,
                min: -180.0,
                max: 180.0,
            });
        }
        if !(self.extinction > 0.0) {
            return Err(Error::domain("extinction", "must be positive"));
        }
        if !(self.solar_constant > 0.0) {
            return Err(Error::domain("solar constant", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelConfig {
    /// Conversion efficiency η_s.
    pub efficiency: f64,
    /// Aggregate area held normal to the sun (m²).
    pub area: f64,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self { efficiency: 0.20, area: 95.0 }
    }
}

impl PanelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::OutOfRange { quantity: "panel efficiency", value: self.efficiency, min: 0.0, max: 1.0 });
        }
        if !(self.area > 0.0) {
            return Err(Error::domain("panel area", "must be positive"));
        }
        Ok(())
    }
}

/// Continuous Julian day (days since noon UTC, 1 January 4713 BC).
pub fn julian_day(datetime: DateTime<Utc>) -> f64 {
    let seconds = datetime.timestamp() as f64 + f64::from(datetime.timestamp_subsec_nanos()) * 1e-9;
    UNIX_EPOCH_JD + seconds / 86_400.0
}

fn decimal_hour(datetime: DateTime<Utc>) -> f64 {
    f64::from(datetime.hour()) + f64::from(datetime.minute()) / 60.0 + f64::from(datetime.second()) / 3600.0
}

/// Geometric solar elevation in degrees; negative below the horizon.
pub fn solar_elevation(context: &SolarContext, datetime: DateTime<Utc>) -> f64 {
    let hour = decimal_hour(datetime);
    let day = f64::from(datetime.ordinal0());
    let year_days = if is_leap(datetime.year()) { 366.0 } else { 365.0 };
    let gamma = 2.0 * PI / year_days * (day + (hour - 12.0) / 24.0);

    let eot_min = 229.18
        * (0.000075 + 0.001868 * gamma.cos() - 0.032077 * gamma.sin()
            - 0.014615 * (2.0 * gamma).cos()
            - 0.040849 * (2.0 * gamma).sin());
    let declination = 0.006918 - 0.399912 * gamma.cos() + 0.070257 * gamma.sin()
        - 0.006758 * (2.0 * gamma).cos()
        + 0.000907 * (2.0 * gamma).sin()
        - 0.002697 * (3.0 * gamma).cos()
        + 0.00148 * (3.0 * gamma).sin();

    let true_solar_min = hour * 60.0 + eot_min + 4.0 * context.longitude;
    let hour_angle = (true_solar_min / 4.0 - 180.0).to_radians();
    let lat = context.latitude.to_radians();
    let cos_zenith = lat.sin() * declination.sin() + lat.cos() * declination.cos() * hour_angle.cos();
    90.0 - cos_zenith.clamp(-1.0, 1.0).acos().to_degrees()
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Kasten–Young relative air mass; `None` once the sun is at or below the
/// horizon (zenith ≥ 90°), meaning no direct beam.
pub fn relative_air_mass(zenith_deg: f64) -> Option<f64> {
    if zenith_deg >= 90.0 {
        return None;
    }
    let z = zenith_deg.max(0.0);
    Some(1.0 / (z.to_radians().cos() + 0.50572 * (96.07995 - z).powf(-1.6364)))
}

/// exp(−p_R·m_R(90° − ε)·α_ext), or 0 with the sun down.
pub fn transmittance(relative_pressure: f64, elevation_deg: f64, extinction: f64) -> f64 {
    if elevation_deg <= 0.0 {
        return 0.0;
    }
    match relative_air_mass(90.0 - elevation_deg) {
        Some(m) => (-relative_pressure * m * extinction).exp(),
        None => 0.0,
    }
}

pub fn attenuation_factor(atmosphere: &Atmosphere, altitude: f64, elevation_deg: f64, context: &SolarContext) -> Result<f64> {
    let p_rel = atmosphere.relative_pressure(altitude)?;
    Ok(transmittance(p_rel, elevation_deg, context.extinction))
}

/// 1 + 0.034·cos(2π·d/365) for a day count `d`.
pub fn eccentricity_multiplier(day_count: f64) -> f64 {
    1.0 + 0.034 * (2.0 * PI * day_count / 365.0).cos()
}

pub fn eccentricity_factor(context: &SolarContext, datetime: DateTime<Utc>) -> f64 {
    let day = match context.eccentricity_phase {
        EccentricityPhase::DayOfYear => f64::from(datetime.ordinal()),
        EccentricityPhase::JulianDay => julian_day(datetime),
    };
    eccentricity_multiplier(day)
}

/// Direct-beam irradiance on a sun-facing surface (W/m²).
pub fn irradiance_at(atmosphere: &Atmosphere, altitude: f64, datetime: DateTime<Utc>, context: &SolarContext) -> Result<f64> {
    let elevation = solar_elevation(context, datetime);
    let f = attenuation_factor(atmosphere, altitude, elevation, context)?;
    Ok(context.solar_constant * eccentricity_factor(context, datetime) * f)
}

pub fn harvested_power(
    atmosphere: &Atmosphere,
    altitude: f64,
    datetime: DateTime<Utc>,
    context: &SolarContext,
    panel: &PanelConfig,
) -> Result<f64> {
    Ok(panel.efficiency * panel.area * irradiance_at(atmosphere, altitude, datetime, context)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn table_site(extinction: f64) -> SolarContext {
        SolarContext {
            longitude: 39.1047,
            latitude: 22.3095,
            extinction,
            solar_constant: 1361.0,
            eccentricity_phase: EccentricityPhase::DayOfYear,
        }
    }

    fn utc(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, mi, 0).unwrap()
    }

    #[test]
    fn julian_day_matches_solstice_fixtures() {
        assert_eq!(julian_day(utc(2021, 12, 21, 0, 0)), 2_459_569.5);
        assert_eq!(julian_day(utc(2021, 6, 21, 0, 0)), 2_459_386.5);
        assert_eq!(julian_day(utc(2000, 1, 1, 12, 0)), 2_451_545.0);
    }

    #[test]
    fn equator_equinox_noon_is_overhead() {
        let ctx = SolarContext { longitude: 0.0, latitude: 0.0, ..table_site(0.29) };
        // Solar noon at Greenwich on 2021-03-20 is about 12:07 UTC.
        let e = solar_elevation(&ctx, utc(2021, 3, 20, 12, 7));
        assert!((e - 90.0).abs() < 1.0, "{e}");
    }

    #[test]
    fn winter_midnight_is_dark() {
        // Local midnight (UTC+3) at the site.
        assert!(solar_elevation(&table_site(0.29), utc(2021, 12, 20, 21, 0)) < 0.0);
    }

    #[test]
    fn elevation_matches_reference_ephemeris() {
        // Geometric elevations (refraction disabled) from pysolar 0.13,
        // computed offline for the default site.
        let cases = [
            (utc(2021, 6, 21, 9, 25), 88.86970894898968),
            (utc(2021, 12, 21, 9, 25), 44.24478313956101),
            (utc(2021, 6, 21, 4, 0), 16.195881484674715),
            (utc(2021, 12, 21, 14, 0), 8.354391272729055),
            (utc(2021, 6, 21, 15, 30), 7.699159820183677),
            (utc(2021, 12, 21, 5, 0), 11.684083088554916),
        ];
        let ctx = table_site(0.29);
        for (t, reference) in cases {
            let e = solar_elevation(&ctx, t);
            assert!((e - reference).abs() < 0.5, "{t}: {e} vs {reference}");
        }
    }

    #[test]
    fn air_mass() {
        assert!((relative_air_mass(0.0).unwrap() - 1.0).abs() < 3e-3);
        assert!((relative_air_mass(60.0).unwrap() - 2.0).abs() < 0.04);
        let near_horizon = relative_air_mass(89.0).unwrap();
        assert!(near_horizon.is_finite() && near_horizon > 20.0);
        assert!(relative_air_mass(90.0).is_none());
        assert!(relative_air_mass(120.0).is_none());
        let mut prev = 0.0;
        for i in 0..900 {
            let m = relative_air_mass(i as f64 * 0.1).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn attenuation() {
        let atm = Atmosphere::default();
        let ctx = table_site(0.29);
        assert_eq!(attenuation_factor(&atm, 20_000.0, 0.0, &ctx).unwrap(), 0.0);
        assert_eq!(attenuation_factor(&atm, 20_000.0, -12.0, &ctx).unwrap(), 0.0);
        assert!((transmittance(1e-12, 30.0, 0.29) - 1.0).abs() < 1e-10);
        let zenith_sun = attenuation_factor(&atm, 20_000.0, 90.0, &ctx).unwrap();
        let by_hand = (-(5474.889 / 101_325.0) * relative_air_mass(0.0).unwrap() * 0.29).exp();
        assert!((zenith_sun - by_hand).abs() < 1e-12);
        assert!((zenith_sun - 0.9845).abs() < 1e-3);
        for e in [-5.0, 0.5, 10.0, 45.0, 90.0] {
            let f = attenuation_factor(&atm, 18_000.0, e, &ctx).unwrap();
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn eccentricity() {
        assert!((eccentricity_multiplier(365.0) - 1.034).abs() < 1e-15);
        assert!((eccentricity_multiplier(182.5) - 0.966).abs() < 1e-12);
    }

    #[test]
    fn irradiance_bounds_and_night() {
        let atm = Atmosphere::default();
        let ctx = table_site(0.465);
        assert_eq!(irradiance_at(&atm, 18_000.0, utc(2021, 6, 20, 21, 0), &ctx).unwrap(), 0.0);
        for h in 0..24 {
            let i = irradiance_at(&atm, 18_000.0, utc(2021, 6, 21, h, 0), &ctx).unwrap();
            assert!((0.0..=1.034 * 1361.0).contains(&i));
        }
    }

    #[test]
    fn stratosphere_beats_sea_level() {
        let atm = Atmosphere::default();
        let ctx = table_site(0.29);
        let noon = utc(2021, 12, 21, 9, 25);
        let e = solar_elevation(&ctx, noon);
        let aloft = attenuation_factor(&atm, 18_000.0, e, &ctx).unwrap();
        let sea_level = transmittance(1.0, e, ctx.extinction);
        assert!(aloft > sea_level);
    }

    #[test]
    fn irradiance_non_decreasing_with_altitude() {
        let atm = Atmosphere::default();
        let ctx = table_site(0.29);
        let t = utc(2021, 12, 21, 6, 0);
        let mut prev = 0.0;
        for i in 0..=42 {
            let i_h = irradiance_at(&atm, 11_000.0 + 500.0 * i as f64, t, &ctx).unwrap();
            assert!(i_h >= prev);
            prev = i_h;
        }
    }

    #[test]
    fn harvested_power_scaling() {
        let atm = Atmosphere::default();
        let ctx = table_site(0.29);
        let t = utc(2021, 12, 21, 9, 0);
        let unit = PanelConfig { efficiency: 1.0, area: 1.0 };
        let i = irradiance_at(&atm, 18_000.0, t, &ctx).unwrap();
        assert_eq!(harvested_power(&atm, 18_000.0, t, &ctx, &unit).unwrap(), i);
        let p = harvested_power(&atm, 18_000.0, t, &ctx, &PanelConfig { efficiency: 0.2, area: 95.0 }).unwrap();
        let p2 = harvested_power(&atm, 18_000.0, t, &ctx, &PanelConfig { efficiency: 0.4, area: 190.0 }).unwrap();
        assert!((p2 - 4.0 * p).abs() < 1e-9 * p2);
        let night = harvested_power(&atm, 18_000.0, utc(2021, 12, 21, 20, 0), &ctx, &unit).unwrap();
        assert_eq!(night, 0.0);
    }

    #[test]
    fn harvest_is_unimodal_over_winter_day() {
        let atm = Atmosphere::default();
        let ctx = table_site(0.29);
        let panel = PanelConfig::default();
        // Local hours (UTC+3) through 21 December.
        let series: Vec<f64> = (0..24)
            .map(|h| {
                let t = utc(2021, 12, 20, 21, 0) + chrono::Duration::hours(h);
                harvested_power(&atm, 18_000.0, t, &ctx, &panel).unwrap()
            })
            .collect();
        let elev: Vec<f64> = (0..24)
            .map(|h| solar_elevation(&ctx, utc(2021, 12, 20, 21, 0) + chrono::Duration::hours(h)))
            .collect();
        let peak = (0..24).max_by(|&a, &b| series[a].total_cmp(&series[b])).unwrap();
        let noon = (0..24).max_by(|&a, &b| elev[a].total_cmp(&elev[b])).unwrap();
        assert_eq!(peak, noon);
        assert!(series[..peak].windows(2).all(|w| w[0] <= w[1]));
        assert!(series[peak..].windows(2).all(|w| w[0] >= w[1]));
    }
}
