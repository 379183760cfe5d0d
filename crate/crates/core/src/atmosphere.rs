//! Two-layer stratosphere model (ISA / 1976 U.S. Standard Atmosphere) covering
//! 11 km to 32 km, plus the quadratic fits used over the 18–24 km band.
//!
//! Altitudes are metres everywhere except the polynomial helpers, which take
//! kilometres because that is the variable the fits were made in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest altitude covered by the model (base of the isothermal layer).
pub const MIN_ALTITUDE_M: f64 = 11_000.0;
/// Highest altitude covered by the model (top of the lapse-rate layer).
pub const MAX_ALTITUDE_M: f64 = 32_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AtmosphereConstants {
    /// Pressure at mean sea level (Pa).
    pub sea_level_pressure: f64,
    /// Static pressure at the base of the isothermal layer (Pa).
    pub base_pressure_lower: f64,
    /// Static pressure at the base of the lapse-rate layer (Pa).
    pub base_pressure_upper: f64,
    /// Base altitude of the isothermal layer (m).
    pub base_altitude_lower: f64,
    /// Base altitude of the lapse-rate layer (m).
    pub base_altitude_upper: f64,
    /// Base temperature (K).
    pub base_temperature: f64,
    /// Temperature lapse rate above the upper base altitude (K/m).
    pub lapse_rate: f64,
    /// Universal gas constant (N·m/(mol·K)).
    pub gas_constant: f64,
    /// Specific gas constant of dry air (J/(kg·K)).
    pub specific_gas_constant: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Molar mass of air (kg/mol).
    pub molar_mass: f64,
}

impl Default for AtmosphereConstants {
    fn default() -> Self {
        Self {
            sea_level_pressure: 101_325.0,
            base_pressure_lower: 22_632.06,
            base_pressure_upper: 5_474.889,
            base_altitude_lower: 11_000.0,
            base_altitude_upper: 20_000.0,
            base_temperature: 216.65,
            lapse_rate: 0.001,
            gas_constant: 8.31432,
            specific_gas_constant: 287.052,
            gravity: 9.8,
            molar_mass: 0.028_964_4,
        }
    }
}

/// State of the air at one altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereSample {
    pub altitude: f64,
    pub pressure: f64,
    pub relative_pressure: f64,
    pub temperature: f64,
    pub density: f64,
}

fn check_altitude(altitude: f64) -> Result<()> {
    if !(MIN_ALTITUDE_M..=MAX_ALTITUDE_M).contains(&altitude) {
        return Err(Error::OutOfRange {
            quantity: "altitude (m)",
            value: altitude,
            min: MIN_ALTITUDE_M,
            max: MAX_ALTITUDE_M,
        });
    }
    Ok(())
}

impl AtmosphereConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sea_level_pressure", self.sea_level_pressure),
            ("base_pressure_lower", self.base_pressure_lower),
            ("base_pressure_upper", self.base_pressure_upper),
            ("base_altitude_lower", self.base_altitude_lower),
            ("base_altitude_upper", self.base_altitude_upper),
            ("base_temperature", self.base_temperature),
            ("lapse_rate", self.lapse_rate),
            ("gas_constant", self.gas_constant),
            ("specific_gas_constant", self.specific_gas_constant),
            ("gravity", self.gravity),
            ("molar_mass", self.molar_mass),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::domain("atmosphere constant", format!("{name} must be positive, got {value}")));
            }
        }
        if self.base_altitude_lower >= self.base_altitude_upper {
            return Err(Error::domain(
                "atmosphere constant",
                "base_altitude_lower must be below base_altitude_upper",
            ));
        }
        Ok(())
    }

    /// g·M, the numerator shared by both barometric branches.
    fn g_m(&self) -> f64 {
        self.gravity * self.molar_mass
    }

    /// Exponent g·M/(R·L_b) of the power-law branch.
    fn power_law_exponent(&self) -> f64 {
        self.g_m() / (self.gas_constant * self.lapse_rate)
    }

    /// Scale height R·T_b/(g·M) of the isothermal layer (m).
    pub fn scale_height(&self) -> f64 {
        self.gas_constant * self.base_temperature / self.g_m()
    }

    /// Exponential (isothermal) branch, evaluated without a range check.
    pub fn isothermal_branch_pressure(&self, altitude: f64) -> f64 {
        self.base_pressure_lower * (-(altitude - self.base_altitude_lower) / self.scale_height()).exp()
    }

    /// Power-law (constant lapse rate) branch, evaluated without a range check.
    pub fn lapse_branch_pressure(&self, altitude: f64) -> f64 {
        let t = self.lapse_branch_temperature(altitude);
        self.base_pressure_upper * (self.base_temperature / t).powf(self.power_law_exponent())
    }

    fn lapse_branch_temperature(&self, altitude: f64) -> f64 {
        self.base_temperature + self.lapse_rate * (altitude - self.base_altitude_upper)
    }

    fn in_upper_layer(&self, altitude: f64) -> bool {
        altitude >= self.base_altitude_upper
    }

    pub fn pressure_at(&self, altitude: f64) -> Result<f64> {
        check_altitude(altitude)?;
        Ok(if self.in_upper_layer(altitude) {
            self.lapse_branch_pressure(altitude)
        } else {
            self.isothermal_branch_pressure(altitude)
        })
    }

    pub fn temperature_at(&self, altitude: f64) -> Result<f64> {
        check_altitude(altitude)?;
        Ok(if self.in_upper_layer(altitude) {
            self.lapse_branch_temperature(altitude)
        } else {
            self.base_temperature
        })
    }

    /// Ideal-gas density p/(R_sp·T).
    pub fn density_at(&self, altitude: f64) -> Result<f64> {
        Ok(self.pressure_at(altitude)? / (self.specific_gas_constant * self.temperature_at(altitude)?))
    }

    pub fn relative_pressure_at(&self, altitude: f64) -> Result<f64> {
        Ok(self.pressure_at(altitude)? / self.sea_level_pressure)
    }

    /// dρ/dH (kg/m⁴). One-sided at the layer seam: the upper-layer
    /// expression is used at exactly the upper base altitude.
    pub fn density_gradient(&self, altitude: f64) -> Result<f64> {
        let rho = self.density_at(altitude)?;
        let t = self.temperature_at(altitude)?;
        let hydrostatic = self.g_m() / (self.gas_constant * t);
        Ok(if self.in_upper_layer(altitude) {
            -rho * (hydrostatic + self.lapse_rate / t)
        } else {
            -rho * hydrostatic
        })
    }

    pub fn sample(&self, altitude: f64) -> Result<AtmosphereSample> {
        let pressure = self.pressure_at(altitude)?;
        let temperature = self.temperature_at(altitude)?;
        Ok(AtmosphereSample {
            altitude,
            pressure,
            relative_pressure: pressure / self.sea_level_pressure,
            temperature,
            density: pressure / (self.specific_gas_constant * temperature),
        })
    }

    /// Altitude at which the air reaches `density`, from the closed-form
    /// inversion of each layer. The upper-layer solution wins when both are
    /// valid. Outside the modelled band the value is extrapolated from the
    /// layer on that side, so callers can clamp it.
    pub fn altitude_for_density(&self, density: f64) -> f64 {
        // ϖ = R_sp·ρ is the quantity both inversions are written in.
        let varpi = self.specific_gas_constant * density;
        let lower = self.base_altitude_lower
            - self.scale_height() * (varpi * self.base_temperature / self.base_pressure_lower).ln();
        let k = self.power_law_exponent();
        let theta = 1.0 / (k + 1.0);
        let log_inner = self.base_pressure_upper.ln() + k * self.base_temperature.ln() - varpi.ln();
        let upper = self.base_altitude_upper - self.base_temperature / self.lapse_rate
            + (theta * log_inner).exp() / self.lapse_rate;

        let upper_ok = (self.base_altitude_upper..=MAX_ALTITUDE_M).contains(&upper);
        let lower_ok = (MIN_ALTITUDE_M..=self.base_altitude_upper).contains(&lower);
        if upper_ok || !(lower_ok || lower < MIN_ALTITUDE_M) {
            upper
        } else {
            lower
        }
    }
}

/// Quadratic density fit (kg/m³), `altitude_km` in km.
pub fn density_poly(altitude_km: f64) -> f64 {
    let h = altitude_km;
    (0.95162 * h * h - 52.29356 * h + 753.39927) / 1000.0
}

/// Quadratic pressure fit (Pa), `altitude_km` in km.
pub fn pressure_poly(altitude_km: f64) -> f64 {
    let h = altitude_km;
    60.0 * h * h - 3276.7 * h + 47022.8
}

/// Which density law the flight-power model evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DensityModel {
    #[default]
    Standard,
    Polynomial,
}

/// Constants plus the density law used by the flight model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Atmosphere {
    pub constants: AtmosphereConstants,
    pub model: DensityModel,
}

impl Atmosphere {
    pub fn new(constants: AtmosphereConstants, model: DensityModel) -> Self {
        Self { constants, model }
    }

    pub fn density(&self, altitude: f64) -> Result<f64> {
        match self.model {
            DensityModel::Standard => self.constants.density_at(altitude),
            DensityModel::Polynomial => {
                check_altitude(altitude)?;
                Ok(density_poly(altitude / 1000.0))
            }
        }
    }

    pub fn density_gradient(&self, altitude: f64) -> Result<f64> {
        match self.model {
            DensityModel::Standard => self.constants.density_gradient(altitude),
            DensityModel::Polynomial => {
                check_altitude(altitude)?;
                let h = altitude / 1000.0;
                // d/dh in g/m³ per km is numerically kg/m³ per m.
                Ok((2.0 * 0.95162 * h - 52.29356) / 1.0e6)
            }
        }
    }

    pub fn relative_pressure(&self, altitude: f64) -> Result<f64> {
        match self.model {
            DensityModel::Standard => self.constants.relative_pressure_at(altitude),
            DensityModel::Polynomial => {
                check_altitude(altitude)?;
                Ok(pressure_poly(altitude / 1000.0) / self.constants.sea_level_pressure)
            }
        }
    }

    /// Inverse of [`Atmosphere::density`]; may fall outside the modelled band.
    pub fn altitude_for_density(&self, density: f64) -> f64 {
        match self.model {
            DensityModel::Standard => self.constants.altitude_for_density(density),
            DensityModel::Polynomial => {
                let (a, b, c) = (0.95162, -52.29356, 753.39927 - 1000.0 * density);
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    // Below the fit's minimum density: beyond the top of the band.
                    return 1000.0 * (-b / (2.0 * a));
                }
                // Decreasing branch of the parabola.
                1000.0 * (-b - disc.sqrt()) / (2.0 * a)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn base_pressures() {
        let c = AtmosphereConstants::default();
        assert!((c.pressure_at(11_000.0).unwrap() - 22_632.06).abs() < 1e-9);
        assert!((c.pressure_at(20_000.0).unwrap() - 5_474.889).abs() < 1e-9);
    }

    #[test]
    fn isothermal_branch_meets_lapse_branch_at_seam() {
        let c = AtmosphereConstants::default();
        // p_b1·exp(−gM·9000/(R·T_b)) evaluated by hand: 5479.9 Pa.
        let by_hand = 22_632.06 * (-(9.8_f64 * 0.028_964_4 * 9000.0) / (8.31432 * 216.65)).exp();
        let first = c.isothermal_branch_pressure(20_000.0);
        assert!((first - by_hand).abs() < 1e-9);
        assert!(rel(first, 5_474.889) < 1e-3);
    }

    #[test]
    fn temperatures() {
        let c = AtmosphereConstants::default();
        assert_eq!(c.temperature_at(18_000.0).unwrap(), 216.65);
        assert_eq!(c.temperature_at(20_000.0).unwrap(), 216.65);
        assert!((c.temperature_at(25_000.0).unwrap() - 221.65).abs() < 1e-9);
    }

    #[test]
    fn densities() {
        let c = AtmosphereConstants::default();
        assert!((c.density_at(11_000.0).unwrap() - 0.3639).abs() < 1e-4);
        assert!((c.density_at(20_000.0).unwrap() - 0.0880).abs() < 1e-4);
        assert!(rel(c.density_at(18_000.0).unwrap(), density_poly(18.0)) < 0.03);
        assert!(rel(density_poly(21.0), c.density_at(21_000.0).unwrap()) < 0.05);
    }

    #[test]
    fn polynomial_values() {
        assert!((density_poly(18.0) - 0.120_440_07).abs() < 1e-8);
        assert!((pressure_poly(20.0) - 5488.8).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_is_reported() {
        let c = AtmosphereConstants::default();
        for h in [10_999.0, 32_001.0, -5.0] {
            match c.pressure_at(h) {
                Err(Error::OutOfRange { min, max, .. }) => {
                    assert_eq!((min, max), (MIN_ALTITUDE_M, MAX_ALTITUDE_M))
                }
                other => panic!("expected range error, got {other:?}"),
            }
        }
        assert!(c.temperature_at(40_000.0).is_err());
        assert!(c.density_at(0.0).is_err());
    }

    #[test]
    fn sample_is_ideal_gas_consistent() {
        let c = AtmosphereConstants::default();
        for h in [11_000.0, 15_500.0, 20_000.0, 27_300.0, 32_000.0] {
            let s = c.sample(h).unwrap();
            assert!(s.pressure > 0.0 && s.density > 0.0);
            assert!(s.temperature >= 216.65);
            assert!(s.relative_pressure > 0.0 && s.relative_pressure < 1.0);
            assert!(rel(s.density, s.pressure / (287.052 * s.temperature)) < 1e-14);
        }
    }

    #[test]
    fn dense_sampling_is_monotone() {
        let c = AtmosphereConstants::default();
        let mut prev = (f64::INFINITY, f64::INFINITY, 0.0);
        for i in 0..=2100 {
            let h = 11_000.0 + 10.0 * i as f64;
            let (p, rho, t) = (
                c.pressure_at(h).unwrap(),
                c.density_at(h).unwrap(),
                c.temperature_at(h).unwrap(),
            );
            assert!(p < prev.0 && rho < prev.1 && t >= prev.2, "at {h}");
            prev = (p, rho, t);
        }
    }

    #[test]
    fn polynomial_fits_track_exact_model_over_band() {
        let c = AtmosphereConstants::default();
        for i in 0..=60 {
            let km = 18.0 + 0.1 * i as f64;
            let h = km * 1000.0;
            assert!(rel(density_poly(km), c.density_at(h).unwrap()) < 0.05, "density at {km}");
            assert!(rel(pressure_poly(km), c.pressure_at(h).unwrap()) < 0.05, "pressure at {km}");
        }
    }

    #[test]
    fn density_inversion_round_trips() {
        for model in [DensityModel::Standard, DensityModel::Polynomial] {
            let atm = Atmosphere::new(AtmosphereConstants::default(), model);
            let lo = if model == DensityModel::Standard { 11_500.0 } else { 18_000.0 };
            for i in 0..=40 {
                let h = lo + (24_000.0 - lo) * i as f64 / 40.0;
                let back = atm.altitude_for_density(atm.density(h).unwrap());
                assert!((back - h).abs() < 1e-6, "{model:?} {h} -> {back}");
            }
        }
    }

    #[test]
    fn inversion_extrapolates_outside_band() {
        let c = AtmosphereConstants::default();
        assert!(c.altitude_for_density(1.0) < MIN_ALTITUDE_M);
        assert!(c.altitude_for_density(1e-3) > MAX_ALTITUDE_M);
    }
}
