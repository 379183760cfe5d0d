//! Steady level flight: drag-polar thrust, propulsion power, stall speed and
//! the closed-form power-minimising speed and altitude.

use serde::{Deserialize, Serialize};

use crate::atmosphere::Atmosphere;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Aircraft {
    /// Mass (kg). The weight force is `mass·g`.
    pub mass: f64,
    /// Wing area S (m²).
    pub wing_area: f64,
    /// Zero-lift drag coefficient C_D0.
    pub zero_lift_drag: f64,
    /// Oswald efficiency factor e.
    pub oswald_efficiency: f64,
    /// Wing aspect ratio.
    pub aspect_ratio: f64,
    /// Maximum lift coefficient, which sets the stall speed.
    pub max_lift_coefficient: f64,
    pub propeller_efficiency: f64,
    pub engine_efficiency: f64,
    /// Avionics and payload housekeeping draw (W).
    pub accessory_power: f64,
}

impl Default for Aircraft {
    fn default() -> Self {
        Self {
            mass: 640.0,
            wing_area: 190.0,
            zero_lift_drag: 0.015,
            oswald_efficiency: 0.6385,
            aspect_ratio: 30.0,
            max_lift_coefficient: 1.2,
            propeller_efficiency: 0.85,
            engine_efficiency: 0.9,
            accessory_power: 200.0,
        }
    }
}

impl Aircraft {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("wing_area", self.wing_area),
            ("zero_lift_drag", self.zero_lift_drag),
            ("oswald_efficiency", self.oswald_efficiency),
            ("aspect_ratio", self.aspect_ratio),
            ("max_lift_coefficient", self.max_lift_coefficient),
            ("accessory_power", self.accessory_power),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain("aircraft", format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("propeller_efficiency", self.propeller_efficiency), ("engine_efficiency", self.engine_efficiency)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::domain("aircraft", format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Induced-drag factor ε = 1/(π·e·AR).
    pub fn induced_drag_factor(&self) -> f64 {
        1.0 / (std::f64::consts::PI * self.oswald_efficiency * self.aspect_ratio)
    }

    fn drivetrain_efficiency(&self) -> f64 {
        self.propeller_efficiency * self.engine_efficiency
    }
}

/// Box constraints on the flight state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlightBounds {
    pub min_altitude: f64,
    pub max_altitude: f64,
    pub max_airspeed: f64,
}

impl Default for FlightBounds {
    fn default() -> Self {
        Self { min_altitude: 18_000.0, max_altitude: 24_000.0, max_airspeed: 60.0 }
    }
}

impl FlightBounds {
    pub fn validate(&self) -> Result<()> {
        use crate::atmosphere::{MAX_ALTITUDE_M, MIN_ALTITUDE_M};
        if !(self.min_altitude < self.max_altitude) {
            return Err(Error::domain(
                "flight bounds",
                format!("min_altitude ({}) must be below max_altitude ({})", self.min_altitude, self.max_altitude),
            ));
        }
        if self.min_altitude < MIN_ALTITUDE_M || self.max_altitude > MAX_ALTITUDE_M {
            return Err(Error::domain(
                "flight bounds",
                format!("altitudes must stay within [{MIN_ALTITUDE_M}, {MAX_ALTITUDE_M}] m"),
            ));
        }
        if !(self.max_airspeed > 0.0) {
            return Err(Error::domain("flight bounds", "max_airspeed must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightState {
    pub altitude: f64,
    pub airspeed: f64,
    pub thrust: f64,
    pub propulsion_power: f64,
    pub required_power: f64,
}

/// An aircraft flying through a particular atmosphere, within bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightModel {
    pub aircraft: Aircraft,
    pub atmosphere: Atmosphere,
    pub bounds: FlightBounds,
}

impl FlightModel {
    pub fn new(aircraft: Aircraft, atmosphere: Atmosphere, bounds: FlightBounds) -> Self {
        Self { aircraft, atmosphere, bounds }
    }

    /// Weight force W = m·g (N).
    pub fn weight(&self) -> f64 {
        self.aircraft.mass * self.atmosphere.constants.gravity
    }

    fn check_airspeed(airspeed: f64) -> Result<()> {
        if !(airspeed > 0.0 && airspeed.is_finite()) {
            return Err(Error::domain("airspeed", format!("must be positive, got {airspeed}")));
        }
        Ok(())
    }

    /// Drag, and hence thrust, in steady level flight:
    /// ½ρV²S·C_D0 + 2εW²/(ρSV²).
    pub fn thrust(&self, altitude: f64, airspeed: f64) -> Result<f64> {
        Self::check_airspeed(airspeed)?;
        let rho = self.atmosphere.density(altitude)?;
        let a = &self.aircraft;
        let w = self.weight();
        let v2 = airspeed * airspeed;
        Ok(0.5 * rho * v2 * a.wing_area * a.zero_lift_drag
            + a.induced_drag_factor() * 2.0 * w * w / (rho * a.wing_area * v2))
    }

    pub fn propulsion_power(&self, altitude: f64, airspeed: f64) -> Result<f64> {
        Ok(self.thrust(altitude, airspeed)? * airspeed / self.aircraft.drivetrain_efficiency())
    }

    pub fn required_power(&self, altitude: f64, airspeed: f64) -> Result<f64> {
        Ok(self.aircraft.accessory_power + self.propulsion_power(altitude, airspeed)?)
    }

    pub fn flight_state(&self, altitude: f64, airspeed: f64) -> Result<FlightState> {
        let thrust = self.thrust(altitude, airspeed)?;
        let propulsion_power = thrust * airspeed / self.aircraft.drivetrain_efficiency();
        Ok(FlightState {
            altitude,
            airspeed,
            thrust,
            propulsion_power,
            required_power: propulsion_power + self.aircraft.accessory_power,
        })
    }

    /// Analytic (∂P_pro/∂H, ∂P_pro/∂V).
    pub fn propulsion_power_gradient(&self, altitude: f64, airspeed: f64) -> Result<(f64, f64)> {
        Self::check_airspeed(airspeed)?;
        let rho = self.atmosphere.density(altitude)?;
        let drho = self.atmosphere.density_gradient(altitude)?;
        let a = &self.aircraft;
        let k = 1.0 / a.drivetrain_efficiency();
        let w = self.weight();
        let eps = a.induced_drag_factor();
        let v = airspeed;
        let d_h = k * drho * (0.5 * v.powi(3) * a.wing_area * a.zero_lift_drag
            - 2.0 * eps * w * w / (rho * rho * a.wing_area * v));
        let d_v = k * (1.5 * rho * v * v * a.wing_area * a.zero_lift_drag - 2.0 * eps * w * w / (rho * a.wing_area * v * v));
        Ok((d_h, d_v))
    }

    /// Stall speed sqrt(2W/(ρS·C_Lmax)), the slowest level-flight speed.
    pub fn stall_speed(&self, altitude: f64) -> Result<f64> {
        let rho = self.atmosphere.density(altitude)?;
        Ok((2.0 * self.weight() / (rho * self.aircraft.wing_area * self.aircraft.max_lift_coefficient)).sqrt())
    }

    /// Altitude at which `airspeed` is exactly the stall speed. Above it the
    /// aircraft cannot hold level flight at that speed. May fall outside the
    /// modelled band.
    pub fn stall_altitude(&self, airspeed: f64) -> f64 {
        let a = &self.aircraft;
        let rho = 2.0 * self.weight() / (a.wing_area * airspeed * airspeed * a.max_lift_coefficient);
        self.atmosphere.altitude_for_density(rho)
    }

    /// Unconstrained minimum-power speed V_m = sqrt((2W/(ρS))·sqrt(ε/(3·C_D0))).
    pub fn min_power_speed(&self, altitude: f64) -> Result<f64> {
        let rho = self.atmosphere.density(altitude)?;
        let a = &self.aircraft;
        Ok((2.0 * self.weight() / (rho * a.wing_area) * (a.induced_drag_factor() / (3.0 * a.zero_lift_drag)).sqrt()).sqrt())
    }

    /// V* = V_m projected onto [V_s(H), V_max].
    pub fn optimal_speed(&self, altitude: f64) -> Result<f64> {
        let v_s = self.stall_speed(altitude)?;
        if v_s > self.bounds.max_airspeed {
            return Err(Error::domain(
                "airspeed",
                format!("stall speed {v_s:.2} m/s at {altitude} m exceeds max_airspeed"),
            ));
        }
        Ok(self.min_power_speed(altitude)?.clamp(v_s, self.bounds.max_airspeed))
    }

    /// Density ρ* = (2W/(S·V²))·sqrt(ε/C_D0) at which P_pro is stationary in H.
    pub fn min_power_density(&self, airspeed: f64) -> Result<f64> {
        Self::check_airspeed(airspeed)?;
        let a = &self.aircraft;
        Ok(2.0 * self.weight() / (a.wing_area * airspeed * airspeed) * (a.induced_drag_factor() / a.zero_lift_drag).sqrt())
    }

    /// Unconstrained stationary altitude H_m for `airspeed`, from the
    /// closed-form inversion of the density law. Unclamped; it can leave the
    /// band when the target density does.
    pub fn min_power_altitude(&self, airspeed: f64) -> Result<f64> {
        Ok(self.atmosphere.altitude_for_density(self.min_power_density(airspeed)?))
    }

    /// H* for `airspeed`: H_m projected onto the altitudes where that speed
    /// is flyable, [H_min, min(H_max, H_stall(V))]. P_pro is convex in ρ, so
    /// the projection is the constrained minimiser. When the speed is below
    /// stall everywhere in the band the lowest altitude is returned.
    pub fn optimal_altitude(&self, airspeed: f64) -> Result<f64> {
        let h_m = self.min_power_altitude(airspeed)?;
        let ceiling = self.bounds.max_altitude.min(self.stall_altitude(airspeed));
        if ceiling <= self.bounds.min_altitude {
            return Ok(self.bounds.min_altitude);
        }
        Ok(h_m.clamp(self.bounds.min_altitude, ceiling))
    }

    /// Whether (H, V) satisfies every box constraint, with a relative slack
    /// on the stall boundary for rounding.
    pub fn is_feasible(&self, altitude: f64, airspeed: f64) -> bool {
        let b = &self.bounds;
        if !(b.min_altitude..=b.max_altitude).contains(&altitude) || airspeed > b.max_airspeed {
            return false;
        }
        match self.stall_speed(altitude) {
            Ok(v_s) => airspeed >= v_s * (1.0 - 1e-9),
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::{density_poly, AtmosphereConstants, DensityModel};

    fn model() -> FlightModel {
        FlightModel::new(Aircraft::default(), Atmosphere::default(), FlightBounds::default())
    }

    fn unit_efficiency(mut m: FlightModel) -> FlightModel {
        m.aircraft.propeller_efficiency = 1.0;
        m.aircraft.engine_efficiency = 1.0;
        m
    }

    #[test]
    fn thrust_rejects_non_positive_speed() {
        assert!(model().thrust(18_000.0, 0.0).is_err());
        assert!(model().thrust(18_000.0, -3.0).is_err());
    }

    #[test]
    fn thrust_grows_with_speed_eventually() {
        let m = model();
        let mut prev = m.thrust(18_000.0, 40.0).unwrap();
        for v in 41..200 {
            let t = m.thrust(18_000.0, v as f64).unwrap();
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn thrust_minimum_at_equal_drag_terms() {
        let m = model();
        let h = 18_000.0;
        let rho = m.atmosphere.density(h).unwrap();
        let a = m.aircraft;
        let w = m.weight();
        // ½ρV²S·C_D0 = 2εW²/(ρSV²)
        let v_eq = (4.0 * a.induced_drag_factor() * w * w / (rho * rho * a.wing_area * a.wing_area * a.zero_lift_drag))
            .powf(0.25);
        let t_min = (0..100_000)
            .map(|i| m.thrust(h, 5.0 + i as f64 * 0.001).unwrap())
            .fold(f64::INFINITY, f64::min);
        let t_eq = m.thrust(h, v_eq).unwrap();
        assert!(t_eq <= t_min * (1.0 + 1e-9));
        assert!((t_eq - t_min) / t_min < 0.01);
    }

    #[test]
    fn minimum_thrust_speed_is_faster_than_minimum_power_speed() {
        // The minimum-drag speed exceeds V_m by 3^(1/4).
        let m = model();
        let h = 18_000.0;
        let v_m = m.min_power_speed(h).unwrap();
        assert!((v_m - 18.23).abs() < 0.02, "{v_m}");
        let grid_best = (0..40_000)
            .map(|i| 5.0 + i as f64 * 0.001)
            .min_by(|&a, &b| m.thrust(h, a).unwrap().total_cmp(&m.thrust(h, b).unwrap()))
            .unwrap();
        assert!((grid_best / v_m - 3f64.powf(0.25)).abs() < 1e-3);
    }

    #[test]
    fn power_definition() {
        let m = unit_efficiency(model());
        let h = 20_000.0;
        let v = 30.0;
        assert!((m.propulsion_power(h, v).unwrap() - m.thrust(h, v).unwrap() * v).abs() < 1e-9);
        let mut half = m;
        half.aircraft.propeller_efficiency = 0.5;
        half.aircraft.engine_efficiency = 0.5;
        let ratio = half.propulsion_power(h, v).unwrap() / m.propulsion_power(h, v).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
        let s = m.flight_state(h, v).unwrap();
        assert!((s.required_power - s.propulsion_power - 200.0).abs() < 1e-9);
    }

    #[test]
    fn stall_speed_scaling_and_fixture() {
        let m = model();
        let mut quad = m;
        quad.aircraft.max_lift_coefficient *= 4.0;
        let ratio = quad.stall_speed(19_000.0).unwrap() / m.stall_speed(19_000.0).unwrap();
        assert!((ratio - 0.5).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=60 {
            let v = m.stall_speed(18_000.0 + 100.0 * i as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let hand = (2.0 * 640.0 * 9.8 / (0.12044 * 190.0 * 1.2f64)).sqrt();
        let poly = FlightModel { atmosphere: Atmosphere::new(AtmosphereConstants::default(), DensityModel::Polynomial), ..m };
        assert!((poly.stall_speed(18_000.0).unwrap() - hand).abs() / hand < 1e-4);
        assert!((m.stall_speed(18_000.0).unwrap() - hand).abs() / hand < 0.05);
    }

    #[test]
    fn min_power_speed_is_stationary() {
        let m = model();
        for h in [18_000.0, 21_000.0, 24_000.0] {
            let v = m.min_power_speed(h).unwrap();
            let dv = v * 1e-5;
            let fd = (m.propulsion_power(h, v + dv).unwrap() - m.propulsion_power(h, v - dv).unwrap()) / (2.0 * dv);
            let p = m.propulsion_power(h, v).unwrap();
            assert!((fd * v / p).abs() < 1e-6, "{h}: {fd}");
            assert!(m.propulsion_power_gradient(h, v).unwrap().1.abs() * v / p < 1e-12);
        }
    }

    #[test]
    fn optimum_speed_is_stall_limited_for_default_aircraft() {
        let m = model();
        for h in [18_000.0, 20_500.0, 24_000.0] {
            let v_s = m.stall_speed(h).unwrap();
            assert!(m.min_power_speed(h).unwrap() < v_s);
            assert_eq!(m.optimal_speed(h).unwrap(), v_s);
            let p_star = m.propulsion_power(h, v_s).unwrap();
            for i in 0..=1000 {
                let v = v_s + (60.0 - v_s) * i as f64 / 1000.0;
                assert!(p_star <= m.propulsion_power(h, v).unwrap() * (1.0 + 1e-12));
            }
        }
        let p = m.propulsion_power(18_000.0, m.stall_speed(18_000.0).unwrap()).unwrap();
        assert!((p - 5677.0).abs() < 5.0, "{p}");
    }

    #[test]
    fn optimum_speed_uses_min_power_speed_when_feasible() {
        let mut m = model();
        m.aircraft.max_lift_coefficient = 3.0;
        let h = 22_000.0;
        let v_m = m.min_power_speed(h).unwrap();
        assert!(v_m > m.stall_speed(h).unwrap());
        assert_eq!(m.optimal_speed(h).unwrap(), v_m);
    }

    #[test]
    fn min_power_altitude_satisfies_defining_equation() {
        let m = model();
        let a = m.aircraft;
        for v in [26.0, 30.0, 34.0] {
            let h = m.min_power_altitude(v).unwrap();
            let rho = m.atmosphere.density(h).unwrap();
            let lhs = rho * a.wing_area * v * v / (2.0 * m.weight());
            let rhs = (a.induced_drag_factor() / a.zero_lift_drag).sqrt();
            assert!((lhs - rhs).abs() / rhs < 1e-6, "{v}: {lhs} vs {rhs}");
            let (dh, _) = m.propulsion_power_gradient(h, v).unwrap();
            assert!(dh.abs() < 1e-6);
        }
    }

    #[test]
    fn optimal_altitude_respects_stall_ceiling() {
        let m = model();
        for v in [22.0, 25.0, 28.0, 33.0] {
            let h = m.optimal_altitude(v).unwrap();
            assert!((18_000.0..=24_000.0).contains(&h));
            assert!(m.stall_speed(h).unwrap() <= v * (1.0 + 1e-9));
        }
        // A crawl is below stall everywhere: best effort is the densest air.
        assert_eq!(m.optimal_altitude(1.0).unwrap(), 18_000.0);
        // Fast enough to leave H_m unconstrained and inside the band.
        let v = 36.0;
        let h_m = m.min_power_altitude(v).unwrap();
        assert!((18_000.0..=24_000.0).contains(&h_m));
        assert_eq!(m.optimal_altitude(v).unwrap(), h_m);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = model();
        for (h, v) in [(18_500.0, 30.0), (20_300.0, 35.0), (23_700.0, 45.0), (19_100.0, 22.5)] {
            let (gh, gv) = m.propulsion_power_gradient(h, v).unwrap();
            let eh = 0.5;
            let ev = 1e-4;
            let fh = (m.propulsion_power(h + eh, v).unwrap() - m.propulsion_power(h - eh, v).unwrap()) / (2.0 * eh);
            let fv = (m.propulsion_power(h, v + ev).unwrap() - m.propulsion_power(h, v - ev).unwrap()) / (2.0 * ev);
            assert!(((gh - fh) / fh).abs() < 1e-4, "dH at {h},{v}: {gh} vs {fh}");
            assert!(((gv - fv) / fv).abs() < 1e-4, "dV at {h},{v}: {gv} vs {fv}");
        }
    }

    #[test]
    fn convex_in_each_variable() {
        let m = model();
        for h in [18_000.0, 21_000.0, 24_000.0] {
            let step = 0.05;
            let p: Vec<f64> = (0..400).map(|i| m.propulsion_power(h, 15.0 + step * i as f64).unwrap()).collect();
            assert!(p.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-9));
        }
        // Each layer separately: the two pressure laws meet with a 0.09 % step
        // at the seam, which a second difference straddling it would see.
        for v in [25.0, 35.0, 50.0] {
            for (lo, hi) in [(18_000.0, 20_000.0 - 1e-6), (20_000.0, 24_000.0)] {
                let p: Vec<f64> = (0..=100)
                    .map(|i| m.propulsion_power(lo + (hi - lo) * i as f64 / 100.0, v).unwrap())
                    .collect();
                assert!(p.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-9), "{v}");
            }
        }
    }

    #[test]
    fn polynomial_density_drives_same_formulas() {
        let m = FlightModel {
            atmosphere: Atmosphere::new(AtmosphereConstants::default(), DensityModel::Polynomial),
            ..model()
        };
        let rho = density_poly(18.0);
        let expected = (2.0 * m.weight() / (rho * 190.0) * (m.aircraft.induced_drag_factor() / 0.045).sqrt()).sqrt();
        assert!((m.min_power_speed(18_000.0).unwrap() - expected).abs() < 1e-9);
        let h = m.min_power_altitude(30.0).unwrap();
        let back = m.atmosphere.density(h).unwrap();
        assert!((back - m.min_power_density(30.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bounds_validation() {
        assert!(FlightBounds::default().validate().is_ok());
        let bad = FlightBounds { min_altitude: 25_000.0, max_altitude: 24_000.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let a = Aircraft { engine_efficiency: 1.2, ..Default::default() };
        assert!(a.validate().is_err());
    }
}
