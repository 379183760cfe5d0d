use chrono::{TimeZone, Utc};
use proptest::prelude::*;

use haps_core::aero::{Aircraft, FlightBounds, FlightModel};
use haps_core::atmosphere::{Atmosphere, AtmosphereConstants, DensityModel};
use haps_core::config::{DateScenario, ScenarioConfig};
use haps_core::solar::{harvested_power, irradiance_at, relative_air_mass, solar_elevation};

fn standard() -> Atmosphere {
    Atmosphere::default()
}

#[test]
fn density_at_the_operating_band_edges() {
    let atm = standard();
    let lo = atm.density(18_000.0).unwrap();
    let hi = atm.density(24_000.0).unwrap();
    assert!((0.11..0.13).contains(&lo), "{lo}");
    assert!((0.04..0.06).contains(&hi), "{hi}");
    assert!(atm.density(10_000.0).is_err());
    assert!(atm.density(32_500.0).is_err());
}

proptest! {
    #[test]
    fn density_falls_with_altitude(h in 11_000.0f64..31_900.0, dh in 1.0f64..100.0) {
        for model in [DensityModel::Standard, DensityModel::Polynomial] {
            // The quadratic fit turns over near 27.5 km.
            if model == DensityModel::Polynomial && h + dh > 27_000.0 {
                continue;
            }
            let atm = Atmosphere::new(AtmosphereConstants::default(), model);
            prop_assert!(atm.density(h + dh).unwrap() < atm.density(h).unwrap());
        }
    }

    #[test]
    fn altitude_for_density_inverts_density(h in 11_000.0f64..32_000.0) {
        for model in [DensityModel::Standard, DensityModel::Polynomial] {
            if model == DensityModel::Polynomial && h > 27_000.0 {
                continue;
            }
            let atm = Atmosphere::new(AtmosphereConstants::default(), model);
            let back = atm.altitude_for_density(atm.density(h).unwrap());
            prop_assert!((back - h).abs() < 1e-3, "{model:?}: {h} -> {back}");
        }
    }

    #[test]
    fn optimal_speed_never_worse_than_any_feasible_speed(h in 18_000.0f64..24_000.0, f in 0.0f64..1.0) {
        let m = FlightModel::new(Aircraft::default(), standard(), FlightBounds::default());
        let v_star = m.optimal_speed(h).unwrap();
        let v_s = m.stall_speed(h).unwrap();
        let v = v_s + f * (60.0 - v_s);
        prop_assert!(m.propulsion_power(h, v_star).unwrap() <= m.propulsion_power(h, v).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn optimal_altitude_is_flyable_and_best_among_flyable(v in 20.0f64..60.0, f in 0.0f64..1.0) {
        let m = FlightModel::new(Aircraft::default(), standard(), FlightBounds::default());
        let h_star = m.optimal_altitude(v).unwrap();
        prop_assume!(m.is_feasible(h_star, v));
        let ceiling = m.stall_altitude(v).min(24_000.0);
        prop_assume!(ceiling > 18_000.0);
        let h = 18_000.0 + f * (ceiling - 18_000.0);
        prop_assert!(m.propulsion_power(h_star, v).unwrap() <= m.propulsion_power(h, v).unwrap() * (1.0 + 1e-9));
    }
}

#[test]
fn sun_is_higher_and_up_longer_at_the_summer_solstice() {
    let c = ScenarioConfig::default();
    let ws = c.solar_context(&DateScenario::winter_solstice());
    let ss = c.solar_context(&DateScenario::summer_solstice());
    let noon_ws = Utc.with_ymd_and_hms(2021, 12, 21, 9, 24, 0).unwrap();
    let noon_ss = Utc.with_ymd_and_hms(2021, 6, 21, 9, 24, 0).unwrap();
    let e_ws = solar_elevation(&ws, noon_ws);
    let e_ss = solar_elevation(&ss, noon_ss);
    // Zenith angle at noon is |latitude − declination|.
    assert!((e_ws - (90.0 - (22.31 + 23.44))).abs() < 0.5, "{e_ws}");
    assert!((e_ss - (90.0 - (23.44 - 22.31))).abs() < 0.5, "{e_ss}");
    let lit = |ctx, day: u32, month: u32| {
        (0..24 * 60).filter(|m| solar_elevation(ctx, Utc.with_ymd_and_hms(2021, month, day, 0, 0, 0).unwrap() + chrono::Duration::minutes(*m)) > 0.0).count()
    };
    let (lw, ls) = (lit(&ws, 21, 12), lit(&ss, 21, 6));
    assert!(ls > lw + 120, "{lw} vs {ls} minutes");
}

#[test]
fn no_power_below_the_horizon_and_air_mass_defined_only_above() {
    let c = ScenarioConfig::default();
    let ctx = c.solar_context(&DateScenario::winter_solstice());
    let midnight = Utc.with_ymd_and_hms(2021, 12, 20, 21, 0, 0).unwrap();
    assert_eq!(irradiance_at(&standard(), 20_000.0, midnight, &ctx).unwrap(), 0.0);
    assert_eq!(harvested_power(&standard(), 20_000.0, midnight, &ctx, &c.panel).unwrap(), 0.0);
    assert!(relative_air_mass(95.0).is_none());
    assert!((relative_air_mass(0.0).unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn thinner_air_lets_more_light_through() {
    let c = ScenarioConfig::default();
    let ctx = c.solar_context(&DateScenario::summer_solstice());
    let t = Utc.with_ymd_and_hms(2021, 6, 21, 6, 0, 0).unwrap();
    let low = irradiance_at(&standard(), 18_000.0, t, &ctx).unwrap();
    let high = irradiance_at(&standard(), 24_000.0, t, &ctx).unwrap();
    assert!(high > low && low > 0.0);
    assert!(high < 1361.0 * 1.04);
}
