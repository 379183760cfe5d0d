//! Brute-force references for the closed forms: exhaustive sweeps and grids
//! that assume nothing about convexity or structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aero::FlightModel;
use crate::atmosphere::{MAX_ALTITUDE_M, MIN_ALTITUDE_M};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::noma::{self, meets_target, Regime};
use crate::optimizer::run_algorithm2;

/// Best point of an evenly spaced 1-D sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub argmin: f64,
    pub value: f64,
    pub step: f64,
}

/// Evaluates `f` at `points` evenly spaced values covering [lo, hi].
pub fn argmin_sweep(lo: f64, hi: f64, points: usize, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Sweep> {
    if points < 2 || !(lo < hi) {
        return Err(Error::domain("sweep", format!("need lo < hi and at least 2 points, got [{lo}, {hi}] x {points}")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = Sweep { argmin: lo, value: f64::INFINITY, step };
    for i in 0..points {
        let x = lo + step * i as f64;
        let y = f(x)?;
        if y < best.value {
            best.argmin = x;
            best.value = y;
        }
    }
    Ok(best)
}

/// Unconstrained argmin of P_pro over airspeed at `altitude`, ignoring stall.
pub fn speed_sweep(flight: &FlightModel, altitude: f64, points: usize) -> Result<Sweep> {
    argmin_sweep(1.0, flight.bounds.max_airspeed, points, |v| flight.propulsion_power(altitude, v))
}

/// Unconstrained argmin of P_pro over the whole modelled altitude range.
pub fn altitude_sweep(flight: &FlightModel, airspeed: f64, points: usize) -> Result<Sweep> {
    argmin_sweep(MIN_ALTITUDE_M, MAX_ALTITUDE_M, points, |h| flight.propulsion_power(h, airspeed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub altitude: f64,
    pub airspeed: f64,
    pub power: f64,
    pub altitude_step: f64,
    pub speed_step: f64,
}

/// Minimum of P_pro on an n×n grid over [H_min, H_max] × [V_s(H_min), V_max],
/// skipping points below stall.
pub fn night_grid(flight: &FlightModel, n: usize) -> Result<GridOptimum> {
    let b = flight.bounds;
    let v_lo = flight.stall_speed(b.min_altitude)?;
    if n < 2 || v_lo >= b.max_airspeed {
        return Err(Error::domain("night grid", "empty feasible box"));
    }
    let dh = (b.max_altitude - b.min_altitude) / (n - 1) as f64;
    let dv = (b.max_airspeed - v_lo) / (n - 1) as f64;
    let mut best = GridOptimum { altitude: f64::NAN, airspeed: f64::NAN, power: f64::INFINITY, altitude_step: dh, speed_step: dv };
    for i in 0..n {
        let h = b.min_altitude + dh * i as f64;
        let v_s = flight.stall_speed(h)?;
        for j in 0..n {
            let v = v_lo + dv * j as f64;
            if v < v_s {
                continue;
            }
            let p = flight.propulsion_power(h, v)?;
            if p < best.power {
                best = GridOptimum { altitude: h, airspeed: v, power: p, ..best };
            }
        }
    }
    Ok(best)
}

/// What exhaustive search over the power simplex finds for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOracle {
    /// Best sum rate (bit/s/Hz) over grid points where every user meets Ω.
    pub best_feasible_rate: Option<f64>,
    pub best_fractions: Option<Vec<f64>>,
    /// Most users meeting Ω at any grid point.
    pub max_qos_users: usize,
    pub points: usize,
}

impl SimplexOracle {
    pub fn feasible(&self) -> bool {
        self.best_feasible_rate.is_some()
    }
}

fn for_each_composition(parts: usize, total: usize, prefix: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(total);
        f(prefix);
        prefix.pop();
        return;
    }
    for k in 0..=total {
        prefix.push(k);
        for_each_composition(parts - 1, total - k, prefix, f);
        prefix.pop();
    }
}

/// Enumerates every α on the simplex with coordinates that are multiples of
/// `resolution`. `composites` must be sorted weakest first.
pub fn noma_simplex(composites: &[f64], omega: f64, resolution: f64) -> Result<SimplexOracle> {
    let k = composites.len();
    if k == 0 || k > 4 {
        return Err(Error::domain("simplex oracle", format!("supports 1 to 4 users, got {k}")));
    }
    let total = (1.0 / resolution).round() as usize;
    let mut out = SimplexOracle { best_feasible_rate: None, best_fractions: None, max_qos_users: 0, points: 0 };
    let mut alphas = vec![0.0; k];
    let mut err = None;
    for_each_composition(k, total, &mut Vec::with_capacity(k), &mut |c| {
        if err.is_some() {
            return;
        }
        for (a, &n) in alphas.iter_mut().zip(c) {
            *a = n as f64 / total as f64;
        }
        let g = match noma::sinrs(&alphas, composites) {
            Ok(g) => g,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        out.points += 1;
        let rates: Vec<f64> = g.iter().map(|&x| noma::rate(x, 1.0)).collect();
        let met = rates.iter().filter(|&&r| meets_target(r, omega)).count();
        out.max_qos_users = out.max_qos_users.max(met);
        if met == k {
            let sum: f64 = rates.iter().sum();
            if out.best_feasible_rate.is_none_or(|b| sum > b) {
                out.best_feasible_rate = Some(sum);
                out.best_fractions = Some(alphas.clone());
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Central differences (∂P_pro/∂H, ∂P_pro/∂V) with steps `eh` and `ev`.
/// In altitude the stencil never crosses the boundary between the two
/// atmosphere layers; next to it a one-sided difference is taken instead.
pub fn finite_difference_gradient(flight: &FlightModel, altitude: f64, airspeed: f64, eh: f64, ev: f64) -> Result<(f64, f64)> {
    let p = |h, v| flight.propulsion_power(h, v);
    let seam = flight.atmosphere.constants.base_altitude_upper;
    let (lo, hi) = if altitude - eh < seam && altitude + eh >= seam {
        if altitude >= seam { (altitude, altitude + eh) } else { (altitude - eh, altitude) }
    } else {
        (altitude - eh, altitude + eh)
    };
    let dh = (p(hi, airspeed)? - p(lo, airspeed)?) / (hi - lo);
    let dv = (p(altitude, airspeed + ev)? - p(altitude, airspeed - ev)?) / (2.0 * ev);
    Ok((dh, dv))
}

/// A cell of 1 to `max_users` users with log-uniform composites in
/// [1e-3, 1], sorted weakest first, and Ω uniform in [0.1, 3].
pub fn random_noma_instance<R: Rng + ?Sized>(rng: &mut R, max_users: usize) -> (Vec<f64>, f64) {
    let k = rng.random_range(1..=max_users);
    let mut a: Vec<f64> = (0..k).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    (a, rng.random_range(0.1..3.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> OracleCheck {
    OracleCheck { name, passed, detail }
}

/// Runs every closed form of the configured aircraft and the NOMA split
/// against its brute-force reference.
pub fn audit(config: &ScenarioConfig) -> Result<Vec<OracleCheck>> {
    config.validate()?;
    let flight = config.flight_model();
    let b = flight.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let h = rng.random_range(b.min_altitude..b.max_altitude);
        let v = rng.random_range(flight.stall_speed(h)?..b.max_airspeed);
        let (ah, av) = flight.propulsion_power_gradient(h, v)?;
        let (fh, fv) = finite_difference_gradient(&flight, h, v, 1e-2, 1e-5)?;
        worst = worst.max(((ah - fh) / fh).abs()).max(((av - fv) / fv).abs());
    }
    out.push(check("gradient", worst < 1e-4, format!("worst relative gap {worst:.2e} over 100 points")));

    let mut worst_v = 0.0f64;
    for i in 0..=6 {
        let h = b.min_altitude + (b.max_altitude - b.min_altitude) * i as f64 / 6.0;
        let s = speed_sweep(&flight, h, 10_000)?;
        worst_v = worst_v.max((s.argmin - flight.min_power_speed(h)?).abs() / s.step);
    }
    out.push(check("min-power speed", worst_v <= 1.0, format!("worst gap {worst_v:.3} grid steps")));

    let mut worst_h = 0.0f64;
    let mut tested = 0;
    for i in 0..=20 {
        let v = 5.0 + (b.max_airspeed - 5.0) * i as f64 / 20.0;
        let h_m = flight.min_power_altitude(v)?;
        if !(MIN_ALTITUDE_M..=MAX_ALTITUDE_M).contains(&h_m) {
            continue;
        }
        let s = altitude_sweep(&flight, v, 10_000)?;
        worst_h = worst_h.max((s.argmin - h_m).abs() / s.step);
        tested += 1;
    }
    out.push(check("min-power altitude", tested > 0 && worst_h <= 1.0, format!("worst gap {worst_h:.3} grid steps over {tested} speeds")));

    let night = run_algorithm2(&flight, &config.optimizer)?;
    let g = night_grid(&flight, 200)?;
    let dh = (night.altitude - g.altitude).abs() / g.altitude_step;
    let dv = (night.airspeed - g.airspeed).abs() / g.speed_step;
    out.push(check(
        "night optimum",
        dh <= 1.0 && dv <= 1.0,
        format!(
            "iterated ({:.1} m, {:.3} m/s), grid ({:.1} m, {:.3} m/s), gap ({dh:.2}, {dv:.2}) cells",
            night.altitude, night.airspeed, g.altitude, g.airspeed
        ),
    ));

    let (mut agree, mut total, mut worst_rate) = (0, 0, f64::NEG_INFINITY);
    for _ in 0..50 {
        let (a, omega) = random_noma_instance(&mut rng, 3);
        if (noma::qos_power(&a, omega) - 1.0).abs() < 0.02 {
            continue;
        }
        total += 1;
        let closed = noma::allocate(&a, omega)?;
        let oracle = noma_simplex(&a, omega, 1e-2)?;
        let ok = match (closed.regime, oracle.best_feasible_rate) {
            (Regime::Feasible, Some(r)) => {
                worst_rate = worst_rate.max(r - closed.spectral_efficiency);
                r <= closed.spectral_efficiency + 1e-9
            }
            (Regime::Partial { .. }, None) => closed.qos_users() == oracle.max_qos_users,
            _ => false,
        };
        agree += ok as usize;
    }
    out.push(check(
        "noma allocation",
        agree == total,
        format!("{agree}/{total} instances agree, grid beats closed form by at most {worst_rate:.2e} bit/s/Hz"),
    ));
    Ok(out)
}
