use crate::aero::FlightModel;
use crate::config::OptimizerParams;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct NightDecision {
    pub altitude: f64,
    pub airspeed: f64,
    pub propulsion: f64,
    pub required: f64,
    pub iterations: usize,
    pub converged: bool,
    /// (H, V, P_pro) of the starting point and of every iteration.
    pub trace: Vec<(f64, f64, f64)>,
}

/// The night loop: from a feasible start, alternate the closed-form speed
/// V*(H) and altitude H*(V) until P_pro changes by less than δ (W). Each
/// step minimises over a set containing the current point, so P_pro never
/// increases.
pub fn run_algorithm2(flight: &FlightModel, params: &OptimizerParams) -> Result<NightDecision> {
    let mut h = params.initial_altitude;
    let mut v = (params.initial_speed_factor * flight.stall_speed(h)?).min(flight.bounds.max_airspeed);
    let mut p = flight.propulsion_power(h, v)?;
    let mut trace = vec![(h, v, p)];
    let mut converged = false;
    let mut iterations = 0;
    for i in 1..=params.max_iterations {
        iterations = i;
        v = flight.optimal_speed(h)?;
        h = flight.optimal_altitude(v)?;
        let next = flight.propulsion_power(h, v)?;
        trace.push((h, v, next));
        let change = (next - p).abs();
        p = next;
        if change < params.tolerance {
            converged = true;
            break;
        }
    }
    Ok(NightDecision {
        altitude: h,
        airspeed: v,
        propulsion: p,
        required: p + flight.aircraft.accessory_power,
        iterations,
        converged,
        trace,
    })
}
