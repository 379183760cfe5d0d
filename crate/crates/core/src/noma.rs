//! Downlink NOMA with successive interference cancellation.
//!
//! Users of a cell are indexed by decreasing composite coefficient A, so
//! index 0 is the weakest. User l decodes and removes everyone weaker than
//! itself and sees the power of the stronger users as noise:
//!
//! γ_l = α_l / (Σ_{k>l} α_k + A_l).
//!
//! QoS targets inside this module are spectral efficiencies Ω (bit/s/Hz).

use crate::error::{Error, Result};

/// Relative slack used when judging whether a rate meets its target.
pub const QOS_TOLERANCE: f64 = 1e-9;

fn check_order(composites: &[f64]) -> Result<()> {
    for (i, w) in composites.windows(2).enumerate() {
        if w[0] < w[1] {
            return Err(Error::Unordered { index: i + 1 });
        }
    }
    if let Some(a) = composites.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::domain("composite coefficient", format!("must be positive and finite, got {a}")));
    }
    Ok(())
}

fn check_dims(alphas: &[f64], composites: &[f64]) -> Result<()> {
    if alphas.len() != composites.len() {
        return Err(Error::Dimension { what: "power fractions", expected: composites.len(), got: alphas.len() });
    }
    Ok(())
}

/// SINR of user `l` (0-based, weakest first).
pub fn sinr(alphas: &[f64], composites: &[f64], l: usize) -> Result<f64> {
    check_dims(alphas, composites)?;
    check_order(composites)?;
    if l >= alphas.len() {
        return Err(Error::Dimension { what: "user index bound", expected: alphas.len(), got: l });
    }
    let stronger: f64 = alphas[l + 1..].iter().sum();
    Ok(alphas[l] / (stronger + composites[l]))
}

/// SINR of every user in one pass.
pub fn sinrs(alphas: &[f64], composites: &[f64]) -> Result<Vec<f64>> {
    check_dims(alphas, composites)?;
    check_order(composites)?;
    let mut out = vec![0.0; alphas.len()];
    let mut stronger = 0.0;
    for l in (0..alphas.len()).rev() {
        out[l] = alphas[l] / (stronger + composites[l]);
        stronger += alphas[l];
    }
    Ok(out)
}

/// Shannon rate B·log2(1 + γ) (bit/s when B is in Hz).
pub fn rate(gamma: f64, bandwidth: f64) -> f64 {
    bandwidth * gamma.max(0.0).ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Every user meets its target.
    Feasible,
    /// Only users after `cutoff` (0-based) meet it; `cutoff` gets the leftover
    /// power and everyone before it is silenced.
    Partial { cutoff: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// α per user, in sorted (weakest-first) order.
    pub fractions: Vec<f64>,
    pub regime: Regime,
    /// Cell sum rate predicted by the closed form (bit/s/Hz).
    pub spectral_efficiency: f64,
}

impl PowerAllocation {
    /// Number of users the allocation is designed to serve at the target.
    pub fn qos_users(&self) -> usize {
        match self.regime {
            Regime::Feasible => self.fractions.len(),
            Regime::Partial { cutoff } => self.fractions.len() - cutoff - 1,
        }
    }
}

/// Minimum-power coefficients from the backward recursion
/// α̂_l = (2^Ω − 1)·(Σ_{k>l} α̂_k + A_l), strongest user first.
pub fn min_power_coefficients(composites: &[f64], omega: f64) -> Vec<f64> {
    let c = omega.exp2() - 1.0;
    let mut out = vec![0.0; composites.len()];
    let mut tail = 0.0;
    for l in (0..composites.len()).rev() {
        out[l] = c * (tail + composites[l]);
        tail += out[l];
    }
    out
}

/// Suffix sums S_l = Σ_{k≥l} α̂_k, with a trailing zero at index K.
pub fn suffix_sums(coefficients: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; coefficients.len() + 1];
    for l in (0..coefficients.len()).rev() {
        s[l] = s[l + 1] + coefficients[l];
    }
    s
}

/// Total power S_1 = (2^Ω − 1)·Σ_i 2^{Ω(i−1)}·A_i needed to give every user
/// exactly Ω. The instance is feasible iff this is at most 1.
pub fn qos_power(composites: &[f64], omega: f64) -> f64 {
    // Summed through the recursion so the feasibility test and the partial
    // allocation's cutoff search agree to the last bit.
    suffix_sums(&min_power_coefficients(composites, omega))[0]
}

pub fn is_feasible(composites: &[f64], omega: f64) -> bool {
    qos_power(composites, omega) <= 1.0
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::domain("QoS spectral efficiency", format!("must be non-negative, got {omega}")));
    }
    Ok(())
}

/// Sum-rate-optimal allocation when every user can meet Ω.
///
/// Walking from the weakest user, each gets just enough to reach Ω while
/// the remaining budget Q_l acts as its interference:
/// α_l = (1 − 2^{−Ω})·(Q_l + A_l), Q_{l+1} = Q_l − α_l, and the strongest
/// user takes what is left. Cell rate:
/// K·Ω + log2(1 + (1 − S_1)/(2^{KΩ}·A_K)).
pub fn allocate_feasible(composites: &[f64], omega: f64) -> Result<PowerAllocation> {
    check_omega(omega)?;
    check_order(composites)?;
    let k = composites.len();
    if k == 0 {
        return Err(Error::domain("cell", "has no users"));
    }
    let s1 = qos_power(composites, omega);
    if s1 > 1.0 {
        return Err(Error::domain(
            "allocation",
            format!("QoS needs {s1:.6} of the cell power; use the partial allocation"),
        ));
    }
    let share = 1.0 - (-omega).exp2();
    let mut fractions = vec![0.0; k];
    let mut remaining = 1.0;
    for l in 0..k - 1 {
        let a = share * (remaining + composites[l]);
        fractions[l] = a;
        remaining -= a;
    }
    fractions[k - 1] = remaining.max(0.0);
    let kf = k as f64;
    let spectral_efficiency = kf * omega + ((1.0 - s1) / ((kf * omega).exp2() * composites[k - 1])).ln_1p() / std::f64::consts::LN_2;
    Ok(PowerAllocation { fractions, regime: Regime::Feasible, spectral_efficiency })
}

/// Allocation when not every user can meet Ω. With S_j the suffix sums of
/// the minimum-power coefficients, the cutoff is u = max{j : S_j ≥ 1}:
/// users after u receive α̂, user u receives Δα = 1 − S_{u+1}, and the rest
/// get nothing. Cell rate: (K − u)·Ω + log2(1 + Δα/(1 − Δα + A_u)).
pub fn allocate_partial(composites: &[f64], omega: f64) -> Result<PowerAllocation> {
    check_omega(omega)?;
    check_order(composites)?;
    let k = composites.len();
    if k == 0 {
        return Err(Error::domain("cell", "has no users"));
    }
    let hat = min_power_coefficients(composites, omega);
    let s = suffix_sums(&hat);
    let Some(u) = (0..k).rev().find(|&j| s[j] >= 1.0) else {
        return Err(Error::domain("allocation", "every user can meet the target; use the feasible allocation"));
    };
    debug_assert!(s[u + 1] <= 1.0);
    let mut fractions = vec![0.0; k];
    fractions[u + 1..].copy_from_slice(&hat[u + 1..]);
    let delta = 1.0 - s[u + 1];
    fractions[u] = delta;
    let served = (k - u - 1) as f64;
    let spectral_efficiency = served * omega + (delta / (1.0 - delta + composites[u])).ln_1p() / std::f64::consts::LN_2;
    Ok(PowerAllocation { fractions, regime: Regime::Partial { cutoff: u }, spectral_efficiency })
}

/// Feasibility test followed by the matching closed form.
pub fn allocate(composites: &[f64], omega: f64) -> Result<PowerAllocation> {
    check_omega(omega)?;
    check_order(composites)?;
    if is_feasible(composites, omega) {
        allocate_feasible(composites, omega)
    } else {
        allocate_partial(composites, omega)
    }
}

/// α = 1/K for every user.
pub fn equal_fractions(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Whether a rate meets a target, allowing for rounding.
pub fn meets_target(rate: f64, target: f64) -> bool {
    rate >= target * (1.0 - QOS_TOLERANCE)
}

/// Sum of log2(1 + γ_l) over a cell (bit/s/Hz).
pub fn cell_spectral_efficiency(alphas: &[f64], composites: &[f64]) -> Result<f64> {
    Ok(sinrs(alphas, composites)?.into_iter().map(|g| rate(g, 1.0)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// SINR per cell and sorted user.
    pub sinr: Vec<Vec<f64>>,
    /// Rate per cell and sorted user (bit/s).
    pub user_rates: Vec<Vec<f64>>,
    pub qos_met: Vec<Vec<bool>>,
    /// Per-cell sums (bit/s).
    pub cell_rates: Vec<f64>,
    /// Network sum (bit/s).
    pub sum_rate: f64,
}

impl RateReport {
    pub fn qos_count(&self) -> usize {
        self.qos_met.iter().flatten().filter(|&&m| m).count()
    }

    pub fn user_count(&self) -> usize {
        self.qos_met.iter().map(Vec::len).sum()
    }
}

/// Per-user SINR, rate and QoS verdict, with cell and network sums.
/// `qos_rate` is in bit/s.
pub fn evaluate_network(composites: &[Vec<f64>], fractions: &[Vec<f64>], bandwidth: f64, qos_rate: f64) -> Result<RateReport> {
    if composites.len() != fractions.len() {
        return Err(Error::Dimension { what: "cell allocations", expected: composites.len(), got: fractions.len() });
    }
    let mut report = RateReport { sinr: vec![], user_rates: vec![], qos_met: vec![], cell_rates: vec![], sum_rate: 0.0 };
    for (a, alpha) in composites.iter().zip(fractions) {
        let g = sinrs(alpha, a)?;
        let r: Vec<f64> = g.iter().map(|&x| rate(x, bandwidth)).collect();
        let met = r.iter().map(|&x| meets_target(x, qos_rate)).collect();
        let cell: f64 = r.iter().sum();
        report.sum_rate += cell;
        report.cell_rates.push(cell);
        report.sinr.push(g);
        report.user_rates.push(r);
        report.qos_met.push(met);
    }
    Ok(report)
}
