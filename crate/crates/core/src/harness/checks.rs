//! Pass/fail assertions on study outputs, shared by the CLI `--check` flag and the acceptance tests.

use std::f64::consts::PI;
use std::fmt;

use crate::harness::barry_mercer::{correlation, oscillation_indicator, BarryMercer, Profile, Snapshot};
use crate::harness::convergence::ErrorRecord;

/// Relative conservation residual accepted as machine precision.
pub const FLUX_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Spatial study: both EOCs on the finest pair at least `k + 1 - 0.25`.
pub fn check_space_convergence(records: &[ErrorRecord], k: usize, label: &str) -> Vec<Check> {
    let target = k as f64 + 0.75;
    let mut out = Vec::new();
    match records.last() {
        Some(ErrorRecord { pressure_eoc: Some(pe), displacement_eoc: Some(de), .. }) => {
            out.push(Check::new(
                format!("{label} spatial EOC"),
                *pe >= target && *de >= target,
                format!("pressure {pe:.3}, displacement {de:.3}, required >= {target:.2}"),
            ));
        }
        _ => out.push(Check::new(format!("{label} spatial EOC"), false, "needs at least two levels")),
    }
    out.extend(check_fluxes(records, label));
    out
}

/// Temporal study: EOC in `tau` on the finest pair within `[1.8, 2.2]`.
pub fn check_time_convergence(records: &[ErrorRecord], label: &str) -> Vec<Check> {
    let mut out = Vec::new();
    match records.last() {
        Some(ErrorRecord { pressure_eoc: Some(pe), displacement_eoc: Some(de), .. }) => {
            let ok = |r: f64| (1.8..=2.2).contains(&r);
            out.push(Check::new(
                format!("{label} temporal EOC"),
                ok(*pe) && ok(*de),
                format!("pressure {pe:.3}, displacement {de:.3}, required in [1.8, 2.2]"),
            ));
        }
        _ => out.push(Check::new(format!("{label} temporal EOC"), false, "needs at least two step sizes")),
    }
    out.extend(check_fluxes(records, label));
    out
}

fn check_fluxes(records: &[ErrorRecord], label: &str) -> Option<Check> {
    let worst: Vec<f64> = records.iter().filter_map(|r| r.max_flux_residual).collect();
    if worst.is_empty() {
        return None;
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    Some(Check::new(
        format!("{label} conservation"),
        max <= FLUX_TOLERANCE,
        format!("largest relative residual {max:.2e}, required <= {FLUX_TOLERANCE:e}"),
    ))
}

/// Sample with the largest magnitude.
pub fn dominant_peak(profile: &Profile) -> (f64, f64) {
    profile
        .s
        .iter()
        .zip(&profile.values)
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map_or((f64::NAN, 0.0), |(s, v)| (*s, *v))
}

/// Profile shape checks for the Barry–Mercer snapshots.
///
/// Every snapshot must be free of spurious extrema outside `2h` of the source.
/// Snapshots where the source is at least half its amplitude must peak within
/// `2h` of the source with the sign of the source. Pairs half a period apart
/// must be anti-correlated.
pub fn check_barry_mercer(snapshots: &[Snapshot], case: &BarryMercer, h: f64, tol: f64) -> Vec<Check> {
    let mut out = Vec::new();
    let exclusion = 2.0 * h;
    for snap in snapshots {
        let name = format!("t_hat={:.4} (step {})", snap.t_hat, snap.step);
        let osc = oscillation_indicator(&snap.profile, &case.source, exclusion, tol);
        out.push(Check::new(
            format!("{name} oscillations"),
            osc.extrema == 0,
            format!("{} spurious extrema, largest reversal {:.2e} of peak (tol {tol:e})", osc.extrema, osc.max_amplitude),
        ));
        let source = snap.t_hat.sin();
        if source.abs() >= 0.5 {
            let (s, v) = dominant_peak(&snap.profile);
            let dist = std::f64::consts::SQRT_2 * (s - 0.5 * (case.source.x + case.source.y)).abs();
            out.push(Check::new(
                format!("{name} peak"),
                v.signum() == source.signum() && dist <= exclusion,
                format!("peak {v:.4e} at s = {s:.4}, distance {dist:.3e} from source"),
            ));
        }
    }
    for (i, a) in snapshots.iter().enumerate() {
        for b in &snapshots[i + 1..] {
            let shift = (b.t_hat - a.t_hat).abs();
            if (shift - PI).abs() < 0.05 {
                let c = correlation(&a.profile.values, &b.profile.values);
                out.push(Check::new(
                    format!("t_hat={:.4} vs {:.4} antisymmetry", a.t_hat, b.t_hat),
                    c <= -0.95,
                    format!("correlation {c:.6}, required <= -0.95"),
                ));
            }
        }
    }
    out
}
