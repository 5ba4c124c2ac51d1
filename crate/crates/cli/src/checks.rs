//! Physics checks shared by `reproduce` and the acceptance suite. Every
//! threshold lives here as a named constant.

use std::fmt;

use nbundle_core::lindblad::InvariantSummary;
use nbundle_core::observables::{Extremum, TimeSeries};
use nbundle_core::trajectories::BundleStatistics;

use crate::pipeline::{OrderResult, Snapshot};

/// Final P_{|g,N⟩} required after a lossless transfer.
pub const TRANSFER_FINAL_MIN: f64 = 0.98;
/// Lower bound on Σ_{n≤N} P_{|g,n⟩} at every grid time of a lossless transfer.
pub const CHAIN_GROUND_MIN: f64 = 0.99;
/// Fraction of trajectories whose every cycle is one clean N-photon bundle.
pub const BUNDLE_FRACTION_MIN: f64 = 0.9;
pub const TRACE_DRIFT_MAX: f64 = 1e-8;
pub const HERMITICITY_MAX: f64 = 1e-10;
pub const EIGENVALUE_FLOOR: f64 = -1e-8;
/// g(t*, t*) and the τ = 0 point of the delayed scan must coincide to this.
pub const TAU_ZERO_TOL: f64 = 1e-8;
/// A displayed trajectory "touches" N photons when ⟨b†b⟩ comes this close.
pub const STAIRCASE_TOL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

fn column<'a>(s: &'a TimeSeries, name: &str) -> &'a [f64] {
    s.column(name).unwrap_or(&[])
}

/// Final P_{|g,N⟩} and the running minimum of Σ_{n≤N} P_{|g,n⟩}.
pub fn lossless_transfer(pop: &TimeSeries, n: usize) -> Vec<Check> {
    let last = column(pop, &format!("P_g{n}")).last().copied().unwrap_or(f64::NAN);
    let mut worst = (f64::INFINITY, f64::NAN);
    for (i, &t) in pop.grid().iter().enumerate() {
        let sum: f64 = (0..=n).map(|k| column(pop, &format!("P_g{k}"))[i]).sum();
        if sum < worst.0 {
            worst = (sum, t);
        }
    }
    vec![
        Check::new(
            "transfer.final",
            last >= TRANSFER_FINAL_MIN,
            format!("final P_g{n} = {last:.5} (need >= {TRANSFER_FINAL_MIN})"),
        ),
        Check::new(
            "transfer.ground_chain",
            worst.0 >= CHAIN_GROUND_MIN,
            format!(
                "min_t sum_(n<={n}) P_gn = {:.5} at t = {} (need >= {CHAIN_GROUND_MIN})",
                worst.0, worst.1
            ),
        ),
    ]
}

/// P_{|g,1⟩} peaks after P_{|g,0⟩} starts to fall and before P_{|g,N⟩}
/// has risen to 90% of its final value.
pub fn stirap_ordering(pop: &TimeSeries, n: usize) -> Check {
    let grid = pop.grid();
    let (p0, p1, pn) = (
        column(pop, "P_g0"),
        column(pop, "P_g1"),
        column(pop, &format!("P_g{n}")),
    );
    let decline = grid.iter().zip(p0).find(|(_, &p)| p < 0.99).map(|(&t, _)| t);
    let final_n = pn.last().copied().unwrap_or(0.0);
    let rise = grid.iter().zip(pn).find(|(_, &p)| p >= 0.9 * final_n).map(|(&t, _)| t);
    let peak = grid
        .iter()
        .zip(p1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(&t, _)| t);
    let ok = matches!((decline, peak, rise), (Some(a), Some(b), Some(c)) if a <= b && b < c);
    Check::new(
        "transfer.intermediate_peak",
        ok,
        format!("P_g0 falls at {decline:?}, P_g1 peaks at {peak:?}, P_g{n} rises at {rise:?}"),
    )
}

/// `maxima` as (κ, max_t P_{|g,N⟩}) pairs; the maximum must shrink strictly
/// as κ grows and stay below one.
pub fn dissipative_ordering(maxima: &[(f64, f64)]) -> Check {
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = sorted.windows(2).all(|w| w[1].1 < w[0].1);
    let below_one = sorted.iter().all(|&(_, m)| m < 1.0);
    let detail = sorted
        .iter()
        .map(|(k, m)| format!("kappa {k}: {m:.5}"))
        .collect::<Vec<_>>()
        .join(", ");
    Check::new("dissipation.max_population_order", decreasing && below_one, detail)
}

/// Bunching of single photons and antibunching between N-photon bundles.
pub fn correlation_inequalities(label: &str, orders: &[OrderResult]) -> Vec<Check> {
    let mut out = Vec::new();
    for o in orders {
        let column = format!("g2_N{}", o.n);
        let grid = o.delayed.grid();
        let values = column_or_empty(&o.delayed, &column);
        let later: Vec<(f64, f64)> = grid
            .iter()
            .zip(values)
            .filter(|(&tau, _)| tau > 0.0)
            .map(|(&t, &v)| (t, v))
            .collect();
        let (equal_ok, order_ok, word) = match o.extremum {
            Extremum::Max => (
                o.g_star > 1.0,
                !later.is_empty() && later.iter().all(|&(_, g)| o.g_star > g),
                ("> 1", ">"),
            ),
            Extremum::Min => (
                o.g_star < 1.0,
                !later.is_empty() && later.iter().all(|&(_, g)| o.g_star < g),
                ("< 1", "<"),
            ),
        };
        let bound = match o.extremum {
            Extremum::Max => later.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
            Extremum::Min => later.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        };
        out.push(Check::new(
            format!("{label}.g{}_equal_time", o.n),
            equal_ok,
            format!("g_{}(t*,t*) = {:.5} at t* = {} (need {})", o.n, o.g_star, o.t_star, word.0),
        ));
        out.push(Check::new(
            format!("{label}.g{}_delayed", o.n),
            order_ok,
            format!(
                "g_{}(t*,t*) = {:.5} {} every g_{}(t*,t*+tau) over {} delays (extreme {:.5})",
                o.n,
                o.g_star,
                word.1,
                o.n,
                later.len(),
                bound
            ),
        ));
        let zero = grid.first().filter(|&&t| t == 0.0).map(|_| values[0]);
        let coincide = zero.is_some_and(|z| (z - o.g_star).abs() <= TAU_ZERO_TOL * o.g_star.abs().max(1.0));
        out.push(Check::new(
            format!("{label}.g{}_tau_zero", o.n),
            coincide,
            format!("delayed scan at tau = 0: {zero:?} vs equal-time {:.10}", o.g_star),
        ));
    }
    out
}

fn column_or_empty<'a>(s: &'a TimeSeries, name: &str) -> &'a [f64] {
    s.column(name).unwrap_or(&[])
}

/// Dominant diagonal entries walk |g,N⟩ → … → |g,0⟩.
pub fn cascade_walk(snapshots: &[Snapshot], n: usize) -> Check {
    let seen: Vec<&str> = snapshots.iter().map(|s| s.density.dominant_diagonal()).collect();
    let expected: Vec<String> = (0..=n).rev().map(|k| format!("g,{k}")).collect();
    Check::new(
        "cascade.snapshot_walk",
        seen.len() == expected.len() && seen.iter().zip(&expected).all(|(a, b)| a == b),
        format!("dominant entries {seen:?}, expected {expected:?}"),
    )
}

/// Each cycle window of a displayed trajectory reaches ⟨b†b⟩ ≈ N.
pub fn staircase(observables: &TimeSeries, windows: &[(f64, f64)], n: usize) -> Check {
    let nb = column(observables, "n_b");
    let peaks: Vec<f64> = windows
        .iter()
        .map(|&(a, b)| {
            observables
                .grid()
                .iter()
                .zip(nb)
                .filter(|(&t, _)| t >= a && t < b)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Check::new(
        "trajectory.staircase",
        peaks.iter().all(|&p| p >= n as f64 - STAIRCASE_TOL),
        format!("per-cycle max <b+b> = {peaks:.3?} (need >= {})", n as f64 - STAIRCASE_TOL),
    )
}

pub fn bundle_fraction(label: &str, stats: &BundleStatistics) -> Check {
    let f = stats.fraction();
    Check::new(
        format!("{label}.bundle_fraction"),
        f >= BUNDLE_FRACTION_MIN,
        format!(
            "{}/{} trajectories with exactly {} clustered photon jumps in every cycle ({:.3}, need >= {BUNDLE_FRACTION_MIN}); per-cycle histogram {:?}; qubit jumps {}",
            stats.conforming, stats.trajectories, stats.bundle_n, f, stats.histogram, stats.qubit_jumps
        ),
    )
}

pub fn invariants(label: &str, s: &InvariantSummary) -> Check {
    Check::new(
        format!("{label}.invariants"),
        s.max_trace_drift < TRACE_DRIFT_MAX
            && s.max_hermiticity < HERMITICITY_MAX
            && s.min_eigenvalue >= EIGENVALUE_FLOOR,
        format!(
            "trace drift {:.2e}, hermiticity {:.2e}, min eigenvalue {:.2e} over {} points",
            s.max_trace_drift, s.max_hermiticity, s.min_eigenvalue, s.points
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_needs_strict_decrease() {
        assert!(dissipative_ordering(&[(0.0008, 0.7), (0.0004, 0.8), (0.0006, 0.75)]).passed);
        assert!(!dissipative_ordering(&[(0.0004, 0.8), (0.0006, 0.8)]).passed);
        assert!(!dissipative_ordering(&[(0.0004, 1.0)]).passed);
    }

    #[test]
    fn transfer_checks() {
        let mut s = TimeSeries::new(["P_g0", "P_g1", "P_g2"]);
        s.push(0.0, &[1.0, 0.0, 0.0]).unwrap();
        s.push(1.0, &[0.4, 0.58, 0.0]).unwrap();
        s.push(2.0, &[0.0, 0.01, 0.985]).unwrap();
        let c = lossless_transfer(&s, 2);
        assert!(c[0].passed);
        assert!(!c[1].passed);
        assert!(stirap_ordering(&s, 2).passed);
    }

    #[test]
    fn display_format() {
        let c = Check::new("x", false, "y");
        assert_eq!(c.to_string(), "FAIL x: y");
    }
}
