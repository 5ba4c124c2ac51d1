//! Executes a [`RunConfig`]: master equation, correlations, trajectories and
//! snapshots, then renders everything into an [`OutputDir`].

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use nbundle_core::config::{CorrelationOperator, RunConfig};
use nbundle_core::hilbert::{DensityState, PureState, Qubit};
use nbundle_core::lindblad::{evolve_master_with, ChannelKind, InvariantSummary};
use nbundle_core::observables::{
    density_snapshot, g2_delayed_from, g2_series, locate_extremum_times, normal_moment, reduced_photon_state,
    symmetric_axis, wigner, DensitySnapshot, Extremum, PhotonOperator, PopulationColumns,
    TimeSeries, WignerField,
};
use nbundle_core::ode::uniform_grid;
use nbundle_core::trajectories::{
    bundle_statistics, run_ensemble_records, run_trajectory, BundleStatistics, EnsembleResult,
    TrajectoryRecord,
};

use crate::output::OutputDir;
use crate::svg::{Curve, HeatMap, LinePlot};

pub struct MasterRun {
    pub states: Vec<DensityState>,
    pub populations: TimeSeries,
    pub invariants: InvariantSummary,
}

pub struct OrderResult {
    pub n: usize,
    pub extremum: Extremum,
    /// Equal-time g_N^(2)(t, t); undefined points are omitted.
    pub equal: TimeSeries,
    /// t_sN, the extremum inside the configured cycle.
    pub t_star: f64,
    pub g_star: f64,
    /// g_N^(2)(t_sN, t_sN + τ) against τ.
    pub delayed: TimeSeries,
}

pub struct TrajectoryRun {
    pub records: Vec<TrajectoryRecord>,
    pub ensemble: EnsembleResult,
    pub bundles: BundleStatistics,
}

pub struct Snapshot {
    pub time: f64,
    pub density: DensitySnapshot,
    pub wigner: WignerField,
}

pub struct RunResult {
    pub master: Option<MasterRun>,
    pub correlations: Vec<OrderResult>,
    pub trajectories: Option<TrajectoryRun>,
    pub snapshots: Vec<Snapshot>,
}

/// Scalars reported by `run` and by every `sweep` row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    /// max_t P_{|g,N⟩}: master equation when available, else the ensemble mean.
    pub max_p_gn: f64,
    pub photon_jumps: Option<u64>,
    pub qubit_jumps: Option<u64>,
    pub trace_drift: Option<f64>,
    pub bundle_fraction: Option<f64>,
}

impl RunSummary {
    pub const HEADER: [&'static str; 5] = [
        "max_P_gN",
        "photon_jumps",
        "qubit_jumps",
        "trace_drift",
        "bundle_fraction",
    ];

    pub fn fields(&self) -> [String; 5] {
        let opt_u = |v: Option<u64>| v.map_or_else(|| "NA".into(), |v| v.to_string());
        let opt_f = |v: Option<f64>| v.map_or_else(|| "NA".into(), |v| format!("{v:.6e}"));
        [
            format!("{:.11e}", self.max_p_gn),
            opt_u(self.photon_jumps),
            opt_u(self.qubit_jumps),
            opt_f(self.trace_drift),
            opt_f(self.bundle_fraction),
        ]
    }
}

fn initial_state(cfg: &RunConfig) -> Result<PureState> {
    let sys = cfg.system()?;
    Ok(PureState::basis(&sys.trunc, Qubit::Ground, 0))
}

pub fn run_master(cfg: &RunConfig) -> Result<MasterRun> {
    let sys = cfg.system()?;
    let diss = cfg.dissipators()?;
    let settings = cfg.integrator()?;
    let rho0 = initial_state(cfg)?.to_density(cfg.solver.t_start);
    let cols = PopulationColumns::new(sys.trunc, sys.bundle_n);
    let mut populations = cols.series();
    let mut states = Vec::with_capacity(settings.grid.len());
    let invariants = evolve_master_with(
        &rho0,
        (cfg.solver.t_start, cfg.solver.t_end),
        &sys,
        &diss,
        &settings,
        |st| {
            populations.push(st.time(), &cols.evaluate(st)?)?;
            states.push(st.clone());
            Ok(())
        },
    )?;
    Ok(MasterRun {
        states,
        populations,
        invariants,
    })
}

/// Search window of the configured pulse cycle.
pub fn cycle_window(cfg: &RunConfig, cycle: usize) -> (f64, f64) {
    let p = &cfg.pulses;
    let start = if cycle == 0 { cfg.solver.t_start } else { p.cycle_start(cycle) };
    let end = if cycle + 1 < p.count {
        p.cycle_start(cycle + 1)
    } else {
        cfg.solver.t_end
    };
    (start, end.min(cfg.solver.t_end))
}

pub fn run_correlations(cfg: &RunConfig, master: &MasterRun) -> Result<Vec<OrderResult>> {
    let Some(sec) = &cfg.correlations else {
        return Ok(Vec::new());
    };
    let sys = cfg.system()?;
    let diss = cfg.dissipators()?;
    let settings = cfg.integrator()?;
    let window = cycle_window(cfg, sec.cycle);
    let taus = uniform_grid(0.0, sec.tau_max, sec.tau_step);
    let op = match sec.operator {
        CorrelationOperator::Bare => PhotonOperator::Bare,
        CorrelationOperator::Dressed => PhotonOperator::Dressed(sys.lambda),
    };
    let in_window = |t: f64| t >= window.0 && t <= window.1;
    let mut out = Vec::with_capacity(sec.orders.len());
    for &n in &sec.orders {
        let equal = g2_series(&master.states, &sys.trunc, n, op)?;
        let column = format!("g2_N{n}");
        let extremum = if n == 1 { Extremum::Max } else { Extremum::Min };

        let weights = master
            .states
            .iter()
            .map(|s| Ok((s.time(), normal_moment(s, &sys.trunc, n, op)?)))
            .collect::<Result<Vec<_>>>()?;
        let peak = weights
            .iter()
            .filter(|(t, _)| in_window(*t))
            .map(|w| w.1)
            .fold(0.0, f64::max);
        let mut candidates = TimeSeries::new([column.clone()]);
        for (&t, &g) in equal.grid().iter().zip(equal.column(&column)?) {
            let w = weights.iter().find(|w| w.0 == t).map_or(0.0, |w| w.1);
            // Bunching peaks sit on the edges of a transfer where the
            // moments are small, so only the antibunching search is limited.
            if in_window(t) && (extremum == Extremum::Max || w >= sec.support * peak) {
                candidates.push(t, &[g])?;
            }
        }
        let t_star = locate_extremum_times(&candidates, &column, window, extremum)?;
        let idx = equal.grid().iter().position(|&t| t == t_star).expect("extremum on grid");
        let g_star = equal.column(&column)?[idx];
        let rho = master
            .states
            .iter()
            .find(|s| s.time() == t_star)
            .expect("extremum time is a master grid point");
        let delayed = g2_delayed_from(rho, &taus, n, op, &sys, &diss, &settings)?;
        out.push(OrderResult {
            n,
            extremum,
            equal,
            t_star,
            g_star,
            delayed,
        });
    }
    Ok(out)
}

pub fn run_trajectories(cfg: &RunConfig, n_traj: usize, seed: u64) -> Result<TrajectoryRun> {
    let sys = cfg.system()?;
    let diss = cfg.dissipators()?;
    let settings = cfg.integrator()?;
    let cols = PopulationColumns::new(sys.trunc, sys.bundle_n);
    let span = (cfg.solver.t_start, cfg.solver.t_end);
    let records =
        run_ensemble_records(&initial_state(cfg)?, span, &sys, &diss, &settings, &cols, n_traj, seed)?;
    let ensemble = EnsembleResult::from_records(&records, diss.channels.len())?;
    let window = if sys.kappa > 0.0 {
        cfg.run.bundle_window / sys.kappa
    } else {
        f64::INFINITY
    };
    let bundles = bundle_statistics(&records, &sys, &diss, window, span.1)?;
    Ok(TrajectoryRun {
        records,
        ensemble,
        bundles,
    })
}

/// Normalized state of the trajectory with `seed` at time `t`, obtained by
/// replaying it over `[t_start, t]`. The replay takes the same steps and
/// draws, so the jump record up to `t` is unchanged.
pub fn trajectory_state_at(cfg: &RunConfig, seed: u64, t: f64) -> Result<PureState> {
    let sys = cfg.system()?;
    let diss = cfg.dissipators()?;
    let settings = cfg.integrator()?.with_grid(Vec::new());
    let cols = PopulationColumns::new(sys.trunc, sys.bundle_n);
    let rec = run_trajectory(
        &initial_state(cfg)?,
        (cfg.solver.t_start, t),
        &sys,
        &diss,
        &settings,
        &cols,
        seed,
    )?;
    Ok(rec.final_state)
}

/// Instants around the first bundle of a trajectory: just before the first
/// photon jump, between consecutive jumps, and just after the N-th.
pub fn bundle_instants(cfg: &RunConfig, record: &TrajectoryRecord) -> Result<Option<Vec<f64>>> {
    let sys = cfg.system()?;
    let diss = cfg.dissipators()?;
    let Some(photon) = diss.channel_of(ChannelKind::PhotonEmission) else {
        return Ok(None);
    };
    let (from, to) = cycle_window(cfg, 0);
    let times: Vec<f64> = record.jumps_in(photon, from, to).map(|j| j.time).collect();
    let n = sys.bundle_n;
    if times.len() < n {
        return Ok(None);
    }
    let times = &times[..n];
    let mut out = vec![times[0] - 1.0];
    out.extend(times.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(times[n - 1] + 1.0);
    Ok(Some(out))
}

fn snapshot_of(cfg: &RunConfig, rho: &DensityState) -> Result<Snapshot> {
    let sys = cfg.system()?;
    let (half, points) = cfg
        .snapshots
        .as_ref()
        .map_or((3.0, 101), |s| (s.wigner_half_width, s.wigner_points));
    let axis = symmetric_axis(half, points);
    let rho_b = reduced_photon_state(rho, &sys.trunc)?;
    Ok(Snapshot {
        time: rho.time(),
        density: density_snapshot(rho, &sys.trunc)?,
        wigner: wigner(rho_b.operator(), &axis, &axis),
    })
}

pub fn compute(cfg: &RunConfig, n_traj: usize, seed: u64) -> Result<RunResult> {
    let master = if cfg.run.pipeline.master() {
        Some(run_master(cfg)?)
    } else {
        None
    };
    let correlations = match &master {
        Some(m) => run_correlations(cfg, m)?,
        None => Vec::new(),
    };
    let trajectories = if cfg.run.pipeline.trajectories() {
        Some(run_trajectories(cfg, n_traj, seed)?)
    } else {
        None
    };

    let mut snapshots = Vec::new();
    if let Some(sec) = &cfg.snapshots {
        if let Some(tr) = &trajectories {
            let rec = &tr.records[0];
            let times = if sec.times.is_empty() {
                bundle_instants(cfg, rec)?.unwrap_or_default()
            } else {
                sec.times.clone()
            };
            for t in times {
                let psi = trajectory_state_at(cfg, rec.seed, t)?;
                snapshots.push(snapshot_of(cfg, &psi.to_density(t))?);
            }
        } else if let Some(m) = &master {
            for &t in &sec.times {
                let nearest = m
                    .states
                    .iter()
                    .min_by(|a, b| (a.time() - t).abs().total_cmp(&(b.time() - t).abs()))
                    .expect("non-empty grid");
                snapshots.push(snapshot_of(cfg, nearest)?);
            }
        }
    }
    Ok(RunResult {
        master,
        correlations,
        trajectories,
        snapshots,
    })
}

pub fn summarize(cfg: &RunConfig, result: &RunResult) -> Result<RunSummary> {
    let column = format!("P_g{}", cfg.model.bundle_n);
    let max_of = |s: &TimeSeries| -> Result<f64> {
        Ok(s.column(&column)?.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    let diss = cfg.dissipators()?;
    let max_p_gn = match (&result.master, &result.trajectories) {
        (Some(m), _) => max_of(&m.populations)?,
        (None, Some(t)) => max_of(&t.ensemble.mean)?,
        (None, None) => f64::NAN,
    };
    let count = |kind| {
        result.trajectories.as_ref().and_then(|t| {
            diss.channel_of(kind)
                .map(|c| t.ensemble.jump_counts.get(c).copied().unwrap_or(0))
        })
    };
    Ok(RunSummary {
        max_p_gn,
        photon_jumps: count(ChannelKind::PhotonEmission),
        qubit_jumps: count(ChannelKind::QubitDecay),
        trace_drift: result.master.as_ref().map(|m| m.invariants.max_trace_drift),
        bundle_fraction: result.trajectories.as_ref().map(|t| t.bundles.fraction()),
    })
}

/// Axis scaling in the style of the figures: long runs are shown in units
/// of 1000/ω_b.
pub fn time_axis(cfg: &RunConfig) -> (f64, String) {
    if cfg.solver.t_end - cfg.solver.t_start >= 5000.0 {
        (1000.0, "ω_b t / k  (k = 1000)".into())
    } else {
        (1.0, "ω_b t".into())
    }
}

pub fn series_plot(
    title: &str,
    series: &TimeSeries,
    columns: &[String],
    y_label: &str,
    x_scale: f64,
    x_label: &str,
) -> Result<String> {
    let mut curves = Vec::with_capacity(columns.len());
    for c in columns {
        curves.push(Curve {
            label: c.clone(),
            x: series.grid(),
            y: series.column(c)?,
        });
    }
    Ok(LinePlot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        x_scale,
        curves,
    }
    .render())
}

fn sec_operator(cfg: &RunConfig) -> &'static str {
    match cfg.correlations.as_ref().map(|c| c.operator) {
        Some(CorrelationOperator::Dressed) => "b + lambda sigma_+ sigma_-",
        _ => "b",
    }
}

fn ground_columns(cfg: &RunConfig) -> Vec<String> {
    (0..=cfg.model.bundle_n).map(|n| format!("P_g{n}")).collect()
}

/// Writes every product of `result` into `out`.
pub fn write_outputs(cfg: &RunConfig, result: &RunResult, out: &mut OutputDir) -> Result<()> {
    let (x_scale, x_label) = time_axis(cfg);
    if let Some(m) = &result.master {
        out.write_series("populations", &m.populations, Some(cfg), json!({ "solver": "master equation", "invariants": m.invariants }))?;
        let svg = series_plot(
            "State populations (master equation)",
            &m.populations,
            &ground_columns(cfg),
            "P",
            x_scale,
            &x_label,
        )?;
        out.write("populations.svg", svg.as_bytes())?;
    }
    for o in &result.correlations {
        let name = format!("g2_equal_N{}", o.n);
        out.write_series(
            &name,
            &o.equal,
            Some(cfg),
            json!({
                "operator": sec_operator(cfg),
                "floor": nbundle_core::observables::CORRELATION_FLOOR,
                "extremum": if o.extremum == Extremum::Max { "max" } else { "min" },
                "t_star": o.t_star,
                "g_star": o.g_star,
            }),
        )?;
        out.write(
            &format!("{name}.svg"),
            series_plot(
                &format!("Equal-time g_{}^(2)(t,t)", o.n),
                &o.equal,
                &o.equal.names().to_vec(),
                "g2",
                x_scale,
                &x_label,
            )?
            .as_bytes(),
        )?;
        let name = format!("g2_delayed_N{}", o.n);
        out.write_series(
            &name,
            &o.delayed,
            Some(cfg),
            json!({ "t_star": o.t_star, "grid": "tau" }),
        )?;
        out.write(
            &format!("{name}.svg"),
            series_plot(
                &format!("g_{}^(2)(t*, t* + τ), t* = {}", o.n, o.t_star),
                &o.delayed,
                &o.delayed.names().to_vec(),
                "g2",
                1.0,
                "ω_b τ",
            )?
            .as_bytes(),
        )?;
    }
    if let Some(t) = &result.trajectories {
        let mut jsonl = Vec::new();
        for r in &t.records {
            r.write_jsonl(&mut jsonl)?;
        }
        out.write("trajectories.jsonl", &jsonl)?;
        let first = &t.records[0];
        out.write_series(
            "trajectory_0",
            &first.observables,
            Some(cfg),
            json!({ "trajectory_seed": first.seed, "jumps": first.jumps }),
        )?;
        let mut cols = ground_columns(cfg);
        out.write(
            "trajectory_0.svg",
            series_plot("Quantum trajectory", &first.observables, &cols, "P", x_scale, &x_label)?
                .as_bytes(),
        )?;
        out.write(
            "trajectory_0_photons.svg",
            series_plot(
                "Quantum trajectory, mean photon number",
                &first.observables,
                &["n_b".to_string()],
                "<b†b>",
                x_scale,
                &x_label,
            )?
            .as_bytes(),
        )?;
        out.write_series(
            "ensemble_mean",
            &t.ensemble.mean,
            Some(cfg),
            json!({ "n_traj": t.ensemble.n_traj, "jump_counts": t.ensemble.jump_counts }),
        )?;
        out.write_series(
            "ensemble_stderr",
            &t.ensemble.std_err,
            Some(cfg),
            json!({ "n_traj": t.ensemble.n_traj }),
        )?;
        cols.push("n_b".into());
        out.write_json("bundles.json", &t.bundles)?;
    }
    for (k, s) in result.snapshots.iter().enumerate() {
        let mut buf = Vec::new();
        s.density.write_csv(&mut buf)?;
        out.write(&format!("snapshot_{k}_density.csv"), &buf)?;
        out.write(
            &format!("snapshot_{k}_density.svg"),
            HeatMap {
                title: format!("|ρ| at ω_b t = {:.1} (dominant {})", s.time, s.density.dominant_diagonal()),
                values: &s.density.magnitudes,
                row_labels: s.density.labels.clone(),
                col_labels: s.density.labels.clone(),
                origin_lower: false,
            }
            .render()
            .as_bytes(),
        )?;
        let mut buf = Vec::new();
        s.wigner.write_csv(&mut buf)?;
        out.write(&format!("snapshot_{k}_wigner.csv"), &buf)?;
        let labels = |axis: &[f64]| axis.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>();
        out.write(
            &format!("snapshot_{k}_wigner.svg"),
            HeatMap {
                title: format!("W_b(α) at ω_b t = {:.1}", s.time),
                values: &s.wigner.values,
                row_labels: labels(&s.wigner.im),
                col_labels: labels(&s.wigner.re),
                origin_lower: true,
            }
            .render()
            .as_bytes(),
        )?;
        let meta = out.sidecar(
            &format!("snapshot_{k}_wigner.csv"),
            &["re".into(), "im".into(), "W".into()],
            Some(cfg),
            json!({
                "time": s.time,
                "convention": WignerField::CONVENTION,
                "integral": s.wigner.integral(),
                "dominant_diagonal": s.density.dominant_diagonal(),
            }),
        );
        out.write_json(&format!("snapshot_{k}.json"), &meta)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nbundle_core::config::preset;

    #[test]
    fn windows_follow_cycles() {
        let cfg = preset("fig5abc").unwrap();
        let (a, b) = cycle_window(&cfg, 1);
        assert_eq!(a, cfg.pulses.cycle_start(1));
        assert_eq!(b, cfg.pulses.cycle_start(2));
        let (_, end) = cycle_window(&cfg, 2);
        assert_eq!(end, cfg.solver.t_end);
    }

    #[test]
    fn summary_fields_use_na() {
        let s = RunSummary {
            max_p_gn: 0.5,
            photon_jumps: None,
            qubit_jumps: Some(3),
            trace_drift: None,
            bundle_fraction: None,
        };
        assert_eq!(s.fields()[1], "NA");
        assert_eq!(s.fields()[2], "3");
    }
}
