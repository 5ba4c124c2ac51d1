//! Figure reproduction: runs the presets behind a figure, writes their
//! outputs and evaluates the figure's qualitative claims.

use anyhow::{bail, Result};

use nbundle_core::config::{preset, RunConfig};
use nbundle_core::Error;

use crate::checks::{self, Check};
use crate::output::OutputDir;
use crate::pipeline::{self, cycle_window, RunResult};
use crate::svg::{Curve, LinePlot};

pub const FIGURES: &[&str] = &["1d", "2", "3", "4", "5"];

pub fn figure_presets(id: &str) -> Result<&'static [&'static str]> {
    Ok(match id {
        "1d" => &["fig1d"],
        "2" => &["fig2a", "fig2b", "fig2c"],
        "3" => &["fig3"],
        "4" => &["fig4a", "fig4b"],
        "5" => &["fig5abc", "fig5de"],
        other => {
            return Err(Error::Config(format!(
                "unknown figure `{other}`; expected one of {}",
                FIGURES.join(", ")
            ))
            .into())
        }
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub traj: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(n) = self.traj {
            cfg.run.trajectories = n;
        }
    }
}

pub struct PresetRun {
    pub name: String,
    pub cfg: RunConfig,
    pub result: RunResult,
}

pub struct FigureRun {
    pub id: String,
    pub runs: Vec<PresetRun>,
    pub checks: Vec<Check>,
}

impl FigureRun {
    pub fn failed(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect()
    }

    /// Each preset under its own subdirectory, plus combined plots and
    /// `checks.txt`.
    pub fn write(&self, out: &mut OutputDir) -> Result<()> {
        for run in &self.runs {
            out.set_prefix(&run.name);
            pipeline::write_outputs(&run.cfg, &run.result, out)?;
        }
        out.set_prefix("");
        if self.id == "2" {
            let column = |r: &PresetRun| format!("P_g{}", r.cfg.model.bundle_n);
            let mut curves = Vec::new();
            for r in &self.runs {
                if let Some(m) = &r.result.master {
                    curves.push(Curve {
                        label: format!("κ = {}", r.cfg.model.kappa),
                        x: m.populations.grid(),
                        y: m.populations.column(&column(r))?,
                    });
                }
            }
            let svg = LinePlot {
                title: "P_|g,2⟩ for three cavity decay rates".into(),
                x_label: "ω_b t / k  (k = 1000)".into(),
                y_label: "P".into(),
                x_scale: 1000.0,
                curves,
            }
            .render();
            out.write("fig2_populations.svg", svg.as_bytes())?;
        }
        let mut text = String::new();
        for c in &self.checks {
            text.push_str(&c.to_string());
            text.push('\n');
        }
        out.write("checks.txt", text.as_bytes())?;
        Ok(())
    }
}

/// Runs every preset of figure `id` and evaluates its checks.
pub fn run_figure(id: &str, overrides: Overrides) -> Result<FigureRun> {
    let mut runs = Vec::new();
    for &name in figure_presets(id)? {
        let mut cfg = preset(name)?;
        overrides.apply(&mut cfg);
        let result = pipeline::compute(&cfg, cfg.run.trajectories, cfg.run.seed)?;
        runs.push(PresetRun {
            name: name.to_string(),
            cfg,
            result,
        });
    }
    let checks = figure_checks(id, &runs)?;
    Ok(FigureRun {
        id: id.to_string(),
        runs,
        checks,
    })
}

pub fn figure_checks(id: &str, runs: &[PresetRun]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for r in runs {
        if let Some(m) = &r.result.master {
            out.push(checks::invariants(&r.name, &m.invariants));
        }
    }
    match id {
        "1d" => {
            let r = &runs[0];
            let Some(m) = &r.result.master else { bail!("fig1d has no master run") };
            out.extend(checks::lossless_transfer(&m.populations, r.cfg.model.bundle_n));
            out.push(checks::stirap_ordering(&m.populations, r.cfg.model.bundle_n));
        }
        "2" => {
            let mut maxima = Vec::new();
            for r in runs {
                let Some(m) = &r.result.master else { bail!("{} has no master run", r.name) };
                let col = m.populations.column(&format!("P_g{}", r.cfg.model.bundle_n))?;
                maxima.push((r.cfg.model.kappa, col.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
            }
            out.push(checks::dissipative_ordering(&maxima));
        }
        "3" => {
            let r = &runs[0];
            out.push(checks::cascade_walk(&r.result.snapshots, r.cfg.model.bundle_n));
            bundle_checks(r, &mut out);
        }
        "4" => {
            for r in runs {
                let Some(t) = &r.result.trajectories else { bail!("{} has no trajectories", r.name) };
                let windows: Vec<(f64, f64)> =
                    (0..r.cfg.pulses.count).map(|c| cycle_window(&r.cfg, c)).collect();
                let mut c = checks::staircase(&t.records[0].observables, &windows, r.cfg.model.bundle_n);
                c.name = format!("{}.{}", r.name, c.name);
                out.push(c);
                bundle_checks(r, &mut out);
            }
        }
        "5" => {
            for r in runs {
                out.extend(checks::correlation_inequalities(&r.name, &r.result.correlations));
            }
        }
        _ => {
            figure_presets(id)?;
        }
    }
    Ok(out)
}

/// Bundle purity only means something for an ensemble.
fn bundle_checks(r: &PresetRun, out: &mut Vec<Check>) {
    if let Some(t) = &r.result.trajectories {
        if t.records.len() > 1 {
            out.push(checks::bundle_fraction(&r.name, &t.bundles));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_figure_is_config_error() {
        let e = figure_presets("9").unwrap_err();
        assert!(matches!(e.downcast_ref::<Error>(), Some(Error::Config(_))));
    }

    #[test]
    fn every_figure_preset_exists() {
        for id in FIGURES {
            for name in figure_presets(id).unwrap() {
                preset(name).unwrap();
            }
        }
    }
}
