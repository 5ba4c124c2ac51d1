//! Run configuration: the TOML schema, its validation, and the figure presets.
//!
//! ```toml
//! [model]
//! auto_lambda_N = 2      # or `lambda = 0.765`
//! kappa = 0.0
//! gamma = 0.0
//! n_max = 16
//! bundle_N = 2
//! # delta1, delta2 default to the resonance conditions
//!
//! [pulses]
//! amp = 0.05
//! sigma = 180.0
//! t1 = 1000.0
//! t2 = 750.0
//! period = 10000.0
//! count = 1
//!
//! [solver]
//! t_end = 2000.0
//! ```
//!
//! Every value is dimensionless with ω_b = 1. For ω_b = 2π × 5 GHz a time of
//! 1000 is about 32 ns and κ = 0.0006 is 2π × 3 MHz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::FockTruncation;
use crate::lindblad::DissipatorSet;
use crate::model::{lambda_n, PulseSchedule, SystemConfig};
use crate::ode::{uniform_grid, IntegratorSettings};

const DEFAULT_REL_TOL: f64 = IntegratorSettings::DEFAULT_REL_TOL;
const DEFAULT_ABS_TOL: f64 = IntegratorSettings::DEFAULT_ABS_TOL;

/// Bracketing tolerance used when the coupling is given as `auto_lambda_N`.
pub const AUTO_LAMBDA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    /// λ/ω_b given directly.
    Fixed(f64),
    /// λ = λ_N, the smallest root of the bundle condition.
    Auto(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Master,
    Trajectories,
    Both,
}

impl Pipeline {
    pub fn master(self) -> bool {
        matches!(self, Pipeline::Master | Pipeline::Both)
    }

    pub fn trajectories(self) -> bool {
        matches!(self, Pipeline::Trajectories | Pipeline::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub coupling: Coupling,
    pub omega0: Option<f64>,
    pub kappa: f64,
    pub gamma: f64,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub n_max: usize,
    pub bundle_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Defaults to σ/10.
    pub max_step: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
    /// Output grid spacing.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub pipeline: Pipeline,
    pub trajectories: usize,
    pub seed: u64,
    /// Photon-jump window for bundle statistics, in units of 1/κ.
    pub bundle_window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationOperator {
    /// The resonator `b`.
    Bare,
    /// `b + λσ₊σ₋`, the dressed jump operator.
    Dressed,
}

/// Equal-time and delayed g_N^(2) for a list of bundle sizes N.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSection {
    pub orders: Vec<usize>,
    /// Pulse cycle in which the extrema t_sN are searched.
    pub cycle: usize,
    pub tau_max: f64,
    pub tau_step: f64,
    pub operator: CorrelationOperator,
    /// For N ≥ 2, t_sN is only searched where ⟨A†ᴺAᴺ⟩ is at least this
    /// fraction of its peak in the cycle. Elsewhere g_N is a ratio of two
    /// tiny numbers and dominated by integration error.
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSection {
    /// Fixed instants; when empty the trajectory pipeline picks instants
    /// around the first bundle of the displayed trajectory.
    pub times: Vec<f64>,
    pub wigner_half_width: f64,
    pub wigner_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSection {
    /// k_B T_b / ħω_b
    pub t_b: f64,
    /// k_B T_σ / ħω_b
    pub t_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSection,
    pub pulses: PulseSchedule,
    pub solver: SolverSection,
    pub run: RunSection,
    pub correlations: Option<CorrelationSection>,
    pub snapshots: Option<SnapshotSection>,
    pub thermal: Option<ThermalSection>,
}

// On-disk form. Everything is optional so that one pass can report every
// missing field at once.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<RawModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pulses: Option<RawPulses>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<RawSolver>,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<RawRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correlations: Option<RawCorrelations>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshots: Option<RawSnapshots>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thermal: Option<RawThermal>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(rename = "auto_lambda_N", skip_serializing_if = "Option::is_none")]
    auto_lambda_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
    #[serde(rename = "bundle_N", skip_serializing_if = "Option::is_none")]
    bundle_n: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulses {
    #[serde(skip_serializing_if = "Option::is_none")]
    amp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    pipeline: Option<Pipeline>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectories: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bundle_window: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorrelations {
    #[serde(skip_serializing_if = "Option::is_none")]
    orders: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cycle: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    operator: Option<CorrelationOperator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    support: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSnapshots {
    #[serde(skip_serializing_if = "Option::is_none")]
    times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wigner_half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wigner_points: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThermal {
    #[serde(skip_serializing_if = "Option::is_none")]
    t_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_sigma: Option<f64>,
}

/// Collects missing required keys.
#[derive(Default)]
struct Missing(Vec<&'static str>);

impl Missing {
    fn take<T>(&mut self, v: Option<T>, key: &'static str) -> Option<T> {
        if v.is_none() {
            self.0.push(key);
        }
        v
    }
}

impl RunConfig {
    /// Parses and validates a config document. Schema errors list every
    /// missing required field; syntax errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = Self::from_raw(raw)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let mut miss = Missing::default();
        let m = raw.model.unwrap_or_default();
        let coupling = match (m.lambda, m.auto_lambda_n) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "model: give either `lambda` or `auto_lambda_N`, not both".into(),
                ))
            }
            (Some(l), None) => Some(Coupling::Fixed(l)),
            (None, Some(n)) => Some(Coupling::Auto(n)),
            (None, None) => {
                miss.0.push("model.lambda | model.auto_lambda_N");
                None
            }
        };
        let kappa = miss.take(m.kappa, "model.kappa");
        let gamma = miss.take(m.gamma, "model.gamma");
        let n_max = miss.take(m.n_max, "model.n_max");
        let bundle_n = miss.take(m.bundle_n, "model.bundle_N");

        let p = raw.pulses.unwrap_or_default();
        let amp = miss.take(p.amp, "pulses.amp");
        let sigma = miss.take(p.sigma, "pulses.sigma");
        let t1 = miss.take(p.t1, "pulses.t1");
        let t2 = miss.take(p.t2, "pulses.t2");
        let period = miss.take(p.period, "pulses.period");
        let count = miss.take(p.count, "pulses.count");

        let s = raw.solver.unwrap_or_default();
        let t_end = miss.take(s.t_end, "solver.t_end");

        let thermal = raw.thermal.map(|t| {
            let t_b = miss.take(t.t_b, "thermal.t_b");
            let t_sigma = miss.take(t.t_sigma, "thermal.t_sigma");
            (t_b, t_sigma)
        });
        let correlations = raw.correlations.map(|mut c| {
            let orders = miss.take(c.orders.take(), "correlations.orders");
            (orders, c)
        });

        if !miss.0.is_empty() {
            return Err(Error::Config(format!(
                "missing required fields: {}",
                miss.0.join(", ")
            )));
        }

        let r = raw.run.unwrap_or_default();
        Ok(Self {
            model: ModelSection {
                coupling: coupling.unwrap(),
                omega0: m.omega0,
                kappa: kappa.unwrap(),
                gamma: gamma.unwrap(),
                delta1: m.delta1,
                delta2: m.delta2,
                n_max: n_max.unwrap(),
                bundle_n: bundle_n.unwrap(),
            },
            pulses: PulseSchedule {
                amp: amp.unwrap(),
                sigma: sigma.unwrap(),
                t1: t1.unwrap(),
                t2: t2.unwrap(),
                period: period.unwrap(),
                count: count.unwrap(),
            },
            solver: SolverSection {
                rel_tol: s.rel_tol.unwrap_or(DEFAULT_REL_TOL),
                abs_tol: s.abs_tol.unwrap_or(DEFAULT_ABS_TOL),
                max_step: s.max_step,
                t_start: s.t_start.unwrap_or(0.0),
                t_end: t_end.unwrap(),
                dt: s.dt.unwrap_or(10.0),
            },
            run: RunSection {
                pipeline: r.pipeline.unwrap_or(Pipeline::Master),
                trajectories: r.trajectories.unwrap_or(1),
                seed: r.seed.unwrap_or(0),
                bundle_window: r.bundle_window.unwrap_or(10.0),
            },
            correlations: correlations.map(|(orders, c)| CorrelationSection {
                orders: orders.unwrap(),
                cycle: c.cycle.unwrap_or(1),
                tau_max: c.tau_max.unwrap_or(3000.0),
                tau_step: c.tau_step.unwrap_or(50.0),
                operator: c.operator.unwrap_or(CorrelationOperator::Bare),
                support: c.support.unwrap_or(0.1),
            }),
            snapshots: raw.snapshots.map(|s| SnapshotSection {
                times: s.times.unwrap_or_default(),
                wigner_half_width: s.wigner_half_width.unwrap_or(3.0),
                wigner_points: s.wigner_points.unwrap_or(101),
            }),
            thermal: thermal.map(|(t_b, t_sigma)| ThermalSection {
                t_b: t_b.unwrap(),
                t_sigma: t_sigma.unwrap(),
            }),
        })
    }

    fn to_raw(&self) -> RawConfig {
        let m = &self.model;
        let (lambda, auto) = match m.coupling {
            Coupling::Fixed(l) => (Some(l), None),
            Coupling::Auto(n) => (None, Some(n)),
        };
        let s = &self.solver;
        RawConfig {
            model: Some(RawModel {
                lambda,
                auto_lambda_n: auto,
                omega0: m.omega0,
                kappa: Some(m.kappa),
                gamma: Some(m.gamma),
                delta1: m.delta1,
                delta2: m.delta2,
                n_max: Some(m.n_max),
                bundle_n: Some(m.bundle_n),
            }),
            pulses: Some(RawPulses {
                amp: Some(self.pulses.amp),
                sigma: Some(self.pulses.sigma),
                t1: Some(self.pulses.t1),
                t2: Some(self.pulses.t2),
                period: Some(self.pulses.period),
                count: Some(self.pulses.count),
            }),
            solver: Some(RawSolver {
                rel_tol: Some(s.rel_tol),
                abs_tol: Some(s.abs_tol),
                max_step: s.max_step,
                t_start: Some(s.t_start),
                t_end: Some(s.t_end),
                dt: Some(s.dt),
            }),
            run: Some(RawRun {
                pipeline: Some(self.run.pipeline),
                trajectories: Some(self.run.trajectories),
                seed: Some(self.run.seed),
                bundle_window: Some(self.run.bundle_window),
            }),
            correlations: self.correlations.as_ref().map(|c| RawCorrelations {
                orders: Some(c.orders.clone()),
                cycle: Some(c.cycle),
                tau_max: Some(c.tau_max),
                tau_step: Some(c.tau_step),
                operator: Some(c.operator),
                support: Some(c.support),
            }),
            snapshots: self.snapshots.as_ref().map(|s| RawSnapshots {
                times: Some(s.times.clone()),
                wigner_half_width: Some(s.wigner_half_width),
                wigner_points: Some(s.wigner_points),
            }),
            thermal: self.thermal.map(|t| RawThermal {
                t_b: Some(t.t_b),
                t_sigma: Some(t.t_sigma),
            }),
        }
    }

    /// Checks everything that does not need an integration.
    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        if !(s.t_end > s.t_start) || !s.t_end.is_finite() || !s.t_start.is_finite() {
            return Err(Error::Config("solver.t_end must exceed solver.t_start".into()));
        }
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(Error::Config("solver.dt must be positive".into()));
        }
        if self.model.bundle_n > self.model.n_max {
            return Err(Error::Config("model.bundle_N must not exceed model.n_max".into()));
        }
        if self.run.trajectories == 0 {
            return Err(Error::Config("run.trajectories must be at least 1".into()));
        }
        if !(self.run.bundle_window > 0.0) {
            return Err(Error::Config("run.bundle_window must be positive".into()));
        }
        if let Some(c) = &self.correlations {
            if c.orders.is_empty() || c.orders.contains(&0) {
                return Err(Error::Config("correlations.orders must be positive integers".into()));
            }
            if c.cycle >= self.pulses.count {
                return Err(Error::Config("correlations.cycle must name an existing pulse".into()));
            }
            if !(c.tau_step > 0.0 && c.tau_max >= c.tau_step) {
                return Err(Error::Config(
                    "correlations.tau_step must be positive and at most tau_max".into(),
                ));
            }
            if !(0.0..1.0).contains(&c.support) {
                return Err(Error::Config("correlations.support must lie in [0, 1)".into()));
            }
        }
        if let Some(sn) = &self.snapshots {
            if sn.wigner_points < 2 || !(sn.wigner_half_width > 0.0) {
                return Err(Error::Config(
                    "snapshots.wigner_points >= 2 and wigner_half_width > 0 required".into(),
                ));
            }
        }
        self.system()?;
        self.integrator()?;
        self.dissipators()?;
        Ok(())
    }

    /// Numeric parameter paths accepted by [`RunConfig::set_param`].
    pub const PARAM_PATHS: &'static [&'static str] = &[
        "model.lambda",
        "model.auto_lambda_N",
        "model.omega0",
        "model.kappa",
        "model.gamma",
        "model.delta1",
        "model.delta2",
        "model.n_max",
        "model.bundle_N",
        "pulses.amp",
        "pulses.sigma",
        "pulses.t1",
        "pulses.t2",
        "pulses.period",
        "pulses.count",
        "solver.rel_tol",
        "solver.abs_tol",
        "solver.max_step",
        "solver.t_start",
        "solver.t_end",
        "solver.dt",
        "run.trajectories",
        "run.seed",
        "run.bundle_window",
    ];

    /// Overrides one numeric field by its dotted path and re-validates.
    pub fn set_param(&mut self, path: &str, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{path} needs a non-negative integer, got {v}")))
            }
        };
        match path {
            "model.lambda" => self.model.coupling = Coupling::Fixed(value),
            "model.auto_lambda_N" => self.model.coupling = Coupling::Auto(count(value)?),
            "model.omega0" => self.model.omega0 = Some(value),
            "model.kappa" => self.model.kappa = value,
            "model.gamma" => self.model.gamma = value,
            "model.delta1" => self.model.delta1 = Some(value),
            "model.delta2" => self.model.delta2 = Some(value),
            "model.n_max" => self.model.n_max = count(value)?,
            "model.bundle_N" => self.model.bundle_n = count(value)?,
            "pulses.amp" => self.pulses.amp = value,
            "pulses.sigma" => self.pulses.sigma = value,
            "pulses.t1" => self.pulses.t1 = value,
            "pulses.t2" => self.pulses.t2 = value,
            "pulses.period" => self.pulses.period = value,
            "pulses.count" => self.pulses.count = count(value)?,
            "solver.rel_tol" => self.solver.rel_tol = value,
            "solver.abs_tol" => self.solver.abs_tol = value,
            "solver.max_step" => self.solver.max_step = Some(value),
            "solver.t_start" => self.solver.t_start = value,
            "solver.t_end" => self.solver.t_end = value,
            "solver.dt" => self.solver.dt = value,
            "run.trajectories" => self.run.trajectories = count(value)?,
            "run.seed" => self.run.seed = count(value)? as u64,
            "run.bundle_window" => self.run.bundle_window = value,
            other => {
                return Err(Error::Config(format!(
                    "unknown parameter path `{other}` (known: {})",
                    Self::PARAM_PATHS.join(", ")
                )))
            }
        }
        self.validate()
    }

    pub fn lambda(&self) -> Result<f64> {
        match self.model.coupling {
            Coupling::Fixed(l) => Ok(l),
            Coupling::Auto(n) => lambda_n(n, AUTO_LAMBDA_TOL),
        }
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let m = &self.model;
        let lambda = self.lambda()?;
        let mut cfg = SystemConfig::new(
            lambda,
            m.kappa,
            m.gamma,
            self.pulses,
            FockTruncation::new(m.n_max)?,
            m.bundle_n,
        )?;
        let (d1, d2) = (cfg.delta1, cfg.delta2);
        cfg = cfg.with_detunings(m.delta1.unwrap_or(d1), m.delta2.unwrap_or(d2));
        cfg.omega0 = m.omega0;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dissipators(&self) -> Result<DissipatorSet> {
        let cfg = self.system()?;
        match self.thermal {
            None => Ok(DissipatorSet::zero_temperature(&cfg)),
            Some(t) => DissipatorSet::thermal(&cfg, t.t_b, t.t_sigma),
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.solver.t_start, self.solver.t_end, self.solver.dt)
    }

    pub fn integrator(&self) -> Result<IntegratorSettings> {
        let s = &self.solver;
        let max_step = s.max_step.unwrap_or(self.pulses.sigma / 10.0);
        IntegratorSettings::new(s.rel_tol, s.abs_tol, max_step, self.grid())
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: &[&str] = &[
    "fig1d", "fig2a", "fig2b", "fig2c", "fig3", "fig4a", "fig4b", "fig5abc", "fig5de",
];

/// Built-in parameter sets, one per figure panel. Multi-cycle presets use
/// three pulses per train and seed 2024 unless noted.
///
/// n_max is 16 for two-photon and 20 for three-photon bundles. Populations
/// settle at smaller truncations, but g_N needs ⟨b†²ᴺb²ᴺ⟩, whose weights
/// n!/(n−2N)! amplify the tail of the photon distribution; at n_max = 8
/// g_2(t*,t*) is off by a third.
pub fn preset(name: &str) -> Result<RunConfig> {
    let two = |kappa: f64, gamma: f64, period: f64, count: usize, t_end: f64| RunConfig {
        model: ModelSection {
            coupling: Coupling::Auto(2),
            omega0: None,
            kappa,
            gamma,
            delta1: None,
            delta2: None,
            n_max: 16,
            bundle_n: 2,
        },
        pulses: PulseSchedule {
            amp: 0.05,
            sigma: 180.0,
            t1: 1000.0,
            t2: 750.0,
            period,
            count,
        },
        solver: SolverSection {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            max_step: None,
            t_start: 0.0,
            t_end,
            dt: 10.0,
        },
        run: RunSection {
            pipeline: Pipeline::Master,
            trajectories: 1,
            seed: 2024,
            bundle_window: 10.0,
        },
        correlations: None,
        snapshots: None,
        thermal: None,
    };
    let three = |period: f64, t_end: f64| {
        let mut c = two(0.0006, 0.002, period, 3, t_end);
        c.model.coupling = Coupling::Auto(3);
        c.model.n_max = 20;
        c.model.bundle_n = 3;
        c.pulses.amp = 0.1;
        c
    };
    // Single-trajectory figures show trajectory 0. Seed 10 is the smallest
    // master seed whose trajectory 0 is a clean, fully transferred bundle
    // train for all three presets (crates/cli/examples/display_seeds.rs).
    const DISPLAY_SEED: u64 = 10;
    let cfg = match name {
        "fig1d" => {
            let mut c = two(0.0, 0.0, 10000.0, 1, 2000.0);
            c.solver.dt = 2.0;
            c
        }
        "fig2a" => two(0.0008, 0.002, 10000.0, 1, 10000.0),
        "fig2b" => two(0.0006, 0.002, 10000.0, 1, 10000.0),
        "fig2c" => two(0.0004, 0.002, 10000.0, 1, 10000.0),
        "fig3" => {
            let mut c = two(0.0006, 0.002, 10000.0, 3, 30000.0);
            c.run.pipeline = Pipeline::Trajectories;
            c.run.seed = DISPLAY_SEED;
            c.snapshots = Some(SnapshotSection {
                times: Vec::new(),
                wigner_half_width: 3.0,
                wigner_points: 101,
            });
            c
        }
        "fig4a" => {
            let mut c = two(0.0006, 0.002, 12000.0, 3, 36000.0);
            c.run.pipeline = Pipeline::Trajectories;
            c.run.seed = DISPLAY_SEED;
            c
        }
        "fig4b" => {
            let mut c = three(12000.0, 36000.0);
            c.run.pipeline = Pipeline::Trajectories;
            c.run.seed = DISPLAY_SEED;
            c
        }
        "fig5abc" => {
            let mut c = two(0.0006, 0.002, 10000.0, 3, 30000.0);
            c.correlations = Some(CorrelationSection {
                orders: vec![1, 2],
                cycle: 1,
                tau_max: 3000.0,
                tau_step: 50.0,
                operator: CorrelationOperator::Bare,
                support: 0.1,
            });
            c
        }
        "fig5de" => {
            let mut c = three(12000.0, 36000.0);
            c.correlations = Some(CorrelationSection {
                orders: vec![1, 3],
                cycle: 1,
                tau_max: 3000.0,
                tau_step: 50.0,
                operator: CorrelationOperator::Bare,
                support: 0.1,
            });
            c
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}
