//! Dormand–Prince 5(4) integrator for complex-valued linear systems, with the
//! fourth-order continuous extension for dense output.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side `dy/dt = f(t, y)` over a flat complex state.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

/// Error tolerances, step ceiling and the output grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub grid: Vec<f64>,
}

impl IntegratorSettings {
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_ABS_TOL: f64 = 1e-10;

    pub fn new(rel_tol: f64, abs_tol: f64, max_step: f64, grid: Vec<f64>) -> Result<Self> {
        let s = Self {
            rel_tol,
            abs_tol,
            max_step,
            grid,
        };
        s.validate()?;
        Ok(s)
    }

    /// Default tolerances with `max_step = σ/10` for pulse width σ.
    pub fn for_pulse_width(sigma: f64, grid: Vec<f64>) -> Result<Self> {
        Self::new(Self::DEFAULT_REL_TOL, Self::DEFAULT_ABS_TOL, sigma / 10.0, grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::param("tolerances", "must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::param("max_step", "must be positive"));
        }
        if self.grid.iter().any(|t| !t.is_finite()) || self.grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::param("grid", "must be finite and strictly increasing"));
        }
        Ok(())
    }

    pub fn with_grid(&self, grid: Vec<f64>) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }
}

/// Uniform grid `start, start + dt, …` up to and including `end` (within dt/1000).
pub fn uniform_grid(start: f64, end: f64, dt: f64) -> Vec<f64> {
    let n = ((end - start) / dt + 1e-3).floor() as usize;
    (0..=n).map(|k| start + k as f64 * dt).collect()
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Adaptive stepper. After every successful [`step`](Dopri5::step) the dense
/// interpolant covers `[t_prev(), t()]`.
pub struct Dopri5<'s, S: OdeSystem> {
    sys: &'s S,
    rtol: f64,
    atol: f64,
    max_step: f64,
    t: f64,
    t_prev: f64,
    h: f64,
    y: Vec<C64>,
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    y_new: Vec<C64>,
    // continuous-extension coefficients
    r: [Vec<C64>; 5],
    fsal: bool,
    stats: StepStats,
}

impl<'s, S: OdeSystem> Dopri5<'s, S> {
    pub fn new(sys: &'s S, t0: f64, y0: &[C64], settings: &IntegratorSettings) -> Self {
        let n = sys.dim();
        assert_eq!(y0.len(), n, "initial state has the wrong dimension");
        let z = || vec![C64::new(0.0, 0.0); n];
        Self {
            sys,
            rtol: settings.rel_tol,
            atol: settings.abs_tol,
            max_step: settings.max_step,
            t: t0,
            t_prev: t0,
            h: 0.0,
            y: y0.to_vec(),
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            y_new: z(),
            r: [z(), z(), z(), z(), z()],
            fsal: false,
            stats: StepStats::default(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Restarts from a new state (after a jump, say), keeping the step-size guess.
    pub fn reset(&mut self, t: f64, y: &[C64]) {
        self.y.copy_from_slice(y);
        self.t = t;
        self.t_prev = t;
        self.fsal = false;
    }

    fn eval(&mut self, t: f64, which: usize, from_stage: bool) {
        let (src, dst) = if from_stage {
            (&self.stage, &mut self.k[which])
        } else {
            (&self.y, &mut self.k[which])
        };
        self.sys.rhs(t, src, dst);
        self.stats.evaluations += 1;
    }

    fn scaled_norm(&self, v: &[C64], y: &[C64]) -> f64 {
        let s: f64 = v
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let sc = self.atol + self.rtol * b.norm();
                (a.norm() / sc).powi(2)
            })
            .sum();
        (s / v.len() as f64).sqrt()
    }

    fn initial_step(&mut self, t_bound: f64) -> f64 {
        let d0 = self.scaled_norm(&self.y, &self.y);
        let d1 = self.scaled_norm(&self.k[0], &self.y);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.max_step).min((t_bound - self.t).abs().max(1e-12));
        for i in 0..self.y.len() {
            self.stage[i] = self.y[i] + self.k[0][i] * h0;
        }
        let t1 = self.t + h0;
        self.eval(t1, 1, true);
        let diff: Vec<C64> = self.k[1].iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = self.scaled_norm(&diff, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.max_step)
    }

    /// Takes one accepted step without passing `t_bound`.
    pub fn step(&mut self, t_bound: f64) -> Result<()> {
        let n = self.y.len();
        if !self.fsal {
            self.eval(self.t, 0, false);
            self.fsal = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(t_bound);
        }
        let mut reject = false;
        loop {
            let remaining = t_bound - self.t;
            let mut h = self.h.min(self.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h < 1e-13 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow {
                    time: self.t,
                    step: h,
                });
            }
            let t = self.t;
            let y = &self.y;

            for i in 0..n {
                self.stage[i] = y[i] + self.k[0][i] * (h * A21);
            }
            self.eval(t + C2 * h, 1, true);
            let y = &self.y;
            for i in 0..n {
                self.stage[i] = y[i] + (self.k[0][i] * A31 + self.k[1][i] * A32) * h;
            }
            self.eval(t + C3 * h, 2, true);
            let y = &self.y;
            for i in 0..n {
                self.stage[i] =
                    y[i] + (self.k[0][i] * A41 + self.k[1][i] * A42 + self.k[2][i] * A43) * h;
            }
            self.eval(t + C4 * h, 3, true);
            let y = &self.y;
            for i in 0..n {
                self.stage[i] = y[i]
                    + (self.k[0][i] * A51
                        + self.k[1][i] * A52
                        + self.k[2][i] * A53
                        + self.k[3][i] * A54)
                        * h;
            }
            self.eval(t + C5 * h, 4, true);
            let y = &self.y;
            for i in 0..n {
                self.stage[i] = y[i]
                    + (self.k[0][i] * A61
                        + self.k[1][i] * A62
                        + self.k[2][i] * A63
                        + self.k[3][i] * A64
                        + self.k[4][i] * A65)
                        * h;
            }
            self.eval(t + h, 5, true);
            let y = &self.y;
            for i in 0..n {
                self.y_new[i] = y[i]
                    + (self.k[0][i] * A71
                        + self.k[2][i] * A73
                        + self.k[3][i] * A74
                        + self.k[4][i] * A75
                        + self.k[5][i] * A76)
                        * h;
            }
            std::mem::swap(&mut self.stage, &mut self.y_new);
            self.eval(t + h, 6, true);
            std::mem::swap(&mut self.stage, &mut self.y_new);

            let mut acc = 0.0;
            for i in 0..n {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
                let sc = self.atol + self.rtol * self.y[i].norm().max(self.y_new[i].norm());
                acc += (e.norm() / sc).powi(2);
            }
            let err = (acc / n as f64).sqrt();

            if err <= 1.0 {
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                let fac = if reject { fac.min(1.0) } else { fac };
                for i in 0..n {
                    let dy = self.y_new[i] - self.y[i];
                    let bspl = self.k[0][i] * h - dy;
                    self.r[0][i] = self.y[i];
                    self.r[1][i] = dy;
                    self.r[2][i] = bspl;
                    self.r[3][i] = dy - self.k[6][i] * h - bspl;
                    self.r[4][i] = (self.k[0][i] * D1
                        + self.k[2][i] * D3
                        + self.k[3][i] * D4
                        + self.k[4][i] * D5
                        + self.k[5][i] * D6
                        + self.k[6][i] * D7)
                        * h;
                }
                self.t_prev = t;
                self.t = if last { t_bound } else { t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                let (k0, rest) = self.k.split_at_mut(1);
                std::mem::swap(&mut k0[0], &mut rest[5]);
                self.stats.accepted += 1;
                // A clipped final step says nothing about the natural step size.
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
                return Ok(());
            }
            self.stats.rejected += 1;
            reject = true;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            self.h = h * fac;
        }
    }

    /// Interpolates the last step at `t ∈ [t_prev, t]`.
    pub fn dense(&self, t: f64, out: &mut [C64]) {
        let h = self.t - self.t_prev;
        if h == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let th = (t - self.t_prev) / h;
        let th1 = 1.0 - th;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r[0][i]
                + (self.r[1][i]
                    + (self.r[2][i] + (self.r[3][i] + self.r[4][i] * th1) * th) * th1)
                    * th;
        }
    }

    /// Integrates to `t_end`, calling `on_point` at every grid time in
    /// `[t(), t_end]` with the interpolated state.
    pub fn integrate_grid(
        &mut self,
        t_end: f64,
        grid: &[f64],
        mut on_point: impl FnMut(f64, &[C64]) -> Result<()>,
    ) -> Result<()> {
        let mut buf = vec![C64::new(0.0, 0.0); self.y.len()];
        let start = self.t;
        let mut idx = grid.partition_point(|&g| g < start);
        while idx < grid.len() && grid[idx] == start {
            on_point(start, &self.y)?;
            idx += 1;
        }
        while self.t < t_end {
            self.step(t_end)?;
            while idx < grid.len() && grid[idx] <= self.t {
                if grid[idx] == self.t {
                    on_point(grid[idx], &self.y)?;
                } else {
                    self.dense(grid[idx], &mut buf);
                    on_point(grid[idx], &buf)?;
                }
                idx += 1;
            }
        }
        Ok(())
    }
}
