//! Longitudinally coupled qubit–resonator model driven by two Gaussian pulse trains.
//!
//! Units: ω_b = 1 and ħ = 1, so every parameter is a ratio to the resonator
//! frequency and times are in units of 1/ω_b. For a resonator at
//! ω_b = 2π × 5 GHz, λ/ω_b = 0.765 is λ ≈ 2π × 3.8 GHz, κ/ω_b = 6e-4 is
//! κ ≈ 2π × 3 MHz, and ω_b t = 1000 is t ≈ 32 ns.
//!
//! The Hamiltonian already contains the compensating resonator drive that turns
//! `λσ_z(b† + b)/2` into `λσ₊σ₋(b† + b)`, so the ground-state sector is an
//! undisplaced oscillator and emitted bundles are plain Fock states. Without
//! that drive both sectors would be displaced by ±λ/2 and the bundles would
//! come out coherently displaced; that variant is not modelled here.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation_op, photon_lift, qubit_lift, qubit_ops, FockTruncation, Operator, Qubit,
};
use crate::ode::{Dopri5, IntegratorSettings, OdeSystem};
use crate::special::{laguerre, ln_factorial};

/// Peak drive amplitude above which the rotating-wave reduction to the
/// resonant chain is no longer trustworthy.
pub const DRIVE_WARNING_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pulse {
    /// Ω₁, resonant with `|g,n⟩ ↔ |e,ñ⟩`.
    First,
    /// Ω₂, resonant with `|e,ñ⟩ ↔ |g,n+1⟩`.
    Second,
}

/// Two trains of identical Gaussian pulses centred at `t1 + mT` and `t2 + mT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    /// Ω₀/ω_b
    pub amp: f64,
    /// ω_b σ
    pub sigma: f64,
    pub t1: f64,
    pub t2: f64,
    /// ω_b T, spacing between consecutive pulses of one train.
    pub period: f64,
    /// Number of pulses per train (N₀ + 1).
    pub count: usize,
}

impl PulseSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("pulses.sigma", "must be positive"));
        }
        if self.count < 1 {
            return Err(Error::param("pulses.count", "must be at least 1"));
        }
        if self.count > 1 && !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::param(
                "pulses.period",
                "must be positive with more than one pulse",
            ));
        }
        for (name, v) in [
            ("pulses.amp", self.amp),
            ("pulses.t1", self.t1),
            ("pulses.t2", self.t2),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn center(&self, which: Pulse) -> f64 {
        match which {
            Pulse::First => self.t1,
            Pulse::Second => self.t2,
        }
    }

    /// Start of pulse cycle `m`: the earlier of the two pulse centres, minus 4σ.
    pub fn cycle_start(&self, m: usize) -> f64 {
        self.t1.min(self.t2) - 4.0 * self.sigma + m as f64 * self.period
    }

    /// Largest value either train reaches, evaluated at the pulse centres.
    pub fn peak_amplitude(&self) -> f64 {
        let mut peak: f64 = 0.0;
        for m in 0..self.count {
            for which in [Pulse::First, Pulse::Second] {
                let t = self.center(which) + m as f64 * self.period;
                peak = peak
                    .max(pulse_amplitude(t, Pulse::First, self).abs())
                    .max(pulse_amplitude(t, Pulse::Second, self).abs());
            }
        }
        peak
    }
}

/// Ω_i(t) = Ω₀ Σ_m exp[−(t − t_i − mT)² / 2σ²], summed over every pulse.
pub fn pulse_amplitude(t: f64, which: Pulse, sched: &PulseSchedule) -> f64 {
    let center = sched.center(which);
    let inv = 1.0 / (2.0 * sched.sigma * sched.sigma);
    (0..sched.count)
        .map(|m| {
            let d = t - center - m as f64 * sched.period;
            (-d * d * inv).exp()
        })
        .sum::<f64>()
        * sched.amp
}

/// Model parameters, all in units of ω_b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// λ/ω_b
    pub lambda: f64,
    /// ω₀/ω_b; only the thermal qubit bath needs it.
    pub omega0: Option<f64>,
    pub kappa: f64,
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub pulses: PulseSchedule,
    pub trunc: FockTruncation,
    pub bundle_n: usize,
}

impl SystemConfig {
    /// Builds a config with the detunings set to the resonance conditions.
    pub fn new(
        lambda: f64,
        kappa: f64,
        gamma: f64,
        pulses: PulseSchedule,
        trunc: FockTruncation,
        bundle_n: usize,
    ) -> Result<Self> {
        let (delta1, delta2) = resonance_detunings(lambda);
        let cfg = Self {
            lambda,
            omega0: None,
            kappa,
            gamma,
            delta1,
            delta2,
            pulses,
            trunc,
            bundle_n,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_detunings(mut self, delta1: f64, delta2: f64) -> Self {
        self.delta1 = delta1;
        self.delta2 = delta2;
        self
    }

    pub fn with_truncation(mut self, trunc: FockTruncation) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("model.lambda", "must be finite and >= 0"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::param("model.kappa", "must be finite and >= 0"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("model.gamma", "must be finite and >= 0"));
        }
        if !(self.delta1.is_finite() && self.delta2.is_finite()) {
            return Err(Error::param("model.delta", "detunings must be finite"));
        }
        if let Some(w) = self.omega0 {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param("model.omega0", "must be positive"));
            }
        }
        if self.bundle_n < 1 {
            return Err(Error::param("model.bundle_N", "must be at least 1"));
        }
        self.pulses.validate()
    }

    /// Warning text when the drive is too strong for the resonant-chain picture.
    pub fn drive_warning(&self) -> Option<String> {
        let peak = self.pulses.peak_amplitude();
        (peak > DRIVE_WARNING_THRESHOLD).then(|| {
            format!(
                "peak drive amplitude {peak:.3} exceeds {DRIVE_WARNING_THRESHOLD}; \
                 off-resonant transitions are no longer negligible"
            )
        })
    }

    /// Complex drive coefficient f(t) multiplying σ₊ in the Hamiltonian.
    pub fn drive_coefficient(&self, t: f64) -> C64 {
        let o1 = pulse_amplitude(t, Pulse::First, &self.pulses);
        let o2 = pulse_amplitude(t, Pulse::Second, &self.pulses);
        C64::from_polar(o1, -self.delta1 * t) + C64::from_polar(o2, -self.delta2 * t)
    }
}

/// Detunings that make both pulse trains resonant: Δ₁ = −λ², Δ₂ = −λ² − 1.
pub fn resonance_detunings(lambda: f64) -> (f64, f64) {
    let shift = lambda * lambda;
    (-shift, -shift - 1.0)
}

/// Eigenvalues of the undriven Hamiltonian for photon number `n`:
/// `E_{g,n} = n`, `E_{e,n} = n − λ²` (rotating frame, ω₀ removed).
pub fn h0_eigen(n: usize, cfg: &SystemConfig) -> (f64, f64) {
    let n = n as f64;
    (n, n - cfg.lambda * cfg.lambda)
}

/// Franck–Condon factor `⟨ñ|m⟩ = ⟨n|D(β)|m⟩` from the closed Laguerre form.
///
/// Magnitudes are accumulated in log space with the sign tracked separately,
/// so n, m up to a few hundred do not overflow.
pub fn franck_condon(n: usize, m: usize, beta: f64) -> f64 {
    if beta == 0.0 {
        return if n == m { 1.0 } else { 0.0 };
    }
    let x = beta * beta;
    let (lo, hi) = (n.min(m), n.max(m));
    let k = hi - lo;
    let poly = laguerre(lo, k as f64, x);
    let ln_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + k as f64 * beta.abs().ln() - 0.5 * x;
    // n ≤ m carries (−β)^k, n > m carries β^k.
    let base_negative = if n <= m { beta > 0.0 } else { beta < 0.0 };
    let sign = if base_negative && k % 2 == 1 { -1.0 } else { 1.0 };
    sign * ln_mag.exp() * poly
}

/// Precomputed `⟨ñ|m⟩` for `n, m ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FranckCondonTable {
    beta: f64,
    table: Vec<Vec<f64>>,
}

impl FranckCondonTable {
    pub fn new(beta: f64, n_max: usize) -> Self {
        let table = (0..=n_max)
            .map(|n| (0..=n_max).map(|m| franck_condon(n, m, beta)).collect())
            .collect();
        Self { beta, table }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_max(&self) -> usize {
        self.table.len() - 1
    }

    /// `⟨ñ|m⟩`
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.table[n][m]
    }
}

/// Smallest positive λ/ω_b with `⟨Ñ|N⟩ = e^{−λ²/2} L_N(λ²) = 0`.
///
/// Scans λ² upward in steps of 0.01 until L_N changes sign, giving up at the
/// first local extremum, then bisects on λ to width `tol`.
pub fn lambda_n(n: usize, tol: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::param("N", "must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    const STEP: f64 = 0.01;
    let slope = |x: f64| -laguerre(n - 1, 1.0, x);
    let mut x_lo = 0.0;
    let mut f_lo = laguerre(n, 0.0, x_lo);
    let initial_slope = slope(0.0);
    let x_hi = loop {
        let x = x_lo + STEP;
        let f = laguerre(n, 0.0, x);
        if f.signum() != f_lo.signum() || f == 0.0 {
            break x;
        }
        if slope(x).signum() != initial_slope.signum() || x > 1e4 {
            return Err(Error::BracketFailure { n });
        }
        x_lo = x;
        f_lo = f;
    };
    let (mut lo, mut hi) = (x_lo.sqrt(), x_hi.sqrt());
    let f_at = |b: f64| laguerre(n, 0.0, b * b);
    let sign_lo = f_at(lo).signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f_at(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Static operators of the model on the composite space.
#[derive(Debug, Clone)]
pub struct ModelOperators {
    /// b
    pub b: Operator,
    /// b†b
    pub number: Operator,
    /// σ₊ ⊗ I
    pub sigma_plus: Operator,
    /// σ₋ ⊗ I
    pub sigma_minus: Operator,
    /// σ₊σ₋ ⊗ I
    pub excited: Operator,
    /// b†b + λσ₊σ₋(b† + b)
    pub h0: Operator,
    /// b + λσ₊σ₋, the dressed photon lowering operator
    pub dressed_lowering: Operator,
}

impl ModelOperators {
    pub fn new(cfg: &SystemConfig) -> Self {
        let trunc = &cfg.trunc;
        let q = qubit_ops();
        let b = photon_lift(&annihilation_op(trunc));
        let bd = b.adjoint();
        let number = &bd * &b;
        let sigma_plus = qubit_lift(&q.raising, trunc);
        let sigma_minus = qubit_lift(&q.lowering, trunc);
        let excited = qubit_lift(&q.excited, trunc);
        let lam = C64::new(cfg.lambda, 0.0);
        let coupling = (&excited * &(&bd + &b)).scale(lam);
        let h0 = &number + &coupling;
        let dressed_lowering = &b + &excited.scale(lam);
        Self {
            b,
            number,
            sigma_plus,
            sigma_minus,
            excited,
            h0,
            dressed_lowering,
        }
    }

    /// H(t) = H₀ + f(t)σ₊ + f*(t)σ₋.
    pub fn hamiltonian(&self, t: f64, cfg: &SystemConfig) -> Operator {
        let f = cfg.drive_coefficient(t);
        let drive = &self.sigma_plus.scale(f) + &self.sigma_minus.scale(f.conj());
        &self.h0 + &drive
    }
}

/// Full rotating-frame Hamiltonian
/// `b†b + λσ₊σ₋(b† + b) + [Ω₁(t)σ₊e^{−iΔ₁t} + Ω₂(t)σ₊e^{−iΔ₂t} + h.c.]`.
pub fn hamiltonian_lab(t: f64, cfg: &SystemConfig) -> Operator {
    ModelOperators::new(cfg).hamiltonian(t, cfg)
}

/// Chain basis of the resonant-transition Hamiltonian:
/// `|g,0⟩, |e,0̃⟩, |g,1⟩, |e,1̃⟩, …, |e,Ñ−1⟩, |g,N⟩` (dimension 2N + 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainBasis {
    pub bundle_n: usize,
}

impl ChainBasis {
    pub fn dim(&self) -> usize {
        2 * self.bundle_n + 1
    }

    pub fn ground(&self, n: usize) -> usize {
        debug_assert!(n <= self.bundle_n);
        2 * n
    }

    pub fn excited(&self, n: usize) -> usize {
        debug_assert!(n < self.bundle_n);
        2 * n + 1
    }
}

/// Resonant coupling `⟨e,m̃|H'|g,n⟩` at time t: Ω₁⟨ñ|n⟩ for m = n, Ω₂⟨m̃|m+1⟩
/// for n = m + 1, zero otherwise.
pub fn resonant_coupling(t: f64, cfg: &SystemConfig, ground_n: usize, excited_m: usize) -> f64 {
    let beta = cfg.lambda;
    if ground_n == excited_m {
        pulse_amplitude(t, Pulse::First, &cfg.pulses) * franck_condon(excited_m, ground_n, beta)
    } else if ground_n == excited_m + 1 {
        pulse_amplitude(t, Pulse::Second, &cfg.pulses) * franck_condon(excited_m, ground_n, beta)
    } else {
        0.0
    }
}

/// Resonant-chain Hamiltonian in the [`ChainBasis`], interaction picture of H₀.
pub fn hamiltonian_approx(t: f64, cfg: &SystemConfig) -> Result<Operator> {
    let n = cfg.bundle_n;
    if n > cfg.trunc.n_max() {
        return Err(Error::param(
            "model.bundle_N",
            format!("{n} exceeds n_max = {}", cfg.trunc.n_max()),
        ));
    }
    let chain = ChainBasis { bundle_n: n };
    let mut h = Operator::zeros(chain.dim());
    for k in 0..n {
        for g in [k, k + 1] {
            let v = C64::new(resonant_coupling(t, cfg, g, k), 0.0);
            h.set(chain.excited(k), chain.ground(g), v);
            h.set(chain.ground(g), chain.excited(k), v.conj());
        }
    }
    Ok(h)
}

/// Closed Schrödinger evolution under [`hamiltonian_approx`], state in the
/// [`ChainBasis`].
pub struct ChainSystem {
    cfg: SystemConfig,
}

impl ChainSystem {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        hamiltonian_approx(0.0, cfg)?;
        Ok(Self { cfg: cfg.clone() })
    }
}

impl OdeSystem for ChainSystem {
    fn dim(&self) -> usize {
        ChainBasis {
            bundle_n: self.cfg.bundle_n,
        }
        .dim()
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let chain = ChainBasis {
            bundle_n: self.cfg.bundle_n,
        };
        dy.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for k in 0..self.cfg.bundle_n {
            for g in [k, k + 1] {
                let v = resonant_coupling(t, &self.cfg, g, k);
                let (e, gi) = (chain.excited(k), chain.ground(g));
                dy[e] += C64::new(0.0, -v) * y[gi];
                dy[gi] += C64::new(0.0, -v) * y[e];
            }
        }
    }
}

/// Chain-basis populations at every grid time, starting from `|g,0⟩` at `t0`.
pub fn chain_populations(
    cfg: &SystemConfig,
    t0: f64,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let sys = ChainSystem::new(cfg)?;
    let mut y0 = vec![C64::new(0.0, 0.0); sys.dim()];
    y0[0] = C64::new(1.0, 0.0);
    let mut out = Vec::new();
    let mut stepper = Dopri5::new(&sys, t0, &y0, settings);
    stepper.integrate_grid(t_end, &settings.grid, |t, y| {
        out.push((t, y.iter().map(|a| a.norm_sqr()).collect()));
        Ok(())
    })?;
    Ok(out)
}

/// Places a chain-basis operator into the full dressed basis `{|g,n⟩, |e,ñ⟩}`,
/// indexed like the product basis (qubit-major). Everything outside the chain is zero.
pub fn embed_chain(op: &Operator, bundle_n: usize, trunc: &FockTruncation) -> Result<Operator> {
    let chain = ChainBasis { bundle_n };
    if op.dim() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            found: op.dim(),
        });
    }
    if bundle_n > trunc.n_max() {
        return Err(Error::param("bundle_N", "exceeds truncation"));
    }
    let map = |i: usize| {
        if i % 2 == 0 {
            trunc.index(Qubit::Ground, i / 2)
        } else {
            trunc.index(Qubit::Excited, i / 2)
        }
    };
    let mut out = Operator::zeros(trunc.dim());
    for i in 0..chain.dim() {
        for j in 0..chain.dim() {
            out.set(map(i), map(j), op.get(i, j));
        }
    }
    Ok(out)
}

/// Dressed excited state `|e,ñ⟩ = |e⟩ D(−λ)|n⟩` as a product-basis vector.
pub fn dressed_excited(n: usize, cfg: &SystemConfig) -> nalgebra::DVector<C64> {
    let trunc = &cfg.trunc;
    let mut v = nalgebra::DVector::zeros(trunc.dim());
    for k in 0..=trunc.n_max() {
        v[trunc.index(Qubit::Excited, k)] = C64::new(franck_condon(n, k, cfg.lambda), 0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::displacement_op;
    use proptest::prelude::*;

    pub(crate) fn fig1d_pulses() -> PulseSchedule {
        PulseSchedule {
            amp: 0.05,
            sigma: 180.0,
            t1: 1000.0,
            t2: 750.0,
            period: 10000.0,
            count: 1,
        }
    }

    fn cfg(lambda: f64) -> SystemConfig {
        SystemConfig::new(
            lambda,
            0.0,
            0.0,
            fig1d_pulses(),
            FockTruncation::new(8).unwrap(),
            2,
        )
        .unwrap()
    }

    #[test]
    fn franck_condon_examples() {
        for n in 0..5 {
            for m in 0..5 {
                assert_eq!(franck_condon(n, m, 0.0), if n == m { 1.0 } else { 0.0 });
            }
        }
        assert!(franck_condon(2, 2, 0.76537).abs() < 1e-4);
        assert!((franck_condon(0, 0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((franck_condon(0, 0, 1.0) - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn franck_condon_matches_matrix_exponential() {
        let trunc = FockTruncation::new(40).unwrap();
        for &beta in &[0.2, 0.645, 0.765, 1.0] {
            let d = displacement_op(beta, &trunc).unwrap();
            for n in 0..=8 {
                for m in 0..=8 {
                    let want = d.get(n, m);
                    assert!(want.im.abs() < 1e-14);
                    assert!(
                        (franck_condon(n, m, beta) - want.re).abs() < 1e-8,
                        "beta={beta} n={n} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn franck_condon_large_indices_finite() {
        for n in [0, 10, 30, 60] {
            for m in [0, 10, 30, 60] {
                let v = franck_condon(n, m, 0.9);
                assert!(v.is_finite() && v.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn franck_condon_rows_normalized() {
        for n in 0..=8 {
            let s: f64 = (0..=60).map(|m| franck_condon(n, m, 0.9).powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-6, "row {n}: {s}");
        }
    }

    #[test]
    fn lambda_n_values() {
        let l2 = lambda_n(2, 1e-12).unwrap();
        assert!((l2 - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-10);
        assert!((l2 - 0.765).abs() < 1e-3);
        let l3 = lambda_n(3, 1e-12).unwrap();
        assert!((l3 - 0.645).abs() < 1e-3);
        assert!((l3 - 0.644806).abs() < 5e-7);
        assert!((lambda_n(1, 1e-12).unwrap() - 1.0).abs() < 1e-10);
        assert!(lambda_n(0, 1e-6).is_err());
        assert!(lambda_n(2, 0.0).is_err());
    }

    #[test]
    fn lambda_n_decreasing() {
        let v: Vec<f64> = (1..=6).map(|n| lambda_n(n, 1e-10).unwrap()).collect();
        for w in v.windows(2) {
            assert!(w[1] < w[0]);
        }
        for (i, &l) in v.iter().enumerate() {
            assert!(franck_condon(i + 1, i + 1, l).abs() < 1e-8);
        }
    }

    #[test]
    fn pulse_values() {
        let s = fig1d_pulses();
        assert!((pulse_amplitude(1000.0, Pulse::First, &s) - 0.05).abs() < 1e-15);
        let tail = pulse_amplitude(1000.0 + 5.0 * 180.0, Pulse::First, &s);
        assert!((tail / 0.05 - (-12.5f64).exp()).abs() < 1e-15);
        assert!((tail / 0.05 - 3.7e-6).abs() < 1e-7);

        let train = PulseSchedule {
            count: 3,
            ..s
        };
        let at = pulse_amplitude(1000.0 + 10000.0, Pulse::First, &train);
        assert!((at / 0.05 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn detunings() {
        let (d1, d2) = resonance_detunings(0.765);
        assert!((d1 + 0.585225).abs() < 1e-12);
        assert!((d2 + 1.585225).abs() < 1e-12);
        assert_eq!(resonance_detunings(0.0), (0.0, -1.0));
        let (d1, d2) = resonance_detunings(0.645);
        assert_eq!(d2 - d1, -1.0);
    }

    #[test]
    fn bare_energies() {
        let c = cfg(0.765);
        let (eg, ee) = h0_eigen(0, &c);
        assert_eq!(eg, 0.0);
        assert!((ee + 0.585225).abs() < 1e-12);
        assert_eq!(h0_eigen(3, &cfg(0.0)), (3.0, 3.0));
        let (_, ee1) = h0_eigen(1, &c);
        let (eg2, _) = h0_eigen(2, &c);
        assert!((ee1 - eg2 - c.delta2).abs() < 1e-12);
    }

    #[test]
    fn h0_eigenvectors_are_dressed_states() {
        // H₀|e,ñ⟩ = (n − λ²)|e,ñ⟩ holds on the low block of a large truncation.
        let c = cfg(0.765).with_truncation(FockTruncation::new(30).unwrap());
        let ops = ModelOperators::new(&c);
        for n in 0..4 {
            let v = dressed_excited(n, &c);
            let hv = ops.h0.apply(&v);
            let (_, e) = h0_eigen(n, &c);
            assert!((hv - v * C64::new(e, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn lab_hamiltonian_structure() {
        let mut c = cfg(0.0);
        c.pulses.amp = 0.0;
        let h = hamiltonian_lab(123.0, &c);
        for i in 0..c.trunc.dim() {
            for j in 0..c.trunc.dim() {
                let want = if i == j { c.trunc.label(i).1 as f64 } else { 0.0 };
                assert!((h.get(i, j) - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }

        let c = cfg(0.765);
        for t in [0.0, 431.7, 777.0, 1000.0, 2222.2] {
            assert!(hamiltonian_lab(t, &c).hermiticity_error() < 1e-12);
        }

        let t = c.pulses.t1;
        let h = hamiltonian_lab(t, &c);
        let o1 = pulse_amplitude(t, Pulse::First, &c.pulses);
        let o2 = pulse_amplitude(t, Pulse::Second, &c.pulses);
        let tr = &c.trunc;
        for n in 0..=tr.n_max() {
            let z = h.get(tr.index(Qubit::Excited, n), tr.index(Qubit::Ground, n));
            let want = C64::from_polar(o1, -c.delta1 * t) + C64::from_polar(o2, -c.delta2 * t);
            assert!((z - want).norm() < 1e-15);
            assert!(z.norm() <= o1 + o2 + 1e-15);
            if n + 1 <= tr.n_max() {
                let off = h.get(tr.index(Qubit::Excited, n), tr.index(Qubit::Ground, n + 1));
                assert_eq!(off, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn approx_hamiltonian_chain() {
        let l2 = lambda_n(2, 1e-12).unwrap();
        let c = cfg(l2);
        let t = c.pulses.t1;
        assert!(resonant_coupling(t, &c, 2, 2).abs() < 1e-6);
        let h = hamiltonian_approx(t, &c).unwrap();
        assert_eq!(h.dim(), 5);
        assert!(h.hermiticity_error() < 1e-15);
        let chain = ChainBasis { bundle_n: 2 };
        let o1 = pulse_amplitude(t, Pulse::First, &c.pulses);
        assert!((h.get(chain.excited(0), chain.ground(0)).re - o1 * franck_condon(0, 0, l2)).abs() < 1e-15);

        let mut off = c.clone();
        off.pulses.amp = 0.0;
        assert_eq!(hamiltonian_approx(t, &off).unwrap().max_abs(), 0.0);

        let mut big = c.clone();
        big.bundle_n = 9;
        assert!(hamiltonian_approx(t, &big).is_err());
    }

    #[test]
    fn embedded_chain_annihilates_exterior() {
        let c = cfg(lambda_n(2, 1e-12).unwrap());
        let h = hamiltonian_approx(900.0, &c).unwrap();
        let full = embed_chain(&h, 2, &c.trunc).unwrap();
        assert!(full.hermiticity_error() < 1e-15);
        let tr = &c.trunc;
        for (q, n) in [(Qubit::Ground, 3), (Qubit::Excited, 2), (Qubit::Excited, 5)] {
            let i = tr.index(q, n);
            for j in 0..tr.dim() {
                assert_eq!(full.get(i, j), C64::new(0.0, 0.0));
                assert_eq!(full.get(j, i), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn drive_warning_threshold() {
        let c = cfg(0.765);
        assert!(c.drive_warning().is_none());
        let mut strong = c.clone();
        strong.pulses.amp = 0.3;
        assert!(strong.drive_warning().is_some());
    }

    #[test]
    fn config_validation() {
        let mut p = fig1d_pulses();
        p.sigma = 0.0;
        assert!(SystemConfig::new(0.7, 0.0, 0.0, p, FockTruncation::new(4).unwrap(), 2).is_err());
        let p = fig1d_pulses();
        assert!(SystemConfig::new(-0.1, 0.0, 0.0, p, FockTruncation::new(4).unwrap(), 2).is_err());
        assert!(SystemConfig::new(0.7, -1.0, 0.0, p, FockTruncation::new(4).unwrap(), 2).is_err());
        assert!(SystemConfig::new(0.7, 0.0, 0.0, p, FockTruncation::new(4).unwrap(), 0).is_err());
        let p = PulseSchedule { count: 2, period: 0.0, ..p };
        assert!(SystemConfig::new(0.7, 0.0, 0.0, p, FockTruncation::new(4).unwrap(), 2).is_err());
    }

    proptest! {
        #[test]
        fn franck_condon_parity(n in 0usize..=20, m in 0usize..=20, beta in 0.0f64..1.0) {
            let a = franck_condon(m, n, beta);
            let b = franck_condon(n, m, beta);
            let sign = if (n + m) % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((a - sign * b).abs() < 1e-12);
            prop_assert!(b.abs() <= 1.0 + 1e-12);
        }
    }
}
