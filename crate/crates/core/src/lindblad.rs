//! Dressed-state master equation: dissipators, right-hand side and propagation.
//!
//! `dρ/dt = i[ρ, H(t)] + Σ_k r_k 𝓛[c_k]ρ` with
//! `𝓛[c]ρ = (2cρc† − c†cρ − ρc†c)/2`. At zero temperature the channels are the
//! dressed photon loss `b + λσ₊σ₋` at rate κ and qubit decay `σ₋` at rate γ.
//!
//! The dense functions ([`dissipator`], [`me_rhs`]) build everything from
//! [`Operator`]s and serve as the reference. [`LindbladSystem`] evaluates the
//! same right-hand side with row-sparse operator products and is what the
//! integrator runs.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{DensityState, InvariantReport, Operator};
use crate::model::{ModelOperators, SystemConfig};
use crate::ode::{Dopri5, IntegratorSettings, OdeSystem};
use crate::special::bose_occupation;

/// What a collapse channel does physically; bundle analysis keys on `PhotonEmission`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChannelKind {
    /// `b + λσ₊σ₋`
    PhotonEmission,
    /// `σ₋`
    QubitDecay,
    /// `b† + λσ₊σ₋`
    PhotonAbsorption,
    /// `σ₊σ₋`
    Dephasing,
    /// `σ₊`
    QubitExcitation,
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub kind: ChannelKind,
    pub op: Operator,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DissipatorVariant {
    ZeroTemperature,
    /// Bath temperatures in units of ħω_b/k_B.
    Thermal { t_b: f64, t_sigma: f64 },
}

#[derive(Debug, Clone)]
pub struct DissipatorSet {
    pub channels: Vec<Channel>,
    pub variant: DissipatorVariant,
}

impl DissipatorSet {
    /// κ𝓛[b + λσ₊σ₋] + γ𝓛[σ₋]; channel 0 is the photon channel, 1 the qubit.
    pub fn zero_temperature(cfg: &SystemConfig) -> Self {
        let ops = ModelOperators::new(cfg);
        Self {
            channels: vec![
                Channel {
                    kind: ChannelKind::PhotonEmission,
                    op: ops.dressed_lowering,
                    rate: cfg.kappa,
                },
                Channel {
                    kind: ChannelKind::QubitDecay,
                    op: ops.sigma_minus,
                    rate: cfg.gamma,
                },
            ],
            variant: DissipatorVariant::ZeroTemperature,
        }
    }

    /// Finite-temperature resonator and qubit baths.
    ///
    /// Resonator: κ(n̄+1)𝓛[b + λσ₊σ₋] + κn̄𝓛[b† + λσ₊σ₋] + 4κT_bλ²𝓛[σ₊σ₋] with
    /// n̄ = n̄(1, T_b). Qubit: γ(n̄₀+1)𝓛[σ₋] + γn̄₀𝓛[σ₊] with n̄₀ = n̄(ω₀, T_σ).
    /// The qubit terms use the bare σ± rather than their time-dependent dressed
    /// counterparts, an approximation that only matters for T_σ > 0.
    pub fn thermal(cfg: &SystemConfig, t_b: f64, t_sigma: f64) -> Result<Self> {
        if !(t_b > 0.0 && t_b.is_finite()) {
            return Err(Error::param("thermal.t_b", "must be positive"));
        }
        if !(t_sigma > 0.0 && t_sigma.is_finite()) {
            return Err(Error::param("thermal.t_sigma", "must be positive"));
        }
        let omega0 = cfg.omega0.ok_or_else(|| {
            Error::param("model.omega0", "required by the thermal qubit bath")
        })?;
        let ops = ModelOperators::new(cfg);
        let n_b = bose_occupation(1.0, t_b);
        let n_q = bose_occupation(omega0, t_sigma);
        let lam = C64::new(cfg.lambda, 0.0);
        let raising = &ops.b.adjoint() + &ops.excited.scale(lam);
        let channels = vec![
            Channel {
                kind: ChannelKind::PhotonEmission,
                op: ops.dressed_lowering,
                rate: cfg.kappa * (n_b + 1.0),
            },
            Channel {
                kind: ChannelKind::QubitDecay,
                op: ops.sigma_minus,
                rate: cfg.gamma * (n_q + 1.0),
            },
            Channel {
                kind: ChannelKind::PhotonAbsorption,
                op: raising,
                rate: cfg.kappa * n_b,
            },
            Channel {
                kind: ChannelKind::Dephasing,
                op: ops.excited,
                rate: 4.0 * cfg.kappa * t_b * cfg.lambda * cfg.lambda,
            },
            Channel {
                kind: ChannelKind::QubitExcitation,
                op: ops.sigma_plus,
                rate: cfg.gamma * n_q,
            },
        ];
        Ok(Self {
            channels,
            variant: DissipatorVariant::Thermal { t_b, t_sigma },
        })
    }

    pub fn dim(&self) -> Option<usize> {
        self.channels.first().map(|c| c.op.dim())
    }

    /// Index of the first channel of the given kind.
    pub fn channel_of(&self, kind: ChannelKind) -> Option<usize> {
        self.channels.iter().position(|c| c.kind == kind)
    }

    /// `Σ_k r_k c_k†c_k`
    pub fn decay_operator(&self, dim: usize) -> Operator {
        let mut k = Operator::zeros(dim);
        for ch in &self.channels {
            let cc = &ch.op.adjoint() * &ch.op;
            k = &k + &cc.scale(C64::new(ch.rate, 0.0));
        }
        k
    }
}

/// `𝓛[c]ρ = (2cρc† − c†cρ − ρc†c)/2`.
pub fn dissipator(rho: &Operator, c: &Operator) -> Result<Operator> {
    if rho.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: c.dim(),
        });
    }
    let cd = c.adjoint();
    let cdc = &cd * c;
    let jump = &(c * rho) * &cd;
    let anti = &(&cdc * rho) + &(rho * &cdc);
    Ok((&jump.scale(C64::new(2.0, 0.0)) - &anti).scale(C64::new(0.5, 0.0)))
}

fn check_dims(rho: &Operator, cfg: &SystemConfig, diss: &DissipatorSet) -> Result<()> {
    let d = cfg.trunc.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    for ch in &diss.channels {
        if ch.op.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: ch.op.dim(),
            });
        }
    }
    Ok(())
}

/// `i[ρ, H(t)] + Σ_k r_k 𝓛[c_k]ρ` with H the full rotating-frame Hamiltonian.
pub fn me_rhs(t: f64, rho: &Operator, cfg: &SystemConfig, diss: &DissipatorSet) -> Result<Operator> {
    check_dims(rho, cfg, diss)?;
    let h = crate::model::hamiltonian_lab(t, cfg);
    let mut out = rho.commutator(&h).scale(C64::new(0.0, 1.0));
    for ch in &diss.channels {
        out = &out + &dissipator(rho, &ch.op)?.scale(C64::new(ch.rate, 0.0));
    }
    Ok(out)
}

/// Right-hand side with the finite-temperature dissipator set.
pub fn me_rhs_thermal(
    t: f64,
    rho: &Operator,
    cfg: &SystemConfig,
    t_b: f64,
    t_sigma: f64,
) -> Result<Operator> {
    let diss = DissipatorSet::thermal(cfg, t_b, t_sigma)?;
    me_rhs(t, rho, cfg, &diss)
}

/// Matrix entries below this magnitude are dropped when operators are moved
/// into the H₀ eigenbasis; they are rounding noise of the basis change.
const FRAME_DROP_TOL: f64 = 1e-14;

/// Row-compressed copy of a dense operator.
#[derive(Debug, Clone)]
pub(crate) struct SparseRows {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    fn with_cutoff(op: &Operator, scale: C64, cutoff: f64) -> Self {
        let dim = op.dim();
        let rows = (0..dim)
            .map(|i| {
                (0..dim)
                    .filter_map(|j| {
                        let v = op.get(i, j) * scale;
                        (v.norm() > cutoff).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self { dim, rows }
    }

    fn to_operator(&self) -> Operator {
        let mut m = Operator::zeros(self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m.set(i, j, v);
            }
        }
        m
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    /// out += s · A x for a vector x.
    #[inline]
    pub(crate) fn matvec_acc(&self, s: C64, x: &[C64], out: &mut [C64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            let mut acc = C64::new(0.0, 0.0);
            for &(j, v) in row {
                acc += v * x[j];
            }
            *o += s * acc;
        }
    }

    /// out += s · A X for a row-major d×d matrix X.
    #[inline]
    fn left_acc(&self, s: C64, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for (i, row) in self.rows.iter().enumerate() {
            let dst = &mut out[i * d..(i + 1) * d];
            for &(k, v) in row {
                let f = s * v;
                let src = &x[k * d..(k + 1) * d];
                for (o, x) in dst.iter_mut().zip(src) {
                    *o += f * x;
                }
            }
        }
    }

    /// out += s · X A† for a row-major d×d matrix X.
    #[inline]
    fn right_adjoint_acc(&self, s: C64, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let src = &x[i * d..(i + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (j, row) in self.rows.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &(k, v) in row {
                    acc += src[k] * v.conj();
                }
                dst[j] += s * acc;
            }
        }
    }
}

/// Interaction picture of H₀ in its eigenbasis: a lab-frame vector ψ is
/// `U P(t) φ` with `U` the eigenvectors and `P(t) = diag(e^{−iE_k t})`.
///
/// H₀ is handled exactly, so between pulses the integrator only has to
/// follow the slow decay instead of the photon-number phase rotation.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    energies: Vec<f64>,
    u: Operator,
}

impl Frame {
    fn new(cfg: &SystemConfig) -> Self {
        let (energies, u) = ModelOperators::new(cfg).h0.hermitian_eigen();
        Self { energies, u }
    }

    fn dim(&self) -> usize {
        self.energies.len()
    }

    pub(crate) fn phases(&self, t: f64, out: &mut [C64]) {
        for (p, e) in out.iter_mut().zip(&self.energies) {
            *p = C64::from_polar(1.0, -e * t);
        }
    }

    /// `U† A U`
    fn transform(&self, op: &Operator) -> Operator {
        &(&self.u.adjoint() * op) * &self.u
    }

    /// ψ = U P(t) φ
    pub(crate) fn to_lab_vector(&self, t: f64, phi: &[C64]) -> Vec<C64> {
        let mut p = vec![C64::new(0.0, 0.0); self.dim()];
        self.phases(t, &mut p);
        let w: Vec<C64> = p.iter().zip(phi).map(|(a, b)| a * b).collect();
        self.rotate(&w)
    }

    /// U w for an eigenbasis vector w.
    pub(crate) fn rotate(&self, w: &[C64]) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|k| self.u.get(i, k) * w[k]).sum())
            .collect()
    }

    /// φ = P(t)† U† ψ
    pub(crate) fn from_lab_vector(&self, t: f64, psi: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let mut p = vec![C64::new(0.0, 0.0); d];
        self.phases(t, &mut p);
        (0..d)
            .map(|k| {
                let w: C64 = (0..d).map(|i| self.u.get(i, k).conj() * psi[i]).sum();
                p[k].conj() * w
            })
            .collect()
    }

    /// ρ = U P ρ_I P† U†
    fn to_lab_matrix(&self, t: f64, rho_i: &[C64]) -> Operator {
        let d = self.dim();
        let mut p = vec![C64::new(0.0, 0.0); d];
        self.phases(t, &mut p);
        let sigma = Operator::from_fn(d, |k, l| p[k] * rho_i[k * d + l] * p[l].conj());
        &(&self.u * &sigma) * &self.u.adjoint()
    }

    /// ρ_I = P† U† ρ U P, row-major.
    fn from_lab_matrix(&self, t: f64, rho: &Operator) -> Vec<C64> {
        let d = self.dim();
        let mut p = vec![C64::new(0.0, 0.0); d];
        self.phases(t, &mut p);
        let sigma = self.transform(rho);
        let mut out = Vec::with_capacity(d * d);
        for k in 0..d {
            for l in 0..d {
                out.push(p[k].conj() * sigma.get(k, l) * p[l]);
            }
        }
        out
    }
}

/// Everything but H₀, expressed in the H₀ eigenbasis:
/// `H_eff − H₀ = f(t) σ₊ + f*(t) σ₋ − (i/2) Σ_k r_k c_k†c_k`.
pub(crate) struct EffectiveGenerator {
    pub(crate) cfg: SystemConfig,
    pub(crate) frame: Frame,
    /// `−(i/2) Σ_k r_k c_k†c_k`
    decay: SparseRows,
    sigma_plus: SparseRows,
    sigma_minus: SparseRows,
    /// `(channel index, √r_k c_k)` for every channel that can fire.
    pub(crate) jumps: Vec<(usize, SparseRows)>,
}

impl EffectiveGenerator {
    pub(crate) fn new(cfg: &SystemConfig, diss: &DissipatorSet) -> Self {
        let frame = Frame::new(cfg);
        let ops = ModelOperators::new(cfg);
        let one = C64::new(1.0, 0.0);
        let jumps: Vec<(usize, SparseRows)> = diss
            .channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.rate > 0.0)
            .map(|(i, c)| {
                let op = frame.transform(&c.op);
                (i, SparseRows::with_cutoff(&op, C64::new(c.rate.sqrt(), 0.0), FRAME_DROP_TOL))
            })
            .filter(|(_, s)| !s.is_empty())
            .collect();
        // Built from the truncated jump operators so the trace is conserved exactly.
        let mut k = Operator::zeros(frame.dim());
        for (_, c) in &jumps {
            let c = c.to_operator();
            k = &k + &(&c.adjoint() * &c);
        }
        Self {
            cfg: cfg.clone(),
            decay: SparseRows::with_cutoff(&k, C64::new(0.0, -0.5), 0.0),
            sigma_plus: SparseRows::with_cutoff(&frame.transform(&ops.sigma_plus), one, FRAME_DROP_TOL),
            sigma_minus: SparseRows::with_cutoff(&frame.transform(&ops.sigma_minus), one, FRAME_DROP_TOL),
            frame,
            jumps,
        }
    }

    /// out += s · (H_eff − H₀)(t) w for an eigenbasis (not phase-rotated) vector w.
    pub(crate) fn apply(&self, f: C64, s: C64, w: &[C64], out: &mut [C64]) {
        self.decay.matvec_acc(s, w, out);
        self.sigma_plus.matvec_acc(s * f, w, out);
        self.sigma_minus.matvec_acc(s * f.conj(), w, out);
    }

    fn apply_left(&self, f: C64, x: &[C64], out: &mut [C64]) {
        let one = C64::new(1.0, 0.0);
        self.decay.left_acc(one, x, out);
        self.sigma_plus.left_acc(f, x, out);
        self.sigma_minus.left_acc(f.conj(), x, out);
    }
}

/// The master equation in the form the integrator consumes.
///
/// The state is the row-major interaction-picture matrix `ρ_I = P†U†ρUP`
/// (see [`LindbladSystem::to_frame`]). Inputs are assumed Hermitian, which the
/// equation preserves; the output is Hermitian to the last bit.
pub struct LindbladSystem {
    gen: EffectiveGenerator,
    scratch: std::cell::RefCell<Scratch>,
}

struct Scratch {
    phases: Vec<C64>,
    sigma: Vec<C64>,
    a: Vec<C64>,
    x: Vec<C64>,
    out: Vec<C64>,
}

impl LindbladSystem {
    pub fn new(cfg: &SystemConfig, diss: &DissipatorSet) -> Result<Self> {
        let d = cfg.trunc.dim();
        if let Some(dd) = diss.dim() {
            if dd != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: dd,
                });
            }
        }
        let z = vec![C64::new(0.0, 0.0); d * d];
        Ok(Self {
            gen: EffectiveGenerator::new(cfg, diss),
            scratch: std::cell::RefCell::new(Scratch {
                phases: vec![C64::new(0.0, 0.0); d],
                sigma: z.clone(),
                a: z.clone(),
                x: z.clone(),
                out: z,
            }),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.gen.cfg
    }

    pub fn matrix_dim(&self) -> usize {
        self.gen.cfg.trunc.dim()
    }

    /// Lab-frame matrix at time t to integrator state.
    pub fn to_frame(&self, t: f64, rho: &Operator) -> Vec<C64> {
        self.gen.frame.from_lab_matrix(t, rho)
    }

    /// Integrator state at time t to lab-frame matrix.
    pub fn from_frame(&self, t: f64, y: &[C64]) -> Operator {
        self.gen.frame.to_lab_matrix(t, y)
    }
}

impl OdeSystem for LindbladSystem {
    fn dim(&self) -> usize {
        let d = self.matrix_dim();
        d * d
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let d = self.matrix_dim();
        let f = self.gen.cfg.drive_coefficient(t);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut scratch = self.scratch.borrow_mut();
        let Scratch {
            phases,
            sigma,
            a,
            x,
            out,
        } = &mut *scratch;
        self.gen.frame.phases(t, phases);
        // σ = P ρ_I P†, the eigenbasis matrix without the H₀ phases.
        for k in 0..d {
            for l in 0..d {
                sigma[k * d + l] = phases[k] * y[k * d + l] * phases[l].conj();
            }
        }
        a.iter_mut().for_each(|z| *z = zero);
        self.gen.apply_left(f, sigma, a);
        // −iA + (−iA)† with A = (H_eff − H₀) σ
        for i in 0..d {
            for j in i..d {
                let v = C64::new(a[i * d + j].im, -a[i * d + j].re)
                    + C64::new(a[j * d + i].im, -a[j * d + i].re).conj();
                out[i * d + j] = v;
                out[j * d + i] = v.conj();
            }
        }
        // Σ c σ c†, with √rate folded into c
        for (_, c) in &self.gen.jumps {
            x.iter_mut().for_each(|z| *z = zero);
            c.left_acc(one, sigma, x);
            a.iter_mut().for_each(|z| *z = zero);
            c.right_adjoint_acc(one, x, a);
            for i in 0..d {
                for j in i..d {
                    let v = (a[i * d + j] + a[j * d + i].conj()) * 0.5;
                    out[i * d + j] += v;
                    if j != i {
                        out[j * d + i] += v.conj();
                    }
                }
            }
        }
        for k in 0..d {
            for l in 0..d {
                dy[k * d + l] = phases[k].conj() * out[k * d + l] * phases[l];
            }
        }
    }
}

/// Propagates an arbitrary Hermitian matrix (normalized or not) and hands
/// every grid point in `[t0, t_end]` to `on_point`.
pub fn propagate_matrix(
    system: &LindbladSystem,
    rho0: &Operator,
    t0: f64,
    t_end: f64,
    settings: &IntegratorSettings,
    mut on_point: impl FnMut(f64, &Operator) -> Result<()>,
) -> Result<crate::ode::StepStats> {
    settings.validate()?;
    let d = system.matrix_dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho0.dim(),
        });
    }
    // The equation is linear, so integrate at unit scale to keep the
    // absolute tolerance meaningful for tiny conditioned matrices.
    let norm = rho0.max_abs();
    if norm == 0.0 {
        return Err(Error::param("rho0", "matrix is zero"));
    }
    let y0 = system.to_frame(t0, &rho0.scale(C64::new(1.0 / norm, 0.0)));
    let mut stepper = Dopri5::new(system, t0, &y0, settings);
    stepper.integrate_grid(t_end, &settings.grid, |t, y| {
        let mut m = system.from_frame(t, y);
        if norm != 1.0 {
            m = m.scale(C64::new(norm, 0.0));
        }
        on_point(t, &m)
    })?;
    Ok(stepper.stats())
}

/// Worst invariant deviations seen along a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct InvariantSummary {
    pub max_hermiticity: f64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub points: usize,
}

impl InvariantSummary {
    pub fn record(&mut self, r: &InvariantReport) {
        if self.points == 0 {
            self.min_eigenvalue = r.min_eigenvalue;
        }
        self.max_hermiticity = self.max_hermiticity.max(r.hermiticity);
        self.max_trace_drift = self.max_trace_drift.max(r.trace_drift);
        self.min_eigenvalue = self.min_eigenvalue.min(r.min_eigenvalue);
        self.points += 1;
    }

    pub fn merge(&mut self, other: &InvariantSummary) {
        if other.points == 0 {
            return;
        }
        if self.points == 0 {
            *self = *other;
            return;
        }
        self.max_hermiticity = self.max_hermiticity.max(other.max_hermiticity);
        self.max_trace_drift = self.max_trace_drift.max(other.max_trace_drift);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.points += other.points;
    }
}

/// Streams validated density states at every grid time in `span`.
///
/// Each emitted state is checked against the density-matrix invariants; the
/// first violation aborts the run.
pub fn evolve_master_with(
    rho0: &DensityState,
    span: (f64, f64),
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    settings: &IntegratorSettings,
    mut on_state: impl FnMut(&DensityState) -> Result<()>,
) -> Result<InvariantSummary> {
    rho0.invariants().check(span.0)?;
    let system = LindbladSystem::new(cfg, diss)?;
    let mut summary = InvariantSummary::default();
    propagate_matrix(&system, rho0.operator(), span.0, span.1, settings, |t, m| {
        let report = InvariantReport::measure(m);
        report.check(t)?;
        summary.record(&report);
        on_state(&DensityState::new_unchecked(m.clone(), t))
    })?;
    Ok(summary)
}

/// Collects the validated states at every grid time in `span`.
pub fn evolve_master(
    rho0: &DensityState,
    span: (f64, f64),
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    settings: &IntegratorSettings,
) -> Result<Vec<DensityState>> {
    let mut out = Vec::with_capacity(settings.grid.len());
    evolve_master_with(rho0, span, cfg, diss, settings, |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}
