//! Monte-Carlo wavefunction unraveling of the master equation.
//!
//! Between jumps the unnormalized state follows `dψ/dt = −iH_eff ψ`. A jump
//! fires when ‖ψ‖² falls to a threshold drawn uniformly from (0, 1); the
//! crossing is located by bisection on the integrator's dense output, and the
//! channel is drawn with weights `r_k‖c_kψ‖²`.
//!
//! Every trajectory owns a ChaCha8 stream seeded from
//! [`split_seed`]`(master, k)`, so ensembles are reproducible regardless of how
//! many worker threads run them.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Operator, PureState};
use crate::lindblad::{ChannelKind, DissipatorSet, EffectiveGenerator};
use crate::model::SystemConfig;
use crate::observables::{PopulationColumns, TimeSeries};
use crate::ode::{Dopri5, IntegratorSettings, OdeSystem};

/// Jump-time resolution of the bisection.
pub const JUMP_TIME_TOL: f64 = 1e-3;
/// Required agreement `|‖ψ‖² − r|` at the resolved jump time.
pub const JUMP_NORM_TOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

/// Seed of trajectory `index` in an ensemble with the given master seed.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// `H(t) − (i/2) Σ_k r_k c_k†c_k`.
pub fn effective_hamiltonian(t: f64, cfg: &SystemConfig, diss: &DissipatorSet) -> Operator {
    let h = crate::model::hamiltonian_lab(t, cfg);
    let decay = diss.decay_operator(cfg.trunc.dim());
    &h - &decay.scale(C64::new(0.0, 0.5))
}

/// `dφ/dt = −i P† (H_eff − H₀) P φ` in the H₀ interaction picture, where
/// the lab state is `U P(t) φ`. The frame is unitary so ‖φ‖ = ‖ψ‖.
struct Schrodinger {
    gen: EffectiveGenerator,
    scratch: std::cell::RefCell<(Vec<C64>, Vec<C64>)>,
}

impl OdeSystem for Schrodinger {
    fn dim(&self) -> usize {
        self.gen.cfg.trunc.dim()
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let f = self.gen.cfg.drive_coefficient(t);
        let mut scratch = self.scratch.borrow_mut();
        let (p, w) = &mut *scratch;
        self.gen.frame.phases(t, p);
        for ((w, p), y) in w.iter_mut().zip(p.iter()).zip(y) {
            *w = p * y;
        }
        dy.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        self.gen.apply(f, C64::new(0.0, -1.0), w, dy);
        for (d, p) in dy.iter_mut().zip(p.iter()) {
            *d *= p.conj();
        }
    }
}

/// One quantum jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    /// Index into the dissipator set's channel list.
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jumps: Vec<Jump>,
    pub observables: TimeSeries,
    pub final_state: PureState,
}

impl TrajectoryRecord {
    pub fn jumps_in(&self, channel: usize, from: f64, to: f64) -> impl Iterator<Item = &Jump> {
        self.jumps
            .iter()
            .filter(move |j| j.channel == channel && j.time >= from && j.time < to)
    }

    /// One JSON object per line: seed, jumps and the sampled columns.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            seed: u64,
            jumps: &'a [Jump],
            observables: &'a TimeSeries,
        }
        let line = Line {
            seed: self.seed,
            jumps: &self.jumps,
            observables: &self.observables,
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

fn norm_sqr(y: &[C64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum()
}

fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r: f64 = rng.gen();
        if r > 0.0 {
            return r;
        }
    }
}

/// Runs one trajectory over `span`, sampling `columns` (on the normalized
/// state) at every grid time in `settings`.
pub fn run_trajectory(
    psi0: &PureState,
    span: (f64, f64),
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    settings: &IntegratorSettings,
    columns: &PopulationColumns,
    seed: u64,
) -> Result<TrajectoryRecord> {
    settings.validate()?;
    let d = cfg.trunc.dim();
    if psi0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi0.dim(),
        });
    }
    let sys = Schrodinger {
        gen: EffectiveGenerator::new(cfg, diss),
        scratch: std::cell::RefCell::new((vec![C64::new(0.0, 0.0); d], vec![C64::new(0.0, 0.0); d])),
    };
    let frame = &sys.gen.frame;
    let channels = &sys.gen.jumps;
    let mut phases = vec![C64::new(0.0, 0.0); d];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut threshold = draw_threshold(&mut rng);

    let (t0, t_end) = span;
    let grid = &settings.grid;
    let mut idx = grid.partition_point(|&g| g < t0);
    let mut series = columns.series();
    let mut jumps = Vec::new();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    let lab0: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let y0 = frame.from_lab_vector(t0, &lab0);
    let mut stepper = Dopri5::new(&sys, t0, &y0, settings);

    let sample = |series: &mut TimeSeries, t: f64, y: &[C64]| -> Result<()> {
        let lab = frame.to_lab_vector(t, y);
        let st = PureState::normalized(DVector::from_vec(lab))?;
        series.push(t, &columns.evaluate(&st)?)
    };

    if idx < grid.len() && grid[idx] == t0 {
        sample(&mut series, t0, &y0)?;
        idx += 1;
    }

    while stepper.t() < t_end {
        stepper.step(t_end)?;
        let t = stepper.t();
        let n2 = norm_sqr(stepper.y());
        if !n2.is_finite() || n2 <= 0.0 {
            return Err(Error::NormUnderflow(t));
        }
        if n2 > threshold {
            while idx < grid.len() && grid[idx] <= t {
                stepper.dense(grid[idx], &mut buf);
                sample(&mut series, grid[idx], &buf)?;
                idx += 1;
            }
            continue;
        }

        // ‖ψ‖² crossed the threshold inside [t_prev, t]: bisect on the interpolant.
        let (mut lo, mut hi) = (stepper.t_prev(), t);
        let mut n_hi = n2;
        for _ in 0..MAX_BISECTIONS {
            if hi - lo < JUMP_TIME_TOL && (n_hi - threshold).abs() < JUMP_NORM_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            stepper.dense(mid, &mut buf);
            let nm = norm_sqr(&buf);
            if nm > threshold {
                lo = mid;
            } else {
                hi = mid;
                n_hi = nm;
            }
        }
        let t_jump = hi;
        while idx < grid.len() && grid[idx] <= t_jump {
            stepper.dense(grid[idx], &mut buf);
            sample(&mut series, grid[idx], &buf)?;
            idx += 1;
        }
        if t_jump == t {
            buf.copy_from_slice(stepper.y());
        } else {
            stepper.dense(t_jump, &mut buf);
        }

        // Jumps act on the eigenbasis vector with the H₀ phases restored.
        frame.phases(t_jump, &mut phases);
        for (b, p) in buf.iter_mut().zip(&phases) {
            *b *= p;
        }
        let mut candidates: Vec<(usize, Vec<C64>, f64)> = Vec::with_capacity(channels.len());
        for (index, op) in channels {
            let mut out = vec![C64::new(0.0, 0.0); d];
            op.matvec_acc(C64::new(1.0, 0.0), &buf, &mut out);
            let w = norm_sqr(&out);
            candidates.push((*index, out, w));
        }
        let total: f64 = candidates.iter().map(|c| c.2).sum();
        if !(total > 0.0) {
            return Err(Error::NormUnderflow(t_jump));
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = candidates.len() - 1;
        for (k, c) in candidates.iter().enumerate() {
            if c.2 > 0.0 && pick < c.2 {
                chosen = k;
                break;
            }
            pick -= c.2;
        }
        while candidates[chosen].2 == 0.0 {
            chosen -= 1;
        }
        let (channel, mut post, w) = candidates.swap_remove(chosen);
        let s = 1.0 / w.sqrt();
        for (z, p) in post.iter_mut().zip(&phases) {
            *z *= s * p.conj();
        }
        jumps.push(Jump {
            time: t_jump,
            channel,
        });
        threshold = draw_threshold(&mut rng);
        stepper.reset(t_jump, &post);
    }

    let final_state = PureState::normalized(DVector::from_vec(frame.to_lab_vector(stepper.t(), stepper.y())))?;
    Ok(TrajectoryRecord {
        seed,
        jumps,
        observables: series,
        final_state,
    })
}

/// Runs `n_traj` trajectories, trajectory k seeded with `split_seed(master, k)`.
/// Records come back in index order whatever the thread count.
pub fn run_ensemble_records(
    psi0: &PureState,
    span: (f64, f64),
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    settings: &IntegratorSettings,
    columns: &PopulationColumns,
    n_traj: usize,
    master_seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    if n_traj == 0 {
        return Err(Error::param("trajectories", "must be at least 1"));
    }
    (0..n_traj as u64)
        .into_par_iter()
        .map(|k| {
            run_trajectory(
                psi0,
                span,
                cfg,
                diss,
                settings,
                columns,
                split_seed(master_seed, k),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub n_traj: usize,
    pub mean: TimeSeries,
    pub std_err: TimeSeries,
    /// Total jumps per channel index, summed over trajectories.
    pub jump_counts: Vec<u64>,
}

impl EnsembleResult {
    /// Mean and standard error of the mean at every grid point, reduced in
    /// record order.
    pub fn from_records(records: &[TrajectoryRecord], n_channels: usize) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::param("trajectories", "no records"))?;
        let names = first.observables.names().to_vec();
        let grid = first.observables.grid();
        let cols = names.len();
        for r in records {
            if r.observables.grid() != grid || r.observables.names() != names.as_slice() {
                return Err(Error::param("trajectories", "records sampled on different grids"));
            }
        }
        let n = records.len() as f64;
        let mut mean = TimeSeries::new(names.clone());
        let mut std_err = TimeSeries::new(names);
        for (i, &t) in grid.iter().enumerate() {
            let mut sum = vec![0.0; cols];
            for r in records {
                for (s, v) in sum.iter_mut().zip(r.observables.row(i)) {
                    *s += v;
                }
            }
            let m: Vec<f64> = sum.iter().map(|s| s / n).collect();
            let mut var = vec![0.0; cols];
            for r in records {
                for ((acc, v), mu) in var.iter_mut().zip(r.observables.row(i)).zip(&m) {
                    *acc += (v - mu) * (v - mu);
                }
            }
            let se: Vec<f64> = if records.len() > 1 {
                var.iter().map(|v| (v / (n - 1.0) / n).sqrt()).collect()
            } else {
                vec![0.0; cols]
            };
            mean.push(t, &m)?;
            std_err.push(t, &se)?;
        }
        let mut jump_counts = vec![0u64; n_channels];
        for r in records {
            for j in &r.jumps {
                if j.channel < n_channels {
                    jump_counts[j.channel] += 1;
                }
            }
        }
        Ok(Self {
            n_traj: records.len(),
            mean,
            std_err,
            jump_counts,
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    psi0: &PureState,
    span: (f64, f64),
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    settings: &IntegratorSettings,
    columns: &PopulationColumns,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    let records =
        run_ensemble_records(psi0, span, cfg, diss, settings, columns, n_traj, master_seed)?;
    EnsembleResult::from_records(&records, diss.channels.len())
}

/// Per-cycle photon-jump structure of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleStatistics {
    pub bundle_n: usize,
    pub window: f64,
    pub trajectories: usize,
    /// Trajectories in which every cycle had exactly N clustered photon jumps.
    pub conforming: usize,
    /// `histogram[k]` counts (trajectory, cycle) pairs with k photon jumps.
    pub histogram: Vec<usize>,
    /// Qubit-decay jumps across all trajectories, an adiabaticity diagnostic.
    pub qubit_jumps: usize,
}

impl BundleStatistics {
    pub fn fraction(&self) -> f64 {
        if self.trajectories == 0 {
            0.0
        } else {
            self.conforming as f64 / self.trajectories as f64
        }
    }
}

/// Splits every trajectory into pulse cycles (cycle m starts at
/// [`cycle_start`](crate::model::PulseSchedule::cycle_start)`(m)`, the last one
/// runs to `span_end`) and checks for exactly N photon jumps spread over at
/// most `window`.
pub fn bundle_statistics(
    records: &[TrajectoryRecord],
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    window: f64,
    span_end: f64,
) -> Result<BundleStatistics> {
    let photon = diss
        .channel_of(ChannelKind::PhotonEmission)
        .ok_or_else(|| Error::param("dissipators", "no photon channel"))?;
    let qubit = diss.channel_of(ChannelKind::QubitDecay);
    let n = cfg.bundle_n;
    let cycles = cfg.pulses.count;
    let mut histogram = vec![0usize; n + 2];
    let mut conforming = 0;
    let mut qubit_jumps = 0;
    for r in records {
        let mut ok = true;
        for m in 0..cycles {
            let from = if m == 0 {
                f64::NEG_INFINITY
            } else {
                cfg.pulses.cycle_start(m)
            };
            let to = if m + 1 == cycles {
                span_end
            } else {
                cfg.pulses.cycle_start(m + 1)
            };
            let times: Vec<f64> = r.jumps_in(photon, from, to).map(|j| j.time).collect();
            histogram[times.len().min(n + 1)] += 1;
            let clustered = match (times.first(), times.last()) {
                (Some(a), Some(b)) => b - a <= window,
                _ => true,
            };
            ok &= times.len() == n && clustered;
        }
        if ok {
            conforming += 1;
        }
        if let Some(q) = qubit {
            qubit_jumps += r.jumps.iter().filter(|j| j.channel == q).count();
        }
    }
    Ok(BundleStatistics {
        bundle_n: n,
        window,
        trajectories: records.len(),
        conforming,
        histogram,
        qubit_jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{FockTruncation, Qubit};
    use crate::model::{hamiltonian_lab, PulseSchedule};
    use crate::ode::uniform_grid;

    fn cfg(lambda: f64, kappa: f64, gamma: f64, amp: f64) -> SystemConfig {
        let p = PulseSchedule {
            amp,
            sigma: 180.0,
            t1: 1000.0,
            t2: 750.0,
            period: 10000.0,
            count: 1,
        };
        SystemConfig::new(lambda, kappa, gamma, p, FockTruncation::new(6).unwrap(), 2).unwrap()
    }

    #[test]
    fn effective_hamiltonian_examples() {
        let c = cfg(0.765, 0.0, 0.0, 0.05);
        let d = DissipatorSet::zero_temperature(&c);
        assert_eq!(effective_hamiltonian(900.0, &c, &d), hamiltonian_lab(900.0, &c));

        let c = cfg(0.765, 0.0006, 0.002, 0.05);
        let d = DissipatorSet::zero_temperature(&c);
        let h = effective_hamiltonian(900.0, &c, &d);
        let anti = (&h - &h.adjoint()).scale(C64::new(0.0, -0.5));
        assert!(anti.hermitian_eigenvalues().iter().all(|&e| e <= 1e-15));
        assert_eq!(h.get(0, 0).im, 0.0);
    }

    #[test]
    fn seeds_split_deterministically() {
        assert_eq!(split_seed(7, 3), split_seed(7, 3));
        assert_ne!(split_seed(7, 3), split_seed(7, 4));
        assert_ne!(split_seed(7, 3), split_seed(8, 3));
    }

    #[test]
    fn closed_system_has_no_jumps() {
        let c = cfg(0.765, 0.0, 0.0, 0.05);
        let d = DissipatorSet::zero_temperature(&c);
        let grid = uniform_grid(600.0, 900.0, 50.0);
        let s = IntegratorSettings::new(1e-10, 1e-12, 18.0, grid).unwrap();
        let psi = PureState::basis(&c.trunc, Qubit::Ground, 0);
        let cols = PopulationColumns::new(c.trunc, 2);
        let rec = run_trajectory(&psi, (600.0, 900.0), &c, &d, &s, &cols, 1).unwrap();
        assert!(rec.jumps.is_empty());
        assert_eq!(rec.observables.len(), 7);

        let rho = crate::lindblad::evolve_master(&psi.to_density(600.0), (600.0, 900.0), &c, &d, &s).unwrap();
        let want = rho.last().unwrap().operator();
        let got = rec.final_state.to_density(900.0);
        assert!(got.operator().max_abs_diff(want) < 1e-6);
    }

    #[test]
    fn pure_decay_emits_every_photon() {
        let c = cfg(0.0, 0.01, 0.0, 0.0);
        let d = DissipatorSet::zero_temperature(&c);
        let s = IntegratorSettings::new(1e-8, 1e-10, 50.0, vec![]).unwrap();
        let psi = PureState::basis(&c.trunc, Qubit::Ground, 2);
        let cols = PopulationColumns::new(c.trunc, 2);
        for k in 0..100 {
            let rec = run_trajectory(&psi, (0.0, 4000.0), &c, &d, &s, &cols, split_seed(5, k)).unwrap();
            assert_eq!(rec.jumps.len(), 2);
            assert!(rec.jumps.iter().all(|j| j.channel == 0));
            assert!(rec.jumps[0].time < rec.jumps[1].time);
            assert!(rec.jumps[1].time < 4000.0);
        }
    }

    #[test]
    fn ensemble_of_one_equals_record() {
        let c = cfg(0.0, 0.01, 0.0, 0.0);
        let d = DissipatorSet::zero_temperature(&c);
        let s = IntegratorSettings::new(1e-8, 1e-10, 50.0, uniform_grid(0.0, 300.0, 30.0)).unwrap();
        let psi = PureState::basis(&c.trunc, Qubit::Ground, 1);
        let cols = PopulationColumns::new(c.trunc, 2);
        let recs = run_ensemble_records(&psi, (0.0, 300.0), &c, &d, &s, &cols, 1, 9).unwrap();
        let ens = EnsembleResult::from_records(&recs, 2).unwrap();
        assert_eq!(ens.mean, recs[0].observables);
        assert!(ens.std_err.column("P_g0").unwrap().iter().all(|&v| v == 0.0));
        assert!(run_ensemble(&psi, (0.0, 300.0), &c, &d, &s, &cols, 0, 9).is_err());
    }

    #[test]
    fn jsonl_line() {
        let c = cfg(0.0, 0.01, 0.0, 0.0);
        let d = DissipatorSet::zero_temperature(&c);
        let s = IntegratorSettings::new(1e-8, 1e-10, 50.0, uniform_grid(0.0, 100.0, 50.0)).unwrap();
        let psi = PureState::basis(&c.trunc, Qubit::Ground, 1);
        let cols = PopulationColumns::new(c.trunc, 1);
        let rec = run_trajectory(&psi, (0.0, 100.0), &c, &d, &s, &cols, 42).unwrap();
        let mut buf = Vec::new();
        rec.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n'));
        assert_eq!(text.matches('\n').count(), 1);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["observables"]["names"][0], "P_g0");
    }
}
