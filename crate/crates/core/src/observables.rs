//! Measured quantities: populations, photon statistics, correlation
//! functions, reduced states, density snapshots and Wigner functions.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation_op, photon_lift, DensityState, FockTruncation, Operator, QuantumState, Qubit,
};
use crate::lindblad::{evolve_master, propagate_matrix, DissipatorSet, LindbladSystem};
use crate::model::{dressed_excited, SystemConfig};
use crate::ode::IntegratorSettings;
use crate::special::{laguerre, ln_factorial};

/// Below this value of `⟨b†ᴺbᴺ⟩` a correlation function is reported as undefined.
pub const CORRELATION_FLOOR: f64 = 1e-12;

/// Named real columns sampled on a shared, strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    grid: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let columns = vec![Vec::new(); names.len()];
        Self {
            grid: Vec::new(),
            names,
            columns,
        }
    }

    /// Appends one row; `t` must exceed the last time and every value must be finite.
    pub fn push(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.names.len(),
                found: values.len(),
            });
        }
        if !t.is_finite() || self.grid.last().is_some_and(|&last| t <= last) {
            return Err(Error::param("grid", format!("time {t} is not increasing")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("series", format!("non-finite value {v} at t = {t}")));
        }
        self.grid.push(t);
        for (col, &v) in self.columns.iter_mut().zip(values) {
            col.push(v);
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// CSV with a `t` column first, 12 significant digits, `\n` line ends.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let header = std::iter::once("t").chain(self.names.iter().map(String::as_str));
        w.write_record(header).map_err(csv_err)?;
        for (i, t) in self.grid.iter().enumerate() {
            let row = std::iter::once(*t)
                .chain(self.columns.iter().map(|c| c[i]))
                .map(fmt_value);
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

pub(crate) fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Bare product-basis populations `P_{|q,n⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    trunc: FockTruncation,
    values: Vec<f64>,
}

impl Populations {
    pub fn get(&self, qubit: Qubit, n: usize) -> f64 {
        if n > self.trunc.n_max() {
            return 0.0;
        }
        self.values[self.trunc.index(qubit, n)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Total excited-qubit population `⟨σ₊σ₋⟩`.
    pub fn excited(&self) -> f64 {
        (0..=self.trunc.n_max()).map(|n| self.get(Qubit::Excited, n)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Qubit, usize), f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.trunc.label(i), p))
    }
}

pub fn populations(state: &impl QuantumState, trunc: &FockTruncation) -> Result<Populations> {
    if state.dim() != trunc.dim() {
        return Err(Error::DimensionMismatch {
            expected: trunc.dim(),
            found: state.dim(),
        });
    }
    Ok(Populations {
        trunc: *trunc,
        values: state.diagonal(),
    })
}

/// Dressed excited populations `P_{|e,ñ⟩}` for n = 0 … n_max.
pub fn dressed_populations(state: &impl QuantumState, cfg: &SystemConfig) -> Result<Vec<f64>> {
    (0..=cfg.trunc.n_max())
        .map(|n| {
            let v = dressed_excited(n, cfg);
            let proj = Operator::from_fn(v.len(), |i, j| v[i] * v[j].conj());
            crate::hilbert::expectation(&proj, state)
        })
        .collect()
}

/// Partial trace over the qubit.
pub fn reduced_photon_state(rho: &DensityState, trunc: &FockTruncation) -> Result<DensityState> {
    if rho.dim() != trunc.dim() {
        return Err(Error::DimensionMismatch {
            expected: trunc.dim(),
            found: rho.dim(),
        });
    }
    let m = rho.operator();
    let reduced = Operator::from_fn(trunc.photon_dim(), |n, k| {
        [Qubit::Ground, Qubit::Excited]
            .iter()
            .map(|&q| m.get(trunc.index(q, n), trunc.index(q, k)))
            .sum()
    });
    DensityState::new(reduced, rho.time())
}

/// Which photon operator a correlation function is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PhotonOperator {
    /// The resonator annihilation operator `b`.
    Bare,
    /// `b + λσ₊σ₋` with the given λ.
    Dressed(f64),
}

/// `⟨b†ᵏ bᵏ⟩ = Σ_n P(n) n!/(n−k)!` from the photon-number distribution.
pub fn factorial_moment(state: &impl QuantumState, trunc: &FockTruncation, k: usize) -> Result<f64> {
    let pops = populations(state, trunc)?;
    Ok((k..=trunc.n_max())
        .map(|n| {
            let p = pops.get(Qubit::Ground, n) + pops.get(Qubit::Excited, n);
            p * (ln_factorial(n) - ln_factorial(n - k)).exp()
        })
        .sum())
}

fn photon_power(op: PhotonOperator, trunc: &FockTruncation, k: usize) -> Operator {
    let b = photon_lift(&annihilation_op(trunc));
    let a = match op {
        PhotonOperator::Bare => b,
        PhotonOperator::Dressed(lambda) => {
            let e = crate::hilbert::qubit_lift(&crate::hilbert::qubit_ops().excited, trunc);
            &b + &e.scale(C64::new(lambda, 0.0))
        }
    };
    a.pow(k as u32)
}

/// `⟨A†ᵏAᵏ⟩` for the chosen photon operator A.
pub fn normal_moment(
    state: &impl QuantumState,
    trunc: &FockTruncation,
    k: usize,
    op: PhotonOperator,
) -> Result<f64> {
    match op {
        PhotonOperator::Bare => factorial_moment(state, trunc, k),
        PhotonOperator::Dressed(_) => {
            let ak = photon_power(op, trunc, k);
            crate::hilbert::expectation(&(&ak.adjoint() * &ak), state)
        }
    }
}

/// Equal-time `g_N^(2) = ⟨A†ᴺA†ᴺAᴺAᴺ⟩ / ⟨A†ᴺAᴺ⟩²`.
pub fn g2_equal_time(
    state: &impl QuantumState,
    trunc: &FockTruncation,
    n: usize,
    op: PhotonOperator,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    let den = normal_moment(state, trunc, n, op)?;
    if !(den >= CORRELATION_FLOOR) {
        return Err(Error::UndefinedCorrelation(den));
    }
    Ok(normal_moment(state, trunc, 2 * n, op)? / (den * den))
}

/// Equal-time `g_N^(2)` along a sequence of states; undefined points are skipped,
/// so the returned grid is a subset of the state times.
pub fn g2_series<'a>(
    states: impl IntoIterator<Item = &'a DensityState>,
    trunc: &FockTruncation,
    n: usize,
    op: PhotonOperator,
) -> Result<TimeSeries> {
    let mut out = TimeSeries::new([format!("g2_N{n}")]);
    for st in states {
        match g2_equal_time(st, trunc, n, op) {
            Ok(g) => out.push(st.time(), &[g])?,
            Err(Error::UndefinedCorrelation(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Delayed correlation `g_N^(2)(t₁, t₁+τ)` by quantum regression, starting
/// from the state at t₁.
///
/// The conditioned matrix `AᴺρA†ᴺ` is propagated unnormalized alongside
/// ρ itself; the result has one row per τ (grid = τ values) where both
/// denominators clear the floor.
pub fn g2_delayed_from(
    rho_t1: &DensityState,
    taus: &[f64],
    n: usize,
    op: PhotonOperator,
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    settings: &IntegratorSettings,
) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    if taus.iter().any(|&t| t < 0.0) {
        return Err(Error::param("tau", "delays must be non-negative"));
    }
    let trunc = &cfg.trunc;
    let t1 = rho_t1.time();
    let d1 = normal_moment(rho_t1, trunc, n, op)?;
    if !(d1 >= CORRELATION_FLOOR) {
        return Err(Error::UndefinedCorrelation(d1));
    }
    let bn = photon_power(op, trunc, n);
    let cond = &(&bn * rho_t1.operator()) * &bn.adjoint();
    let number_n = &bn.adjoint() * &bn;

    let grid: Vec<f64> = taus.iter().map(|tau| t1 + tau).collect();
    let local = settings.with_grid(grid.clone());
    let t_end = grid.last().copied().unwrap_or(t1);
    let system = LindbladSystem::new(cfg, diss)?;

    let mut numer = Vec::with_capacity(grid.len());
    propagate_matrix(&system, &cond, t1, t_end, &local, |_, m| {
        numer.push(trace_product(&number_n, m));
        Ok(())
    })?;
    let mut denom = Vec::with_capacity(grid.len());
    propagate_matrix(&system, rho_t1.operator(), t1, t_end, &local, |_, m| {
        denom.push(trace_product(&number_n, m));
        Ok(())
    })?;

    let mut out = TimeSeries::new([format!("g2_N{n}")]);
    for ((tau, num), den) in taus.iter().zip(numer).zip(denom) {
        if den >= CORRELATION_FLOOR {
            out.push(*tau, &[num / (d1 * den)])?;
        }
    }
    Ok(out)
}

/// [`g2_delayed_from`] after first evolving `rho0` to `t1`.
pub fn g2_delayed(
    rho0: &DensityState,
    t1: f64,
    taus: &[f64],
    n: usize,
    op: PhotonOperator,
    cfg: &SystemConfig,
    diss: &DissipatorSet,
    settings: &IntegratorSettings,
) -> Result<TimeSeries> {
    if t1 < rho0.time() {
        return Err(Error::param("t1", "must not precede the initial state"));
    }
    let rho_t1 = if t1 == rho0.time() {
        rho0.clone()
    } else {
        let s = settings.with_grid(vec![t1]);
        evolve_master(rho0, (rho0.time(), t1), cfg, diss, &s)?
            .pop()
            .expect("grid contains t1")
    };
    g2_delayed_from(&rho_t1, taus, n, op, cfg, diss, settings)
}

fn trace_product(a: &Operator, b: &Operator) -> f64 {
    let d = a.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    acc.re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

/// Time of the extremum of `column` within `[window.0, window.1]`; ties go
/// to the earliest time.
pub fn locate_extremum_times(
    series: &TimeSeries,
    column: &str,
    window: (f64, f64),
    which: Extremum,
) -> Result<f64> {
    let values = series.column(column)?;
    let mut best: Option<(f64, f64)> = None;
    for (&t, &v) in series.grid().iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        let better = match (best, which) {
            (None, _) => true,
            (Some((_, b)), Extremum::Max) => v > b,
            (Some((_, b)), Extremum::Min) => v < b,
        };
        if better {
            best = Some((t, v));
        }
    }
    best.map(|(t, _)| t)
        .ok_or(Error::EmptyWindow(window.0, window.1))
}

/// `⟨n|D(β)|m⟩` for complex β, exact (not truncated).
pub fn displacement_element(n: usize, m: usize, beta: C64) -> C64 {
    let x = beta.norm_sqr();
    let (lo, hi) = (n.min(m), n.max(m));
    let k = (hi - lo) as i32;
    let mag = (0.5 * (ln_factorial(lo) - ln_factorial(hi)) - 0.5 * x).exp();
    let l = laguerre(lo, k as f64, x);
    let base = if n >= m { beta } else { -beta.conj() };
    base.powi(k) * (mag * l)
}

/// Wigner function sampled on a rectangular grid of α = re + i·im.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerField {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `values[i][j]` is W at `re[j] + i·im[i]`.
    pub values: Vec<Vec<f64>>,
}

impl WignerField {
    /// Normalization convention written into output metadata.
    pub const CONVENTION: &'static str =
        "W(alpha) = (2/pi) Tr[D(-alpha) rho D(alpha) P], P the photon parity";

    /// Trapezoid-free midpoint quadrature `Σ W Δre Δim` on a uniform grid.
    pub fn integral(&self) -> f64 {
        let dre = spacing(&self.re);
        let dim = spacing(&self.im);
        self.values.iter().flatten().sum::<f64>() * dre * dim
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Long-format CSV: `re,im,W`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["re", "im", "W"]).map_err(csv_err)?;
        for (i, &y) in self.im.iter().enumerate() {
            for (j, &x) in self.re.iter().enumerate() {
                w.write_record([fmt_value(x), fmt_value(y), fmt_value(self.values[i][j])])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn spacing(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        1.0
    } else {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    }
}

/// Uniform axis of `points` values over `[-half_width, half_width]`.
pub fn symmetric_axis(half_width: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0];
    }
    let step = 2.0 * half_width / (points - 1) as f64;
    (0..points).map(|k| -half_width + k as f64 * step).collect()
}

/// `W(α) = (2/π) Tr[D(−α)ρD(α)Π] = (2/π) Σ_{mn} ρ_{mn} (−1)^m ⟨n|D(2α)|m⟩`
/// for a photon-space density matrix.
pub fn wigner(rho_b: &Operator, re: &[f64], im: &[f64]) -> WignerField {
    let d = rho_b.dim();
    let values = im
        .iter()
        .map(|&y| {
            re.iter()
                .map(|&x| {
                    let beta = C64::new(2.0 * x, 2.0 * y);
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..d {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        for n in 0..d {
                            let r = rho_b.get(m, n);
                            if r != C64::new(0.0, 0.0) {
                                acc += r * displacement_element(n, m, beta) * sign;
                            }
                        }
                    }
                    acc.re * std::f64::consts::FRAC_2_PI
                })
                .collect()
        })
        .collect();
    WignerField {
        re: re.to_vec(),
        im: im.to_vec(),
        values,
    }
}

/// Elementwise `|ρ_ij|` with product-basis labels such as `g,2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySnapshot {
    pub time: f64,
    pub labels: Vec<String>,
    pub magnitudes: Vec<Vec<f64>>,
}

impl DensitySnapshot {
    /// Label of the largest diagonal entry.
    pub fn dominant_diagonal(&self) -> &str {
        let i = (0..self.labels.len())
            .max_by(|&a, &b| self.magnitudes[a][a].total_cmp(&self.magnitudes[b][b]))
            .unwrap_or(0);
        &self.labels[i]
    }

    /// Long-format CSV: `row,col,abs`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["row", "col", "abs"]).map_err(csv_err)?;
        for (i, row) in self.magnitudes.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                w.write_record([self.labels[i].clone(), self.labels[j].clone(), fmt_value(*v)])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn density_snapshot(rho: &DensityState, trunc: &FockTruncation) -> Result<DensitySnapshot> {
    if rho.dim() != trunc.dim() {
        return Err(Error::DimensionMismatch {
            expected: trunc.dim(),
            found: rho.dim(),
        });
    }
    let m = rho.operator();
    let labels = (0..trunc.dim())
        .map(|i| {
            let (q, n) = trunc.label(i);
            format!("{},{n}", q.label())
        })
        .collect();
    let magnitudes = (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j).norm()).collect())
        .collect();
    Ok(DensitySnapshot {
        time: rho.time(),
        labels,
        magnitudes,
    })
}

/// The standard per-time columns written for population runs:
/// `P_g0 … P_gK`, `P_e` and `n_b = ⟨b†b⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationColumns {
    pub trunc: FockTruncation,
    /// Highest photon number with its own `P_g` column.
    pub max_n: usize,
}

impl PopulationColumns {
    pub fn new(trunc: FockTruncation, max_n: usize) -> Self {
        Self {
            trunc,
            max_n: max_n.min(trunc.n_max()),
        }
    }

    pub fn names(&self) -> Vec<String> {
        (0..=self.max_n)
            .map(|n| format!("P_g{n}"))
            .chain(["P_e".to_string(), "n_b".to_string()])
            .collect()
    }

    pub fn evaluate(&self, state: &impl QuantumState) -> Result<Vec<f64>> {
        let pops = populations(state, &self.trunc)?;
        let mut row: Vec<f64> = (0..=self.max_n).map(|n| pops.get(Qubit::Ground, n)).collect();
        row.push(pops.excited());
        row.push(factorial_moment(state, &self.trunc, 1)?);
        Ok(row)
    }

    pub fn series(&self) -> TimeSeries {
        TimeSeries::new(self.names())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{displacement_op, number_op, PureState};
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn tr(n: usize) -> FockTruncation {
        FockTruncation::new(n).unwrap()
    }

    fn photon_fock(n_max: usize, n: usize) -> Operator {
        Operator::from_fn(n_max + 1, |i, j| {
            C64::new(if i == n && j == n { 1.0 } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn fock_populations() {
        let t = tr(4);
        let s = DensityState::basis(&t, Qubit::Ground, 2);
        let p = populations(&s, &t).unwrap();
        assert_eq!(p.get(Qubit::Ground, 2), 1.0);
        assert_eq!(p.iter().filter(|(_, v)| *v != 0.0).count(), 1);
        assert!((p.total() - 1.0).abs() < 1e-8);
        assert!(populations(&s, &tr(3)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let t = tr(3);
        let s = DensityState::basis(&t, Qubit::Ground, 2);
        let r = reduced_photon_state(&s, &t).unwrap();
        assert_eq!(r.operator(), &photon_fock(3, 2));

        let mut v = DVector::zeros(t.dim());
        v[t.index(Qubit::Ground, 0)] = C64::new(1.0, 0.0);
        v[t.index(Qubit::Excited, 1)] = C64::new(1.0, 0.0);
        let ent = PureState::normalized(v).unwrap().to_density(0.0);
        let r = reduced_photon_state(&ent, &t).unwrap();
        assert!((r.operator().get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((r.operator().get(1, 1).re - 0.5).abs() < 1e-15);
        assert_eq!(r.operator().get(0, 1), C64::new(0.0, 0.0));
        assert!((r.operator().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fock_correlations() {
        let t = tr(6);
        let s = DensityState::basis(&t, Qubit::Ground, 2);
        assert!((g2_equal_time(&s, &t, 1, PhotonOperator::Bare).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(g2_equal_time(&s, &t, 2, PhotonOperator::Bare).unwrap(), 0.0);
        for n in 2..=6 {
            let s = DensityState::basis(&t, Qubit::Ground, n);
            let g = g2_equal_time(&s, &t, 1, PhotonOperator::Bare).unwrap();
            assert!((g - (n as f64 - 1.0) / n as f64).abs() < 1e-10);
        }
        let vac = DensityState::basis(&t, Qubit::Ground, 0);
        assert!(matches!(
            g2_equal_time(&vac, &t, 1, PhotonOperator::Bare),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn bare_and_dressed_agree_on_ground_sector() {
        let t = tr(6);
        let s = DensityState::basis(&t, Qubit::Ground, 3);
        for n in 1..=2 {
            let a = g2_equal_time(&s, &t, n, PhotonOperator::Bare).unwrap();
            let b = g2_equal_time(&s, &t, n, PhotonOperator::Dressed(0.765)).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        let e = DensityState::basis(&t, Qubit::Excited, 2);
        let bare = normal_moment(&e, &t, 1, PhotonOperator::Bare).unwrap();
        let dressed = normal_moment(&e, &t, 1, PhotonOperator::Dressed(0.5)).unwrap();
        // ⟨e,2|(b† + λ)(b + λ)|e,2⟩ = 2 + λ²
        assert!((bare - 2.0).abs() < 1e-12);
        assert!((dressed - 2.25).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_is_poissonian() {
        let t = tr(40);
        let d = displacement_op(1.3, &t).unwrap();
        let mut vac = DVector::zeros(t.dim());
        vac[0] = C64::new(1.0, 0.0);
        let psi = photon_lift(&d).apply(&vac);
        let s = PureState::normalized(psi).unwrap().to_density(0.0);
        for n in 1..=3 {
            let g = g2_equal_time(&s, &t, n, PhotonOperator::Bare).unwrap();
            assert!((g - 1.0).abs() < 1e-8, "N={n} g={g}");
        }
        let mean = crate::hilbert::expectation(&photon_lift(&number_op(&t)), &s).unwrap();
        assert!((mean - 1.69).abs() < 1e-10);
    }

    #[test]
    fn extremum_window() {
        let mut s = TimeSeries::new(["x"]);
        for k in 0..10 {
            s.push(k as f64, &[k as f64]).unwrap();
        }
        assert_eq!(locate_extremum_times(&s, "x", (2.0, 6.5), Extremum::Max).unwrap(), 6.0);
        assert_eq!(locate_extremum_times(&s, "x", (2.0, 6.5), Extremum::Min).unwrap(), 2.0);
        assert!(locate_extremum_times(&s, "x", (20.0, 30.0), Extremum::Max).is_err());
        assert!(locate_extremum_times(&s, "y", (0.0, 3.0), Extremum::Max).is_err());

        let mut flat = TimeSeries::new(["x"]);
        for k in 0..5 {
            flat.push(k as f64, &[1.0]).unwrap();
        }
        assert_eq!(locate_extremum_times(&flat, "x", (0.0, 4.0), Extremum::Max).unwrap(), 0.0);
    }

    #[test]
    fn series_rejects_bad_rows() {
        let mut s = TimeSeries::new(["a", "b"]);
        s.push(0.0, &[1.0, 2.0]).unwrap();
        assert!(s.push(0.0, &[1.0, 2.0]).is_err());
        assert!(s.push(1.0, &[1.0]).is_err());
        assert!(s.push(1.0, &[f64::NAN, 2.0]).is_err());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn csv_layout() {
        let mut s = TimeSeries::new(["P_g0", "n_b"]);
        s.push(0.0, &[1.0, 0.0]).unwrap();
        s.push(10.0, &[0.25, 1.0 / 3.0]).unwrap();
        let text = s.to_csv_string();
        assert_eq!(
            text,
            "t,P_g0,n_b\n0.00000000000e0,1.00000000000e0,0.00000000000e0\n\
             1.00000000000e1,2.50000000000e-1,3.33333333333e-1\n"
        );
    }

    #[test]
    fn wigner_of_fock_states() {
        let axis = [0.0];
        let w0 = wigner(&photon_fock(5, 0), &axis, &axis);
        assert!((w0.values[0][0] - 2.0 / std::f64::consts::PI).abs() < 1e-14);
        let w1 = wigner(&photon_fock(5, 1), &axis, &axis);
        assert!((w1.values[0][0] + 2.0 / std::f64::consts::PI).abs() < 1e-14);

        let re = symmetric_axis(2.5, 41);
        let w2 = wigner(&photon_fock(6, 2), &re, &re);
        for (i, &y) in re.iter().enumerate() {
            for (j, &x) in re.iter().enumerate() {
                let r2 = x * x + y * y;
                let want = std::f64::consts::FRAC_2_PI * (-2.0 * r2).exp() * laguerre(2, 0.0, 4.0 * r2);
                assert!((w2.values[i][j] - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn wigner_normalization() {
        let n_max = 8;
        let axis = symmetric_axis(2.0 + (n_max as f64).sqrt(), 101);
        for n in 0..=4 {
            let w = wigner(&photon_fock(n_max, n), &axis, &axis);
            assert!((w.integral() - 1.0).abs() < 0.02, "n={n} {}", w.integral());
            assert!(w.min() >= -std::f64::consts::FRAC_2_PI - 1e-3);
        }
    }

    #[test]
    fn displacement_elements_match_expm() {
        let t = tr(30);
        let d = displacement_op(0.8, &t).unwrap();
        for n in 0..6 {
            for m in 0..6 {
                let z = displacement_element(n, m, C64::new(0.8, 0.0));
                assert!((z - d.get(n, m)).norm() < 1e-10, "{n} {m}");
            }
        }
    }

    #[test]
    fn snapshot_of_basis_state() {
        let t = tr(3);
        let s = DensityState::basis(&t, Qubit::Ground, 2);
        let snap = density_snapshot(&s, &t).unwrap();
        assert_eq!(snap.dominant_diagonal(), "g,2");
        let nonzero: Vec<f64> = snap.magnitudes.iter().flatten().copied().filter(|&v| v != 0.0).collect();
        assert_eq!(nonzero, vec![1.0]);
    }

    proptest! {
        #[test]
        fn snapshot_bounded(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let t = tr(3);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v = DVector::from_fn(t.dim(), |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let s = PureState::normalized(v).unwrap().to_density(0.0);
            let snap = density_snapshot(&s, &t).unwrap();
            prop_assert!(snap.magnitudes.iter().flatten().all(|&x| x <= 1.0 + 1e-12));
            let p = populations(&s, &t).unwrap();
            prop_assert!((p.total() - 1.0).abs() < 1e-8);
        }

        #[test]
        fn wigner_displacement_symmetry(x in -1.5f64..1.5, y in -1.5f64..1.5) {
            // Fock states are rotationally symmetric: W(α) = W(|α|).
            let rho = photon_fock(6, 3);
            let r = (x * x + y * y).sqrt();
            let a = wigner(&rho, &[x], &[y]).values[0][0];
            let b = wigner(&rho, &[r], &[0.0]).values[0][0];
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
