//! Operators and states on the truncated qubit ⊗ Fock space.
//!
//! Basis ordering is qubit-major: `|g,0⟩, |g,1⟩, …, |g,n_max⟩, |e,0⟩, …, |e,n_max⟩`.
//! Every composite index goes through [`FockTruncation::index`], and every
//! Kronecker product puts the qubit factor first.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`tensor`]. The model needs at most a few dozen.
pub const MAX_DIM: usize = 4096;

/// Normalization tolerance for pure states.
pub const NORM_TOL: f64 = 1e-10;
/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-8;
/// Smallest eigenvalue a density matrix may have.
pub const EIGEN_FLOOR: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Qubit {
    Ground,
    Excited,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::Ground => 0,
            Qubit::Excited => 1,
        }
    }

    pub fn label(self) -> char {
        match self {
            Qubit::Ground => 'g',
            Qubit::Excited => 'e',
        }
    }
}

/// Photon-number cutoff: the Fock factor keeps `|0⟩ … |n_max⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FockTruncation {
    n_max: usize,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidTruncation(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Dimension of the photon factor, `n_max + 1`.
    pub fn photon_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Dimension of the composite space, `2 (n_max + 1)`.
    pub fn dim(&self) -> usize {
        2 * self.photon_dim()
    }

    pub fn index(&self, qubit: Qubit, n: usize) -> usize {
        debug_assert!(n <= self.n_max);
        qubit.index() * self.photon_dim() + n
    }

    /// Inverse of [`index`](Self::index).
    pub fn label(&self, index: usize) -> (Qubit, usize) {
        let q = if index < self.photon_dim() {
            Qubit::Ground
        } else {
            Qubit::Excited
        };
        (q, index % self.photon_dim())
    }
}

/// Dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Wraps a matrix; fails unless it is square with finite entries.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("operator", "non-finite entry"));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖A − A†‖_max.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.0 * v
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Eigenvalues and orthonormal eigenvectors (as columns) of the Hermitian part.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, Operator) {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), Operator(eig.eigenvectors))
    }

    /// Restriction to a qubit sector: the photon-space block `⟨q,·|A|q',·⟩`.
    pub fn qubit_block(&self, trunc: &FockTruncation, row: Qubit, col: Qubit) -> Operator {
        let p = trunc.photon_dim();
        let (r0, c0) = (row.index() * p, col.index() * p);
        Operator(self.0.view((r0, c0), (p, p)).into_owned())
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

/// Photon annihilation operator `b` on the Fock factor: `⟨n−1|b|n⟩ = √n`.
pub fn annihilation_op(trunc: &FockTruncation) -> Operator {
    let p = trunc.photon_dim();
    Operator::from_fn(p, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Number operator `b†b` on the Fock factor.
pub fn number_op(trunc: &FockTruncation) -> Operator {
    let p = trunc.photon_dim();
    Operator::from_fn(p, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Photon parity `(−1)^{b†b}`.
pub fn parity_op(trunc: &FockTruncation) -> Operator {
    let p = trunc.photon_dim();
    Operator::from_fn(p, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if i % 2 == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        }
    })
}

/// Qubit operators in the `{|g⟩, |e⟩}` basis (index 0 = g, 1 = e).
#[derive(Debug, Clone)]
pub struct QubitOps {
    /// σ₊ = |e⟩⟨g|
    pub raising: Operator,
    /// σ₋ = |g⟩⟨e|
    pub lowering: Operator,
    /// σ₊σ₋ = |e⟩⟨e|
    pub excited: Operator,
}

pub fn qubit_ops() -> QubitOps {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let raising = Operator(DMatrix::from_row_slice(2, 2, &[z, z, o, z]));
    let lowering = raising.adjoint();
    let excited = &raising * &lowering;
    QubitOps {
        raising,
        lowering,
        excited,
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .filter(|&d| d <= MAX_DIM)
        .ok_or(Error::DimensionOverflow(a.dim().saturating_mul(b.dim())))?;
    let m = a.0.kronecker(&b.0);
    debug_assert_eq!(m.nrows(), dim);
    Ok(Operator(m))
}

/// Lifts a photon-factor operator to the composite space as `I_qubit ⊗ op`.
pub fn photon_lift(op: &Operator) -> Operator {
    tensor(&Operator::identity(2), op).expect("photon factor is small")
}

/// Lifts a qubit operator to the composite space as `op ⊗ I_photon`.
pub fn qubit_lift(op: &Operator, trunc: &FockTruncation) -> Operator {
    tensor(op, &Operator::identity(trunc.photon_dim())).expect("photon factor is small")
}

/// Matrix exponential by scaling and squaring around a truncated Taylor series.
pub fn expm(a: &Operator) -> Operator {
    let norm1 = (0..a.dim())
        .map(|j| (0..a.dim()).map(|i| a.0[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    // Scale so the 1-norm is at most 1/2; the order-20 Taylor tail is then below 1e-25.
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = &a.0 * C64::new(0.5f64.powi(squarings as i32), 0.0);
    let dim = a.dim();
    let mut sum = DMatrix::<C64>::identity(dim, dim);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    for k in 1..=20 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Operator(sum)
}

/// `D(β) = exp[β(b† − b)]` on the Fock factor, computed from the truncated generator.
pub fn displacement_op(beta: f64, trunc: &FockTruncation) -> Result<Operator> {
    if !beta.is_finite() {
        return Err(Error::param("beta", "must be finite"));
    }
    let b = annihilation_op(trunc);
    let generator = (&b.adjoint() - &b).scale(C64::new(beta, 0.0));
    Ok(expm(&generator))
}

/// Normalized pure state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Accepts amplitudes whose norm is already within [`NORM_TOL`] of one.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    /// Product basis state `|q, n⟩`.
    pub fn basis(trunc: &FockTruncation, qubit: Qubit, n: usize) -> Self {
        let mut v = DVector::zeros(trunc.dim());
        v[trunc.index(qubit, n)] = C64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn to_density(&self, time: f64) -> DensityState {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityState {
            matrix: Operator(m),
            time,
        }
    }
}

/// Normalized density matrix stamped with its time (units 1/ω_b).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: Operator,
    time: f64,
}

/// Measured deviations from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct InvariantReport {
    pub hermiticity: f64,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
}

impl InvariantReport {
    pub fn measure(m: &Operator) -> Self {
        Self {
            hermiticity: m.hermiticity_error(),
            trace_drift: (m.trace() - C64::new(1.0, 0.0)).norm(),
            min_eigenvalue: m.hermitian_eigenvalues().first().copied().unwrap_or(0.0),
        }
    }

    pub fn check(&self, time: f64) -> Result<()> {
        let what = if !(self.hermiticity <= HERMITIAN_TOL) {
            format!("hermiticity error {:e}", self.hermiticity)
        } else if !(self.trace_drift <= TRACE_TOL) {
            format!("trace drift {:e}", self.trace_drift)
        } else if !(self.min_eigenvalue >= EIGEN_FLOOR) {
            format!("minimum eigenvalue {:e}", self.min_eigenvalue)
        } else {
            return Ok(());
        };
        Err(Error::InvariantViolation { time, what })
    }
}

impl DensityState {
    /// Validates Hermiticity, unit trace and the eigenvalue floor.
    pub fn new(matrix: Operator, time: f64) -> Result<Self> {
        InvariantReport::measure(&matrix).check(time)?;
        Ok(Self { matrix, time })
    }

    /// Skips validation; for states produced by code that already checked them.
    pub(crate) fn new_unchecked(matrix: Operator, time: f64) -> Self {
        Self { matrix, time }
    }

    pub fn basis(trunc: &FockTruncation, qubit: Qubit, n: usize) -> Self {
        PureState::basis(trunc, qubit, n).to_density(0.0)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn operator(&self) -> &Operator {
        &self.matrix
    }

    pub fn invariants(&self) -> InvariantReport {
        InvariantReport::measure(&self.matrix)
    }
}

/// Anything an observable can be evaluated on.
pub trait QuantumState {
    fn dim(&self) -> usize;
    /// `Tr(A ρ)` or `⟨ψ|A|ψ⟩`, without dimension checks.
    fn expect_raw(&self, obs: &Operator) -> C64;
    /// Diagonal of the density matrix in the product basis.
    fn diagonal(&self) -> Vec<f64>;
}

impl QuantumState for PureState {
    fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn expect_raw(&self, obs: &Operator) -> C64 {
        self.amplitudes.dotc(&(&obs.0 * &self.amplitudes))
    }

    fn diagonal(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl QuantumState for DensityState {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn expect_raw(&self, obs: &Operator) -> C64 {
        // Tr(A ρ) = Σ_ij A_ij ρ_ji
        let (a, r) = (&obs.0, &self.matrix.0);
        let d = a.nrows();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += a[(i, j)] * r[(j, i)];
            }
        }
        acc
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix.0[(i, i)].re).collect()
    }
}

/// Complex expectation value `Tr(obs ρ)` / `⟨ψ|obs|ψ⟩`.
pub fn expectation_complex(obs: &Operator, state: &impl QuantumState) -> Result<C64> {
    if obs.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: obs.dim(),
        });
    }
    Ok(state.expect_raw(obs))
}

/// Real expectation of a Hermitian observable; the imaginary part must be below 1e-10.
pub fn expectation(obs: &Operator, state: &impl QuantumState) -> Result<f64> {
    let z = expectation_complex(obs, state)?;
    if z.im.abs() > 1e-10 {
        return Err(Error::NonRealExpectation(z.im));
    }
    Ok(z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn annihilation_small() {
        let b = annihilation_op(&FockTruncation::new(1).unwrap());
        assert_eq!(b.get(0, 1), c(1.0));
        assert_eq!(b.get(0, 0), c(0.0));
        assert_eq!(b.get(1, 0), c(0.0));
        assert_eq!(b.get(1, 1), c(0.0));
        let b2 = annihilation_op(&FockTruncation::new(2).unwrap());
        assert!((b2.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn truncated_commutator_is_identity_except_corner() {
        let t = FockTruncation::new(6).unwrap();
        let b = annihilation_op(&t);
        let comm = b.commutator(&b.adjoint());
        for i in 0..=6 {
            for j in 0..=6 {
                let expect = if i != j {
                    0.0
                } else if i == 6 {
                    -6.0
                } else {
                    1.0
                };
                assert!((comm.get(i, j) - c(expect)).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn zero_truncation_rejected() {
        assert!(matches!(
            FockTruncation::new(0),
            Err(Error::InvalidTruncation(0))
        ));
    }

    #[test]
    fn qubit_operator_algebra() {
        let q = qubit_ops();
        let e = DVector::from_vec(vec![c(0.0), c(1.0)]);
        let g = DVector::from_vec(vec![c(1.0), c(0.0)]);
        assert_eq!(q.excited.apply(&e), e);
        assert_eq!(q.excited.apply(&g).norm(), 0.0);
        assert_eq!((&q.raising * &q.raising).max_abs(), 0.0);
        assert_eq!(q.raising.adjoint(), q.lowering);
        // σ₊|g⟩ = |e⟩
        assert_eq!(q.raising.apply(&g), e);
    }

    #[test]
    fn tensor_conventions() {
        let t = FockTruncation::new(4).unwrap();
        let id = tensor(&Operator::identity(2), &Operator::identity(5)).unwrap();
        assert_eq!(id, Operator::identity(t.dim()));

        let q = qubit_ops();
        let b = annihilation_op(&t);
        let lhs = &qubit_lift(&q.excited, &t) * &photon_lift(&b);
        let rhs = tensor(&q.excited, &b).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);

        // qubit-major: σ₊ ⊗ I maps |g,n⟩ to |e,n⟩
        let sp = qubit_lift(&q.raising, &t);
        assert_eq!(sp.get(t.index(Qubit::Excited, 3), t.index(Qubit::Ground, 3)), c(1.0));
    }

    #[test]
    fn tensor_overflow_guard() {
        let a = Operator::identity(100);
        assert!(matches!(tensor(&a, &a), Err(Error::DimensionOverflow(_))));
    }

    #[test]
    fn displacement_basics() {
        let t = FockTruncation::new(30).unwrap();
        let d0 = displacement_op(0.0, &t).unwrap();
        assert!(d0.max_abs_diff(&Operator::identity(31)) < 1e-15);
        let d1 = displacement_op(1.0, &t).unwrap();
        assert!((d1.get(0, 0).re - (-0.5f64).exp()).abs() < 1e-12);
        assert!((d1.get(0, 0).re - 0.60653).abs() < 1e-5);
        assert!(displacement_op(f64::NAN, &t).is_err());
    }

    #[test]
    fn displacement_columns_orthonormal() {
        let t = FockTruncation::new(30).unwrap();
        for &beta in &[0.3, 0.765, 1.0] {
            let d = displacement_op(beta, &t).unwrap();
            let gram = &d.adjoint() * &d;
            for i in 0..=15 {
                for j in 0..=15 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((gram.get(i, j) - c(e)).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn displacement_inverse_on_low_block() {
        let t = FockTruncation::new(12).unwrap();
        let d = displacement_op(0.8, &t).unwrap();
        let dm = displacement_op(-0.8, &t).unwrap();
        let prod = &d * &dm;
        for i in 0..=6 {
            for j in 0..=6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - c(e)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let t = FockTruncation::new(4).unwrap();
        let n = photon_lift(&number_op(&t));
        let ee = qubit_lift(&qubit_ops().excited, &t);
        let g2 = PureState::basis(&t, Qubit::Ground, 2);
        assert!((expectation(&n, &g2).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(expectation(&ee, &g2).unwrap(), 0.0);

        let a = DensityState::basis(&t, Qubit::Ground, 0);
        let b = DensityState::basis(&t, Qubit::Ground, 2);
        let mixed = (&a.operator().scale(c(0.5))) + &b.operator().scale(c(0.5));
        let mixed = DensityState::new(mixed, 0.0).unwrap();
        assert!((expectation(&n, &mixed).unwrap() - 1.0).abs() < 1e-15);

        let wrong = Operator::identity(3);
        assert!(matches!(
            expectation(&wrong, &mixed),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_invariants_enforced() {
        let t = FockTruncation::new(2).unwrap();
        let rho = DensityState::basis(&t, Qubit::Ground, 1);
        let doubled = rho.operator().scale(c(2.0));
        assert!(matches!(
            DensityState::new(doubled, 0.0),
            Err(Error::InvariantViolation { .. })
        ));
        assert!(PureState::new(DVector::from_element(6, c(1.0))).is_err());
    }

    proptest! {
        #[test]
        fn constructors_double_adjoint(n_max in 1usize..10, beta in -1.0f64..1.0) {
            let t = FockTruncation::new(n_max).unwrap();
            let q = qubit_ops();
            for op in [annihilation_op(&t), displacement_op(beta, &t).unwrap(), q.raising, q.lowering, q.excited] {
                prop_assert_eq!(op.adjoint().adjoint(), op);
            }
        }

        #[test]
        fn kron_trace_factorizes(n_max in 1usize..6, beta in -1.0f64..1.0) {
            let t = FockTruncation::new(n_max).unwrap();
            let a = Operator::from_fn(2, |i, j| C64::new((i + 2 * j) as f64, beta));
            let b = displacement_op(beta, &t).unwrap();
            let k = tensor(&a, &b).unwrap();
            prop_assert!((k.trace() - a.trace() * b.trace()).norm() < 1e-12);
        }
    }
}
