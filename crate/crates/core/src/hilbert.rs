//! Truncated composite Hilbert space: one or two qubits sharing a single
//! motional mode.
//!
//! Units: ℏ = 1, trap frequency ν = 1 and ground-state width Δ = 1, so
//! `x = a + a†` and `p = i(a† − a)/2`.
//!
//! Basis ordering is qubit 1 ⊗ qubit 2 (if present) ⊗ mode, row-major, so the
//! flat index of `|q1, q2, n⟩` is `(q1·2 + q2)·N + n`. Each qubit uses
//! `|e⟩ = (1, 0)ᵀ` and `|g⟩ = (0, 1)ᵀ`, hence `σᶻ|e⟩ = +|e⟩` and
//! `σ⁺ = |e⟩⟨g|`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Ground-state width of the motional mode in simulation units.
pub const DELTA: f64 = 1.0;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n_qubits: usize,
    fock_cutoff: usize,
}

impl HilbertSpace {
    pub fn new(n_qubits: usize, fock_cutoff: usize) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::InvalidSpace(format!(
                "n_qubits must be 1 or 2, got {n_qubits}"
            )));
        }
        if fock_cutoff < 2 {
            return Err(Error::InvalidSpace(format!(
                "fock cutoff must be at least 2, got {fock_cutoff}"
            )));
        }
        Ok(Self {
            n_qubits,
            fock_cutoff,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.fock_cutoff
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit < self.n_qubits {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            })
        }
    }

    /// Flat index of the basis state with the given qubit levels and phonon number.
    pub fn index(&self, qubits: &[Level], phonons: usize) -> usize {
        debug_assert_eq!(qubits.len(), self.n_qubits);
        debug_assert!(phonons < self.fock_cutoff);
        let q = qubits.iter().fold(0, |acc, l| acc * 2 + l.basis_index());
        q * self.fock_cutoff + phonons
    }

    /// Splits a flat index into (qubit block, phonon number).
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.fock_cutoff, index % self.fock_cutoff)
    }

    /// Bit of `qubit` inside a qubit-block index (0 = |e⟩, 1 = |g⟩).
    #[inline]
    pub(crate) fn qubit_bit(&self, block: usize, qubit: usize) -> usize {
        (block >> (self.n_qubits - 1 - qubit)) & 1
    }

    fn same_as(&self, other: &HilbertSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Excited,
    Ground,
}

impl Level {
    pub fn basis_index(self) -> usize {
        match self {
            Level::Excited => 0,
            Level::Ground => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Single-qubit 2×2 matrices in the `(|e⟩, |g⟩)` basis.
pub mod qubit {
    use super::*;

    pub type Spinor = [C64; 2];

    pub fn pauli(axis: Axis) -> Matrix2<C64> {
        match axis {
            Axis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Axis::Y => Matrix2::new(ZERO, -I, I, ZERO),
            Axis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
            Axis::Plus => Matrix2::new(ZERO, ONE, ZERO, ZERO),
            Axis::Minus => Matrix2::new(ZERO, ZERO, ONE, ZERO),
        }
    }

    pub fn identity() -> Matrix2<C64> {
        Matrix2::identity()
    }

    pub fn excited() -> Spinor {
        [ONE, ZERO]
    }

    pub fn ground() -> Spinor {
        [ZERO, ONE]
    }

    /// +1 eigenstate of σˣ.
    pub fn plus_x() -> Spinor {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [re(s), re(s)]
    }

    /// −1 eigenstate of σˣ.
    pub fn minus_x() -> Spinor {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [re(s), re(-s)]
    }

    /// +1 eigenstate of σʸ.
    pub fn plus_y() -> Spinor {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [re(s), C64::new(0.0, s)]
    }

    /// exp(−i θ/2 · n̂·σ) for a Pauli axis.
    pub fn rotation(axis: Axis, angle: f64) -> Matrix2<C64> {
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        identity() * re(c) - pauli(axis) * C64::new(0.0, s)
    }
}

/// Mode-only ladder operator `a` on `n` Fock states.
pub fn mode_annihilation(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = re((k as f64).sqrt());
    }
    a
}

/// Mode-only `x = Δ(a + a†)`.
pub fn mode_position(n: usize) -> CMatrix {
    let a = mode_annihilation(n);
    (&a + a.adjoint()) * re(DELTA)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        Self {
            space,
            matrix: CMatrix::zeros(space.dim(), space.dim()),
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        Self {
            space,
            matrix: CMatrix::identity(space.dim(), space.dim()),
        }
    }

    /// Embeds an N×N mode matrix as `𝟙_qubits ⊗ m`.
    pub fn from_mode(space: HilbertSpace, mode: &CMatrix) -> Result<Self> {
        let n = space.fock_cutoff();
        if mode.nrows() != n || mode.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: mode.nrows(),
            });
        }
        let q = CMatrix::identity(space.qubit_dim(), space.qubit_dim());
        Ok(Self {
            space,
            matrix: q.kronecker(mode),
        })
    }

    /// Embeds a single-qubit matrix on `qubit`, identity elsewhere.
    pub fn from_qubit(space: HilbertSpace, qubit: usize, m: &Matrix2<C64>) -> Result<Self> {
        space.check_qubit(qubit)?;
        let m = CMatrix::from_fn(2, 2, |i, j| m[(i, j)]);
        let id2 = CMatrix::identity(2, 2);
        let mut acc = CMatrix::identity(1, 1);
        for q in 0..space.n_qubits() {
            acc = acc.kronecker(if q == qubit { &m } else { &id2 });
        }
        let mode = CMatrix::identity(space.fock_cutoff(), space.fock_cutoff());
        Ok(Self {
            space,
            matrix: acc.kronecker(&mode),
        })
    }

    pub fn annihilation(space: HilbertSpace) -> Self {
        Self::from_mode(space, &mode_annihilation(space.fock_cutoff())).expect("mode size")
    }

    pub fn creation(space: HilbertSpace) -> Self {
        Self::annihilation(space).adjoint()
    }

    pub fn number(space: HilbertSpace) -> Self {
        let a = Self::annihilation(space);
        &a.adjoint() * &a
    }

    pub fn position(space: HilbertSpace) -> Self {
        Self::from_mode(space, &mode_position(space.fock_cutoff())).expect("mode size")
    }

    pub fn momentum(space: HilbertSpace) -> Self {
        let a = Self::annihilation(space);
        (&a.adjoint() - &a) * C64::new(0.0, 0.5 / DELTA)
    }

    pub fn pauli(space: HilbertSpace, qubit: usize, axis: Axis) -> Result<Self> {
        Self::from_qubit(space, qubit, &qubit::pauli(axis))
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        &(self * other) + &(other * self)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        self.space.same_as(&psi.space)?;
        Ok(&self.matrix * &psi.amplitudes)
    }

    /// Max entrywise difference restricted to rows and columns whose phonon
    /// number is below `fock_cutoff − 1`, away from the truncation edge.
    pub fn interior_max_abs_diff(&self, other: &Operator) -> f64 {
        let n = self.space.fock_cutoff();
        let mut worst = 0.0f64;
        for i in 0..self.space.dim() {
            if i % n >= n - 1 {
                continue;
            }
            for j in 0..self.space.dim() {
                if j % n >= n - 1 {
                    continue;
                }
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        worst
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        Operator {
            space: self.space,
            matrix: self.matrix * rhs,
        }
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self * re(rhs)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self * -1.0
    }
}

impl std::iter::Sum for Operator {
    fn sum<T: Iterator<Item = Operator>>(mut iter: T) -> Operator {
        let first = iter.next().expect("sum of an empty operator list");
        iter.fold(first, |acc, op| &acc + &op)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: CVector,
}

impl StateVector {
    /// Normalizes the given amplitudes.
    pub fn new(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            space,
            amplitudes: amplitudes / re(norm),
        })
    }

    /// Product state of per-qubit spinors and a mode vector of length N.
    pub fn product(space: HilbertSpace, qubits: &[qubit::Spinor], mode: &CVector) -> Result<Self> {
        if qubits.len() != space.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: space.n_qubits(),
                actual: qubits.len(),
            });
        }
        if mode.len() != space.fock_cutoff() {
            return Err(Error::DimensionMismatch {
                expected: space.fock_cutoff(),
                actual: mode.len(),
            });
        }
        let mut acc = CVector::from_element(1, ONE);
        for s in qubits {
            acc = acc.kronecker(&CVector::from_column_slice(s));
        }
        Self::new(space, acc.kronecker(mode))
    }

    pub fn fock(space: HilbertSpace, qubits: &[Level], phonons: usize) -> Result<Self> {
        if phonons >= space.fock_cutoff() {
            return Err(Error::InvalidParameter {
                name: "phonons",
                reason: format!("{phonons} exceeds the Fock cutoff {}", space.fock_cutoff()),
            });
        }
        let mut v = CVector::zeros(space.dim());
        v[space.index(qubits, phonons)] = ONE;
        Self::new(space, v)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.same_as(&other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix without normalizing it; trace and Hermiticity are
    /// monitored by callers, not enforced here.
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_drift(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * re(0.5);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies `u ρ u†` for a unitary on the full space.
    pub fn conjugate(&self, u: &Operator) -> Result<Self> {
        self.space.same_as(&u.space)?;
        Ok(Self {
            space: self.space,
            matrix: &u.matrix * &self.matrix * u.matrix.adjoint(),
        })
    }
}

/// Tr[ρ·op].
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    rho.space.same_as(&op.space)?;
    Ok(trace_of_product(&rho.matrix, &op.matrix))
}

pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// F = ⟨ψ|ρ|ψ⟩, clipped into [0, 1].
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    rho.space.same_as(&psi.space)?;
    let v = &rho.matrix * &psi.amplitudes;
    let f = psi.amplitudes.dotc(&v).re;
    Ok(if f < 0.0 && f > -1e-10 { 0.0 } else { f.min(1.0) })
}

/// Motional density matrix (or any N×N mode operator obtained by a qubit
/// contraction of a full density matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDensity {
    matrix: CMatrix,
}

impl ModeDensity {
    pub fn new(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn fock_cutoff(&self) -> usize {
        self.matrix.nrows()
    }

    /// ⟨x⟩-style moment Tr[m·op] for a mode-only operator.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        trace_of_product(&self.matrix, op)
    }

    /// ⟨x|m|x⟩ on a grid using Hermite functions of width Δ.
    pub fn position_distribution(&self, x_grid: &[f64]) -> Vec<f64> {
        let n = self.fock_cutoff();
        let mut phi = vec![0.0; n];
        x_grid
            .iter()
            .map(|&x| {
                hermite_functions(x, &mut phi);
                let mut p = 0.0;
                for a in 0..n {
                    if phi[a] == 0.0 {
                        continue;
                    }
                    let mut row = ZERO;
                    for b in 0..n {
                        row += self.matrix[(a, b)] * phi[b];
                    }
                    p += (row * phi[a]).re;
                }
                p
            })
            .collect()
    }
}

/// Fills `out[n] = φ_n(x)`, the oscillator eigenfunctions for width Δ,
/// using the normalized three-term recurrence.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let u = x / DELTA;
    out[0] = (2.0 * std::f64::consts::PI).powf(-0.25) * (-u * u / 4.0).exp() / DELTA.sqrt();
    if out.len() > 1 {
        out[1] = u * out[0];
    }
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = (u * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
    }
}

/// Σ over qubit indices of `Q_{q,q'} ρ_{(q',·),(q,·)}` for a qubit-only
/// operator `Q` given on the full qubit register (size 2^n).
fn contract_qubits(rho: &DensityMatrix, q_op: &CMatrix) -> ModeDensity {
    let space = rho.space;
    let n = space.fock_cutoff();
    let qd = space.qubit_dim();
    let mut out = CMatrix::zeros(n, n);
    for q in 0..qd {
        for qp in 0..qd {
            let w = q_op[(q, qp)];
            if w == ZERO {
                continue;
            }
            let block = rho.matrix.view((qp * n, q * n), (n, n));
            out += block * w;
        }
    }
    ModeDensity::new(out)
}

/// Tr_qubits ρ.
pub fn partial_trace_qubits(rho: &DensityMatrix) -> ModeDensity {
    let qd = rho.space.qubit_dim();
    contract_qubits(rho, &CMatrix::identity(qd, qd))
}

/// Tr_qubits[(Q_qubit ⊗ 𝟙) ρ] for a single-qubit matrix on `qubit`.
pub fn reduce_with_qubit_operator(
    rho: &DensityMatrix,
    qubit: usize,
    q: &Matrix2<C64>,
) -> Result<ModeDensity> {
    let space = rho.space;
    space.check_qubit(qubit)?;
    let m = CMatrix::from_fn(2, 2, |i, j| q[(i, j)]);
    let id2 = CMatrix::identity(2, 2);
    let mut acc = CMatrix::identity(1, 1);
    for k in 0..space.n_qubits() {
        acc = acc.kronecker(if k == qubit { &m } else { &id2 });
    }
    Ok(contract_qubits(rho, &acc))
}

/// Unnormalized mode block ⟨q|ρ|q⟩ for a full qubit basis state.
pub fn project_qubits(rho: &DensityMatrix, levels: &[Level]) -> Result<ModeDensity> {
    let space = rho.space;
    if levels.len() != space.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: space.n_qubits(),
            actual: levels.len(),
        });
    }
    let n = space.fock_cutoff();
    let start = space.index(levels, 0);
    Ok(ModeDensity::new(
        rho.matrix.view((start, start), (n, n)).into_owned(),
    ))
}

/// P(x) of the motional state with all qubits traced out.
pub fn position_distribution(rho: &DensityMatrix, x_grid: &[f64]) -> Vec<f64> {
    partial_trace_qubits(rho).position_distribution(x_grid)
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points).map(|k| start + step * k as f64).collect()
        }
    }
}

/// Trapezoid rule on a (not necessarily uniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}
