//! Finite-dimensional complex Hilbert spaces: state vectors, operators in
//! dense or structured (diagonal-in-position, diagonal-in-momentum) form,
//! tensor products and spectral decomposition.
//!
//! Tensor products use one index convention everywhere: the left factor is
//! the slow index, so `(a ⊗ b)[i * dim_b + j] = a[i] * b[j]`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest dimension for which an operator may be held as a dense matrix.
pub const DENSE_CAP: usize = 4096;
/// Tolerance for identities that hold exactly in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance wherever an eigensolver is involved.
pub const SOLVER_TOL: f64 = 1e-10;
/// Two eigenvalues closer than this are treated as one degenerate level.
pub const CLUSTER_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Wraps raw amplitudes without normalizing them.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("state vector of dimension 0".into()));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// The computational basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amplitudes: vec![ZERO; dim] }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Scales to unit norm. A vector that is already normalized to rounding
    /// is returned unchanged, which makes the operation idempotent bit for bit.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::ZeroVector);
        }
        if (n2 - 1.0).abs() <= 1e-14 {
            return Ok(self.clone());
        }
        Ok(self.scale(C64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a * factor).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            amplitudes: self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            amplitudes: self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies by the unit phase that makes the first non-negligible
    /// component real and positive.
    pub fn phase_fixed(&self) -> Self {
        match self.amplitudes.iter().find(|a| a.norm() > EXACT_TOL) {
            Some(lead) => self.scale(lead.conj() / lead.norm()),
            None => self.clone(),
        }
    }

    /// `1 - |⟨self|other⟩|` for unit vectors: zero iff equal up to phase.
    pub fn phase_distance(&self, other: &Self) -> f64 {
        1.0 - self.inner(other).norm()
    }

    pub fn to_column(&self) -> DMatrix<C64> {
        DMatrix::from_column_slice(self.dim(), 1, &self.amplitudes)
    }
}

/// `a ⊗ b` with `a` the slow index.
pub fn tensor_state(a: &StateVector, b: &StateVector) -> StateVector {
    let mut amplitudes = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amplitudes {
        for y in &b.amplitudes {
            amplitudes.push(x * y);
        }
    }
    StateVector { amplitudes }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimMismatch { left, right })
    }
}

/// Unitary discrete Fourier transform over `axes` lattice axes of `size`
/// sites each, with site and momentum labels running from `offset` to
/// `offset + size - 1`. The forward kernel is
/// `exp(-2πi (j + offset)(k + offset) / size) / √size` on every axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourierFrame {
    axes: usize,
    size: usize,
    offset: i64,
}

impl FourierFrame {
    pub fn new(axes: usize, size: usize, offset: i64) -> Self {
        assert!(axes >= 1 && size >= 1, "Fourier frame needs at least one axis and one site");
        Self { axes, size, offset }
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.size.pow(self.axes as u32)
    }

    // Kernel phases indexed by (j + offset)(k + offset) mod size, so every
    // entry is an exact root of unity lookup.
    fn kernel(&self, sign: f64) -> Vec<C64> {
        let n = self.size as i64;
        let roots: Vec<C64> = (0..n)
            .map(|r| C64::from_polar(1.0, sign * 2.0 * PI * r as f64 / n as f64))
            .collect();
        let scale = 1.0 / (self.size as f64).sqrt();
        let mut table = Vec::with_capacity(self.size * self.size);
        for k in 0..n {
            for j in 0..n {
                let r = ((k + self.offset) * (j + self.offset)).rem_euclid(n);
                table.push(roots[r as usize] * scale);
            }
        }
        table
    }

    fn transform(&self, input: &[C64], sign: f64) -> Vec<C64> {
        assert_eq!(input.len(), self.dim(), "Fourier frame dimension mismatch");
        let kernel = self.kernel(sign);
        let n = self.size;
        let mut data = input.to_vec();
        let mut line = vec![ZERO; n];
        for axis in 0..self.axes {
            let stride = n.pow((self.axes - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let start = base + inner;
                    for (k, out) in line.iter_mut().enumerate() {
                        let row = &kernel[k * n..(k + 1) * n];
                        *out = row
                            .iter()
                            .enumerate()
                            .map(|(j, w)| w * data[start + j * stride])
                            .sum();
                    }
                    for (k, v) in line.iter().enumerate() {
                        data[start + k * stride] = *v;
                    }
                }
            }
        }
        data
    }

    /// Position amplitudes to momentum amplitudes.
    pub fn forward(&self, input: &[C64]) -> Vec<C64> {
        self.transform(input, -1.0)
    }

    /// Momentum amplitudes to position amplitudes.
    pub fn inverse(&self, input: &[C64]) -> Vec<C64> {
        self.transform(input, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Dense,
    PositionDiagonal,
    MomentumDiagonal,
}

/// A linear operator on `C^dim`. Structured forms keep only their diagonal;
/// the momentum form is diagonal after the forward transform of its frame.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Dense(DMatrix<C64>),
    PositionDiagonal(Vec<C64>),
    MomentumDiagonal { diagonal: Vec<C64>, frame: FourierFrame },
}

impl Operator {
    pub fn dense(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimMismatch { left: matrix.nrows(), right: matrix.ncols() });
        }
        if matrix.nrows() > DENSE_CAP {
            return Err(Error::TooLarge { dim: matrix.nrows(), cap: DENSE_CAP });
        }
        Ok(Self::Dense(matrix))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimMismatch { left: n, right: bad.len() });
        }
        Self::dense(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&v| C64::new(v, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Self::Dense(DMatrix::identity(dim, dim))
    }

    /// Dense diagonal matrix with real entries.
    pub fn real_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::Dense(DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO }))
    }

    pub fn position_diagonal(values: Vec<C64>) -> Self {
        Self::PositionDiagonal(values)
    }

    pub fn momentum_diagonal(values: Vec<C64>, frame: FourierFrame) -> Self {
        assert_eq!(values.len(), frame.dim(), "momentum diagonal does not match its frame");
        Self::MomentumDiagonal { diagonal: values, frame }
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).expect("2x2")
    }

    pub fn pauli_y() -> Self {
        let i = C64::new(0.0, 1.0);
        Self::from_rows(&[vec![ZERO, -i], vec![i, ZERO]]).expect("2x2")
    }

    pub fn pauli_z() -> Self {
        Self::real_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.nrows(),
            Self::PositionDiagonal(d) => d.len(),
            Self::MomentumDiagonal { diagonal, .. } => diagonal.len(),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            Self::Dense(_) => Representation::Dense,
            Self::PositionDiagonal(_) => Representation::PositionDiagonal,
            Self::MomentumDiagonal { .. } => Representation::MomentumDiagonal,
        }
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dims(self.dim(), v.dim())?;
        let amplitudes = match self {
            Self::Dense(m) => (m * v.to_column()).iter().copied().collect(),
            Self::PositionDiagonal(d) => d.iter().zip(v.amplitudes()).map(|(a, b)| a * b).collect(),
            Self::MomentumDiagonal { diagonal, frame } => {
                let mut hat = frame.forward(v.amplitudes());
                for (h, d) in hat.iter_mut().zip(diagonal) {
                    *h *= d;
                }
                frame.inverse(&hat)
            }
        };
        Ok(StateVector { amplitudes })
    }

    /// Dense matrix of the operator; refused above [`DENSE_CAP`].
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let n = self.dim();
        if n > DENSE_CAP {
            return Err(Error::TooLarge { dim: n, cap: DENSE_CAP });
        }
        Ok(match self {
            Self::Dense(m) => m.clone(),
            Self::PositionDiagonal(d) => DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { ZERO }),
            Self::MomentumDiagonal { .. } => {
                let mut m = DMatrix::zeros(n, n);
                for j in 0..n {
                    let col = self.apply(&StateVector::basis(n, j))?;
                    for (i, a) in col.amplitudes().iter().enumerate() {
                        m[(i, j)] = *a;
                    }
                }
                m
            }
        })
    }

    pub fn densified(&self) -> Result<Self> {
        Ok(Self::Dense(self.to_dense()?))
    }

    /// `max |O_ij - conj(O_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        match self {
            Self::Dense(m) => {
                let n = m.nrows();
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in i..n {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
            Self::PositionDiagonal(d) | Self::MomentumDiagonal { diagonal: d, .. } => {
                d.iter().map(|a| 2.0 * a.im.abs()).fold(0.0, f64::max)
            }
        }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.hermiticity_residual() < tol
    }

    pub fn require_self_adjoint(&self, tol: f64) -> Result<()> {
        let residual = self.hermiticity_residual();
        if residual < tol {
            Ok(())
        } else {
            Err(Error::NotSelfAdjoint { residual })
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Self::Dense(m) => Self::Dense(m.adjoint()),
            Self::PositionDiagonal(d) => Self::PositionDiagonal(d.iter().map(|a| a.conj()).collect()),
            Self::MomentumDiagonal { diagonal, frame } => Self::MomentumDiagonal {
                diagonal: diagonal.iter().map(|a| a.conj()).collect(),
                frame: *frame,
            },
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        match self {
            Self::Dense(m) => Self::Dense(m * factor),
            Self::PositionDiagonal(d) => Self::PositionDiagonal(d.iter().map(|a| a * factor).collect()),
            Self::MomentumDiagonal { diagonal, frame } => Self::MomentumDiagonal {
                diagonal: diagonal.iter().map(|a| a * factor).collect(),
                frame: *frame,
            },
        }
    }

    fn zip_structured(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Option<Self> {
        match (self, other) {
            (Self::PositionDiagonal(a), Self::PositionDiagonal(b)) => {
                Some(Self::PositionDiagonal(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()))
            }
            (
                Self::MomentumDiagonal { diagonal: a, frame: fa },
                Self::MomentumDiagonal { diagonal: b, frame: fb },
            ) if fa == fb => Some(Self::MomentumDiagonal {
                diagonal: a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect(),
                frame: *fa,
            }),
            _ => None,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        if let Some(op) = self.zip_structured(other, |a, b| a + b) {
            return Ok(op);
        }
        Ok(Self::Dense(self.to_dense()? + other.to_dense()?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        if let Some(op) = self.zip_structured(other, |a, b| a - b) {
            return Ok(op);
        }
        Ok(Self::Dense(self.to_dense()? - other.to_dense()?))
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        if let Some(op) = self.zip_structured(other, |a, b| a * b) {
            return Ok(op);
        }
        Ok(Self::Dense(self.to_dense()? * other.to_dense()?))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> Result<f64> {
        Ok(match self {
            Self::PositionDiagonal(d) => d.iter().map(|a| a.norm()).fold(0.0, f64::max),
            _ => self.to_dense()?.iter().map(|a| a.norm()).fold(0.0, f64::max),
        })
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(match self {
            Self::PositionDiagonal(d) | Self::MomentumDiagonal { diagonal: d, .. } => {
                d.iter().map(|a| a.norm()).fold(0.0, f64::max)
            }
            Self::Dense(m) => spectral_norm(m),
        })
    }

    /// Largest entrywise distance between the dense forms of two operators.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.sub(other)?.max_abs()
    }

    /// Eigenspaces of a self-adjoint operator, grouped by distinct eigenvalue
    /// (values within [`CLUSTER_TOL`] are merged) in ascending order.
    pub fn spectral_resolution(&self) -> Result<Vec<Eigenspace>> {
        self.require_self_adjoint(SOLVER_TOL)?;
        match self {
            Self::Dense(_) => {
                let spectral = eigendecompose(self)?;
                let groups = cluster(&spectral.eigenvalues);
                Ok(groups
                    .into_iter()
                    .map(|(value, idx)| Eigenspace {
                        eigenvalue: value,
                        projector: Projector::Vectors(
                            idx.into_iter().map(|i| spectral.eigenvectors[i].clone()).collect(),
                        ),
                    })
                    .collect())
            }
            Self::PositionDiagonal(d) => Ok(diagonal_groups(d)
                .into_iter()
                .map(|(value, idx)| Eigenspace { eigenvalue: value, projector: Projector::Indices(idx) })
                .collect()),
            Self::MomentumDiagonal { diagonal, frame } => Ok(diagonal_groups(diagonal)
                .into_iter()
                .map(|(value, idx)| Eigenspace {
                    eigenvalue: value,
                    projector: Projector::FourierIndices { indices: idx, frame: *frame },
                })
                .collect()),
        }
    }

    /// Spectral calculus: `f(O) = Σ f(λ) P_λ` for self-adjoint `O`.
    /// Structured forms stay structured.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.require_self_adjoint(SOLVER_TOL)?;
        match self {
            Self::PositionDiagonal(d) => Ok(Self::PositionDiagonal(d.iter().map(|a| C64::new(f(a.re), 0.0)).collect())),
            Self::MomentumDiagonal { diagonal, frame } => Ok(Self::MomentumDiagonal {
                diagonal: diagonal.iter().map(|a| C64::new(f(a.re), 0.0)).collect(),
                frame: *frame,
            }),
            Self::Dense(_) => {
                let spectral = eigendecompose(self)?;
                let values: Vec<f64> = spectral.eigenvalues.iter().map(|&l| f(l)).collect();
                Ok(Self::Dense(spectral.reconstruct_with(&values)))
            }
        }
    }
}

fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.iter().all(|a| *a == ZERO) {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

fn diagonal_groups(d: &[C64]) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[i].re.total_cmp(&d[j].re).then(i.cmp(&j)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        let value = d[i].re;
        match groups.last_mut() {
            Some((v, idx)) if (value - *v).abs() <= CLUSTER_TOL => idx.push(i),
            _ => groups.push((value, vec![i])),
        }
    }
    groups
}

// Groups ascending eigenvalues into levels separated by more than CLUSTER_TOL.
fn cluster(values: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &value) in values.iter().enumerate() {
        match groups.last_mut() {
            Some((_, idx)) if (value - values[*idx.last().expect("nonempty")]).abs() <= CLUSTER_TOL => idx.push(i),
            _ => groups.push((value, vec![i])),
        }
    }
    for (value, idx) in &mut groups {
        *value = idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64;
    }
    groups
}

#[derive(Clone, Debug)]
enum Projector {
    Vectors(Vec<StateVector>),
    Indices(Vec<usize>),
    FourierIndices { indices: Vec<usize>, frame: FourierFrame },
}

/// One eigenvalue of a self-adjoint operator together with its eigenspace.
#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub eigenvalue: f64,
    projector: Projector,
}

impl Eigenspace {
    pub fn multiplicity(&self) -> usize {
        match &self.projector {
            Projector::Vectors(v) => v.len(),
            Projector::Indices(i) | Projector::FourierIndices { indices: i, .. } => i.len(),
        }
    }

    /// Orthogonal projection of `v` onto the eigenspace.
    pub fn project(&self, v: &StateVector) -> StateVector {
        match &self.projector {
            Projector::Vectors(basis) => {
                let mut out = StateVector::zeros(v.dim());
                for b in basis {
                    let c = b.inner(v);
                    for (o, a) in out.amplitudes.iter_mut().zip(b.amplitudes()) {
                        *o += a * c;
                    }
                }
                out
            }
            Projector::Indices(indices) => {
                let mut out = StateVector::zeros(v.dim());
                for &i in indices {
                    out.amplitudes[i] = v.amplitudes[i];
                }
                out
            }
            Projector::FourierIndices { indices, frame } => {
                let hat = frame.forward(v.amplitudes());
                let mut kept = vec![ZERO; hat.len()];
                for &i in indices {
                    kept[i] = hat[i];
                }
                StateVector { amplitudes: frame.inverse(&kept) }
            }
        }
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        self.reconstruct_with(&self.eigenvalues)
    }

    /// `Σ values[n] |φ_n⟩⟨φ_n|`.
    pub fn reconstruct_with(&self, values: &[f64]) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (value, v) in values.iter().zip(&self.eigenvectors) {
            let col = v.to_column();
            m += col.clone() * col.adjoint() * C64::new(*value, 0.0);
        }
        m
    }

    pub fn basis(&self) -> Result<Basis> {
        Basis::with_tolerance(self.eigenvectors.clone(), SOLVER_TOL)
    }

    /// `max |G - I|` for the Gram matrix of the eigenvectors.
    pub fn gram_residual(&self) -> f64 {
        gram_residual(&self.eigenvectors)
    }
}

fn lexicographic(a: &StateVector, b: &StateVector) -> Ordering {
    for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Spectral decomposition of a self-adjoint operator.
///
/// Eigenvalues come out ascending. Every eigenvector is phase-fixed (first
/// non-negligible component real positive), and within a degenerate level
/// the vectors are ordered lexicographically by their components.
pub fn eigendecompose(op: &Operator) -> Result<SpectralDecomposition> {
    op.require_self_adjoint(SOLVER_TOL)?;
    let n = op.dim();
    let mut pairs: Vec<(f64, StateVector)> = match op {
        Operator::PositionDiagonal(d) => {
            d.iter().enumerate().map(|(i, a)| (a.re, StateVector::basis(n, i))).collect()
        }
        Operator::MomentumDiagonal { diagonal, frame } => diagonal
            .iter()
            .enumerate()
            .map(|(k, a)| (a.re, StateVector { amplitudes: frame.inverse(StateVector::basis(n, k).amplitudes()) }))
            .collect(),
        Operator::Dense(m) => {
            let eigen = SymmetricEigen::new(m.clone());
            (0..n)
                .map(|i| {
                    let v: Vec<C64> = eigen.eigenvectors.column(i).iter().copied().collect();
                    (eigen.eigenvalues[i], StateVector { amplitudes: v })
                })
                .collect()
        }
    };
    for (_, v) in &mut pairs {
        *v = v.phase_fixed();
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    for (_, idx) in cluster(&values) {
        if idx.len() > 1 {
            let (lo, hi) = (idx[0], idx[idx.len() - 1] + 1);
            pairs[lo..hi].sort_by(|a, b| lexicographic(&a.1, &b.1));
        }
    }
    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Kronecker product with the same index convention as [`tensor_state`].
/// Two position-diagonal factors stay position-diagonal, two momentum-diagonal
/// factors on matching frames stay momentum-diagonal; anything else is dense.
pub fn tensor_op(a: &Operator, b: &Operator) -> Result<Operator> {
    match (a, b) {
        (Operator::PositionDiagonal(x), Operator::PositionDiagonal(y)) => {
            Ok(Operator::PositionDiagonal(kron_vec(x, y)))
        }
        (
            Operator::MomentumDiagonal { diagonal: x, frame: fx },
            Operator::MomentumDiagonal { diagonal: y, frame: fy },
        ) if fx.size == fy.size && fx.offset == fy.offset => Ok(Operator::MomentumDiagonal {
            diagonal: kron_vec(x, y),
            frame: FourierFrame::new(fx.axes + fy.axes, fx.size, fx.offset),
        }),
        _ => {
            let dim = a.dim() * b.dim();
            if dim > DENSE_CAP {
                return Err(Error::TooLarge { dim, cap: DENSE_CAP });
            }
            Ok(Operator::Dense(a.to_dense()?.kronecker(&b.to_dense()?)))
        }
    }
}

fn kron_vec(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().flat_map(|a| y.iter().map(move |b| a * b)).collect()
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_dims(a.dim(), b.dim())?;
    a.mul(b)?.sub(&b.mul(a)?)
}

/// `AB + BA`.
pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_dims(a.dim(), b.dim())?;
    a.mul(b)?.add(&b.mul(a)?)
}

fn gram_residual(vectors: &[StateVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, u) in vectors.iter().enumerate() {
        for (j, v) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((u.inner(v) - target).norm());
        }
    }
    worst
}

/// An orthonormal basis of `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    vectors: Vec<StateVector>,
}

impl Basis {
    pub fn new(vectors: Vec<StateVector>) -> Result<Self> {
        Self::with_tolerance(vectors, EXACT_TOL)
    }

    pub fn with_tolerance(vectors: Vec<StateVector>, tol: f64) -> Result<Self> {
        let dim = vectors.first().map(StateVector::dim).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidParameter("empty basis".into()));
        }
        if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimMismatch { left: dim, right: bad.dim() });
        }
        if vectors.len() != dim {
            return Err(Error::DimMismatch { left: dim, right: vectors.len() });
        }
        let residual = gram_residual(&vectors);
        if residual >= tol {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(Self { vectors })
    }

    pub fn standard(dim: usize) -> Self {
        Self { vectors: (0..dim).map(|i| StateVector::basis(dim, i)).collect() }
    }

    /// Columns of a unitary matrix.
    pub fn from_unitary(u: &DMatrix<C64>) -> Result<Self> {
        let vectors = (0..u.ncols())
            .map(|j| StateVector { amplitudes: u.column(j).iter().copied().collect() })
            .collect();
        Self::new(vectors)
    }

    /// A Haar-random orthonormal basis.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self::from_unitary(&random_unitary(dim, rng)).expect("QR of a Gaussian matrix is unitary")
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn vector(&self, n: usize) -> &StateVector {
        &self.vectors[n]
    }

    /// Matrix whose columns are the basis vectors.
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.vectors[j].amplitudes[i])
    }

    /// Expansion coefficients `⟨b_n|v⟩`.
    pub fn coefficients(&self, v: &StateVector) -> Vec<C64> {
        self.vectors.iter().map(|b| b.inner(v)).collect()
    }

    /// `Σ c_n b_n`.
    pub fn combine(&self, coefficients: &[C64]) -> StateVector {
        let mut out = StateVector::zeros(self.dim());
        for (c, b) in coefficients.iter().zip(&self.vectors) {
            for (o, a) in out.amplitudes.iter_mut().zip(b.amplitudes()) {
                *o += a * c;
            }
        }
        out
    }

    pub fn gram_residual(&self) -> f64 {
        gram_residual(&self.vectors)
    }
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix,
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix `(G + G†)/2` with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    Operator::Dense((&g + g.adjoint()) * C64::new(0.5, 0.0))
}

/// Uniformly random unit vector.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = StateVector { amplitudes: (0..dim).map(|_| gaussian_c64(rng)).collect() };
    v.normalize().expect("Gaussian vector is nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn tensor_state_basis_cases() {
        let e0 = StateVector::basis(2, 0);
        assert_eq!(tensor_state(&e0, &e0), StateVector::basis(4, 0));
        let up = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let down = StateVector::from_real(&[0.0, 1.0]).unwrap();
        assert_eq!(tensor_state(&up, &down), StateVector::from_real(&[0.0, 1.0, 0.0, 0.0]).unwrap());
    }

    #[test]
    fn tensor_state_of_unit_vectors_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (da, db) in [(2, 3), (4, 4), (5, 2)] {
            let v = tensor_state(&random_state(da, &mut rng), &random_state(db, &mut rng));
            assert_eq!(v.dim(), da * db);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_op_identity_and_diagonal() {
        let id4 = tensor_op(&Operator::identity(2), &Operator::identity(2)).unwrap();
        assert_eq!(id4.max_abs_diff(&Operator::identity(4)).unwrap(), 0.0);
        let z1 = tensor_op(&Operator::pauli_z(), &Operator::identity(2)).unwrap();
        assert_eq!(z1.max_abs_diff(&Operator::real_diagonal(&[1.0, 1.0, -1.0, -1.0])).unwrap(), 0.0);
    }

    #[test]
    fn tensor_op_acts_factorwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_hermitian(3, &mut rng);
        let b = Operator::Dense(random_unitary(2, &mut rng));
        let u = random_state(3, &mut rng);
        let v = random_state(2, &mut rng);
        let lhs = tensor_op(&a, &b).unwrap().apply(&tensor_state(&u, &v)).unwrap();
        let rhs = tensor_state(&a.apply(&u).unwrap(), &b.apply(&v).unwrap());
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn eigendecompose_known_spectra() {
        let s = eigendecompose(&Operator::pauli_z()).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 1.0]);
        let s = eigendecompose(&Operator::identity(3)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
        // degenerate level comes out in lexicographic order of phase-fixed vectors
        assert!(s.eigenvectors.windows(2).all(|w| lexicographic(&w[0], &w[1]) != Ordering::Greater));
    }

    #[test]
    fn eigendecompose_random_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = random_hermitian(5, &mut rng);
        let s = eigendecompose(&op).unwrap();
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        for (l, v) in s.eigenvalues.iter().zip(&s.eigenvectors) {
            let ov = op.apply(v).unwrap();
            let residual = ov.sub(&v.scale(c(*l, 0.0))).unwrap().norm();
            assert!(residual < 1e-10, "residual {residual}");
        }
        assert!(s.gram_residual() < 1e-10);
        let diff = (s.reconstruct() - op.to_dense().unwrap()).iter().map(|a| a.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn eigendecompose_rejects_non_hermitian() {
        let op = Operator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(eigendecompose(&op), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn eigendecompose_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let op = random_hermitian(6, &mut rng);
        let a = eigendecompose(&op).unwrap();
        let b = eigendecompose(&op).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }

    #[test]
    fn commutator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_hermitian(3, &mut rng);
        assert_eq!(commutator(&Operator::identity(3), &x).unwrap().max_abs().unwrap(), 0.0);

        let xy = commutator(&Operator::pauli_x(), &Operator::pauli_y()).unwrap();
        let expected = Operator::pauli_z().scale(c(0.0, 2.0));
        assert!(xy.max_abs_diff(&expected).unwrap() < 1e-15);

        let a = random_hermitian(3, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let left = tensor_op(&a, &Operator::identity(4)).unwrap();
        let right = tensor_op(&Operator::identity(3), &b).unwrap();
        assert!(commutator(&left, &right).unwrap().max_abs().unwrap() < 1e-12);

        assert!(matches!(
            commutator(&Operator::identity(2), &Operator::identity(3)),
            Err(Error::DimMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn normalize_is_idempotent_and_rejects_zero() {
        let v = StateVector::new(vec![c(3.0, 1.0), c(-0.5, 2.0), c(0.1, 0.0)]).unwrap();
        let once = v.normalize().unwrap();
        assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(once.normalize().unwrap(), once);
        assert_eq!(StateVector::zeros(3).normalize(), Err(Error::ZeroVector));
    }

    #[test]
    fn structured_forms_match_dense() {
        let frame = FourierFrame::new(2, 5, -2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let diag: Vec<C64> = (0..25).map(|_| c(rng.random::<f64>(), 0.0)).collect();
        let mom = Operator::momentum_diagonal(diag.clone(), frame);
        let dense = mom.to_dense().unwrap();
        // dense counterpart built independently from the explicit kernel
        let f1 = DMatrix::from_fn(5, 5, |k, j| {
            let (kk, jj) = (k as f64 - 2.0, j as f64 - 2.0);
            C64::from_polar(1.0 / 5f64.sqrt(), -2.0 * PI * kk * jj / 5.0)
        });
        let f = f1.kronecker(&f1);
        let d = DMatrix::from_fn(25, 25, |i, j| if i == j { diag[i] } else { ZERO });
        let expected = f.adjoint() * d * f;
        let diff = (dense - expected).iter().map(|a| a.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "momentum densify diff {diff}");

        let pos = Operator::position_diagonal(diag.clone());
        let v = random_state(25, &mut rng);
        let via_dense = Operator::Dense(pos.to_dense().unwrap()).apply(&v).unwrap();
        assert!(pos.apply(&v).unwrap().max_abs_diff(&via_dense) < 1e-12);
    }

    #[test]
    fn fourier_frame_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (axes, size, offset) in [(1, 5, -2), (2, 4, -2), (3, 3, -1)] {
            let frame = FourierFrame::new(axes, size, offset);
            let v = random_state(frame.dim(), &mut rng);
            let hat = frame.forward(v.amplitudes());
            let back = StateVector::new(frame.inverse(&hat)).unwrap();
            assert!(back.max_abs_diff(&v) < 1e-12);
            let hat = StateVector::new(hat).unwrap();
            assert!((hat.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_resolution_projects_onto_eigenspaces() {
        let op = Operator::real_diagonal(&[2.0, -1.0, 2.0]);
        let spaces = op.spectral_resolution().unwrap();
        assert_eq!(spaces.len(), 2);
        assert_eq!(spaces[0].eigenvalue, -1.0);
        assert_eq!(spaces[1].multiplicity(), 2);
        let v = StateVector::from_real(&[1.0, 1.0, 1.0]).unwrap();
        let p = spaces[1].project(&v);
        assert!(p.max_abs_diff(&StateVector::from_real(&[1.0, 0.0, 1.0]).unwrap()) < 1e-12);
    }

    #[test]
    fn apply_function_is_spectral_calculus() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let op = random_hermitian(4, &mut rng);
        let squared = op.apply_function(|x| x * x).unwrap();
        let product = op.mul(&op).unwrap();
        assert!(squared.max_abs_diff(&product).unwrap() < 1e-10);
    }

    #[test]
    fn basis_validation() {
        let bad = vec![
            StateVector::from_real(&[1.0, 0.0]).unwrap(),
            StateVector::from_real(&[1.0, 1.0]).unwrap(),
        ];
        assert!(matches!(Basis::new(bad), Err(Error::NotOrthonormal { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = Basis::random(6, &mut rng);
        assert!(b.gram_residual() < 1e-12);
    }
}
