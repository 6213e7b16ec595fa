//! Dense complex linear algebra and quantum-mechanical primitives.
//!
//! Composite index convention: subsystem 0 is the least significant digit of
//! the composite index, and `dims` is always listed in subsystem order. For a
//! register of qubits, subsystem `k` is qubit `k + 1` and the index reads like
//! the ket label `|x_N ... x_2 x_1>` with `|D> = 0`, `|S> = 1`.

use nalgebra::{DMatrix, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
pub const PROJECTOR_TOL: f64 = 1e-10;
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Qubit levels. `D` is the metastable level, `S` the ground state.
pub mod level {
    pub const D: usize = 0;
    pub const S: usize = 1;
}

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn qubit_dims(n: usize) -> Vec<usize> {
    vec![2; n]
}

pub(crate) fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

pub(crate) fn stride(dims: &[usize], k: usize) -> usize {
    dims[..k].iter().product()
}

/// Digit of subsystem `k` in composite index `idx`.
pub(crate) fn digit(idx: usize, dims: &[usize], k: usize) -> usize {
    (idx / stride(dims, k)) % dims[k]
}

/// Pauli matrices in the `(|D>, |S>)` basis.
pub mod pauli {
    use super::{C64, I, ONE, ZERO};
    use nalgebra::DMatrix;

    pub fn identity() -> DMatrix<C64> {
        DMatrix::identity(2, 2)
    }

    pub fn x() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }
}

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

fn check_square(m: &DMatrix<C64>, dims: &[usize]) -> Result<()> {
    let d = total_dim(dims);
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but dims {:?} give {}",
            m.nrows(),
            m.ncols(),
            dims,
            d
        )));
    }
    Ok(())
}

fn check_subsystem(dims: &[usize], k: usize) -> Result<()> {
    if k >= dims.len() {
        return Err(Error::SubsystemOutOfRange {
            index: k,
            count: dims.len(),
        });
    }
    Ok(())
}

/// Pure state on a composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

impl PureState {
    /// Builds a state, requiring normalization within [`NORM_TOL`].
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let state = Self::from_unnormalized_unchecked(amplitudes, dims)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state norm^2 is {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let mut state = Self::from_unnormalized_unchecked(amplitudes, dims)?;
        let norm = state.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        state.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    fn from_unnormalized_unchecked(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        if total_dim(&dims) != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes but dims {:?}",
                amplitudes.len(),
                dims
            )));
        }
        Ok(Self { amplitudes, dims })
    }

    pub(crate) fn from_raw(amplitudes: Vec<C64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(total_dim(&dims), amplitudes.len());
        Self { amplitudes, dims }
    }

    /// Computational basis state with the given per-subsystem digits
    /// (digit `k` belongs to subsystem `k`).
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(d, n)| d >= n) {
            return Err(Error::InvalidArgument(format!(
                "digits {digits:?} do not fit dims {dims:?}"
            )));
        }
        let idx = digits
            .iter()
            .enumerate()
            .map(|(k, d)| d * stride(&dims, k))
            .sum::<usize>();
        let mut amplitudes = vec![ZERO; total_dim(&dims)];
        amplitudes[idx] = ONE;
        Ok(Self { amplitudes, dims })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityMatrix::from_raw(&v * v.adjoint(), self.dims.clone())
    }

    pub fn projector(&self) -> HermitianOperator {
        HermitianOperator::from_raw(self.to_density().entries, self.dims.clone())
    }

    pub fn apply_local_unitary(&self, k: usize, u: &DMatrix<C64>) -> Result<Self> {
        check_subsystem(&self.dims, k)?;
        check_unitary(u, self.dims[k])?;
        let mut amplitudes = self.amplitudes.clone();
        apply_local_to_vector(&mut amplitudes, &self.dims, k, u);
        Ok(Self::from_raw(amplitudes, self.dims.clone()))
    }
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity before accepting `entries`.
    pub fn new(entries: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        check_square(&entries, &dims)?;
        let rho = Self { entries, dims };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(entries: DMatrix<C64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(entries.nrows(), total_dim(&dims));
        Self { entries, dims }
    }

    /// Symmetrizes and trace-normalizes `entries`. Used where round-off from a
    /// long computation has to be cleaned before validation.
    pub(crate) fn from_raw_cleaned(mut entries: DMatrix<C64>, dims: Vec<usize>) -> Self {
        let adj = entries.adjoint();
        entries = (entries + adj) * C64::new(0.5, 0.0);
        let tr = entries.trace().re;
        entries /= C64::new(tr, 0.0);
        Self { entries, dims }
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d = total_dim(&dims);
        Self::from_raw(
            DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0),
            dims,
        )
    }

    pub fn from_pure(state: &PureState) -> Self {
        state.to_density()
    }

    pub fn validate(&self) -> Result<()> {
        let herm = hermiticity_defect(&self.entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = self.entries.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}")));
        }
        let (values, _) = eigh(&self.entries);
        let min = values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of qubits, if every subsystem is a qubit.
    pub fn n_qubits(&self) -> Option<usize> {
        self.dims.iter().all(|&d| d == 2).then_some(self.dims.len())
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.entries).0
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "mixing dims {:?} with {:?}",
                self.dims, other.dims
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("mixing weight {w}")));
        }
        Ok(Self::from_raw(
            &self.entries * C64::new(w, 0.0) + &other.entries * C64::new(1.0 - w, 0.0),
            self.dims.clone(),
        ))
    }

    pub fn apply_local_unitary(&self, k: usize, u: &DMatrix<C64>) -> Result<Self> {
        check_subsystem(&self.dims, k)?;
        check_unitary(u, self.dims[k])?;
        let mut m = self.entries.clone();
        conjugate_local(&mut m, &self.dims, k, u);
        Ok(Self::from_raw(m, self.dims.clone()))
    }
}

/// Hermitian observable on a composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: DMatrix<C64>,
    dims: Vec<usize>,
}

impl HermitianOperator {
    pub fn new(entries: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        check_square(&entries, &dims)?;
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { entries, dims })
    }

    pub(crate) fn from_raw(entries: DMatrix<C64>, dims: Vec<usize>) -> Self {
        Self { entries, dims }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d = total_dim(&dims);
        Self::from_raw(DMatrix::identity(d, d), dims)
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(&self.entries * C64::new(factor, 0.0), self.dims.clone())
    }

    /// `Tr(self * rho)`, real part; fails if the imaginary part exceeds 1e-10
    /// relative to the operator scale.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        if self.dim() != rho.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator dimension {} vs state dimension {}",
                self.dim(),
                rho.dim()
            )));
        }
        // Tr(A B) = sum_ij A_ij B_ji
        let mut acc = ZERO;
        let d = self.dim();
        for j in 0..d {
            for i in 0..d {
                acc += self.entries[(i, j)] * rho.entries[(j, i)];
            }
        }
        let scale = self.entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        debug_assert!(acc.im.abs() <= 1e-10 * scale, "expectation {acc}");
        Ok(acc.re)
    }

    pub fn expectation_pure(&self, psi: &PureState) -> Result<f64> {
        if self.dim() != psi.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator dimension {} vs state dimension {}",
                self.dim(),
                psi.dim()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Ok((v.adjoint() * &self.entries * &v)[(0, 0)].re)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }
}

/// Kronecker product. The left operand is the more significant factor, so
/// `|D> (x) |S>` is `|DS>`; the result lists the right operand's subsystems
/// first (subsystem order is least significant first).
pub trait Tensor: Sized {
    fn tensor(&self, rhs: &Self) -> Self;
}

fn concat_dims(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().chain(a).copied().collect()
}

impl Tensor for PureState {
    fn tensor(&self, rhs: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * rhs.dim());
        for a in &self.amplitudes {
            for b in &rhs.amplitudes {
                amps.push(a * b);
            }
        }
        Self::from_raw(amps, concat_dims(&self.dims, &rhs.dims))
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, rhs: &Self) -> Self {
        Self::from_raw(
            self.entries.kronecker(&rhs.entries),
            concat_dims(&self.dims, &rhs.dims),
        )
    }
}

impl Tensor for HermitianOperator {
    fn tensor(&self, rhs: &Self) -> Self {
        Self::from_raw(
            self.entries.kronecker(&rhs.entries),
            concat_dims(&self.dims, &rhs.dims),
        )
    }
}

pub fn tensor_product<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Reduced state on the subsystems in `keep` (kept in original order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let dims = rho.dims();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    for &k in &keep {
        check_subsystem(dims, k)?;
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let out_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let out_d = total_dim(&out_dims);

    let d = rho.dim();
    let reduce = |idx: usize| -> usize {
        let mut out = 0;
        let mut s = 1;
        for &k in &keep {
            out += digit(idx, dims, k) * s;
            s *= dims[k];
        }
        out
    };
    let environment = |idx: usize| -> usize {
        let mut out = 0;
        let mut s = 1;
        for &k in &traced {
            out += digit(idx, dims, k) * s;
            s *= dims[k];
        }
        out
    };
    let kept_idx: Vec<usize> = (0..d).map(reduce).collect();
    let env_idx: Vec<usize> = (0..d).map(environment).collect();

    let mut out = DMatrix::<C64>::zeros(out_d, out_d);
    for c in 0..d {
        for r in 0..d {
            if env_idx[r] == env_idx[c] {
                out[(kept_idx[r], kept_idx[c])] += rho.entries[(r, c)];
            }
        }
    }
    Ok(DensityMatrix::from_raw(out, out_dims))
}

/// Applies the projector `P` on one subsystem and renormalizes:
/// returns `((P (x) 1) rho (P (x) 1) / p, p)`.
pub fn project_and_condition(
    rho: &DensityMatrix,
    subsystem: usize,
    projector: &HermitianOperator,
) -> Result<(DensityMatrix, f64)> {
    check_subsystem(rho.dims(), subsystem)?;
    let p = projector.entries();
    if p.nrows() != rho.dims()[subsystem] {
        return Err(Error::DimensionMismatch(format!(
            "projector of dimension {} on subsystem of dimension {}",
            p.nrows(),
            rho.dims()[subsystem]
        )));
    }
    let defect = max_abs_diff(&(p * p), p);
    if defect > PROJECTOR_TOL {
        return Err(Error::NotAProjector(defect));
    }
    let mut m = rho.entries.clone();
    conjugate_local(&mut m, rho.dims(), subsystem, p);
    let prob = m.trace().re;
    if prob < ZERO_PROBABILITY {
        return Err(Error::ZeroProbability(prob));
    }
    m /= C64::new(prob, 0.0);
    Ok((DensityMatrix::from_raw(m, rho.dims.clone()), prob))
}

/// `<target| rho |target>`.
pub fn fidelity_pure(rho: &DensityMatrix, target: &PureState) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} vs target of dimension {}",
            rho.dim(),
            target.dim()
        )));
    }
    let psi = target.amplitudes();
    let d = rho.dim();
    let mut acc = ZERO;
    for c in 0..d {
        if psi[c] == ZERO {
            continue;
        }
        let mut col = ZERO;
        for r in 0..d {
            col += psi[r].conj() * rho.entries[(r, c)];
        }
        acc += col * psi[c];
    }
    debug_assert!(
        acc.im.abs() <= 1e-10,
        "fidelity has imaginary part {}",
        acc.im
    );
    Ok(acc.re)
}

#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<C64>,
}

pub fn hermitian_eigensystem(m: &HermitianOperator) -> Result<Eigensystem> {
    let defect = hermiticity_defect(&m.entries);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let (values, vectors) = eigh(&m.entries);
    Ok(Eigensystem { values, vectors })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// `V` with `m = V V^dag` for a PSD matrix; negative round-off eigenvalues are clamped.
pub(crate) fn psd_factor(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, mut v) = eigh(m);
    for (c, &l) in values.iter().enumerate() {
        v.column_mut(c).scale_mut(l.max(0.0).sqrt());
    }
    v
}

pub(crate) fn check_unitary(u: &DMatrix<C64>, d: usize) -> Result<()> {
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a subsystem of dimension {d}",
            u.nrows(),
            u.ncols()
        )));
    }
    let defect = max_abs_diff(&(u * u.adjoint()), &DMatrix::identity(d, d));
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

/// Base indices (digit `k` equal to zero) of a composite index space.
fn bases(dims: &[usize], k: usize) -> impl Iterator<Item = usize> + '_ {
    let s = stride(dims, k);
    let d = dims[k];
    (0..total_dim(dims)).filter(move |&i| (i / s).is_multiple_of(d))
}

/// `v <- (A on subsystem k) v`.
pub(crate) fn apply_local_to_vector(v: &mut [C64], dims: &[usize], k: usize, a: &DMatrix<C64>) {
    let s = stride(dims, k);
    let d = dims[k];
    let mut buf = vec![ZERO; d];
    for base in bases(dims, k) {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = v[base + j * s];
        }
        for i in 0..d {
            let mut acc = ZERO;
            for (j, b) in buf.iter().enumerate() {
                acc += a[(i, j)] * b;
            }
            v[base + i * s] = acc;
        }
    }
}

/// `m <- (A on subsystem k) m (A on subsystem k)^dagger`.
pub(crate) fn conjugate_local(m: &mut DMatrix<C64>, dims: &[usize], k: usize, a: &DMatrix<C64>) {
    let n = m.nrows();
    for c in 0..n {
        let mut col = m.column_mut(c);
        apply_local_to_vector(col.as_mut_slice(), dims, k, a);
    }
    // Right multiplication by A^dagger acts on each row with conj(A).
    let a_conj = a.map(|z| z.conj());
    let mut row = vec![ZERO; n];
    for r in 0..n {
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)];
        }
        apply_local_to_vector(&mut row, dims, k, &a_conj);
        for (c, x) in row.iter().enumerate() {
            m[(r, c)] = *x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::level::{D, S};
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(digits_msb_first: &[usize]) -> PureState {
        let digits: Vec<usize> = digits_msb_first.iter().rev().copied().collect();
        PureState::basis(qubit_dims(digits.len()), &digits).unwrap()
    }

    fn max_entry_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        max_abs_diff(a, b)
    }

    #[test]
    fn tensor_of_basis_states() {
        let ds = tensor_product(&ket(&[D]), &ket(&[S]));
        // |DS>: qubit 2 = D, qubit 1 = S -> index 1
        assert_eq!(ds.amplitudes()[1], ONE);
        assert_eq!(ds.norm_sqr(), 1.0);
        assert_eq!(ds, ket(&[D, S]));
    }

    #[test]
    fn tensor_of_identities() {
        let i2 = HermitianOperator::identity(vec![2]);
        let i4 = tensor_product(&i2, &i2);
        assert_eq!(i4, HermitianOperator::identity(vec![2, 2]));
    }

    #[test]
    fn d_tensor_w2_is_bs_state() {
        let h = 1.0 / 2f64.sqrt();
        let w2 = PureState::new(
            vec![ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO],
            qubit_dims(2),
        )
        .unwrap();
        let got = tensor_product(&ket(&[D]), &w2);
        // (|DDS> + |DSD>)/sqrt 2
        let expected = PureState::normalized(
            ket(&[D, D, S])
                .amplitudes()
                .iter()
                .zip(ket(&[D, S, D]).amplitudes())
                .map(|(a, b)| a + b)
                .collect(),
            qubit_dims(3),
        )
        .unwrap();
        for (a, b) in got.amplitudes().iter().zip(expected.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = ket(&[D, S]).to_density();
        // subsystem 1 is qubit 2, which holds D
        let q2 = partial_trace(&rho, &[1]).unwrap();
        assert_eq!(q2, ket(&[D]).to_density());
        let q1 = partial_trace(&rho, &[0]).unwrap();
        assert_eq!(q1, ket(&[S]).to_density());
    }

    #[test]
    fn partial_trace_of_singlet_is_mixed() {
        let h = 1.0 / 2f64.sqrt();
        let singlet = PureState::new(
            vec![ZERO, C64::new(h, 0.0), C64::new(-h, 0.0), ZERO],
            qubit_dims(2),
        )
        .unwrap();
        let red = partial_trace(&singlet.to_density(), &[0]).unwrap();
        let expected = DensityMatrix::maximally_mixed(vec![2]);
        assert!(max_entry_diff(red.entries(), expected.entries()) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_empty_keep() {
        let rho = DensityMatrix::maximally_mixed(qubit_dims(2));
        assert_eq!(partial_trace(&rho, &[]), Err(Error::EmptyKeepSet));
        assert!(matches!(
            partial_trace(&rho, &[2]),
            Err(Error::SubsystemOutOfRange { .. })
        ));
    }

    fn proj_d() -> HermitianOperator {
        ket(&[D]).projector()
    }

    #[test]
    fn conditioning_on_certain_outcome() {
        let rho = ket(&[D, S]).to_density();
        let (post, p) = project_and_condition(&rho, 1, &proj_d()).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);
        assert_eq!(post, rho);
    }

    #[test]
    fn conditioning_w3_on_qubit3() {
        let a = C64::new(1.0 / 3f64.sqrt(), 0.0);
        let mut amps = vec![ZERO; 8];
        amps[1] = a;
        amps[2] = a;
        amps[4] = a;
        let w3 = PureState::new(amps, qubit_dims(3)).unwrap();
        let (post, p) = project_and_condition(&w3.to_density(), 2, &proj_d()).unwrap();
        assert_abs_diff_eq!(p, 2.0 / 3.0, epsilon = 1e-14);
        let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let w2 = PureState::new(vec![ZERO, h, h, ZERO], qubit_dims(2)).unwrap();
        let expected = tensor_product(&ket(&[D]).to_density(), &w2.to_density());
        assert!(max_entry_diff(post.entries(), expected.entries()) < 1e-14);
    }

    #[test]
    fn conditioning_on_impossible_outcome() {
        let rho = ket(&[S, S]).to_density();
        assert!(matches!(
            project_and_condition(&rho, 0, &proj_d()),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn conditioning_rejects_non_projector() {
        let rho = DensityMatrix::maximally_mixed(qubit_dims(2));
        let half = proj_d().scaled(0.5);
        assert!(matches!(
            project_and_condition(&rho, 0, &half),
            Err(Error::NotAProjector(_))
        ));
    }

    #[test]
    fn fidelity_with_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(qubit_dims(3));
        let f = fidelity_pure(&rho, &ket(&[D, S, D])).unwrap();
        assert_abs_diff_eq!(f, 1.0 / 8.0, epsilon = 1e-15);
        assert!(fidelity_pure(&rho, &ket(&[D])).is_err());
    }

    #[test]
    fn eigensystem_examples() {
        let id = HermitianOperator::identity(vec![2]);
        assert_eq!(hermitian_eigensystem(&id).unwrap().values, vec![1.0, 1.0]);
        let z = HermitianOperator::new(pauli::z(), vec![2]).unwrap();
        let e = hermitian_eigensystem(&z).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], -1.0, epsilon = 1e-15);

        let nonherm = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(HermitianOperator::new(nonherm, vec![2]).is_err());
    }

    #[test]
    fn local_unitary_examples() {
        let rho = ket(&[D, D]).to_density();
        assert_eq!(rho.apply_local_unitary(0, &pauli::identity()).unwrap(), rho);
        let flipped = ket(&[D, D]).apply_local_unitary(0, &pauli::x()).unwrap();
        assert_eq!(flipped, ket(&[D, S]));
        let bad = pauli::x() * C64::new(2.0, 0.0);
        assert!(matches!(
            rho.apply_local_unitary(0, &bad),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn density_validation() {
        let bad_trace = DMatrix::<C64>::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace, vec![2]).is_err());
        let not_psd =
            DMatrix::from_row_slice(2, 2, &[C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)]);
        assert!(DensityMatrix::new(not_psd, vec![2]).is_err());
        assert!(DensityMatrix::new(DMatrix::identity(2, 2) * C64::new(0.5, 0.0), vec![2]).is_ok());
    }
}
