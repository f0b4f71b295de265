//! Truncated composite Hilbert spaces and the sparse operator algebra built on them.
//!
//! The composite space is Fock(mode 1) ⊗ Fock(mode 2) ⊗ qubit with a fixed
//! basis ordering: mode 1 slowest, qubit fastest. The basis index of
//! |n₁,n₂⟩⊗|s⟩ is `((n₁·(n_max_2+1)) + n₂)·2 + s` with s ∈ {0 (g), 1 (e)}.
//! This ordering is stable across every module in the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

/// Truncation of the composite Fock ⊗ Fock ⊗ qubit space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpec {
    /// Maximum photon number kept for mode 1.
    pub n_max_1: usize,
    /// Maximum photon number kept for mode 2.
    pub n_max_2: usize,
}

impl HilbertSpec {
    pub fn new(n_max_1: usize, n_max_2: usize) -> Self {
        Self { n_max_1, n_max_2 }
    }

    /// Default truncation for full-master-equation runs: ten photons per mode.
    pub fn default_fme() -> Self {
        Self::new(10, 10)
    }

    /// Total dimension 2·(n_max_1+1)·(n_max_2+1).
    pub fn dim(&self) -> usize {
        2 * (self.n_max_1 + 1) * (self.n_max_2 + 1)
    }

    /// Basis index of |n₁,n₂⟩⊗|s⟩ (mode 1 slowest, qubit fastest).
    pub fn index(&self, n1: usize, n2: usize, s: usize) -> usize {
        debug_assert!(n1 <= self.n_max_1 && n2 <= self.n_max_2 && s < 2);
        (n1 * (self.n_max_2 + 1) + n2) * 2 + s
    }

    /// Inverse of [`index`](Self::index): (n₁, n₂, s) of a basis index.
    pub fn labels(&self, idx: usize) -> (usize, usize, usize) {
        let s = idx % 2;
        let rest = idx / 2;
        let n2 = rest % (self.n_max_2 + 1);
        let n1 = rest / (self.n_max_2 + 1);
        (n1, n2, s)
    }

    /// Weighted excitation number 2s + n₁ + n₂ of a basis index.
    pub fn weighted_excitation(&self, idx: usize) -> usize {
        let (n1, n2, s) = self.labels(idx);
        2 * s + n1 + n2
    }
}

/// The space an operator or state is defined on.
///
/// `Composite` is the full Fock ⊗ Fock ⊗ qubit space; `Reduced` is the
/// single-photon-blockade manifold basis {|0,0⟩, |0,1⟩, |1,0⟩, |2,0⟩, …};
/// `ThreeLevel` is the {|0⟩, |L⟩, |R⟩} system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Composite(HilbertSpec),
    Reduced { n_max_ph: usize },
    ThreeLevel,
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Composite(spec) => spec.dim(),
            Space::Reduced { n_max_ph } => n_max_ph + 2,
            Space::ThreeLevel => 3,
        }
    }

    /// Weighted excitation number of basis state `idx`: 2s + n₁ + n₂ on the
    /// composite space, the retained photon number on the reduced spaces.
    pub fn grade(&self, idx: usize) -> usize {
        debug_assert!(idx < self.dim());
        match self {
            Space::Composite(spec) => spec.weighted_excitation(idx),
            // reduced basis order: |0,0⟩, |0,1⟩, |1,0⟩, ..., |n,0⟩
            Space::Reduced { .. } => match idx {
                0 => 0,
                1 => 1,
                n => n - 1,
            },
            // basis {|0⟩, |L⟩, |R⟩}: both excited levels hold one photon
            Space::ThreeLevel => usize::from(idx > 0),
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Space::Composite(s) => write!(f, "composite({},{})", s.n_max_1, s.n_max_2),
            Space::Reduced { n_max_ph } => write!(f, "reduced({n_max_ph})"),
            Space::ThreeLevel => write!(f, "three-level"),
        }
    }
}

/// Sparse complex operator tagged with its space.
///
/// Exact zeros are dropped from storage; no drop tolerance above 0 is applied.
#[derive(Clone, Debug)]
pub struct Operator {
    space: Space,
    mat: CsMat<C64>,
}

fn prune(mat: CsMat<C64>) -> CsMat<C64> {
    let mut tri = TriMat::new(mat.shape());
    for (&v, (i, j)) in mat.iter() {
        if v != C64::new(0.0, 0.0) {
            tri.add_triplet(i, j, v);
        }
    }
    tri.to_csr()
}

impl Operator {
    pub fn from_triplets(space: Space, triplets: &[(usize, usize, C64)]) -> Self {
        let d = space.dim();
        let mut tri = TriMat::new((d, d));
        for &(i, j, v) in triplets {
            if v != C64::new(0.0, 0.0) {
                tri.add_triplet(i, j, v);
            }
        }
        Self { space, mat: tri.to_csr() }
    }

    pub fn from_csmat(space: Space, mat: CsMat<C64>) -> Self {
        assert_eq!(mat.rows(), space.dim());
        assert_eq!(mat.cols(), space.dim());
        Self { space, mat: prune(mat) }
    }

    pub fn identity(space: Space) -> Self {
        let d = space.dim();
        Self { space, mat: CsMat::eye(d) }
    }

    pub fn zero(space: Space) -> Self {
        let d = space.dim();
        Self { space, mat: CsMat::zero((d, d)) }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CsMat<C64> {
        &self.mat
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    fn check_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(
                self.space.to_string(),
                other.space.to_string(),
            ));
        }
        Ok(())
    }

    /// Hermitian adjoint (conjugate transpose).
    pub fn adjoint(&self) -> Self {
        let d = self.dim();
        let mut tri = TriMat::new((d, d));
        for (&v, (i, j)) in self.mat.iter() {
            tri.add_triplet(j, i, v.conj());
        }
        Self { space: self.space, mat: tri.to_csr() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { space: self.space, mat: prune(self.mat.map(|&v| v * c)) }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self { space: self.space, mat: prune(&self.mat + &other.mat) })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self { space: self.space, mat: prune(&self.mat * &other.mat) })
    }

    /// Linear combination Σ cᵢ Ôᵢ.
    pub fn compose(terms: &[(&Operator, C64)]) -> Result<Self> {
        let first = terms.first().expect("compose needs at least one term");
        let mut acc = first.0.scale(first.1);
        for (op, c) in &terms[1..] {
            acc = acc.add(&op.scale(*c))?;
        }
        Ok(acc)
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        Ok(Self { space: self.space, mat: prune(&ab.mat - &ba.mat) })
    }

    /// Tr[Ô ρ̂].
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<C64> {
        if self.space != rho.space {
            return Err(Error::SpaceMismatch(
                self.space.to_string(),
                rho.space.to_string(),
            ));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (&v, (i, j)) in self.mat.iter() {
            acc += v * rho.mat[(j, i)];
        }
        Ok(acc)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if self.space != psi.space {
            return Err(Error::SpaceMismatch(
                self.space.to_string(),
                psi.space.to_string(),
            ));
        }
        let mut out = DVector::from_element(self.dim(), C64::new(0.0, 0.0));
        for (row, vec) in self.mat.outer_iterator().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (col, &v) in vec.iter() {
                acc += v * psi.amplitudes[col];
            }
            out[row] = acc;
        }
        Ok(StateVector { space: self.space, amplitudes: out })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for (&v, (i, j)) in self.mat.iter() {
            m[(i, j)] = v;
        }
        m
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.iter().map(|(v, _)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max |⟨i|Ô−Ô†|j⟩| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.mat - &self.adjoint().mat;
        diff.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max)
    }
}

/// Annihilation operator â_k on the composite space (identity on the other
/// factors). At the truncation boundary â† maps the top Fock state to zero.
pub fn annihilation(spec: HilbertSpec, mode: usize) -> Result<Operator> {
    let space = Space::Composite(spec);
    let mut triplets = Vec::new();
    let (cap1, cap2) = (spec.n_max_1, spec.n_max_2);
    for n1 in 0..=cap1 {
        for n2 in 0..=cap2 {
            for s in 0..2 {
                match mode {
                    1 if n1 >= 1 => triplets.push((
                        spec.index(n1 - 1, n2, s),
                        spec.index(n1, n2, s),
                        C64::new((n1 as f64).sqrt(), 0.0),
                    )),
                    2 if n2 >= 1 => triplets.push((
                        spec.index(n1, n2 - 1, s),
                        spec.index(n1, n2, s),
                        C64::new((n2 as f64).sqrt(), 0.0),
                    )),
                    1 | 2 => {}
                    m => return Err(Error::InvalidMode(m)),
                }
            }
        }
    }
    Ok(Operator::from_triplets(space, &triplets))
}

/// Qubit lowering operator σ̂ = |g⟩⟨e| on the composite space.
pub fn qubit_lowering(spec: HilbertSpec) -> Operator {
    let space = Space::Composite(spec);
    let mut triplets = Vec::new();
    for n1 in 0..=spec.n_max_1 {
        for n2 in 0..=spec.n_max_2 {
            triplets.push((
                spec.index(n1, n2, 0),
                spec.index(n1, n2, 1),
                C64::new(1.0, 0.0),
            ));
        }
    }
    Operator::from_triplets(space, &triplets)
}

/// Photon number operator n̂_k = â_k†â_k, built with exact integer diagonal
/// entries (â†â would carry a one-ulp error at n = 3 from √3·√3).
pub fn number(spec: HilbertSpec, mode: usize) -> Result<Operator> {
    if mode != 1 && mode != 2 {
        return Err(Error::InvalidMode(mode));
    }
    let space = Space::Composite(spec);
    let triplets: Vec<(usize, usize, C64)> = (0..spec.dim())
        .map(|idx| {
            let (n1, n2, _) = spec.labels(idx);
            let n = if mode == 1 { n1 } else { n2 };
            (idx, idx, C64::new(n as f64, 0.0))
        })
        .collect();
    Ok(Operator::from_triplets(space, &triplets))
}

/// Dense complex state vector tagged with its space.
#[derive(Clone, Debug)]
pub struct StateVector {
    space: Space,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(space: Space, amplitudes: DVector<C64>) -> Self {
        assert_eq!(amplitudes.len(), space.dim());
        Self { space, amplitudes }
    }

    /// Basis state |n₁,n₂⟩⊗|s⟩ of a composite space.
    pub fn basis(spec: HilbertSpec, n1: usize, n2: usize, s: usize) -> Self {
        let mut amps = DVector::from_element(spec.dim(), C64::new(0.0, 0.0));
        amps[spec.index(n1, n2, s)] = C64::new(1.0, 0.0);
        Self { space: Space::Composite(spec), amplitudes: amps }
    }

    /// Basis state by index in an arbitrary space.
    pub fn basis_index(space: Space, idx: usize) -> Self {
        let mut amps = DVector::from_element(space.dim(), C64::new(0.0, 0.0));
        amps[idx] = C64::new(1.0, 0.0);
        Self { space, amplitudes: amps }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            space: self.space,
            amplitudes: self.amplitudes.map(|a| a / C64::new(n, 0.0)),
        }
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(
                self.space.to_string(),
                other.space.to_string(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Linear combination Σ cᵢ |ψᵢ⟩ (unnormalized).
    pub fn superpose(terms: &[(&StateVector, C64)]) -> Result<Self> {
        let space = terms[0].0.space;
        let mut amps = DVector::from_element(space.dim(), C64::new(0.0, 0.0));
        for (psi, c) in terms {
            if psi.space != space {
                return Err(Error::SpaceMismatch(
                    space.to_string(),
                    psi.space.to_string(),
                ));
            }
            amps += psi.amplitudes.map(|a| a * c);
        }
        Ok(Self { space, amplitudes: amps })
    }
}

/// Dense trace-one positive-semidefinite complex matrix with its space tag.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: Space,
    mat: DMatrix<C64>,
}

/// Hermiticity tolerance for density matrices.
pub const RHO_HERMITICITY_TOL: f64 = 1e-10;
/// Trace-one tolerance for density matrices.
pub const RHO_TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue allowed by the PSD check (linear-solve roundoff).
pub const RHO_PSD_TOL: f64 = -1e-8;

impl DensityMatrix {
    /// Wrap a matrix after validating the density-matrix invariants.
    pub fn new(space: Space, mat: DMatrix<C64>) -> Result<Self> {
        let rho = Self::new_unchecked(space, mat);
        rho.validate()?;
        Ok(rho)
    }

    /// Wrap without validation (solver-internal use).
    pub fn new_unchecked(space: Space, mat: DMatrix<C64>) -> Self {
        assert_eq!(mat.nrows(), space.dim());
        assert_eq!(mat.ncols(), space.dim());
        Self { space, mat }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let psi = psi.normalized();
        let d = psi.space.dim();
        let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = psi.amplitudes[i] * psi.amplitudes[j].conj();
            }
        }
        Self { space: psi.space, mat: m }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.mat.nrows() {
            for j in i..self.mat.ncols() {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Real eigenvalues of the Hermitized matrix, ascending.
    ///
    /// Entries below 10⁻¹⁶ of the largest magnitude are flushed to zero
    /// first; weak-drive steady states span hundreds of orders of magnitude
    /// and the tridiagonalization produces NaN on that dynamic range. The
    /// flush perturbs each eigenvalue by at most d·10⁻¹⁶·max|ρ_ij|.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = self.hermitized();
        let max_abs = herm.mat.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let floor = max_abs * 1e-16;
        let cleaned = herm
            .mat
            .map(|v| if v.norm() < floor { C64::new(0.0, 0.0) } else { v });
        let mut ev: Vec<f64> = cleaned
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn hermitized(&self) -> Self {
        let m = (&self.mat + self.mat.adjoint()).map(|v| v * C64::new(0.5, 0.0));
        Self { space: self.space, mat: m }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > RHO_HERMITICITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "hermiticity defect {h:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > RHO_TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min_ev = self
            .eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_ev < RHO_PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "min eigenvalue {min_ev:.3e}"
            )));
        }
        Ok(())
    }
}
