//! Hamiltonians and structural objects of the extended nondegenerate
//! two-photon Jaynes-Cummings model: the weighted excitation number, the
//! interaction and rotating-frame Hamiltonians, excitation-subspace spectra,
//! and the projector onto the zero-energy manifold.
//!
//! All energies and rates are in units of κ₁. The resonance ω_a = 2ω_c is
//! built into the rotating frame; the lab-frame free Hamiltonian never
//! appears.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, number, qubit_lowering, HilbertSpec, Operator, Space, StateVector};

/// Physical parameters, all in units of κ₁ (so `kappa1` is fixed at 1).
///
/// Couplings g, J, Ω are real and nonnegative; phases are gauge-removable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Three-body two-photon coupling strength g.
    pub g: f64,
    /// Two-body hopping amplitude J.
    pub j: f64,
    /// Drive amplitude Ω on mode 1.
    pub omega: f64,
    /// Pump-cavity detuning Δ = ω_p − ω_c.
    pub delta: f64,
    /// Decay rate of the undriven mode, κ₂.
    pub kappa2: f64,
    /// Qubit decay rate γ.
    pub gamma: f64,
    /// Two-photon decay rate of the driven mode, Γ₁.
    pub gamma2ph_1: f64,
    /// Two-photon decay rate of the undriven mode, Γ₂.
    pub gamma2ph_2: f64,
}

/// κ₁ is the unit of every rate and coupling in [`SystemParams`].
pub const KAPPA1: f64 = 1.0;

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            j: 0.1,
            omega: 0.0,
            delta: 0.0,
            kappa2: 1.0,
            gamma: 0.01,
            gamma2ph_1: 0.0,
            gamma2ph_2: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g", self.g),
            ("J", self.j),
            ("Omega", self.omega),
            ("kappa2", self.kappa2),
            ("gamma", self.gamma),
            ("Gamma1", self.gamma2ph_1),
            ("Gamma2", self.gamma2ph_2),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!("parameter {name} = {v} must be finite and >= 0")));
            }
        }
        if !self.delta.is_finite() {
            return Err(Error::Config("Delta must be finite".into()));
        }
        Ok(())
    }
}

/// N̂ = 2σ̂†σ̂ + n̂₁ + n̂₂, diagonal in the product basis.
pub fn weighted_excitation_number(spec: HilbertSpec) -> Operator {
    let space = Space::Composite(spec);
    let triplets: Vec<(usize, usize, C64)> = (0..spec.dim())
        .map(|idx| (idx, idx, C64::new(spec.weighted_excitation(idx) as f64, 0.0)))
        .collect();
    Operator::from_triplets(space, &triplets)
}

/// Ĥ_int = J(â₁†â₂ + â₂†â₁) + g(â₁â₂σ̂† + σ̂â₁†â₂†).
pub fn interaction_hamiltonian(spec: HilbertSpec, params: &SystemParams) -> Operator {
    let a1 = annihilation(spec, 1).expect("mode 1");
    let a2 = annihilation(spec, 2).expect("mode 2");
    let sm = qubit_lowering(spec);
    let hop = a1.adjoint().mul(&a2).expect("same spec");
    let tp = a1
        .mul(&a2)
        .and_then(|a1a2| sm.adjoint().mul(&a1a2))
        .expect("same spec");
    let j = C64::new(params.j, 0.0);
    let g = C64::new(params.g, 0.0);
    Operator::compose(&[(&hop, j), (&hop.adjoint(), j), (&tp, g), (&tp.adjoint(), g)])
        .expect("same spec")
}

/// Ĥ_tot = −ΔN̂ + Ĥ_int + Ω(â₁ + â₁†) in the frame rotating at the pump.
pub fn total_hamiltonian(spec: HilbertSpec, params: &SystemParams) -> Operator {
    let h_int = interaction_hamiltonian(spec, params);
    let n_hat = weighted_excitation_number(spec);
    let a1 = annihilation(spec, 1).expect("mode 1");
    let om = C64::new(params.omega, 0.0);
    Operator::compose(&[
        (&n_hat, C64::new(-params.delta, 0.0)),
        (&h_int, C64::new(1.0, 0.0)),
        (&a1, om),
        (&a1.adjoint(), om),
    ])
    .expect("same spec")
}

/// Anti-Hermitian dissipative part Ĥ_nh = −(i/2)(κ₁n̂₁ + κ₂n̂₂ + γσ̂†σ̂) of the
/// effective non-Hermitian Hamiltonian. Exposed for documentation and tests
/// only; no non-Hermitian evolution solver is built on it.
pub fn non_hermitian_part(spec: HilbertSpec, params: &SystemParams) -> Operator {
    let n1 = number(spec, 1).expect("mode 1");
    let n2 = number(spec, 2).expect("mode 2");
    let sm = qubit_lowering(spec);
    let ne = sm.adjoint().mul(&sm).expect("same spec");
    let half = C64::new(0.0, -0.5);
    Operator::compose(&[
        (&n1, half * KAPPA1),
        (&n2, half * params.kappa2),
        (&ne, half * params.gamma),
    ])
    .expect("same spec")
}

/// Spectrum of Ĥ_int restricted to the subspace ℋ_n of weighted excitation n.
#[derive(Clone, Debug)]
pub struct SubspaceSpectrum {
    /// Excitation number of the subspace.
    pub n: usize,
    /// Basis labels (n₁, n₂, s), lexicographic in (n₁, n₂, s).
    pub basis: Vec<(usize, usize, usize)>,
    /// Eigenvalues in units of κ₁, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors embedded in the composite space, same order.
    pub eigenvectors: Vec<StateVector>,
}

/// Enumerate the (n₁, n₂, s) labels of ℋ_n, lexicographic order.
fn subspace_basis(n: usize) -> Vec<(usize, usize, usize)> {
    let mut basis = Vec::new();
    for n1 in 0..=n {
        for n2 in 0..=(n - n1) {
            let rem = n - n1 - n2;
            if rem == 0 {
                basis.push((n1, n2, 0));
            } else if rem == 2 {
                basis.push((n1, n2, 1));
            }
        }
    }
    basis.sort();
    basis
}

/// Diagonalize Ĥ_int in the subspace ℋ_n.
///
/// `n_basis_cap` bounds the per-mode truncation used to embed the
/// eigenvectors; it must be at least n.
pub fn subspace_spectrum(
    params: &SystemParams,
    n: usize,
    n_basis_cap: usize,
) -> Result<SubspaceSpectrum> {
    if n_basis_cap < n {
        return Err(Error::TruncationTooSmall { needed: n });
    }
    let basis = subspace_basis(n);
    let dim = basis.len();
    let mut h = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let pos: std::collections::HashMap<(usize, usize, usize), usize> =
        basis.iter().copied().zip(0..).collect();
    for (col, &(n1, n2, s)) in basis.iter().enumerate() {
        // J a1† a2: (n1, n2, s) -> (n1+1, n2-1, s)
        if n2 >= 1 {
            if let Some(&row) = pos.get(&(n1 + 1, n2 - 1, s)) {
                let amp = ((n1 + 1) as f64).sqrt() * (n2 as f64).sqrt();
                h[(row, col)] += C64::new(params.j * amp, 0.0);
            }
        }
        // J a2† a1
        if n1 >= 1 {
            if let Some(&row) = pos.get(&(n1 - 1, n2 + 1, s)) {
                let amp = (n1 as f64).sqrt() * ((n2 + 1) as f64).sqrt();
                h[(row, col)] += C64::new(params.j * amp, 0.0);
            }
        }
        // g a1 a2 sigma†: (n1, n2, g) -> (n1-1, n2-1, e)
        if s == 0 && n1 >= 1 && n2 >= 1 {
            if let Some(&row) = pos.get(&(n1 - 1, n2 - 1, 1)) {
                let amp = (n1 as f64).sqrt() * (n2 as f64).sqrt();
                h[(row, col)] += C64::new(params.g * amp, 0.0);
            }
        }
        // g sigma a1† a2†: (n1, n2, e) -> (n1+1, n2+1, g)
        if s == 1 {
            if let Some(&row) = pos.get(&(n1 + 1, n2 + 1, 0)) {
                let amp = ((n1 + 1) as f64).sqrt() * ((n2 + 1) as f64).sqrt();
                h[(row, col)] += C64::new(params.g * amp, 0.0);
            }
        }
    }

    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let spec = HilbertSpec::new(n_basis_cap, n_basis_cap);
    let mut eigenvalues = Vec::with_capacity(dim);
    let mut eigenvectors = Vec::with_capacity(dim);
    for &k in &order {
        eigenvalues.push(eig.eigenvalues[k]);
        // fix the gauge: largest-magnitude component real positive
        let col = eig.eigenvectors.column(k);
        let (imax, _) = col
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        let phase = col[imax] / C64::new(col[imax].norm(), 0.0);
        let terms: Vec<(StateVector, C64)> = basis
            .iter()
            .zip(col.iter())
            .map(|(&(n1, n2, s), &c)| (StateVector::basis(spec, n1, n2, s), c / phase))
            .collect();
        let refs: Vec<(&StateVector, C64)> = terms.iter().map(|(v, c)| (v, *c)).collect();
        eigenvectors.push(StateVector::superpose(&refs)?.normalized());
    }

    Ok(SubspaceSpectrum { n, basis, eigenvalues, eigenvectors })
}

/// Exact numeric splitting ΔE_s: the smallest eigenvalue magnitude of the
/// ℋ_{2s+1} block.
pub fn splitting(params: &SystemParams, s: usize) -> Result<f64> {
    let n = 2 * s + 1;
    let spectrum = subspace_spectrum(params, n, n)?;
    Ok(spectrum
        .eigenvalues
        .iter()
        .map(|e| e.abs())
        .fold(f64::INFINITY, f64::min))
}

/// Leading-order asymptote ΔE_s ≃ 𝒯_{2s} J (J/g)^{2s} with
/// 𝒯_{2s} = (2s+1)!!/(2s)!!, valid for J/g ≪ 1.
pub fn splitting_asymptote(params: &SystemParams, s: usize) -> f64 {
    let mut t = 1.0;
    for k in 1..=s {
        t *= (2.0 * k as f64 + 1.0) / (2.0 * k as f64);
    }
    t * params.j * (params.j / params.g).powi(2 * s as i32)
}

/// Orthogonal projector 𝕡 onto the zero-energy manifold
/// 𝒦 = span{|0,0,g⟩} ⊕ span{|n,0,g⟩, |0,n,g⟩ : n ≥ 1} within truncation.
pub fn manifold_projector(spec: HilbertSpec) -> Operator {
    let mut triplets = Vec::new();
    let one = C64::new(1.0, 0.0);
    triplets.push((spec.index(0, 0, 0), spec.index(0, 0, 0), one));
    for n in 1..=spec.n_max_1 {
        triplets.push((spec.index(n, 0, 0), spec.index(n, 0, 0), one));
    }
    for n in 1..=spec.n_max_2 {
        triplets.push((spec.index(0, n, 0), spec.index(0, n, 0), one));
    }
    Operator::from_triplets(Space::Composite(spec), &triplets)
}
