//! Reduced master equation on the blockaded manifold: the truncated basis
//! and its operators, the exact three-level steady state, optimal-parameter
//! formulas with their asymptotics, and brightness optimization including
//! two-photon dissipation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, Space};
use crate::lindblad::{liouvillian, mean_photon, steady_state, LindbladModel};
use crate::model::{SystemParams, KAPPA1};

/// Photon cap of the driven-mode chain matching the reference numerics.
pub const DEFAULT_N_MAX_PH: usize = 30;

/// Residual tolerance for the internal reduced-model steady solves.
const RME_SOLVE_TOL: f64 = 1e-9;

/// Reduced basis {|0,0⟩, |0,1⟩, |1,0⟩, |2,0⟩, …, |N,0⟩}: the undriven mode
/// holds at most one photon, the driven mode at most `n_max_ph`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReducedBasis {
    pub n_max_ph: usize,
}

impl Default for ReducedBasis {
    fn default() -> Self {
        Self { n_max_ph: DEFAULT_N_MAX_PH }
    }
}

impl ReducedBasis {
    pub fn new(n_max_ph: usize) -> Self {
        assert!(n_max_ph >= 1, "reduced basis needs at least one photon level");
        Self { n_max_ph }
    }

    pub fn space(&self) -> Space {
        Space::Reduced { n_max_ph: self.n_max_ph }
    }

    pub fn dim(&self) -> usize {
        self.n_max_ph + 2
    }

    /// Basis index of |0,1⟩.
    pub const UNDRIVEN_ONE: usize = 1;

    /// Basis index of |n,0⟩.
    pub fn driven_index(&self, n: usize) -> usize {
        debug_assert!(n <= self.n_max_ph);
        if n == 0 { 0 } else { n + 1 }
    }
}

/// Restricted mode-1 ladder ã₁ = â₁ ⊗ |0⟩₂⟨0|: acts on the {|n,0⟩} chain and
/// annihilates |0,1⟩.
pub fn reduced_a1(basis: &ReducedBasis) -> Operator {
    let mut triplets = Vec::with_capacity(basis.n_max_ph);
    for n in 1..=basis.n_max_ph {
        triplets.push((
            basis.driven_index(n - 1),
            basis.driven_index(n),
            C64::new((n as f64).sqrt(), 0.0),
        ));
    }
    Operator::from_triplets(basis.space(), &triplets)
}

/// Restricted mode-2 ladder ã₂ = |0⟩₁⟨0| ⊗ â₂ = |0,0⟩⟨0,1|.
pub fn reduced_a2(basis: &ReducedBasis) -> Operator {
    Operator::from_triplets(
        basis.space(),
        &[(0, ReducedBasis::UNDRIVEN_ONE, C64::new(1.0, 0.0))],
    )
}

/// Reduced-model Hamiltonian H̃ = J(|1,0⟩⟨0,1| + h.c.) + Ω(ã₁ + ã₁†).
///
/// Stated at resonance: the reduced description carries no detuning term, so
/// `params.delta` does not enter.
pub fn reduced_hamiltonian(basis: &ReducedBasis, params: &SystemParams) -> Result<Operator> {
    let a1 = reduced_a1(basis);
    let hop = Operator::from_triplets(
        basis.space(),
        &[(basis.driven_index(1), ReducedBasis::UNDRIVEN_ONE, C64::new(1.0, 0.0))],
    );
    Operator::compose(&[
        (&hop, C64::new(params.j, 0.0)),
        (&hop.adjoint(), C64::new(params.j, 0.0)),
        (&a1, C64::new(params.omega, 0.0)),
        (&a1.adjoint(), C64::new(params.omega, 0.0)),
    ])
}

/// Reduced master equation: H̃ with jumps (ã₁, κ₁), (ã₂, κ₂), plus the
/// two-photon channels (ã₁², Γ₁) and (ã₂², Γ₂) when nonzero.
///
/// ã₂² vanishes structurally (the undriven mode holds at most one photon),
/// so Γ₂ is accepted but has no effect on any reduced-model observable.
pub fn build_rme(basis: &ReducedBasis, params: &SystemParams) -> Result<LindbladModel> {
    params.validate()?;
    let a1 = reduced_a1(basis);
    let a2 = reduced_a2(basis);
    let h = reduced_hamiltonian(basis, params)?;
    let mut jumps = vec![(a1.clone(), KAPPA1), (a2.clone(), params.kappa2)];
    if params.gamma2ph_1 > 0.0 {
        jumps.push((a1.mul(&a1)?, params.gamma2ph_1));
    }
    if params.gamma2ph_2 > 0.0 {
        jumps.push((a2.mul(&a2)?, params.gamma2ph_2));
    }
    Ok(LindbladModel::new(h, jumps)?
        .with_drive_scale(2.0 * params.omega / KAPPA1))
}

/// Steady state of the three-level restriction {|0⟩, |L⟩=|1,0⟩, |R⟩=|0,1⟩}.
#[derive(Clone, Debug)]
pub struct ThreeLevelSteadyState {
    /// Full ρ̃ on the three-level space, from the numeric Liouvillian
    /// null space (the off-diagonals have no printed closed form).
    pub rho: DensityMatrix,
    /// Closed-form ⟨ñ₁⟩ = ρ̃_LL.
    pub n1: f64,
    /// Closed-form ⟨ñ₂⟩ = ρ̃_RR.
    pub n2: f64,
}

/// Closed-form populations of the three-level steady state, with κ₁ = 1:
///
/// ⟨ñ₁⟩ = 4𝒬₂Ω²(κ₁²+8Ω²)⁻¹ / D,  ⟨ñ₂⟩ = 16𝒬₀J²Ω² / D,
/// D = 16𝒬₀J⁴ + 8𝒬₁J² + 𝒬₂,
///
/// with 𝒬₀ = κ₁+κ₂, 𝒬₁ = κ₁(2Ω²+κ₁κ₂+κ₂²), and
/// 𝒬₂ = κ₂(κ₁²+8Ω²)(4Ω²+κ₁κ₂+κ₂²). The 𝒬₁/𝒬₂ coefficients are transcribed
/// verbatim; the numeric null-space oracle in the tests confirms the κ₂²
/// reading of their final factor.
pub fn three_level_populations(j: f64, omega: f64, kappa2: f64) -> Result<(f64, f64)> {
    let k1 = KAPPA1;
    let q0 = k1 + kappa2;
    let q1 = k1 * (2.0 * omega * omega + k1 * kappa2 + kappa2 * kappa2);
    let q2 = kappa2
        * (k1 * k1 + 8.0 * omega * omega)
        * (4.0 * omega * omega + k1 * kappa2 + kappa2 * kappa2);
    let denom = 16.0 * q0 * j.powi(4) + 8.0 * q1 * j * j + q2;
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator(
            "three-level populations: 16 Q0 J^4 + 8 Q1 J^2 + Q2 = 0".into(),
        ));
    }
    let n1 = 4.0 * q2 * omega * omega / (k1 * k1 + 8.0 * omega * omega) / denom;
    let n2 = 16.0 * q0 * j * j * omega * omega / denom;
    Ok((n1, n2))
}

/// Lindblad model of the three-level restriction {|0⟩, |L⟩, |R⟩} with
/// lowering operators |0⟩⟨L| (rate κ₁) and |0⟩⟨R| (rate κ₂).
pub fn three_level_model(j: f64, omega: f64, kappa2: f64) -> Result<LindbladModel> {
    let space = Space::ThreeLevel;
    let sl = Operator::from_triplets(space, &[(0, 1, C64::new(1.0, 0.0))]);
    let sr = Operator::from_triplets(space, &[(0, 2, C64::new(1.0, 0.0))]);
    let hop = Operator::from_triplets(space, &[(1, 2, C64::new(1.0, 0.0))]);
    let h = Operator::compose(&[
        (&hop, C64::new(j, 0.0)),
        (&hop.adjoint(), C64::new(j, 0.0)),
        (&sl, C64::new(omega, 0.0)),
        (&sl.adjoint(), C64::new(omega, 0.0)),
    ])?;
    Ok(LindbladModel::new(h, vec![(sl, KAPPA1), (sr, kappa2)])?
        .with_drive_scale(2.0 * omega / KAPPA1))
}

/// Solve the three-level restriction: closed-form populations plus the full
/// ρ̃ from the numeric steady state.
pub fn three_level_steady_state(j: f64, omega: f64, kappa2: f64) -> Result<ThreeLevelSteadyState> {
    let (n1, n2) = three_level_populations(j, omega, kappa2)?;
    let model = three_level_model(j, omega, kappa2)?;
    let liou = liouvillian(&model)?;
    let rho = steady_state(&liou, RME_SOLVE_TOL)?.rho;
    Ok(ThreeLevelSteadyState { rho, n1, n2 })
}

/// Optimal hopping J_opt = κ₁[(3κ₂/16κ₁)((κ₁+κ₂)/κ₁ − κ₂/(κ₁+κ₂))]^{1/4}
/// maximizing ⟨ñ₂⟩ at Ω = 0.5κ₁.
pub fn optimal_hopping(kappa2: f64) -> f64 {
    let eps = kappa2 / KAPPA1;
    KAPPA1 * ((3.0 * eps / 16.0) * (1.0 + eps - eps / (1.0 + eps))).powf(0.25)
}

/// Optimal single-photon infidelity ℐ_opt = 1 − ⟨ñ₂⟩(J_opt, Ω = 0.5κ₁):
///
/// ℐ_opt = [ε(1+2ε) + √(12ε(1+ε)(1+ε+ε²))] / [1 + 2ε(1+ε) + √(12ε(1+ε)(1+ε+ε²))].
pub fn optimal_infidelity(kappa2: f64) -> f64 {
    let eps = kappa2 / KAPPA1;
    let root = (12.0 * eps * (1.0 + eps) * (1.0 + eps + eps * eps)).sqrt();
    (eps * (1.0 + 2.0 * eps) + root) / (1.0 + 2.0 * eps * (1.0 + eps) + root)
}

/// Leading-order small-ε expansions: J_opt/κ₁ ≃ (3ε/16)^{1/4} and
/// ℐ_opt ≃ (12ε)^{1/2} with ε = κ₂/κ₁.
pub fn asymptotic_scalings(kappa2: f64) -> (f64, f64) {
    let eps = kappa2 / KAPPA1;
    ((3.0 * eps / 16.0).powf(0.25), (12.0 * eps).sqrt())
}

/// Rectangular (J, Ω) search region; a coordinate with equal endpoints is
/// held fixed.
#[derive(Clone, Copy, Debug)]
pub struct SearchBox {
    pub j: (f64, f64),
    pub omega: (f64, f64),
}

/// Result of a brightness optimization.
#[derive(Clone, Copy, Debug)]
pub struct BrightnessOptimum {
    pub j: f64,
    pub omega: f64,
    /// Maximized objective value.
    pub value: f64,
}

/// Target observable maximized by [`optimize_brightness`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrightnessObjective {
    /// ⟨ñ₂⟩ = ⟨0,1|ρ̃_ss|0,1⟩, the undriven-mode brightness.
    UndrivenPhoton,
    /// ⟨1,0|ρ̃_ss|1,0⟩, the driven-mode single-photon population.
    DrivenSinglePhoton,
}

const GRID_POINTS: usize = 64;
const GOLDEN_ROUNDS: usize = 3;
const GOLDEN_ITERS: usize = 40;

/// Maximize a steady-state population of the reduced model over the (J, Ω)
/// box: deterministic 64×64 grid scan followed by three rounds of
/// golden-section refinement per free coordinate.
///
/// Fails with [`Error::BoundaryOptimum`] when the grid maximum sits on the
/// edge of a non-degenerate coordinate (the box does not bracket the
/// optimum).
pub fn optimize_brightness(
    params: &SystemParams,
    basis: &ReducedBasis,
    search_box: &SearchBox,
    objective: BrightnessObjective,
) -> Result<BrightnessOptimum> {
    let (j_lo, j_hi) = search_box.j;
    let (om_lo, om_hi) = search_box.omega;
    if !(j_hi >= j_lo && om_hi >= om_lo && j_lo >= 0.0 && om_lo >= 0.0) {
        return Err(Error::Config("invalid (J, Omega) search box".into()));
    }
    let eval = |j: f64, omega: f64| -> Result<f64> {
        let p = SystemParams { j, omega, ..*params };
        let model = build_rme(basis, &p)?;
        let rho = steady_state(&liouvillian(&model)?, RME_SOLVE_TOL)?.rho;
        match objective {
            BrightnessObjective::UndrivenPhoton => mean_photon(&rho, 2),
            BrightnessObjective::DrivenSinglePhoton => {
                let k = basis.driven_index(1);
                Ok(rho.matrix()[(k, k)].re)
            }
        }
    };

    let coord = |lo: f64, hi: f64, i: usize| {
        if hi == lo {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64
        }
    };
    let nj = if j_hi == j_lo { 1 } else { GRID_POINTS };
    let nom = if om_hi == om_lo { 1 } else { GRID_POINTS };

    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for ij in 0..nj {
        for io in 0..nom {
            let v = eval(coord(j_lo, j_hi, ij), coord(om_lo, om_hi, io))?;
            if v > best.2 {
                best = (ij, io, v);
            }
        }
    }
    let (bj, bo, _) = best;
    if (nj > 1 && (bj == 0 || bj == nj - 1)) || (nom > 1 && (bo == 0 || bo == nom - 1)) {
        return Err(Error::BoundaryOptimum(
            coord(j_lo, j_hi, bj),
            coord(om_lo, om_hi, bo),
        ));
    }

    let mut j = coord(j_lo, j_hi, bj);
    let mut omega = coord(om_lo, om_hi, bo);
    let dj = if nj > 1 { (j_hi - j_lo) / (GRID_POINTS - 1) as f64 } else { 0.0 };
    let dom = if nom > 1 { (om_hi - om_lo) / (GRID_POINTS - 1) as f64 } else { 0.0 };
    let mut value = best.2;
    for _ in 0..GOLDEN_ROUNDS {
        if nj > 1 {
            (j, value) = golden_max(|x| eval(x, omega), j - dj, j + dj)?;
        }
        if nom > 1 {
            (omega, value) = golden_max(|x| eval(j, x), omega - dom, omega + dom)?;
        }
    }
    Ok(BrightnessOptimum { j, omega, value })
}

/// Golden-section maximization of a unimodal scalar function on [lo, hi].
fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::g2_zero;

    fn base_params() -> SystemParams {
        SystemParams {
            g: 20.0,
            j: 0.2,
            omega: 0.5,
            delta: 0.0,
            kappa2: 0.01,
            gamma: 0.01,
            gamma2ph_1: 0.0,
            gamma2ph_2: 0.0,
        }
    }

    fn rme_n2(basis: &ReducedBasis, params: &SystemParams) -> f64 {
        let model = build_rme(basis, params).unwrap();
        let rho = steady_state(&liouvillian(&model).unwrap(), 1e-9).unwrap().rho;
        mean_photon(&rho, 2).unwrap()
    }

    #[test]
    fn hamiltonian_matrix_elements() {
        let basis = ReducedBasis::new(4);
        let p = SystemParams { j: 0.37, omega: 0.21, ..base_params() };
        let h = reduced_hamiltonian(&basis, &p).unwrap();
        let m = h.to_dense();
        // ⟨1,0|H̃|0,1⟩ = J
        assert!((m[(basis.driven_index(1), 1)] - C64::new(0.37, 0.0)).norm() < 1e-15);
        // ⟨2,0|H̃|1,0⟩ = √2 Ω
        let expected = C64::new(2f64.sqrt() * 0.21, 0.0);
        assert!((m[(basis.driven_index(2), basis.driven_index(1))] - expected).norm() < 1e-15);
        assert!(h.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn two_photon_channels_enter_when_positive() {
        let basis = ReducedBasis::new(4);
        let p = SystemParams { gamma2ph_1: 0.5, ..base_params() };
        assert_eq!(build_rme(&basis, &p).unwrap().jumps().len(), 3);
        assert_eq!(build_rme(&basis, &base_params()).unwrap().jumps().len(), 2);
    }

    #[test]
    fn structural_blockade_gives_exactly_zero_g2() {
        let basis = ReducedBasis::new(6);
        let model = build_rme(&basis, &base_params()).unwrap();
        let rho = steady_state(&liouvillian(&model).unwrap(), 1e-9).unwrap().rho;
        assert!(mean_photon(&rho, 2).unwrap() > 1e-3);
        assert_eq!(g2_zero(&rho, 2).unwrap(), 0.0);
    }

    #[test]
    fn three_level_populations_reference_values() {
        // J=0: no population transfer to the undriven mode
        let (_, n2) = three_level_populations(0.0, 0.5, 0.3).unwrap();
        assert_eq!(n2, 0.0);
        // J=0, Omega=0.5: n1 = 4*0.25/(1+2) = 1/3
        let (n1, _) = three_level_populations(0.0, 0.5, 0.3).unwrap();
        assert!((n1 - 1.0 / 3.0).abs() < 1e-14);
        // optimal point reproduces 1 - I_opt
        let j_opt = optimal_hopping(0.01);
        let (_, n2) = three_level_populations(j_opt, 0.5, 0.01).unwrap();
        assert!((n2 - (1.0 - optimal_infidelity(0.01))).abs() < 1e-10);
        assert!((n2 - 0.7372).abs() < 1e-4);
    }

    #[test]
    fn numeric_null_space_confirms_printed_populations() {
        // guards the verbatim transcription of Q1/Q2 (including the kappa2
        // squared factor) against the independent Liouvillian null space
        for (j, omega, kappa2) in [
            (0.2, 0.5, 0.01),
            (0.05, 0.3, 0.4),
            (1.3, 0.8, 1.0),
            (0.0, 0.5, 0.2),
        ] {
            let s = three_level_steady_state(j, omega, kappa2).unwrap();
            let m = s.rho.matrix();
            assert!((m[(1, 1)].re - s.n1).abs() < 1e-10, "n1 at ({j},{omega},{kappa2})");
            assert!((m[(2, 2)].re - s.n2).abs() < 1e-10, "n2 at ({j},{omega},{kappa2})");
        }
    }

    #[test]
    fn minimal_reduced_basis_matches_three_level() {
        let basis = ReducedBasis::new(1);
        for (j, omega, kappa2) in [(0.2081, 0.5, 0.01), (0.1, 0.3, 0.5)] {
            let p = SystemParams { j, omega, kappa2, ..base_params() };
            let model = build_rme(&basis, &p).unwrap();
            let rho = steady_state(&liouvillian(&model).unwrap(), 1e-10).unwrap().rho;
            let (n1, n2) = three_level_populations(j, omega, kappa2).unwrap();
            let k = basis.driven_index(1);
            assert!((rho.matrix()[(k, k)].re - n1).abs() < 1e-10);
            assert!((mean_photon(&rho, 2).unwrap() - n2).abs() < 1e-10);
        }
    }

    #[test]
    fn minimal_basis_suffices_below_the_optimal_drive() {
        let p = SystemParams { j: optimal_hopping(0.01), ..base_params() };
        let small = rme_n2(&ReducedBasis::new(1), &p);
        let large = rme_n2(&ReducedBasis::default(), &p);
        assert!((small - large).abs() < 2e-3);

        // past the optimum the minimal basis degrades and brightness drops
        let mut gaps = Vec::new();
        let mut last_n2 = f64::INFINITY;
        for omega in [0.5, 1.0, 2.0] {
            let p = SystemParams { omega, ..p };
            let small = rme_n2(&ReducedBasis::new(1), &p);
            let large = rme_n2(&ReducedBasis::default(), &p);
            gaps.push((small - large).abs());
            assert!(large < last_n2);
            last_n2 = large;
        }
        assert!(gaps[2] > gaps[0]);
    }

    #[test]
    fn optimal_hopping_reference_and_asymptote() {
        assert!((optimal_hopping(0.01) - 0.2081).abs() < 1e-4);
        let (asym, _) = asymptotic_scalings(1e-6);
        assert!((optimal_hopping(1e-6) / asym - 1.0).abs() < 1e-4);
    }

    #[test]
    fn optimal_hopping_maximizes_brightness() {
        let j_opt = optimal_hopping(0.01);
        let (_, best) = three_level_populations(j_opt, 0.5, 0.01).unwrap();
        for i in 0..400 {
            let j = 1e-3 + i as f64 * 2e-3;
            let (_, n2) = three_level_populations(j, 0.5, 0.01).unwrap();
            assert!(n2 <= best + 1e-12);
        }
    }

    #[test]
    fn optimal_infidelity_reference_and_asymptote() {
        assert!((optimal_infidelity(0.01) - 0.2628).abs() < 1e-4);
        let eps = 1e-8;
        assert!((optimal_infidelity(eps) / (12.0 * eps).sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn asymptotic_ratio_approaches_one_monotonically() {
        // J_opt approaches its asymptote from above, I_opt from below; both
        // gaps shrink monotonically with epsilon
        let mut last_j_gap = f64::INFINITY;
        let mut last_i_gap = f64::INFINITY;
        for k in 0..14 {
            let eps = 0.01 * 0.25f64.powi(k);
            let (j_asym, i_asym) = asymptotic_scalings(eps);
            let j_gap = optimal_hopping(eps) / j_asym - 1.0;
            let i_gap = 1.0 - optimal_infidelity(eps) / i_asym;
            // non-strict: j_gap reaches rounding noise at the smallest eps
            assert!(j_gap >= 0.0 && j_gap <= last_j_gap);
            assert!(i_gap >= 0.0 && i_gap < last_i_gap);
            last_j_gap = j_gap;
            last_i_gap = i_gap;
        }
        assert!(last_j_gap < 1e-9);
        assert!(last_i_gap < 1e-3);
    }

    #[test]
    fn asymptotic_reference_values() {
        let (j_asym, i_asym) = asymptotic_scalings(1e-4);
        assert!((j_asym - 0.06580).abs() < 1e-5);
        assert!((i_asym - 0.03464).abs() < 1e-5);
    }

    #[test]
    fn gamma2_of_undriven_mode_is_inert() {
        let basis = ReducedBasis::new(8);
        let with = SystemParams { gamma2ph_2: 5.0, ..base_params() };
        assert!((rme_n2(&basis, &base_params()) - rme_n2(&basis, &with)).abs() < 1e-12);
    }

    #[test]
    fn brightness_optimum_matches_formulas() {
        let sbox = SearchBox { j: (0.02, 0.6), omega: (0.1, 1.2) };
        let opt = optimize_brightness(
            &base_params(),
            &ReducedBasis::default(),
            &sbox,
            BrightnessObjective::UndrivenPhoton,
        )
        .unwrap();
        // the three-level formulas are leading-order: the full reduced-model
        // optimum sits a few percent away with an almost identical value
        assert!((opt.j / optimal_hopping(0.01) - 1.0).abs() < 0.1);
        assert!((opt.omega / 0.5 - 1.0).abs() < 0.1);
        assert!((opt.value - (1.0 - optimal_infidelity(0.01))).abs() < 2e-3);
        assert!(opt.value <= 1.0 - optimal_infidelity(0.01) + 1e-9);
    }

    #[test]
    fn coherent_bound_without_hopping() {
        // J = 0, Gamma1 = 0: the driven mode is a coherent state and the
        // single-photon population peaks at 1/e for |alpha| = 1
        let sbox = SearchBox { j: (0.0, 0.0), omega: (0.1, 1.2) };
        let opt = optimize_brightness(
            &base_params(),
            &ReducedBasis::default(),
            &sbox,
            BrightnessObjective::DrivenSinglePhoton,
        )
        .unwrap();
        assert!((opt.omega - 0.5).abs() < 1e-3);
        assert!((opt.value - (-1.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn strong_two_photon_loss_lifts_the_bound_toward_half() {
        // with dominant two-photon loss the driven mode truncates to a qubit
        // and the single-photon population climbs monotonically toward 1/2
        let basis = ReducedBasis::default();
        let k = basis.driven_index(1);
        let mut last = 0.0;
        for omega in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let p = SystemParams {
                j: 0.0,
                omega,
                gamma2ph_1: 100.0,
                ..base_params()
            };
            let model = build_rme(&basis, &p).unwrap();
            let rho = steady_state(&liouvillian(&model).unwrap(), 1e-9).unwrap().rho;
            let p1 = rho.matrix()[(k, k)].re;
            assert!(p1 > last && p1 < 0.5);
            last = p1;
        }
        assert!(last > 0.49);
    }

    #[test]
    fn boundary_optimum_is_flagged() {
        // box deliberately excludes the Omega optimum at 0.5
        let sbox = SearchBox { j: (0.02, 0.6), omega: (0.01, 0.2) };
        let err = optimize_brightness(
            &base_params(),
            &ReducedBasis::new(6),
            &sbox,
            BrightnessObjective::UndrivenPhoton,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BoundaryOptimum(_, _)));
    }
}
