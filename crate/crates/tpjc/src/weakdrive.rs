//! Closed-form weak-driving analytics: the two- and three-body cooperativity
//! parameters, the resulting equal-time correlations of both modes, the
//! biquadratic approximation at resonance, and the antibunching detuning
//! window.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{SystemParams, KAPPA1};

/// Two-body (𝒞₂) and three-body (𝒞₃) cooperativity parameters.
///
/// At Δ = 0 both are real and positive for positive rates and couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CooperativityPair {
    pub c2: C64,
    pub c3: C64,
}

/// 𝒞₂ = 4J²/[(κ₁−2iΔ)(κ₂−2iΔ)], 𝒞₃ = 4g²/[(κ₁+κ₂−4iΔ)(γ−4iΔ)].
pub fn cooperativities(params: &SystemParams) -> Result<CooperativityPair> {
    params.validate()?;
    let delta = params.delta;
    let d2 = (C64::new(KAPPA1, -2.0 * delta)) * (C64::new(params.kappa2, -2.0 * delta));
    let d3 = (C64::new(KAPPA1 + params.kappa2, -4.0 * delta)) * (C64::new(params.gamma, -4.0 * delta));
    if d2 == C64::new(0.0, 0.0) {
        return Err(Error::DegenerateDenominator(
            "two-body parameter: (kappa1 - 2i delta)(kappa2 - 2i delta) = 0".into(),
        ));
    }
    if d3 == C64::new(0.0, 0.0) {
        return Err(Error::DegenerateDenominator(
            "three-body parameter: (kappa1 + kappa2 - 4i delta)(gamma - 4i delta) = 0".into(),
        ));
    }
    Ok(CooperativityPair {
        c2: C64::new(4.0 * params.j * params.j, 0.0) / d2,
        c3: C64::new(4.0 * params.g * params.g, 0.0) / d3,
    })
}

/// Weak-drive equal-time correlation of cavity mode `mode`:
///
/// g_k⁽²⁾(0) = |1 + (δ_{k,1}𝒞₂ − δ_{k,2}) 𝒞₃ / (1 + 𝒞₂ + 𝒞₃)|².
pub fn analytic_g2(params: &SystemParams, mode: usize) -> Result<f64> {
    let CooperativityPair { c2, c3 } = cooperativities(params)?;
    let denom = C64::new(1.0, 0.0) + c2 + c3;
    if denom == C64::new(0.0, 0.0) {
        return Err(Error::DegenerateDenominator("1 + C2 + C3 = 0".into()));
    }
    let weight = match mode {
        1 => c2,
        2 => C64::new(-1.0, 0.0),
        m => return Err(Error::InvalidMode(m)),
    };
    Ok((C64::new(1.0, 0.0) + weight * c3 / denom).norm_sqr())
}

/// Resonant biquadratic approximation g₂⁽²⁾(0) ≃ [(1+𝒞₂)/𝒞₃]², valid for
/// 𝒞₃ ≫ 1. Requires Δ = 0 and g > 0.
pub fn g2_biquadratic_approx(params: &SystemParams) -> Result<f64> {
    if params.delta != 0.0 {
        return Err(Error::Config(
            "biquadratic approximation requires delta = 0".into(),
        ));
    }
    if params.g == 0.0 {
        return Err(Error::DegenerateDenominator(
            "biquadratic approximation diverges at g = 0".into(),
        ));
    }
    let CooperativityPair { c2, c3 } = cooperativities(params)?;
    let r = (1.0 + c2.re) / c3.re;
    Ok(r * r)
}

/// Antibunching detuning window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AntibunchingWindow {
    /// Width Δ₊ − Δ₋ of the contiguous interval around Δ = 0 where
    /// g₂⁽²⁾(0) < 1/ζ; zero when the center is not antibunched below 1/ζ.
    pub width: f64,
    /// Set when g₂⁽²⁾(0) at Δ = 0 is already ≥ 1/ζ (no window).
    pub empty: bool,
}

/// Half-width search range in units of g.
const WINDOW_SEARCH_RANGE: f64 = 5.0;
/// Scan resolution used to bracket the threshold crossing before bisection.
const WINDOW_SCAN_STEPS: usize = 4096;
/// Bisection tolerance in units of g.
const WINDOW_BISECTION_TOL: f64 = 1e-8;

/// Width of the contiguous detuning interval around Δ = 0 on which the
/// closed-form mode-2 correlation stays below the threshold 1/ζ.
///
/// The crossing on each side is bracketed by a linear scan over |Δ| ≤ 5g and
/// refined by bisection to 10⁻⁸·g. Requires ζ > 1.
pub fn antibunching_window(params: &SystemParams, zeta: f64) -> Result<AntibunchingWindow> {
    if !(zeta > 1.0) {
        return Err(Error::Config(format!(
            "antibunching threshold requires zeta > 1, got {zeta}"
        )));
    }
    let g2_at = |delta: f64| -> Result<f64> {
        let p = SystemParams { delta, ..*params };
        analytic_g2(&p, 2)
    };
    let threshold = 1.0 / zeta;
    if g2_at(0.0)? >= threshold {
        return Ok(AntibunchingWindow { width: 0.0, empty: true });
    }

    let g = params.g.abs();
    let crossing = |sign: f64| -> Result<f64> {
        // bracket the first threshold crossing away from the center
        let mut lo = 0.0f64;
        let mut hi = None;
        for step in 1..=WINDOW_SCAN_STEPS {
            let delta = sign * WINDOW_SEARCH_RANGE * g * step as f64 / WINDOW_SCAN_STEPS as f64;
            if g2_at(delta)? >= threshold {
                hi = Some(delta.abs());
                break;
            }
            lo = delta.abs();
        }
        let mut hi = hi.ok_or(Error::BisectionFailed)?;
        while hi - lo > WINDOW_BISECTION_TOL * g {
            let mid = 0.5 * (lo + hi);
            if g2_at(sign * mid)? >= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let plus = crossing(1.0)?;
    let minus = crossing(-1.0)?;
    Ok(AntibunchingWindow { width: plus + minus, empty: false })
}

/// Leading asymptote δΔ ≃ g (1 + √ζ)^{−1/2} of the window width in the
/// regime J/g ≪ 1 with Δ/g of order one.
pub fn window_asymptote(g: f64, zeta: f64) -> f64 {
    g / (1.0 + zeta.sqrt()).sqrt()
}
