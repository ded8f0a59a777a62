//! Closed-form expressions for the heralded hybrid schemes: Wigner origin
//! values and entanglement negativities under loss, balancing optima,
//! fidelities against cat-state targets, and the phase-noise decay law.
//! These are the oracle layer the numerical engine is verified against.

use crate::error::{FockError, Result};

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if !v.is_finite() || v < lo || v > hi {
        return Err(FockError::InvalidParameter(format!(
            "{name} must lie in [{lo},{hi}], got {v}"
        )));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(FockError::InvalidParameter(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

/// Squeezing shorthand `c = 1/(sqrt(2) tanh zeta)`; decreases from infinity
/// (no squeezing) to `1/sqrt(2)` (infinite squeezing).
pub fn c_of_zeta(zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(FockError::InvalidParameter(format!(
            "c is defined for positive squeezing, got zeta={zeta}"
        )));
    }
    Ok(1.0 / (std::f64::consts::SQRT_2 * zeta.tanh()))
}

/// Origin Wigner value of the CV vacuum-block of the lossy hybrid qubit
/// state (simplified model):
/// `[(1-2 eta_B) + (1-eta_A) mu^2] / [1 + (1-eta_A) mu^2]`.
pub fn w_qubit_lossy(eta_a: f64, eta_b: f64, mu: f64) -> Result<f64> {
    check_range("eta_A", eta_a, 0.0, 1.0)?;
    check_range("eta_B", eta_b, 0.0, 1.0)?;
    check_nonneg("mu", mu)?;
    let loss_a = (1.0 - eta_a) * mu * mu;
    Ok(((1.0 - 2.0 * eta_b) + loss_a) / (1.0 + loss_a))
}

/// [`w_qubit_lossy`] at the loss-balanced weight `mu^2 = eta_B/eta_A`:
/// `(eta_A + eta_B - 3 eta_A eta_B) / (eta_A + eta_B - eta_A eta_B)`,
/// nonnegative exactly when `1/eta_A + 1/eta_B >= 3`.
pub fn w_qubit_lossy_balanced(eta_a: f64, eta_b: f64) -> Result<f64> {
    check_range("eta_A", eta_a, 0.0, 1.0)?;
    check_range("eta_B", eta_b, 0.0, 1.0)?;
    let denom = eta_a + eta_b - eta_a * eta_b;
    if denom == 0.0 {
        return Err(FockError::InvalidParameter(
            "balanced Wigner value undefined at eta_A = eta_B = 0".into(),
        ));
    }
    Ok((eta_a + eta_b - 3.0 * eta_a * eta_b) / denom)
}

/// Entanglement negativity of the hybrid qubit state under symmetric loss
/// `eta` on both modes (simplified model):
/// `[sqrt(4 eta^2 mu^2 + (1-eta)^2 (1+mu^2)^2) - (1-eta)(1+mu^2)] / [2(1+mu^2)]`.
pub fn n_qubit_lossy(eta: f64, mu: f64) -> Result<f64> {
    check_range("eta", eta, 0.0, 1.0)?;
    check_nonneg("mu", mu)?;
    let m2 = 1.0 + mu * mu;
    let root = (4.0 * eta * eta * mu * mu + (1.0 - eta).powi(2) * m2 * m2).sqrt();
    Ok((root - (1.0 - eta) * m2) / (2.0 * m2))
}

/// Lossless entanglement negativity of the enhanced scheme:
/// `mu sqrt(2 + 2c^2) / (2 + 2c^2 + mu^2)`, maximal (= 0.5) at
/// `mu^2 = 2(1 + c^2)`.
pub fn n_enhanced_lossless(mu: f64, c: f64) -> Result<f64> {
    check_nonneg("mu", mu)?;
    check_c(c)?;
    let g = 2.0 + 2.0 * c * c;
    Ok(mu * g.sqrt() / (g + mu * mu))
}

fn check_c(c: f64) -> Result<()> {
    if !c.is_finite() || c < std::f64::consts::FRAC_1_SQRT_2 - 1e-12 {
        return Err(FockError::InvalidParameter(format!(
            "c must be finite and >= 1/sqrt(2), got {c}"
        )));
    }
    Ok(())
}

/// Lossless entanglement negativity of the qutrit scheme as a function of
/// the weight `mu` and squeezing shorthand `c`.
pub fn n_qutrit_lossless(mu: f64, c: f64) -> Result<f64> {
    check_nonneg("mu", mu)?;
    check_c(c)?;
    let c2 = c * c;
    let m4 = mu.powi(4);
    let disc = c2 * c2 + 2.0 * c2 * (m4 + 1.0) + (m4 - 1.0).powi(2);
    let root = disc.sqrt();
    let base = 1.0 + c2 + m4;
    // base >= root always (difference is 4 mu^4 under the squares).
    let lo = (base - root).max(0.0).sqrt();
    let hi = (base + root).sqrt();
    let denom = c2 + (mu * mu + 1.0).powi(2);
    Ok((mu * mu + mu * lo + mu * hi) / denom)
}

/// Maximum of [`n_qutrit_lossless`] over `mu`, reached at `mu^4 = 1 + c^2`:
/// `sqrt(1+c^2) (sqrt(2 sqrt(1+c^2) - 2c) + sqrt(2 sqrt(1+c^2) + 2c) + 1)
///  / [2 (1 + c^2 + sqrt(1+c^2))]`.
pub fn n_qutrit_max(c: f64) -> Result<f64> {
    check_c(c)?;
    let s = (1.0 + c * c).sqrt();
    let lo = (2.0 * s - 2.0 * c).max(0.0).sqrt();
    let hi = (2.0 * s + 2.0 * c).sqrt();
    Ok(s * (lo + hi + 1.0) / (2.0 * (1.0 + c * c + s)))
}

/// The five fidelities between heralded states and ideal cat-state targets,
/// as functions of the cat size `alpha2 = |alpha|^2` and the squeezing gain
/// `lam = tanh zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelitySet {
    /// Squeezed vacuum vs even cat.
    pub f0: f64,
    /// Single-subtracted squeezed vacuum vs odd cat.
    pub f1: f64,
    /// Two-photon-subtracted squeezed vacuum vs even cat.
    pub f2: f64,
    /// Hybrid state built on (0PS, 1PS) vs the cat-based target.
    pub fn0: f64,
    /// Hybrid state built on (1PS, 2PS) vs the cat-based target.
    pub fn1: f64,
}

/// Closed-form fidelities:
/// `F0 = sqrt(1-lam^2) e^{lam a2} / cosh a2`,
/// `F1 = (1-lam^2)^{3/2} a2 e^{lam a2} / sinh a2`,
/// `F2 = (1-lam^2)^{5/2} (1+lam a2)^2 e^{lam a2} / [(1+2 lam^2) cosh a2]`,
/// `Fn0 = (sqrt(F0)+sqrt(F1))^2/4`, `Fn1 = (sqrt(F2)+sqrt(F1))^2/4`.
pub fn fidelity_formulas(alpha2: f64, lam: f64) -> Result<FidelitySet> {
    if !(0.0..1.0).contains(&lam) {
        return Err(FockError::InvalidParameter(format!(
            "lam must lie in [0,1), got {lam}"
        )));
    }
    if !(alpha2 > 0.0) || !alpha2.is_finite() {
        return Err(FockError::InvalidParameter(format!(
            "alpha2 must be positive (F1 is singular at 0), got {alpha2}"
        )));
    }
    let one_m = 1.0 - lam * lam;
    let boost = (lam * alpha2).exp();
    let f0 = one_m.sqrt() * boost / alpha2.cosh();
    let f1 = one_m.powf(1.5) * alpha2 * boost / alpha2.sinh();
    let f2 = one_m.powf(2.5) * (1.0 + lam * alpha2).powi(2) * boost
        / ((1.0 + 2.0 * lam * lam) * alpha2.cosh());
    let fn0 = (f0.sqrt() + f1.sqrt()).powi(2) / 4.0;
    let fn1 = (f2.sqrt() + f1.sqrt()).powi(2) / 4.0;
    Ok(FidelitySet { f0, f1, f2, fn0, fn1 })
}

/// Negativity of the phase-averaged hybrid qubit state: `(1/2) e^{-sigma^2/2}`.
pub fn phase_decay(sigma: f64) -> Result<f64> {
    check_nonneg("sigma", sigma)?;
    Ok(0.5 * (-sigma * sigma / 2.0).exp())
}

/// Origin Wigner value of the single-photon block of the enhanced scheme:
/// `1 - 2 eta_B`, independent of the other parameters.
pub fn w_enhanced(eta_b: f64) -> Result<f64> {
    check_range("eta_B", eta_b, 0.0, 1.0)?;
    Ok(1.0 - 2.0 * eta_b)
}
