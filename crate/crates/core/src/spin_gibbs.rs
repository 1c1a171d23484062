//! Spin-1/2 Gibbs state `exp(-βω S₀)/Z` and its Hadamard transform.
//!
//! Basis ordering is `(|+½⟩, |-½⟩)`, with `S₀ = diag(½, -½)`.

use crate::hilbert::{c, op_norm, re, ComplexMatrix, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SpinGibbs {
    pub beta_omega: f64,
    pub rho: ComplexMatrix,
    pub partition: f64,
}

pub fn spin_operator() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&StateVector::from_vec(vec![re(0.5), re(-0.5)]))
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_row_slice(2, 2, &[re(h), re(h), re(h), re(-h)])
}

/// Weight `e^{-βω/2}/Z` on `|+½⟩` and `e^{+βω/2}/Z` on `|-½⟩`.
pub fn spin_gibbs(beta_omega: f64) -> SpinGibbs {
    let half = 0.5 * beta_omega;
    // probabilities via the logistic form stay finite for large |βω|
    let p_up = 0.5 * (1.0 - half.tanh());
    let p_down = 0.5 * (1.0 + half.tanh());
    SpinGibbs {
        beta_omega,
        rho: ComplexMatrix::from_diagonal(&StateVector::from_vec(vec![re(p_up), re(p_down)])),
        partition: 2.0 * half.cosh(),
    }
}

/// `H ρ H†`.
pub fn hadamard_transform(s: &SpinGibbs) -> ComplexMatrix {
    let h = hadamard();
    &h * &s.rho * h.adjoint()
}

/// `(1/2Z) Σ_s e^{-sβω/2} (|½⟩ + s|-½⟩)(⟨½| + s⟨-½|)`.
///
/// The weight `e^{-sβω/2}` is the one fixed by direct conjugation; pairing
/// `e^{+sβω/2}` with the `s`-signed superposition instead yields the transform
/// of the state at `-βω`.
pub fn hadamard_sum_form(s: &SpinGibbs) -> ComplexMatrix {
    hadamard_sum_with_sign(s.beta_omega, -1.0)
}

/// The two-term sum with weight `e^{sign·sβω/2}`; `sign = -1` is the correct pairing.
pub fn hadamard_sum_with_sign(beta_omega: f64, sign: f64) -> ComplexMatrix {
    let half = 0.5 * beta_omega;
    let mut out = ComplexMatrix::zeros(2, 2);
    for s in [1.0, -1.0] {
        // e^{sign·s·βω/2} / (2Z) with Z = 2cosh(βω/2)
        let w = 0.5 * (0.5 * (1.0 + sign * s * half.tanh()));
        let ket = StateVector::from_vec(vec![c(1.0, 0.0), c(s, 0.0)]);
        out += &ket * ket.adjoint() * re(w);
    }
    out
}

/// `‖H(HρH†)H† - ρ‖` in operator norm.
pub fn verify_gibbs_reversibility(s: &SpinGibbs) -> f64 {
    let h = hadamard();
    let once = hadamard_transform(s);
    let twice = &h * once * h.adjoint();
    op_norm(&(twice - &s.rho))
}
