//! Photon-number statistics and entropy.

use serde::Serialize;

use crate::error::{Result, TfdError};
use crate::gates::{conjugate_operator, gate_vacuum, gated_qubit_state, rho_psi_gated, GateOp};
use crate::hilbert::{
    expectation_nontilde, hermitian_eigenvalues, is_hermitian, ComplexMatrix, FockOperators,
    QuantumState,
};
use crate::thermo::{thermal_density, ThermalParams, ThermofieldQubit};

/// Means at or below this make `Q` undefined.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// `|Q|` below this is reported as Poissonian.
pub const POISSONIAN_TOLERANCE: f64 = 1e-9;

/// Gated-vacuum `Q` from the state and from `ρ_G` must agree to this.
pub const GATED_VACUUM_TOLERANCE: f64 = 1e-10;

/// Gated-qubit `Q` from `ρ_ψ^(G)` and from the state must agree to this.
pub const GATED_QUBIT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SubPoissonian,
    Poissonian,
    SuperPoissonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MandelReport {
    pub mean: f64,
    /// `⟨n² - n⟩`.
    pub second_factorial: f64,
    pub q: f64,
    pub regime: Regime,
}

impl MandelReport {
    pub fn from_moments(mean: f64, second_factorial: f64) -> Result<Self> {
        if mean <= MEAN_TOLERANCE {
            return Err(TfdError::UndefinedMandel { mean, second_factorial });
        }
        let q = (second_factorial - mean * mean) / mean;
        let regime = if q.abs() < POISSONIAN_TOLERANCE {
            Regime::Poissonian
        } else if q < 0.0 {
            Regime::SubPoissonian
        } else {
            Regime::SuperPoissonian
        };
        Ok(MandelReport { mean, second_factorial, q, regime })
    }
}

/// `Q = (⟨n² - n⟩ - ⟨n⟩²)/⟨n⟩` in a ket or density matrix, with `number` the
/// number operator acting on the state's space.
pub fn mandel_q<S: QuantumState + ?Sized>(state: &S, number: &ComplexMatrix) -> Result<MandelReport> {
    let n2 = number * number;
    let mean = state.expect(number)?.re;
    let second = state.expect(&n2)?.re - mean;
    MandelReport::from_moments(mean, second)
}

/// Moments of `n ⊗ I` in a doubled-space ket.
pub fn mandel_q_nontilde(psi: &crate::StateVector, fock: &FockOperators) -> Result<MandelReport> {
    let n2 = &fock.number * &fock.number;
    let mean = expectation_nontilde(psi, &fock.number)?.re;
    let second = expectation_nontilde(psi, &n2)?.re - mean;
    MandelReport::from_moments(mean, second)
}

/// `Q_G` from `|0_G(β)⟩`, cross-checked against `Q` of `U ρ U†`.
pub fn mandel_q_gated_vacuum(g: &GateOp, params: &ThermalParams, cutoff: usize) -> Result<MandelReport> {
    let fock = FockOperators::new(cutoff);
    let from_state = mandel_q_nontilde(&gate_vacuum(g, params, cutoff)?, &fock)?;
    let rho_g = conjugate_operator(g, &thermal_density(params, cutoff)?)?;
    let from_density = mandel_q(&rho_g, &fock.number)?;
    let deviation = (from_state.q - from_density.q).abs();
    if deviation > GATED_VACUUM_TOLERANCE {
        return Err(TfdError::Consistency {
            what: "gated vacuum Q disagrees with density Q".into(),
            deviation,
            tolerance: GATED_VACUUM_TOLERANCE,
        });
    }
    Ok(from_state)
}

/// `Q_G^ψ` evaluated from the gated density and from the gated state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GatedQubitMandel {
    pub via_density: MandelReport,
    pub via_state: MandelReport,
}

impl GatedQubitMandel {
    pub fn deviation(&self) -> f64 {
        (self.via_density.q - self.via_state.q).abs()
    }
}

pub fn mandel_q_gated_qubit_paths(g: &GateOp, q: &ThermofieldQubit) -> Result<GatedQubitMandel> {
    let fock = FockOperators::new(q.cutoff);
    let rho = rho_psi_gated(g, q)?;
    let via_density = mandel_q(&rho, &fock.number)?;
    let via_state = mandel_q_nontilde(&gated_qubit_state(g, q)?, &fock)?;
    Ok(GatedQubitMandel { via_density, via_state })
}

pub fn mandel_q_gated_qubit(g: &GateOp, q: &ThermofieldQubit) -> Result<MandelReport> {
    let paths = mandel_q_gated_qubit_paths(g, q)?;
    let deviation = paths.deviation();
    if deviation > GATED_QUBIT_TOLERANCE {
        return Err(TfdError::Consistency {
            what: "gated qubit Q differs between density and state".into(),
            deviation,
            tolerance: GATED_QUBIT_TOLERANCE,
        });
    }
    Ok(paths.via_density)
}

/// `-Σ λ ln λ` over eigenvalues above 1e-15.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    if !is_hermitian(rho, 1e-10) {
        return Err(TfdError::InvalidDensity("matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(TfdError::InvalidDensity(format!("trace {tr} differs from 1")));
    }
    let eig = hermitian_eigenvalues(rho);
    if let Some(&min) = eig.first() {
        if min < -1e-10 {
            return Err(TfdError::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
    }
    Ok(eig.iter().filter(|&&l| l > 1e-15).map(|&l| -l * l.ln()).sum())
}

/// Truncated coherent state `e^{-|α|²/2} Σ αⁿ/√n! |n⟩`, renormalized.
pub fn coherent_state(alpha: crate::C64, cutoff: usize) -> Result<crate::StateVector> {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut a = crate::hilbert::re((-0.5 * alpha.norm_sqr()).exp());
    for n in 0..=cutoff {
        if n > 0 {
            a *= alpha / (n as f64).sqrt();
        }
        amps.push(a);
    }
    crate::hilbert::normalized(&crate::StateVector::from_vec(amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_ket, identity, projector, re, trace_of_product, StateVector, ONE, ZERO};
    use crate::random::{random_amplitudes, seeded_rng};
    use crate::thermo::rho_psi;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn thermal_q_equals_occupation() {
        let p = ThermalParams::from_nbar(1.0, 1.0).unwrap();
        let n = p.cutoff_for_tail(1e-20);
        let fock = FockOperators::new(n);
        let r = mandel_q(&thermal_density(&p, n).unwrap(), &fock.number).unwrap();
        assert_relative_eq!(r.q, 1.0, epsilon = 1e-9);
        // geometric moments: <n²> = 2n̄² + n̄
        assert_relative_eq!(r.second_factorial, 2.0, epsilon = 1e-9);
        assert_eq!(r.regime, Regime::SuperPoissonian);
    }

    #[test]
    fn fock_state_is_sub_poissonian() {
        let fock = FockOperators::new(5);
        let r = mandel_q(&basis_ket(6, 1), &fock.number).unwrap();
        assert_eq!(r.q, -1.0);
        assert_eq!(r.regime, Regime::SubPoissonian);
    }

    #[test]
    fn coherent_state_is_poissonian() {
        // Poisson weights with mean 2: amplitudes e^{-1} √2ⁿ/√n!
        let n_max = 60;
        let mut amps = Vec::with_capacity(n_max + 1);
        let mut a = (-1.0f64).exp();
        for n in 0..=n_max {
            if n > 0 {
                a *= (2.0 / n as f64).sqrt();
            }
            amps.push(re(a));
        }
        let psi = StateVector::from_vec(amps);
        let fock = FockOperators::new(n_max);
        let r = mandel_q(&psi, &fock.number).unwrap();
        assert!(r.q.abs() < 1e-8, "{}", r.q);
        assert_eq!(r.regime, Regime::Poissonian);
    }

    #[test]
    fn vacuum_has_undefined_q() {
        let fock = FockOperators::new(4);
        let err = mandel_q(&basis_ket(5, 0), &fock.number).unwrap_err();
        assert!(matches!(err, TfdError::UndefinedMandel { mean, .. } if mean == 0.0));
    }

    #[test]
    fn gated_vacuum_cases() {
        let n = 30;
        let p = ThermalParams::from_nbar(0.5, 1.0).unwrap();
        let thermal = mandel_q(&thermal_density(&p, n).unwrap(), &FockOperators::new(n).number).unwrap();
        let id = mandel_q_gated_vacuum(&GateOp::identity(n), &p, n).unwrap();
        assert_relative_eq!(id.q, thermal.q, epsilon = 1e-12);
        let ph = mandel_q_gated_vacuum(&GateOp::phase(n, 0.9), &p, n).unwrap();
        assert_relative_eq!(ph.q, thermal.q, epsilon = 1e-12);

        let mut rng = seeded_rng(20);
        let g = GateOp::random(n, &mut rng);
        let r = mandel_q_gated_vacuum(&g, &p, n).unwrap();
        let rho_g = conjugate_operator(&g, &thermal_density(&p, n).unwrap()).unwrap();
        let direct = mandel_q(&rho_g, &FockOperators::new(n).number).unwrap();
        assert!((r.q - direct.q).abs() < 1e-10);
        assert!((r.q - thermal.q).abs() > 1e-3);
    }

    #[test]
    fn gated_qubit_cases() {
        let n = 30;
        let p = ThermalParams::from_nbar(0.5, 1.0).unwrap();
        let fock = FockOperators::new(n);
        let thermal = mandel_q(&thermal_density(&p, n).unwrap(), &fock.number).unwrap();
        let id = GateOp::identity(n);

        let vac = ThermofieldQubit::new(ONE, ZERO, p, n).unwrap();
        let r = mandel_q_gated_qubit(&id, &vac).unwrap();
        assert_relative_eq!(r.q, thermal.q, epsilon = 1e-12);

        // pure excitation: photon-added thermal distribution p'(k) = k p(k-1)/(n̄+1)
        let exc = ThermofieldQubit::new(ZERO, ONE, p, n).unwrap();
        let r = mandel_q_gated_qubit(&id, &exc).unwrap();
        let big = 400;
        let ratio = p.nbar / (p.nbar + 1.0);
        let (mut m1, mut m2) = (0.0, 0.0);
        for k in 1..big {
            let w = k as f64 * (1.0 - ratio) * ratio.powi(k - 1) / (p.nbar + 1.0);
            m1 += k as f64 * w;
            m2 += (k * k) as f64 * w;
        }
        let oracle = (m2 - m1 - m1 * m1) / m1;
        assert_relative_eq!(r.q, oracle, epsilon = 1e-9);

        let mut rng = seeded_rng(21);
        for _ in 0..5 {
            let (a0, a1) = random_amplitudes(&mut rng);
            let q = ThermofieldQubit::new(a0, a1, p, n).unwrap();
            let g = GateOp::random(n, &mut rng);
            let paths = mandel_q_gated_qubit_paths(&g, &q).unwrap();
            assert!(paths.deviation() < 1e-8);
        }
    }

    #[test]
    fn entropy_cases() {
        let mut rng = seeded_rng(22);
        let psi = crate::random::random_state(4, &mut rng);
        assert!(von_neumann_entropy(&projector(&psi)).unwrap().abs() < 1e-12);
        let mixed = identity(2) * re(0.5);
        assert_relative_eq!(von_neumann_entropy(&mixed).unwrap(), 2f64.ln(), epsilon = 1e-15);

        let p = ThermalParams::from_nbar(1.0, 1.0).unwrap();
        let n = p.cutoff_for_tail(1e-18);
        let s = von_neumann_entropy(&thermal_density(&p, n).unwrap()).unwrap();
        assert_relative_eq!(s, 2.0 * 2f64.ln(), epsilon = 1e-12);

        let mut bad = identity(2) * re(0.5);
        bad[(0, 0)] = re(1.5);
        bad[(1, 1)] = re(-0.5);
        assert!(matches!(von_neumann_entropy(&bad), Err(TfdError::InvalidDensity(_))));
    }

    #[test]
    fn thermal_state_maximizes_entropy_at_fixed_mean() {
        let n = 20;
        let p = ThermalParams::from_nbar(0.7, 1.0).unwrap();
        let w: Vec<f64> = crate::thermo::thermal_weights(&p, n);
        let reference = von_neumann_entropy(&thermal_density(&p, n).unwrap()).unwrap();
        let mut rng = seeded_rng(23);
        let mut tested = 0;
        while tested < 100 {
            // perturbation orthogonal to both normalization and mean: δ on levels i<j<k
            let mut idx: Vec<usize> = (0..3).map(|_| rng.random_range(0..=n)).collect();
            idx.sort_unstable();
            idx.dedup();
            if idx.len() < 3 {
                continue;
            }
            let (i, j, k) = (idx[0] as f64, idx[1] as f64, idx[2] as f64);
            // weights (k - j, -(k - i), j - i) keep Σδ = 0 and Σ nδ = 0
            let base = [k - j, -(k - i), j - i];
            let eps: f64 = rng.random_range(-1.0..1.0) * 1e-3;
            let mut pert = w.clone();
            for (slot, b) in idx.iter().zip(base) {
                pert[*slot] += eps * b;
            }
            if pert.iter().any(|&x| x < 0.0) {
                continue;
            }
            let rho = ComplexMatrix::from_diagonal(&StateVector::from_iterator(n + 1, pert.iter().map(|&x| re(x))));
            let fock = FockOperators::new(n);
            let mean = trace_of_product(&rho, &fock.number).re;
            assert!((mean - trace_of_product(&thermal_density(&p, n).unwrap(), &fock.number).re).abs() < 1e-12);
            assert!(von_neumann_entropy(&rho).unwrap() <= reference + 1e-9);
            tested += 1;
        }
    }

    #[test]
    fn gated_spectrum_is_gate_independent() {
        let n = 16;
        let p = ThermalParams::from_nbar(0.8, 1.0).unwrap();
        let mut rng = seeded_rng(24);
        let (a0, a1) = random_amplitudes(&mut rng);
        let q = ThermofieldQubit::new(a0, a1, p, n).unwrap();
        let base = hermitian_eigenvalues(&rho_psi(&q).unwrap());
        let s0 = von_neumann_entropy(&rho_psi(&q).unwrap()).unwrap();
        for _ in 0..3 {
            let g = GateOp::random(n, &mut rng);
            let rg = rho_psi_gated(&g, &q).unwrap();
            let ev = hermitian_eigenvalues(&rg);
            for (a, b) in ev.iter().zip(&base) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!((von_neumann_entropy(&rg).unwrap() - s0).abs() < 1e-10);
        }
    }
}
