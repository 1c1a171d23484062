//! Doubling and cloning maps, temperature maps between thermal states, and
//! broadcasting checks on bipartite densities.
//!
//! Partial traces follow the trace-out convention: `Tr_A` removes the first
//! factor of `H_A ⊗ H_B` and leaves the state of `B`.

use serde::Serialize;

use crate::error::{Result, TfdError};
use crate::hilbert::{
    basis_ket, hermitian_eigenvalues, is_hermitian, op_norm, pair_ket, partial_trace, projector,
    re, tensor_product, tensor_product_with_limit, ComplexMatrix, StateVector, C64,
};
use crate::thermo::{thermal_density, ThermalParams};

/// Deviations below this count as a successful broadcast.
pub const BROADCAST_TOLERANCE: f64 = 1e-10;

/// Allowed deviation of an input from exact geometric thermal weights.
pub const THERMAL_INPUT_TOLERANCE: f64 = 1e-8;

/// Largest `ψ ⊗ ψ` dimension the cloning maps will build.
pub const CLONE_MAX_DIM: usize = 1 << 22;

/// `|n⟩ ↦ |n, ñ⟩` by Fock index.
pub fn doubling_map_index(n: usize, cutoff: usize) -> Result<StateVector> {
    if n > cutoff {
        return Err(TfdError::Domain(format!("Fock index {n} above cutoff {cutoff}")));
    }
    Ok(pair_ket(cutoff + 1, n, n))
}

/// Doubling of a Fock basis ket. Superpositions are rejected: the map has no
/// linear extension to them.
pub fn doubling_map(ket: &StateVector) -> Result<StateVector> {
    let support: Vec<(usize, C64)> = ket
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 1e-12)
        .map(|(i, a)| (i, *a))
        .collect();
    match support.as_slice() {
        [(n, a)] if (*a - re(1.0)).norm() <= 1e-12 => doubling_map_index(*n, ket.len() - 1),
        _ => Err(TfdError::Unsupported(
            "doubling is defined on Fock basis kets only; superpositions cannot be doubled linearly"
                .into(),
        )),
    }
}

/// `ψ ⊗ ψ`.
pub fn clone_map(psi: &StateVector) -> Result<StateVector> {
    let dev = (psi.norm() - 1.0).abs();
    if dev > 1e-8 {
        return Err(TfdError::Contract(format!("clone input has norm deviation {dev:e}")));
    }
    tensor_product_with_limit(psi, psi, CLONE_MAX_DIM)
}

/// `‖C(Σ a_j e_j) - Σ a_j C(e_j)‖` for orthonormal `e_0, e_1`.
pub fn cloning_linearity_gap(a0: C64, a1: C64, basis: [&StateVector; 2]) -> Result<f64> {
    let n2 = a0.norm_sqr() + a1.norm_sqr();
    if (n2 - 1.0).abs() > 1e-10 {
        return Err(TfdError::Contract(format!("amplitudes have |a0|²+|a1|² = {n2}")));
    }
    let [e0, e1] = basis;
    let gram = [e0.dotc(e0), e0.dotc(e1), e1.dotc(e1)];
    if (gram[0] - re(1.0)).norm() > 1e-10 || gram[1].norm() > 1e-10 || (gram[2] - re(1.0)).norm() > 1e-10 {
        return Err(TfdError::Contract("basis kets are not orthonormal".into()));
    }
    let psi = e0 * a0 + e1 * a1;
    let cloned = tensor_product_with_limit(&psi, &psi, CLONE_MAX_DIM)?;
    let linear = tensor_product_with_limit(e0, e0, CLONE_MAX_DIM)? * a0
        + tensor_product_with_limit(e1, e1, CLONE_MAX_DIM)? * a1;
    Ok((cloned - linear).norm())
}

/// Occupation ratio `t² = n̄/(n̄+1)` of a thermal density, or a domain error
/// when the input is not thermal.
pub fn thermal_ratio(rho: &ComplexMatrix) -> Result<f64> {
    if !rho.is_square() || rho.nrows() < 2 {
        return Err(TfdError::Shape("thermal input must be a square matrix of dim >= 2".into()));
    }
    let d = rho.nrows();
    for i in 0..d {
        for j in 0..d {
            if i != j && rho[(i, j)].norm() > THERMAL_INPUT_TOLERANCE {
                return Err(TfdError::Domain("input is not diagonal in the Fock basis".into()));
            }
        }
    }
    let p: Vec<f64> = (0..d).map(|i| rho[(i, i)].re).collect();
    if p[0] <= 0.0 {
        return Err(TfdError::Domain("input has no vacuum weight".into()));
    }
    let ratio = p[1] / p[0];
    if !(0.0..1.0).contains(&ratio) {
        return Err(TfdError::Domain(format!("occupation ratio {ratio} is not thermal")));
    }
    let total: f64 = (0..d).map(|n| ratio.powi(n as i32)).sum();
    for (n, pn) in p.iter().enumerate() {
        let expected = ratio.powi(n as i32) / total;
        if (pn - expected).abs() > THERMAL_INPUT_TOLERANCE {
            return Err(TfdError::Domain(format!(
                "level {n} has weight {pn}, geometric weight is {expected}"
            )));
        }
    }
    Ok(ratio)
}

/// Re-prepare a thermal density at the target temperature.
///
/// Only thermal inputs are accepted; the map is a swap of the heat bath, not
/// a channel on arbitrary states.
pub fn temperature_map(rho_beta: &ComplexMatrix, target: &ThermalParams, cutoff: usize) -> Result<ComplexMatrix> {
    if rho_beta.nrows() != cutoff + 1 {
        return Err(TfdError::Shape(format!(
            "input dimension {} does not match cutoff {cutoff}",
            rho_beta.nrows()
        )));
    }
    thermal_ratio(rho_beta)?;
    thermal_density(target, cutoff)
}

#[derive(Debug, Clone, Serialize)]
pub struct BroadcastReport {
    #[serde(skip)]
    pub input_rho: ComplexMatrix,
    #[serde(skip)]
    pub joint_state: ComplexMatrix,
    /// `Tr_A(joint)`, the state left on `B`.
    #[serde(skip)]
    pub trace_a: ComplexMatrix,
    /// `Tr_B(joint)`, the state left on `A`.
    #[serde(skip)]
    pub trace_b: ComplexMatrix,
    pub is_broadcast: bool,
    /// `(‖Tr_A(joint) - ρ‖, ‖Tr_B(joint) - ρ‖)` in operator norm.
    pub deviations: (f64, f64),
}

fn validate_density(rho: &ComplexMatrix, what: &str) -> Result<()> {
    if !is_hermitian(rho, 1e-10) {
        return Err(TfdError::InvalidDensity(format!("{what} is not Hermitian")));
    }
    let tr = rho.trace();
    if (tr - re(1.0)).norm() > 1e-10 {
        return Err(TfdError::InvalidDensity(format!("{what} has trace {tr}")));
    }
    if let Some(&min) = hermitian_eigenvalues(rho).first() {
        if min < -1e-10 {
            return Err(TfdError::InvalidDensity(format!("{what} has eigenvalue {min:e}")));
        }
    }
    Ok(())
}

/// Does `joint` on `H_A ⊗ H_B` (both of the dimension of `rho_ref`) broadcast `rho_ref`?
pub fn broadcast_check(joint: &ComplexMatrix, rho_ref: &ComplexMatrix) -> Result<BroadcastReport> {
    let d = rho_ref.nrows();
    if joint.nrows() != d * d {
        return Err(TfdError::Shape(format!(
            "joint dimension {} is not {d}²",
            joint.nrows()
        )));
    }
    validate_density(joint, "joint state")?;
    validate_density(rho_ref, "reference state")?;
    let trace_a = partial_trace(joint, &[d, d], 1)?;
    let trace_b = partial_trace(joint, &[d, d], 0)?;
    let deviations = (op_norm(&(&trace_a - rho_ref)), op_norm(&(&trace_b - rho_ref)));
    Ok(BroadcastReport {
        input_rho: rho_ref.clone(),
        joint_state: joint.clone(),
        trace_a,
        trace_b,
        is_broadcast: deviations.0 < BROADCAST_TOLERANCE && deviations.1 < BROADCAST_TOLERANCE,
        deviations,
    })
}

fn vacuum_projector(d: usize) -> ComplexMatrix {
    projector(&basis_ket(d, 0))
}

/// `μ ρ ⊗ |0⟩⟨0| + (1-μ)|0⟩⟨0| ⊗ ρ`.
pub fn mixed_vacuum_joint(rho: &ComplexMatrix, mu: f64) -> Result<ComplexMatrix> {
    check_mu(mu)?;
    let vac = vacuum_projector(rho.nrows());
    Ok(tensor_product(rho, &vac)? * re(mu) + tensor_product(&vac, rho)? * re(1.0 - mu))
}

/// `μ ρ ⊗ ρ + (1-μ)|0⟩⟨0| ⊗ |0⟩⟨0|`.
pub fn broadcast_candidate(rho: &ComplexMatrix, mu: f64) -> Result<ComplexMatrix> {
    check_mu(mu)?;
    let vac = vacuum_projector(rho.nrows());
    Ok(tensor_product(rho, rho)? * re(mu) + tensor_product(&vac, &vac)? * re(1.0 - mu))
}

/// `μ ρ + (1-μ)|0⟩⟨0|`.
pub fn vacuum_mixture(rho: &ComplexMatrix, mu: f64) -> Result<ComplexMatrix> {
    check_mu(mu)?;
    Ok(rho * re(mu) + vacuum_projector(rho.nrows()) * re(1.0 - mu))
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(TfdError::Domain(format!("mixing weight {mu} outside [0, 1]")));
    }
    Ok(())
}

/// A joint state whose reductions are thermal at two target temperatures.
#[derive(Debug, Clone)]
pub struct ThermalBroadcast {
    /// `ρ_{β''} ⊗ ρ_{β'}`, so that `Tr_A` leaves `ρ_{β'}` and `Tr_B` leaves `ρ_{β''}`.
    pub joint: ComplexMatrix,
    /// Checked against the first target.
    pub trace_a: BroadcastReport,
    /// Checked against the second target.
    pub trace_b: BroadcastReport,
}

impl ThermalBroadcast {
    /// `‖Tr_A(joint) - ρ_{β'}‖` and `‖Tr_B(joint) - ρ_{β''}‖`.
    pub fn deviations(&self) -> (f64, f64) {
        (self.trace_a.deviations.0, self.trace_b.deviations.1)
    }

    pub fn holds(&self) -> bool {
        let (a, b) = self.deviations();
        a < BROADCAST_TOLERANCE && b < BROADCAST_TOLERANCE
    }
}

/// Joint state with `Tr_A = 𝒯(ρ_β) = ρ_{β'}` and `Tr_B = 𝒯'(ρ_β) = ρ_{β''}`.
pub fn thermal_broadcast_maps(
    rho_beta: &ComplexMatrix,
    target_a: &ThermalParams,
    target_b: &ThermalParams,
    cutoff: usize,
) -> Result<ThermalBroadcast> {
    let rho1 = temperature_map(rho_beta, target_a, cutoff)?;
    let rho2 = temperature_map(rho_beta, target_b, cutoff)?;
    let joint = tensor_product(&rho2, &rho1)?;
    let trace_a = broadcast_check(&joint, &rho1)?;
    let trace_b = broadcast_check(&joint, &rho2)?;
    let out = ThermalBroadcast { joint, trace_a, trace_b };
    let (a, b) = out.deviations();
    if !out.holds() {
        return Err(TfdError::Consistency {
            what: "thermal broadcast reductions".into(),
            deviation: a.max(b),
            tolerance: BROADCAST_TOLERANCE,
        });
    }
    Ok(out)
}
