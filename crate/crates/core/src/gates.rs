//! Gates acting on the non-tilde sector, lifted to the doubled space as `U ⊗ I`.

use rand::Rng;

use crate::error::{Result, TfdError};
use crate::hilbert::{
    apply_nontilde, c, commutator, identity, is_unitary, lift_nontilde, lift_tilde, op_norm, re,
    ComplexMatrix, FockOperators, StateVector,
};
use crate::random::random_unitary;
use crate::thermo::{
    excited_thermofield, generalized_density, thermal_density, thermal_vacuum, ThermalParams,
    ThermofieldQubit,
};

/// Unitaries are accepted when `‖U U† - I‖_max` is below this.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// The two constructions of the gated excitation must agree to this.
pub const EXCITED_PATH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GateOp {
    pub name: String,
    pub unitary: ComplexMatrix,
}

impl GateOp {
    pub fn new(name: impl Into<String>, unitary: ComplexMatrix) -> Result<Self> {
        if !is_unitary(&unitary, UNITARITY_TOLERANCE) {
            return Err(TfdError::Contract("gate matrix is not unitary".into()));
        }
        Ok(GateOp { name: name.into(), unitary })
    }

    pub fn identity(cutoff: usize) -> Self {
        GateOp { name: "identity".into(), unitary: identity(cutoff + 1) }
    }

    /// `diag(e^{i n φ})`, which commutes with the number operator.
    pub fn phase(cutoff: usize, phi: f64) -> Self {
        let d = cutoff + 1;
        let diag = StateVector::from_fn(d, |n, _| c(0.0, n as f64 * phi).exp());
        GateOp { name: format!("phase({phi})"), unitary: ComplexMatrix::from_diagonal(&diag) }
    }

    /// Hadamard on `span{|0⟩, |1⟩}`, identity on higher Fock levels.
    pub fn qubit_hadamard(cutoff: usize) -> Self {
        let mut u = identity(cutoff + 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        u[(0, 0)] = re(h);
        u[(0, 1)] = re(h);
        u[(1, 0)] = re(h);
        u[(1, 1)] = re(-h);
        GateOp { name: "qubit-hadamard".into(), unitary: u }
    }

    /// Haar-random unitary on the whole truncated sector.
    pub fn random<R: Rng + ?Sized>(cutoff: usize, rng: &mut R) -> Self {
        GateOp { name: "haar-random".into(), unitary: random_unitary(cutoff + 1, rng) }
    }

    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn inverse(&self) -> Self {
        GateOp { name: format!("{}^-1", self.name), unitary: self.unitary.adjoint() }
    }

    /// `U ⊗ I` on the doubled space.
    pub fn lifted(&self) -> ComplexMatrix {
        lift_nontilde(&self.unitary, self.dim())
    }

    fn check_cutoff(&self, cutoff: usize) -> Result<()> {
        if self.dim() != cutoff + 1 {
            return Err(TfdError::Shape(format!(
                "gate acts on dimension {}, cutoff {cutoff} needs {}",
                self.dim(),
                cutoff + 1
            )));
        }
        Ok(())
    }
}

/// `U A U†`.
pub fn conjugate_operator(g: &GateOp, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.nrows() != g.dim() || a.ncols() != g.dim() {
        return Err(TfdError::Shape(format!(
            "operator is {}x{}, gate is {}x{}",
            a.nrows(),
            a.ncols(),
            g.dim(),
            g.dim()
        )));
    }
    Ok(&g.unitary * a * g.unitary.adjoint())
}

/// `(U ⊗ I)|0(β)⟩`.
pub fn gate_vacuum(g: &GateOp, params: &ThermalParams, cutoff: usize) -> Result<StateVector> {
    g.check_cutoff(cutoff)?;
    let vac = thermal_vacuum(params, cutoff)?;
    apply_nontilde(&g.unitary, &vac.state)
}

/// The gated excitation built two ways.
#[derive(Debug, Clone)]
pub struct GatedExcitation {
    /// `(c_G† ⊗ I)|0_G(β)⟩`, normalized.
    pub via_gated_creation: StateVector,
    /// `(U ⊗ I)|1(β)⟩`.
    pub via_gated_state: StateVector,
    pub deviation: f64,
}

pub fn gate_excited_paths(g: &GateOp, params: &ThermalParams, cutoff: usize) -> Result<GatedExcitation> {
    g.check_cutoff(cutoff)?;
    let fock = FockOperators::new(cutoff);
    let create_g = conjugate_operator(g, &fock.create)?;
    let raw = apply_nontilde(&create_g, &gate_vacuum(g, params, cutoff)?)?;
    let via_gated_creation = raw.unscale(raw.norm());
    let excited = excited_thermofield(params, cutoff)?;
    let via_gated_state = apply_nontilde(&g.unitary, &excited.state)?;
    let deviation = (&via_gated_creation - &via_gated_state).norm();
    Ok(GatedExcitation { via_gated_creation, via_gated_state, deviation })
}

/// `|1_G(β)⟩`, checked against both constructions.
pub fn gate_excited(g: &GateOp, params: &ThermalParams, cutoff: usize) -> Result<StateVector> {
    let paths = gate_excited_paths(g, params, cutoff)?;
    if paths.deviation > EXCITED_PATH_TOLERANCE {
        return Err(TfdError::Consistency {
            what: "gated excitation paths disagree".into(),
            deviation: paths.deviation,
            tolerance: EXCITED_PATH_TOLERANCE,
        });
    }
    Ok(paths.via_gated_state)
}

/// `a0|0_G(β)⟩ + a1|1_G(β)⟩`.
pub fn gated_qubit_state(g: &GateOp, q: &ThermofieldQubit) -> Result<StateVector> {
    let vac = gate_vacuum(g, &q.params, q.cutoff)?;
    let ex = gate_excited(g, &q.params, q.cutoff)?;
    Ok(vac * q.a0 + ex * q.a1)
}

/// Density of the gated qubit assembled from `ρ_G = U ρ U†` and `c_G = U c U†`.
pub fn rho_psi_gated(g: &GateOp, q: &ThermofieldQubit) -> Result<ComplexMatrix> {
    g.check_cutoff(q.cutoff)?;
    let fock = FockOperators::new(q.cutoff);
    let rho_g = conjugate_operator(g, &thermal_density(&q.params, q.cutoff)?)?;
    let c_g = conjugate_operator(g, &fock.annihilate)?;
    let cdag_g = conjugate_operator(g, &fock.create)?;
    let excited = excited_thermofield(&q.params, q.cutoff)?;
    Ok(generalized_density(q.a0, q.a1, excited.excitation_norm, &rho_g, &c_g, &cdag_g))
}

/// Thermal ladder operators `b(β) = u c - v c̃†`, `b̃(β) = u c̃ - v c†` on the doubled space.
#[derive(Debug, Clone)]
pub struct ThermalLadder {
    pub c: ComplexMatrix,
    pub c_tilde: ComplexMatrix,
    pub b: ComplexMatrix,
    pub b_tilde: ComplexMatrix,
}

pub fn thermal_ladder(params: &ThermalParams, cutoff: usize) -> ThermalLadder {
    let fock = FockOperators::new(cutoff);
    let d = cutoff + 1;
    let c_op = lift_nontilde(&fock.annihilate, d);
    let c_tilde = lift_tilde(&fock.annihilate, d);
    let b = &c_op * re(params.u) - c_tilde.adjoint() * re(params.v);
    let b_tilde = &c_tilde * re(params.u) - c_op.adjoint() * re(params.v);
    ThermalLadder { c: c_op, c_tilde, b, b_tilde }
}

/// Restriction of a doubled-space operator to `|n, m̃⟩` with `n, m ≤ N-2`.
#[cfg(test)]
fn sub_cutoff_block(op: &ComplexMatrix, cutoff: usize) -> ComplexMatrix {
    let d = cutoff + 1;
    let keep: Vec<usize> = (0..d.saturating_sub(2))
        .flat_map(|n| (0..d.saturating_sub(2)).map(move |m| n * d + m))
        .collect();
    ComplexMatrix::from_fn(keep.len(), keep.len(), |i, j| op[(keep[i], keep[j])])
}

/// Residual on the doubled space, built from the lifted operators.
#[cfg(test)]
fn commutator_residual_dense(
    g: &GateOp,
    params: &ThermalParams,
    cutoff: usize,
    gate_thermal_operators: bool,
) -> Result<f64> {
    g.check_cutoff(cutoff)?;
    let lad = thermal_ladder(params, cutoff);
    let ul = g.lifted();
    let ul_dag = ul.adjoint();
    let conj = |x: &ComplexMatrix| &ul * x * &ul_dag;
    let cdag_g = conj(&lad.c.adjoint());
    let (bdag, b_tilde) = if gate_thermal_operators {
        (conj(&lad.b.adjoint()), conj(&lad.b_tilde))
    } else {
        (lad.b.adjoint(), lad.b_tilde.clone())
    };
    let lhs = commutator(&ul, &cdag_g);
    let rhs = commutator(&ul, &bdag) * re(params.u) + commutator(&ul, &b_tilde) * re(params.v);
    Ok(op_norm(&sub_cutoff_block(&(lhs - rhs), cutoff)))
}

/// Same residual on the non-tilde sector.
///
/// `U ⊗ I` commutes with every tilde operator, so each commutator is
/// `[U, A] ⊗ I` for the non-tilde part `A`, and the sub-cutoff block of
/// `R ⊗ I` has the operator norm of the `n ≤ N-2` block of `R`.
fn commutator_residual(
    g: &GateOp,
    params: &ThermalParams,
    cutoff: usize,
    gate_thermal_operators: bool,
) -> Result<f64> {
    g.check_cutoff(cutoff)?;
    if cutoff < 2 {
        return Err(TfdError::Domain("commutator check needs cutoff >= 2".into()));
    }
    let fock = FockOperators::new(cutoff);
    let u_op = &g.unitary;
    let cdag_g = conjugate_operator(g, &fock.create)?;
    // non-tilde parts of b† = u c† - v c̃ and b̃ = u c̃ - v c†
    let inner = if gate_thermal_operators { &cdag_g } else { &fock.create };
    let bdag = inner * re(params.u);
    let b_tilde = inner * re(-params.v);
    let lhs = commutator(u_op, &cdag_g);
    let rhs = commutator(u_op, &bdag) * re(params.u) + commutator(u_op, &b_tilde) * re(params.v);
    let r = lhs - rhs;
    let k = cutoff - 1;
    Ok(op_norm(&r.view((0, 0), (k, k)).into_owned()))
}

/// `‖[U, c_G†] - u[U, b_G†] - v[U, b̃_G]‖` on the sub-cutoff block, with
/// `b_G = U b U†` and `b̃_G = U b̃ U†`.
pub fn check_bogoliubov_commutator(g: &GateOp, params: &ThermalParams, cutoff: usize) -> Result<f64> {
    commutator_residual(g, params, cutoff, true)
}

/// Same residual with the ungated thermal operators `b†(β)`, `b̃(β)` on the
/// right-hand side. Nonzero for gates with `[U, [U, c†]] ≠ 0`.
pub fn ungated_bogoliubov_commutator_residual(
    g: &GateOp,
    params: &ThermalParams,
    cutoff: usize,
) -> Result<f64> {
    commutator_residual(g, params, cutoff, false)
}

/// `‖U(U ρ U†)U† - ρ‖` in operator norm.
pub fn double_application_residual(g: &GateOp, rho: &ComplexMatrix) -> Result<f64> {
    let once = conjugate_operator(g, rho)?;
    let twice = conjugate_operator(g, &once)?;
    Ok(op_norm(&(twice - rho)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation_nontilde, max_abs_diff, pair_ket, trace_of_product};
    use crate::random::{random_amplitudes, random_hermitian, seeded_rng};
    use crate::thermo::{qubit_state, rho_psi, InverseTemperature};

    fn half() -> ThermalParams {
        crate::thermo::bogoliubov_params(InverseTemperature::Finite(4f64.ln()), 1.0).unwrap()
    }

    const TEST_NBARS: [f64; 5] = [1.0 / 3.0, 0.5, 1.0, 2.0, 3.0];

    #[test]
    fn conjugation_examples() {
        let fock = FockOperators::new(6);
        let id = GateOp::identity(6);
        assert_eq!(conjugate_operator(&id, &fock.annihilate).unwrap(), fock.annihilate);

        let mut rng = seeded_rng(10);
        let g = GateOp::random(6, &mut rng);
        let rho = thermal_density(&half(), 6).unwrap();
        let back = conjugate_operator(&g.inverse(), &conjugate_operator(&g, &rho).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &rho) < 1e-12);

        let ph = GateOp::phase(6, 0.37);
        let n_conj = conjugate_operator(&ph, &fock.number).unwrap();
        assert!(max_abs_diff(&n_conj, &fock.number) < 1e-13);

        assert!(conjugate_operator(&g, &identity(3)).is_err());
        assert!(GateOp::new("bad", identity(3) * re(2.0)).is_err());
    }

    #[test]
    fn gate_vacuum_examples() {
        let n = 20;
        let p = half();
        let vac = thermal_vacuum(&p, n).unwrap().state;
        assert!((gate_vacuum(&GateOp::identity(n), &p, n).unwrap() - &vac).norm() < 1e-15);

        let mut rng = seeded_rng(11);
        let fock = FockOperators::new(n);
        for _ in 0..3 {
            let g = GateOp::random(n, &mut rng);
            let vg = gate_vacuum(&g, &p, n).unwrap();
            let op = random_hermitian(n + 1, &mut rng);
            let rho_g = conjugate_operator(&g, &thermal_density(&p, n).unwrap()).unwrap();
            let a = expectation_nontilde(&vg, &op).unwrap();
            assert!((a - trace_of_product(&rho_g, &op)).norm() < 1e-8);
            let n_g = conjugate_operator(&g, &fock.number).unwrap();
            let b = expectation_nontilde(&vg, &n_g).unwrap();
            let c0 = expectation_nontilde(&vac, &fock.number).unwrap();
            assert!((b - c0).norm() < 1e-8);
        }
    }

    #[test]
    fn gate_excited_examples() {
        let n = 16;
        let p = half();
        let ex = excited_thermofield(&p, n).unwrap().state;
        assert!((gate_excited(&GateOp::identity(n), &p, n).unwrap() - ex).norm() < 1e-14);

        let mut rng = seeded_rng(12);
        let zero = ThermalParams::zero_temperature(1.0).unwrap();
        let g = GateOp::random(n, &mut rng);
        let out = gate_excited(&g, &zero, n).unwrap();
        let expected = apply_nontilde(&g.unitary, &pair_ket(n + 1, 1, 0)).unwrap();
        assert!((out - expected).norm() < 1e-12);
    }

    #[test]
    fn excited_paths_agree_across_gates_and_temperatures() {
        let n = 20;
        let mut rng = seeded_rng(13);
        for _ in 0..10 {
            let g = GateOp::random(n, &mut rng);
            for nbar in TEST_NBARS {
                let p = ThermalParams::from_nbar(nbar, 1.0).unwrap();
                let paths = gate_excited_paths(&g, &p, n).unwrap();
                assert!(paths.deviation < EXCITED_PATH_TOLERANCE, "{}", paths.deviation);
            }
        }
    }

    #[test]
    fn rho_psi_gated_examples() {
        let n = 16;
        let p = half();
        let mut rng = seeded_rng(14);
        let (a0, a1) = random_amplitudes(&mut rng);
        let q = ThermofieldQubit::new(a0, a1, p, n).unwrap();
        let base = rho_psi(&q).unwrap();
        let ident = rho_psi_gated(&GateOp::identity(n), &q).unwrap();
        assert!(max_abs_diff(&ident, &base) < 1e-15);

        let g = GateOp::random(n, &mut rng);
        let gated = rho_psi_gated(&g, &q).unwrap();
        let direct = conjugate_operator(&g, &base).unwrap();
        assert!(max_abs_diff(&gated, &direct) < 1e-10);

        let psi_g = gated_qubit_state(&g, &q).unwrap();
        let op = random_hermitian(n + 1, &mut rng);
        let a = trace_of_product(&gated, &op);
        let b = expectation_nontilde(&psi_g, &op).unwrap();
        assert!((a - b).norm() < 1e-8);
        // the gated qubit is the gate applied to the qubit
        let psi = qubit_state(&q).unwrap();
        assert!((apply_nontilde(&g.unitary, &psi).unwrap() - psi_g).norm() < 1e-10);
    }

    #[test]
    fn commutator_check_examples() {
        let n = 12;
        let p = half();
        assert!(check_bogoliubov_commutator(&GateOp::identity(n), &p, n).unwrap() < 1e-13);

        let mut rng = seeded_rng(15);
        let g = GateOp::random(n, &mut rng);
        let zero = ThermalParams::zero_temperature(1.0).unwrap();
        assert!(check_bogoliubov_commutator(&g, &zero, n).unwrap() < 1e-12);

        let r = check_bogoliubov_commutator(&g, &p, n).unwrap();
        assert!(r < 10.0 * p.tail_mass(n), "{r:e}");

        // with ungated thermal operators the relation fails for a generic gate
        assert!(ungated_bogoliubov_commutator_residual(&g, &p, n).unwrap() > 1e-2);
        assert!(ungated_bogoliubov_commutator_residual(&GateOp::identity(n), &p, n).unwrap() < 1e-13);
    }

    #[test]
    fn factored_commutator_matches_dense() {
        let n = 6;
        let mut rng = seeded_rng(19);
        for nbar in [0.2, 1.5] {
            let p = ThermalParams::from_nbar(nbar, 1.0).unwrap();
            let g = GateOp::random(n, &mut rng);
            for gated in [true, false] {
                let fast = commutator_residual(&g, &p, n, gated).unwrap();
                let dense = commutator_residual_dense(&g, &p, n, gated).unwrap();
                assert!((fast - dense).abs() < 1e-12, "{fast} vs {dense}");
            }
        }
    }

    #[test]
    fn gate_covariance_of_expectations() {
        let n = 10;
        let mut rng = seeded_rng(16);
        let rho = thermal_density(&half(), n).unwrap();
        for _ in 0..10 {
            let g = GateOp::random(n, &mut rng);
            let op = random_hermitian(n + 1, &mut rng);
            let lhs = trace_of_product(&conjugate_operator(&g, &rho).unwrap(), &op);
            let rhs = trace_of_product(&rho, &(g.unitary.adjoint() * &op * &g.unitary));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn self_inverse_gate_restores_state() {
        let n = 8;
        let g = GateOp::qubit_hadamard(n);
        let mut rng = seeded_rng(17);
        let rho = crate::random::random_density(n + 1, &mut rng);
        assert!(double_application_residual(&g, &rho).unwrap() < 1e-12);
    }
}
