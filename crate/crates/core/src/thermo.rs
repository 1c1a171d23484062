//! Thermal vacua, thermal densities and thermofield qubits for one bosonic mode.
//!
//! Conventions: `u = cosh θ`, `v = sinh θ`, `tanh θ = exp(-βω/2)` and the
//! Bose-Einstein occupation `n̄ = 1/(exp(βω) - 1) = sinh²θ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TfdError};
use crate::hilbert::{
    apply_nontilde, expectation_nontilde, normalized, re, trace_of_product, ComplexMatrix,
    FockOperators, StateVector, C64,
};
use crate::Engine;

/// Tail masses above this flag a truncation warning.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// An excited thermofield whose norm before renormalization is further than
/// this from `u` is rejected.
pub const EXCITATION_NORM_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseTemperature {
    Finite(f64),
    /// Zero temperature.
    Infinite,
}

impl InverseTemperature {
    pub fn finite(beta: f64) -> Self {
        InverseTemperature::Finite(beta)
    }

    /// The inverse temperature whose Bose-Einstein occupation is `nbar`.
    pub fn from_nbar(nbar: f64, omega: f64) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(TfdError::Domain(format!("occupation {nbar} must be finite and >= 0")));
        }
        check_omega(omega)?;
        if nbar == 0.0 {
            return Ok(InverseTemperature::Infinite);
        }
        Ok(InverseTemperature::Finite((1.0 / nbar).ln_1p() / omega))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            InverseTemperature::Finite(b) => b,
            InverseTemperature::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, InverseTemperature::Infinite)
    }
}

impl fmt::Display for InverseTemperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InverseTemperature::Finite(b) => write!(f, "{b}"),
            InverseTemperature::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for InverseTemperature {
    type Err = TfdError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf") {
            return Ok(InverseTemperature::Infinite);
        }
        let b: f64 = t
            .parse()
            .map_err(|_| TfdError::Config(format!("cannot parse inverse temperature {s:?}")))?;
        if b.is_infinite() && b > 0.0 {
            return Ok(InverseTemperature::Infinite);
        }
        Ok(InverseTemperature::Finite(b))
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(TfdError::Domain(format!("mode frequency {omega} must be positive")));
    }
    Ok(())
}

/// Bogoliubov parameters of one mode at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalParams {
    pub beta: InverseTemperature,
    pub omega: f64,
    pub theta: f64,
    pub u: f64,
    pub v: f64,
    pub nbar: f64,
}

pub fn bogoliubov_params(beta: InverseTemperature, omega: f64) -> Result<ThermalParams> {
    check_omega(omega)?;
    match beta {
        InverseTemperature::Infinite => Ok(ThermalParams {
            beta,
            omega,
            theta: 0.0,
            u: 1.0,
            v: 0.0,
            nbar: 0.0,
        }),
        InverseTemperature::Finite(b) => {
            if !(b.is_finite() && b > 0.0) {
                return Err(TfdError::Domain(format!("inverse temperature {b} must be positive")));
            }
            let x = b * omega;
            let t = (-0.5 * x).exp();
            // 1 - t² = -expm1(-x), accurate at high temperature
            let one_minus_t2 = -(-x).exp_m1();
            let u = one_minus_t2.sqrt().recip();
            Ok(ThermalParams {
                beta,
                omega,
                theta: t.atanh(),
                u,
                v: t * u,
                nbar: x.exp_m1().recip(),
            })
        }
    }
}

impl ThermalParams {
    pub fn zero_temperature(omega: f64) -> Result<Self> {
        bogoliubov_params(InverseTemperature::Infinite, omega)
    }

    pub fn from_nbar(nbar: f64, omega: f64) -> Result<Self> {
        bogoliubov_params(InverseTemperature::from_nbar(nbar, omega)?, omega)
    }

    /// `tanh θ = exp(-βω/2)`.
    pub fn tanh_theta(&self) -> f64 {
        match self.beta {
            InverseTemperature::Infinite => 0.0,
            InverseTemperature::Finite(b) => (-0.5 * b * self.omega).exp(),
        }
    }

    /// Probability mass of the thermal vacuum above Fock level `cutoff`.
    pub fn tail_mass(&self, cutoff: usize) -> f64 {
        let t = self.tanh_theta();
        if t == 0.0 {
            return 0.0;
        }
        (2.0 * (cutoff as f64 + 1.0) * t.ln()).exp()
    }

    /// Smallest cutoff whose tail mass is at most `tol`.
    pub fn cutoff_for_tail(&self, tol: f64) -> usize {
        let t = self.tanh_theta();
        if t == 0.0 {
            return 1;
        }
        let levels = (tol.ln() / (2.0 * t.ln())).ceil().max(1.0) as usize;
        (levels.saturating_sub(1)).max(1)
    }

    pub fn same_mode(&self, other: &ThermalParams) -> bool {
        (self.omega - other.omega).abs() <= 1e-12 * self.omega.abs().max(other.omega.abs())
    }
}

/// `1/(exp(βω) - 1)`.
pub fn bose_einstein(beta: InverseTemperature, omega: f64) -> Result<f64> {
    Ok(bogoliubov_params(beta, omega)?.nbar)
}

/// Truncated, renormalized thermal vacuum together with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct ThermalVacuum {
    pub state: StateVector,
    pub params: ThermalParams,
    pub cutoff: usize,
    /// `tanh^{2(N+1)} θ`, the weight dropped by the truncation.
    pub tail_mass: f64,
}

impl ThermalVacuum {
    pub fn truncation_warning(&self) -> bool {
        self.tail_mass > DEFAULT_TAIL_TOLERANCE
    }

    pub fn sector_dim(&self) -> usize {
        self.cutoff + 1
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 1 {
        return Err(TfdError::Domain("cutoff must be at least 1".into()));
    }
    Ok(())
}

/// Geometric weights `(1 - t²) t^{2n}`, renormalized over `0..=cutoff`.
pub fn thermal_weights(params: &ThermalParams, cutoff: usize) -> Vec<f64> {
    let t2 = params.tanh_theta().powi(2);
    let mut w = Vec::with_capacity(cutoff + 1);
    let mut p = 1.0;
    for _ in 0..=cutoff {
        w.push(p);
        p *= t2;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// `Σ_n (tanhⁿθ / cosh θ) |n, ñ⟩` over `n ≤ cutoff`, renormalized.
pub fn thermal_vacuum(params: &ThermalParams, cutoff: usize) -> Result<ThermalVacuum> {
    check_cutoff(cutoff)?;
    let d = cutoff + 1;
    let mut state = StateVector::zeros(d * d);
    for (n, w) in thermal_weights(params, cutoff).into_iter().enumerate() {
        state[n * d + n] = re(w.sqrt());
    }
    Ok(ThermalVacuum {
        state,
        params: *params,
        cutoff,
        tail_mass: params.tail_mass(cutoff),
    })
}

/// Diagonal thermal density on the non-tilde sector.
pub fn thermal_density(params: &ThermalParams, cutoff: usize) -> Result<ComplexMatrix> {
    check_cutoff(cutoff)?;
    let w = thermal_weights(params, cutoff);
    Ok(ComplexMatrix::from_diagonal(&StateVector::from_iterator(
        cutoff + 1,
        w.into_iter().map(re),
    )))
}

/// First non-tilde excitation of the thermal vacuum.
#[derive(Debug, Clone)]
pub struct ExcitedThermofield {
    pub state: StateVector,
    /// `‖(c†⊗I)|0(β)⟩‖` at this cutoff; equals `u` up to truncation.
    pub excitation_norm: f64,
}

/// `(c† ⊗ I)|0(β)⟩ / u`, renormalized.
///
/// Fails when the truncated norm differs from `u` by more than
/// [`EXCITATION_NORM_TOLERANCE`] relative, which means the cutoff is too small.
pub fn excited_thermofield(params: &ThermalParams, cutoff: usize) -> Result<ExcitedThermofield> {
    let vacuum = thermal_vacuum(params, cutoff)?;
    excite(&vacuum, &FockOperators::new(cutoff).create)
}

pub(crate) fn excite(vacuum: &ThermalVacuum, create: &ComplexMatrix) -> Result<ExcitedThermofield> {
    let raw = apply_nontilde(create, &vacuum.state)?;
    let excitation_norm = raw.norm();
    let u = vacuum.params.u;
    let dev = (excitation_norm / u - 1.0).abs();
    if dev > EXCITATION_NORM_TOLERANCE {
        return Err(TfdError::Truncation(format!(
            "excited thermofield norm deviates from u by {dev:e} at cutoff {}",
            vacuum.cutoff
        )));
    }
    Ok(ExcitedThermofield { state: raw.unscale(excitation_norm), excitation_norm })
}

/// `a0|0(β)⟩ + a1|1(β)⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermofieldQubit {
    pub a0: C64,
    pub a1: C64,
    pub params: ThermalParams,
    pub cutoff: usize,
}

impl ThermofieldQubit {
    pub fn new(a0: C64, a1: C64, params: ThermalParams, cutoff: usize) -> Result<Self> {
        let n2 = a0.norm_sqr() + a1.norm_sqr();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(TfdError::Contract(format!(
                "qubit amplitudes have |a0|²+|a1|² = {n2}"
            )));
        }
        check_cutoff(cutoff)?;
        Ok(ThermofieldQubit { a0, a1, params, cutoff })
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.a0, self.a1]
    }
}

pub fn qubit_state(q: &ThermofieldQubit) -> Result<StateVector> {
    let vacuum = thermal_vacuum(&q.params, q.cutoff)?;
    let excited = excited_thermofield(&q.params, q.cutoff)?;
    let psi = &vacuum.state * q.a0 + &excited.state * q.a1;
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-8 {
        return Err(TfdError::Truncation(format!("qubit state norm {n} at cutoff {}", q.cutoff)));
    }
    normalized(&psi)
}

/// `Σ_{j,j'} (a_j* a_{j'} / u^{j+j'}) c†^{j'} ρ c^j` for a base density `ρ`
/// and ladder pair `(c, c†)`.
///
/// With `ρ` thermal and `u` the truncated excitation norm, `Tr(result · O)`
/// equals `⟨ψ|O⊗I|ψ⟩` for `|ψ⟩ = a0|0(β)⟩ + a1|1(β)⟩`.
pub fn generalized_density(
    a0: C64,
    a1: C64,
    u: f64,
    rho: &ComplexMatrix,
    annihilate: &ComplexMatrix,
    create: &ComplexMatrix,
) -> ComplexMatrix {
    let added = create * rho * annihilate;
    rho * re(a0.norm_sqr())
        + added * re(a1.norm_sqr() / (u * u))
        + create * rho * (a0.conj() * a1 / u)
        + rho * annihilate * (a1.conj() * a0 / u)
}

/// Non-tilde density whose traces reproduce expectations in the thermofield qubit.
pub fn rho_psi(q: &ThermofieldQubit) -> Result<ComplexMatrix> {
    let fock = FockOperators::new(q.cutoff);
    let rho = thermal_density(&q.params, q.cutoff)?;
    let excited = excited_thermofield(&q.params, q.cutoff)?;
    Ok(generalized_density(
        q.a0,
        q.a1,
        excited.excitation_norm,
        &rho,
        &fock.annihilate,
        &fock.create,
    ))
}

/// `⟨0(β)|0(β')⟩` from truncated vectors at the given cutoff.
pub fn vacuum_overlap(p1: &ThermalParams, p2: &ThermalParams, cutoff: usize) -> Result<C64> {
    if !p1.same_mode(p2) {
        return Err(TfdError::Domain(format!(
            "overlap needs equal mode frequencies, got {} and {}",
            p1.omega, p2.omega
        )));
    }
    let a = thermal_vacuum(p1, cutoff)?;
    let b = thermal_vacuum(p2, cutoff)?;
    Ok(a.state.dotc(&b.state))
}

/// `1 / cosh(θ - θ')`.
pub fn analytic_vacuum_overlap(p1: &ThermalParams, p2: &ThermalParams) -> f64 {
    (p1.theta - p2.theta).cosh().recip()
}

/// Both evaluations of `⟨O⟩` in `√μ|0(β)⟩ + √(1-μ)|0(β')⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperposedVacuumReport {
    /// `μ⟨O⟩_β + (1-μ)⟨O⟩_β'`, thermofield vacua at different temperatures
    /// treated as orthonormal.
    pub abstract_value: C64,
    /// Expectation in the renormalized concrete superposition.
    pub numeric_value: C64,
    /// `numeric_value - abstract_value`.
    pub cross_term: C64,
    pub overlap: C64,
}

pub fn superposed_vacuum_report(
    mu: f64,
    p1: &ThermalParams,
    p2: &ThermalParams,
    op: &ComplexMatrix,
    cutoff: usize,
) -> Result<SuperposedVacuumReport> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(TfdError::Domain(format!("mixing weight {mu} outside [0, 1]")));
    }
    if !p1.same_mode(p2) {
        return Err(TfdError::Domain("superposed vacua need equal mode frequencies".into()));
    }
    if op.nrows() != cutoff + 1 || op.ncols() != cutoff + 1 {
        return Err(TfdError::Shape(format!(
            "operator is {}x{}, sector dimension is {}",
            op.nrows(),
            op.ncols(),
            cutoff + 1
        )));
    }
    let rho1 = thermal_density(p1, cutoff)?;
    let rho2 = thermal_density(p2, cutoff)?;
    let abstract_value =
        trace_of_product(&rho1, op) * re(mu) + trace_of_product(&rho2, op) * re(1.0 - mu);

    let v1 = thermal_vacuum(p1, cutoff)?.state;
    let v2 = thermal_vacuum(p2, cutoff)?.state;
    let psi = normalized(&(&v1 * re(mu.sqrt()) + &v2 * re((1.0 - mu).sqrt())))?;
    let numeric_value = expectation_nontilde(&psi, op)?;
    Ok(SuperposedVacuumReport {
        abstract_value,
        numeric_value,
        cross_term: numeric_value - abstract_value,
        overlap: v1.dotc(&v2),
    })
}

pub fn superposed_vacuum_expectation(
    mu: f64,
    p1: &ThermalParams,
    p2: &ThermalParams,
    op: &ComplexMatrix,
    engine: Engine,
    cutoff: usize,
) -> Result<C64> {
    let report = superposed_vacuum_report(mu, p1, p2, op, cutoff)?;
    Ok(match engine {
        Engine::Abstract => report.abstract_value,
        Engine::Numeric => report.numeric_value,
    })
}

/// Finite quadrature of a distribution over inverse temperatures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureMixture {
    components: Vec<(InverseTemperature, f64)>,
}

impl TemperatureMixture {
    pub fn new(components: Vec<(InverseTemperature, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(TfdError::Domain("empty temperature mixture".into()));
        }
        for (beta, mu) in &components {
            if !(mu.is_finite() && *mu >= 0.0) {
                return Err(TfdError::Domain(format!("mixture weight {mu} must be >= 0")));
            }
            if let InverseTemperature::Finite(b) = beta {
                if !(b.is_finite() && *b > 0.0) {
                    return Err(TfdError::Domain(format!("inverse temperature {b} must be positive")));
                }
            }
        }
        let total: f64 = components.iter().map(|(_, mu)| mu).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(TfdError::Domain(format!("mixture weights sum to {total}")));
        }
        Ok(TemperatureMixture { components })
    }

    /// All weight on one temperature.
    pub fn single(beta: InverseTemperature) -> Self {
        TemperatureMixture { components: vec![(beta, 1.0)] }
    }

    pub fn components(&self) -> &[(InverseTemperature, f64)] {
        &self.components
    }
}

/// `Σ_k μ_k ρ_{β_k}`.
pub fn mixture_density(mix: &TemperatureMixture, omega: f64, cutoff: usize) -> Result<ComplexMatrix> {
    let mut rho = ComplexMatrix::zeros(cutoff + 1, cutoff + 1);
    for (beta, mu) in mix.components() {
        let params = bogoliubov_params(*beta, omega)?;
        rho += thermal_density(&params, cutoff)? * re(*mu);
    }
    Ok(rho)
}
