//! Named experiments with deterministic result documents.
//!
//! A run produces a list of checks (value, expected, tolerance, pass) plus a
//! summary. Numbers are rounded to 12 significant digits before emission so
//! that repeated runs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::diagnostics::{coherent_state, mandel_q, mandel_q_gated_qubit_paths, mandel_q_nontilde};
use crate::error::{Result, TfdError};
use crate::gates::{
    check_bogoliubov_commutator, conjugate_operator, gate_excited_paths, gate_vacuum, rho_psi_gated, GateOp,
};
use crate::hilbert::{
    basis_ket, c, expectation_nontilde, max_abs_diff, re, trace_of_product, ComplexMatrix, FockOperators, C64,
};
use crate::nogo_maps::{
    broadcast_candidate, broadcast_check, cloning_linearity_gap, doubling_map, mixed_vacuum_joint,
    thermal_broadcast_maps, vacuum_mixture,
};
use crate::random::seeded_rng;
use crate::spin_gibbs::{hadamard_sum_form, hadamard_transform, spin_gibbs, verify_gibbs_reversibility};
use crate::teleport::{run_teleport, BranchSelection, ChannelVariant, NumericOptions};
use crate::thermo::{
    analytic_vacuum_overlap, bogoliubov_params, excited_thermofield, mixture_density, qubit_state, rho_psi,
    superposed_vacuum_report, thermal_density, thermal_vacuum, InverseTemperature, TemperatureMixture,
    ThermalParams, ThermofieldQubit, DEFAULT_TAIL_TOLERANCE,
};
use crate::Engine;

/// Largest accepted cutoff; doubled-space vectors have `(N+1)²` entries.
pub const MAX_CUTOFF: usize = 200;

/// Tail mass used to pick cutoffs for density-only checks.
const AUTO_TAIL: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    ExpectationEquivalence,
    Teleport,
    Mandel,
    GibbsHadamard,
    NoClone,
    Broadcast,
    Overlap,
    Mixture,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::ExpectationEquivalence,
        ExperimentName::Teleport,
        ExperimentName::Mandel,
        ExperimentName::GibbsHadamard,
        ExperimentName::NoClone,
        ExperimentName::Broadcast,
        ExperimentName::Overlap,
        ExperimentName::Mixture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::ExpectationEquivalence => "expectation-equivalence",
            ExperimentName::Teleport => "teleport",
            ExperimentName::Mandel => "mandel",
            ExperimentName::GibbsHadamard => "gibbs-hadamard",
            ExperimentName::NoClone => "no-clone",
            ExperimentName::Broadcast => "broadcast",
            ExperimentName::Overlap => "overlap",
            ExperimentName::Mixture => "mixture",
        }
    }

    /// Config fields the experiment reads.
    pub fn uses(self) -> &'static [&'static str] {
        match self {
            ExperimentName::ExpectationEquivalence => &["beta", "omega", "cutoff", "a0", "a1", "seed"],
            ExperimentName::Teleport => &["beta", "beta2", "omega", "cutoff", "a0", "a1", "engine", "channel"],
            ExperimentName::Mandel => &["beta", "omega", "cutoff", "a0", "a1", "seed"],
            ExperimentName::GibbsHadamard => &["beta", "omega"],
            ExperimentName::NoClone => &["beta", "omega", "cutoff", "a0", "a1"],
            ExperimentName::Broadcast => &["beta", "beta2", "omega", "cutoff", "mu"],
            ExperimentName::Overlap => &["beta", "beta2", "omega", "cutoff"],
            ExperimentName::Mixture => &["beta", "beta2", "omega", "cutoff", "mu", "engine"],
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = TfdError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| TfdError::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Abstract,
    Numeric,
    Both,
}

impl EngineChoice {
    pub fn engines(self) -> Vec<Engine> {
        match self {
            EngineChoice::Abstract => vec![Engine::Abstract],
            EngineChoice::Numeric => vec![Engine::Numeric],
            EngineChoice::Both => vec![Engine::Abstract, Engine::Numeric],
        }
    }
}

impl FromStr for EngineChoice {
    type Err = TfdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abstract" => Ok(EngineChoice::Abstract),
            "numeric" => Ok(EngineChoice::Numeric),
            "both" => Ok(EngineChoice::Both),
            _ => Err(TfdError::Config(format!("unknown engine {s:?}"))),
        }
    }
}

impl fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineChoice::Abstract => "abstract",
            EngineChoice::Numeric => "numeric",
            EngineChoice::Both => "both",
        })
    }
}

/// An inverse temperature given directly or through its occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Beta(InverseTemperature),
    Nbar(f64),
}

impl Temperature {
    pub fn resolve(self, omega: f64) -> Result<InverseTemperature> {
        match self {
            Temperature::Beta(b) => Ok(b),
            Temperature::Nbar(n) => InverseTemperature::from_nbar(n, omega),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    pub beta: Temperature,
    /// Second temperature; experiments pick their own default when absent.
    pub beta2: Option<Temperature>,
    pub omega: f64,
    pub cutoff: usize,
    pub a0: C64,
    pub a1: C64,
    pub mu: f64,
    pub engine: EngineChoice,
    pub seed: u64,
    pub channel: ChannelVariant,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName) -> Self {
        ExperimentConfig {
            experiment,
            beta: Temperature::Beta(InverseTemperature::Finite(1.0)),
            beta2: None,
            omega: 1.0,
            cutoff: 24,
            a0: re(0.6),
            a1: re(0.8),
            mu: 0.5,
            engine: EngineChoice::Both,
            seed: 42,
            channel: ChannelVariant::Thermo,
        }
    }

    /// Set one field from its textual form, as used by sweeps.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.trim().parse::<f64>().map_err(|_| TfdError::Config(format!("{key}: cannot parse {v:?}")))
        };
        match key {
            "beta" => self.beta = Temperature::Beta(value.parse()?),
            "nbar" => self.beta = Temperature::Nbar(num(value)?),
            "beta2" => self.beta2 = Some(Temperature::Beta(value.parse()?)),
            "nbar2" => self.beta2 = Some(Temperature::Nbar(num(value)?)),
            "omega" => self.omega = num(value)?,
            "cutoff" => {
                self.cutoff = value
                    .trim()
                    .parse()
                    .map_err(|_| TfdError::Config(format!("cutoff: cannot parse {value:?}")))?
            }
            "a0" => self.a0.re = num(value)?,
            "a0-im" => self.a0.im = num(value)?,
            "a1" => self.a1.re = num(value)?,
            "a1-im" => self.a1.im = num(value)?,
            "mu" => self.mu = num(value)?,
            "engine" => self.engine = value.parse()?,
            "seed" => {
                self.seed =
                    value.trim().parse().map_err(|_| TfdError::Config(format!("seed: cannot parse {value:?}")))?
            }
            "channel" => self.channel = value.parse()?,
            _ => return Err(TfdError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Validate every numeric field and resolve the temperatures.
    pub fn resolve(&self) -> Result<Resolved> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(TfdError::Config(format!("omega must be positive, got {}", self.omega)));
        }
        if !(2..=MAX_CUTOFF).contains(&self.cutoff) {
            return Err(TfdError::Config(format!("cutoff must lie in 2..={MAX_CUTOFF}, got {}", self.cutoff)));
        }
        let amps = [self.a0.re, self.a0.im, self.a1.re, self.a1.im];
        if amps.iter().any(|x| !x.is_finite()) {
            return Err(TfdError::Config("amplitudes must be finite".into()));
        }
        let n2 = self.a0.norm_sqr() + self.a1.norm_sqr();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(TfdError::Config(format!("amplitudes must satisfy |a0|²+|a1|² = 1, got {n2}")));
        }
        if !(self.mu.is_finite() && (0.0..=1.0).contains(&self.mu)) {
            return Err(TfdError::Config(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        let to_params = |t: Temperature| -> Result<ThermalParams> {
            let b = t.resolve(self.omega).map_err(as_config)?;
            bogoliubov_params(b, self.omega).map_err(as_config)
        };
        let params = to_params(self.beta)?;
        let params2 = self.beta2.map(to_params).transpose()?;
        Ok(Resolved { params, params2 })
    }
}

fn as_config(e: TfdError) -> TfdError {
    match e {
        TfdError::Domain(m) => TfdError::Config(m),
        other => other,
    }
}

/// Thermal parameters derived from a validated config.
#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub params: ThermalParams,
    pub params2: Option<ThermalParams>,
}

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `|value - expected| <= tolerance`.
    pub fn new(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (value - expected).abs() <= tolerance;
        Check {
            name: name.into(),
            value: round12(value),
            expected: round12(expected),
            tolerance: round12(tolerance),
            pass,
        }
    }

    fn flag(name: impl Into<String>, value: bool, expected: bool) -> Self {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        Check::new(name, b(value), b(expected), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigRecord {
    pub beta: Value,
    pub beta2: Value,
    pub nbar: f64,
    pub nbar2: Option<f64>,
    pub omega: f64,
    pub cutoff: usize,
    pub a0_re: f64,
    pub a0_im: f64,
    pub a1_re: f64,
    pub a1_im: f64,
    pub mu: f64,
    pub engine: EngineChoice,
    pub seed: u64,
    pub channel: ChannelVariant,
}

fn beta_value(b: InverseTemperature) -> Value {
    match b {
        InverseTemperature::Finite(x) => serde_json::json!(round12(x)),
        InverseTemperature::Infinite => Value::String("inf".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
    pub failing: Vec<String>,
    /// Thermal-vacuum tail mass at the first temperature and configured cutoff.
    pub tail_mass: f64,
    pub truncation_warning: bool,
    /// Reported values that carry no pass/fail verdict.
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultDocument {
    pub experiment: ExperimentName,
    pub config: ConfigRecord,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl ResultDocument {
    pub fn all_pass(&self) -> bool {
        self.summary.all_pass
    }
}

/// Accumulates checks and diagnostics for one run.
#[derive(Default)]
struct Recorder {
    checks: Vec<Check>,
    diagnostics: BTreeMap<String, f64>,
}

impl Recorder {
    fn check(&mut self, name: impl Into<String>, value: f64, expected: f64, tolerance: f64) {
        self.checks.push(Check::new(name, value, expected, tolerance));
    }

    fn note(&mut self, name: impl Into<String>, value: f64) {
        self.diagnostics.insert(name.into(), round12(value));
    }
}

/// Run one experiment. Wall time is recorded only when `timing` is set.
pub fn run_experiment(cfg: &ExperimentConfig, timing: bool) -> Result<ResultDocument> {
    let start = Instant::now();
    let resolved = cfg.resolve()?;
    let p = resolved.params;
    let mut rec = Recorder::default();
    match cfg.experiment {
        ExperimentName::ExpectationEquivalence => expectation_equivalence(cfg, &p, &mut rec)?,
        ExperimentName::Teleport => teleport(cfg, &p, resolved.params2.unwrap_or(p), &mut rec)?,
        ExperimentName::Mandel => mandel(cfg, &p, &mut rec)?,
        ExperimentName::GibbsHadamard => gibbs_hadamard(&p, &mut rec),
        ExperimentName::NoClone => no_clone(cfg, &p, &mut rec)?,
        ExperimentName::Broadcast => {
            let second = resolved.params2.map_or_else(|| ThermalParams::zero_temperature(p.omega), Ok)?;
            broadcast(cfg, &p, &second, &mut rec)?
        }
        ExperimentName::Overlap => {
            let second = resolved.params2.map_or_else(|| ThermalParams::zero_temperature(p.omega), Ok)?;
            overlap(cfg, &p, &second, &mut rec)?
        }
        ExperimentName::Mixture => {
            let second = resolved.params2.map_or_else(|| ThermalParams::zero_temperature(p.omega), Ok)?;
            mixture(cfg, &p, &second, &mut rec)?
        }
    }
    let tail = p.tail_mass(cfg.cutoff);
    let failing: Vec<String> = rec.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    let passed = rec.checks.len() - failing.len();
    let summary = Summary {
        total: rec.checks.len(),
        passed,
        failed: failing.len(),
        all_pass: failing.is_empty(),
        failing,
        tail_mass: round12(tail),
        truncation_warning: tail > DEFAULT_TAIL_TOLERANCE,
        diagnostics: rec.diagnostics,
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
    };
    let p2 = resolved.params2;
    Ok(ResultDocument {
        experiment: cfg.experiment,
        config: ConfigRecord {
            beta: beta_value(p.beta),
            beta2: p2.map_or(Value::Null, |q| beta_value(q.beta)),
            nbar: round12(p.nbar),
            nbar2: p2.map(|q| round12(q.nbar)),
            omega: round12(cfg.omega),
            cutoff: cfg.cutoff,
            a0_re: round12(cfg.a0.re),
            a0_im: round12(cfg.a0.im),
            a1_re: round12(cfg.a1.re),
            a1_im: round12(cfg.a1.im),
            mu: round12(cfg.mu),
            engine: cfg.engine,
            seed: cfg.seed,
            channel: cfg.channel,
        },
        checks: rec.checks,
        summary,
    })
}

/// `max(1e-9, 10 × tail)`.
pub fn truncation_tolerance(tail: f64) -> f64 {
    (10.0 * tail).max(1e-9)
}

fn test_operators(fock: &FockOperators) -> [(&'static str, ComplexMatrix); 3] {
    [
        ("n", fock.number.clone()),
        ("n2", &fock.number * &fock.number),
        ("x", &fock.annihilate + &fock.create),
    ]
}

fn expectation_equivalence(cfg: &ExperimentConfig, p: &ThermalParams, rec: &mut Recorder) -> Result<()> {
    let n = cfg.cutoff;
    let fock = FockOperators::new(n);
    let vac = thermal_vacuum(p, n)?;
    let rho = thermal_density(p, n)?;
    let tol = truncation_tolerance(vac.tail_mass);
    for (name, op) in test_operators(&fock) {
        let v = expectation_nontilde(&vac.state, &op)?.re;
        rec.check(format!("vacuum/{name}"), v, trace_of_product(&rho, &op).re, tol);
    }
    let mean = expectation_nontilde(&vac.state, &fock.number)?.re;
    rec.check("bose-einstein", mean, p.nbar, tol);

    let q = ThermofieldQubit::new(cfg.a0, cfg.a1, *p, n).map_err(as_config)?;
    let psi = qubit_state(&q)?;
    let rho_q = rho_psi(&q)?;
    rec.check("qubit/rho-psi-trace", rho_q.trace().re, 1.0, 1e-8);
    rec.check("qubit/rho-psi-hermiticity", max_abs_diff(&rho_q, &rho_q.adjoint()), 0.0, 1e-12);
    for (name, op) in test_operators(&fock) {
        let direct = expectation_nontilde(&psi, &op)?;
        let via = trace_of_product(&rho_q, &op);
        rec.check(format!("qubit/{name}"), (via - direct).norm(), 0.0, 1e-8);
    }

    let g = GateOp::random(n, &mut seeded_rng(cfg.seed));
    let paths = gate_excited_paths(&g, p, n)?;
    rec.check("gate/excited-paths", paths.deviation, 0.0, 1e-8);
    let kj = rho_psi_gated(&g, &q)?;
    rec.check("gate/rho-psi", max_abs_diff(&kj, &conjugate_operator(&g, &rho_q)?), 0.0, 1e-10);
    let comm = check_bogoliubov_commutator(&g, p, n)?;
    rec.check("gate/commutator", comm, 0.0, truncation_tolerance(vac.tail_mass));
    Ok(())
}

fn teleport(cfg: &ExperimentConfig, alice: &ThermalParams, bob: ThermalParams, rec: &mut Recorder) -> Result<()> {
    let (source, channel) = cfg.channel.specs(*alice, bob);
    let a = [cfg.a0, cfg.a1];
    let opts = NumericOptions { cutoff: cfg.cutoff };
    for engine in cfg.engine.engines() {
        let out = run_teleport(a, &source, &channel, engine, BranchSelection::All, opts).map_err(as_config)?;
        let tol = match engine {
            Engine::Abstract => 1e-12,
            Engine::Numeric => truncation_tolerance(alice.tail_mass(cfg.cutoff).max(bob.tail_mass(cfg.cutoff))),
        };
        let mut total = 0.0;
        for o in &out {
            rec.check(format!("{engine}/{}", o.branch), o.fidelity, 1.0, tol);
            rec.note(format!("{engine}/{}/probability", o.branch), o.probability);
            if let Some(sf) = o.source_fidelity {
                rec.note(format!("{engine}/{}/source-fidelity", o.branch), sf);
            }
            total += o.probability;
        }
        rec.note(format!("{engine}/probability-sum"), total);
    }
    Ok(())
}

fn mandel(cfg: &ExperimentConfig, p: &ThermalParams, rec: &mut Recorder) -> Result<()> {
    let n_auto = cfg.cutoff.max(p.cutoff_for_tail(AUTO_TAIL));
    rec.note("thermal/cutoff", n_auto as f64);
    let fock = FockOperators::new(n_auto);
    let thermal = mandel_q(&thermal_density(p, n_auto)?, &fock.number).map_err(as_config)?;
    rec.check("thermal", thermal.q, p.nbar, 1e-9);

    let small = FockOperators::new(cfg.cutoff);
    let fock1 = mandel_q(&basis_ket(cfg.cutoff + 1, 1), &small.number)?;
    rec.check("fock-1", fock1.q, -1.0, 0.0);

    let n_coh = 80;
    let coh = mandel_q(&coherent_state(c(1.0, 0.0), n_coh)?, &FockOperators::new(n_coh).number)?;
    rec.check("coherent", coh.q, 0.0, 1e-8);

    let g = GateOp::random(cfg.cutoff, &mut seeded_rng(cfg.seed));
    let gv_state = mandel_q_nontilde(&gate_vacuum(&g, p, cfg.cutoff)?, &small)?;
    let gv_density = mandel_q(&conjugate_operator(&g, &thermal_density(p, cfg.cutoff)?)?, &small.number)?;
    rec.check("gated-vacuum", gv_state.q, gv_density.q, 1e-10);
    rec.note("gated-vacuum/q", gv_state.q);

    let q = ThermofieldQubit::new(cfg.a0, cfg.a1, *p, cfg.cutoff).map_err(as_config)?;
    let paths = mandel_q_gated_qubit_paths(&g, &q)?;
    rec.check("gated-qubit", paths.via_state.q, paths.via_density.q, 1e-8);
    rec.note("gated-qubit/q", paths.via_density.q);
    Ok(())
}

fn gibbs_hadamard(p: &ThermalParams, rec: &mut Recorder) {
    let bw = p.beta.as_f64() * p.omega;
    let s = spin_gibbs(bw);
    let rh = hadamard_transform(&s);
    rec.check("diag/0", rh[(0, 0)].re, 0.5, 1e-14);
    rec.check("diag/1", rh[(1, 1)].re, 0.5, 1e-14);
    rec.check("offdiag", rh[(0, 1)].norm(), 0.5 * (0.5 * bw).tanh(), 1e-12);
    rec.check("reversibility", verify_gibbs_reversibility(&s), 0.0, 1e-14);
    rec.check("sum-form", max_abs_diff(&hadamard_sum_form(&s), &rh), 0.0, 1e-14);
    rec.note("partition", s.partition);
}

fn no_clone(cfg: &ExperimentConfig, p: &ThermalParams, rec: &mut Recorder) -> Result<()> {
    let e0 = thermal_vacuum(p, cfg.cutoff)?.state;
    let e1 = excited_thermofield(p, cfg.cutoff)?.state;
    let basis = [&e0, &e1];
    let (a0, a1) = (cfg.a0, cfg.a1);
    // |a0(a0-1)|² + 2|a0 a1|² + |a1(a1-1)|²
    let closed = ((a0 * (a0 - 1.0)).norm_sqr() + 2.0 * (a0 * a1).norm_sqr() + (a1 * (a1 - 1.0)).norm_sqr()).sqrt();
    rec.check("gap", cloning_linearity_gap(a0, a1, basis)?, closed, 1e-12);
    let h = re(std::f64::consts::FRAC_1_SQRT_2);
    rec.check("gap/balanced", cloning_linearity_gap(h, h, basis)?, (2.0 - 2f64.sqrt()).sqrt(), 1e-12);
    rec.check("gap/e0", cloning_linearity_gap(re(1.0), re(0.0), basis)?, 0.0, 0.0);
    rec.check("gap/e1", cloning_linearity_gap(re(0.0), re(1.0), basis)?, 0.0, 0.0);
    let d = cfg.cutoff + 1;
    let sup = (basis_ket(d, 0) + basis_ket(d, 1)) * h;
    rec.check_flag("doubling/rejects-superposition", doubling_map(&sup).is_err(), true);
    Ok(())
}

impl Recorder {
    fn check_flag(&mut self, name: impl Into<String>, value: bool, expected: bool) {
        self.checks.push(Check::flag(name, value, expected));
    }
}

fn broadcast(cfg: &ExperimentConfig, p: &ThermalParams, second: &ThermalParams, rec: &mut Recorder) -> Result<()> {
    let n = cfg.cutoff;
    let rho = thermal_density(p, n)?;
    let mu = cfg.mu;
    let vac = crate::hilbert::projector(&basis_ket(n + 1, 0));

    let rep = broadcast_check(&mixed_vacuum_joint(&rho, mu)?, &rho)?;
    let printed_a = &vac * re(mu) + &rho * re(1.0 - mu);
    let printed_b = &rho * re(mu) + &vac * re(1.0 - mu);
    rec.check("mixed/trace-a", max_abs_diff(&rep.trace_a, &printed_a), 0.0, 1e-12);
    rec.check("mixed/trace-b", max_abs_diff(&rep.trace_b, &printed_b), 0.0, 1e-12);
    rec.check_flag("mixed/is-broadcast", rep.is_broadcast, false);

    let mix = vacuum_mixture(&rho, mu)?;
    let cand = broadcast_check(&broadcast_candidate(&rho, mu)?, &mix)?;
    rec.check("candidate/trace-a", max_abs_diff(&cand.trace_a, &mix), 0.0, 1e-12);
    rec.check("candidate/trace-b", max_abs_diff(&cand.trace_b, &mix), 0.0, 1e-12);

    let maps = thermal_broadcast_maps(&rho, p, second, n)?;
    let (da, db) = maps.deviations();
    rec.check("thermal-maps/trace-a", da, 0.0, 1e-10);
    rec.check("thermal-maps/trace-b", db, 0.0, 1e-10);
    Ok(())
}

fn overlap(cfg: &ExperimentConfig, p: &ThermalParams, second: &ThermalParams, rec: &mut Recorder) -> Result<()> {
    let n = cfg.cutoff.max(p.cutoff_for_tail(AUTO_TAIL)).max(second.cutoff_for_tail(AUTO_TAIL));
    rec.note("cutoff", n as f64);
    let numeric = crate::thermo::vacuum_overlap(p, second, n).map_err(as_config)?;
    rec.check("vacuum-overlap", numeric.re, analytic_vacuum_overlap(p, second), 1e-9);
    rec.check("vacuum-overlap/imag", numeric.im, 0.0, 1e-15);
    Ok(())
}

fn mixture(cfg: &ExperimentConfig, p: &ThermalParams, second: &ThermalParams, rec: &mut Recorder) -> Result<()> {
    let n = cfg.cutoff;
    let mu = cfg.mu;
    let fock = FockOperators::new(n);
    let mix = TemperatureMixture::new(vec![(p.beta, mu), (second.beta, 1.0 - mu)]).map_err(as_config)?;
    let rho = mixture_density(&mix, p.omega, n)?;
    let v1 = thermal_vacuum(p, n)?.state;
    let v2 = thermal_vacuum(second, n)?.state;
    for (name, op) in test_operators(&fock) {
        let expected =
            mu * expectation_nontilde(&v1, &op)?.re + (1.0 - mu) * expectation_nontilde(&v2, &op)?.re;
        rec.check(format!("mixture/{name}"), trace_of_product(&rho, &op).re, expected, 1e-10);
        let report = superposed_vacuum_report(mu, p, second, &op, n).map_err(as_config)?;
        for engine in cfg.engine.engines() {
            match engine {
                Engine::Abstract => rec.check(format!("superposed/abstract/{name}"), report.abstract_value.re, expected, 1e-10),
                Engine::Numeric => {
                    rec.note(format!("superposed/numeric/{name}"), report.numeric_value.re);
                    rec.note(format!("superposed/cross-term/{name}"), report.cross_term.re);
                }
            }
        }
    }
    Ok(())
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = TfdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(TfdError::Config(format!("unknown format {s:?}"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&round12(x)).unwrap_or_else(|_| x.to_string())
    } else {
        x.to_string()
    }
}

/// Render documents; a single document renders as a JSON object, several as
/// an array. CSV gains a leading `run` column when there are several.
pub fn render(docs: &[ResultDocument], format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = if docs.len() == 1 {
                serde_json::to_string_pretty(&docs[0])
            } else {
                serde_json::to_string_pretty(docs)
            }
            .map_err(|e| TfdError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let grid = docs.len() > 1;
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["name", "value", "expected", "tolerance", "pass"];
            if grid {
                header.insert(0, "run");
            }
            w.write_record(&header).map_err(|e| TfdError::Io(e.to_string()))?;
            for (i, doc) in docs.iter().enumerate() {
                for ch in &doc.checks {
                    let mut row = vec![ch.name.clone(), num(ch.value), num(ch.expected), num(ch.tolerance), ch.pass.to_string()];
                    if grid {
                        row.insert(0, i.to_string());
                    }
                    w.write_record(&row).map_err(|e| TfdError::Io(e.to_string()))?;
                }
            }
            let bytes = w.into_inner().map_err(|e| TfdError::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| TfdError::Io(e.to_string()))
        }
    }
}

/// Write rendered documents to `path`.
pub fn emit_results(docs: &[ResultDocument], format: Format, path: &Path) -> Result<()> {
    let text = render(docs, format)?;
    std::fs::write(path, text).map_err(|e| TfdError::Io(format!("{}: {e}", path.display())))
}

/// One swept key with its values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for GridAxis {
    type Err = TfdError;

    /// `key=v1,v2,...`
    fn from_str(s: &str) -> Result<Self> {
        let (key, vals) = s
            .split_once('=')
            .ok_or_else(|| TfdError::Config(format!("grid axis {s:?} is not key=v1,v2")))?;
        let values: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(TfdError::Config(format!("grid axis {key:?} has no values")));
        }
        Ok(GridAxis { key: key.trim().to_string(), values })
    }
}

/// Cartesian product of the axes over `base`, first axis varying slowest.
pub fn expand_grid(base: &ExperimentConfig, axes: &[GridAxis]) -> Result<Vec<ExperimentConfig>> {
    let mut configs = vec![base.clone()];
    for axis in axes {
        let mut next = Vec::with_capacity(configs.len() * axis.values.len());
        for cfg in &configs {
            for v in &axis.values {
                let mut c = cfg.clone();
                c.set(&axis.key, v)?;
                next.push(c);
            }
        }
        configs = next;
    }
    Ok(configs)
}

/// Run configs on scoped threads; results keep config order.
pub fn run_grid(configs: &[ExperimentConfig], timing: bool) -> Vec<Result<ResultDocument>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len().max(1));
    let chunk = configs.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|c| run_experiment(c, timing)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap_or_else(|_| vec![Err(TfdError::Io("worker panicked".into()))]))
            .collect()
    })
}
