//! Teleportation of thermofield qubits.
//!
//! Two engines run the same protocol. The abstract engine works on labelled
//! kets whose distinct labels are orthonormal by definition; the numeric
//! engine uses truncated doubled-Fock vectors and never forms the three-party
//! state, contracting Alice's parties one product term at a time.
//!
//! Thermofield labels `j` live in `Z₂`, so `j + 1` is taken mod 2. The channel
//! and Bell states carry a `1/√2` normalization, which makes every branch
//! occur with probability `1/4`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TfdError};
use crate::hilbert::{pair_ket, re, tensor_product_with_limit, StateVector, C64, DEFAULT_MAX_DIM, ZERO};
use crate::thermo::{excited_thermofield, thermal_vacuum, InverseTemperature, ThermalParams};
use crate::Engine;

/// Amplitudes below this magnitude are dropped from abstract kets.
pub const PRUNE_TOLERANCE: f64 = 1e-15;

/// Branch probabilities must sum to one within this.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Branches whose probability is below this are reported without a Bob state.
const ZERO_BRANCH: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

/// Exact key for an inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TempTag(u64);

impl From<InverseTemperature> for TempTag {
    fn from(b: InverseTemperature) -> Self {
        match b {
            InverseTemperature::Finite(x) => TempTag(x.to_bits()),
            InverseTemperature::Infinite => TempTag(u64::MAX),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// `|j(β)⟩`.
    Thermo { j: u8, temp: TempTag },
    /// `|n, m̃⟩` outside any heat bath.
    Pair { n: u8, tilde: u8 },
}

pub type Label = (Party, Mode);

/// Superposition of orthonormal label tuples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AbstractKet {
    terms: BTreeMap<Vec<Label>, C64>,
}

impl AbstractKet {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<Label>, C64)>>(terms: I) -> Self {
        let mut out = Self::zero();
        for (k, a) in terms {
            out.add(k, a);
        }
        out.prune();
        out
    }

    fn add(&mut self, mut key: Vec<Label>, a: C64) {
        key.sort_by_key(|l| l.0);
        *self.terms.entry(key).or_insert(ZERO) += a;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_TOLERANCE);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Label], C64)> {
        self.terms.iter().map(|(k, a)| (k.as_slice(), *a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, key: &[Label]) -> C64 {
        let mut k = key.to_vec();
        k.sort_by_key(|l| l.0);
        self.terms.get(&k).copied().unwrap_or(ZERO)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &AbstractKet) -> C64 {
        self.terms
            .iter()
            .filter_map(|(k, a)| other.terms.get(k).map(|b| a.conj() * b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> AbstractKet {
        AbstractKet::from_terms(self.terms.iter().map(|(k, a)| (k.clone(), a * s)))
    }

    pub fn plus(&self, other: &AbstractKet) -> AbstractKet {
        AbstractKet::from_terms(self.terms.iter().chain(other.terms.iter()).map(|(k, a)| (k.clone(), *a)))
    }

    pub fn normalized(&self) -> Result<AbstractKet> {
        let n = self.norm();
        if n < PRUNE_TOLERANCE {
            return Err(TfdError::Contract("cannot normalize a zero ket".into()));
        }
        Ok(self.scale(re(1.0 / n)))
    }

    /// Product over disjoint parties.
    pub fn tensor(&self, other: &AbstractKet) -> Result<AbstractKet> {
        let mut out = AbstractKet::zero();
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                if ka.iter().any(|x| kb.iter().any(|y| x.0 == y.0)) {
                    return Err(TfdError::Contract("tensor of kets sharing a party".into()));
                }
                out.add(ka.iter().chain(kb.iter()).copied().collect(), a * b);
            }
        }
        out.prune();
        Ok(out)
    }

    /// `⟨bra|self⟩` over the parties of `bra`, leaving the remaining parties.
    pub fn contract(&self, bra: &AbstractKet) -> AbstractKet {
        let mut out = AbstractKet::zero();
        for (kb, b) in &bra.terms {
            for (ks, a) in &self.terms {
                if kb.iter().all(|l| ks.contains(l)) {
                    let rest: Vec<Label> = ks.iter().filter(|l| !kb.iter().any(|x| x.0 == l.0)).copied().collect();
                    if rest.len() + kb.len() == ks.len() {
                        out.add(rest, b.conj() * a);
                    }
                }
            }
        }
        out.prune();
        out
    }
}

fn thermo(party: Party, j: u8, beta: InverseTemperature) -> Label {
    (party, Mode::Thermo { j: j % 2, temp: beta.into() })
}

fn pair(party: Party, n: u8, tilde: u8) -> Label {
    (party, Mode::Pair { n: n % 2, tilde: tilde % 2 })
}

/// Sign `(-1)^k` for `k ∈ Z₂`.
fn parity(k: u8) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Zero-temperature source patterns `|j, x̃⟩` on `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ZeroTempPattern {
    /// `|j, 0̃⟩`
    #[serde(rename = "00")]
    P00,
    /// `|j, 1̃⟩`
    #[serde(rename = "11")]
    P11,
    /// `|j, (j+1)~⟩`
    #[serde(rename = "01")]
    P01,
    /// `|j, j̃⟩`
    #[serde(rename = "10")]
    P10,
}

impl ZeroTempPattern {
    pub const ALL: [ZeroTempPattern; 4] =
        [ZeroTempPattern::P00, ZeroTempPattern::P11, ZeroTempPattern::P01, ZeroTempPattern::P10];

    /// Tilde index paired with non-tilde `j`.
    pub fn tilde(self, j: u8) -> u8 {
        match self {
            ZeroTempPattern::P00 => 0,
            ZeroTempPattern::P11 => 1,
            ZeroTempPattern::P01 => (j + 1) % 2,
            ZeroTempPattern::P10 => j % 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ZeroTempPattern::P00 => "00",
            ZeroTempPattern::P11 => "11",
            ZeroTempPattern::P01 => "01",
            ZeroTempPattern::P10 => "10",
        }
    }
}

impl FromStr for ZeroTempPattern {
    type Err = TfdError;

    fn from_str(s: &str) -> Result<Self> {
        ZeroTempPattern::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| TfdError::Config(format!("unknown zero-temperature pattern {s:?}")))
    }
}

/// Alice's input qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSpec {
    /// `Σ a_j |j(β)⟩_A`.
    Thermo(ThermalParams),
    /// `Σ a_j |j, x̃⟩_A` outside a heat bath.
    ZeroTemp(ZeroTempPattern),
}

/// Shared `BC` channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    /// `Σ (-1)^j |j(β_B)⟩_B |(j+1)(β_C)⟩_C / √2`.
    Thermo { b: ThermalParams, c: ThermalParams },
    /// `Σ (-1)^j |j(β_B)⟩_B |j+1, (j+1)~⟩_C / √2`, for a source with the given pattern.
    ZeroTemp { pattern: ZeroTempPattern, b: ThermalParams },
}

impl ChannelSpec {
    pub fn bob_params(&self) -> ThermalParams {
        match self {
            ChannelSpec::Thermo { b, .. } | ChannelSpec::ZeroTemp { b, .. } => *b,
        }
    }
}

/// The six protocol variants exercised by experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelVariant {
    Thermo,
    Cross,
    #[serde(rename = "00")]
    Zero00,
    #[serde(rename = "11")]
    Zero11,
    #[serde(rename = "01")]
    Zero01,
    #[serde(rename = "10")]
    Zero10,
}

impl ChannelVariant {
    pub const ALL: [ChannelVariant; 6] = [
        ChannelVariant::Thermo,
        ChannelVariant::Cross,
        ChannelVariant::Zero00,
        ChannelVariant::Zero11,
        ChannelVariant::Zero01,
        ChannelVariant::Zero10,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelVariant::Thermo => "thermo",
            ChannelVariant::Cross => "cross",
            ChannelVariant::Zero00 => "00",
            ChannelVariant::Zero11 => "11",
            ChannelVariant::Zero01 => "01",
            ChannelVariant::Zero10 => "10",
        }
    }

    fn pattern(self) -> Option<ZeroTempPattern> {
        match self {
            ChannelVariant::Zero00 => Some(ZeroTempPattern::P00),
            ChannelVariant::Zero11 => Some(ZeroTempPattern::P11),
            ChannelVariant::Zero01 => Some(ZeroTempPattern::P01),
            ChannelVariant::Zero10 => Some(ZeroTempPattern::P10),
            _ => None,
        }
    }

    /// Source and channel for Alice at `alice` and Bob at `bob`.
    ///
    /// `Thermo` puts both at Alice's temperature and ignores `bob`.
    pub fn specs(self, alice: ThermalParams, bob: ThermalParams) -> (SourceSpec, ChannelSpec) {
        match self {
            ChannelVariant::Thermo => (SourceSpec::Thermo(alice), ChannelSpec::Thermo { b: alice, c: alice }),
            ChannelVariant::Cross => (SourceSpec::Thermo(alice), ChannelSpec::Thermo { b: bob, c: alice }),
            v => {
                let pattern = v.pattern().expect("zero-temperature variant");
                (SourceSpec::ZeroTemp(pattern), ChannelSpec::ZeroTemp { pattern, b: bob })
            }
        }
    }
}

impl fmt::Display for ChannelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelVariant {
    type Err = TfdError;

    fn from_str(s: &str) -> Result<Self> {
        ChannelVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| TfdError::Config(format!("unknown channel variant {s:?}")))
    }
}

/// `Ψ` pairs `j` with `j+1` on `C`, `Φ` pairs `j` with `j`. For zero-temperature
/// sources these are the `b⁽¹⁾` and `b⁽²⁾` families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellFamily {
    Psi,
    Phi,
}

/// Measured branch, also the two-bit classical message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Branch {
    pub family: BellFamily,
    pub sign: i8,
}

impl Branch {
    pub const ALL: [Branch; 4] = [
        Branch { family: BellFamily::Psi, sign: 1 },
        Branch { family: BellFamily::Psi, sign: -1 },
        Branch { family: BellFamily::Phi, sign: 1 },
        Branch { family: BellFamily::Phi, sign: -1 },
    ];

    pub fn new(family: BellFamily, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(TfdError::Domain(format!("Bell sign must be ±1, got {sign}")));
        }
        Ok(Branch { family, sign })
    }

    fn s_pow(self, k: u8) -> f64 {
        if self.sign < 0 {
            parity(k)
        } else {
            1.0
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            BellFamily::Psi => "psi",
            BellFamily::Phi => "phi",
        };
        write!(f, "{fam}{}", if self.sign > 0 { "+" } else { "-" })
    }
}

/// One mode of one party.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Thermo(u8, ThermalParams),
    Pair(u8, u8),
}

impl Slot {
    fn label(self, party: Party) -> Label {
        match self {
            Slot::Thermo(j, p) => thermo(party, j, p.beta),
            Slot::Pair(n, m) => pair(party, n, m),
        }
    }
}

/// A bipartite state as a sum of coefficient-weighted product terms.
#[derive(Debug, Clone, PartialEq)]
struct ProductSum {
    parties: (Party, Party),
    terms: Vec<(f64, Slot, Slot)>,
}

impl ProductSum {
    fn abstract_ket(&self) -> AbstractKet {
        AbstractKet::from_terms(
            self.terms
                .iter()
                .map(|(w, x, y)| (vec![x.label(self.parties.0), y.label(self.parties.1)], re(*w))),
        )
    }
}

fn channel_terms(channel: &ChannelSpec) -> ProductSum {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let terms = (0u8..2)
        .map(|j| {
            let b = Slot::Thermo(j, channel.bob_params());
            let c = match channel {
                ChannelSpec::Thermo { c, .. } => Slot::Thermo((j + 1) % 2, *c),
                ChannelSpec::ZeroTemp { .. } => Slot::Pair((j + 1) % 2, (j + 1) % 2),
            };
            (parity(j) * h, b, c)
        })
        .collect();
    ProductSum { parties: (Party::B, Party::C), terms }
}

fn source_slot(source: &SourceSpec, j: u8) -> Slot {
    match source {
        SourceSpec::Thermo(p) => Slot::Thermo(j, *p),
        SourceSpec::ZeroTemp(pat) => Slot::Pair(j, pat.tilde(j)),
    }
}

fn bell_terms(branch: Branch, source: &SourceSpec) -> ProductSum {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let terms = (0u8..2)
        .map(|j| {
            let k = match branch.family {
                BellFamily::Psi => (j + 1) % 2,
                BellFamily::Phi => j,
            };
            let c = match source {
                SourceSpec::Thermo(p) => Slot::Thermo(k, *p),
                SourceSpec::ZeroTemp(_) => Slot::Pair(k, k),
            };
            (branch.s_pow(j) * h, source_slot(source, j), c)
        })
        .collect();
    ProductSum { parties: (Party::A, Party::C), terms }
}

fn validate(source: &SourceSpec, channel: &ChannelSpec) -> Result<()> {
    match (source, channel) {
        (SourceSpec::Thermo(a), ChannelSpec::Thermo { c, .. }) => {
            if TempTag::from(a.beta) != TempTag::from(c.beta) || a.omega != c.omega {
                return Err(TfdError::Config(
                    "Alice's channel half must share the source temperature".into(),
                ));
            }
            Ok(())
        }
        (SourceSpec::ZeroTemp(p), ChannelSpec::ZeroTemp { pattern, .. }) if p == pattern => Ok(()),
        _ => Err(TfdError::Config("source and channel variants do not match".into())),
    }
}

/// Alice's input as an abstract ket on `A`.
pub fn source_ket(a: [C64; 2], source: &SourceSpec) -> AbstractKet {
    AbstractKet::from_terms((0u8..2).map(|j| (vec![source_slot(source, j).label(Party::A)], a[j as usize])))
}

/// The `BC` channel as an abstract ket.
pub fn build_channel(channel: &ChannelSpec) -> AbstractKet {
    channel_terms(channel).abstract_ket()
}

/// Normalized Bell element on `AC` matching the source.
pub fn bell_basis(branch: Branch, source: &SourceSpec) -> AbstractKet {
    bell_terms(branch, source).abstract_ket()
}

/// `Σ a_j |j(β)⟩_B` with Bob's tag.
pub fn bob_target(a: [C64; 2], bob: &ThermalParams) -> AbstractKet {
    AbstractKet::from_terms((0u8..2).map(|j| (vec![thermo(Party::B, j, bob.beta)], a[j as usize])))
}

/// `(⟨bell| ⊗ I_B)|ψ_ABC⟩` and its squared norm.
pub fn alice_measure(state_abc: &AbstractKet, bell: &AbstractKet) -> (AbstractKet, f64) {
    let residual = state_abc.contract(bell);
    let p = residual.norm().powi(2);
    if p < ZERO_BRANCH {
        return (AbstractKet::zero(), 0.0);
    }
    (residual, p)
}

/// Bob's operator for a message, as `(coefficient, out j, in j)` entries on
/// his thermofield labels.
fn correction_entries(message: Branch) -> [(f64, u8, u8); 2] {
    let mut out = [(0.0, 0, 0); 2];
    for j in 0u8..2 {
        out[j as usize] = match message.family {
            BellFamily::Psi => (parity(j) * message.s_pow(j), j, j),
            BellFamily::Phi => (parity(j) * message.s_pow(j + 1), (j + 1) % 2, j),
        };
    }
    out
}

/// Bob's correction on his residual, without normalization.
pub fn apply_correction(bob_ket: &AbstractKet, message: Branch, bob: &ThermalParams) -> AbstractKet {
    AbstractKet::from_terms(correction_entries(message).into_iter().map(|(w, out, inp)| {
        let amp = bob_ket.amplitude(&[thermo(Party::B, inp, bob.beta)]);
        (vec![thermo(Party::B, out, bob.beta)], amp * w)
    }))
}

/// Bob's correction followed by normalization.
pub fn bob_correct(bob_ket: &AbstractKet, message: Branch, bob: &ThermalParams) -> Result<AbstractKet> {
    apply_correction(bob_ket, message, bob).normalized()
}

#[derive(Debug, Clone)]
pub enum BobState {
    Abstract(AbstractKet),
    Numeric(StateVector),
}

#[derive(Debug, Clone, Serialize)]
pub struct TeleportOutcome {
    pub branch: Branch,
    pub message: Branch,
    pub probability: f64,
    /// Bob's residual before correction, in his `|j(β_B)⟩` basis.
    pub residual_amplitudes: [C64; 2],
    /// Bob's corrected, normalized state in his `|j(β_B)⟩` basis.
    pub bob_amplitudes: [C64; 2],
    #[serde(skip)]
    pub bob_state: Option<BobState>,
    /// Against `Σ a_j|j(β_B)⟩`.
    pub fidelity: f64,
    /// Numeric only: against `Σ a_j|j(β_A)⟩`, which includes the overlap
    /// between thermofield states at the two temperatures.
    pub source_fidelity: Option<f64>,
    pub engine: Engine,
}

/// Branch selection for [`run_teleport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSelection {
    All,
    Chosen(Branch),
}

impl BranchSelection {
    fn branches(self) -> Vec<Branch> {
        match self {
            BranchSelection::All => Branch::ALL.to_vec(),
            BranchSelection::Chosen(b) => vec![b],
        }
    }
}

/// Numeric engine resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericOptions {
    pub cutoff: usize,
}

fn check_amplitudes(a: [C64; 2]) -> Result<()> {
    let n2 = a[0].norm_sqr() + a[1].norm_sqr();
    if (n2 - 1.0).abs() > 1e-10 {
        return Err(TfdError::Contract(format!("amplitudes have |a0|²+|a1|² = {n2}")));
    }
    Ok(())
}

/// Run the protocol over the selected branches.
///
/// With a message other than the measured branch Bob's fidelity drops below
/// one; see [`message_mismatch`].
pub fn run_teleport(
    a: [C64; 2],
    source: &SourceSpec,
    channel: &ChannelSpec,
    engine: Engine,
    branches: BranchSelection,
    numeric: NumericOptions,
) -> Result<Vec<TeleportOutcome>> {
    check_amplitudes(a)?;
    validate(source, channel)?;
    let outcomes = match engine {
        Engine::Abstract => abstract_run(a, source, channel, branches, None)?,
        Engine::Numeric => NumericEngine::new(source, channel, numeric.cutoff)?.run(a, branches, None)?,
    };
    if branches == BranchSelection::All {
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(TfdError::Consistency {
                what: "branch probability sum".into(),
                deviation: (total - 1.0).abs(),
                tolerance: PROBABILITY_SUM_TOLERANCE,
            });
        }
    }
    Ok(outcomes)
}

/// Outcome when Bob acts on `message` after `measured` was obtained.
pub fn message_mismatch(
    a: [C64; 2],
    source: &SourceSpec,
    channel: &ChannelSpec,
    measured: Branch,
    message: Branch,
) -> Result<TeleportOutcome> {
    check_amplitudes(a)?;
    validate(source, channel)?;
    let mut out = abstract_run(a, source, channel, BranchSelection::Chosen(measured), Some(message))?;
    Ok(out.remove(0))
}

fn bob_amplitudes(ket: &AbstractKet, bob: &ThermalParams) -> [C64; 2] {
    [0u8, 1].map(|j| ket.amplitude(&[thermo(Party::B, j, bob.beta)]))
}

fn abstract_run(
    a: [C64; 2],
    source: &SourceSpec,
    channel: &ChannelSpec,
    branches: BranchSelection,
    message: Option<Branch>,
) -> Result<Vec<TeleportOutcome>> {
    let bob = channel.bob_params();
    let state = source_ket(a, source).tensor(&build_channel(channel))?;
    let target = bob_target(a, &bob);
    branches
        .branches()
        .into_iter()
        .map(|branch| {
            let msg = message.unwrap_or(branch);
            let (residual, probability) = alice_measure(&state, &bell_basis(branch, source));
            let residual_amplitudes = bob_amplitudes(&residual, &bob);
            if probability == 0.0 {
                return Ok(empty_outcome(branch, msg, residual_amplitudes, Engine::Abstract));
            }
            let corrected = apply_correction(&residual, msg, &bob);
            let (bob_state, fidelity) = if corrected.is_empty() {
                (AbstractKet::zero(), 0.0)
            } else {
                let k = corrected.normalized()?;
                let f = target.inner(&k).norm_sqr();
                (k, f)
            };
            Ok(TeleportOutcome {
                branch,
                message: msg,
                probability,
                residual_amplitudes,
                bob_amplitudes: bob_amplitudes(&bob_state, &bob),
                bob_state: Some(BobState::Abstract(bob_state)),
                fidelity,
                source_fidelity: None,
                engine: Engine::Abstract,
            })
        })
        .collect()
}

fn empty_outcome(branch: Branch, message: Branch, residual_amplitudes: [C64; 2], engine: Engine) -> TeleportOutcome {
    TeleportOutcome {
        branch,
        message,
        probability: 0.0,
        residual_amplitudes,
        bob_amplitudes: [ZERO; 2],
        bob_state: None,
        fidelity: 0.0,
        source_fidelity: None,
        engine,
    }
}

/// Truncated-Fock vectors for every slot the protocol touches.
struct NumericEngine {
    source: SourceSpec,
    channel: ChannelSpec,
    cutoff: usize,
    cache: Vec<(Slot, StateVector)>,
}

impl NumericEngine {
    fn new(source: &SourceSpec, channel: &ChannelSpec, cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(TfdError::Domain("numeric teleportation needs cutoff >= 1".into()));
        }
        let mut eng = NumericEngine { source: *source, channel: *channel, cutoff, cache: Vec::new() };
        let mut params = vec![channel.bob_params()];
        if let SourceSpec::Thermo(p) = source {
            params.push(*p);
        }
        for p in params {
            if eng.cache.iter().any(|(s, _)| *s == Slot::Thermo(0, p)) {
                continue;
            }
            let vac = thermal_vacuum(&p, cutoff)?.state;
            let exc = excited_thermofield(&p, cutoff)?.state;
            eng.cache.push((Slot::Thermo(0, p), vac));
            eng.cache.push((Slot::Thermo(1, p), exc));
        }
        Ok(eng)
    }

    fn vector(&self, slot: Slot) -> StateVector {
        match slot {
            Slot::Pair(n, m) => pair_ket(self.cutoff + 1, n as usize, m as usize),
            Slot::Thermo(..) => {
                self.cache.iter().find(|(s, _)| *s == slot).map(|(_, v)| v.clone()).expect("cached thermofield")
            }
        }
    }

    fn qubit(&self, a: [C64; 2], p: ThermalParams) -> StateVector {
        self.vector(Slot::Thermo(0, p)) * a[0] + self.vector(Slot::Thermo(1, p)) * a[1]
    }

    /// Bob's residual `Σ_{bell,chan} w_b w_c ⟨x|ψ_A⟩ ⟨y|q⟩ |p⟩`.
    fn residual(&self, psi_a: &StateVector, bell: &ProductSum, chan: &ProductSum) -> StateVector {
        let d = (self.cutoff + 1).pow(2);
        let mut out = StateVector::zeros(d);
        for (wb, x, y) in &bell.terms {
            let ax = self.vector(*x).dotc(psi_a);
            if ax.norm() == 0.0 {
                continue;
            }
            let yv = self.vector(*y);
            for (wc, p, q) in &chan.terms {
                let cq = yv.dotc(&self.vector(*q));
                if cq.norm() != 0.0 {
                    out += self.vector(*p) * (ax * cq * re(wb * wc));
                }
            }
        }
        out
    }

    fn correct(&self, residual: &StateVector, message: Branch) -> StateVector {
        let bob = self.channel.bob_params();
        let d = residual.len();
        let mut out = StateVector::zeros(d);
        for (w, o, i) in correction_entries(message) {
            let amp = self.vector(Slot::Thermo(i, bob)).dotc(residual);
            out += self.vector(Slot::Thermo(o, bob)) * (amp * re(w));
        }
        out
    }

    fn coordinates(&self, v: &StateVector) -> [C64; 2] {
        let bob = self.channel.bob_params();
        [0u8, 1].map(|j| self.vector(Slot::Thermo(j, bob)).dotc(v))
    }

    fn run(&self, a: [C64; 2], branches: BranchSelection, message: Option<Branch>) -> Result<Vec<TeleportOutcome>> {
        let bob = self.channel.bob_params();
        let psi_a = (0u8..2).fold(StateVector::zeros((self.cutoff + 1).pow(2)), |acc, j| {
            acc + self.vector(source_slot(&self.source, j)) * a[j as usize]
        });
        let chan = channel_terms(&self.channel);
        let target = self.qubit(a, bob);
        let source_target = match self.source {
            SourceSpec::Thermo(p) => Some(self.qubit(a, p)),
            SourceSpec::ZeroTemp(_) => None,
        };
        branches
            .branches()
            .into_iter()
            .map(|branch| {
                let msg = message.unwrap_or(branch);
                let residual = self.residual(&psi_a, &bell_terms(branch, &self.source), &chan);
                let probability = residual.norm_squared();
                let residual_amplitudes = self.coordinates(&residual);
                if probability < ZERO_BRANCH {
                    return Ok(empty_outcome(branch, msg, residual_amplitudes, Engine::Numeric));
                }
                let corrected = self.correct(&residual, msg);
                let n = corrected.norm();
                if n < PRUNE_TOLERANCE {
                    let mut o = empty_outcome(branch, msg, residual_amplitudes, Engine::Numeric);
                    o.probability = probability;
                    return Ok(o);
                }
                let state = corrected.unscale(n);
                let fidelity = target.dotc(&state).norm_sqr() / target.norm_squared();
                let source_fidelity =
                    source_target.as_ref().map(|t| t.dotc(&state).norm_sqr() / t.norm_squared());
                Ok(TeleportOutcome {
                    branch,
                    message: msg,
                    probability,
                    residual_amplitudes,
                    bob_amplitudes: self.coordinates(&state),
                    bob_state: Some(BobState::Numeric(state)),
                    fidelity,
                    source_fidelity,
                    engine: Engine::Numeric,
                })
            })
            .collect()
    }
}

/// Dense `AC` vector of a Bell element, for small cutoffs.
pub fn bell_vector(branch: Branch, source: &SourceSpec, cutoff: usize) -> Result<StateVector> {
    let channel = match source {
        SourceSpec::Thermo(p) => ChannelSpec::Thermo { b: *p, c: *p },
        SourceSpec::ZeroTemp(pattern) => ChannelSpec::ZeroTemp {
            pattern: *pattern,
            b: crate::thermo::bogoliubov_params(InverseTemperature::Infinite, 1.0)?,
        },
    };
    let eng = NumericEngine::new(source, &channel, cutoff)?;
    let d = (cutoff + 1).pow(2);
    let mut out = StateVector::zeros(d * d);
    for (w, x, y) in bell_terms(branch, source).terms {
        out += tensor_product_with_limit(&eng.vector(x), &eng.vector(y), DEFAULT_MAX_DIM)? * re(w);
    }
    Ok(out)
}
