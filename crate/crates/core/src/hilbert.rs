//! Dense linear algebra on truncated Fock spaces.
//!
//! Index ordering is fixed once for the whole crate: a doubled mode is laid
//! out as (non-tilde ⊗ tilde), so `|n, m̃⟩` lives at `n * tilde_dim + m`, and
//! several parties are ordered `A ⊗ B ⊗ C`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, TfdError};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Largest dimension a tensor product may produce unless a limit is passed.
pub const DEFAULT_MAX_DIM: usize = 4096;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Kronecker product for kets and operators.
pub trait Tensor: Sized {
    fn tensor_dim(&self) -> usize;
    fn kron_unchecked(&self, other: &Self) -> Self;
}

impl Tensor for ComplexMatrix {
    fn tensor_dim(&self) -> usize {
        self.nrows()
    }

    fn kron_unchecked(&self, other: &Self) -> Self {
        self.kronecker(other)
    }
}

impl Tensor for StateVector {
    fn tensor_dim(&self) -> usize {
        self.len()
    }

    fn kron_unchecked(&self, other: &Self) -> Self {
        self.kronecker(other)
    }
}

pub fn tensor_product<T: Tensor>(a: &T, b: &T) -> Result<T> {
    tensor_product_with_limit(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_product_with_limit<T: Tensor>(a: &T, b: &T, max_dim: usize) -> Result<T> {
    let dim = a
        .tensor_dim()
        .checked_mul(b.tensor_dim())
        .ok_or(TfdError::Dimension { dim: usize::MAX, max: max_dim })?;
    if dim > max_dim {
        return Err(TfdError::Dimension { dim, max: max_dim });
    }
    Ok(a.kron_unchecked(b))
}

/// Ladder and number operators on the Fock states `|0⟩..|N⟩`.
#[derive(Debug, Clone)]
pub struct FockOperators {
    pub cutoff: usize,
    pub annihilate: ComplexMatrix,
    pub create: ComplexMatrix,
    pub number: ComplexMatrix,
}

impl FockOperators {
    pub fn new(cutoff: usize) -> Self {
        let d = cutoff + 1;
        let mut annihilate = ComplexMatrix::zeros(d, d);
        for n in 1..d {
            annihilate[(n - 1, n)] = re((n as f64).sqrt());
        }
        let create = annihilate.adjoint();
        let number = &create * &annihilate;
        FockOperators { cutoff, annihilate, create, number }
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    /// `[a, a†] - I`. Zero everywhere except the top diagonal entry, which is `-(N+1)`.
    pub fn commutator_defect(&self) -> ComplexMatrix {
        commutator(&self.annihilate, &self.create) - ComplexMatrix::identity(self.dim(), self.dim())
    }

    /// Largest entry of the commutator defect restricted to `|0..N-1⟩`.
    pub fn sub_cutoff_defect(&self) -> f64 {
        let defect = self.commutator_defect();
        let k = self.cutoff;
        defect.view((0, 0), (k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn basis_ket(dim: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[index] = ONE;
    v
}

/// `|n, m̃⟩` in a doubled space with `d` levels per sector.
pub fn pair_ket(d: usize, n: usize, m: usize) -> StateVector {
    basis_ket(d * d, n * d + m)
}

pub fn inner(a: &StateVector, b: &StateVector) -> C64 {
    a.dotc(b)
}

pub fn norm(v: &StateVector) -> f64 {
    v.norm()
}

pub fn normalized(v: &StateVector) -> Result<StateVector> {
    let n = v.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(TfdError::Contract(format!("cannot normalize a vector of norm {n}")));
    }
    Ok(v.unscale(n))
}

pub fn projector(v: &StateVector) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let d = m.nrows();
    (m * m.adjoint() - identity(d)).iter().all(|z| z.norm() <= tol)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Reduced density matrix of one subsystem; `keep` indexes into `dims`.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: usize) -> Result<ComplexMatrix> {
    if keep >= dims.len() {
        return Err(TfdError::Shape(format!(
            "subsystem {keep} out of range for {} subsystems",
            dims.len()
        )));
    }
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.nrows() != total {
        return Err(TfdError::Shape(format!(
            "dims {dims:?} give {total}, matrix is {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let left: usize = dims[..keep].iter().product();
    let mid = dims[keep];
    let right: usize = dims[keep + 1..].iter().product();
    let idx = |l: usize, m: usize, r: usize| (l * mid + m) * right + r;
    Ok(ComplexMatrix::from_fn(mid, mid, |m, mp| {
        let mut acc = ZERO;
        for l in 0..left {
            for r in 0..right {
                acc += rho[(idx(l, m, r), idx(l, mp, r))];
            }
        }
        acc
    }))
}

/// Anything an expectation value can be taken in: a ket or a density matrix.
pub trait QuantumState {
    fn state_dim(&self) -> usize;
    fn expect(&self, op: &ComplexMatrix) -> Result<C64>;
}

impl QuantumState for StateVector {
    fn state_dim(&self) -> usize {
        self.len()
    }

    fn expect(&self, op: &ComplexMatrix) -> Result<C64> {
        check_op_dim(op, self.len())?;
        Ok(self.dotc(&(op * self)))
    }
}

impl QuantumState for ComplexMatrix {
    fn state_dim(&self) -> usize {
        self.nrows()
    }

    fn expect(&self, op: &ComplexMatrix) -> Result<C64> {
        if !self.is_square() {
            return Err(TfdError::Shape("density matrix is not square".into()));
        }
        check_op_dim(op, self.nrows())?;
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(TfdError::Contract(format!("density trace {tr} differs from 1")));
        }
        Ok(trace_of_product(self, op))
    }
}

fn check_op_dim(op: &ComplexMatrix, dim: usize) -> Result<()> {
    if op.nrows() != dim || op.ncols() != dim {
        return Err(TfdError::Shape(format!(
            "operator is {}x{}, state has dimension {dim}",
            op.nrows(),
            op.ncols()
        )));
    }
    Ok(())
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `⟨ψ|O|ψ⟩` for a ket, `Tr(ρ O)` for a density matrix.
pub fn expectation<S: QuantumState + ?Sized>(state: &S, op: &ComplexMatrix) -> Result<C64> {
    state.expect(op)
}

/// `|⟨a|b⟩|²` for normalized kets.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(TfdError::Shape(format!("fidelity of dims {} and {}", a.len(), b.len())));
    }
    for (label, v) in [("first", a), ("second", b)] {
        let dev = (v.norm() - 1.0).abs();
        if dev > 1e-8 {
            return Err(TfdError::Contract(format!("{label} state has norm deviation {dev:e}")));
        }
    }
    Ok(a.dotc(b).norm_sqr())
}

fn check_doubled(psi: &StateVector, d: usize) -> Result<()> {
    if psi.len() != d * d {
        return Err(TfdError::Shape(format!(
            "doubled state of length {} does not match sector dimension {d}",
            psi.len()
        )));
    }
    Ok(())
}

/// View a doubled-space ket as a `d × d` coefficient matrix `M[n, m] = ⟨n, m̃|ψ⟩`.
pub fn as_coefficients(psi: &StateVector, d: usize) -> Result<ComplexMatrix> {
    check_doubled(psi, d)?;
    Ok(ComplexMatrix::from_fn(d, d, |n, m| psi[n * d + m]))
}

pub fn from_coefficients(m: &ComplexMatrix) -> StateVector {
    let d = m.ncols();
    StateVector::from_fn(m.nrows() * d, |i, _| m[(i / d, i % d)])
}

/// `(O ⊗ I)|ψ⟩` without forming the lifted operator.
pub fn apply_nontilde(op: &ComplexMatrix, psi: &StateVector) -> Result<StateVector> {
    let d = op.nrows();
    let m = as_coefficients(psi, d)?;
    Ok(from_coefficients(&(op * m)))
}

/// `(I ⊗ O)|ψ⟩` without forming the lifted operator.
pub fn apply_tilde(op: &ComplexMatrix, psi: &StateVector) -> Result<StateVector> {
    let d = op.nrows();
    let m = as_coefficients(psi, d)?;
    Ok(from_coefficients(&(m * op.transpose())))
}

/// Non-tilde reduced density matrix of a doubled-space ket.
pub fn reduced_nontilde(psi: &StateVector, d: usize) -> Result<ComplexMatrix> {
    let m = as_coefficients(psi, d)?;
    Ok(&m * m.adjoint())
}

/// `⟨ψ|(O ⊗ I)|ψ⟩` on a doubled space.
pub fn expectation_nontilde(psi: &StateVector, op: &ComplexMatrix) -> Result<C64> {
    let d = op.nrows();
    let m = as_coefficients(psi, d)?;
    Ok((m.adjoint() * op * m).trace())
}

/// `O ⊗ I` on the doubled space.
pub fn lift_nontilde(op: &ComplexMatrix, tilde_dim: usize) -> ComplexMatrix {
    op.kronecker(&identity(tilde_dim))
}

/// `I ⊗ O` on the doubled space.
pub fn lift_tilde(op: &ComplexMatrix, nontilde_dim: usize) -> ComplexMatrix {
    identity(nontilde_dim).kronecker(op)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_matrix, random_state, seeded_rng};
    use proptest::prelude::*;

    #[test]
    fn identity_tensor_identity() {
        let i4 = tensor_product(&identity(2), &identity(2)).unwrap();
        assert_eq!(i4, identity(4));
    }

    #[test]
    fn vacuum_tensor_vacuum_is_index_zero() {
        let v = tensor_product(&basis_ket(2, 0), &basis_ket(2, 0)).unwrap();
        assert_eq!(v, basis_ket(4, 0));
    }

    #[test]
    fn lifted_creation_on_pair_ket() {
        let fock = FockOperators::new(2);
        let lifted = tensor_product(&fock.create, &identity(3)).unwrap();
        let out = &lifted * pair_ket(3, 1, 0);
        let expected = pair_ket(3, 2, 0) * re(2f64.sqrt());
        assert!((out - expected).norm() < 1e-15);
    }

    #[test]
    fn tensor_product_respects_limit() {
        let err = tensor_product(&identity(65), &identity(64)).unwrap_err();
        assert_eq!(err, TfdError::Dimension { dim: 4160, max: 4096 });
        assert!(tensor_product_with_limit(&basis_ket(100, 0), &basis_ket(100, 0), 10_000).is_ok());
    }

    #[test]
    fn ladder_operators() {
        let fock = FockOperators::new(5);
        for n in 0..=5 {
            let out = &fock.annihilate * basis_ket(6, n);
            let expected = if n == 0 {
                StateVector::zeros(6)
            } else {
                basis_ket(6, n - 1) * re((n as f64).sqrt())
            };
            assert!((out - expected).norm() < 1e-15);
        }
        assert_eq!(fock.number, &fock.create * &fock.annihilate);
        assert!(fock.sub_cutoff_defect() < 1e-14);
        let defect = fock.commutator_defect();
        assert!((defect[(5, 5)] - re(-6.0)).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = seeded_rng(1);
        let rho = random_density(3, &mut rng);
        let sigma = random_density(2, &mut rng) * re(0.5);
        let joint = rho.kronecker(&sigma);
        let reduced = partial_trace(&joint, &[3, 2], 0).unwrap();
        assert!(max_abs_diff(&reduced, &(&rho * sigma.trace())) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        // explicit 4x4 sum: only the |00⟩,|11⟩ corners survive
        let mut bell = StateVector::zeros(4);
        bell[0] = re(std::f64::consts::FRAC_1_SQRT_2);
        bell[3] = re(std::f64::consts::FRAC_1_SQRT_2);
        let rho = projector(&bell);
        let reduced = partial_trace(&rho, &[2, 2], 1).unwrap();
        assert!(max_abs_diff(&reduced, &(identity(2) * re(0.5))) < 1e-15);
    }

    #[test]
    fn partial_trace_of_mixed_vacuum_joint() {
        let mut rng = seeded_rng(2);
        let rho = random_density(3, &mut rng);
        let vac = projector(&basis_ket(3, 0));
        let mu = 0.3;
        let joint = rho.kronecker(&vac) * re(mu) + vac.kronecker(&rho) * re(1.0 - mu);
        // tracing out A leaves B
        let trace_a = partial_trace(&joint, &[3, 3], 1).unwrap();
        let expected = &vac * re(mu) + &rho * re(1.0 - mu);
        assert!(max_abs_diff(&trace_a, &expected) < 1e-14);
    }

    #[test]
    fn partial_trace_shape_errors() {
        let rho = identity(6);
        assert!(matches!(partial_trace(&rho, &[2, 2], 0), Err(TfdError::Shape(_))));
        assert!(matches!(partial_trace(&rho, &[2, 3], 2), Err(TfdError::Shape(_))));
    }

    #[test]
    fn expectation_basics() {
        let fock = FockOperators::new(4);
        assert_eq!(expectation(&basis_ket(5, 0), &fock.number).unwrap(), ZERO);
        assert!((expectation(&basis_ket(5, 1), &fock.number).unwrap() - ONE).norm() < 1e-15);
        assert!(matches!(
            expectation(&basis_ket(4, 1), &fock.number),
            Err(TfdError::Shape(_))
        ));
        let bad = identity(5);
        assert!(matches!(expectation(&bad, &fock.number), Err(TfdError::Contract(_))));
    }

    #[test]
    fn thermal_mean_by_geometric_series() {
        // p(n) = (3/4)(1/4)^n summed to N = 40
        let n_max = 40;
        let weights: Vec<f64> = (0..=n_max).map(|n| 0.75 * 0.25f64.powi(n as i32)).collect();
        let total: f64 = weights.iter().sum();
        let rho = ComplexMatrix::from_diagonal(&StateVector::from_iterator(
            n_max + 1,
            weights.iter().map(|w| re(w / total)),
        ));
        let fock = FockOperators::new(n_max);
        let mean = expectation(&rho, &fock.number).unwrap();
        assert!((mean.re - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_cases() {
        let mut rng = seeded_rng(3);
        let psi = random_state(7, &mut rng);
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(fidelity(&basis_ket(3, 0), &basis_ket(3, 1)).unwrap(), 0.0);
        let unnormalized = basis_ket(3, 0) * re(1.1);
        assert!(matches!(fidelity(&unnormalized, &basis_ket(3, 0)), Err(TfdError::Contract(_))));
    }

    #[test]
    fn nontilde_helpers_match_lifted_operators() {
        let mut rng = seeded_rng(4);
        let d = 4;
        let psi = random_state(d * d, &mut rng);
        let op = random_matrix(d, &mut rng);
        let lifted = lift_nontilde(&op, d);
        assert!((apply_nontilde(&op, &psi).unwrap() - &lifted * &psi).norm() < 1e-13);
        let tl = lift_tilde(&op, d);
        assert!((apply_tilde(&op, &psi).unwrap() - &tl * &psi).norm() < 1e-13);
        let direct = psi.dotc(&(&lifted * &psi));
        assert!((expectation_nontilde(&psi, &op).unwrap() - direct).norm() < 1e-13);
        let reduced = reduced_nontilde(&psi, d).unwrap();
        let by_trace = partial_trace(&projector(&psi), &[d, d], 0).unwrap();
        assert!(max_abs_diff(&reduced, &by_trace) < 1e-14);
    }

    proptest! {
        #[test]
        fn trace_is_cyclic(seed in any::<u64>(), dim in 1usize..=12) {
            let mut rng = seeded_rng(seed);
            let a = random_matrix(dim, &mut rng);
            let b = random_matrix(dim, &mut rng);
            let ab = (&a * &b).trace();
            let ba = (&b * &a).trace();
            prop_assert!((ab - ba).norm() < 1e-12);
        }

        #[test]
        fn adjoint_is_an_involution(seed in any::<u64>(), dim in 1usize..=8) {
            let mut rng = seeded_rng(seed);
            let a = random_matrix(dim, &mut rng);
            prop_assert_eq!(a.adjoint().adjoint(), a);
        }

        #[test]
        fn partial_traces_preserve_unit_trace(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
            let mut rng = seeded_rng(seed);
            let rho = random_density(da * db, &mut rng);
            for keep in 0..2 {
                let r = partial_trace(&rho, &[da, db], keep).unwrap();
                prop_assert!((r.trace() - ONE).norm() < 1e-10);
            }
        }

        #[test]
        fn tensor_product_is_associative(seed in any::<u64>()) {
            let mut rng = seeded_rng(seed);
            let a = random_matrix(2, &mut rng);
            let b = random_matrix(3, &mut rng);
            let c = random_matrix(2, &mut rng);
            let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
            let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&left, &right) < 1e-14);
        }

        #[test]
        fn ket_and_projector_expectations_agree(seed in any::<u64>(), dim in 1usize..=10) {
            let mut rng = seeded_rng(seed);
            let psi = random_state(dim, &mut rng);
            let op = random_matrix(dim, &mut rng);
            let via_ket = expectation(&psi, &op).unwrap();
            let via_rho = expectation(&projector(&psi), &op).unwrap();
            prop_assert!((via_ket - via_rho).norm() < 1e-12);
        }
    }
}
