//! Block-encodings as explicit unitaries, with the composition rules used by
//! the solvers and an attached query ledger.
//!
//! Qubit order: ancillas are more significant than system qubits, and new
//! ancillas are prepended. The all-zero ancilla block is therefore the
//! top-left `2^n × 2^n` corner. Identity padding ancillas are kept factored
//! out: the full unitary is `I_{2^idle} ⊗ core`. Composition may move padding
//! qubits to the front, which is a relabeling of ancillas that fixes |0…0⟩.

use num_complex::Complex64;

use crate::error::{FfodeError, Result};
use crate::ledger::{self, QueryLedger};
use crate::matrix::{
    self, hermitian_function, hermitian_part, hermiticity_defect, identity, kron, log2_exact, r, spectral_norm,
    unitarity_defect, ComplexMatrix, ComplexVector, ZERO,
};
use crate::poly_approx::{lobatto_grid, RealPolynomial};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEncoding {
    core: ComplexMatrix,
    idle: usize,
    dim: usize,
    /// `⌈log₂ N⌉` for system dimension N.
    pub system_qubits: usize,
    pub ancilla_qubits: usize,
    pub alpha: f64,
    pub epsilon_claim: f64,
    pub ledger: QueryLedger,
    pub target: Option<ComplexMatrix>,
}

/// Constants hidden in query-cost big-O statements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostConstants {
    /// inverse: `ceil(c·(1/δ)·log(1/(δε)))` uses
    pub invert: f64,
    /// amplification: `ceil(c·(1/δ)·log(1/ε))` uses
    pub amplify: f64,
    /// QSVT: `c·(n_A + 1)·d` single-qubit gates
    pub poly_gates: f64,
}

impl Default for CostConstants {
    fn default() -> Self {
        CostConstants { invert: 1.0, amplify: 1.0, poly_gates: 1.0 }
    }
}

fn slack(alpha: f64) -> f64 {
    tol::get().reconstruction * (1.0 + alpha)
}

fn check_core_unitary(core: &ComplexMatrix) -> Result<()> {
    let d = unitarity_defect(core);
    if d > tol::get().unitary {
        return Err(FfodeError::NotUnitary(d));
    }
    Ok(())
}

impl BlockEncoding {
    pub fn core(&self) -> &ComplexMatrix {
        &self.core
    }

    pub fn idle_ancillas(&self) -> usize {
        self.idle
    }

    pub fn system_dim(&self) -> usize {
        self.dim
    }

    /// The full `2^{n+a}` unitary.
    pub fn unitary(&self) -> ComplexMatrix {
        if self.idle == 0 {
            self.core.clone()
        } else {
            kron(&identity(1 << self.idle), &self.core)
        }
    }

    /// `(⟨0|_a ⊗ I) U (|0⟩_a ⊗ I)`.
    pub fn block(&self) -> ComplexMatrix {
        let n = self.system_dim();
        self.core.view((0, 0), (n, n)).into_owned()
    }

    /// `α · block`, the operator this encoding actually applies.
    pub fn encoded(&self) -> ComplexMatrix {
        self.block() * r(self.alpha)
    }

    pub fn with_ledger(mut self, ledger: QueryLedger) -> Self {
        self.ledger = ledger;
        self
    }

    /// Ledger of a single query to the named oracle.
    pub fn as_oracle(self, name: &str) -> Self {
        self.with_ledger(QueryLedger::single(name))
    }

    pub fn with_target(mut self, target: ComplexMatrix) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon_claim = eps;
        self
    }

    /// `‖A − α·block‖` against the attached target.
    pub fn measured_error(&self) -> Result<f64> {
        let t = self.target.as_ref().ok_or_else(|| FfodeError::InvalidParameter("no target attached".into()))?;
        measured_error(self, t)
    }

    pub fn verify(&self) -> Result<f64> {
        let t = self.target.as_ref().ok_or_else(|| FfodeError::InvalidParameter("no target attached".into()))?;
        verify_block_encoding(self, t)
    }

    /// Same unitary read as a `(1, a, ε/α)` encoding of `A/α`.
    pub fn unit_normalized(&self) -> BlockEncoding {
        let mut b = self.clone();
        b.alpha = 1.0;
        b.epsilon_claim = self.epsilon_claim / self.alpha;
        b.target = self.target.as_ref().map(|t| t.unscale(self.alpha));
        b
    }

    /// `k` extra identity ancillas; the block is unchanged.
    pub fn padded(&self, k: usize) -> BlockEncoding {
        let mut b = self.clone();
        b.idle += k;
        b.ancilla_qubits += k;
        b
    }

    /// Core with `keep` of the idle ancillas materialized.
    fn expanded_core(&self, keep_idle: usize) -> ComplexMatrix {
        let m = self.idle - keep_idle;
        if m == 0 {
            self.core.clone()
        } else {
            kron(&identity(1 << m), &self.core)
        }
    }

    /// Apply the full unitary to `|0⟩_a ⊗ x` and return the ancilla-0 part,
    /// scaled by α.
    pub fn apply(&self, x: &ComplexVector) -> Result<ComplexVector> {
        if x.len() != self.system_dim() {
            return Err(FfodeError::ShapeMismatch(format!("vector of length {} for system dim {}", x.len(), self.system_dim())));
        }
        Ok(self.encoded() * x)
    }
}

/// `(α, 1, 0)` unitary completion of `a/α` for `a` of dimension `2^n`.
pub fn exact_dilation(a: &ComplexMatrix, alpha: f64) -> Result<BlockEncoding> {
    log2_exact(a.nrows())?;
    dilation(a, alpha)
}

fn qubits_for(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

/// Unitary completion for a system register of any dimension N (qudit).
pub fn dilation(a: &ComplexMatrix, alpha: f64) -> Result<BlockEncoding> {
    if a.nrows() != a.ncols() {
        return Err(FfodeError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.nrows() == 0 {
        return Err(FfodeError::InvalidParameter("empty matrix".into()));
    }
    let n = qubits_for(a.nrows());
    if !(alpha > 0.0) {
        return Err(FfodeError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let norm = spectral_norm(a);
    if norm > alpha * (1.0 + 1e-12) {
        return Err(FfodeError::NormExceedsAlpha { norm, alpha });
    }
    let dim = a.nrows();
    // entries this small only feed underflow in the SVD sweeps
    let m = a.unscale(alpha).map(|z| if z.norm() < 1e-100 { Complex64::new(0.0, 0.0) } else { z });
    // SVD form keeps the four blocks mutually consistent: M = WΣV†,
    // √(I−MM†) = W S W†, √(I−M†M) = V S V† with S = √(I−Σ²).
    let svd = m.clone().svd(true, true);
    let w = svd.u.ok_or_else(|| FfodeError::Numeric("SVD failed".into()))?;
    let vt = svd.v_t.ok_or_else(|| FfodeError::Numeric("SVD failed".into()))?;
    let v = vt.adjoint();
    let sig: Vec<Complex64> = svd.singular_values.iter().map(|&x| r(x.min(1.0))).collect();
    let s: Vec<Complex64> = svd.singular_values.iter().map(|&x| r((1.0 - x * x).max(0.0).sqrt())).collect();
    let sig = matrix::diag(&sig);
    let s = matrix::diag(&s);
    let m_clean = &w * &sig * &vt;
    let mh = m_clean.adjoint();
    let top = &w * &s * w.adjoint();
    let bottom = &v * &s * &vt;
    let mut u = ComplexMatrix::zeros(2 * dim, 2 * dim);
    u.view_mut((0, 0), (dim, dim)).copy_from(&m_clean);
    u.view_mut((0, dim), (dim, dim)).copy_from(&top);
    u.view_mut((dim, 0), (dim, dim)).copy_from(&bottom);
    u.view_mut((dim, dim), (dim, dim)).copy_from(&(-mh));
    check_core_unitary(&u)?;
    Ok(BlockEncoding {
        core: u,
        idle: 0,
        dim,
        system_qubits: n,
        ancilla_qubits: 1,
        alpha,
        epsilon_claim: 0.0,
        ledger: QueryLedger::new(),
        target: Some(a.clone()),
    })
}

/// Zero-ancilla encoding of a unitary (e.g. the identity).
pub fn from_unitary(u: &ComplexMatrix) -> Result<BlockEncoding> {
    if u.nrows() != u.ncols() || u.nrows() == 0 {
        return Err(FfodeError::NotSquare { rows: u.nrows(), cols: u.ncols() });
    }
    check_core_unitary(u)?;
    Ok(BlockEncoding {
        core: u.clone(),
        idle: 0,
        dim: u.nrows(),
        system_qubits: qubits_for(u.nrows()),
        ancilla_qubits: 0,
        alpha: 1.0,
        epsilon_claim: 0.0,
        ledger: QueryLedger::new(),
        target: Some(u.clone()),
    })
}

pub fn identity_encoding(system_qubits: usize) -> BlockEncoding {
    identity_encoding_dim(1 << system_qubits)
}

pub fn identity_encoding_dim(n: usize) -> BlockEncoding {
    from_unitary(&identity(n)).expect("identity is unitary")
}

pub fn measured_error(be: &BlockEncoding, target: &ComplexMatrix) -> Result<f64> {
    if target.shape() != (be.system_dim(), be.system_dim()) {
        return Err(FfodeError::ShapeMismatch(format!("target {:?} vs system dim {}", target.shape(), be.system_dim())));
    }
    Ok(spectral_norm(&(target - be.encoded())))
}

/// Measured error, required to be within the claim.
pub fn verify_block_encoding(be: &BlockEncoding, target: &ComplexMatrix) -> Result<f64> {
    let e = measured_error(be, target)?;
    if e > be.epsilon_claim + slack(be.alpha) {
        return Err(FfodeError::EncodingError { measured: e, claimed: be.epsilon_claim });
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatePreparationPair {
    pub left: ComplexMatrix,
    pub right: ComplexMatrix,
    pub beta: f64,
}

impl StatePreparationPair {
    pub fn new(left: ComplexMatrix, right: ComplexMatrix, beta: f64) -> Result<Self> {
        if left.shape() != right.shape() {
            return Err(FfodeError::ShapeMismatch("pair unitaries differ in shape".into()));
        }
        log2_exact(left.nrows())?;
        check_core_unitary(&left)?;
        check_core_unitary(&right)?;
        if !(beta > 0.0) {
            return Err(FfodeError::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(StatePreparationPair { left, right, beta })
    }

    /// Pair for `y` with `β = ‖y‖₁`, `c_j = √(|y_j|/β)`, `d_j = c_j·phase(y_j)`.
    pub fn for_coefficients(y: &[Complex64]) -> Result<Self> {
        log2_exact(y.len())?;
        let beta: f64 = y.iter().map(|z| z.norm()).sum();
        if beta == 0.0 {
            return Err(FfodeError::ZeroVector);
        }
        let cvec = ComplexVector::from_iterator(y.len(), y.iter().map(|z| r((z.norm() / beta).sqrt())));
        let dvec = ComplexVector::from_iterator(
            y.len(),
            y.iter().map(|z| if z.norm() == 0.0 { ZERO } else { (z / z.norm()) * (z.norm() / beta).sqrt() }),
        );
        let left = matrix::unitary_with_first_column(&cvec)?;
        let right = matrix::unitary_with_first_column(&dvec)?;
        Self::new(left, right, beta)
    }

    /// Single-qubit pair of `R_y` rotations.
    pub fn from_rotations(theta_left: f64, theta_right: f64, beta: f64) -> Result<Self> {
        Self::new(ry(theta_left), ry(theta_right), beta)
    }

    pub fn hadamard() -> Self {
        let h = hadamard();
        StatePreparationPair { left: h.clone(), right: h, beta: 1.0 }
    }

    pub fn control_qubits(&self) -> usize {
        self.left.nrows().trailing_zeros() as usize
    }

    /// `y_j = β·conj(c_j)·d_j`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        (0..self.left.nrows()).map(|j| self.left[(j, 0)].conj() * self.right[(j, 0)] * self.beta).collect()
    }

    /// `‖y‖₁ ≤ β`.
    pub fn is_valid(&self) -> bool {
        self.coefficients().iter().map(|z| z.norm()).sum::<f64>() <= self.beta * (1.0 + 1e-12)
    }
}

/// `R_y(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
pub fn ry(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_row_slice(2, 2, &[r(c), r(-s), r(s), r(c)])
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_row_slice(2, 2, &[r(h), r(h), r(h), r(-h)])
}

/// `(P_L† ⊗ I)(Σ_j |j⟩⟨j| ⊗ U_j)(P_R ⊗ I)`: a `(αβ, a+k, αβε)` encoding of
/// `Σ y_j A_j`. Blocks must share α; ancilla counts are equalized by padding.
pub fn lcu_combine(prep: &StatePreparationPair, blocks: &[BlockEncoding]) -> Result<BlockEncoding> {
    let count = prep.left.nrows();
    if blocks.len() != count {
        return Err(FfodeError::ShapeMismatch(format!("{} blocks for a {}-term pair", blocks.len(), count)));
    }
    let n = blocks[0].dim;
    let alpha = blocks[0].alpha;
    for b in blocks {
        if b.dim != n {
            return Err(FfodeError::ShapeMismatch("blocks act on different system sizes".into()));
        }
        if (b.alpha - alpha).abs() > 1e-12 * alpha.max(1.0) {
            return Err(FfodeError::InvalidParameter(format!("blocks must share alpha ({} vs {})", b.alpha, alpha)));
        }
    }
    let a = blocks.iter().map(|b| b.ancilla_qubits).max().unwrap();
    let blocks: Vec<BlockEncoding> = blocks.iter().map(|b| b.padded(a - b.ancilla_qubits)).collect();
    let idle = blocks.iter().map(|b| b.idle).min().unwrap();
    let cores: Vec<ComplexMatrix> = blocks.iter().map(|b| b.expanded_core(idle)).collect();
    let cd = cores[0].nrows();
    let k = prep.control_qubits();
    let mut select = ComplexMatrix::zeros(count * cd, count * cd);
    for (j, c) in cores.iter().enumerate() {
        select.view_mut((j * cd, j * cd), (cd, cd)).copy_from(c);
    }
    let eye = identity(cd);
    let core = kron(&prep.left.adjoint(), &eye) * select * kron(&prep.right, &eye);
    check_core_unitary(&core)?;
    let y = prep.coefficients();
    let target = if blocks.iter().all(|b| b.target.is_some()) {
        let mut t = ComplexMatrix::zeros(n, n);
        for (yj, b) in y.iter().zip(&blocks) {
            t += b.target.as_ref().unwrap() * *yj;
        }
        Some(t)
    } else {
        None
    };
    let eps = blocks.iter().map(|b| b.epsilon_claim).fold(0.0, f64::max);
    let mut ledger = QueryLedger::single(ledger::PREP_PAIR);
    for b in &blocks {
        ledger.merge(&b.ledger);
    }
    Ok(BlockEncoding {
        core,
        idle,
        dim: n,
        system_qubits: qubits_for(n),
        ancilla_qubits: a + k,
        alpha: alpha * prep.beta,
        epsilon_claim: alpha * prep.beta * eps,
        ledger,
        target,
    })
}

/// Embed `u`, acting on (ancilla block of size `da`, system of size `ds`),
/// as `I_{dm}` on a middle register: layout (outer, middle, system).
fn interleave(u: &ComplexMatrix, da: usize, dm: usize, ds: usize) -> ComplexMatrix {
    let dim = da * dm * ds;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for ia in 0..da {
        for is in 0..ds {
            let row_u = ia * ds + is;
            for ja in 0..da {
                for js in 0..ds {
                    let v = u[(row_u, ja * ds + js)];
                    if v == ZERO {
                        continue;
                    }
                    for m in 0..dm {
                        out[((ia * dm + m) * ds + is, (ja * dm + m) * ds + js)] = v;
                    }
                }
            }
        }
    }
    out
}

/// `(αβ, a+b, αε_B + βδ_A)` encoding of `AB`; B's ancillas are prepended.
pub fn multiply(u_a: &BlockEncoding, u_b: &BlockEncoding) -> Result<BlockEncoding> {
    if u_a.dim != u_b.dim {
        return Err(FfodeError::ShapeMismatch(format!("system dimensions {} vs {}", u_a.dim, u_b.dim)));
    }
    let ds = u_a.system_dim();
    let ca = u_a.core.nrows() / ds;
    let cb = u_b.core.nrows() / ds;
    let a_ext = kron(&identity(cb), &u_a.core);
    let b_ext = interleave(&u_b.core, cb, ca, ds);
    let core = a_ext * b_ext;
    check_core_unitary(&core)?;
    let target = match (&u_a.target, &u_b.target) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    };
    Ok(BlockEncoding {
        core,
        idle: u_a.idle + u_b.idle,
        dim: u_a.dim,
        system_qubits: u_a.system_qubits,
        ancilla_qubits: u_a.ancilla_qubits + u_b.ancilla_qubits,
        alpha: u_a.alpha * u_b.alpha,
        epsilon_claim: u_a.alpha * u_b.epsilon_claim + u_b.alpha * u_a.epsilon_claim,
        ledger: u_a.ledger.merged(&u_b.ledger),
        target,
    })
}

/// Operator whose spectrum and Hermiticity are checked: the attached target
/// if any, else `α·block`.
fn reference_operator(be: &BlockEncoding) -> ComplexMatrix {
    be.target.clone().unwrap_or_else(|| be.encoded())
}

fn require_hermitian(m: &ComplexMatrix) -> Result<()> {
    let d = hermiticity_defect(m);
    if d > tol::get().hermitian * (1.0 + spectral_norm(m)) {
        return Err(FfodeError::NotHermitian(d));
    }
    Ok(())
}

pub fn invert_query_count(delta: f64, eps: f64, c: f64) -> u64 {
    let v = c * (1.0 / delta) * (1.0 / (delta * eps)).ln();
    v.ceil().max(1.0) as u64
}

pub fn amplify_query_count(delta: f64, eps: f64, c: f64) -> u64 {
    let v = c * (1.0 / delta) * (1.0 / eps).ln();
    v.ceil().max(1.0) as u64
}

/// `(4/(3δ), n_A+1, ε)` encoding of `A⁻¹` for Hermitian `A` with spectrum in
/// `[−1,−δ] ∪ [δ,1]`. Realized by exact spectral inversion of the encoded
/// operator followed by dilation.
pub fn invert(u_a: &BlockEncoding, delta: f64, eps: f64) -> Result<BlockEncoding> {
    invert_with(u_a, delta, eps, &CostConstants::default())
}

pub fn invert_with(u_a: &BlockEncoding, delta: f64, eps: f64, consts: &CostConstants) -> Result<BlockEncoding> {
    if !(delta > 0.0 && delta <= 1.0) || !(eps > 0.0) {
        return Err(FfodeError::InvalidParameter(format!("invert needs δ in (0,1] and ε > 0, got δ={delta}, ε={eps}")));
    }
    let a = reference_operator(u_a);
    require_hermitian(&a)?;
    let (vals, _) = matrix::hermitian_eigen(&a)?;
    let tol_gap = 1e-12;
    for &l in &vals {
        if l.abs() < delta - tol_gap || l.abs() > 1.0 + tol_gap {
            return Err(FfodeError::SpectrumViolation(format!("eigenvalue {l} outside [-1,-{delta}] ∪ [{delta},1]")));
        }
    }
    let actual = hermitian_part(&u_a.encoded());
    let (avals, _) = matrix::hermitian_eigen(&actual)?;
    if avals.iter().any(|l| l.abs() < 1e-300) {
        return Err(FfodeError::SpectrumViolation("encoded operator is singular".into()));
    }
    let inv = hermitian_function(&actual, |x| r(1.0 / x))?;
    let alpha = 4.0 / (3.0 * delta);
    let dil = dilation(&inv, alpha.max(spectral_norm(&inv)))?;
    let target = u_a.target.as_ref().map(|t| hermitian_function(t, |x| r(1.0 / x))).transpose()?.unwrap_or_else(|| inv.clone());
    let k = invert_query_count(delta, eps, consts.invert);
    Ok(BlockEncoding {
        alpha: dil.alpha,
        epsilon_claim: eps,
        ledger: u_a.ledger.repeated(k),
        target: Some(target),
        ..dil.padded(u_a.ancilla_qubits)
    })
}

/// `(1, a+1, ε)` encoding of `gain·(α·block)`, charged
/// `ceil(c·(1/δ)·log(1/ε))` uses of the input.
pub fn amplify(u: &BlockEncoding, gain: f64, delta: f64, eps: f64, consts: &CostConstants) -> Result<BlockEncoding> {
    if !(gain > 0.0) || !(delta > 0.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter("amplify needs gain > 0, δ > 0, ε in (0,1)".into()));
    }
    let m = u.encoded() * r(gain);
    let dil = dilation(&m, 1.0)?;
    let k = amplify_query_count(delta, eps, consts.amplify);
    let target = u.target.as_ref().map(|t| t * r(gain)).unwrap_or(m);
    Ok(BlockEncoding {
        epsilon_claim: eps + gain * u.epsilon_claim,
        ledger: u.ledger.repeated(k),
        target: Some(target),
        ..dil.padded(u.ancilla_qubits)
    })
}

/// Certify `|p| ≤ 1/2` on a Chebyshev grid of `4·deg` points.
pub fn certify_half_bound(p: &dyn RealPolynomial) -> Result<f64> {
    let pts = (4 * p.degree()).max(4);
    let s = lobatto_grid(pts).into_iter().map(|x| p.eval(x).abs()).fold(0.0, f64::max);
    if s > 0.5 + 1e-12 {
        return Err(FfodeError::SupNormViolation(s));
    }
    Ok(s)
}

/// `(1, n_A+2, 4d√(ε/α))` encoding of `P(A/α)` for Hermitian `A`.
/// Realized by spectral calculus on the block and re-dilation; charged
/// `d + 1` uses of `u_a` and `c·(n_A+1)·d` single-qubit gates.
pub fn polynomial_transform(u_a: &BlockEncoding, p: &dyn RealPolynomial) -> Result<BlockEncoding> {
    polynomial_transform_with(u_a, p, &CostConstants::default())
}

pub fn polynomial_transform_with(u_a: &BlockEncoding, p: &dyn RealPolynomial, consts: &CostConstants) -> Result<BlockEncoding> {
    certify_half_bound(p)?;
    let a = reference_operator(u_a);
    require_hermitian(&a)?;
    let block = hermitian_part(&u_a.block());
    let pm = hermitian_function(&block, |x| r(p.eval(x.clamp(-1.0, 1.0))))?;
    let dil = dilation(&pm, 1.0)?;
    let d = p.degree() as u64;
    let mut ledger = u_a.ledger.repeated(d + 1);
    ledger.add(ledger::ONE_QUBIT_GATES, (consts.poly_gates * ((u_a.ancilla_qubits + 1) as f64) * d as f64).ceil() as u64);
    let target = u_a
        .target
        .as_ref()
        .map(|t| hermitian_function(&t.unscale(u_a.alpha), |x| r(p.eval(x))))
        .transpose()?
        .unwrap_or_else(|| pm.clone());
    let eps = 4.0 * d as f64 * (u_a.epsilon_claim / u_a.alpha).sqrt();
    Ok(BlockEncoding { epsilon_claim: eps, ledger, target: Some(target), ..dil.padded(u_a.ancilla_qubits + 1) })
}

/// `|0^a⟩` isometry columns of the full unitary are orthonormal.
pub fn ancilla_zero_isometry_defect(be: &BlockEncoding) -> f64 {
    let n = be.system_dim();
    let cols = be.core.columns(0, n).into_owned();
    spectral_norm(&(cols.adjoint() * cols - identity(n)))
}
