//! Fast-forwarded solvers built from polynomial transforms of block-encodings:
//! negative-definite `A`, and `A = −H²` with access to `H`. Both feed the
//! linear-combination-of-states circuit in [`lcs_combine_and_measure`].

use crate::block_encoding::{
    self as be, amplify, identity_encoding_dim, lcu_combine, multiply, polynomial_transform,
    BlockEncoding, CostConstants, StatePreparationPair,
};
use crate::error::{FfodeError, Result};
use crate::ledger::{self, QueryLedger};
use crate::matrix::{
    self, hermitian_eigen, hermiticity_defect, identity, r, spectral_norm, unitary_with_first_column, ComplexMatrix,
    ComplexVector,
};
use crate::ode_reference::{duhamel_matrix, solve_reference, OdeProblem};
use crate::poly_approx::{approx_exp_shifted, approx_gaussian, approx_gaussian_integral};
use crate::report::SolveReport;

/// A state-preparation unitary with `O|0⟩ = v/‖v‖` and the known norm `‖v‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePrep {
    pub unitary: ComplexMatrix,
    pub norm: f64,
}

impl StatePrep {
    pub fn for_vector(v: &ComplexVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Ok(StatePrep { unitary: identity(v.len()), norm: 0.0 });
        }
        Ok(StatePrep { unitary: unitary_with_first_column(&v.unscale(norm))?, norm })
    }

    pub fn state(&self) -> ComplexVector {
        self.unitary.column(0).into_owned()
    }
}

/// The encoding as a `(alpha, ·, eps)` encoding of `target`, same unitary.
fn reinterpret(mut b: BlockEncoding, alpha: f64, target: ComplexMatrix, eps: f64) -> BlockEncoding {
    b.alpha = alpha;
    b.epsilon_claim = eps;
    b.target = Some(target);
    b
}

fn check_negdef(a: &ComplexMatrix, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(FfodeError::InvalidParameter(format!("δ must lie in (0,1], got {delta}")));
    }
    let h = hermiticity_defect(a);
    if h > crate::tol::get().hermitian * (1.0 + spectral_norm(a)) {
        return Err(FfodeError::NotHermitian(h));
    }
    let (vals, _) = hermitian_eigen(a)?;
    for &l in &vals {
        if l > -delta + 1e-12 || l < -1.0 - 1e-12 {
            return Err(FfodeError::SpectrumViolation(format!("eigenvalue {l} outside [-1, -{delta}]")));
        }
    }
    Ok(vals)
}

/// Error split of the homogeneous pipeline: `ε₂ = ε/2` for the polynomial and
/// `ε₁ = (ε/(24d))²` for the amplification, so `ε₂ + 12d√ε₁ = ε`.
pub fn negdef_error_split(eps: f64, degree: usize) -> (f64, f64) {
    let d = degree.max(1) as f64;
    ((eps / (24.0 * d)).powi(2), eps / 2.0)
}

/// `(3, n_A+4, ε)` encoding of `e^{AT}` from a `(1, n_A, 0)` encoding of
/// Hermitian `A` with spectrum in `[−1, −δ]`.
pub fn be_exp_negdef(u_a: &BlockEncoding, t: f64, delta: f64, eps: f64) -> Result<BlockEncoding> {
    be_exp_negdef_with(u_a, t, delta, eps, &CostConstants::default())
}

pub fn be_exp_negdef_with(u_a: &BlockEncoding, t: f64, delta: f64, eps: f64, k: &CostConstants) -> Result<BlockEncoding> {
    if !(t >= 0.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("need T ≥ 0 and ε in (0,1), got T={t}, ε={eps}")));
    }
    if (u_a.alpha - 1.0).abs() > 1e-12 {
        return Err(FfodeError::InvalidParameter("A must be encoded with α = 1".into()));
    }
    let a = u_a.target.clone().unwrap_or_else(|| u_a.encoded());
    check_negdef(&a, delta)?;
    let eye = identity_encoding_dim(u_a.system_dim()).padded(u_a.ancilla_qubits);
    let half = lcu_combine(&StatePreparationPair::hadamard(), &[eye, u_a.clone()])?;
    let poly_eps = eps / 2.0;
    let p = approx_exp_shifted(t, poly_eps)?;
    let (eps1, eps2) = negdef_error_split(eps, p.degree);
    let amp = amplify(&half, 2.0, delta, eps1, k)?;
    let scaled = p.series.scaled(1.0 / 3.0);
    let pe = be::polynomial_transform_with(&amp, &scaled, k)?;
    let target = matrix::matrix_exponential(&a, t)?;
    let claim = eps2 + 12.0 * p.degree as f64 * eps1.sqrt();
    Ok(reinterpret(pe, 3.0, target, claim))
}

/// Error split of the inhomogeneous pipeline: `ε″ = ε/8` for the inverse and
/// `ε′ = 9δε/32` for `e^{AT}`, so `4ε″ + 16ε′/(9δ) = ε`.
pub fn duhamel_error_split(eps: f64, delta: f64) -> (f64, f64) {
    (9.0 * delta * eps / 32.0, eps / 8.0)
}

/// `(16/(3δ), 2n_A+6, ε)` encoding of `∫₀ᵀ e^{A(T−s)} ds = (e^{AT} − I)A⁻¹`.
pub fn be_duhamel_negdef(u_a: &BlockEncoding, t: f64, delta: f64, eps: f64) -> Result<BlockEncoding> {
    be_duhamel_negdef_with(u_a, t, delta, eps, &CostConstants::default())
}

pub fn be_duhamel_negdef_with(u_a: &BlockEncoding, t: f64, delta: f64, eps: f64, k: &CostConstants) -> Result<BlockEncoding> {
    let (eps_exp, eps_inv) = duhamel_error_split(eps, delta);
    let e = be_exp_negdef_with(u_a, t, delta, eps_exp, k)?.unit_normalized();
    let eye = identity_encoding_dim(u_a.system_dim()).padded(e.ancilla_qubits);
    let pair = StatePreparationPair::from_rotations(std::f64::consts::FRAC_PI_3, -std::f64::consts::FRAC_PI_3, 4.0)?;
    let diff = lcu_combine(&pair, &[e, eye])?;
    let inv = be::invert_with(u_a, delta, eps_inv, k)?;
    let prod = multiply(&diff, &inv)?;
    let a = u_a.target.clone().unwrap_or_else(|| u_a.encoded());
    let target = duhamel_matrix(&a, t)?;
    let claim = prod.epsilon_claim;
    Ok(reinterpret(prod, 16.0 / (3.0 * delta), target, claim))
}

/// Inputs of the linear-combination-of-states circuit.
#[derive(Debug, Clone)]
pub struct LcsInputs<'a> {
    pub u0: &'a StatePrep,
    pub b: &'a StatePrep,
    /// Encoding of `e^{AT}`.
    pub be0: &'a BlockEncoding,
    /// Encoding of `∫₀ᵀ e^{A(T−s)} ds`.
    pub be1: &'a BlockEncoding,
}

/// `θ = 2·arcsin(α₁‖b‖/N)`, `N = √(α₀²‖u0‖² + α₁²‖b‖²)`, so that
/// `R_y(θ)|0⟩ = (α₀‖u0‖|0⟩ + α₁‖b‖|1⟩)/N`.
pub fn lcs_rotation_angle(alpha0: f64, u0_norm: f64, alpha1: f64, b_norm: f64) -> f64 {
    let nn = (alpha0 * alpha0 * u0_norm * u0_norm + alpha1 * alpha1 * b_norm * b_norm).sqrt();
    2.0 * (alpha1 * b_norm / nn).clamp(-1.0, 1.0).asin()
}

/// Contents of all ancillas and the system after `U (|0⟩_a ⊗ x)`, in a
/// register of `len` entries (leading padding ancillas stay |0⟩).
fn apply_embedded(b: &BlockEncoding, x: &ComplexVector, len: usize) -> ComplexVector {
    let core = b.core();
    let n = x.len();
    let out = core.columns(0, n) * x;
    let mut v = ComplexVector::zeros(len);
    v.rows_mut(0, out.len()).copy_from(&out);
    v
}

/// Simulates rotation, controlled state preparations, controlled encodings,
/// Hadamard and the all-zero post-selection, returning the exact
/// post-selected state and success probability.
pub fn lcs_combine_and_measure(inp: &LcsInputs, reference: &ComplexVector, eps: f64) -> Result<SolveReport> {
    let n = inp.be0.system_dim();
    if inp.be1.system_dim() != n || inp.u0.unitary.nrows() != n || inp.b.unitary.nrows() != n || reference.len() != n {
        return Err(FfodeError::ShapeMismatch("LCS inputs act on different dimensions".into()));
    }
    let a = inp.be0.ancilla_qubits.max(inp.be1.ancilla_qubits);
    let e0 = inp.be0.padded(a - inp.be0.ancilla_qubits);
    let e1 = inp.be1.padded(a - inp.be1.ancilla_qubits);
    let idle = e0.idle_ancillas().min(e1.idle_ancillas());
    let len = (1usize << (a - idle)) * n;
    let (a0, a1) = (e0.alpha, e1.alpha);
    let (nu, nb) = (inp.u0.norm, inp.b.norm);
    let nn = (a0 * a0 * nu * nu + a1 * a1 * nb * nb).sqrt();
    if nn == 0.0 {
        return Err(FfodeError::Degenerate("u0 and b both vanish".into()));
    }
    let theta = lcs_rotation_angle(a0, nu, a1, nb);
    let (s, c) = (theta / 2.0).sin_cos();
    let mut ledger = QueryLedger::new();
    let mut gates = 0;
    let branch0 = if nu > 0.0 {
        ledger.add(ledger::O_U, 1);
        ledger.merge(&e0.ledger);
        Some(apply_embedded(&e0, &inp.u0.state(), len) * r(c))
    } else {
        None
    };
    let branch1 = if nb > 0.0 {
        ledger.add(ledger::O_B, 1);
        ledger.merge(&e1.ledger);
        Some(apply_embedded(&e1, &inp.b.state(), len) * r(s))
    } else {
        None
    };
    // full register (control, ancillas, system) before post-selection
    let state = match (branch0, branch1) {
        (Some(x0), Some(x1)) => {
            gates += 2;
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut full = ComplexVector::zeros(2 * len);
            full.rows_mut(0, len).copy_from(&((&x0 + &x1) * r(h)));
            full.rows_mut(len, len).copy_from(&((&x0 - &x1) * r(h)));
            full
        }
        (Some(x0), None) => {
            let mut full = ComplexVector::zeros(2 * len);
            full.rows_mut(0, len).copy_from(&x0);
            full
        }
        (None, Some(x1)) => {
            let mut full = ComplexVector::zeros(2 * len);
            full.rows_mut(0, len).copy_from(&x1);
            full
        }
        (None, None) => unreachable!(),
    };
    ledger.add(ledger::ONE_QUBIT_GATES, gates);
    let amp = state.rows(0, n).into_owned();
    let total = state.norm();
    if (total - 1.0).abs() > 1e-9 {
        return Err(FfodeError::Numeric(format!("circuit state lost norm: {total}")));
    }
    let rep = SolveReport::from_amplitude("lcs", &amp, reference, ledger, eps, a + 1)?;
    Ok(rep.with_detail("alpha0", a0).with_detail("alpha1", a1).with_detail("theta", theta).with_detail("N", nn))
}

/// Per-branch tolerances `ε₀ = ‖u(T)‖ε/(4‖u0‖)`, `ε₁ = ‖u(T)‖ε/(4‖b‖)`
/// (infinite when the branch is absent).
pub fn lcs_tolerances(u_t_norm: f64, u0_norm: f64, b_norm: f64, eps: f64) -> (f64, f64) {
    let e0 = if u0_norm > 0.0 { u_t_norm * eps / (4.0 * u0_norm) } else { f64::INFINITY };
    let e1 = if b_norm > 0.0 { u_t_norm * eps / (4.0 * b_norm) } else { f64::INFINITY };
    (e0, e1)
}

fn branch_eps(e: f64) -> f64 {
    e.min(0.5)
}

/// Solver for Hermitian `A` with spectrum in `[−1, −δ]` and constant `b`.
pub fn solve_negdef(p: &OdeProblem, delta: f64, eps: f64) -> Result<SolveReport> {
    solve_negdef_with(p, delta, eps, &CostConstants::default())
}

pub fn solve_negdef_with(p: &OdeProblem, delta: f64, eps: f64, k: &CostConstants) -> Result<SolveReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("ε must lie in (0,1), got {eps}")));
    }
    let a = p.matrix();
    check_negdef(&a, delta)?;
    let b = p.b_or_zero()?;
    let reference = solve_reference(p)?;
    let t = p.horizon;
    let u_a = be::dilation(&a, 1.0)?.as_oracle(ledger::U_A);
    let (e0, e1) = lcs_tolerances(reference.norm(), p.u0.norm(), b.norm(), eps);
    let be0 = be_exp_negdef_with(&u_a, t, delta, branch_eps(e0), k)?;
    let be1 = if b.norm() > 0.0 {
        be_duhamel_negdef_with(&u_a, t, delta, branch_eps(e1), k)?
    } else {
        identity_encoding_dim(u_a.system_dim())
    };
    let su = StatePrep::for_vector(&p.u0)?;
    let sb = StatePrep::for_vector(&b)?;
    let rep = lcs_combine_and_measure(&LcsInputs { u0: &su, b: &sb, be0: &be0, be1: &be1 }, &reference, eps)?;
    let deg = approx_exp_shifted(t, branch_eps(e0) / 2.0)?.degree;
    Ok(SolveReport { solver: "negdef".into(), ..rep }
        .with_detail("eps0", be0.epsilon_claim)
        .with_detail("eps1", if b.norm() > 0.0 { be1.epsilon_claim } else { 0.0 })
        .with_detail("degree", deg as f64)
        .with_detail("delta", delta))
}

/// `(3, n_H+2, ε)` encoding of `e^{−TH²}` from an `(α_H, n_H, 0)` encoding of `H`.
pub fn be_exp_sqrt(u_h: &BlockEncoding, t: f64, eps: f64) -> Result<BlockEncoding> {
    let h = hermitian_target(u_h)?;
    let beta = t * u_h.alpha * u_h.alpha;
    let p = approx_gaussian(beta, eps)?;
    let pe = polynomial_transform(u_h, &p.series.scaled(1.0 / 3.0))?;
    let target = matrix::matrix_exponential(&(&h * &h * r(-1.0)), t)?;
    Ok(reinterpret(pe, 3.0, target, eps))
}

/// `(3T, n_H+2, ε)` encoding of `∫₀ᵀ e^{−(T−s)H²} ds`.
pub fn be_duhamel_sqrt(u_h: &BlockEncoding, t: f64, eps: f64) -> Result<BlockEncoding> {
    let h = hermitian_target(u_h)?;
    let beta = t * u_h.alpha * u_h.alpha;
    let q = approx_gaussian_integral(beta, (eps / t).min(0.5))?;
    let pe = polynomial_transform(u_h, &q.series.scaled(1.0 / 3.0))?;
    let target = duhamel_matrix(&(&h * &h * r(-1.0)), t)?;
    Ok(reinterpret(pe, 3.0 * t, target, eps))
}

fn hermitian_target(u_h: &BlockEncoding) -> Result<ComplexMatrix> {
    let h = u_h.target.clone().unwrap_or_else(|| u_h.encoded());
    let d = hermiticity_defect(&h);
    if d > crate::tol::get().hermitian * (1.0 + spectral_norm(&h)) {
        return Err(FfodeError::NotHermitian(d));
    }
    Ok(h)
}

/// Solver for `A = −H²` given a block-encoding of Hermitian `H`.
pub fn solve_sqrt_access(p: &OdeProblem, u_h: &BlockEncoding, eps: f64) -> Result<SolveReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("ε must lie in (0,1), got {eps}")));
    }
    let h = hermitian_target(u_h)?;
    let a = p.matrix();
    let minus_h2 = &h * &h * r(-1.0);
    if spectral_norm(&(&a - &minus_h2)) > 1e-9 * (1.0 + spectral_norm(&a)) {
        return Err(FfodeError::Mismatch("problem coefficient is not −H² for the supplied H".into()));
    }
    let b = p.b_or_zero()?;
    let reference = solve_reference(p)?;
    let t = p.horizon;
    let u_h = u_h.clone().as_oracle(ledger::U_H);
    let (e0, e1) = lcs_tolerances(reference.norm(), p.u0.norm(), b.norm(), eps);
    let be0 = be_exp_sqrt(&u_h, t, branch_eps(e0))?;
    let be1 = if b.norm() > 0.0 { be_duhamel_sqrt(&u_h, t, branch_eps(e1))? } else { identity_encoding_dim(u_h.system_dim()) };
    let su = StatePrep::for_vector(&p.u0)?;
    let sb = StatePrep::for_vector(&b)?;
    let rep = lcs_combine_and_measure(&LcsInputs { u0: &su, b: &sb, be0: &be0, be1: &be1 }, &reference, eps)?;
    let beta = t * u_h.alpha * u_h.alpha;
    let deg = approx_gaussian(beta, branch_eps(e0))?.degree;
    Ok(SolveReport { solver: "sqrt-access".into(), ..rep }
        .with_detail("beta", beta)
        .with_detail("degree", deg as f64)
        .with_detail("alpha_h", u_h.alpha))
}

/// `√(max(βT, log 1/ε))·log(1/ε)`-type degree reference for the sqrt solver.
pub fn sqrt_degree_scale(beta: f64, eps: f64) -> f64 {
    crate::poly_approx::degree_scale(beta, eps)
}
