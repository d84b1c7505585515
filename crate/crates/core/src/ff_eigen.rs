//! Solvers for coefficient matrices given through an eigensystem `A = UΛU†`.
//!
//! The eigenvalue, time and exponential registers are modeled as exact
//! classical tags on each eigenindex: compute, controlled rotation/phase and
//! uncompute net to a diagonal factor, which is applied directly.

use rayon::prelude::*;

use crate::block_encoding::{dilation, identity_encoding_dim, BlockEncoding};
use crate::error::{FfodeError, Result};
use crate::ff_qsvt::{lcs_combine_and_measure, LcsInputs, StatePrep};
use crate::ledger::{self, QueryLedger};
use crate::matrix::{r, spectral_norm, ComplexMatrix, ComplexVector, EigenSystem};
use crate::ode_reference::{
    kernel_c, kernel_f, kernel_fg_complex, normalization_parameters, solve_reference, Inhomogeneous, OdeProblem,
    SampledSource,
};
use crate::report::SolveReport;
use num_complex::Complex64;

/// Default node cap for the Riemann-sum solver.
pub const DEFAULT_NODE_CAP: u64 = 1_000_000;

const SPEC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenVariant {
    /// Real spectrum in `(−∞, 0]`; normalizations 1 and T.
    Real,
    /// Arbitrary spectrum shifted by `α = max Re λ`.
    Complex,
    /// `α̃ = max{0, Re λ}` for the time-dependent path.
    TimeDep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOracleSet {
    pub eigen: EigenSystem,
    pub alpha_shift: f64,
    pub beta_floor: f64,
    pub variant: EigenVariant,
    /// Oracles are exact real-valued maps; always true here.
    pub exact: bool,
    /// Nominal width of each tag register, used only for ancilla counts.
    pub register_bits: usize,
}

impl EigenOracleSet {
    /// Real nonpositive spectrum.
    pub fn real(eigen: EigenSystem) -> Result<Self> {
        for l in &eigen.eigenvalues {
            if l.im.abs() > SPEC_TOL || l.re > SPEC_TOL {
                return Err(FfodeError::SpectrumViolation(format!("eigenvalue {l} is not real and nonpositive")));
            }
        }
        Ok(EigenOracleSet { eigen, alpha_shift: 0.0, beta_floor: 0.0, variant: EigenVariant::Real, exact: true, register_bits: 16 })
    }

    pub fn complex(eigen: EigenSystem) -> Self {
        let (alpha, beta) = normalization_parameters(&eigen.eigenvalues);
        EigenOracleSet { eigen, alpha_shift: alpha, beta_floor: beta, variant: EigenVariant::Complex, exact: true, register_bits: 16 }
    }

    pub fn time_dependent(eigen: EigenSystem) -> Self {
        let alpha = eigen.max_real().max(0.0);
        EigenOracleSet { eigen, alpha_shift: alpha, beta_floor: 0.0, variant: EigenVariant::TimeDep, exact: true, register_bits: 16 }
    }

    /// Real variant when the spectrum allows it, complex otherwise.
    pub fn auto(eigen: EigenSystem) -> Self {
        match EigenOracleSet::real(eigen.clone()) {
            Ok(o) => o,
            Err(_) => EigenOracleSet::complex(eigen),
        }
    }

    pub fn with_alpha_shift(mut self, alpha: f64) -> Result<Self> {
        self.alpha_shift = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_beta_floor(mut self, beta: f64) -> Result<Self> {
        self.beta_floor = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha_shift.is_finite() || !(self.beta_floor >= 0.0) {
            return Err(FfodeError::InvalidParameter("alpha shift and beta floor must be finite, beta ≥ 0".into()));
        }
        for l in &self.eigen.eigenvalues {
            if l.re > self.alpha_shift + SPEC_TOL {
                return Err(FfodeError::AlphaShiftViolated { alpha: self.alpha_shift, re: l.re });
            }
        }
        match self.variant {
            EigenVariant::Real => {
                if self.alpha_shift != 0.0 {
                    return Err(FfodeError::InvalidParameter("the real variant uses α = 0".into()));
                }
            }
            EigenVariant::TimeDep => {
                if self.alpha_shift < 0.0 {
                    return Err(FfodeError::AlphaShiftViolated { alpha: self.alpha_shift, re: 0.0 });
                }
            }
            EigenVariant::Complex => {}
        }
        let floor = self
            .eigen
            .eigenvalues
            .iter()
            .filter(|l| l.re.abs() <= SPEC_TOL && l.im.abs() > SPEC_TOL)
            .map(|l| l.im.abs())
            .fold(f64::INFINITY, f64::min);
        if self.beta_floor > floor + SPEC_TOL {
            return Err(FfodeError::InvalidParameter(format!(
                "beta floor {} exceeds the smallest imaginary part {floor} on the imaginary axis",
                self.beta_floor
            )));
        }
        Ok(())
    }

    fn complex_path(&self) -> bool {
        self.variant != EigenVariant::Real
    }

    /// e^{αT}, with α = 0 for the real variant.
    pub fn exp_normalization(&self, t: f64) -> f64 {
        (self.alpha_shift * t).exp()
    }

    pub fn duhamel_normalization(&self, t: f64) -> f64 {
        if self.complex_path() {
            kernel_c(self.alpha_shift, self.beta_floor, t)
        } else {
            t
        }
    }

    fn check_problem(&self, p: &OdeProblem) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(FfodeError::ShapeMismatch(format!("problem dim {} vs eigensystem dim {}", p.dim(), self.dim())));
        }
        let a = p.matrix();
        let err = self.eigen.reconstruction_error(&a);
        if err > 1e-9 * (1.0 + spectral_norm(&a)) {
            return Err(FfodeError::Mismatch(format!("eigensystem does not reconstruct the coefficient (error {err:e})")));
        }
        Ok(())
    }
}

fn exp_ledger(complex: bool) -> QueryLedger {
    if complex {
        QueryLedger::from_pairs(&[
            (ledger::O_T, 2),
            (ledger::O_LAMBDA, 4),
            (ledger::O_EXP, 2),
            (ledger::O_PROD, 2),
            (ledger::U_EIG, 2),
            (ledger::ONE_QUBIT_GATES, 4),
        ])
    } else {
        QueryLedger::from_pairs(&[
            (ledger::O_T, 2),
            (ledger::O_LAMBDA, 2),
            (ledger::O_EXP, 2),
            (ledger::U_EIG, 2),
            (ledger::ONE_QUBIT_GATES, 1),
        ])
    }
}

fn duhamel_ledger(complex: bool) -> QueryLedger {
    if complex {
        QueryLedger::from_pairs(&[
            (ledger::O_T, 2),
            (ledger::O_LAMBDA, 4),
            (ledger::O_F, 2),
            (ledger::O_G, 2),
            (ledger::U_EIG, 2),
            (ledger::ONE_QUBIT_GATES, 4),
        ])
    } else {
        QueryLedger::from_pairs(&[
            (ledger::O_T, 2),
            (ledger::O_LAMBDA, 2),
            (ledger::O_F, 2),
            (ledger::U_EIG, 2),
            (ledger::ONE_QUBIT_GATES, 1),
        ])
    }
}

fn diagonal_encoding(
    o: &EigenOracleSet,
    factors: &[Complex64],
    alpha: f64,
    target: ComplexMatrix,
    ledger: QueryLedger,
    registers: usize,
) -> Result<BlockEncoding> {
    let u = &o.eigen.basis;
    let m = u * crate::matrix::diag(factors) * u.adjoint();
    // the rotation qubit carries the dilation; tag registers are idle
    let be = dilation(&m, 1.0)?.padded(registers * o.register_bits);
    let mut be = be.with_ledger(ledger).with_target(target);
    be.alpha = alpha;
    Ok(be)
}

/// Zero-error encoding of `e^{AT}` with normalization `e^{αT}`.
pub fn be_exp_eigen(o: &EigenOracleSet, t: f64) -> Result<BlockEncoding> {
    if !(t >= 0.0) {
        return Err(FfodeError::InvalidParameter(format!("T must be nonnegative, got {t}")));
    }
    o.validate()?;
    let alpha = o.alpha_shift;
    let factors: Vec<Complex64> = o.eigen.eigenvalues.iter().map(|&l| ((l - alpha) * t).exp()).collect();
    let target = o.eigen.apply_function(|l| (l * t).exp());
    let complex = o.complex_path();
    diagonal_encoding(o, &factors, o.exp_normalization(t), target, exp_ledger(complex), 3)
}

/// Zero-error encoding of `∫₀ᵀ e^{A(T−s)} ds`.
pub fn be_duhamel_eigen(o: &EigenOracleSet, t: f64) -> Result<BlockEncoding> {
    if !(t > 0.0) {
        return Err(FfodeError::InvalidParameter(format!("T must be positive, got {t}")));
    }
    o.validate()?;
    let complex = o.complex_path();
    let norm = o.duhamel_normalization(t);
    let mut factors = Vec::with_capacity(o.dim());
    for &l in &o.eigen.eigenvalues {
        let f = if complex {
            let (f, g) = kernel_fg_complex(l, t, norm)?;
            Complex64::new(f, g)
        } else {
            r(kernel_f(l.re.min(0.0), t)?)
        };
        factors.push(f);
    }
    let target = o.eigen.apply_function(|l| crate::ode_reference::duhamel_scalar(l, t));
    let registers = if complex { 4 } else { 3 };
    diagonal_encoding(o, &factors, norm, target, duhamel_ledger(complex), registers)
}

/// Homogeneous solve by one application of the exponential encoding.
pub fn solve_eigen_homogeneous(p: &OdeProblem, o: &EigenOracleSet) -> Result<SolveReport> {
    o.check_problem(p)?;
    let b = p.b_or_zero()?;
    if b.norm() > 0.0 {
        return Err(FfodeError::Mismatch("homogeneous solver needs b = 0".into()));
    }
    let reference = solve_reference(p)?;
    if reference.norm() == 0.0 {
        return Err(FfodeError::Degenerate("u(T) = 0".into()));
    }
    let be0 = be_exp_eigen(o, p.horizon)?;
    let be1 = identity_encoding_dim(o.dim());
    let su = StatePrep::for_vector(&p.u0)?;
    let sb = StatePrep::for_vector(&b)?;
    let rep = lcs_combine_and_measure(&LcsInputs { u0: &su, b: &sb, be0: &be0, be1: &be1 }, &reference, 1e-10)?;
    Ok(SolveReport { solver: "eigen-homogeneous".into(), ..rep }.with_detail("alpha_shift", o.alpha_shift))
}

/// Constant-`b` solve through the linear combination of both encodings.
pub fn solve_eigen_inhomogeneous(p: &OdeProblem, o: &EigenOracleSet) -> Result<SolveReport> {
    o.check_problem(p)?;
    let b = match &p.inhomogeneous {
        Inhomogeneous::Constant(b) => b.clone(),
        Inhomogeneous::None => ComplexVector::zeros(p.dim()),
        Inhomogeneous::Sampled(_) => {
            return Err(FfodeError::Mismatch("time-dependent b needs solve_eigen_timedep".into()));
        }
    };
    let reference = solve_reference(p)?;
    let t = p.horizon;
    let be0 = be_exp_eigen(o, t)?;
    let be1 = if b.norm() > 0.0 { be_duhamel_eigen(o, t)? } else { identity_encoding_dim(o.dim()) };
    let su = StatePrep::for_vector(&p.u0)?;
    let sb = StatePrep::for_vector(&b)?;
    let rep = lcs_combine_and_measure(&LcsInputs { u0: &su, b: &sb, be0: &be0, be1: &be1 }, &reference, 1e-10)?;
    Ok(SolveReport { solver: "eigen-inhomogeneous".into(), ..rep }
        .with_detail("alpha_shift", o.alpha_shift)
        .with_detail("beta_floor", o.beta_floor))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannPlan {
    pub nodes: usize,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub b_norm_sq_avg: f64,
}

pub fn riemann_plan(b: &SampledSource, t: f64, m: usize) -> Result<RiemannPlan> {
    if m == 0 {
        return Err(FfodeError::InvalidParameter("M must be at least 1".into()));
    }
    let times: Vec<f64> = (0..m).map(|k| k as f64 * t / m as f64).collect();
    let norms: Vec<f64> = times.iter().map(|&s| b.eval(s).norm()).collect();
    let avg = norms.iter().map(|x| x * x).sum::<f64>() / m as f64;
    Ok(RiemannPlan { nodes: m, times, norms, b_norm_sq_avg: avg })
}

fn alpha_tilde(o: &EigenOracleSet) -> f64 {
    match o.variant {
        EigenVariant::TimeDep => o.alpha_shift,
        _ => o.eigen.max_real().max(0.0),
    }
}

/// `sup_t (‖A‖‖b(t)‖ + ‖b′(t)‖)` over `[0, T]`: dense grid, then golden-section
/// refinement around the best grid point.
fn sup_integrand(g: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let n = 4096;
    let h = t / n as f64;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0usize);
    for k in 0..=n {
        let v = g(k as f64 * h);
        if v > best {
            best = v;
            arg = k;
        }
    }
    let (mut lo, mut hi) = (((arg as f64) - 1.0).max(0.0) * h, ((arg as f64) + 1.0).min(n as f64) * h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if g(x1) > g(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.max(g(0.5 * (lo + hi)))
}

/// The constant `K` with bound `K/M`: `T²e^{α̃T}·sup(‖A‖‖b‖ + ‖b′‖)/2`.
fn quadrature_constant(p: &OdeProblem, o: &EigenOracleSet) -> Result<f64> {
    let t = p.horizon;
    let a_norm = o.eigen.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let sup = match &p.inhomogeneous {
        Inhomogeneous::None => 0.0,
        Inhomogeneous::Constant(b) => a_norm * b.norm(),
        Inhomogeneous::Sampled(s) => {
            let d = s.derivative.as_ref().ok_or(FfodeError::MissingDerivativeBound)?;
            let g = |x: f64| a_norm * s.eval(x).norm() + d(x).norm();
            sup_integrand(&g, t)
        }
    };
    Ok(t * t * (alpha_tilde(o) * t).exp() * sup / 2.0)
}

/// Bound on the first-order Riemann error with `M` nodes.
pub fn quadrature_error_bound(p: &OdeProblem, o: &EigenOracleSet, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(FfodeError::InvalidParameter("M must be at least 1".into()));
    }
    Ok(quadrature_constant(p, o)? / m as f64)
}

/// Smallest `M` whose bound is at most `eps_abs`.
pub fn required_nodes(p: &OdeProblem, o: &EigenOracleSet, eps_abs: f64) -> Result<u64> {
    if !(eps_abs > 0.0) {
        return Err(FfodeError::InvalidParameter(format!("target error must be positive, got {eps_abs}")));
    }
    let k = quadrature_constant(p, o)?;
    let m = (k / eps_abs).ceil();
    if !m.is_finite() || m > u64::MAX as f64 / 2.0 {
        return Ok(u64::MAX);
    }
    Ok((m as u64).max(1))
}

fn source(p: &OdeProblem) -> Option<SampledSource> {
    match &p.inhomogeneous {
        Inhomogeneous::None => None,
        Inhomogeneous::Constant(b) if b.norm() == 0.0 => None,
        Inhomogeneous::Constant(b) => {
            let b = b.clone();
            let n = b.len();
            Some(SampledSource::new(move |_| b.clone()).with_derivative(move |_| ComplexVector::zeros(n)))
        }
        Inhomogeneous::Sampled(s) => Some(s.clone()),
    }
}

pub fn solve_eigen_timedep(p: &OdeProblem, o: &EigenOracleSet, eps: f64) -> Result<SolveReport> {
    solve_eigen_timedep_capped(p, o, eps, DEFAULT_NODE_CAP)
}

/// Riemann-sum solve: rotation on a control qubit, `‖b‖`-weighted time
/// superposition, per-node exponentials, Hadamard collapse of the time
/// register and a final Hadamard on the control.
pub fn solve_eigen_timedep_capped(p: &OdeProblem, o: &EigenOracleSet, eps: f64, cap: u64) -> Result<SolveReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("ε must lie in (0,1), got {eps}")));
    }
    o.check_problem(p)?;
    let od = EigenOracleSet { variant: EigenVariant::TimeDep, alpha_shift: alpha_tilde(o), beta_floor: 0.0, ..o.clone() };
    od.validate()?;
    let Some(src) = source(p) else {
        let hp = OdeProblem { inhomogeneous: Inhomogeneous::None, ..p.clone() };
        let rep = solve_eigen_homogeneous(&hp, &od)?;
        return Ok(SolveReport { solver: "eigen-timedep".into(), ..rep }.with_detail("nodes", 0.0));
    };
    let reference = solve_reference(p)?;
    let un = reference.norm();
    if un == 0.0 {
        return Err(FfodeError::Degenerate("u(T) = 0".into()));
    }
    let target = eps * un / 2.0;
    let m = required_nodes(p, &od, target)?;
    if m > cap {
        return Err(FfodeError::NodeCapExceeded { required: m, cap });
    }
    let m = m as usize;
    let t = p.horizon;
    let plan = riemann_plan(&src, t, m)?;
    let at = od.alpha_shift;
    let scale = (-at * t).exp();
    let u = &od.eigen.basis;
    let uh = u.adjoint();
    let lam = &od.eigen.eigenvalues;
    let n = od.dim();
    let nu = p.u0.norm();
    let b_avg = plan.b_norm_sq_avg.sqrt();
    let nn = (nu * nu + t * t * plan.b_norm_sq_avg).sqrt();
    // control rotation weights
    let (c0, c1) = (nu / nn, t * b_avg / nn);
    let h = std::f64::consts::FRAC_1_SQRT_2;

    let branch0 = if nu > 0.0 {
        let y = &uh * p.u0.unscale(nu);
        let e = ComplexVector::from_iterator(n, (0..n).map(|j| ((lam[j] - at) * t).exp() * y[j]));
        u * e * r(c0)
    } else {
        ComplexVector::zeros(n)
    };

    // time-register amplitudes w_k = ‖b_k‖/√(M‖b‖²_avg); collapse adds 1/√M
    let collapse = 1.0 / (m as f64).sqrt();
    let chunk = 4096;
    let partial: Vec<ComplexVector> = (0..m.div_ceil(chunk))
        .into_par_iter()
        .map(|ci| {
            let mut acc = ComplexVector::zeros(n);
            for k in ci * chunk..((ci + 1) * chunk).min(m) {
                let nk = plan.norms[k];
                if nk == 0.0 {
                    continue;
                }
                let w = nk / ((m as f64).sqrt() * b_avg);
                let y = &uh * src.eval(plan.times[k]).unscale(nk);
                let tk = t - plan.times[k];
                for j in 0..n {
                    acc[j] += (lam[j] * tk).exp() * scale * w * collapse * y[j];
                }
            }
            acc
        })
        .collect();
    let mut sum = ComplexVector::zeros(n);
    for pc in &partial {
        sum += pc;
    }
    let branch1 = if b_avg > 0.0 { u * sum * r(c1) } else { ComplexVector::zeros(n) };
    let amp = (&branch0 + &branch1) * r(h);

    // ũ(T) recovered from the amplitude
    let u_tilde = &amp * r(std::f64::consts::SQRT_2 * nn / scale);
    let qerr = (&u_tilde - &reference).norm();
    let bound = quadrature_error_bound(p, &od, m)?;

    let time_qubits = (m as f64).log2().ceil() as usize;
    let mut led = QueryLedger::from_pairs(&[(ledger::O_U, 1), (ledger::O_BNORM, 1), (ledger::O_BT, 1)]);
    let el = exp_ledger(true);
    led.merge(&el);
    led.merge(&el);
    led.add(ledger::ONE_QUBIT_GATES, 2 + time_qubits as u64);
    let ancillas = 1 + time_qubits + 3 * od.register_bits + 1;
    let rep = SolveReport::from_amplitude("eigen-timedep", &amp, &reference, led, eps, ancillas)?;
    Ok(rep
        .with_detail("nodes", m as f64)
        .with_detail("alpha_tilde", at)
        .with_detail("b_norm_sq_avg", plan.b_norm_sq_avg)
        .with_detail("quadrature_error", qerr)
        .with_detail("quadrature_bound", bound))
}
