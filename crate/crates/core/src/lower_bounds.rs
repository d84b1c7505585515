//! Worst-case witness pairs for generic ODE solvers viewed as amplifiers.
//!
//! Each constructor builds two nearly identical inputs whose evolved states
//! are far apart, evolves them with the dense oracles in [`matrix`] and
//! [`ode_reference`], and records every concrete inequality the hardness
//! argument rests on as a [`Certification`]. Asymptotic statements are not
//! checked; their numeric ingredients are.

use std::f64::consts::{E, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{FfodeError, Result};
use crate::matrix::{self, c, inner, r, ComplexMatrix, ComplexVector};
use crate::ode_reference;
use crate::random;
use crate::report::phase_distance;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessFamily {
    RealpartGap,
    NonnormalHomogeneous,
    RealpartGapInhomogeneous,
    NonnormalInhomogeneous,
    ImaginaryTime,
    LinearSystem,
}

impl WitnessFamily {
    pub fn label(self) -> &'static str {
        match self {
            WitnessFamily::RealpartGap => "realpart-gap",
            WitnessFamily::NonnormalHomogeneous => "nonnormal-homo",
            WitnessFamily::RealpartGapInhomogeneous => "realpart-gap-inhomo",
            WitnessFamily::NonnormalInhomogeneous => "nonnormal-inhomo",
            WitnessFamily::ImaginaryTime => "imaginary-time",
            WitnessFamily::LinearSystem => "linear-system",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Relation {
    AtMost,
    AtLeast,
    Below,
    Above,
    Equal { tol: f64 },
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
            Relation::Above => ">",
            Relation::Equal { .. } => "==",
        }
    }
}

/// One checked inequality: `measured <relation> bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub label: String,
    pub measured: f64,
    pub relation: Relation,
    pub bound: f64,
    pub holds: bool,
}

impl Certification {
    pub fn new(label: &str, measured: f64, relation: Relation, bound: f64) -> Self {
        let holds = measured.is_finite()
            && bound.is_finite()
            && match relation {
                Relation::AtMost => measured <= bound + SLACK * (1.0 + bound.abs()),
                Relation::AtLeast => measured >= bound - SLACK * (1.0 + bound.abs()),
                Relation::Below => measured < bound,
                Relation::Above => measured > bound,
                Relation::Equal { tol } => (measured - bound).abs() <= tol,
            };
        Certification { label: label.to_string(), measured, relation, bound, holds }
    }
}

impl fmt::Display for Certification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.17e} {} bound {:.17e}",
            if self.holds { "PASS" } else { "FAIL" },
            self.label,
            self.measured,
            self.relation.symbol(),
            self.bound
        )
    }
}

/// Construction parameters; unused entries stay `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WitnessParams {
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
    pub v1: Option<ComplexVector>,
    pub v2: Option<ComplexVector>,
    pub xi: Option<f64>,
    pub theta: Option<f64>,
    /// `‖e^{−HT} u(0)‖` for the imaginary-time pair.
    pub decay: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct WitnessPair {
    pub family: WitnessFamily,
    pub a: ComplexMatrix,
    pub b: Option<ComplexVector>,
    pub u0: ComplexVector,
    pub w0: ComplexVector,
    pub horizon: f64,
    /// Normalized outputs (evolved states, or normalized solutions for the
    /// linear-system pair).
    pub u_final: ComplexVector,
    pub w_final: ComplexVector,
    pub params: WitnessParams,
    pub initial_overlap: f64,
    pub final_fidelity: f64,
    pub fidelity_bound: f64,
    /// `‖ρ_u − ρ_w‖₁ = 2√(1 − F²)` of the exact outputs.
    pub trace_distance: f64,
    pub trace_distance_floor: Option<f64>,
    pub mu: Option<f64>,
    /// Query count implied by the initial overlap, `1/√(1 − overlap-parameter)`.
    pub query_floor: f64,
    pub certifications: Vec<Certification>,
}

impl WitnessPair {
    pub fn all_hold(&self) -> bool {
        self.certifications.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<&Certification> {
        self.certifications.iter().filter(|c| !c.holds).collect()
    }
}

fn trace_norm_pure(f: f64) -> f64 {
    2.0 * (1.0 - f * f).max(0.0).sqrt()
}

/// `2√(1 − |⟨a|b⟩|²)` for unit vectors, via the phase-aligned distance so
/// nearly equal states do not lose digits.
fn trace_norm_states(a: &ComplexVector, b: &ComplexVector) -> f64 {
    let d = phase_distance(a, b);
    let h = 0.5 * d * d;
    2.0 * (h * (2.0 - h)).max(0.0).sqrt()
}

fn require_unit(v: &ComplexVector, what: &str) -> Result<()> {
    let n = v.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(FfodeError::InvalidParameter(format!("{what} must have unit norm, got {n}")));
    }
    Ok(())
}

fn require_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(FfodeError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

fn unit(v: &ComplexVector) -> Result<ComplexVector> {
    matrix::normalized(v)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("delta must lie in (0,1), got {delta}")));
    }
    Ok(())
}

/// Spread of eigenvalue real parts, `max_{i,j} Re(λ_i − λ_j)`.
pub fn realpart_gap(a: &ComplexMatrix) -> Result<f64> {
    let ev = matrix::eigenvalues(a)?;
    let hi = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let lo = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

/// `V diag(λ) V⁻¹`.
fn from_eigendata(v: &ComplexMatrix, eigenvalues: &[Complex64]) -> Result<ComplexMatrix> {
    let n = require_square(v)?;
    if eigenvalues.len() != n {
        return Err(FfodeError::ShapeMismatch(format!("{} eigenvalues for a {n}x{n} basis", eigenvalues.len())));
    }
    let smin = v.singular_values().min();
    if !(smin > 1e-12) {
        return Err(FfodeError::Degenerate(format!("eigenbasis is singular (smallest singular value {smin:e})")));
    }
    let vinv = v.clone().try_inverse().ok_or_else(|| FfodeError::Degenerate("eigenbasis is singular".into()))?;
    Ok(v * matrix::diag(eigenvalues) * vinv)
}

fn check_unit_columns(v: &ComplexMatrix) -> Result<()> {
    for j in 0..v.ncols() {
        let n = v.column(j).norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(FfodeError::InvalidParameter(format!("eigenbasis column {j} has norm {n}")));
        }
    }
    Ok(())
}

fn argmax_re(eig: &[Complex64]) -> usize {
    (0..eig.len()).fold(0, |b, j| if eig[j].re > eig[b].re { j } else { b })
}

fn argmin_re(eig: &[Complex64]) -> usize {
    (0..eig.len()).fold(0, |b, j| if eig[j].re < eig[b].re { j } else { b })
}

/// Positive real root of `ξ² + 2√ε·Re(g)·ξ + ε − 1 = 0`.
fn normalizing_xi(eps: f64, g: Complex64) -> f64 {
    let p = eps.sqrt() * g.re;
    -p + (p * p + 1.0 - eps).sqrt()
}

/// Pair separated by a gap in eigenvalue real parts, for `b = 0`.
pub fn witness_realpart_gap(v: &ComplexMatrix, eigenvalues: &[Complex64], eps: f64) -> Result<WitnessPair> {
    check_eps(eps)?;
    check_unit_columns(v)?;
    let a = from_eigendata(v, eigenvalues)?;
    let i1 = argmax_re(eigenvalues);
    let i2 = argmin_re(eigenvalues);
    let gap = eigenvalues[i1].re - eigenvalues[i2].re;
    if !(gap > 1e-14) {
        return Err(FfodeError::SpectrumViolation("eigenvalues share one real part; no real-part gap".into()));
    }
    let v1: ComplexVector = v.column(i1).into_owned();
    let v2: ComplexVector = v.column(i2).into_owned();
    let g = inner(&v1, &v2);
    if g.norm() >= 1.0 - 1e-12 {
        return Err(FfodeError::Degenerate("normalization insolvable: |<v1|v2>| = 1".into()));
    }
    let se = eps.sqrt();
    let xi = normalizing_xi(eps, g);
    let w0 = v1.scale(se) + v2.scale(xi);
    let ov = inner(&v2, &w0);
    let theta = ov.arg();
    let u0 = v2.clone() * Complex64::from_polar(1.0, theta);
    let t = (1.0 / eps).ln() / (2.0 * gap);

    let e = matrix::matrix_exponential(&a, t)?;
    let ut = &e * &u0;
    let wt = &e * &w0;
    let closed_u = u0.clone() * (eigenvalues[i2] * t).exp();
    let closed_w = v1.clone() * ((eigenvalues[i1] * t).exp() * se) + v2.clone() * ((eigenvalues[i2] * t).exp() * xi);
    let u_final = unit(&ut)?;
    let w_final = unit(&wt)?;

    let overlap_c = inner(&u0, &w0);
    let initial_overlap = overlap_c.norm();
    let final_fidelity = inner(&u_final, &w_final).norm();
    let g2 = g.norm_sqr();
    let s = (1.0 + SQRT_2).powi(2);
    let bound_c = ((2.0 * g2 + 2.0 * s) / (1.0 + g2 + 2.0 * s)).sqrt();
    let bound_xi = ((2.0 * g2 + 2.0 * xi * xi) / (1.0 + g2 + 2.0 * xi * xi)).sqrt();
    let rot = Complex64::from_polar(1.0, -(eigenvalues[i1].im - eigenvalues[i2].im) * t) * g * xi;
    let closed_f2 = (g2 + xi * xi + 2.0 * rot.re) / (1.0 + xi * xi + 2.0 * rot.re);
    let perturbed = ((3.0 + bound_c) * (1.0 - bound_c)).sqrt();
    let trace_distance = trace_norm_states(&u_final, &w_final);

    let scale_u = closed_u.norm().max(1e-300);
    let scale_w = closed_w.norm().max(1e-300);
    let certs = vec![
        Certification::new("|u(0)| = 1", u0.norm(), Relation::Equal { tol: 1e-12 }, 1.0),
        Certification::new("|w(0)| = 1", w0.norm(), Relation::Equal { tol: 1e-12 }, 1.0),
        Certification::new("Im <u(0)|w(0)> = 0", overlap_c.im, Relation::Equal { tol: 1e-12 }, 0.0),
        Certification::new(
            "initial overlap = sqrt(eps |<v1|v2>|^2 + 1 - eps)",
            initial_overlap,
            Relation::Equal { tol: 1e-12 },
            (eps * g2 + 1.0 - eps).sqrt(),
        ),
        Certification::new("initial overlap >= sqrt(1 - eps)", initial_overlap, Relation::AtLeast, (1.0 - eps).sqrt()),
        Certification::new("initial overlap > 1 - eps", initial_overlap, Relation::Above, 1.0 - eps),
        Certification::new("|xi| <= 1 + sqrt(2)", xi.abs(), Relation::AtMost, 1.0 + SQRT_2),
        Certification::new(
            "sqrt(eps) exp(gap T) = 1",
            se * (gap * t).exp(),
            Relation::Equal { tol: 1e-10 },
            1.0,
        ),
        Certification::new(
            "u(T) matches eigen closed form (relative)",
            (&ut - &closed_u).norm() / scale_u,
            Relation::AtMost,
            1e-9,
        ),
        Certification::new(
            "w(T) matches eigen closed form (relative)",
            (&wt - &closed_w).norm() / scale_w,
            Relation::AtMost,
            1e-9,
        ),
        Certification::new(
            "final fidelity^2 matches closed form",
            final_fidelity * final_fidelity,
            Relation::Equal { tol: 1e-9 },
            closed_f2,
        ),
        Certification::new("final fidelity <= bound in |xi|", final_fidelity, Relation::AtMost, bound_xi),
        Certification::new("final fidelity <= C", final_fidelity, Relation::AtMost, bound_c),
        Certification::new("C < 1", bound_c, Relation::Below, 1.0),
        Certification::new(
            "perturbed trace distance sqrt((3+C)(1-C)) = 2 sqrt(1 - ((1+C)/2)^2)",
            perturbed,
            Relation::Equal { tol: 1e-12 },
            trace_norm_pure((1.0 + bound_c) / 2.0),
        ),
        Certification::new("perturbed trace distance > 0", perturbed, Relation::Above, 0.0),
    ];

    Ok(WitnessPair {
        family: WitnessFamily::RealpartGap,
        a,
        b: None,
        u0,
        w0,
        horizon: t,
        u_final,
        w_final,
        params: WitnessParams {
            eps: Some(eps),
            v1: Some(v1),
            v2: Some(v2),
            xi: Some(xi),
            theta: Some(theta),
            ..Default::default()
        },
        initial_overlap,
        final_fidelity,
        fidelity_bound: bound_c,
        trace_distance,
        trace_distance_floor: None,
        mu: None,
        query_floor: 1.0 / se,
        certifications: certs,
    })
}

/// `μ = ⁴√(1+δ²)/δ` of the 3×3 witness matrices.
pub fn nonnormal_mu_closed_form(delta: f64) -> f64 {
    (1.0 + delta * delta).powf(0.25) / delta
}

fn witness_basis(delta: f64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(3, 3, &[r(1.0), r(1.0), ZERO, ZERO, r(delta), ZERO, ZERO, ZERO, r(1.0)])
}

/// Pair driven by non-normality at equal real parts, `b = 0`, `T = 1`.
pub fn witness_nonnormal_homogeneous(delta: f64) -> Result<WitnessPair> {
    check_delta(delta)?;
    let i = c(0.0, 1.0);
    let a = ComplexMatrix::from_row_slice(
        3,
        3,
        &[i, c(0.0, 1.0 / delta), ZERO, ZERO, c(0.0, 2.0), ZERO, ZERO, ZERO, c(0.0, 3.0)],
    );
    let d = [c(0.0, 1.0), c(0.0, 2.0), c(0.0, 3.0)];
    let reconstructed = from_eigendata(&witness_basis(delta), &d)?;
    let sd = (1.0 - delta * delta).sqrt();
    let u0 = matrix::vector_real(&[0.0, 0.0, 1.0]);
    let w0 = matrix::vector_real(&[0.0, delta, sd]);
    let e = matrix::matrix_exponential(&a, 1.0)?;
    let ut = &e * &u0;
    let wt = &e * &w0;
    let e1 = i.exp();
    let e2 = (i * 2.0).exp();
    let e3 = (i * 3.0).exp();
    let u_disp = matrix::vector(&[ZERO, ZERO, e3]);
    let w_disp = matrix::vector(&[e2 - e1, e2 * delta, e3 * sd]);
    let u_final = unit(&ut)?;
    let w_final = unit(&wt)?;
    let initial_overlap = inner(&u0, &w0).norm();
    let final_fidelity = inner(&u_final, &w_final).norm();
    let gap21 = (e2 - e1).norm();
    let bound_c = 1.0 / (gap21 * gap21 + 1.0).sqrt();
    let mu = matrix::non_normality(&a)?;
    let perturbed = trace_norm_pure(bound_c + 0.2);
    let trace_distance = trace_norm_states(&u_final, &w_final);

    let certs = vec![
        Certification::new("A = V D V^-1", matrix::spectral_norm(&(&a - reconstructed)), Relation::AtMost, 1e-12),
        Certification::new("initial overlap = sqrt(1 - delta^2)", initial_overlap, Relation::Equal { tol: 1e-14 }, sd),
        Certification::new("initial overlap >= 1 - delta^2", initial_overlap, Relation::AtLeast, 1.0 - delta * delta),
        Certification::new("u(1) matches displayed state", (&ut - &u_disp).norm(), Relation::AtMost, 1e-10),
        Certification::new("w(1) matches displayed state", (&wt - &w_disp).norm(), Relation::AtMost, 1e-10),
        Certification::new(
            "|e^{2i} - e^{i}| = 2 sin(1/2)",
            gap21,
            Relation::Equal { tol: 1e-14 },
            2.0 * (0.5f64).sin(),
        ),
        Certification::new(
            "final fidelity = sqrt(1-delta^2)/sqrt(|e^{2i}-e^{i}|^2+1)",
            final_fidelity,
            Relation::Equal { tol: 1e-10 },
            sd / (gap21 * gap21 + 1.0).sqrt(),
        ),
        Certification::new("final fidelity <= 1/sqrt(|e^{2i}-e^{i}|^2+1)", final_fidelity, Relation::AtMost, bound_c),
        Certification::new("mu(A) = (1+delta^2)^{1/4}/delta", mu, Relation::Equal { tol: 1e-10 * (1.0 + mu) }, nonnormal_mu_closed_form(delta)),
        Certification::new("eigenvalue real parts equal", realpart_gap(&a)?, Relation::AtMost, 1e-10),
        Certification::new("perturbed trace distance (output error 1/10) > 0.77", perturbed, Relation::Above, 0.77),
        Certification::new("trace distance of outputs >= 0.77", trace_distance, Relation::AtLeast, 0.77),
    ];

    Ok(WitnessPair {
        family: WitnessFamily::NonnormalHomogeneous,
        a,
        b: None,
        u0,
        w0,
        horizon: 1.0,
        u_final,
        w_final,
        params: WitnessParams { delta: Some(delta), eps: Some(delta * delta), ..Default::default() },
        initial_overlap,
        final_fidelity,
        fidelity_bound: bound_c,
        trace_distance,
        trace_distance_floor: Some(0.77),
        mu: Some(mu),
        query_floor: 1.0 / delta,
        certifications: certs,
    })
}

/// Root of `√ε e^{γT} = 1 + √2 + T` by bisection. Returns `(T, residual)`.
pub fn inhomogeneous_horizon(eps: f64, gamma: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    if !(gamma > 0.0) {
        return Err(FfodeError::InvalidParameter(format!("growth rate must be positive, got {gamma}")));
    }
    let se = eps.sqrt();
    let f = |t: f64| se * (gamma * t).exp() - (1.0 + SQRT_2 + t);
    let mut lo = 0.0;
    let mut hi = ((1.0 / eps).ln() + 10.0) / gamma;
    let mut grow = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(FfodeError::Numeric("no sign change for the horizon equation".into()));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= 1e-13 || hi - lo <= f64::EPSILON * hi {
            lo = mid;
            hi = mid;
            break;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((t, f(t).abs()))
}

/// Real-part-gap pair with `b = v₂`; needs `α₁ > 0` and `α₁ > α₂`.
pub fn witness_realpart_gap_inhomogeneous(v: &ComplexMatrix, eigenvalues: &[Complex64], eps: f64) -> Result<WitnessPair> {
    check_eps(eps)?;
    check_unit_columns(v)?;
    let a = from_eigendata(v, eigenvalues)?;
    let i1 = argmax_re(eigenvalues);
    let i2 = argmin_re(eigenvalues);
    let (l1, l2) = (eigenvalues[i1], eigenvalues[i2]);
    if !(l1.re > 0.0) {
        return Err(FfodeError::SpectrumViolation(format!("largest real part {} is not positive", l1.re)));
    }
    if !(l1.re - l2.re > 1e-14) {
        return Err(FfodeError::SpectrumViolation("eigenvalues share one real part; no real-part gap".into()));
    }
    let v1: ComplexVector = v.column(i1).into_owned();
    let mut v2: ComplexVector = v.column(i2).into_owned();
    let g0 = inner(&v1, &v2);
    if g0.norm() >= 1.0 - 1e-12 {
        return Err(FfodeError::Degenerate("normalization insolvable: |<v1|v2>| = 1".into()));
    }
    if g0.norm() > 0.0 {
        v2 *= Complex64::from_polar(1.0, -g0.arg());
    }
    let g = inner(&v1, &v2).re;
    let se = eps.sqrt();
    let xi = normalizing_xi(eps, r(g));
    let b = v2.clone();
    let u0 = v2.clone();
    let w0 = v1.scale(se) + v2.scale(xi);
    let gamma = l1.re.min(l1.re - l2.re);
    let (t, residual) = inhomogeneous_horizon(eps, gamma)?;

    let e = matrix::matrix_exponential(&a, t)?;
    let dm = ode_reference::duhamel_matrix(&a, t)?;
    let forced = &dm * &b;
    let ut = &e * &u0 + &forced;
    let wt = &e * &w0 + &forced;
    let c1 = (l1 * t).exp() * se;
    let c2 = (l2 * t).exp() * xi + ode_reference::duhamel_scalar(l2, t);
    let closed_u = v2.clone() * ((l2 * t).exp() + ode_reference::duhamel_scalar(l2, t));
    let closed_w = v1.clone() * c1 + v2.clone() * c2;
    let u_final = unit(&ut)?;
    let w_final = unit(&wt)?;

    let initial_overlap = inner(&u0, &w0).norm();
    let final_fidelity = inner(&u_final, &w_final).norm();
    let g2 = g * g;
    let n1 = c1.norm_sqr();
    let n2 = c2.norm_sqr();
    let bound_c2 = ((2.0 * n1 * g2 + 2.0 * n2) / (n1 * (1.0 + g2) + 2.0 * n2)).sqrt();
    let c2_cap = (1.0 + SQRT_2 + t) * (l2.re.max(0.0) * t).exp();
    let bound_c = ((2.0 * g2 + 2.0) / (3.0 + g2)).sqrt();
    let trace_distance = trace_norm_states(&u_final, &w_final);
    let perturbed = ((3.0 + bound_c) * (1.0 - bound_c)).sqrt();

    let rel = |x: &ComplexVector, y: &ComplexVector| (x - y).norm() / y.norm().max(1e-300);
    let certs = vec![
        Certification::new("|w(0)| = 1", w0.norm(), Relation::Equal { tol: 1e-12 }, 1.0),
        Certification::new("<v1|v2> is real", inner(&v1, &v2).im, Relation::Equal { tol: 1e-14 }, 0.0),
        Certification::new("initial overlap > 1 - eps", initial_overlap, Relation::Above, 1.0 - eps),
        Certification::new("initial overlap >= sqrt(1 - eps)", initial_overlap, Relation::AtLeast, (1.0 - eps).sqrt()),
        Certification::new("|xi| <= 1 + sqrt(2)", xi.abs(), Relation::AtMost, 1.0 + SQRT_2),
        Certification::new(
            "horizon residual |sqrt(eps) e^{gamma T} - (1 + sqrt(2) + T)|",
            residual,
            Relation::AtMost,
            1e-10,
        ),
        Certification::new("u(T) matches eigen closed form (relative)", rel(&ut, &closed_u), Relation::AtMost, 1e-9),
        Certification::new("w(T) matches eigen closed form (relative)", rel(&wt, &closed_w), Relation::AtMost, 1e-9),
        Certification::new("|c2| <= (1 + sqrt(2) + T) e^{max(0,alpha2) T}", n2.sqrt(), Relation::AtMost, c2_cap),
        Certification::new("final fidelity <= bound in c1, c2", final_fidelity, Relation::AtMost, bound_c2),
        Certification::new("final fidelity <= C", final_fidelity, Relation::AtMost, bound_c),
        Certification::new("C < 1", bound_c, Relation::Below, 1.0),
        Certification::new("perturbed trace distance > 0", perturbed, Relation::Above, 0.0),
    ];

    Ok(WitnessPair {
        family: WitnessFamily::RealpartGapInhomogeneous,
        a,
        b: Some(b),
        u0,
        w0,
        horizon: t,
        u_final,
        w_final,
        params: WitnessParams { eps: Some(eps), v1: Some(v1), v2: Some(v2), xi: Some(xi), ..Default::default() },
        initial_overlap,
        final_fidelity,
        fidelity_bound: bound_c,
        trace_distance,
        trace_distance_floor: None,
        mu: None,
        query_floor: 1.0 / se,
        certifications: certs,
    })
}

/// Non-normal pair with `b = (0,0,1)`, `T = 1`.
pub fn witness_nonnormal_inhomogeneous(delta: f64) -> Result<WitnessPair> {
    check_delta(delta)?;
    let a = ComplexMatrix::from_row_slice(
        3,
        3,
        &[r(-1.0), r(-1.0 / delta), ZERO, ZERO, r(-2.0), ZERO, ZERO, ZERO, r(-0.5)],
    );
    let reconstructed = from_eigendata(&witness_basis(delta), &[r(-1.0), r(-2.0), r(-0.5)])?;
    let sd = (1.0 - delta * delta).sqrt();
    let b = matrix::vector_real(&[0.0, 0.0, 1.0]);
    let u0 = b.clone();
    let w0 = matrix::vector_real(&[0.0, delta, sd]);
    let p = ode_reference::OdeProblem::constant(a.clone(), u0.clone(), b.clone(), 1.0)?;
    let q = ode_reference::OdeProblem::constant(a.clone(), w0.clone(), b.clone(), 1.0)?;
    let ut = ode_reference::solve_reference(&p)?;
    let wt = ode_reference::solve_reference(&q)?;
    let eh = (-0.5f64).exp();
    let u_disp = matrix::vector_real(&[0.0, 0.0, 2.0 - eh]);
    let w3 = 2.0 - (2.0 - sd) * eh;
    let w1 = -1.0 / E + 1.0 / (E * E);
    let w_disp = matrix::vector_real(&[w1, delta / (E * E), w3]);
    let u_final = unit(&ut)?;
    let w_final = unit(&wt)?;
    let initial_overlap = inner(&u0, &w0).norm();
    let final_fidelity = inner(&u_final, &w_final).norm();
    let bound_mid = 1.0 / (1.0 + (w1 / w3).powi(2)).sqrt();
    let bound_c = 1.0 / (1.0 + (E - 1.0).powi(2) / (4.0 * E.powi(4))).sqrt();
    let mu = matrix::non_normality(&a)?;
    let perturbed = trace_norm_pure(bound_c + 0.002);
    let trace_distance = trace_norm_states(&u_final, &w_final);

    let certs = vec![
        Certification::new("A = V D V^-1", matrix::spectral_norm(&(&a - reconstructed)), Relation::AtMost, 1e-12),
        Certification::new("initial overlap >= 1 - delta^2", initial_overlap, Relation::AtLeast, 1.0 - delta * delta),
        Certification::new("u(1) = (0, 0, 2 - e^{-1/2})", (&ut - &u_disp).norm(), Relation::AtMost, 1e-10),
        Certification::new("w(1) matches closed form", (&wt - &w_disp).norm(), Relation::AtMost, 1e-10),
        Certification::new(
            "|w1(1)|/|w3(1)| >= (1/e - 1/e^2)/2",
            (w1 / w3).abs(),
            Relation::AtLeast,
            (1.0 / E - 1.0 / (E * E)) / 2.0,
        ),
        Certification::new("final fidelity <= 1/sqrt(1 + w1^2/w3^2)", final_fidelity, Relation::AtMost, bound_mid),
        Certification::new("final fidelity <= 1/sqrt(1+(e-1)^2/(4e^4))", final_fidelity, Relation::AtMost, bound_c),
        Certification::new("mu(A) = (1+delta^2)^{1/4}/delta", mu, Relation::Equal { tol: 1e-10 * (1.0 + mu) }, nonnormal_mu_closed_form(delta)),
        Certification::new("perturbed trace distance (output error 1/1000) >= 0.19", perturbed, Relation::AtLeast, 0.19),
        Certification::new("trace distance of outputs >= 0.19", trace_distance, Relation::AtLeast, 0.19),
    ];

    Ok(WitnessPair {
        family: WitnessFamily::NonnormalInhomogeneous,
        a,
        b: Some(b),
        u0,
        w0,
        horizon: 1.0,
        u_final,
        w_final,
        params: WitnessParams { delta: Some(delta), eps: Some(delta * delta), ..Default::default() },
        initial_overlap,
        final_fidelity,
        fidelity_bound: bound_c,
        trace_distance,
        trace_distance_floor: Some(0.19),
        mu: Some(mu),
        query_floor: 1.0 / delta,
        certifications: certs,
    })
}

/// Decay witness for `du/dt = −Hu` with `H ⪰ 0`, `λ_min(H) = 0`.
pub fn witness_imaginary_time(h: &ComplexMatrix, t: f64) -> Result<WitnessPair> {
    require_square(h)?;
    let defect = matrix::hermiticity_defect(h);
    if defect > 1e-12 * (1.0 + matrix::spectral_norm(h)) {
        return Err(FfodeError::NotHermitian(defect));
    }
    if !(t > 0.0) {
        return Err(FfodeError::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    let (vals, vecs) = matrix::hermitian_eigen(h)?;
    let top = *vals.last().expect("nonempty");
    if vals[0].abs() > 1e-12 * (1.0 + top.abs()) {
        return Err(FfodeError::SpectrumViolation(format!("smallest eigenvalue {} is not zero", vals[0])));
    }
    if !(top > 0.0) {
        return Err(FfodeError::SpectrumViolation("H has no positive eigenvalue".into()));
    }
    let eps = (-2.0 * top * t).exp();
    if !(eps > 1e-300) {
        return Err(FfodeError::InvalidParameter(format!("decay e^(-|H| T) = e^{} underflows", -top * t)));
    }
    let eig: Vec<Complex64> = vals.iter().map(|&l| r(-l)).collect();
    let mut w = witness_realpart_gap(&vecs, &eig, eps)?;
    let neg = -h.clone();
    let decayed = matrix::matrix_exponential(&neg, t)? * &w.u0;
    let decay = decayed.norm();
    let top_vec: ComplexVector = vecs.column(vals.len() - 1).into_owned();
    w.certifications.push(Certification::new(
        "u(0) is a top eigenstate",
        inner(&top_vec, &w.u0).norm(),
        Relation::Equal { tol: 1e-10 },
        1.0,
    ));
    w.certifications.push(Certification::new("horizon = T", w.horizon, Relation::Equal { tol: 1e-12 * (1.0 + t) }, t));
    w.certifications.push(Certification::new(
        "xi = e^{-|H| T} (relative)",
        decay / (-top * t).exp(),
        Relation::Equal { tol: 1e-10 },
        1.0,
    ));
    w.certifications.push(Certification::new(
        "e^{T gap} xi = 1",
        (t * (vals.last().unwrap() - vals[0])).exp() * decay,
        Relation::Equal { tol: 1e-10 },
        1.0,
    ));
    w.family = WitnessFamily::ImaginaryTime;
    w.params.decay = Some(decay);
    w.query_floor = 1.0 / decay;
    Ok(w)
}

/// Input pair for `Ax = b` with `A = U D V†`, `d₁ = 1`, `d_N = 1/κ`.
pub fn witness_linear_system(kappa: f64, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<WitnessPair> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(FfodeError::InvalidParameter(format!("kappa must exceed 1, got {kappa}")));
    }
    let n = require_square(u)?;
    if v.shape() != u.shape() {
        return Err(FfodeError::ShapeMismatch(format!("{:?} vs {:?}", u.shape(), v.shape())));
    }
    if n < 2 {
        return Err(FfodeError::InvalidParameter("dimension must be at least 2".into()));
    }
    for m in [u, v] {
        let d = matrix::unitarity_defect(m);
        if d > 1e-10 {
            return Err(FfodeError::NotUnitary(d));
        }
    }
    let d: Vec<f64> = (0..n).map(|j| kappa.powf(-(j as f64) / (n as f64 - 1.0))).collect();
    let a = u * matrix::diag_real(&d) * v.adjoint();
    let u1: ComplexVector = u.column(0).into_owned();
    let un: ComplexVector = u.column(n - 1).into_owned();
    let s = (1.0 - 1.0 / (kappa * kappa)).sqrt();
    let b1 = u1.clone();
    let b2 = u1.scale(s) + un.scale(1.0 / kappa);
    let lu = a.clone().lu();
    let x1 = lu.solve(&b1).ok_or_else(|| FfodeError::Numeric("singular system".into()))?;
    let x2 = lu.solve(&b2).ok_or_else(|| FfodeError::Numeric("singular system".into()))?;
    let x1 = unit(&x1)?;
    let x2 = unit(&x2)?;
    let initial = inner(&b1, &b2);
    let final_fidelity = inner(&x1, &x2).norm();
    let closed = s / (2.0 - 1.0 / (kappa * kappa)).sqrt();
    let trace_distance = trace_norm_states(&x1, &x2);
    let perturbed_f = 1.0 / SQRT_2 + 0.2;
    let kappa_measured = {
        let sv = a.singular_values();
        sv.max() / sv.min()
    };

    let certs = vec![
        Certification::new("|b2| = 1", b2.norm(), Relation::Equal { tol: 1e-12 }, 1.0),
        Certification::new("cond(A) = kappa (relative)", kappa_measured / kappa, Relation::Equal { tol: 1e-9 }, 1.0),
        Certification::new("<b1|b2> = sqrt(1 - 1/kappa^2)", initial.re, Relation::Equal { tol: 1e-12 }, s),
        Certification::new("<b1|b2> >= 1 - 1/kappa^2", initial.norm(), Relation::AtLeast, 1.0 - 1.0 / (kappa * kappa)),
        Certification::new(
            "solution overlap = sqrt(1-1/kappa^2)/sqrt(2-1/kappa^2)",
            final_fidelity,
            Relation::Equal { tol: 1e-10 },
            closed,
        ),
        Certification::new("solution overlap <= 1/sqrt(2)", final_fidelity, Relation::AtMost, 1.0 / SQRT_2),
        Certification::new("perturbed fidelity (output error 1/10) < 0.91", perturbed_f, Relation::Below, 0.91),
        Certification::new(
            "perturbed half trace norm >= 0.41",
            (1.0 - perturbed_f * perturbed_f).sqrt(),
            Relation::AtLeast,
            0.41,
        ),
    ];

    Ok(WitnessPair {
        family: WitnessFamily::LinearSystem,
        a,
        b: None,
        u0: b1,
        w0: b2,
        horizon: 0.0,
        u_final: x1,
        w_final: x2,
        params: WitnessParams { kappa: Some(kappa), eps: Some(1.0 / (kappa * kappa)), ..Default::default() },
        initial_overlap: initial.norm(),
        final_fidelity,
        fidelity_bound: 1.0 / SQRT_2,
        trace_distance,
        trace_distance_floor: Some(0.41),
        mu: None,
        query_floor: kappa,
        certifications: certs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftReport {
    /// Phase-aligned distance between the two normalized solutions.
    pub state_defect: f64,
    /// `‖u_c(T)‖ / ‖u(T)‖`.
    pub norm_ratio: f64,
    /// `e^{cT}`.
    pub expected_norm_ratio: f64,
    pub gap: f64,
    pub gap_shifted: f64,
    pub mu: f64,
    pub mu_shifted: f64,
}

impl ShiftReport {
    /// μ is compared through μ², the commutator norm; the square root
    /// amplifies rounding near normal matrices.
    pub fn holds(&self) -> bool {
        let tol = 1e-10;
        self.state_defect <= tol
            && (self.norm_ratio / self.expected_norm_ratio - 1.0).abs() <= 1e-9
            && (self.gap - self.gap_shifted).abs() <= tol * (1.0 + self.gap)
            && (self.mu * self.mu - self.mu_shifted * self.mu_shifted).abs() <= tol * (1.0 + self.mu * self.mu)
    }
}

pub fn shifting_equivalence_report(a: &ComplexMatrix, shift: f64, u0: &ComplexVector, t: f64) -> Result<ShiftReport> {
    let n = require_square(a)?;
    if u0.len() != n {
        return Err(FfodeError::ShapeMismatch(format!("u0 has length {}, A is {n}x{n}", u0.len())));
    }
    let shifted = a + matrix::identity(n) * r(shift);
    let u = matrix::matrix_exponential(a, t)? * u0;
    let us = matrix::matrix_exponential(&shifted, t)? * u0;
    if !(u.norm() > 1e-300) || !(us.norm() > 1e-300) {
        return Err(FfodeError::ZeroVector);
    }
    Ok(ShiftReport {
        state_defect: phase_distance(&u, &us),
        norm_ratio: us.norm() / u.norm(),
        expected_norm_ratio: (shift * t).exp(),
        gap: realpart_gap(a)?,
        gap_shifted: realpart_gap(&shifted)?,
        mu: matrix::non_normality(a)?,
        mu_shifted: matrix::non_normality(&shifted)?,
    })
}

/// True iff `A` and `A + cI` give the same normalized solution and the same
/// hardness measures.
pub fn shifting_equivalence_check(a: &ComplexMatrix, shift: f64, u0: &ComplexVector, t: f64) -> Result<bool> {
    Ok(shifting_equivalence_report(a, shift, u0, t)?.holds())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumRow {
    pub t: f64,
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Distance from `|u(T)⟩` to `±|A⁻¹b⟩` against `2(‖A‖+κ)e^{−|l(A)|T}`.
pub fn equilibrium_reduction_check(
    a: &ComplexMatrix,
    b: &ComplexVector,
    u0: &ComplexVector,
    times: &[f64],
) -> Result<Vec<EquilibriumRow>> {
    let n = require_square(a)?;
    if b.len() != n || u0.len() != n {
        return Err(FfodeError::ShapeMismatch("b and u0 must match A".into()));
    }
    require_unit(b, "b")?;
    require_unit(u0, "u0")?;
    let l = matrix::logarithmic_norm(a)?;
    if !(l < 0.0) {
        return Err(FfodeError::SpectrumViolation(format!("logarithmic norm {l} is not negative")));
    }
    let sv = a.singular_values();
    let norm = sv.max();
    let kappa = norm / sv.min();
    let x = a.clone().lu().solve(b).ok_or_else(|| FfodeError::Numeric("singular coefficient".into()))?;
    let x = unit(&x)?;
    times
        .iter()
        .map(|&t| {
            let u = if t == 0.0 {
                u0.clone()
            } else {
                let p = ode_reference::OdeProblem::constant(a.clone(), u0.clone(), b.clone(), t)?;
                unit(&ode_reference::solve_reference(&p)?)?
            };
            let distance = (&u - &x).norm().min((&u + &x).norm());
            let bound = 2.0 * (norm + kappa) * (-l.abs() * t).exp();
            Ok(EquilibriumRow { t, distance, bound, holds: distance <= bound * (1.0 + 1e-12) })
        })
        .collect()
}

/// Prepare oracles `O_ψ`, `O_φ = e^{iθM} O_ψ` with `‖O_ψ − O_φ‖ = ‖ψ − φ‖`.
#[derive(Debug, Clone)]
pub struct OraclePair {
    pub o_psi: ComplexMatrix,
    pub o_phi: ComplexMatrix,
    pub theta: f64,
    /// Generator `M = i|ψ⟩⟨ψ⊥| − i|ψ⊥⟩⟨ψ|` (zero when ψ = φ).
    pub generator: ComplexMatrix,
    pub certifications: Vec<Certification>,
}

impl OraclePair {
    pub fn overlap(&self) -> f64 {
        let n = self.o_psi.nrows();
        let e0 = matrix::basis_vector(n, 0);
        inner(&(&self.o_psi * &e0), &(&self.o_phi * &e0)).re
    }

    pub fn all_hold(&self) -> bool {
        self.certifications.iter().all(|c| c.holds)
    }
}

pub fn worst_case_oracle_pair(psi: &ComplexVector, phi: &ComplexVector) -> Result<OraclePair> {
    if psi.len() != phi.len() {
        return Err(FfodeError::ShapeMismatch(format!("{} vs {}", psi.len(), phi.len())));
    }
    require_unit(psi, "psi")?;
    require_unit(phi, "phi")?;
    let n = psi.len();
    let ov = inner(psi, phi);
    if ov.im.abs() > 1e-12 {
        return Err(FfodeError::InvalidParameter(format!("overlap must be real, imaginary part {:e}", ov.im)));
    }
    if !(ov.re > 0.0) {
        return Err(FfodeError::Degenerate(format!("overlap {} is not positive", ov.re)));
    }
    let o_psi = matrix::unitary_with_first_column(psi)?;
    let cos = ov.re.min(1.0);
    let theta = cos.acos();
    let perp = phi - psi * ov;
    let (rot, generator) = if perp.norm() <= 1e-15 {
        (matrix::identity(n), ComplexMatrix::zeros(n, n))
    } else {
        let pp = perp.unscale(perp.norm());
        let i = c(0.0, 1.0);
        let m = matrix::outer(psi, &pp) * i - matrix::outer(&pp, psi) * i;
        let proj = matrix::outer(psi, psi) + matrix::outer(&pp, &pp);
        let skew = matrix::outer(&pp, psi) - matrix::outer(psi, &pp);
        let rot = matrix::identity(n) + proj * r(cos - 1.0) + skew * r(theta.sin());
        (rot, m)
    };
    let o_phi = &rot * &o_psi;
    let e0 = matrix::basis_vector(n, 0);
    let gen_exp = matrix::matrix_exponential(&(generator.clone() * c(0.0, theta)), 1.0)?;
    let dist = (psi - phi).norm();
    let op_dist = matrix::spectral_norm(&(&o_psi - &o_phi));
    let inv_dist = matrix::spectral_norm(&(o_psi.adjoint() - o_phi.adjoint()));
    let certs = vec![
        Certification::new("O_psi unitary", matrix::unitarity_defect(&o_psi), Relation::AtMost, 1e-12),
        Certification::new("O_phi unitary", matrix::unitarity_defect(&o_phi), Relation::AtMost, 1e-12),
        Certification::new("O_psi|0> = psi", (&o_psi * &e0 - psi).norm(), Relation::AtMost, 1e-10),
        Certification::new("O_phi|0> = phi", (&o_phi * &e0 - phi).norm(), Relation::AtMost, 1e-10),
        Certification::new("rotation = exp(i theta M)", matrix::spectral_norm(&(&rot - gen_exp)), Relation::AtMost, 1e-10),
        Certification::new("|O_psi - O_phi| = |psi - phi|", op_dist, Relation::Equal { tol: 1e-10 }, dist),
        Certification::new("|O_psi^-1 - O_phi^-1| = |O_psi - O_phi|", inv_dist, Relation::Equal { tol: 1e-10 }, op_dist),
        Certification::new("|psi - phi|^2 = 2(1 - <psi|phi>)", dist * dist, Relation::Equal { tol: 1e-10 }, 2.0 * (1.0 - cos)),
    ];
    Ok(OraclePair { o_psi, o_phi, theta, generator, certifications: certs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleUse {
    Forward,
    Inverse,
    Controlled,
    ControlledInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleSlot {
    pub usage: OracleUse,
    /// Oracle register the query acts on.
    pub register: usize,
    /// Ancilla qubit controlling the query (controlled uses only).
    pub control: Option<usize>,
}

/// `U_{q+1} V_q U_q ⋯ V_1 U_1` on `ancilla qubits ⊗ registers × oracle space`.
/// Ancilla qubits are the most significant index bits.
#[derive(Debug, Clone)]
pub struct AmplifierCircuit {
    pub oracle_dim: usize,
    pub registers: usize,
    pub ancilla_qubits: usize,
    pub interleavers: Vec<ComplexMatrix>,
    pub slots: Vec<OracleSlot>,
}

impl AmplifierCircuit {
    pub fn total_dim(&self) -> usize {
        (1usize << self.ancilla_qubits) * self.oracle_dim.pow(self.registers as u32)
    }

    pub fn queries(&self) -> usize {
        self.slots.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FfodeError::InvalidParameter(format!("malformed circuit: {m}")));
        if self.oracle_dim == 0 || self.registers == 0 {
            return bad("empty oracle space".into());
        }
        if self.interleavers.len() != self.slots.len() + 1 {
            return bad(format!("{} interleavers for {} slots", self.interleavers.len(), self.slots.len()));
        }
        let d = self.total_dim();
        for (j, u) in self.interleavers.iter().enumerate() {
            if u.nrows() != d || u.ncols() != d {
                return bad(format!("interleaver {j} is {}x{}, expected {d}x{d}", u.nrows(), u.ncols()));
            }
            let defect = matrix::unitarity_defect(u);
            if defect > 1e-10 {
                return bad(format!("interleaver {j} is not unitary (defect {defect:e})"));
            }
        }
        for (j, s) in self.slots.iter().enumerate() {
            if s.register >= self.registers {
                return bad(format!("slot {j} targets register {}", s.register));
            }
            let controlled = matches!(s.usage, OracleUse::Controlled | OracleUse::ControlledInverse);
            match (controlled, s.control) {
                (true, Some(q)) if q < self.ancilla_qubits => {}
                (true, _) => return bad(format!("slot {j} needs a valid control qubit")),
                (false, None) => {}
                (false, Some(_)) => return bad(format!("slot {j} is uncontrolled but names a control")),
            }
        }
        Ok(())
    }

    fn slot_operator(&self, slot: &OracleSlot, oracle: &ComplexMatrix) -> ComplexMatrix {
        let o = match slot.usage {
            OracleUse::Forward | OracleUse::Controlled => oracle.clone(),
            OracleUse::Inverse | OracleUse::ControlledInverse => oracle.adjoint(),
        };
        let left = self.oracle_dim.pow(slot.register as u32);
        let right = self.oracle_dim.pow((self.registers - slot.register - 1) as u32);
        let on_regs = matrix::kron(&matrix::kron(&matrix::identity(left), &o), &matrix::identity(right));
        let anc = 1usize << self.ancilla_qubits;
        match slot.control {
            None => matrix::kron(&matrix::identity(anc), &on_regs),
            Some(q) => {
                let bit = self.ancilla_qubits - 1 - q;
                let rd = on_regs.nrows();
                let mut full = ComplexMatrix::zeros(anc * rd, anc * rd);
                let id = matrix::identity(rd);
                for a in 0..anc {
                    let blk = if (a >> bit) & 1 == 1 { &on_regs } else { &id };
                    full.view_mut((a * rd, a * rd), (rd, rd)).copy_from(blk);
                }
                full
            }
        }
    }

    /// `𝒰|0⟩` with every slot querying `oracle`.
    pub fn simulate(&self, oracle: &ComplexMatrix) -> Result<ComplexVector> {
        self.validate()?;
        if oracle.nrows() != self.oracle_dim || oracle.ncols() != self.oracle_dim {
            return Err(FfodeError::ShapeMismatch(format!(
                "oracle is {}x{}, circuit expects {}",
                oracle.nrows(),
                oracle.ncols(),
                self.oracle_dim
            )));
        }
        let mut state = matrix::basis_vector(self.total_dim(), 0);
        for (u, s) in self.interleavers.iter().zip(&self.slots) {
            state = u * state;
            state = self.slot_operator(s, oracle) * state;
        }
        Ok(self.interleavers.last().expect("validated") * state)
    }

    /// Haar interleavers and uniformly drawn slots.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, oracle_dim: usize, registers: usize, ancilla_qubits: usize, q: usize) -> Self {
        let mut c = AmplifierCircuit { oracle_dim, registers, ancilla_qubits, interleavers: Vec::new(), slots: Vec::new() };
        let d = c.total_dim();
        c.interleavers = (0..=q).map(|_| random::unitary(rng, d)).collect();
        c.slots = (0..q)
            .map(|_| {
                let usage = if ancilla_qubits == 0 {
                    [OracleUse::Forward, OracleUse::Inverse][rng.random_range(0..2)]
                } else {
                    [OracleUse::Forward, OracleUse::Inverse, OracleUse::Controlled, OracleUse::ControlledInverse][rng.random_range(0..4)]
                };
                let control = match usage {
                    OracleUse::Controlled | OracleUse::ControlledInverse => Some(rng.random_range(0..ancilla_qubits)),
                    _ => None,
                };
                OracleSlot { usage, register: rng.random_range(0..registers), control }
            })
            .collect();
        c
    }

    /// Identity interleavers with forward queries on registers `0..q`.
    pub fn parallel_queries(oracle_dim: usize, q: usize) -> Self {
        let registers = q.max(1);
        let mut c = AmplifierCircuit { oracle_dim, registers, ancilla_qubits: 0, interleavers: Vec::new(), slots: Vec::new() };
        let d = c.total_dim();
        c.interleavers = vec![matrix::identity(d); q + 1];
        c.slots = (0..q).map(|k| OracleSlot { usage: OracleUse::Forward, register: k, control: None }).collect();
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplifierCheck {
    pub queries: usize,
    /// `1 − ⟨ψ|φ⟩`.
    pub eps: f64,
    /// `‖𝒰_ψ|0⟩⟨0|𝒰_ψ† − 𝒰_φ|0⟩⟨0|𝒰_φ†‖₁`.
    pub distance: f64,
    /// `2q√(2ε)`.
    pub bound: f64,
    pub ratio: f64,
}

impl AmplifierCheck {
    pub fn holds(&self) -> bool {
        self.ratio <= 1.0 + 1e-12
    }
}

pub fn amplifier_bound_check(pair: &OraclePair, circuit: &AmplifierCircuit) -> Result<AmplifierCheck> {
    let a = circuit.simulate(&pair.o_psi)?;
    let b = circuit.simulate(&pair.o_phi)?;
    let distance = trace_norm_states(&a, &b);
    let eps = (1.0 - pair.overlap()).max(0.0);
    let q = circuit.queries();
    let bound = 2.0 * q as f64 * (2.0 * eps).sqrt();
    let ratio = if distance <= 1e-12 {
        0.0
    } else if bound > 0.0 {
        distance / bound
    } else {
        f64::INFINITY
    };
    Ok(AmplifierCheck { queries: q, eps, distance, bound, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_certified(w: &WitnessPair) {
        for c in &w.certifications {
            assert!(c.holds, "{:?}: {c}", w.family);
        }
    }

    fn orthonormal_pair(l1: Complex64, l2: Complex64) -> (ComplexMatrix, Vec<Complex64>) {
        (matrix::identity(2), vec![l1, l2])
    }

    #[test]
    fn realpart_gap_orthonormal_example() {
        let (v, eig) = orthonormal_pair(r(0.5), r(-0.5));
        let w = witness_realpart_gap(&v, &eig, 0.01).unwrap();
        assert_certified(&w);
        assert!((w.params.xi.unwrap() - 0.99f64.sqrt()).abs() < 1e-14);
        assert!((w.initial_overlap - 0.99f64.sqrt()).abs() < 1e-14);
        let exact = (0.99f64 / 1.99).sqrt();
        assert!((w.final_fidelity - exact).abs() < 1e-10);
        assert!((w.final_fidelity - 0.70534).abs() < 2e-5);
        assert!((w.fidelity_bound - 0.9596830).abs() < 1e-7);
        assert!((w.horizon - 100f64.ln() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn realpart_gap_eps_to_zero() {
        let (v, eig) = orthonormal_pair(c(0.2, 1.0), c(-0.3, -2.0));
        let mut last_t = 0.0;
        let mut last_ov = 0.0;
        for k in 1..8 {
            let eps = 10f64.powi(-k);
            let w = witness_realpart_gap(&v, &eig, eps).unwrap();
            assert_certified(&w);
            assert!(w.horizon > last_t && w.initial_overlap > last_ov);
            last_t = w.horizon;
            last_ov = w.initial_overlap;
        }
        assert!(1.0 - last_ov < 1e-7);
    }

    #[test]
    fn realpart_gap_rejects_equal_real_parts() {
        let (v, eig) = orthonormal_pair(c(-1.0, 1.0), c(-1.0, 3.0));
        assert!(matches!(witness_realpart_gap(&v, &eig, 0.1), Err(FfodeError::SpectrumViolation(_))));
        let (v, eig) = orthonormal_pair(r(1.0), r(0.0));
        assert!(witness_realpart_gap(&v, &eig, 1.5).is_err());
    }

    #[test]
    fn realpart_gap_rejects_dependent_vectors() {
        let v = ComplexMatrix::from_row_slice(2, 2, &[r(1.0), r(1.0), ZERO, ZERO]);
        assert!(witness_realpart_gap(&v, &[r(1.0), r(0.0)], 0.1).is_err());
    }

    fn unit_columns(m: ComplexMatrix) -> ComplexMatrix {
        let mut m = m;
        for j in 0..m.ncols() {
            let n = m.column(j).norm();
            m.column_mut(j).unscale_mut(n);
        }
        m
    }

    #[test]
    fn xi_bound_on_random_nonorthogonal_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let v = unit_columns(random::ginibre(&mut rng, 3));
            let eig = vec![c(0.7, 0.3), c(-0.4, 1.1), c(0.1, -0.5)];
            for eps in [0.3, 0.01] {
                let w = witness_realpart_gap(&v, &eig, eps).unwrap();
                assert_certified(&w);
                assert!(w.params.xi.unwrap().abs() <= 1.0 + SQRT_2);
            }
        }
    }

    #[test]
    fn nonnormal_homogeneous_example() {
        let w = witness_nonnormal_homogeneous(0.5).unwrap();
        assert_certified(&w);
        assert!((w.mu.unwrap() - 2.11474).abs() < 1e-5);
        assert!((w.fidelity_bound - 0.7218015).abs() < 1e-7);
        assert!(w.trace_distance >= 0.77);
        assert!((w.u_final[2] - c(0.0, 3.0).exp()).norm() < 1e-10);
        for d in [0.1, 0.01, 0.9] {
            assert_certified(&witness_nonnormal_homogeneous(d).unwrap());
        }
        assert!(witness_nonnormal_homogeneous(2.0).is_err());
        assert!(witness_nonnormal_homogeneous(0.0).is_err());
    }

    #[test]
    fn inhomogeneous_horizon_example() {
        let (t, res) = inhomogeneous_horizon(0.01, 1.0).unwrap();
        assert!(res <= 1e-10);
        assert!((0.1 * t.exp() - (1.0 + SQRT_2 + t)).abs() < 1e-10);
        let (v, eig) = orthonormal_pair(r(1.0), r(-1.0));
        let w = witness_realpart_gap_inhomogeneous(&v, &eig, 0.01).unwrap();
        assert_certified(&w);
        assert!((w.horizon - t).abs() < 1e-12);
        assert!((w.fidelity_bound - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn inhomogeneous_realpart_preconditions() {
        let (v, eig) = orthonormal_pair(r(-0.1), r(-1.0));
        assert!(witness_realpart_gap_inhomogeneous(&v, &eig, 0.01).is_err());
        let (v, eig) = orthonormal_pair(r(1.0), r(1.0));
        assert!(witness_realpart_gap_inhomogeneous(&v, &eig, 0.01).is_err());
    }

    #[test]
    fn inhomogeneous_realpart_complex_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let v = unit_columns(random::ginibre(&mut rng, 3));
            let eig = vec![c(0.8, 0.2), c(-0.6, 0.9), c(0.3, 0.0)];
            let w = witness_realpart_gap_inhomogeneous(&v, &eig, 0.05).unwrap();
            assert_certified(&w);
        }
    }

    #[test]
    fn nonnormal_inhomogeneous_example() {
        let w = witness_nonnormal_inhomogeneous(0.5).unwrap();
        assert_certified(&w);
        let expected = 2.0 - (-0.5f64).exp();
        let p = ode_reference::OdeProblem::constant(w.a.clone(), w.u0.clone(), w.b.clone().unwrap(), 1.0).unwrap();
        let ut = ode_reference::solve_reference(&p).unwrap();
        assert!((ut[2].re - expected).abs() < 1e-10 && ut[0].norm() < 1e-14);
        assert!(w.trace_distance >= 0.19);
        assert!((w.mu.unwrap() - nonnormal_mu_closed_form(0.5)).abs() < 1e-10);
    }

    #[test]
    fn imaginary_time_examples() {
        let w = witness_imaginary_time(&matrix::diag_real(&[0.0, 1.0]), 1.0).unwrap();
        assert_certified(&w);
        assert!((w.params.decay.unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        let w = witness_imaginary_time(&matrix::diag_real(&[0.0, 2.0]), 3.0).unwrap();
        assert_certified(&w);
        assert!((w.params.decay.unwrap() - 0.00247875).abs() < 1e-8);
        assert!(((6.0f64).exp() * w.params.decay.unwrap() - 1.0).abs() < 1e-12);
        assert!(witness_imaginary_time(&matrix::diag_real(&[0.5, 1.0]), 1.0).is_err());
    }

    #[test]
    fn imaginary_time_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random::unitary(&mut rng, 4);
        let h = &u * matrix::diag_real(&[0.0, 0.3, 0.9, 1.4]) * u.adjoint();
        let w = witness_imaginary_time(&h, 2.0).unwrap();
        assert_certified(&w);
    }

    #[test]
    fn linear_system_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random::unitary(&mut rng, 4);
        let v = random::unitary(&mut rng, 4);
        let w = witness_linear_system(10.0, &u, &v).unwrap();
        assert_certified(&w);
        assert!((w.final_fidelity - 0.99f64.sqrt() / 1.99f64.sqrt()).abs() < 1e-10);
        let w = witness_linear_system(1e6, &u, &v).unwrap();
        assert!((w.final_fidelity - 1.0 / SQRT_2).abs() < 1e-6);
        assert!(witness_linear_system(1.0, &u, &v).is_err());
    }

    #[test]
    fn shifting_zero_and_antihermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random::ginibre(&mut rng, 4);
        let u0 = random::state(&mut rng, 4);
        assert!(shifting_equivalence_check(&a, 0.0, &u0, 1.3).unwrap());
        let h = random::hermitian(&mut rng, 4);
        let ah = h * c(0.0, -1.0);
        let rep = shifting_equivalence_report(&ah, 0.7, &u0, 2.0).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert!((rep.norm_ratio - (1.4f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn shifted_diagonal_form_is_quantum_dynamics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random::unitary(&mut rng, 3);
        let j = matrix::diag(&[c(0.0, 0.4), c(0.0, -1.2), c(0.0, 2.0)]);
        let a = &u * (matrix::identity(3) * r(-0.8) + &j) * u.adjoint();
        let h = &u * &j * u.adjoint() * c(0.0, 1.0);
        assert!(matrix::hermiticity_defect(&h) < 1e-12);
        let u0 = random::state(&mut rng, 3);
        let t = 1.7;
        let sol = matrix::matrix_exponential(&a, t).unwrap() * &u0;
        let qd = matrix::matrix_exponential(&(h * c(0.0, -1.0)), t).unwrap() * &u0;
        assert!(phase_distance(&sol, &qd) < 1e-10);
        assert!(((sol.norm() / qd.norm()) - (-0.8 * t).exp()).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_negative_identity() {
        let a = -matrix::identity(3);
        let b = matrix::vector_real(&[0.0, 1.0, 0.0]);
        let u0 = matrix::vector_real(&[1.0, 0.0, 0.0]);
        let times: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let rows = equilibrium_reduction_check(&a, &b, &u0, &times).unwrap();
        for row in rows {
            assert!(row.holds);
            assert!((row.bound - 4.0 * (-row.t).exp()).abs() < 1e-12);
        }
        assert!(equilibrium_reduction_check(&matrix::identity(3), &b, &u0, &[1.0]).is_err());
    }

    #[test]
    fn oracle_pair_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = random::state(&mut rng, 4);
        let p = worst_case_oracle_pair(&psi, &psi).unwrap();
        assert!(p.all_hold(), "{:?}", p.certifications.iter().filter(|c| !c.holds).collect::<Vec<_>>());
        assert!(matrix::spectral_norm(&(&p.o_psi - &p.o_phi)) < 1e-15);

        let eps = 0.01;
        let e0 = matrix::basis_vector(4, 0);
        let e1 = matrix::basis_vector(4, 1);
        let phi = e0.scale(1.0 - eps) + e1.scale((1.0 - (1.0 - eps) * (1.0 - eps)).sqrt());
        let p = worst_case_oracle_pair(&e0, &phi).unwrap();
        assert!(p.all_hold());
        let d = matrix::spectral_norm(&(&p.o_psi - &p.o_phi));
        assert!((d - (2.0 * eps).sqrt()).abs() < 1e-12);

        // random pair with the phase of phi rotated onto a real overlap
        let mut phi = random::state(&mut rng, 4);
        let ov = inner(&psi, &phi);
        phi *= Complex64::from_polar(1.0, -ov.arg());
        let p = worst_case_oracle_pair(&psi, &phi).unwrap();
        assert!(p.all_hold());
        assert!((&p.o_phi * &e0 - &phi).norm() < 1e-10);
        assert!(worst_case_oracle_pair(&psi, &(phi.clone() * c(0.0, 1.0))).is_err());
    }

    fn near_pair(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> OraclePair {
        let psi = random::state(rng, n);
        let x = random::state(rng, n);
        let perp = &x - &psi * inner(&psi, &x);
        let perp = perp.unscale(perp.norm());
        let phi = psi.scale(1.0 - eps) + perp.scale((1.0 - (1.0 - eps).powi(2)).sqrt());
        worst_case_oracle_pair(&psi, &phi).unwrap()
    }

    #[test]
    fn amplifier_q1_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = near_pair(&mut rng, 4, 0.02);
        let c = AmplifierCircuit::parallel_queries(4, 1);
        let chk = amplifier_bound_check(&p, &c).unwrap();
        assert!(chk.holds());
        assert!(chk.distance <= 2.0 * (2.0 * 0.02f64).sqrt() + 1e-12);
        let rho = |v: &ComplexVector| matrix::density(v);
        let a = c.simulate(&p.o_psi).unwrap();
        let b = c.simulate(&p.o_phi).unwrap();
        let dense = 2.0 * matrix::schatten1_distance(&rho(&a), &rho(&b)).unwrap();
        assert!((dense - chk.distance).abs() < 1e-10);
    }

    #[test]
    fn amplifier_parallel_queries_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = near_pair(&mut rng, 2, 0.01);
        let mut prev = 0.0;
        for q in 1..=8 {
            let chk = amplifier_bound_check(&p, &AmplifierCircuit::parallel_queries(2, q)).unwrap();
            assert!(chk.holds(), "q={q} ratio {}", chk.ratio);
            assert!(chk.distance >= prev - 1e-12);
            prev = chk.distance;
        }
    }

    #[test]
    fn amplifier_without_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = near_pair(&mut rng, 4, 0.1);
        let c = AmplifierCircuit::random(&mut rng, 4, 1, 1, 0);
        let chk = amplifier_bound_check(&p, &c).unwrap();
        assert_eq!(chk.queries, 0);
        assert_eq!(chk.ratio, 0.0);
    }

    #[test]
    fn amplifier_malformed_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = near_pair(&mut rng, 2, 0.1);
        let mut c = AmplifierCircuit::random(&mut rng, 2, 1, 1, 2);
        c.slots[0] = OracleSlot { usage: OracleUse::Controlled, register: 0, control: None };
        assert!(amplifier_bound_check(&p, &c).is_err());
        let mut c = AmplifierCircuit::random(&mut rng, 2, 1, 1, 2);
        c.interleavers.pop();
        assert!(amplifier_bound_check(&p, &c).is_err());
        let mut c = AmplifierCircuit::random(&mut rng, 2, 1, 1, 1);
        c.slots[0].register = 3;
        assert!(amplifier_bound_check(&p, &c).is_err());
    }

    #[test]
    fn certification_display() {
        let c = Certification::new("x <= 1", 0.5, Relation::AtMost, 1.0);
        assert!(c.to_string().starts_with("PASS x <= 1"));
        assert!(!Certification::new("x > 1", 0.5, Relation::Above, 1.0).holds);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_amplifier_ratio_at_most_one(seed in any::<u64>(), q in 0usize..=8, eps_exp in 1.0f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (od, regs, anc) = [(2, 1, 1), (2, 2, 1), (4, 1, 1), (2, 2, 2), (4, 2, 0), (8, 1, 1)][(seed % 6) as usize];
            let p = near_pair(&mut rng, od, 10f64.powf(-eps_exp));
            let c = AmplifierCircuit::random(&mut rng, od, regs, anc, q);
            prop_assert!(c.total_dim() <= 16);
            let chk = amplifier_bound_check(&p, &c).unwrap();
            prop_assert!(chk.holds(), "ratio {}", chk.ratio);
        }

        #[test]
        fn prop_shift_invariance(seed in any::<u64>(), shift in -3.0f64..3.0, t in 0.1f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2 + (seed % 4) as usize;
            let a = random::ginibre(&mut rng, n).scale(0.5);
            let u0 = random::state(&mut rng, n);
            let rep = shifting_equivalence_report(&a, shift, &u0, t).unwrap();
            prop_assert!(rep.holds(), "{rep:?}");
        }

        #[test]
        fn prop_realpart_gap_witness(seed in any::<u64>(), eps in 0.001f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = unit_columns(random::ginibre(&mut rng, 3));
            let eig: Vec<Complex64> = (0..3).map(|_| c(random::gaussian(&mut rng), random::gaussian(&mut rng))).collect();
            let w = witness_realpart_gap(&v, &eig, eps).unwrap();
            prop_assert!(w.all_hold(), "{:?}", w.failures());
            prop_assert!(w.initial_overlap >= 1.0 - eps);
            prop_assert!(w.final_fidelity <= w.fidelity_bound + 1e-12);
        }

        #[test]
        fn prop_nonnormal_witnesses(delta in 0.01f64..0.99) {
            let w = witness_nonnormal_homogeneous(delta).unwrap();
            prop_assert!(w.all_hold(), "{:?}", w.failures());
            let w = witness_nonnormal_inhomogeneous(delta).unwrap();
            prop_assert!(w.all_hold(), "{:?}", w.failures());
        }

        #[test]
        fn prop_oracle_pair_equalities(seed in any::<u64>(), eps in 1e-6f64..0.9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = near_pair(&mut rng, 2 + (seed % 7) as usize, eps);
            prop_assert!(p.all_hold());
        }
    }
}
