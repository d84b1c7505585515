//! Reference solutions of `du/dt = A u + b(t)` and the scalar kernels used to
//! normalize the solvers' Duhamel blocks.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{FfodeError, Result};
use crate::matrix::{self, r, spectral_norm, ComplexMatrix, ComplexVector, EigenSystem, ZERO};

pub type VectorFn = Arc<dyn Fn(f64) -> ComplexVector + Send + Sync>;

/// A time-dependent source given by a callback, with an optional derivative
/// callback for quadrature error bounds.
#[derive(Clone)]
pub struct SampledSource {
    pub f: VectorFn,
    pub derivative: Option<VectorFn>,
}

impl std::fmt::Debug for SampledSource {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("SampledSource").field("has_derivative", &self.derivative.is_some()).finish()
    }
}

impl SampledSource {
    pub fn new(f: impl Fn(f64) -> ComplexVector + Send + Sync + 'static) -> Self {
        SampledSource { f: Arc::new(f), derivative: None }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> ComplexVector + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Piecewise-linear interpolant of a node table sorted by time.
    pub fn from_table(nodes: Vec<(f64, ComplexVector)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(FfodeError::InvalidParameter("a node table needs at least two entries".into()));
        }
        if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(FfodeError::InvalidParameter("node times must increase".into()));
        }
        let dim = nodes[0].1.len();
        if nodes.iter().any(|n| n.1.len() != dim) {
            return Err(FfodeError::ShapeMismatch("node vectors differ in length".into()));
        }
        let table = Arc::new(nodes);
        let t2 = table.clone();
        let val = move |t: f64| {
            let k = match table.binary_search_by(|n| n.0.partial_cmp(&t).unwrap()) {
                Ok(i) => return table[i].1.clone(),
                Err(i) => i.clamp(1, table.len() - 1),
            };
            let (t0, v0) = &table[k - 1];
            let (t1, v1) = &table[k];
            let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            v0 * r(1.0 - w) + v1 * r(w)
        };
        let der = move |t: f64| {
            let k = match t2.binary_search_by(|n| n.0.partial_cmp(&t).unwrap()) {
                Ok(i) | Err(i) => i.clamp(1, t2.len() - 1),
            };
            let (t0, v0) = &t2[k - 1];
            let (t1, v1) = &t2[k];
            (v1 - v0).unscale(t1 - t0)
        };
        Ok(SampledSource::new(val).with_derivative(der))
    }

    pub fn eval(&self, t: f64) -> ComplexVector {
        (self.f)(t)
    }
}

#[derive(Debug, Clone)]
pub enum Coefficient {
    Matrix(ComplexMatrix),
    Eigen(EigenSystem),
}

#[derive(Debug, Clone)]
pub enum Inhomogeneous {
    None,
    Constant(ComplexVector),
    Sampled(SampledSource),
}

#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub coefficient: Coefficient,
    pub u0: ComplexVector,
    pub inhomogeneous: Inhomogeneous,
    pub horizon: f64,
}

impl OdeProblem {
    pub fn new(coefficient: Coefficient, u0: ComplexVector, inhomogeneous: Inhomogeneous, horizon: f64) -> Result<Self> {
        let n = match &coefficient {
            Coefficient::Matrix(a) => {
                if a.nrows() != a.ncols() {
                    return Err(FfodeError::NotSquare { rows: a.nrows(), cols: a.ncols() });
                }
                a.nrows()
            }
            Coefficient::Eigen(e) => e.dim(),
        };
        if u0.len() != n {
            return Err(FfodeError::ShapeMismatch(format!("u0 has length {} for dimension {n}", u0.len())));
        }
        match &inhomogeneous {
            Inhomogeneous::Constant(b) if b.len() != n => {
                return Err(FfodeError::ShapeMismatch(format!("b has length {} for dimension {n}", b.len())));
            }
            Inhomogeneous::Sampled(s) if s.eval(0.0).len() != n => {
                return Err(FfodeError::ShapeMismatch("b(t) has the wrong length".into()));
            }
            _ => {}
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(FfodeError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        Ok(OdeProblem { coefficient, u0, inhomogeneous, horizon })
    }

    pub fn homogeneous(a: ComplexMatrix, u0: ComplexVector, t: f64) -> Result<Self> {
        Self::new(Coefficient::Matrix(a), u0, Inhomogeneous::None, t)
    }

    pub fn constant(a: ComplexMatrix, u0: ComplexVector, b: ComplexVector, t: f64) -> Result<Self> {
        Self::new(Coefficient::Matrix(a), u0, Inhomogeneous::Constant(b), t)
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        match &self.coefficient {
            Coefficient::Matrix(a) => a.clone(),
            Coefficient::Eigen(e) => e.reconstruct(),
        }
    }

    pub fn constant_b(&self) -> Option<&ComplexVector> {
        match &self.inhomogeneous {
            Inhomogeneous::Constant(b) => Some(b),
            _ => None,
        }
    }

    /// `b` as a vector: zero when absent; errors for sampled sources.
    pub fn b_or_zero(&self) -> Result<ComplexVector> {
        match &self.inhomogeneous {
            Inhomogeneous::None => Ok(ComplexVector::zeros(self.dim())),
            Inhomogeneous::Constant(b) => Ok(b.clone()),
            Inhomogeneous::Sampled(_) => Err(FfodeError::InvalidParameter("this solver needs a constant b".into())),
        }
    }
}

/// `(e^z − 1)/z`, with the series `1 + z/2 + z²/6` for `|z| < 1e−6`.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-6 {
        r(1.0) + z / 2.0 + z * z / 6.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `∫₀ᵀ e^{λ(T−s)} ds`.
pub fn duhamel_scalar(lambda: Complex64, t: f64) -> Complex64 {
    phi1(lambda * t) * t
}

/// `f(λ,t) = (e^{λt} − 1)/(λt)`, or 1 at λ = 0.
pub fn kernel_f(lambda: f64, t: f64) -> Result<f64> {
    if lambda > 0.0 || !(t > 0.0) {
        return Err(FfodeError::InvalidParameter(format!("kernel_f needs λ ≤ 0 and t > 0, got λ={lambda}, t={t}")));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    Ok(phi1(r(lambda * t)).re)
}

/// Normalization of the Duhamel block for complex spectra.
pub fn kernel_c(alpha: f64, beta: f64, t: f64) -> f64 {
    if alpha == 0.0 {
        if beta == 0.0 {
            t
        } else {
            2.0 / beta
        }
    } else {
        (alpha * t).exp_m1() / alpha
    }
}

/// `C⁻¹ ∫₀ᵀ e^{λ(T−s)} ds` split into real and imaginary parts.
pub fn kernel_fg_complex(lambda: Complex64, t: f64, c: f64) -> Result<(f64, f64)> {
    let v = duhamel_scalar(lambda, t) / c;
    if v.norm() > 1.0 + 1e-12 {
        return Err(FfodeError::KernelMagnitude(v.norm()));
    }
    Ok((v.re, v.im))
}

/// `(α, β)` for the spectrum: α = max Re λ (snapped to 0 within 1e−12) and,
/// when α = 0, β = min |λ_j| over the whole spectrum.
pub fn normalization_parameters(eigs: &[Complex64]) -> (f64, f64) {
    let mut alpha = eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if alpha.abs() <= 1e-12 {
        alpha = 0.0;
    }
    let beta = if alpha == 0.0 { eigs.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min) } else { 0.0 };
    let beta = if beta <= 1e-12 { 0.0 } else { beta };
    (alpha, beta)
}

/// Gauss-Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

const GL_ORDER: usize = 10;
const MAX_PANELS: usize = 1 << 16;

/// Composite Gauss-Legendre with `panels` equal panels on [0, T].
pub fn composite_gl(g: &dyn Fn(f64) -> ComplexVector, t: f64, panels: usize, dim: usize) -> ComplexVector {
    let (x, w) = gauss_legendre(GL_ORDER);
    let h = t / panels as f64;
    let mut acc = ComplexVector::zeros(dim);
    for p in 0..panels {
        let a = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let s = a + 0.5 * h * (xi + 1.0);
            acc += g(s) * r(0.5 * h * wi);
        }
    }
    acc
}

/// Doubles the panel count until successive results differ by < `tol` (relative
/// to `1 + ‖result‖`).
pub fn adaptive_gl(g: &dyn Fn(f64) -> ComplexVector, t: f64, dim: usize, tol: f64) -> Result<ComplexVector> {
    let mut panels = 4;
    let mut prev = composite_gl(g, t, panels, dim);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite_gl(g, t, panels, dim);
        let diff = (&next - &prev).norm();
        if diff < tol * (1.0 + next.norm()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(FfodeError::Numeric(format!("quadrature did not settle within {MAX_PANELS} panels")))
}

enum Diagonalization {
    /// `A = V Λ V⁻¹`
    Eigen { v: ComplexMatrix, vinv: ComplexMatrix, eig: Vec<Complex64> },
    Defective(ComplexMatrix),
}

const MAX_CONDITION: f64 = 1e8;

fn diagonalize(p: &OdeProblem) -> Result<Diagonalization> {
    match &p.coefficient {
        Coefficient::Eigen(e) => {
            Ok(Diagonalization::Eigen { v: e.basis.clone(), vinv: e.basis.adjoint(), eig: e.eigenvalues.clone() })
        }
        Coefficient::Matrix(a) => {
            if matrix::is_normal(a) {
                let e = EigenSystem::from_matrix(a)?;
                return Ok(Diagonalization::Eigen { v: e.basis.clone(), vinv: e.basis.adjoint(), eig: e.eigenvalues });
            }
            let (eig, v) = matrix::eigen_general(a)?;
            if let Some(vinv) = v.clone().try_inverse() {
                let cond = spectral_norm(&v) * spectral_norm(&vinv);
                let rec = &v * matrix::diag(&eig) * &vinv;
                if cond < MAX_CONDITION && spectral_norm(&(rec - a)) <= 1e-12 * (1.0 + spectral_norm(a)) * cond {
                    return Ok(Diagonalization::Eigen { v, vinv, eig });
                }
            }
            Ok(Diagonalization::Defective(a.clone()))
        }
    }
}

/// `T·[[A, b], [0, 0]]` exponentiated; the last column holds `∫₀ᵀ e^{As} ds b`.
fn augmented_solution(a: &ComplexMatrix, u0: &ComplexVector, b: &ComplexVector, t: f64) -> Result<ComplexVector> {
    let n = a.nrows();
    let mut m = ComplexMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, 1)).copy_from(b);
    let e = matrix::matrix_exponential(&m, t)?;
    let ea = e.view((0, 0), (n, n)).into_owned();
    let col = e.view((0, n), (n, 1)).into_owned();
    Ok(ea * u0 + ComplexVector::from_column_slice(col.as_slice()))
}

/// High-accuracy `u(T)`.
pub fn solve_reference(p: &OdeProblem) -> Result<ComplexVector> {
    let t = p.horizon;
    let dim = p.dim();
    match diagonalize(p)? {
        Diagonalization::Eigen { v, vinv, eig } => {
            let c0 = &vinv * &p.u0;
            let mut modal = ComplexVector::from_iterator(dim, (0..dim).map(|j| (eig[j] * t).exp() * c0[j]));
            match &p.inhomogeneous {
                Inhomogeneous::None => {}
                Inhomogeneous::Constant(b) => {
                    let cb = &vinv * b;
                    for j in 0..dim {
                        modal[j] += duhamel_scalar(eig[j], t) * cb[j];
                    }
                }
                Inhomogeneous::Sampled(s) => {
                    let g = |sv: f64| {
                        let cb = &vinv * s.eval(sv);
                        ComplexVector::from_iterator(dim, (0..dim).map(|j| (eig[j] * (t - sv)).exp() * cb[j]))
                    };
                    modal += adaptive_gl(&g, t, dim, 1e-12)?;
                }
            }
            Ok(v * modal)
        }
        Diagonalization::Defective(a) => match &p.inhomogeneous {
            Inhomogeneous::None => Ok(matrix::matrix_exponential(&a, t)? * &p.u0),
            Inhomogeneous::Constant(b) => augmented_solution(&a, &p.u0, b, t),
            Inhomogeneous::Sampled(s) => {
                log::warn!("coefficient is not diagonalizable; using fixed-step quadrature with dense exponentials");
                let panels = 256;
                let g = |sv: f64| matrix::matrix_exponential(&a, t - sv).expect("square") * s.eval(sv);
                Ok(matrix::matrix_exponential(&a, t)? * &p.u0 + composite_gl(&g, t, panels, dim))
            }
        },
    }
}

/// `∫₀ᵀ e^{A(T−s)} ds` as a matrix.
pub fn duhamel_matrix(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let n = a.nrows();
    let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(&matrix::identity(n));
    let e = matrix::matrix_exponential(&m, t)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

pub fn is_zero(v: &ComplexVector) -> bool {
    v.iter().all(|z| *z == ZERO)
}
