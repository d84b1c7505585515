//! Periodic finite-difference PDE benchmarks on `[0,1]^d` with `h = 1/n`:
//! builders, closed-form spectra in the Fourier basis, hyperbolic lifting
//! and fast inversion.
//!
//! DFT convention: `F[j,k] = ω^{jk}/√n`, `ω = e^{2πi/n}`. Multi-indices are
//! flattened with axis 0 most significant, matching `X ⊗ I ⊗ ⋯ ⊗ I` for axis 0.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FfodeError, Result};
use crate::ff_eigen::{solve_eigen_inhomogeneous, solve_eigen_timedep, EigenOracleSet};
use crate::ledger;
use crate::matrix::{c, identity, kron, r, spectral_norm, ComplexMatrix, ComplexVector, EigenSystem};
use crate::ode_reference::{solve_reference, Coefficient, Inhomogeneous, OdeProblem, SampledSource};
use crate::report::SolveReport;
use num_complex::Complex64;

const ZERO_MODE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdeKind {
    Transport,
    Heat,
    AdvectionDiffusion,
    Wave,
    KleinGordon,
    Airy,
    Beam,
    GenericParabolic,
}

impl PdeKind {
    pub fn is_hyperbolic(self) -> bool {
        matches!(self, PdeKind::Wave | PdeKind::KleinGordon | PdeKind::Beam)
    }

    pub fn min_grid(self) -> usize {
        match self {
            PdeKind::Airy | PdeKind::Beam => 5,
            _ => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PdeKind::Transport => "transport",
            PdeKind::Heat => "heat",
            PdeKind::AdvectionDiffusion => "advection-diffusion",
            PdeKind::Wave => "wave",
            PdeKind::KleinGordon => "klein-gordon",
            PdeKind::Airy => "airy",
            PdeKind::Beam => "beam",
            PdeKind::GenericParabolic => "generic-parabolic",
        }
    }
}

/// Real-valued spatial profile on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Profile {
    Zero,
    Constant { value: f64 },
    /// `amplitude · cos(2π k·x + phase)`
    Cosine {
        k: Vec<i64>,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · exp(−|x − center|²/(2 width²))`
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Sum { terms: Vec<Profile> },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => *value,
            Profile::Cosine { k, amplitude, phase } => {
                let arg: f64 = k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum();
                amplitude * (2.0 * PI * arg + phase).cos()
            }
            Profile::Gaussian { center, width, amplitude } => {
                let d2: f64 = center.iter().zip(x).map(|(cj, xj)| (xj - cj).powi(2)).sum();
                amplitude * (-d2 / (2.0 * width * width)).exp()
            }
            Profile::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        match self {
            Profile::Cosine { k, .. } if k.len() != d => {
                Err(FfodeError::InvalidParameter(format!("cosine wave vector has {} entries for d = {d}", k.len())))
            }
            Profile::Gaussian { center, width, .. } => {
                if center.len() != d {
                    return Err(FfodeError::InvalidParameter(format!("gaussian center has {} entries for d = {d}", center.len())));
                }
                if !(*width > 0.0) {
                    return Err(FfodeError::InvalidParameter("gaussian width must be positive".into()));
                }
                Ok(())
            }
            Profile::Sum { terms } => terms.iter().try_for_each(|t| t.check(d)),
            _ => Ok(()),
        }
    }
}

/// Time factor of a separable source term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Temporal {
    Constant,
    Cos {
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Sin { omega: f64 },
}

impl Temporal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Temporal::Constant => 1.0,
            Temporal::Cos { omega, phase } => (omega * t + phase).cos(),
            Temporal::Sin { omega } => (omega * t).sin(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Temporal::Constant => 0.0,
            Temporal::Cos { omega, phase } => -omega * (omega * t + phase).sin(),
            Temporal::Sin { omega } => omega * (omega * t).cos(),
        }
    }
}

/// `b(x,t) = spatial(x) · temporal(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTerm {
    pub spatial: Profile,
    #[serde(default = "constant_in_time")]
    pub temporal: Temporal,
}

fn constant_in_time() -> Temporal {
    Temporal::Constant
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSpec {
    pub kind: PdeKind,
    #[serde(rename = "dimension", default = "one_usize")]
    pub d: usize,
    pub n: usize,
    /// Diffusion coefficients; empty means the kind's default.
    #[serde(default)]
    pub a: Vec<f64>,
    /// Advection coefficients; empty means the kind's default.
    #[serde(default)]
    pub a_prime: Vec<f64>,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub mass: Option<f64>,
    pub u0: Profile,
    #[serde(default)]
    pub w0: Option<Profile>,
    #[serde(default)]
    pub source: Vec<SourceTerm>,
    pub horizon: f64,
}

fn one_usize() -> usize {
    1
}

impl PdeSpec {
    pub fn new(kind: PdeKind, d: usize, n: usize, u0: Profile, horizon: f64) -> Self {
        PdeSpec { kind, d, n, a: vec![], a_prime: vec![], c: 0.0, mass: None, u0, w0: None, source: vec![], horizon }
    }

    pub fn grid_size(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn diffusion(&self) -> Vec<f64> {
        if !self.a.is_empty() {
            return self.a.clone();
        }
        let v = match self.kind {
            PdeKind::Heat | PdeKind::AdvectionDiffusion | PdeKind::Wave | PdeKind::KleinGordon | PdeKind::GenericParabolic => 1.0,
            _ => 0.0,
        };
        vec![v; self.d]
    }

    pub fn advection(&self) -> Vec<f64> {
        if !self.a_prime.is_empty() {
            return self.a_prime.clone();
        }
        let v = match self.kind {
            PdeKind::Transport | PdeKind::AdvectionDiffusion => 1.0,
            _ => 0.0,
        };
        vec![v; self.d]
    }

    /// `c`, shifted by `−m²` for Klein-Gordon.
    pub fn effective_c(&self) -> f64 {
        match (self.kind, self.mass) {
            (PdeKind::KleinGordon, Some(m)) => self.c - m * m,
            _ => self.c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(FfodeError::InvalidParameter(s));
        if self.d == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.n < self.kind.min_grid() {
            return bad(format!("{} needs n ≥ {}, got {}", self.kind.label(), self.kind.min_grid(), self.n));
        }
        if matches!(self.kind, PdeKind::Airy | PdeKind::Beam) && self.d != 1 {
            return bad(format!("{} is one-dimensional", self.kind.label()));
        }
        if self.n.checked_pow(self.d as u32).is_none_or(|x| x > 1 << 16) {
            return bad("grid too large".into());
        }
        if !(self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        let (a, ap) = (self.diffusion(), self.advection());
        if a.len() != self.d || ap.len() != self.d {
            return bad(format!("coefficient vectors must have length d = {}", self.d));
        }
        if a.iter().any(|&x| !(x >= 0.0)) {
            return bad("diffusion coefficients must be nonnegative".into());
        }
        if !(self.c <= 0.0) {
            return bad(format!("c must be nonpositive, got {}", self.c));
        }
        match self.kind {
            PdeKind::Transport if a.iter().any(|&x| x != 0.0) => return bad("transport has no diffusion".into()),
            PdeKind::Heat if ap.iter().any(|&x| x != 0.0) => return bad("heat has no advection".into()),
            k if k.is_hyperbolic() && ap.iter().any(|&x| x != 0.0) => {
                return bad("hyperbolic kinds have no advection term".into());
            }
            PdeKind::KleinGordon if !self.mass.is_some_and(|m| m > 0.0) => {
                return bad("klein-gordon needs a positive mass".into());
            }
            _ => {}
        }
        self.u0.check(self.d)?;
        for s in &self.source {
            s.spatial.check(self.d)?;
        }
        if self.kind.is_hyperbolic() {
            let w0 = self.w0.as_ref().ok_or_else(|| FfodeError::InvalidParameter("hyperbolic kinds need w0".into()))?;
            w0.check(self.d)?;
            if self.effective_c() == 0.0 {
                let sum: f64 = self.sample(w0).iter().map(|z| z.re).sum();
                if sum.abs() > ZERO_MODE_TOL {
                    return Err(FfodeError::ZeroModeOverlap(sum.abs()));
                }
            }
        }
        Ok(())
    }

    /// Grid coordinates of flattened index `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        let mut rem = idx;
        for j in (0..self.d).rev() {
            x[j] = (rem % self.n) as f64 / self.n as f64;
            rem /= self.n;
        }
        x
    }

    pub fn sample(&self, p: &Profile) -> ComplexVector {
        ComplexVector::from_iterator(self.grid_size(), (0..self.grid_size()).map(|i| r(p.eval(&self.point(i)))))
    }

    pub fn source_is_static(&self) -> bool {
        self.source.iter().all(|s| s.temporal == Temporal::Constant)
    }

    fn source_terms(&self) -> Vec<(ComplexVector, Temporal)> {
        self.source.iter().map(|s| (self.sample(&s.spatial), s.temporal.clone())).collect()
    }

    /// `b(t)` on the grid; `None` when there is no source.
    pub fn source_samples(&self) -> Inhomogeneous {
        if self.source.is_empty() {
            return Inhomogeneous::None;
        }
        let terms = self.source_terms();
        if self.source_is_static() {
            let mut b = ComplexVector::zeros(self.grid_size());
            for (v, _) in &terms {
                b += v;
            }
            return Inhomogeneous::Constant(b);
        }
        let n = self.grid_size();
        let t1 = terms.clone();
        let f = move |t: f64| {
            let mut b = ComplexVector::zeros(n);
            for (v, tm) in &terms {
                b += v * r(tm.eval(t));
            }
            b
        };
        let df = move |t: f64| {
            let mut b = ComplexVector::zeros(n);
            for (v, tm) in &t1 {
                b += v * r(tm.derivative(t));
            }
            b
        };
        Inhomogeneous::Sampled(SampledSource::new(f).with_derivative(df))
    }
}

fn check_grid(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(FfodeError::InvalidParameter(format!("stencil needs n ≥ {min}, got {n}")));
    }
    Ok(())
}

type Stencil = Vec<(isize, f64)>;

fn circulant(n: usize, st: &Stencil) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for &(off, v) in st {
            let k = (j as isize + off).rem_euclid(n as isize) as usize;
            m[(j, k)] += r(v);
        }
    }
    m
}

fn dh_stencil(n: usize) -> Stencil {
    let s = (n * n) as f64;
    vec![(-1, s), (0, -2.0 * s), (1, s)]
}

fn vh_stencil(n: usize) -> Stencil {
    let s = n as f64 / 2.0;
    vec![(1, s), (-1, -s)]
}

fn dh3_stencil(n: usize) -> Stencil {
    let s = (n as f64).powi(3);
    vec![(-2, -s / 2.0), (-1, s), (1, -s), (2, s / 2.0)]
}

fn dh4_stencil(n: usize) -> Stencil {
    let s = (n as f64).powi(4);
    vec![(-2, s), (-1, -4.0 * s), (0, 6.0 * s), (1, -4.0 * s), (2, s)]
}

/// Periodic second difference, scaled by `1/h²`.
pub fn build_dh(n: usize) -> Result<ComplexMatrix> {
    check_grid(n, 3)?;
    Ok(circulant(n, &dh_stencil(n)))
}

/// Periodic central first difference, scaled by `1/(2h)`.
pub fn build_vh(n: usize) -> Result<ComplexMatrix> {
    check_grid(n, 3)?;
    Ok(circulant(n, &vh_stencil(n)))
}

pub fn build_dh3(n: usize) -> Result<ComplexMatrix> {
    check_grid(n, 5)?;
    Ok(circulant(n, &dh3_stencil(n)))
}

pub fn build_dh4(n: usize) -> Result<ComplexMatrix> {
    check_grid(n, 5)?;
    Ok(circulant(n, &dh4_stencil(n)))
}

pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let s = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |j, k| Complex64::from_polar(s, 2.0 * PI * ((j * k) % n) as f64 / n as f64))
}

pub fn dft_tensor(n: usize, d: usize) -> ComplexMatrix {
    let f = dft_matrix(n);
    let mut out = identity(1);
    for _ in 0..d {
        out = kron(&out, &f);
    }
    out
}

/// `I ⊗ ⋯ ⊗ X ⊗ ⋯ ⊗ I` with `X` on `axis`.
fn on_axis(x: &ComplexMatrix, axis: usize, d: usize) -> ComplexMatrix {
    let n = x.nrows();
    let mut out = identity(1);
    for j in 0..d {
        out = if j == axis { kron(&out, x) } else { kron(&out, &identity(n)) };
    }
    out
}

/// Per-axis 1D stencils and the diagonal shift of the first-order operator
/// (parabolic family and Airy) or of `K` in `u'' = K u` (hyperbolic kinds).
fn axis_stencils(spec: &PdeSpec) -> (Vec<Stencil>, f64) {
    let n = spec.n;
    let (a, ap) = (spec.diffusion(), spec.advection());
    let per_axis = |j: usize| -> Stencil {
        let mut st = vec![];
        if a[j] != 0.0 {
            st.extend(dh_stencil(n).into_iter().map(|(o, v)| (o, a[j] * v)));
        }
        if ap[j] != 0.0 {
            st.extend(vh_stencil(n).into_iter().map(|(o, v)| (o, ap[j] * v)));
        }
        st
    };
    match spec.kind {
        PdeKind::Airy => (vec![dh3_stencil(n).into_iter().map(|(o, v)| (o, -v)).collect()], spec.c),
        PdeKind::Beam => (vec![dh4_stencil(n).into_iter().map(|(o, v)| (o, -v)).collect()], spec.c),
        _ => ((0..spec.d).map(per_axis).collect(), spec.effective_c()),
    }
}

/// The dense operator, assembled as a sum of Kronecker terms.
pub fn operator_matrix(spec: &PdeSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let n = spec.n;
    let d = spec.d;
    let big = spec.grid_size();
    let mut m = ComplexMatrix::zeros(big, big);
    match spec.kind {
        PdeKind::Airy => m -= build_dh3(n)?,
        PdeKind::Beam => m -= build_dh4(n)?,
        _ => {
            let (a, ap) = (spec.diffusion(), spec.advection());
            let dh = build_dh(n)?;
            let vh = build_vh(n)?;
            for j in 0..d {
                if a[j] != 0.0 {
                    m += on_axis(&dh, j, d) * r(a[j]);
                }
                if ap[j] != 0.0 {
                    m += on_axis(&vh, j, d) * r(ap[j]);
                }
            }
        }
    }
    let shift = if matches!(spec.kind, PdeKind::Airy | PdeKind::Beam) { spec.c } else { spec.effective_c() };
    for i in 0..big {
        m[(i, i)] += r(shift);
    }
    Ok(m)
}

/// Matrix-free application of the operator.
pub fn apply_operator(spec: &PdeSpec, x: &ComplexVector) -> ComplexVector {
    let (stencils, shift) = axis_stencils(spec);
    let n = spec.n as isize;
    let d = spec.d;
    let mut y = x * r(shift);
    for (axis, st) in stencils.iter().enumerate() {
        let stride = (spec.n as isize).pow((d - 1 - axis) as u32);
        for i in 0..x.len() {
            let ki = (i as isize / stride) % n;
            for &(off, v) in st {
                let kj = (ki + off).rem_euclid(n);
                let j = i as isize + (kj - ki) * stride;
                y[i] += x[j as usize] * v;
            }
        }
    }
    y
}

/// One-dimensional closed-form eigenvalue per mode.
fn axis_eigen(kind: PdeKind, n: usize, k: usize, a: f64, ap: f64) -> Complex64 {
    let nf = n as f64;
    let th = k as f64 * PI / nf;
    match kind {
        PdeKind::Airy => -c(0.0, -4.0 * nf.powi(3) * (2.0 * th).sin() * th.sin().powi(2)),
        PdeKind::Beam => r(-16.0 * nf.powi(4) * th.sin().powi(4)),
        _ => c(-4.0 * nf * nf * a * th.sin().powi(2), nf * ap * (2.0 * th).sin()),
    }
}

fn multi_index(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut k = vec![0; d];
    for j in (0..d).rev() {
        k[j] = idx % n;
        idx /= n;
    }
    k
}

/// Closed-form eigenvalues of the operator, in flattened mode order.
pub fn closed_form_eigenvalues(spec: &PdeSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let (a, ap) = (spec.diffusion(), spec.advection());
    let shift = if matches!(spec.kind, PdeKind::Airy | PdeKind::Beam) { spec.c } else { spec.effective_c() };
    let (n, d) = (spec.n, spec.d);
    Ok((0..spec.grid_size())
        .into_par_iter()
        .map(|idx| {
            let k = multi_index(idx, n, d);
            let mut mu = r(shift);
            for j in 0..d {
                mu += axis_eigen(spec.kind, n, k[j], a[j], ap[j]);
            }
            mu
        })
        .collect())
}

/// Normalized Fourier mode `F^{⊗d} e_k` evaluated directly.
pub fn fourier_mode(n: usize, d: usize, idx: usize) -> ComplexVector {
    let k = multi_index(idx, n, d);
    let big = n.pow(d as u32);
    let s = 1.0 / (big as f64).sqrt();
    ComplexVector::from_iterator(
        big,
        (0..big).map(|i| {
            let j = multi_index(i, n, d);
            let ph: usize = j.iter().zip(&k).map(|(a, b)| (a * b) % n).sum::<usize>() % n;
            Complex64::from_polar(s, 2.0 * PI * ph as f64 / n as f64)
        }),
    )
}

/// `max_k ‖A f_k − μ_k f_k‖` with the matrix-free operator and closed forms.
pub fn fourier_residual(spec: &PdeSpec) -> Result<f64> {
    let mu = closed_form_eigenvalues(spec)?;
    let (n, d) = (spec.n, spec.d);
    Ok((0..spec.grid_size())
        .into_par_iter()
        .map(|k| {
            let f = fourier_mode(n, d, k);
            (apply_operator(spec, &f) - &f * mu[k]).norm()
        })
        .reduce(|| 0.0, f64::max))
}

/// Largest distance in a greedy nearest-neighbor matching of two spectra.
pub fn spectrum_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &x in a {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, &y) in b.iter().enumerate() {
            if !used[j] && (x - y).norm() < best.0 {
                best = ((x - y).norm(), j);
            }
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

/// Unitary DFT along every axis of a flattened vector (`F^{⊗d} x`, or
/// `F^{†⊗d} x` when `inverse`).
pub fn dft_axes(x: &ComplexVector, n: usize, d: usize, inverse: bool) -> ComplexVector {
    let f = dft_matrix(n);
    let f = if inverse { f.adjoint() } else { f };
    let mut cur = x.clone();
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let mut next = ComplexVector::zeros(x.len());
        for i in 0..x.len() {
            let ki = (i / stride) % n;
            let base = i - ki * stride;
            let mut acc = Complex64::new(0.0, 0.0);
            for kj in 0..n {
                acc += f[(ki, kj)] * cur[base + kj * stride];
            }
            next[i] = acc;
        }
        cur = next;
    }
    cur
}

/// Parabolic-family (and Airy) eigensystem in the Fourier basis, checked
/// against the dense assembly.
pub fn eigensystem_of(spec: &PdeSpec) -> Result<EigenOracleSet> {
    if spec.kind.is_hyperbolic() {
        return Err(FfodeError::Mismatch(format!("{} needs lift_hyperbolic", spec.kind.label())));
    }
    let mu = closed_form_eigenvalues(spec)?;
    let es = EigenSystem::new(dft_tensor(spec.n, spec.d), mu)?;
    let a = operator_matrix(spec)?;
    let err = es.reconstruction_error(&a);
    if err > 1e-8 * (1.0 + spectral_norm(&a)) {
        return Err(FfodeError::Numeric(format!("closed-form eigensystem misses the dense operator by {err:e}")));
    }
    Ok(EigenOracleSet::complex(es))
}

/// Square roots `s_k ≥ 0` of the spectrum of `B² = −K`.
pub fn hyperbolic_frequencies(spec: &PdeSpec) -> Result<Vec<f64>> {
    if !spec.kind.is_hyperbolic() {
        return Err(FfodeError::Mismatch(format!("{} is not hyperbolic", spec.kind.label())));
    }
    Ok(closed_form_eigenvalues(spec)?.iter().map(|m| (-m.re).max(0.0).sqrt()).collect())
}

/// `B = F diag(s) F†`.
pub fn b_eigensystem(spec: &PdeSpec) -> Result<EigenOracleSet> {
    let s = hyperbolic_frequencies(spec)?;
    let es = EigenSystem::new(dft_tensor(spec.n, spec.d), s.iter().map(|&x| r(x)).collect())?;
    Ok(EigenOracleSet::complex(es))
}

/// Matrix-free `B x` through per-axis transforms.
pub fn apply_b(spec: &PdeSpec, x: &ComplexVector) -> Result<ComplexVector> {
    let s = hyperbolic_frequencies(spec)?;
    let mut y = dft_axes(x, spec.n, spec.d, true);
    for (yk, sk) in y.iter_mut().zip(&s) {
        *yk *= *sk;
    }
    Ok(dft_axes(&y, spec.n, spec.d, false))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastInversion {
    pub v0: ComplexVector,
    /// `‖w0‖/‖v0‖`.
    pub cost_factor: f64,
}

/// Solves `iB v0 = w0` by per-mode division in B's eigenbasis.
pub fn fast_inversion(b: &EigenOracleSet, w0: &ComplexVector) -> Result<FastInversion> {
    let u = &b.eigen.basis;
    if w0.len() != u.nrows() {
        return Err(FfodeError::ShapeMismatch(format!("w0 of length {} for dimension {}", w0.len(), u.nrows())));
    }
    let scale = b.eigen.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut coef = u.adjoint() * w0;
    for (ck, lk) in coef.iter_mut().zip(&b.eigen.eigenvalues) {
        if lk.norm() <= 1e-12 * (1.0 + scale) {
            if ck.norm() > ZERO_MODE_TOL {
                return Err(FfodeError::ZeroModeOverlap(ck.norm()));
            }
            *ck = r(0.0);
        } else {
            *ck /= c(0.0, 1.0) * lk;
        }
    }
    let v0 = u * coef;
    let vn = v0.norm();
    let cost_factor = if vn > 0.0 { w0.norm() / vn } else { 0.0 };
    Ok(FastInversion { v0, cost_factor })
}

#[derive(Debug, Clone)]
pub struct LiftedSystem {
    /// `(u, v)` system with coefficient `[[0, iB], [iB, 0]]` and source `(0, b)`.
    pub problem: OdeProblem,
    pub oracles: EigenOracleSet,
    pub b: ComplexMatrix,
    pub inversion: FastInversion,
}

pub fn lift_hyperbolic(spec: &PdeSpec) -> Result<LiftedSystem> {
    spec.validate()?;
    let b_os = b_eigensystem(spec)?;
    let bm = b_os.eigen.reconstruct();
    let nn = spec.grid_size();
    let w0 = spec.sample(spec.w0.as_ref().expect("validated"));
    let inversion = fast_inversion(&b_os, &w0)?;
    let ib = &bm * c(0.0, 1.0);
    let mut lifted = ComplexMatrix::zeros(2 * nn, 2 * nn);
    lifted.view_mut((0, nn), (nn, nn)).copy_from(&ib);
    lifted.view_mut((nn, 0), (nn, nn)).copy_from(&ib);
    // eigenbasis (F ⊕ F)(H ⊗ I): columns (f, f)/√2 with +is, (f, −f)/√2 with −is
    let f = &b_os.eigen.basis;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = ComplexMatrix::zeros(2 * nn, 2 * nn);
    basis.view_mut((0, 0), (nn, nn)).copy_from(&(f * r(h)));
    basis.view_mut((nn, 0), (nn, nn)).copy_from(&(f * r(h)));
    basis.view_mut((0, nn), (nn, nn)).copy_from(&(f * r(h)));
    basis.view_mut((nn, nn), (nn, nn)).copy_from(&(f * r(-h)));
    let s: Vec<f64> = b_os.eigen.eigenvalues.iter().map(|l| l.re).collect();
    let eig: Vec<Complex64> = s.iter().map(|&x| c(0.0, x)).chain(s.iter().map(|&x| c(0.0, -x))).collect();
    let es = EigenSystem::new(basis, eig)?;
    let err = es.reconstruction_error(&lifted);
    if err > 1e-8 * (1.0 + spectral_norm(&lifted)) {
        return Err(FfodeError::Numeric(format!("lifted eigensystem misses the block matrix by {err:e}")));
    }
    let u0 = spec.sample(&spec.u0);
    let mut x0 = ComplexVector::zeros(2 * nn);
    x0.rows_mut(0, nn).copy_from(&u0);
    x0.rows_mut(nn, nn).copy_from(&inversion.v0);
    let inhom = match spec.source_samples() {
        Inhomogeneous::None => Inhomogeneous::None,
        Inhomogeneous::Constant(b) => Inhomogeneous::Constant(stack_lower(&b)),
        Inhomogeneous::Sampled(s) => {
            let (f, df) = (s.f.clone(), s.derivative.clone().expect("separable sources carry derivatives"));
            Inhomogeneous::Sampled(
                SampledSource::new(move |t| stack_lower(&f(t))).with_derivative(move |t| stack_lower(&df(t))),
            )
        }
    };
    let problem = OdeProblem::new(Coefficient::Matrix(lifted), x0, inhom, spec.horizon)?;
    Ok(LiftedSystem { problem, oracles: EigenOracleSet::complex(es), b: bm, inversion })
}

fn stack_lower(b: &ComplexVector) -> ComplexVector {
    let n = b.len();
    let mut out = ComplexVector::zeros(2 * n);
    out.rows_mut(n, n).copy_from(b);
    out
}

/// Modeled gate counts for one run (oracle arithmetic is not simulated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateModel {
    /// `d⌈log₂ n⌉²` per use of the eigenbasis transform.
    pub qft: f64,
    /// `(2d+1)·w²` per eigenvalue-oracle query, `w` the register width.
    pub eigen_arithmetic: f64,
    /// `w²` per query to the remaining arithmetic oracles.
    pub other_arithmetic: f64,
}

impl GateModel {
    pub fn total(&self) -> f64 {
        self.qft + self.eigen_arithmetic + self.other_arithmetic
    }
}

fn gate_model(spec: &PdeSpec, rep: &SolveReport, width: usize) -> GateModel {
    let l = (spec.n as f64).log2().ceil();
    let w2 = (width * width) as f64;
    let led = &rep.ledger;
    let others = [ledger::O_T, ledger::O_EXP, ledger::O_F, ledger::O_G, ledger::O_PROD]
        .iter()
        .map(|k| led.get(k))
        .sum::<u64>() as f64;
    GateModel {
        qft: led.get(ledger::U_EIG) as f64 * spec.d as f64 * l * l,
        eigen_arithmetic: led.get(ledger::O_LAMBDA) as f64 * (2 * spec.d + 1) as f64 * w2,
        other_arithmetic: others * w2,
    }
}

#[derive(Debug, Clone)]
pub struct PdeReport {
    pub report: SolveReport,
    /// Post-selected `u` block for hyperbolic kinds.
    pub u_block: Option<SolveReport>,
    /// `(‖u(T)‖, ‖v(T)‖)` of the lifted reference.
    pub block_norms: Option<(f64, f64)>,
    /// `√(‖u‖² + ‖v‖²)/‖u‖`.
    pub post_selection_factor: Option<f64>,
    /// `‖w0‖/‖v0‖` from fast inversion.
    pub inversion_cost: Option<f64>,
    pub gates: GateModel,
}

/// The ODE the eigen-solvers see: the lifted `(u, v)` system for hyperbolic
/// kinds, `du/dt = A u + b` otherwise.
pub fn semi_discretize(spec: &PdeSpec) -> Result<(OdeProblem, EigenOracleSet)> {
    spec.validate()?;
    if spec.kind.is_hyperbolic() {
        let l = lift_hyperbolic(spec)?;
        return Ok((l.problem, l.oracles));
    }
    let o = eigensystem_of(spec)?;
    let a = operator_matrix(spec)?;
    let p = OdeProblem::new(Coefficient::Matrix(a), spec.sample(&spec.u0), spec.source_samples(), spec.horizon)?;
    Ok((p, o))
}

/// Builds the semi-discretized problem and runs the eigen-solvers.
pub fn solve_pde(spec: &PdeSpec, eps: f64) -> Result<PdeReport> {
    spec.validate()?;
    if spec.kind.is_hyperbolic() {
        let lifted = lift_hyperbolic(spec)?;
        let rep = run(&lifted.problem, &lifted.oracles, eps)?;
        let reference = solve_reference(&lifted.problem)?;
        let nn = spec.grid_size();
        let ref_u = reference.rows(0, nn).into_owned();
        let nu = ref_u.norm();
        let nv = reference.rows(nn, nn).norm();
        let amp = rep.output_state.rows(0, nn).into_owned() * r(rep.success_probability.sqrt());
        let mut ub = SolveReport::from_amplitude("eigen-u-block", &amp, &ref_u, rep.ledger.clone(), eps, rep.ancilla_qubits)?;
        ub.details = rep.details.clone();
        let factor = (nu * nu + nv * nv).sqrt() / nu;
        let gates = gate_model(spec, &rep, lifted.oracles.register_bits);
        Ok(PdeReport {
            report: rep,
            u_block: Some(ub.with_detail("post_selection_factor", factor)),
            block_norms: Some((nu, nv)),
            post_selection_factor: Some(factor),
            inversion_cost: Some(lifted.inversion.cost_factor),
            gates,
        })
    } else {
        let o = eigensystem_of(spec)?;
        let a = operator_matrix(spec)?;
        let p = OdeProblem::new(Coefficient::Matrix(a), spec.sample(&spec.u0), spec.source_samples(), spec.horizon)?;
        let rep = run(&p, &o, eps)?;
        let gates = gate_model(spec, &rep, o.register_bits);
        Ok(PdeReport { report: rep, u_block: None, block_norms: None, post_selection_factor: None, inversion_cost: None, gates })
    }
}

/// Static sources use the exact constant-`b` solver, time-varying ones the
/// Riemann-sum solver.
fn run(p: &OdeProblem, o: &EigenOracleSet, eps: f64) -> Result<SolveReport> {
    match p.inhomogeneous {
        Inhomogeneous::Sampled(_) => solve_eigen_timedep(p, o, eps),
        _ => {
            let rep = solve_eigen_inhomogeneous(p, o)?;
            Ok(SolveReport { claimed_eps: eps, ..rep })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{eigenvalues, fidelity, matrix_exponential};
    use proptest::prelude::*;

    fn sorted_re(v: &[Complex64]) -> Vec<f64> {
        let mut x: Vec<f64> = v.iter().map(|z| z.re).collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        x
    }

    #[test]
    fn stencil_examples() {
        let dh = build_dh(4).unwrap();
        for i in 0..4 {
            assert!(dh.row(i).iter().sum::<Complex64>().norm() < 1e-12);
        }
        let ev = eigenvalues(&dh).unwrap();
        assert!(spectrum_deviation(&ev, &[r(0.0), r(-32.0), r(-64.0), r(-32.0)]) < 1e-10);
        let vh = build_vh(4).unwrap();
        let ev = eigenvalues(&vh).unwrap();
        assert!(spectrum_deviation(&ev, &[r(0.0), c(0.0, 4.0), r(0.0), c(0.0, -4.0)]) < 1e-10);
        assert!(build_dh(2).is_err());
        assert!(build_dh3(4).is_err());
        assert!(build_dh4(5).is_ok());
    }

    #[test]
    fn higher_order_spectra() {
        let n = 8;
        let nf = n as f64;
        let d3 = eigenvalues(&build_dh3(n).unwrap()).unwrap();
        let want: Vec<Complex64> = (0..n)
            .map(|k| {
                let th = k as f64 * PI / nf;
                c(0.0, -4.0 * nf.powi(3) * (2.0 * th).sin() * th.sin().powi(2))
            })
            .collect();
        assert!(spectrum_deviation(&d3, &want) < 1e-8);
        let d4 = eigenvalues(&build_dh4(n).unwrap()).unwrap();
        let want: Vec<Complex64> = (0..n).map(|k| r(16.0 * nf.powi(4) * (k as f64 * PI / nf).sin().powi(4))).collect();
        assert!(spectrum_deviation(&d4, &want) < 1e-8 * nf.powi(4));
    }

    #[test]
    fn eigensystem_examples() {
        let mut heat = PdeSpec::new(PdeKind::Heat, 1, 4, Profile::Zero, 1.0);
        let o = eigensystem_of(&heat).unwrap();
        assert_eq!(o.alpha_shift, 0.0);
        for (x, y) in sorted_re(&o.eigen.eigenvalues).iter().zip([-64.0, -32.0, -32.0, 0.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        heat.a_prime = vec![0.5];
        assert!(heat.validate().is_err());

        let tr = PdeSpec::new(PdeKind::Transport, 1, 4, Profile::Zero, 1.0);
        let o = eigensystem_of(&tr).unwrap();
        assert!(spectrum_deviation(&o.eigen.eigenvalues, &[r(0.0), c(0.0, 4.0), r(0.0), c(0.0, -4.0)]) < 1e-12);
        assert_eq!(o.alpha_shift, 0.0);

        let mut ad = PdeSpec::new(PdeKind::AdvectionDiffusion, 2, 4, Profile::Zero, 1.0);
        ad.a = vec![1.0, 1.0];
        ad.a_prime = vec![1.0, 0.0];
        let mu = closed_form_eigenvalues(&ad).unwrap();
        let dense = eigenvalues(&operator_matrix(&ad).unwrap()).unwrap();
        assert_eq!(mu.len(), 16);
        assert!(spectrum_deviation(&mu, &dense) < 1e-8);
        assert!(fourier_residual(&ad).unwrap() < 1e-10);
    }

    #[test]
    fn matrix_free_matches_dense() {
        let mut s = PdeSpec::new(PdeKind::GenericParabolic, 2, 5, Profile::Zero, 1.0);
        s.a = vec![0.3, 1.2];
        s.a_prime = vec![-0.7, 2.0];
        s.c = -0.5;
        let x = ComplexVector::from_fn(25, |i, _| c(i as f64 * 0.1, 1.0 - i as f64 * 0.03));
        let dense = operator_matrix(&s).unwrap() * &x;
        assert!((apply_operator(&s, &x) - dense).norm() < 1e-10);
        let y = dft_axes(&x, 5, 2, false);
        assert!((y - dft_tensor(5, 2) * &x).norm() < 1e-12);
    }

    fn wave(n: usize, d: usize) -> PdeSpec {
        let mut s = PdeSpec::new(PdeKind::Wave, d, n, Profile::Cosine { k: vec![1; d], amplitude: 1.0, phase: 0.0 }, 1.0);
        s.w0 = Some(Profile::Cosine { k: vec![1; d], amplitude: 0.5, phase: 0.3 });
        s
    }

    #[test]
    fn hyperbolic_lift() {
        let s = wave(4, 1);
        let b = b_eigensystem(&s).unwrap().eigen.reconstruct();
        let k = operator_matrix(&s).unwrap();
        assert!(spectral_norm(&(&b * &b + &k)) < 1e-8);
        let l = lift_hyperbolic(&s).unwrap();
        let mut im: Vec<f64> = l.oracles.eigen.eigenvalues.iter().map(|z| z.im).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r32 = 32f64.sqrt();
        let want = [-8.0, -r32, -r32, 0.0, 0.0, r32, r32, 8.0];
        for (x, y) in im.iter().zip(want) {
            assert!((x - y).abs() < 1e-12);
        }
        let dense = eigenvalues(&l.problem.matrix()).unwrap();
        assert!(spectrum_deviation(&dense, &l.oracles.eigen.eigenvalues) < 1e-8);

        let mut kg = wave(4, 1);
        kg.kind = PdeKind::KleinGordon;
        kg.mass = Some(1.0);
        let l = lift_hyperbolic(&kg).unwrap();
        assert!(l.oracles.eigen.eigenvalues.iter().all(|z| z.im.abs() >= 1.0 - 1e-12 && z.re.abs() < 1e-15));
    }

    #[test]
    fn beam_lift() {
        let mut s = PdeSpec::new(PdeKind::Beam, 1, 8, Profile::Constant { value: 1.0 }, 1.0);
        s.w0 = Some(Profile::Cosine { k: vec![2], amplitude: 1.0, phase: 0.0 });
        let b = b_eigensystem(&s).unwrap().eigen.reconstruct();
        let d4 = build_dh4(8).unwrap();
        assert!(spectral_norm(&(&b * &b - &d4)) < 1e-8 * spectral_norm(&d4));
        let x = ComplexVector::from_fn(8, |i, _| c(i as f64, -1.0));
        assert!((apply_b(&s, &x).unwrap() - &b * &x).norm() < 1e-8);
    }

    #[test]
    fn mean_zero_required() {
        let mut s = wave(8, 1);
        s.w0 = Some(Profile::Constant { value: 1.0 });
        assert!(matches!(s.validate(), Err(FfodeError::ZeroModeOverlap(_))));
        s.w0 = None;
        assert!(s.validate().is_err());
    }

    #[test]
    fn fast_inversion_examples() {
        let mut kg = wave(8, 1);
        kg.kind = PdeKind::KleinGordon;
        kg.mass = Some(0.7);
        let bo = b_eigensystem(&kg).unwrap();
        let w0 = ComplexVector::from_fn(8, |i, _| c((i * i) as f64 * 0.1, 1.0));
        let inv = fast_inversion(&bo, &w0).unwrap();
        let bm = bo.eigen.reconstruct();
        assert!((&bm * &inv.v0 * c(0.0, 1.0) - &w0).norm() < 1e-9);

        let w = wave(8, 1);
        let bo = b_eigensystem(&w).unwrap();
        let flat = ComplexVector::from_element(8, r(1.0));
        assert!(matches!(fast_inversion(&bo, &flat), Err(FfodeError::ZeroModeOverlap(_))));
        let k = 3;
        let mode = fourier_mode(8, 1, k);
        let s = bo.eigen.eigenvalues[k].re;
        let inv = fast_inversion(&bo, &mode).unwrap();
        assert!((&inv.v0 - &mode / c(0.0, s)).norm() < 1e-12);
        assert!((inv.cost_factor - s).abs() < 1e-9);
    }

    #[test]
    fn solve_examples() {
        let u0 = Profile::Sum {
            terms: vec![Profile::Constant { value: 1.0 }, Profile::Cosine { k: vec![1], amplitude: 1.0, phase: 0.0 }],
        };
        let heat = PdeSpec::new(PdeKind::Heat, 1, 8, u0.clone(), 0.05);
        let rep = solve_pde(&heat, 1e-6).unwrap();
        let a = operator_matrix(&heat).unwrap();
        let want = matrix_exponential(&a, 0.05).unwrap() * heat.sample(&u0);
        assert!(fidelity(&rep.report.output_state, &want) >= 1.0 - 1e-9);
        assert!(rep.gates.qft > 0.0);

        let tr = PdeSpec::new(PdeKind::Transport, 1, 8, Profile::Gaussian { center: vec![0.5], width: 0.1, amplitude: 1.0 }, 0.7);
        let rep = solve_pde(&tr, 1e-6).unwrap();
        assert!((rep.report.success_probability - 1.0).abs() < 1e-12);

        let w = wave(8, 1);
        let rep = solve_pde(&w, 1e-6).unwrap();
        let ub = rep.u_block.as_ref().unwrap();
        assert!(ub.fidelity * ub.fidelity >= 1.0 - 1e-8, "{}", ub.fidelity);
        let (nu, nv) = rep.block_norms.unwrap();
        assert!((rep.post_selection_factor.unwrap() - (nu * nu + nv * nv).sqrt() / nu).abs() < 1e-14);
        assert!((ub.success_probability - rep.report.success_probability * nu * nu / (nu * nu + nv * nv)).abs() < 1e-9);
    }

    #[test]
    fn time_dependent_source() {
        let mut s = PdeSpec::new(PdeKind::Heat, 1, 4, Profile::Constant { value: 1.0 }, 0.5);
        s.source = vec![SourceTerm {
            spatial: Profile::Cosine { k: vec![1], amplitude: 1.0, phase: 0.0 },
            temporal: Temporal::Cos { omega: 2.0, phase: 0.0 },
        }];
        let rep = solve_pde(&s, 1e-2).unwrap();
        assert_eq!(rep.report.solver, "eigen-timedep");
        assert!(rep.report.error_vs_reference <= 1e-2);
    }

    #[test]
    fn heat_conserves_mass() {
        let u0 = Profile::Gaussian { center: vec![0.3, 0.6], width: 0.2, amplitude: 1.0 };
        let s = PdeSpec::new(PdeKind::Heat, 2, 4, u0.clone(), 1.0);
        let a = operator_matrix(&s).unwrap();
        let x0 = s.sample(&u0);
        let m0: Complex64 = x0.iter().sum();
        for t in [0.01, 0.1, 1.0] {
            let xt = matrix_exponential(&a, t).unwrap() * &x0;
            assert!((xt.iter().sum::<Complex64>() - m0).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_mode_source_grows_linearly() {
        for t in [10.0, 40.0] {
            let mut s = PdeSpec::new(PdeKind::Heat, 1, 8, Profile::Cosine { k: vec![1], amplitude: 1.0, phase: 0.0 }, t);
            s.source = vec![SourceTerm { spatial: Profile::Constant { value: 0.5 }, temporal: Temporal::Constant }];
            let rep = solve_pde(&s, 1e-6).unwrap();
            let psi0 = fourier_mode(8, 1, 0);
            let proj = crate::matrix::inner(&psi0, &s.sample(&Profile::Constant { value: 0.5 })).norm();
            assert!(rep.report.solution_norm >= 0.9 * t * proj);
            assert!(rep.report.success_probability > 0.4);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn closed_forms_match_dense(n in 4usize..9, d in 1usize..3, a0 in 0.0f64..2.0, a1 in -2.0f64..2.0, cc in -3.0f64..0.0) {
            let mut s = PdeSpec::new(PdeKind::GenericParabolic, d, n, Profile::Zero, 1.0);
            s.a = vec![a0; d];
            s.a_prime = vec![a1; d];
            s.c = cc;
            let mu = closed_form_eigenvalues(&s).unwrap();
            let dense = eigenvalues(&operator_matrix(&s).unwrap()).unwrap();
            prop_assert!(spectrum_deviation(&mu, &dense) < 1e-8);
            let f = dft_tensor(n, d);
            let resid = spectral_norm(&(f.adjoint() * operator_matrix(&s).unwrap() * &f - crate::matrix::diag(&mu)));
            prop_assert!(resid < 1e-8);
        }
    }
}
