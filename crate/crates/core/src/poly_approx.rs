//! Chebyshev approximants on [−1, 1] with grid-certified sup-norm error.
//!
//! The degree is found by increasing it one step at a time (two for even
//! targets) until the interpolant passes certification on `8d + 64`
//! Chebyshev-Lobatto points.

use serde::{Deserialize, Serialize};

use crate::error::{FfodeError, Result};

/// Anything that can be evaluated as a real polynomial on [−1, 1].
pub trait RealPolynomial {
    fn degree(&self) -> usize;
    fn eval(&self, x: f64) -> f64;
}

/// `Σ c_j T_j(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSeries {
    pub coeffs: Vec<f64>,
}

impl ChebyshevSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut s = ChebyshevSeries { coeffs };
        if s.coeffs.is_empty() {
            s.coeffs.push(0.0);
        }
        s
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// Interpolant through the `d + 1` Chebyshev points of the first kind.
    pub fn interpolate(f: &dyn Fn(f64) -> f64, d: usize) -> Self {
        let m = d + 1;
        let nodes: Vec<f64> = (0..m).map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos()).collect();
        let vals: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        let mut coeffs = vec![0.0; m];
        for (j, cj) in coeffs.iter_mut().enumerate() {
            let mut s = 0.0;
            for (k, v) in vals.iter().enumerate() {
                let th = std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / m as f64;
                s += v * th.cos();
            }
            *cj = 2.0 * s / m as f64;
        }
        coeffs[0] *= 0.5;
        Self::new(coeffs)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Largest |c_j| over odd j.
    pub fn odd_part_size(&self) -> f64 {
        self.coeffs.iter().skip(1).step_by(2).fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl RealPolynomial for ChebyshevSeries {
    fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    // Clenshaw recurrence
    fn eval(&self, x: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }
}

/// `cos(πk/N)`, k = 0..=N.
pub fn lobatto_grid(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| (std::f64::consts::PI * k as f64 / n as f64).cos()).collect()
}

pub fn certification_points(d: usize) -> usize {
    8 * d + 64
}

/// `max_x |f(x) − p(x)|` over `lobatto_grid(points)`.
pub fn sup_error(f: &dyn Fn(f64) -> f64, p: &dyn RealPolynomial, points: usize) -> f64 {
    lobatto_grid(points).into_iter().map(|x| (f(x) - p.eval(x)).abs()).fold(0.0, f64::max)
}

/// `max_x |p(x)|` over `lobatto_grid(points)`.
pub fn sup_norm(p: &dyn RealPolynomial, points: usize) -> f64 {
    lobatto_grid(points).into_iter().map(|x| p.eval(x).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Target {
    /// `e^{−T(1−x)}`
    ExpShifted { t: f64 },
    /// `e^{−βx²}`
    Gaussian { beta: f64 },
    /// `∫₀¹ e^{−βτx²} dτ = (1 − e^{−βx²})/(βx²)`
    GaussianIntegral { beta: f64 },
    Constant { value: f64 },
}

impl Target {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Target::ExpShifted { t } => (-t * (1.0 - x)).exp(),
            Target::Gaussian { beta } => (-beta * x * x).exp(),
            Target::GaussianIntegral { beta } => {
                let y = beta * x * x;
                if y == 0.0 {
                    1.0
                } else {
                    -(-y).exp_m1() / y
                }
            }
            Target::Constant { value } => value,
        }
    }

    pub fn is_even(&self) -> bool {
        !matches!(self, Target::ExpShifted { .. })
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            Target::ExpShifted { t } => t,
            Target::Gaussian { beta } | Target::GaussianIntegral { beta } => beta,
            Target::Constant { value } => value,
        }
    }

    pub fn with_parameter(&self, p: f64) -> Target {
        match self {
            Target::ExpShifted { .. } => Target::ExpShifted { t: p },
            Target::Gaussian { .. } => Target::Gaussian { beta: p },
            Target::GaussianIntegral { .. } => Target::GaussianIntegral { beta: p },
            Target::Constant { .. } => Target::Constant { value: p },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Target::ExpShifted { .. } => "exp-shifted",
            Target::Gaussian { .. } => "gaussian",
            Target::GaussianIntegral { .. } => "gaussian-integral",
            Target::Constant { .. } => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxPolynomial {
    pub series: ChebyshevSeries,
    pub degree: usize,
    pub target: Target,
    pub requested_error: f64,
    pub achieved_error: f64,
}

impl RealPolynomial for ApproxPolynomial {
    fn degree(&self) -> usize {
        self.degree
    }

    fn eval(&self, x: f64) -> f64 {
        self.series.eval(x)
    }
}

impl ApproxPolynomial {
    /// Re-sample the error on a grid ten times denser than certification.
    pub fn recheck_dense(&self) -> f64 {
        let f = |x| self.target.eval(x);
        sup_error(&f, &self.series, 10 * certification_points(self.degree))
    }
}

const MAX_DEGREE: usize = 20_000;

/// Smallest accepted `max/min` ratio of a scan grid (the grid 16..1024 spans 64).
pub const MIN_SCAN_SPAN: f64 = 64.0;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(())
}

/// Smallest-degree certified Chebyshev interpolant of `target`.
pub fn approximate(target: Target, eps: f64) -> Result<ApproxPolynomial> {
    check_eps(eps)?;
    if !target.parameter().is_finite() || (target.parameter() < 0.0 && !matches!(target, Target::Constant { .. })) {
        return Err(FfodeError::InvalidParameter(format!("bad parameter for {}", target.label())));
    }
    let f = |x| target.eval(x);
    let step = if target.is_even() { 2 } else { 1 };
    let mut d = 0;
    while d <= MAX_DEGREE {
        let mut series = ChebyshevSeries::interpolate(&f, d);
        if target.is_even() {
            for c in series.coeffs.iter_mut().skip(1).step_by(2) {
                *c = 0.0;
            }
        }
        let err = sup_error(&f, &series, certification_points(d));
        if err <= eps {
            return Ok(ApproxPolynomial { series, degree: d, target, requested_error: eps, achieved_error: err });
        }
        d += step;
    }
    Err(FfodeError::Numeric(format!("no certified {} approximant below degree {MAX_DEGREE}", target.label())))
}

pub fn approx_exp_shifted(t: f64, eps: f64) -> Result<ApproxPolynomial> {
    approximate(Target::ExpShifted { t }, eps)
}

pub fn approx_gaussian(beta: f64, eps: f64) -> Result<ApproxPolynomial> {
    approximate(Target::Gaussian { beta }, eps)
}

pub fn approx_gaussian_integral(beta: f64, eps: f64) -> Result<ApproxPolynomial> {
    approximate(Target::GaussianIntegral { beta }, eps)
}

/// `√(max(p, log 1/ε)·log 1/ε)`, the reference degree scale.
pub fn degree_scale(param: f64, eps: f64) -> f64 {
    let l = (1.0 / eps).ln();
    (param.max(l) * l).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeScan {
    pub target: String,
    pub eps: f64,
    pub rows: Vec<(f64, usize)>,
    /// Least-squares slope of log d against log param; `None` if any degree is 0.
    pub exponent: Option<f64>,
    pub monotone: bool,
}

pub fn certified_degree_scan(target: Target, params: &[f64], eps: f64) -> Result<DegreeScan> {
    if params.len() < 4 {
        return Err(FfodeError::InvalidParameter("degree scan needs at least 4 parameter values".into()));
    }
    let lo = params.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = params.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || hi / lo < MIN_SCAN_SPAN {
        return Err(FfodeError::InvalidParameter(format!("degree scan grid must be positive and span a factor of {MIN_SCAN_SPAN}")));
    }
    let mut sorted = params.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rows = Vec::with_capacity(sorted.len());
    for &p in &sorted {
        rows.push((p, approximate(target.with_parameter(p), eps)?.degree));
    }
    let monotone = rows.windows(2).all(|w| w[0].1 <= w[1].1);
    let exponent = if rows.iter().any(|r| r.1 == 0) {
        None
    } else {
        let pts: Vec<(f64, f64)> = rows.iter().map(|&(p, d)| (p.ln(), (d as f64).ln())).collect();
        Some(loglog_slope(&pts))
    };
    Ok(DegreeScan { target: target.label().to_string(), eps, rows, exponent, monotone })
}

pub fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
