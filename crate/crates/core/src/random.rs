//! Seeded random instances: Gaussian matrices, Haar-like unitaries, states.

use rand::Rng;

use crate::matrix::{c, diag, ComplexMatrix, ComplexVector};

/// Standard normal sample by Box-Muller.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| c(gaussian(rng), gaussian(rng)) / 2f64.sqrt())
}

/// QR of a Ginibre matrix with the phase of R's diagonal folded into Q.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n);
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        let d = rr[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

/// Hermitian matrix with spectral norm at most one.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n);
    let h = (&g + g.adjoint()).scale(0.5);
    let s = crate::matrix::spectral_norm(&h).max(1e-300);
    h.unscale(s)
}

/// Normal matrix `U diag(λ) U†` with eigenvalues in the unit disk.
pub fn normal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let u = unitary(rng, n);
    let eig: Vec<_> = (0..n)
        .map(|_| {
            let rad = rng.random::<f64>().sqrt();
            let th = rng.random::<f64>() * std::f64::consts::TAU;
            c(rad * th.cos(), rad * th.sin())
        })
        .collect();
    &u * diag(&eig) * u.adjoint()
}

/// Normal matrix with prescribed eigenvalues in a random basis.
pub fn normal_with_spectrum<R: Rng + ?Sized>(rng: &mut R, eig: &[num_complex::Complex64]) -> ComplexMatrix {
    let u = unitary(rng, eig.len());
    &u * diag(eig) * u.adjoint()
}

pub fn vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| c(gaussian(rng), gaussian(rng)))
}

pub fn state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    let v = vector(rng, n);
    let nv = v.norm();
    v.unscale(nv)
}
