//! Solver output: post-selected state, success statistics and query counts.

use std::collections::BTreeMap;

use crate::error::{FfodeError, Result};
use crate::ledger::QueryLedger;
use crate::matrix::{inner, ComplexVector};

/// Amplitude-amplification repeat constant: `ceil(C_AA/√p)` rounds.
pub const C_AA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solver: String,
    /// Unit-norm post-selected state.
    pub output_state: ComplexVector,
    pub success_probability: f64,
    pub repeats_no_aa: u64,
    pub repeats_aa: u64,
    pub ledger: QueryLedger,
    /// `min_φ ‖out − e^{iφ} ref‖` with `ref` normalized.
    pub error_vs_reference: f64,
    pub fidelity: f64,
    pub claimed_eps: f64,
    pub ancilla_qubits: usize,
    /// `‖u(T)‖` of the reference.
    pub solution_norm: f64,
    /// Solver-specific scalars (normalizations, degrees, angles).
    pub details: BTreeMap<String, f64>,
}

pub fn repeats(p: f64) -> (u64, u64) {
    if !(p > 0.0) {
        return (u64::MAX, u64::MAX);
    }
    ((1.0 / p).ceil() as u64, (C_AA / p.sqrt()).ceil() as u64)
}

/// Phase-insensitive distance between normalized states, computed as
/// `‖â − e^{iφ} b̂‖` with φ aligning the overlap.
pub fn phase_distance(a: &ComplexVector, b: &ComplexVector) -> f64 {
    let an = a.unscale(a.norm());
    let bn = b.unscale(b.norm());
    let ov = inner(&bn, &an);
    let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { num_complex::Complex64::new(1.0, 0.0) };
    (an - bn * ph).norm()
}

impl SolveReport {
    /// Builds the report from the unnormalized post-selected amplitude vector.
    pub fn from_amplitude(
        solver: &str,
        amplitude: &ComplexVector,
        reference: &ComplexVector,
        ledger: QueryLedger,
        claimed_eps: f64,
        ancilla_qubits: usize,
    ) -> Result<Self> {
        let norm = amplitude.norm();
        if !(norm > 1e-300) {
            return Err(FfodeError::Degenerate("post-selected amplitude vanishes".into()));
        }
        let rn = reference.norm();
        if !(rn > 0.0) {
            return Err(FfodeError::Degenerate("reference solution is zero".into()));
        }
        let p = (norm * norm).min(1.0);
        let out = amplitude.unscale(norm);
        let fid = (inner(&out, reference).norm() / rn).min(1.0);
        let (r0, r1) = repeats(p);
        Ok(SolveReport {
            solver: solver.to_string(),
            error_vs_reference: phase_distance(&out, reference),
            output_state: out,
            success_probability: p,
            repeats_no_aa: r0,
            repeats_aa: r1,
            ledger,
            fidelity: fid,
            claimed_eps,
            ancilla_qubits,
            solution_norm: rn,
            details: BTreeMap::new(),
        })
    }

    pub fn with_detail(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.to_string(), v);
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }

    pub fn within_claim(&self) -> bool {
        self.error_vs_reference <= self.claimed_eps
    }
}
