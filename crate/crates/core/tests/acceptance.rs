//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance and runtime budget is pinned below.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ffode_core::bench::{self, BenchConfig};
use ffode_core::block_encoding::{self as be, StatePreparationPair};
use ffode_core::ff_eigen::{self, EigenOracleSet};
use ffode_core::ff_qsvt::{self, LcsInputs, StatePrep};
use ffode_core::ledger::{self, QueryLedger};
use ffode_core::lower_bounds as lb;
use ffode_core::matrix::{self, c, r, ComplexMatrix, ComplexVector, EigenSystem};
use ffode_core::ode_reference::{self as odr, Coefficient, Inhomogeneous, OdeProblem, SampledSource};
use ffode_core::pde::{self, PdeKind, PdeSpec, Profile, SourceTerm, Temporal};
use ffode_core::poly_approx::{self, ChebyshevSeries, RealPolynomial, Target};
use ffode_core::random;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BE_INSTANCES: usize = 200;
const BE_SLACK: f64 = 1e-10;
const BE_BUDGET: Duration = Duration::from_secs(30);

const EIGEN_INSTANCES: usize = 50;
const FIDELITY_DEFECT: f64 = 1e-9;
/// State error ε bounds the fidelity defect by ε²; 3e−5 keeps it under 1e−9.
const TIMEDEP_EPS: f64 = 3e-5;
const EIGEN_BUDGET: Duration = Duration::from_secs(60);

const PROB_INSTANCES: usize = 20;
const PROB_TOL: f64 = 1e-10;

const SCAN_EPS: f64 = 1e-6;
const SCAN_GRID: [f64; 4] = [16.0, 64.0, 256.0, 1024.0];
const SLOPE_WINDOW: (f64, f64) = (0.40, 0.65);
const SCAN_BUDGET: Duration = Duration::from_secs(120);

const QUAD_INSTANCES: usize = 10;
const QUAD_NODES: [usize; 3] = [100, 1000, 10_000];
const QUAD_SLOPE_TOL: f64 = 0.15;

const LB_BUDGET: Duration = Duration::from_secs(10);
const ORACLE_TOL: f64 = 1e-12;

const AMP_CIRCUITS: usize = 100;
const AMP_MAX_Q: usize = 8;
const AMP_MAX_DIM: usize = 16;

const SHIFT_INSTANCES: usize = 50;
const SHIFT_TOL: f64 = 1e-10;

/// Relative to `max(1, spectral radius)`: stencil spectra reach `16 n⁴`.
const PDE_TOL: f64 = 1e-8;
/// Dense eigensolves are limited to this many rows; larger grids use the
/// matrix-free Fourier residual.
const PDE_DENSE_MAX: usize = 256;

const EQ_INSTANCES: usize = 20;
const EQ_ELL: f64 = 0.3;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn budget(o: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    let ok = o.ok && elapsed <= limit;
    let detail = if elapsed > limit { format!("{} (over budget {:.0?})", o.detail, limit) } else { o.detail };
    Outcome { ok, detail }
}

fn scaled(m: ComplexMatrix, norm: f64) -> ComplexMatrix {
    let s = matrix::spectral_norm(&m);
    m.scale(norm / s)
}

fn hermitian_with_norm<R: Rng>(rng: &mut R, n: usize, norm: f64) -> ComplexMatrix {
    scaled(random::hermitian(rng, n), norm)
}

/// Every constructor's output verifies within its stated error.
fn c1_block_encodings() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for k in 0..BE_INSTANCES {
        let n = rng.random_range(2..=16usize);
        let res = (|| -> ffode_core::error::Result<f64> {
            let mut ratio: f64 = 0.0;
            let mut track = |measured: f64, formula: f64, claimed: f64| -> bool {
                ratio = ratio.max(measured / formula.max(1e-300));
                measured <= formula + BE_SLACK && (claimed - formula).abs() <= 1e-12 * (1.0 + formula)
            };

            // dilation
            let a = scaled(random::ginibre(&mut rng, n), 0.9);
            let d = be::dilation(&a, 1.0)?;
            be::verify_block_encoding(&d, &a)?;

            // LCU of ε-accurate unit-α blocks: error ≤ αβε
            let eps = 10f64.powf(-rng.random_range(2.0..6.0));
            let y = [r(rng.random_range(0.1..2.0)), c(-rng.random_range(0.1..2.0), rng.random_range(-1.0..1.0))];
            let beta: f64 = y.iter().map(|z| z.norm()).sum();
            let a0 = scaled(random::ginibre(&mut rng, n), 0.8);
            let a1 = scaled(random::ginibre(&mut rng, n), 0.8);
            let e0 = scaled(random::ginibre(&mut rng, n), eps);
            let e1 = scaled(random::ginibre(&mut rng, n), eps);
            let b0 = be::dilation(&(&a0 + &e0), 1.0)?.with_target(a0.clone()).with_epsilon(eps);
            let b1 = be::dilation(&(&a1 + &e1), 1.0)?.with_target(a1.clone()).with_epsilon(eps);
            let pair = StatePreparationPair::for_coefficients(&y)?;
            let l = be::lcu_combine(&pair, &[b0, b1])?;
            let target = &a0 * y[0] + &a1 * y[1];
            be::verify_block_encoding(&l, &target)?;
            if !track(be::measured_error(&l, &target)?, beta * eps, l.epsilon_claim) {
                return Err(ffode_core::error::FfodeError::Numeric(format!("lcu instance {k}")));
            }

            // product: αε_b + βδ_a
            let alpha = rng.random_range(0.5..3.0);
            let beta_b = rng.random_range(0.5..3.0);
            let (da, eb) = (alpha * eps, beta_b * eps * 0.5);
            let ma = scaled(random::ginibre(&mut rng, n), 0.9 * alpha);
            let mb = scaled(random::ginibre(&mut rng, n), 0.9 * beta_b);
            let pa = scaled(random::ginibre(&mut rng, n), da);
            let pb = scaled(random::ginibre(&mut rng, n), eb);
            let ua = be::dilation(&(&ma + &pa), alpha)?.with_target(ma.clone()).with_epsilon(da);
            let ub = be::dilation(&(&mb + &pb), beta_b)?.with_target(mb.clone()).with_epsilon(eb);
            let m = be::multiply(&ua, &ub)?;
            let target = &ma * &mb;
            be::verify_block_encoding(&m, &target)?;
            if !track(be::measured_error(&m, &target)?, alpha * eb + beta_b * da, m.epsilon_claim) {
                return Err(ffode_core::error::FfodeError::Numeric(format!("product instance {k}")));
            }

            // inverse on a gapped Hermitian spectrum
            let delta = rng.random_range(0.05..0.9);
            let vals: Vec<f64> = (0..n)
                .map(|_| {
                    let x = rng.random_range(delta..1.0);
                    if rng.random::<bool>() {
                        x
                    } else {
                        -x
                    }
                })
                .collect();
            let u = random::unitary(&mut rng, n);
            let h = &u * matrix::diag_real(&vals) * u.adjoint();
            let h = (&h + h.adjoint()).scale(0.5);
            let inv = be::invert(&be::dilation(&h, 1.0)?, delta, eps)?;
            let hinv = &u * matrix::diag_real(&vals.iter().map(|x| 1.0 / x).collect::<Vec<_>>()) * u.adjoint();
            be::verify_block_encoding(&inv, &hinv)?;
            if (inv.alpha - 4.0 / (3.0 * delta)).abs() > 1e-12 * inv.alpha {
                return Err(ffode_core::error::FfodeError::Numeric(format!("inverse alpha, instance {k}")));
            }

            // polynomial transform of an ε-accurate Hermitian encoding: 4d√(ε/α)
            let alpha = rng.random_range(1.0..2.0);
            let hx = hermitian_with_norm(&mut rng, n, 0.9 * alpha);
            let ex = hermitian_with_norm(&mut rng, n, alpha * eps);
            let ux = be::dilation(&(&hx + &ex), alpha)?.with_target(hx.clone()).with_epsilon(alpha * eps);
            let deg = rng.random_range(1..=8usize);
            let mut coeffs: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l1: f64 = coeffs.iter().map(|x: &f64| x.abs()).sum();
            coeffs.iter_mut().for_each(|x| *x *= 0.5 / l1);
            let p = ChebyshevSeries::new(coeffs);
            let pt = be::polynomial_transform(&ux, &p)?;
            let (hv, hb) = matrix::hermitian_eigen(&hx.unscale(alpha))?;
            let ptarget = &hb * matrix::diag_real(&hv.iter().map(|&x| p.eval(x)).collect::<Vec<_>>()) * hb.adjoint();
            be::verify_block_encoding(&pt, &ptarget)?;
            if !track(be::measured_error(&pt, &ptarget)?, 4.0 * p.degree() as f64 * eps.sqrt(), pt.epsilon_claim) {
                return Err(ffode_core::error::FfodeError::Numeric(format!("polynomial instance {k}")));
            }
            Ok(ratio)
        })();
        match res {
            Ok(x) => worst = worst.max(x),
            Err(e) => return outcome(false, format!("instance {k} (N={n}): {e}")),
        }
    }
    outcome(true, format!("{BE_INSTANCES} instances, worst measured/stated = {worst:.3e}"))
}

fn cos_mode(d: usize) -> Profile {
    Profile::Cosine { k: vec![1; d], amplitude: 1.0, phase: 0.0 }
}

fn pde_suite() -> Vec<PdeSpec> {
    let mut v = Vec::new();
    let bump = |d: usize| Profile::Gaussian { center: vec![0.5; d], width: 0.2, amplitude: 1.0 };
    for (kind, a, ap) in [
        (PdeKind::Heat, 0.5, 0.0),
        (PdeKind::Transport, 0.0, 1.0),
        (PdeKind::AdvectionDiffusion, 0.3, 0.7),
    ] {
        for d in [1, 2] {
            for n in [4, 8] {
                let mut s = PdeSpec::new(kind, d, n, Profile::Sum { terms: vec![bump(d), cos_mode(d)] }, 0.3);
                s.a = vec![a; d];
                s.a_prime = vec![ap; d];
                if n == 8 && d == 1 {
                    s.source = vec![SourceTerm { spatial: cos_mode(1), temporal: Temporal::Constant }];
                }
                v.push(s);
            }
        }
    }
    for kind in [PdeKind::Wave, PdeKind::KleinGordon] {
        for (d, n) in [(1, 4), (1, 8), (2, 4)] {
            let mut s = PdeSpec::new(kind, d, n, bump(d), 0.2);
            s.w0 = Some(cos_mode(d));
            if kind == PdeKind::KleinGordon {
                s.mass = Some(1.0);
            }
            v.push(s);
        }
    }
    let mut airy = PdeSpec::new(PdeKind::Airy, 1, 8, bump(1), 0.01);
    airy.a = vec![0.1];
    v.push(airy);
    let mut beam = PdeSpec::new(PdeKind::Beam, 1, 8, bump(1), 1e-3);
    beam.w0 = Some(Profile::Cosine { k: vec![2], amplitude: 1.0, phase: 0.0 });
    v.push(beam);
    let mut td = PdeSpec::new(PdeKind::Heat, 1, 8, cos_mode(1), 0.5);
    td.a = vec![0.05];
    td.source = vec![SourceTerm { spatial: bump(1), temporal: Temporal::Cos { omega: 3.0, phase: 0.0 } }];
    v.push(td);
    v
}

fn run_eigen(p: &OdeProblem, o: &EigenOracleSet) -> ffode_core::error::Result<ComplexVector> {
    let rep = match &p.inhomogeneous {
        Inhomogeneous::None => ff_eigen::solve_eigen_homogeneous(p, o)?,
        Inhomogeneous::Constant(_) => ff_eigen::solve_eigen_inhomogeneous(p, o)?,
        Inhomogeneous::Sampled(_) => ff_eigen::solve_eigen_timedep(p, o, TIMEDEP_EPS)?,
    };
    Ok(rep.output_state)
}

fn fidelity_defect(out: &ComplexVector, reference: &ComplexVector) -> f64 {
    let f = matrix::inner(out, reference).norm() / (out.norm() * reference.norm());
    1.0 - f * f
}

fn random_normal_problem(rng: &mut ChaCha8Rng, n: usize, kind: usize) -> (OdeProblem, EigenOracleSet) {
    let vals: Vec<Complex64> = (0..n).map(|_| c(-rng.random_range(0.0..2.0), rng.random_range(-3.0..3.0))).collect();
    let u = random::unitary(rng, n);
    let es = EigenSystem::new(u, vals).unwrap();
    let u0 = random::state(rng, n);
    // Riemann node counts grow like T²; keep sampled-source horizons short
    let t = if kind == 2 { rng.random_range(0.3..1.0) } else { rng.random_range(0.5..3.0) };
    let inh = match kind {
        0 => Inhomogeneous::None,
        1 => Inhomogeneous::Constant(random::vector(rng, n)),
        _ => {
            let (b1, b2) = (random::state(rng, n), random::state(rng, n));
            let (d1, d2) = (b1.clone(), b2.clone());
            let w = rng.random_range(0.5..2.0);
            Inhomogeneous::Sampled(
                SampledSource::new(move |s: f64| &b1 * r((w * s).cos()) + &b2 * r(0.5))
                    .with_derivative(move |s: f64| &d1 * r(-w * (w * s).sin()) + &d2 * r(0.0)),
            )
        }
    };
    let o = if kind == 2 { EigenOracleSet::time_dependent(es.clone()) } else { EigenOracleSet::auto(es.clone()) };
    (OdeProblem::new(Coefficient::Eigen(es), u0, inh, t).unwrap(), o)
}

/// Exact eigen-solvers against the adaptive-quadrature reference.
fn c2_eigen_solvers() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut cases: Vec<(String, OdeProblem, EigenOracleSet)> = Vec::new();
    for s in pde_suite() {
        let (p, o) = match pde::semi_discretize(&s) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("{} d={} n={}: {e}", s.kind.label(), s.d, s.n)),
        };
        cases.push((format!("{} d={} n={}", s.kind.label(), s.d, s.n), p, o));
    }
    let mut k = 0;
    while cases.len() < EIGEN_INSTANCES {
        let kind = k % 3;
        let n = if kind == 2 { rng.random_range(2..=8usize) } else { rng.random_range(2..=64usize) };
        let (p, o) = random_normal_problem(&mut rng, n, kind);
        cases.push((format!("random normal #{k} kind={kind} N={n}"), p, o));
        k += 1;
    }
    let mut worst: f64 = 0.0;
    let mut max_n = 0;
    for (label, p, o) in &cases {
        max_n = max_n.max(p.dim());
        let out = match run_eigen(p, o) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("{label}: {e}")),
        };
        let reference = match odr::solve_reference(p) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("{label}: reference {e}")),
        };
        let d = fidelity_defect(&out, &reference);
        worst = worst.max(d);
        if !(d <= FIDELITY_DEFECT) {
            return outcome(false, format!("{label}: fidelity defect {d:.3e}"));
        }
    }
    let ok = max_n <= 64 && cases.len() == EIGEN_INSTANCES;
    outcome(ok, format!("{} instances (max N={max_n}), worst fidelity defect {worst:.3e}", cases.len()))
}

fn oracle_queries(l: &QueryLedger) -> u64 {
    l.total_queries() - l.get(ledger::U_EIG)
}

/// Exact per-application charges: 6 (real) or 10 (complex) oracle queries and
/// two eigenbasis uses, whatever T and n.
fn c3_ledger_constants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut checked = 0;
    for n in [4, 8, 16] {
        let u = random::unitary(&mut rng, n);
        let real: Vec<Complex64> = (0..n).map(|_| r(-rng.random_range(0.0..2.0))).collect();
        let cplx: Vec<Complex64> = (0..n).map(|_| c(-rng.random_range(0.0..2.0), rng.random_range(-2.0..2.0))).collect();
        let or = EigenOracleSet::real(EigenSystem::new(u.clone(), real).unwrap()).unwrap();
        let oc = EigenOracleSet::complex(EigenSystem::new(u, cplx).unwrap());
        for t in [1.0, 10.0, 100.0] {
            for (o, want) in [(&or, 6), (&oc, 10)] {
                let encs = [ff_eigen::be_exp_eigen(o, t), ff_eigen::be_duhamel_eigen(o, t)];
                for (which, e) in ["exp", "duhamel"].iter().zip(encs) {
                    let e = match e {
                        Ok(e) => e,
                        Err(err) => return outcome(false, format!("{which} n={n} T={t}: {err}")),
                    };
                    let (q, u_uses) = (oracle_queries(&e.ledger), e.ledger.get(ledger::U_EIG));
                    if q != want || u_uses != 2 {
                        return outcome(false, format!("{which} n={n} T={t}: {q} oracle queries, {u_uses} U uses (want {want}, 2)"));
                    }
                    checked += 1;
                }
            }
        }
    }
    outcome(true, format!("{checked} encodings: real 6 + 2U, complex 10 + 2U"))
}

/// Measured post-selection probabilities against the closed forms.
fn c4_success_probabilities() -> Outcome {
    let mut worst: f64 = 0.0;
    // hand-checked: λ = {0, −1}, u0 = (1,1)/√2, T = ln 2 gives 5/8
    let es = EigenSystem::new(matrix::identity(2), vec![r(0.0), r(-1.0)]).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let p = OdeProblem::new(Coefficient::Eigen(es.clone()), matrix::vector_real(&[h, h]), Inhomogeneous::None, 2f64.ln()).unwrap();
    let rep = ff_eigen::solve_eigen_homogeneous(&p, &EigenOracleSet::real(es).unwrap()).unwrap();
    let e58 = (rep.success_probability - 5.0 / 8.0).abs();
    // hand-checked: A = −1, u0 = b = 1, T = 1 is stationary; p = 1/(2·2) = 1/4
    let a = matrix::diag_real(&[-1.0]);
    let one = matrix::vector_real(&[1.0]);
    let (b0, b1) = exact_pair(&a, 1.0, 1.0);
    let sp = StatePrep::for_vector(&one).unwrap();
    let rep = ff_qsvt::lcs_combine_and_measure(&LcsInputs { u0: &sp, b: &sp, be0: &b0, be1: &b1 }, &one, 1e-9).unwrap();
    let e14 = (rep.success_probability - 0.25).abs();
    if e58 > PROB_TOL || e14 > PROB_TOL {
        return outcome(false, format!("hand-checked values off by {e58:.2e}, {e14:.2e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for k in 0..PROB_INSTANCES {
        let n = rng.random_range(2..=8usize);
        let t = rng.random_range(0.3..4.0);
        if k % 2 == 0 {
            let vals: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-2.0..1.0), rng.random_range(-2.0..2.0))).collect();
            let es = EigenSystem::new(random::unitary(&mut rng, n), vals).unwrap();
            let o = EigenOracleSet::complex(es.clone());
            let u0 = random::vector(&mut rng, n);
            let p = OdeProblem::new(Coefficient::Eigen(es.clone()), u0.clone(), Inhomogeneous::None, t).unwrap();
            let rep = ff_eigen::solve_eigen_homogeneous(&p, &o).unwrap();
            let ut = matrix::matrix_exponential(&es.reconstruct(), t).unwrap() * &u0;
            let want = (ut.norm() / ((o.alpha_shift * t).exp() * u0.norm())).powi(2);
            worst = worst.max((rep.success_probability - want).abs());
        } else {
            let h = hermitian_with_norm(&mut rng, n, 1.0);
            let (hv, hb) = matrix::hermitian_eigen(&h).unwrap();
            let a = &hb * matrix::diag_real(&hv.iter().map(|x| -0.1 - 0.9 * (x + 1.0) / 2.0).collect::<Vec<_>>()) * hb.adjoint();
            let a = (&a + a.adjoint()).scale(0.5);
            let (alpha0, alpha1) = (1.0, t);
            let (e0, e1) = exact_pair(&a, t, alpha1);
            let u0 = random::vector(&mut rng, n);
            let b = random::vector(&mut rng, n);
            let reference = odr::solve_reference(&OdeProblem::constant(a.clone(), u0.clone(), b.clone(), t).unwrap()).unwrap();
            let (su, sb) = (StatePrep::for_vector(&u0).unwrap(), StatePrep::for_vector(&b).unwrap());
            let rep = ff_qsvt::lcs_combine_and_measure(&LcsInputs { u0: &su, b: &sb, be0: &e0, be1: &e1 }, &reference, 1e-9).unwrap();
            let norm = (alpha0 * alpha0 * u0.norm_squared() + alpha1 * alpha1 * b.norm_squared()).sqrt();
            let want = (reference.norm() / (2f64.sqrt() * norm)).powi(2);
            worst = worst.max((rep.success_probability - want).abs());
        }
    }
    outcome(worst <= PROB_TOL, format!("5/8 and 1/4 exact to {:.1e}; {PROB_INSTANCES} instances, worst |p - closed form| = {worst:.2e}", e58.max(e14)))
}

fn exact_pair(a: &ComplexMatrix, t: f64, alpha1: f64) -> (be::BlockEncoding, be::BlockEncoding) {
    let e = matrix::matrix_exponential(a, t).unwrap();
    let d = odr::duhamel_matrix(a, t).unwrap();
    (be::dilation(&e, 1.0).unwrap(), be::dilation(&d, alpha1).unwrap())
}

fn fit_slope(rows: &[(f64, usize)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(p, d)| (p.ln(), (d as f64).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Certified degrees grow like the square root of the parameter.
fn c5_degree_law() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for target in [Target::ExpShifted { t: 1.0 }, Target::Gaussian { beta: 1.0 }] {
        let scan = match poly_approx::certified_degree_scan(target, &SCAN_GRID, SCAN_EPS) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("{}: {e}", target.label())),
        };
        let slope = fit_slope(&scan.rows);
        let lib = scan.exponent.unwrap_or(f64::NAN);
        // certificates: rechecked densely, and one degree lower fails
        for &(param, d) in &scan.rows {
            let ap = poly_approx::approximate(target.with_parameter(param), SCAN_EPS).unwrap();
            if ap.degree != d || ap.recheck_dense() > SCAN_EPS * (1.0 + 1e-6) {
                ok = false;
            }
            if d > 0 {
                let f = |x: f64| target.with_parameter(param).eval(x);
                let g = |x: f64| target.with_parameter(param).eval(x);
                let lower = if target.is_even() && d >= 2 { d - 2 } else { d - 1 };
                let p = ChebyshevSeries::interpolate(&f, lower);
                if poly_approx::sup_error(&g, &p, 20 * (lower + 1) + 200) <= SCAN_EPS {
                    ok = false;
                }
            }
        }
        ok &= (slope - lib).abs() <= 1e-12 && slope >= SLOPE_WINDOW.0 && slope <= SLOPE_WINDOW.1 && scan.monotone;
        let degs: Vec<String> = scan.rows.iter().map(|r| r.1.to_string()).collect();
        parts.push(format!("{} degrees [{}] slope {slope:.4}", target.label(), degs.join(",")));
    }
    outcome(ok, parts.join("; "))
}

fn riemann_error(p: &OdeProblem, o: &EigenOracleSet, m: usize, reference: &ComplexVector) -> f64 {
    let t = p.horizon;
    let Inhomogeneous::Sampled(s) = &p.inhomogeneous else { unreachable!("sampled source") };
    let plan = ff_eigen::riemann_plan(s, t, m).unwrap();
    let mut ut = o.eigen.apply_function(|l| (l * t).exp()) * &p.u0;
    for &tk in &plan.times {
        ut += o.eigen.apply_function(|l| (l * (t - tk)).exp()) * s.eval(tk) * r(t / m as f64);
    }
    (ut - reference).norm()
}

/// Riemann-sum error below the computed bound, first-order convergence.
fn c6_quadrature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut slopes = Vec::new();
    for k in 0..QUAD_INSTANCES {
        let n = rng.random_range(2..=6usize);
        let (p, o) = random_normal_problem(&mut rng, n, 2);
        let reference = odr::solve_reference(&p).unwrap();
        let mut pts = Vec::new();
        for m in QUAD_NODES {
            let err = riemann_error(&p, &o, m, &reference);
            let bound = ff_eigen::quadrature_error_bound(&p, &o, m).unwrap();
            if !(err <= bound) {
                return outcome(false, format!("instance {k}, M={m}: error {err:.3e} > bound {bound:.3e}"));
            }
            pts.push(((m as f64).ln(), err.ln()));
        }
        slopes.push(poly_approx::loglog_slope(&pts));
    }
    let worst = slopes.iter().map(|s| (s + 1.0).abs()).fold(0.0, f64::max);
    let (lo, hi) = slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    outcome(worst <= QUAD_SLOPE_TOL, format!("{QUAD_INSTANCES} instances x M in {QUAD_NODES:?}: all under bound, slopes in [{lo:.3}, {hi:.3}]"))
}

fn check_pair(w: &lb::WitnessPair, failures: &mut Vec<String>, tag: &str) {
    for c in w.failures() {
        failures.push(format!("{tag}: {c}"));
    }
}

/// Every inequality of every witness construction, plus displayed constants
/// recomputed here from the raw states.
fn c7_lower_bounds() -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    let id = matrix::identity(2);
    for eps in [0.1, 0.01, 0.001] {
        let w = lb::witness_realpart_gap(&id, &[r(0.5), r(-0.5)], eps).unwrap();
        check_pair(&w, &mut failures, &format!("realpart-gap eps={eps}"));
        if w.initial_overlap < (1.0 - eps).sqrt() - 1e-15 {
            failures.push(format!("eps={eps}: overlap {}", w.initial_overlap));
        }
        if w.params.xi.is_none_or(|x| x.abs() > 1.0 + 2f64.sqrt()) {
            failures.push(format!("eps={eps}: |xi| too large"));
        }
        let wi = lb::witness_realpart_gap_inhomogeneous(&id, &[r(1.0), r(-1.0)], eps).unwrap();
        check_pair(&wi, &mut failures, &format!("realpart-gap-inhomo eps={eps}"));
        count += w.certifications.len() + wi.certifications.len();
    }
    for delta in [0.5, 0.1] {
        let w = lb::witness_nonnormal_homogeneous(delta).unwrap();
        check_pair(&w, &mut failures, &format!("nonnormal-homo delta={delta}"));
        let td = pure_trace_norm(&w.u_final, &w.w_final);
        if !(td > 0.77) {
            failures.push(format!("nonnormal-homo delta={delta}: trace distance {td} <= 0.77"));
        }
        let wi = lb::witness_nonnormal_inhomogeneous(delta).unwrap();
        check_pair(&wi, &mut failures, &format!("nonnormal-inhomo delta={delta}"));
        let td = pure_trace_norm(&wi.u_final, &wi.w_final);
        if !(td >= 0.19) {
            failures.push(format!("nonnormal-inhomo delta={delta}: trace distance {td} < 0.19"));
        }
        count += w.certifications.len() + wi.certifications.len();
    }
    for t in [0.5, 1.0, 2.0] {
        let h = matrix::diag_real(&[0.0, 1.0]);
        let w = lb::witness_imaginary_time(&h, t).unwrap();
        check_pair(&w, &mut failures, &format!("imaginary-time T={t}"));
        count += w.certifications.len();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for (kappa, n) in [(10.0, 2), (100.0, 4)] {
        let u = random::unitary(&mut rng, n);
        let v = random::unitary(&mut rng, n);
        let w = lb::witness_linear_system(kappa, &u, &v).unwrap();
        check_pair(&w, &mut failures, &format!("linear-system kappa={kappa}"));
        count += w.certifications.len();
    }
    for eps in [0.1, 0.01, 0.001] {
        let (psi, phi) = near_states(&mut rng, 4, eps);
        let pair = lb::worst_case_oracle_pair(&psi, &phi).unwrap();
        if !pair.all_hold() {
            failures.push(format!("oracle pair eps={eps}"));
        }
        let d = matrix::spectral_norm(&(&pair.o_psi - &pair.o_phi));
        if (d - (2.0 * eps).sqrt()).abs() > ORACLE_TOL {
            failures.push(format!("oracle pair eps={eps}: |O_psi - O_phi| = {d} vs sqrt(2 eps)"));
        }
        count += pair.certifications.len() + 1;
    }
    if failures.is_empty() {
        outcome(true, format!("{count} inequalities hold"))
    } else {
        outcome(false, format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

/// `‖|u⟩⟨u| − |w⟩⟨w|‖₁ = 2√(1 − |⟨u|w⟩|²)` for normalized u, w.
fn pure_trace_norm(u: &ComplexVector, w: &ComplexVector) -> f64 {
    let f = (matrix::inner(u, w).norm() / (u.norm() * w.norm())).min(1.0);
    2.0 * (1.0 - f * f).max(0.0).sqrt()
}

fn near_states(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> (ComplexVector, ComplexVector) {
    let psi = random::state(rng, n);
    let x = random::state(rng, n);
    let perp = &x - &psi * matrix::inner(&psi, &x);
    let perp = perp.unscale(perp.norm());
    let phi = psi.scale(1.0 - eps) + perp.scale((1.0 - (1.0 - eps).powi(2)).sqrt());
    (psi, phi)
}

/// Random query circuits never separate the pair faster than `2q√(2ε)`.
fn c8_amplifier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let shapes = [(2, 1, 0), (2, 1, 1), (2, 2, 1), (4, 1, 1), (2, 2, 2), (4, 2, 0), (8, 1, 1), (16, 1, 0), (2, 3, 1)];
    let mut worst: f64 = 0.0;
    for k in 0..AMP_CIRCUITS {
        let (od, regs, anc) = shapes[k % shapes.len()];
        let circ_probe = lb::AmplifierCircuit { oracle_dim: od, registers: regs, ancilla_qubits: anc, interleavers: vec![], slots: vec![] };
        if circ_probe.total_dim() > AMP_MAX_DIM {
            return outcome(false, format!("shape {k} exceeds dim {AMP_MAX_DIM}"));
        }
        let eps = 10f64.powf(-rng.random_range(1.0..4.0));
        let (psi, phi) = near_states(&mut rng, od, eps);
        let pair = lb::worst_case_oracle_pair(&psi, &phi).unwrap();
        let q = rng.random_range(1..=AMP_MAX_Q);
        let circ = lb::AmplifierCircuit::random(&mut rng, od, regs, anc, q);
        let chk = lb::amplifier_bound_check(&pair, &circ).unwrap();
        // independent route: trace distance of the two pure outputs
        let (a, b) = (circ.simulate(&pair.o_psi).unwrap(), circ.simulate(&pair.o_phi).unwrap());
        let f = matrix::inner(&a, &b).norm().min(1.0);
        let td = 2.0 * (1.0 - f * f).max(0.0).sqrt();
        if (td - chk.distance).abs() > 1e-8 || !chk.holds() {
            return outcome(false, format!("circuit {k} (q={q}, eps={eps:.1e}): distance {:.3e}, bound {:.3e}", chk.distance, chk.bound));
        }
        worst = worst.max(chk.ratio);
    }
    outcome(worst <= 1.0, format!("{AMP_CIRCUITS} circuits, q <= {AMP_MAX_Q}, dim <= {AMP_MAX_DIM}: max ratio {worst:.4}"))
}

fn real_gap(a: &ComplexMatrix) -> f64 {
    let ev = matrix::eigenvalues(a).unwrap();
    let (lo, hi) = ev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), z| (l.min(z.re), h.max(z.re)));
    hi - lo
}

fn commutator_norm(a: &ComplexMatrix) -> f64 {
    matrix::spectral_norm(&(a.adjoint() * a - a * a.adjoint()))
}

/// Normalized solutions and hardness measures are shift invariant.
fn c9_shifting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst: f64 = 0.0;
    for k in 0..SHIFT_INSTANCES {
        let n = rng.random_range(2..=8usize);
        let a = random::ginibre(&mut rng, n).scale(0.5);
        let shift = rng.random_range(-2.0..2.0);
        let u0 = random::state(&mut rng, n);
        let t = rng.random_range(0.1..3.0);
        let rep = lb::shifting_equivalence_report(&a, shift, &u0, t).unwrap();
        let shifted = &a + matrix::identity(n) * r(shift);
        // independent route: eigen-decomposition exponentials, own gap and commutator
        let x = normalized_eig_solution(&a, &u0, t);
        let y = normalized_eig_solution(&shifted, &u0, t);
        let state = ffode_core::report::phase_distance(&x, &y);
        let gap = (real_gap(&a) - real_gap(&shifted)).abs();
        let comm = (commutator_norm(&a) - commutator_norm(&shifted)).abs() / (1.0 + commutator_norm(&a));
        let mu = (rep.mu - rep.mu_shifted).abs();
        let m = state.max(gap).max(comm).max(mu).max(rep.state_defect);
        worst = worst.max(m);
        if !rep.holds() || m > SHIFT_TOL {
            return outcome(false, format!("instance {k}: state {state:.2e}, gap {gap:.2e}, mu {mu:.2e}, [A*,A] {comm:.2e}"));
        }
    }
    outcome(true, format!("{SHIFT_INSTANCES} instances, worst deviation {worst:.2e}"))
}

fn normalized_eig_solution(a: &ComplexMatrix, u0: &ComplexVector, t: f64) -> ComplexVector {
    let (vals, v) = matrix::eigen_general(a).unwrap();
    let coeffs = v.clone().lu().solve(u0).unwrap();
    let scaled = ComplexVector::from_iterator(vals.len(), vals.iter().zip(coeffs.iter()).map(|(l, x)| (l * t).exp() * x));
    let u = v * scaled;
    u.unscale(u.norm())
}

fn sorted_spectrum(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    v
}

fn rel_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    pde::spectrum_deviation(a, b) / scale
}

/// Closed-form stencil, tensor and lifted spectra against dense ones.
fn c10_pde_spectra() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut fail = None;
    let mut note = |label: String, dev: f64| {
        worst = worst.max(dev);
        checks += 1;
        if !(dev <= PDE_TOL) && fail.is_none() {
            fail = Some(format!("{label}: {dev:.3e}"));
        }
    };
    for n in 4..=16usize {
        let nf = n as f64;
        let th = |k: usize| PI * k as f64 / nf;
        let dh: Vec<Complex64> = (0..n).map(|k| r(-4.0 * nf * nf * th(k).sin().powi(2))).collect();
        let vh: Vec<Complex64> = (0..n).map(|k| c(0.0, nf * (2.0 * th(k)).sin())).collect();
        let d3: Vec<Complex64> = (0..n).map(|k| c(0.0, -4.0 * nf.powi(3) * (2.0 * th(k)).sin() * th(k).sin().powi(2))).collect();
        let d4: Vec<Complex64> = (0..n).map(|k| r(16.0 * nf.powi(4) * th(k).sin().powi(4))).collect();
        note(format!("D_h n={n}"), rel_dev(&dh, &matrix::eigenvalues(&pde::build_dh(n).unwrap()).unwrap()));
        note(format!("V_h n={n}"), rel_dev(&vh, &matrix::eigenvalues(&pde::build_vh(n).unwrap()).unwrap()));
        if n >= 5 {
            note(format!("D_h3 n={n}"), rel_dev(&d3, &matrix::eigenvalues(&pde::build_dh3(n).unwrap()).unwrap()));
            note(format!("D_h4 n={n}"), rel_dev(&d4, &matrix::eigenvalues(&pde::build_dh4(n).unwrap()).unwrap()));
        }
        for d in 1..=3usize {
            let mut s = PdeSpec::new(PdeKind::GenericParabolic, d, n, Profile::Zero, 1.0);
            s.a = (0..d).map(|j| 0.3 + 0.2 * j as f64).collect();
            s.a_prime = (0..d).map(|j| 0.7 - 0.5 * j as f64).collect();
            s.c = -0.4;
            let mu = pde::closed_form_eigenvalues(&s).unwrap();
            // independent tensor formula from the 1-D stencil spectra
            let own: Vec<Complex64> = (0..n.pow(d as u32))
                .map(|idx| {
                    let mut z = r(s.c);
                    let mut rem = idx;
                    for j in (0..d).rev() {
                        let k = rem % n;
                        rem /= n;
                        z += dh[k] * s.a[j] + vh[k] * s.a_prime[j];
                    }
                    z
                })
                .collect();
            note(format!("tensor formula d={d} n={n}"), rel_dev(&sorted_spectrum(own), &sorted_spectrum(mu.clone())));
            let scale = mu.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if s.grid_size() <= PDE_DENSE_MAX {
                let dense = matrix::eigenvalues(&pde::operator_matrix(&s).unwrap()).unwrap();
                note(format!("tensor dense d={d} n={n}"), rel_dev(&mu, &dense));
            }
            note(format!("tensor fourier d={d} n={n}"), pde::fourier_residual(&s).unwrap() / scale);
        }
        for d in 1..=2usize {
            if 2 * n.pow(d as u32) > PDE_DENSE_MAX {
                continue;
            }
            for kind in [PdeKind::Wave, PdeKind::KleinGordon] {
                let mut s = PdeSpec::new(kind, d, n, Profile::Zero, 1.0);
                s.w0 = Some(Profile::Zero);
                if kind == PdeKind::KleinGordon {
                    s.mass = Some(1.3);
                }
                let l = pde::lift_hyperbolic(&s).unwrap();
                let k = pde::operator_matrix(&s).unwrap();
                let scale = matrix::spectral_norm(&k).max(1.0);
                note(format!("{} B^2 d={d} n={n}", kind.label()), matrix::spectral_norm(&(&l.b * &l.b + &k)) / scale);
                let dense = matrix::eigenvalues(&l.problem.matrix()).unwrap();
                note(format!("{} lifted d={d} n={n}", kind.label()), rel_dev(&l.oracles.eigen.eigenvalues, &dense));
            }
        }
        if n >= 5 {
            let mut s = PdeSpec::new(PdeKind::Beam, 1, n, Profile::Zero, 1.0);
            s.w0 = Some(Profile::Zero);
            let l = pde::lift_hyperbolic(&s).unwrap();
            let d4m = pde::build_dh4(n).unwrap();
            note(format!("beam B^2 n={n}"), matrix::spectral_norm(&(&l.b * &l.b - &d4m)) / matrix::spectral_norm(&d4m));
            let dense = matrix::eigenvalues(&l.problem.matrix()).unwrap();
            note(format!("beam lifted n={n}"), rel_dev(&l.oracles.eigen.eigenvalues, &dense));
        }
    }
    match fail {
        Some(f) => outcome(false, f),
        None => outcome(true, format!("{checks} spectra/residuals, worst relative deviation {worst:.2e}")),
    }
}

/// Distance to the equilibrium state decays within the stated bound.
fn c11_equilibrium() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let times: Vec<f64> = (1..=40).map(|k| k as f64).collect();
    let mut rows = 0;
    for k in 0..EQ_INSTANCES {
        let n = rng.random_range(2..=8usize);
        let (a, b, u0) = bench::negative_lognorm_instance(&mut rng, n, EQ_ELL);
        let l = matrix::logarithmic_norm(&a).unwrap();
        if !((l + EQ_ELL).abs() < 1e-10) {
            return outcome(false, format!("instance {k}: log norm {l}"));
        }
        let res = lb::equilibrium_reduction_check(&a, &b, &u0, &times).unwrap();
        let x = a.clone().lu().solve(&b).unwrap();
        let x = x.unscale(x.norm());
        let sv = a.singular_values();
        for row in &res {
            // closed form u(T) = e^{AT} u0 + A⁻¹(e^{AT} − I) b
            let e = matrix::matrix_exponential(&a, row.t).unwrap();
            let u = &e * &u0 + a.clone().lu().solve(&((&e - matrix::identity(n)) * &b)).unwrap();
            let u = u.unscale(u.norm());
            let dist = (&u - &x).norm().min((&u + &x).norm());
            let bound = 2.0 * (sv.max() + sv.max() / sv.min()) * (-EQ_ELL * row.t).exp();
            if !row.holds || dist > bound || (dist - row.distance).abs() > 1e-8 {
                return outcome(false, format!("instance {k} T={}: distance {dist:.3e}, bound {bound:.3e}", row.t));
            }
            rows += 1;
        }
    }
    outcome(true, format!("{EQ_INSTANCES} instances x T in 1..=40: {rows} rows hold"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_default()
}

/// Two CLI runs with the same seed write identical CSV bytes.
fn c12_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_ffode");
    let root = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/heat_demo.json");
    let mut outs = Vec::new();
    for run in 0..2 {
        let dir = root.path().join(format!("run{run}"));
        let st = Command::new(exe).args(["selftest", "--seed", "7", "--out"]).arg(&dir).output().unwrap();
        let sv = Command::new(exe).args(["solve", "--seed", "7", "--no-timing", "--config"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
        if !st.status.success() || !sv.status.success() {
            return outcome(false, format!("run {run}: exit {:?} / {:?}", st.status.code(), sv.status.code()));
        }
        outs.push((read(&dir, "selftest.v1.csv"), read(&dir, "heat_demo.solve.v1.csv")));
    }
    let same = outs[0] == outs[1] && !outs[0].0.is_empty() && !outs[0].1.is_empty();
    // in-process run must also match the CLI bytes
    let rows = bench::run_campaign(&BenchConfig { seed: 7, ..BenchConfig::demo() }, 3).unwrap();
    let inproc = bench::solve_csv(&rows, false).unwrap();
    let same = same && inproc.as_bytes() == outs[0].1.as_slice();
    outcome(same, format!("selftest {} B, demo {} B, identical across runs", outs[0].0.len(), outs[0].1.len()))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 12] = [
        ("block-encoding calculus", c1_block_encodings, Some(BE_BUDGET)),
        ("exact eigen-solvers", c2_eigen_solvers, Some(EIGEN_BUDGET)),
        ("ledger constants", c3_ledger_constants, None),
        ("success-probability formulas", c4_success_probabilities, None),
        ("quadratic degree law", c5_degree_law, Some(SCAN_BUDGET)),
        ("quadrature bound", c6_quadrature, None),
        ("lower-bound certifications", c7_lower_bounds, Some(LB_BUDGET)),
        ("amplifier bound", c8_amplifier, None),
        ("shifting equivalence", c9_shifting, None),
        ("PDE eigenvalue formulas", c10_pde_spectra, None),
        ("equilibrium reduction", c11_equilibrium, None),
        ("CLI determinism", c12_determinism, None),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panic: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let res = match limit {
            Some(l) => budget(res, elapsed, *l),
            None => res,
        };
        let tag = if res.ok { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {} [{:.2?}]", i + 1, res.detail, elapsed);
        if !res.ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
