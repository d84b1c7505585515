//! Campaign runner, witness certification and degree scans behind the
//! `ffode` binary.
//!
//! Configs are JSON (schema version [`CONFIG_VERSION`]); outputs are CSV with
//! a fixed column order and floats printed with 17 significant digits so two
//! runs with the same seed diff cleanly.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_encoding as be;
use crate::error::{FfodeError, Result};
use crate::ff_eigen::{self, EigenOracleSet, DEFAULT_NODE_CAP};
use crate::ff_qsvt;
use crate::ledger::{self, QueryLedger};
use crate::lower_bounds::{self as lb, Certification, Relation};
use crate::matrix::{self, c, r, ComplexMatrix, ComplexVector, EigenSystem};
use crate::ode_reference::{self as odr, Coefficient, Inhomogeneous, OdeProblem, SampledSource};
use crate::pde::{self, PdeSpec, Profile, Temporal};
use crate::poly_approx::{self, DegreeScan, Target};
use crate::random;
use crate::report::{self, SolveReport};

pub const CONFIG_VERSION: u32 = 1;
pub const CSV_VERSION: u32 = 1;

/// Built-in demo campaign: heat, d = 1, n = 8, three horizons.
pub const DEMO_CONFIG: &str = include_str!("../configs/heat_demo.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Negdef,
    Sqrt,
    Eigen,
    EigenTd,
    ReferenceOnly,
}

impl SolverKind {
    pub fn label(self) -> &'static str {
        match self {
            SolverKind::Negdef => "negdef",
            SolverKind::Sqrt => "sqrt",
            SolverKind::Eigen => "eigen",
            SolverKind::EigenTd => "eigen-td",
            SolverKind::ReferenceOnly => "reference-only",
        }
    }
}

/// A complex entry written as a number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonComplex {
    Real(f64),
    Pair([f64; 2]),
}

impl JsonComplex {
    fn value(self) -> num_complex::Complex64 {
        match self {
            JsonComplex::Real(x) => r(x),
            JsonComplex::Pair([a, b]) => c(a, b),
        }
    }
}

fn json_matrix(rows: &[Vec<JsonComplex>], what: &str) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|row| row.len() != n) {
        return Err(FfodeError::Config(format!("{what} must be a nonempty square matrix")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j].value()))
}

fn json_vector(v: &[JsonComplex]) -> ComplexVector {
    ComplexVector::from_iterator(v.len(), v.iter().map(|z| z.value()))
}

/// Explicit ODE instance `du/dt = A u + b·temporal(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblem {
    pub a: Vec<Vec<JsonComplex>>,
    pub u0: Vec<JsonComplex>,
    #[serde(default)]
    pub b: Option<Vec<JsonComplex>>,
    #[serde(default)]
    pub temporal: Option<Temporal>,
    /// Hermitian `H` with `A = −H²`, for the sqrt solver.
    #[serde(default)]
    pub h: Option<Vec<Vec<JsonComplex>>>,
    /// Spectral gap for the negdef solver; derived from `A` when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomFamily {
    /// Hermitian, spectrum uniform in `[−1, −δ]`.
    Negdef,
    /// `A = −H²` with Hermitian `‖H‖ ≤ 1`.
    Sqrt,
    /// Normal with spectrum in the closed left half-plane.
    Normal,
    /// Complex Ginibre matrix, generically non-normal.
    Nonnormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomProblem {
    pub family: RandomFamily,
    pub dim: usize,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub inhomogeneous: bool,
    #[serde(default)]
    pub temporal: Option<Temporal>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

/// Exactly one of `pde`, `raw`, `random` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    pub id: String,
    #[serde(default)]
    pub pde: Option<PdeSpec>,
    #[serde(default)]
    pub raw: Option<RawProblem>,
    #[serde(default)]
    pub random: Option<RandomProblem>,
}

/// Absent lists fall back to the problem's own value; present lists must be
/// nonempty. `n` and `d` apply only to PDE problems; `M` caps the Riemann
/// node count of eigen-td.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(rename = "T", default)]
    pub t: Option<Vec<f64>>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub d: Option<Vec<usize>>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(rename = "M", default)]
    pub m: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    pub campaign: String,
    pub solver: SolverKind,
    pub problems: Vec<ProblemEntry>,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Absolute tolerance for unitarity, hermiticity and normality checks.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

const DEFAULT_EPS: f64 = 1e-6;

impl BenchConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(s).map_err(|e| FfodeError::Config(e.to_string()))?;
        cfg.validate_schema()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| FfodeError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn demo() -> Self {
        Self::from_json(DEMO_CONFIG).expect("demo config is valid")
    }

    /// Structural checks only; solver compatibility is checked by [`plan`].
    pub fn validate_schema(&self) -> Result<()> {
        let bad = |s: String| Err(FfodeError::Config(s));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.campaign.trim().is_empty() {
            return bad("campaign name is empty".into());
        }
        if self.problems.is_empty() {
            return bad("no problems".into());
        }
        let mut ids = BTreeSet::new();
        for p in &self.problems {
            if !ids.insert(p.id.as_str()) {
                return bad(format!("duplicate problem id {}", p.id));
            }
            let set = p.pde.is_some() as u8 + p.raw.is_some() as u8 + p.random.is_some() as u8;
            if set != 1 {
                return bad(format!("problem {} must set exactly one of pde, raw, random", p.id));
            }
        }
        let s = &self.sweep;
        let lens = [
            ("T", s.t.as_ref().map(Vec::len)),
            ("n", s.n.as_ref().map(Vec::len)),
            ("d", s.d.as_ref().map(Vec::len)),
            ("eps", s.eps.as_ref().map(Vec::len)),
            ("M", s.m.as_ref().map(Vec::len)),
        ];
        for (k, l) in lens {
            if l == Some(0) {
                return bad(format!("sweep list {k} is empty"));
            }
        }
        if let Some(ts) = &s.t {
            if ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                return bad("sweep T values must be positive".into());
            }
        }
        if let Some(es) = &s.eps {
            if es.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                return bad("sweep eps values must lie in (0,1)".into());
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol < 1.0) {
                return bad(format!("tolerance must lie in (0,1), got {tol}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Base {
    Pde(PdeSpec),
    Ode {
        a: ComplexMatrix,
        u0: ComplexVector,
        b: Option<ComplexVector>,
        temporal: Option<Temporal>,
        h: Option<ComplexMatrix>,
        delta: Option<f64>,
        horizon: Option<f64>,
    },
}

#[derive(Debug, Clone)]
struct Instance {
    id: String,
    base: Base,
}

fn instantiate(entry: &ProblemEntry, index: usize, seed: u64) -> Result<Instance> {
    let base = if let Some(spec) = &entry.pde {
        Base::Pde(spec.clone())
    } else if let Some(raw) = &entry.raw {
        let a = json_matrix(&raw.a, "a")?;
        let u0 = json_vector(&raw.u0);
        let b = raw.b.as_ref().map(|v| json_vector(v));
        if u0.len() != a.nrows() || b.as_ref().is_some_and(|b| b.len() != a.nrows()) {
            return Err(FfodeError::Config(format!("problem {}: vector lengths must match a", entry.id)));
        }
        if raw.temporal.is_some() && b.is_none() {
            return Err(FfodeError::Config(format!("problem {}: temporal factor without b", entry.id)));
        }
        let h = raw.h.as_ref().map(|h| json_matrix(h, "h")).transpose()?;
        Base::Ode { a, u0, b, temporal: raw.temporal.clone(), h, delta: raw.delta, horizon: raw.horizon }
    } else {
        let rp = entry.random.as_ref().expect("validated");
        if rp.dim == 0 || rp.dim > 512 {
            return Err(FfodeError::Config(format!("problem {}: dim must lie in 1..=512", entry.id)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1)));
        let n = rp.dim;
        let delta = rp.delta.unwrap_or(0.25);
        let (a, h) = match rp.family {
            RandomFamily::Negdef => {
                if !(delta > 0.0 && delta <= 1.0) {
                    return Err(FfodeError::Config(format!("problem {}: delta must lie in (0,1]", entry.id)));
                }
                let eig: Vec<num_complex::Complex64> =
                    (0..n).map(|_| r(-delta - (1.0 - delta) * rng.random::<f64>())).collect();
                (random::normal_with_spectrum(&mut rng, &eig), None)
            }
            RandomFamily::Sqrt => {
                let h = random::hermitian(&mut rng, n);
                let h = h.unscale(matrix::spectral_norm(&h).max(1e-300));
                (&h * &h * r(-1.0), Some(h))
            }
            RandomFamily::Normal => {
                let eig: Vec<num_complex::Complex64> =
                    (0..n).map(|_| c(-rng.random::<f64>(), 2.0 * rng.random::<f64>() - 1.0)).collect();
                (random::normal_with_spectrum(&mut rng, &eig), None)
            }
            RandomFamily::Nonnormal => (random::ginibre(&mut rng, n).scale(0.5), None),
        };
        let u0 = random::state(&mut rng, n);
        let b = if rp.inhomogeneous || rp.temporal.is_some() { Some(random::state(&mut rng, n)) } else { None };
        Base::Ode {
            a,
            u0,
            b,
            temporal: rp.temporal.clone(),
            h,
            delta: if rp.family == RandomFamily::Negdef { Some(delta) } else { None },
            horizon: rp.horizon,
        }
    };
    Ok(Instance { id: entry.id.clone(), base })
}

/// One-entry per-axis vectors are repeated to dimension `d`.
fn broadcast_profile(p: &Profile, d: usize) -> Profile {
    match p {
        Profile::Cosine { k, amplitude, phase } if k.len() == 1 && d > 1 => {
            Profile::Cosine { k: vec![k[0]; d], amplitude: *amplitude, phase: *phase }
        }
        Profile::Gaussian { center, width, amplitude } if center.len() == 1 && d > 1 => {
            Profile::Gaussian { center: vec![center[0]; d], width: *width, amplitude: *amplitude }
        }
        Profile::Sum { terms } => Profile::Sum { terms: terms.iter().map(|t| broadcast_profile(t, d)).collect() },
        other => other.clone(),
    }
}

fn broadcast_coeffs(v: &[f64], d: usize) -> Vec<f64> {
    if v.len() == 1 && d > 1 {
        vec![v[0]; d]
    } else {
        v.to_vec()
    }
}

fn spec_at(spec: &PdeSpec, t: f64, n: usize, d: usize) -> PdeSpec {
    let mut s = spec.clone();
    s.horizon = t;
    s.n = n;
    if d != spec.d {
        s.d = d;
        s.a = broadcast_coeffs(&spec.a, d);
        s.a_prime = broadcast_coeffs(&spec.a_prime, d);
        s.u0 = broadcast_profile(&spec.u0, d);
        s.w0 = spec.w0.as_ref().map(|w| broadcast_profile(w, d));
        for term in &mut s.source {
            term.spatial = broadcast_profile(&term.spatial, d);
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    instance: usize,
    t: f64,
    n: usize,
    d: usize,
    eps: f64,
    m: u64,
}

/// A validated campaign ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub campaign: String,
    pub solver: SolverKind,
    instances: Vec<Instance>,
    points: Vec<Point>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn ode_problem(base: &Base, t: f64) -> Result<OdeProblem> {
    let Base::Ode { a, u0, b, temporal, .. } = base else { unreachable!("ODE base") };
    let inh = match (b, temporal) {
        (None, _) => Inhomogeneous::None,
        (Some(b), None) | (Some(b), Some(Temporal::Constant)) => Inhomogeneous::Constant(b.clone()),
        (Some(b), Some(tm)) => {
            let (b1, b2, t1, t2) = (b.clone(), b.clone(), tm.clone(), tm.clone());
            Inhomogeneous::Sampled(
                SampledSource::new(move |s| b1.clone() * r(t1.eval(s))).with_derivative(move |s| b2.clone() * r(t2.derivative(s))),
            )
        }
    };
    OdeProblem::new(Coefficient::Matrix(a.clone()), u0.clone(), inh, t)
}

/// Gap `δ = −λ_max` of a Hermitian negative-definite `A`, unless given.
pub fn negdef_delta(a: &ComplexMatrix, given: Option<f64>) -> Result<f64> {
    if let Some(d) = given {
        return Ok(d);
    }
    let defect = matrix::hermiticity_defect(a);
    if defect > crate::tol::get().hermitian * (1.0 + matrix::spectral_norm(a)) {
        return Err(FfodeError::NotHermitian(defect));
    }
    let (vals, _) = matrix::hermitian_eigen(a)?;
    let top = vals.last().copied().unwrap_or(0.0);
    if !(top < 0.0) {
        return Err(FfodeError::SpectrumViolation(format!("largest eigenvalue {top} is not negative")));
    }
    Ok((-top).min(1.0))
}

/// Checks that `solver` can run problem `inst`, before any point executes.
fn check_compatible(inst: &Instance, solver: SolverKind) -> Result<()> {
    let mm = |s: String| Err(FfodeError::Mismatch(format!("problem {}: {s}", inst.id)));
    match (&inst.base, solver) {
        (_, SolverKind::ReferenceOnly) => Ok(()),
        (Base::Pde(_), SolverKind::Negdef | SolverKind::Sqrt) => {
            mm(format!("{} needs an explicit matrix; PDE problems run with eigen or eigen-td", solver.label()))
        }
        (Base::Pde(spec), SolverKind::Eigen) => {
            spec.validate()?;
            if !spec.source_is_static() {
                return mm("time-dependent source needs eigen-td".into());
            }
            Ok(())
        }
        (Base::Pde(spec), SolverKind::EigenTd) => spec.validate(),
        (Base::Ode { temporal, .. }, SolverKind::Eigen) if temporal.as_ref().is_some_and(|t| *t != Temporal::Constant) => {
            mm("time-dependent source needs eigen-td".into())
        }
        (Base::Ode { a, .. }, SolverKind::Eigen | SolverKind::EigenTd) => {
            if !matrix::is_normal(a) {
                return Err(FfodeError::NonNormal(matrix::non_normality(a)?));
            }
            Ok(())
        }
        (Base::Ode { temporal, .. }, SolverKind::Negdef | SolverKind::Sqrt)
            if temporal.as_ref().is_some_and(|t| *t != Temporal::Constant) =>
        {
            mm(format!("{} supports constant b only", solver.label()))
        }
        (Base::Ode { a, delta, .. }, SolverKind::Negdef) => {
            let d = negdef_delta(a, *delta)?;
            if !(d > 0.0 && d <= 1.0) {
                return mm(format!("delta {d} outside (0,1]"));
            }
            Ok(())
        }
        (Base::Ode { a, h, .. }, SolverKind::Sqrt) => {
            let Some(h) = h else { return mm("sqrt solver needs h with A = -h^2".into()) };
            if h.shape() != a.shape() || matrix::spectral_norm(&(a + h * h)) > 1e-9 * (1.0 + matrix::spectral_norm(a)) {
                return mm("a is not -h^2".into());
            }
            Ok(())
        }
    }
}

/// Instantiates problems, expands the sweep and checks compatibility.
pub fn plan(cfg: &BenchConfig) -> Result<Plan> {
    cfg.validate_schema()?;
    let instances: Vec<Instance> =
        cfg.problems.iter().enumerate().map(|(i, e)| instantiate(e, i, cfg.seed)).collect::<Result<_>>()?;
    for inst in &instances {
        check_compatible(inst, cfg.solver)?;
    }
    let s = &cfg.sweep;
    let eps = s.eps.clone().unwrap_or_else(|| vec![DEFAULT_EPS]);
    let ms = s.m.clone().unwrap_or_else(|| vec![DEFAULT_NODE_CAP]);
    let mut points = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        let (ts, ns, ds) = match &inst.base {
            Base::Pde(spec) => (
                s.t.clone().unwrap_or_else(|| vec![spec.horizon]),
                s.n.clone().unwrap_or_else(|| vec![spec.n]),
                s.d.clone().unwrap_or_else(|| vec![spec.d]),
            ),
            Base::Ode { a, horizon, .. } => {
                let ts = match (&s.t, horizon) {
                    (Some(ts), _) => ts.clone(),
                    (None, Some(h)) => vec![*h],
                    (None, None) => return Err(FfodeError::Config(format!("problem {} has no horizon and no T sweep", inst.id))),
                };
                (ts, vec![a.nrows()], vec![1])
            }
        };
        for &t in &ts {
            for &n in &ns {
                for &d in &ds {
                    if let Base::Pde(spec) = &inst.base {
                        spec_at(spec, t, n, d).validate()?;
                    }
                    for &e in &eps {
                        for &m in &ms {
                            points.push(Point { instance: k, t, n, d, eps: e, m });
                        }
                    }
                }
            }
        }
    }
    Ok(Plan { campaign: cfg.campaign.clone(), solver: cfg.solver, instances, points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub campaign: String,
    pub problem_id: String,
    pub solver: String,
    pub t: f64,
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub success_prob: f64,
    pub repeats_no_aa: u64,
    pub repeats_aa: u64,
    pub error_vs_reference: f64,
    pub ledger: QueryLedger,
    pub wall_time_ms: f64,
}

fn reference_report(p: &OdeProblem, eps: f64) -> Result<SolveReport> {
    let u = odr::solve_reference(p)?;
    SolveReport::from_amplitude("reference-only", &u.unscale(u.norm().max(1e-300)), &u, QueryLedger::new(), eps, 0)
}

fn run_problem(solver: SolverKind, p: &OdeProblem, base: &Base, oracles: Option<EigenOracleSet>, eps: f64, cap: u64) -> Result<SolveReport> {
    let eigen_oracles = |variant_td: bool| -> Result<EigenOracleSet> {
        match &oracles {
            Some(o) => Ok(o.clone()),
            None => {
                let es = EigenSystem::from_matrix(&p.matrix())?;
                Ok(if variant_td { EigenOracleSet::time_dependent(es) } else { EigenOracleSet::auto(es) })
            }
        }
    };
    match solver {
        SolverKind::ReferenceOnly => reference_report(p, eps),
        SolverKind::Negdef => {
            let Base::Ode { delta, .. } = base else { unreachable!("checked") };
            let d = negdef_delta(&p.matrix(), *delta)?;
            ff_qsvt::solve_negdef(p, d, eps)
        }
        SolverKind::Sqrt => {
            let Base::Ode { h: Some(h), .. } = base else { unreachable!("checked") };
            let u_h = be::dilation(h, matrix::spectral_norm(h).max(1e-300))?;
            ff_qsvt::solve_sqrt_access(p, &u_h, eps)
        }
        SolverKind::Eigen => {
            let o = eigen_oracles(false)?;
            let rep = match p.inhomogeneous {
                Inhomogeneous::None => ff_eigen::solve_eigen_homogeneous(p, &o)?,
                Inhomogeneous::Constant(_) => ff_eigen::solve_eigen_inhomogeneous(p, &o)?,
                Inhomogeneous::Sampled(_) => return Err(FfodeError::Mismatch("time-dependent source needs eigen-td".into())),
            };
            Ok(SolveReport { claimed_eps: eps, ..rep })
        }
        SolverKind::EigenTd => ff_eigen::solve_eigen_timedep_capped(p, &eigen_oracles(true)?, eps, cap),
    }
}

fn run_point(plan: &Plan, pt: &Point) -> Result<BenchRow> {
    let inst = &plan.instances[pt.instance];
    let start = Instant::now();
    let (rep, n, d) = match &inst.base {
        Base::Pde(spec) => {
            let s = spec_at(spec, pt.t, pt.n, pt.d);
            let (p, o) = pde::semi_discretize(&s)?;
            (run_problem(plan.solver, &p, &inst.base, Some(o), pt.eps, pt.m)?, s.n, s.d)
        }
        Base::Ode { a, .. } => {
            let p = ode_problem(&inst.base, pt.t)?;
            (run_problem(plan.solver, &p, &inst.base, None, pt.eps, pt.m)?, a.nrows(), 1)
        }
    };
    let wall = start.elapsed().as_secs_f64() * 1e3;
    Ok(BenchRow {
        campaign: plan.campaign.clone(),
        problem_id: inst.id.clone(),
        solver: plan.solver.label().to_string(),
        t: pt.t,
        n,
        d,
        eps: pt.eps,
        success_prob: rep.success_probability,
        repeats_no_aa: rep.repeats_no_aa,
        repeats_aa: rep.repeats_aa,
        error_vs_reference: rep.error_vs_reference,
        ledger: rep.ledger,
        wall_time_ms: wall,
    })
}

/// Runs every sweep point on up to `jobs` threads; rows come back in config
/// order and the first failing point (in that order) aborts the campaign.
pub fn run_plan(plan: &Plan, jobs: usize) -> Result<Vec<BenchRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| FfodeError::Numeric(format!("thread pool: {e}")))?;
    let results: Vec<Result<BenchRow>> = pool.install(|| plan.points.par_iter().map(|pt| run_point(plan, pt)).collect());
    results.into_iter().collect()
}

pub fn run_campaign(cfg: &BenchConfig, jobs: usize) -> Result<Vec<BenchRow>> {
    let p = plan(cfg)?;
    log::info!("campaign {}: {} points, solver {}", p.campaign, p.len(), p.solver.label());
    run_plan(&p, jobs)
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn solve_header(include_timing: bool) -> Vec<String> {
    let mut h: Vec<String> = ["campaign", "problem_id", "solver", "T", "n", "d", "eps", "success_prob", "repeats_noAA", "repeats_AA", "error_vs_reference"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(ledger::CSV_KEYS.iter().map(|s| s.to_string()));
    if include_timing {
        h.push("wall_time_ms".into());
    }
    h
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| FfodeError::Io(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| FfodeError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| FfodeError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FfodeError::Io(e.to_string()))
}

/// Solve table; `include_timing = false` drops the only nondeterministic
/// column.
pub fn solve_csv(rows: &[BenchRow], include_timing: bool) -> Result<String> {
    let body = rows.iter().map(|row| {
        let mut v = vec![
            row.campaign.clone(),
            row.problem_id.clone(),
            row.solver.clone(),
            fmt_f64(row.t),
            row.n.to_string(),
            row.d.to_string(),
            fmt_f64(row.eps),
            fmt_f64(row.success_prob),
            row.repeats_no_aa.to_string(),
            row.repeats_aa.to_string(),
            fmt_f64(row.error_vs_reference),
        ];
        v.extend(ledger::CSV_KEYS.iter().map(|k| row.ledger.get(k).to_string()));
        if include_timing {
            v.push(fmt_f64(row.wall_time_ms));
        }
        v
    });
    csv_string(&solve_header(include_timing), body)
}

pub fn solve_csv_path(out: &Path, campaign: &str) -> PathBuf {
    out.join(format!("{campaign}.solve.v{CSV_VERSION}.csv"))
}

/// Parameters for witness runs; unset values take per-family defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LbParams {
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
    pub t: Option<f64>,
    pub dim: Option<usize>,
    pub q: Option<usize>,
    pub shift: Option<f64>,
    pub circuits: Option<usize>,
    pub seed: Option<u64>,
}

pub const LB_FAMILIES: [&str; 10] = [
    "realpart-gap",
    "nonnormal-homo",
    "realpart-gap-inhomo",
    "nonnormal-inhomo",
    "imaginary-time",
    "linear-system",
    "oracle-pair",
    "amplifier",
    "shift",
    "equilibrium",
];

#[derive(Debug, Clone)]
pub struct LbOutcome {
    pub family: String,
    pub certifications: Vec<Certification>,
}

impl LbOutcome {
    pub fn all_hold(&self) -> bool {
        self.certifications.iter().all(|c| c.holds)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.certifications {
            let _ = writeln!(s, "{} {c}", self.family);
        }
        s
    }
}

fn unit_columns(mut m: ComplexMatrix) -> ComplexMatrix {
    for j in 0..m.ncols() {
        let n = m.column(j).norm();
        m.column_mut(j).unscale_mut(n);
    }
    m
}

fn basis_and_spectrum(p: &LbParams, rng: &mut ChaCha8Rng, l1: f64, l2: f64) -> Result<(ComplexMatrix, Vec<num_complex::Complex64>)> {
    let dim = p.dim.unwrap_or(2);
    if dim < 2 {
        return Err(FfodeError::InvalidParameter("dim must be at least 2".into()));
    }
    if p.seed.is_none() && dim == 2 {
        return Ok((matrix::identity(2), vec![r(l1), r(l2)]));
    }
    let v = unit_columns(random::ginibre(rng, dim));
    let mut eig: Vec<num_complex::Complex64> = (0..dim).map(|_| c(l2 + (l1 - l2) * rng.random::<f64>(), random::gaussian(rng))).collect();
    eig[0].re = l1;
    eig[1].re = l2;
    Ok((v, eig))
}

fn near_pair(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> Result<lb::OraclePair> {
    let psi = random::state(rng, n);
    let x = random::state(rng, n);
    let perp = &x - &psi * matrix::inner(&psi, &x);
    let perp = perp.unscale(perp.norm());
    let phi = psi.scale(1.0 - eps) + perp.scale((1.0 - (1.0 - eps).powi(2)).sqrt());
    lb::worst_case_oracle_pair(&psi, &phi)
}

fn cert(label: &str, measured: f64, relation: Relation, bound: f64) -> Certification {
    Certification::new(label, measured, relation, bound)
}

pub fn run_lb(family: &str, p: &LbParams) -> Result<LbOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(0));
    let eps = p.eps.unwrap_or(0.01);
    let certs = match family {
        "realpart-gap" => {
            let (v, eig) = basis_and_spectrum(p, &mut rng, 0.5, -0.5)?;
            lb::witness_realpart_gap(&v, &eig, eps)?.certifications
        }
        "realpart-gap-inhomo" => {
            let (v, eig) = basis_and_spectrum(p, &mut rng, 1.0, -1.0)?;
            lb::witness_realpart_gap_inhomogeneous(&v, &eig, eps)?.certifications
        }
        "nonnormal-homo" => lb::witness_nonnormal_homogeneous(p.delta.unwrap_or(0.5))?.certifications,
        "nonnormal-inhomo" => lb::witness_nonnormal_inhomogeneous(p.delta.unwrap_or(0.5))?.certifications,
        "imaginary-time" => {
            let dim = p.dim.unwrap_or(2);
            if dim < 2 {
                return Err(FfodeError::InvalidParameter("dim must be at least 2".into()));
            }
            let mut vals: Vec<f64> = (0..dim).map(|k| k as f64 / (dim - 1) as f64).collect();
            vals[0] = 0.0;
            let u = if p.seed.is_some() { random::unitary(&mut rng, dim) } else { matrix::identity(dim) };
            let h = &u * matrix::diag_real(&vals) * u.adjoint();
            let h = (&h + h.adjoint()).scale(0.5);
            lb::witness_imaginary_time(&h, p.t.unwrap_or(1.0))?.certifications
        }
        "linear-system" => {
            let dim = p.dim.unwrap_or(4);
            if dim < 2 {
                return Err(FfodeError::InvalidParameter("dim must be at least 2".into()));
            }
            let u = random::unitary(&mut rng, dim);
            let v = random::unitary(&mut rng, dim);
            lb::witness_linear_system(p.kappa.unwrap_or(10.0), &u, &v)?.certifications
        }
        "oracle-pair" => {
            check_unit_interval(eps)?;
            near_pair(&mut rng, p.dim.unwrap_or(4).max(2), eps)?.certifications
        }
        "amplifier" => {
            check_unit_interval(eps)?;
            let circuits = p.circuits.unwrap_or(100);
            let qmax = p.q.unwrap_or(8);
            let mut worst: f64 = 0.0;
            let mut out = Vec::new();
            for k in 0..circuits {
                let (od, regs, anc) = [(2, 1, 1), (2, 2, 1), (4, 1, 1), (2, 2, 2), (4, 2, 0), (8, 1, 1)][k % 6];
                let pair = near_pair(&mut rng, od, eps)?;
                let q = rng.random_range(0..=qmax);
                let circ = lb::AmplifierCircuit::random(&mut rng, od, regs, anc, q);
                let chk = lb::amplifier_bound_check(&pair, &circ)?;
                worst = worst.max(chk.ratio);
                if !chk.holds() {
                    out.push(cert(&format!("circuit {k} (q={q}) distance <= 2q sqrt(2 eps)"), chk.distance, Relation::AtMost, chk.bound));
                }
            }
            out.push(cert(&format!("max ratio over {circuits} random circuits <= 1"), worst, Relation::AtMost, 1.0));
            out
        }
        "shift" => {
            let dim = p.dim.unwrap_or(4).max(1);
            let a = random::ginibre(&mut rng, dim).scale(0.5);
            let u0 = random::state(&mut rng, dim);
            let rep = lb::shifting_equivalence_report(&a, p.shift.unwrap_or(1.0), &u0, p.t.unwrap_or(1.0))?;
            vec![
                cert("normalized solutions agree up to phase", rep.state_defect, Relation::AtMost, 1e-10),
                cert("norm ratio = e^{cT} (relative)", rep.norm_ratio / rep.expected_norm_ratio, Relation::Equal { tol: 1e-9 }, 1.0),
                cert("real-part gap unchanged", rep.gap_shifted, Relation::Equal { tol: 1e-10 * (1.0 + rep.gap) }, rep.gap),
                cert("mu^2 unchanged", rep.mu_shifted * rep.mu_shifted, Relation::Equal { tol: 1e-10 * (1.0 + rep.mu * rep.mu) }, rep.mu * rep.mu),
            ]
        }
        "equilibrium" => {
            let dim = p.dim.unwrap_or(8).max(1);
            let (a, b, u0) = negative_lognorm_instance(&mut rng, dim, 0.3);
            let times: Vec<f64> = (1..=40).map(|k| k as f64).collect();
            lb::equilibrium_reduction_check(&a, &b, &u0, &times)?
                .iter()
                .map(|row| cert(&format!("T={}: distance to A^-1 b <= bound", row.t), row.distance, Relation::AtMost, row.bound))
                .collect()
        }
        other => {
            return Err(FfodeError::InvalidParameter(format!("unknown witness family {other}; expected one of {}", LB_FAMILIES.join(", "))));
        }
    };
    Ok(LbOutcome { family: family.to_string(), certifications: certs })
}

fn check_unit_interval(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FfodeError::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(())
}

/// Random `A` with `l(A) = −ℓ` exactly and unit `b`, `u0`.
pub fn negative_lognorm_instance<R: Rng + ?Sized>(rng: &mut R, dim: usize, ell: f64) -> (ComplexMatrix, ComplexVector, ComplexVector) {
    let g = random::ginibre(rng, dim);
    let top = matrix::logarithmic_norm(&g).expect("square");
    let a = g - matrix::identity(dim) * r(top + ell);
    (a, random::state(rng, dim), random::state(rng, dim))
}

pub fn lb_csv(outcomes: &[LbOutcome]) -> Result<String> {
    let header: Vec<String> = ["family", "label", "measured", "relation", "bound", "holds"].iter().map(|s| s.to_string()).collect();
    let rows = outcomes.iter().flat_map(|o| {
        o.certifications.iter().map(move |c| {
            vec![
                o.family.clone(),
                c.label.clone(),
                fmt_f64(c.measured),
                c.relation.symbol().to_string(),
                fmt_f64(c.bound),
                c.holds.to_string(),
            ]
        })
    });
    csv_string(&header, rows)
}

pub fn parse_target(name: &str) -> Result<Target> {
    match name {
        "exp-shifted" => Ok(Target::ExpShifted { t: 1.0 }),
        "gaussian" => Ok(Target::Gaussian { beta: 1.0 }),
        "gaussian-integral" => Ok(Target::GaussianIntegral { beta: 1.0 }),
        other => Err(FfodeError::InvalidParameter(format!(
            "unknown target {other}; expected exp-shifted, gaussian or gaussian-integral"
        ))),
    }
}

pub fn degree_scan(target: &str, grid: &[f64], eps: f64) -> Result<DegreeScan> {
    poly_approx::certified_degree_scan(parse_target(target)?, grid, eps)
}

/// `param,degree,fitted_exponent` rows followed by a `fit` footer row.
pub fn degree_scan_csv(scan: &DegreeScan) -> Result<String> {
    let header: Vec<String> = ["param", "degree", "fitted_exponent"].iter().map(|s| s.to_string()).collect();
    let mut rows: Vec<Vec<String>> = scan.rows.iter().map(|&(p, d)| vec![fmt_f64(p), d.to_string(), String::new()]).collect();
    rows.push(vec!["fit".into(), String::new(), scan.exponent.map(fmt_f64).unwrap_or_else(|| "NaN".into())]);
    csv_string(&header, rows)
}

#[derive(Debug, Clone)]
pub struct SelftestOutcome {
    pub certifications: Vec<Certification>,
}

impl SelftestOutcome {
    pub fn all_hold(&self) -> bool {
        self.certifications.iter().all(|c| c.holds)
    }

    pub fn csv(&self) -> Result<String> {
        let header: Vec<String> = ["check", "measured", "relation", "bound", "holds"].iter().map(|s| s.to_string()).collect();
        csv_string(
            &header,
            self.certifications.iter().map(|c| {
                vec![c.label.clone(), fmt_f64(c.measured), c.relation.symbol().to_string(), fmt_f64(c.bound), c.holds.to_string()]
            }),
        )
    }
}

/// Demo campaign, default witness runs, one amplifier batch and a degree
/// scan. Deterministic for a given seed.
pub fn selftest(seed: u64, jobs: usize) -> Result<SelftestOutcome> {
    let mut certs = Vec::new();
    let mut demo = BenchConfig::demo();
    demo.seed = seed;
    for row in run_campaign(&demo, jobs)? {
        certs.push(cert(
            &format!("demo {} T={}: error vs reference <= eps", row.problem_id, row.t),
            row.error_vs_reference,
            Relation::AtMost,
            row.eps,
        ));
    }
    for fam in LB_FAMILIES {
        let params = LbParams { seed: Some(seed), circuits: Some(24), dim: None, ..Default::default() };
        let params = if matches!(fam, "realpart-gap" | "realpart-gap-inhomo" | "imaginary-time") {
            LbParams { seed: None, ..params }
        } else {
            params
        };
        let out = run_lb(fam, &params)?;
        for c in out.certifications {
            certs.push(Certification { label: format!("lb {fam}: {}", c.label), ..c });
        }
    }
    let scan = degree_scan("exp-shifted", &[16.0, 64.0, 256.0, 1024.0], 1e-6)?;
    let e = scan.exponent.unwrap_or(f64::NAN);
    certs.push(cert("degree scan exp-shifted exponent >= 0.40", e, Relation::AtLeast, 0.40));
    certs.push(cert("degree scan exp-shifted exponent <= 0.65", e, Relation::AtMost, 0.65));
    certs.push(cert("degree scan monotone", scan.monotone as u8 as f64, Relation::Equal { tol: 0.0 }, 1.0));
    Ok(SelftestOutcome { certifications: certs })
}

/// Writes `contents` to `dir/name`, creating `dir`.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// The report attached to a reference-only row has unit success probability.
pub fn reference_repeats() -> (u64, u64) {
    report::repeats(1.0)
}
