//! The subcommands. Each returns `Ok(())` after writing its outputs, or an
//! error carrying the exit code.

use std::path::PathBuf;

use nilmag::closedform::{self, InitialCondition};
use nilmag::h3_type2::{self, Branch};
use nilmag::h5_type1::{self, H5Force};
use nilmag::lorentz::{self, ForceType, LorentzForce};
use nilmag::nilalgebra::{GroupPoint, Singularity};
use nilmag::oracle::{self, Comparison, IntegratorConfig, Trajectory};
use nilmag::{linalg, selftest, Algebra, Force, PeriodicityReport, SampledCurve};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{self, Format, Sink};
use crate::scenario::{self, Scenario, SolverChoice};

/// Tolerance of the reference integration.
pub const ORACLE_TOL: f64 = 1e-11;

/// Flags shared by the scenario-driven subcommands.
#[derive(Debug, Clone)]
pub struct ScenarioArgs {
    pub scenario: PathBuf,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub oracle: bool,
    pub tol: Option<f64>,
}

impl ScenarioArgs {
    /// Loads the scenario and folds `--oracle` and `--tol` into its checks.
    fn load(&self) -> CliResult<Scenario> {
        let mut s = Scenario::load(&self.scenario)?;
        if self.oracle {
            s.checks.oracle = true;
        }
        if let Some(tol) = self.tol {
            s.checks.tolerance = tol;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverUsed {
    Closedform,
    H3Type2,
    Oracle,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub max_deviation: f64,
    pub max_velocity_deviation: f64,
    pub max_speed_drift: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryMeta {
    pub solver: SolverUsed,
    pub closed_form: bool,
    pub force_type: ForceType,
    pub exact: bool,
    /// Central `Z~` with `F = j(Z~)`, when the force is exact.
    #[serde(rename = "Z")]
    pub z: Option<Vec<f64>>,
    pub branch: String,
    pub period: Option<f64>,
    pub dim: usize,
    pub samples: usize,
    pub oracle: Option<OracleCheck>,
    pub scenario: Scenario,
}

fn reference(alg: &Algebra, f: &Force, q: f64, v0: &[f64], times: &[f64]) -> CliResult<SampledCurve<f64>> {
    let t_max = times.last().copied().unwrap_or(0.0);
    let cfg = IntegratorConfig::dormand_prince(ORACLE_TOL, t_max);
    Ok(oracle::integrate_algebra(alg, f.matrix(), q, v0, times, &cfg)?)
}

fn translate(alg: &Algebra, p: &GroupPoint<f64>, curve: &mut SampledCurve<f64>) -> CliResult<()> {
    for xi in curve.xi.iter_mut() {
        *xi = alg.group_mul(p, &GroupPoint::new(std::mem::take(xi)))?.xi;
    }
    Ok(())
}

struct Solved {
    solver: SolverUsed,
    curve: SampledCurve<f64>,
    branch: String,
    period: Option<f64>,
}

fn branch_name(b: Branch) -> String {
    format!("{b:?}")
}

fn solve(s: &Scenario, alg: &Algebra, f: &Force, v0: &[f64], times: &[f64]) -> CliResult<Solved> {
    let class = f.classification();
    let u = if class == ForceType::TypeII { scenario::type2_vector(alg, f.matrix()) } else { None };
    let choice = match (s.solver, class, &u) {
        (SolverChoice::Auto, ForceType::TypeI, _) | (SolverChoice::Closedform, ForceType::TypeI, _) => {
            SolverUsed::Closedform
        }
        (SolverChoice::Auto, ForceType::TypeII, Some(_)) | (SolverChoice::H3Type2, ForceType::TypeII, Some(_)) => {
            SolverUsed::H3Type2
        }
        (SolverChoice::Oracle, _, _) => SolverUsed::Oracle,
        (SolverChoice::Auto, _, _) => {
            log::warn!("no closed form for a {class:?} force on this algebra; integrating numerically");
            SolverUsed::Oracle
        }
        (SolverChoice::Closedform, _, _) => {
            return Err(CliError::unsupported(format!("closedform solver needs a type-I force, got {class:?}")))
        }
        (SolverChoice::H3Type2, _, _) => {
            return Err(CliError::unsupported(format!(
                "h3_type2 solver needs a force F_U on the standard H3, got a {class:?} force"
            )))
        }
    };
    let q = s.charge;
    Ok(match choice {
        SolverUsed::Closedform => {
            let ic = InitialCondition::new(alg, alg.project_v(v0), alg.project_z(v0), q)?;
            let sol = closedform::solve_type1(alg, f, &ic)?;
            Solved { solver: choice, curve: sol.sample(times), branch: "TypeI".into(), period: None }
        }
        SolverUsed::H3Type2 => {
            let u = u.expect("checked above");
            let sol = h3_type2::solve_type2(&u, q, v0)?;
            Solved {
                solver: choice,
                curve: sol.sample(times),
                branch: branch_name(sol.reduced.branch),
                period: sol.period(),
            }
        }
        SolverUsed::Oracle => Solved {
            solver: choice,
            curve: reference(alg, f, q, v0, times)?,
            branch: format!("{class:?}"),
            period: None,
        },
    })
}

pub fn trajectory(args: &ScenarioArgs) -> CliResult<()> {
    let s = args.load()?;
    let alg = s.build_algebra()?;
    let f = s.build_force(&alg)?;
    let v0 = s.initial_velocity(&alg)?;
    let start = s.start_point(&alg)?;
    let times = s.times();
    let mut solved = solve(&s, &alg, &f, &v0, &times)?;
    log::info!("solver {:?}, branch {}", solved.solver, solved.branch);

    let oracle_check = if s.checks.oracle {
        let c: Comparison<f64> = if solved.solver == SolverUsed::Oracle {
            // nothing independent to compare against
            Comparison { max_deviation: 0.0, max_velocity_deviation: 0.0, max_speed_drift: speed_drift(&solved.curve) }
        } else {
            oracle::compare(&solved.curve, &reference(&alg, &f, s.charge, &v0, &times)?)?
        };
        let tolerance = s.checks.tolerance;
        Some(OracleCheck {
            max_deviation: c.max_deviation,
            max_velocity_deviation: c.max_velocity_deviation,
            max_speed_drift: c.max_speed_drift,
            tolerance,
            passed: c.max_deviation <= tolerance,
        })
    } else {
        None
    };
    if let Some(p) = &start {
        translate(&alg, p, &mut solved.curve)?;
    }

    let meta = TrajectoryMeta {
        solver: solved.solver,
        closed_form: solved.solver != SolverUsed::Oracle,
        force_type: f.classification(),
        exact: f.is_exact(),
        z: f.exact_witness().map(<[f64]>::to_vec),
        branch: solved.branch.clone(),
        period: solved.period,
        dim: alg.dim(),
        samples: times.len(),
        oracle: oracle_check.clone(),
        scenario: s.clone(),
    };

    let sink = output::Sink::new(args.out.as_deref())?;
    match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            output::write_csv(&mut buf, &solved.curve, &solved.branch, solved.period)?;
            sink.emit("trajectory.csv", &String::from_utf8(buf).expect("csv is utf-8"), true)?;
            sink.emit("metadata.json", &output::json(&meta)?, false)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                metadata: &'a TrajectoryMeta,
                samples: Vec<output::Sample<'a>>,
            }
            let doc = Doc { metadata: &meta, samples: output::samples(&solved.curve) };
            sink.emit("trajectory.json", &output::json(&doc)?, true)?;
        }
    }
    sink.emit("scenario.json", &s.to_json(), false)?;

    match oracle_check {
        Some(c) if !c.passed => Err(CliError::numeric(format!(
            "oracle deviation {:e} exceeds tolerance {:e}",
            c.max_deviation, c.tolerance
        ))),
        _ => Ok(()),
    }
}

fn speed_drift(c: &SampledCurve<f64>) -> f64 {
    let sp = c.speeds();
    let s0 = sp.first().copied().unwrap_or(0.0);
    sp.iter().map(|s| (s - s0).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Serialize)]
pub struct AlgebraReport {
    pub dim: usize,
    pub dim_v: usize,
    pub dim_z: usize,
    pub singularity: Singularity,
    pub nonsingular: bool,
    /// `false` when the singularity verdict rests on sampling.
    pub exhaustive: bool,
    pub h_type: bool,
}

#[derive(Debug, Serialize)]
pub struct ForceReport {
    pub closed: bool,
    pub closed_residual: f64,
    /// 1-based basis triple with the largest cyclic sum.
    pub worst_triple: Option<(usize, usize, usize)>,
    pub force_type: Option<ForceType>,
    pub exact: Option<bool>,
    #[serde(rename = "Z")]
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct ClassifyReport {
    pub algebra: AlgebraReport,
    pub force: ForceReport,
}

/// Classifies the algebra of a scenario, or of a bare preset, and its force.
pub fn classify(scenario: Option<&Scenario>, preset: Option<&str>, out: Option<&std::path::Path>) -> CliResult<()> {
    let (alg, m) = match (scenario, preset) {
        (Some(s), _) => {
            let alg = s.build_algebra()?;
            let m = s.force_matrix(&alg)?;
            (alg, m)
        }
        (None, Some(p)) => {
            let alg = scenario::parse_preset(p)?;
            let n = alg.dim();
            (alg, linalg::Mat::zeros(n, n))
        }
        (None, None) => return Err(CliError::input("classify needs --scenario or --algebra")),
    };
    let sing = alg.classify_singularity();
    let algebra = AlgebraReport {
        dim: alg.dim(),
        dim_v: alg.dim_v(),
        dim_z: alg.dim_z(),
        singularity: sing.class,
        nonsingular: sing.class == Singularity::NonSingular,
        exhaustive: sing.exhaustive,
        h_type: alg.is_h_type(),
    };
    let cl = lorentz::check_closed(&alg, &m)?;
    let (force_type, exact, z) = if cl.closed {
        let z = lorentz::exactness_test(&alg, &m);
        (Some(lorentz::classify(&alg, &m)), Some(z.is_some()), z)
    } else {
        (None, None, None)
    };
    let force = ForceReport {
        closed: cl.closed,
        closed_residual: cl.residual,
        worst_triple: if cl.closed { None } else { cl.worst_triple.map(|(i, j, k)| (i + 1, j + 1, k + 1)) },
        force_type,
        exact,
        z,
    };
    let sink = Sink::new(out)?;
    sink.emit("classify.json", &output::json(&ClassifyReport { algebra, force })?, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum H5Verdict {
    Periodic,
    /// Nonzero drift of `z`, or a resonant mode.
    NonPeriodic,
    /// No rational relation with small denominators was found.
    Inconclusive,
}

#[derive(Debug, Serialize)]
pub struct H5Periodicity {
    pub verdict: H5Verdict,
    pub period: Option<f64>,
    pub drift: f64,
    pub nu: [f64; 2],
    pub mu: [f64; 2],
    pub residual: Option<f64>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum PeriodicityOutput {
    H3Type2 { branch: Branch, boundary_margin: f64, report: PeriodicityReport<f64> },
    H5TypeI(H5Periodicity),
}

fn is_h5(alg: &Algebra) -> bool {
    nilmag::nilalgebra::MetricNilAlgebra::<f64>::heisenberg(2)
        .map(|h| h.dim() == alg.dim() && linalg::dist(h.structure(), alg.structure()) <= 1e-14)
        .unwrap_or(false)
}

fn h5_periodicity(alg: &Algebra, f: &Force, q: f64, v0: &[f64]) -> CliResult<H5Periodicity> {
    let scaled = LorentzForce::new(alg, f.matrix().scale(q))?;
    let force = H5Force::from_force(alg, &scaled)?;
    let traj = h5_type1::solve_h5(&force, &v0[..4], v0[4])?;
    let period = h5_type1::find_period(&traj);
    let residual = period.map(|t| h5_type1::verify_periodic(&traj, t));
    let tol = h5_type1::PERIODIC_TOL;
    let scale = traj.energy().sqrt().max(1.0);
    // an excited mode with zero frequency moves along a line
    let resonant =
        (0..2).any(|i| traj.tilde[2 * i].hypot(traj.tilde[2 * i + 1]) > tol * scale && traj.nu[i].abs() <= tol * scale);
    let verdict = match period {
        Some(_) => H5Verdict::Periodic,
        None if traj.drift.abs() > tol * scale || resonant => H5Verdict::NonPeriodic,
        None => H5Verdict::Inconclusive,
    };
    Ok(H5Periodicity { verdict, period, drift: traj.drift, nu: traj.nu, mu: [force.mu1, force.mu2], residual })
}

pub fn periodicity(args: &ScenarioArgs) -> CliResult<()> {
    let s = args.load()?;
    let alg = s.build_algebra()?;
    let f = s.build_force(&alg)?;
    let v0 = s.initial_velocity(&alg)?;
    let start = s.start_point(&alg)?;
    let tol = s.checks.tolerance;
    let u = scenario::type2_vector(&alg, f.matrix());
    let (doc, residual) = match (f.classification(), u) {
        (ForceType::TypeII, Some(u)) => {
            let sol = h3_type2::solve_type2(&u, s.charge, &v0)?;
            let mut report = sol.lambda_periodicity(&f);
            if let (Some(p), Some(l)) = (&start, report.lambda.as_mut()) {
                // sigma -> p sigma turns lambda into p lambda p^-1
                let pl = alg.group_mul(p, &GroupPoint::new(l.clone()))?;
                *l = alg.group_mul(&pl, &p.inverse())?.xi;
            }
            let residual = report.identity_residual;
            let out = PeriodicityOutput::H3Type2 {
                branch: sol.reduced.branch,
                boundary_margin: sol.reduced.boundary_margin,
                report,
            };
            (out, residual)
        }
        (ForceType::TypeI, _) if is_h5(&alg) => {
            let rep = h5_periodicity(&alg, &f, s.charge, &v0)?;
            let residual = rep.residual;
            (PeriodicityOutput::H5TypeI(rep), residual)
        }
        (class, _) => {
            return Err(CliError::unsupported(format!(
                "periodicity covers type-II forces F_U on H3 and type-I forces on H5, got a {class:?} force in dimension {}",
                alg.dim()
            )))
        }
    };
    let sink = Sink::new(args.out.as_deref())?;
    sink.emit("periodicity.json", &output::json(&doc)?, true)?;
    sink.emit("scenario.json", &s.to_json(), false)?;
    match residual {
        Some(r) if r.is_nan() || r > tol => {
            Err(CliError::numeric(format!("periodicity residual {r:e} exceeds {tol:e}")))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize)]
pub struct H5Certificate {
    pub mu: [f64; 2],
    pub energy: f64,
    #[serde(rename = "V0")]
    pub v0: Vec<f64>,
    pub z0: f64,
    #[serde(rename = "T")]
    pub period: f64,
    pub drift: f64,
    pub residual: f64,
    pub construction: h5_type1::Construction,
}

pub fn h5_periodic(mu1: f64, mu2: f64, energy: f64, out: Option<&std::path::Path>) -> CliResult<()> {
    if !(mu1.is_finite() && mu2.is_finite()) {
        return Err(CliError::input("mu1 and mu2 must be finite"));
    }
    let force = H5Force::from_mu(mu1, mu2);
    let cert = h5_type1::periodic_at_energy(&force, energy)?;
    let residual = h5_type1::verify_periodic(&cert.trajectory, cert.period);
    let doc = H5Certificate {
        mu: [mu1, mu2],
        energy,
        v0: cert.v0.clone(),
        z0: cert.z0,
        period: cert.period,
        drift: cert.trajectory.drift,
        residual,
        construction: cert.construction,
    };
    Sink::new(out)?.emit("certificate.json", &output::json(&doc)?, true)?;
    let bound = h5_type1::PERIODIC_TOL * cert.period.max(1.0) * energy.max(1.0);
    if residual > bound {
        return Err(CliError::numeric(format!("certificate residual {residual:e} exceeds {bound:e}")));
    }
    Ok(())
}

pub fn selftest(seed: u64, trials: usize, out: Option<&std::path::Path>) -> CliResult<()> {
    if trials == 0 {
        return Err(CliError::input("trials must be positive"));
    }
    let report = selftest::run(seed, trials)?;
    Sink::new(out)?.emit("selftest.json", &output::json(&report)?, true)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::numeric("self-test failed"))
    }
}
