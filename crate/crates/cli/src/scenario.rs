//! Scenario files: algebra, force, charge, initial velocity, time grid and
//! checks, as JSON.

use std::path::Path;

use nilmag::closedform::InitialCondition;
use nilmag::linalg::{self, Mat};
use nilmag::lorentz::{self, LorentzForce};
use nilmag::nilalgebra::{AlgebraDef, GroupPoint, MetricNilAlgebra};
use nilmag::{Algebra, Force};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAX_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub algebra: AlgebraSpec,
    /// Absent means the zero force.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<ForceSpec>,
    #[serde(default = "one")]
    pub charge: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    /// Start point in exponential coordinates; the curve is left-translated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub solver: SolverChoice,
}

fn one() -> f64 {
    1.0
}

/// `"heisenberg(n)"`, `"quaternionic(n)"`, optionally followed by
/// `"+abelian(k)"`, or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraSpec {
    Preset(String),
    Inline(AlgebraDef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ForceSpec {
    #[serde(rename = "matrix")]
    Matrix(Vec<Vec<f64>>),
    /// `F = j(Z~)`.
    #[serde(rename = "exact")]
    Exact(ExactSpec),
    /// `F_U` on H3.
    #[serde(rename = "type2_U")]
    Type2U(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSpec {
    #[serde(rename = "Z")]
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Split {
        #[serde(rename = "X0")]
        x0: Vec<f64>,
        #[serde(rename = "Z0")]
        z0: Vec<f64>,
    },
    Velocity {
        velocity: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_max: f64,
    /// Number of sample times, endpoints included.
    pub samples: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { t_max: 10.0, samples: 101 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    pub oracle: bool,
    pub tolerance: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self { oracle: false, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Closedform,
    H3Type2,
    Oracle,
}

impl Scenario {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::input(format!("invalid scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical serialization; parses back to an equal scenario.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        if !self.charge.is_finite() {
            return Err(CliError::input("charge must be finite"));
        }
        let t = self.time;
        if !(t.t_max.is_finite() && t.t_max >= 0.0) {
            return Err(CliError::input(format!("time.t_max must be finite and non-negative, got {}", t.t_max)));
        }
        if t.samples == 0 || t.samples > MAX_SAMPLES {
            return Err(CliError::input(format!("time.samples must lie in 1..={MAX_SAMPLES}")));
        }
        if !(self.checks.tolerance > 0.0 && self.checks.tolerance.is_finite()) {
            return Err(CliError::input("checks.tolerance must be positive"));
        }
        Ok(())
    }

    pub fn build_algebra(&self) -> CliResult<Algebra> {
        match &self.algebra {
            AlgebraSpec::Preset(name) => parse_preset(name),
            AlgebraSpec::Inline(def) => Ok(MetricNilAlgebra::from_def(def)?),
        }
    }

    /// Force matrix without the closedness check.
    pub fn force_matrix(&self, alg: &Algebra) -> CliResult<Mat<f64>> {
        let n = alg.dim();
        match &self.force {
            None => Ok(Mat::zeros(n, n)),
            Some(ForceSpec::Matrix(rows)) => {
                let m = Mat::from_rows(rows).ok_or_else(|| CliError::input("ragged force matrix"))?;
                if m.rows() != n || m.cols() != n {
                    return Err(CliError::input(format!(
                        "force matrix must be {n}x{n}, got {}x{}",
                        m.rows(),
                        m.cols()
                    )));
                }
                Ok(m)
            }
            Some(ForceSpec::Exact(e)) => Ok(lorentz::exact_force_matrix(alg, &e.z)?),
            Some(ForceSpec::Type2U(u)) => Ok(lorentz::type2_from_vector(alg, u)?.matrix().clone()),
        }
    }

    pub fn build_force(&self, alg: &Algebra) -> CliResult<Force> {
        Ok(LorentzForce::new(alg, self.force_matrix(alg)?)?)
    }

    /// Left-trivialized initial velocity.
    pub fn initial_velocity(&self, alg: &Algebra) -> CliResult<Vec<f64>> {
        let n = alg.dim();
        match &self.initial {
            None => Err(CliError::input("scenario has no initial condition")),
            Some(InitialSpec::Split { x0, z0 }) => {
                let ic = InitialCondition::new(alg, x0.clone(), z0.clone(), self.charge)?;
                Ok(ic.velocity())
            }
            Some(InitialSpec::Velocity { velocity }) => {
                if velocity.len() != n {
                    return Err(CliError::input(format!(
                        "velocity has length {}, algebra has dimension {n}",
                        velocity.len()
                    )));
                }
                Ok(velocity.clone())
            }
        }
    }

    pub fn start_point(&self, alg: &Algebra) -> CliResult<Option<GroupPoint<f64>>> {
        match &self.start {
            None => Ok(None),
            Some(p) if p.len() == alg.dim() => Ok(Some(GroupPoint::new(p.clone()))),
            Some(p) => {
                Err(CliError::input(format!("start has length {}, algebra has dimension {}", p.len(), alg.dim())))
            }
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let t = self.time;
        if t.samples == 1 {
            vec![0.0]
        } else {
            nilmag::oracle::uniform_grid(t.t_max, t.samples - 1)
        }
    }
}

fn preset_arg(s: &str, name: &str) -> Option<usize> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?.trim().parse().ok()
}

pub fn parse_preset(spec: &str) -> CliResult<Algebra> {
    let spec: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let (base, extra) = match spec.split_once('+') {
        Some((b, e)) => {
            let k = preset_arg(e, "abelian").ok_or_else(|| CliError::input(format!("unknown algebra factor {e:?}")))?;
            (b.to_string(), k)
        }
        None => (spec.clone(), 0),
    };
    let alg = if let Some(n) = preset_arg(&base, "heisenberg") {
        MetricNilAlgebra::heisenberg(n)?
    } else if let Some(n) = preset_arg(&base, "quaternionic") {
        MetricNilAlgebra::quaternionic(n)?
    } else {
        return Err(CliError::input(format!(
            "unknown algebra preset {base:?} (expected heisenberg(n) or quaternionic(n))"
        )));
    };
    Ok(if extra > 0 { alg.with_abelian_factor(extra) } else { alg })
}

/// `U` with `F = F_U`, when the algebra is the standard H3 and `F` is of
/// that form.
pub fn type2_vector(alg: &Algebra, f: &Mat<f64>) -> Option<Vec<f64>> {
    let h3 = MetricNilAlgebra::<f64>::heisenberg(1).ok()?;
    if alg.dim() != 3 || linalg::dist(alg.structure(), h3.structure()) > 1e-14 {
        return None;
    }
    let f1 = lorentz::type2_from_vector(&h3, &[1.0, 0.0, 0.0]).ok()?.matrix().clone();
    let f2 = lorentz::type2_from_vector(&h3, &[0.0, 1.0, 0.0]).ok()?.matrix().clone();
    let g = Mat::from_rows(&[vec![f1.inner(&f1), f1.inner(&f2)], vec![f2.inner(&f1), f2.inner(&f2)]])?;
    let u = linalg::solve(&g, &[f.inner(&f1), f.inner(&f2)])?;
    let fit = f1.scale(u[0]).add(&f2.scale(u[1]));
    if fit.sub(f).max_abs() > 1e-10 * f.max_abs().max(1.0) {
        return None;
    }
    Some(vec![u[0], u[1], 0.0])
}
