//! Randomized structural checks on presets and random 2-step algebras.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::closedform::{self, InitialCondition};
use crate::error::Result;
use crate::h5_type1::H5Force;
use crate::linalg::{self, Mat};
use crate::lorentz::LorentzForce;
use crate::nilalgebra::{GroupPoint, MetricNilAlgebra};

pub const SELFTEST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random 2-step algebra with `m`-dimensional `v` and `k`-dimensional `z`.
pub fn random_algebra(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Result<MetricNilAlgebra<f64>> {
    let mut br = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for c in 0..k {
                br.push((i, j, m + c, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    MetricNilAlgebra::new(m + k, &br, None)
}

fn algebras(rng: &mut ChaCha8Rng) -> Result<Vec<MetricNilAlgebra<f64>>> {
    let mut out =
        vec![MetricNilAlgebra::heisenberg(1)?, MetricNilAlgebra::heisenberg(2)?, MetricNilAlgebra::quaternionic(1)?];
    out.push(random_algebra(rng, 4, 2)?);
    out.push(random_algebra(rng, 5, 3)?);
    out.push(random_algebra(rng, 6, 2)?.with_abelian_factor(1));
    Ok(out)
}

struct Acc {
    name: &'static str,
    max: f64,
    cases: usize,
}

impl Acc {
    fn new(name: &'static str) -> Self {
        Self { name, max: 0.0, cases: 0 }
    }

    fn push(&mut self, e: f64) {
        self.max = if e.is_nan() { f64::INFINITY } else { self.max.max(e) };
        self.cases += 1;
    }

    fn finish(self) -> Check {
        Check {
            name: self.name.to_string(),
            max_error: self.max,
            tolerance: SELFTEST_TOL,
            cases: self.cases,
            passed: self.max <= SELFTEST_TOL,
        }
    }
}

/// Runs every check with `trials` random inputs per algebra.
pub fn run(seed: u64, trials: usize) -> Result<SelfTestReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let algs = algebras(&mut rng)?;
    let mut jid = Acc::new("j_identity");
    let mut torsion = Acc::new("torsion_free");
    let mut compat = Acc::new("metric_compatible");
    let mut assoc = Acc::new("associativity");
    let mut inverse = Acc::new("group_inverse");
    let mut conserved = Acc::new("conserved_bracket");
    for alg in &algs {
        let n = alg.dim();
        for _ in 0..trials {
            let v = alg.project_v(&uniform_vec(&mut rng, n));
            let w = alg.project_v(&uniform_vec(&mut rng, n));
            let z = alg.project_z(&uniform_vec(&mut rng, n));
            let lhs = linalg::dot(&alg.j_apply(&z, &v), &w);
            let rhs = linalg::dot(&z, &alg.bracket(&v, &w)?);
            jid.push((lhs - rhs).abs());

            let (x, y, u) = (uniform_vec(&mut rng, n), uniform_vec(&mut rng, n), uniform_vec(&mut rng, n));
            let t =
                linalg::sub(&linalg::sub(&alg.levi_civita(&x, &y)?, &alg.levi_civita(&y, &x)?), &alg.bracket(&x, &y)?);
            torsion.push(linalg::max_abs(&t));
            let c = linalg::dot(&alg.levi_civita(&x, &y)?, &u) + linalg::dot(&y, &alg.levi_civita(&x, &u)?);
            compat.push(c.abs());

            let (p, q, r) = (GroupPoint::new(x), GroupPoint::new(y), GroupPoint::new(u));
            let a = alg.group_mul(&alg.group_mul(&p, &q)?, &r)?;
            let b = alg.group_mul(&p, &alg.group_mul(&q, &r)?)?;
            assoc.push(linalg::dist(&a.xi, &b.xi));
            let e = alg.group_mul(&p, &p.inverse())?;
            inverse.push(linalg::max_abs(&e.xi));
        }
        // exact forces are closed and of type I on every algebra
        if alg.commutator_basis().is_empty() {
            continue;
        }
        for _ in 0..trials.div_ceil(4) {
            let zt = alg.project_commutator(&uniform_vec(&mut rng, n));
            let f = LorentzForce::exact(alg, &zt)?;
            let ic = InitialCondition::new(
                alg,
                alg.project_v(&uniform_vec(&mut rng, n)),
                alg.project_z(&uniform_vec(&mut rng, n)),
                rng.gen_range(-2.0..2.0),
            )?;
            conserved.push(bracket_drift(alg, &f, &ic, &mut rng)?);
        }
    }
    // non-exact forces on H5 in a random U(2) frame
    let h5 = MetricNilAlgebra::heisenberg(2)?;
    for _ in 0..trials.div_ceil(4) {
        let (m1, m2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let f = random_h5_force(&h5, m1, m2, &mut rng)?;
        let ic = InitialCondition::new(
            &h5,
            h5.project_v(&uniform_vec(&mut rng, 5)),
            h5.project_z(&uniform_vec(&mut rng, 5)),
            1.0,
        )?;
        conserved.push(bracket_drift(&h5, &f, &ic, &mut rng)?);
    }
    Ok(SelfTestReport {
        seed,
        checks: vec![
            jid.finish(),
            torsion.finish(),
            compat.finish(),
            assoc.finish(),
            inverse.finish(),
            conserved.finish(),
        ],
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Largest relative change of the conserved brackets over random times.
fn bracket_drift(
    alg: &MetricNilAlgebra<f64>,
    f: &LorentzForce<f64>,
    ic: &InitialCondition<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let s = closedform::solve_type1(alg, f, ic)?;
    let mut worst: f64 = 0.0;
    for i in 0..s.xis.len() {
        // the bracket grows like 1/theta for slow planes
        let f0 = s.conserved_bracket(i, 0.0);
        let scale = linalg::norm(&f0).max(1.0);
        for _ in 0..4 {
            let t = rng.gen_range(0.0..20.0);
            worst = worst.max(linalg::dist(&s.conserved_bracket(i, t), &f0) / scale);
        }
    }
    Ok(worst)
}

/// `U^T diag(rot(m1), rot(m2)) U` on `v` for a random `U` in `U(2)`.
pub fn random_h5_force(
    alg: &MetricNilAlgebra<f64>,
    m1: f64,
    m2: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LorentzForce<f64>> {
    // U(2) acts on C^2 = (e1 + i e2, e3 + i e4); build it from a complex 2x2 unitary
    let (a, b, c): (f64, f64, f64) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
    let th: f64 = rng.gen_range(0.0..1.6);
    let (ct, st) = (th.cos(), th.sin());
    let cplx = [
        [(ct * a.cos(), ct * a.sin()), (-st * b.cos(), -st * b.sin())],
        [(st * (c - b).cos(), st * (c - b).sin()), (ct * (c - a).cos(), ct * (c - a).sin())],
    ];
    let u = Mat::from_fn(4, 4, |i, j| {
        let (re, im) = cplx[i / 2][j / 2];
        match (i % 2, j % 2) {
            (0, 0) | (1, 1) => re,
            (1, 0) => im,
            _ => -im,
        }
    });
    let d = H5Force::from_mu(m1, m2).force_v();
    let fv = u.transpose().mul(&d).mul(&u);
    let m = Mat::from_fn(5, 5, |i, j| if i < 4 && j < 4 { fv[(i, j)] } else { 0.0 });
    LorentzForce::new(alg, m)
}
