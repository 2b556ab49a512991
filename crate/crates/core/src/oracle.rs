//! Numerical reference integrator for the magnetic equation
//! `x' = ad(x)^* x + q F x` in the left-trivialized frame, together with the
//! exponential-coordinate reconstruction `xi' = x - [x, xi]/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::nilalgebra::MetricNilAlgebra;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Rk4Fixed,
    DormandPrince45,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub method: Method,
    /// Step of the fixed-step scheme.
    pub dt: T,
    /// Absolute and relative tolerance of the adaptive scheme.
    pub tol: T,
    pub t_max: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn dormand_prince(tol: T, t_max: T) -> Self {
        Self { method: Method::DormandPrince45, dt: T::c(1e-2), tol, t_max }
    }

    pub fn rk4(dt: T, t_max: T) -> Self {
        Self { method: Method::Rk4Fixed, dt, tol: T::c(1e-11), t_max }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4Fixed if !(self.dt > T::zero() && self.dt.is_finite()) => {
                Err(Error::Argument(format!("fixed step must be positive, got {}", self.dt)))
            }
            Method::DormandPrince45 if !(self.tol > T::c(1e-14) && self.tol < T::c(1e-3)) => {
                Err(Error::Argument(format!("tolerance {} outside (1e-14, 1e-3)", self.tol)))
            }
            _ if !(self.t_max >= T::zero() && self.t_max.is_finite()) => {
                Err(Error::Argument(format!("t_max must be finite and non-negative, got {}", self.t_max)))
            }
            _ => Ok(()),
        }
    }
}

impl Default for IntegratorConfig<f64> {
    fn default() -> Self {
        Self::dormand_prince(1e-11, 10.0)
    }
}

/// Curve sampled on a time grid: exponential coordinates and left-trivialized
/// velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve<T> {
    pub times: Vec<T>,
    pub xi: Vec<Vec<T>>,
    pub velocity: Vec<Vec<T>>,
}

impl<T: Real> SampledCurve<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn speeds(&self) -> Vec<T> {
        self.velocity.iter().map(|v| linalg::norm(v)).collect()
    }
}

/// Anything that can be evaluated at a time: returns `(xi, velocity)`.
pub trait Trajectory<T: Real> {
    fn eval_at(&self, t: T) -> (Vec<T>, Vec<T>);

    fn sample(&self, times: &[T]) -> SampledCurve<T> {
        let mut xi = Vec::with_capacity(times.len());
        let mut velocity = Vec::with_capacity(times.len());
        for &t in times {
            let (p, v) = self.eval_at(t);
            xi.push(p);
            velocity.push(v);
        }
        SampledCurve { times: times.to_vec(), xi, velocity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison<T> {
    /// Largest Euclidean distance between exponential coordinates.
    pub max_deviation: T,
    /// Largest distance between velocities.
    pub max_velocity_deviation: T,
    /// Largest departure of either curve's speed from its initial speed.
    pub max_speed_drift: T,
}

pub fn compare<T: Real>(a: &SampledCurve<T>, b: &SampledCurve<T>) -> Result<Comparison<T>> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} samples vs {}", a.len(), b.len())));
    }
    for (&s, &t) in a.times.iter().zip(&b.times) {
        if (s - t).abs() > T::tol(1e-12) * s.abs().max(T::one()) {
            return Err(Error::GridMismatch(format!("time {s} vs {t}")));
        }
    }
    let mut dev = T::zero();
    let mut vdev = T::zero();
    for i in 0..a.len() {
        dev = dev.max(linalg::dist(&a.xi[i], &b.xi[i]));
        vdev = vdev.max(linalg::dist(&a.velocity[i], &b.velocity[i]));
    }
    let drift = |c: &SampledCurve<T>| {
        let s = c.speeds();
        let s0 = s.first().copied().unwrap_or_else(T::zero);
        s.iter().fold(T::zero(), |m, &x| m.max((x - s0).abs()))
    };
    Ok(Comparison { max_deviation: dev, max_velocity_deviation: vdev, max_speed_drift: drift(a).max(drift(b)) })
}

/// Integrates `y' = f(t, y)` from `t = 0` and returns `y` at each requested
/// time (ascending, non-negative).
pub fn integrate<T: Real>(
    mut f: impl FnMut(T, &[T]) -> Vec<T>,
    y0: &[T],
    times: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<Vec<T>>> {
    cfg.validate()?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < T::zero()) {
        return Err(Error::Argument("sample times must be ascending and non-negative".into()));
    }
    if let Some(&last) = times.last() {
        if last > cfg.t_max * (T::one() + T::tol(1e-12)) {
            return Err(Error::Argument(format!("sample time {last} beyond t_max {}", cfg.t_max)));
        }
    }
    let mut out = Vec::with_capacity(times.len());
    let mut t = T::zero();
    let mut y = y0.to_vec();
    let mut h = match cfg.method {
        Method::Rk4Fixed => cfg.dt,
        Method::DormandPrince45 => T::c(1e-3),
    };
    for &target in times {
        while t < target {
            match cfg.method {
                Method::Rk4Fixed => {
                    let step = cfg.dt.min(target - t);
                    y = rk4_step(&mut f, t, &y, step);
                    t = if target - t <= cfg.dt { target } else { t + step };
                }
                Method::DormandPrince45 => {
                    let remaining = target - t;
                    let clipped = h >= remaining;
                    let step = if clipped { remaining } else { h };
                    if step <= T::epsilon() * T::c(16.0) * t.abs().max(T::one()) && !clipped {
                        return Err(Error::IntegrationFailure {
                            t: t.to_f64_lossy(),
                            reason: "step size underflow".into(),
                        });
                    }
                    let (y_new, err) = dp45_step(&mut f, t, &y, step, cfg.tol);
                    if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                        h = step * T::c(0.25);
                        if h <= T::epsilon() * t.abs().max(T::one()) {
                            return Err(Error::IntegrationFailure {
                                t: t.to_f64_lossy(),
                                reason: "non-finite state".into(),
                            });
                        }
                        continue;
                    }
                    let factor = if err == T::zero() {
                        T::c(5.0)
                    } else {
                        (T::c(0.9) * err.powf(-T::c(0.2))).min(T::c(5.0)).max(T::c(0.2))
                    };
                    if err <= T::one() {
                        t = if clipped { target } else { t + step };
                        y = y_new;
                        // keep the untruncated step size for the next interval
                        if !clipped {
                            h = step * factor;
                        } else {
                            h = h.max(step * factor);
                        }
                    } else {
                        h = step * factor;
                    }
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn rk4_step<T: Real>(f: &mut impl FnMut(T, &[T]) -> Vec<T>, t: T, y: &[T], h: T) -> Vec<T> {
    let half = T::c(0.5);
    let k1 = f(t, y);
    let y2: Vec<T> = y.iter().zip(&k1).map(|(&a, &k)| a + half * h * k).collect();
    let k2 = f(t + half * h, &y2);
    let y3: Vec<T> = y.iter().zip(&k2).map(|(&a, &k)| a + half * h * k).collect();
    let k3 = f(t + half * h, &y3);
    let y4: Vec<T> = y.iter().zip(&k3).map(|(&a, &k)| a + h * k).collect();
    let k4 = f(t + h, &y4);
    let sixth = h / T::c(6.0);
    (0..y.len()).map(|i| y[i] + sixth * (k1[i] + T::c(2.0) * (k2[i] + k3[i]) + k4[i])).collect()
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand-Prince step; returns the 5th-order solution and the scaled
/// error norm (accept when `<= 1`).
fn dp45_step<T: Real>(f: &mut impl FnMut(T, &[T]) -> Vec<T>, t: T, y: &[T], h: T, tol: T) -> (Vec<T>, T) {
    let n = y.len();
    let mut k: Vec<Vec<T>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = T::c(DP_A[s][j]);
            if a != T::zero() {
                for i in 0..n {
                    ys[i] = ys[i] + h * a * kj[i];
                }
            }
        }
        k.push(f(t + T::c(DP_C[s]) * h, &ys));
    }
    let mut y5 = y.to_vec();
    let mut err = T::zero();
    for i in 0..n {
        let mut d5 = T::zero();
        let mut d4 = T::zero();
        for s in 0..7 {
            d5 = d5 + T::c(DP_B5[s]) * k[s][i];
            d4 = d4 + T::c(DP_B4[s]) * k[s][i];
        }
        y5[i] = y[i] + h * d5;
        let sc = tol + tol * y[i].abs().max(y5[i].abs());
        err = err.max((h * (d5 - d4)).abs() / sc);
    }
    (y5, err)
}

/// `ad(x)^* x + q F x`.
pub fn magnetic_rhs<T: Real>(alg: &MetricNilAlgebra<T>, f: &Mat<T>, q: T, x: &[T]) -> Vec<T> {
    let mut out = alg.ad_star(x, x);
    let fx = f.mul_vec(x);
    linalg::axpy(q, &fx, &mut out);
    out
}

fn check_force<T: Real>(alg: &MetricNilAlgebra<T>, f: &Mat<T>) -> Result<()> {
    let n = alg.dim();
    if f.rows() != n || f.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.rows() });
    }
    if f.skew_defect() > T::tol(1e-12) * f.max_abs().max(T::one()) {
        return Err(Error::Argument("force matrix is not skew-symmetric".into()));
    }
    Ok(())
}

/// Integrates velocity and exponential coordinates together (state of size
/// `2 dim`), starting at the identity with velocity `x0`.
pub fn integrate_algebra<T: Real>(
    alg: &MetricNilAlgebra<T>,
    f: &Mat<T>,
    q: T,
    x0: &[T],
    times: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<SampledCurve<T>> {
    check_force(alg, f)?;
    crate::error::check_len(alg.dim(), x0.len())?;
    let n = alg.dim();
    let half = T::c(0.5);
    let rhs = |_t: T, y: &[T]| {
        let (x, xi) = y.split_at(n);
        let mut out = magnetic_rhs(alg, f, q, x);
        let b = alg.bracket_unchecked(x, xi);
        out.extend((0..n).map(|k| x[k] - half * b[k]));
        out
    };
    let mut y0 = x0.to_vec();
    y0.resize(2 * n, T::zero());
    let states = integrate(rhs, &y0, times, cfg)?;
    let (velocity, xi) = states.into_iter().map(|s| (s[..n].to_vec(), s[n..].to_vec())).unzip();
    Ok(SampledCurve { times: times.to_vec(), xi, velocity })
}

/// Exponential coordinates of the curve through the identity whose
/// left-trivialized velocity is `vel(t)`.
pub fn reconstruct_group<T: Real>(
    alg: &MetricNilAlgebra<T>,
    vel: impl Fn(T) -> Vec<T>,
    times: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<SampledCurve<T>> {
    let n = alg.dim();
    let half = T::c(0.5);
    let rhs = |t: T, xi: &[T]| {
        let x = vel(t);
        let b = alg.bracket_unchecked(&x, xi);
        (0..n).map(|k| x[k] - half * b[k]).collect::<Vec<T>>()
    };
    let xi = integrate(rhs, &linalg::zeros(n), times, cfg)?;
    let velocity = times.iter().map(|&t| vel(t)).collect();
    Ok(SampledCurve { times: times.to_vec(), xi, velocity })
}

/// `n + 1` equally spaced times on `[0, t_max]`.
pub fn uniform_grid<T: Real>(t_max: T, n: usize) -> Vec<T> {
    let n = n.max(1);
    (0..=n).map(|i| t_max * T::from_usize_lossy(i) / T::from_usize_lossy(n)).collect()
}
