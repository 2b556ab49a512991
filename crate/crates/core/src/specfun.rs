//! Complete elliptic integral of the first kind, Jacobi elliptic functions
//! and their inverses.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Elliptic modulus `k` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EllipticModulus<T>(T);

impl<T: Real> EllipticModulus<T> {
    pub fn new(k: T) -> Result<Self> {
        check_modulus(k)?;
        Ok(Self(k))
    }

    pub fn k(self) -> T {
        self.0
    }

    /// Complementary modulus `sqrt(1 - k^2)`.
    pub fn complement(self) -> T {
        ((T::one() - self.0) * (T::one() + self.0)).sqrt()
    }
}

fn check_modulus<T: Real>(k: T) -> Result<()> {
    if k.is_nan() || k < T::zero() || k > T::one() {
        return Err(Error::Argument(format!("elliptic modulus {k} outside [0, 1]")));
    }
    Ok(())
}

fn agm<T: Real>(mut a: T, mut b: T) -> T {
    for _ in 0..64 {
        if (a - b).abs() <= T::epsilon() * a {
            break;
        }
        let an = T::c(0.5) * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    T::c(0.5) * (a + b)
}

/// `K(k)`, the quarter period; [`Error::InfinitePeriod`] at `k = 1`.
pub fn complete_k<T: Real>(k: T) -> Result<T> {
    check_modulus(k)?;
    if k == T::one() {
        return Err(Error::InfinitePeriod);
    }
    let kp = ((T::one() - k) * (T::one() + k)).sqrt();
    Ok(T::FRAC_PI_2() / agm(T::one(), kp))
}

/// Carlson's symmetric integral `R_F(x, y, z)`.
pub fn carlson_rf<T: Real>(x: T, y: T, z: T) -> T {
    let (mut x, mut y, mut z) = (x, y, z);
    let third = T::one() / T::c(3.0);
    let errtol = T::c(8e-4);
    let mut mean;
    let (mut dx, mut dy, mut dz);
    let mut iter = 0;
    loop {
        mean = (x + y + z) * third;
        dx = (mean - x) / mean;
        dy = (mean - y) / mean;
        dz = (mean - z) / mean;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= errtol || iter > 100 {
            break;
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        x = T::c(0.25) * (x + lam);
        y = T::c(0.25) * (y + lam);
        z = T::c(0.25) * (z + lam);
        iter += 1;
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    let poly = T::one() + (T::c(1.0 / 24.0) * e2 - T::c(0.1) - T::c(3.0 / 44.0) * e3) * e2 + T::c(1.0 / 14.0) * e3;
    poly / mean.sqrt()
}

/// Incomplete integral `F(phi | k)` for `phi` in `[0, pi/2]`.
pub fn incomplete_f<T: Real>(phi: T, k: T) -> T {
    let s = phi.sin();
    let c = phi.cos();
    s * carlson_rf(c * c, (T::one() - k * s) * (T::one() + k * s), T::one())
}

/// `(sn, cn, dn)(u, k)` by the descending Landen (AGM) scheme, with the
/// argument reduced modulo `4K`.
pub fn jacobi<T: Real>(u: T, k: T) -> Result<(T, T, T)> {
    check_modulus(k)?;
    if k == T::zero() {
        return Ok((u.sin(), u.cos(), T::one()));
    }
    if k == T::one() {
        let s = sech(u);
        return Ok((u.tanh(), s, s));
    }
    let big_k = complete_k(k)?;
    let period = T::c(4.0) * big_k;
    let u = u - period * (u / period).round();

    let eps = T::epsilon();
    let mut a = vec![T::one()];
    let mut c = vec![k];
    let mut b = ((T::one() - k) * (T::one() + k)).sqrt();
    while c.last().is_some_and(|cn| cn.abs() > eps) && a.len() < 64 {
        let an = *a.last().expect("nonempty");
        a.push(T::c(0.5) * (an + b));
        c.push(T::c(0.5) * (an - b));
        b = (an * b).sqrt();
    }
    let n = a.len() - 1;
    let mut phi = T::c(2.0).powi(n as i32) * a[n] * u;
    for i in (1..=n).rev() {
        let r = (c[i] / a[i] * phi.sin()).max(-T::one()).min(T::one());
        phi = T::c(0.5) * (phi + r.asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    // dn^2 = k'^2 + k^2 cn^2 is a sum of non-negative terms
    let kp2 = (T::one() - k) * (T::one() + k);
    let dn = (kp2 + k * k * cn * cn).sqrt();
    Ok((sn, cn, dn))
}

pub fn cn<T: Real>(u: T, k: T) -> Result<T> {
    jacobi(u, k).map(|t| t.1)
}

pub fn dn<T: Real>(u: T, k: T) -> Result<T> {
    jacobi(u, k).map(|t| t.2)
}

/// `u` in `[0, 2K]` with `cn(u, k) = x`; on that interval `cn` decreases
/// from 1 to -1. At `k = 1` only `x` in `(0, 1]` is reachable.
pub fn inverse_cn<T: Real>(x: T, k: T) -> Result<T> {
    check_modulus(k)?;
    if x.is_nan() || x.abs() > T::one() {
        return Err(Error::Argument(format!("inverse_cn argument {x} outside [-1, 1]")));
    }
    if k == T::one() {
        if x <= T::zero() {
            return Err(Error::Argument("inverse_cn at k = 1 needs x > 0".into()));
        }
        return Ok((T::one() / x).acosh());
    }
    let phi = x.acos();
    if phi <= T::FRAC_PI_2() {
        Ok(incomplete_f(phi, k))
    } else {
        Ok(T::c(2.0) * complete_k(k)? - incomplete_f(T::PI() - phi, k))
    }
}

/// `u` in `[0, K]` with `dn(u, k) = x`, for `x` in `[sqrt(1-k^2), 1]`.
pub fn inverse_dn<T: Real>(x: T, k: T) -> Result<T> {
    check_modulus(k)?;
    let kp = ((T::one() - k) * (T::one() + k)).sqrt();
    let slack = T::epsilon() * T::c(8.0);
    if x.is_nan() || x > T::one() + slack || x < kp - slack {
        return Err(Error::Argument(format!("inverse_dn argument {x} outside [{kp}, 1]")));
    }
    let x = x.min(T::one()).max(kp);
    if k == T::zero() {
        return Ok(T::zero());
    }
    if k == T::one() {
        if x <= T::zero() {
            return Err(Error::Argument("inverse_dn at k = 1 needs x > 0".into()));
        }
        return Ok((T::one() / x).acosh());
    }
    let s = (((T::one() - x) * (T::one() + x)).sqrt() / k).min(T::one());
    Ok(incomplete_f(s.asin(), k))
}

pub fn sech<T: Real>(x: T) -> T {
    T::one() / x.cosh()
}

pub fn artanh<T: Real>(x: T) -> Result<T> {
    if x.is_nan() || x.abs() >= T::one() {
        return Err(Error::Argument(format!("artanh argument {x} outside (-1, 1)")));
    }
    Ok(x.atanh())
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::quadrature;

    // reference values computed with mpmath at 30 digits
    const K_REF: [(f64, f64); 5] = [
        (0.1, 1.5747455615173559531),
        (0.5, 1.6857503548125960429),
        (0.8, 1.9953027776647294737),
        (0.9, 2.2805491384227703005),
        (0.99, 3.3566005233611919425),
    ];

    const JAC_REF: [(f64, f64, f64, f64, f64); 4] = [
        (0.3, 0.5, 0.29446555154955623422, 0.95566209454525067506, 0.98910187025283392193),
        (1.7, 0.9, 0.96520491586387397181, 0.26149468520834599782, 0.49536589609872383319),
        (2.5, 0.2, 0.62245475498803589926, -0.78265578512701495126, 0.9922207431412182315),
        (0.9, 0.99, 0.71768042935033062397, 0.69637260236709851039, 0.7036935403860883485),
    ];

    #[test]
    fn quarter_period_values() {
        assert!((complete_k(0.0f64).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        for (k, want) in K_REF {
            let got = complete_k(k).unwrap();
            assert!((got - want).abs() < 1e-14 * want, "K({k}) = {got}");
        }
        assert_eq!(complete_k(1.0f64), Err(Error::InfinitePeriod));
        assert!(complete_k(1.5f64).is_err());
        assert!(complete_k(-0.1f64).is_err());
    }

    #[test]
    fn quarter_period_matches_quadrature() {
        for k in [0.0, 0.3, 0.8, 0.95] {
            let q = quadrature::integrate(
                |t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(),
                0.0,
                std::f64::consts::FRAC_PI_2,
                1e-14,
            )
            .unwrap();
            assert!((q.value - complete_k(k).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_reference_values() {
        for (u, k, sn, cn, dn) in JAC_REF {
            let (s, c, d) = jacobi(u, k).unwrap();
            assert!((s - sn).abs() < 1e-13, "sn({u},{k})");
            assert!((c - cn).abs() < 1e-13, "cn({u},{k})");
            assert!((d - dn).abs() < 1e-13, "dn({u},{k})");
        }
    }

    #[test]
    fn degenerate_moduli() {
        for u in [-3.0, -0.4, 0.0, 1.1, 7.5] {
            let (s, c, d) = jacobi(u, 0.0f64).unwrap();
            assert!((c - f64::cos(u)).abs() < 1e-13 && (s - f64::sin(u)).abs() < 1e-13 && d == 1.0);
            let (_, c1, d1) = jacobi(u, 1.0f64).unwrap();
            assert!((c1 - sech(u)).abs() < 1e-13 && (d1 - sech(u)).abs() < 1e-13);
        }
        assert_eq!(jacobi(0.0, 0.7f64).unwrap(), (0.0, 1.0, 1.0));
    }

    #[test]
    fn cn_vanishes_at_quarter_period() {
        for k in [0.1f64, 0.5, 0.9] {
            let kk = complete_k(k).unwrap();
            assert!(cn(kk, k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn periods_of_cn_and_dn() {
        for (u, k) in [(0.37f64, 0.3f64), (-2.1, 0.8), (5.0, 0.95)] {
            let kk = complete_k(k).unwrap();
            assert!((cn(u + 4.0 * kk, k).unwrap() - cn(u, k).unwrap()).abs() < 1e-11);
            assert!((dn(u + 2.0 * kk, k).unwrap() - dn(u, k).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn inverses_round_trip() {
        for k in [0.0f64, 0.2, 0.7, 0.999] {
            let kk = complete_k(k).unwrap();
            assert!(inverse_cn(1.0, k).unwrap().abs() < 1e-15);
            assert!((inverse_cn(0.0, k).unwrap() - kk).abs() < 1e-13);
            for x in [-0.9, -0.2, 0.1, 0.6, 0.99] {
                let u = inverse_cn(x, k).unwrap();
                assert!((0.0..=2.0 * kk + 1e-12).contains(&u));
                assert!((cn(u, k).unwrap() - x).abs() < 1e-11);
            }
        }
        for k in [0.3f64, 0.9] {
            assert!(inverse_dn(1.0, k).unwrap().abs() < 1e-15);
            let kp = (1.0f64 - k * k).sqrt();
            for x in [kp, 0.5 * (kp + 1.0), 0.999] {
                let u = inverse_dn(x, k).unwrap();
                assert!((dn(u, k).unwrap() - x).abs() < 1e-11);
            }
            assert!(inverse_dn(0.5 * kp, k).is_err());
        }
        assert!(inverse_cn(1.2, 0.5).is_err());
        assert!((inverse_cn(sech(0.8f64), 1.0).unwrap() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_helpers() {
        assert_eq!(artanh(0.0f64).unwrap(), 0.0);
        assert_eq!(sech(0.0f64), 1.0);
        assert!((artanh(0.7f64.tanh()).unwrap() - 0.7).abs() < 1e-14);
        assert!(artanh(1.0f64).is_err());
    }

    #[test]
    fn single_precision() {
        let (s, c, d) = jacobi(0.3f32, 0.5).unwrap();
        assert!((s - 0.294_465_55).abs() < 1e-6);
        assert!((c - 0.955_662_1).abs() < 1e-6);
        assert!((d - 0.989_101_9).abs() < 1e-6);
        assert!((complete_k(0.8f32).unwrap() - 1.995_302_8).abs() < 1e-5);
    }
}
