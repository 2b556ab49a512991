//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

fn kronrod<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = T::c(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut gauss = fc * T::c(WG[3]);
    let mut kron = fc * T::c(WGK[7]);
    for j in 0..7 {
        let dx = h * T::c(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + T::c(WGK[j]) * s;
        if j % 2 == 1 {
            gauss = gauss + T::c(WG[j / 2]) * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by bisecting the
/// interval with the largest error estimate.
pub fn integrate<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<Quad<T>> {
    if a == b {
        return Ok(Quad { value: T::zero(), error: T::zero(), evaluations: 0 });
    }
    let (v0, e0) = kronrod(&f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    let mut evals = 15;
    loop {
        let total_err = parts.iter().fold(T::zero(), |s, p| s + p.3);
        let total = parts.iter().fold(T::zero(), |s, p| s + p.2);
        if !total.is_finite() {
            return Err(Error::Argument("integrand is not finite".into()));
        }
        if total_err <= tol {
            return Ok(Quad { value: total, error: total_err, evaluations: evals });
        }
        if parts.len() >= MAX_INTERVALS {
            log::warn!("quadrature stopped at {} intervals, error {}", parts.len(), total_err);
            return Ok(Quad { value: total, error: total_err, evaluations: evals });
        }
        let (idx, _) =
            parts
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = T::c(0.5) * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            // interval cannot be split further
            return Ok(Quad { value: total, error: total_err, evaluations: evals });
        }
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        evals += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}
