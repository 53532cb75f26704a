//! Bracketed bisection and adaptive Gauss–Kronrod quadrature.

use crate::error::{require, Error, Result};

/// Relative tolerance of [`bisect`] unless stated otherwise.
pub const ROOT_REL_TOL: f64 = 1e-10;
pub const MAX_BISECTIONS: usize = 400;

/// Finds a root of `f` on `[lo, hi]` by bisection. `f(lo)` and `f(hi)`
/// must differ in sign. Stops once the bracket is narrower than
/// `rel_tol · |midpoint|`.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    require(lo < hi, || format!("bracket [{lo:e}, {hi:e}] is empty"))?;
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_tol * mid.abs() {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_BISECTIONS,
    })
}

/// Grows a bracket around a sign change of `f` on the positive axis by
/// doubling and halving a positive initial `guess`.
pub fn bracket_positive<F>(f: F, guess: f64, max_steps: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    require(guess.is_finite() && guess > 0.0, || {
        format!("initial guess must be positive, got {guess}")
    })?;
    let f0 = f(guess);
    require(!f0.is_nan(), || {
        format!("function undefined at initial guess {guess:e}")
    })?;
    let s0 = f0.signum();
    if f0 == 0.0 {
        return Ok((guess, guess));
    }
    // NaN evaluations count as "no sign change"
    let flips = |x: f64| f(x).signum() == -s0;
    let (mut down, mut up) = (guess, guess);
    for _ in 0..max_steps {
        let next_up = up * 2.0;
        if next_up.is_finite() && flips(next_up) {
            return Ok((up, next_up));
        }
        up = next_up.min(f64::MAX);
        let next_down = down * 0.5;
        if next_down > 0.0 && flips(next_down) {
            return Ok((next_down, down));
        }
        down = next_down.max(f64::MIN_POSITIVE);
    }
    Err(Error::RootNotBracketed { lo: down, hi: up })
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]`, refining the
/// worst interval until the summed error estimate drops below
/// `max(abs_tol, rel_tol · |I|)`.
pub fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    require(a.is_finite() && b.is_finite(), || {
        "integration limits must be finite".into()
    })?;
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            intervals: 0,
        });
    }
    let (first, err) = gauss_kronrod_15(&f, a, b);
    let mut intervals = vec![(a, b, first, err)];
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error_estimate: error,
                intervals: intervals.len(),
            });
        }
        if intervals.len() >= max_intervals {
            return Err(Error::NoConvergence {
                iterations: intervals.len(),
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (left, el) = gauss_kronrod_15(&f, lo, mid);
        let (right, er) = gauss_kronrod_15(&f, mid, hi);
        intervals.push((lo, mid, left, el));
        intervals.push((mid, hi, right, er));
    }
}
