//! Adaptive Gauss–Kronrod (7/15) quadrature in one and two dimensions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-10, max_subdivisions: 1 << 20 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    /// Estimated absolute error.
    pub error: T,
    pub intervals: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T: Real> Eq for Panel<T> {}

impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gk15<T: Real, F: FnMut(T) -> Result<T>>(f: &mut F, a: T, b: T) -> Result<Panel<T>> {
    let two = lit::<T>(2.0);
    let c = (a + b) / two;
    let h = (b - a) / two;
    let fc = f(c)?;
    let mut kronrod = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for i in 0..7 {
        let dx = h * lit(XGK[i]);
        let pair = f(c - dx)? + f(c + dx)?;
        kronrod = kronrod + pair * lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + pair * lit(WG[i / 2]);
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).abs();
    Ok(Panel { a, b, value, error })
}

/// Integrates a fallible integrand; the error of the integrand is propagated unchanged.
pub fn integrate_with<T: Real, F: FnMut(T) -> Result<T>>(mut f: F, a: T, b: T, cfg: &QuadConfig) -> Result<QuadResult<T>> {
    let tol = lit::<T>(cfg.abs_tol);
    let first = gk15(&mut f, a, b)?;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    // Panels whose own error is at rounding level cannot be improved by splitting.
    let floor = T::epsilon() * lit(50.0);
    while error > tol {
        if heap.len() >= cfg.max_subdivisions {
            return Err(Error::Quadrature { achieved: to_f64(error), requested: cfg.abs_tol });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        if worst.error <= floor * worst.value.abs().max(T::one()) * (worst.b - worst.a).abs() {
            heap.push(worst);
            break;
        }
        let mid = (worst.a + worst.b) / lit(2.0);
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        error = error - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
    }
    let value_sum = heap.iter().fold(T::zero(), |s, p| s + p.value);
    let error_sum = heap.iter().fold(T::zero(), |s, p| s + p.error);
    if error_sum > tol && heap.len() >= cfg.max_subdivisions {
        return Err(Error::Quadrature { achieved: to_f64(error_sum), requested: cfg.abs_tol });
    }
    Ok(QuadResult { value: value_sum, error: error_sum, intervals: heap.len() })
}

pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, cfg: &QuadConfig) -> Result<QuadResult<T>> {
    integrate_with(|x| Ok(f(x)), a, b, cfg)
}

/// `int_{x0}^{x1} int_{y0}^{y1} f(x, y) dy dx` by nesting the 1D rule.
///
/// The inner tolerance is scaled so that the accumulated inner error stays
/// within the requested absolute tolerance.
pub fn integrate_2d<T: Real, F: Fn(T, T) -> T>(f: F, x: (T, T), y: (T, T), cfg: &QuadConfig) -> Result<QuadResult<T>> {
    let width = to_f64((x.1 - x.0).abs()).max(1.0);
    let inner_cfg = QuadConfig { abs_tol: cfg.abs_tol / (2.0 * width), ..*cfg };
    let outer_cfg = QuadConfig { abs_tol: cfg.abs_tol / 2.0, ..*cfg };
    let mut inner_error = T::zero();
    let outer = integrate_with(
        |xv| {
            let r = integrate(|yv| f(xv, yv), y.0, y.1, &inner_cfg)?;
            inner_error = inner_error.max(r.error);
            Ok(r.value)
        },
        x.0,
        x.1,
        &outer_cfg,
    )?;
    Ok(QuadResult {
        value: outer.value,
        error: outer.error + inner_error * (x.1 - x.0).abs(),
        intervals: outer.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_exact() {
        let r = integrate(|x: f64| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, &QuadConfig::default()).unwrap();
        let want = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((r.value - want).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let cfg = QuadConfig::default();
        let r = integrate(|x: f64| (20.0 * x).sin() * x, 0.0, PI, &cfg).unwrap();
        assert!((r.value - (-PI / 20.0)).abs() < 1e-10);
        let r = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, &cfg).unwrap();
        let want = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - want).abs() < 1e-8 * want);
        assert!(r.intervals > 1);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = QuadConfig { abs_tol: 1e-14, max_subdivisions: 4 };
        let err = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Quadrature { requested, .. } if requested == 1e-14));
    }

    #[test]
    fn two_dimensional() {
        let r = integrate_2d(|x: f64, y: f64| (x + y).cos(), (0.0, PI), (0.0, PI / 2.0), &QuadConfig::default()).unwrap();
        // int_0^pi [sin(x + pi/2) - sin(x)] dx = 0 - 2
        assert!((r.value + 2.0).abs() < 1e-10);
    }
}
