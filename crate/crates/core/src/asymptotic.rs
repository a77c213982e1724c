//! Single-photon asymptotic key rate.

use crate::channel::ChannelParams;
use crate::error::{check_range, Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// `-x log2 x - (1-x) log2(1-x)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Real>(x: T) -> Result<T> {
    check_range("x", to_f64(x), 0.0, 1.0, "[0, 1]")?;
    Ok(entropy_unchecked(x))
}

fn entropy_unchecked<T: Real>(x: T) -> T {
    let term = |p: T| if p <= T::zero() { T::zero() } else { -p * p.log2() };
    term(x) + term(T::one() - x)
}

/// `h(min(x, 1/2))`: the entropy cost used in rate formulas.
///
/// An error rate above one half carries no less information than one at one
/// half; without the cap the rate would revive as `e -> 1`.
pub fn capped_entropy<T: Real>(x: T) -> T {
    let half = lit::<T>(0.5);
    entropy_unchecked(x.max(T::zero()).min(half))
}

/// Dark-count-only part of `Y11 / (8 (1-p)^4)`.
fn dark_terms<T: Real>(p: &ChannelParams<T>) -> T {
    let (ea, eb, pd) = (p.eta_a, p.eta_b, p.p_dark);
    pd * ((ea + eb) / lit(3.0) - lit::<T>(5.0) * ea * eb / lit(9.0)) + pd * pd * (T::one() - ea) * (T::one() - eb)
}

fn dark_prefactor<T: Real>(p: &ChannelParams<T>) -> T {
    lit::<T>(8.0) * (T::one() - p.p_dark).powi(4)
}

/// `Y11 = 8(1-p)^4 [eta_a eta_b / 18 + p((eta_a + eta_b)/3 - 5 eta_a eta_b / 9) + p^2 (1-eta_a)(1-eta_b)]`.
pub fn yield_y11<T: Real>(p: &ChannelParams<T>) -> T {
    dark_prefactor(p) * (p.eta_a * p.eta_b / lit(18.0) + dark_terms(p))
}

/// `e_b Y11` with misalignment on the signal term and dark terms counted in full.
pub fn error_yield<T: Real>(p: &ChannelParams<T>) -> T {
    dark_prefactor(p) * (p.e_d * p.eta_a * p.eta_b / lit(18.0) + dark_terms(p))
}

/// `e_b' Y11`: the dark-count contribution alone.
pub fn background_error_yield<T: Real>(p: &ChannelParams<T>) -> T {
    dark_prefactor(p) * dark_terms(p)
}

/// `(e_b, e_b_background)`.
pub fn qber_asymptotic<T: Real>(p: &ChannelParams<T>) -> Result<(T, T)> {
    let y = yield_y11(p);
    if y <= T::zero() {
        return Err(Error::ZeroDenominator("Y11"));
    }
    Ok((error_yield(p) / y, background_error_yield(p) / y))
}

/// QBER when dark-count coincidences are right or wrong with equal odds.
///
/// This is what an event-level simulation with independent dark clicks
/// produces; [`qber_asymptotic`] counts every dark-induced event as an error.
pub fn qber_half_dark<T: Real>(p: &ChannelParams<T>) -> Result<T> {
    let y = yield_y11(p);
    if y <= T::zero() {
        return Err(Error::ZeroDenominator("Y11"));
    }
    let e = dark_prefactor(p) * (p.e_d * p.eta_a * p.eta_b / lit(18.0) + dark_terms(p) / lit(2.0));
    Ok(e / y)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticReport<T> {
    pub y11: T,
    pub e_b: T,
    pub e_b_background: T,
    pub e_p_bound: T,
    /// `max(0, rate_unclamped)`.
    pub rate: T,
    pub rate_unclamped: T,
}

/// `R = Y11 [1 - f h(e_b) - h(e_p)]` with `e_p = e_b`.
///
/// When `Y11 = 0` no error rate is defined; the report then carries
/// `e_b = 1/2` and a zero rate.
pub fn secure_rate<T: Real>(p: &ChannelParams<T>) -> AsymptoticReport<T> {
    let y11 = yield_y11(p);
    let (e_b, e_bg) = qber_asymptotic(p).unwrap_or((lit(0.5), lit(0.5)));
    let e_p = e_b;
    let raw = y11 * (T::one() - p.f * capped_entropy(e_b) - capped_entropy(e_p));
    AsymptoticReport { y11, e_b, e_b_background: e_bg, e_p_bound: e_p, rate: raw.max(T::zero()), rate_unclamped: raw }
}

/// Error threshold of the three-pulse single-photon DPS rate with ideal error correction.
pub const DPS3_THRESHOLD: f64 = 0.0412;

/// Phase-error multiplier `k` such that `1 - h(t) - h(k t) = 0` at `t = DPS3_THRESHOLD`.
pub fn dps3_phase_factor() -> f64 {
    let t = DPS3_THRESHOLD;
    let target = 1.0 - entropy_unchecked(t);
    // h(k t) is increasing in k while k t < 1/2.
    let (mut lo, mut hi) = (1.0, 0.5 / t);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if entropy_unchecked(mid * t) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Non-MDI three-pulse DPS reference rate, single-photon source.
///
/// The whole link of transmittance `eta` (detector included) sits between
/// sender and receiver. Gain `Q = eta/2 + 2 p_dark`, error
/// `E = (e_d eta/2 + p_dark) / Q` (dark clicks random), and
/// `R = Q [1 - f h(E) - h(k E)]` with `k` from [`dps3_phase_factor`].
pub fn dps_reference_rate<T: Real>(eta: T, p: &ChannelParams<T>) -> T {
    let half = lit::<T>(0.5);
    let q = eta * half + lit::<T>(2.0) * p.p_dark;
    if q <= T::zero() {
        return T::zero();
    }
    let e = (p.e_d * eta * half + p.p_dark) / q;
    let k = lit::<T>(dps3_phase_factor());
    (q * (T::one() - p.f * capped_entropy(e) - capped_entropy(k * e))).max(T::zero())
}

/// First distance in `[0, max]` where `rate` stops being positive, located to `tol`.
///
/// Scans upward in `step` increments, then bisects the bracketing step.
/// Returns `None` if the rate is positive over the whole range.
pub fn first_cutoff(rate: impl Fn(f64) -> f64, step: f64, max: f64, tol: f64) -> Option<f64> {
    if rate(0.0) <= 0.0 {
        return Some(0.0);
    }
    let mut lo = 0.0;
    while lo < max {
        let hi = (lo + step).min(max);
        if rate(hi) <= 0.0 {
            let (mut a, mut b) = (lo, hi);
            while b - a > tol {
                let m = 0.5 * (a + b);
                if rate(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        lo = hi;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, p_dark: f64, e_d: f64) -> ChannelParams<f64> {
        ChannelParams { p_dark, e_d, ..ChannelParams::default() }.with_eta(eta, eta)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5f64).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0f64).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0f64).unwrap(), 0.0);
        assert!((binary_entropy(0.11f64).unwrap() - 0.4999).abs() < 1e-3);
        assert!(binary_entropy(1.5f64).is_err());
        assert!(binary_entropy(-0.1f64).is_err());
        assert_eq!(capped_entropy(0.9f64), 1.0);
    }

    #[test]
    fn yield_examples() {
        let p = params(0.3, 0.0, 0.0).with_eta(0.3, 0.7);
        assert!((yield_y11(&p) - 4.0 / 9.0 * 0.21).abs() < 1e-15);
        let pd = 3e-6;
        let p = params(0.0, pd, 0.0);
        assert!((yield_y11(&p) - 8.0 * (1.0 - pd).powi(4) * pd * pd).abs() < 1e-25);
    }

    #[test]
    fn qber_examples() {
        let p = params(0.2, 0.0, 0.015);
        assert!((qber_asymptotic(&p).unwrap().0 - 0.015).abs() < 1e-15);
        let p = params(0.0, 3e-6, 0.015);
        assert!((qber_asymptotic(&p).unwrap().0 - 1.0).abs() < 1e-12);
        assert!((qber_half_dark(&p).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(qber_asymptotic(&params(0.0, 0.0, 0.0)), Err(Error::ZeroDenominator("Y11")));
    }

    #[test]
    fn qber_grows_with_distance() {
        let base = ChannelParams::<f64>::default();
        let mut last = 0.0;
        for l in (0..=300).step_by(10) {
            let (e, bg) = qber_asymptotic(&base.at_distance(0.145, l as f64)).unwrap();
            assert!(e > last && bg <= e);
            last = e;
        }
    }

    #[test]
    fn ideal_rate_is_yield() {
        let p = ChannelParams::<f64>::ideal().with_eta(0.4, 0.6);
        let r = secure_rate(&p);
        assert_eq!(r.rate, r.y11);
        assert!((r.rate - 4.0 / 9.0 * 0.24).abs() < 1e-15);
    }

    #[test]
    fn rate_clamps() {
        let p = params(1e-6, 3e-6, 0.015);
        let r = secure_rate(&p);
        assert_eq!(r.rate, 0.0);
        assert!(r.rate_unclamped < 0.0);
    }

    #[test]
    fn phase_factor_matches_threshold() {
        let k = dps3_phase_factor();
        let t = DPS3_THRESHOLD;
        assert!((1.0 - entropy_unchecked(t) - entropy_unchecked(k * t)).abs() < 1e-12);
    }

    #[test]
    fn dps_reference_lossless_and_monotone() {
        let p = ChannelParams::<f64>::ideal();
        assert_eq!(dps_reference_rate(1.0, &p), 0.5);
        let p = ChannelParams::<f64>::default();
        let mut last = f64::INFINITY;
        for l in 0..200 {
            let r = dps_reference_rate(0.145 * crate::channel::fiber_transmittance(0.2, l as f64), &p);
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn cutoff_scan() {
        let c = first_cutoff(|l| 100.0 - l, 7.0, 1000.0, 1e-9).unwrap();
        assert!((c - 100.0).abs() < 1e-8);
        assert_eq!(first_cutoff(|_| 1.0, 1.0, 10.0, 1e-3), None);
        assert_eq!(first_cutoff(|_| -1.0, 1.0, 10.0, 1e-3), Some(0.0));
    }
}
