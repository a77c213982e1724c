//! Phase-randomized weak coherent sources: click probabilities, gains and
//! QBERs in closed form and per phase slice, and the decoy-state key rate.

use num_complex::Complex;

use crate::asymptotic::{capped_entropy, qber_asymptotic, yield_y11};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::fock::{cis, PhaseSetting};
use crate::quadrature::{integrate_2d, QuadConfig};
use crate::scalar::{lit, Real};
use crate::sifting::{table_one_outcomes, sift, KeyPhase, SiftDecision};
use crate::special::bessel_i0m1;

/// `mu' = eta_a mu_a + eta_b mu_b`, `x = sqrt(eta_a mu_a eta_b mu_b)/3`, `y = (1-p_dark) e^{-mu'/6}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoyIntermediates<T> {
    pub mu_prime: T,
    pub x: T,
    pub y: T,
}

impl<T: Real> DecoyIntermediates<T> {
    pub fn new(mu_a: T, mu_b: T, p: &ChannelParams<T>) -> Self {
        let (sa, sb) = (p.eta_a * mu_a, p.eta_b * mu_b);
        let mu_prime = sa + sb;
        Self { mu_prime, x: (sa * sb).sqrt() / lit(3.0), y: (T::one() - p.p_dark) * (-mu_prime / lit(6.0)).exp() }
    }
}

/// Click probability of each detector in each time-bin, index `bin - 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickProbabilities<T> {
    pub c: [T; 3],
    pub d: [T; 3],
}

impl<T: Real> ClickProbabilities<T> {
    fn by_bit(&self, bit: u8) -> T {
        let b = bit as usize;
        if b < 3 {
            self.c[b]
        } else {
            self.d[b - 3]
        }
    }

    /// Probability that exactly the detectors/bins in `mask` click.
    pub fn exact_pattern(&self, mask: u8) -> T {
        (0..6u8).fold(T::one(), |acc, bit| {
            let p = self.by_bit(bit);
            acc * if mask & (1 << bit) != 0 { p } else { T::one() - p }
        })
    }
}

/// Click probabilities from the coherent amplitudes arriving at each detector.
pub fn click_probabilities<T: Real>(
    mu_a: T,
    mu_b: T,
    p: &ChannelParams<T>,
    ps: &PhaseSetting<T>,
    theta_a: T,
    theta_b: T,
) -> ClickProbabilities<T> {
    let six = lit::<T>(6.0);
    let amp_a = (p.eta_a * mu_a / six).sqrt();
    let amp_b = (p.eta_b * mu_b / six).sqrt();
    let phases_a = [T::zero(), ps.phi_a1, ps.phi_a2];
    let phases_b = [T::zero(), ps.phi_b1, ps.phi_b2];
    let keep = T::one() - p.p_dark;
    let click = |z: Complex<T>| T::one() - keep * (-z.norm_sqr()).exp();
    let mut out = ClickProbabilities { c: [T::zero(); 3], d: [T::zero(); 3] };
    for k in 0..3 {
        let a = cis(phases_a[k] + theta_a) * amp_a;
        let b = cis(phases_b[k] + theta_b) * amp_b;
        out.c[k] = click(a + b);
        out.d[k] = click(a - b);
    }
    out
}

/// The same probabilities through `1 - y e^{-+x cos(dtheta + dphi)}`.
pub fn click_probabilities_simplified<T: Real>(
    v: &DecoyIntermediates<T>,
    delta_theta: T,
    dphi1: T,
    dphi2: T,
) -> ClickProbabilities<T> {
    let shifts = [T::zero(), dphi1, dphi2];
    let mut out = ClickProbabilities { c: [T::zero(); 3], d: [T::zero(); 3] };
    for k in 0..3 {
        let xc = v.x * (delta_theta + shifts[k]).cos();
        out.c[k] = T::one() - v.y * (-xc).exp();
        out.d[k] = T::one() - v.y * xc.exp();
    }
    out
}

/// The eight kept click patterns with the phase difference that makes them correct.
fn keep_patterns() -> Vec<(u8, KeyPhase, bool)> {
    table_one_outcomes()
        .into_iter()
        .filter_map(|o| match sift(&o) {
            SiftDecision::Keep { phase, bit_flip } => Some((o.mask(), phase, bit_flip)),
            _ => None,
        })
        .collect()
}

/// Sum over the kept patterns, each with its phase difference set to `pi * flip` (gain)
/// or `pi * !flip` (error). The other phase difference does not enter a pattern's probability.
fn pattern_sum<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>, theta_a: T, theta_b: T, error: bool) -> T {
    keep_patterns().into_iter().fold(T::zero(), |acc, (mask, phase, flip)| {
        let dphi = if flip ^ error { T::PI() } else { T::zero() };
        let ps = match phase {
            KeyPhase::Delta1 => PhaseSetting::new(dphi, T::zero(), T::zero(), T::zero()),
            KeyPhase::Delta2 => PhaseSetting::new(T::zero(), dphi, T::zero(), T::zero()),
        };
        acc + click_probabilities(mu_a, mu_b, p, &ps, theta_a, theta_b).exact_pattern(mask)
    })
}

/// Gain for fixed global phases, summed pattern by pattern.
pub fn gain_pattern_sum<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>, theta_a: T, theta_b: T) -> T {
    pattern_sum(mu_a, mu_b, p, theta_a, theta_b, false)
}

/// Error-weighted gain `E'Q` for fixed global phases, summed pattern by pattern.
pub fn error_pattern_sum<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>, theta_a: T, theta_b: T) -> T {
    pattern_sum(mu_a, mu_b, p, theta_a, theta_b, true)
}

/// `4y^4 [e^{2xc} + e^{-2xc} - 2y e^{xc} - 2y e^{-xc} + 2y^2]` at `c = cos(dtheta)`.
pub fn gain_integrand<T: Real>(v: &DecoyIntermediates<T>, cos_dtheta: T) -> T {
    let (y, xc) = (v.y, v.x * cos_dtheta);
    let two = lit::<T>(2.0);
    lit::<T>(4.0) * y.powi(4) * ((two * xc).exp() + (-two * xc).exp() - two * y * (xc.exp() + (-xc).exp()) + two * y * y)
}

/// `8y^4 [1 - y e^{xc} - y e^{-xc} + y^2]` at `c = cos(dtheta)`.
pub fn error_integrand<T: Real>(v: &DecoyIntermediates<T>, cos_dtheta: T) -> T {
    let (y, xc) = (v.y, v.x * cos_dtheta);
    lit::<T>(8.0) * y.powi(4) * (T::one() - y * (xc.exp() + (-xc).exp()) + y * y)
}

/// `Q = 8y^4 [I0(2x) - 2y I0(x) + y^2]`.
///
/// Evaluated as `(I0(2x) - 1) - 2y (I0(x) - 1) + (1-y)^2` so that low-loss,
/// low-intensity points do not cancel; at `x = 0` it is exactly `8y^4 (1-y)^2`.
pub fn overall_gain<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>) -> T {
    let v = DecoyIntermediates::new(mu_a, mu_b, p);
    let two = lit::<T>(2.0);
    let one_minus_y = T::one() - v.y;
    lit::<T>(8.0) * v.y.powi(4) * (bessel_i0m1(two * v.x) - two * v.y * bessel_i0m1(v.x) + one_minus_y * one_minus_y)
}

/// `E'Q = 8y^4 [1 - 2y I0(x) + y^2]`, evaluated as `(1-y)^2 - 2y (I0(x) - 1)`.
pub fn overall_error_gain<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>) -> T {
    let v = DecoyIntermediates::new(mu_a, mu_b, p);
    let one_minus_y = T::one() - v.y;
    lit::<T>(8.0) * v.y.powi(4) * (one_minus_y * one_minus_y - lit::<T>(2.0) * v.y * bessel_i0m1(v.x))
}

/// `E' = (E'Q) / Q`.
pub fn overall_qber<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>) -> Result<T> {
    let q = overall_gain(mu_a, mu_b, p);
    if q <= T::zero() {
        return Err(Error::ZeroDenominator("overall gain"));
    }
    Ok(overall_error_gain(mu_a, mu_b, p) / q)
}

/// Slice `m` of `n`: global phases in `[m pi/n, (m+1) pi/n)` and its antipodal copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SliceConfig {
    n: u32,
    m: u32,
}

impl SliceConfig {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange { name: "N_slices", value: 0.0, range: "N >= 1" });
        }
        if m >= n {
            return Err(Error::OutOfRange { name: "slice index", value: m as f64, range: "0..N" });
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// `[m pi/N, (m+1) pi/N)`.
    pub fn theta_range<T: Real>(&self) -> (T, T) {
        let w = T::PI() / lit(self.n as f64);
        (w * lit(self.m as f64), w * lit(self.m as f64 + 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicedGain<T> {
    pub gain: T,
    pub error_gain: T,
    /// `error_gain / gain`.
    pub qber: T,
    /// Combined quadrature error estimate of the two integrals.
    pub quad_error: T,
}

/// `Q^m` and `E^m Q^m`: the per-realization integrands averaged with Bob's phase
/// over `[0, pi/N)` and Alice's over slice `m`, weighted `(N/pi)(1/pi)`.
pub fn sliced_gain_qber<T: Real>(
    mu_a: T,
    mu_b: T,
    p: &ChannelParams<T>,
    slice: SliceConfig,
    cfg: &QuadConfig,
) -> Result<SlicedGain<T>> {
    let v = DecoyIntermediates::new(mu_a, mu_b, p);
    let n = lit::<T>(slice.n as f64);
    let weight = n / (T::PI() * T::PI());
    // The integrals are scaled by `weight` afterwards; ask for the matching absolute accuracy.
    let inner_cfg = QuadConfig { abs_tol: cfg.abs_tol / crate::scalar::to_f64(weight), ..*cfg };
    let theta_b = (T::zero(), T::PI() / n);
    let theta_a = slice.theta_range::<T>();
    let g = integrate_2d(|tb, ta| gain_integrand(&v, (ta - tb).cos()), theta_b, theta_a, &inner_cfg)?;
    let e = integrate_2d(|tb, ta| error_integrand(&v, (ta - tb).cos()), theta_b, theta_a, &inner_cfg)?;
    let gain = g.value * weight;
    let error_gain = e.value * weight;
    if gain <= T::zero() {
        return Err(Error::ZeroDenominator("sliced gain"));
    }
    Ok(SlicedGain { gain, error_gain, qber: error_gain / gain, quad_error: (g.error + e.error) * weight })
}

/// `Q11 = mu_a mu_b e^{-mu_a - mu_b} Y11`.
pub fn gain_q11<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>) -> T {
    mu_a * mu_b * (-mu_a - mu_b).exp() * yield_y11(p)
}

/// `Q'_0 = e^{-mu_a} 8 y0^4 (1 - y0)^2` with `y0 = (1-p_dark) e^{-eta_b mu_b / 6}`.
pub fn vacuum_term<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>) -> T {
    let y0 = (T::one() - p.p_dark) * (-p.eta_b * mu_b / lit(6.0)).exp();
    (-mu_a).exp() * lit::<T>(8.0) * y0.powi(4) * (T::one() - y0).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoyReport<T> {
    pub q_mu: T,
    pub e_mu: T,
    pub q11: T,
    /// Single-photon QBER, also used as the phase-error bound.
    pub e11: T,
    pub q_m0: T,
    pub e_m0: T,
    pub vacuum: T,
    pub rate: T,
    pub rate_unclamped: T,
}

fn single_photon_qber<T: Real>(p: &ChannelParams<T>) -> T {
    qber_asymptotic(p).map(|(e, _)| e).unwrap_or(lit(0.5))
}

/// `R = (1/N) Q11 [1 - h(e_p)] + Q'_0 - Q^0 f h(E^0)` with `e_p = e11`.
pub fn decoy_key_rate<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>, n_slices: u32, cfg: &QuadConfig) -> Result<DecoyReport<T>> {
    let slice = SliceConfig::new(n_slices, 0)?;
    let s = sliced_gain_qber(mu_a, mu_b, p, slice, cfg)?;
    let q_mu = overall_gain(mu_a, mu_b, p);
    let e_mu = overall_qber(mu_a, mu_b, p)?;
    let q11 = gain_q11(mu_a, mu_b, p);
    let e11 = single_photon_qber(p);
    let vacuum = vacuum_term(mu_a, mu_b, p);
    let n = lit::<T>(n_slices as f64);
    let raw = q11 / n * (T::one() - capped_entropy(e11)) + vacuum - s.gain * p.f * capped_entropy(s.qber);
    Ok(DecoyReport {
        q_mu,
        e_mu,
        q11,
        e11,
        q_m0: s.gain,
        e_m0: s.qber,
        vacuum,
        rate: raw.max(T::zero()),
        rate_unclamped: raw,
    })
}

/// `Q11 [1 - h(e_p)] + Q'_0 - sum_m Q^m f h(E^m)`, unclamped.
pub fn decoy_rate_slice_sum_cost<T: Real>(mu_a: T, mu_b: T, p: &ChannelParams<T>, n_slices: u32, cfg: &QuadConfig) -> Result<T> {
    let mut cost = T::zero();
    for m in 0..n_slices {
        let s = sliced_gain_qber(mu_a, mu_b, p, SliceConfig::new(n_slices, m)?, cfg)?;
        cost = cost + s.gain * p.f * capped_entropy(s.qber);
    }
    let e11 = single_photon_qber(p);
    Ok(gain_q11(mu_a, mu_b, p) * (T::one() - capped_entropy(e11)) + vacuum_term(mu_a, mu_b, p) - cost)
}
