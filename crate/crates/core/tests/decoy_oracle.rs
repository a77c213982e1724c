//! Coherent-state gains against direct averages of the click model.
//!
//! Over a full period the midpoint rule converges geometrically; the slices use
//! composite Simpson.

use std::f64::consts::PI;

use dpsmdi::channel::ChannelParams;
use dpsmdi::decoy::{overall_error_gain, overall_gain, sliced_gain_qber, SliceConfig};
use dpsmdi::quadrature::QuadConfig;

/// Per-realization gain and error gain written from the click probabilities
/// `1 - y e^{-+x cos(.)}`: one click in bin 1, one in bin 2 or 3, and the
/// remaining bin dark on both detectors (probability `y^2`).
fn per_realization(x: f64, y: f64, dtheta: f64) -> (f64, f64) {
    // Detector `s` (+1 for c, -1 for d) clicks and its partner stays silent.
    let only = |s: f64, c: f64| (1.0 - y * (-s * x * c).exp()) * y * (s * x * c).exp();
    let (mut g, mut e) = (0.0, 0.0);
    for _other_bin in [2, 3] {
        for (s1, s2) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            for dphi in [0.0, PI] {
                let p = only(s1, dtheta.cos()) * only(s2, (dtheta + dphi).cos()) * y * y;
                // Equal key bits (dphi = 0) show up as same-detector pairs.
                if (dphi == 0.0) == (s1 == s2) {
                    g += p;
                } else {
                    e += p;
                }
            }
        }
    }
    (g, e)
}

fn intermediates(mu_a: f64, mu_b: f64, p: &ChannelParams<f64>) -> (f64, f64) {
    let (sa, sb) = (p.eta_a * mu_a, p.eta_b * mu_b);
    ((sa * sb).sqrt() / 3.0, (1.0 - p.p_dark) * (-(sa + sb) / 6.0).exp())
}

/// Composite Simpson in both variables with `n` (even) panels per side.
fn simpson_2d(f: impl Fn(f64, f64) -> f64, a: (f64, f64), b: (f64, f64), n: usize) -> f64 {
    let (ha, hb) = ((a.1 - a.0) / n as f64, (b.1 - b.0) / n as f64);
    let w = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
    let mut s = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            s += w(i) * w(j) * f(a.0 + i as f64 * ha, b.0 + j as f64 * hb);
        }
    }
    s * ha * hb / 9.0
}

fn midpoint_2d(f: impl Fn(f64, f64) -> f64, a: (f64, f64), b: (f64, f64), n: usize) -> f64 {
    let (ha, hb) = ((a.1 - a.0) / n as f64, (b.1 - b.0) / n as f64);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += f(a.0 + (i as f64 + 0.5) * ha, b.0 + (j as f64 + 0.5) * hb);
        }
    }
    s * ha * hb
}

#[test]
fn full_average_matches_bessel_forms() {
    for &(mu_a, mu_b, ea, eb) in &[(0.5, 0.5, 0.1, 0.1), (0.2, 0.9, 0.5, 0.02), (1.0, 0.1, 1.0, 1.0)] {
        let p = ChannelParams::<f64>::default().with_eta(ea, eb);
        let (x, y) = intermediates(mu_a, mu_b, &p);
        let full = (0.0, 2.0 * PI);
        let w = 1.0 / (4.0 * PI * PI);
        let g = midpoint_2d(|ta, tb| per_realization(x, y, ta - tb).0, full, full, 200) * w;
        let e = midpoint_2d(|ta, tb| per_realization(x, y, ta - tb).1, full, full, 200) * w;
        let q = overall_gain(mu_a, mu_b, &p);
        let eq = overall_error_gain(mu_a, mu_b, &p);
        assert!((g - q).abs() < 1e-10 * q, "{g} vs {q}");
        assert!((e - eq).abs() < 1e-10 * eq, "{e} vs {eq}");
    }
}

#[test]
fn slices_match_simpson_rule() {
    let p = ChannelParams::<f64>::default().at_distance(0.145, 50.0);
    let (x, y) = intermediates(0.5, 0.5, &p);
    for n in [1u32, 4, 16] {
        let mut total = 0.0;
        for m in 0..n {
            let s = SliceConfig::new(n, m).unwrap();
            let (a0, a1) = s.theta_range::<f64>();
            let w = n as f64 / (PI * PI);
            let g = simpson_2d(|tb, ta| per_realization(x, y, ta - tb).0, (0.0, PI / n as f64), (a0, a1), 300) * w;
            let e = simpson_2d(|tb, ta| per_realization(x, y, ta - tb).1, (0.0, PI / n as f64), (a0, a1), 300) * w;
            let got = sliced_gain_qber(0.5, 0.5, &p, s, &QuadConfig::default()).unwrap();
            assert!((got.gain - g).abs() < 1e-8 * g, "N={n} m={m}");
            assert!((got.qber - e / g).abs() < 1e-7 * (e / g), "N={n} m={m}");
            assert!(got.gain <= overall_gain(0.5, 0.5, &p) * (1.0 + 1e-12));
            total += got.gain;
        }
        assert!((total - overall_gain(0.5, 0.5, &p)).abs() < 1e-9 * total);
    }
}
