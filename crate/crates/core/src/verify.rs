//! End-to-end checks of the library against independent derivations and the
//! published qualitative claims. Used by `dpsmdi verify` and the acceptance tests.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotic::{dps_reference_rate, first_cutoff, qber_asymptotic, qber_half_dark, secure_rate, yield_y11};
use crate::channel::{fiber_transmittance, ChannelParams, DEFAULT_ETA_DET};
use crate::decoy::{
    decoy_key_rate, decoy_rate_slice_sum_cost, gain_pattern_sum, error_pattern_sum, overall_error_gain, overall_gain, overall_qber,
    sliced_gain_qber, SliceConfig,
};
use crate::finite_key::{finite_rate, optimize_rate, BudgetRule, FiniteKeyBudget, SecurityParams};
use crate::fock::{output_state, PhaseSetting};
use crate::montecarlo::run_trials;
use crate::noise::{bit_error_rate, error_gap, phase_error_rate, NoiseMatrix};
use crate::quadrature::{integrate_2d, QuadConfig};
use crate::sifting::{
    enumerate_sifting, expected_bell_state, sift, sifted_key_fraction, table_one_outcomes, verify_entanglement_mapping, AncillaBellState,
    BellLabel, DetectionOutcome, KeyPhase, SiftDecision,
};

/// Mean photon number used for the decoy-state reference point.
pub const DEFAULT_MU: f64 = 0.5;
/// Total distance of the slice-QBER reference point.
pub const SLICE_REFERENCE_KM: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// A known, documented difference; reported but not counted as a failure.
    Flagged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Flagged => "FLAGGED",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(criterion: u8, name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { criterion, name: name.into(), status, detail: detail.into() }
    }

    fn flagged(criterion: u8, name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { criterion, name: name.into(), status: Status::Flagged, detail: detail.into() }
    }
}

/// `Fail` if any check failed, else `Pass`.
pub fn overall(checks: &[Check]) -> Status {
    if checks.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    pub mc_trials: u64,
    pub seed: u64,
    pub noise_pairs: usize,
    pub bessel_draws: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { mc_trials: 10_000_000, seed: 20240917, noise_pairs: 10_000, bessel_draws: 100 }
    }
}

/// Table row read off the evolved states alone: which phase difference the
/// announcement fixes (if any) and the parity it fixes it to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DerivedRow {
    pub determined: Option<(KeyPhase, bool)>,
}

/// For each phase difference, checks whether `a_k xor b_k` takes a single value
/// over all settings that can produce `outcome`.
pub fn derive_row(outcome: &DetectionOutcome) -> DerivedRow {
    let pattern = outcome.pattern();
    let mut seen = [[false; 2]; 2];
    for ps in PhaseSetting::<f64>::all_discrete() {
        if output_state(&ps).probability(&pattern) > 1e-12 {
            let [a1, a2, b1, b2] = ps.bits().expect("discrete");
            seen[0][(a1 ^ b1) as usize] = true;
            seen[1][(a2 ^ b2) as usize] = true;
        }
    }
    let fixed = |s: [bool; 2]| match s {
        [true, false] => Some(false),
        [false, true] => Some(true),
        _ => None,
    };
    let determined = match (fixed(seen[0]), fixed(seen[1])) {
        (Some(p), None) => Some((KeyPhase::Delta1, p)),
        (None, Some(p)) => Some((KeyPhase::Delta2, p)),
        _ => None,
    };
    DerivedRow { determined }
}

/// The published reconciliation table: `(phase, flip)` for kept rows, `None` for discarded ones.
pub fn published_table() -> [Option<(KeyPhase, bool)>; 12] {
    use KeyPhase::{Delta1 as P1, Delta2 as P2};
    [
        Some((P1, false)),
        Some((P1, false)),
        Some((P2, false)),
        Some((P2, false)),
        Some((P1, true)),
        Some((P1, true)),
        Some((P2, true)),
        Some((P2, true)),
        None,
        None,
        None,
        None,
    ]
}

pub fn check_table(criterion: u8) -> Vec<Check> {
    let mut out = Vec::new();
    let mut row_errors = Vec::new();
    let mut bell_errors = Vec::new();
    for (outcome, want) in table_one_outcomes().iter().zip(published_table()) {
        let derived = derive_row(outcome).determined;
        let decision = sift(outcome);
        let from_rule = match decision {
            SiftDecision::Keep { phase, bit_flip } => Some((phase, bit_flip)),
            _ => None,
        };
        let discard_ok = want.is_some() || decision == SiftDecision::Discard;
        if derived != want || from_rule != want || !discard_ok {
            row_errors.push(outcome.to_string());
        }
        if let Some((phase, flip)) = want {
            let label = if flip { BellLabel::PsiMinus } else { BellLabel::PhiMinus };
            let expected = AncillaBellState { label, register: phase };
            let got = verify_entanglement_mapping::<f64>(outcome).ok();
            if got != Some(expected) || expected_bell_state(&decision) != Some(expected) {
                bell_errors.push(outcome.to_string());
            }
        }
    }
    out.push(Check::new(criterion, "reconciliation rows from state evolution", row_errors.is_empty(), format!("mismatched rows: {row_errors:?}")));
    out.push(Check::new(criterion, "Bell pair per kept row", bell_errors.is_empty(), format!("mismatched rows: {bell_errors:?}")));
    out
}

pub fn check_sifting(criterion: u8) -> Vec<Check> {
    let frac = sifted_key_fraction();
    let e = enumerate_sifting::<f64>();
    vec![
        Check::new(criterion, "sifted fraction is exactly 4/9", *frac.numer() == 4 && *frac.denom() == 9, format!("{frac}")),
        Check::new(
            criterion,
            "enumerated HOM survival x keep fraction",
            (e.hom_survival - 2.0 / 3.0).abs() < 1e-12
                && (e.keep_given_survival - 2.0 / 3.0).abs() < 1e-12
                && (e.sifted_fraction() - 4.0 / 9.0).abs() < 1e-12
                && (e.agreement - 1.0).abs() < 1e-12,
            format!("survival {:.15} keep {:.15} product {:.15}", e.hom_survival, e.keep_given_survival, e.sifted_fraction()),
        ),
    ]
}

/// Monte Carlo versus the closed-form yield and QBER on the full parameter grid.
pub fn check_monte_carlo(criterion: u8, trials: u64, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for (i, &eta) in [1.0, 0.1, 0.01].iter().enumerate() {
        for (j, &p_dark) in [0.0, 3e-6].iter().enumerate() {
            for (k, &e_d) in [0.0, 0.015].iter().enumerate() {
                let p = ChannelParams { p_dark, e_d, ..ChannelParams::default() }.with_eta(eta, eta);
                let tag = format!("eta={eta} p_dark={p_dark:e} e_d={e_d}");
                let est = match run_trials(&p, trials, seed.wrapping_add((i * 4 + j * 2 + k) as u64)) {
                    Ok(e) => e,
                    Err(err) => {
                        out.push(Check::new(criterion, format!("MC {tag}"), false, err.to_string()));
                        continue;
                    }
                };
                let y = yield_y11(&p);
                let sy = (y * (1.0 - y) / trials as f64).sqrt();
                out.push(Check::new(
                    criterion,
                    format!("MC Y11 {tag}"),
                    (est.y11_hat - y).abs() <= 3.0 * sy,
                    format!("mc {:.6e} analytic {:.6e} ({:.2} sigma)", est.y11_hat, y, (est.y11_hat - y) / sy),
                ));
                let (e_lit, _) = qber_asymptotic(&p).expect("positive yield");
                let target = if p_dark == 0.0 { e_lit } else { qber_half_dark(&p).expect("positive yield") };
                let se = (target * (1.0 - target) / est.keep.max(1) as f64).sqrt();
                let ok = if se == 0.0 { est.errors == 0 } else { (est.e_b_hat - target).abs() <= 3.0 * se };
                let label = if p_dark == 0.0 { "e_b" } else { "e_b (dark clicks half wrong)" };
                out.push(Check::new(
                    criterion,
                    format!("MC {label} {tag}"),
                    ok,
                    format!("mc {:.6e} analytic {:.6e} kept {}", est.e_b_hat, target, est.keep),
                ));
                if p_dark > 0.0 {
                    let z = if se > 0.0 { (est.e_b_hat - e_lit) / se } else { 0.0 };
                    out.push(Check::flagged(
                        criterion,
                        format!("MC e_b vs full-error dark weighting {tag}"),
                        format!("mc {:.6e} closed form {:.6e} ({z:.2} sigma)", est.e_b_hat, e_lit),
                    ));
                }
            }
        }
    }
    out
}

pub fn check_noise(criterion: u8, pairs: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_gap, mut min_diff, mut worst_identity, mut negative) = (f64::INFINITY, f64::INFINITY, 0.0f64, 0usize);
    for i in 0..pairs {
        let damped = i % 2 == 1;
        let a = NoiseMatrix::<f64>::random_physical(&mut rng, damped);
        let b = NoiseMatrix::<f64>::random_physical(&mut rng, damped);
        let (eb, ep, gap) = (bit_error_rate(&a, &b), phase_error_rate(&a, &b), error_gap(&a, &b));
        min_gap = min_gap.min(gap);
        min_diff = min_diff.min(eb - ep);
        if eb - ep < -1e-12 {
            negative += 1;
        }
        worst_identity = worst_identity.max((gap - (eb - ep)).abs());
    }
    let id = NoiseMatrix::<f64>::identity();
    let id_gap = error_gap(&id, &id);
    vec![
        Check::new(criterion, "closed-form gap >= -1e-12", min_gap >= -1e-12, format!("min gap {min_gap:.3e} over {pairs} pairs")),
        Check::new(
            criterion,
            "e_p <= e_b (direct difference)",
            negative == 0,
            format!("{negative} of {pairs} pairs have e_b - e_p < -1e-12; min {min_diff:.3e}"),
        ),
        Check::new(criterion, "identity gap = 4/9", (id_gap - 4.0 / 9.0).abs() < 1e-12, format!("{id_gap:.15}")),
        Check::new(criterion, "gap equals e_b - e_p", worst_identity < 1e-12, format!("max |gap - (e_b - e_p)| = {worst_identity:.3e}")),
    ]
}

pub fn check_bessel(criterion: u8, draws: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<_> = (0..draws)
        .map(|_| {
            let mu_a: f64 = rng.random_range(0.01..1.0);
            let mu_b: f64 = rng.random_range(0.01..1.0);
            let eta_a = 10f64.powf(rng.random_range(-3.0..0.0));
            let eta_b = 10f64.powf(rng.random_range(-3.0..0.0));
            let p_dark: f64 = rng.random_range(0.0..1e-5);
            (mu_a, mu_b, ChannelParams { p_dark, ..ChannelParams::default() }.with_eta(eta_a, eta_b))
        })
        .collect();
    let worst = params
        .par_iter()
        .map(|(mu_a, mu_b, p)| {
            let q = overall_gain(*mu_a, *mu_b, p);
            let eq = overall_error_gain(*mu_a, *mu_b, p);
            let cfg = QuadConfig { abs_tol: 1e-11 * eq.min(q), ..QuadConfig::default() };
            let w = 1.0 / (4.0 * PI * PI);
            let full = (0.0, 2.0 * PI);
            let gq = integrate_2d(|ta, tb| gain_pattern_sum(*mu_a, *mu_b, p, ta, tb), full, full, &cfg).map(|r| r.value * w);
            let ge = integrate_2d(|ta, tb| error_pattern_sum(*mu_a, *mu_b, p, ta, tb), full, full, &cfg).map(|r| r.value * w);
            match (gq, ge, overall_qber(*mu_a, *mu_b, p)) {
                (Ok(gq), Ok(ge), Ok(e)) => ((gq - q).abs() / q).max((ge / gq - e).abs() / e),
                _ => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    let p = ChannelParams::<f64>::default().with_eta(0.3, 0.2);
    let y = (1.0 - p.p_dark) * (-0.2 * 0.7 / 6.0f64).exp();
    let want = 8.0 * y.powi(4) * (1.0 - y).powi(2);
    let got = overall_gain(0.0, 0.7, &p);
    vec![
        Check::new(criterion, "Bessel forms vs 2D quadrature", worst <= 1e-8, format!("max relative difference {worst:.3e} over {draws} draws")),
        Check::new(criterion, "x = 0 closed form", (got - want).abs() <= 4.0 * f64::EPSILON * want, format!("{got:.17e} vs {want:.17e}")),
    ]
}

fn slice_params() -> ChannelParams<f64> {
    ChannelParams::<f64>::default().at_distance(DEFAULT_ETA_DET, SLICE_REFERENCE_KM)
}

pub fn check_slices(criterion: u8) -> Vec<Check> {
    let p = slice_params();
    let cfg = QuadConfig::default();
    let e_full = overall_qber(DEFAULT_MU, DEFAULT_MU, &p).unwrap_or(f64::NAN);
    let e0: Vec<f64> = [1u32, 2, 4, 8, 16, 32]
        .iter()
        .map(|&n| sliced_gain_qber(DEFAULT_MU, DEFAULT_MU, &p, SliceConfig::new(n, 0).expect("m < n"), &cfg).map_or(f64::NAN, |s| s.qber))
        .collect();
    let monotone = e0.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    vec![
        Check::new(criterion, "E_full in [0.30, 0.38]", (0.30..=0.38).contains(&e_full), format!("{e_full:.5}")),
        Check::new(criterion, "E^0 at N=16 <= 0.02", e0[4] <= 0.02, format!("{:.5}", e0[4])),
        Check::new(criterion, "E^0 non-increasing in N", monotone, format!("{e0:.5?}")),
    ]
}

/// `(MDI cutoff, reference DPS cutoff)` in km for the default link.
pub fn cutoff_distances() -> (Option<f64>, Option<f64>) {
    let base = ChannelParams::<f64>::default();
    let mdi = first_cutoff(|l| secure_rate(&base.at_distance(DEFAULT_ETA_DET, l)).rate_unclamped, 1.0, 1000.0, 1e-6);
    let dps = first_cutoff(
        |l| {
            let eta = DEFAULT_ETA_DET * fiber_transmittance(base.alpha_db_per_km, l);
            let r = dps_reference_rate(eta, &base);
            if r > 0.0 {
                r
            } else {
                -1.0
            }
        },
        1.0,
        1000.0,
        1e-6,
    );
    (mdi, dps)
}

pub fn check_distance(criterion: u8) -> Vec<Check> {
    let (mdi, dps) = cutoff_distances();
    let ratio = match (mdi, dps) {
        (Some(a), Some(b)) if b > 0.0 => a / b,
        _ => f64::NAN,
    };
    vec![Check::new(
        criterion,
        "MDI / DPS cutoff ratio in [1.7, 2.3]",
        (1.7..=2.3).contains(&ratio),
        format!("MDI {mdi:.2?} km, DPS {dps:.2?} km, ratio {ratio:.3}"),
    )]
}

/// Exhaustive grid over `(m, eps_bar, eps_bar')` using the full budget, as an oracle for the optimizer.
pub fn brute_force_rate(n_signals: u64, epsilon: f64, epsilon_ec: f64, e_b: f64, rule: BudgetRule) -> f64 {
    let cap = rule.capacity(n_signals);
    let ms: Vec<u64> = (0..=400)
        .map(|k| (cap as f64 * 10f64.powf(-7.0 + 7.0 * k as f64 / 400.0)).round() as u64)
        .filter(|&m| m >= 1 && m < cap)
        .collect();
    let room = epsilon - epsilon_ec;
    ms.par_iter()
        .map(|&m| {
            let mut best = 0.0f64;
            for i in 1..40 {
                let eps_bar = room * i as f64 / 40.0;
                for j in 0..40 {
                    let eps_bar_prime = eps_bar * 10f64.powf(-12.0 + 12.0 * j as f64 / 40.0);
                    let sec = SecurityParams::new(epsilon, epsilon_ec, eps_bar, eps_bar_prime);
                    let b = FiniteKeyBudget { n_signals, n: cap - m, m };
                    if let Ok(r) = finite_rate(&b, &sec, e_b, rule) {
                        best = best.max(r);
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

pub fn check_finite_key(criterion: u8) -> Vec<Check> {
    let (eps, eps_ec) = (1e-5, 1e-10);
    let ns: Vec<u64> = (12..=28).map(|k| 10f64.powf(k as f64 / 2.0).round() as u64).collect();
    let curves: Vec<Vec<f64>> = [0.01, 0.03, 0.05]
        .par_iter()
        .map(|&e| ns.iter().map(|&n| optimize_rate(n, eps, eps_ec, e, BudgetRule::Sifted).map_or(f64::NAN, |o| o.r)).collect())
        .collect();
    let monotone = curves.iter().all(|c| c.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let ordered = (0..ns.len()).all(|i| curves[0][i] >= curves[1][i] - 1e-12 && curves[1][i] >= curves[2][i] - 1e-12);
    let top = optimize_rate(1_000_000_000_000, eps, eps_ec, 1e-4, BudgetRule::Sifted).map_or(f64::NAN, |o| o.r);
    let rel = (top - 4.0 / 9.0).abs() / (4.0 / 9.0);
    let mut worst = 0.0f64;
    for e in [0.01, 0.03, 0.05] {
        let opt = optimize_rate(10_000_000, eps, eps_ec, e, BudgetRule::Sifted).map_or(f64::NAN, |o| o.r);
        let grid = brute_force_rate(10_000_000, eps, eps_ec, e, BudgetRule::Sifted);
        let d = if grid > 0.0 { (grid - opt) / grid } else if opt == 0.0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(d);
    }
    vec![
        Check::new(criterion, "r(N) non-decreasing", monotone, format!("N from 1e6 to 1e14 in half decades")),
        Check::new(criterion, "r ordered in e_b", ordered, String::from("e_b = 0.01, 0.03, 0.05")),
        Check::new(criterion, "r(1e12, e_b=1e-4) within 2% of 4/9", rel <= 0.02, format!("r {top:.6} ({:.3}%)", rel * 100.0)),
        Check::new(criterion, "optimizer within 1% of grid at N=1e7", worst <= 0.01, format!("worst shortfall {:.4}%", worst * 100.0)),
    ]
}

pub fn check_decoy_sign(criterion: u8) -> Vec<Check> {
    let cfg = QuadConfig::default();
    let mut out = Vec::new();
    for l in [0.0, SLICE_REFERENCE_KM] {
        let p = ChannelParams::<f64>::default().at_distance(DEFAULT_ETA_DET, l);
        let modified = decoy_key_rate(DEFAULT_MU, DEFAULT_MU, &p, 16, &cfg).map_or(f64::NAN, |r| r.rate_unclamped);
        let summed = decoy_rate_slice_sum_cost(DEFAULT_MU, DEFAULT_MU, &p, 16, &cfg).unwrap_or(f64::NAN);
        out.push(Check::new(
            criterion,
            format!("slice-sum cost negative, modified rate positive at {l} km"),
            summed < 0.0 && modified > 0.0,
            format!("slice-sum {summed:.4e}, modified {modified:.4e}"),
        ));
    }
    out
}

/// Runs every check in criterion order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<Check> {
    let mut out = check_table(1);
    out.extend(check_sifting(2));
    out.extend(check_monte_carlo(3, cfg.mc_trials, cfg.seed));
    out.extend(check_noise(4, cfg.noise_pairs, cfg.seed));
    out.extend(check_bessel(5, cfg.bessel_draws, cfg.seed));
    out.extend(check_slices(6));
    out.extend(check_distance(7));
    out.extend(check_finite_key(8));
    out.extend(check_decoy_sign(9));
    out
}
