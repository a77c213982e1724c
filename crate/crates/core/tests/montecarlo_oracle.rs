//! Monte Carlo tallies against closed forms on a 3x3 grid of (eta, p_dark).

use dpsmdi::asymptotic::{qber_half_dark, yield_y11};
use dpsmdi::channel::ChannelParams;
use dpsmdi::montecarlo::{run_trials, Simulator};

#[test]
fn yield_and_qber_grid() {
    let n = 1_000_000;
    for (i, &eta) in [1.0, 0.3, 0.05].iter().enumerate() {
        for (j, &p_dark) in [0.0, 1e-4, 1e-3].iter().enumerate() {
            let p = ChannelParams { p_dark, e_d: 0.02, ..ChannelParams::default() }.with_eta(eta, eta * 0.7);
            let est = run_trials(&p, n, 100 + (3 * i + j) as u64).unwrap();
            let y = yield_y11(&p);
            let sy = (y * (1.0 - y) / n as f64).sqrt();
            assert!((est.y11_hat - y).abs() <= 3.0 * sy, "Y11 eta={eta} p_dark={p_dark}: {} vs {y}", est.y11_hat);
            let e = qber_half_dark(&p).unwrap();
            let se = (e * (1.0 - e) / est.keep as f64).sqrt();
            assert!((est.e_b_hat - e).abs() <= 3.0 * se, "e_b eta={eta} p_dark={p_dark}: {} vs {e}", est.e_b_hat);
        }
    }
}

#[test]
fn dark_clicks_alone() {
    let p = ChannelParams { p_dark: 0.02, e_d: 0.0, ..ChannelParams::default() }.with_eta(0.0, 0.0);
    let est = run_trials(&p, 500_000, 5).unwrap();
    assert!(est.keep > 0);
    assert!((est.e_b_hat - 0.5).abs() <= 3.0 * est.e_b_stderr);
    let y = yield_y11(&p);
    assert!((est.y11_hat - y).abs() <= 3.0 * est.y11_stderr);
}

#[test]
fn outcome_frequencies_sum_to_one() {
    let p = ChannelParams::<f64>::default().with_eta(0.4, 0.4);
    let est = run_trials(&p, 100_000, 1).unwrap();
    let total: u64 = est.outcome_counts.iter().sum();
    assert_eq!(total, est.n_trials);
    let listed: f64 = est.outcome_frequencies().iter().map(|(_, f)| f).sum();
    assert!((listed + est.multi_click as f64 / est.n_trials as f64 - 1.0).abs() < 1e-12);
}

#[test]
fn thread_count_does_not_change_tallies() {
    let p = ChannelParams::<f64>::default().with_eta(0.2, 0.3);
    let sim = Simulator::new(&p).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sim.run(200_000, 9).unwrap());
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| sim.run(200_000, 9).unwrap());
    assert_eq!(one, many);
}
