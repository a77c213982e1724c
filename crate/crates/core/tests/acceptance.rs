//! One line per acceptance criterion, followed by the individual checks.

use std::time::Instant;

use dpsmdi::verify::{self, overall, Check, Status, VerifyConfig};

fn report(criterion: u8, title: &str, checks: &[Check], elapsed: f64) -> bool {
    let status = overall(checks);
    println!("[{status}] criterion {criterion}: {title} ({elapsed:.2} s)");
    for c in checks {
        println!("    {:<7} {}: {}", c.status.to_string(), c.name, c.detail);
    }
    status == Status::Pass
}

#[test]
fn acceptance() {
    let cfg = VerifyConfig::default();
    type Run = Box<dyn Fn() -> Vec<Check>>;
    let suites: Vec<(u8, &str, Run)> = vec![
        (1, "reconciliation table and Bell pairs", Box::new(|| verify::check_table(1))),
        (2, "sifted rate 4/9", Box::new(|| verify::check_sifting(2))),
        (3, "Monte Carlo vs closed forms", Box::new(move || verify::check_monte_carlo(3, cfg.mc_trials, cfg.seed))),
        (4, "phase-error bound", Box::new(move || verify::check_noise(4, cfg.noise_pairs, cfg.seed))),
        (5, "Bessel closed forms", Box::new(move || verify::check_bessel(5, cfg.bessel_draws, cfg.seed))),
        (6, "slice QBER", Box::new(|| verify::check_slices(6))),
        (7, "secure-distance ratio", Box::new(|| verify::check_distance(7))),
        (8, "finite-key behavior", Box::new(|| verify::check_finite_key(8))),
        (9, "decoy-rate sign", Box::new(|| verify::check_decoy_sign(9))),
    ];
    let mut failed = Vec::new();
    for (k, title, run) in &suites {
        let t = Instant::now();
        let checks = run();
        let elapsed = t.elapsed().as_secs_f64();
        let mut ok = report(*k, title, &checks, elapsed);
        let limit = match k {
            1 => Some(1.0),
            3 => Some(300.0),
            _ => None,
        };
        if let Some(limit) = limit {
            let within = elapsed < limit;
            println!("    {:<7} runtime under {limit} s: {elapsed:.2} s", if within { "PASS" } else { "FAIL" });
            ok &= within;
        }
        if !ok {
            failed.push(*k);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
