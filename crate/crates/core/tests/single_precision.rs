//! The generic core instantiated at f32 tracks the f64 results.

use dpsmdi::asymptotic::secure_rate;
use dpsmdi::channel::ChannelParams;
use dpsmdi::decoy::{overall_gain, overall_qber};
use dpsmdi::finite_key::{finite_rate, BudgetRule, FiniteKeyBudget, SecurityParams};
use dpsmdi::special::bessel_i0;

fn rel(a: f32, b: f64) -> f64 {
    ((a as f64 - b) / b).abs()
}

#[test]
fn asymptotic_rate() {
    for km in [0.0, 50.0, 120.0] {
        let p64 = ChannelParams::<f64>::default().at_distance(0.145, km);
        let p32 = ChannelParams::<f32>::default().at_distance(0.145, km as f32);
        let (r64, r32) = (secure_rate(&p64), secure_rate(&p32));
        assert!(rel(r32.y11, r64.y11) < 1e-5, "{km}");
        assert!(rel(r32.rate, r64.rate) < 1e-4, "{km}");
    }
}

#[test]
fn decoy_gain_and_qber() {
    let p64 = ChannelParams::<f64>::default().at_distance(0.145, 30.0);
    let p32 = ChannelParams::<f32>::default().at_distance(0.145, 30.0);
    assert!(rel(overall_gain(0.5f32, 0.5, &p32), overall_gain(0.5, 0.5, &p64)) < 1e-4);
    assert!(rel(overall_qber(0.5f32, 0.5, &p32).unwrap(), overall_qber(0.5, 0.5, &p64).unwrap()) < 1e-4);
    assert!(rel(bessel_i0(3.0f32), bessel_i0(3.0f64)) < 1e-6);
}

#[test]
fn finite_key_rate() {
    let budget = FiniteKeyBudget { n_signals: 1_000_000_000, n: 400_000_000, m: 40_000_000 };
    let s64 = SecurityParams::<f64>::new(1e-5, 1e-10, 1e-7, 1e-8);
    let s32 = SecurityParams::<f32>::new(1e-5, 1e-10, 1e-7, 1e-8);
    let r64 = finite_rate(&budget, &s64, 0.01, BudgetRule::Sifted).unwrap();
    let r32 = finite_rate(&budget, &s32, 0.01f32, BudgetRule::Sifted).unwrap();
    assert!(r64 > 0.0);
    assert!(rel(r32, r64) < 1e-3, "{r32} vs {r64}");
}
