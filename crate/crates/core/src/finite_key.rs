//! Finite-key rate: smooth-entropy corrections, the security penalty, and a
//! deterministic constrained maximization over `(n, m, eps_bar, eps_bar')`.

use crate::asymptotic::capped_entropy;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::sifting::sifted_key_fraction;

/// POVM outcomes at the measurement unit: eight kept patterns plus failure.
pub const POVM_OUTCOMES: u32 = 9;

/// Error-correction leakage per raw bit, `leak_EC / n = 1.2 h(e_b)`.
pub const LEAK_EC_FACTOR: f64 = 1.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityParams<T> {
    pub epsilon: T,
    pub epsilon_ec: T,
    pub eps_bar: T,
    pub eps_bar_prime: T,
    pub d: u32,
}

impl<T: Real> SecurityParams<T> {
    pub fn new(epsilon: T, epsilon_ec: T, eps_bar: T, eps_bar_prime: T) -> Self {
        Self { epsilon, epsilon_ec, eps_bar, eps_bar_prime, d: POVM_OUTCOMES }
    }

    /// Checks `eps - eps_EC > eps_bar > eps_bar' >= 0`, naming the violated link.
    pub fn validate(&self) -> Result<()> {
        if self.epsilon - self.epsilon_ec <= self.eps_bar {
            return Err(Error::Constraint("epsilon - epsilon_EC > eps_bar"));
        }
        if self.eps_bar <= self.eps_bar_prime {
            return Err(Error::Constraint("eps_bar > eps_bar_prime"));
        }
        if self.eps_bar_prime < T::zero() {
            return Err(Error::Constraint("eps_bar_prime >= 0"));
        }
        Ok(())
    }
}

/// Which signals the raw and estimation bits are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BudgetRule {
    /// `n + m <= (4/9) N`: only sifted signals yield bits.
    #[default]
    Sifted,
    /// `n + m <= N`.
    Total,
}

impl BudgetRule {
    /// Largest admissible `n + m` for `n_signals` exchanged signals.
    pub fn capacity(self, n_signals: u64) -> u64 {
        match self {
            BudgetRule::Sifted => {
                let f = sifted_key_fraction();
                (n_signals as u128 * *f.numer() as u128 / *f.denom() as u128) as u64
            }
            BudgetRule::Total => n_signals,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FiniteKeyBudget {
    pub n_signals: u64,
    /// Raw-key bits.
    pub n: u64,
    /// Parameter-estimation bits.
    pub m: u64,
}

impl FiniteKeyBudget {
    pub fn validate(&self, rule: BudgetRule) -> Result<()> {
        if self.n_signals == 0 {
            return Err(Error::OutOfRange { name: "N_signals", value: 0.0, range: "N >= 1" });
        }
        if self.n.saturating_add(self.m) > rule.capacity(self.n_signals) {
            return Err(Error::Constraint("n + m within the signal budget"));
        }
        Ok(())
    }
}

/// `xi(m, d, eps') = sqrt((2 ln(1/eps') + d ln(m+1)) / m)`.
pub fn xi<T: Real>(m: T, d: u32, eps_bar_prime: T) -> Result<T> {
    if m < T::one() {
        return Err(Error::OutOfRange { name: "m", value: to_f64(m), range: "m >= 1" });
    }
    if eps_bar_prime <= T::zero() {
        return Err(Error::OutOfRange { name: "eps_bar_prime", value: to_f64(eps_bar_prime), range: "eps_bar_prime > 0" });
    }
    let two = lit::<T>(2.0);
    Ok(((two * eps_bar_prime.recip().ln() + lit::<T>(d as f64) * (m + T::one()).ln()) / m).sqrt())
}

/// `Delta = 2 log2(1 / (2 (eps - eps_bar - eps_EC))) + 7 sqrt(n log2(2 / (eps_bar - eps_bar')))`.
pub fn delta<T: Real>(n: T, sec: &SecurityParams<T>) -> Result<T> {
    sec.validate()?;
    let two = lit::<T>(2.0);
    let slack = sec.epsilon - sec.eps_bar - sec.epsilon_ec;
    Ok(two * (two * slack).recip().log2() + lit::<T>(7.0) * (n * (two / (sec.eps_bar - sec.eps_bar_prime)).log2()).sqrt())
}

/// `1 - h(e_b + xi(n)) - h(e_p + xi(m))` with `e_p = e_b`, floored at 0 once a
/// corrected rate passes 1/2.
pub fn smooth_entropy<T: Real>(e_b: T, n: T, m: T, sec: &SecurityParams<T>) -> Result<T> {
    let half = lit::<T>(0.5);
    let eb = e_b + xi(n, sec.d, sec.eps_bar_prime)?;
    let ep = e_b + xi(m, sec.d, sec.eps_bar_prime)?;
    if eb > half || ep > half {
        return Ok(T::zero());
    }
    Ok((T::one() - capped_entropy(eb) - capped_entropy(ep)).max(T::zero()))
}

/// `r' = H - (leak_EC + Delta)/n`, before scaling by `n/N` and clamping.
pub fn finite_rate_per_bit<T: Real>(budget: &FiniteKeyBudget, sec: &SecurityParams<T>, e_b: T) -> Result<T> {
    let n = lit::<T>(budget.n as f64);
    let m = lit::<T>(budget.m as f64);
    let h = smooth_entropy(e_b, n, m, sec)?;
    let leak = lit::<T>(LEAK_EC_FACTOR) * capped_entropy(e_b) * n;
    Ok(h - (leak + delta(n, sec)?) / n)
}

/// `r = max(0, (n/N) r')`.
pub fn finite_rate<T: Real>(budget: &FiniteKeyBudget, sec: &SecurityParams<T>, e_b: T, rule: BudgetRule) -> Result<T> {
    budget.validate(rule)?;
    let r = finite_rate_per_bit(budget, sec, e_b)?;
    Ok((lit::<T>(budget.n as f64) / lit(budget.n_signals as f64) * r).max(T::zero()))
}

/// `(4/9)(1 - h(e_b) - h(e_p) - 1.2 h(e_b))` with `e_p = e_b`: the `N -> inf` limit.
pub fn asymptotic_ceiling(e_b: f64) -> f64 {
    let f = sifted_key_fraction();
    let frac = *f.numer() as f64 / *f.denom() as f64;
    (frac * (1.0 - (2.0 + LEAK_EC_FACTOR) * capped_entropy(e_b))).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteKeyOptimum {
    pub r: f64,
    pub n: u64,
    pub m: u64,
    pub eps_bar: f64,
    pub eps_bar_prime: f64,
    /// Set when no feasible point gives a positive rate.
    pub diagnostic: Option<&'static str>,
}

/// Search coordinates: `m` as a log-fraction of the budget, `eps_bar` as a
/// fraction of `eps - eps_EC` in logit form, `eps_bar'` as a log-fraction of `eps_bar`.
#[derive(Clone, Copy, Debug)]
struct Point {
    log_m_frac: f64,
    logit_bar: f64,
    log_prime_frac: f64,
}

struct Problem {
    n_signals: u64,
    capacity: u64,
    epsilon: f64,
    epsilon_ec: f64,
    e_b: f64,
}

impl Problem {
    fn decode(&self, p: &Point) -> Option<(FiniteKeyBudget, SecurityParams<f64>)> {
        if self.capacity < 2 {
            return None;
        }
        let cap = self.capacity as f64;
        let m = (p.log_m_frac.exp() * cap).round().clamp(1.0, cap - 1.0) as u64;
        let n = self.capacity - m;
        let room = self.epsilon - self.epsilon_ec;
        let eps_bar = room / (1.0 + (-p.logit_bar).exp());
        let eps_bar_prime = eps_bar * p.log_prime_frac.exp();
        let sec = SecurityParams::new(self.epsilon, self.epsilon_ec, eps_bar, eps_bar_prime);
        sec.validate().ok()?;
        if eps_bar_prime <= 0.0 {
            return None;
        }
        Some((FiniteKeyBudget { n_signals: self.n_signals, n, m }, sec))
    }

    fn value(&self, p: &Point) -> f64 {
        match self.decode(p) {
            Some((b, s)) => finite_rate_per_bit(&b, &s, self.e_b)
                .map(|r| b.n as f64 / b.n_signals as f64 * r)
                .unwrap_or(f64::NEG_INFINITY),
            None => f64::NEG_INFINITY,
        }
    }
}

fn linspace(a: f64, b: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| a + (b - a) * i as f64 / (k - 1) as f64)
}

/// Maximizes the finite-key rate for `n_signals` exchanged signals.
///
/// Stage one evaluates a fixed logarithmic grid; stage two refines the best
/// grid point by a compass search with step halving. Both stages are
/// deterministic. When no feasible point has a positive rate the result
/// carries `r = 0` and a diagnostic.
pub fn optimize_rate(n_signals: u64, epsilon: f64, epsilon_ec: f64, e_b: f64, rule: BudgetRule) -> Result<FiniteKeyOptimum> {
    if n_signals == 0 {
        return Err(Error::OutOfRange { name: "N_signals", value: 0.0, range: "N >= 1" });
    }
    if !(epsilon > epsilon_ec && epsilon_ec >= 0.0) {
        return Err(Error::Constraint("epsilon > epsilon_EC >= 0"));
    }
    let problem = Problem { n_signals, capacity: rule.capacity(n_signals), epsilon, epsilon_ec, e_b };
    let empty = FiniteKeyOptimum { r: 0.0, n: 0, m: 0, eps_bar: 0.0, eps_bar_prime: 0.0, diagnostic: Some("no feasible point with positive rate") };
    if problem.capacity < 2 {
        return Ok(empty);
    }
    let min_log_frac = -(problem.capacity as f64).ln();
    let mut best = Point { log_m_frac: -1.0, logit_bar: 0.0, log_prime_frac: -1.0 };
    let mut best_val = f64::NEG_INFINITY;
    for log_m_frac in linspace(min_log_frac, -0.01, 48) {
        for logit_bar in linspace(-4.0, 12.0, 9) {
            for log_prime_frac in linspace(-25.0, -0.01, 11) {
                let p = Point { log_m_frac, logit_bar, log_prime_frac };
                let v = problem.value(&p);
                if v > best_val {
                    best = p;
                    best_val = v;
                }
            }
        }
    }
    let mut step = [0.5, 1.0, 1.0];
    while step[0] > 1e-7 {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut p = best;
                match axis {
                    0 => p.log_m_frac = (p.log_m_frac + sign * step[0]).min(0.0),
                    1 => p.logit_bar += sign * step[1],
                    _ => p.log_prime_frac = (p.log_prime_frac + sign * step[2]).min(0.0),
                }
                let v = problem.value(&p);
                if v > best_val {
                    best = p;
                    best_val = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step = step.map(|s| s / 2.0);
        }
    }
    if best_val <= 0.0 {
        return Ok(empty);
    }
    let (budget, sec) = problem.decode(&best).expect("best point is feasible");
    Ok(FiniteKeyOptimum {
        r: best_val,
        n: budget.n,
        m: budget.m,
        eps_bar: sec.eps_bar,
        eps_bar_prime: sec.eps_bar_prime,
        diagnostic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sec() -> SecurityParams<f64> {
        SecurityParams::new(1e-5, 1e-10, 5e-6, 1e-6)
    }

    #[test]
    fn xi_examples() {
        let v = xi(1e6, 9, 1e-6).unwrap();
        let want = ((2.0 * 1e6f64.ln() + 9.0 * 1000001f64.ln()) / 1e6).sqrt();
        assert!((v - want).abs() < 1e-15);
        assert!((v - 0.0123).abs() < 5e-4);
        assert!(xi(1e14, 9, 1e-6).unwrap() < 1e-5);
        assert!(xi(100.0, 9, 0.0).is_err());
        assert!(xi(0.5, 9, 1e-6).is_err());
    }

    #[test]
    fn delta_examples() {
        let d = delta(1e8, &sec()).unwrap();
        assert!(d.is_finite() && d > 0.0);
        assert!(delta(1e12, &sec()).unwrap() / 1e12 < d / 1e8);
        let bad = SecurityParams::new(1e-5, 1e-10, 1e-6, 1e-6);
        assert_eq!(delta(1e8, &bad), Err(Error::Constraint("eps_bar > eps_bar_prime")));
        let bad = SecurityParams::new(1e-5, 1e-10, 1e-5, 1e-6);
        assert_eq!(bad.validate(), Err(Error::Constraint("epsilon - epsilon_EC > eps_bar")));
    }

    #[test]
    fn smooth_entropy_limits() {
        let h = smooth_entropy(0.0, 1e8, 1e8, &sec()).unwrap();
        assert!(h < 1.0 && h > 0.9);
        assert_eq!(smooth_entropy(0.5, 1e8, 1e8, &sec()).unwrap(), 0.0);
        let e = 0.02;
        let far = smooth_entropy(e, 1e30, 1e30, &sec()).unwrap();
        assert!((far - (1.0 - 2.0 * capped_entropy(e))).abs() < 1e-10);
    }

    #[test]
    fn budget_rules() {
        assert_eq!(BudgetRule::Sifted.capacity(9), 4);
        assert_eq!(BudgetRule::Sifted.capacity(10), 4);
        assert_eq!(BudgetRule::Total.capacity(10), 10);
        let b = FiniteKeyBudget { n_signals: 900, n: 350, m: 50 };
        assert!(b.validate(BudgetRule::Sifted).is_ok());
        let b = FiniteKeyBudget { n_signals: 900, n: 351, m: 50 };
        assert!(b.validate(BudgetRule::Sifted).is_err());
        assert!(b.validate(BudgetRule::Total).is_ok());
    }

    #[test]
    fn small_n_gives_zero() {
        let b = FiniteKeyBudget { n_signals: 100_000, n: 40_000, m: 4_000 };
        assert_eq!(finite_rate(&b, &sec(), 0.05, BudgetRule::Sifted).unwrap(), 0.0);
        let o = optimize_rate(1000, 1e-5, 1e-10, 0.05, BudgetRule::Sifted).unwrap();
        assert_eq!(o.r, 0.0);
        assert!(o.diagnostic.is_some());
    }

    #[test]
    fn optimum_is_feasible_and_below_ceiling() {
        for &e in &[0.01, 0.03] {
            let o = optimize_rate(10_000_000_000, 1e-5, 1e-10, e, BudgetRule::Sifted).unwrap();
            assert!(o.r > 0.0);
            assert!(o.n + o.m <= BudgetRule::Sifted.capacity(10_000_000_000));
            let s = SecurityParams::new(1e-5, 1e-10, o.eps_bar, o.eps_bar_prime);
            assert!(s.validate().is_ok());
            assert!(o.r <= asymptotic_ceiling(e));
            let b = FiniteKeyBudget { n_signals: 10_000_000_000, n: o.n, m: o.m };
            assert!((finite_rate(&b, &s, e, BudgetRule::Sifted).unwrap() - o.r).abs() < 1e-15);
        }
    }

    #[test]
    fn approaches_sifted_fraction() {
        let o = optimize_rate(1_000_000_000_000, 1e-5, 1e-10, 1e-4, BudgetRule::Sifted).unwrap();
        assert!(((o.r - 4.0 / 9.0) / (4.0 / 9.0)).abs() < 0.02, "{o:?}");
    }
}
