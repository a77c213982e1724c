//! Run configuration: one TOML file with a section per command, overridden by flags.

use anyhow::{bail, ensure, Result};
use dpsmdi::channel::{ChannelParams, DEFAULT_ALPHA_DB_PER_KM, DEFAULT_ETA_DET, DEFAULT_E_D, DEFAULT_F, DEFAULT_P_DARK};
use dpsmdi::finite_key::BudgetRule;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub channel: ChannelSection,
    pub asymptotic: SweepSection,
    pub decoy: DecoySection,
    pub qber_slices: SliceSection,
    pub finite_key: FiniteKeySection,
    pub montecarlo: MonteCarloSection,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            channel: ChannelSection::default(),
            asymptotic: SweepSection { l_min_km: 0.0, l_max_km: 300.0, l_step_km: 1.0 },
            decoy: DecoySection::default(),
            qber_slices: SliceSection::default(),
            finite_key: FiniteKeySection::default(),
            montecarlo: MonteCarloSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Detector efficiency, multiplied into each arm's fiber transmittance.
    pub eta_det: f64,
    pub p_dark: f64,
    pub e_d: f64,
    pub f: f64,
    pub alpha_db_per_km: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self { eta_det: DEFAULT_ETA_DET, p_dark: DEFAULT_P_DARK, e_d: DEFAULT_E_D, f: DEFAULT_F, alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM }
    }
}

impl ChannelSection {
    /// Parameters for a link of total length `total_km`, split evenly between the arms.
    pub fn at_distance(&self, total_km: f64) -> ChannelParams<f64> {
        self.base().at_distance(self.eta_det, total_km)
    }

    pub fn base(&self) -> ChannelParams<f64> {
        ChannelParams { eta_a: 1.0, eta_b: 1.0, p_dark: self.p_dark, e_d: self.e_d, alpha_db_per_km: self.alpha_db_per_km, f: self.f }
    }

    fn validate(&self) -> Result<()> {
        ensure!((0.0..=1.0).contains(&self.eta_det), "channel.eta_det must lie in [0, 1], got {}", self.eta_det);
        ensure!(self.alpha_db_per_km >= 0.0, "channel.alpha_db_per_km must be non-negative");
        self.base().validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub l_min_km: f64,
    pub l_max_km: f64,
    pub l_step_km: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { l_min_km: 0.0, l_max_km: 300.0, l_step_km: 10.0 }
    }
}

impl SweepSection {
    pub fn distances(&self) -> Vec<f64> {
        let n = ((self.l_max_km - self.l_min_km) / self.l_step_km + 1e-9).floor() as usize;
        (0..=n).map(|i| self.l_min_km + i as f64 * self.l_step_km).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        ensure!(self.l_min_km >= 0.0, "{name}.l_min_km must be non-negative");
        ensure!(self.l_max_km >= self.l_min_km, "{name}.l_max_km must be at least l_min_km");
        ensure!(self.l_step_km > 0.0, "{name}.l_step_km must be positive");
        ensure!((self.l_max_km - self.l_min_km) / self.l_step_km <= 1e6, "{name}: more than a million sweep points");
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoySection {
    pub mu_a: f64,
    pub mu_b: f64,
    pub n_slices: u32,
    #[serde(flatten)]
    pub sweep: SweepSection,
}

impl Default for DecoySection {
    fn default() -> Self {
        Self { mu_a: 0.5, mu_b: 0.5, n_slices: 16, sweep: SweepSection::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SliceSection {
    pub mu_a: f64,
    pub mu_b: f64,
    pub distance_km: f64,
    pub n_max: u32,
}

impl Default for SliceSection {
    fn default() -> Self {
        Self { mu_a: 0.5, mu_b: 0.5, distance_km: 50.0, n_max: 32 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    /// n + m <= (4/9) N
    Sifted,
    /// n + m <= N
    Total,
}

impl From<Budget> for BudgetRule {
    fn from(b: Budget) -> Self {
        match b {
            Budget::Sifted => BudgetRule::Sifted,
            Budget::Total => BudgetRule::Total,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiniteKeySection {
    pub epsilon: f64,
    pub epsilon_ec: f64,
    pub e_b: Vec<f64>,
    pub log10_n_min: f64,
    pub log10_n_max: f64,
    pub points_per_decade: u32,
    pub budget: Budget,
}

impl Default for FiniteKeySection {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            epsilon_ec: 1e-10,
            e_b: vec![0.01, 0.03, 0.05],
            log10_n_min: 6.0,
            log10_n_max: 14.0,
            points_per_decade: 4,
            budget: Budget::Sifted,
        }
    }
}

impl FiniteKeySection {
    pub fn signal_counts(&self) -> Vec<u64> {
        let k = ((self.log10_n_max - self.log10_n_min) * self.points_per_decade as f64 + 1e-9).floor() as u32;
        (0..=k).map(|i| 10f64.powf(self.log10_n_min + i as f64 / self.points_per_decade as f64).round() as u64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    /// Per-arm transmissivity including the detector.
    pub eta_a: f64,
    pub eta_b: f64,
    pub n_trials: u64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { eta_a: 0.1, eta_b: 0.1, n_trials: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub mc_trials: u64,
    pub noise_pairs: usize,
    pub bessel_draws: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        let v = dpsmdi::verify::VerifyConfig::default();
        Self { mc_trials: v.mc_trials, noise_pairs: v.noise_pairs, bessel_draws: v.bessel_draws }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks every physical range; called before any command runs.
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.asymptotic.validate("asymptotic")?;
        self.decoy.sweep.validate("decoy")?;
        let d = &self.decoy;
        ensure!(d.mu_a > 0.0 && d.mu_b > 0.0, "decoy.mu_a and decoy.mu_b must be positive");
        ensure!(d.n_slices >= 1, "decoy.n_slices must be at least 1");
        let s = &self.qber_slices;
        ensure!(s.mu_a > 0.0 && s.mu_b > 0.0, "qber_slices.mu_a and qber_slices.mu_b must be positive");
        ensure!(s.distance_km >= 0.0, "qber_slices.distance_km must be non-negative");
        ensure!(s.n_max >= 1, "qber_slices.n_max must be at least 1");
        let f = &self.finite_key;
        ensure!(f.epsilon > f.epsilon_ec && f.epsilon_ec >= 0.0, "finite_key needs epsilon > epsilon_ec >= 0");
        ensure!(!f.e_b.is_empty(), "finite_key.e_b must list at least one error rate");
        if let Some(e) = f.e_b.iter().find(|e| !(0.0..=0.5).contains(*e)) {
            bail!("finite_key.e_b entries must lie in [0, 0.5], got {e}");
        }
        ensure!(f.log10_n_min >= 0.0 && f.log10_n_max >= f.log10_n_min, "finite_key needs 0 <= log10_n_min <= log10_n_max");
        ensure!(f.log10_n_max <= 18.0, "finite_key.log10_n_max must be at most 18");
        ensure!(f.points_per_decade >= 1, "finite_key.points_per_decade must be at least 1");
        let m = &self.montecarlo;
        ensure!((0.0..=1.0).contains(&m.eta_a) && (0.0..=1.0).contains(&m.eta_b), "montecarlo.eta_a and eta_b must lie in [0, 1]");
        ensure!(m.n_trials >= 1, "montecarlo.n_trials must be at least 1");
        let v = &self.verify;
        ensure!(v.mc_trials >= 1 && v.noise_pairs >= 1 && v.bessel_draws >= 1, "verify counts must be at least 1");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = RunConfig::from_toml("seed = 7\n[channel]\np_dark = 1e-5\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.channel.p_dark, 1e-5);
        assert_eq!(c.channel.e_d, DEFAULT_E_D);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("sed = 7\n").is_err());
        assert!(RunConfig::from_toml("[channel]\npdark = 1e-5\n").is_err());
        assert!(RunConfig::from_toml("[decoy]\nl_stp_km = 2\n").is_err());
    }

    #[test]
    fn ranges_checked() {
        let mut c = RunConfig::default();
        c.channel.p_dark = 1.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.finite_key.epsilon_ec = 1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.asymptotic.l_step_km = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn grids() {
        let s = SweepSection { l_min_km: 0.0, l_max_km: 1.0, l_step_km: 0.1 };
        assert_eq!(s.distances().len(), 11);
        let f = FiniteKeySection { log10_n_min: 6.0, log10_n_max: 8.0, points_per_decade: 2, ..Default::default() };
        assert_eq!(f.signal_counts(), vec![1_000_000, 3_162_278, 10_000_000, 31_622_777, 100_000_000]);
    }
}
