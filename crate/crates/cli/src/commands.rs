//! One function per subcommand; each returns the rows it would write.

use anyhow::{Context, Result};
use dpsmdi::asymptotic::{dps_reference_rate, secure_rate};
use dpsmdi::channel::{fiber_transmittance, ChannelParams};
use dpsmdi::decoy::{decoy_key_rate, decoy_rate_slice_sum_cost, overall_qber, sliced_gain_qber, SliceConfig};
use dpsmdi::finite_key::optimize_rate;
use dpsmdi::montecarlo::Simulator;
use dpsmdi::quadrature::QuadConfig;
use dpsmdi::sifting::reconciliation_table;
use dpsmdi::verify::{self, Check, VerifyConfig};
use rayon::prelude::*;

use crate::config::RunConfig;

/// A CSV-shaped result: header plus rows of already formatted cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&'static str]) -> Self {
        Self { headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.headers)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Numeric column by header, `NaN` where a cell does not parse.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }
}

/// Shortest representation that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn cmd_asymptotic(cfg: &RunConfig) -> Result<Table> {
    let ch = &cfg.channel;
    let mut t = Table::new(&["L_km", "Y11", "e_b", "R_mdi", "R_dps_reference"]);
    t.rows = cfg
        .asymptotic
        .distances()
        .par_iter()
        .map(|&l| {
            let r = secure_rate(&ch.at_distance(l));
            let dps = dps_reference_rate(ch.eta_det * fiber_transmittance(ch.alpha_db_per_km, l), &ch.base());
            vec![num(l), num(r.y11), num(r.e_b), num(r.rate), num(dps)]
        })
        .collect();
    Ok(t)
}

pub fn cmd_decoy(cfg: &RunConfig) -> Result<Table> {
    let d = &cfg.decoy;
    let quad = QuadConfig::default();
    let mut t = Table::new(&["L_km", "Q_mu", "E_mu", "Q_m0", "E_m0", "Q11", "Q0_vacuum", "R_modified", "R_slice_sum_cost"]);
    t.rows = d
        .sweep
        .distances()
        .par_iter()
        .map(|&l| -> Result<Vec<String>> {
            let p = cfg.channel.at_distance(l);
            let r = decoy_key_rate(d.mu_a, d.mu_b, &p, d.n_slices, &quad).with_context(|| format!("decoy rate at {l} km"))?;
            let summed = decoy_rate_slice_sum_cost(d.mu_a, d.mu_b, &p, d.n_slices, &quad)?;
            Ok(vec![num(l), num(r.q_mu), num(r.e_mu), num(r.q_m0), num(r.e_m0), num(r.q11), num(r.vacuum), num(r.rate), num(summed)])
        })
        .collect::<Result<_>>()?;
    Ok(t)
}

pub fn cmd_qber_slices(cfg: &RunConfig) -> Result<Table> {
    let s = &cfg.qber_slices;
    let p = cfg.channel.at_distance(s.distance_km);
    let quad = QuadConfig::default();
    let e_full = overall_qber(s.mu_a, s.mu_b, &p)?;
    let mut t = Table::new(&["N_slices", "E_m0", "E_full"]);
    t.rows = (1..=s.n_max)
        .into_par_iter()
        .map(|n| -> Result<Vec<String>> {
            let g = sliced_gain_qber(s.mu_a, s.mu_b, &p, SliceConfig::new(n, 0)?, &quad)?;
            Ok(vec![n.to_string(), num(g.qber), num(e_full)])
        })
        .collect::<Result<_>>()?;
    Ok(t)
}

pub fn cmd_finite_key(cfg: &RunConfig) -> Result<Table> {
    let f = &cfg.finite_key;
    let points: Vec<(f64, u64)> = f.e_b.iter().flat_map(|&e| f.signal_counts().into_iter().map(move |n| (e, n))).collect();
    let mut t = Table::new(&["N_signals", "e_b", "r", "n_opt", "m_opt", "eps_bar", "eps_bar_prime"]);
    t.rows = points
        .par_iter()
        .map(|&(e, n)| -> Result<Vec<String>> {
            let o = optimize_rate(n, f.epsilon, f.epsilon_ec, e, f.budget.into())?;
            Ok(vec![n.to_string(), num(e), num(o.r), o.n.to_string(), o.m.to_string(), num(o.eps_bar), num(o.eps_bar_prime)])
        })
        .collect::<Result<_>>()?;
    Ok(t)
}

fn montecarlo_params(cfg: &RunConfig) -> ChannelParams<f64> {
    cfg.channel.base().with_eta(cfg.montecarlo.eta_a, cfg.montecarlo.eta_b)
}

pub fn cmd_montecarlo(cfg: &RunConfig) -> Result<Table> {
    let m = &cfg.montecarlo;
    let est = Simulator::new(&montecarlo_params(cfg))?.run(m.n_trials, cfg.seed)?;
    let mut t = Table::new(&["name", "value", "stderr", "n_trials", "seed"]);
    let row = |name: String, v: f64, se: f64| vec![name, num(v), num(se), m.n_trials.to_string(), cfg.seed.to_string()];
    t.rows.push(row("Y11".into(), est.y11_hat, est.y11_stderr));
    t.rows.push(row("e_b".into(), est.e_b_hat, est.e_b_stderr));
    let n = m.n_trials as f64;
    let multi = est.multi_click as f64 / n;
    t.rows.push(row("multi_click".into(), multi, (multi * (1.0 - multi) / n).sqrt()));
    for (o, f) in est.outcome_frequencies() {
        t.rows.push(row(format!("freq {o}"), f, (f * (1.0 - f) / n).sqrt()));
    }
    Ok(t)
}

/// Per-trial records for `--trial-log`.
pub fn montecarlo_log<W: std::io::Write>(cfg: &RunConfig, w: W) -> Result<()> {
    let sim = Simulator::new(&montecarlo_params(cfg))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "phases", "a_survived", "b_survived", "dark_mask", "click_mask", "outcome", "decision", "error"])?;
    for r in sim.records(cfg.montecarlo.n_trials, cfg.seed) {
        let bits: String = r.phase_setting.bits().expect("discrete").iter().map(|&b| if b { '1' } else { '0' }).collect();
        out.write_record([
            r.index.to_string(),
            bits,
            r.loss_pattern.a_survived.to_string(),
            r.loss_pattern.b_survived.to_string(),
            r.dark_pattern.to_string(),
            r.click_mask.to_string(),
            r.outcome.map_or_else(|| "multi".to_string(), |o| o.to_string()),
            format!("{:?}", r.decision.action()),
            r.error.map_or_else(String::new, |e| e.to_string()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_table() -> Result<Table> {
    let mut t = Table::new(&["outcome", "action", "phase_used", "bit_flip", "bell_state"]);
    for row in reconciliation_table()? {
        t.rows.push(vec![
            row.outcome.to_string(),
            format!("{:?}", row.decision.action()),
            row.decision.phase_used().map_or_else(String::new, |p| p.to_string()),
            row.decision.bit_flip().map_or_else(String::new, |b| b.to_string()),
            row.bell_state.map_or_else(String::new, |b| b.to_string()),
        ]);
    }
    Ok(t)
}

pub fn cmd_verify(cfg: &RunConfig) -> Vec<Check> {
    let v = VerifyConfig {
        mc_trials: cfg.verify.mc_trials,
        seed: cfg.seed,
        noise_pairs: cfg.verify.noise_pairs,
        bessel_draws: cfg.verify.bessel_draws,
    };
    verify::run_all(&v)
}

pub fn verify_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["criterion", "status", "check", "detail"]);
    t.rows = checks.iter().map(|c| vec![c.criterion.to_string(), c.status.to_string(), c.name.clone(), c.detail.clone()]).collect();
    t
}
