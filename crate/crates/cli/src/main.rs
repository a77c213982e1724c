mod commands;
mod config;
mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dpsmdi::verify::{overall, Status};

use commands::Table;
use config::{Budget, RunConfig};
use svg::{Plot, Series};

/// Key-rate sweeps, Monte Carlo runs and self-checks for three-pulse DPS MDI-QKD.
#[derive(Parser, Debug)]
#[command(name = "dpsmdi", version)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write an SVG plot of the result.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ChannelArgs {
    #[arg(long)]
    eta_det: Option<f64>,
    #[arg(long)]
    p_dark: Option<f64>,
    #[arg(long)]
    e_d: Option<f64>,
    /// Error-correction inefficiency.
    #[arg(long)]
    f: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    #[arg(long)]
    l_min: Option<f64>,
    #[arg(long)]
    l_max: Option<f64>,
    #[arg(long)]
    l_step: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single-photon rate against distance, with the non-MDI reference.
    Asymptotic {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Decoy-state rate with phase slicing against distance.
    Decoy {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        mu_a: Option<f64>,
        #[arg(long)]
        mu_b: Option<f64>,
        #[arg(long)]
        n_slices: Option<u32>,
    },
    /// QBER of the matched slice against the number of slices.
    QberSlices {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        mu_a: Option<f64>,
        #[arg(long)]
        mu_b: Option<f64>,
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        n_max: Option<u32>,
    },
    /// Optimized finite-key rate against the number of exchanged signals.
    FiniteKey {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        epsilon_ec: Option<f64>,
        /// Comma-separated bit error rates.
        #[arg(long, value_delimiter = ',')]
        e_b: Option<Vec<f64>>,
        #[arg(long)]
        log10_n_min: Option<f64>,
        #[arg(long)]
        log10_n_max: Option<f64>,
        #[arg(long)]
        points_per_decade: Option<u32>,
        #[arg(long, value_enum)]
        budget: Option<Budget>,
    },
    /// Event-level simulation of single-photon rounds.
    Montecarlo {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        eta_a: Option<f64>,
        #[arg(long)]
        eta_b: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Write one CSV row per trial to this path.
        #[arg(long)]
        trial_log: Option<PathBuf>,
    },
    /// Run the check suite; exits 1 if any check fails.
    Verify {
        #[arg(long)]
        mc_trials: Option<u64>,
        #[arg(long)]
        noise_pairs: Option<usize>,
        #[arg(long)]
        bessel_draws: Option<usize>,
    },
    /// Export the reconciliation table derived from the optics.
    Table,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ChannelArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.channel.eta_det, self.eta_det);
        set(&mut c.channel.p_dark, self.p_dark);
        set(&mut c.channel.e_d, self.e_d);
        set(&mut c.channel.f, self.f);
        set(&mut c.channel.alpha_db_per_km, self.alpha);
    }
}

impl SweepArgs {
    fn apply(self, s: &mut config::SweepSection) {
        set(&mut s.l_min_km, self.l_min);
        set(&mut s.l_max_km, self.l_max);
        set(&mut s.l_step_km, self.l_step);
    }
}

fn effective_config(cli: &Cli, command: Command) -> Result<(RunConfig, Command)> {
    let mut c = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    set(&mut c.seed, cli.seed);
    let command = match command {
        Command::Asymptotic { channel, sweep } => {
            channel.apply(&mut c);
            sweep.apply(&mut c.asymptotic);
            Command::Asymptotic { channel: ChannelArgs::default(), sweep: SweepArgs::default() }
        }
        Command::Decoy { channel, sweep, mu_a, mu_b, n_slices } => {
            channel.apply(&mut c);
            sweep.apply(&mut c.decoy.sweep);
            set(&mut c.decoy.mu_a, mu_a);
            set(&mut c.decoy.mu_b, mu_b);
            set(&mut c.decoy.n_slices, n_slices);
            Command::Decoy { channel: ChannelArgs::default(), sweep: SweepArgs::default(), mu_a: None, mu_b: None, n_slices: None }
        }
        Command::QberSlices { channel, mu_a, mu_b, distance, n_max } => {
            channel.apply(&mut c);
            set(&mut c.qber_slices.mu_a, mu_a);
            set(&mut c.qber_slices.mu_b, mu_b);
            set(&mut c.qber_slices.distance_km, distance);
            set(&mut c.qber_slices.n_max, n_max);
            Command::QberSlices { channel: ChannelArgs::default(), mu_a: None, mu_b: None, distance: None, n_max: None }
        }
        Command::FiniteKey { epsilon, epsilon_ec, e_b, log10_n_min, log10_n_max, points_per_decade, budget } => {
            let f = &mut c.finite_key;
            set(&mut f.epsilon, epsilon);
            set(&mut f.epsilon_ec, epsilon_ec);
            set(&mut f.e_b, e_b);
            set(&mut f.log10_n_min, log10_n_min);
            set(&mut f.log10_n_max, log10_n_max);
            set(&mut f.points_per_decade, points_per_decade);
            set(&mut f.budget, budget);
            Command::FiniteKey {
                epsilon: None,
                epsilon_ec: None,
                e_b: None,
                log10_n_min: None,
                log10_n_max: None,
                points_per_decade: None,
                budget: None,
            }
        }
        Command::Montecarlo { channel, eta_a, eta_b, trials, trial_log } => {
            channel.apply(&mut c);
            set(&mut c.montecarlo.eta_a, eta_a);
            set(&mut c.montecarlo.eta_b, eta_b);
            set(&mut c.montecarlo.n_trials, trials);
            Command::Montecarlo { channel: ChannelArgs::default(), eta_a: None, eta_b: None, trials: None, trial_log }
        }
        Command::Verify { mc_trials, noise_pairs, bessel_draws } => {
            set(&mut c.verify.mc_trials, mc_trials);
            set(&mut c.verify.noise_pairs, noise_pairs);
            set(&mut c.verify.bessel_draws, bessel_draws);
            Command::Verify { mc_trials: None, noise_pairs: None, bessel_draws: None }
        }
        Command::Table => Command::Table,
    };
    c.validate()?;
    Ok((c, command))
}

fn write_table(t: &Table, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => t.write_csv(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
        None => t.write_csv(io::stdout().lock()),
    }
}

fn series(t: &Table, x: &str, ys: &[&str]) -> Vec<Series> {
    let xs = t.column(x).unwrap_or_default();
    ys.iter()
        .map(|y| Series { label: y.to_string(), points: xs.iter().copied().zip(t.column(y).unwrap_or_default()).collect() })
        .collect()
}

fn plot_for(command: &Command, t: &Table) -> Option<Plot> {
    let plot = |title: &str, x: &str, y: &str, log_y: bool, series: Vec<Series>| Plot {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_y,
        series,
    };
    match command {
        Command::Asymptotic { .. } => Some(plot(
            "Single-photon key rate",
            "distance (km)",
            "rate per pulse pair",
            true,
            series(t, "L_km", &["R_mdi", "R_dps_reference"]),
        )),
        Command::Decoy { .. } => Some(plot("Decoy-state key rate", "distance (km)", "rate", true, series(t, "L_km", &["R_modified"]))),
        Command::QberSlices { .. } => Some(plot("QBER by phase slicing", "slices N", "QBER", false, series(t, "N_slices", &["E_m0", "E_full"]))),
        Command::FiniteKey { .. } => {
            let ns = t.column("N_signals")?;
            let es = t.column("e_b")?;
            let rs = t.column("r")?;
            let mut groups: Vec<Series> = Vec::new();
            for ((n, e), r) in ns.iter().zip(&es).zip(&rs) {
                let label = format!("e_b = {e}");
                match groups.iter_mut().find(|s| s.label == label) {
                    Some(s) => s.points.push((n.log10(), *r)),
                    None => groups.push(Series { label, points: vec![(n.log10(), *r)] }),
                }
            }
            Some(plot("Finite-key rate", "log10 N", "rate per signal", false, groups))
        }
        _ => None,
    }
}

fn run(mut cli: Cli) -> Result<ExitCode> {
    let command = std::mem::replace(&mut cli.command, Command::Table);
    let (cfg, command) = effective_config(&cli, command)?;
    if cli.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring worker threads")?;
    }
    let table = match &command {
        Command::Asymptotic { .. } => commands::cmd_asymptotic(&cfg)?,
        Command::Decoy { .. } => commands::cmd_decoy(&cfg)?,
        Command::QberSlices { .. } => commands::cmd_qber_slices(&cfg)?,
        Command::FiniteKey { .. } => commands::cmd_finite_key(&cfg)?,
        Command::Montecarlo { trial_log, .. } => {
            if let Some(path) = trial_log {
                let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                commands::montecarlo_log(&cfg, BufWriter::new(f))?;
            }
            commands::cmd_montecarlo(&cfg)?
        }
        Command::Table => commands::cmd_table()?,
        Command::Verify { .. } => {
            let checks = commands::cmd_verify(&cfg);
            let mut err = io::stderr().lock();
            for c in &checks {
                writeln!(err, "[{:<7}] {} {}: {}", c.status.to_string(), c.criterion, c.name, c.detail)?;
            }
            let status = overall(&checks);
            writeln!(err, "verify: {status}")?;
            if cli.out.is_some() {
                write_table(&commands::verify_table(&checks), &cli.out)?;
            }
            return Ok(if status == Status::Pass { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    };
    write_table(&table, &cli.out)?;
    if let Some(path) = &cli.svg {
        match plot_for(&command, &table) {
            Some(p) => std::fs::write(path, p.render()).with_context(|| format!("writing {}", path.display()))?,
            None => bail!("no plot is defined for this command"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
