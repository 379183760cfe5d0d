use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use haps_core::config::{load_config_file, DateScenario, ScenarioConfig};
use haps_core::{oracle, output};

/// Solar-powered high-altitude platform simulator: flight state, battery
/// and NOMA downlink over solstice days.
#[derive(Parser, Debug)]
#[command(name = "haps", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate each selected date and write the per-hour series.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Run the fixed-altitude, equal-power baseline instead.
        #[arg(long)]
        baseline: bool,
        /// Also write per-iteration convergence traces.
        #[arg(long)]
        traces: bool,
    },
    /// Relative sum-rate gain of the optimiser over the baseline.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Parse and validate a configuration, then print it fully resolved.
    ValidateConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check the closed-form optima against brute-force search.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// TOML scenario file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// `ws`, `ss`, a configured date name or YYYY-MM-DD. Repeatable; every
    /// configured date when absent.
    #[arg(long = "date")]
    dates: Vec<String>,
    /// Per-user rate target (Mbit/s). Repeatable; replaces the configured list.
    #[arg(long = "qos")]
    qos: Vec<f64>,
}

fn load(path: Option<&PathBuf>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => load_config_file(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<(ScenarioConfig, Vec<DateScenario>)> {
        let mut config = load(self.config.as_ref())?;
        if let Some(seed) = self.seed {
            log::info!("command-line override: seed = {seed}");
            config.seed = seed;
        }
        if !self.qos.is_empty() {
            log::info!("command-line override: qos_mbps = {:?}", self.qos);
            config.qos_mbps = self.qos.clone();
        }
        config.validate()?;
        let dates = if self.dates.is_empty() {
            config.dates.clone()
        } else {
            self.dates.iter().map(|d| config.select_date(d)).collect::<Result<_, _>>()?
        };
        Ok((config, dates))
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep { scenario, baseline, traces } => {
            let (mut config, dates) = scenario.resolve()?;
            if baseline {
                log::info!("command-line override: baseline = true");
                config.baseline = true;
            }
            let (runs, files) = output::run_sweep(&config, &dates, &scenario.out, traces)?;
            for run in &runs {
                for t in &run.traces {
                    let ledger = &t.ledger;
                    println!(
                        "{} qos={} Mbit/s: daylight instants {}, day-total rate {:.1} Mbit/s, battery {:.2} -> {:.2} kWh, deficits {}",
                        run.date.name,
                        t.qos_mbps,
                        t.daylight_instants(),
                        t.total_rate() / 1e6,
                        ledger.initial_energy / 3.6e6,
                        ledger.energy() / 3.6e6,
                        ledger.deficit_count(),
                    );
                }
            }
            println!("wrote {} files to {}", files.len(), scenario.out.display());
        }
        Command::Compare { scenario } => {
            let (config, dates) = scenario.resolve()?;
            let (gains, _) = output::run_comparison(&config, &dates, &scenario.out)?;
            for g in &gains {
                println!(
                    "{} qos={} Mbit/s: gain {:+.2} % ({} baseline instants flagged)",
                    g.date,
                    g.qos_mbps,
                    100.0 * g.gain,
                    g.baseline_flagged.len()
                );
            }
            println!("wrote {}", scenario.out.join("gains.csv").display());
        }
        Command::ValidateConfig { config } => {
            let config = load(config.as_ref())?;
            println!("# config hash {}", config.hash());
            print!("{}", config.to_toml());
        }
        Command::Oracle { config, seed } => {
            let mut config = load(config.as_ref())?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let checks = oracle::audit(&config)?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                bail!("{failed} oracle check(s) failed");
            }
        }
    }
    Ok(())
}
