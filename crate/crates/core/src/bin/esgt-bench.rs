use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use esgt::bench::{self, parse_list, ScenarioConfig};
use esgt::Result;

#[derive(Parser)]
#[command(
    name = "esgt-bench",
    version,
    about = "Extremum seeking gradient tracking benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single instance, per-round metrics CSV.
    Run(ScenarioArgs),
    /// Mean relative errors over `n-instances` seeds.
    Montecarlo(ScenarioArgs),
    /// Asymptotic floor for each (gamma, delta) pair.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated step sizes.
        #[arg(long, default_value = "0.04,0.01")]
        gammas: String,
        /// Comma-separated dither amplitudes.
        #[arg(long, default_value = "0.2,0.1,0.05")]
        deltas: String,
    },
    /// Check a dither period set and print the resulting configuration.
    ValidateDither {
        #[arg(long)]
        dim: usize,
        /// Comma-separated odd-component periods; the recipe is used if absent.
        #[arg(long)]
        periods: Option<String>,
        #[arg(long, default_value_t = 3)]
        tau0: u64,
        #[arg(long, default_value_t = 2)]
        tau0i: u64,
        #[arg(long, default_value_t = 0.0)]
        phi0: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
    },
}

/// Every flag overrides the `--config` file, which overrides the defaults.
#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n_agents: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    edge_prob: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    tau0: Option<String>,
    #[arg(long)]
    tau0i: Option<String>,
    #[arg(long)]
    phi0: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    probe_every: Option<String>,
    #[arg(long)]
    n_instances: Option<String>,
    #[arg(long)]
    base_seed: Option<String>,
    #[arg(long)]
    init_radius: Option<String>,
    /// Comma-separated source coordinates.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    per_instance: bool,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        let pairs = [
            ("scenario", &self.scenario),
            ("n-agents", &self.n_agents),
            ("dim", &self.dim),
            ("edge-prob", &self.edge_prob),
            ("gamma", &self.gamma),
            ("delta", &self.delta),
            ("tau0", &self.tau0),
            ("tau0i", &self.tau0i),
            ("phi0", &self.phi0),
            ("rounds", &self.rounds),
            ("probe-every", &self.probe_every),
            ("n-instances", &self.n_instances),
            ("base-seed", &self.base_seed),
            ("init-radius", &self.init_radius),
            ("target", &self.target),
            ("sigma", &self.sigma),
            ("output", &self.output),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.target.is_some() && self.dim.is_none() {
            cfg.dim = cfg.target.len();
        }
        cfg.parallel |= self.parallel;
        cfg.per_instance |= self.per_instance;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let out = bench::run_scenario(&cfg)?;
            let last = out.record.last();
            println!(
                "round {}: cost_rel_err={:.3e} var_rel_err={:.3e} consensus_err={:.3e}",
                last.round, last.cost_rel_err, last.var_rel_err, last.consensus_err
            );
            println!(
                "wrote {} and {}",
                out.csv_path.display(),
                out.manifest_path.display()
            );
        }
        Command::Montecarlo(args) => {
            let cfg = args.resolve()?;
            let out = bench::run_montecarlo(&cfg)?;
            for (seed, e) in &out.failures {
                eprintln!("seed {seed} failed: {e}");
            }
            if let Some(last) = out.rows.last() {
                println!(
                    "round {}: mean cost_rel_err={:.3e} over {} instances",
                    last.round, last.cost_rel_err, last.instances
                );
            }
            println!("wrote {}", cfg.output.display());
        }
        Command::Sweep {
            scenario,
            gammas,
            deltas,
        } => {
            let cfg = scenario.resolve()?;
            let gammas: Vec<f64> = parse_list("gammas", &gammas)?;
            let deltas: Vec<f64> = parse_list("deltas", &deltas)?;
            let rows = bench::sweep(&cfg, &gammas, &deltas)?;
            print!("{}", bench::sweep_csv(&rows));
            let fit = bench::fit_ultimate_bound(&rows, cfg.n_agents)?;
            println!(
                "fit: C1={:.4} C2={:.4} rms residual={:.4} ({:.1}% of mean floor)",
                fit.c1,
                fit.c2,
                fit.rms_residual,
                100.0 * fit.rms_residual / fit.mean_floor
            );
        }
        Command::ValidateDither {
            dim,
            periods,
            tau0,
            tau0i,
            phi0,
            delta,
        } => {
            let periods = periods
                .map(|p| parse_list::<u64>("periods", &p))
                .transpose()?;
            let d = bench::validate_dither(dim, periods.as_deref(), tau0, tau0i, phi0, delta)?;
            println!("{d}");
            println!("common period {}", d.agent_period());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
