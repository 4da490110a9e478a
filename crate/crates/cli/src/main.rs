use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nfsec::channel::generate_scenario;
use nfsec::pattern::{beam_pattern, Grid};
use nfsec_cli::config::{parse_mode, parse_scheme};
use nfsec_cli::{emit_beam_pattern, emit_csv, emit_plot, emit_summary, run_single, run_sweep};
use nfsec_cli::{CliError, ExperimentConfig, Format};

#[derive(Parser, Debug)]
#[command(name = "nfsec", version, about = "Secure near-field beamfocusing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one scenario and print a summary.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "proposed")]
        scheme: String,
        #[arg(long, default_value = "s2")]
        mode: String,
        /// Fix the power-allocation factor instead of optimizing it.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Monte-Carlo sweep over ε or the power budget.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Restrict to these schemes (comma separated).
        #[arg(long, value_delimiter = ',')]
        scheme: Option<Vec<String>>,
        /// Restrict to these modes (comma separated).
        #[arg(long, value_delimiter = ',')]
        mode: Option<Vec<String>>,
        /// Sweep ε over these values instead of the configured sweep.
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
    },
    /// Signal and AN power over the cell for one solved scenario.
    Beampattern {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Parse and check a configuration file, then print it with defaults filled in.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    if let Some(f) = common.format {
        cfg.output.format = match f {
            FormatArg::Csv => "csv",
            FormatArg::Svg => "svg",
            FormatArg::Both => "both",
        }
        .into();
    }
    Ok(cfg)
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    Path::new(&cfg.output.dir).join(name)
}

fn cmd_run(common: &Common, scheme: &str, mode: &str, epsilon: Option<f64>) -> Result<(), CliError> {
    let cfg = load(common)?;
    cfg.validate()?;
    let scheme = parse_scheme(scheme)?;
    let mode = parse_mode(mode)?;
    if let Some(e) = epsilon {
        if !(e > 0.0 && e <= 1.0) {
            return Err(CliError::Config(format!("--epsilon must lie in (0, 1], got {e}")));
        }
    }
    let (scenario, channels) = generate_scenario(&cfg.scenario_config(0)?)?;
    let report = run_single(&cfg, &scenario, &channels, scheme, mode, epsilon, None)?;
    println!("scheme          {}", report.scheme);
    println!("mode            {}", report.mode);
    println!("min_sr_nats     {:.6}", report.min_sr_nats);
    println!("min_sr_bits     {:.6}", report.min_sr_bits());
    println!("bottleneck      eue {} / lue {}", report.argmin.0, report.argmin.1);
    println!("epsilon         {:.6}", report.state.epsilon);
    println!("iterations      {}", report.iterations);
    println!("converged       {}", report.converged);
    println!("radiated_power  {:.6e} W", report.radiated_power);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn cmd_sweep(
    common: &Common,
    schemes: Option<Vec<String>>,
    modes: Option<Vec<String>>,
    epsilon: Option<Vec<f64>>,
) -> Result<(), CliError> {
    let mut cfg = load(common)?;
    if let Some(s) = schemes {
        cfg.schemes = s;
    }
    if let Some(m) = modes {
        cfg.modes = m;
    }
    if let Some(e) = epsilon {
        cfg.sweep.epsilon = Some(e);
        cfg.sweep.power_dbm = None;
    }
    cfg.validate()?;
    let outcome = run_sweep(&cfg)?;
    for f in &outcome.failures {
        eprintln!(
            "failed: trial {} {} {} at {}: {}",
            f.trial, f.scheme, f.mode, f.sweep_value, f.message
        );
    }
    let format = cfg.format();
    let (var, _) = cfg.sweep_points();
    if format.csv() {
        emit_csv(&outcome.rows, &out_path(&cfg, "sweep.csv"))?;
        emit_summary(&outcome.rows, &out_path(&cfg, "summary.csv"))?;
    }
    if format.svg() {
        emit_plot(&outcome.rows, None, var.axis_label(), &out_path(&cfg, "sweep.svg"))?;
    }
    println!(
        "{} rows, {} failures, written to {}",
        outcome.rows.len(),
        outcome.failures.len(),
        cfg.output.dir.display()
    );
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Output(format!("{} sweep points failed", outcome.failures.len())))
    }
}

fn cmd_beampattern(
    common: &Common,
    scheme: Option<String>,
    mode: Option<String>,
    epsilon: Option<f64>,
) -> Result<(), CliError> {
    let mut cfg = load(common)?;
    if let Some(s) = scheme {
        cfg.beampattern.scheme = s;
    }
    if let Some(m) = mode {
        cfg.beampattern.mode = m;
    }
    if epsilon.is_some() {
        cfg.beampattern.epsilon = epsilon;
    }
    cfg.validate()?;
    let bp = &cfg.beampattern;
    let (scenario, channels) = generate_scenario(&cfg.scenario_config(0)?)?;
    let report = run_single(
        &cfg,
        &scenario,
        &channels,
        parse_scheme(&bp.scheme)?,
        parse_mode(&bp.mode)?,
        bp.epsilon,
        None,
    )?;
    let pattern = beam_pattern(&scenario, &report.state, Grid::new(bp.nx, bp.ny)?)?;
    let format: Format = cfg.format();
    emit_beam_pattern(&pattern, &out_path(&cfg, "beampattern"), format.csv(), format.svg())?;
    println!(
        "{} {} min_sr_bits {:.4}, {}x{} grid written to {}",
        report.scheme,
        report.mode,
        report.min_sr_bits(),
        bp.nx,
        bp.ny,
        cfg.output.dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { common, scheme, mode, epsilon } => cmd_run(&common, &scheme, &mode, epsilon),
        Command::Sweep { common, scheme, mode, epsilon } => cmd_sweep(&common, scheme, mode, epsilon),
        Command::Beampattern { common, scheme, mode, epsilon } => {
            cmd_beampattern(&common, scheme, mode, epsilon)
        }
        Command::ValidateConfig { config } => ExperimentConfig::from_path(&config).map(|c| {
            print!("{}", c.to_toml());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
