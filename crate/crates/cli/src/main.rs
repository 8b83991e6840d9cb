use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nlcap_cli::commands::{self, Artifacts};
use nlcap_cli::config::{Settings, SETTINGS};

static SETTINGS_HELP: LazyLock<String> = LazyLock::new(|| {
    let mut s = String::from("Settings (config file key, default, meaning):\n");
    for (key, default, meaning) in SETTINGS {
        s.push_str(&format!("  {key:<18} {default:<10} {meaning}\n"));
    }
    s
});

#[derive(Parser)]
#[command(name = "nlcap", version, about = "Capacity of scalar nonlinear channels with Gaussian noise")]
#[command(after_help = SETTINGS_HELP.as_str())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutual information of a fixed source family across powers
    MiSweep(Options),
    /// Best probabilities for a fixed constellation across powers
    ShapingSweep(Options),
    /// Channel capacity and capacity-achieving distributions across powers
    CapacitySweep(Options),
    /// Capacity sweep followed by the monotonicity, running-maximum,
    /// time-sharing and peak-power checks
    Validate(Options),
}

#[derive(Args)]
#[command(after_help = SETTINGS_HELP.as_str())]
struct Options {
    /// Flat `key = value` settings file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Main CSV output (stdout if omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Distribution CSV (defaults to `<output>.distributions.csv` next to the output)
    #[arg(long)]
    distributions: Option<PathBuf>,
    /// tanh or identity [default: tanh]
    #[arg(long)]
    channel: Option<String>,
    /// Saturation level of the tanh nonlinearity [default: 10]
    #[arg(long)]
    amax: Option<f64>,
    /// Noise standard deviation [default: 1]
    #[arg(long)]
    sigma_z: Option<f64>,
    /// gaussian, uniform, exponential, ook, bpsk or pam [default: gaussian]
    #[arg(long)]
    source: Option<String>,
    /// ook, bpsk or pam [default: pam]
    #[arg(long)]
    constellation: Option<String>,
    /// Points of a pam constellation [default: 8]
    #[arg(long)]
    order: Option<usize>,
    /// [default: 0.1]
    #[arg(long)]
    p_min: Option<f64>,
    /// [default: 100000]
    #[arg(long)]
    p_max: Option<f64>,
    /// [default: 8]
    #[arg(long)]
    points_per_decade: Option<usize>,
    /// Output quadrature points, odd [default: 4097]
    #[arg(long)]
    grid_points: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Particles of the default initialization [default: 32]
    #[arg(long)]
    initial_n: Option<usize>,
    /// Largest particle count [default: 256]
    #[arg(long)]
    max_n: Option<usize>,
    /// Extra initializations per power [default: 2]
    #[arg(long)]
    restarts: Option<usize>,
    /// Iterations per ascent run [default: 3000]
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Tolerated capacity drop in bits [default: 0.001]
    #[arg(long)]
    slack: Option<f64>,
}

impl Options {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    s.set(stringify!($field), v)?;
                })*
            };
        }
        apply!(
            channel, amax, sigma_z, source, constellation, order, p_min, p_max,
            points_per_decade, grid_points, seed, initial_n, max_n, restarts,
            max_iterations, slack
        );
        Ok(s)
    }
}

fn write_to(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn distributions_path(opts: &Options) -> Option<PathBuf> {
    if let Some(p) = &opts.distributions {
        return Some(p.clone());
    }
    let out = opts.output.as_ref()?;
    let stem = out.file_stem()?.to_string_lossy().into_owned();
    Some(out.with_file_name(format!("{stem}.distributions.csv")))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (opts, run): (&Options, fn(&_) -> Result<Artifacts>) = match &cli.command {
        Command::MiSweep(o) => (o, commands::mi_sweep),
        Command::ShapingSweep(o) => (o, commands::shaping_sweep),
        Command::CapacitySweep(o) => (o, commands::capacity_sweep),
        Command::Validate(o) => (o, commands::validate),
    };
    let cfg = opts.settings()?.validate()?;
    let artifacts = run(&cfg)?;

    if let Some(report) = &artifacts.report {
        if opts.output.is_some() {
            print!("{report}");
        } else {
            eprint!("{report}");
        }
    }
    write_to(opts.output.as_deref(), &artifacts.csv)?;
    if let (Some(dist), Some(path)) = (&artifacts.distributions, distributions_path(opts)) {
        write_to(Some(&path), dist)?;
    }

    if artifacts.total_points > 0 && artifacts.failed_points == artifacts.total_points {
        bail!("every power point failed");
    }
    if artifacts.failed_points > 0 {
        eprintln!(
            "warning: {} of {} power points failed; see the comments at the end of the CSV",
            artifacts.failed_points, artifacts.total_points
        );
    }
    if artifacts.failed_checks > 0 {
        bail!("{} validation checks failed", artifacts.failed_checks);
    }
    Ok(())
}
