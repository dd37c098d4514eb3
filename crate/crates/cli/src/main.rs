use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use commands::Surface;

#[derive(Parser, Debug)]
#[command(name = "reflectarray", version, about = "Terahertz reflectarray design and link simulation")]
struct Cli {
    /// JSON project configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration value, e.g. `--set substrate.thickness=3e-6`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Seed for both the layout perturbation and the simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Size the patch and check the substrate.
    Design,
    /// Generate the element grid and write layout.json and elements.csv.
    Layout {
        #[arg(long)]
        perturb: Option<String>,
    },
    /// Write the mask in one format.
    Export {
        #[arg(long, value_enum, default_value = "svg")]
        format: Format,
        #[arg(long)]
        perturb: Option<String>,
    },
    /// Far-field pattern CSV and main-lobe summary.
    Pattern {
        /// `uniform:<t>` or `random:<t>`.
        #[arg(long)]
        perturb: Option<String>,
        /// Evaluation frequency in Hz (repeatable); defaults to the design frequency.
        #[arg(long)]
        frequency: Vec<f64>,
    },
    /// Specular reflectance spectrum CSV and dip summary.
    Spectrum {
        #[arg(long)]
        perturb: Option<String>,
        /// Rotate the incident polarisation by 90 degrees.
        #[arg(long)]
        cross_pol: bool,
    },
    /// Link budget at the receiver direction.
    Link {
        #[arg(long, value_enum, default_value = "reflectarray")]
        surface: Surface,
        /// Scale the distances so the reflectarray link reaches the
        /// configured calibration SNR.
        #[arg(long)]
        calibrate: bool,
    },
    /// End-to-end QPSK (or multi-tone) simulation over the chosen surface.
    Simulate {
        #[arg(long, value_enum, default_value = "reflectarray")]
        surface: Surface,
        #[arg(long)]
        multitone: bool,
        /// Also write a transmitted QPSK frame, or the received multi-tone
        /// capture, as binary I/Q.
        #[arg(long)]
        dump_waveform: bool,
    },
    /// Monte Carlo tolerance or BER-versus-Eb/N0 sweep.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Svg,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepKind {
    Tolerance,
    Ber,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), commands::CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seeds.layout={seed}"));
        overrides.push(format!("seeds.simulation={seed}"));
    }
    let ctx = commands::Context::new(cli.config.as_deref(), &overrides, cli.out_dir)?;
    match cli.command {
        Command::Design => ctx.design(),
        Command::Layout { perturb } => ctx.layout(perturb.as_deref()),
        Command::Export { format, perturb } => {
            let f = match format {
                Format::Svg => reflectarray::mask::MaskFormat::Svg,
                Format::Json => reflectarray::mask::MaskFormat::Json,
                Format::Csv => reflectarray::mask::MaskFormat::Csv,
            };
            ctx.export(f, perturb.as_deref())
        }
        Command::Pattern { perturb, frequency } => ctx.pattern(perturb.as_deref(), &frequency),
        Command::Spectrum { perturb, cross_pol } => ctx.spectrum(perturb.as_deref(), cross_pol),
        Command::Link { surface, calibrate } => ctx.link(surface, calibrate),
        Command::Simulate {
            surface,
            multitone,
            dump_waveform,
        } => ctx.simulate(surface, multitone, dump_waveform),
        Command::Sweep { kind } => match kind {
            SweepKind::Tolerance => ctx.sweep_tolerance(),
            SweepKind::Ber => ctx.sweep_ber(),
        },
    }
}
