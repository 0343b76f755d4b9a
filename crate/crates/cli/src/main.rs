use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thinwire::cli_io::{self, ExperimentConfig, PresetKind};
use thinwire::{Error, Result};

#[derive(Parser)]
#[command(name = "thinwire", version, about = "Coupled 1D-3D electrothermal solver with thin wires")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write its fields.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run a refinement study and write study.csv.
    Study {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma separated levels overriding the configuration.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Describe the grid and wires of a configuration.
    Info {
        #[command(flatten)]
        source: Source,
        /// Also print the configuration with every default filled in.
        #[arg(long)]
        toml: bool,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: resistor_0d2d, straight_wire, bent_wire, chip_package or custom.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => cli_io::load_config_file(p),
            (None, Some(name)) => PresetKind::from_name(name)
                .map(ExperimentConfig::preset)
                .ok_or_else(|| Error::ConfigInvalid(vec![format!("unknown preset {name:?}")])),
            (None, None) => Err(Error::ConfigInvalid(vec!["need --config or --preset".into()])),
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { source, out, threads } => {
            let cfg = source.load()?;
            thinwire::set_threads(threads);
            let s = cli_io::run(&cfg, &out, |m| eprintln!("{m}"))?;
            for l in &s.lines {
                println!("{l}");
            }
            println!("wrote {} files to {}", s.files.len(), out.display());
        }
        Command::Study { source, out, levels, threads } => {
            let mut cfg = source.load()?;
            if cfg.preset == PresetKind::Custom {
                return Err(Error::ConfigInvalid(vec!["custom setups have no refinement study".into()]));
            }
            if let (Some(l), Some(study)) = (levels, cfg.study.as_mut()) {
                study.levels = Some(l);
            }
            let errors = cfg.validate();
            if !errors.is_empty() {
                return Err(Error::ConfigInvalid(errors));
            }
            thinwire::set_threads(threads);
            let report = cli_io::run_study(&cfg, &cfg.levels(), |m| eprintln!("{m}"))?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("study.csv");
            cli_io::write_study_csv(BufWriter::new(File::create(&path)?), &report)?;
            for (m, order) in &report.fits {
                println!("{m}: fitted order {order:.3}");
            }
            println!("wrote {}", path.display());
        }
        Command::Info { source, toml } => {
            let cfg = source.load()?;
            for l in cli_io::describe(&cfg)? {
                println!("{l}");
            }
            if toml {
                println!();
                print!("{}", cfg.to_toml()?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
