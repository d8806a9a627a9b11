use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use xornet_cli::{
    cmd_baseline, cmd_evaluate, cmd_gen_cubes, cmd_search, cmd_sweep_cbc, parse_cbc_list,
    ExperimentConfig, Overrides, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(
    name = "xornet",
    version,
    about = "Low-power scan-test controller synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides XORNET_OUT_DIR and the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Controller levels (1 or 2)
    #[arg(long)]
    levels: Option<u8>,
    /// Maximum shift-cycle activity
    #[arg(long)]
    sca_limit: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize test cubes from the usage profile
    GenCubes(Common),
    /// Write the conventional controller
    Baseline(Common),
    /// Run the genetic search
    Search(Common),
    /// Evaluate a controller on a cube set
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        xornet: PathBuf,
        #[arg(long)]
        cubes: Option<PathBuf>,
        /// Also write per-cube outcomes
        #[arg(long)]
        per_cube: bool,
    },
    /// Search and evaluate across controller widths
    SweepCbc {
        #[command(flatten)]
        common: Common,
        /// Comma-separated control bit counts
        #[arg(long, default_value = "8,10,12,16,20")]
        cbc_list: String,
    },
}

fn config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    cfg.apply(
        &Overrides {
            seed: c.seed,
            out: c.out.clone(),
            levels: c.levels,
            sca_limit: c.sca_limit,
        },
        env_out,
    );
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCubes(c) => {
            let p = cmd_gen_cubes(&config(&c)?)?;
            println!("wrote {}", p.display());
        }
        Command::Baseline(c) => {
            let p = cmd_baseline(&config(&c)?)?;
            println!("wrote {}", p.display());
        }
        Command::Search(c) => {
            let out = cmd_search(&config(&c)?)?;
            println!("wrote {}", out.xornet.display());
            println!("wrote {}", out.trace.display());
        }
        Command::Evaluate {
            common,
            xornet,
            cubes,
            per_cube,
        } => {
            let out = cmd_evaluate(&config(&common)?, &xornet, cubes.as_deref(), per_cube)?;
            let r = &out.summary.report;
            println!(
                "uns={} scae={} ue={} mean_sca={:.4} patterns={} cycles={}",
                r.uns,
                r.scae,
                r.ue,
                r.mean_sca,
                out.summary.pattern_count,
                out.summary.total_cycles
            );
            println!("wrote {}", out.report.display());
            if let Some(p) = out.per_cube {
                println!("wrote {}", p.display());
            }
        }
        Command::SweepCbc { common, cbc_list } => {
            let list = parse_cbc_list(&cbc_list)?;
            let out = cmd_sweep_cbc(&config(&common)?, &list)?;
            for r in &out.rows {
                println!(
                    "cbc={} ue={} patterns={} cycles={}",
                    r.cbc, r.ue, r.pattern_count, r.total_cycles
                );
            }
            println!("wrote {}", out.csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
