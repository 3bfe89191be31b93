use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fingersplit::cli::{cmd_bench, cmd_plan, exit_code, parse_grasp, RunConfig, EXIT_IO};
use fingersplit::Error;

#[derive(Parser)]
#[command(name = "fingersplit", version, about = "Three-finger precision grasp planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a grasp on one mesh.
    Plan(PlanArgs),
    /// Plan on every mesh of a list and write bench.csv.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hand description (JSON); the built-in 8-DOF hand when omitted.
    #[arg(long)]
    hand: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for data-parallel loops (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    /// Object mesh (.obj, .stl or .ply).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Seed of the antipodal sampler.
    #[arg(long)]
    seed: Option<u64>,
    /// Uniform scale applied to the mesh (e.g. 0.001 for millimetres).
    #[arg(long)]
    scale: Option<f64>,
    /// Parallel grasp 'c1x,c1y,c1z;c2x,c2y,c2z;vx,vy,vz' in model-frame meters.
    #[arg(long, allow_hyphen_values = true)]
    grasp: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Text file with one 'mesh [scale]' per line.
    #[arg(long)]
    list: PathBuf,
}

fn base_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if common.hand.is_some() {
        cfg.hand = common.hand.clone();
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Plan(args) => {
            let mut cfg = base_config(&args.common)?;
            if args.mesh.is_some() {
                cfg.mesh = args.mesh;
            }
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            if let Some(s) = args.scale {
                cfg.scale = s;
            }
            if let Some(g) = &args.grasp {
                cfg.grasp = Some(parse_grasp(g)?);
            }
            let workers = cfg.workers;
            Ok(fingersplit::par::with_workers(workers, || cmd_plan(&cfg)))
        }
        Command::Bench(args) => {
            let cfg = base_config(&args.common)?;
            Ok(cmd_bench(&cfg, &args.list))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
