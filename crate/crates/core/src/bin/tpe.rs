use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tpe_dg::cli::{self, CliError, Experiment, RunConfig};
use tpe_dg::mesh::{generate_cartesian, generate_voronoi, Rect};

/// Polytopal DG solver for nonlinear thermo-poroelasticity.
#[derive(Parser)]
#[command(name = "tpe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and write it as JSON.
    Mesh(MeshArgs),
    /// Manufactured-solution convergence study.
    Convergence(RunArgs),
    /// Convergence studies for degenerate coefficient sets.
    Robustness(RunArgs),
    /// Injection/extraction run with field snapshots and midline probes.
    Geothermal(RunArgs),
    /// Run whatever experiment the configuration describes.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; merged over the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named configuration, e.g. fig1-l1, table4-test-i, geothermal-a.
    #[arg(long)]
    preset: Option<String>,
    /// Worker thread cap.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory, overriding the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Voronoi mesh with this many cells.
    #[arg(long, conflicts_with = "cartesian")]
    voronoi: Option<usize>,
    /// Cartesian mesh, `NXxNY`.
    #[arg(long)]
    cartesian: Option<String>,
    /// `x0,x1,y0,y1`.
    #[arg(long, default_value = "0,1,0,1")]
    domain: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Lloyd iterations for Voronoi meshes.
    #[arg(long, default_value_t = 20)]
    lloyd: usize,
}

fn parse_domain(s: &str) -> Result<Rect, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--domain {s}: {e}")))?;
    match v[..] {
        [x0, x1, y0, y1] => Ok(Rect::new(x0, x1, y0, y1)),
        _ => Err(CliError::Config(format!("--domain needs four values, got `{s}`"))),
    }
}

fn parse_divisions(s: &str) -> Result<[usize; 2], CliError> {
    let bad = || CliError::Config(format!("--cartesian expects NXxNY, got `{s}`"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

fn set_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf), CliError> {
    set_jobs(args.jobs)?;
    let mut cfg = RunConfig::load(args.config.as_deref(), args.preset.as_deref())?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    let out = cfg.output.dir.clone();
    Ok((cfg, out))
}

fn mesh(args: &MeshArgs) -> Result<(), CliError> {
    let generated = match (args.voronoi, &args.cartesian) {
        (Some(n), _) => Some(generate_voronoi(parse_domain(&args.domain)?, n, args.lloyd, args.seed)?),
        (None, Some(c)) => {
            let [nx, ny] = parse_divisions(c)?;
            Some(generate_cartesian(parse_domain(&args.domain)?, nx, ny)?)
        }
        (None, None) => None,
    };
    match generated {
        Some(m) => {
            set_jobs(args.run.jobs)?;
            let out = args.run.out.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out)?;
            let path = out.join("mesh.json");
            m.write_json(&path)?;
            println!("{}", cli::mesh_summary(&m));
            println!("wrote {}", path.display());
        }
        None => {
            let (cfg, out) = load(&args.run)?;
            for (i, m) in cli::cmd_mesh(&cfg, &out)?.iter().enumerate() {
                println!("level {i}: {}", cli::mesh_summary(m));
            }
        }
    }
    Ok(())
}

fn experiment(args: &RunArgs, want: Option<Experiment>) -> Result<(), CliError> {
    let (cfg, out) = load(args)?;
    let outcome = match want {
        Some(Experiment::Convergence) => cli::Outcome::Convergence(cli::cmd_convergence(&cfg, &out)?),
        Some(Experiment::Robustness) => cli::Outcome::Robustness(cli::cmd_robustness(&cfg, &out)?),
        Some(Experiment::Geothermal) => cli::Outcome::Geothermal(cli::cmd_geothermal(&cfg, &out)?),
        _ => cli::run(&cfg, &out)?,
    };
    print!("{outcome}");
    println!("output in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TPE_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Mesh(a) => mesh(a),
        Command::Convergence(a) => experiment(a, Some(Experiment::Convergence)),
        Command::Robustness(a) => experiment(a, Some(Experiment::Robustness)),
        Command::Geothermal(a) => experiment(a, Some(Experiment::Geothermal)),
        Command::Run(a) => experiment(a, None),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
