use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expsplit_core::harness::{write_outputs, Workbench};
use expsplit_core::verify::run_verification;
use expsplit_core::{NormKind, SplittingScheme, StudyConfig};

#[derive(Parser)]
#[command(name = "expsplit", version, about = "Convergence studies for exponential dimension splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure errors against a same-grid reference and fit observed orders.
    Run(RunArgs),
    /// Check the integrators against dense matrix exponentials on tiny grids.
    Verify {
        /// Print the results as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON file with keys matching the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// example1, example2, example3 or manufactured:<name>.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<SplittingScheme>>,
    /// l2, dual or frac:<gamma>.
    #[arg(long)]
    norm: Option<NormKind>,
    /// Interior nodes per direction.
    #[arg(long)]
    grid: Option<usize>,
    /// Final time.
    #[arg(long = "T")]
    final_time: Option<f64>,
    #[arg(long)]
    kmin: Option<u32>,
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long)]
    ref_factor: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Slopes of the guide lines drawn in the plot.
    #[arg(long, value_delimiter = ',')]
    guides: Option<Vec<f64>>,
}

fn load_config(args: RunArgs) -> Result<StudyConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?
        }
        None => StudyConfig::default(),
    };
    if let Some(v) = args.problem {
        cfg.problem = v;
    }
    if let Some(v) = args.schemes {
        cfg.schemes = v;
    }
    if let Some(v) = args.norm {
        cfg.norm = v;
    }
    if let Some(v) = args.grid {
        cfg.grid = v;
    }
    if let Some(v) = args.final_time {
        cfg.final_time = v;
    }
    if let Some(v) = args.kmin {
        cfg.kmin = v;
    }
    if let Some(v) = args.kmax {
        cfg.kmax = v;
    }
    if let Some(v) = args.ref_factor {
        cfg.ref_factor = v;
    }
    if let Some(v) = args.out {
        cfg.out = Some(v);
    }
    if args.plot {
        cfg.plot = true;
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = args.guides {
        cfg.guides = v;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), String> {
    let cfg = load_config(args)?;
    cfg.validate().map_err(|e| e.to_string())?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| "no output directory given (--out or \"out\" in the config)".to_string())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| e.to_string())?;
    let report = pool
        .install(|| Workbench::new().run(&cfg))
        .map_err(|e| e.to_string())?;
    let files = write_outputs(&report, &out, cfg.plot).map_err(|e| e.to_string())?;

    println!(
        "{} on {} grid, T = {}, norm {}, reference gap {:.3e}",
        report.problem, report.grid, report.final_time, report.norm, report.reference_gap
    );
    for s in &report.schemes {
        match s.fit {
            Some(fit) => println!(
                "  {:<8} order {:.3} (residual {:.2e}, {} points)",
                s.scheme.name(),
                fit.order,
                fit.residual,
                fit.points_used
            ),
            None => println!("  {:<8} too few points above the error floor", s.scheme.name()),
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn verify(json: bool) -> Result<bool, String> {
    let report = run_verification();
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    } else {
        for c in &report.checks {
            println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Verify { json } => verify(json),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
