use std::path::PathBuf;
use std::process::ExitCode;

use bargmann::fields::Precision;
use bargmann::numeric::Vec3;
use bargmann::verify::{run_suite, Suite, SuiteReport, VerifyOptions};
use bargmann_cli::{dump_geometry, run_scenario, RunOutcome, Scenario, EXIT_ERROR, EXIT_GATE_FAILED, WORKERS_ENV};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "bargmann", version, about = "Quantum dynamics in accelerating and rotating frames")]
struct Cli {
    /// Floating-point width of written state dumps.
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double, global = true)]
    precision: PrecisionArg,

    /// Worker threads for scenario batches and suites (default: all cores).
    #[arg(long, env = WORKERS_ENV, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Single,
    Double,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files; exits 0 only if every declared gate passes.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Write artifacts to `<DIR>/<scenario name>` instead of the scenario's `output_dir`.
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Run an invariant suite (geometry, gauges, covariance, equivalence, spin or all).
    Verify {
        suite: String,
        /// Random frames for the geometry and gauges suites.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Skip the refinement runs of the covariance suite.
        #[arg(long)]
        no_refine: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print g', Γ', h and the spin connection of a scenario's frame at one event.
    DumpGeometry {
        file: PathBuf,
        #[arg(long)]
        t: f64,
        /// Frame position as `x,y,z`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x: Vec3,
    },
}

fn parse_point(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x] => Ok(Vec3::new(*x, 0.0, 0.0)),
        [x, y] => Ok(Vec3::new(*x, *y, 0.0)),
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err("expected one to three comma-separated numbers".into()),
    }
}

fn run(files: &[PathBuf], out_dir: Option<&PathBuf>, precision: Precision) -> i32 {
    let load = |f: &PathBuf| {
        let mut sc = Scenario::load(f)?;
        if let Some(dir) = out_dir {
            sc.output_dir = dir.join(&sc.name);
        }
        run_scenario(&sc, precision)
    };
    let results: Vec<(PathBuf, bargmann::Result<RunOutcome>)> = files.par_iter().map(|f| (f.clone(), load(f))).collect();
    let mut code = 0;
    for (file, r) in results {
        match r {
            Ok(out) => {
                print!("{}", out.report_text());
                if out.passed() {
                    println!("PASS {}\n", out.name);
                } else {
                    println!("FAIL {}: failing gates {}\n", out.name, out.failing().join(", "));
                    code = code.max(EXIT_GATE_FAILED);
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", file.display());
                code = EXIT_ERROR;
            }
        }
    }
    code
}

fn verify(suite: &str, opts: VerifyOptions, format: Format) -> i32 {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        match suite.parse() {
            Ok(s) => vec![s],
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        }
    };
    let results: Vec<bargmann::Result<SuiteReport>> = suites.par_iter().map(|s| run_suite(*s, &opts)).collect();
    let mut reports = Vec::new();
    for r in results {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        }
    }
    match format {
        Format::Json => {
            let passed = reports.iter().all(SuiteReport::passed);
            let doc = serde_json::json!({ "passed": passed, "suites": reports });
            println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
        }
        Format::Text => {
            for r in &reports {
                println!("[{}]", r.suite.name());
                for c in &r.checks {
                    println!("{c}");
                }
            }
        }
    }
    if reports.iter().all(SuiteReport::passed) {
        0
    } else {
        EXIT_GATE_FAILED
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} workers: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    let precision = match cli.precision {
        PrecisionArg::Single => Precision::Single,
        PrecisionArg::Double => Precision::Double,
    };
    let code = match cli.command {
        Command::Run { files, out_dir } => run(&files, out_dir.as_ref(), precision),
        Command::Verify {
            suite,
            samples,
            seed,
            no_refine,
            format,
        } => verify(
            &suite,
            VerifyOptions {
                samples,
                seed,
                refine: !no_refine,
            },
            format,
        ),
        Command::DumpGeometry { file, t, x } => match Scenario::load(&file).and_then(|sc| dump_geometry(&sc, t, &x)) {
            Ok(text) => {
                print!("{text}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
    };
    ExitCode::from(code as u8)
}
