//! Command-line driver: single runs, convergence studies, the mesh-ratio
//! comparison and the runtime self-test.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use bgnflow::config::ConfigFile;
use bgnflow::experiments::{
    run_flow, run_mesh_ratio_study, run_spatial_convergence, run_temporal_convergence,
    ExperimentRecord, FlowConfig, InitialCurve, TEMPORAL_DEFAULT_ELEMENTS,
};
use bgnflow::output::{
    write_mesh_snapshot, write_records, write_series, write_svg, write_trajectory, LogLogPlot,
};
use bgnflow::{selftest, Error, Result, Stepper, VelocityField};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bgnflow",
    version,
    about = "Transport of closed planar curves by parametric finite elements"
)]
struct Cli {
    /// `key = value` file with defaults for the long flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one curve and write run.csv, trajectory.csv and mesh_final.txt.
    Run(RunArgs),
    /// Spatial or temporal convergence study with CSV and SVG output.
    Convergence(ConvergenceArgs),
    /// Mesh-ratio history of BGN against plain nodal advection.
    Meshratio(OutArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Polynomial degree k.
    #[arg(long)]
    degree: Option<usize>,
    /// Number of elements J.
    #[arg(long)]
    elements: Option<usize>,
    /// Number of time steps Nt.
    #[arg(long)]
    steps: Option<usize>,
    /// Final time T.
    #[arg(long)]
    tmax: Option<f64>,
    /// zero | constant:<cx>,<cy> | rotation:<omega> | ellipse-radial
    #[arg(long)]
    field: Option<String>,
    /// bgn | lagrangian
    #[arg(long)]
    stepper: Option<String>,
    /// ellipse | circle
    #[arg(long)]
    curve: Option<String>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Spatial,
    Temporal,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        <Mode as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| Error::Parse(format!("unknown mode `{s}`")))
    }
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    degree: Option<usize>,
    /// Mesh size for the temporal study.
    #[arg(long)]
    elements_fixed: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flag value, else config-file value, else `default`.
fn pick<T: FromStr>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
    default: Option<T>,
) -> Result<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = file.get::<T>(key)? {
        return Ok(v);
    }
    default.ok_or_else(|| Error::InvalidArgument(format!("missing required option --{key}")))
}

fn parsed<T: FromStr<Err = Error>>(flag: Option<String>) -> Result<Option<T>> {
    flag.map(|s| s.parse()).transpose()
}

fn run(args: RunArgs, file: &ConfigFile) -> Result<bool> {
    let defaults = FlowConfig::default();
    let cfg = FlowConfig {
        degree: pick(args.degree, file, "degree", Some(defaults.degree))?,
        elements: pick(args.elements, file, "elements", Some(defaults.elements))?,
        steps: pick(args.steps, file, "steps", Some(defaults.steps))?,
        t_max: pick(args.tmax, file, "tmax", Some(defaults.t_max))?,
        field: pick(
            parsed::<VelocityField>(args.field)?,
            file,
            "field",
            Some(defaults.field),
        )?,
        stepper: pick(
            parsed::<Stepper>(args.stepper)?,
            file,
            "stepper",
            Some(defaults.stepper),
        )?,
        curve: pick(
            parsed::<InitialCurve>(args.curve)?,
            file,
            "curve",
            Some(defaults.curve),
        )?,
        snapshot_stride: pick(args.snapshot_stride, file, "snapshot-stride", Some(1))?,
    };
    let out: PathBuf = pick(args.out, file, "out", None)?;
    cfg.validate()?;

    let start = Instant::now();
    let result = run_flow(&cfg);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (run, failure) = match result {
        Ok(run) => (run, None),
        Err(f) => match f.partial {
            Some(partial) => (*partial, Some((f.step, f.t, f.source))),
            None => return Err(f.source),
        },
    };
    let record = ExperimentRecord::from_run("run", &cfg, &run, wall_ms);
    write_records(&out.join("run.csv"), &[record])?;
    write_trajectory(&out.join("trajectory.csv"), &run.snapshots)?;
    let snapshot_name = if failure.is_some() {
        "mesh_last_valid.txt"
    } else {
        "mesh_final.txt"
    };
    write_mesh_snapshot(&out.join(snapshot_name), &run.final_mesh, run.final_t)?;

    match failure {
        None => {
            println!(
                "completed {} steps to t = {}; mesh ratio {:.4} -> {:.4}",
                cfg.steps,
                run.final_t,
                run.initial_mesh_ratio(),
                run.final_mesh_ratio()
            );
            if let Some(e) = run.final_err_max() {
                println!("final err_max {e:.6e}");
            }
            Ok(true)
        }
        Some((step, t, source)) => {
            eprintln!("step {step} (t = {t}) failed: {source}");
            eprintln!(
                "partial results and the last valid mesh (t = {}) are in {}",
                run.final_t,
                out.display()
            );
            Ok(false)
        }
    }
}

fn plot(
    path: &Path,
    title: &str,
    x_label: &str,
    records: &[ExperimentRecord],
    x: impl Fn(&ExperimentRecord) -> f64,
    slope: f64,
) -> Result<()> {
    let xs: Vec<f64> = records.iter().map(&x).collect();
    let ys: Vec<f64> = records
        .iter()
        .map(|r| r.err_l2.unwrap_or(f64::NAN))
        .collect();
    write_svg(
        path,
        &LogLogPlot {
            title,
            x_label,
            y_label: "L2 error",
            xs: &xs,
            ys: &ys,
            reference_slope: slope,
        },
    )
}

fn print_records(records: &[ExperimentRecord]) {
    println!(
        "{:>5} {:>6} {:>12} {:>12} {:>8}",
        "J", "Nt", "err_l2", "err_h1", "order"
    );
    for r in records {
        println!(
            "{:>5} {:>6} {:>12.4e} {:>12.4e} {:>8}",
            r.elements,
            r.steps,
            r.err_l2.unwrap_or(f64::NAN),
            r.err_h1.unwrap_or(f64::NAN),
            r.order_l2.map_or("-".to_string(), |o| format!("{o:.3}"))
        );
    }
}

fn convergence(args: ConvergenceArgs, file: &ConfigFile) -> Result<bool> {
    let mode = pick(args.mode, file, "mode", None)?;
    let degree = pick(args.degree, file, "degree", None)?;
    let out: PathBuf = pick(args.out, file, "out", None)?;
    match mode {
        Mode::Spatial => {
            let records = run_spatial_convergence(degree)?;
            print_records(&records);
            write_records(
                &out.join(format!("convergence_spatial_k{degree}.csv")),
                &records,
            )?;
            plot(
                &out.join(format!("convergence_spatial_k{degree}.svg")),
                &format!("spatial convergence, k = {degree}"),
                "h",
                &records,
                |r| r.h,
                degree as f64,
            )?;
        }
        Mode::Temporal => {
            let elements = pick(
                args.elements_fixed,
                file,
                "elements-fixed",
                Some(TEMPORAL_DEFAULT_ELEMENTS),
            )?;
            let study = run_temporal_convergence(degree, elements)?;
            print_records(&study.records);
            let floor = study.reference.err_l2.unwrap_or(0.0);
            println!(
                "spatial floor (Nt = {}): {floor:.4e}",
                study.reference.steps
            );
            match study.corrected_order(3) {
                Some(o) => println!("floor-corrected order over the last 3 points: {o:.3}"),
                None => println!("floor-corrected order over the last 3 points: undefined"),
            }
            let mut rows = study.records.clone();
            rows.push(study.reference.clone());
            write_records(
                &out.join(format!("convergence_temporal_k{degree}.csv")),
                &rows,
            )?;
            plot(
                &out.join(format!("convergence_temporal_k{degree}.svg")),
                &format!("temporal convergence, k = {degree}, J = {elements}"),
                "tau",
                &study.records,
                |r| r.tau,
                1.0,
            )?;
        }
    }
    Ok(true)
}

fn meshratio(args: OutArgs, file: &ConfigFile) -> Result<bool> {
    let out: PathBuf = pick(args.out, file, "out", None)?;
    let study = run_mesh_ratio_study()?;
    for r in &study.records {
        println!(
            "{}: mesh ratio {:.4} -> {:.4}",
            r.experiment, r.mesh_ratio_initial, r.mesh_ratio_final
        );
    }
    write_records(&out.join("meshratio.csv"), &study.records)?;
    write_series(&out.join("meshratio_series.csv"), &study.series)?;
    Ok(true)
}

fn run_selftest() -> bool {
    let checks = selftest::run();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    checks.iter().all(|c| c.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.config.as_deref().map(ConfigFile::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args, &file),
        Command::Convergence(args) => convergence(args, &file),
        Command::Meshratio(args) => meshratio(args, &file),
        Command::Selftest => Ok(run_selftest()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
