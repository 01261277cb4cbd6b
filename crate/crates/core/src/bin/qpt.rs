//! Command-line driver for the tomography pipeline.
//!
//! Exit codes: 0 ok, 2 usage or parse error, 3 I/O error, 4 singular β,
//! 5 constraint violation, 6 fit failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use qpt::experiment::reconstruct_raw;
use qpt::io::{now_unix, ChiFile, ExperimentFile, Provenance, ReportFile};
use qpt::process::p_matrix;
use qpt::{
    constraint_report, fit_physical, kraus_from_chi, simulate_experiment, Channel, ChiStatus,
    FitConfig, FitMode, FitResult, Mat2, NoiseSpec, ProcessMatrix, QptError,
};

const EXIT_CONSTRAINT: u8 = 5;

#[derive(Parser)]
#[command(
    name = "qpt",
    version,
    about = "Single-qubit quantum process tomography"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a photon-counting experiment on a channel.
    Simulate {
        /// Channel name (e.g. hadamard, polarizer-z, amplitude-damping:0.36) or a χ JSON file.
        #[arg(long)]
        channel: String,
        /// `none`, or a comma list of `shot`, `rotation=<v>`, `depolarization=<v>`;
        /// values may be given per probe as `h/v/d/r`.
        #[arg(long, default_value = "none")]
        noise: String,
        /// Reference photon number per measurement interval.
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Linear inversion of an experiment file to a raw χ.
    Reconstruct {
        #[arg(long)]
        experiment: PathBuf,
        /// Use the nominal H/V/D/R probes instead of the measured inputs.
        #[arg(long)]
        assume_ideal_inputs: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the physicality constraints of a χ file.
    Check {
        chi: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the nearest physical χ to a raw χ.
    Fit {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::General)]
        mode: ModeArg,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the operation elements of a χ file.
    Kraus { chi: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    General,
    Tp,
}

impl From<ModeArg> for FitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::General => FitMode::General,
            ModeArg::Tp => FitMode::TracePreserving,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> qpt::Result<u8> {
    match command {
        Command::Simulate {
            channel,
            noise,
            shots,
            seed,
            out,
        } => simulate(&channel, &noise, shots, seed, &out),
        Command::Reconstruct {
            experiment,
            assume_ideal_inputs,
            out,
        } => reconstruct(&experiment, assume_ideal_inputs, &out),
        Command::Check {
            chi,
            tolerance,
            out,
        } => check(&chi, tolerance, out.as_deref()),
        Command::Fit {
            raw,
            mode,
            max_iterations,
            out,
        } => fit(&raw, mode.into(), max_iterations, &out),
        Command::Kraus { chi } => kraus(&chi),
    }
}

fn provenance(
    command: &str,
    entries: impl IntoIterator<Item = (&'static str, Value)>,
) -> Provenance {
    let mut p = Provenance::new();
    p.insert("command".into(), Value::from(command));
    p.insert("created_unix".into(), now_unix());
    p.extend(entries.into_iter().map(|(k, v)| (k.to_string(), v)));
    p
}

/// A χ file's matrix without re-validating a `physical` status.
fn load_unchecked(path: &Path) -> qpt::Result<ProcessMatrix> {
    let mut file = ChiFile::read(path)?;
    file.status = ChiStatus::Raw;
    file.to_process()
}

fn channel_from_arg(spec: &str) -> qpt::Result<ProcessMatrix> {
    let path = Path::new(spec);
    if spec.ends_with(".json") || path.exists() {
        let chi = load_unchecked(path)?;
        ProcessMatrix::physical(*chi.matrix())
    } else {
        spec.parse::<Channel>()?.chi()
    }
}

fn simulate(channel: &str, noise: &str, shots: u64, seed: u64, out: &Path) -> qpt::Result<u8> {
    if shots == 0 {
        return Err(QptError::InvalidArgument(
            "--shots must be at least 1".into(),
        ));
    }
    let chi = channel_from_arg(channel)?;
    let spec: NoiseSpec = noise.parse()?;
    let record = simulate_experiment(&chi, &spec, shots, seed)?;
    let prov = provenance(
        "simulate",
        [("channel", json!(channel)), ("noise", json!(noise))],
    );
    ExperimentFile::from_record(&record, prov).write(out)?;
    eprintln!(
        "wrote experiment ({} probes, n_in = {shots}) to {}",
        record.probes.len(),
        out.display()
    );
    Ok(0)
}

fn reconstruct(experiment: &Path, assume_ideal_inputs: bool, out: &Path) -> qpt::Result<u8> {
    let record = ExperimentFile::read(experiment)?.to_record()?;
    let (raw, beta) = reconstruct_raw(&record, assume_ideal_inputs)?;
    let prov = provenance(
        "reconstruct",
        [
            ("experiment", json!(experiment.display().to_string())),
            ("assume_ideal_inputs", json!(assume_ideal_inputs)),
            ("beta_condition_number", json!(beta.condition_number())),
            ("trace_chi", json!(raw.trace())),
            ("seed", json!(record.seed)),
        ],
    );
    ChiFile::from_process(&raw, prov).write(out)?;
    eprintln!(
        "raw chi: Tr = {:.12}, cond(beta) = {:.6e}; wrote {}",
        raw.trace(),
        beta.condition_number(),
        out.display()
    );
    Ok(0)
}

fn check(path: &Path, tolerance: f64, out: Option<&Path>) -> qpt::Result<u8> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(QptError::InvalidArgument(format!(
            "bad tolerance {tolerance}"
        )));
    }
    let chi = load_unchecked(path)?;
    let report = constraint_report(&chi, tolerance)?;
    let file = ReportFile::new(report, tolerance);
    match out {
        Some(p) => file.write(p)?,
        None => print!("{}", file.to_json()),
    }
    for line in &file.verdicts {
        eprintln!("{line}");
    }
    Ok(if report.eq10_satisfied {
        0
    } else {
        EXIT_CONSTRAINT
    })
}

fn fit_provenance(source: &Path, mode: FitMode, fit: &FitResult) -> Provenance {
    provenance(
        "fit",
        [
            ("raw", json!(source.display().to_string())),
            ("mode", json!(mode)),
            ("objective", json!(fit.objective)),
            ("iterations", json!(fit.iterations)),
            ("constraint_violation", json!(fit.constraint_violation)),
            ("converged", json!(fit.converged)),
            ("restarted", json!(fit.restarted)),
            ("stages", json!(fit.stages)),
        ],
    )
}

fn fit(raw: &Path, mode: FitMode, max_iterations: Option<usize>, out: &Path) -> qpt::Result<u8> {
    let chi = load_unchecked(raw)?;
    let mut config = FitConfig {
        mode,
        ..FitConfig::default()
    };
    if let Some(n) = max_iterations {
        config.max_iterations = n;
    }
    match fit_physical(&chi, &config) {
        Ok(result) => {
            ChiFile::from_process(&result.chi, fit_provenance(raw, mode, &result)).write(out)?;
            eprintln!(
                "fit: objective {:.3e}, violation {:.3e}, {} iterations; wrote {}",
                result.objective,
                result.constraint_violation,
                result.iterations,
                out.display()
            );
            Ok(0)
        }
        Err(QptError::FitFailed { best }) => report_failure(raw, mode, out, best),
        Err(e) => Err(e),
    }
}

/// Writes the best iterate of a failed fit next to `out` as `<out>.failed`.
fn report_failure(raw: &Path, mode: FitMode, out: &Path, best: Box<FitResult>) -> qpt::Result<u8> {
    let mut failed = out.as_os_str().to_owned();
    failed.push(".failed");
    let failed = PathBuf::from(failed);
    ChiFile::from_process(&best.chi, fit_provenance(raw, mode, &best)).write(&failed)?;
    let err = QptError::FitFailed { best };
    eprintln!("error: {err}; best iterate written to {}", failed.display());
    Ok(err.exit_code() as u8)
}

fn fmt_c(z: Complex64) -> String {
    // Anything that rounds to zero prints as +0 rather than -0.
    let clean = |x: f64| if x.abs() < 5e-10 { 0.0 } else { x };
    format!("{:+.9}{:+.9}i", clean(z.re), clean(z.im))
}

fn fmt_m(m: &Mat2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        fmt_c(m[(0, 0)]),
        fmt_c(m[(0, 1)]),
        fmt_c(m[(1, 0)]),
        fmt_c(m[(1, 1)])
    )
}

fn kraus(path: &Path) -> qpt::Result<u8> {
    let chi = load_unchecked(path)?;
    let set = kraus_from_chi(&chi)?;
    for (i, (e, w)) in set.operators().iter().zip(set.weights()).enumerate() {
        println!("E{} weight {:.12}: {}", i + 1, w, fmt_m(e));
    }
    let completeness = set.completeness();
    let p = p_matrix(&chi);
    println!("sum E^dag E = {}", fmt_m(&completeness));
    println!(
        "|sum E^dag E - P|_F = {:.3e}",
        (completeness - p.matrix()).norm()
    );
    println!(
        "|sum E^dag E - I|_F = {:.3e}",
        (completeness - Mat2::identity()).norm()
    );
    Ok(0)
}
