//! `latsurg`: run lattice-surgery experiments, inspect codes and run the
//! self-check suites.
//!
//! Experiment settings are resolved in order: built-in defaults, then the
//! `--config` file, then individual flags. JSON goes to `--out` or stdout;
//! a human-readable summary goes to stderr.
//!
//! Exit codes: 0 success, 2 configuration error, 3 verification failure,
//! 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latsurg::codes::{self, LogicalLabel};
use latsurg::experiment::{
    self, AncillaPolicy, BitPattern, DetectionPolicy, ExperimentConfig, Report,
};
use latsurg::surgery::Protocol;
use latsurg::{verify, Error};

#[derive(Parser)]
#[command(
    name = "latsurg",
    version,
    about = "Lattice surgery on small surface codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logical Bell-state preparation by rough or smooth lattice surgery.
    Bell {
        #[arg(long, value_enum)]
        boundary: Option<BoundaryArg>,
        /// Two input labels, e.g. `00`, `++`, `0,+i`.
        #[arg(long)]
        input: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Teleport one logical qubit from code A to code B.
    Teleport {
        /// One label: 0, 1, +, -, +i or -i.
        #[arg(long)]
        input: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Any protocol: bell_rough, bell_smooth, teleport, cnot, hadamard.
    Run {
        #[arg(long)]
        protocol: Option<Protocol>,
        #[arg(long)]
        input: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Print a code's generators, logicals and distance as JSON.
    CodeInfo {
        /// sc2x2A, sc2x2B, scRxC, rep3, merged-rough or merged-smooth.
        #[arg(long)]
        code: String,
    },
    /// Tableau-vs-dense and protocol-branch self-checks.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random circuits in the oracle suite.
        #[arg(long, default_value_t = 1000)]
        circuits: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Rough,
    Smooth,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Oracle,
    Branches,
    All,
}

#[derive(Args)]
struct Common {
    /// Experiment config JSON; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shots per readout setting.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    p_meas: Option<f64>,
    #[arg(long)]
    p_prep: Option<f64>,
    /// Run encoding through the noisy extraction circuits.
    #[arg(long)]
    noisy_encoding: bool,
    /// Force ancilla outcomes, e.g. `000` or `0x1`.
    #[arg(long, conflicts_with = "postselect")]
    force: Option<BitPattern>,
    /// Keep only shots whose ancilla outcomes match, e.g. `00x`.
    #[arg(long)]
    postselect: Option<BitPattern>,
    /// Keep shots with failing stabilizer checks.
    #[arg(long)]
    no_detect: bool,
    /// Result JSON path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-shot records as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 4,
        _ => 2,
    }
}

fn resolve(
    protocol: Option<Protocol>,
    input: Option<&str>,
    common: &Common,
) -> latsurg::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let protocol = protocol.ok_or_else(|| Error::Config("no protocol given".into()))?;
            let inputs = match input {
                Some(_) => vec![],
                None => vec![LogicalLabel::Zero; protocol.input_codes().len()],
            };
            ExperimentConfig::new(protocol, inputs)
        }
    };
    if let Some(p) = protocol {
        cfg.protocol = p;
    }
    if let Some(text) = input {
        cfg.inputs = codes::parse_labels(text)?;
    }
    if let Some(s) = common.shots {
        cfg.shots = s;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let noise = &mut cfg.noise;
    for (flag, field) in [
        (common.p1, &mut noise.p1),
        (common.p2, &mut noise.p2),
        (common.p_meas, &mut noise.p_meas),
        (common.p_prep, &mut noise.p_prep),
    ] {
        if let Some(v) = flag {
            *field = v;
        }
    }
    if common.noisy_encoding {
        noise.noisy_encoding = true;
    }
    if let Some(p) = &common.force {
        cfg.ancilla_policy = AncillaPolicy::Force(p.clone());
    }
    if let Some(p) = &common.postselect {
        cfg.ancilla_policy = AncillaPolicy::Postselect(p.clone());
    }
    if common.no_detect {
        cfg.detection_policy = DetectionPolicy::None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

fn summarize(result: &experiment::ExperimentResult) {
    eprintln!(
        "protocol {} inputs {:?}",
        result.protocol,
        result
            .inputs
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
    );
    for f in &result.fidelities {
        eprintln!(
            "{:<10} raw {} ± {}  postselected {} ± {}{}",
            f.name,
            fmt_opt(f.raw),
            fmt_opt(f.se_raw),
            fmt_opt(f.postselected),
            fmt_opt(f.se_postselected),
            if f.out_of_range {
                "  (outside [0,1])"
            } else {
                ""
            }
        );
    }
    let s = &result.mean_survival;
    eprintln!(
        "survival merge {} split {} ancilla {} detection {}",
        fmt_opt(s.merge),
        fmt_opt(s.split),
        fmt_opt(s.ancilla),
        fmt_opt(s.detection)
    );
}

fn run_experiment(
    protocol: Option<Protocol>,
    input: Option<&str>,
    common: &Common,
) -> latsurg::Result<()> {
    let cfg = resolve(protocol, input, common)?;
    let (result, records) = if common.records.is_some() {
        let (r, rec) = experiment::run_with_records(&cfg)?;
        (r, Some(rec))
    } else {
        (experiment::run(&cfg)?, None)
    };
    let report = Report::new(&cfg, &result);
    match &common.out {
        Some(path) => experiment::emit(&report, path, common.csv.as_deref())?,
        None => {
            print!("{}", report.to_json());
            if let Some(path) = &common.csv {
                std::fs::write(path, report.to_csv()?).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
            }
        }
    }
    if let (Some(path), Some(rec)) = (&common.records, records) {
        experiment::emit_records(&rec, path)?;
    }
    summarize(&result);
    Ok(())
}

fn code_info(name: &str) -> latsurg::Result<()> {
    let code = codes::named_code(name)?;
    let distance = match codes::distance(&code) {
        Ok((dx, dz)) => serde_json::json!({ "x": dx, "z": dz }),
        Err(Error::DistanceCapExceeded { .. }) => serde_json::Value::Null,
        Err(e) => return Err(e),
    };
    let doc = serde_json::json!({
        "version": latsurg::VERSION,
        "code": code,
        "distance": distance,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("plain data serializes")
    );
    Ok(())
}

fn run_verify(suite: Suite, seed: u64, circuits: usize) -> latsurg::Result<bool> {
    let mut reports = Vec::new();
    if suite != Suite::Branches {
        reports.push(verify::oracle_suite(circuits, 6, seed));
    }
    if suite != Suite::Oracle {
        for p in Protocol::ALL {
            reports.push(verify::branch_suite(p)?);
        }
    }
    for r in &reports {
        println!("{r}");
    }
    let ok = reports.iter().all(verify::Report::passed);
    println!(
        "{}",
        if ok {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    );
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bell {
            boundary,
            input,
            common,
        } => {
            let protocol = boundary.map(|b| match b {
                BoundaryArg::Rough => Protocol::BellRough,
                BoundaryArg::Smooth => Protocol::BellSmooth,
            });
            let protocol = protocol.or(common.config.is_none().then_some(Protocol::BellRough));
            run_experiment(protocol, input.as_deref(), &common).map(|_| true)
        }
        Command::Teleport { input, common } => {
            run_experiment(Some(Protocol::Teleport), input.as_deref(), &common).map(|_| true)
        }
        Command::Run {
            protocol,
            input,
            common,
        } => run_experiment(protocol, input.as_deref(), &common).map(|_| true),
        Command::CodeInfo { code } => code_info(&code).map(|_| true),
        Command::Verify {
            suite,
            seed,
            circuits,
        } => run_verify(suite, seed, circuits),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
