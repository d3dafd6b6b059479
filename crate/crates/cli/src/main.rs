use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use torfact::cobordism::build_cobordism;
use torfact::complex::{final_object, GeneralizedConeComplex, PLDatum};
use torfact::doc::{self, Document, Kind};
use torfact::engine::{
    factor_2d, functorial_factorization, pullback_certificate, weak_factorization, EngineOptions, DEFAULT_MAX_STEPS,
};
use torfact::subdiv::{pl_from_ideal, subdivision_from_pl, MonomialIdeal, Subdivision};
use torfact::verify::{check_weak_factorization, is_contiguous, oracle_factor_2d, oracle_weights};

mod plugin;

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] torfact::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io { .. } => 1,
            Failure::Core(torfact::Error::NotImplemented(_)) => 3,
            Failure::Core(_) => 1,
            Failure::Verification(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Parser)]
#[command(name = "torfact", version, about = "Exact toric weak factorization with checkable certificates")]
struct Cli {
    /// Worker threads for independent checks.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More logging on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Clone)]
struct CobordismFlags {
    /// Skip the doubling of the weight certificate. Walls may then be adjacent.
    #[arg(long)]
    veronese_off: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factor the blowup given by an ideal or PL document.
    Factorize {
        input: PathBuf,
        /// Factor the input complex directly instead of its final object.
        #[arg(long)]
        non_functorial: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Executable for the core factorization in dimension 3 and up.
        #[arg(long)]
        plugin: Option<PathBuf>,
        /// Also write the verification report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check certificate documents; prints one report per input.
    Verify {
        #[arg(required = true)]
        certificates: Vec<PathBuf>,
    },
    /// The smooth cobordism fan of an ideal with its weight certificate.
    Cobordism {
        input: PathBuf,
        #[command(flatten)]
        flags: CobordismFlags,
    },
    /// Walls and chambers of the cobordism.
    Walls {
        input: PathBuf,
        #[command(flatten)]
        flags: CobordismFlags,
    },
    /// Quotient fans: the whole zigzag, or one chamber or weight.
    Quotients {
        input: PathBuf,
        /// 1-based chamber index.
        #[arg(long, conflicts_with = "weight")]
        chamber: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        weight: Option<i64>,
        #[command(flatten)]
        flags: CobordismFlags,
    },
    /// Pull a certificate back along a face map document.
    Pullback { certificate: PathBuf, morphism: PathBuf },
    /// Final object of a nonsingular complex with PL datum.
    FinalObject { input: PathBuf },
    /// Brute-force cross-checks.
    Oracle {
        #[arg(value_enum)]
        kind: OracleKind,
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    /// Shortest forward star sequence in 2D against the engine.
    Factor2d,
    /// Lattice-point weights against the weight intervals.
    Weights,
}

fn read_doc(path: &Path) -> CliResult<Document> {
    let text = fs::read_to_string(path).map_err(|source| Failure::Io { path: path.to_path_buf(), source })?;
    Document::parse(&text).map_err(|e| match e {
        torfact::Error::Parse { line, column, message } => {
            Failure::Usage(format!("{}:{line}:{column}: {message}", path.display()))
        }
        other => Failure::Usage(format!("{}: {other}", path.display())),
    })
}

fn emit(kind: Kind, payload: Value) {
    print!("{}", Document::new(kind, payload).to_text());
}

/// Complex and datum from an ideal or PL document.
fn read_datum(d: &Document) -> CliResult<(GeneralizedConeComplex, PLDatum)> {
    match d.kind {
        Kind::Ideal => Ok(pl_from_ideal(&doc::read_ideal(&d.payload, "payload")?)?),
        Kind::Pl => Ok(doc::read_pl(&d.payload, "payload")?),
        k => Err(Failure::Usage(format!("expected an ideal or pl document, found {}", k.as_str()))),
    }
}

fn read_ideal(d: &Document) -> CliResult<MonomialIdeal> {
    Ok(doc::read_ideal(d.expect(Kind::Ideal)?, "payload")?)
}

fn cmd_factorize(
    input: &Path,
    non_functorial: bool,
    max_steps: usize,
    plugin: Option<PathBuf>,
    report: Option<PathBuf>,
) -> CliResult<()> {
    let (cx, f) = read_datum(&read_doc(input)?)?;
    let external = plugin.map(plugin::ExternalPlugin::new);
    let opts = EngineOptions {
        max_steps,
        plugin: external.as_ref().map(|p| p as &dyn torfact::engine::PiDesingularizer),
    };
    let cert = if non_functorial {
        weak_factorization(&cx, &f, &[], &opts)?
    } else {
        functorial_factorization(&cx, &f, &opts)?
    };
    info!("{} steps, forward only: {}", cert.steps.len(), cert.is_forward_only());
    let r = check_weak_factorization(&cert);
    info!("verification:\n{r}");
    emit(Kind::Certificate, doc::certificate_json(&cert));
    if let Some(path) = report {
        let text = Document::new(Kind::Report, doc::report_json(&r)).to_text();
        fs::write(&path, text).map_err(|source| Failure::Io { path, source })?;
    }
    match r.first_failure() {
        None => Ok(()),
        Some(w) => Err(Failure::Verification(w)),
    }
}

fn cmd_verify(paths: &[PathBuf]) -> CliResult<()> {
    let reports: Vec<CliResult<torfact::verify::VerificationReport>> = paths
        .par_iter()
        .map(|p| {
            let d = read_doc(p)?;
            let cert = doc::read_certificate(d.expect(Kind::Certificate)?, "payload")?;
            Ok(check_weak_factorization(&cert))
        })
        .collect();
    let mut failure = None;
    for (p, r) in paths.iter().zip(reports) {
        let r = r?;
        emit(Kind::Report, doc::report_json(&r));
        if let Some(w) = r.first_failure() {
            failure.get_or_insert(format!("{}: {w}", p.display()));
        }
    }
    failure.map_or(Ok(()), |w| Err(Failure::Verification(w)))
}

fn cobordism_of(input: &Path, flags: &CobordismFlags) -> CliResult<torfact::cobordism::CobordismFan> {
    let ideal = read_ideal(&read_doc(input)?)?;
    if flags.veronese_off {
        warn!("doubling disabled: walls may be adjacent and quotients at walls may degenerate");
    }
    Ok(build_cobordism(&ideal, !flags.veronese_off)?)
}

fn cmd_quotients(input: &Path, chamber: Option<usize>, weight: Option<i64>, flags: &CobordismFlags) -> CliResult<()> {
    let b = cobordism_of(input, flags)?;
    let a = match (chamber, weight) {
        (Some(k), _) => {
            let w = b.walls()?;
            let (lo, _) = *w
                .chambers
                .get(k.wrapping_sub(1))
                .ok_or_else(|| Failure::Usage(format!("chamber {k} out of range 1..={}", w.chambers.len())))?;
            Some(lo + 1)
        }
        (None, w) => w,
    };
    match a {
        Some(a) => {
            let is_wall = b.walls()?.walls.contains(&a);
            let fan = if is_wall { b.wall_quotient(a)? } else { b.git_quotient(a)? };
            emit(Kind::Fan, doc::fan_json(&fan));
        }
        None => emit(Kind::Zigzag, doc::zigzag_json(&b.zigzag()?)),
    }
    Ok(())
}

fn cmd_pullback(certificate: &Path, morphism: &Path) -> CliResult<()> {
    let d = read_doc(certificate)?;
    let cert = doc::read_certificate(d.expect(Kind::Certificate)?, "payload")?;
    let m = read_doc(morphism)?;
    let (source, phi) = doc::read_morphism(m.expect(Kind::Morphism)?, "payload")?;
    let pulled = pullback_certificate(&cert, &phi, &source)?;
    emit(Kind::Certificate, doc::certificate_json(&pulled));
    Ok(())
}

fn subdivision_input(d: &Document) -> CliResult<Subdivision> {
    match d.kind {
        Kind::Subdivision => Ok(doc::read_subdivision(&d.payload, "payload")?),
        _ => {
            let (cx, f) = read_datum(d)?;
            Ok(subdivision_from_pl(&cx, &f)?)
        }
    }
}

fn cmd_oracle(kind: OracleKind, input: &Path) -> CliResult<()> {
    let d = read_doc(input)?;
    match kind {
        OracleKind::Factor2d => {
            let s = subdivision_input(&d)?;
            let engine = factor_2d(&s, DEFAULT_MAX_STEPS)?;
            let oracle = oracle_factor_2d(&s, 8);
            let valid = check_weak_factorization(&engine).pass;
            let agrees = valid && oracle.as_ref().is_some_and(|o| o.len() == engine.steps.len());
            emit(
                Kind::Oracle,
                json!({
                    "oracle": "factor-2d",
                    "engine_steps": engine.steps.len().to_string(),
                    "oracle_steps": oracle.as_ref().map(|o| o.iter().map(|(c, p)| json!({
                        "cone": c.to_string(),
                        "point": p.0.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>()),
                    "engine_verified": valid,
                    "agrees": agrees,
                }),
            );
            if !agrees {
                return Err(Failure::Verification("engine and oracle disagree".into()));
            }
        }
        OracleKind::Weights => {
            let b = build_cobordism(&read_ideal(&d)?, true)?;
            let mut rows = Vec::new();
            let mut all = true;
            for (cone, iv) in b.weight_intervals() {
                let found = oracle_weights(&b, &cone);
                let agrees = found
                    .as_ref()
                    .is_some_and(|s| s.first() == Some(&iv.min) && s.last() == Some(&iv.max));
                all &= agrees;
                rows.push(json!({
                    "cone": doc::cone_json(&cone),
                    "interval": [iv.min.to_string(), iv.max.to_string()],
                    "oracle": found.as_ref().map(|s| s.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
                    "contiguous": found.as_ref().map(is_contiguous),
                    "agrees": agrees,
                }));
            }
            emit(Kind::Oracle, json!({ "oracle": "weights", "cones": rows, "agrees": all }));
            if !all {
                return Err(Failure::Verification("weight intervals disagree with the oracle".into()));
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {n} workers: {e}")))?;
    }
    match cli.command {
        Cmd::Factorize { input, non_functorial, max_steps, plugin, report } => {
            cmd_factorize(&input, non_functorial, max_steps, plugin, report)
        }
        Cmd::Verify { certificates } => cmd_verify(&certificates),
        Cmd::Cobordism { input, flags } => {
            emit(Kind::Cobordism, doc::cobordism_json(&cobordism_of(&input, &flags)?));
            Ok(())
        }
        Cmd::Walls { input, flags } => {
            let b = cobordism_of(&input, &flags)?;
            let w = b.walls()?;
            if w.walls.windows(2).any(|p| p[1] - p[0] < 2) {
                warn!("adjacent walls: {:?}", w.walls);
            }
            emit(Kind::Walls, doc::walls_json(&b, &w));
            Ok(())
        }
        Cmd::Quotients { input, chamber, weight, flags } => cmd_quotients(&input, chamber, weight, &flags),
        Cmd::Pullback { certificate, morphism } => cmd_pullback(&certificate, &morphism),
        Cmd::FinalObject { input } => {
            let (cx, f) = read_datum(&read_doc(&input)?)?;
            emit(Kind::FinalObject, doc::final_object_json(&final_object(&cx, &f)?));
            Ok(())
        }
        Cmd::Oracle { kind, input } => cmd_oracle(kind, &input),
    }
}

/// Extension point named by a not-implemented message, such as `pi_desingularize`.
fn extension_point(message: &str) -> &str {
    message.split_once(':').map_or("unknown", |(head, _)| head.trim())
}

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for failed verification.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Failure::Core(torfact::Error::NotImplemented(m)) = &e {
                emit(
                    Kind::Diagnostic,
                    json!({ "error": "not-implemented", "extension_point": extension_point(m), "message": m }),
                );
            }
            eprintln!("torfact: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
