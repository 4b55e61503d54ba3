//! Command-line front end: build strong products and their codes, verify
//! witnesses, measure flows and cuts, and print side-by-side reports.
//!
//! Exit codes: 0 all checks passed, 1 a verification failed (the output
//! names the failing check), 2 usage or input error, 3 a size budget was
//! exceeded.

use clap::{Parser, Subcommand, ValueEnum};
use cutcert::code::{check_valid, simulate, CertMode, CodeCheckError};
use cutcert::flow::{
    max_flow_exact_auto, max_multicommodity_flow, rational_string, FlowError, FlowSolution,
    DEFAULT_PATH_BUDGET,
};
use cutcert::instance::{Instance, InstanceError, BRUTE_FORCE_VERTEX_LIMIT};
use cutcert::linalg::LinalgError;
use cutcert::product::{product_bundle, CodeBundle, ProductError};
use cutcert::saks::{verify_corollary1, CertChoice, SaksError, SaksOptions};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cutcert",
    version,
    about = "Multicut lower-bound certificates from linear codes on strong graph products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Exhaustive for small instances, sampled beyond
    Auto,
    /// Check every minimal multicut
    Exhaustive,
    /// Check randomly sampled minimal multicuts (requires --seed)
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an instance file and report its shape
    Validate { instance: PathBuf },
    /// Strong product of two instance files or two bundle files
    Product {
        a: PathBuf,
        b: PathBuf,
        /// Where to write the product instance or bundle
        #[arg(short, long)]
        output: PathBuf,
        /// Name recorded in a product bundle
        #[arg(long, default_value = "product")]
        name: String,
    },
    /// Exhaustive minimum multicut with a witness
    Mincut {
        instance: PathBuf,
        /// Vertex-count cap on the exhaustive search
        #[arg(long, default_value_t = BRUTE_FORCE_VERTEX_LIMIT)]
        limit: usize,
    },
    /// Every minimal multicut
    MinimalCuts {
        instance: PathBuf,
        #[arg(long, default_value_t = BRUTE_FORCE_VERTEX_LIMIT)]
        limit: usize,
    },
    /// Maximum concurrent multicommodity flow in exact rational arithmetic
    Flow {
        instance: PathBuf,
        /// Cap on path length in vertices; omitted = escalate until certified
        #[arg(long)]
        max_len: Option<usize>,
        /// Cap on the number of enumerated paths
        #[arg(long, default_value_t = DEFAULT_PATH_BUDGET)]
        path_budget: usize,
        /// Write the solution as JSON instead of printing it
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Verify a code bundle's witnesses against an instance file
    CheckCode {
        instance: PathBuf,
        bundle: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Multicut sample count in sampled mode
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// RNG seed; required in sampled mode so runs are reproducible
        #[arg(long, required_if_eq("mode", "sampled"))]
        seed: Option<u64>,
        /// Vertex-count cap on exhaustive multicut enumeration
        #[arg(long, default_value_t = BRUTE_FORCE_VERTEX_LIMIT)]
        cut_limit: usize,
    },
    /// Transmit random messages through the code and decode them at sinks
    Simulate {
        instance: PathBuf,
        bundle: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// RNG seed, so runs are reproducible
        #[arg(long)]
        seed: u64,
    },
    /// Build and verify the k-fold strong power of the n-vertex path
    Saks {
        n: usize,
        k: usize,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, required_if_eq("mode", "sampled"))]
        seed: Option<u64>,
        /// Skip the exhaustive minimum-cut confirmation
        #[arg(long)]
        no_brute_force: bool,
        /// Skip the flow solve
        #[arg(long)]
        no_flow: bool,
        #[arg(long, default_value_t = DEFAULT_PATH_BUDGET)]
        path_budget: usize,
        /// Write the full report as JSON
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the verified bundle as JSON
        #[arg(long)]
        emit_bundle: Option<PathBuf>,
    },
    /// Side-by-side table: flow, coding rate, certified bound, cut sizes
    Report {
        instance: PathBuf,
        bundle: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, required_if_eq("mode", "sampled"))]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_PATH_BUDGET)]
        path_budget: usize,
    },
}

/// Prints a line to stdout, ignoring a closed pipe so downstream tools like
/// `head` can stop reading early without killing the run.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// One failure cause per exit code above 0.
enum CliError {
    /// Exit 1: a mathematical check failed; the message names it.
    Failed(String),
    /// Exit 2: bad arguments or malformed/mismatched input files.
    Usage(String),
    /// Exit 3: a size budget was exceeded.
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Failed(m) | CliError::Usage(m) | CliError::Budget(m) => m,
        }
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> CliError {
        match e {
            InstanceError::TooLarge { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CodeCheckError> for CliError {
    fn from(e: CodeCheckError) -> CliError {
        match e {
            CodeCheckError::TooManyMessages { .. } => CliError::Budget(e.to_string()),
            CodeCheckError::Instance(inner) => inner.into(),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> CliError {
        match e {
            FlowError::PathBudget { .. } => CliError::Budget(e.to_string()),
            FlowError::Instance(inner) => inner.into(),
        }
    }
}

impl From<ProductError> for CliError {
    fn from(e: ProductError) -> CliError {
        match e {
            ProductError::Instance(inner) => inner.into(),
            ProductError::Code(inner) => inner.into(),
            ProductError::Linalg(inner) => CliError::Usage(inner.to_string()),
            ProductError::FieldMismatch | ProductError::NotAProduct => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<SaksError> for CliError {
    fn from(e: SaksError) -> CliError {
        match e {
            SaksError::BadParams(m) => CliError::Usage(m),
            SaksError::SizeBudget { .. } => CliError::Budget(e.to_string()),
            SaksError::Product(inner) => inner.into(),
            SaksError::Code(inner) => inner.into(),
            SaksError::Instance(inner) => inner.into(),
            SaksError::Flow(inner) => inner.into(),
        }
    }
}

fn load_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not a valid {what}: {e}", path.display())))
}

/// Writes pretty JSON with a trailing newline via a temp file in the target
/// directory, so the output is either complete or absent and identical
/// inputs give byte-identical files.
fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let io_err =
        |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    let mut file =
        tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new("."))).map_err(io_err)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("cannot serialize output: {e}")))?;
    file.write_all(text.as_bytes()).map_err(io_err)?;
    file.write_all(b"\n").map_err(io_err)?;
    file.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) {
    out!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialization cannot fail")
    );
}

/// Reads an instance from either a bare instance file or a bundle file
/// (whose embedded instance is used).
fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let probe: serde_json::Value = load_json(path, "JSON file")?;
    if probe.get("witnesses").is_some() {
        let bundle: CodeBundle = load_json(path, "code bundle")?;
        Ok(bundle.instance)
    } else {
        load_json(path, "instance")
    }
}

fn resolve_mode(mode: Mode, samples: usize, seed: Option<u64>, n: usize) -> CertMode {
    match mode {
        Mode::Auto if n <= cutcert::saks::EXHAUSTIVE_CERT_LIMIT => CertMode::Exhaustive,
        Mode::Auto => CertMode::Sampled {
            count: samples,
            seed: seed.unwrap_or(7),
        },
        Mode::Exhaustive => CertMode::Exhaustive,
        Mode::Sampled => CertMode::Sampled {
            count: samples,
            seed: seed.expect("clap enforces --seed in sampled mode"),
        },
    }
}

/// The bundle's embedded instance must match the instance file byte for
/// byte, so the verdict is about the instance the caller named.
fn cross_check(inst: &Instance, bundle: &CodeBundle, path: &Path) -> Result<(), CliError> {
    if &bundle.instance != inst {
        return Err(CliError::Usage(format!(
            "the bundle embeds a different instance than {}",
            path.display()
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { instance } => {
            let inst: Instance = load_instance(&instance)?;
            let terminals: Vec<&str> = inst.terminal_ids().collect();
            out!(
                "ok: {} vertices, {} edges, {} commodities, {} terminals",
                inst.n(),
                inst.edge_count(),
                inst.commodities().len(),
                terminals.len()
            );
            Ok(())
        }
        Command::Product { a, b, output, name } => {
            let looks_like_bundle = |path: &Path| -> Result<bool, CliError> {
                let value: serde_json::Value = load_json(path, "JSON file")?;
                Ok(value.get("witnesses").is_some())
            };
            match (looks_like_bundle(&a)?, looks_like_bundle(&b)?) {
                (true, true) => {
                    let b1: CodeBundle = load_json(&a, "code bundle")?;
                    let b2: CodeBundle = load_json(&b, "code bundle")?;
                    let prod = product_bundle(name, &b1, &b2)?;
                    write_json_atomic(&output, &prod)?;
                    out!(
                        "bundle '{}': {} vertices, rate {}, certified bound {}",
                        prod.name,
                        prod.instance.n(),
                        prod.rate(),
                        prod.rho()
                    );
                }
                (false, false) => {
                    let i1: Instance = load_json(&a, "instance")?;
                    let i2: Instance = load_json(&b, "instance")?;
                    let prod = cutcert::instance::strong_product(&i1, &i2)?;
                    write_json_atomic(&output, &prod)?;
                    out!(
                        "instance: {} vertices, {} edges, {} commodities",
                        prod.n(),
                        prod.edge_count(),
                        prod.commodities().len()
                    );
                }
                _ => {
                    return Err(CliError::Usage(
                        "cannot mix an instance file with a bundle file; \
                         pass two instances or two bundles"
                            .into(),
                    ))
                }
            }
            Ok(())
        }
        Command::Mincut { instance, limit } => {
            let inst: Instance = load_instance(&instance)?;
            let (size, witness) = inst.min_multicut(limit)?;
            print_json(&serde_json::json!({ "size": size, "witness": witness }));
            Ok(())
        }
        Command::MinimalCuts { instance, limit } => {
            let inst: Instance = load_instance(&instance)?;
            let cuts = inst.minimal_multicuts(limit)?;
            print_json(&serde_json::json!({ "count": cuts.len(), "cuts": cuts }));
            Ok(())
        }
        Command::Flow {
            instance,
            max_len,
            path_budget,
            output,
        } => {
            let inst: Instance = load_instance(&instance)?;
            let solution: FlowSolution = match max_len {
                Some(l) => max_multicommodity_flow(&inst, l, path_budget)?,
                None => max_flow_exact_auto(&inst, path_budget)?,
            };
            out!(
                "flow {} ({}), {} paths considered",
                rational_string(&solution.value),
                if solution.exact {
                    "exact"
                } else {
                    "lower bound"
                },
                solution.paths_considered
            );
            match output {
                Some(path) => write_json_atomic(&path, &solution)?,
                None => print_json(&solution),
            }
            Ok(())
        }
        Command::CheckCode {
            instance,
            bundle,
            mode,
            samples,
            seed,
            cut_limit,
        } => {
            let inst: Instance = load_instance(&instance)?;
            let bundle: CodeBundle = load_json(&bundle, "code bundle")?;
            cross_check(&inst, &bundle, &instance)?;
            bundle
                .code
                .validate_against(&inst)
                .map_err(|e| CliError::Usage(e.to_string()))?;

            check_valid(&inst, &bundle.code)
                .map_err(|e| CliError::Failed(format!("validity: {e}")))?;
            out!("validity            pass");

            bundle
                .decodability
                .verify(&inst, &bundle.code)
                .map_err(|e| CliError::Failed(format!("decodability: {e}")))?;
            out!(
                "decodability        pass  (rate {} of {} messages)",
                bundle.rate(),
                bundle.code.message_count()
            );

            let cert_mode = resolve_mode(mode, samples, seed, inst.n());
            let report = cutcert::code::check_certifiable(
                &inst,
                &bundle.code,
                &bundle.certifiability,
                cert_mode,
                cut_limit,
            )
            .map_err(|e| match e {
                CodeCheckError::Instance(inner) => inner.into(),
                other => CliError::Failed(format!("certifiability: {other}")),
            })?;
            out!(
                "certifiability      pass  (bound {}, min rank {} over {} {} multicuts)",
                bundle.rho(),
                report.min_rank_seen.map_or("-".into(), |r| r.to_string()),
                report.cuts_checked,
                if report.exhaustive {
                    "minimal"
                } else {
                    "sampled"
                }
            );
            out!("all checks passed");
            Ok(())
        }
        Command::Simulate {
            instance,
            bundle,
            trials,
            seed,
        } => {
            let inst: Instance = load_instance(&instance)?;
            let bundle: CodeBundle = load_json(&bundle, "code bundle")?;
            cross_check(&inst, &bundle, &instance)?;
            let modulus = bundle.code.field().modulus();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for trial in 0..trials {
                let messages: BTreeMap<_, _> = bundle
                    .code
                    .messages()
                    .iter()
                    .map(|m| (m.clone(), rng.gen_range(0..modulus)))
                    .collect();
                let report = simulate(
                    &inst,
                    &bundle.code,
                    &bundle.certifiability.encoders,
                    &bundle.decodability,
                    &messages,
                )?;
                if !report.all_passed {
                    let culprit = report
                        .node_results
                        .iter()
                        .chain(&report.message_results)
                        .find(|(_, ok)| !ok)
                        .map(|(name, _)| name.clone())
                        .unwrap_or_default();
                    return Err(CliError::Failed(format!(
                        "simulation: trial {trial} failed at {culprit}"
                    )));
                }
            }
            out!(
                "{trials} trials over GF({modulus}): every vertex transmission matched \
                 its encoder and every sink decoded its messages"
            );
            Ok(())
        }
        Command::Saks {
            n,
            k,
            mode,
            samples,
            seed,
            no_brute_force,
            no_flow,
            path_budget,
            output,
            emit_bundle,
        } => {
            let cert = match mode {
                Mode::Auto => CertChoice::Auto,
                Mode::Exhaustive => CertChoice::Exhaustive,
                Mode::Sampled => CertChoice::Sampled {
                    count: samples,
                    seed: seed.expect("clap enforces --seed in sampled mode"),
                },
            };
            let opts = SaksOptions {
                cert,
                brute_force: !no_brute_force,
                flow_budget: (!no_flow).then_some(path_budget),
            };
            let report = verify_corollary1(n, k, &opts)?;
            {
                use std::io::Write as _;
                let _ = write!(std::io::stdout(), "{}", report.render_table());
            }
            if let Some(path) = output {
                write_json_atomic(&path, &report)?;
            }
            if let Some(path) = emit_bundle {
                let bundle = cutcert::saks::saks_bundle(n, k)?;
                write_json_atomic(&path, &bundle)?;
            }
            if report.all_passed() {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| c.status == cutcert::saks::CheckStatus::Fail)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(CliError::Failed(format!(
                    "failed checks: {}",
                    failed.join(", ")
                )))
            }
        }
        Command::Report {
            instance,
            bundle,
            mode,
            samples,
            seed,
            path_budget,
        } => {
            let inst: Instance = load_instance(&instance)?;
            let bundle: CodeBundle = load_json(&bundle, "code bundle")?;
            cross_check(&inst, &bundle, &instance)?;
            let cert_mode = resolve_mode(mode, samples, seed, inst.n());
            bundle.verify(cert_mode, BRUTE_FORCE_VERTEX_LIMIT)?;

            let mut rows: Vec<(String, String)> = vec![
                ("instance".into(), instance.display().to_string()),
                ("vertices".into(), inst.n().to_string()),
                ("edges".into(), inst.edge_count().to_string()),
                ("commodities".into(), inst.commodities().len().to_string()),
            ];
            match max_flow_exact_auto(&inst, path_budget) {
                Ok(sol) => rows.push((
                    "max flow".into(),
                    format!(
                        "{} ({})",
                        rational_string(&sol.value),
                        if sol.exact { "exact" } else { "lower bound" }
                    ),
                )),
                Err(FlowError::PathBudget { budget }) => rows.push((
                    "max flow".into(),
                    format!("not computed: more than {budget} paths"),
                )),
                Err(e) => return Err(e.into()),
            }
            rows.push(("coding rate".into(), bundle.rate().to_string()));
            rows.push(("certified bound".into(), bundle.rho().to_string()));
            let sink_cut = inst.sink_attach_union();
            let cut = inst.multicut_from_indices(&sink_cut);
            rows.push((
                "sink-attach cut".into(),
                format!(
                    "{}{}",
                    cut.len(),
                    if inst.is_multicut(&cut)? {
                        " (a multicut)"
                    } else {
                        " (not a multicut)"
                    }
                ),
            ));
            if inst.n() <= BRUTE_FORCE_VERTEX_LIMIT {
                let (size, _) = inst.min_multicut(BRUTE_FORCE_VERTEX_LIMIT)?;
                rows.push(("minimum multicut".into(), size.to_string()));
            } else {
                rows.push((
                    "minimum multicut".into(),
                    format!(
                        "between {} (certified) and {} (sink-attach cut)",
                        bundle.rho(),
                        cut.len()
                    ),
                ));
            }
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in rows {
                out!("{k:<width$}  {v}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
