//! `markovia`: conditional-independence and Markov-property diagnostics.
//!
//! Exit status: 0 all checks pass, 2 some check fails, 3 inconclusive,
//! 1 usage or configuration error.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use markovia_core::counterexamples::{ParityProcessSpec, ThetaShiftSpec};
use markovia_core::gaussian::VerifyOptions;
use markovia_core::graph::VertexSet;
use markovia_core::graphoid::{Axiom, AxiomOptions, MarkovProperty, DEFAULT_DISCRETE_TOL};
use markovia_core::report::DiagnosticReport;

use commands::{ConditioningOrder, DcpOptions, Outcome};
use config::{ChainConfig, CounterexampleConfig, GaussianConfig, IsingConfig, MarkovConfig, RelationSpec};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "markovia", version, about = "Conditional independence and Markov property diagnostics")]
struct Cli {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the command's CSV trace here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Seed for every random choice; recorded in the report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override the command's numerical tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PmfSource {
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Example {
    Parity,
    ThetaShift,
    MaShift,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check graphoid axioms of a relation.
    CheckGraphoid {
        /// JSON model file.
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated axiom ids (P1*,P2*,P3*,P4*,P5,P5*); all by default.
        #[arg(long, value_delimiter = ',')]
        axioms: Vec<String>,
        /// Largest ground set enumerated exhaustively.
        #[arg(long, default_value_t = markovia_core::graphoid::DEFAULT_CAP)]
        cap: usize,
        /// Random instantiations to draw when the ground set exceeds the cap.
        #[arg(long)]
        samples: Option<usize>,
        /// Enumerate every partition for the general intersection property.
        #[arg(long)]
        full_partitions: bool,
    },
    /// Check pairwise, local and global Markov properties against a graph.
    CheckMarkov {
        /// JSON model file.
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated properties (pairwise, local, global); all by default.
        #[arg(long, value_delimiter = ',')]
        property: Vec<String>,
    },
    /// Audit the implications between the Markov properties.
    AuditEquivalence {
        /// JSON file with a relation and a graph.
        #[arg(long, conflicts_with = "pmf")]
        model: Option<PathBuf>,
        /// Draw random positive tables instead of reading a model.
        #[arg(long)]
        pmf: Option<PmfSource>,
        /// Variables per random table.
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Number of random tables.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Largest ground set enumerated exhaustively.
        #[arg(long, default_value_t = markovia_core::graphoid::DEFAULT_CAP)]
        cap: usize,
    },
    /// Eigenvalue floors, symbol bounds and decay recursion of a Gaussian model.
    GaussianVerify {
        /// JSON model file.
        #[arg(long)]
        model: PathBuf,
        /// Leading block sizes to diagonalize.
        #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 20, 40])]
        sizes: Vec<usize>,
    },
    /// Conditional law of a target block given growing conditioning sets.
    GaussianConverge {
        /// JSON model file.
        #[arg(long)]
        model: PathBuf,
        /// Indices of the target block.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize])]
        target: Vec<usize>,
        /// Conditioning coordinates to add, one per step.
        #[arg(long, default_value_t = 40)]
        steps: usize,
        /// Order in which conditioning coordinates are added.
        #[arg(long, value_enum, default_value_t = ConditioningOrder::Natural)]
        order: ConditioningOrder,
        /// Number of final steps that must all change by less than the tolerance.
        #[arg(long, default_value_t = 5)]
        window: usize,
    },
    /// Exact Ising table on the first n nodes.
    IsingExact {
        /// JSON model file.
        #[arg(long)]
        model: PathBuf,
        /// Number of nodes.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Random conditionals compared with the table.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Ratio traces of prefix marginals as the truncation grows.
    IsingConverge {
        /// JSON model file.
        #[arg(long)]
        model: PathBuf,
        /// Prefix length.
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Largest truncation.
        #[arg(long, default_value_t = 16)]
        nmax: usize,
    },
    /// Conditional-variance bound for tail events of a two-state chain.
    ChainDcp {
        /// JSON chain file.
        #[arg(long, conflicts_with = "random_specs")]
        model: Option<PathBuf>,
        /// Draw this many random chains instead of reading a model.
        #[arg(long)]
        random_specs: Option<usize>,
        /// Coordinates in the exact table.
        #[arg(long, default_value_t = 12)]
        n: usize,
        /// Length of the conditioned head block.
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Random tail events per chain.
        #[arg(long, default_value_t = 20)]
        events: usize,
    },
    /// Reproduce a separating example.
    Counterexample {
        /// Built-in example.
        #[arg(long, value_enum, required_unless_present = "model")]
        which: Option<Example>,
        /// JSON example file, instead of a built-in one.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Number of coordinates kept.
        #[arg(long)]
        truncation: Option<usize>,
        /// Moving-average coefficient.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Probability of the shifted component.
        #[arg(long, default_value_t = 0.5)]
        weight: f64,
    },
    /// Merge reports; the verdict is the worst of the inputs.
    Merge {
        /// Report files to merge.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn parse_axioms(ids: &[String]) -> Result<Vec<Axiom>, CliError> {
    if ids.is_empty() {
        return Ok(Axiom::ALL.to_vec());
    }
    ids.iter()
        .map(|s| Axiom::parse(s).ok_or_else(|| CliError::Usage(format!("unknown axiom `{s}`"))))
        .collect()
}

fn parse_properties(ids: &[String]) -> Result<Vec<MarkovProperty>, CliError> {
    if ids.is_empty() || ids.iter().any(|s| s == "all") {
        return Ok(MarkovProperty::ALL.to_vec());
    }
    ids.iter()
        .map(|s| MarkovProperty::parse(s).ok_or_else(|| CliError::Usage(format!("unknown property `{s}`"))))
        .collect()
}

fn read_report(path: &Path) -> Result<DiagnosticReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    Ok(DiagnosticReport::from_json(&text)?)
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let seed = cli.seed;
    let out = match &cli.command {
        Command::CheckGraphoid { model, axioms, cap, samples, full_partitions } => {
            let r = config::load::<RelationSpec>(model)?.build(cli.tol)?;
            let opts = AxiomOptions { cap: *cap, samples: *samples, seed, full_partitions: *full_partitions };
            commands::check_graphoid(&r, &parse_axioms(axioms)?, &opts)?
        }
        Command::CheckMarkov { model, property } => {
            let c = config::load::<MarkovConfig>(model)?;
            let r = c.relation.build(cli.tol)?;
            commands::check_markov_all(&r, &c.graph.build()?, &parse_properties(property)?)?
        }
        Command::AuditEquivalence { model, pmf, n, trials, cap } => match (model, pmf) {
            (Some(path), None) => {
                let c = config::load::<MarkovConfig>(path)?;
                let opts = AxiomOptions { cap: *cap, seed, ..Default::default() };
                commands::audit_model(&c.relation.build(cli.tol)?, &c.graph.build()?, &opts)?
            }
            (None, Some(PmfSource::Random)) => {
                commands::audit_random(*n, *trials, seed, cli.tol.unwrap_or(DEFAULT_DISCRETE_TOL))?
            }
            _ => return Err(CliError::Usage("give either --model or --pmf random".into())),
        },
        Command::GaussianVerify { model, sizes } => {
            let c = config::load::<GaussianConfig>(model)?;
            let d = VerifyOptions::default();
            let opts = VerifyOptions {
                sizes: sizes.clone(),
                envelope: c.envelope,
                cutoff: c.cutoff.unwrap_or(d.cutoff),
                eps: c.eps.unwrap_or(d.eps),
                tol: cli.tol.unwrap_or(d.tol),
            };
            commands::gaussian_verify(&c.covariance.build()?, &opts)?
        }
        Command::GaussianConverge { model, target, steps, order, window } => {
            let c = config::load::<GaussianConfig>(model)?;
            let target: VertexSet = target.iter().copied().collect();
            commands::gaussian_converge(&c.covariance.build()?, &target, *steps, *order, cli.tol.unwrap_or(1e-6), *window)?
        }
        Command::IsingExact { model, n, samples } => {
            let m = config::load::<IsingConfig>(model)?.model.build()?;
            commands::ising_exact_cmd(&m, *n, *samples, seed, cli.tol.unwrap_or(1e-12))?
        }
        Command::IsingConverge { model, m, nmax } => {
            let model = config::load::<IsingConfig>(model)?.model.build()?;
            commands::ising_converge_cmd(&model, *m, *nmax, cli.tol.unwrap_or(1e-10))?
        }
        Command::ChainDcp { model, random_specs, n, m, events } => {
            let specs = match (model, random_specs) {
                (Some(path), None) => {
                    let c = config::load::<ChainConfig>(path)?.chain;
                    c.validate()?;
                    vec![c]
                }
                (None, Some(k)) => commands::random_chain_specs(*k, *n, seed),
                _ => return Err(CliError::Usage("give either --model or --random-specs".into())),
            };
            let o = DcpOptions { n: *n, m: *m, events: *events, tol: cli.tol.unwrap_or(1e-12) };
            commands::chain_dcp(&specs, &o, seed)?
        }
        Command::Counterexample { which, model, truncation, alpha, weight } => {
            let cfg = match (model, which) {
                (Some(path), _) => config::load::<CounterexampleConfig>(path)?,
                (None, Some(Example::Parity)) => CounterexampleConfig::Parity(ParityProcessSpec::new(truncation.unwrap_or(10))?),
                (None, Some(Example::ThetaShift)) => {
                    CounterexampleConfig::ThetaShift { weight: *weight, truncation: truncation.unwrap_or(10) }
                }
                (None, Some(Example::MaShift)) => {
                    CounterexampleConfig::MaShift { weight: *weight, alpha: *alpha, truncation: truncation.unwrap_or(12) }
                }
                (None, None) => return Err(CliError::Usage("give --which or --model".into())),
            };
            match (&cfg, cfg.shift_base()) {
                (CounterexampleConfig::Parity(spec), _) => commands::parity_cmd(spec)?,
                (CounterexampleConfig::ThetaShift { weight, truncation }, Some(base))
                | (CounterexampleConfig::MaShift { weight, truncation, .. }, Some(base)) => {
                    commands::shift_cmd(&ThetaShiftSpec::new(*weight, base, *truncation)?)?
                }
                _ => unreachable!("shift configs always have a base"),
            }
        }
        Command::Merge { reports } => {
            let rs = reports.iter().map(|p| read_report(p)).collect::<Result<Vec<_>, _>>()?;
            commands::merge(&rs)?
        }
    };
    Ok(out)
}

fn emit(cli: &Cli, mut out: Outcome) -> Result<i32, CliError> {
    if !matches!(cli.command, Command::Merge { .. }) {
        out.report.seed = Some(cli.seed);
    }
    let code = out.report.verdict.exit_code();
    let json = out.report.to_json() + "\n";
    match &cli.out {
        Some(p) => std::fs::write(p, json).map_err(|e| CliError::Io { path: p.display().to_string(), source: e })?,
        None => {
            let mut so = std::io::stdout().lock();
            let _ = so.write_all(json.as_bytes());
        }
    }
    if let Some(p) = &cli.csv {
        out.table.unwrap_or_else(|| commands::section_table(&out.report)).write(p)?;
    }
    Ok(code)
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("MARKOVIA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("MARKOVIA_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(CliError::Usage("MARKOVIA_THREADS must be positive".into()));
        }
        // a pool that already exists is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| execute(&cli)).and_then(|o| emit(&cli, o));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
