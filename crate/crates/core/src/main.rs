use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use noisymax::bench::{self, BenchConfig, GeneratorKind, GeneratorSpec, QuerySet};
use noisymax::model::advance;
use noisymax::{expand, parse_network, query_posterior, serialize_network, Guard, HeuristicKind, Network, Query, StrategyKind};

#[derive(Parser)]
#[command(name = "noisymax", version, about = "Exact inference and benchmarks for noisy-max Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a network file.
    Validate { file: PathBuf },
    /// Report the factor sizes each expansion produces.
    Expand {
        file: PathBuf,
        /// A strategy name, or `all`.
        #[arg(long, default_value = "all")]
        strategy: String,
        #[arg(long, value_enum, default_value_t = ReportKind::Sizes)]
        report: ReportKind,
        #[arg(long)]
        guard_entries: Option<usize>,
    },
    /// Compute a posterior.
    Infer {
        file: PathBuf,
        #[arg(long = "target", required = true)]
        targets: Vec<String>,
        /// `VARIABLE=STATE`, repeatable.
        #[arg(long = "evidence")]
        evidence: Vec<String>,
        #[arg(long, default_value = "multiplicative")]
        strategy: StrategyKind,
        #[arg(long, default_value = "min-weight")]
        heuristic: HeuristicKind,
        /// Also print elimination statistics.
        #[arg(long)]
        stats: bool,
        #[command(flatten)]
        guard: GuardArgs,
    },
    /// Generate a synthetic network.
    Gen {
        #[arg(long, default_value = "bn2o")]
        kind: GeneratorKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        diseases: usize,
        #[arg(long, default_value_t = 10)]
        findings: usize,
        #[arg(long, default_value_t = 3)]
        max_parents: usize,
        /// Effect domain size.
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every (query, strategy, heuristic) cell and check agreement.
    Bench {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "trivial,parent-divorcing,temporal,multiplicative")]
        strategies: Vec<StrategyKind>,
        #[arg(long, value_delimiter = ',', default_value = "min-size,min-weight")]
        heuristics: Vec<HeuristicKind>,
        /// JSON file of queries; every prior marginal when omitted.
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = bench::AGREEMENT_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        guard: GuardArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Sizes,
}

#[derive(clap::Args)]
struct GuardArgs {
    /// Multiplication limit per query (overrides NOISYMAX_GUARD_MULTS).
    #[arg(long)]
    guard_mults: Option<u64>,
    #[arg(long)]
    guard_entries: Option<usize>,
}

impl GuardArgs {
    fn resolve(&self) -> Result<Guard, CliError> {
        let mut g = Guard::from_env().map_err(|m| CliError::new("usage", m))?;
        if let Some(m) = self.guard_mults {
            g.max_multiplications = m;
        }
        if let Some(e) = self.guard_entries {
            g.max_table_entries = e;
        }
        Ok(g)
    }
}

struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError { kind, message: message.into() }
    }
}

macro_rules! from_kinded {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.kind(), e.to_string())
            }
        }
    )*};
}
from_kinded!(noisymax::ModelError, noisymax::FactorizeError, noisymax::InferError, bench::BenchError);

impl From<bench::GenerateError> for CliError {
    fn from(e: bench::GenerateError) -> Self {
        CliError::new("infeasible-spec", e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::new("io", format!("{}: {e}", path.display()))
}

fn read_network(path: &Path) -> Result<Network, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(parse_network(&text)?)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::new("io", e.to_string()))
        }
    }
}

fn lookup(net: &Network, name: &str) -> Result<noisymax::VarId, CliError> {
    net.find(name).ok_or_else(|| CliError::new("invalid-query", format!("no variable named `{name}`")))
}

fn lookup_state(net: &Network, var: &str, state: &str) -> Result<(noisymax::VarId, usize), CliError> {
    let v = lookup(net, var)?;
    let s = net
        .variable(v)
        .state_index(state)
        .ok_or_else(|| CliError::new("invalid-query", format!("variable `{var}` has no state `{state}`")))?;
    Ok((v, s))
}

fn build_query(net: &Network, targets: &[String], evidence: &[(String, String)]) -> Result<Query, CliError> {
    let targets = targets.iter().map(|t| lookup(net, t)).collect::<Result<_, _>>()?;
    let mut q = Query { targets, evidence: BTreeMap::new() };
    for (var, state) in evidence {
        let (v, s) = lookup_state(net, var, state)?;
        q.evidence.insert(v, s);
    }
    Ok(q)
}

#[derive(Deserialize)]
struct QueryDoc {
    targets: Vec<String>,
    #[serde(default)]
    evidence: BTreeMap<String, String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { file } => {
            let net = read_network(&file)?;
            let out = json!({
                "valid": true,
                "variables": net.len(),
                "edges": net.edge_count(),
                "noisy_max_nodes": net.noisy_max_nodes().count(),
            });
            println!("{out}");
        }
        Command::Expand { file, strategy, report: ReportKind::Sizes, guard_entries } => {
            let net = read_network(&file)?;
            let strategies: Vec<StrategyKind> = if strategy == "all" {
                StrategyKind::ALL.to_vec()
            } else {
                vec![strategy.parse().map_err(|m: String| CliError::new("usage", m))?]
            };
            let limit = guard_entries.unwrap_or(Guard::default().max_table_entries);
            let mut reports = Vec::new();
            for s in strategies {
                reports.push(match expand(&net, s, limit) {
                    Ok((_, report)) => json!({
                        "strategy": s,
                        "nodes": report.nodes,
                        "encoding_entries": report.encoding_entries,
                        "total_entries": report.total_entries,
                    }),
                    Err(e) => json!({ "strategy": s, "error": e.kind(), "message": e.to_string() }),
                });
            }
            println!("{}", serde_json::to_string_pretty(&reports).expect("json"));
        }
        Command::Infer { file, targets, evidence, strategy, heuristic, stats, guard } => {
            let net = read_network(&file)?;
            let guard = guard.resolve()?;
            let pairs = evidence
                .iter()
                .map(|e| {
                    e.split_once('=')
                        .map(|(v, s)| (v.to_string(), s.to_string()))
                        .ok_or_else(|| CliError::new("usage", format!("evidence `{e}` is not VARIABLE=STATE")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let q = build_query(&net, &targets, &pairs)?;
            let start = Instant::now();
            let (expanded, _) = expand(&net, strategy, guard.max_table_entries)?;
            let (posterior, st) = query_posterior(&expanded, &q, &heuristic.into(), &guard)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;

            let cards: Vec<usize> = q.targets.iter().map(|&t| net.card(t)).collect();
            let mut asg = vec![0; cards.len()];
            let mut rows = Vec::new();
            for &p in posterior.values() {
                let states: Vec<&str> =
                    q.targets.iter().zip(&asg).map(|(&t, &s)| net.variable(t).states[s].as_str()).collect();
                rows.push(json!({ "states": states, "p": p }));
                advance(&mut asg, &cards);
            }
            let mut out = json!({ "targets": targets, "evidence": evidence, "posterior": rows });
            if stats {
                out["stats"] = json!({
                    "strategy": strategy,
                    "heuristic": heuristic,
                    "multiplications": st.multiplications,
                    "peak_table_entries": st.peak_table_entries,
                    "relevant_vars": st.relevant_vars,
                    "relevant_factors": st.relevant_factors,
                    "wall_time_ms": elapsed,
                });
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
        }
        Command::Gen { kind, seed, diseases, findings, max_parents, states, density, output } => {
            let spec = GeneratorSpec {
                kind,
                seed,
                diseases,
                findings,
                max_parents,
                effect_domain_size: states,
                link_density: density,
            };
            let net = bench::generate(&spec)?;
            write_out(output.as_deref(), &serialize_network(&net))?;
        }
        Command::Bench { file, strategies, heuristics, queries, out, csv, tolerance, guard } => {
            let net = read_network(&file)?;
            let queries = match queries {
                None => QuerySet::AllMarginals,
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
                    let docs: Vec<QueryDoc> = serde_json::from_str(&text)
                        .map_err(|e| CliError::new("syntax", format!("{}: {e}", path.display())))?;
                    let qs = docs
                        .iter()
                        .map(|d| {
                            let ev: Vec<(String, String)> = d.evidence.clone().into_iter().collect();
                            build_query(&net, &d.targets, &ev)
                        })
                        .collect::<Result<_, _>>()?;
                    QuerySet::Explicit(qs)
                }
            };
            let cfg = BenchConfig { strategies, heuristics, queries, guard: guard.resolve()?, tolerance };
            let report = bench::run_benchmark(&net, &cfg)?;
            if let Some(path) = csv {
                let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
                report.write_csv(f)?;
            }
            write_out(out.as_deref(), &report.to_json())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", json!({ "error": "usage", "message": message.trim() }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind, "message": e.message }));
            ExitCode::FAILURE
        }
    }
}
