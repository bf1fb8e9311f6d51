use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factorize::{expand, FactorNetwork, FactorizeError, StrategyKind};
use crate::infer::{query_posterior, Elimination, Guard, HeuristicKind, InferError, Query};
use crate::model::{Factor, Network, VarId};

/// Default cross-strategy agreement tolerance (max-abs).
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(
        "strategies disagree on query {query}: {reference} vs {other} differ by {deviation:e}"
    )]
    Disagreement { query: String, reference: String, other: String, deviation: f64 },
    #[error("query {query} failed under {cell}: {source}")]
    Cell {
        query: String,
        cell: String,
        #[source]
        source: InferError,
    },
    #[error("nothing to run: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Disagreement { .. } => "disagreement",
            BenchError::Cell { .. } => "cell-failure",
            BenchError::Empty(_) => "empty-benchmark",
            BenchError::Csv(_) => "io",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuerySet {
    /// One prior marginal per network variable.
    AllMarginals,
    Explicit(Vec<Query>),
}

impl QuerySet {
    pub fn resolve(&self, net: &Network) -> Vec<Query> {
        match self {
            QuerySet::AllMarginals => (0..net.len()).map(|i| Query::marginal(VarId(i))).collect(),
            QuerySet::Explicit(qs) => qs.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub strategies: Vec<StrategyKind>,
    pub heuristics: Vec<HeuristicKind>,
    pub queries: QuerySet,
    pub guard: Guard,
    pub tolerance: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            strategies: StrategyKind::ALL.to_vec(),
            heuristics: HeuristicKind::ALL.to_vec(),
            queries: QuerySet::AllMarginals,
            guard: Guard::default(),
            tolerance: AGREEMENT_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    /// A resource guard tripped, during expansion or elimination.
    Aborted,
    /// The evidence has probability zero.
    ZeroProbability,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Aborted => "aborted",
            CellStatus::ZeroProbability => "zero-probability",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub query: usize,
    pub strategy: StrategyKind,
    pub heuristic: HeuristicKind,
    pub status: CellStatus,
    /// Counted up to the abort point for aborted cells.
    pub multiplications: u64,
    pub peak_table_entries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub query: usize,
    pub strategy: StrategyKind,
    pub heuristic: HeuristicKind,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub strategy: StrategyKind,
    pub heuristic: HeuristicKind,
    pub buckets: Vec<Bucket>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub strategy: StrategyKind,
    pub heuristic: HeuristicKind,
    /// Over completed cells only.
    pub multiplications: u64,
    pub max_peak_table_entries: usize,
    pub completed: usize,
    pub aborted: usize,
    pub zero_probability: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryInfo {
    pub id: usize,
    pub label: String,
    pub query: Query,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionInfo {
    pub strategy: StrategyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_entries: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub queries: Vec<QueryInfo>,
    pub expansions: Vec<ExpansionInfo>,
    pub cells: Vec<CellRow>,
    pub histograms: Vec<Histogram>,
    pub totals: Vec<Totals>,
    /// Largest max-abs difference seen between completed cells of a query.
    pub max_deviation: f64,
    /// Wall-clock times; the only nondeterministic part of a report.
    pub timings: Vec<CellTiming>,
}

impl BenchReport {
    pub fn without_timings(mut self) -> Self {
        self.timings.clear();
        self
    }

    pub fn cell(&self, query: usize, s: StrategyKind, h: HeuristicKind) -> Option<&CellRow> {
        self.cells.iter().find(|c| c.query == query && c.strategy == s && c.heuristic == h)
    }

    pub fn histogram(&self, s: StrategyKind, h: HeuristicKind) -> Option<&Histogram> {
        self.histograms.iter().find(|x| x.strategy == s && x.heuristic == h)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One line per cell: `query,strategy,heuristic,mults,peak,time_ms,status`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["query", "strategy", "heuristic", "mults", "peak", "time_ms", "status"])?;
        for (i, c) in self.cells.iter().enumerate() {
            let time = self.timings.get(i).map(|t| format!("{:.3}", t.wall_time_ms)).unwrap_or_default();
            w.write_record([
                self.queries[c.query].label.as_str(),
                c.strategy.as_str(),
                c.heuristic.as_str(),
                &c.multiplications.to_string(),
                &c.peak_table_entries.to_string(),
                &time,
                c.status.as_str(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Decade bucket for a multiplication count: `0-9`, `10-99`, `100-999`, ...
pub fn decade_label(count: u64) -> String {
    let digits = count.checked_ilog10().unwrap_or(0);
    let lo = if digits == 0 { 0 } else { 10u128.pow(digits) };
    let hi = 10u128.pow(digits + 1) - 1;
    format!("{lo}-{hi}")
}

fn query_label(net: &Network, q: &Query) -> String {
    let name = |v: VarId| net.variables().get(v.0).map_or_else(|| v.to_string(), |x| x.name.clone());
    let targets: Vec<String> = q.targets.iter().map(|&t| name(t)).collect();
    let mut label = targets.join(",");
    if !q.evidence.is_empty() {
        let ev: Vec<String> = q
            .evidence
            .iter()
            .map(|(&v, &s)| {
                let state = net.variables().get(v.0).and_then(|x| x.states.get(s)).cloned();
                format!("{}={}", name(v), state.unwrap_or_else(|| s.to_string()))
            })
            .collect();
        label = format!("{label}|{}", ev.join(","));
    }
    label
}

/// Expands `net` with every configured strategy and runs the benchmark.
pub fn run_benchmark(net: &Network, cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    let expansions: Vec<(StrategyKind, Result<FactorNetwork, FactorizeError>)> = cfg
        .strategies
        .iter()
        .map(|&s| (s, expand(net, s, cfg.guard.max_table_entries).map(|(fnet, _)| fnet)))
        .collect();
    run_expanded(net, &expansions, cfg)
}

struct CellOutcome {
    row: CellRow,
    timing: CellTiming,
    posterior: Option<Factor>,
}

fn run_cell(
    query_id: usize,
    q: &Query,
    strategy: StrategyKind,
    heuristic: HeuristicKind,
    expansion: &Result<FactorNetwork, FactorizeError>,
    cfg: &BenchConfig,
    label: &str,
) -> Result<CellOutcome, BenchError> {
    let start = Instant::now();
    let mut row = CellRow {
        query: query_id,
        strategy,
        heuristic,
        status: CellStatus::Ok,
        multiplications: 0,
        peak_table_entries: 0,
        detail: None,
    };
    let mut posterior = None;
    match expansion {
        Err(e @ FactorizeError::TooLarge { .. }) => {
            row.status = CellStatus::Aborted;
            row.detail = Some(e.to_string());
        }
        Err(e) => {
            return Err(BenchError::Cell {
                query: label.to_string(),
                cell: format!("{strategy}/{heuristic}"),
                source: InferError::from(e.clone()),
            })
        }
        Ok(fnet) => match query_posterior(fnet, q, &Elimination::Heuristic(heuristic), &cfg.guard) {
            Ok((p, stats)) => {
                row.multiplications = stats.multiplications;
                row.peak_table_entries = stats.peak_table_entries;
                posterior = Some(p);
            }
            Err(e) if e.is_guard() => {
                row.status = CellStatus::Aborted;
                if let InferError::GuardExceeded { what: "multiplications", value, .. } = e {
                    row.multiplications = value as u64;
                }
                row.detail = Some(e.to_string());
            }
            Err(e @ (InferError::ZeroNormalization | InferError::Underflow { .. })) => {
                row.status = CellStatus::ZeroProbability;
                row.detail = Some(e.to_string());
            }
            Err(e) => {
                return Err(BenchError::Cell {
                    query: label.to_string(),
                    cell: format!("{strategy}/{heuristic}"),
                    source: e,
                })
            }
        },
    }
    let timing = CellTiming {
        query: query_id,
        strategy,
        heuristic,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(CellOutcome { row, timing, posterior })
}

/// Runs the benchmark over already-expanded networks, one per strategy.
///
/// Queries run in parallel; the cells of one query run in a fixed order so
/// the report does not depend on scheduling. Completed cells of each query
/// must agree within `cfg.tolerance`.
pub fn run_expanded(
    net: &Network,
    expansions: &[(StrategyKind, Result<FactorNetwork, FactorizeError>)],
    cfg: &BenchConfig,
) -> Result<BenchReport, BenchError> {
    if expansions.is_empty() {
        return Err(BenchError::Empty("no strategies"));
    }
    if cfg.heuristics.is_empty() {
        return Err(BenchError::Empty("no heuristics"));
    }
    let queries = cfg.queries.resolve(net);
    let infos: Vec<QueryInfo> = queries
        .iter()
        .enumerate()
        .map(|(id, q)| QueryInfo { id, label: query_label(net, q), query: q.clone() })
        .collect();

    let per_query: Vec<(Vec<CellOutcome>, f64)> = infos
        .par_iter()
        .map(|info| {
            let mut outcomes = Vec::new();
            for (strategy, expansion) in expansions {
                for &h in &cfg.heuristics {
                    outcomes.push(run_cell(info.id, &info.query, *strategy, h, expansion, cfg, &info.label)?);
                }
            }
            let deviation = check_agreement(&outcomes, cfg.tolerance, &info.label)?;
            Ok((outcomes, deviation))
        })
        .collect::<Result<_, BenchError>>()?;

    let mut cells = Vec::new();
    let mut timings = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for (outcomes, dev) in per_query {
        max_deviation = max_deviation.max(dev);
        for o in outcomes {
            cells.push(o.row);
            timings.push(o.timing);
        }
    }

    let mut histograms = Vec::new();
    let mut totals = Vec::new();
    for (strategy, _) in expansions {
        for &h in &cfg.heuristics {
            let mine: Vec<&CellRow> = cells.iter().filter(|c| c.strategy == *strategy && c.heuristic == h).collect();
            histograms.push(Histogram { strategy: *strategy, heuristic: h, buckets: histogram(&mine) });
            let done = mine.iter().filter(|c| c.status == CellStatus::Ok);
            totals.push(Totals {
                strategy: *strategy,
                heuristic: h,
                multiplications: done.clone().map(|c| c.multiplications).sum(),
                max_peak_table_entries: done.clone().map(|c| c.peak_table_entries).max().unwrap_or(0),
                completed: done.count(),
                aborted: mine.iter().filter(|c| c.status == CellStatus::Aborted).count(),
                zero_probability: mine.iter().filter(|c| c.status == CellStatus::ZeroProbability).count(),
            });
        }
    }

    let expansions = expansions
        .iter()
        .map(|(s, r)| match r {
            Ok(fnet) => ExpansionInfo {
                strategy: *s,
                total_entries: Some(fnet.factors.iter().map(|f| f.len()).sum()),
                error: None,
            },
            Err(e) => ExpansionInfo { strategy: *s, total_entries: None, error: Some(e.to_string()) },
        })
        .collect();

    Ok(BenchReport { queries: infos, expansions, cells, histograms, totals, max_deviation, timings })
}

fn check_agreement(outcomes: &[CellOutcome], tolerance: f64, label: &str) -> Result<f64, BenchError> {
    let done: Vec<(&CellRow, &Factor)> =
        outcomes.iter().filter_map(|o| o.posterior.as_ref().map(|p| (&o.row, p))).collect();
    let Some(&(ref_row, reference)) = done.first() else {
        return Ok(0.0);
    };
    let name = |r: &CellRow| format!("{}/{}", r.strategy, r.heuristic);
    let mut worst: f64 = 0.0;
    for &(row, p) in &done[1..] {
        let deviation = reference.max_abs_diff(p).unwrap_or(f64::INFINITY);
        if deviation.is_nan() || deviation > tolerance {
            return Err(BenchError::Disagreement {
                query: label.to_string(),
                reference: name(ref_row),
                other: name(row),
                deviation,
            });
        }
        worst = worst.max(deviation);
    }
    Ok(worst)
}

/// Decade buckets from `0-9` up to the largest completed count, then the
/// `aborted` and `zero-probability` buckets. Counts sum to `cells.len()`.
fn histogram(cells: &[&CellRow]) -> Vec<Bucket> {
    let top = cells
        .iter()
        .filter(|c| c.status == CellStatus::Ok)
        .map(|c| c.multiplications.checked_ilog10().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let mut buckets: Vec<Bucket> = (0..=top)
        .map(|d| Bucket { label: decade_label(if d == 0 { 0 } else { 10u64.pow(d) }), count: 0 })
        .collect();
    let mut aborted = 0;
    let mut zero = 0;
    for c in cells {
        match c.status {
            CellStatus::Ok => buckets[c.multiplications.checked_ilog10().unwrap_or(0) as usize].count += 1,
            CellStatus::Aborted => aborted += 1,
            CellStatus::ZeroProbability => zero += 1,
        }
    }
    buckets.push(Bucket { label: "aborted".into(), count: aborted });
    buckets.push(Bucket { label: "zero-probability".into(), count: zero });
    buckets
}
