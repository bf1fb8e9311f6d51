//! Synthetic workloads and the cross-strategy benchmark runner.

mod generate;
mod rng;
mod runner;

pub use generate::{generate, generate_single_effect, GenerateError, GeneratorKind, GeneratorSpec};
pub use rng::SeededRng;
pub use runner::{
    decade_label, run_benchmark, run_expanded, BenchConfig, BenchError, BenchReport, Bucket, CellRow,
    CellStatus, CellTiming, ExpansionInfo, Histogram, QueryInfo, QuerySet, Totals, AGREEMENT_TOLERANCE,
};
