//! Exact inference for Bayesian networks whose conditional distributions
//! may be noisy-max.
//!
//! A [`Network`] mixes ordinary table CPDs with [`NoisyMaxCpd`] nodes. Before
//! inference each noisy-max node is lowered to plain factors by one of four
//! [`StrategyKind`] expansions, and [`query_posterior`] runs variable
//! elimination over the result. The multiplicative expansion keeps every
//! factor small (at most pairwise plus one `m * 2^(m-1)` selector) at the
//! price of allowing negative entries.
//!
//! ```
//! use noisymax::{expand, parse_network, query_posterior, Guard, HeuristicKind, Query, StrategyKind};
//!
//! let net = parse_network(r#"{
//!   "variables": [
//!     {"name": "C1", "states": ["F", "T"]},
//!     {"name": "C2", "states": ["F", "T"]},
//!     {"name": "E",  "states": ["F", "T"]}
//!   ],
//!   "nodes": [
//!     {"child": "C1", "parents": [], "cpd": {"type": "table", "values": [0.5, 0.5]}},
//!     {"child": "C2", "parents": [], "cpd": {"type": "table", "values": [0.5, 0.5]}},
//!     {"child": "E", "cpd": {"type": "noisy-max", "causes": ["C1", "C2"],
//!       "links": [[[1.0, 0.0], [0.2, 0.8]], [[1.0, 0.0], [0.4, 0.6]]]}}
//!   ]
//! }"#)?;
//! let (expanded, _) = expand(&net, StrategyKind::Multiplicative, 1_000_000)?;
//! let e = net.find("E").unwrap();
//! let (posterior, _) = query_posterior(&expanded, &Query::marginal(e), &HeuristicKind::MinWeight.into(), &Guard::default())?;
//! assert!((posterior.values()[1] - 0.58).abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bench;
pub mod factorize;
pub mod infer;
pub mod model;

pub use factorize::{expand, oracle_cpd, ExpansionResult, FactorNetwork, FactorizeError, StrategyKind};
pub use infer::{brute_force_joint, normalize, query_posterior, Elimination, Guard, HeuristicKind, InferError, Query};
pub use model::{parse_network, serialize_network, Cpd, Factor, LinkTable, ModelError, Network, NoisyMaxCpd, VarId, Variable};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/factors.md")]
    mod factors {}
    #[doc = include_str!("../../../book/src/noisy-max.md")]
    mod noisy_max {}
    #[doc = include_str!("../../../book/src/expansions.md")]
    mod expansions {}
    #[doc = include_str!("../../../book/src/multiplicative.md")]
    mod multiplicative {}
    #[doc = include_str!("../../../book/src/elimination.md")]
    mod elimination {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
