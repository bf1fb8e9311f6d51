//! Exact inference by variable elimination.
//!
//! The engine works on a [`FactorNetwork`] and never assumes factors are
//! nonnegative: intermediate products may hold negative entries that only
//! cancel once the right variables are summed out. Only the final target
//! table is required to be (numerically) nonnegative.
//!
//! Before eliminating, factors whose family is not an ancestor of a target
//! or evidence variable are dropped (iterated barren-node removal). Whole
//! families go together, which is what keeps the multiplicative expansion
//! sound: its pairwise factors are only normalized jointly with the
//! selector.

mod algebra;
mod brute;
mod heuristic;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factorize::{FactorNetwork, FactorizeError};
use crate::model::{table_len, Factor, ModelError, VarId};

pub use algebra::{marginalize, multiply, product_scope, restrict};
pub use brute::{brute_force_joint, JointDistribution, JOINT_STATE_LIMIT};
pub use heuristic::{choose_next, elimination_cost, HeuristicKind};

/// Final-table entries below `-NEGATIVE_TOLERANCE` are an error; entries in
/// `[-NEGATIVE_TOLERANCE, 0)` are clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_MULTIPLICATIONS: u64 = 100_000_000;
pub const DEFAULT_MAX_TABLE_ENTRIES: usize = crate::factorize::DEFAULT_MAX_TABLE_ENTRIES;
/// Environment variable overriding [`Guard::max_multiplications`].
pub const GUARD_MULTS_ENV: &str = "NOISYMAX_GUARD_MULTS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("variable {0} is not in the factor's scope")]
    NotInScope(VarId),
    #[error("state {state} out of range for variable {variable} with {card} states")]
    InvalidState { variable: VarId, state: usize, card: usize },
    #[error("variable {variable} has {left} states on one side of a product and {right} on the other")]
    DomainMismatch { variable: VarId, left: usize, right: usize },
    #[error("normalization constant is zero (evidence has probability zero)")]
    ZeroNormalization,
    #[error("normalization constant {total:e} underflowed")]
    Underflow { total: f64 },
    #[error("final table has entry {value:e} below the negative tolerance")]
    NegativeMass { value: f64 },
    #[error("{what} reached {value}, guard is {limit}")]
    GuardExceeded { what: &'static str, value: u128, limit: u128 },
    #[error("joint state space of {states} exceeds {limit}")]
    StateSpaceTooLarge { states: u128, limit: usize },
    #[error("fixed ordering does not mention eliminable variable {0}")]
    IncompleteOrdering(VarId),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Factorize(#[from] Box<FactorizeError>),
}

impl InferError {
    pub fn kind(&self) -> &'static str {
        match self {
            InferError::InvalidQuery(_) => "invalid-query",
            InferError::NotInScope(_) => "not-in-scope",
            InferError::InvalidState { .. } => "invalid-state",
            InferError::DomainMismatch { .. } => "domain-mismatch",
            InferError::ZeroNormalization => "zero-normalization",
            InferError::Underflow { .. } => "underflow",
            InferError::NegativeMass { .. } => "negative-mass",
            InferError::GuardExceeded { .. } => "guard-exceeded",
            InferError::StateSpaceTooLarge { .. } => "state-space-too-large",
            InferError::IncompleteOrdering(_) => "incomplete-ordering",
            InferError::Model(e) => e.kind(),
            InferError::Factorize(e) => e.kind(),
        }
    }

    pub fn is_guard(&self) -> bool {
        matches!(self, InferError::GuardExceeded { .. } | InferError::StateSpaceTooLarge { .. })
    }
}

impl From<FactorizeError> for InferError {
    fn from(e: FactorizeError) -> Self {
        InferError::Factorize(Box::new(e))
    }
}

/// Posterior of `targets` jointly, given observed states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub targets: Vec<VarId>,
    pub evidence: BTreeMap<VarId, usize>,
}

impl Query {
    pub fn marginal(target: VarId) -> Self {
        Query { targets: vec![target], evidence: BTreeMap::new() }
    }

    pub fn with_evidence(mut self, v: VarId, state: usize) -> Self {
        self.evidence.insert(v, state);
        self
    }

    /// Checks the query against a network whose first `original` variables
    /// are observable and whose domain sizes are given by `card`.
    pub(crate) fn validate(&self, original: usize, card: impl Fn(VarId) -> usize) -> Result<(), InferError> {
        if self.targets.is_empty() {
            return Err(InferError::InvalidQuery("no target variables".into()));
        }
        for (i, &t) in self.targets.iter().enumerate() {
            if t.0 >= original {
                return Err(InferError::InvalidQuery(format!("target {t} is not a network variable")));
            }
            if self.targets[..i].contains(&t) {
                return Err(InferError::InvalidQuery(format!("target {t} listed twice")));
            }
            if self.evidence.contains_key(&t) {
                return Err(InferError::InvalidQuery(format!("target {t} is also observed")));
            }
        }
        for (&v, &s) in &self.evidence {
            if v.0 >= original {
                return Err(InferError::InvalidQuery(format!("evidence on {v}, which is not a network variable")));
            }
            let c = card(v);
            if s >= c {
                return Err(InferError::InvalidState { variable: v, state: s, card: c });
            }
        }
        Ok(())
    }
}

/// How the elimination order is decided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Elimination {
    Heuristic(HeuristicKind),
    /// Eliminate in this order. Entries that are not eliminable for the
    /// query (targets, evidence, pruned variables) are skipped; every
    /// eliminable variable must appear.
    Fixed(Vec<VarId>),
}

impl From<HeuristicKind> for Elimination {
    fn from(h: HeuristicKind) -> Self {
        Elimination::Heuristic(h)
    }
}

/// Resource limits for one query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guard {
    pub max_multiplications: u64,
    pub max_table_entries: usize,
}

impl Default for Guard {
    fn default() -> Self {
        Guard { max_multiplications: DEFAULT_MAX_MULTIPLICATIONS, max_table_entries: DEFAULT_MAX_TABLE_ENTRIES }
    }
}

impl Guard {
    /// Defaults, with the multiplication limit taken from
    /// `NOISYMAX_GUARD_MULTS` when set.
    pub fn from_env() -> Result<Self, String> {
        let mut g = Guard::default();
        if let Ok(raw) = std::env::var(GUARD_MULTS_ENV) {
            g.max_multiplications = raw
                .trim()
                .parse()
                .map_err(|_| format!("{GUARD_MULTS_ENV}={raw:?} is not a nonnegative integer"))?;
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationStats {
    /// One per output entry of every binary product.
    pub multiplications: u64,
    pub peak_table_entries: usize,
    pub ordering: Vec<VarId>,
    pub relevant_vars: usize,
    pub relevant_factors: usize,
}

impl EliminationStats {
    fn product(&mut self, factors: Vec<Factor>, guard: &Guard) -> Result<Factor, InferError> {
        let mut iter = factors.into_iter();
        let mut acc = iter.next().unwrap_or_else(|| Factor::scalar(1.0));
        for f in iter {
            let (_, cards) = product_scope(&acc, &f)?;
            let entries = table_len(&cards).unwrap_or(usize::MAX);
            if entries > guard.max_table_entries {
                return Err(InferError::GuardExceeded {
                    what: "intermediate table entries",
                    value: entries as u128,
                    limit: guard.max_table_entries as u128,
                });
            }
            acc = multiply(&acc, &f)?;
            self.multiplications += acc.len() as u64;
            if self.multiplications > guard.max_multiplications {
                return Err(InferError::GuardExceeded {
                    what: "multiplications",
                    value: self.multiplications as u128,
                    limit: guard.max_multiplications as u128,
                });
            }
        }
        self.peak_table_entries = self.peak_table_entries.max(acc.len());
        Ok(acc)
    }
}

/// Originals that are ancestors of (or are) a target or evidence variable.
fn relevant_families(parents: &[Vec<VarId>], q: &Query) -> Vec<bool> {
    let mut keep = vec![false; parents.len()];
    let mut stack: Vec<VarId> = q.targets.iter().chain(q.evidence.keys()).copied().collect();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut keep[v.0], true) {
            stack.extend(parents[v.0].iter().copied());
        }
    }
    keep
}

/// Answers `q` on an expanded network.
///
/// Returns the normalized table over `q.targets` (in that order) together
/// with cost statistics.
pub fn query_posterior(
    net: &FactorNetwork,
    q: &Query,
    order: &Elimination,
    guard: &Guard,
) -> Result<(Factor, EliminationStats), InferError> {
    q.validate(net.original_count, |v| net.variable(v).card())?;
    let keep = relevant_families(&net.parents, q);

    let mut live: Vec<Factor> = net
        .factors
        .iter()
        .zip(&net.families)
        .filter(|(_, fam)| keep[fam.0])
        .map(|(f, _)| f.clone())
        .collect();
    let mut stats = EliminationStats { relevant_factors: live.len(), ..Default::default() };
    let in_scope: BTreeSet<VarId> = live.iter().flat_map(|f| f.scope().iter().copied()).collect();
    stats.relevant_vars = in_scope.len();

    for f in live.iter_mut() {
        for (&v, &s) in &q.evidence {
            if f.contains(v) {
                *f = restrict(f, v, s)?;
            }
        }
    }

    let mut eliminable: BTreeSet<VarId> = in_scope
        .into_iter()
        .filter(|v| !q.targets.contains(v) && !q.evidence.contains_key(v))
        .collect();
    let mut fixed = match order {
        Elimination::Fixed(list) => Some(list.iter()),
        Elimination::Heuristic(_) => None,
    };
    while !eliminable.is_empty() {
        let v = match (order, fixed.as_mut()) {
            (Elimination::Heuristic(h), _) => choose_next(&live, &eliminable, *h),
            (Elimination::Fixed(_), Some(it)) => *it
                .find(|v| eliminable.contains(v))
                .ok_or_else(|| InferError::IncompleteOrdering(*eliminable.iter().next().unwrap()))?,
            (Elimination::Fixed(_), None) => unreachable!(),
        };
        eliminable.remove(&v);
        let (with, rest): (Vec<Factor>, Vec<Factor>) = live.into_iter().partition(|f| f.contains(v));
        live = rest;
        let product = stats.product(with, guard)?;
        let reduced = marginalize(&product, v)?;
        live.push(reduced);
        stats.ordering.push(v);
    }

    let joint = stats.product(live, guard)?;
    if joint.scope().len() != q.targets.len() {
        return Err(InferError::InvalidQuery(format!(
            "final table spans {:?}, expected the targets {:?}",
            joint.scope(),
            q.targets
        )));
    }
    let joint = joint.reorder(&q.targets)?;
    Ok((normalize(joint)?, stats))
}

/// Clamps tiny negatives and scales entries to sum to one.
pub fn normalize(mut table: Factor) -> Result<Factor, InferError> {
    for x in table.values_mut() {
        if *x < -NEGATIVE_TOLERANCE || x.is_nan() {
            return Err(InferError::NegativeMass { value: *x });
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total = table.sum();
    if total == 0.0 {
        return Err(InferError::ZeroNormalization);
    }
    if !total.is_normal() {
        return Err(InferError::Underflow { total });
    }
    for x in table.values_mut() {
        *x /= total;
    }
    Ok(table)
}
