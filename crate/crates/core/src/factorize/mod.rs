//! Turning noisy-max nodes into ordinary factors.
//!
//! Four expansions are provided, all producing a set of [`Factor`]s whose
//! product, with the auxiliary variables summed out, is the node's
//! conditional table:
//!
//! * [`expand_trivial`]: one deterministic `m^(n+1)` max table over per-cause
//!   contribution variables.
//! * [`expand_parent_divorcing`]: a balanced tree of binary max tables.
//! * [`expand_temporal`]: a left-deep chain of binary max tables.
//! * [`expand_multiplicative`]: `m - 1` two-state intermediate variables,
//!   pairwise cumulative-mass factors, and a `{-1, 0, 1}` effect selector.
//!   Only multiplication is needed to combine them; the subtractions that
//!   carve each effect value out of nested hypercubes live inside the
//!   selector's negative entries.
//!
//! A leak vector is handled as one more contribution whose parent has a
//! single state, so its factors simply have no cause variable in scope.

mod decompose;
mod multiplicative;
mod oracle;
mod trivial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::infer::{self, InferError};
use crate::model::{Contribution, Cpd, Factor, ModelError, Network, NoisyMaxCpd, VarId, Variable};

pub use decompose::{binary_max_factor, expand_parent_divorcing, expand_temporal};
pub use multiplicative::{cumulative_density, expand_multiplicative, effect_selector, Mark};
pub use oracle::{oracle_cpd, ORACLE_LIMIT};
pub use trivial::expand_trivial;

/// Default bound on the entry count of any single table an expansion builds.
pub const DEFAULT_MAX_TABLE_ENTRIES: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorizeError {
    #[error("{what} needs {entries} entries, limit is {limit}")]
    TooLarge { what: &'static str, entries: u128, limit: usize },
    #[error("prefix length {prefix_len} outside 1..={max}")]
    PrefixOutOfRange { prefix_len: usize, max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Infer(#[from] Box<InferError>),
}

impl FactorizeError {
    pub fn kind(&self) -> &'static str {
        match self {
            FactorizeError::TooLarge { .. } => "guard-exceeded",
            FactorizeError::PrefixOutOfRange { .. } => "prefix-out-of-range",
            FactorizeError::Model(e) => e.kind(),
            FactorizeError::Infer(e) => e.kind(),
        }
    }
}

impl From<InferError> for FactorizeError {
    fn from(e: InferError) -> Self {
        FactorizeError::Infer(Box::new(e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Trivial,
    ParentDivorcing,
    Temporal,
    Multiplicative,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Trivial,
        StrategyKind::ParentDivorcing,
        StrategyKind::Temporal,
        StrategyKind::Multiplicative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Trivial => "trivial",
            StrategyKind::ParentDivorcing => "parent-divorcing",
            StrategyKind::Temporal => "temporal",
            StrategyKind::Multiplicative => "multiplicative",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trivial" => Ok(StrategyKind::Trivial),
            "parent-divorcing" | "divorcing" => Ok(StrategyKind::ParentDivorcing),
            "temporal" => Ok(StrategyKind::Temporal),
            "multiplicative" => Ok(StrategyKind::Multiplicative),
            other => Err(format!(
                "unknown strategy `{other}` (expected trivial, parent-divorcing, temporal or multiplicative)"
            )),
        }
    }
}

/// Factors produced for one noisy-max node.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResult {
    pub factors: Vec<Factor>,
    pub auxiliary_variables: Vec<Variable>,
    /// Entries of the tables that encode the combination itself, not
    /// counting per-cause tables supplied with the model.
    pub encoding_entry_count: usize,
    /// Entries of every produced factor.
    pub total_entry_count: usize,
}

impl ExpansionResult {
    fn new(factors: Vec<Factor>, auxiliary_variables: Vec<Variable>, encoding_entry_count: usize) -> Self {
        let total_entry_count = factors.iter().map(Factor::len).sum();
        ExpansionResult { factors, auxiliary_variables, encoding_entry_count, total_entry_count }
    }

    /// Multiplies the factors and sums out every auxiliary variable,
    /// returning the table over `[causes.., effect]`.
    ///
    /// Auxiliaries are eliminated greedily by smallest product weight so the
    /// trivial expansion never materializes its full joint with the causes.
    pub fn collapse(&self, cpd: &NoisyMaxCpd) -> Result<Factor, FactorizeError> {
        let aux: Vec<VarId> = self.auxiliary_variables.iter().map(|v| v.id).collect();
        let mut live = self.factors.clone();
        let mut pending = aux;
        while !pending.is_empty() {
            let (pick, _) = pending
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let w: f64 = union_cards(&live, v).iter().map(|&c| c as f64).product();
                    (i, w)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let v = pending.remove(pick);
            let (with, without): (Vec<Factor>, Vec<Factor>) = live.into_iter().partition(|f| f.contains(v));
            live = without;
            let product = product_of(&with)?;
            live.push(infer::marginalize(&product, v)?);
        }
        let joint = product_of(&live)?;
        let mut order = cpd.causes.clone();
        order.push(cpd.effect);
        Ok(joint.reorder(&order)?)
    }
}

fn union_cards(factors: &[Factor], v: VarId) -> Vec<usize> {
    let mut seen: Vec<VarId> = Vec::new();
    let mut cards = Vec::new();
    for f in factors.iter().filter(|f| f.contains(v)) {
        for (&s, &c) in f.scope().iter().zip(f.cards()) {
            if !seen.contains(&s) {
                seen.push(s);
                cards.push(c);
            }
        }
    }
    cards
}

fn product_of(factors: &[Factor]) -> Result<Factor, FactorizeError> {
    let mut acc = Factor::scalar(1.0);
    for f in factors {
        acc = infer::multiply(&acc, f)?;
    }
    Ok(acc)
}

/// Expands one node under `strategy`. Auxiliary variables are numbered from
/// `first_aux` upward.
pub fn expand_node(
    strategy: StrategyKind,
    cpd: &NoisyMaxCpd,
    effect: &Variable,
    first_aux: VarId,
    max_table_entries: usize,
) -> Result<ExpansionResult, FactorizeError> {
    match strategy {
        StrategyKind::Trivial => expand_trivial(cpd, effect, first_aux, max_table_entries),
        StrategyKind::ParentDivorcing => expand_parent_divorcing(cpd, effect, first_aux),
        StrategyKind::Temporal => expand_temporal(cpd, effect, first_aux),
        StrategyKind::Multiplicative => expand_multiplicative(cpd, effect, first_aux),
    }
}

/// A network lowered to plain factors.
///
/// Variables `0..original_count` are the source network's; the rest are
/// auxiliaries added by expansion. Each factor remembers the original node
/// (its family) it was produced for, so relevance pruning can drop whole
/// families at once.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorNetwork {
    pub strategy: StrategyKind,
    pub variables: Vec<Variable>,
    pub original_count: usize,
    pub factors: Vec<Factor>,
    pub families: Vec<VarId>,
    pub parents: Vec<Vec<VarId>>,
}

impl FactorNetwork {
    pub fn is_auxiliary(&self, v: VarId) -> bool {
        v.0 >= self.original_count
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRow {
    pub child: String,
    pub strategy: StrategyKind,
    pub encoding_entries: usize,
    pub total_entries: usize,
    pub auxiliary_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub nodes: Vec<SizeRow>,
    pub encoding_entries: usize,
    pub total_entries: usize,
}

impl SizeReport {
    fn push(&mut self, row: SizeRow) {
        self.encoding_entries += row.encoding_entries;
        self.total_entries += row.total_entries;
        self.nodes.push(row);
    }
}

/// Lowers every noisy-max node of `net` with `strategy`; table CPDs pass
/// through unchanged.
pub fn expand(
    net: &Network,
    strategy: StrategyKind,
    max_table_entries: usize,
) -> Result<(FactorNetwork, SizeReport), FactorizeError> {
    let mut variables = net.variables().to_vec();
    let mut factors = Vec::new();
    let mut families = Vec::new();
    let mut report = SizeReport::default();
    for v in net.variables() {
        match net.cpd(v.id) {
            Cpd::Table(f) => {
                factors.push(f.clone());
                families.push(v.id);
            }
            Cpd::NoisyMax(cpd) => {
                let first_aux = VarId(variables.len());
                let result = expand_node(strategy, cpd, v, first_aux, max_table_entries)?;
                report.push(SizeRow {
                    child: v.name.clone(),
                    strategy,
                    encoding_entries: result.encoding_entry_count,
                    total_entries: result.total_entry_count,
                    auxiliary_count: result.auxiliary_variables.len(),
                });
                variables.extend(result.auxiliary_variables);
                families.extend(std::iter::repeat_n(v.id, result.factors.len()));
                factors.extend(result.factors);
            }
        }
    }
    let parents = net.variables().iter().map(|v| net.parents(v.id).to_vec()).collect();
    Ok((
        FactorNetwork { strategy, variables, original_count: net.len(), factors, families, parents },
        report,
    ))
}

/// Table with scope `[cause, target]` (or `[target]` for the leak) holding
/// the contribution's rows.
fn contribution_factor(c: &Contribution<'_>, target: VarId, m: usize) -> Factor {
    let (scope, cards) = match c.cause {
        Some(cause) => (vec![cause, target], vec![c.card(), m]),
        None => (vec![target], vec![m]),
    };
    let values = (0..c.card()).flat_map(|s| c.row(s).iter().copied()).collect();
    Factor::new(scope, cards, values).expect("link rows are validated to match their domains")
}

/// Hands out auxiliary variable ids and names.
struct AuxAllocator<'a> {
    effect: &'a Variable,
    next: usize,
    created: Vec<Variable>,
}

impl<'a> AuxAllocator<'a> {
    fn new(effect: &'a Variable, first: VarId) -> Self {
        AuxAllocator { effect, next: first.0, created: Vec::new() }
    }

    fn effect_valued(&mut self, tag: String) -> VarId {
        let states = self.effect.states.clone();
        self.push(tag, states)
    }

    fn push(&mut self, tag: String, states: Vec<String>) -> VarId {
        let id = VarId(self.next);
        self.next += 1;
        self.created.push(Variable::new(id, format!("{}.{tag}", self.effect.name), states));
        id
    }

    /// Contribution variables `E_1..E_n`, one per contribution.
    fn contributions(&mut self, count: usize) -> Vec<VarId> {
        (1..=count).map(|i| self.effect_valued(format!("e{i}"))).collect()
    }

    fn finish(self) -> Vec<Variable> {
        self.created
    }
}

/// Every strategy turns a single-contribution node into its link table.
fn single_contribution(cpd: &NoisyMaxCpd) -> Option<ExpansionResult> {
    let contribs = cpd.contributions();
    match contribs.as_slice() {
        [only] => Some(ExpansionResult::new(
            vec![contribution_factor(only, cpd.effect, cpd.effect_card())],
            Vec::new(),
            0,
        )),
        _ => None,
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::model::parse_network;

    #[test]
    fn strategy_names_round_trip() {
        for s in StrategyKind::ALL {
            assert_eq!(s.as_str().parse::<StrategyKind>().unwrap(), s);
        }
        assert!("quickscore".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn table_sizes_n4_m3() {
        let cpd = uniform_causes(4, &[0.5, 0.3, 0.2]);
        let e = effect(4, 3);
        let sizes: Vec<usize> = StrategyKind::ALL
            .iter()
            .map(|&s| expand_node(s, &cpd, &e, VarId(5), DEFAULT_MAX_TABLE_ENTRIES).unwrap().encoding_entry_count)
            .collect();
        assert_eq!(sizes, vec![243, 81, 81, 12]);
    }

    #[test]
    fn single_cause_expands_to_link() {
        let cpd = uniform_causes(1, &[0.1, 0.6, 0.3]);
        let e = effect(1, 3);
        for s in StrategyKind::ALL {
            let r = expand_node(s, &cpd, &e, VarId(2), DEFAULT_MAX_TABLE_ENTRIES).unwrap();
            assert_eq!(r.factors.len(), 1, "{s}");
            assert!(r.auxiliary_variables.is_empty());
            assert_eq!(r.factors[0].values(), &[1.0, 0.0, 0.0, 0.1, 0.6, 0.3]);
        }
    }

    #[test]
    fn every_expansion_collapses_to_oracle() {
        let cpd = uniform_causes(3, &[0.2, 0.5, 0.3]).with_leak(vec![0.9, 0.08, 0.02]);
        let e = effect(3, 3);
        let expected = oracle_cpd(&cpd).unwrap();
        for s in StrategyKind::ALL {
            let r = expand_node(s, &cpd, &e, VarId(4), DEFAULT_MAX_TABLE_ENTRIES).unwrap();
            assert!(r.encoding_entry_count <= r.total_entry_count);
            for aux in &r.auxiliary_variables {
                assert!(r.factors.iter().any(|f| f.contains(aux.id)), "{s}: {} unused", aux.name);
            }
            let got = r.collapse(&cpd).unwrap();
            assert!(got.max_abs_diff(&expected).unwrap() < 1e-12, "{s}");
        }
    }

    #[test]
    fn plain_network_passes_through() {
        let text = r#"{"variables":[{"name":"A","states":["F","T"]},{"name":"B","states":["F","T"]}],
          "nodes":[{"child":"A","parents":[],"cpd":{"type":"table","values":[0.3,0.7]}},
                   {"child":"B","parents":["A"],"cpd":{"type":"table","values":[0.9,0.1,0.2,0.8]}}]}"#;
        let net = parse_network(text).unwrap();
        let (fnet, report) = expand(&net, StrategyKind::Multiplicative, DEFAULT_MAX_TABLE_ENTRIES).unwrap();
        assert_eq!(report, SizeReport::default());
        assert_eq!(fnet.variables, net.variables());
        assert_eq!(fnet.factors.len(), 2);
        assert_eq!(fnet.families, vec![VarId(0), VarId(1)]);
    }

    #[test]
    fn report_for_one_node() {
        let cpd = uniform_causes(4, &[0.5, 0.3, 0.2]);
        let mut vars: Vec<Variable> = (0..4)
            .map(|i| Variable::new(VarId(i), format!("C{i}"), vec!["F".into(), "T".into()]))
            .collect();
        vars.push(effect(4, 3));
        let mut cpds: Vec<Cpd> = (0..4)
            .map(|i| Cpd::Table(Factor::new(vec![VarId(i)], vec![2], vec![0.5, 0.5]).unwrap()))
            .collect();
        cpds.push(Cpd::NoisyMax(cpd));
        let net = Network::new(vars, cpds).unwrap();
        let (_, trivial) = expand(&net, StrategyKind::Trivial, DEFAULT_MAX_TABLE_ENTRIES).unwrap();
        assert_eq!(trivial.encoding_entries, 243);
        let (fnet, mult) = expand(&net, StrategyKind::Multiplicative, DEFAULT_MAX_TABLE_ENTRIES).unwrap();
        assert_eq!(mult.encoding_entries, 12);
        assert_eq!(mult.nodes[0].auxiliary_count, 2);
        // 2 intermediates x 4 causes x 4 entries, plus the selector
        assert_eq!(mult.total_entries, 2 * 4 * 4 + 12);
        assert_eq!(fnet.variables.len(), 7);
        assert!(fnet.is_auxiliary(VarId(5)) && !fnet.is_auxiliary(VarId(4)));
    }
}
