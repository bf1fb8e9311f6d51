//! Variables, factors, noisy-max declarations and the network container.
//!
//! Everything here is validated on construction; a [`Network`] that exists
//! is acyclic, references only known variables and carries proper
//! conditional distributions.

mod factor;
mod format;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use factor::{advance, factor_index, strides, table_len, Factor};
pub use format::{parse_network, serialize_network};

/// Tolerance for link rows and leak vectors summing to one.
pub const LINK_SUM_TOLERANCE: f64 = 1e-12;
/// Tolerance for child-conditional slices of table CPDs.
pub const TABLE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("cycle detected through variable `{variable}`")]
    Cycle { variable: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("malformed distribution at `{node}`: {detail}")]
    MalformedDistribution { node: String, detail: String },
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("invalid assignment: {0}")]
    Assignment(String),
}

impl ModelError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::Syntax { .. } => "syntax",
            ModelError::Cycle { .. } => "cycle",
            ModelError::UnknownVariable(_) => "unknown-variable",
            ModelError::MalformedDistribution { .. } => "malformed-distribution",
            ModelError::Structure(_) => "structure",
            ModelError::Assignment(_) => "assignment",
        }
    }
}

/// Dense handle of a variable; equal to its position in the owning network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A discrete variable. For noisy-max effects the state order is the order
/// used by the max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new(id: VarId, name: impl Into<String>, states: Vec<String>) -> Self {
        Variable { id, name: name.into(), states }
    }

    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Per-cause contribution table: `rows[c][a]` is the probability that the
/// cause, in state `c`, pushes the effect to value `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkTable {
    pub cause: VarId,
    pub rows: Vec<Vec<f64>>,
}

impl LinkTable {
    pub fn new(cause: VarId, rows: Vec<Vec<f64>>) -> Self {
        LinkTable { cause, rows }
    }
}

/// An unexpanded noisy-max node.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyMaxCpd {
    pub effect: VarId,
    pub causes: Vec<VarId>,
    pub links: Vec<LinkTable>,
    pub leak: Option<Vec<f64>>,
}

impl NoisyMaxCpd {
    pub fn new(effect: VarId, links: Vec<LinkTable>) -> Self {
        let causes = links.iter().map(|l| l.cause).collect();
        NoisyMaxCpd { effect, causes, links, leak: None }
    }

    pub fn with_leak(mut self, leak: Vec<f64>) -> Self {
        self.leak = Some(leak);
        self
    }

    /// Size of the effect domain, read off the link rows.
    pub fn effect_card(&self) -> usize {
        self.links.first().and_then(|l| l.rows.first()).map_or(0, Vec::len)
    }

    /// Every independent contribution, with the leak (if any) last as a
    /// cause-less contribution with a single row.
    pub fn contributions(&self) -> Vec<Contribution<'_>> {
        let mut out: Vec<Contribution<'_>> = self
            .links
            .iter()
            .map(|l| Contribution { cause: Some(l.cause), rows: RowsRef::Table(&l.rows) })
            .collect();
        if let Some(leak) = &self.leak {
            out.push(Contribution { cause: None, rows: RowsRef::Leak(leak) });
        }
        out
    }

    fn validate(&self, vars: &[Variable]) -> Result<(), ModelError> {
        let effect = &vars[self.effect.0];
        let node = effect.name.as_str();
        let structure = |msg: String| ModelError::Structure(format!("node `{node}`: {msg}"));
        if self.causes.is_empty() {
            return Err(structure("noisy-max node needs at least one cause".into()));
        }
        if self.links.len() != self.causes.len() {
            return Err(structure(format!(
                "{} causes but {} link tables",
                self.causes.len(),
                self.links.len()
            )));
        }
        for (i, &c) in self.causes.iter().enumerate() {
            if c == self.effect {
                return Err(structure("effect listed among its own causes".into()));
            }
            if self.causes[..i].contains(&c) {
                return Err(structure(format!("cause `{}` repeated", vars[c.0].name)));
            }
            let link = &self.links[i];
            if link.cause != c {
                return Err(structure(format!("link table {i} is not for cause `{}`", vars[c.0].name)));
            }
            let cause = &vars[c.0];
            if link.rows.len() != cause.card() {
                return Err(ModelError::MalformedDistribution {
                    node: node.into(),
                    detail: format!(
                        "link for `{}` has {} rows, cause has {} states",
                        cause.name,
                        link.rows.len(),
                        cause.card()
                    ),
                });
            }
            for (s, row) in link.rows.iter().enumerate() {
                check_distribution(row, effect.card(), LINK_SUM_TOLERANCE).map_err(|detail| {
                    ModelError::MalformedDistribution {
                        node: node.into(),
                        detail: format!("link row for `{}`={}: {detail}", cause.name, cause.states[s]),
                    }
                })?;
            }
        }
        if let Some(leak) = &self.leak {
            check_distribution(leak, effect.card(), LINK_SUM_TOLERANCE).map_err(|detail| {
                ModelError::MalformedDistribution { node: node.into(), detail: format!("leak: {detail}") }
            })?;
        }
        Ok(())
    }
}

/// One independent contribution to a noisy-max effect.
#[derive(Clone, Copy, Debug)]
pub struct Contribution<'a> {
    /// `None` for the leak.
    pub cause: Option<VarId>,
    rows: RowsRef<'a>,
}

#[derive(Clone, Copy, Debug)]
enum RowsRef<'a> {
    Table(&'a [Vec<f64>]),
    Leak(&'a [f64]),
}

impl<'a> Contribution<'a> {
    /// Number of parent states (one for the leak).
    pub fn card(&self) -> usize {
        match self.rows {
            RowsRef::Table(rows) => rows.len(),
            RowsRef::Leak(_) => 1,
        }
    }

    pub fn row(&self, state: usize) -> &'a [f64] {
        match self.rows {
            RowsRef::Table(rows) => &rows[state],
            RowsRef::Leak(leak) => {
                debug_assert_eq!(state, 0);
                leak
            }
        }
    }
}

fn check_distribution(row: &[f64], len: usize, tol: f64) -> Result<(), String> {
    if row.len() != len {
        return Err(format!("expected {len} entries, found {}", row.len()));
    }
    if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("entry {v} is not a probability"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(format!("entries sum to {sum}"));
    }
    Ok(())
}

/// How a variable is distributed given its parents.
#[derive(Clone, Debug, PartialEq)]
pub enum Cpd {
    /// Full table with scope `[parents.., child]`.
    Table(Factor),
    NoisyMax(NoisyMaxCpd),
}

impl Cpd {
    pub fn parents(&self) -> &[VarId] {
        match self {
            Cpd::Table(f) => &f.scope()[..f.scope().len() - 1],
            Cpd::NoisyMax(n) => &n.causes,
        }
    }
}

/// A validated Bayesian network. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    cpds: Vec<Cpd>,
}

impl Network {
    /// `cpds[i]` is the distribution of `variables[i]`; ids must equal positions.
    pub fn new(variables: Vec<Variable>, cpds: Vec<Cpd>) -> Result<Self, ModelError> {
        let mut names = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if v.id != VarId(i) {
                return Err(ModelError::Structure(format!(
                    "variable `{}` has id {} at position {i}",
                    v.name, v.id.0
                )));
            }
            if names.insert(v.name.as_str(), i).is_some() {
                return Err(ModelError::Structure(format!("variable `{}` declared twice", v.name)));
            }
            if v.card() < 2 {
                return Err(ModelError::Structure(format!("variable `{}` needs at least two states", v.name)));
            }
            for (k, s) in v.states.iter().enumerate() {
                if v.states[..k].contains(s) {
                    return Err(ModelError::Structure(format!(
                        "variable `{}` repeats state `{s}`",
                        v.name
                    )));
                }
            }
        }
        if cpds.len() != variables.len() {
            return Err(ModelError::Structure(format!(
                "{} variables but {} distributions",
                variables.len(),
                cpds.len()
            )));
        }
        for (i, cpd) in cpds.iter().enumerate() {
            let child = &variables[i];
            match cpd {
                Cpd::Table(f) => validate_table(f, child, &variables)?,
                Cpd::NoisyMax(n) => {
                    if n.effect != child.id {
                        return Err(ModelError::Structure(format!(
                            "noisy-max distribution for `{}` declares a different effect",
                            child.name
                        )));
                    }
                    for &c in &n.causes {
                        if c.0 >= variables.len() {
                            return Err(ModelError::UnknownVariable(c.to_string()));
                        }
                    }
                    n.validate(&variables)?;
                }
            }
        }
        let net = Network { variables, cpds };
        net.topological_order()?;
        Ok(net)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn card(&self, id: VarId) -> usize {
        self.variables[id.0].card()
    }

    pub fn cpd(&self, id: VarId) -> &Cpd {
        &self.cpds[id.0]
    }

    pub fn cpds(&self) -> &[Cpd] {
        &self.cpds
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        self.cpds[id.0].parents()
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.id)
    }

    pub fn noisy_max_nodes(&self) -> impl Iterator<Item = &NoisyMaxCpd> {
        self.cpds.iter().filter_map(|c| match c {
            Cpd::NoisyMax(n) => Some(n),
            Cpd::Table(_) => None,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.cpds.iter().map(|c| c.parents().len()).sum()
    }

    /// Parents before children; ties resolved by id.
    pub fn topological_order(&self) -> Result<Vec<VarId>, ModelError> {
        let n = self.variables.len();
        let mut indegree = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (i, cpd) in self.cpds.iter().enumerate() {
            for p in cpd.parents() {
                indegree[i] += 1;
                children[p.0].push(i);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(VarId(i));
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
            return Err(ModelError::Cycle { variable: self.variables[stuck].name.clone() });
        }
        Ok(order)
    }
}

fn validate_table(f: &Factor, child: &Variable, vars: &[Variable]) -> Result<(), ModelError> {
    let scope = f.scope();
    if scope.last() != Some(&child.id) {
        return Err(ModelError::Structure(format!(
            "table for `{}` must list the child last in its scope",
            child.name
        )));
    }
    for (k, v) in scope.iter().enumerate() {
        let var = vars.get(v.0).ok_or_else(|| ModelError::UnknownVariable(v.to_string()))?;
        if f.cards()[k] != var.card() {
            return Err(ModelError::Structure(format!(
                "table for `{}` sizes `{}` as {} states, declared {}",
                child.name,
                var.name,
                f.cards()[k],
                var.card()
            )));
        }
    }
    for (s, slice) in f.values().chunks(child.card()).enumerate() {
        check_distribution(slice, child.card(), TABLE_SUM_TOLERANCE).map_err(|detail| {
            ModelError::MalformedDistribution {
                node: child.name.clone(),
                detail: format!("parent configuration {s}: {detail}"),
            }
        })?;
    }
    Ok(())
}
