//! JSON network documents.
//!
//! ```text
//! { "variables": [ {"name": "C1", "states": ["F", "T"]}, ... ],
//!   "nodes": [ {"child": "C1", "parents": [], "cpd": {"type": "table", "values": [...]}},
//!              {"child": "E", "cpd": {"type": "noisy-max", "causes": [...],
//!                                     "links": [[[...]]], "leak": [...]}} ] }
//! ```
//!
//! Table values are row-major over `parents ++ [child]`, last variable
//! fastest. `links[i][c][a]` is the probability that cause `i` in state `c`
//! pushes the effect to its `a`-th state.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Cpd, Factor, LinkTable, ModelError, Network, NoisyMaxCpd, VarId, Variable};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    variables: Vec<VariableDoc>,
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    states: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    child: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parents: Option<Vec<String>>,
    cpd: CpdDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum CpdDoc {
    #[serde(rename = "table")]
    Table { values: Vec<f64> },
    #[serde(rename = "noisy-max")]
    NoisyMax {
        causes: Vec<String>,
        links: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leak: Option<Vec<f64>>,
    },
}

/// Parses and validates a network document.
pub fn parse_network(text: &str) -> Result<Network, ModelError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        ModelError::Syntax {
            line: e.line(),
            column: e.column(),
            message: full.strip_suffix(&suffix).unwrap_or(&full).to_string(),
        }
    })?;

    let variables: Vec<Variable> = doc
        .variables
        .into_iter()
        .enumerate()
        .map(|(i, v)| Variable::new(VarId(i), v.name, v.states))
        .collect();
    let mut ids = HashMap::new();
    for v in &variables {
        if ids.insert(v.name.clone(), v.id).is_some() {
            return Err(ModelError::Structure(format!("variable `{}` declared twice", v.name)));
        }
    }
    let lookup = |name: &str| ids.get(name).copied().ok_or_else(|| ModelError::UnknownVariable(name.into()));

    let mut cpds: Vec<Option<Cpd>> = vec![None; variables.len()];
    for node in doc.nodes {
        let child = lookup(&node.child)?;
        let cpd = match node.cpd {
            CpdDoc::Table { values } => {
                let parents = node
                    .parents
                    .unwrap_or_default()
                    .iter()
                    .map(|p| lookup(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut scope = parents;
                scope.push(child);
                let cards = scope
                    .iter()
                    .map(|v| variables.get(v.0).map_or(0, Variable::card))
                    .collect();
                Cpd::Table(Factor::new(scope, cards, values).map_err(|e| match e {
                    ModelError::Structure(detail) => {
                        ModelError::MalformedDistribution { node: node.child.clone(), detail }
                    }
                    other => other,
                })?)
            }
            CpdDoc::NoisyMax { causes, links, leak } => {
                let causes = causes.iter().map(|c| lookup(c)).collect::<Result<Vec<_>, _>>()?;
                if let Some(parents) = &node.parents {
                    let listed = parents.iter().map(|p| lookup(p)).collect::<Result<Vec<_>, _>>()?;
                    if listed != causes {
                        return Err(ModelError::Structure(format!(
                            "node `{}` lists parents that differ from its causes",
                            node.child
                        )));
                    }
                }
                if links.len() != causes.len() {
                    return Err(ModelError::Structure(format!(
                        "node `{}` has {} causes but {} link tables",
                        node.child,
                        causes.len(),
                        links.len()
                    )));
                }
                let links = causes.iter().zip(links).map(|(&c, rows)| LinkTable::new(c, rows)).collect();
                Cpd::NoisyMax(NoisyMaxCpd { effect: child, causes, links, leak })
            }
        };
        if cpds[child.0].replace(cpd).is_some() {
            return Err(ModelError::Structure(format!("node `{}` defined twice", node.child)));
        }
    }
    let cpds = cpds
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| {
                ModelError::Structure(format!("variable `{}` has no distribution", variables[i].name))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Network::new(variables, cpds)
}

/// Writes `net` as a pretty-printed document, nodes in variable order.
pub fn serialize_network(net: &Network) -> String {
    let name = |v: VarId| net.variable(v).name.clone();
    let doc = Document {
        variables: net
            .variables()
            .iter()
            .map(|v| VariableDoc { name: v.name.clone(), states: v.states.clone() })
            .collect(),
        nodes: net
            .variables()
            .iter()
            .map(|v| match net.cpd(v.id) {
                Cpd::Table(f) => NodeDoc {
                    child: v.name.clone(),
                    parents: Some(f.scope()[..f.scope().len() - 1].iter().map(|&p| name(p)).collect()),
                    cpd: CpdDoc::Table { values: f.values().to_vec() },
                },
                Cpd::NoisyMax(n) => NodeDoc {
                    child: v.name.clone(),
                    parents: None,
                    cpd: CpdDoc::NoisyMax {
                        causes: n.causes.iter().map(|&c| name(c)).collect(),
                        links: n.links.iter().map(|l| l.rows.clone()).collect(),
                        leak: n.leak.clone(),
                    },
                },
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("network documents always serialize");
    out.push('\n');
    out
}
