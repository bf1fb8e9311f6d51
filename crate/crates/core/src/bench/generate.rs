//! Synthetic networks standing in for large diagnostic models.
//!
//! All randomness comes from one [`SeededRng`] stream consumed in a fixed
//! order, so a spec and seed determine the serialized network exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cpd, Factor, LinkTable, ModelError, Network, NoisyMaxCpd, VarId, Variable};

use super::SeededRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// Two layers: binary diseases over noisy-max findings.
    Bn2o,
    /// Roots plus two layers of noisy-max (and some table) nodes.
    Multilevel,
}

impl FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bn2o" => Ok(GeneratorKind::Bn2o),
            "multilevel" => Ok(GeneratorKind::Multilevel),
            other => Err(format!("unknown generator kind `{other}` (expected bn2o or multilevel)")),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Bn2o => "bn2o",
            GeneratorKind::Multilevel => "multilevel",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub seed: u64,
    /// Root count.
    pub diseases: usize,
    /// Non-root count.
    pub findings: usize,
    pub max_parents: usize,
    pub effect_domain_size: usize,
    /// Edge probability between layers (multilevel only).
    pub link_density: f64,
}

impl GeneratorSpec {
    pub fn bn2o(seed: u64, diseases: usize, findings: usize, max_parents: usize) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Bn2o,
            seed,
            diseases,
            findings,
            max_parents,
            effect_domain_size: 2,
            link_density: 1.0,
        }
    }

    fn validate(&self) -> Result<(), GenerateError> {
        let bad = |msg: String| Err(GenerateError::Infeasible(msg));
        if self.diseases == 0 || self.findings == 0 || self.max_parents == 0 {
            return bad("diseases, findings and max_parents must all be at least 1".into());
        }
        if self.effect_domain_size < 2 {
            return bad("effect domain needs at least two states".into());
        }
        if !(self.link_density > 0.0 && self.link_density <= 1.0) {
            return bad(format!("link density {} outside (0, 1]", self.link_density));
        }
        if self.max_parents > self.diseases {
            return bad(format!(
                "max_parents {} exceeds the {} available diseases",
                self.max_parents, self.diseases
            ));
        }
        Ok(())
    }
}

fn states(m: usize) -> Vec<String> {
    if m == 2 {
        vec!["absent".into(), "present".into()]
    } else {
        (0..m).map(|i| format!("v{i}")).collect()
    }
}

/// Link rows for a cause with `cause_card` states: the lowest cause state
/// contributes nothing (all mass on the lowest effect value), the others
/// get freshly sampled rows.
fn sampled_link(rng: &mut SeededRng, cause: VarId, cause_card: usize, m: usize) -> LinkTable {
    let mut off = vec![0.0; m];
    off[0] = 1.0;
    let mut rows = vec![off];
    for _ in 1..cause_card {
        rows.push(rng.probability_vector(m));
    }
    LinkTable::new(cause, rows)
}

pub fn generate(spec: &GeneratorSpec) -> Result<Network, GenerateError> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    match spec.kind {
        GeneratorKind::Bn2o => bn2o(spec, &mut rng),
        GeneratorKind::Multilevel => multilevel(spec, &mut rng),
    }
}

fn disease_layer(count: usize, rng: &mut SeededRng) -> (Vec<Variable>, Vec<Cpd>) {
    let mut vars = Vec::with_capacity(count);
    let mut cpds = Vec::with_capacity(count);
    for i in 0..count {
        vars.push(Variable::new(VarId(i), format!("D{i}"), states(2)));
        let p = rng.uniform(0.001, 0.1);
        cpds.push(Cpd::Table(Factor::new(vec![VarId(i)], vec![2], vec![1.0 - p, p]).expect("prior")));
    }
    (vars, cpds)
}

fn bn2o(spec: &GeneratorSpec, rng: &mut SeededRng) -> Result<Network, GenerateError> {
    let m = spec.effect_domain_size;
    let (mut vars, mut cpds) = disease_layer(spec.diseases, rng);
    for j in 0..spec.findings {
        let id = VarId(spec.diseases + j);
        vars.push(Variable::new(id, format!("F{j}"), states(m)));
        let k = rng.range_inclusive(1, spec.max_parents);
        let parents = rng.choose(spec.diseases, k);
        let links = parents.into_iter().map(|d| sampled_link(rng, VarId(d), 2, m)).collect();
        cpds.push(Cpd::NoisyMax(NoisyMaxCpd::new(id, links)));
    }
    Ok(Network::new(vars, cpds)?)
}

/// Roots with sampled priors over `m` states, then two layers of non-roots
/// (`ceil(findings / 2)` then the rest). Each non-root links to every node
/// of earlier layers with probability `link_density`, keeping between one
/// and `max_parents` parents. A non-root with at most two parents becomes a
/// plain table node one time in four; the rest are noisy-max, half of them
/// with a leak.
fn multilevel(spec: &GeneratorSpec, rng: &mut SeededRng) -> Result<Network, GenerateError> {
    let m = spec.effect_domain_size;
    let mut vars = Vec::new();
    let mut cpds = Vec::new();
    for i in 0..spec.diseases {
        vars.push(Variable::new(VarId(i), format!("R{i}"), states(m)));
        cpds.push(Cpd::Table(Factor::new(vec![VarId(i)], vec![m], rng.probability_vector(m))?));
    }
    let first_layer = spec.findings.div_ceil(2);
    for j in 0..spec.findings {
        let (layer, pos) = if j < first_layer { (1, j) } else { (2, j - first_layer) };
        let available = if layer == 1 { spec.diseases } else { spec.diseases + first_layer };
        let id = VarId(vars.len());
        vars.push(Variable::new(id, format!("L{layer}_{pos}"), states(m)));

        let mut parents: Vec<usize> = (0..available).filter(|_| rng.next_f64() < spec.link_density).collect();
        if parents.is_empty() {
            parents.push(rng.below(available));
        }
        if parents.len() > spec.max_parents {
            let keep = rng.choose(parents.len(), spec.max_parents);
            parents = keep.into_iter().map(|i| parents[i]).collect();
        }

        if parents.len() <= 2 && rng.next_f64() < 0.25 {
            let mut scope: Vec<VarId> = parents.iter().map(|&p| VarId(p)).collect();
            let configs = m.pow(parents.len() as u32);
            let values: Vec<f64> = (0..configs).flat_map(|_| rng.probability_vector(m)).collect();
            scope.push(id);
            cpds.push(Cpd::Table(Factor::new(scope, vec![m; parents.len() + 1], values)?));
        } else {
            let links = parents.iter().map(|&p| sampled_link(rng, VarId(p), m, m)).collect();
            let mut cpd = NoisyMaxCpd::new(id, links);
            if rng.next_f64() < 0.5 {
                let noise = rng.probability_vector(m);
                let mut leak: Vec<f64> = noise.iter().map(|x| 0.1 * x).collect();
                leak[0] += 0.9;
                cpd = cpd.with_leak(leak);
            }
            cpds.push(Cpd::NoisyMax(cpd));
        }
    }
    Ok(Network::new(vars, cpds)?)
}

/// One noisy-max effect over exactly `causes` binary causes, bn2o-style.
pub fn generate_single_effect(causes: usize, effect_domain_size: usize, seed: u64) -> Result<Network, GenerateError> {
    let spec = GeneratorSpec {
        kind: GeneratorKind::Bn2o,
        seed,
        diseases: causes,
        findings: 1,
        max_parents: causes,
        effect_domain_size,
        link_density: 1.0,
    };
    spec.validate()?;
    let mut rng = SeededRng::new(seed);
    let (mut vars, mut cpds) = disease_layer(causes, &mut rng);
    let id = VarId(causes);
    vars.push(Variable::new(id, "F0", states(effect_domain_size)));
    let links = (0..causes).map(|d| sampled_link(&mut rng, VarId(d), 2, effect_domain_size)).collect();
    cpds.push(Cpd::NoisyMax(NoisyMaxCpd::new(id, links)));
    Ok(Network::new(vars, cpds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::serialize_network;

    #[test]
    fn same_seed_same_bytes() {
        let spec = GeneratorSpec::bn2o(1, 10, 8, 4);
        let a = serialize_network(&generate(&spec).unwrap());
        let b = serialize_network(&generate(&spec).unwrap());
        assert_eq!(a, b);
        let other = serialize_network(&generate(&GeneratorSpec { seed: 2, ..spec }).unwrap());
        assert_ne!(a, other);
    }

    #[test]
    fn parent_counts_bounded() {
        let net = generate(&GeneratorSpec::bn2o(3, 5, 3, 5)).unwrap();
        for f in 5..8 {
            let k = net.parents(VarId(f)).len();
            assert!((1..=5).contains(&k), "{k}");
        }
    }

    #[test]
    fn bn2o_is_two_layers() {
        let net = generate(&GeneratorSpec::bn2o(9, 12, 20, 6)).unwrap();
        for v in net.variables() {
            match net.cpd(v.id) {
                Cpd::Table(f) => {
                    assert!(v.id.0 < 12);
                    assert_eq!(f.scope().len(), 1);
                    let p = f.values()[1];
                    assert!((0.001..=0.1).contains(&p));
                }
                Cpd::NoisyMax(n) => {
                    assert!(v.id.0 >= 12);
                    assert!(n.causes.iter().all(|c| c.0 < 12));
                }
            }
        }
    }

    #[test]
    fn infeasible_specs() {
        assert!(matches!(generate(&GeneratorSpec::bn2o(1, 3, 2, 4)), Err(GenerateError::Infeasible(_))));
        assert!(generate(&GeneratorSpec { effect_domain_size: 1, ..GeneratorSpec::bn2o(1, 3, 2, 2) }).is_err());
        assert!(generate(&GeneratorSpec { link_density: 0.0, ..GeneratorSpec::bn2o(1, 3, 2, 2) }).is_err());
    }

    #[test]
    fn multilevel_shape() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::Multilevel,
            seed: 11,
            diseases: 4,
            findings: 6,
            max_parents: 3,
            effect_domain_size: 3,
            link_density: 0.5,
        };
        let net = generate(&spec).unwrap();
        assert_eq!(net.len(), 10);
        assert!(net.noisy_max_nodes().count() >= 1);
        for v in &net.variables()[4..] {
            let k = net.parents(v.id).len();
            assert!((1..=3).contains(&k));
            assert_eq!(v.card(), 3);
        }
        assert_eq!(net, generate(&spec).unwrap());
    }

    #[test]
    fn single_effect_has_every_cause() {
        let net = generate_single_effect(7, 2, 5).unwrap();
        assert_eq!(net.parents(VarId(7)).len(), 7);
    }
}
