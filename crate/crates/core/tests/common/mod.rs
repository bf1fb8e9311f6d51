#![allow(dead_code)]

use std::collections::BTreeMap;

use noisymax::bench::SeededRng;
use noisymax::infer::JointDistribution;
use noisymax::{Cpd, Factor, LinkTable, Network, NoisyMaxCpd, Query, VarId, Variable};

pub fn states(card: usize) -> Vec<String> {
    (0..card).map(|i| format!("s{i}")).collect()
}

/// Rows for one cause. With `degenerate_off` the lowest cause state puts all
/// its mass on the lowest effect value, as in a proper noisy-max.
pub fn random_link(rng: &mut SeededRng, cause: VarId, cause_card: usize, m: usize, degenerate_off: bool) -> LinkTable {
    let rows = (0..cause_card)
        .map(|s| {
            if s == 0 && degenerate_off {
                let mut r = vec![0.0; m];
                r[0] = 1.0;
                r
            } else {
                rng.probability_vector(m)
            }
        })
        .collect();
    LinkTable::new(cause, rows)
}

/// Noisy-max over causes `0..n` (binary when `max_cause_card` is 2) with
/// effect id `n`.
pub fn random_noisy_max(
    rng: &mut SeededRng,
    n: usize,
    m: usize,
    max_cause_card: usize,
    leak: bool,
) -> (NoisyMaxCpd, Vec<Variable>) {
    let mut vars = Vec::new();
    let mut links = Vec::new();
    let degenerate = rng.next_f64() < 0.5;
    for i in 0..n {
        let card = rng.range_inclusive(2, max_cause_card);
        vars.push(Variable::new(VarId(i), format!("C{i}"), states(card)));
        links.push(random_link(rng, VarId(i), card, m, degenerate));
    }
    vars.push(Variable::new(VarId(n), "E", states(m)));
    let mut cpd = NoisyMaxCpd::new(VarId(n), links);
    if leak {
        cpd = cpd.with_leak(rng.probability_vector(m));
    }
    (cpd, vars)
}

pub fn random_noisy_or(rng: &mut SeededRng, n: usize, leak: bool) -> (NoisyMaxCpd, Vec<Variable>) {
    random_noisy_max(rng, n, 2, 2, leak)
}

/// A random DAG over `2..=max_vars` variables mixing table and noisy-max
/// CPDs. Domains are 2 or 3 states with the joint kept under 20k entries.
pub fn random_network(rng: &mut SeededRng, max_vars: usize) -> Network {
    let n = rng.range_inclusive(2, max_vars);
    let mut joint = 1usize;
    let mut vars = Vec::with_capacity(n);
    for i in 0..n {
        let mut card = if rng.next_f64() < 0.3 { 3 } else { 2 };
        if joint * card > 20_000 {
            card = 2;
        }
        joint *= card;
        vars.push(Variable::new(VarId(i), format!("X{i}"), states(card)));
    }
    let mut cpds = Vec::with_capacity(n);
    for i in 0..n {
        let max_parents = i.min(4);
        let k = if max_parents == 0 { 0 } else { rng.range_inclusive(0, max_parents) };
        let parents: Vec<VarId> = rng.choose(i, k).into_iter().map(VarId).collect();
        let m = vars[i].card();
        if !parents.is_empty() && rng.next_f64() < 0.65 {
            let degenerate = rng.next_f64() < 0.5;
            let links = parents.iter().map(|&p| random_link(rng, p, vars[p.0].card(), m, degenerate)).collect();
            let mut cpd = NoisyMaxCpd::new(VarId(i), links);
            if rng.next_f64() < 0.3 {
                cpd = cpd.with_leak(rng.probability_vector(m));
            }
            cpds.push(Cpd::NoisyMax(cpd));
        } else {
            let mut scope = parents.clone();
            scope.push(VarId(i));
            let cards: Vec<usize> = scope.iter().map(|v| vars[v.0].card()).collect();
            let configs: usize = cards[..cards.len() - 1].iter().product();
            let values = (0..configs).flat_map(|_| rng.probability_vector(m)).collect();
            cpds.push(Cpd::Table(Factor::new(scope, cards, values).unwrap()));
        }
    }
    Network::new(vars, cpds).unwrap()
}

pub fn all_marginals(net: &Network) -> Vec<Query> {
    (0..net.len()).map(|i| Query::marginal(VarId(i))).collect()
}

/// `count` posterior queries whose evidence is a sampled world restricted to
/// a random subset of the other variables, so the evidence is never
/// impossible.
pub fn evidence_queries(net: &Network, joint: &JointDistribution, rng: &mut SeededRng, count: usize) -> Vec<Query> {
    let n = net.len();
    (0..count)
        .map(|_| {
            let world = joint.sample(rng.next_f64());
            let target = rng.below(n);
            let others: Vec<usize> = (0..n).filter(|&v| v != target).collect();
            let k = if others.is_empty() { 0 } else { rng.range_inclusive(1, others.len().min(3)) };
            let picked = rng.choose(others.len(), k);
            let evidence: BTreeMap<VarId, usize> =
                picked.into_iter().map(|i| (VarId(others[i]), world[others[i]])).collect();
            Query { targets: vec![VarId(target)], evidence }
        })
        .collect()
}
