//! Full-joint enumeration. Used as the reference answer for every other
//! inference path; it touches neither the expansions nor elimination.

use crate::factorize::oracle_cpd;
use crate::model::{advance, strides, Cpd, Factor, Network};

use super::{InferError, Query};

/// Largest joint state space the enumerator accepts.
pub const JOINT_STATE_LIMIT: usize = 1 << 22;

/// The full joint distribution of a network, one entry per assignment of
/// all variables (row-major over variable ids).
#[derive(Clone, Debug)]
pub struct JointDistribution {
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(net: &Network) -> Result<Self, InferError> {
        let cards: Vec<usize> = net.variables().iter().map(|v| v.card()).collect();
        let states = cards.iter().fold(1u128, |acc, &c| acc.saturating_mul(c as u128));
        if states > JOINT_STATE_LIMIT as u128 {
            return Err(InferError::StateSpaceTooLarge { states, limit: JOINT_STATE_LIMIT });
        }
        let tables: Vec<Factor> = net
            .cpds()
            .iter()
            .map(|cpd| match cpd {
                Cpd::Table(f) => Ok(f.clone()),
                Cpd::NoisyMax(n) => oracle_cpd(n),
            })
            .collect::<Result<_, _>>()?;
        let lookups: Vec<(Vec<usize>, Vec<usize>)> = tables
            .iter()
            .map(|t| (t.scope().iter().map(|v| v.0).collect(), strides(t.cards())))
            .collect();

        let mut probs = Vec::with_capacity(states as usize);
        let mut asg = vec![0usize; cards.len()];
        for _ in 0..states {
            let mut p = 1.0;
            for (t, (vars, st)) in tables.iter().zip(&lookups) {
                let off: usize = vars.iter().zip(st).map(|(&v, &s)| asg[v] * s).sum();
                p *= t.values()[off];
            }
            probs.push(p);
            advance(&mut asg, &cards);
        }
        Ok(JointDistribution { cards, probs })
    }

    pub fn posterior(&self, q: &Query) -> Result<Factor, InferError> {
        q.validate(self.cards.len(), |v| self.cards[v.0])?;
        let target_cards: Vec<usize> = q.targets.iter().map(|t| self.cards[t.0]).collect();
        let target_strides = strides(&target_cards);
        let mut table = vec![0.0; target_cards.iter().product()];
        let mut asg = vec![0usize; self.cards.len()];
        for &p in &self.probs {
            if q.evidence.iter().all(|(v, &s)| asg[v.0] == s) {
                let off: usize = q.targets.iter().zip(&target_strides).map(|(t, s)| asg[t.0] * s).sum();
                table[off] += p;
            }
            advance(&mut asg, &self.cards);
        }
        let total: f64 = table.iter().sum();
        if total == 0.0 {
            return Err(InferError::ZeroNormalization);
        }
        if !total.is_normal() {
            return Err(InferError::Underflow { total });
        }
        for x in &mut table {
            *x /= total;
        }
        Ok(Factor::new(q.targets.clone(), target_cards, table)?)
    }

    /// Draws one full assignment by inverse-CDF on `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Vec<usize> {
        let mut acc = 0.0;
        let mut pick = self.probs.len() - 1;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        let mut asg = vec![0usize; self.cards.len()];
        for k in (0..asg.len()).rev() {
            asg[k] = pick % self.cards[k];
            pick /= self.cards[k];
        }
        asg
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Exact posterior by enumerating the full joint.
pub fn brute_force_joint(net: &Network, q: &Query) -> Result<Factor, InferError> {
    JointDistribution::new(net)?.posterior(q)
}
