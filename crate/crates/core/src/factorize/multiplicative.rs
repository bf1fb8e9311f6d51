//! Multiplicative factorization.
//!
//! For an effect with ordered values `a_1 < .. < a_m`, intermediate `K_i`
//! (`i = 1..m-1`) stands for the hypercube where every contribution is at
//! most `a_i`. In state `V` the product of its pairwise factors over the
//! causes is `P(max <= a_i | causes)`; in state `I` every pairwise factor is
//! one. The selector then takes telescoping differences:
//!
//! ```text
//! P(E = a_j) = P(max <= a_j) - P(max <= a_(j-1))      (j < m)
//! P(E = a_m) = 1 - P(max <= a_(m-1))
//! ```
//!
//! Nothing here ever forms a table over all causes at once.

use std::fmt;

use crate::model::{Contribution, Factor, LinkTable, NoisyMaxCpd, VarId, Variable};

use super::{single_contribution, AuxAllocator, ExpansionResult, FactorizeError};

/// The two states of an intermediate variable. `V` is index 0, `I` index 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    V,
    I,
}

impl Mark {
    pub fn index(self) -> usize {
        match self {
            Mark::V => 0,
            Mark::I => 1,
        }
    }

    fn labels() -> Vec<String> {
        vec!["V".into(), "I".into()]
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mark::V => "V",
            Mark::I => "I",
        })
    }
}

/// Pairwise factor entry: one in state `I`, otherwise the link mass the
/// cause (in `cause_state`) puts on the first `prefix_len` effect values.
pub fn cumulative_density(
    link: &LinkTable,
    prefix_len: usize,
    state: Mark,
    cause_state: usize,
) -> Result<f64, FactorizeError> {
    let m = link.rows.first().map_or(0, Vec::len);
    if prefix_len == 0 || prefix_len >= m {
        return Err(FactorizeError::PrefixOutOfRange { prefix_len, max: m.saturating_sub(1) });
    }
    let row = link.rows.get(cause_state).ok_or_else(|| {
        crate::model::ModelError::Assignment(format!(
            "cause state {cause_state} outside a link with {} rows",
            link.rows.len()
        ))
    })?;
    Ok(cumulative(row, prefix_len, state))
}

fn cumulative(row: &[f64], prefix_len: usize, state: Mark) -> f64 {
    match state {
        Mark::I => 1.0,
        Mark::V => row[..prefix_len].iter().sum(),
    }
}

/// The `{-1, 0, 1}` table over `[K_1, .., K_(m-1), E]`.
pub fn effect_selector(intermediates: &[VarId], effect: VarId, m: usize) -> Factor {
    assert_eq!(intermediates.len() + 1, m, "one intermediate per effect value but the top");
    let mut scope = intermediates.to_vec();
    scope.push(effect);
    let mut cards = vec![2; intermediates.len()];
    cards.push(m);
    Factor::from_fn(scope, cards, |asg| {
        let (&e, marks) = asg.split_last().unwrap();
        let mut valid = marks.iter().enumerate().filter(|(_, &s)| s == Mark::V.index());
        match (valid.next(), valid.next()) {
            (None, _) => f64::from(e == m - 1),
            // only K_j is V (0-based j): +1 at a_j, -1 at a_(j+1)
            (Some((j, _)), None) if e == j => 1.0,
            (Some((j, _)), None) if e == j + 1 => -1.0,
            _ => 0.0,
        }
    })
    .expect("2^(m-1) * m table")
}

/// Pairwise factor over `[K, cause]` (or `[K]` for the leak).
fn pairwise_factor(c: &Contribution<'_>, intermediate: VarId, prefix_len: usize) -> Factor {
    let card = c.card();
    let (scope, cards) = match c.cause {
        Some(cause) => (vec![intermediate, cause], vec![2, card]),
        None => (vec![intermediate], vec![2]),
    };
    Factor::from_fn(scope, cards, |asg| {
        let mark = if asg[0] == Mark::V.index() { Mark::V } else { Mark::I };
        let state = asg.get(1).copied().unwrap_or(0);
        cumulative(c.row(state), prefix_len, mark)
    })
    .expect("pairwise table")
}

pub fn expand_multiplicative(
    cpd: &NoisyMaxCpd,
    effect: &Variable,
    first_aux: VarId,
) -> Result<ExpansionResult, FactorizeError> {
    if let Some(r) = single_contribution(cpd) {
        return Ok(r);
    }
    let m = cpd.effect_card();
    let contribs = cpd.contributions();
    let mut aux = AuxAllocator::new(effect, first_aux);
    let intermediates: Vec<VarId> =
        (1..m).map(|i| aux.push(format!("cum{i}"), Mark::labels())).collect();

    let mut factors = Vec::with_capacity(intermediates.len() * contribs.len() + 1);
    for (i, &k) in intermediates.iter().enumerate() {
        for c in &contribs {
            factors.push(pairwise_factor(c, k, i + 1));
        }
    }
    let selector = effect_selector(&intermediates, cpd.effect, m);
    let encoding = selector.len();
    factors.push(selector);
    Ok(ExpansionResult::new(factors, aux.finish(), encoding))
}
