use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Factor, VarId};

/// Greedy elimination-order rules.
///
/// Both look at the product of every live factor that mentions a candidate.
/// `MinSize` scores it by how many variables that product spans; `MinWeight`
/// by its entry count (product of domain sizes). Ties go to the lower id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    MinSize,
    MinWeight,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 2] = [HeuristicKind::MinSize, HeuristicKind::MinWeight];

    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::MinSize => "min-size",
            HeuristicKind::MinWeight => "min-weight",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min-size" => Ok(HeuristicKind::MinSize),
            "min-weight" => Ok(HeuristicKind::MinWeight),
            other => Err(format!("unknown heuristic `{other}` (expected min-size or min-weight)")),
        }
    }
}

/// Scope variables and entry count of the product of the factors that
/// mention `v`.
pub fn elimination_cost(factors: &[Factor], v: VarId) -> (usize, u128) {
    let mut seen: Vec<VarId> = Vec::new();
    let mut weight: u128 = 1;
    for f in factors.iter().filter(|f| f.contains(v)) {
        for (&s, &c) in f.scope().iter().zip(f.cards()) {
            if !seen.contains(&s) {
                seen.push(s);
                weight = weight.saturating_mul(c as u128);
            }
        }
    }
    (seen.len(), weight)
}

/// Picks the next variable to eliminate. Panics if `eliminable` is empty.
pub fn choose_next(factors: &[Factor], eliminable: &BTreeSet<VarId>, h: HeuristicKind) -> VarId {
    assert!(!eliminable.is_empty(), "nothing left to eliminate");
    if eliminable.len() == 1 {
        return *eliminable.iter().next().unwrap();
    }
    // BTreeSet iterates in id order and min_by_key keeps the first minimum
    *eliminable
        .iter()
        .min_by_key(|&&v| {
            let (vars, weight) = elimination_cost(factors, v);
            match h {
                HeuristicKind::MinSize => vars as u128,
                HeuristicKind::MinWeight => weight,
            }
        })
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(scope: &[usize], cards: &[usize]) -> Factor {
        Factor::constant(scope.iter().map(|&v| VarId(v)).collect(), cards.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn chain_picks_the_leaf() {
        // A -> B -> C with query A: factors P(A), P(B|A), P(C|B)
        let fs = vec![f(&[0], &[2]), f(&[0, 1], &[2, 2]), f(&[1, 2], &[2, 2])];
        let elim: BTreeSet<VarId> = [VarId(1), VarId(2)].into();
        assert_eq!(elimination_cost(&fs, VarId(1)), (3, 8));
        assert_eq!(elimination_cost(&fs, VarId(2)), (2, 4));
        for h in HeuristicKind::ALL {
            assert_eq!(choose_next(&fs, &elim, h), VarId(2));
        }
    }

    #[test]
    fn single_candidate() {
        let fs = vec![f(&[0, 1, 2, 3], &[5, 5, 5, 5])];
        let elim: BTreeSet<VarId> = [VarId(2)].into();
        for h in HeuristicKind::ALL {
            assert_eq!(choose_next(&fs, &elim, h), VarId(2));
        }
    }

    #[test]
    fn symmetric_tie_goes_to_lower_id() {
        let fs = vec![f(&[0, 3], &[2, 2]), f(&[1, 3], &[2, 2])];
        let elim: BTreeSet<VarId> = [VarId(1), VarId(0)].into();
        for h in HeuristicKind::ALL {
            assert_eq!(choose_next(&fs, &elim, h), VarId(0));
        }
    }

    #[test]
    fn size_and_weight_can_disagree() {
        // X=0 touches three binary variables (8 entries); Y=1 touches one
        // 10-state variable (20 entries)
        let fs = vec![f(&[0, 2, 3], &[2, 2, 2]), f(&[1, 4], &[2, 10])];
        let elim: BTreeSet<VarId> = [VarId(0), VarId(1)].into();
        assert_eq!(choose_next(&fs, &elim, HeuristicKind::MinSize), VarId(1));
        assert_eq!(choose_next(&fs, &elim, HeuristicKind::MinWeight), VarId(0));
    }
}
