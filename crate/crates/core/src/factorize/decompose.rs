//! Binary-max decompositions: a balanced tree (parent divorcing) and a
//! left-deep chain (temporal transformation).
//!
//! Both feed per-cause contribution variables into `n - 1` deterministic
//! `m^3` tables. The tree splits its leaves in declared cause order with the
//! left half taking the extra leaf; the chain folds causes in declared
//! order. With two contributions the two coincide.

use crate::model::{Factor, NoisyMaxCpd, VarId, Variable};

use super::{contribution_factor, single_contribution, AuxAllocator, ExpansionResult, FactorizeError};

/// Deterministic table over `[left, right, out]`: one where
/// `out == max(left, right)`.
pub fn binary_max_factor(left: VarId, right: VarId, out: VarId, m: usize) -> Factor {
    Factor::from_fn(vec![left, right, out], vec![m; 3], |a| f64::from(a[2] == a[0].max(a[1])))
        .expect("m^3 table")
}

pub fn expand_parent_divorcing(
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
    let leaves = aux.contributions(contribs.len());
    let mut factors: Vec<Factor> =
        contribs.iter().zip(&leaves).map(|(c, &e)| contribution_factor(c, e, m)).collect();
    let mut tree = TreeBuilder { aux: &mut aux, factors: &mut factors, m, hidden: 0 };
    tree.build(&leaves, Some(cpd.effect));
    let encoding = (contribs.len() - 1) * m.pow(3);
    Ok(ExpansionResult::new(factors, aux.finish(), encoding))
}

struct TreeBuilder<'a, 'b> {
    aux: &'a mut AuxAllocator<'b>,
    factors: &'a mut Vec<Factor>,
    m: usize,
    hidden: usize,
}

impl TreeBuilder<'_, '_> {
    /// Returns the variable carrying the max over `inputs`.
    fn build(&mut self, inputs: &[VarId], out: Option<VarId>) -> VarId {
        if let [single] = inputs {
            return *single;
        }
        let (left, right) = inputs.split_at(inputs.len().div_ceil(2));
        let l = self.build(left, None);
        let r = self.build(right, None);
        let out = out.unwrap_or_else(|| {
            self.hidden += 1;
            self.aux.effect_valued(format!("y{}", self.hidden))
        });
        self.factors.push(binary_max_factor(l, r, out, self.m));
        out
    }
}

pub fn expand_temporal(
    cpd: &NoisyMaxCpd,
    effect: &Variable,
    first_aux: VarId,
) -> Result<ExpansionResult, FactorizeError> {
    if let Some(r) = single_contribution(cpd) {
        return Ok(r);
    }
    let m = cpd.effect_card();
    let contribs = cpd.contributions();
    let n = contribs.len();
    let mut aux = AuxAllocator::new(effect, first_aux);
    let inputs = aux.contributions(n);
    let mut factors: Vec<Factor> =
        contribs.iter().zip(&inputs).map(|(c, &e)| contribution_factor(c, e, m)).collect();

    // the identity stage for the first cause is skipped: E_1 feeds Y_2 directly
    let mut acc = inputs[0];
    for (i, &next) in inputs.iter().enumerate().skip(1) {
        let out = if i + 1 == n { cpd.effect } else { aux.effect_valued(format!("y{}", i + 1)) };
        factors.push(binary_max_factor(acc, next, out, m));
        acc = out;
    }
    let encoding = (n - 1) * m.pow(3);
    Ok(ExpansionResult::new(factors, aux.finish(), encoding))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::test_support::*;

    #[test]
    fn binary_max_for_three_values() {
        let f = binary_max_factor(VarId(0), VarId(1), VarId(2), 3);
        // (L, M) -> M
        assert_eq!(f.get(&[0, 1, 1]).unwrap(), 1.0);
        assert_eq!(f.get(&[0, 1, 2]).unwrap(), 0.0);
        let table = [[0, 1, 2], [1, 1, 2], [2, 2, 2]];
        for (a, row) in table.iter().enumerate() {
            for (b, &out) in row.iter().enumerate() {
                for y in 0..3 {
                    assert_eq!(f.get(&[a, b, y]).unwrap(), f64::from(y == out));
                }
            }
        }
    }

    #[test]
    fn divorcing_four_causes() {
        let cpd = uniform_causes(4, &[0.5, 0.3, 0.2]);
        let r = expand_parent_divorcing(&cpd, &effect(4, 3), VarId(5)).unwrap();
        assert_eq!(r.encoding_entry_count, 81);
        // E_1..E_4 plus two hidden nodes
        assert_eq!(r.auxiliary_variables.len(), 6);
        let maxes: Vec<&Factor> = r.factors.iter().filter(|f| f.len() == 27).collect();
        assert_eq!(maxes.len(), 3);
        // balanced: root joins the two hidden nodes
        let root = maxes.iter().find(|f| f.scope()[2] == VarId(4)).unwrap();
        assert!(r.auxiliary_variables[4..].iter().all(|y| root.contains(y.id)));
    }

    #[test]
    fn divorcing_five_is_left_heavy() {
        let cpd = uniform_causes(5, &[0.5, 0.5]);
        let r = expand_parent_divorcing(&cpd, &effect(5, 2), VarId(6)).unwrap();
        let e: Vec<VarId> = r.auxiliary_variables[..5].iter().map(|v| v.id).collect();
        // left subtree takes E_1..E_3
        let has = |a: VarId, b: VarId| r.factors.iter().any(|f| f.len() == 8 && f.contains(a) && f.contains(b));
        assert!(has(e[0], e[1]));
        assert!(has(e[3], e[4]));
        assert!(!has(e[2], e[3]));
    }

    #[test]
    fn chain_four_causes() {
        let cpd = uniform_causes(4, &[0.5, 0.3, 0.2]);
        let r = expand_temporal(&cpd, &effect(4, 3), VarId(5)).unwrap();
        assert_eq!(r.encoding_entry_count, 81);
        assert_eq!(r.auxiliary_variables.len(), 4 + 2);
        let names: Vec<&str> = r.auxiliary_variables[4..].iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, vec!["E.y2", "E.y3"]);
    }

    #[test]
    fn two_causes_tree_equals_chain() {
        let cpd = uniform_causes(2, &[0.2, 0.8]);
        let a = expand_parent_divorcing(&cpd, &effect(2, 2), VarId(3)).unwrap();
        let b = expand_temporal(&cpd, &effect(2, 2), VarId(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.encoding_entry_count, 8);
    }

    #[test]
    fn chain_matches_oracle_for_noisy_or() {
        let cpd = crate::model::NoisyMaxCpd::new(
            VarId(2),
            vec![
                crate::model::LinkTable::new(VarId(0), vec![vec![1.0, 0.0], vec![0.2, 0.8]]),
                crate::model::LinkTable::new(VarId(1), vec![vec![1.0, 0.0], vec![0.4, 0.6]]),
            ],
        );
        let r = expand_temporal(&cpd, &effect(2, 2), VarId(3)).unwrap();
        let got = r.collapse(&cpd).unwrap();
        let want = super::super::oracle_cpd(&cpd).unwrap();
        assert!(got.max_abs_diff(&want).unwrap() < 1e-12);
    }
}
