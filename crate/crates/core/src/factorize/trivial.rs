use crate::model::{Factor, NoisyMaxCpd, VarId, Variable};

use super::{contribution_factor, single_contribution, AuxAllocator, ExpansionResult, FactorizeError};

/// Contribution variables plus one deterministic table for the n-ary max.
///
/// The max table has `m^(n+1)` entries, so it is refused when that exceeds
/// `max_table_entries`.
pub fn expand_trivial(
    cpd: &NoisyMaxCpd,
    effect: &Variable,
    first_aux: VarId,
    max_table_entries: usize,
) -> Result<ExpansionResult, FactorizeError> {
    if let Some(r) = single_contribution(cpd) {
        return Ok(r);
    }
    let m = cpd.effect_card();
    let contribs = cpd.contributions();
    let entries = (m as u128).saturating_pow(contribs.len() as u32 + 1);
    if entries > max_table_entries as u128 {
        return Err(FactorizeError::TooLarge {
            what: "trivial max table",
            entries,
            limit: max_table_entries,
        });
    }

    let mut aux = AuxAllocator::new(effect, first_aux);
    let inputs = aux.contributions(contribs.len());
    let mut factors: Vec<Factor> =
        contribs.iter().zip(&inputs).map(|(c, &e)| contribution_factor(c, e, m)).collect();

    let mut scope = inputs;
    scope.push(cpd.effect);
    let cards = vec![m; scope.len()];
    let max_table = Factor::from_fn(scope, cards, |asg| {
        let (out, ins) = asg.split_last().unwrap();
        f64::from(ins.iter().copied().max() == Some(*out))
    })?;
    let encoding = max_table.len();
    factors.push(max_table);
    Ok(ExpansionResult::new(factors, aux.finish(), encoding))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::test_support::*;

    #[test]
    fn two_binary_causes() {
        let cpd = uniform_causes(2, &[0.2, 0.8]);
        let r = expand_trivial(&cpd, &effect(2, 2), VarId(3), 1 << 20).unwrap();
        assert_eq!(r.encoding_entry_count, 8);
        assert_eq!(r.auxiliary_variables.len(), 2);
        let max = r.factors.last().unwrap();
        assert_eq!(max.scope(), &[VarId(3), VarId(4), VarId(2)]);
        // max(F, F) = F only
        assert_eq!(max.values(), &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(r.total_entry_count, 8 + 2 * 4);
    }

    #[test]
    fn four_causes_three_values() {
        let cpd = uniform_causes(4, &[0.5, 0.3, 0.2]);
        let r = expand_trivial(&cpd, &effect(4, 3), VarId(5), 1 << 20).unwrap();
        assert_eq!(r.encoding_entry_count, 243);
    }

    #[test]
    fn refuses_oversized_table() {
        let cpd = uniform_causes(12, &[0.5, 0.5]);
        let err = expand_trivial(&cpd, &effect(12, 2), VarId(13), 4096).unwrap_err();
        assert!(matches!(err, FactorizeError::TooLarge { entries: 8192, .. }));
    }
}
