use crate::model::{advance, Factor, NoisyMaxCpd};

use super::FactorizeError;

/// Largest number of contribution tuples the oracle will enumerate.
pub const ORACLE_LIMIT: usize = 10_000_000;

/// The full conditional table `P(E | C_1..C_n)` of a noisy-max node, by
/// brute force: for every cause configuration, sum the product of link
/// probabilities over every tuple of contributions whose maximum is `E`.
///
/// Scope is `[C_1, .., C_n, E]`. A leak enters as one more contribution
/// with no parent.
pub fn oracle_cpd(cpd: &NoisyMaxCpd) -> Result<Factor, FactorizeError> {
    let m = cpd.effect_card();
    let contribs = cpd.contributions();
    let tuples = checked_pow(m, contribs.len())
        .filter(|&t| t <= ORACLE_LIMIT)
        .ok_or(FactorizeError::TooLarge {
            what: "oracle enumeration",
            entries: u128::from(m as u64).saturating_pow(contribs.len() as u32),
            limit: ORACLE_LIMIT,
        })?;

    let cause_cards: Vec<usize> = cpd.links.iter().map(|l| l.rows.len()).collect();
    let configs: usize = cause_cards.iter().product();
    let mut scope = cpd.causes.clone();
    scope.push(cpd.effect);
    let mut cards = cause_cards.clone();
    cards.push(m);

    let mut values = vec![0.0; configs * m];
    let mut causes = vec![0usize; cause_cards.len()];
    let radix = vec![m; contribs.len()];
    for config in 0..configs {
        // the leak always sits in its single state
        let rows: Vec<&[f64]> = contribs
            .iter()
            .enumerate()
            .map(|(j, c)| c.row(if c.cause.is_some() { causes[j] } else { 0 }))
            .collect();
        let mut tuple = vec![0usize; contribs.len()];
        for _ in 0..tuples {
            let p: f64 = tuple.iter().zip(&rows).map(|(&a, row)| row[a]).product();
            let top = tuple.iter().copied().max().unwrap_or(0);
            values[config * m + top] += p;
            advance(&mut tuple, &radix);
        }
        advance(&mut causes, &cause_cards);
    }
    Ok(Factor::new(scope, cards, values)?)
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinkTable, VarId};

    fn binary_link(cause: usize, p_true: f64) -> LinkTable {
        LinkTable::new(VarId(cause), vec![vec![1.0, 0.0], vec![1.0 - p_true, p_true]])
    }

    #[test]
    fn single_cause_is_its_link() {
        let link = LinkTable::new(VarId(0), vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]);
        let cpd = NoisyMaxCpd::new(VarId(1), vec![link.clone()]);
        let f = oracle_cpd(&cpd).unwrap();
        assert_eq!(f.scope(), &[VarId(0), VarId(1)]);
        assert_eq!(f.values(), link.rows.concat().as_slice());
    }

    #[test]
    fn noisy_or_two_causes() {
        let cpd = NoisyMaxCpd::new(VarId(2), vec![binary_link(0, 0.8), binary_link(1, 0.6)]);
        let f = oracle_cpd(&cpd).unwrap();
        assert!((f.get(&[1, 1, 1]).unwrap() - 0.92).abs() < 1e-15);
        assert!((f.get(&[1, 0, 1]).unwrap() - 0.8).abs() < 1e-15);
        assert!((f.get(&[0, 1, 1]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(f.get(&[0, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn three_valued_two_causes() {
        let low = vec![1.0, 0.0, 0.0];
        let cpd = NoisyMaxCpd::new(
            VarId(2),
            vec![
                LinkTable::new(VarId(0), vec![low.clone(), vec![0.5, 0.3, 0.2]]),
                LinkTable::new(VarId(1), vec![low, vec![0.4, 0.4, 0.2]]),
            ],
        );
        let f = oracle_cpd(&cpd).unwrap();
        let expect = [0.20, 0.44, 0.36];
        for (a, e) in expect.iter().enumerate() {
            assert!((f.get(&[1, 1, a]).unwrap() - e).abs() < 1e-12);
        }
        for slice in f.values().chunks(3) {
            assert!((slice.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leak_is_a_contribution() {
        let cpd = NoisyMaxCpd::new(VarId(1), vec![binary_link(0, 0.5)]).with_leak(vec![0.9, 0.1]);
        let f = oracle_cpd(&cpd).unwrap();
        // cause off: only the leak fires
        assert!((f.get(&[0, 1]).unwrap() - 0.1).abs() < 1e-15);
        assert!((f.get(&[1, 1]).unwrap() - 0.55).abs() < 1e-15);
    }

    #[test]
    fn enumeration_guard() {
        let links = (0..15).map(|i| LinkTable::new(VarId(i), vec![vec![0.5, 0.25, 0.25]; 2])).collect();
        let cpd = NoisyMaxCpd::new(VarId(15), links);
        assert!(matches!(oracle_cpd(&cpd), Err(FactorizeError::TooLarge { .. })));
    }
}
