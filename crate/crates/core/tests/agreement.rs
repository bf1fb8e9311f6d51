mod common;

use proptest::prelude::*;

use noisymax::bench::SeededRng;
use noisymax::infer::JointDistribution;
use noisymax::{expand, query_posterior, Elimination, Guard, HeuristicKind, StrategyKind, VarId};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_strategy_matches_enumeration(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let net = random_network(&mut rng, 8);
        let joint = JointDistribution::new(&net).unwrap();
        let mut queries = all_marginals(&net);
        queries.extend(evidence_queries(&net, &joint, &mut rng, 2));
        let guard = Guard::default();
        for s in StrategyKind::ALL {
            let (fnet, report) = expand(&net, s, guard.max_table_entries).unwrap();
            prop_assert_eq!(report.nodes.len(), net.noisy_max_nodes().count());
            for q in &queries {
                let want = joint.posterior(q).unwrap();
                for h in HeuristicKind::ALL {
                    let (got, _) = query_posterior(&fnet, q, &h.into(), &guard).unwrap();
                    let d = want.max_abs_diff(&got).unwrap();
                    prop_assert!(d <= 1e-9, "{} {} {:?}: {}", s, h, q, d);
                }
            }
        }
    }

    #[test]
    fn multiplicative_is_order_free(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let net = random_network(&mut rng, 7);
        let joint = JointDistribution::new(&net).unwrap();
        let (fnet, _) = expand(&net, StrategyKind::Multiplicative, 1_000_000).unwrap();
        let mut order: Vec<VarId> = (0..fnet.variables.len()).map(VarId).collect();
        rng.shuffle(&mut order);
        let order = Elimination::Fixed(order);
        for q in all_marginals(&net) {
            let want = joint.posterior(&q).unwrap();
            let (got, _) = query_posterior(&fnet, &q, &order, &Guard::default()).unwrap();
            prop_assert!(want.max_abs_diff(&got).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn marginals_sum_to_one(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let net = random_network(&mut rng, 10);
        let (fnet, _) = expand(&net, StrategyKind::Multiplicative, 1_000_000).unwrap();
        for q in all_marginals(&net) {
            let (p, _) = query_posterior(&fnet, &q, &HeuristicKind::MinSize.into(), &Guard::default()).unwrap();
            prop_assert!((p.sum() - 1.0).abs() < 1e-12);
            prop_assert!(p.values().iter().all(|&x| x >= 0.0));
        }
    }
}
