mod common;

use noisymax::bench::{
    generate, generate_single_effect, run_benchmark, run_expanded, BenchConfig, BenchError, CellStatus,
    GeneratorKind, GeneratorSpec, QuerySet,
};
use noisymax::{expand, parse_network, Guard, HeuristicKind, Query, StrategyKind, VarId};

#[test]
fn one_node_lands_in_lowest_bucket() {
    let net = parse_network(
        r#"{"variables":[{"name":"A","states":["F","T"]}],
        "nodes":[{"child":"A","parents":[],"cpd":{"type":"table","values":[0.3,0.7]}}]}"#,
    )
    .unwrap();
    let report = run_benchmark(&net, &BenchConfig::default()).unwrap();
    for s in StrategyKind::ALL {
        for h in HeuristicKind::ALL {
            let hist = report.histogram(s, h).unwrap();
            assert_eq!(hist.buckets[0].label, "0-9");
            assert_eq!(hist.buckets[0].count, 1);
            assert_eq!(hist.buckets.iter().map(|b| b.count).sum::<usize>(), 1);
        }
    }
    assert_eq!(report.max_deviation, 0.0);
}

#[test]
fn eighteen_causes_trivial_aborts_multiplicative_completes() {
    let net = generate_single_effect(18, 2, 18).unwrap();
    let cfg = BenchConfig {
        strategies: vec![StrategyKind::Trivial, StrategyKind::Multiplicative],
        heuristics: vec![HeuristicKind::MinWeight],
        guard: Guard { max_table_entries: 100_000, ..Guard::default() },
        ..BenchConfig::default()
    };
    let report = run_benchmark(&net, &cfg).unwrap();
    let h = HeuristicKind::MinWeight;
    for q in 0..net.len() {
        assert_eq!(report.cell(q, StrategyKind::Multiplicative, h).unwrap().status, CellStatus::Ok);
        let trivial = report.cell(q, StrategyKind::Trivial, h).unwrap();
        assert_eq!(trivial.status, CellStatus::Aborted);
        assert!(trivial.detail.as_deref().unwrap().contains("524288"));
    }
    let hist = report.histogram(StrategyKind::Trivial, h).unwrap();
    let aborted = hist.buckets.iter().find(|b| b.label == "aborted").unwrap();
    assert_eq!(aborted.count, net.len());
}

#[test]
fn eighteen_causes_with_default_guards_all_complete() {
    let net = generate_single_effect(18, 2, 18).unwrap();
    let cfg = BenchConfig {
        strategies: vec![StrategyKind::Trivial, StrategyKind::Multiplicative],
        heuristics: vec![HeuristicKind::MinWeight],
        queries: QuerySet::Explicit(vec![Query::marginal(VarId(18))]),
        ..BenchConfig::default()
    };
    let report = run_benchmark(&net, &cfg).unwrap();
    assert!(report.cells.iter().all(|c| c.status == CellStatus::Ok));
    let trivial = report.cell(0, StrategyKind::Trivial, HeuristicKind::MinWeight).unwrap();
    let mult = report.cell(0, StrategyKind::Multiplicative, HeuristicKind::MinWeight).unwrap();
    assert!(trivial.multiplications > 1000 * mult.multiplications);
}

#[test]
fn corrupted_factor_fails_agreement() {
    let net = generate(&GeneratorSpec::bn2o(5, 4, 3, 3)).unwrap();
    let cfg = BenchConfig::default();
    let mut expansions: Vec<_> = cfg
        .strategies
        .iter()
        .map(|&s| (s, expand(&net, s, cfg.guard.max_table_entries).map(|(f, _)| f)))
        .collect();
    assert!(run_expanded(&net, &expansions, &cfg).is_ok());

    let temporal = expansions.iter_mut().find(|(s, _)| *s == StrategyKind::Temporal).unwrap();
    let fnet = temporal.1.as_mut().unwrap();
    let victim = fnet.families.iter().position(|&f| f.0 >= 4).unwrap();
    let values = fnet.factors[victim].values_mut();
    values.swap(0, 1);

    match run_expanded(&net, &expansions, &cfg) {
        Err(BenchError::Disagreement { other, deviation, query, .. }) => {
            assert!(other.starts_with("temporal"), "{other}");
            assert!(deviation > 1e-9);
            assert!(!query.is_empty());
        }
        other => panic!("expected a disagreement, got {other:?}"),
    }
}

#[test]
fn guard_aborts_never_poison_agreement() {
    let net = generate(&GeneratorSpec::bn2o(6, 8, 6, 5)).unwrap();
    let cfg = BenchConfig {
        guard: Guard { max_multiplications: 60, ..Guard::default() },
        ..BenchConfig::default()
    };
    let report = run_benchmark(&net, &cfg).unwrap();
    assert!(report.cells.iter().any(|c| c.status == CellStatus::Aborted));
    assert!(report.cells.iter().any(|c| c.status == CellStatus::Ok));
    for h in &report.histograms {
        assert_eq!(h.buckets.iter().map(|b| b.count).sum::<usize>(), report.queries.len());
    }
}

#[test]
fn impossible_evidence_is_recorded() {
    let net = parse_network(
        r#"{"variables":[{"name":"C","states":["F","T"]},{"name":"E","states":["F","T"]}],
        "nodes":[{"child":"C","parents":[],"cpd":{"type":"table","values":[1.0,0.0]}},
                 {"child":"E","cpd":{"type":"noisy-max","causes":["C"],"links":[[[1.0,0.0],[0.3,0.7]]]}}]}"#,
    )
    .unwrap();
    let q = Query::marginal(VarId(0)).with_evidence(VarId(1), 1);
    let cfg = BenchConfig { queries: QuerySet::Explicit(vec![q]), ..BenchConfig::default() };
    let report = run_benchmark(&net, &cfg).unwrap();
    assert!(report.cells.iter().all(|c| c.status == CellStatus::ZeroProbability));
    assert_eq!(report.totals[0].zero_probability, 1);
}

#[test]
fn reports_are_reproducible() {
    let spec = GeneratorSpec {
        kind: GeneratorKind::Multilevel,
        seed: 3,
        diseases: 5,
        findings: 6,
        max_parents: 3,
        effect_domain_size: 3,
        link_density: 0.6,
    };
    let net = generate(&spec).unwrap();
    let cfg = BenchConfig::default();
    let a = run_benchmark(&net, &cfg).unwrap();
    let b = run_benchmark(&net, &cfg).unwrap();
    assert_eq!(a.timings.len(), a.cells.len());
    assert_eq!(a.without_timings().to_json(), b.without_timings().to_json());
}

#[test]
fn csv_has_one_row_per_cell() {
    let net = generate(&GeneratorSpec::bn2o(2, 3, 2, 2)).unwrap();
    let report = run_benchmark(&net, &BenchConfig::default()).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + report.cells.len());
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("D0,trivial,min-size,"), "{first}");
    assert!(first.ends_with(",ok"));
}
