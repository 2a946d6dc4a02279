use std::collections::BTreeSet;

use proptest::prelude::*;
use sql2circuits_core::ansatz::{build_circuit, AnsatzConfig};
use sql2circuits_core::diagram::Diagram;
use sql2circuits_core::grammar::{ast_to_cfg_diagram, cfg_to_pregroup, check_grammatical, remove_caps, PregroupGrammarSpec};
use sql2circuits_core::sql::{self, QueryAst};
use sql2circuits_core::trainer::iteration_rng;
use sql2circuits_core::workload::{generate_queries, split_dataset, SeedSpec, Split};

fn encode(ast: &QueryAst, spec: &PregroupGrammarSpec) -> (Diagram, Diagram) {
    let cfg = ast_to_cfg_diagram(ast).unwrap();
    let pregroup = cfg_to_pregroup(&cfg, spec).unwrap();
    let capless = remove_caps(&pregroup).unwrap();
    (pregroup, capless)
}

fn has_caps(d: &Diagram) -> bool {
    d.boxes().any(|b| b.name.starts_with("cap_"))
}

#[test]
fn whole_generated_workload_encodes() {
    let queries = generate_queries(&SeedSpec::bundled(), 670, &mut iteration_rng(42, 0)).unwrap();
    assert_eq!(queries.len(), 670);
    let asts: Vec<QueryAst> = queries.iter().map(|q| sql::parse(q).unwrap()).collect();
    let spec = PregroupGrammarSpec::from_queries(asts.iter()).unwrap();
    let cfg = AnsatzConfig::default();
    let mut widths = BTreeSet::new();
    for (q, ast) in queries.iter().zip(&asts) {
        let (pregroup, capless) = encode(ast, &spec);
        assert!(check_grammatical(&pregroup, &spec).grammatical, "{q}");
        assert!(!has_caps(&capless), "{q}");
        assert_eq!(capless.cod(), pregroup.cod());
        assert!(check_grammatical(&capless, &spec).grammatical, "{q}");
        assert_eq!(remove_caps(&capless).unwrap(), capless, "{q}");
        let c = build_circuit(&capless, &cfg).unwrap();
        c.validate().unwrap();
        assert_eq!(c.output_qubits.len(), 1);
        widths.insert(c.n_qubits);
    }
    // queries of different lengths give circuits of different widths
    assert!(widths.len() > 3, "{widths:?}");
}

fn classes(spec: &[usize]) -> Vec<String> {
    spec.iter()
        .enumerate()
        .flat_map(|(c, n)| std::iter::repeat_n(c.to_string(), *n))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_stratified_partition(counts in prop::collection::vec(3usize..40, 1..5), seed in any::<u64>(), w in 0.2f64..0.9) {
        let labels = classes(&counts);
        let rest = (1.0 - w) / 2.0;
        let ratios = [w, rest, 1.0 - w - rest];
        let s = split_dataset(&labels, ratios, seed).unwrap();
        prop_assert_eq!(s.len(), labels.len());
        prop_assert_eq!(&split_dataset(&labels, ratios, seed).unwrap(), &s);
        for (c, &n) in counts.iter().enumerate() {
            for (j, split) in Split::ALL.iter().enumerate() {
                let got = labels.iter().zip(&s).filter(|(l, x)| **l == c.to_string() && *x == split).count();
                prop_assert!((got as f64 - ratios[j] * n as f64).abs() < 1.0 + 1e-9, "class {} split {:?}: {} of {}", c, split, got, n);
            }
        }
    }

    #[test]
    fn generated_queries_round_trip(seed in any::<u64>()) {
        for q in generate_queries(&SeedSpec::bundled(), 5, &mut iteration_rng(seed, 0)).unwrap() {
            let ast = sql::parse(&q).unwrap();
            prop_assert_eq!(ast.to_string(), q);
        }
    }
}
