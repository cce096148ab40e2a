use std::collections::BTreeMap;

use pathid::estimand::{parse_structured, Format};
use pathid::graph::Vertex;
use pathid::io::GraphFile;
use pathid::paths::{edge_expand, enumerate_proper_causal_paths};
use pathid::swig::{construct_swig, Node};
use pathid::{
    evaluate_table, id, simplify, Admg, DiscreteNpsem, Error, Exact, HiddenDag, JointTable, PseQuery, VSet, Value,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random graph on `n` vertices whose directed edges respect index order.
fn build(n: usize, dir_bits: &[bool], bi_bits: &[bool]) -> Admg {
    let vertices: Vec<Vertex> = (0..n).map(|i| Vertex { name: format!("V{i}"), card: 2 }).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let directed: Vec<_> = pairs.iter().zip(dir_bits).filter(|(_, &b)| b).map(|(&p, _)| p).collect();
    let bidirected: Vec<_> = pairs.iter().zip(bi_bits).filter(|(_, &b)| b).map(|(&p, _)| p).collect();
    Admg::from_indices(vertices, &directed, &bidirected, &[]).unwrap()
}

fn admg() -> impl Strategy<Value = Admg> {
    (2usize..=6).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), m), prop::collection::vec(prop::bool::weighted(0.25), m))
            .prop_map(|(n, d, b)| build(n, &d, &b))
    })
}

fn dag() -> impl Strategy<Value = Admg> {
    (2usize..=5).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), m)).prop_map(move |(n, d)| build(n, &d, &vec![false; m]))
    })
}

/// A DAG with some vertices hidden; the last vertex stays observed.
fn hidden_dag() -> impl Strategy<Value = HiddenDag> {
    (dag(), prop::collection::vec(prop::bool::weighted(0.3), 5)).prop_map(|(g, h)| {
        let n = g.len();
        let hidden: VSet = (0..n - 1).filter(|&i| h[i]).collect();
        HiddenDag::new(g, hidden).unwrap()
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn topological_order_respects_edges(g in admg()) {
        let order = g.topological_order();
        let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        prop_assert_eq!(order.len(), g.len());
        for (a, b) in g.directed_edges() {
            prop_assert!(pos[&a] < pos[&b]);
        }
    }

    #[test]
    fn districts_partition_vertices(g in admg()) {
        let ds = g.districts(&g.all());
        let mut seen = VSet::new();
        for d in &ds {
            prop_assert!(d.is_disjoint(&seen));
            seen.extend(d);
            for &v in d {
                prop_assert_eq!(&g.district_of(v, &g.all()), d);
            }
        }
        prop_assert_eq!(seen, g.all());
    }

    #[test]
    fn projection_keeps_observed_ancestry(h in hidden_dag()) {
        let p = h.project();
        let obs: Vec<usize> = h.observed_set().into_iter().collect();
        prop_assert_eq!(p.len(), obs.len());
        for (i, &a) in obs.iter().enumerate() {
            let anc_full = h.dag.ancestors(&VSet::from([a]));
            let anc_proj = p.ancestors(&VSet::from([i]));
            for (j, &b) in obs.iter().enumerate() {
                prop_assert_eq!(anc_full.contains(&b), anc_proj.contains(&j));
            }
        }
    }

    #[test]
    fn edge_expansion_contracts_to_original(g in admg(), t in 0usize..6) {
        let a = t % g.len();
        let ex = edge_expand(&g, &VSet::from([a])).unwrap();
        let back = ex.contract().unwrap();
        prop_assert_eq!(back.directed_edges().collect::<Vec<_>>(), g.directed_edges().collect::<Vec<_>>());
        prop_assert_eq!(back.bidirected_edges().collect::<Vec<_>>(), g.bidirected_edges().collect::<Vec<_>>());
        prop_assert_eq!(ex.origin.len(), g.children(a).len());
    }

    #[test]
    fn swig_fixed_halves_have_no_parents(g in admg(), t in 0usize..6) {
        let a = t % g.len();
        let s = construct_swig(&g, &BTreeMap::from([(a, "a".to_string())])).unwrap();
        let edges = s.directed_edges();
        prop_assert!(edges.iter().all(|&(_, to)| to != Node::Fixed(a)));
        let into_a = edges.iter().filter(|&&(_, to)| to == Node::Random(a)).count();
        prop_assert_eq!(into_a, g.parents(a).len());
        let out_of_fixed = edges.iter().filter(|&&(from, _)| from == Node::Fixed(a)).count();
        prop_assert_eq!(out_of_fixed, g.children(a).len());
        // A fixed node is always blocked, so it is separated from its own random half.
        prop_assert!(s.d_separated(&[Node::Fixed(a)], &[Node::Random(a)], &[]).unwrap());
    }

    #[test]
    fn graph_files_round_trip(h in hidden_dag()) {
        let gf = GraphFile::from(h);
        let text = gf.to_text();
        let back = GraphFile::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
    }

    /// Whenever the interventional query is identified, its estimand equals
    /// the oracle's interventional law on a random model.
    #[test]
    fn identified_effects_match_oracle(h in hidden_dag(), seed in any::<u64>()) {
        let p = h.project();
        let n = p.len();
        prop_assume!(n >= 2);
        let (a, y) = (0, n - 1);
        let x = Value::new("a", 1);
        match id(&p, &BTreeMap::from([(a, x)]), &VSet::from([y])) {
            Ok(e) => {
                let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut rng(seed), h.clone(), 5);
                let law = m.observed_law().unwrap();
                let est = evaluate_table(&e, &law, &[p.name(y)]).unwrap();
                let orc = m.intervene_named(&[(p.name(a), 1)], &[p.name(y)]).unwrap();
                prop_assert_eq!(est, orc);
                // The same functional survives simplification and the structured round trip.
                let s = simplify(&e);
                prop_assert_eq!(evaluate_table(&s, &law, &[p.name(y)]).unwrap(), evaluate_table(&e, &law, &[p.name(y)]).unwrap());
                let text = e.render(Format::Structured);
                let back = parse_structured(&text).unwrap();
                prop_assert_eq!(back.render(Format::Structured), text);
            }
            Err(Error::NotIdentified(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    /// With equal active and baseline values every path-specific query is
    /// the ordinary intervention.
    #[test]
    fn equal_arms_reduce_to_intervention(g in dag(), mask in any::<u32>(), seed in any::<u64>(), x in 0usize..2) {
        let n = g.len();
        let (a, y) = (0, n - 1);
        let paths = enumerate_proper_causal_paths(&g, &VSet::from([a]), &VSet::from([y])).unwrap();
        let pi: Vec<Vec<usize>> = paths.into_iter().enumerate().filter(|(i, _)| mask >> (i % 32) & 1 == 1).map(|(_, p)| p).collect();
        let q = PseQuery {
            outcome: VSet::from([y]),
            treatments: BTreeMap::from([(a, (Value::new("a", x), Value::new("a′", x)))]),
            pi,
            given: VSet::new(),
        };
        let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut rng(seed), HiddenDag::observed(g.clone()).unwrap(), 5);
        let pse = m.pse_counterfactual(&q).unwrap().marginal(&[g.name(y)]).unwrap();
        let direct = m.intervene_named(&[(g.name(a), x)], &[g.name(y)]).unwrap();
        prop_assert_eq!(pse, direct);
    }

    #[test]
    fn float_and_exact_laws_agree(g in dag(), seed in any::<u64>()) {
        let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut rng(seed), HiddenDag::observed(g.clone()).unwrap(), 5);
        let f: DiscreteNpsem<f64> = DiscreteNpsem::random(&mut rng(seed), HiddenDag::observed(g).unwrap(), 5);
        let exact = m.observed_law().unwrap();
        let float = f.observed_law().unwrap();
        let as_float: JointTable<f64> = exact.map(pathid::Scalar::to_f64);
        prop_assert!(as_float.close_to(&float, 1e-12));
    }
}
