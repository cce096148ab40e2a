//! Conditional path-specific identification checked against the oracle on
//! every fixture and every single conditioning vertex.

use pathid::fixtures::paper_graphs;
use pathid::harness::{compare, stochastic};
use pathid::io::{GraphFile, QueryFile};
use pathid::{DiscreteNpsem, Error, Exact};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn identified_conditional_queries_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (mut identified, mut refused) = (0, 0);
    for (name, d) in paper_graphs() {
        let d = stochastic(&d);
        let gf = GraphFile::from(d.clone());
        let g = gf.observed().unwrap();
        let (Ok(a), Ok(y)) = (g.id("A"), g.id("Y")) else { continue };
        let path = if g.has_edge(a, y) { "A -> Y" } else { "all" };
        for w in 0..g.len() {
            if w == a || w == y {
                continue;
            }
            let src = format!(
                "pathid-query 1\nkind: conditional_path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: {path}\ngiven: {}\nformat: text\n",
                g.name(w)
            );
            let qf = QueryFile::parse(&src).unwrap();
            match qf.identify(&gf) {
                Ok(e) => {
                    identified += 1;
                    for _ in 0..3 {
                        let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut rng, d.clone(), 7);
                        let c = compare(&m, &gf, &qf, &e).unwrap();
                        assert!(c.agrees(0.0), "{name} given {}: {}", g.name(w), e);
                    }
                }
                Err(Error::NotIdentified(_) | Error::EdgeInconsistent { .. }) => refused += 1,
                Err(e) => panic!("{name} given {}: {e}", g.name(w)),
            }
        }
    }
    assert!(identified >= 10, "only {identified} identified ({refused} refused)");
}
