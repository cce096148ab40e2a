//! The library example from the README.

use pathid::estimand::{evaluate_table, Format};
use pathid::fixtures::paper_graphs;
use pathid::{id_path_specific, DiscreteNpsem, Exact, PseQuery, Value};

#[test]
fn readme_example() -> pathid::Result<()> {
    let d = paper_graphs()["amyno_a"].clone();
    let g = d.project();
    let q = PseQuery::named(&g, &["Y"], &[("A", Value::new("a", 1), Value::new("a′", 0))], &[&["A", "Y"]], &[])?;
    let e = id_path_specific(&g, &q)?;
    assert_eq!(e.render(Format::Text), "Σ_m p(Y|M=m,A=a)·p(M=m|A=a′)");

    let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut rand::thread_rng(), d, 7);
    let est = evaluate_table(&e, &m.observed_law()?, &["Y"])?;
    assert_eq!(est, m.pse_counterfactual(&q)?.marginal(&["Y"])?);
    Ok(())
}
