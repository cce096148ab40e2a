//! Reduced-size runs of the reproduction checks with different seeds than
//! the acceptance run.

use pathid::harness::*;

#[test]
fn checks_pass_on_other_seeds() {
    let checks = [
        golden_estimands(101),
        certificates(),
        oracle_equivalence(103, 10),
        unit_level_equality(107, 5),
        decomposition(109, 30),
        river_blindness_suite(),
        four_arm_reconstruction(113, 10),
    ];
    for c in &checks {
        assert!(c.passed, "{}", c.line());
    }
    let report = markdown_report(&checks);
    assert!(report.contains("7/7 checks passed"));
}

#[test]
fn grid_law_has_requested_coordinates() {
    for (p0, r) in bounds_grid().into_iter().step_by(37) {
        let t = grid_law(&p0, &r);
        assert_eq!(t.conditional(&[("M", 0)], &[("A", 0)]).unwrap(), p0);
        for m in 0..2 {
            assert_eq!(t.conditional(&[("Y", 1)], &[("A", 1), ("M", m)]).unwrap(), r[m]);
        }
    }
}

#[test]
fn edge_consistent_queries_exclude_witnesses() {
    let g = pathid::fixtures::paper_graphs()["amyl_a"].project();
    let (a, y) = (g.id("A").unwrap(), g.id("Y").unwrap());
    let qs = edge_consistent_queries(&g, a, y).unwrap();
    // Both paths starting A→L must agree on that edge's value, so at most half the subsets survive.
    let n_paths = pathid::paths::enumerate_proper_causal_paths(&g, &[a].into(), &[y].into()).unwrap().len();
    assert!(!qs.is_empty() && qs.len() <= (1 << n_paths) / 2);
    let l = g.id("L").unwrap();
    for q in qs {
        let through_l = q.pi.iter().filter(|p| p.contains(&l)).count();
        assert!(through_l == 0 || through_l == 2);
    }
}
