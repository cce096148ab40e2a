use std::path::PathBuf;

use pathid::estimand::{parse_structured, Format};
use pathid::harness::GOLDENS;
use pathid_cli::{run, EXIT_INPUT, EXIT_NOT_IDENTIFIED, EXIT_OK};

fn data(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).display().to_string()
}

#[test]
fn structured_goldens_render_to_pinned_text() {
    for g in &GOLDENS {
        let src = std::fs::read_to_string(data(&format!("golden/{}.estimand", g.name))).unwrap();
        let e = parse_structured(&src).unwrap();
        assert_eq!(e.render(Format::Text), g.text, "{}", g.name);
    }
}

#[test]
fn exit_codes() {
    let ok = run(["pathid", "identify", &data("graphs/amyno_a.graph"), &data("queries/direct_path.query")]);
    assert_eq!(ok.code, EXIT_OK);
    assert_eq!(ok.stdout, "Σ_m p(Y|M=m,A=a)·p(M=m|A=a′)\n");
    let ni = run(["pathid", "identify", &data("graphs/amyl_b.graph"), &data("queries/direct_path.query")]);
    assert_eq!(ni.code, EXIT_NOT_IDENTIFIED);
    assert!(ni.stdout.contains("recanting district {M,Y}"));
    let bad = run(["pathid", "identify", &data("invalid/cyclic.graph"), &data("queries/direct_path.query")]);
    assert_eq!(bad.code, EXIT_INPUT);
    assert!(bad.stderr.contains("cyclic.graph:2"), "{}", bad.stderr);
}

#[test]
fn same_arm_query_equals_intervention() {
    let a = run(["pathid", "eval", &data("models/amyno_a.model"), &data("queries/same_arm.query")]);
    let b = run(["pathid", "eval", &data("models/amyno_a.model"), &data("queries/total_effect.query")]);
    let rows = |s: &str| s.lines().filter(|l| l.starts_with("0 |") || l.starts_with("1 |")).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(rows(&a.stdout), rows(&b.stdout));
}

#[test]
fn river_blindness_pde_differs_from_mediation_formula() {
    let out = run(["pathid", "eval", &data("models/river_blindness.model"), &data("queries/river_blindness_pde.query"), "--oracle-only"]);
    assert_eq!(out.code, EXIT_OK);
    let value = |key: &str| out.stdout.lines().find(|l| l.starts_with(key)).unwrap().split(": ").nth(1).unwrap().to_string();
    assert_ne!(value("PDE (oracle)"), value("mediation formula"));
}

#[test]
fn fixture_export_matches_shipped_files() {
    for name in pathid::fixtures::paper_graphs().keys() {
        let out = run(["pathid", "fixture", name]);
        assert_eq!(out.stdout, std::fs::read_to_string(data(&format!("graphs/{name}.graph"))).unwrap(), "{name}");
    }
    let rb = run(["pathid", "fixture", "river_blindness"]);
    assert_eq!(rb.stdout, std::fs::read_to_string(data("models/river_blindness.model")).unwrap());
}

#[test]
fn help_is_not_an_error() {
    let out = run(["pathid", "--help"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("identify"));
}
