//! Reproduction checks. Each check returns a [`Check`] with its verdict,
//! a one-line detail and its wall time against a fixed budget.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimand::{evaluate_table, Estimand, Format};
use crate::fixtures::{paper_graphs, perturb, river_blindness, RiverBlindnessParams, OBSERVED_DAGS};
use crate::graph::{HiddenDag, VSet};
use crate::identify::{id_path_specific, NonIdentified};
use crate::io::{GraphFile, QueryFile, QueryKind};
use crate::mediation::{contrasts, mediation_formula, pde_bounds, response_model, response_pde, response_vertices, Triple};
use crate::oracle::DiscreteNpsem;
use crate::paths::{assignment_from_paths, enumerate_proper_causal_paths, PseQuery};
use crate::scalar::Scalar;
use crate::table::JointTable;
use crate::{Exact, Value};

/// Outcome of one reproduction check.
#[derive(Clone, Debug)]
pub struct Check {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Check {
    fn finish(id: usize, title: &'static str, budget: Duration, start: Instant, failures: Vec<String>, ok: String) -> Self {
        let elapsed = start.elapsed();
        let mut detail = if failures.is_empty() { ok } else { failures.join("; ") };
        let in_time = elapsed <= budget;
        if !in_time {
            detail.push_str(&format!(" (over budget: {:.2?} > {:.2?})", elapsed, budget));
        }
        Check { id, title, passed: failures.is_empty() && in_time, detail, elapsed, budget }
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// `PASS [3] title (0.42s): detail`.
    pub fn line(&self) -> String {
        format!("{} [{}] {} ({:.2}s): {}", self.status(), self.id, self.title, self.elapsed.as_secs_f64(), self.detail)
    }
}

fn q(n: i64, d: i64) -> Exact {
    Exact::from_ratio(n, d)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A query whose identifying functional is displayed in closed form, with
/// the text rendering it must produce.
pub struct Golden {
    pub name: &'static str,
    pub fixture: &'static str,
    pub query: &'static str,
    pub text: &'static str,
}

pub const GOLDENS: [Golden; 5] = [
    Golden {
        name: "mediation_formula",
        fixture: "amyno_a",
        query: "pathid-query 1\nkind: path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: A -> Y\nformat: text\n",
        text: "Σ_m p(Y|M=m,A=a)·p(M=m|A=a′)",
    },
    Golden {
        name: "separable_n_to_l",
        fixture: "anomlpath_a",
        query: "pathid-query 1\nkind: separable\noutcome: Y\ntreatment: N active=x:0\ntreatment: O active=x*:1\npath: all\nformat: text\n",
        text: "Σ_{m,l} p(Y|M=m,L=l,A=x*)·p(M=m|L=l,A=x)·p(L=l|A=x)",
    },
    Golden {
        name: "separable_o_to_l",
        fixture: "anomlpath_b",
        query: "pathid-query 1\nkind: separable\noutcome: Y\ntreatment: N active=x:0\ntreatment: O active=x*:1\npath: all\nformat: text\n",
        text: "Σ_{m,l} p(Y|M=m,L=l,A=x*)·p(M=m|L=l,A=x)·p(L=l|A=x*)",
    },
    Golden {
        name: "confounded_direct_path",
        fixture: "ex_po_calc_a",
        query: "pathid-query 1\nkind: path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: A -> Y\nformat: text\n",
        text: "Σ_m [(Σ_c p(Y,M=m|A=a,C=c)·p(C=c)) / (Σ_c p(M=m|A=a,C=c)·p(C=c))]·[Σ_c p(M=m|A=a′,C=c)·p(C=c)]",
    },
    Golden {
        name: "conditional_direct_path",
        fixture: "ex_po_calc_b",
        query: "pathid-query 1\nkind: conditional_path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: A -> Y\ngiven: C\nformat: text\n",
        text: "Σ_m p(Y|M=m,A=a,C)·p(M=m|A=a′,C)",
    },
];

/// The estimand evaluated on a model's observed law next to the oracle's
/// counterfactual table over the same variables.
#[derive(Clone, Debug)]
pub struct Comparison<S> {
    pub estimand: JointTable<S>,
    pub oracle: JointTable<S>,
    pub max_abs_diff: f64,
}

impl<S: Scalar> Comparison<S> {
    pub fn agrees(&self, tol: f64) -> bool {
        self.estimand.close_to(&self.oracle, tol)
    }
}

/// Counterfactual law the query refers to, computed by the oracle. For
/// conditional queries the table holds `p(outcome | given)`.
pub fn oracle_table<S: Scalar>(model: &DiscreteNpsem<S>, gf: &GraphFile, qf: &QueryFile) -> Result<JointTable<S>> {
    let names: Vec<&str> = qf.outcome.iter().chain(&qf.given).map(String::as_str).collect();
    let g = &model.graph().dag;
    match qf.kind {
        QueryKind::Interventional | QueryKind::Separable => {
            let mut assign = BTreeMap::new();
            for t in &qf.treatments {
                assign.insert(g.id(&t.var)?, t.active.state);
            }
            let t = model.intervene(&assign, &g.set(&qf.outcome)?)?;
            t.reorder(&names)
        }
        QueryKind::PathSpecific | QueryKind::ConditionalPathSpecific => {
            let proj = gf.observed()?;
            let joint = model.pse_counterfactual(&qf.pse(&proj)?)?.marginal(&names)?;
            if qf.given.is_empty() {
                return Ok(joint);
            }
            conditional_table(&joint, qf.outcome.len())
        }
        QueryKind::Bounds => Err(Error::InvalidQuery("bounds queries have no counterfactual table".into())),
    }
}

/// `p(first k vars | rest)` laid out like `joint`; rows with a zero
/// conditioning event are left at zero.
fn conditional_table<S: Scalar>(joint: &JointTable<S>, k: usize) -> Result<JointTable<S>> {
    let given: Vec<&str> = joint.vars()[k..].iter().map(String::as_str).collect();
    let mut out = JointTable::zeros(joint.vars().iter().cloned().zip(joint.cards().iter().copied()).collect());
    for (st, p) in joint.rows() {
        let ev: Vec<(&str, usize)> = given.iter().copied().zip(st[k..].iter().copied()).collect();
        let den = joint.prob(&ev)?;
        if !den.is_zero() {
            out.add_at(&st, &(p.clone() / den));
        }
    }
    Ok(out)
}

/// Evaluate `e` on the model's observed law and compare with the oracle.
pub fn compare<S: Scalar>(model: &DiscreteNpsem<S>, gf: &GraphFile, qf: &QueryFile, e: &Estimand) -> Result<Comparison<S>> {
    let law = model.observed_law()?;
    let names: Vec<&str> = qf.outcome.iter().chain(&qf.given).map(String::as_str).collect();
    let estimand = evaluate_table(e, &law, &names)?;
    let oracle = oracle_table(model, gf, qf)?;
    let max_abs_diff = estimand
        .probs()
        .iter()
        .zip(oracle.probs())
        .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
        .fold(0.0, f64::max);
    Ok(Comparison { estimand, oracle, max_abs_diff })
}

fn fixture(name: &str) -> HiddenDag {
    paper_graphs().remove(name).expect("registered fixture")
}

/// Identified functionals match their closed forms, in text and by value.
pub fn golden_estimands(seed: u64) -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut r = rng(seed);
    for gd in &GOLDENS {
        let t0 = Instant::now();
        let gf = GraphFile::from(fixture(gd.fixture));
        let res = QueryFile::parse(gd.query).and_then(|qf| {
            let e = qf.identify(&gf)?;
            let text = e.render(Format::Text);
            if text != gd.text {
                return Ok(Some(format!("{}: rendered `{text}`", gd.name)));
            }
            for _ in 0..5 {
                let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut r, gf.hidden_dag()?, 7);
                let c = compare(&m, &gf, &qf, &e)?;
                if !c.agrees(0.0) {
                    return Ok(Some(format!("{}: value differs from oracle by {:e}", gd.name, c.max_abs_diff)));
                }
            }
            Ok(None)
        });
        match res {
            Ok(Some(f)) => fails.push(f),
            Ok(None) => {}
            Err(e) => fails.push(format!("{}: {e}", gd.name)),
        }
        if t0.elapsed() > Duration::from_secs(1) {
            fails.push(format!("{}: took {:.2?}", gd.name, t0.elapsed()));
        }
    }
    Check::finish(1, "golden estimands", Duration::from_secs(5), start, fails, format!("{} closed forms reproduced and oracle-exact", GOLDENS.len()))
}

/// A query expected to fail identification, and the certificate it must give.
pub struct Certificate {
    pub name: &'static str,
    pub fixture: &'static str,
    pub query: &'static str,
    pub kind: &'static str,
    pub vertices: &'static [&'static str],
}

pub const CERTIFICATES: [Certificate; 4] = [
    Certificate {
        name: "hidden_mediator_confounder",
        fixture: "amyl_b",
        query: "pathid-query 1\nkind: path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: A -> Y\nformat: text\n",
        kind: "recanting_district",
        vertices: &["M", "Y"],
    },
    Certificate {
        name: "conditional_on_confounded_covariate",
        fixture: "ex_po_calc_a",
        query: "pathid-query 1\nkind: conditional_path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: A -> Y\ngiven: C\nformat: text\n",
        kind: "recanting_district",
        vertices: &["C", "M", "Y"],
    },
    Certificate {
        name: "recanting_witness",
        fixture: "amyl_a",
        query: "pathid-query 1\nkind: path_specific\noutcome: Y\ntreatment: A active=a:1 baseline=a′:0\npath: A -> Y\npath: A -> L -> Y\nformat: text\n",
        kind: "recanting_witness",
        vertices: &["L"],
    },
    Certificate {
        name: "shared_child_of_components",
        fixture: "anomlpath_c",
        query: "pathid-query 1\nkind: separable\noutcome: Y\ntreatment: N active=x:0\ntreatment: O active=x*:1\npath: all\nformat: text\n",
        kind: "separability_violated",
        vertices: &["L"],
    },
];

fn certificate_of(c: &Certificate) -> Result<NonIdentified> {
    let gf = GraphFile::from(fixture(c.fixture));
    match QueryFile::parse(c.query)?.identify(&gf) {
        Err(Error::NotIdentified(n)) => Ok(n),
        Err(e) => Err(e),
        Ok(e) => Err(Error::InvalidQuery(format!("unexpectedly identified: {}", e.render(Format::Text)))),
    }
}

/// Non-identified queries produce the expected, reproducible certificates.
pub fn certificates() -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    for c in &CERTIFICATES {
        match (certificate_of(c), certificate_of(c)) {
            (Ok(a), Ok(b)) => {
                if a != b {
                    fails.push(format!("{}: nondeterministic certificate", c.name));
                }
                if a.kind() != c.kind || a.vertices() != c.vertices {
                    fails.push(format!("{}: got {} {:?}", c.name, a.kind(), a.vertices()));
                }
            }
            (Err(e), _) | (_, Err(e)) => fails.push(format!("{}: {e}", c.name)),
        }
    }
    Check::finish(2, "non-identification certificates", Duration::from_secs(1), start, fails, format!("{} certificates as expected", CERTIFICATES.len()))
}

/// Every subset of proper causal paths from `a` to `y` that passes the
/// edge-consistency check.
pub fn edge_consistent_queries(g: &crate::Admg, a: usize, y: usize) -> Result<Vec<PseQuery>> {
    let paths = enumerate_proper_causal_paths(g, &VSet::from([a]), &VSet::from([y]))?;
    let mut out = Vec::new();
    for mask in 0u32..(1 << paths.len()) {
        let pi: Vec<Vec<usize>> = (0..paths.len()).filter(|i| mask >> i & 1 == 1).map(|i| paths[i].clone()).collect();
        let q = PseQuery {
            outcome: VSet::from([y]),
            treatments: BTreeMap::from([(a, (Value::new("a", 1), Value::new("a′", 0)))]),
            pi,
            given: VSet::new(),
        };
        match assignment_from_paths(&q, g) {
            Ok(_) => out.push(q),
            Err(Error::EdgeInconsistent { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// The same graph with deterministic edges made ordinary, so random models
/// are positive.
pub fn stochastic(d: &HiddenDag) -> HiddenDag {
    let g = &d.dag;
    let dag = crate::Admg::from_indices(g.vertices().to_vec(), &g.directed_edges().collect::<Vec<_>>(), &[], &[])
        .expect("relaxing copies keeps a valid DAG");
    HiddenDag::new(dag, d.hidden.clone()).expect("still a DAG")
}

fn pse_agrees<S: Scalar>(m: &DiscreteNpsem<S>, q: &PseQuery, e: &Estimand, y: &str, tol: f64) -> Result<bool> {
    let law = m.observed_law()?;
    let est = evaluate_table(e, &law, &[y])?;
    let orc = m.pse_counterfactual(q)?.marginal(&[y])?;
    Ok(est.close_to(&orc, tol))
}

/// Estimands agree with brute-force path-specific counterfactuals on random
/// models over every fully observed fixture.
pub fn oracle_equivalence(seed: u64, models: usize) -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut r = rng(seed);
    let mut checked = 0usize;
    for name in OBSERVED_DAGS {
        let d = stochastic(&fixture(name));
        let g = d.project();
        let (a, y) = (g.id("A").expect("A"), g.id("Y").expect("Y"));
        let queries = match edge_consistent_queries(&g, a, y) {
            Ok(qs) => qs,
            Err(e) => {
                fails.push(format!("{name}: {e}"));
                continue;
            }
        };
        let mut ests = Vec::new();
        for q in &queries {
            match id_path_specific(&g, q) {
                Ok(e) => ests.push(e),
                Err(e) => fails.push(format!("{name}: {e}")),
            }
        }
        if ests.len() != queries.len() {
            continue;
        }
        for k in 0..models {
            let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut r, d.clone(), 7);
            for (q, e) in queries.iter().zip(&ests) {
                checked += 1;
                match pse_agrees(&m, q, e, "Y", 0.0) {
                    Ok(true) => {}
                    Ok(false) => fails.push(format!("{name}: model {k} disagrees on {} paths", q.pi.len())),
                    Err(e) => fails.push(format!("{name}: {e}")),
                }
            }
            // A float pass on a subset exercises the tolerance path.
            if k % 20 == 0 {
                let mf: DiscreteNpsem<f64> = DiscreteNpsem::random(&mut r, d.clone(), 7);
                for (q, e) in queries.iter().zip(&ests) {
                    if !matches!(pse_agrees(&mf, q, e, "Y", 1e-9), Ok(true)) {
                        fails.push(format!("{name}: float model {k} disagrees"));
                    }
                }
            }
        }
    }
    fails.truncate(5);
    Check::finish(3, "oracle equals estimand", Duration::from_secs(120), start, fails, format!("{checked} model-query pairs exact"))
}

fn random_query<R: Rng>(r: &mut R, d: &HiddenDag) -> Option<PseQuery> {
    let g = d.project();
    let a = r.gen_range(0..g.len());
    let reach: Vec<usize> = g.descendants(&VSet::from([a])).into_iter().filter(|&v| v != a).collect();
    if reach.is_empty() {
        return None;
    }
    let y = reach[r.gen_range(0..reach.len())];
    let paths = enumerate_proper_causal_paths(&g, &VSet::from([a]), &VSet::from([y])).ok()?;
    let pi: Vec<Vec<usize>> = paths.into_iter().filter(|_| r.gen_bool(0.5)).collect();
    let card = g.card(a);
    let (x, xp) = (r.gen_range(0..card), r.gen_range(0..card));
    Some(PseQuery {
        outcome: VSet::from([y]),
        treatments: BTreeMap::from([(a, (Value::new("a", x), Value::new("a′", xp)))]),
        pi,
        given: VSet::new(),
    })
}

/// Copy intervention and path recursion agree on every unit.
pub fn unit_level_equality(seed: u64, queries: usize) -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut r = rng(seed);
    let (mut configs, mut done) = (0usize, 0usize);
    for (name, d) in paper_graphs() {
        let mut got = 0;
        let mut tries = 0;
        while got < queries && tries < queries * 20 {
            tries += 1;
            let Some(q) = random_query(&mut r, &d) else { continue };
            let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut r, d.clone(), 5);
            match m.expanded_counterfactual(&q) {
                Ok(rep) => {
                    got += 1;
                    configs += rep.configs;
                    if rep.mismatches > 0 {
                        fails.push(format!("{name}: {} of {} units differ", rep.mismatches, rep.configs));
                    }
                }
                Err(Error::EdgeInconsistent { .. }) => {}
                Err(e) => fails.push(format!("{name}: {e}")),
            }
        }
        if got < queries {
            fails.push(format!("{name}: only {got} edge-consistent queries drawn"));
        }
        done += got;
    }
    fails.truncate(5);
    Check::finish(4, "unit-level path recursion", Duration::from_secs(60), start, fails, format!("{done} queries, {configs} units, zero violations"))
}

/// `ACE = TIE + PDE = TDE + PIE` on random models.
pub fn decomposition(seed: u64, models: usize) -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut r = rng(seed);
    let graphs = ["amyno_a", "amyl_a", "amyl_b"];
    for k in 0..models {
        let name = graphs[k % graphs.len()];
        let m: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut r, fixture(name), 7);
        match contrasts(&m, Triple::default(), 1, 0) {
            Ok(c) => {
                let ok1 = c.ace == c.tie.clone() + c.pde.clone();
                let ok2 = c.ace == c.tde.clone() + c.pie.clone();
                if !(ok1 && ok2) {
                    fails.push(format!("{name} model {k}: ACE {} TIE+PDE {} TDE+PIE {}", c.ace, c.tie.clone() + c.pde, c.tde.clone() + c.pie));
                }
            }
            Err(e) => fails.push(format!("{name}: {e}")),
        }
    }
    fails.truncate(5);
    Check::finish(5, "effect decomposition", Duration::from_secs(30), start, fails, format!("{models} models exact"))
}

/// Everything the River Blindness model is claimed to show.
pub fn river_blindness_suite() -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    if let Err(e) = river_blindness_checks(&mut fails) {
        fails.push(e.to_string());
    }
    Check::finish(6, "River Blindness", Duration::from_secs(30), start, fails, "all four River Blindness claims hold exactly".into())
}

/// `p(Y(a, s) = 1 | M(a) = 1)` with A and S set.
pub fn detectability_term(m: &DiscreteNpsem<Exact>, a: usize, s: usize) -> Result<Exact> {
    m.intervene_named(&[("A", a), ("S", s)], &["M", "Y"])?.conditional(&[("Y", 1)], &[("M", 1)])
}

fn river_blindness_checks(fails: &mut Vec<String>) -> Result<()> {
    let p = RiverBlindnessParams::<Exact>::default();
    let m = river_blindness(&p)?;
    let law = m.observed_law()?;
    // (a) controlled effects equal observed conditionals.
    for a in 0..2 {
        for mv in 0..2 {
            let cf = m.intervene_named(&[("A", a), ("M", mv)], &["Y"])?.prob(&[("Y", 1)])?;
            let obs = law.conditional(&[("Y", 1)], &[("A", a), ("M", mv)])?;
            if cf != obs {
                fails.push(format!("(a) p(Y(a={a},m={mv})=1) = {cf} but p(Y=1|a,m) = {obs}"));
            }
        }
    }
    // (b) perturbation keeps the observed law and shifts the PDE.
    let eps = q(1, 32);
    let pt = perturb(&p, &eps)?;
    let mt = river_blindness(&pt)?;
    if mt.observed_law()? != law {
        fails.push("(b) perturbation changed the observed law".into());
    }
    let pde = contrasts(&m, Triple::default(), 1, 0)?.pde;
    let pde_t = contrasts(&mt, Triple::default(), 1, 0)?.pde;
    let want = p.pde_shift(&eps);
    if pde_t.clone() - pde.clone() != want {
        fails.push(format!("(b) PDE shift {} expected {want}", pde_t - pde.clone()));
    }
    let formula = mediation_formula(&law, Triple::default(), 1, 0)?;
    if formula == pde {
        fails.push(format!("(b) PDE {pde} coincides with the mediation formula"));
    }
    // (c) detectability with and without U acting on Y.
    let (l0, l1) = (detectability_term(&m, 0, 1)?, detectability_term(&m, 1, 1)?);
    if l0 == l1 {
        fails.push(format!("(c) both detectability terms equal {l0}"));
    }
    let mut flat = p.clone();
    flat.theta_y_m1s1_u1 = flat.theta_y_m1s1_u0.clone();
    let mf = river_blindness(&flat)?;
    let (f0, f1) = (detectability_term(&mf, 0, 1)?, detectability_term(&mf, 1, 1)?);
    if f0 != f1 {
        fails.push(format!("(c) terms differ without U acting on Y: {f0} vs {f1}"));
    }
    // (d) the mediator-path counterfactual equals the cross-arm formula.
    let proj = m.projection();
    let qd = PseQuery::named(&proj, &["Y"], &[("A", Value::new("a", 1), Value::new("a′", 0))], &[&["A", "M", "Y"]], &[])?;
    let orc = m.pse_counterfactual(&qd)?.prob(&[("Y", 1)])?;
    let mut chain = q(0, 1);
    for mv in 0..2 {
        chain += law.conditional(&[("Y", 1)], &[("M", mv), ("A", 0)])? * law.conditional(&[("M", mv)], &[("A", 1)])?;
    }
    // The same quantity as a nested counterfactual on the full graph.
    let g = &m.graph().dag;
    let nested = m.nested(g.id("A")?, 0, g.id("M")?, 1, g.id("Y")?)?.prob(&[("Y", 1)])?;
    if orc != chain || nested != chain {
        fails.push(format!("(d) path oracle {orc}, nested oracle {nested}, closed form {chain}"));
    }
    Ok(())
}

/// Grid values `p(M = 0 | a′)`, `p(Y = 1 | a, M = 0)`, `p(Y = 1 | a, M = 1)`.
pub fn bounds_grid() -> Vec<(Exact, [Exact; 2])> {
    let mut out = Vec::new();
    for p0 in 1..8 {
        for r0 in 0..=8 {
            for r1 in 0..=8 {
                out.push((q(p0, 8), [q(r0, 8), q(r1, 8)]));
            }
        }
    }
    out
}

/// A binary law over A, M, Y with the given grid coordinates (`a = 1`,
/// `a′ = 0`) and fixed values elsewhere.
pub fn grid_law(p0: &Exact, r: &[Exact; 2]) -> JointTable<Exact> {
    let pa = [q(1, 2), q(1, 2)];
    let pm1 = [q(1, 1) - p0.clone(), q(3, 8)];
    let py1 = [[q(5, 8), q(1, 4)], [r[0].clone(), r[1].clone()]];
    let mut probs = Vec::new();
    for a in 0..2 {
        for mv in 0..2 {
            let pm = if mv == 1 { pm1[a].clone() } else { q(1, 1) - pm1[a].clone() };
            for y in 0..2 {
                let py = if y == 1 { py1[a][mv].clone() } else { q(1, 1) - py1[a][mv].clone() };
                probs.push(pa[a].clone() * pm.clone() * py);
            }
        }
    }
    JointTable::new(vec![("A".into(), 2), ("M".into(), 2), ("Y".into(), 2)], probs).expect("normalized grid law")
}

/// Bounds contain every response-model PDE and both ends are attained.
pub fn pde_bounds_grid() -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let v = Triple::default();
    let grid = bounds_grid();
    let mut models = 0usize;
    for (p0, r) in &grid {
        let t = grid_law(p0, r);
        let res = (|| -> Result<Option<String>> {
            let b = pde_bounds(&t, v, 1, 0)?;
            let (mut lo, mut hi): (Option<Exact>, Option<Exact>) = (None, None);
            for cells in response_vertices(p0, r) {
                let m = response_model(&t, v, &cells)?;
                models += 1;
                if m.observed_law()? != t {
                    return Ok(Some("response model does not reproduce the law".into()));
                }
                let pde = response_pde(&m, v)?;
                if pde < b.lower || pde > b.upper {
                    return Ok(Some(format!("PDE {pde} outside [{}, {}]", b.lower, b.upper)));
                }
                lo = Some(lo.map_or(pde.clone(), |x| if pde < x { pde.clone() } else { x }));
                hi = Some(hi.map_or(pde.clone(), |x| if pde > x { pde.clone() } else { x }));
            }
            if lo.as_ref() != Some(&b.lower) || hi.as_ref() != Some(&b.upper) {
                return Ok(Some(format!("attained [{lo:?}, {hi:?}] vs bounds [{}, {}]", b.lower, b.upper)));
            }
            Ok(None)
        })();
        match res {
            Ok(Some(f)) => fails.push(format!("p0={p0} r={r:?}: {f}")),
            Ok(None) => {}
            Err(e) => fails.push(format!("p0={p0}: {e}")),
        }
    }
    fails.truncate(5);
    Check::finish(7, "PDE bounds", Duration::from_secs(300), start, fails, format!("{} grid laws, {models} response models, both ends attained", grid.len()))
}

/// Mixed-arm reconstruction holds with separated components and fails
/// when both components reach the mediator and the outcome.
pub fn four_arm_reconstruction(seed: u64, models: usize) -> Check {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut r = rng(seed);
    let mut mismatched = 0;
    for k in 0..models {
        let res = (|| -> Result<()> {
            let good: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut r, fixture("amyno_c"), 7);
            let g = &good.graph().dag;
            let ids = [g.id("N")?, g.id("O")?, g.id("M")?, g.id("Y")?];
            for x in 0..2 {
                let fa = good.four_arm(ids[0], ids[1], ids[2], ids[3], x)?;
                if !(fa.matches && fa.mediator_condition && fa.outcome_condition) {
                    fails.push(format!("model {k}, x={x}: separated components fail to reconstruct"));
                }
                let direct = good.intervene_named(&[("A", x)], &["M", "Y"])?;
                if fa.arms[&(x, x)] != direct {
                    fails.push(format!("model {k}: arm ({x},{x}) differs from do(A={x})"));
                }
            }
            let bad: DiscreteNpsem<Exact> = DiscreteNpsem::random(&mut r, fixture("amyno_b"), 7);
            let g = &bad.graph().dag;
            let fa = bad.four_arm(g.id("N")?, g.id("O")?, g.id("M")?, g.id("Y")?, 0)?;
            if !fa.matches {
                mismatched += 1;
            }
            Ok(())
        })();
        if let Err(e) = res {
            fails.push(e.to_string());
        }
    }
    if mismatched == 0 {
        fails.push("no mismatch detected when both components reach M and Y".into());
    }
    fails.truncate(5);
    Check::finish(8, "two-arm to four-arm", Duration::from_secs(30), start, fails, format!("{models} separated models exact; {mismatched}/{models} entangled models mismatch"))
}

/// Criteria 1 through 8 with the default seeds and sizes.
pub fn run_library_checks() -> Vec<Check> {
    vec![
        golden_estimands(11),
        certificates(),
        oracle_equivalence(13, 200),
        unit_level_equality(17, 50),
        decomposition(19, 100),
        river_blindness_suite(),
        pde_bounds_grid(),
        four_arm_reconstruction(23, 20),
    ]
}

/// Markdown table of results.
pub fn markdown_report(checks: &[Check]) -> String {
    let mut s = String::from("# Reproduction report\n\n| # | check | status | time (s) | budget (s) | detail |\n|---|---|---|---|---|---|\n");
    for c in checks {
        s.push_str(&format!(
            "| {} | {} | {} | {:.2} | {} | {} |\n",
            c.id,
            c.title,
            c.status(),
            c.elapsed.as_secs_f64(),
            c.budget.as_secs(),
            c.detail.replace('|', "\\|")
        ));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    s.push_str(&format!("\n{passed}/{} checks passed.\n", checks.len()));
    s
}
