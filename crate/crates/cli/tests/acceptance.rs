//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use edgemargin::dynamics::{classify, simulate, OutcomeKind, SimOptions};
use edgemargin::factorization::{similarity_check_edge, similarity_check_graph};
use edgemargin::generate::{random_cycle, random_cyclic, random_dag, random_with_in_branching};
use edgemargin::graph::{structure_report, GraphClass};
use edgemargin::numerics::spectral_radius;
use edgemargin::robustness::{cycle_bound, dag_formula_value, gain_margin, sherman_morrison_inverse};
use edgemargin::{Analyzer, Digraph};
use edgemargin_cli::{parse_edge_list, to_edge_list};
use edgemargin_testkit::{critical_delta, inverse_row_major, RawEdge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const WEIGHTS: std::ops::Range<f64> = 0.1..3.0;

fn raw(g: &Digraph) -> Vec<RawEdge> {
    g.edges().iter().map(|e| (e.tail, e.head, e.weight)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn closed_forms_against_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_closed = 0.0f64;
    let mut counts = [0usize; 3];
    for i in 0..200 {
        let n = rng.gen_range(3..=8);
        let g = match i % 4 {
            0 => random_dag(&mut rng, n, 16, WEIGHTS),
            1 => random_cycle(&mut rng, n, WEIGHTS),
            2 => random_cyclic(&mut rng, n, 16, WEIGHTS),
            _ => random_with_in_branching(&mut rng, n, 16, WEIGHTS),
        };
        let e = rng.gen_range(0..g.m());
        let an = Analyzer::new(&g).map_err(|e| e.to_string())?;
        let b = an.bound(e).map_err(|e| e.to_string())?;
        let star = critical_delta(g.n(), &raw(&g), e);
        match an.class() {
            GraphClass::Dag | GraphClass::SimpleCycle => {
                counts[(an.class() == GraphClass::SimpleCycle) as usize] += 1;
                let err = rel(b.primary.delta_min, star);
                worst_closed = worst_closed.max(err);
                ensure(err <= 1e-4, || format!("graph {i}: closed form {} vs oracle {star}", b.primary.delta_min))?;
            }
            _ => counts[2] += 1,
        }
        let certified = b.nyquist().delta_min;
        ensure(certified >= star - 1e-9 * star.abs(), || {
            format!("graph {i}: gain margin certifies {certified} beyond oracle {star}")
        })?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "{} DAG, {} cycle, {} general graphs; worst closed-form error {worst_closed:.1e}; {took:.2?}",
        counts[0], counts[1], counts[2]
    ))
}

fn dag_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = rng.gen_range(3..=8);
        let g = random_dag(&mut rng, n, 16, WEIGHTS);
        let an = Analyzer::new(&g).map_err(|e| e.to_string())?;
        for e in 0..g.m() {
            let value = dag_formula_value(an.factorization(), an.decomposition().position(e)).map_err(|e| e.to_string())?;
            let sum: f64 = g.edges().iter().filter(|x| x.tail == g.edges()[e].tail).map(|x| x.weight).sum();
            let err = rel(1.0 / value.abs(), sum);
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("DAG {i} edge {e}: {} vs {sum}", 1.0 / value.abs()))?;
        }
    }
    Ok(format!("100 DAGs, every edge; worst relative gap {worst:.1e}"))
}

fn cycle_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut worst_form, mut worst_gm) = (0.0f64, 0.0f64);
    let mut cases = 0;
    for n in 3..=10 {
        for _ in 0..10 {
            let g = random_cycle(&mut rng, n, WEIGHTS);
            let an = Analyzer::new(&g).map_err(|e| e.to_string())?;
            for j in 0..g.m() {
                let w_j = g.edges()[j].weight;
                let conductance: f64 = g.edges().iter().enumerate().filter(|(i, _)| *i != j).map(|(_, e)| 1.0 / e.weight).sum();
                let expected = -w_j - 1.0 / conductance;
                let b = cycle_bound(&g, an.reachability(), j).map_err(|e| e.to_string())?;
                let gm = gain_margin(&an.uncertain_system(j).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                worst_form = worst_form.max(rel(b.delta_min, expected));
                worst_gm = worst_gm.max(rel(gm.gm, -expected));
                ensure(rel(b.delta_min, expected) <= 1e-9, || format!("n={n} edge {j}: {} vs {expected}", b.delta_min))?;
                ensure(rel(gm.gm, -expected) <= 1e-6, || format!("n={n} edge {j}: GM {} vs {}", gm.gm, -expected))?;
                ensure(gm.omega_pc == Some(0.0), || format!("n={n} edge {j}: crossover at {:?}", gm.omega_pc))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (cycle, edge) pairs, n = 3..10; worst closed form {worst_form:.1e}, worst GM {worst_gm:.1e}"))
}

fn rank_one_recursion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    let mut updates = 0;
    for i in 0..100 {
        let n = rng.gen_range(3..=8);
        let g = random_dag(&mut rng, n, 16, WEIGHTS);
        let an = Analyzer::new(&g).map_err(|e| e.to_string())?;
        let fac = an.factorization();
        let sm = sherman_morrison_inverse(fac, &fac.weights).map_err(|e| e.to_string())?;
        let k = fac.n() - 1;
        let mut wrt = fac.r.transpose();
        for (row, w) in fac.weights.iter().enumerate() {
            for col in 0..k {
                wrt[(row, col)] *= w;
            }
        }
        let core = fac.r_tilde.as_ref().expect("single root") * &wrt;
        let direct = inverse_row_major(k, core.as_slice()).ok_or("reference inverse failed")?;
        let scale = direct.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let diff = sm.inverse.as_slice().iter().zip(&direct).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        worst = worst.max(diff);
        ensure(diff <= 1e-10, || format!("DAG {i}: recursion differs by {diff:e}"))?;
        let mut siblings = BTreeSet::new();
        for step in &sm.steps {
            siblings.insert(step.sibling_row.ok_or("complement edge without sibling")?);
            ensure(step.changed_rows.iter().all(|r| siblings.contains(r)), || {
                format!("DAG {i}: step for edge {} changed rows {:?}, siblings {siblings:?}", step.c_edge, step.changed_rows)
            })?;
            updates += 1;
        }
    }
    Ok(format!("100 DAGs, {updates} rank-one updates; worst relative gap {worst:.1e}; row pattern holds"))
}

fn structure_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut graphs = 0;
    let mut worst = 0.0f64;
    for family in 0..4 {
        for i in 0..100 {
            let n = rng.gen_range(3..=8);
            let g = match family {
                0 => random_dag(&mut rng, n, 16, WEIGHTS),
                1 => random_cycle(&mut rng, n, WEIGHTS),
                2 => random_cyclic(&mut rng, n, 16, WEIGHTS),
                _ => random_with_in_branching(&mut rng, n, 16, WEIGHTS),
            };
            let rep = structure_report(&g).map_err(|e| e.to_string())?;
            if let Some(c) = rep.checks.iter().find(|c| c.satisfied == Some(false)) {
                return Err(format!("family {family} graph {i}: `{}` failed", c.relation));
            }
            let an = Analyzer::new(&g).map_err(|e| e.to_string())?;
            let (dec, fac) = (an.decomposition(), an.factorization());
            let gs = similarity_check_graph(&g, dec, fac).map_err(|e| e.to_string())?;
            let es = similarity_check_edge(&g, dec, fac).map_err(|e| e.to_string())?;
            let mut residuals = vec![
                gs.upper_right,
                gs.inverse_residual,
                gs.reduced_block,
                es.lower_block,
                es.inverse_residual,
                es.reduced_block,
                es.coupling_block,
            ];
            residuals.extend([gs.single_root_form, es.single_root_form, es.edge_to_graph].into_iter().flatten());
            for c in [&gs.cycle, &es.cycle].into_iter().flatten() {
                residuals.extend([c.off_diagonal, c.inverse_residual, c.reduced_block]);
            }
            if family == 1 {
                ensure(gs.cycle.is_some() && es.edge_to_graph.is_some(), || "cycle similarity missing".into())?;
            }
            let r = residuals.iter().cloned().fold(0.0, f64::max);
            worst = worst.max(r);
            ensure(r <= 1e-9, || format!("family {family} graph {i}: similarity residual {r:e}"))?;
            graphs += 1;
        }
    }
    Ok(format!("{graphs} graphs (DAG, cycle, cyclic, mixed); all relations hold; worst similarity residual {worst:.1e}"))
}

fn three_regimes() -> Outcome {
    let text = std::fs::read_to_string(data("sample_dag.txt")).map_err(|e| e.to_string())?;
    let g = parse_edge_list(&text).map_err(|e| e.to_string())?;
    let node = |l: &str| (0..g.n()).find(|&v| g.label(v) == l).unwrap();
    let e = g.edge_between(node("6"), node("11")).ok_or("edge 6 -> 11 missing")?;
    ensure(g.edges()[e].weight == 0.10, || "nominal weight is not 0.10".into())?;
    let b = Analyzer::new(&g).and_then(|a| a.bound(e)).map_err(|e| e.to_string())?;
    ensure((b.primary.delta_min + 0.70).abs() < 1e-12, || format!("bound {}", b.primary.delta_min))?;

    // initial states listed by label 1..11
    let by_label = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, -4.0, -5.0, -2.0, 0.0, 3.0];
    let x0: Vec<f64> = (0..g.n()).map(|v| by_label[g.label(v).parse::<usize>().unwrap() - 1]).collect();
    let mut parts = Vec::new();
    for (delta, want) in [(-0.5, OutcomeKind::Consensus), (-0.7, OutcomeKind::Clustering), (-1.0, OutcomeKind::Divergence)] {
        let start = Instant::now();
        let p = Some((e, delta));
        let traj = simulate(&g, &x0, p, SimOptions::default()).map_err(|e| e.to_string())?;
        let out = classify(&traj, &g, p).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        ensure(out.kind == want, || format!("delta {delta}: {:?}, expected {want:?}", out.kind))?;
        ensure(out.agrees_with_spectrum == Some(true), || format!("delta {delta}: spectrum disagrees"))?;
        ensure(took < Duration::from_secs(1), || format!("delta {delta} took {took:?}"))?;
        let detail = match out.kind {
            OutcomeKind::Clustering => format!(" ({} clusters)", out.cluster_count.unwrap_or(0)),
            _ => String::new(),
        };
        parts.push(format!("{delta}: {want:?}{detail} in {took:.0?}"));
    }
    Ok(format!("weight 0.10, bound -0.70; {}", parts.join(", ")))
}

fn node_edge_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = rng.gen_range(3..=8);
        let g = match i % 3 {
            0 => random_dag(&mut rng, n, 16, WEIGHTS),
            1 => random_cyclic(&mut rng, n, 16, WEIGHTS),
            _ => random_with_in_branching(&mut rng, n, 16, WEIGHTS),
        };
        let e = rng.gen_range(0..g.m());
        let delta = critical_delta(g.n(), &raw(&g), e) * rng.gen_range(0.0..0.8);
        let x0: Vec<f64> = (0..g.n()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let rho = spectral_radius(&g.laplacian_with_weights(&g.weights())).map_err(|e| e.to_string())?;
        let opts = SimOptions { dt: Some(1e-2 / rho), ..Default::default() };
        let p = Some((e, delta));
        let traj = simulate(&g, &x0, p, opts).map_err(|e| e.to_string())?;
        let out = classify(&traj, &g, p).map_err(|e| e.to_string())?;
        ensure(out.kind == OutcomeKind::Consensus, || format!("simulation {i} did not converge"))?;
        let c = traj.edge_consistency.ok_or("no in-branching")?;
        worst = worst.max(c);
        ensure(c <= 1e-6, || format!("simulation {i}: gap {c:e}"))?;
    }
    Ok(format!("20 convergent simulations; worst gap {worst:.1e}"))
}

fn cli_contract() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_edgemargin");
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for _ in 0..50 {
        let n = rng.gen_range(2..=10);
        let g = random_with_in_branching(&mut rng, n, 20, 1e-3..1e3);
        let back = parse_edge_list(&to_edge_list(&g)).map_err(|e| e.to_string())?;
        let same = g.edges().iter().zip(back.edges()).all(|(a, b)| {
            g.label(a.tail) == back.label(b.tail) && g.label(a.head) == back.label(b.head) && a.weight == b.weight
        });
        ensure(same && g.m() == back.m(), || "round trip changed the graph".into())?;
    }
    let sample = std::fs::read_to_string(data("sample_dag.txt")).map_err(|e| e.to_string())?;
    let parsed = parse_edge_list(&sample).map_err(|e| e.to_string())?;
    ensure(parse_edge_list(&to_edge_list(&parsed)).as_ref() == Ok(&parsed), || "sample file round trip".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let cases = [
        (vec!["analyze".to_string(), data("unit_cycle.txt").display().to_string()], 0),
        (vec!["analyze".into(), write("dup.txt", "a b 1\na b 2\n")], 1),
        (vec!["analyze".into(), write("loop.txt", "a a 1\n")], 1),
        (vec!["analyze".into(), "--bogus".into()], 1),
        (vec!["analyze".into(), write("split.txt", "a b 1\nc d 1\n")], 2),
        (vec!["analyze".into(), write("huge.txt", "a b 1e308\nb a 1e308\n")], 3),
    ];
    for (args, code) in &cases {
        let got = Command::new(bin).args(args).output().map_err(|e| e.to_string())?.status.code();
        ensure(got == Some(*code), || format!("{args:?}: exit {got:?}, expected {code}"))?;
    }

    let mut worst = 0.0f64;
    for (file, tail, head) in [("unit_cycle.txt", "a", "b"), ("sample_dag.txt", "6", "11")] {
        let csv = dir.path().join(format!("{file}.csv"));
        let out = Command::new(bin)
            .args(["nyquist", data(file).to_str().unwrap(), "--edge", tail, head, "--out", csv.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("nyquist on {file} failed"))?;
        let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
        ensure(text.starts_with("omega,re,im\n"), || "bad CSV header".into())?;
        let closest = text
            .lines()
            .skip(1)
            .map(|l| {
                let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
                ((v[1] + 1.0).powi(2) + v[2].powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(closest);
        ensure(closest <= 1e-6, || format!("{file}: locus stays {closest:e} from (-1, 0)"))?;
    }
    Ok(format!(
        "round trip exact on 51 graphs; exit codes 0/1/2/3 as documented; locus within {worst:.1e} of (-1, 0)"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("closed forms and gain margin against the eigenvalue oracle", closed_forms_against_oracle),
        ("acyclic closed form equals the parent out-weight sum", dag_identity),
        ("cycle closed form and gain margin at zero frequency", cycle_identity),
        ("rank-one recursion equals the direct inverse", rank_one_recursion),
        ("structural relations and similarity residuals", structure_suite),
        ("three regimes on the sample DAG", three_regimes),
        ("node and edge pictures agree during simulation", node_edge_consistency),
        ("command-line contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let res = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
