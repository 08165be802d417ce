use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use edgemargin::dynamics::{classify_with_gap, nyquist_samples, simulate, SimOptions};
use edgemargin::generate::{random_cycle, random_dag, random_with_in_branching};
use edgemargin::graph::structure_report;
use edgemargin::numerics::inverse;
use edgemargin::robustness::{sherman_morrison_inverse, Method};
use edgemargin::{Analyzer, ComplexValue, Digraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{Command, GraphArgs};
use crate::edgelist::parse_edge_list;
use crate::error::CliError;
use crate::report::*;

pub const SEED_ENV: &str = "EDGEMARGIN_SEED";

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types always serialize") + "\n"
}

fn load(path: &Path) -> Result<Digraph, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_edge_list(&text)?)
}

fn node(g: &Digraph, label: &str) -> Result<usize, CliError> {
    (0..g.n())
        .find(|&v| g.label(v) == label)
        .ok_or_else(|| CliError::Usage(format!("no node labelled `{label}`")))
}

fn edge_id(g: &Digraph, pair: &[String]) -> Result<usize, CliError> {
    let (t, h) = (node(g, &pair[0])?, node(g, &pair[1])?);
    g.edge_between(t, h)
        .ok_or_else(|| CliError::Usage(format!("no edge `{}` -> `{}`", pair[0], pair[1])))
}

fn analyzer<'g>(g: &'g Digraph, args: &GraphArgs) -> Result<Analyzer<'g>, CliError> {
    let root = args.root.as_deref().map(|l| node(g, l)).transpose()?;
    Ok(Analyzer::with_root(g, root)?)
}

fn summary(an: &Analyzer) -> GraphSummary {
    let g = an.graph();
    GraphSummary {
        n: g.n(),
        m: g.m(),
        class: an.class(),
        root: g.label(an.decomposition().root),
        globally_reachable: an.reachability().globally_reachable.iter().map(|&v| g.label(v)).collect(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Runs a command and returns what it prints on stdout.
pub fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::Analyze { graph } => analyze(&graph),
        Command::Bound { graph, edge } => {
            let g = load(&graph.file)?;
            let an = analyzer(&g, &graph)?;
            let b = an.bound(edge_id(&g, &edge)?)?;
            Ok(json(&EdgeReport::new(&g, &b)))
        }
        Command::Rank { graph } => {
            let g = load(&graph.file)?;
            let an = analyzer(&g, &graph)?;
            let ranking = an
                .rank()?
                .iter()
                .enumerate()
                .map(|(i, b)| RankedEdge {
                    rank: i + 1,
                    edge: EdgeReport::new(&g, b),
                })
                .collect();
            Ok(json(&RankReport {
                graph: summary(&an),
                ranking,
            }))
        }
        Command::Simulate {
            graph,
            edge,
            delta,
            x0,
            t_end,
            dt,
            cluster_gap,
            out,
        } => {
            let g = load(&graph.file)?;
            let perturbation = match &edge {
                Some(pair) => Some((edge_id(&g, pair)?, delta)),
                None if delta != 0.0 => return Err(CliError::Usage("--delta needs --edge".into())),
                None => None,
            };
            let x0 = initial_state(&x0, g.n())?;
            let traj = simulate(&g, &x0, perturbation, SimOptions { dt, t_end, max_samples: None })?;
            let outcome = classify_with_gap(&traj, &g, perturbation, cluster_gap)?;
            if let Some(path) = &out {
                write_file(path, &trajectory_csv(&traj))?;
            }
            Ok(json(&SimulationReport {
                edge: edge.map(|p| EdgeRef {
                    tail: p[0].clone(),
                    head: p[1].clone(),
                }),
                delta,
                dt: traj.dt,
                t_end: traj.t_end,
                samples: traj.times.len(),
                diverged: traj.diverged,
                final_spread: *traj.spread.last().unwrap_or(&0.0),
                edge_consistency: traj.edge_consistency,
                outcome,
                trajectory_csv: out.map(|p| p.display().to_string()),
            }))
        }
        Command::Nyquist {
            graph,
            edge,
            delta,
            points,
            out,
        } => {
            let g = load(&graph.file)?;
            let an = analyzer(&g, &graph)?;
            let id = edge_id(&g, &edge)?;
            let bound = an.bound(id)?;
            let delta = match delta {
                Some(d) => d,
                None if bound.primary.delta_min.is_finite() => bound.primary.delta_min,
                None => return Err(CliError::Usage("edge has no finite lower bound; pass --delta".into())),
            };
            let sys = an.uncertain_system(id)?;
            let samples = nyquist_samples(&sys, delta, points)?;
            let mut csv = String::from("omega,re,im\n");
            for s in &samples {
                let _ = writeln!(csv, "{},{},{}", s.omega, s.value.re, s.value.im);
            }
            let critical = ComplexValue::new(-1.0, 0.0);
            let closest = samples
                .iter()
                .map(|s| ClosestApproach {
                    omega: s.omega,
                    distance: (s.value - critical).norm(),
                })
                .min_by(|a, b| a.distance.total_cmp(&b.distance))
                .expect("at least two samples");
            let ny = bound.nyquist();
            match out {
                Some(path) => {
                    write_file(&path, &csv)?;
                    Ok(json(&NyquistReport {
                        edge: EdgeRef {
                            tail: edge[0].clone(),
                            head: edge[1].clone(),
                        },
                        delta,
                        samples: samples.len(),
                        gain_margin: ny.delta_max,
                        omega_pc: ny.crossover_freq,
                        closest_approach: closest,
                        csv: Some(path.display().to_string()),
                    }))
                }
                None => Ok(csv),
            }
        }
        Command::Selftest { cases } => selftest(cases),
    }
}

fn analyze(args: &GraphArgs) -> Result<String, CliError> {
    let g = load(&args.file)?;
    let an = analyzer(&g, args)?;
    let edges = (0..g.m())
        .map(|e| an.bound(e).map(|b| EdgeReport::new(&g, &b)))
        .collect::<Result<Vec<_>, _>>()?;
    let structure = structure_report(&g)?;
    let mut warnings = Vec::new();
    if !structure.all_satisfied() {
        warnings.push("some structural relations failed their numerical check".to_string());
    }
    if edges.iter().all(|e| e.bound.method == Method::NyquistGm) {
        warnings.push(
            "no closed form applies; bounds are gain-margin certificates and may be conservative".to_string(),
        );
    } else {
        warnings.push(
            "closed-form bounds are exact; positive perturbations beyond the gain margin are uncertified by it but stable"
                .to_string(),
        );
    }
    Ok(json(&AnalysisReport {
        graph: summary(&an),
        edges,
        structure_checks: structure.checks,
        warnings,
    }))
}

pub fn initial_state(spec: &str, n: usize) -> Result<Vec<f64>, CliError> {
    if spec == "spread" {
        let mid = (n as f64 - 1.0) / 2.0;
        return Ok((0..n).map(|i| i as f64 - mid).collect());
    }
    let values = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad initial value `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(CliError::Usage(format!("--x0 has {} values for {n} nodes", values.len())));
    }
    Ok(values)
}

pub fn trajectory_csv(traj: &edgemargin::dynamics::Trajectory) -> String {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",spread\n");
    for ((t, x), s) in traj.times.iter().zip(&traj.states).zip(&traj.spread) {
        let _ = write!(out, "{t}");
        for v in x {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{s}");
    }
    out
}

fn seed_from_env() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

fn selftest(cases: usize) -> Result<String, CliError> {
    let seed = seed_from_env()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut check = |ok: bool, what: String| {
        checks += 1;
        if !ok {
            failures.push(what);
        }
    };

    for case in 0..cases {
        let n = rng.gen_range(3..=8);
        let graphs = [
            random_dag(&mut rng, n, 16, 0.1..3.0),
            random_cycle(&mut rng, n, 0.1..3.0),
            random_with_in_branching(&mut rng, n, 16, 0.1..3.0),
        ];
        for (kind, g) in ["dag", "cycle", "general"].iter().zip(&graphs) {
            let an = Analyzer::new(g)?;
            let rep = structure_report(g)?;
            check(rep.all_satisfied(), format!("case {case} {kind}: structural relations"));
            let fac = an.factorization();
            check(fac.incidence_residual() < 1e-12, format!("case {case} {kind}: incidence factor"));
            for e in 0..g.m() {
                let b = an.bound(e)?;
                let ny = b.nyquist();
                if b.has_closed_form() {
                    let rel = (ny.delta_max + b.primary.delta_min).abs() / b.primary.delta_min.abs();
                    check(rel < 1e-6, format!("case {case} {kind} edge {e}: gain margin vs closed form"));
                }
            }
            if *kind == "dag" {
                let sm = sherman_morrison_inverse(fac, &fac.weights)?;
                let rt = fac.r_tilde.as_ref().expect("single root");
                let mut wrt = fac.r.transpose();
                for (i, w) in fac.weights.iter().enumerate() {
                    for j in 0..wrt.cols() {
                        wrt[(i, j)] *= w;
                    }
                }
                let direct = inverse(&(rt * &wrt))?;
                let diff = sm.inverse.sub(&direct)?.max_abs();
                check(diff <= 1e-10 * direct.max_abs().max(1.0), format!("case {case}: rank-one recursion"));
            }
        }
    }
    let report = SelftestReport {
        seed,
        graphs: 3 * cases,
        checks,
        failures,
    };
    if report.failures.is_empty() {
        Ok(json(&report))
    } else {
        Err(CliError::SelfCheck(report.failures.join("; ")))
    }
}
