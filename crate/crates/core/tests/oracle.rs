mod common;

use common::{cycle, cyclic, dag, general, raw, rel_err, rng};
use edgemargin::robustness::Method;
use edgemargin::{bound_for_edge, rank_edges, Analyzer, Digraph};
use edgemargin_testkit::{critical_delta, stable_with};
use rand::Rng;

#[test]
fn dag_closed_form_matches_oracle() {
    let mut r = rng(11);
    for _ in 0..60 {
        let g = dag(&mut r);
        let e = r.gen_range(0..g.m());
        let b = bound_for_edge(&g, e).unwrap();
        assert_eq!(b.primary.method, Method::DagClosedForm);
        let star = critical_delta(g.n(), &raw(&g), e);
        assert!(rel_err(b.primary.delta_min, star) < 1e-6, "{} vs {star}", b.primary.delta_min);
    }
}

#[test]
fn cycle_closed_form_matches_oracle() {
    let mut r = rng(12);
    for _ in 0..40 {
        let g = cycle(&mut r);
        let e = r.gen_range(0..g.m());
        let b = bound_for_edge(&g, e).unwrap();
        assert_eq!(b.primary.method, Method::CycleClosedForm);
        let star = critical_delta(g.n(), &raw(&g), e);
        assert!(rel_err(b.primary.delta_min, star) < 1e-6, "{} vs {star}", b.primary.delta_min);
    }
}

#[test]
fn homogeneous_cycle_formula() {
    for n in 3..=8 {
        let w = 1.7;
        let g = Digraph::new(n, (0..n).map(|i| (i, (i + 1) % n, w))).unwrap();
        let expected = -w * n as f64 / (n - 1) as f64;
        let star = critical_delta(n, &raw(&g), 0);
        assert!(rel_err(star, expected) < 1e-8);
        let b = bound_for_edge(&g, 0).unwrap();
        assert!(rel_err(b.primary.delta_min, expected) < 1e-12);
    }
}

#[test]
fn gain_margin_never_certifies_past_oracle() {
    let mut r = rng(13);
    for i in 0..80 {
        let g = if i % 2 == 0 { general(&mut r) } else { cyclic(&mut r) };
        let e = r.gen_range(0..g.m());
        let b = bound_for_edge(&g, e).unwrap();
        let star = critical_delta(g.n(), &raw(&g), e);
        let certified = b.nyquist().delta_min;
        assert!(certified >= star - 1e-6 * star.abs(), "-GM {certified} beyond oracle {star}");
    }
}

#[test]
fn three_node_sibling_dag() {
    let g = Digraph::new(3, [(0, 2, 2.0), (0, 1, 3.0), (1, 2, 1.0)]).unwrap();
    let star = critical_delta(3, &raw(&g), 0);
    assert!(rel_err(star, -5.0) < 1e-8);
    assert!(rel_err(bound_for_edge(&g, 0).unwrap().primary.delta_min, -5.0) < 1e-12);
}

#[test]
fn most_vulnerable_edge_has_smallest_critical_value() {
    let mut r = rng(14);
    for i in 0..30 {
        let g = match i % 3 {
            0 => dag(&mut r),
            1 => cycle(&mut r),
            _ => general(&mut r),
        };
        let ranked = rank_edges(&g).unwrap();
        assert_eq!(ranked.len(), g.m());
        if !ranked[0].has_closed_form() {
            continue;
        }
        let criticals: Vec<f64> = (0..g.m()).map(|e| critical_delta(g.n(), &raw(&g), e)).collect();
        let least = criticals.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
        assert!((criticals[ranked[0].edge].abs() - least).abs() <= 1e-6 * least);
    }
}

#[test]
fn gain_margin_is_root_independent() {
    let mut r = rng(15);
    let mut multi_root_graphs = 0;
    for _ in 0..60 {
        let g = cyclic(&mut r);
        let roots = edgemargin::reachability(&g).globally_reachable;
        if roots.len() < 2 {
            continue;
        }
        multi_root_graphs += 1;
        let e = r.gen_range(0..g.m());
        let gms: Vec<f64> = roots
            .iter()
            .map(|&root| Analyzer::with_root(&g, Some(root)).unwrap().nyquist_bound(e).unwrap().delta_max)
            .collect();
        for gm in &gms[1..] {
            if gms[0].is_infinite() {
                assert!(gm.is_infinite());
            } else {
                assert!(rel_err(*gm, gms[0]) < 1e-7, "{gms:?}");
            }
        }
    }
    assert!(multi_root_graphs > 5);
}

#[test]
fn symmetric_interval_is_stable() {
    let mut r = rng(16);
    for i in 0..40 {
        let g = if i % 2 == 0 { general(&mut r) } else { dag(&mut r) };
        let e = r.gen_range(0..g.m());
        let gm = bound_for_edge(&g, e).unwrap().nyquist().delta_max;
        let reach = if gm.is_finite() { gm } else { 10.0 };
        for _ in 0..20 {
            let d = r.gen_range(-0.999..0.999) * reach;
            assert!(stable_with(g.n(), &raw(&g), e, d), "delta {d} inside +-{gm}");
        }
    }
}
