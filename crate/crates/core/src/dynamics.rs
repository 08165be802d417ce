//! Time-domain simulation of perturbed consensus and regime classification.

use serde::Serialize;

use crate::factorization::{factorize, Factorization};
use crate::graph::{find_in_branching, reachability, Digraph};
use crate::numerics::{eigenvalues, spectral_radius, ComplexValue};
use crate::robustness::{eval_transfer, gain_margin, log_grid, UncertainEdgeSystem};
use crate::{Error, Result};

/// Spread beyond which integration stops and divergence is declared.
pub const DIVERGENCE_SPREAD: f64 = 1e6;
/// Final spread below which states count as agreed.
pub const CONSENSUS_SPREAD: f64 = 1e-6;
/// Default single-linkage gap separating clusters of final states.
pub const CLUSTER_GAP: f64 = 1e-3;
/// Real parts within this of zero are treated as zero.
pub const SPECTRAL_ZERO: f64 = 1e-9;
/// Relative spread growth over the final window that counts as divergence.
pub const GROWTH_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    /// Step size; default `1e-3 / rho` with `rho` the spectral radius of the
    /// nominal graph Laplacian.
    pub dt: Option<f64>,
    /// Horizon; default 50 time constants of the slowest non-zero mode of
    /// the perturbed Laplacian.
    pub t_end: Option<f64>,
    /// Upper bound on recorded samples (first and last step always kept).
    pub max_samples: Option<usize>,
}

const DEFAULT_MAX_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub spread: Vec<f64>,
    /// Largest relative gap between the integrated in-branching edge states
    /// and `E_tau^T x`; `None` without an in-branching.
    pub edge_consistency: Option<f64>,
    pub diverged: bool,
    pub dt: f64,
    pub t_end: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn spread_of(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// `-L x` evaluated over the edge list.
fn node_rhs(g: &Digraph, w: &[f64], x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (e, &wi) in g.edges().iter().zip(w) {
        out[e.tail] -= wi * (x[e.tail] - x[e.head]);
    }
}

struct EdgeSystem {
    fac: Factorization,
    /// `-K` for the perturbed weights.
    a: Vec<Vec<f64>>,
}

impl EdgeSystem {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        let rel: Vec<f64> = self.fac.node_order.iter().map(|&v| x[v]).collect();
        self.fac.e_tau.transpose().mul_vec(&rel)
    }

    fn rhs(&self, z: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.a) {
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }
}

fn rk4<F: Fn(&[f64], &mut [f64])>(f: F, x: &mut [f64], h: f64, k: &mut [Vec<f64>; 5]) {
    let n = x.len();
    let [k1, k2, k3, k4, tmp] = k;
    f(x, k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    f(tmp, k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    f(tmp, k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    f(tmp, k4);
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn perturbed(g: &Digraph, perturbation: Option<(usize, f64)>) -> Result<Vec<f64>> {
    let mut w = g.weights();
    if let Some((edge, delta)) = perturbation {
        g.edge(edge)?;
        w[edge] += delta;
    }
    Ok(w)
}

/// Real parts below this fraction of the spectral radius are ignored when
/// choosing the default horizon.
const HORIZON_ZERO_RTOL: f64 = 1e-6;

/// Default horizon: 50 over the smallest non-zero `|Re|` of the perturbed
/// spectrum, so decaying and growing modes both run 50 time constants. The
/// reduced matrix is used when an in-branching exists, which drops the
/// always-present zero eigenvalue of the Laplacian.
pub fn default_horizon(g: &Digraph, weights: &[f64]) -> Result<f64> {
    let m = if reachability(g).has_in_branching {
        let fac = factorize(g, &find_in_branching(g, None)?)?;
        let rel_w: Vec<f64> = fac.edge_order.iter().map(|&e| weights[e]).collect();
        fac.reduced_matrix_with(&rel_w)
    } else {
        g.laplacian_with_weights(weights)
    };
    let ev = eigenvalues(&m)?;
    let rho = ev.iter().fold(0.0_f64, |r, z| r.max(z.norm()));
    let slowest = ev
        .iter()
        .map(|z| z.re.abs())
        .filter(|&r| r > SPECTRAL_ZERO.max(HORIZON_ZERO_RTOL * rho))
        .fold(f64::INFINITY, f64::min);
    Ok(if slowest.is_finite() { 50.0 / slowest } else { 50.0 })
}

/// Default step: `1e-3 / rho` for the nominal Laplacian.
pub fn default_step(g: &Digraph) -> Result<f64> {
    let rho = spectral_radius(&g.laplacian_with_weights(&g.weights()))?;
    Ok(if rho > 0.0 { 1e-3 / rho } else { 1e-3 })
}

/// Fixed-step RK4 integration of `x' = -L(W') x`, where `W'` adds `delta`
/// to one edge weight. The reduced in-branching edge system is integrated
/// alongside when an in-branching exists.
pub fn simulate(
    g: &Digraph,
    x0: &[f64],
    perturbation: Option<(usize, f64)>,
    opts: SimOptions,
) -> Result<Trajectory> {
    let n = g.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("{} initial states for {} nodes", x0.len(), n)));
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial state {i} is not finite")));
    }
    let w = perturbed(g, perturbation)?;
    let dt = match opts.dt {
        Some(dt) => dt,
        None => default_step(g)?,
    };
    let t_end = match opts.t_end {
        Some(t) => t,
        None => default_horizon(g, &w)?,
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    if !(t_end >= dt && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {t_end} must be at least the step {dt}")));
    }

    let edge_sys = if reachability(g).has_in_branching {
        let dec = find_in_branching(g, None)?;
        let fac = factorize(g, &dec)?;
        let rel_w: Vec<f64> = fac.edge_order.iter().map(|&e| w[e]).collect();
        let k = fac.reduced_matrix_with(&rel_w);
        let a = (0..k.rows()).map(|i| k.row(i).iter().map(|v| -v).collect()).collect();
        Some(EdgeSystem { fac, a })
    } else {
        None
    };

    let steps = (t_end / dt).round().max(1.0) as usize;
    let stride = steps.div_ceil(opts.max_samples.unwrap_or(DEFAULT_MAX_SAMPLES).max(1)).max(1);

    let mut x = x0.to_vec();
    let mut z = edge_sys.as_ref().map(|s| s.project(&x));
    let mut kx: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let mut kz: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n.saturating_sub(1)]);

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x.clone()],
        spread: vec![spread_of(&x)],
        edge_consistency: edge_sys.as_ref().map(|_| 0.0),
        diverged: false,
        dt,
        t_end,
    };

    for step in 1..=steps {
        rk4(|x, out| node_rhs(g, &w, x, out), &mut x, dt, &mut kx);
        if let (Some(sys), Some(z)) = (&edge_sys, z.as_mut()) {
            rk4(|z, out| sys.rhs(z, out), z, dt, &mut kz);
            let proj = sys.project(&x);
            let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            let gap = proj
                .iter()
                .zip(z.iter())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
                / scale;
            if let Some(c) = traj.edge_consistency.as_mut() {
                *c = c.max(gap);
            }
        }
        let s = spread_of(&x);
        let blown = !s.is_finite() || s > DIVERGENCE_SPREAD || x.iter().any(|v| !v.is_finite());
        if step % stride == 0 || step == steps || blown {
            traj.times.push(step as f64 * dt);
            traj.states.push(x.clone());
            traj.spread.push(s);
        }
        if blown {
            traj.diverged = true;
            break;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Consensus,
    Clustering,
    Divergence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub consensus_value: Option<f64>,
    pub cluster_count: Option<usize>,
    /// Regime predicted by the perturbed reduced spectrum.
    pub spectral_kind: Option<OutcomeKind>,
    pub agrees_with_spectrum: Option<bool>,
}

/// Groups of sorted values separated by more than `gap`.
pub fn count_clusters(values: &[f64], gap: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return 0;
    }
    1 + v.windows(2).filter(|p| p[1] - p[0] > gap).count()
}

/// Regime predicted by the spectrum of the perturbed reduced matrix.
pub fn spectral_regime(g: &Digraph, perturbation: Option<(usize, f64)>) -> Result<OutcomeKind> {
    let w = perturbed(g, perturbation)?;
    let dec = find_in_branching(g, None)?;
    let fac = factorize(g, &dec)?;
    let rel_w: Vec<f64> = fac.edge_order.iter().map(|&e| w[e]).collect();
    let ev = eigenvalues(&fac.reduced_matrix_with(&rel_w))?;
    Ok(if ev.iter().all(|z| z.re > SPECTRAL_ZERO) {
        OutcomeKind::Consensus
    } else if ev.iter().any(|z| z.re < -SPECTRAL_ZERO) {
        OutcomeKind::Divergence
    } else {
        OutcomeKind::Clustering
    })
}

/// Classifies a trajectory with the default cluster gap.
pub fn classify(traj: &Trajectory, g: &Digraph, perturbation: Option<(usize, f64)>) -> Result<Outcome> {
    classify_with_gap(traj, g, perturbation, CLUSTER_GAP)
}

pub fn classify_with_gap(
    traj: &Trajectory,
    g: &Digraph,
    perturbation: Option<(usize, f64)>,
    gap: f64,
) -> Result<Outcome> {
    let last = traj.final_state();
    let t_last = *traj.times.last().unwrap_or(&0.0);
    let start = traj.times.iter().position(|&t| t >= 0.9 * t_last).unwrap_or(0);
    let window = &traj.spread[start..];
    let final_spread = *window.last().unwrap_or(&0.0);

    let growing = window.len() >= 2
        && window.windows(2).all(|p| p[1] >= p[0])
        && final_spread > window[0] * (1.0 + GROWTH_RTOL);
    let kind = if traj.diverged || growing {
        OutcomeKind::Divergence
    } else if final_spread < CONSENSUS_SPREAD && final_spread <= window[0] {
        OutcomeKind::Consensus
    } else {
        OutcomeKind::Clustering
    };

    let spectral_kind = if reachability(g).has_in_branching {
        Some(spectral_regime(g, perturbation)?)
    } else {
        None
    };
    Ok(Outcome {
        kind,
        consensus_value: (kind == OutcomeKind::Consensus)
            .then(|| last.iter().sum::<f64>() / last.len() as f64),
        cluster_count: (kind == OutcomeKind::Clustering).then(|| count_clusters(last, gap)),
        spectral_kind,
        agrees_with_spectrum: spectral_kind.map(|s| s == kind),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyResponseSample {
    pub omega: f64,
    pub value: ComplexValue,
}

/// Loop gain `-delta M(j omega)` at `omega = 0`, on a log grid over
/// `[1e-4 rho, 1e4 rho]` and at every phase crossover, ascending in `omega`.
/// With this sign the locus reaches `(-1, 0)` exactly when `delta` sits at
/// the gain-margin limit.
pub fn nyquist_samples(sys: &UncertainEdgeSystem, delta: f64, n_points: usize) -> Result<Vec<FrequencyResponseSample>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n_points}")));
    }
    let rho = spectral_radius(&sys.a_mat)?;
    let mut omegas = vec![0.0];
    if rho > 0.0 {
        omegas.extend(log_grid(1e-4 * rho, 1e4 * rho, n_points));
    }
    omegas.extend(gain_margin(sys)?.crossings.iter().map(|c| c.omega).filter(|&w| w > 0.0));
    omegas.sort_by(f64::total_cmp);
    omegas.dedup();
    omegas
        .into_iter()
        .map(|omega| {
            let m = eval_transfer(sys, ComplexValue::new(0.0, omega))?;
            Ok(FrequencyResponseSample {
                omega,
                value: m * -delta,
            })
        })
        .collect()
}
