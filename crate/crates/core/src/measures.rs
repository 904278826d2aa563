//! Evaluation functionals and loss-regime classification.
//!
//! Every information quantity returned here is in bits. Sums are accumulated
//! in nats and converted once at the end.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::graph::common_part_partition;
use crate::problem::UnifiedProblem;
use crate::solver::update_r;
use crate::weights::{EdgeWeight, ReverseChannel};

/// Boundary losses of a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBounds {
    /// Smallest achievable expected loss.
    pub l_min: f64,
    /// Smallest loss at which the optimum reaches its floor; known only for
    /// Markov problems.
    pub l_max_rd: Option<f64>,
    /// Largest achievable expected loss.
    pub l_max: f64,
}

/// Where a loss budget falls relative to the [`LossBounds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    Infeasible,
    Minimum,
    Interior,
    Slack,
}

/// `l_min = Σ_v p(v) min_{E_v} l`, `l_Max = Σ_v p(v) max_{E_v} l`.
pub fn loss_bounds(problem: &UnifiedProblem) -> LossBounds {
    let (mut lo, mut hi) = (0.0, 0.0);
    for v in 0..problem.num_v() {
        let row = &problem.losses()[problem.edges_of_v(v)];
        let mn = row.iter().copied().fold(f64::INFINITY, f64::min);
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo += problem.p_v()[v] * mn;
        hi += problem.p_v()[v] * mx;
    }
    LossBounds {
        l_min: lo,
        l_max_rd: None,
        l_max: hi.max(lo),
    }
}

/// [`loss_bounds`] plus `l_max_rd` when the problem is Markov and it exists.
pub fn loss_bounds_with_rd(problem: &UnifiedProblem) -> LossBounds {
    let mut b = loss_bounds(problem);
    b.l_max_rd = rd_loss_max(problem).ok().map(|x| x.clamp(b.l_min, b.l_max));
    b
}

/// Point-mass minimizers that reach zero rate, one reconstruction per
/// common-part block of `(V, W)`, and the loss they incur.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroRatePoint {
    pub loss: f64,
    /// Block label per `v`.
    pub block_of_v: Vec<usize>,
    /// Chosen `u` per block.
    pub u_of_block: Vec<usize>,
}

/// Smallest loss at which a Markov problem reaches zero rate.
///
/// For each common-part block of `(V, W)` the cheapest `u` adjacent to every
/// `v` of the block is selected; with a single block and a complete edge set
/// this is `min_u Σ_v p(v) l(v,u)`.
pub fn rd_loss_max(problem: &UnifiedProblem) -> Result<f64> {
    zero_rate_point(problem).map(|z| z.loss)
}

pub fn zero_rate_point(problem: &UnifiedProblem) -> Result<ZeroRatePoint> {
    if !problem.is_markov() {
        let v = (0..problem.num_v())
            .find(|&v| {
                let r = problem.edges_of_v(v);
                r.clone().any(|e| !problem.same_channel(r.start, e))
            })
            .unwrap_or(0);
        return Err(Error::NotMarkov { v });
    }
    let (nv, nw) = (problem.num_v(), problem.num_w());
    let mut joint = vec![vec![0.0; nw]; nv];
    for (v, row) in joint.iter_mut().enumerate() {
        let e = problem.edges_of_v(v).start;
        let (ws, ps) = problem.channel_of_edge(e);
        for (&w, &p) in ws.iter().zip(ps) {
            row[w as usize] = problem.p_v()[v] * p;
        }
    }
    let parts = common_part_partition(&joint)?;
    let k = parts.num_blocks;
    let nu = problem.num_u();
    let mut block_size = vec![0usize; k];
    for &b in &parts.labels_v {
        block_size[b] += 1;
    }
    let mut sum = vec![0.0; k * nu];
    let mut count = vec![0usize; k * nu];
    for e in 0..problem.num_edges() {
        let v = problem.edge_v(e);
        let idx = parts.labels_v[v] * nu + problem.edge_u(e);
        sum[idx] += problem.p_v()[v] * problem.edge_loss(e);
        count[idx] += 1;
    }
    let mut loss = 0.0;
    let mut u_of_block = Vec::with_capacity(k);
    for b in 0..k {
        let best = (0..nu)
            .filter(|&u| count[b * nu + u] == block_size[b])
            .min_by(|&a, &c| sum[b * nu + a].total_cmp(&sum[b * nu + c]))
            .ok_or(Error::NoUniversalReconstruction { block: b })?;
        loss += sum[b * nu + best];
        u_of_block.push(best);
    }
    Ok(ZeroRatePoint {
        loss,
        block_of_v: parts.labels_v,
        u_of_block,
    })
}

/// Tolerance used to recognise the minimum-loss boundary.
pub fn boundary_eps(bounds: &LossBounds) -> f64 {
    1e-10 * bounds.l_max.max(1.0)
}

pub fn classify_constraint(loss: f64, bounds: &LossBounds) -> Regime {
    let eps = boundary_eps(bounds);
    if loss < bounds.l_min - eps {
        Regime::Infeasible
    } else if (loss - bounds.l_min).abs() <= eps {
        Regime::Minimum
    } else if loss >= bounds.l_max {
        Regime::Slack
    } else {
        Regime::Interior
    }
}

/// `Σ_{(v,u)∈E} p(v) q(u|v) l(v,u)`.
pub fn expected_loss(problem: &UnifiedProblem, q: &EdgeWeight) -> f64 {
    let p_v = problem.p_v();
    q.values()
        .iter()
        .enumerate()
        .map(|(e, &x)| p_v[problem.edge_v(e)] * x * problem.edge_loss(e))
        .sum()
}

/// Generalized K-L divergence `Σ p(v) q(u|v) p(w|u,v) log(q(u|v)/r(u|w))` in bits.
///
/// Terms with `q = 0` vanish; a positive term against `r = 0` gives `+∞`.
pub fn generalized_divergence(problem: &UnifiedProblem, q: &EdgeWeight, r: &ReverseChannel) -> f64 {
    let p_v = problem.p_v();
    let mut total = 0.0;
    for (e, &qe) in q.values().iter().enumerate() {
        if qe <= 0.0 {
            continue;
        }
        let u = problem.edge_u(e);
        let ln_q = qe.ln();
        let (ws, ps) = problem.channel_of_edge(e);
        let mut inner = 0.0;
        for (&w, &p) in ws.iter().zip(ps) {
            let rv = r.get(u, w as usize);
            if rv <= 0.0 {
                return f64::INFINITY;
            }
            inner += p * (ln_q - rv.ln());
        }
        total += p_v[problem.edge_v(e)] * qe * inner;
    }
    total / LN_2
}

/// Objective `I(U;V) - I(U;W)` of a weight, in bits.
pub fn objective(problem: &UnifiedProblem, q: &EdgeWeight) -> f64 {
    let r = update_r(problem, q);
    generalized_divergence(problem, q, &r)
}

/// `Σ_{(v,u)∈E} p(v) q1(u|v) log(q1(u|v)/q2(u|v))` in bits.
pub fn edge_divergence(problem: &UnifiedProblem, q1: &EdgeWeight, q2: &EdgeWeight) -> f64 {
    let p_v = problem.p_v();
    let mut total = 0.0;
    for (e, (&a, &b)) in q1.values().iter().zip(q2.values()).enumerate() {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        total += p_v[problem.edge_v(e)] * a * (a / b).ln();
    }
    total / LN_2
}

/// `Σ_{u,w} q(w) r1(u|w) log(r1(u|w)/r2(u|w))` in bits, with the output
/// marginal `q(w)` induced by `q`.
pub fn reverse_divergence(
    problem: &UnifiedProblem,
    q: &EdgeWeight,
    r1: &ReverseChannel,
    r2: &ReverseChannel,
) -> f64 {
    let q_w = output_marginal(problem, q);
    let mut total = 0.0;
    for (w, &qw) in q_w.iter().enumerate() {
        if qw <= 0.0 {
            continue;
        }
        for u in 0..problem.num_u() {
            let a = r1.get(u, w);
            if a <= 0.0 {
                continue;
            }
            let b = r2.get(u, w);
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += qw * a * (a / b).ln();
        }
    }
    total / LN_2
}

/// `q(w) = Σ p(v) q(u|v) p(w|u,v)`.
pub fn output_marginal(problem: &UnifiedProblem, q: &EdgeWeight) -> Vec<f64> {
    let mut out = vec![0.0; problem.num_w()];
    let p_v = problem.p_v();
    for (e, &qe) in q.values().iter().enumerate() {
        let m = p_v[problem.edge_v(e)] * qe;
        let (ws, ps) = problem.channel_of_edge(e);
        for (&w, &p) in ws.iter().zip(ps) {
            out[w as usize] += m * p;
        }
    }
    out
}
