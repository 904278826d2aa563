#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdcc_core::problems::{LossyComputingSpec, LossyReduction};
use rdcc_core::{build_unified_problem, EdgeWeight, ReverseChannel, Sense, UnifiedProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector with entries bounded away from zero.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / t).collect()
}

/// Random probability vector where some entries may be exactly zero.
pub fn sparse_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let keep = rng.gen_range(0..n);
    let raw: Vec<f64> = (0..n)
        .map(|i| if i == keep || rng.gen_bool(0.7) { rng.gen_range(0.05..1.0) } else { 0.0 })
        .collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / t).collect()
}

/// Random edge set with every `v` connected; complete when `complete`.
pub fn edge_set(rng: &mut ChaCha8Rng, nv: usize, nu: usize, complete: bool) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for v in 0..nv {
        let forced = rng.gen_range(0..nu);
        for u in 0..nu {
            if complete || u == forced || rng.gen_bool(0.6) {
                edges.push((v, u));
            }
        }
    }
    for u in 0..nu {
        if !edges.iter().any(|&(_, x)| x == u) {
            edges.push((rng.gen_range(0..nv), u));
        }
    }
    edges.sort_unstable();
    edges
}

/// A random problem where `p(w|u,v)` depends on `v` only.
pub fn random_markov(rng: &mut ChaCha8Rng, nv: usize, nu: usize, nw: usize, complete: bool) -> UnifiedProblem {
    let p_v = simplex(rng, nv);
    let rows: Vec<Vec<f64>> = (0..nv).map(|_| simplex(rng, nw)).collect();
    let edges = edge_set(rng, nv, nu, complete);
    let channels: Vec<Vec<f64>> = edges.iter().map(|&(v, _)| rows[v].clone()).collect();
    let losses: Vec<f64> = edges.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    build_unified_problem(nu, &edges, &p_v, &channels, &losses, Sense::Minimize).unwrap()
}

/// A random problem with one output row per edge.
pub fn random_general(rng: &mut ChaCha8Rng, nv: usize, nu: usize, nw: usize) -> UnifiedProblem {
    let p_v = simplex(rng, nv);
    let edges = edge_set(rng, nv, nu, false);
    let channels: Vec<Vec<f64>> = edges.iter().map(|_| simplex(rng, nw)).collect();
    let losses: Vec<f64> = edges.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    build_unified_problem(nu, &edges, &p_v, &channels, &losses, Sense::Minimize).unwrap()
}

pub fn random_weight(rng: &mut ChaCha8Rng, problem: &UnifiedProblem) -> EdgeWeight {
    let mut values = vec![0.0; problem.num_edges()];
    for v in 0..problem.num_v() {
        let r = problem.edges_of_v(v);
        let row = simplex(rng, r.len());
        values[r].copy_from_slice(&row);
    }
    EdgeWeight::from_values(problem, values).unwrap()
}

/// Random `r(u|w)` with full support on `F`.
pub fn random_reverse(rng: &mut ChaCha8Rng, problem: &UnifiedProblem) -> ReverseChannel {
    let (nu, nw) = (problem.num_u(), problem.num_w());
    let columns: Vec<Vec<f64>> = (0..nw)
        .map(|w| {
            let raw: Vec<f64> = (0..nu)
                .map(|u| if problem.in_f_support(u, w) { rng.gen_range(0.05..1.0) } else { 0.0 })
                .collect();
            let t: f64 = raw.iter().sum();
            raw.into_iter().map(|x| if t > 0.0 { x / t } else { 0.0 }).collect()
        })
        .collect();
    ReverseChannel::from_columns(problem, &columns).unwrap()
}

/// Lossy computing spec whose joint pmf splits into two diagonal blocks.
pub fn block_diagonal_lossy(rng: &mut ChaCha8Rng) -> LossyComputingSpec {
    let sizes = [(rng.gen_range(1..=2), rng.gen_range(1..=2)), (rng.gen_range(1..=2), rng.gen_range(1..=2))];
    let n1 = sizes[0].0 + sizes[1].0;
    let n2 = sizes[0].1 + sizes[1].1;
    let block_mass = rng.gen_range(0.2..0.8);
    let mut p = vec![vec![0.0; n2]; n1];
    let (mut r0, mut c0) = (0, 0);
    for (k, &(nr, nc)) in sizes.iter().enumerate() {
        let cells = simplex(rng, nr * nc);
        let mass = if k == 0 { block_mass } else { 1.0 - block_mass };
        for i in 0..nr {
            for j in 0..nc {
                p[r0 + i][c0 + j] = mass * cells[i * nc + j];
            }
        }
        r0 += nr;
        c0 += nc;
    }
    let nz = 2;
    let f = (0..n1).map(|_| (0..n2).map(|_| rng.gen_range(0..nz)).collect()).collect();
    let d = (0..nz)
        .map(|z| (0..nz).map(|zh| if z == zh { 0.0 } else { rng.gen_range(0.5..2.0) }).collect())
        .collect();
    LossyComputingSpec {
        reduction: LossyReduction::Canonical,
        ..LossyComputingSpec::new(p, f, d)
    }
}

/// `F_s(q, r)` in bits, evaluated straight from the edge list.
pub fn f_s(problem: &UnifiedProblem, q: &EdgeWeight, r: &ReverseChannel, s: f64) -> f64 {
    let mut total = 0.0;
    for e in 0..problem.num_edges() {
        let qe = q.get(e);
        if qe <= 0.0 {
            continue;
        }
        let (v, u) = (problem.edge_v(e), problem.edge_u(e));
        let pv = problem.p_v()[v];
        let mut inner = s * problem.edge_loss(e);
        for w in 0..problem.num_w() {
            let pw = problem.p_w_given_edge(e, w);
            if pw > 0.0 {
                inner += pw * (qe / r.get(u, w)).ln();
            }
        }
        total += pv * qe * inner;
    }
    total / std::f64::consts::LN_2
}

/// `Σ_E p(v) q1 log(q1/q2)` in bits.
pub fn gd_edges(problem: &UnifiedProblem, q1: &EdgeWeight, q2: &EdgeWeight) -> f64 {
    (0..problem.num_edges())
        .filter(|&e| q1.get(e) > 0.0)
        .map(|e| problem.p_v()[problem.edge_v(e)] * q1.get(e) * (q1.get(e) / q2.get(e)).log2())
        .sum()
}

/// `Σ_{u,w} q(w) r1 log(r1/r2)` in bits with `q(w)` induced by `q`.
pub fn gd_reverse(problem: &UnifiedProblem, q: &EdgeWeight, r1: &ReverseChannel, r2: &ReverseChannel) -> f64 {
    let mut q_w = vec![0.0; problem.num_w()];
    for e in 0..problem.num_edges() {
        let m = problem.p_v()[problem.edge_v(e)] * q.get(e);
        for (w, qw) in q_w.iter_mut().enumerate() {
            *qw += m * problem.p_w_given_edge(e, w);
        }
    }
    let mut total = 0.0;
    for (w, &qw) in q_w.iter().enumerate() {
        for u in 0..problem.num_u() {
            let a = r1.get(u, w);
            if qw > 0.0 && a > 0.0 {
                total += qw * a * (a / r2.get(u, w)).log2();
            }
        }
    }
    total
}

/// Expected loss of `q`.
pub fn loss_of(problem: &UnifiedProblem, q: &EdgeWeight) -> f64 {
    (0..problem.num_edges())
        .map(|e| problem.p_v()[problem.edge_v(e)] * q.get(e) * problem.edge_loss(e))
        .sum()
}

/// `I(U;V) - I(U;W)` in bits from the dense joint of `(V, U, W)`.
pub fn mutual_gap(problem: &UnifiedProblem, q: &EdgeWeight) -> f64 {
    let (nv, nu, nw) = (problem.num_v(), problem.num_u(), problem.num_w());
    let mut p_vu = vec![0.0; nv * nu];
    let mut p_uw = vec![0.0; nu * nw];
    for e in 0..problem.num_edges() {
        let (v, u) = (problem.edge_v(e), problem.edge_u(e));
        let m = problem.p_v()[v] * q.get(e);
        p_vu[v * nu + u] += m;
        for w in 0..nw {
            p_uw[u * nw + w] += m * problem.p_w_given_edge(e, w);
        }
    }
    mutual_information(&p_vu, nv, nu) - mutual_information(&p_uw, nu, nw)
}

fn mutual_information(joint: &[f64], rows: usize, cols: usize) -> f64 {
    let mut a = vec![0.0; rows];
    let mut b = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..cols {
            a[i] += joint[i * cols + j];
            b[j] += joint[i * cols + j];
        }
    }
    let mut total = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let p = joint[i * cols + j];
            if p > 0.0 {
                total += p * (p / (a[i] * b[j])).log2();
            }
        }
    }
    total
}
