//! Reductions of the characteristic bipartite graph.
//!
//! A contraction merges `u` vertices through maps `h_k` (one per block of a
//! partition of `V` and `W`). When every edge keeps its output row and does
//! not gain loss, the induced weight is feasible and its objective does not
//! increase, so the reduced graph carries the same optimum.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::problem::UnifiedProblem;
use crate::weights::EdgeWeight;

/// Connected components of the support of a joint distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonPart {
    pub num_blocks: usize,
    /// Block per row index.
    pub labels_v: Vec<usize>,
    /// Block per column index.
    pub labels_w: Vec<usize>,
}

/// Splits a joint distribution into the maximal number of blocks that make it
/// block diagonal. Blocks are numbered by first appearance along the rows.
pub fn common_part_partition(p_joint: &[Vec<f64>]) -> Result<CommonPart> {
    let nv = p_joint.len();
    let nw = p_joint.first().map_or(0, Vec::len);
    if nv == 0 || nw == 0 {
        return Err(Error::DimensionMismatch {
            what: "joint distribution".into(),
            expected: 1,
            got: 0,
        });
    }
    let mut total = 0.0;
    for (i, row) in p_joint.iter().enumerate() {
        if row.len() != nw {
            return Err(Error::DimensionMismatch {
                what: format!("joint row {i}"),
                expected: nw,
                got: row.len(),
            });
        }
        for &x in row {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidDistribution {
                    what: "joint distribution".into(),
                    detail: format!("entry {x} in row {i}"),
                });
            }
            total += x;
        }
    }
    if (total - 1.0).abs() > crate::problem::INPUT_MASS_TOL {
        return Err(Error::InvalidDistribution {
            what: "joint distribution".into(),
            detail: format!("sums to {total}"),
        });
    }

    let mut uf = UnionFind::<usize>::new(nv + nw);
    let mut col_hit = vec![false; nw];
    for (i, row) in p_joint.iter().enumerate() {
        let mut any = false;
        for (j, &x) in row.iter().enumerate() {
            if x > 0.0 {
                uf.union(i, nv + j);
                col_hit[j] = true;
                any = true;
            }
        }
        if !any {
            return Err(Error::DegenerateJoint { axis: "row", index: i });
        }
    }
    if let Some(j) = col_hit.iter().position(|&h| !h) {
        return Err(Error::DegenerateJoint { axis: "column", index: j });
    }

    let mut block_of_root = HashMap::new();
    let mut label = |x: usize| {
        let root = uf.find(x);
        let next = block_of_root.len();
        *block_of_root.entry(root).or_insert(next)
    };
    let labels_v: Vec<usize> = (0..nv).map(&mut label).collect();
    let labels_w: Vec<usize> = (0..nw).map(|j| label(nv + j)).collect();
    Ok(CommonPart {
        num_blocks: block_of_root.len(),
        labels_v,
        labels_w,
    })
}

/// A family of vertex-merge maps `h_k: U -> U`, one per block `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contraction {
    pub block_of_v: Vec<usize>,
    pub block_of_w: Vec<usize>,
    /// `maps[k][u] = h_k(u)`, indices into the original `U`.
    pub maps: Vec<Vec<usize>>,
}

impl Contraction {
    /// A single map applied to every `v`.
    pub fn plain(problem: &UnifiedProblem, map: Vec<usize>) -> Self {
        Self {
            block_of_v: vec![0; problem.num_v()],
            block_of_w: vec![0; problem.num_w()],
            maps: vec![map],
        }
    }

    pub fn identity(problem: &UnifiedProblem) -> Self {
        Self::plain(problem, (0..problem.num_u()).collect())
    }
}

/// Result of [`apply_contraction`].
#[derive(Debug, Clone)]
pub struct Contracted {
    pub problem: UnifiedProblem,
    pub q: Option<EdgeWeight>,
    /// New index of each original `u` that received an edge, per block.
    pub new_u: Vec<Vec<Option<usize>>>,
}

/// Applies a (generalized) feasible contraction after validating it.
pub fn apply_contraction(
    problem: &UnifiedProblem,
    contraction: &Contraction,
    q: Option<&EdgeWeight>,
) -> Result<Contracted> {
    validate_contraction(problem, contraction)?;
    let nu = problem.num_u();
    let mut image = vec![false; nu];
    for e in 0..problem.num_edges() {
        let k = contraction.block_of_v[problem.edge_v(e)];
        image[contraction.maps[k][problem.edge_u(e)]] = true;
    }
    let mut relabel = vec![usize::MAX; nu];
    let mut labels = Vec::new();
    for u in 0..nu {
        if image[u] {
            relabel[u] = labels.len();
            labels.push(problem.u_labels()[u]);
        }
    }

    // (v, h(u)) targets, one reduced edge per distinct pair
    let mut triples = Vec::new();
    let mut target_of_edge = vec![0usize; problem.num_edges()];
    let mut reduced_index: HashMap<(usize, usize), usize> = HashMap::new();
    for e in 0..problem.num_edges() {
        let v = problem.edge_v(e);
        let h = contraction.maps[contraction.block_of_v[v]][problem.edge_u(e)];
        let old = problem.find_edge(v, h).expect("validated");
        let next = reduced_index.len();
        let idx = *reduced_index.entry((v, h)).or_insert_with(|| {
            triples.push((v, relabel[h], old));
            next
        });
        target_of_edge[e] = idx;
    }
    let reduced = problem.rebuild_from_edges(labels.len(), &triples, labels, false)?;

    let q_new = q.map(|q| {
        let mut vals = vec![0.0; reduced.num_edges()];
        for (e, &x) in q.values().iter().enumerate() {
            let (v, u_new, _) = triples[target_of_edge[e]];
            let re = reduced.find_edge(v, u_new).expect("reduced edge");
            vals[re] += x;
        }
        EdgeWeight::from_raw(vals)
    });

    let new_u = contraction
        .maps
        .iter()
        .map(|m| {
            m.iter()
                .map(|&h| (relabel[h] != usize::MAX).then_some(relabel[h]))
                .collect()
        })
        .collect();
    Ok(Contracted {
        problem: reduced,
        q: q_new,
        new_u,
    })
}

fn validate_contraction(problem: &UnifiedProblem, c: &Contraction) -> Result<()> {
    let dim = |what: &str, expected: usize, got: usize| Error::DimensionMismatch {
        what: what.into(),
        expected,
        got,
    };
    if c.block_of_v.len() != problem.num_v() {
        return Err(dim("contraction v partition", problem.num_v(), c.block_of_v.len()));
    }
    if c.block_of_w.len() != problem.num_w() {
        return Err(dim("contraction w partition", problem.num_w(), c.block_of_w.len()));
    }
    let k = c.maps.len();
    if let Some(&b) = c.block_of_v.iter().chain(&c.block_of_w).find(|&&b| b >= k) {
        return Err(dim("contraction block label", k, b));
    }
    for m in &c.maps {
        if m.len() != problem.num_u() {
            return Err(dim("contraction map", problem.num_u(), m.len()));
        }
        if let Some(&h) = m.iter().find(|&&h| h >= problem.num_u()) {
            return Err(dim("contraction map target", problem.num_u(), h));
        }
    }
    let fail = |condition, witness: String| Err(Error::InvalidContraction { condition, witness });

    for e in 0..problem.num_edges() {
        let (v, u) = (problem.edge_v(e), problem.edge_u(e));
        let k = c.block_of_v[v];
        let (ws, _) = problem.channel_of_edge(e);
        if let Some(&w) = ws.iter().find(|&&w| c.block_of_w[w as usize] != k) {
            return fail("strict separation", format!("(v={v}, u={u}, w={w})"));
        }
        let h = c.maps[k][u];
        let Some(target) = problem.find_edge(v, h) else {
            return fail("edge preservation", format!("(v={v}, u={u}) -> (v={v}, u={h})"));
        };
        if problem.edge_loss(target) > problem.edge_loss(e) {
            return fail(
                "loss preservation",
                format!(
                    "(v={v}, u={u}): l(v,h(u))={} > l(v,u)={}",
                    problem.edge_loss(target),
                    problem.edge_loss(e)
                ),
            );
        }
        if !problem.same_channel(e, target) {
            let w = (0..problem.num_w())
                .find(|&w| {
                    (problem.p_w_given_edge(e, w) - problem.p_w_given_edge(target, w)).abs()
                        > crate::problem::ROW_EQ_TOL
                })
                .unwrap_or(0);
            return fail("channel preservation", format!("(v={v}, u={u}, w={w}) with h(u)={h}"));
        }
    }
    Ok(())
}

/// Keeps only the edges attaining `min_{E_v} l` and drops `u` left isolated.
pub fn min_loss_reduce(problem: &UnifiedProblem) -> UnifiedProblem {
    min_loss_reduce_with_map(problem).0
}

/// [`min_loss_reduce`] plus the original index of every kept `u`.
pub fn min_loss_reduce_with_map(problem: &UnifiedProblem) -> (UnifiedProblem, Vec<usize>) {
    let mut keep = vec![false; problem.num_edges()];
    for v in 0..problem.num_v() {
        let r = problem.edges_of_v(v);
        let mn = problem.losses()[r.clone()]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * mn.abs().max(1.0);
        for e in r {
            keep[e] = problem.edge_loss(e) <= mn + tol;
        }
    }
    problem
        .restrict_edges(&keep, false)
        .expect("every v keeps its minimizing edge")
}

/// Merges `u` vertices with identical neighbourhoods, losses and output rows
/// into their lowest-index representative.
///
/// Returns the reduced problem and the new index of every original `u`
/// (`None` for vertices without edges).
pub fn dedupe_u(problem: &UnifiedProblem) -> (UnifiedProblem, Vec<Option<usize>>) {
    let map = duplicate_map(problem);
    let out = apply_contraction(problem, &Contraction::plain(problem, map), None)
        .expect("merging identical columns is a feasible contraction");
    let new_u = out.new_u.into_iter().next().unwrap_or_default();
    (out.problem, new_u)
}

fn duplicate_map(problem: &UnifiedProblem) -> Vec<usize> {
    let canon = problem.canonical_channel_ids();
    let nu = problem.num_u();
    let mut map: Vec<usize> = (0..nu).collect();
    let mut buckets: HashMap<Vec<(usize, usize)>, Vec<usize>> = HashMap::new();
    for u in 0..nu {
        let edges = problem.edges_of_u(u);
        if edges.is_empty() {
            continue;
        }
        let key: Vec<(usize, usize)> = edges
            .iter()
            .map(|&e| {
                let e = e as usize;
                (problem.edge_v(e), canon[problem.channel_index(e)])
            })
            .collect();
        let reps = buckets.entry(key).or_default();
        let same_losses = |a: usize| {
            problem.edges_of_u(a).iter().zip(edges).all(|(&x, &y)| {
                let (lx, ly) = (problem.edge_loss(x as usize), problem.edge_loss(y as usize));
                (lx - ly).abs() <= 1e-12 * lx.abs().max(1.0)
            })
        };
        match reps.iter().find(|&&a| same_losses(a)) {
            Some(&rep) => map[u] = rep,
            None => reps.push(u),
        }
    }
    map
}
