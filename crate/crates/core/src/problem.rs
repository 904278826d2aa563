//! The unified source-channel problem.
//!
//! A problem is a bipartite edge set `E ⊆ V × U` together with a source
//! distribution `p(v)`, one output distribution `p(w|u,v)` per edge and the
//! reduced loss `l(v,u)` per edge. The decision variable is a conditional
//! distribution `q(u|v)` supported on `E`; the objective is
//! `I(U;V) - I(U;W)` subject to an expected-loss budget.
//!
//! Output distributions are stored once in a shared channel table and edges
//! refer to them by index, so builders whose edges share a handful of distinct
//! rows (every lossy-computing problem, every channel problem) stay compact
//! even when `|U|` reaches the millions.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};

/// Accepted deviation of an input probability vector from unit mass.
pub const INPUT_MASS_TOL: f64 = 1e-9;
/// Entrywise tolerance when comparing two output distributions.
pub const ROW_EQ_TOL: f64 = 1e-12;

/// How the minimized value is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    /// Report `T(L)` (rate-distortion problems).
    Minimize,
    /// Report `-T(L)` (capacity-cost problems).
    MaximizeNegated,
}

impl Sense {
    pub fn report(self, minimized: f64) -> f64 {
        match self {
            Sense::Minimize => minimized,
            Sense::MaximizeNegated => 0.0 - minimized,
        }
    }
}

/// One edge of the characteristic graph, as handed to [`UnifiedProblem::from_parts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub v: usize,
    pub u: usize,
    pub loss: f64,
    /// Index into the channel table.
    pub channel: usize,
}

/// Borrowed view of a stored edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRef {
    pub v: usize,
    pub u: usize,
    pub loss: f64,
    pub channel: usize,
}

#[derive(Debug, Clone)]
struct ChannelTable {
    offsets: Vec<usize>,
    w: Vec<u32>,
    p: Vec<f64>,
}

impl ChannelTable {
    fn from_dense(rows: &[Vec<f64>], num_w: usize) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut w = Vec::new();
        let mut p = Vec::new();
        offsets.push(0);
        for (i, row) in rows.iter().enumerate() {
            let what = || format!("p(w|u,v) row {i}");
            if row.len() != num_w {
                return Err(Error::DimensionMismatch {
                    what: what(),
                    expected: num_w,
                    got: row.len(),
                });
            }
            let normalized = normalize_checked(row, &what(), false)?;
            for (j, &x) in normalized.iter().enumerate() {
                if x > 0.0 {
                    w.push(j as u32);
                    p.push(x);
                }
            }
            offsets.push(w.len());
        }
        Ok(Self { offsets, w, p })
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    fn row(&self, c: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[c]..self.offsets[c + 1];
        (&self.w[r.clone()], &self.p[r])
    }

    fn rows_equal(&self, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        let (wa, pa) = self.row(a);
        let (wb, pb) = self.row(b);
        // rows are stored sparse; compare on the union of supports
        let (mut i, mut j) = (0, 0);
        while i < wa.len() || j < wb.len() {
            let (x, y) = match (wa.get(i), wb.get(j)) {
                (Some(&ca), Some(&cb)) if ca == cb => {
                    i += 1;
                    j += 1;
                    (pa[i - 1], pb[j - 1])
                }
                (Some(&ca), Some(&cb)) if ca < cb => {
                    i += 1;
                    (pa[i - 1], 0.0)
                }
                (Some(_), None) => {
                    i += 1;
                    (pa[i - 1], 0.0)
                }
                _ => {
                    j += 1;
                    (0.0, pb[j - 1])
                }
            };
            if (x - y).abs() > ROW_EQ_TOL {
                return false;
            }
        }
        true
    }
}

/// Checks a probability vector and rescales it to unit mass.
pub(crate) fn normalize_checked(row: &[f64], what: &str, strictly_positive: bool) -> Result<Vec<f64>> {
    let bad = |detail: String| Error::InvalidDistribution {
        what: what.to_string(),
        detail,
    };
    if row.is_empty() {
        return Err(bad("empty vector".into()));
    }
    for (i, &x) in row.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(bad(format!("entry {i} is {x}")));
        }
        if strictly_positive && x == 0.0 {
            return Err(bad(format!("entry {i} is zero but must be positive")));
        }
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > INPUT_MASS_TOL {
        return Err(bad(format!("sums to {total}")));
    }
    Ok(row.iter().map(|x| x / total).collect())
}

/// The data of one instance of the unified problem.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct UnifiedProblem {
    num_v: usize,
    num_u: usize,
    num_w: usize,
    p_v: Vec<f64>,
    // edges sorted by (v, u)
    edge_v: Vec<u32>,
    edge_u: Vec<u32>,
    edge_loss: Vec<f64>,
    edge_channel: Vec<u32>,
    v_offsets: Vec<usize>,
    u_offsets: Vec<usize>,
    u_edges: Vec<u32>,
    channels: ChannelTable,
    f_support: Vec<bool>,
    u_labels: Vec<u64>,
    sense: Sense,
    markov: bool,
}

impl UnifiedProblem {
    /// Builds a problem from a channel table and an edge list.
    ///
    /// `channels` holds dense rows over `W`; every edge refers to one of them.
    /// Alphabet sizes are `p_v.len()`, `num_u` and the common row length.
    pub fn from_parts(
        num_u: usize,
        p_v: &[f64],
        channels: &[Vec<f64>],
        edges: Vec<EdgeSpec>,
        sense: Sense,
    ) -> Result<Self> {
        Self::from_parts_inner(num_u, p_v, channels, edges, sense, true)
    }

    /// [`Self::from_parts`] without the reachability check on `W`; used by
    /// reductions whose output alphabet is inherited from a larger problem.
    pub(crate) fn from_parts_inner(
        num_u: usize,
        p_v: &[f64],
        channels: &[Vec<f64>],
        edges: Vec<EdgeSpec>,
        sense: Sense,
        check_reach: bool,
    ) -> Result<Self> {
        let num_w = channels.first().map_or(0, Vec::len);
        let table = ChannelTable::from_dense(channels, num_w)?;
        let p_v = normalize_checked(p_v, "p(v)", true)?;
        let labels = (0..num_u as u64).collect();
        Self::assemble(num_u, num_w, p_v, table, edges, labels, sense, check_reach)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        num_u: usize,
        num_w: usize,
        p_v: Vec<f64>,
        channels: ChannelTable,
        mut edges: Vec<EdgeSpec>,
        u_labels: Vec<u64>,
        sense: Sense,
        check_reach: bool,
    ) -> Result<Self> {
        let num_v = p_v.len();
        if edges.is_empty() {
            return Err(Error::EmptyEdgeSet);
        }
        if u_labels.len() != num_u {
            return Err(Error::DimensionMismatch {
                what: "u labels".into(),
                expected: num_u,
                got: u_labels.len(),
            });
        }
        for e in &edges {
            if e.v >= num_v {
                return Err(Error::DimensionMismatch {
                    what: "edge v index".into(),
                    expected: num_v,
                    got: e.v,
                });
            }
            if e.u >= num_u {
                return Err(Error::DimensionMismatch {
                    what: "edge u index".into(),
                    expected: num_u,
                    got: e.u,
                });
            }
            if e.channel >= channels.len() {
                return Err(Error::DimensionMismatch {
                    what: "edge channel index".into(),
                    expected: channels.len(),
                    got: e.channel,
                });
            }
            if !e.loss.is_finite() || e.loss < 0.0 {
                return Err(Error::InvalidLoss {
                    v: e.v,
                    u: e.u,
                    value: e.loss,
                });
            }
        }
        edges.sort_unstable_by_key(|e| (e.v, e.u));
        for pair in edges.windows(2) {
            if pair[0].v == pair[1].v && pair[0].u == pair[1].u {
                return Err(Error::DuplicateEdge {
                    v: pair[0].v,
                    u: pair[0].u,
                });
            }
        }

        let m = edges.len();
        let mut v_offsets = vec![0usize; num_v + 1];
        let mut u_count = vec![0usize; num_u + 1];
        for e in &edges {
            v_offsets[e.v + 1] += 1;
            u_count[e.u + 1] += 1;
        }
        for v in 0..num_v {
            if v_offsets[v + 1] == 0 {
                return Err(Error::IsolatedVertex(v));
            }
            v_offsets[v + 1] += v_offsets[v];
        }
        for u in 0..num_u {
            u_count[u + 1] += u_count[u];
        }
        let u_offsets = u_count.clone();
        let mut cursor = u_count;
        let mut u_edges = vec![0u32; m];
        for (i, e) in edges.iter().enumerate() {
            u_edges[cursor[e.u]] = i as u32;
            cursor[e.u] += 1;
        }

        let mut f_support = vec![false; num_u * num_w];
        for e in &edges {
            let (ws, _) = channels.row(e.channel);
            for &w in ws {
                f_support[e.u * num_w + w as usize] = true;
            }
        }
        if check_reach {
            for w in 0..num_w {
                if !(0..num_u).any(|u| f_support[u * num_w + w]) {
                    return Err(Error::UnreachableOutput(w));
                }
            }
        }

        let markov = (0..num_v).all(|v| {
            let r = v_offsets[v]..v_offsets[v + 1];
            let first = edges[r.start].channel;
            edges[r].iter().all(|e| channels.rows_equal(first, e.channel))
        });

        Ok(Self {
            num_v,
            num_u,
            num_w,
            p_v,
            edge_v: edges.iter().map(|e| e.v as u32).collect(),
            edge_u: edges.iter().map(|e| e.u as u32).collect(),
            edge_loss: edges.iter().map(|e| e.loss).collect(),
            edge_channel: edges.iter().map(|e| e.channel as u32).collect(),
            v_offsets,
            u_offsets,
            u_edges,
            channels,
            f_support,
            u_labels,
            sense,
            markov,
        })
    }

    /// Restricts the problem to a subset of its edges, relabelling `U`.
    ///
    /// `keep` selects edges by index; `u` vertices left without edges are
    /// dropped. Returns the new problem and, for each new `u`, its index in
    /// `self`.
    pub(crate) fn restrict_edges(&self, keep: &[bool], check_reach: bool) -> Result<(Self, Vec<usize>)> {
        let mut used = vec![false; self.num_u];
        for (e, &k) in keep.iter().enumerate() {
            if k {
                used[self.edge_u[e] as usize] = true;
            }
        }
        let mut new_index = vec![usize::MAX; self.num_u];
        let mut kept_u = Vec::new();
        for u in 0..self.num_u {
            if used[u] {
                new_index[u] = kept_u.len();
                kept_u.push(u);
            }
        }
        let edges = (0..self.num_edges())
            .filter(|&e| keep[e])
            .map(|e| EdgeSpec {
                v: self.edge_v[e] as usize,
                u: new_index[self.edge_u[e] as usize],
                loss: self.edge_loss[e],
                channel: self.edge_channel[e] as usize,
            })
            .collect();
        let labels = kept_u.iter().map(|&u| self.u_labels[u]).collect();
        let p = Self::assemble(
            kept_u.len(),
            self.num_w,
            self.p_v.clone(),
            self.channels.clone(),
            edges,
            labels,
            self.sense,
            check_reach,
        )?;
        Ok((p, kept_u))
    }

    /// Builds a problem over a new `U` alphabet from `(v, new_u, old_edge)`
    /// triples, inheriting loss and channel from the old edge.
    pub(crate) fn rebuild_from_edges(
        &self,
        num_u: usize,
        triples: &[(usize, usize, usize)],
        labels: Vec<u64>,
        check_reach: bool,
    ) -> Result<Self> {
        let edges = triples
            .iter()
            .map(|&(v, u, old)| EdgeSpec {
                v,
                u,
                loss: self.edge_loss[old],
                channel: self.edge_channel[old] as usize,
            })
            .collect();
        Self::assemble(
            num_u,
            self.num_w,
            self.p_v.clone(),
            self.channels.clone(),
            edges,
            labels,
            self.sense,
            check_reach,
        )
    }

    /// Replaces the provenance labels of `U` (one per vertex).
    pub fn with_u_labels(mut self, labels: Vec<u64>) -> Result<Self> {
        if labels.len() != self.num_u {
            return Err(Error::DimensionMismatch {
                what: "u labels".into(),
                expected: self.num_u,
                got: labels.len(),
            });
        }
        self.u_labels = labels;
        Ok(self)
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    pub fn num_v(&self) -> usize {
        self.num_v
    }

    pub fn num_u(&self) -> usize {
        self.num_u
    }

    pub fn num_w(&self) -> usize {
        self.num_w
    }

    pub fn num_edges(&self) -> usize {
        self.edge_v.len()
    }

    pub fn p_v(&self) -> &[f64] {
        &self.p_v
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// True when `p(w|u,v)` does not depend on `u` (lossy-computing problems).
    pub fn is_markov(&self) -> bool {
        self.markov
    }

    /// Provenance label of each `u` (the tuple code in the builder's alphabet).
    pub fn u_labels(&self) -> &[u64] {
        &self.u_labels
    }

    pub fn edge(&self, e: usize) -> EdgeRef {
        EdgeRef {
            v: self.edge_v[e] as usize,
            u: self.edge_u[e] as usize,
            loss: self.edge_loss[e],
            channel: self.edge_channel[e] as usize,
        }
    }

    #[inline]
    pub fn edge_v(&self, e: usize) -> usize {
        self.edge_v[e] as usize
    }

    #[inline]
    pub fn edge_u(&self, e: usize) -> usize {
        self.edge_u[e] as usize
    }

    #[inline]
    pub fn edge_loss(&self, e: usize) -> f64 {
        self.edge_loss[e]
    }

    pub fn losses(&self) -> &[f64] {
        &self.edge_loss
    }

    /// Edge indices of `E_v`, sorted by `u`.
    #[inline]
    pub fn edges_of_v(&self, v: usize) -> Range<usize> {
        self.v_offsets[v]..self.v_offsets[v + 1]
    }

    /// Edge indices of `E^u`, sorted by `v`.
    pub fn edges_of_u(&self, u: usize) -> &[u32] {
        &self.u_edges[self.u_offsets[u]..self.u_offsets[u + 1]]
    }

    /// Index of edge `(v,u)`, if present.
    pub fn find_edge(&self, v: usize, u: usize) -> Option<usize> {
        let r = self.edges_of_v(v);
        self.edge_u[r.clone()]
            .binary_search(&(u as u32))
            .ok()
            .map(|i| r.start + i)
    }

    /// Sparse `p(·|u,v)` of edge `e`: positive entries only, sorted by `w`.
    #[inline]
    pub fn channel_of_edge(&self, e: usize) -> (&[u32], &[f64]) {
        self.channels.row(self.edge_channel[e] as usize)
    }

    /// `p(w|u,v)` for edge `e`.
    pub fn p_w_given_edge(&self, e: usize, w: usize) -> f64 {
        let (ws, ps) = self.channel_of_edge(e);
        ws.binary_search(&(w as u32)).map_or(0.0, |i| ps[i])
    }

    /// True when the output rows of edges `a` and `b` agree within [`ROW_EQ_TOL`].
    pub fn same_channel(&self, a: usize, b: usize) -> bool {
        self.channels
            .rows_equal(self.edge_channel[a] as usize, self.edge_channel[b] as usize)
    }

    /// Membership in `F = {(u,w) : ∃v, (v,u) ∈ E, p(w|u,v) > 0}`.
    #[inline]
    pub fn in_f_support(&self, u: usize, w: usize) -> bool {
        self.f_support[u * self.num_w + w]
    }

    pub fn f_support_size(&self) -> usize {
        self.f_support.iter().filter(|&&b| b).count()
    }

    /// Canonical id per edge such that equal ids mean equal output rows.
    pub(crate) fn canonical_channel_ids(&self) -> Vec<usize> {
        let n = self.channels.len();
        let mut canon: Vec<usize> = (0..n).collect();
        let mut by_support: HashMap<&[u32], Vec<usize>> = HashMap::new();
        for c in 0..n {
            let (ws, _) = self.channels.row(c);
            let reps = by_support.entry(ws).or_default();
            match reps.iter().find(|&&r| self.channels.rows_equal(r, c)) {
                Some(&r) => canon[c] = r,
                None => reps.push(c),
            }
        }
        canon
    }

    #[inline]
    pub(crate) fn channel_index(&self, e: usize) -> usize {
        self.edge_channel[e] as usize
    }
}

/// Builds a problem with one output distribution per edge.
///
/// `edges[i] = (v, u)` carries `p_w_given_edge[i]` and `loss_per_edge[i]`.
pub fn build_unified_problem(
    num_u: usize,
    edges: &[(usize, usize)],
    p_v: &[f64],
    p_w_given_edge: &[Vec<f64>],
    loss_per_edge: &[f64],
    sense: Sense,
) -> Result<UnifiedProblem> {
    if edges.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    for (what, got) in [
        ("p(w|u,v) rows", p_w_given_edge.len()),
        ("loss per edge", loss_per_edge.len()),
    ] {
        if got != edges.len() {
            return Err(Error::DimensionMismatch {
                what: what.into(),
                expected: edges.len(),
                got,
            });
        }
    }
    let specs = edges
        .iter()
        .zip(loss_per_edge)
        .enumerate()
        .map(|(i, (&(v, u), &loss))| EdgeSpec {
            v,
            u,
            loss,
            channel: i,
        })
        .collect();
    UnifiedProblem::from_parts(num_u, p_v, p_w_given_edge, specs, sense)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_instance() {
        let p = build_unified_problem(1, &[(0, 0)], &[1.0], &[vec![1.0]], &[0.0], Sense::Minimize).unwrap();
        assert_eq!(p.num_edges(), 1);
        assert!(p.in_f_support(0, 0));
        assert_eq!(p.f_support_size(), 1);
        assert!(p.is_markov());
    }

    #[test]
    fn rejects_zero_source_mass() {
        let err = build_unified_problem(
            1,
            &[(0, 0), (1, 0), (2, 0)],
            &[0.5, 0.5, 0.0],
            &[vec![1.0], vec![1.0], vec![1.0]],
            &[0.0; 3],
            Sense::Minimize,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
    }

    #[test]
    fn rejects_isolated_vertex_and_unreachable_output() {
        let err = build_unified_problem(1, &[(0, 0)], &[0.5, 0.5], &[vec![1.0]], &[0.0], Sense::Minimize)
            .unwrap_err();
        assert_eq!(err, Error::IsolatedVertex(1));

        let err = build_unified_problem(1, &[(0, 0)], &[1.0], &[vec![1.0, 0.0]], &[0.0], Sense::Minimize)
            .unwrap_err();
        assert_eq!(err, Error::UnreachableOutput(1));

        let err = build_unified_problem(1, &[], &[1.0], &[], &[], Sense::Minimize).unwrap_err();
        assert_eq!(err, Error::EmptyEdgeSet);
    }

    #[test]
    fn rejects_bad_rows() {
        let err = build_unified_problem(1, &[(0, 0)], &[1.0], &[vec![0.5, 0.4]], &[0.0], Sense::Minimize)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
        let err = build_unified_problem(1, &[(0, 0)], &[1.0], &[vec![1.2, -0.2]], &[0.0], Sense::Minimize)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
        let err = build_unified_problem(1, &[(0, 0)], &[1.0], &[vec![1.0]], &[-1.0], Sense::Minimize)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidLoss { .. }));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let p = build_unified_problem(
            2,
            &[(0, 0), (0, 1)],
            &[1.0 + 1e-10],
            &[vec![0.5, 0.5 + 1e-10], vec![1.0, 0.0]],
            &[0.0, 1.0],
            Sense::Minimize,
        )
        .unwrap();
        assert!((p.p_v()[0] - 1.0).abs() < 1e-15);
        let (_, ps) = p.channel_of_edge(0);
        assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(!p.is_markov());
        // (1, w=1) is not in F: only edge (0,1) has u=1 and it never emits w=1
        assert!(!p.in_f_support(1, 1));
        assert!(p.in_f_support(0, 1));
    }

    #[test]
    fn adjacency_is_consistent() {
        let p = build_unified_problem(
            3,
            &[(1, 2), (0, 1), (0, 0), (1, 0)],
            &[0.5, 0.5],
            &[vec![1.0], vec![1.0], vec![1.0], vec![1.0]],
            &[0.0, 1.0, 2.0, 3.0],
            Sense::Minimize,
        )
        .unwrap();
        assert_eq!(p.edges_of_v(0).len(), 2);
        assert_eq!(p.edges_of_u(0).len(), 2);
        for v in 0..2 {
            for e in p.edges_of_v(v) {
                assert_eq!(p.edge_v(e), v);
                assert_eq!(p.find_edge(v, p.edge_u(e)), Some(e));
            }
        }
        assert_eq!(p.find_edge(0, 2), None);
        let e = p.find_edge(1, 2).unwrap();
        assert_eq!(p.edge_loss(e), 0.0);
    }
}
