//! Support deflation: drop `u` symbols whose marginal has collapsed.

use crate::error::{Error, Result};
use crate::problem::UnifiedProblem;
use crate::weights::EdgeWeight;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflationOptions {
    /// Prune every `period` iterations.
    pub period: usize,
    /// Prune `u` when `p(u) < threshold_scale / |U|`.
    pub threshold_scale: f64,
    /// Edges kept per `v` at the least.
    pub min_support: usize,
}

impl Default for DeflationOptions {
    fn default() -> Self {
        Self {
            period: 5,
            threshold_scale: 1e-2,
            min_support: 1,
        }
    }
}

impl DeflationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::InvalidOptions("deflation period must be at least 1".into()));
        }
        if !(self.threshold_scale > 0.0 && self.threshold_scale < 1.0) {
            return Err(Error::InvalidOptions(format!(
                "deflation threshold scale {} outside (0, 1)",
                self.threshold_scale
            )));
        }
        if self.min_support == 0 {
            return Err(Error::InvalidOptions("deflation min_support must be at least 1".into()));
        }
        Ok(())
    }
}

/// A pruned problem with its weight and, for each kept `u`, its index in the
/// input problem.
#[derive(Debug, Clone)]
pub struct Deflated {
    pub problem: UnifiedProblem,
    pub q: EdgeWeight,
    pub kept_u: Vec<usize>,
}

/// Prunes low-marginal symbols, keeping enough per `v` to stay valid, and
/// renormalizes the surviving rows.
pub fn deflate_step(problem: &UnifiedProblem, q: &EdgeWeight, options: &DeflationOptions) -> Deflated {
    match try_deflate(problem, q, options) {
        Some(d) => d,
        None => Deflated {
            problem: problem.clone(),
            q: q.clone(),
            kept_u: (0..problem.num_u()).collect(),
        },
    }
}

/// Like [`deflate_step`] but returns `None` when nothing would be pruned.
pub(crate) fn try_deflate(problem: &UnifiedProblem, q: &EdgeWeight, options: &DeflationOptions) -> Option<Deflated> {
    let marginal = q.u_marginal(problem);
    let threshold = options.threshold_scale / problem.num_u() as f64;
    let mut keep_u: Vec<bool> = marginal.iter().map(|&m| m >= threshold).collect();
    if keep_u.iter().all(|&k| k) {
        return None;
    }
    for v in 0..problem.num_v() {
        let row = problem.edges_of_v(v);
        let need = options.min_support.min(row.len());
        let kept = row.clone().filter(|&e| keep_u[problem.edge_u(e)]).count();
        if kept >= need {
            continue;
        }
        let mut by_weight: Vec<usize> = row.filter(|&e| !keep_u[problem.edge_u(e)]).collect();
        by_weight.sort_by(|&a, &b| q.get(b).total_cmp(&q.get(a)));
        for &e in by_weight.iter().take(need - kept) {
            keep_u[problem.edge_u(e)] = true;
        }
    }
    let keep: Vec<bool> = (0..problem.num_edges()).map(|e| keep_u[problem.edge_u(e)]).collect();
    let (reduced, kept_u) = problem
        .restrict_edges(&keep, false)
        .expect("every v keeps at least one edge");

    let mut values: Vec<f64> = (0..problem.num_edges())
        .filter(|&e| keep[e])
        .map(|e| q.get(e))
        .collect();
    for v in 0..reduced.num_v() {
        let row = &mut values[reduced.edges_of_v(v)];
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|x| *x /= total);
        } else {
            let x = 1.0 / row.len() as f64;
            row.iter_mut().for_each(|y| *y = x);
        }
    }
    Some(Deflated {
        problem: reduced,
        q: EdgeWeight::from_raw(values),
        kept_u,
    })
}

/// Lifts a weight on a deflated problem back to the original one; `kept_u`
/// maps reduced `u` indices to original ones.
pub fn embed_weight(original: &UnifiedProblem, reduced: &UnifiedProblem, q: &EdgeWeight, kept_u: &[usize]) -> EdgeWeight {
    let mut values = vec![0.0; original.num_edges()];
    for (e, &x) in q.values().iter().enumerate() {
        let v = reduced.edge_v(e);
        let e0 = original
            .find_edge(v, kept_u[reduced.edge_u(e)])
            .expect("reduced edges come from the original edge set");
        values[e0] = x;
    }
    EdgeWeight::from_raw(values)
}
