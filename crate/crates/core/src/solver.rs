//! Alternating minimization over `(q, r)` with a Newton-updated multiplier.
//!
//! For fixed `r` the optimal weight is a tilted distribution
//! `q(u|v) ∝ exp(-s l(v,u)) Π_w r(u|w)^{p(w|u,v)}`; its expected loss `G_r(s)`
//! is nonincreasing in `s`, and `s` is chosen each round so that `G_r(s)`
//! meets the loss budget.

use std::borrow::Cow;
use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::deflation::{try_deflate, DeflationOptions};
use crate::error::{Error, Result};
use crate::graph::min_loss_reduce_with_map;
use crate::measures::{
    boundary_eps, classify_constraint, expected_loss, generalized_divergence, loss_bounds, zero_rate_point,
    Regime,
};
use crate::problem::UnifiedProblem;
use crate::weights::{EdgeWeight, ReverseChannel};

const LOG_FLOOR: f64 = -745.0;
const BRACKET_LIMIT: f64 = 18_446_744_073_709_551_616.0;

/// How the multiplier `s` is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Keep `s` fixed; traces one point of the curve.
    FixedS(f64),
    /// `s = 0` if the unconstrained step is feasible, else the root `s ≥ 0`.
    Strategy1,
    /// The root of `G_r(s) = L` of either sign.
    Strategy2,
    /// `s = 0`.
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Stop once the value changes by less than this over 10 iterations.
    pub early_stop_tol: Option<f64>,
    pub strategy: Strategy,
    pub deflation: Option<DeflationOptions>,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            newton_tol: 1e-12,
            newton_max_iter: 100,
            early_stop_tol: None,
            strategy: Strategy::Strategy1,
            deflation: None,
            record_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidOptions("max_iter must be at least 1".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidOptions("newton_max_iter must be at least 1".into()));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(Error::InvalidOptions(format!("newton_tol {} must be positive", self.newton_tol)));
        }
        if let Some(t) = self.early_stop_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidOptions(format!("early_stop_tol {t} must be positive")));
            }
        }
        if let Strategy::FixedS(s) = self.strategy {
            if !s.is_finite() {
                return Err(Error::InvalidOptions(format!("fixed multiplier {s} is not finite")));
            }
        }
        if let Some(d) = &self.deflation {
            d.validate()?;
        }
        Ok(())
    }
}

/// State after one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub value_bits: f64,
    pub loss: f64,
    pub s: f64,
    pub support_u: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// `T(L)` in bits, or the capacity for negated problems.
    pub value_bits: f64,
    pub achieved_loss: f64,
    pub final_q: EdgeWeight,
    pub final_r: ReverseChannel,
    pub final_s: f64,
    pub iterations_run: usize,
    /// Number of `u` with positive marginal under `final_q`.
    pub support_u: usize,
    /// Constraint regime of the budget; `None` without a budget.
    pub regime: Option<Regime>,
    pub trace: Option<Vec<TracePoint>>,
}

/// `r*(q)(u|w) ∝ Σ_v p(v) q(u|v) p(w|u,v)`; uniform over `F` where `q(w) = 0`.
pub fn update_r(problem: &UnifiedProblem, q: &EdgeWeight) -> ReverseChannel {
    let (nu, nw) = (problem.num_u(), problem.num_w());
    let mut values = vec![0.0; nu * nw];
    let p_v = problem.p_v();
    for (e, &qe) in q.values().iter().enumerate() {
        if qe == 0.0 {
            continue;
        }
        let m = p_v[problem.edge_v(e)] * qe;
        let base = problem.edge_u(e) * nw;
        let (ws, ps) = problem.channel_of_edge(e);
        for (&w, &p) in ws.iter().zip(ps) {
            values[base + w as usize] += m * p;
        }
    }
    let mut q_w = vec![0.0; nw];
    for row in values.chunks_exact(nw) {
        for (acc, &x) in q_w.iter_mut().zip(row) {
            *acc += x;
        }
    }
    let mut empty = Vec::new();
    for (w, qw) in q_w.iter_mut().enumerate() {
        if *qw > 0.0 {
            *qw = 1.0 / *qw;
        } else {
            empty.push(w);
        }
    }
    for row in values.chunks_exact_mut(nw) {
        for (x, &inv) in row.iter_mut().zip(&q_w) {
            *x *= inv;
        }
    }
    for w in empty {
        let count = (0..nu).filter(|&u| problem.in_f_support(u, w)).count();
        for u in 0..nu {
            values[u * nw + w] = if problem.in_f_support(u, w) {
                1.0 / count as f64
            } else {
                0.0
            };
        }
    }
    ReverseChannel::from_raw(nu, nw, values)
}

/// Per-edge `Σ_w p(w|u,v) log r(u|w)`, `-∞` when `r` vanishes on the row.
fn tilt(problem: &UnifiedProblem, r: &ReverseChannel) -> Vec<f64> {
    let nw = problem.num_w();
    let log_r: Vec<f64> = r
        .values()
        .iter()
        .map(|&x| if x > 0.0 { x.ln().max(LOG_FLOOR) } else { f64::NEG_INFINITY })
        .collect();
    (0..problem.num_edges())
        .map(|e| {
            let base = problem.edge_u(e) * nw;
            let (ws, ps) = problem.channel_of_edge(e);
            let mut acc = 0.0;
            for (&w, &p) in ws.iter().zip(ps) {
                acc += p * log_r[base + w as usize];
            }
            acc
        })
        .collect()
}

fn row_max(problem: &UnifiedProblem, a: &[f64], s: f64, v: usize) -> Result<f64> {
    let m = problem
        .edges_of_v(v)
        .map(|e| a[e] - s * problem.edge_loss(e))
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        Err(Error::AllZeroRow(v))
    } else {
        Ok(m)
    }
}

/// Tilted weight for a given tilt; also returns `Σ_v p(v) ln Z_v`.
fn q_from_tilt(problem: &UnifiedProblem, a: &[f64], s: f64) -> Result<(EdgeWeight, f64)> {
    let mut values = vec![0.0; problem.num_edges()];
    let mut log_z = 0.0;
    for v in 0..problem.num_v() {
        let m = row_max(problem, a, s, v)?;
        let range = problem.edges_of_v(v);
        let mut z = 0.0;
        for e in range.clone() {
            let x = (a[e] - s * problem.edge_loss(e) - m).exp();
            values[e] = x;
            z += x;
        }
        values[range].iter_mut().for_each(|x| *x /= z);
        log_z += problem.p_v()[v] * (m + z.ln());
    }
    Ok((EdgeWeight::from_raw(values), log_z))
}

/// `G_r(s)` and `G'_r(s)` for a given tilt.
fn curve(problem: &UnifiedProblem, a: &[f64], s: f64) -> Result<(f64, f64)> {
    let (mut g, mut dg) = (0.0, 0.0);
    for v in 0..problem.num_v() {
        let m = row_max(problem, a, s, v)?;
        let range = problem.edges_of_v(v);
        let (mut t0, mut t1) = (0.0, 0.0);
        for e in range.clone() {
            let x = (a[e] - s * problem.edge_loss(e) - m).exp();
            t0 += x;
            t1 += x * problem.edge_loss(e);
        }
        let mean = t1 / t0;
        let mut var = 0.0;
        for e in range {
            let x = (a[e] - s * problem.edge_loss(e) - m).exp();
            let d = problem.edge_loss(e) - mean;
            var += x * d * d;
        }
        let p = problem.p_v()[v];
        g += p * mean;
        dg -= p * var / t0;
    }
    Ok((g, dg))
}

/// `q*_s(r)`: the tilted weight minimizing the penalty for fixed `r` and `s`.
pub fn update_q(problem: &UnifiedProblem, r: &ReverseChannel, s: f64) -> Result<EdgeWeight> {
    q_from_tilt(problem, &tilt(problem, r), s).map(|(q, _)| q)
}

/// `(G_r(s), G'_r(s))` where `G_r(s)` is the expected loss of `q*_s(r)`.
pub fn dual_curve(problem: &UnifiedProblem, r: &ReverseChannel, s: f64) -> Result<(f64, f64)> {
    curve(problem, &tilt(problem, r), s)
}

struct RootSearch<'a> {
    problem: &'a UnifiedProblem,
    a: &'a [f64],
    target: f64,
    tol: f64,
    max_iter: usize,
}

impl RootSearch<'_> {
    fn new<'a>(problem: &'a UnifiedProblem, a: &'a [f64], target: f64, tol: f64, max_iter: usize) -> RootSearch<'a> {
        RootSearch {
            problem,
            a,
            target,
            tol: tol * target.abs().max(1.0),
            max_iter,
        }
    }

    fn eval(&self, s: f64) -> Result<(f64, f64)> {
        curve(self.problem, self.a, s)
    }

    fn not_bracketed(&self) -> Error {
        Error::RootNotBracketed {
            target: self.target,
            limit: BRACKET_LIMIT,
        }
    }

    /// Walks from `s0` in steps doubling from `max(1, |s0|)` until the
    /// root is bracketed; returns `(lo, hi)` with `G(lo) ≥ L ≥ G(hi)`.
    fn bracket(&self, s0: f64, g0: f64, lower: Option<f64>) -> Result<(f64, f64)> {
        let mut step = s0.abs().max(1.0);
        if g0 > self.target {
            let mut lo = s0;
            loop {
                let hi = lo + step;
                if hi.abs() > BRACKET_LIMIT {
                    return Err(self.not_bracketed());
                }
                if self.eval(hi)?.0 <= self.target {
                    return Ok((lo, hi));
                }
                lo = hi;
                step *= 2.0;
            }
        } else {
            let mut hi = s0;
            loop {
                let mut lo = hi - step;
                if let Some(b) = lower {
                    if lo <= b {
                        lo = b;
                    }
                }
                if lo.abs() > BRACKET_LIMIT {
                    return Err(self.not_bracketed());
                }
                if lo == hi || self.eval(lo)?.0 >= self.target {
                    return Ok((lo, hi));
                }
                hi = lo;
                step *= 2.0;
            }
        }
    }

    /// Newton iteration safeguarded by bisection inside `[lo, hi]`.
    fn newton(&self, mut lo: f64, mut hi: f64, s0: f64) -> Result<f64> {
        let mut s = s0.clamp(lo, hi);
        for _ in 0..self.max_iter {
            let (g, dg) = self.eval(s)?;
            let err = g - self.target;
            if err.abs() <= self.tol {
                return Ok(s);
            }
            if err > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
            let next = if dg < 0.0 { s - err / dg } else { f64::NAN };
            s = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        Ok(hi)
    }
}

fn strategy1_from_tilt(
    problem: &UnifiedProblem,
    a: &[f64],
    loss: f64,
    warm: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let search = RootSearch::new(problem, a, loss, tol, max_iter);
    let (g0, _) = search.eval(0.0)?;
    if g0 - loss <= search.tol {
        return Ok(0.0);
    }
    let start = if warm > 0.0 { warm } else { 1.0 };
    let (g, _) = search.eval(start)?;
    if (g - loss).abs() <= search.tol {
        return Ok(start);
    }
    let (lo, hi) = if g > loss {
        search.bracket(start, g, None)?
    } else {
        (0.0, start)
    };
    search.newton(lo, hi, start)
}

fn strategy2_from_tilt(
    problem: &UnifiedProblem,
    a: &[f64],
    loss: f64,
    warm: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let search = RootSearch::new(problem, a, loss, tol, max_iter);
    let s0 = if warm.is_finite() { warm } else { 0.0 };
    let (g, _) = search.eval(s0)?;
    if (g - loss).abs() <= search.tol {
        return Ok(s0);
    }
    let (lo, hi) = search.bracket(s0, g, None)?;
    search.newton(lo, hi, s0)
}

/// Multiplier by the first strategy: `0` when `G_r(0) ≤ L`, else the root
/// `s ≥ 0` of `G_r(s) = L`.
pub fn find_s_strategy1(problem: &UnifiedProblem, r: &ReverseChannel, loss: f64) -> Result<f64> {
    let o = SolveOptions::default();
    strategy1_from_tilt(problem, &tilt(problem, r), loss, 0.0, o.newton_tol, o.newton_max_iter)
}

/// Multiplier by the second strategy: the root of `G_r(s) = L` of either sign.
pub fn find_s_strategy2(problem: &UnifiedProblem, r: &ReverseChannel, loss: f64) -> Result<f64> {
    let o = SolveOptions::default();
    strategy2_from_tilt(problem, &tilt(problem, r), loss, 0.0, o.newton_tol, o.newton_max_iter)
}

/// `-Σ_v p(v) log2 Σ_{E_v} exp(-s l) Π_w r^{p(w|u,v)} - s L / ln 2`.
///
/// With `r` from the last round, `s` its multiplier and `L` the loss of the
/// resulting weight, this is the generalized divergence of that weight.
pub fn stable_value(problem: &UnifiedProblem, r: &ReverseChannel, s: f64, loss: f64) -> Result<f64> {
    let (_, log_z) = q_from_tilt(problem, &tilt(problem, r), s)?;
    Ok(value_from_log_z(log_z, s, loss))
}

fn value_from_log_z(log_z: f64, s: f64, loss: f64) -> f64 {
    let penalty = if s == 0.0 { 0.0 } else { s * loss };
    (-log_z - penalty) / LN_2
}

/// `F_s(q, r) = GD(q‖r) + s Loss(q) / ln 2`, in bits.
pub fn penalty(problem: &UnifiedProblem, q: &EdgeWeight, r: &ReverseChannel, s: f64) -> f64 {
    generalized_divergence(problem, q, r) + s * expected_loss(problem, q) / LN_2
}

struct Run<'a> {
    problem: Cow<'a, UnifiedProblem>,
    /// Index in the input problem of every current `u`; `None` if unchanged.
    kept_u: Option<Vec<usize>>,
    q: EdgeWeight,
    r: ReverseChannel,
    s: f64,
    value: f64,
    iterations: usize,
    trace: Option<Vec<TracePoint>>,
}

fn iterate<'a>(problem: &'a UnifiedProblem, loss: Option<f64>, options: &SolveOptions) -> Result<Run<'a>> {
    let mut current = Cow::Borrowed(problem);
    let mut kept_u: Option<Vec<usize>> = None;
    let mut q = EdgeWeight::uniform(problem);
    let mut s = match options.strategy {
        Strategy::FixedS(s) => s,
        _ => 0.0,
    };
    let mut trace = options.record_trace.then(Vec::new);
    let mut history: Vec<f64> = Vec::new();
    let mut r = None;
    let mut value = f64::NAN;
    let mut iterations = 0;
    let target = loss.unwrap_or(f64::NAN);

    for n in 1..=options.max_iter {
        let p = current.as_ref();
        let r_n = update_r(p, &q);
        let a = tilt(p, &r_n);
        s = match options.strategy {
            Strategy::FixedS(x) => x,
            Strategy::Unconstrained => 0.0,
            Strategy::Strategy1 => {
                strategy1_from_tilt(p, &a, target, s, options.newton_tol, options.newton_max_iter)?
            }
            Strategy::Strategy2 => {
                strategy2_from_tilt(p, &a, target, s, options.newton_tol, options.newton_max_iter)?
            }
        };
        let (q_n, log_z) = q_from_tilt(p, &a, s)?;
        q = q_n;
        r = Some(r_n);
        value = value_from_log_z(log_z, s, expected_loss(p, &q));
        iterations = n;
        if let Some(t) = trace.as_mut() {
            t.push(TracePoint {
                iteration: n,
                value_bits: p.sense().report(value),
                loss: expected_loss(p, &q),
                s,
                support_u: q.support_size(p),
            });
        }
        history.push(value);
        if let Some(tol) = options.early_stop_tol {
            if n > 10 && (value - history[n - 11]).abs() < tol {
                break;
            }
        }
        if let Some(d) = &options.deflation {
            if n < options.max_iter && n % d.period == d.period - 1 {
                if let Some(out) = try_deflate(p, &q, d) {
                    kept_u = Some(match kept_u {
                        None => out.kept_u,
                        Some(prev) => out.kept_u.iter().map(|&u| prev[u]).collect(),
                    });
                    q = out.q;
                    current = Cow::Owned(out.problem);
                }
            }
        }
    }
    Ok(Run {
        problem: current,
        kept_u,
        q,
        r: r.expect("at least one iteration"),
        s,
        value,
        iterations,
        trace,
    })
}

/// Lifts `q` and `r` on a problem over a subset of `U` back to `original`.
fn lift(
    original: &UnifiedProblem,
    reduced: &UnifiedProblem,
    kept_u: &[usize],
    q: &EdgeWeight,
    r: &ReverseChannel,
) -> (EdgeWeight, ReverseChannel) {
    let q_full = crate::deflation::embed_weight(original, reduced, q, kept_u);
    let nw = original.num_w();
    let mut values = vec![0.0; original.num_u() * nw];
    for (u, &u0) in kept_u.iter().enumerate() {
        values[u0 * nw..(u0 + 1) * nw].copy_from_slice(r.row(u));
    }
    (q_full, ReverseChannel::from_raw(original.num_u(), nw, values))
}

fn finish(problem: &UnifiedProblem, run: Run<'_>, regime: Option<Regime>) -> SolveResult {
    let (q, r) = match &run.kept_u {
        Some(kept) => lift(problem, &run.problem, kept, &run.q, &run.r),
        None => (run.q, run.r),
    };
    SolveResult {
        value_bits: problem.sense().report(run.value),
        achieved_loss: expected_loss(problem, &q),
        support_u: q.support_size(problem),
        final_q: q,
        final_r: r,
        final_s: run.s,
        iterations_run: run.iterations,
        regime,
        trace: run.trace,
    }
}

fn point_mass(problem: &UnifiedProblem, block_of_v: &[usize], u_of_block: &[usize]) -> SolveResult {
    let mut values = vec![0.0; problem.num_edges()];
    for v in 0..problem.num_v() {
        let e = problem
            .find_edge(v, u_of_block[block_of_v[v]])
            .expect("zero-rate reconstruction is adjacent to its block");
        values[e] = 1.0;
    }
    let q = EdgeWeight::from_raw(values);
    let r = update_r(problem, &q);
    SolveResult {
        value_bits: problem.sense().report(0.0),
        achieved_loss: expected_loss(problem, &q),
        support_u: q.support_size(problem),
        final_q: q,
        final_r: r,
        final_s: 0.0,
        iterations_run: 0,
        regime: None,
        trace: None,
    }
}

/// Solves the problem at loss budget `loss`, or without a budget for the
/// unconstrained and fixed-multiplier strategies.
pub fn solve(problem: &UnifiedProblem, loss: Option<f64>, options: &SolveOptions) -> Result<SolveResult> {
    options.validate()?;
    let loss = match (loss, options.strategy) {
        (None, Strategy::Unconstrained | Strategy::FixedS(_)) => {
            let run = iterate(problem, None, options)?;
            return Ok(finish(problem, run, None));
        }
        (None, _) => {
            return Err(Error::InvalidOptions(
                "Strategy1 and Strategy2 need a loss budget".into(),
            ))
        }
        (Some(_), Strategy::Unconstrained | Strategy::FixedS(_)) => {
            return Err(Error::InvalidOptions(
                "a loss budget requires Strategy1 or Strategy2".into(),
            ))
        }
        (Some(l), _) => l,
    };
    if !loss.is_finite() {
        return Err(Error::DomainError {
            what: "loss budget",
            value: loss,
        });
    }
    let unconstrained = SolveOptions {
        strategy: Strategy::Unconstrained,
        ..options.clone()
    };
    let bounds = loss_bounds(problem);
    let regime = classify_constraint(loss, &bounds);
    match regime {
        Regime::Infeasible => Err(Error::InfeasibleLoss {
            loss,
            l_min: bounds.l_min,
        }),
        Regime::Minimum => {
            let (reduced, kept) = min_loss_reduce_with_map(problem);
            let run = iterate(&reduced, None, &unconstrained)?;
            let inner = finish(&reduced, run, Some(regime));
            let (q, r) = lift(problem, &reduced, &kept, &inner.final_q, &inner.final_r);
            Ok(SolveResult {
                achieved_loss: expected_loss(problem, &q),
                support_u: q.support_size(problem),
                final_q: q,
                final_r: r,
                ..inner
            })
        }
        Regime::Interior | Regime::Slack => {
            if problem.is_markov() {
                if let Ok(z) = zero_rate_point(problem) {
                    if loss >= z.loss - boundary_eps(&bounds) {
                        return Ok(SolveResult {
                            regime: Some(regime),
                            ..point_mass(problem, &z.block_of_v, &z.u_of_block)
                        });
                    }
                }
            }
            if regime == Regime::Slack {
                let run = iterate(problem, None, &unconstrained)?;
                return Ok(finish(problem, run, Some(regime)));
            }
            if options.strategy == Strategy::Strategy2 && !problem.is_markov() {
                return Err(Error::InvalidOptions(
                    "Strategy2 requires a Markov problem below its zero-rate loss".into(),
                ));
            }
            let run = iterate(problem, Some(loss), options)?;
            Ok(finish(problem, run, Some(regime)))
        }
    }
}

/// Solves one problem at many budgets in parallel.
pub fn solve_sweep(problem: &UnifiedProblem, losses: &[f64], options: &SolveOptions) -> Vec<Result<SolveResult>> {
    losses.par_iter().map(|&l| solve(problem, Some(l), options)).collect()
}
