//! Reference values: closed-form curves of the worked examples and a
//! brute-force grid search for small problems.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::loss_bounds;
use crate::problem::UnifiedProblem;

/// `-x log2 x - (1-x) log2 (1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError {
            what: "binary entropy",
            value: x,
        });
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Curves with known closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceCurve {
    /// Card game, encoder sees `X`, decoder sees `Y`.
    R1,
    /// Card game, encoder sees `(X, Y)`, decoder sees nothing.
    R2,
    /// Card game, encoder sees `(X, Y)`, decoder sees `Y`.
    R3,
    /// Stuck-at memory, state unknown.
    C1,
    /// Stuck-at memory, state at the encoder.
    C2,
    /// Stuck-at memory, state at the decoder.
    C3,
    /// Stuck-at memory, state at both ends.
    C4,
    /// `1/2 log2(1 + B)`, the Gaussian capacity with the full state known.
    DirtyPaper,
}

impl ReferenceCurve {
    pub const ALL: [ReferenceCurve; 8] = [
        Self::R1,
        Self::R2,
        Self::R3,
        Self::C1,
        Self::C2,
        Self::C3,
        Self::C4,
        Self::DirtyPaper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::R1 => "R1",
            Self::R2 => "R2",
            Self::R3 => "R3",
            Self::C1 => "C1",
            Self::C2 => "C2",
            Self::C3 => "C3",
            Self::C4 => "C4",
            Self::DirtyPaper => "DirtyPaper",
        }
    }

    /// Evaluates the curve at a distortion, fault probability or power.
    pub fn eval(self, x: f64) -> Result<f64> {
        let h = binary_entropy;
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::DomainError {
                    what: "reference curve parameter",
                    value: x,
                })
            }
        };
        match self {
            Self::R1 | Self::R2 | Self::R3 => domain(x >= 0.0)?,
            Self::C1 | Self::C2 | Self::C3 | Self::C4 => domain((0.0..=1.0).contains(&x))?,
            Self::DirtyPaper => domain(x >= 0.0)?,
        }
        Ok(match self {
            Self::R1 if x <= 1.0 / 6.0 => 2.0 / 3.0 * (h((1.0 + 6.0 * x) / 4.0)? - h(3.0 * x)?),
            Self::R2 if x <= 0.5 => 1.0 - h(x)?,
            Self::R3 if x <= 1.0 / 6.0 => (1.0 - h(3.0 * x)?) / 3.0,
            Self::R1 | Self::R2 | Self::R3 => 0.0,
            Self::C1 => 1.0 - h(x / 2.0)?,
            Self::C2 | Self::C3 | Self::C4 => 1.0 - x,
            Self::DirtyPaper => 0.5 * (1.0 + x).log2(),
        }
        .max(0.0))
    }
}

impl FromStr for ReferenceCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownIdentifier(s.to_string()))
    }
}

/// Evaluates a reference curve by name.
pub fn reference(identifier: &str, parameter: f64) -> Result<f64> {
    identifier.parse::<ReferenceCurve>()?.eval(parameter)
}

/// Largest edge set the grid search accepts.
pub const GRID_MAX_EDGES: usize = 12;
/// Largest number of grid points the search visits.
pub const GRID_MAX_POINTS: u128 = 20_000_000;

/// Minimum of `I(U;V) - I(U;W)` over weights whose rows are multiples of
/// `1/m`, subject to `Loss ≤ L + l_Max / (2m)`.
///
/// The returned value is the minimized objective in bits, not negated for
/// capacity problems.
pub fn grid_oracle(problem: &UnifiedProblem, loss: f64, resolution: usize) -> Result<f64> {
    if resolution < 10 {
        return Err(Error::InvalidOptions(format!("grid resolution {resolution} below 10")));
    }
    if problem.num_edges() > GRID_MAX_EDGES {
        return Err(Error::TooLarge(format!(
            "{} edges, at most {GRID_MAX_EDGES} supported",
            problem.num_edges()
        )));
    }
    let rows: Vec<Vec<Vec<f64>>> = (0..problem.num_v())
        .map(|v| compositions(resolution, problem.edges_of_v(v).len()))
        .collect();
    let points = rows.iter().map(|r| r.len() as u128).product::<u128>();
    if points > GRID_MAX_POINTS {
        return Err(Error::TooLarge(format!("{points} grid points at resolution {resolution}")));
    }
    let bounds = loss_bounds(problem);
    let budget = loss + bounds.l_max / (2.0 * resolution as f64);
    let eval = Evaluator::new(problem);

    let best = rows[0]
        .par_iter()
        .map(|first| {
            let mut scratch = Scratch::new(problem);
            let mut idx = vec![0usize; rows.len()];
            let mut q = vec![0.0; problem.num_edges()];
            let mut best = f64::INFINITY;
            loop {
                let mut offset = 0;
                for (v, row) in rows.iter().enumerate() {
                    let chosen = if v == 0 { first } else { &row[idx[v]] };
                    q[offset..offset + chosen.len()].copy_from_slice(chosen);
                    offset += chosen.len();
                }
                if eval.loss(&q) <= budget {
                    best = best.min(eval.objective(&q, &mut scratch));
                }
                // odometer over rows 1..
                let mut v = 1;
                while v < rows.len() {
                    idx[v] += 1;
                    if idx[v] < rows[v].len() {
                        break;
                    }
                    idx[v] = 0;
                    v += 1;
                }
                if v >= rows.len() {
                    return best;
                }
            }
        })
        .reduce(|| f64::INFINITY, f64::min);
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InfeasibleLoss {
            loss,
            l_min: bounds.l_min,
        })
    }
}

/// All vectors of `k` multiples of `1/m` summing to one.
fn compositions(m: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, slots - 1, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, k, m, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Direct evaluation of mutual informations from the joint `p(v,u,w)`.
struct Evaluator<'a> {
    problem: &'a UnifiedProblem,
}

struct Scratch {
    p_u: Vec<f64>,
    p_w: Vec<f64>,
    p_uw: Vec<f64>,
}

impl Scratch {
    fn new(problem: &UnifiedProblem) -> Self {
        Self {
            p_u: vec![0.0; problem.num_u()],
            p_w: vec![0.0; problem.num_w()],
            p_uw: vec![0.0; problem.num_u() * problem.num_w()],
        }
    }
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a UnifiedProblem) -> Self {
        Self { problem }
    }

    fn loss(&self, q: &[f64]) -> f64 {
        let p = self.problem;
        (0..p.num_edges())
            .map(|e| p.p_v()[p.edge_v(e)] * q[e] * p.edge_loss(e))
            .sum()
    }

    /// `I(U;V) - I(U;W)` in bits.
    fn objective(&self, q: &[f64], s: &mut Scratch) -> f64 {
        let p = self.problem;
        let nw = p.num_w();
        s.p_u.fill(0.0);
        s.p_w.fill(0.0);
        s.p_uw.fill(0.0);
        for e in 0..p.num_edges() {
            let m = p.p_v()[p.edge_v(e)] * q[e];
            if m == 0.0 {
                continue;
            }
            let u = p.edge_u(e);
            s.p_u[u] += m;
            for w in 0..nw {
                let x = m * p.p_w_given_edge(e, w);
                s.p_uw[u * nw + w] += x;
                s.p_w[w] += x;
            }
        }
        let mut i_uv = 0.0;
        for e in 0..p.num_edges() {
            let m = p.p_v()[p.edge_v(e)] * q[e];
            if m > 0.0 {
                i_uv += m * (q[e] / s.p_u[p.edge_u(e)]).log2();
            }
        }
        let mut i_uw = 0.0;
        for u in 0..p.num_u() {
            for w in 0..nw {
                let x = s.p_uw[u * nw + w];
                if x > 0.0 {
                    i_uw += x * (x / (s.p_u[u] * s.p_w[w])).log2();
                }
            }
        }
        i_uv - i_uw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_unified_problem, Sense};

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.25).unwrap() - 0.811278).abs() < 1e-6);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn reference_values() {
        assert!((reference("R2", 0.25).unwrap() - 0.188722).abs() < 1e-6);
        assert!(reference("R1", 1.0 / 6.0).unwrap().abs() < 1e-15);
        assert!((reference("C2", 0.3).unwrap() - 0.7).abs() < 1e-15);
        assert!((reference("R3", 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((reference("DirtyPaper", 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(reference("R2", 0.7).unwrap(), 0.0);
        assert_eq!(
            reference("R9", 0.1).unwrap_err(),
            Error::UnknownIdentifier("R9".into())
        );
        assert!(reference("C1", 1.5).is_err());
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(10, 1).len(), 1);
        assert_eq!(compositions(10, 2).len(), 11);
        assert_eq!(compositions(10, 3).len(), 66);
        assert!(compositions(7, 3)
            .iter()
            .all(|c| (c.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    fn binary_source() -> UnifiedProblem {
        build_unified_problem(
            2,
            &[(0, 0), (0, 1), (1, 0), (1, 1)],
            &[0.5, 0.5],
            &vec![vec![1.0]; 4],
            &[0.0, 1.0, 1.0, 0.0],
            Sense::Minimize,
        )
        .unwrap()
    }

    #[test]
    fn grid_matches_binary_rate_distortion() {
        let v = grid_oracle(&binary_source(), 0.1, 200).unwrap();
        let exact = 1.0 - binary_entropy(0.1).unwrap();
        assert!((v - exact).abs() < 0.01, "{v} vs {exact}");
        assert!((exact - 0.531).abs() < 1e-3);
    }

    #[test]
    fn grid_is_zero_past_the_zero_rate_loss() {
        assert!(grid_oracle(&binary_source(), 0.5, 50).unwrap().abs() < 1e-12);
    }

    #[test]
    fn grid_limits() {
        let n = 13;
        let edges: Vec<_> = (0..n).map(|u| (0, u)).collect();
        let p = build_unified_problem(n, &edges, &[1.0], &vec![vec![1.0]; n], &vec![0.0; n], Sense::Minimize)
            .unwrap();
        assert!(matches!(grid_oracle(&p, 0.0, 20), Err(Error::TooLarge(_))));
        assert!(matches!(grid_oracle(&binary_source(), 0.1, 5), Err(Error::InvalidOptions(_))));
    }
}
