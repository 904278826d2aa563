//! Decision variables: edge weights `q(u|v)` and reverse channels `r(u|w)`.

use crate::error::{Error, Result};
use crate::problem::{UnifiedProblem, INPUT_MASS_TOL};

/// A conditional distribution `q(u|v)` stored per edge of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeight {
    values: Vec<f64>,
}

impl EdgeWeight {
    /// `q(u|v) = 1/|E_v|` on every edge.
    pub fn uniform(problem: &UnifiedProblem) -> Self {
        let mut values = vec![0.0; problem.num_edges()];
        for v in 0..problem.num_v() {
            let r = problem.edges_of_v(v);
            let x = 1.0 / r.len() as f64;
            values[r].iter_mut().for_each(|q| *q = x);
        }
        Self { values }
    }

    /// Validates edge-aligned values: nonnegative, each row summing to one.
    pub fn from_values(problem: &UnifiedProblem, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != problem.num_edges() {
            return Err(Error::DimensionMismatch {
                what: "edge weight".into(),
                expected: problem.num_edges(),
                got: values.len(),
            });
        }
        for v in 0..problem.num_v() {
            let r = problem.edges_of_v(v);
            let row = &mut values[r];
            if let Some(x) = row.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidDistribution {
                    what: format!("q(.|v={v})"),
                    detail: format!("entry {x}"),
                });
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > INPUT_MASS_TOL {
                return Err(Error::InvalidDistribution {
                    what: format!("q(.|v={v})"),
                    detail: format!("sums to {total}"),
                });
            }
            row.iter_mut().for_each(|x| *x /= total);
        }
        Ok(Self { values })
    }

    /// Builds from a dense `|V| x |U|` table; mass off the edge set is an error.
    pub fn from_dense(problem: &UnifiedProblem, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != problem.num_v() {
            return Err(Error::DimensionMismatch {
                what: "q rows".into(),
                expected: problem.num_v(),
                got: rows.len(),
            });
        }
        let mut values = vec![0.0; problem.num_edges()];
        for (v, row) in rows.iter().enumerate() {
            if row.len() != problem.num_u() {
                return Err(Error::DimensionMismatch {
                    what: format!("q row {v}"),
                    expected: problem.num_u(),
                    got: row.len(),
                });
            }
            for (u, &x) in row.iter().enumerate() {
                match problem.find_edge(v, u) {
                    Some(e) => values[e] = x,
                    None if x > 0.0 => return Err(Error::SupportViolation { v, u }),
                    None => {}
                }
            }
        }
        Self::from_values(problem, values)
    }

    /// Trusted constructor for solver output (rows already normalized).
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: usize) -> f64 {
        self.values[e]
    }

    /// `q(u|v)`, zero off the edge set.
    pub fn at(&self, problem: &UnifiedProblem, v: usize, u: usize) -> f64 {
        problem.find_edge(v, u).map_or(0.0, |e| self.values[e])
    }

    /// Marginal `p(u) = Σ_v p(v) q(u|v)`.
    pub fn u_marginal(&self, problem: &UnifiedProblem) -> Vec<f64> {
        let mut m = vec![0.0; problem.num_u()];
        let p_v = problem.p_v();
        for (e, &q) in self.values.iter().enumerate() {
            m[problem.edge_u(e)] += p_v[problem.edge_v(e)] * q;
        }
        m
    }

    /// Number of `u` with positive marginal.
    pub fn support_size(&self, problem: &UnifiedProblem) -> usize {
        self.u_marginal(problem).iter().filter(|&&x| x > 0.0).count()
    }
}

/// A conditional distribution `r(u|w)` supported on `F`, stored dense and
/// `u`-major (`values[u * |W| + w]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseChannel {
    num_u: usize,
    num_w: usize,
    values: Vec<f64>,
}

impl ReverseChannel {
    /// Uniform over `{u : (u,w) ∈ F}` for every `w`.
    pub fn uniform(problem: &UnifiedProblem) -> Self {
        let (nu, nw) = (problem.num_u(), problem.num_w());
        let mut values = vec![0.0; nu * nw];
        for w in 0..nw {
            let count = (0..nu).filter(|&u| problem.in_f_support(u, w)).count();
            if count > 0 {
                for u in 0..nu {
                    if problem.in_f_support(u, w) {
                        values[u * nw + w] = 1.0 / count as f64;
                    }
                }
            }
        }
        Self {
            num_u: nu,
            num_w: nw,
            values,
        }
    }

    /// Builds from a dense `|W| x |U|` table (`columns[w][u]`), checking
    /// support and normalization of every column that meets `F`.
    pub fn from_columns(problem: &UnifiedProblem, columns: &[Vec<f64>]) -> Result<Self> {
        let (nu, nw) = (problem.num_u(), problem.num_w());
        if columns.len() != nw {
            return Err(Error::DimensionMismatch {
                what: "r columns".into(),
                expected: nw,
                got: columns.len(),
            });
        }
        let mut values = vec![0.0; nu * nw];
        for (w, col) in columns.iter().enumerate() {
            if col.len() != nu {
                return Err(Error::DimensionMismatch {
                    what: format!("r column {w}"),
                    expected: nu,
                    got: col.len(),
                });
            }
            let mut total = 0.0;
            let mut meets_f = false;
            for (u, &x) in col.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidDistribution {
                        what: format!("r(.|w={w})"),
                        detail: format!("entry {x}"),
                    });
                }
                if problem.in_f_support(u, w) {
                    meets_f = true;
                } else if x > 0.0 {
                    return Err(Error::SupportViolation { v: w, u });
                }
                total += x;
            }
            if meets_f {
                if (total - 1.0).abs() > INPUT_MASS_TOL {
                    return Err(Error::InvalidDistribution {
                        what: format!("r(.|w={w})"),
                        detail: format!("sums to {total}"),
                    });
                }
                for (u, &x) in col.iter().enumerate() {
                    values[u * nw + w] = x / total;
                }
            }
        }
        Ok(Self {
            num_u: nu,
            num_w: nw,
            values,
        })
    }

    pub(crate) fn from_raw(num_u: usize, num_w: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), num_u * num_w);
        Self { num_u, num_w, values }
    }

    /// All entries, `u`-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, u: usize, w: usize) -> f64 {
        self.values[u * self.num_w + w]
    }

    pub fn num_u(&self) -> usize {
        self.num_u
    }

    pub fn num_w(&self) -> usize {
        self.num_w
    }

    /// Row of `u`: `r(u|w)` for all `w`.
    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.num_w..(u + 1) * self.num_w]
    }
}
