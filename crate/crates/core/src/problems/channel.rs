//! Channels with state `S1` at the encoder and `S2` at the decoder:
//! `V = S1`, `W ⊆ S2 x Y` and `U` indexes input tuples `(x_{s1})_{s1}`, a
//! codeword symbol for each encoder state.
//!
//! `W` lists the pairs `(s2, y)` that occur with positive probability, in
//! increasing order of `s2 * |Y| + y`.

use crate::error::{Error, Result};
use crate::graph::{common_part_partition, dedupe_u};
use crate::problem::{normalize_checked, EdgeSpec, Sense, UnifiedProblem};

use super::{increment, split_joint, tuple_code, DEFAULT_ALPHABET_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelReduction {
    /// Every `s1` connects to every tuple over `X^{|S1|}`.
    #[default]
    Canonical,
    /// Tuples restricted to the `S1` rows of the common-part block of `s1`.
    CommonPart,
    /// Components restricted to the cost-minimizing inputs of each `s1`,
    /// duplicates merged. Only meaningful at the minimum cost.
    MinCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStateSpec {
    /// `p_joint[s1][s2]`.
    pub p_joint: Vec<Vec<f64>>,
    /// `channel[s1][s2][x][y] = p(y|x,s1,s2)`.
    pub channel: Vec<Vec<Vec<Vec<f64>>>>,
    /// `cost[s1][s2][x] = b(x,s1,s2)`.
    pub cost: Vec<Vec<Vec<f64>>>,
    pub reduction: ChannelReduction,
    pub alphabet_cap: u64,
}

impl ChannelStateSpec {
    pub fn new(p_joint: Vec<Vec<f64>>, channel: Vec<Vec<Vec<Vec<f64>>>>, cost: Vec<Vec<Vec<f64>>>) -> Self {
        Self {
            p_joint,
            channel,
            cost,
            reduction: ChannelReduction::Canonical,
            alphabet_cap: DEFAULT_ALPHABET_CAP,
        }
    }

    pub fn with_reduction(mut self, reduction: ChannelReduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn num_x(&self) -> usize {
        self.channel
            .first()
            .and_then(|c| c.first())
            .map_or(0, Vec::len)
    }

    pub fn num_y(&self) -> usize {
        self.channel
            .first()
            .and_then(|c| c.first())
            .and_then(|c| c.first())
            .map_or(0, Vec::len)
    }

    /// Validates the tensors; returns `p(s1)`, `p(s2|s1)`, the normalized
    /// channel rows over `W` per `(s1, x)` and the expected cost per `(s1, x)`.
    fn compile(&self) -> Result<Compiled> {
        let (p1, cond) = split_joint(&self.p_joint)?;
        let (n1, n2) = (p1.len(), cond[0].len());
        let (nx, ny) = (self.num_x(), self.num_y());
        if nx == 0 || ny == 0 {
            return Err(Error::DimensionMismatch {
                what: "channel tensor".into(),
                expected: 1,
                got: 0,
            });
        }
        let dim = |what: String, expected: usize, got: usize| Error::DimensionMismatch { what, expected, got };
        if self.channel.len() != n1 {
            return Err(dim("channel s1 axis".into(), n1, self.channel.len()));
        }
        if self.cost.len() != n1 {
            return Err(dim("cost s1 axis".into(), n1, self.cost.len()));
        }
        let mut rows = vec![vec![0.0; n2 * ny]; n1 * nx];
        let mut cost = vec![vec![0.0; nx]; n1];
        for s1 in 0..n1 {
            if self.channel[s1].len() != n2 {
                return Err(dim(format!("channel s2 axis at s1={s1}"), n2, self.channel[s1].len()));
            }
            if self.cost[s1].len() != n2 {
                return Err(dim(format!("cost s2 axis at s1={s1}"), n2, self.cost[s1].len()));
            }
            for s2 in 0..n2 {
                let by_x = &self.channel[s1][s2];
                if by_x.len() != nx {
                    return Err(dim(format!("channel x axis at ({s1},{s2})"), nx, by_x.len()));
                }
                let costs = &self.cost[s1][s2];
                if costs.len() != nx {
                    return Err(dim(format!("cost x axis at ({s1},{s2})"), nx, costs.len()));
                }
                for x in 0..nx {
                    if by_x[x].len() != ny {
                        return Err(dim(format!("channel row ({s1},{s2},{x})"), ny, by_x[x].len()));
                    }
                    let row = normalize_checked(&by_x[x], &format!("p(y|x={x},s1={s1},s2={s2})"), false)?;
                    let b = costs[x];
                    if !b.is_finite() || b < 0.0 {
                        return Err(Error::DomainError { what: "cost", value: b });
                    }
                    let p = cond[s1][s2];
                    cost[s1][x] += p * b;
                    for (y, &py) in row.iter().enumerate() {
                        rows[s1 * nx + x][s2 * ny + y] = p * py;
                    }
                }
            }
        }
        Ok(Compiled { p1, rows, cost, nx })
    }
}

struct Compiled {
    p1: Vec<f64>,
    rows: Vec<Vec<f64>>,
    cost: Vec<Vec<f64>>,
    nx: usize,
}

/// Builds the unified problem of a channel-with-state specification.
pub fn build_channel(spec: &ChannelStateSpec) -> Result<UnifiedProblem> {
    let c = spec.compile()?;
    let n1 = c.p1.len();
    let all_x: Vec<usize> = (0..c.nx).collect();
    match spec.reduction {
        ChannelReduction::Canonical => build_blocks(spec, &c, &[(0..n1).collect()], &vec![all_x; n1]),
        ChannelReduction::CommonPart => {
            let parts = common_part_partition(&spec.p_joint)?;
            let mut blocks = vec![Vec::new(); parts.num_blocks];
            for (s1, &b) in parts.labels_v.iter().enumerate() {
                blocks[b].push(s1);
            }
            build_blocks(spec, &c, &blocks, &vec![all_x; n1])
        }
        ChannelReduction::MinCost => {
            let sets = min_cost_sets(&c);
            let restricted = build_blocks(spec, &c, &[(0..n1).collect()], &sets)?;
            Ok(dedupe_u(&restricted).0)
        }
    }
}

/// `X_{s1} = argmin_x Σ_{s2} p(s2|s1) b(x,s1,s2)`, all minimizers kept.
fn min_cost_sets(c: &Compiled) -> Vec<Vec<usize>> {
    c.cost
        .iter()
        .map(|row| {
            let mn = row.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-12 * mn.abs().max(1.0);
            (0..row.len()).filter(|&x| row[x] <= mn + tol).collect()
        })
        .collect()
}

/// Channel rows restricted to the outputs some allowed input can produce.
fn reachable_columns(c: &Compiled, allowed: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let nw = c.rows[0].len();
    let mut hit = vec![false; nw];
    for (s1, xs) in allowed.iter().enumerate() {
        for &x in xs {
            for (h, &p) in hit.iter_mut().zip(&c.rows[s1 * c.nx + x]) {
                *h |= p > 0.0;
            }
        }
    }
    let compact = |row: &[f64]| -> Vec<f64> { row.iter().zip(&hit).filter(|(_, &h)| h).map(|(&p, _)| p).collect() };
    // rows of excluded inputs are never referenced; a copy of an allowed row
    // keeps the table stochastic
    (0..c.rows.len())
        .map(|i| {
            let (s1, x) = (i / c.nx, i % c.nx);
            if allowed[s1].contains(&x) {
                compact(&c.rows[i])
            } else {
                compact(&c.rows[s1 * c.nx + allowed[s1][0]])
            }
        })
        .collect()
}

/// Each block connects its `s1` rows to all tuples over the allowed inputs
/// of those rows; blocks occupy consecutive ranges of `U`.
fn build_blocks(
    spec: &ChannelStateSpec,
    c: &Compiled,
    blocks: &[Vec<usize>],
    allowed: &[Vec<usize>],
) -> Result<UnifiedProblem> {
    let mut total: u128 = 0;
    let mut sizes = Vec::with_capacity(blocks.len());
    for rows in blocks {
        let mut size: u128 = 1;
        for &s1 in rows {
            size = size.saturating_mul(allowed[s1].len() as u128);
        }
        if size > spec.alphabet_cap as u128 {
            return Err(Error::AlphabetOverflow {
                size,
                cap: spec.alphabet_cap,
            });
        }
        total += size;
        sizes.push(size as usize);
    }
    if total > spec.alphabet_cap as u128 {
        return Err(Error::AlphabetOverflow {
            size: total,
            cap: spec.alphabet_cap,
        });
    }
    let num_u = total as usize;

    let mut edges = Vec::new();
    let mut labels: Option<Vec<u64>> = Some(Vec::with_capacity(num_u));
    let mut offset = 0;
    for (rows, &size) in blocks.iter().zip(&sizes) {
        let radices: Vec<usize> = rows.iter().map(|&s1| allowed[s1].len()).collect();
        let mut digits = vec![0usize; rows.len()];
        let mut xs = vec![0usize; rows.len()];
        for t in 0..size {
            for (i, &s1) in rows.iter().enumerate() {
                let x = allowed[s1][digits[i]];
                xs[i] = x;
                edges.push(EdgeSpec {
                    v: s1,
                    u: offset + t,
                    loss: c.cost[s1][x],
                    channel: s1 * c.nx + x,
                });
            }
            labels = labels.and_then(|mut l| {
                l.push(tuple_code(c.nx, rows, &xs)?);
                Some(l)
            });
            increment(&mut digits, &radices);
        }
        offset += size;
    }
    let problem = UnifiedProblem::from_parts(num_u, &c.p1, &reachable_columns(c, allowed), edges, Sense::MaximizeNegated)?;
    match labels {
        Some(l) => problem.with_u_labels(l),
        None => Ok(problem),
    }
}
