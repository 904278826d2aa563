//! Lossy computing with side information `S1` at the encoder and `S2` at the
//! decoder: `V = S1`, `W = S2`, and `U` indexes reconstruction tuples
//! `(ẑ_{s2})_{s2}` chosen by the decoder after seeing `s2`.

use crate::error::{Error, Result};
use crate::graph::{common_part_partition, dedupe_u, min_loss_reduce};
use crate::problem::{EdgeSpec, Sense, UnifiedProblem};

use super::{checked_size, increment, split_joint, tuple_code, DEFAULT_ALPHABET_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossyReduction {
    /// Every `s1` connects to every tuple over `Ẑ^{|S2|}`.
    #[default]
    Canonical,
    /// Tuples restricted to the `S2` columns of the common-part block of `s1`.
    CommonPart,
    /// Canonical graph cut to minimum-distortion edges, duplicates merged.
    /// Only meaningful at the minimum distortion.
    MinDistortion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossyComputingSpec {
    /// `p_joint[s1][s2]`.
    pub p_joint: Vec<Vec<f64>>,
    /// `f_table[s1][s2]`, an index into `Z`.
    pub f_table: Vec<Vec<usize>>,
    /// `d_matrix[z][ẑ]`.
    pub d_matrix: Vec<Vec<f64>>,
    pub reduction: LossyReduction,
    pub alphabet_cap: u64,
}

impl LossyComputingSpec {
    pub fn new(p_joint: Vec<Vec<f64>>, f_table: Vec<Vec<usize>>, d_matrix: Vec<Vec<f64>>) -> Self {
        Self {
            p_joint,
            f_table,
            d_matrix,
            reduction: LossyReduction::Canonical,
            alphabet_cap: DEFAULT_ALPHABET_CAP,
        }
    }

    pub fn with_reduction(mut self, reduction: LossyReduction) -> Self {
        self.reduction = reduction;
        self
    }

    fn num_z_hat(&self) -> usize {
        self.d_matrix.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let (p1, cond) = split_joint(&self.p_joint)?;
        let n2 = cond[0].len();
        let nz = self.d_matrix.len();
        let nzh = self.num_z_hat();
        if nz == 0 || nzh == 0 {
            return Err(Error::DimensionMismatch {
                what: "distortion matrix".into(),
                expected: 1,
                got: 0,
            });
        }
        for (z, row) in self.d_matrix.iter().enumerate() {
            if row.len() != nzh {
                return Err(Error::DimensionMismatch {
                    what: format!("distortion row {z}"),
                    expected: nzh,
                    got: row.len(),
                });
            }
            if let Some(&x) = row.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::DomainError {
                    what: "distortion",
                    value: x,
                });
            }
        }
        if self.f_table.len() != p1.len() {
            return Err(Error::DimensionMismatch {
                what: "function table rows".into(),
                expected: p1.len(),
                got: self.f_table.len(),
            });
        }
        for (s1, row) in self.f_table.iter().enumerate() {
            if row.len() != n2 {
                return Err(Error::DimensionMismatch {
                    what: format!("function table row {s1}"),
                    expected: n2,
                    got: row.len(),
                });
            }
            if let Some(&z) = row.iter().find(|&&z| z >= nz) {
                return Err(Error::DimensionMismatch {
                    what: format!("function value in row {s1}"),
                    expected: nz,
                    got: z,
                });
            }
        }
        Ok((p1, cond))
    }
}

/// Builds the unified problem of a lossy computing specification.
pub fn build_lossy(spec: &LossyComputingSpec) -> Result<UnifiedProblem> {
    let (p1, cond) = spec.validate()?;
    let (n1, n2) = (p1.len(), cond[0].len());
    match spec.reduction {
        LossyReduction::Canonical => build_blocks(spec, &p1, &cond, &[((0..n1).collect(), (0..n2).collect())]),
        LossyReduction::CommonPart => {
            let parts = common_part_partition(&spec.p_joint)?;
            let mut blocks = vec![(Vec::new(), Vec::new()); parts.num_blocks];
            for (s1, &b) in parts.labels_v.iter().enumerate() {
                blocks[b].0.push(s1);
            }
            for (s2, &b) in parts.labels_w.iter().enumerate() {
                blocks[b].1.push(s2);
            }
            build_blocks(spec, &p1, &cond, &blocks)
        }
        LossyReduction::MinDistortion => {
            let canonical = build_blocks(spec, &p1, &cond, &[((0..n1).collect(), (0..n2).collect())])?;
            Ok(dedupe_u(&min_loss_reduce(&canonical)).0)
        }
    }
}

/// Each block connects its `s1` rows to all tuples over its `s2` columns;
/// blocks occupy consecutive ranges of `U`.
fn build_blocks(
    spec: &LossyComputingSpec,
    p1: &[f64],
    cond: &[Vec<f64>],
    blocks: &[(Vec<usize>, Vec<usize>)],
) -> Result<UnifiedProblem> {
    let nzh = spec.num_z_hat();
    let mut sizes = Vec::with_capacity(blocks.len());
    let mut total: u128 = 0;
    for (_, cols) in blocks {
        let size = checked_size(nzh, cols.len(), spec.alphabet_cap)?;
        total += size as u128;
        sizes.push(size);
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
    for ((rows, cols), &size) in blocks.iter().zip(&sizes) {
        let radices = vec![nzh; cols.len()];
        let mut digits = vec![0usize; cols.len()];
        for t in 0..size {
            for &s1 in rows {
                let loss = cols
                    .iter()
                    .zip(&digits)
                    .map(|(&s2, &zh)| cond[s1][s2] * spec.d_matrix[spec.f_table[s1][s2]][zh])
                    .sum();
                edges.push(EdgeSpec {
                    v: s1,
                    u: offset + t,
                    loss,
                    channel: s1,
                });
            }
            labels = labels.and_then(|mut l| {
                l.push(tuple_code(nzh, cols, &digits)?);
                Some(l)
            });
            increment(&mut digits, &radices);
        }
        offset += size;
    }
    let problem = UnifiedProblem::from_parts(num_u, p1, cond, edges, Sense::Minimize)?;
    match labels {
        Some(l) => problem.with_u_labels(l),
        None => Ok(problem),
    }
}
