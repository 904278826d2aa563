//! Builders compiling source and channel descriptions into unified problems.
//!
//! Reconstruction and input tuples are encoded mixed-radix with the first
//! component least significant: the tuple `(z_0, z_1, ...)` over an alphabet
//! of size `n` has code `z_0 + n z_1 + n^2 z_2 + ...`. Codes are kept as the
//! `u` labels of the built problem.

mod catalog;
mod channel;
mod gaussian;
mod lossy;

pub use catalog::{card_game, nonlinear_computation, stuck_at, sum_computation, CardGame, StuckAt};
pub use channel::{build_channel, ChannelReduction, ChannelStateSpec};
pub use gaussian::{build_gaussian_quantized, gaussian_cell_probabilities, quantize_q4, GAUSSIAN_CELLS};
pub use lossy::{build_lossy, LossyComputingSpec, LossyReduction};

use crate::error::{Error, Result};

/// Largest tuple alphabet a builder materializes unless told otherwise.
pub const DEFAULT_ALPHABET_CAP: u64 = 1 << 24;

/// Pointwise `1{m > eps}` of a distortion or cost table.
pub fn make_threshold_measure(measure: &[Vec<f64>], eps: f64) -> Result<Vec<Vec<f64>>> {
    if !(eps >= 0.0) {
        return Err(Error::DomainError {
            what: "threshold",
            value: eps,
        });
    }
    Ok(measure
        .iter()
        .map(|row| row.iter().map(|&x| if x > eps { 1.0 } else { 0.0 }).collect())
        .collect())
}

/// `n^k`, or `AlphabetOverflow` above `cap`.
fn checked_size(n: usize, k: usize, cap: u64) -> Result<usize> {
    let mut size: u128 = 1;
    for _ in 0..k {
        size = size.saturating_mul(n as u128);
    }
    if size > cap as u128 {
        return Err(Error::AlphabetOverflow { size, cap });
    }
    Ok(size as usize)
}

/// Validates a joint pmf over `S1 x S2` with positive marginals and returns
/// the marginal of `S1` and the conditional rows `p(s2|s1)`.
fn split_joint(p_joint: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n1 = p_joint.len();
    let n2 = p_joint.first().map_or(0, Vec::len);
    if n1 == 0 || n2 == 0 {
        return Err(Error::DimensionMismatch {
            what: "p(s1,s2)".into(),
            expected: 1,
            got: 0,
        });
    }
    let bad = |detail: String| Error::InvalidDistribution {
        what: "p(s1,s2)".into(),
        detail,
    };
    let mut total = 0.0;
    let mut col = vec![0.0; n2];
    for (i, row) in p_joint.iter().enumerate() {
        if row.len() != n2 {
            return Err(Error::DimensionMismatch {
                what: format!("p(s1,s2) row {i}"),
                expected: n2,
                got: row.len(),
            });
        }
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(bad(format!("entry ({i},{j}) is {x}")));
            }
            total += x;
            col[j] += x;
        }
    }
    if (total - 1.0).abs() > crate::problem::INPUT_MASS_TOL {
        return Err(bad(format!("sums to {total}")));
    }
    if let Some(j) = col.iter().position(|&x| x <= 0.0) {
        return Err(bad(format!("p(s2={j}) is zero")));
    }
    let mut p1 = Vec::with_capacity(n1);
    let mut cond = Vec::with_capacity(n1);
    for (i, row) in p_joint.iter().enumerate() {
        let m: f64 = row.iter().sum();
        if m <= 0.0 {
            return Err(bad(format!("p(s1={i}) is zero")));
        }
        p1.push(m / total);
        cond.push(row.iter().map(|x| x / m).collect());
    }
    Ok((p1, cond))
}

/// Code of a partial tuple: `digits[i]` placed at position `positions[i]`,
/// zero elsewhere. Falls back to `None` when it does not fit in 64 bits.
fn tuple_code(radix: usize, positions: &[usize], digits: &[usize]) -> Option<u64> {
    let mut code: u64 = 0;
    for (&pos, &d) in positions.iter().zip(digits) {
        let place = (radix as u64).checked_pow(pos as u32)?;
        code = code.checked_add(place.checked_mul(d as u64)?)?;
    }
    Some(code)
}

/// Advances a mixed-radix counter, first digit fastest.
fn increment(digits: &mut [usize], radices: &[usize]) {
    for (d, &r) in digits.iter_mut().zip(radices) {
        *d += 1;
        if *d < r {
            return;
        }
        *d = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_measures() {
        let hamming = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(make_threshold_measure(&hamming, 0.0).unwrap(), hamming);
        assert_eq!(
            make_threshold_measure(&hamming, 1.0).unwrap(),
            vec![vec![0.0; 2]; 2]
        );
        let quad: Vec<Vec<f64>> = (2..=10)
            .map(|z| (2..=10).map(|zh| ((z - zh) as f64).powi(2)).collect())
            .collect();
        let t = make_threshold_measure(&quad, 1.0).unwrap();
        for (i, row) in t.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x == 0.0, (i as i64 - j as i64).abs() <= 1);
            }
        }
        assert!(make_threshold_measure(&hamming, -0.1).is_err());
    }

    #[test]
    fn counter_and_codes() {
        let radices = [3, 2];
        let mut d = vec![0, 0];
        let mut seen = Vec::new();
        for _ in 0..6 {
            seen.push(d[0] + 3 * d[1]);
            increment(&mut d, &radices);
        }
        assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(d, vec![0, 0]);
        assert_eq!(tuple_code(3, &[0, 2], &[2, 1]), Some(2 + 9));
        assert_eq!(tuple_code(10, &[30], &[1]), None);
    }

    #[test]
    fn overflow_cap() {
        assert_eq!(checked_size(9, 4, DEFAULT_ALPHABET_CAP).unwrap(), 6561);
        assert!(matches!(
            checked_size(21, 6, DEFAULT_ALPHABET_CAP),
            Err(Error::AlphabetOverflow { .. })
        ));
    }
}
