//! Additive Gaussian channel `Y = X + S + Z` whose encoder sees a two-bit
//! quantization of the state.
//!
//! `S ~ N(0, 1/2)` and `Z ~ N(0, 1)`; the encoder observes
//! `S1 = Q4(S / sqrt(1/2))`. Inputs are the `2^b` cell midpoints of `[-4, 4]`,
//! outputs the `2^(b+1)` bins of `[-8, 8]` with the end bins absorbing the
//! tails, and the input cost is `x^2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use libm::erfc;

use crate::error::{Error, Result};

use super::ChannelStateSpec;

/// Reconstruction points of the state quantizer, in the order of `S1`.
pub const GAUSSIAN_CELLS: [f64; 4] = [-1.5, -0.5, 0.5, 1.5];

// cell boundaries in units of S
const CELL_BOUNDS: [(f64, f64); 4] = [
    (f64::NEG_INFINITY, -FRAC_1_SQRT_2),
    (-FRAC_1_SQRT_2, 0.0),
    (0.0, FRAC_1_SQRT_2),
    (FRAC_1_SQRT_2, f64::INFINITY),
];

const TAIL: f64 = 20.0;
const MAX_PANEL: f64 = 1.0 / 16.0;

/// `sgn(s) (1.5 1{|s| > 1} + 0.5 1{|s| ≤ 1})`, with `0` sent to `0.5`.
pub fn quantize_q4(s: f64) -> f64 {
    let m = if s.abs() > 1.0 { 1.5 } else { 0.5 };
    if s < 0.0 {
        -m
    } else {
        m
    }
}

fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

fn phi_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `P(a < N(0,1) ≤ b)` without cancellation in either tail.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        q_func(a) - q_func(b)
    } else if b <= 0.0 {
        phi_cdf(b) - phi_cdf(a)
    } else {
        1.0 - q_func(b) - phi_cdf(a)
    }
}

/// `P(S1 = s1)` for each quantizer cell: `Q(1)` for the outer cells and
/// `1/2 - Q(1)` for the inner ones.
pub fn gaussian_cell_probabilities() -> [f64; 4] {
    let outer = q_func(1.0);
    [outer, 0.5 - outer, 0.5 - outer, outer]
}

/// Density of `S + Z` given that `S` falls in `cell`.
///
/// With `S ~ N(0, 1/2)` and `Z ~ N(0, 1)`, `S | S+Z = t ~ N(t/3, 1/3)`, so the
/// joint factorizes as `φ(t; 0, 3/2) P(a < N(t/3, 1/3) ≤ b)`.
fn conditional_density(t: f64, cell: usize, p_cell: f64) -> f64 {
    let (a, b) = CELL_BOUNDS[cell];
    let sd = (1.0f64 / 3.0).sqrt();
    let mean = t / 3.0;
    let marginal = (-t * t / 3.0).exp() / (3.0 * PI).sqrt();
    marginal * normal_mass((a - mean) / sd, (b - mean) / sd) / p_cell
}

/// Composite Boole's rule with panels no wider than [`MAX_PANEL`].
fn boole(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let panels = ((b - a) / MAX_PANEL).ceil().max(1.0) as usize;
    let h = (b - a) / (4 * panels) as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let x0 = a + (4 * k) as f64 * h;
        total += 7.0 * f(x0) + 32.0 * f(x0 + h) + 12.0 * f(x0 + 2.0 * h) + 32.0 * f(x0 + 3.0 * h) + 7.0 * f(x0 + 4.0 * h);
    }
    total * 2.0 * h / 45.0
}

/// Transition rows `p(y|x, s1)` before renormalization, indexed `[s1][x][y]`.
fn raw_transitions(b_bits: u32) -> Vec<Vec<Vec<f64>>> {
    let nx = 1usize << b_bits;
    let ny = nx * 2;
    let x_step = 8.0 / nx as f64;
    let y_step = 16.0 / ny as f64;
    let probs = gaussian_cell_probabilities();
    (0..4)
        .map(|cell| {
            (0..nx)
                .map(|i| {
                    let x = -4.0 + (i as f64 + 0.5) * x_step;
                    (0..ny)
                        .map(|j| {
                            let mut lo = -8.0 + j as f64 * y_step;
                            let mut hi = lo + y_step;
                            if j == 0 {
                                lo = -8.0 - TAIL;
                            }
                            if j == ny - 1 {
                                hi = 8.0 + TAIL;
                            }
                            boole(|y| conditional_density(y - x, cell, probs[cell]), lo, hi)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Channel specification for `b_bits ∈ {2..6}` bits of input resolution.
pub fn build_gaussian_quantized(b_bits: u32) -> Result<ChannelStateSpec> {
    if !(2..=6).contains(&b_bits) {
        return Err(Error::DomainError {
            what: "input resolution bits",
            value: b_bits as f64,
        });
    }
    let nx = 1usize << b_bits;
    let x_step = 8.0 / nx as f64;
    let channel = raw_transitions(b_bits)
        .into_iter()
        .map(|by_x| {
            let rows = by_x
                .into_iter()
                .map(|row| {
                    let total: f64 = row.iter().sum();
                    row.into_iter().map(|p| p / total).collect()
                })
                .collect();
            vec![rows]
        })
        .collect();
    let cost_row: Vec<f64> = (0..nx)
        .map(|i| {
            let x = -4.0 + (i as f64 + 0.5) * x_step;
            x * x
        })
        .collect();
    Ok(ChannelStateSpec::new(
        gaussian_cell_probabilities().iter().map(|&p| vec![p]).collect(),
        channel,
        vec![vec![cost_row]; 4],
    ))
}
