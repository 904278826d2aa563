//! Specifications of the worked examples: the online card game, the memory
//! with stuck-at faults, and two lossy computing problems with quadratic
//! distortion.

use super::{ChannelStateSpec, LossyComputingSpec};

/// Which variables the encoder (`S1`) and decoder (`S2`) observe in the card
/// game with `X, Y` uniform over distinct pairs of `{1,2,3}` and
/// `f = 1{X > Y}` under Hamming distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardGame {
    /// `S1 = X`, `S2 = Y`.
    R1,
    /// `S1 = (X, Y)`, no decoder side information.
    R2,
    /// `S1 = (X, Y)`, `S2 = Y`.
    R3,
}

/// State knowledge in the stuck-at memory: state 0 forces `Y = 0`, state 1
/// forces `Y = 1` (each with probability `p/2`), state 2 gives `Y = X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StuckAt {
    /// State known to neither side.
    C1,
    /// State known to the encoder.
    C2,
    /// State known to the decoder.
    C3,
    /// State known to both.
    C4,
}

fn hamming(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect()
}

fn quadratic(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| (i as f64 - j as f64).powi(2)).collect())
        .collect()
}

pub fn card_game(variant: CardGame) -> LossyComputingSpec {
    let pairs: Vec<(usize, usize)> = (0..3)
        .flat_map(|x| (0..3).map(move |y| (x, y)))
        .filter(|(x, y)| x != y)
        .collect();
    let f = |x: usize, y: usize| usize::from(x > y);
    let sixth = 1.0 / 6.0;
    let (p_joint, f_table) = match variant {
        CardGame::R1 => (
            (0..3)
                .map(|x| (0..3).map(|y| if x == y { 0.0 } else { sixth }).collect())
                .collect(),
            (0..3).map(|x| (0..3).map(|y| f(x, y)).collect()).collect(),
        ),
        CardGame::R2 => (
            pairs.iter().map(|_| vec![sixth]).collect(),
            pairs.iter().map(|&(x, y)| vec![f(x, y)]).collect(),
        ),
        CardGame::R3 => (
            pairs
                .iter()
                .map(|&(_, y)| (0..3).map(|y2| if y2 == y { sixth } else { 0.0 }).collect())
                .collect(),
            pairs.iter().map(|&(x, y)| vec![f(x, y); 3]).collect(),
        ),
    };
    LossyComputingSpec::new(p_joint, f_table, hamming(2))
}

pub fn stuck_at(variant: StuckAt, p: f64) -> ChannelStateSpec {
    let p_state = [p / 2.0, p / 2.0, 1.0 - p];
    let given_state = |s: usize| -> Vec<Vec<f64>> {
        match s {
            0 => vec![vec![1.0, 0.0]; 2],
            1 => vec![vec![0.0, 1.0]; 2],
            _ => vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        }
    };
    let averaged: Vec<Vec<f64>> = (0..2)
        .map(|x| {
            (0..2)
                .map(|y| (0..3).map(|s| p_state[s] * given_state(s)[x][y]).sum())
                .collect()
        })
        .collect();
    let zero_cost = |n1: usize, n2: usize| vec![vec![vec![0.0; 2]; n2]; n1];
    match variant {
        StuckAt::C1 => ChannelStateSpec::new(vec![vec![1.0]], vec![vec![averaged]], zero_cost(1, 1)),
        StuckAt::C2 => ChannelStateSpec::new(
            p_state.iter().map(|&x| vec![x]).collect(),
            (0..3).map(|s| vec![given_state(s)]).collect(),
            zero_cost(3, 1),
        ),
        StuckAt::C3 => ChannelStateSpec::new(
            vec![p_state.to_vec()],
            vec![(0..3).map(given_state).collect()],
            zero_cost(1, 3),
        ),
        StuckAt::C4 => ChannelStateSpec::new(
            (0..3)
                .map(|s1| (0..3).map(|s2| if s1 == s2 { p_state[s1] } else { 0.0 }).collect())
                .collect(),
            (0..3).map(|_| (0..3).map(given_state).collect()).collect(),
            zero_cost(3, 3),
        ),
    }
}

fn uniform_6x4(f: impl Fn(usize, usize) -> usize, num_z: usize) -> LossyComputingSpec {
    LossyComputingSpec::new(
        vec![vec![1.0 / 24.0; 4]; 6],
        (1..=6).map(|s1| (1..=4).map(|s2| f(s1, s2)).collect()).collect(),
        quadratic(num_z),
    )
}

/// `S1 ∈ {1..6}`, `S2 ∈ {1..4}` uniform, `f = s1 + s2` on `{2..10}`.
pub fn sum_computation() -> LossyComputingSpec {
    uniform_6x4(|s1, s2| s1 + s2 - 2, 9)
}

/// `S1 ∈ {1..6}`, `S2 ∈ {1..4}` uniform, `f = s1 s2 - s2 + 5` on `{5..25}`.
pub fn nonlinear_computation() -> LossyComputingSpec {
    uniform_6x4(|s1, s2| s1 * s2 - s2, 21)
}
