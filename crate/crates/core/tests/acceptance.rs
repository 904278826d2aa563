//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rdcc_core::measures::zero_rate_point;
use rdcc_core::oracle::grid_oracle;
use rdcc_core::problems::{
    build_channel, build_gaussian_quantized, build_lossy, card_game, nonlinear_computation, stuck_at,
    sum_computation, CardGame, LossyReduction, StuckAt,
};
use rdcc_core::solver::{update_q, update_r};
use rdcc_core::{
    build_unified_problem, loss_bounds, solve, solve_sweep, DeflationOptions, EdgeWeight, Sense, SolveOptions,
    Strategy, UnifiedProblem,
};

use common::{f_s, gd_edges, gd_reverse, rng};

const CARD_TOL: f64 = 1e-4;
const STUCK_TOL: f64 = 1e-4;
const TABLE3_TOL: f64 = 2e-3;
const GAUSS_TOL: f64 = 5e-3;
const DIRTY_PAPER_SLACK: f64 = 1e-6;
const DEFLATION_PENALTY: f64 = 1e-6;
const MIN_SPEEDUP: f64 = 5.0;
const IDENTITY_TOL: f64 = 1e-10;
const DESCENT_SLACK: f64 = 1e-12;
const ORACLE_TOL: f64 = 5e-3;
const REDUCTION_TOL: f64 = 1e-6;
const SHAPE_TOL: f64 = 1e-6;

struct Check {
    pass: bool,
    detail: String,
}

fn h(x: f64) -> f64 {
    let t = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    t(x) + t(1.0 - x)
}

fn card_closed_form(variant: CardGame, d: f64) -> f64 {
    match variant {
        CardGame::R1 if d <= 1.0 / 6.0 => 2.0 / 3.0 * (h((1.0 + 6.0 * d) / 4.0) - h(3.0 * d)),
        CardGame::R2 if d <= 0.5 => 1.0 - h(d),
        CardGame::R3 if d <= 1.0 / 6.0 => (1.0 - h(3.0 * d)) / 3.0,
        _ => 0.0,
    }
}

fn stuck_closed_form(variant: StuckAt, p: f64) -> f64 {
    match variant {
        StuckAt::C1 => 1.0 - h(p / 2.0),
        _ => 1.0 - p,
    }
}

fn opts(strategy: Strategy, max_iter: usize, deflation: bool) -> SolveOptions {
    SolveOptions {
        strategy,
        max_iter,
        deflation: deflation.then(DeflationOptions::default),
        ..SolveOptions::default()
    }
}

fn within(budget: Duration, elapsed: Duration) -> (bool, String) {
    (elapsed <= budget, format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs()))
}

fn card_game_regression() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (variant, d_max) in [(CardGame::R1, 1.0 / 6.0), (CardGame::R2, 0.5), (CardGame::R3, 1.0 / 6.0)] {
        let problem = build_lossy(&card_game(variant)).unwrap();
        for k in 1..=20 {
            let d = d_max * k as f64 / 21.0;
            let res = solve(&problem, Some(d), &opts(Strategy::Strategy2, 1000, false)).unwrap();
            worst = worst.max((res.value_bits - card_closed_form(variant, d)).abs());
        }
    }
    let (fast, t) = within(Duration::from_secs(10), start.elapsed());
    Check {
        pass: worst <= CARD_TOL && fast,
        detail: format!("max error {worst:.3e} bits, {t}"),
    }
}

fn stuck_at_capacities() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for variant in [StuckAt::C1, StuckAt::C2, StuckAt::C3, StuckAt::C4] {
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let problem = build_channel(&stuck_at(variant, p)).unwrap();
            let res = solve(&problem, Some(1.0), &opts(Strategy::Strategy1, 1000, false)).unwrap();
            worst = worst.max((res.value_bits - stuck_closed_form(variant, p)).abs());
        }
    }
    let (fast, t) = within(Duration::from_secs(5), start.elapsed());
    Check {
        pass: worst <= STUCK_TOL && fast,
        detail: format!("max error {worst:.3e} bits, {t}"),
    }
}

fn table3_points() -> Check {
    let start = Instant::now();
    let sum = build_lossy(&sum_computation()).unwrap();
    let nonlinear = build_lossy(&nonlinear_computation()).unwrap();
    let cases = [
        (&sum, 0.5, 1.1503),
        (&sum, 2.5, 0.1107),
        (&nonlinear, 0.5, 2.1827),
        (&nonlinear, 5.0, 0.9295),
        (&nonlinear, 20.0, 0.0652),
    ];
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for (problem, l, expected) in cases {
        let res = solve(problem, Some(l), &opts(Strategy::Strategy2, 1000, true)).unwrap();
        worst = worst.max((res.value_bits - expected).abs());
        values.push(format!("{:.4}", res.value_bits));
    }
    let (fast, t) = within(Duration::from_secs(30), start.elapsed());
    Check {
        pass: worst <= TABLE3_TOL && fast,
        detail: format!("values [{}], max error {worst:.2e} bits, {t}", values.join(", ")),
    }
}

fn gaussian_channel() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    let mut values = Vec::new();
    for (b, targets) in [(3, [(1.5, 0.5615), (5.0, 1.1414)]), (4, [(1.5, 0.6237), (5.0, 1.2066)])] {
        let problem = build_channel(&build_gaussian_quantized(b).unwrap()).unwrap();
        for (budget, expected) in targets {
            let res = solve(&problem, Some(budget), &opts(Strategy::Strategy1, 2000, true)).unwrap();
            worst = worst.max((res.value_bits - expected).abs());
            excess = excess.max(res.value_bits - 0.5 * (1.0 + budget).log2());
            values.push(format!("{:.4}", res.value_bits));
        }
    }
    let (fast, t) = within(Duration::from_secs(300), start.elapsed());
    Check {
        pass: worst <= GAUSS_TOL && excess <= DIRTY_PAPER_SLACK && fast,
        detail: format!(
            "values [{}], max error {worst:.2e} bits, max excess over 1/2 log(1+B) {excess:.3}, {t}",
            values.join(", ")
        ),
    }
}

fn deflation_penalty() -> Check {
    let sum = build_lossy(&sum_computation()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for l in [0.5, 2.5] {
        let t0 = Instant::now();
        let with = solve(&sum, Some(l), &opts(Strategy::Strategy2, 1000, true)).unwrap();
        let t_with = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let without = solve(&sum, Some(l), &opts(Strategy::Strategy2, 1000, false)).unwrap();
        let t_without = t0.elapsed().as_secs_f64();
        let diff = (with.value_bits - without.value_bits).abs();
        let speedup = t_without / t_with;
        pass &= diff <= DEFLATION_PENALTY && speedup >= MIN_SPEEDUP;
        parts.push(format!("L={l}: penalty {diff:.2e}, speed-up {speedup:.1}x"));
    }
    Check {
        pass,
        detail: parts.join("; "),
    }
}

fn sparsity() -> Check {
    let sum = build_lossy(&sum_computation()).unwrap();
    let mut sum_support = Vec::new();
    let mut pass = true;
    for l in [0.5, 2.5] {
        let res = solve(&sum, Some(l), &opts(Strategy::Strategy2, 1000, true)).unwrap();
        pass &= res.support_u <= 7;
        sum_support.push(res.support_u);
    }
    let mut rng = rng(6);
    let mut worst_margin = i64::MIN;
    for _ in 0..20 {
        let (nv, nu, nw) = (rng.gen_range(2..=4), rng.gen_range(8..=24), rng.gen_range(2..=4));
        let problem = common::random_markov(&mut rng, nv, nu, nw, true);
        let b = loss_bounds(&problem);
        let top = zero_rate_point(&problem).unwrap().loss;
        let l = b.l_min + rng.gen_range(0.2..0.8) * (top - b.l_min);
        let res = solve(&problem, Some(l), &opts(Strategy::Strategy2, 3000, true)).unwrap();
        worst_margin = worst_margin.max(res.support_u as i64 - (nv + nw) as i64);
    }
    pass &= worst_margin <= 0;
    Check {
        pass,
        detail: format!(
            "sum-computation support {sum_support:?} (bound 7), random Markov max support - (|V|+|W|) = {worst_margin}"
        ),
    }
}

fn identity_suite() -> Check {
    let mut rng = rng(7);
    let (mut worst_q, mut worst_r): (f64, f64) = (0.0, 0.0);
    for i in 0..1000 {
        let (nv, nu, nw) = (rng.gen_range(1..=5), rng.gen_range(1..=5), rng.gen_range(1..=5));
        let problem = if i % 2 == 0 {
            common::random_general(&mut rng, nv, nu, nw)
        } else {
            common::random_markov(&mut rng, nv, nu, nw, false)
        };
        let q = common::random_weight(&mut rng, &problem);
        let r = common::random_reverse(&mut rng, &problem);
        let s = rng.gen_range(-3.0..3.0);
        let f = f_s(&problem, &q, &r, s);
        let q_star = update_q(&problem, &r, s).unwrap();
        let r_star = update_r(&problem, &q);
        worst_q = worst_q.max((f - f_s(&problem, &q_star, &r, s) - gd_edges(&problem, &q, &q_star)).abs());
        worst_r = worst_r.max((f - f_s(&problem, &q, &r_star, s) - gd_reverse(&problem, &q, &r_star, &r)).abs());
    }
    let mut worst_rise = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (nv, nu, nw) = (rng.gen_range(1..=5), rng.gen_range(1..=5), rng.gen_range(1..=5));
        let problem = common::random_general(&mut rng, nv, nu, nw);
        let s = rng.gen_range(-2.0..4.0);
        let mut q = EdgeWeight::uniform(&problem);
        let mut r = update_r(&problem, &q);
        for _ in 0..200 {
            let before = f_s(&problem, &q, &r, s);
            q = update_q(&problem, &r, s).unwrap();
            let mid = f_s(&problem, &q, &r, s);
            r = update_r(&problem, &q);
            let after = f_s(&problem, &q, &r, s);
            let scale = before.abs().max(1.0);
            worst_rise = worst_rise.max((mid - before) / scale).max((after - mid) / scale);
        }
    }
    Check {
        pass: worst_q <= IDENTITY_TOL && worst_r <= IDENTITY_TOL && worst_rise <= DESCENT_SLACK,
        detail: format!(
            "q identity {worst_q:.2e}, r identity {worst_r:.2e}, largest relative rise of F_s {worst_rise:.2e}"
        ),
    }
}

/// Number of points a grid of resolution `m` has on rows of the given sizes.
fn grid_points(rows: &[usize], m: u128) -> u128 {
    rows.iter()
        .map(|&k| {
            let mut c: u128 = 1;
            for i in 0..(k as u128 - 1) {
                c = c * (m + k as u128 - 1 - i) / (i + 1);
            }
            c
        })
        .product()
}

fn small_markov(rng: &mut rand_chacha::ChaCha8Rng) -> UnifiedProblem {
    loop {
        let nv = rng.gen_range(2..=4);
        let nu = rng.gen_range(2..=3);
        let nw = rng.gen_range(2..=3);
        let edges = common::edge_set(rng, nv, nu, false);
        let rows: Vec<usize> = (0..nv).map(|v| edges.iter().filter(|e| e.0 == v).count()).collect();
        if edges.len() > 9 || grid_points(&rows, 400) > 2_000_000 || rows.iter().all(|&k| k == 1) {
            continue;
        }
        let p_v = common::simplex(rng, nv);
        let channel_rows: Vec<Vec<f64>> = (0..nv).map(|_| common::simplex(rng, nw)).collect();
        let channels: Vec<Vec<f64>> = edges.iter().map(|&(v, _)| channel_rows[v].clone()).collect();
        let losses: Vec<f64> = edges.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        return build_unified_problem(nu, &edges, &p_v, &channels, &losses, Sense::Minimize).unwrap();
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = rng(8);
    let (mut worst, mut worst_relaxed): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let problem = small_markov(&mut rng);
        let b = loss_bounds(&problem);
        let l = b.l_min + rng.gen_range(0.25..0.75) * (b.l_max - b.l_min);
        let o = opts(Strategy::Strategy1, 5000, false);
        let res = solve(&problem, Some(l), &o).unwrap();
        let grid = grid_oracle(&problem, l, 400).unwrap();
        worst = worst.max((grid - res.value_bits).abs());
        // the grid admits Loss <= L + l_Max / (2m)
        let relaxed = solve(&problem, Some(l + b.l_max / 800.0), &o).unwrap();
        worst_relaxed = worst_relaxed.max((grid - relaxed.value_bits).abs());
    }
    Check {
        pass: worst <= ORACLE_TOL,
        detail: format!(
            "max |grid(L) - solve(L)| {worst:.2e} bits over 50 instances; against solve at the grid's relaxed budget {worst_relaxed:.2e}"
        ),
    }
}

fn reduction_equivalence() -> Check {
    let mut rng = rng(9);
    let long = SolveOptions {
        early_stop_tol: Some(1e-14),
        ..opts(Strategy::Strategy2, 50_000, false)
    };
    let (mut worst_cp, mut worst_md): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let spec = common::block_diagonal_lossy(&mut rng);
        let canonical = build_lossy(&spec).unwrap();
        let reduced = build_lossy(&spec.clone().with_reduction(LossyReduction::CommonPart)).unwrap();
        let b = loss_bounds(&canonical);
        let l = b.l_min + rng.gen_range(0.1..0.6) * (b.l_max - b.l_min);
        let a = solve(&canonical, Some(l), &long).unwrap();
        let c = solve(&reduced, Some(l), &long).unwrap();
        worst_cp = worst_cp.max((a.value_bits - c.value_bits).abs());

        let min_d = build_lossy(&spec.clone().with_reduction(LossyReduction::MinDistortion)).unwrap();
        let free = solve(&min_d, None, &SolveOptions { strategy: Strategy::Unconstrained, ..long.clone() }).unwrap();
        let at_min = solve(&canonical, Some(b.l_min), &long).unwrap();
        worst_md = worst_md.max((free.value_bits - at_min.value_bits).abs());
    }
    Check {
        pass: worst_cp <= REDUCTION_TOL && worst_md <= REDUCTION_TOL,
        detail: format!("CommonPart vs Canonical {worst_cp:.2e} bits, MinDistortion vs Canonical at l_min {worst_md:.2e} bits"),
    }
}

fn curve_shape() -> Check {
    let mut curves: Vec<(String, UnifiedProblem, Vec<f64>, SolveOptions)> = Vec::new();
    for (name, variant) in [("R1", CardGame::R1), ("R2", CardGame::R2), ("R3", CardGame::R3)] {
        let grid = (0..=30).map(|k| 0.02 * k as f64).collect();
        curves.push((name.into(), build_lossy(&card_game(variant)).unwrap(), grid, opts(Strategy::Strategy2, 2000, false)));
    }
    let sum_grid = (0..=24).map(|k| 0.25 + 0.25 * k as f64).collect();
    curves.push((
        "sum".into(),
        build_lossy(&sum_computation()).unwrap(),
        sum_grid,
        opts(Strategy::Strategy2, 1000, true),
    ));
    let mut rng = rng(10);
    for i in 0..5 {
        let problem = common::random_markov(&mut rng, 3, 6, 3, true);
        let b = loss_bounds(&problem);
        let grid = (0..=20).map(|k| b.l_min + (b.l_max - b.l_min) * k as f64 / 20.0).collect();
        let o = SolveOptions {
            early_stop_tol: Some(1e-14),
            ..opts(Strategy::Strategy2, 20_000, false)
        };
        curves.push((format!("random{i}"), problem, grid, o));
    }
    let (mut worst_rise, mut worst_bulge) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut worst_name = String::new();
    for (name, problem, grid, o) in &curves {
        let values: Vec<f64> = solve_sweep(problem, grid, o)
            .into_iter()
            .map(|r| problem.sense().report(r.unwrap().value_bits))
            .collect();
        for w in values.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        for w in values.windows(3) {
            let bulge = w[1] - 0.5 * (w[0] + w[2]);
            if bulge > worst_bulge {
                worst_bulge = bulge;
                worst_name = name.clone();
            }
        }
    }
    Check {
        pass: worst_rise <= SHAPE_TOL && worst_bulge <= SHAPE_TOL,
        detail: format!(
            "{} curves, largest rise {worst_rise:.2e}, largest midpoint excess {worst_bulge:.2e} ({worst_name})",
            curves.len()
        ),
    }
}

fn one_over_n() -> Check {
    let mut rng = rng(11);
    let mut worst_ratio = f64::NEG_INFINITY;
    for _ in 0..10 {
        let (nv, nu, nw) = (rng.gen_range(2..=4), rng.gen_range(2..=4), rng.gen_range(2..=4));
        let problem = common::random_general(&mut rng, nv, nu, nw);
        let s = rng.gen_range(0.0..3.0);
        let reference = solve(&problem, None, &opts(Strategy::FixedS(s), 1_000_000, false)).unwrap();
        let f_star = f_s(&problem, &reference.final_q, &reference.final_r, s);
        let bound = (problem.num_u() as f64).log2() + 0.1;
        let mut q = EdgeWeight::uniform(&problem);
        for n in 0..=10_000usize {
            let r = update_r(&problem, &q);
            q = update_q(&problem, &r, s).unwrap();
            if n >= 1 {
                let gap = f_s(&problem, &q, &r, s) - f_star;
                worst_ratio = worst_ratio.max(n as f64 * gap / bound);
            }
        }
    }
    Check {
        pass: worst_ratio <= 1.0,
        detail: format!("max n*gap / (log2|U| + 0.1) = {worst_ratio:.3}"),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("card-game regression", card_game_regression),
        ("stuck-at capacities", stuck_at_capacities),
        ("lossy computing points", table3_points),
        ("quantized Gaussian channel", gaussian_channel),
        ("deflation penalty and speed-up", deflation_penalty),
        ("support sparsity", sparsity),
        ("alternating-step identities and descent", identity_suite),
        ("grid oracle agreement", oracle_equivalence),
        ("reduction equivalence", reduction_equivalence),
        ("curve shape", curve_shape),
        ("O(1/n) convergence", one_over_n),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let check = run();
        let tag = if check.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{:>2}] {name}: {}", i + 1, check.detail);
        failed += usize::from(!check.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
