//! Cross-checks of solved rows against the oracles that apply to the
//! instance.

use rdcc_core::oracle::{grid_oracle, reference, GRID_MAX_EDGES};
use rdcc_core::{loss_bounds, solve, Error, SolveOptions, Strategy, UnifiedProblem};

use crate::config::{Mode, ProblemConfig, RunConfig};
use crate::run::Row;

/// Shape tolerance for sweeps, in bits.
const SHAPE_TOL: f64 = 1e-6;
/// Grid points checked per run.
const GRID_CHECKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        let status = if pass { Status::Pass } else { Status::Fail };
        Self { name, status, detail }
    }

    fn skip(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: Status::Skip,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

fn constrained(config: &RunConfig, options: &SolveOptions) -> bool {
    !matches!(config.solve.mode, Mode::FixedS(_)) && options.strategy != Strategy::Unconstrained
}

pub fn run_checks(config: &RunConfig, problem: &UnifiedProblem, options: &SolveOptions, rows: &[Row]) -> Vec<Check> {
    let sense = problem.sense();
    let minimized: Vec<f64> = rows.iter().map(|r| sense.report(r.result.value_bits)).collect();
    let mut checks = Vec::new();

    let finite = rows
        .iter()
        .all(|r| r.result.value_bits.is_finite() && r.result.achieved_loss.is_finite());
    checks.push(Check::new("finite", finite, format!("{} row(s)", rows.len())));

    if constrained(config, options) {
        let worst = rows
            .iter()
            .map(|r| r.result.achieved_loss - r.l - 1e-9 * r.l.abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "budget",
            worst <= 0.0,
            format!("largest loss overshoot beyond tolerance {worst:.3e}"),
        ));
    } else {
        checks.push(Check::skip("budget", "no loss budget"));
    }

    if matches!(config.solve.mode, Mode::Sweep { .. }) {
        let rise = minimized.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let bulge = minimized
            .windows(3)
            .map(|w| w[1] - 0.5 * (w[0] + w[2]))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "curve shape",
            rise <= SHAPE_TOL && bulge <= SHAPE_TOL,
            format!("largest rise {rise:.3e}, largest midpoint excess {bulge:.3e} (tolerance {SHAPE_TOL:e})"),
        ));
    } else {
        checks.push(Check::skip("curve shape", "not a sweep"));
    }

    checks.push(grid_check(config, problem, options, rows));

    if let ProblemConfig::Gaussian { .. } = config.problem {
        let excess = rows
            .iter()
            .map(|r| r.result.value_bits - 0.5 * (1.0 + r.l).log2())
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "dirty-paper bound",
            excess <= 1e-6,
            format!("largest excess over 1/2 log2(1+B) {excess:.3e}"),
        ));
    }

    if let Some(name) = &config.validate.reference {
        let tol = config.validate.tolerance;
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for row in rows {
            let x = config.validate.parameter.unwrap_or(row.l);
            match reference(name, x) {
                Ok(v) => worst = worst.max((row.result.value_bits - v).abs()),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        checks.push(match failure {
            Some(msg) => Check::new("reference", false, msg),
            None => Check::new("reference", worst <= tol, format!("{name}: max error {worst:.3e} bits (tolerance {tol:e})")),
        });
    }
    checks
}

/// Compares the grid search at resolution `m` with the solver at the grid's
/// relaxed budget `L + l_Max / (2m)`.
fn grid_check(config: &RunConfig, problem: &UnifiedProblem, options: &SolveOptions, rows: &[Row]) -> Check {
    const NAME: &str = "grid oracle";
    if !constrained(config, options) {
        return Check::skip(NAME, "no loss budget");
    }
    if problem.num_edges() > GRID_MAX_EDGES {
        return Check::skip(NAME, format!("{} edges exceed the grid limit {GRID_MAX_EDGES}", problem.num_edges()));
    }
    let m = config.validate.grid_resolution;
    let slack = loss_bounds(problem).l_max / (2 * m) as f64;
    let sense = problem.sense();
    let step = rows.len().div_ceil(GRID_CHECKS).max(1);
    let (mut below, mut gap): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for row in rows.iter().step_by(step) {
        let grid = match grid_oracle(problem, row.l, m) {
            Ok(g) => g,
            Err(Error::TooLarge(msg)) => return Check::skip(NAME, msg),
            Err(e) => return Check::new(NAME, false, e.to_string()),
        };
        let relaxed = match solve(problem, Some(row.l + slack), options) {
            Ok(r) => sense.report(r.value_bits),
            Err(e) => return Check::new(NAME, false, e.to_string()),
        };
        below = below.max(relaxed - grid);
        gap = gap.max((grid - sense.report(row.result.value_bits)).abs());
    }
    Check::new(
        NAME,
        below <= 1e-9,
        format!("m={m}: grid minus relaxed optimum >= {:.3e}; |grid - solve| <= {gap:.3e} bits", -below),
    )
}
