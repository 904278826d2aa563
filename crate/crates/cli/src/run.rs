use std::time::Instant;

use rayon::prelude::*;
use rdcc_core::{solve, SolveOptions, SolveResult, Strategy, UnifiedProblem};

use crate::config::{Mode, RunConfig, StrategyChoice, AUTO_DEFLATION_U};
use crate::error::{CliError, CliResult};

/// Environment variable overriding the configured worker count.
pub const WORKERS_ENV: &str = "RDCC_WORKERS";

/// One solved point.
#[derive(Debug, Clone)]
pub struct Row {
    /// The budget, or the achieved loss for unconstrained and fixed-`s` runs.
    pub l: f64,
    pub seconds: f64,
    pub result: SolveResult,
}

pub fn solve_options(config: &RunConfig, problem: &UnifiedProblem) -> SolveOptions {
    let s = &config.solve;
    let strategy = match (&s.mode, s.strategy) {
        (Mode::FixedS(_), _) => Strategy::Unconstrained,
        (_, StrategyChoice::Auto) if problem.is_markov() => Strategy::Strategy2,
        (_, StrategyChoice::Auto | StrategyChoice::Strategy1) => Strategy::Strategy1,
        (_, StrategyChoice::Strategy2) => Strategy::Strategy2,
        (_, StrategyChoice::Unconstrained) => Strategy::Unconstrained,
    };
    let deflate = config
        .deflation
        .enabled
        .unwrap_or(problem.num_u() > AUTO_DEFLATION_U);
    SolveOptions {
        max_iter: s.max_iter,
        newton_tol: s.newton_tol,
        newton_max_iter: s.newton_max_iter,
        early_stop_tol: s.early_stop_tol,
        strategy,
        deflation: deflate.then_some(config.deflation.options),
        record_trace: false,
    }
}

/// Worker count: explicit override, then the environment, then the config.
pub fn worker_count(config: &RunConfig, flag: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Parse {
                line: 0,
                message: format!("{WORKERS_ENV}={v:?} is not a positive integer"),
            }),
        };
    }
    Ok(config.solve.workers)
}

fn solve_one(problem: &UnifiedProblem, options: &SolveOptions, mode: &Mode, x: f64) -> CliResult<Row> {
    let start = Instant::now();
    let (budget, opts) = match mode {
        Mode::FixedS(_) => (
            None,
            SolveOptions {
                strategy: Strategy::FixedS(x),
                ..options.clone()
            },
        ),
        _ if options.strategy == Strategy::Unconstrained => (None, options.clone()),
        _ => (Some(x), options.clone()),
    };
    let result = solve(problem, budget, &opts).map_err(CliError::from_solve)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(Row {
        l: budget.unwrap_or(result.achieved_loss),
        seconds,
        result,
    })
}

/// Solves every point of the configured mode, in parallel, ordered as the
/// grid.
pub fn execute(config: &RunConfig, problem: &UnifiedProblem, workers: Option<usize>) -> CliResult<Vec<Row>> {
    let options = solve_options(config, problem);
    let mode = &config.solve.mode;
    let grid = mode.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Parse {
            line: 0,
            message: format!("cannot start {} workers: {e}", workers.unwrap_or(0)),
        })?;
    pool.install(|| {
        grid.par_iter()
            .map(|&x| solve_one(problem, &options, mode, x))
            .collect()
    })
}
