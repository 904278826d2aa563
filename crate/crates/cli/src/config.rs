//! Run configuration: a TOML file with `[problem]`, `[solve]`, `[deflation]`,
//! `[output]` and an optional `[validate]` section. See `docs/config.md`.

use std::path::{Path, PathBuf};

use rdcc_core::problems::{
    build_channel, build_gaussian_quantized, build_lossy, ChannelReduction, ChannelStateSpec, LossyComputingSpec,
    LossyReduction, DEFAULT_ALPHABET_CAP,
};
use rdcc_core::{build_unified_problem, DeflationOptions, Sense, UnifiedProblem};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    solve: RawSolve,
    #[serde(default)]
    deflation: RawDeflation,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    validate: RawValidate,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: String,
    reduction: Option<String>,
    alphabet_cap: Option<u64>,
    // lossy_computing and channel_state
    p_joint: Option<Vec<Vec<f64>>>,
    f_table: Option<Vec<Vec<usize>>>,
    d_matrix: Option<Vec<Vec<f64>>>,
    channel: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    cost: Option<Vec<Vec<Vec<f64>>>>,
    // gaussian_quantized
    b: Option<u32>,
    // unified
    num_u: Option<usize>,
    p_v: Option<Vec<f64>>,
    edges: Option<Vec<[usize; 2]>>,
    channels: Option<Vec<Vec<f64>>>,
    losses: Option<Vec<f64>>,
    sense: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolve {
    mode: String,
    loss: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
    n: Option<usize>,
    s: Option<Vec<f64>>,
    strategy: Option<String>,
    max_iter: Option<usize>,
    newton_tol: Option<f64>,
    newton_max_iter: Option<usize>,
    early_stop_tol: Option<f64>,
    workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeflation {
    enabled: Option<bool>,
    period: Option<usize>,
    threshold_scale: Option<f64>,
    min_support: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<String>,
    dump_distributions: Option<bool>,
    timing: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidate {
    reference: Option<String>,
    parameter: Option<f64>,
    tolerance: Option<f64>,
    grid_resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemConfig {
    Unified {
        num_u: usize,
        edges: Vec<(usize, usize)>,
        p_v: Vec<f64>,
        channels: Vec<Vec<f64>>,
        losses: Vec<f64>,
        sense: Sense,
    },
    Lossy(LossyComputingSpec),
    Channel(ChannelStateSpec),
    Gaussian { b: u32 },
}

impl ProblemConfig {
    pub fn build(&self) -> CliResult<UnifiedProblem> {
        match self {
            Self::Unified {
                num_u,
                edges,
                p_v,
                channels,
                losses,
                sense,
            } => build_unified_problem(*num_u, edges, p_v, channels, losses, *sense),
            Self::Lossy(spec) => build_lossy(spec),
            Self::Channel(spec) => build_channel(spec),
            Self::Gaussian { b } => build_gaussian_quantized(*b).and_then(|spec| build_channel(&spec)),
        }
        .map_err(CliError::Build)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Point(f64),
    Sweep { lo: f64, hi: f64, n: usize },
    FixedS(Vec<f64>),
}

impl Mode {
    pub fn grid(&self) -> Vec<f64> {
        match self {
            Self::Point(l) => vec![*l],
            Self::Sweep { lo, hi, n } => (0..*n)
                .map(|i| lo + (hi - lo) * i as f64 / (*n - 1) as f64)
                .collect(),
            Self::FixedS(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    /// Strategy 2 on Markov problems, Strategy 1 otherwise.
    Auto,
    Strategy1,
    Strategy2,
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub mode: Mode,
    pub strategy: StrategyChoice,
    pub max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub early_stop_tol: Option<f64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflationConfig {
    /// `None` turns deflation on when `|U|` exceeds [`AUTO_DEFLATION_U`].
    pub enabled: Option<bool>,
    pub options: DeflationOptions,
}

/// Alphabet size above which deflation is on unless configured otherwise.
pub const AUTO_DEFLATION_U: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
    pub dump_distributions: bool,
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateConfig {
    pub reference: Option<String>,
    pub parameter: Option<f64>,
    pub tolerance: f64,
    pub grid_resolution: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub solve: SolveConfig,
    pub deflation: DeflationConfig,
    pub output: OutputConfig,
    pub validate: ValidateConfig,
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse {
        line: e.span().map_or(0, |s| line_at(text, s.start)),
        message: e.message().to_string(),
    })?;
    let at = |key: &str, message: String| CliError::Parse {
        line: line_of_key(text, key),
        message,
    };
    Ok(RunConfig {
        problem: problem_config(raw.problem, &at)?,
        solve: solve_config(raw.solve, &at)?,
        deflation: deflation_config(raw.deflation, &at)?,
        output: output_config(raw.output, &at)?,
        validate: validate_config(raw.validate, &at)?,
    })
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first assignment to `key`, or 0.
fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn required<T>(value: Option<T>, field: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::ShapeMismatch {
        field: field.to_string(),
        expected: 1,
        got: 0,
    })
}

fn check_len(field: String, expected: usize, got: usize) -> CliResult<()> {
    if expected == got {
        Ok(())
    } else {
        Err(CliError::ShapeMismatch { field, expected, got })
    }
}

fn check_matrix<T>(field: &str, m: &[Vec<T>], rows: usize, cols: usize) -> CliResult<()> {
    check_len(field.to_string(), rows, m.len())?;
    for (i, row) in m.iter().enumerate() {
        check_len(format!("{field}[{i}]"), cols, row.len())?;
    }
    Ok(())
}

fn joint_shape(p: &[Vec<f64>]) -> CliResult<(usize, usize)> {
    let n2 = p.first().map_or(0, Vec::len);
    if n2 == 0 {
        return Err(CliError::ShapeMismatch {
            field: "p_joint".into(),
            expected: 1,
            got: 0,
        });
    }
    check_matrix("p_joint", p, p.len(), n2)?;
    Ok((p.len(), n2))
}

type At<'a> = dyn Fn(&str, String) -> CliError + 'a;

fn problem_config(raw: RawProblem, at: &At) -> CliResult<ProblemConfig> {
    let cap = raw.alphabet_cap.unwrap_or(DEFAULT_ALPHABET_CAP);
    let reduction = raw.reduction.as_deref();
    match raw.kind.as_str() {
        "lossy_computing" => {
            let p = required(raw.p_joint, "p_joint")?;
            let f = required(raw.f_table, "f_table")?;
            let d = required(raw.d_matrix, "d_matrix")?;
            let (n1, n2) = joint_shape(&p)?;
            check_matrix("f_table", &f, n1, n2)?;
            let nzh = d.first().map_or(0, Vec::len);
            check_matrix("d_matrix", &d, d.len(), nzh)?;
            let reduction = match reduction.unwrap_or("canonical") {
                "canonical" => LossyReduction::Canonical,
                "common_part" => LossyReduction::CommonPart,
                "min_distortion" => LossyReduction::MinDistortion,
                other => return Err(at("reduction", format!("unknown lossy reduction {other:?}"))),
            };
            Ok(ProblemConfig::Lossy(LossyComputingSpec {
                reduction,
                alphabet_cap: cap,
                ..LossyComputingSpec::new(p, f, d)
            }))
        }
        "channel_state" => {
            let p = required(raw.p_joint, "p_joint")?;
            let channel = required(raw.channel, "channel")?;
            let cost = required(raw.cost, "cost")?;
            let (n1, n2) = joint_shape(&p)?;
            check_len("channel".into(), n1, channel.len())?;
            let nx = channel.first().and_then(|c| c.first()).map_or(0, Vec::len);
            let ny = channel
                .first()
                .and_then(|c| c.first())
                .and_then(|c| c.first())
                .map_or(0, Vec::len);
            for (s1, block) in channel.iter().enumerate() {
                check_len(format!("channel[{s1}]"), n2, block.len())?;
                for (s2, m) in block.iter().enumerate() {
                    check_matrix(&format!("channel[{s1}][{s2}]"), m, nx, ny)?;
                }
            }
            check_len("cost".into(), n1, cost.len())?;
            for (s1, block) in cost.iter().enumerate() {
                check_matrix(&format!("cost[{s1}]"), block, n2, nx)?;
            }
            let reduction = match reduction.unwrap_or("canonical") {
                "canonical" => ChannelReduction::Canonical,
                "common_part" => ChannelReduction::CommonPart,
                "min_cost" => ChannelReduction::MinCost,
                other => return Err(at("reduction", format!("unknown channel reduction {other:?}"))),
            };
            Ok(ProblemConfig::Channel(ChannelStateSpec {
                reduction,
                alphabet_cap: cap,
                ..ChannelStateSpec::new(p, channel, cost)
            }))
        }
        "gaussian_quantized" => {
            if reduction.is_some() {
                return Err(at("reduction", "gaussian_quantized takes no reduction".into()));
            }
            Ok(ProblemConfig::Gaussian {
                b: required(raw.b, "b")?,
            })
        }
        "unified" => {
            let num_u = required(raw.num_u, "num_u")?;
            let p_v = required(raw.p_v, "p_v")?;
            let edges = required(raw.edges, "edges")?;
            let channels = required(raw.channels, "channels")?;
            let losses = required(raw.losses, "losses")?;
            let nw = channels.first().map_or(0, Vec::len);
            check_matrix("channels", &channels, edges.len(), nw)?;
            check_len("losses".into(), edges.len(), losses.len())?;
            let sense = match raw.sense.as_deref().unwrap_or("minimize") {
                "minimize" => Sense::Minimize,
                "maximize" => Sense::MaximizeNegated,
                other => return Err(at("sense", format!("unknown sense {other:?}"))),
            };
            Ok(ProblemConfig::Unified {
                num_u,
                edges: edges.into_iter().map(|[v, u]| (v, u)).collect(),
                p_v,
                channels,
                losses,
                sense,
            })
        }
        other => Err(CliError::UnknownKind(other.to_string())),
    }
}

fn solve_config(raw: RawSolve, at: &At) -> CliResult<SolveConfig> {
    let strategy = match raw.strategy.as_deref().unwrap_or("auto") {
        "auto" => StrategyChoice::Auto,
        "strategy1" => StrategyChoice::Strategy1,
        "strategy2" => StrategyChoice::Strategy2,
        "unconstrained" => StrategyChoice::Unconstrained,
        other => return Err(at("strategy", format!("unknown strategy {other:?}"))),
    };
    let stray = |keys: &[(&str, bool)]| -> CliResult<()> {
        match keys.iter().find(|(_, set)| *set) {
            Some((key, _)) => Err(at(key, format!("{key} is not used in {} mode", raw.mode))),
            None => Ok(()),
        }
    };
    let sweep_keys = [("lo", raw.lo.is_some()), ("hi", raw.hi.is_some()), ("n", raw.n.is_some())];
    let mode = match raw.mode.as_str() {
        "point" => {
            stray(&sweep_keys)?;
            stray(&[("s", raw.s.is_some())])?;
            match (raw.loss, strategy) {
                (Some(_), StrategyChoice::Unconstrained) => {
                    return Err(at("loss", "an unconstrained solve takes no loss".into()))
                }
                (Some(l), _) => Mode::Point(l),
                (None, StrategyChoice::Unconstrained) => Mode::Point(f64::NAN),
                (None, _) => return Err(at("mode", "point mode needs loss".into())),
            }
        }
        "sweep" => {
            stray(&[("loss", raw.loss.is_some()), ("s", raw.s.is_some())])?;
            if strategy == StrategyChoice::Unconstrained {
                return Err(at("strategy", "a sweep needs a constrained strategy".into()));
            }
            let (lo, hi, n) = match (raw.lo, raw.hi, raw.n) {
                (Some(lo), Some(hi), Some(n)) => (lo, hi, n),
                _ => return Err(at("mode", "sweep mode needs lo, hi and n".into())),
            };
            if !(lo < hi) {
                return Err(at("lo", format!("sweep needs lo < hi, got {lo} and {hi}")));
            }
            if n < 2 {
                return Err(at("n", format!("sweep needs n >= 2, got {n}")));
            }
            Mode::Sweep { lo, hi, n }
        }
        "fixed_s" => {
            stray(&sweep_keys)?;
            stray(&[("loss", raw.loss.is_some())])?;
            if raw.strategy.is_some() {
                return Err(at("strategy", "fixed_s mode sets its own strategy".into()));
            }
            match raw.s {
                Some(s) if !s.is_empty() => Mode::FixedS(s),
                _ => return Err(at("mode", "fixed_s mode needs a non-empty s".into())),
            }
        }
        other => return Err(at("mode", format!("unknown mode {other:?}"))),
    };
    if raw.workers == Some(0) {
        return Err(at("workers", "workers must be at least 1".into()));
    }
    let defaults = rdcc_core::SolveOptions::default();
    Ok(SolveConfig {
        mode,
        strategy,
        max_iter: raw.max_iter.unwrap_or(defaults.max_iter),
        newton_tol: raw.newton_tol.unwrap_or(defaults.newton_tol),
        newton_max_iter: raw.newton_max_iter.unwrap_or(defaults.newton_max_iter),
        early_stop_tol: raw.early_stop_tol,
        workers: raw.workers,
    })
}

fn deflation_config(raw: RawDeflation, at: &At) -> CliResult<DeflationConfig> {
    let d = DeflationOptions::default();
    let options = DeflationOptions {
        period: raw.period.unwrap_or(d.period),
        threshold_scale: raw.threshold_scale.unwrap_or(d.threshold_scale),
        min_support: raw.min_support.unwrap_or(d.min_support),
    };
    options
        .validate()
        .map_err(|e| at("period", e.to_string()))?;
    Ok(DeflationConfig {
        enabled: raw.enabled,
        options,
    })
}

fn output_config(raw: RawOutput, at: &At) -> CliResult<OutputConfig> {
    let format = match raw.format.as_deref().unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(at("format", format!("unknown format {other:?}"))),
    };
    Ok(OutputConfig {
        path: raw.path,
        format,
        dump_distributions: raw.dump_distributions.unwrap_or(false),
        timing: raw.timing.unwrap_or(true),
    })
}

fn validate_config(raw: RawValidate, at: &At) -> CliResult<ValidateConfig> {
    if let Some(name) = &raw.reference {
        name.parse::<rdcc_core::oracle::ReferenceCurve>()
            .map_err(|e| at("reference", e.to_string()))?;
    }
    let grid_resolution = raw.grid_resolution.unwrap_or(200);
    if grid_resolution < 10 {
        return Err(at("grid_resolution", "grid_resolution must be at least 10".into()));
    }
    Ok(ValidateConfig {
        reference: raw.reference,
        parameter: raw.parameter,
        tolerance: raw.tolerance.unwrap_or(1e-4),
        grid_resolution,
    })
}
