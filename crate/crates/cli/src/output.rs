use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rdcc_core::UnifiedProblem;
use serde::Serialize;

use crate::config::{Format, OutputConfig};
use crate::error::{CliError, CliResult};
use crate::run::Row;

pub const CSV_HEADER: &str = "L,value_bits,achieved_loss,s_final,iterations,support_u,seconds";

/// Rounds to 12 significant digits; negative zero becomes zero.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn num(x: f64) -> String {
    round12(x).to_string()
}

#[derive(Serialize)]
struct Record {
    #[serde(rename = "L")]
    l: f64,
    value_bits: f64,
    achieved_loss: f64,
    s_final: f64,
    iterations: usize,
    support_u: usize,
    seconds: f64,
}

fn record(row: &Row, timing: bool) -> Record {
    let r = &row.result;
    Record {
        l: round12(row.l),
        value_bits: round12(r.value_bits),
        achieved_loss: round12(r.achieved_loss),
        s_final: round12(r.final_s),
        iterations: r.iterations_run,
        support_u: r.support_u,
        seconds: if timing { round12(row.seconds) } else { 0.0 },
    }
}

pub fn render(rows: &[Row], format: Format, timing: bool) -> String {
    let records: Vec<Record> = rows.iter().map(|r| record(r, timing)).collect();
    match format {
        Format::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &records {
                let line = [
                    num(r.l),
                    num(r.value_bits),
                    num(r.achieved_loss),
                    num(r.s_final),
                    r.iterations.to_string(),
                    r.support_u.to_string(),
                    num(r.seconds),
                ]
                .join(",");
                out.push_str(&line);
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let mut out = serde_json::to_string_pretty(&records).expect("records serialize");
            out.push('\n');
            out
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `<dir>/<stem>.q.csv` for a single row, `<dir>/<stem>.<i>.q.csv` otherwise.
fn dump_path(base: &Path, index: Option<usize>, what: &str) -> PathBuf {
    let stem = base.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    let name = match index {
        Some(i) => format!("{stem}.{i}.{what}.csv"),
        None => format!("{stem}.{what}.csv"),
    };
    base.with_file_name(name)
}

fn dump(problem: &UnifiedProblem, row: &Row, base: &Path, index: Option<usize>) -> CliResult<()> {
    let q = &row.result.final_q;
    let mut text = String::from("v,u,q\n");
    for e in 0..problem.num_edges() {
        text.push_str(&format!("{},{},{}\n", problem.edge_v(e), problem.edge_u(e), num(q.get(e))));
    }
    write_file(&dump_path(base, index, "q"), &text)?;

    let r = &row.result.final_r;
    let mut text = String::from("w,u,r\n");
    for w in 0..r.num_w() {
        for u in 0..r.num_u() {
            let x = r.get(u, w);
            if x > 0.0 {
                text.push_str(&format!("{w},{u},{}\n", num(x)));
            }
        }
    }
    write_file(&dump_path(base, index, "r"), &text)
}

/// Writes the results table to the configured path, or stdout, and the
/// distribution dumps next to it.
pub fn emit(problem: &UnifiedProblem, rows: &[Row], output: &OutputConfig) -> CliResult<()> {
    let text = render(rows, output.format, output.timing);
    match &output.path {
        Some(path) => write_file(path, &text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    if output.dump_distributions {
        let base = output.path.clone().unwrap_or_else(|| PathBuf::from("rdcc"));
        let single = rows.len() == 1;
        for (i, row) in rows.iter().enumerate() {
            dump(problem, row, &base, (!single).then_some(i))?;
        }
    }
    Ok(())
}
