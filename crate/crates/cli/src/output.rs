use std::fs;
use std::io::Write;
use std::path::Path;

use abrlab_core::eval::{mean_report, EpisodeReport};

use crate::CliError;

pub const EVAL_HEADER: &str =
    "trace_id,algo,qoe_total,bitrate_sum,rebuf_penalty,smooth_penalty,mean_bitrate_kbps,total_rebuffer_s";

/// Write via a sibling temp file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn row(
    trace_id: &str,
    algo: &str,
    q: &abrlab_core::qoe::QoeBreakdown,
    bitrate: f64,
    rebuf: f64,
) -> String {
    format!(
        "{trace_id},{algo},{},{},{},{},{bitrate},{rebuf}\n",
        q.total, q.bitrate_sum, q.rebuf_penalty, q.smooth_penalty
    )
}

/// Per-trace rows followed by a `mean` row.
pub fn eval_csv(algo: &str, reports: &[EpisodeReport]) -> String {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&row(
            &r.trace_id,
            &r.algo,
            &r.qoe,
            r.mean_bitrate_kbps,
            r.total_rebuffer_s,
        ));
    }
    let (q, bitrate, rebuf) = mean_report(reports);
    out.push_str(&row("mean", algo, &q, bitrate, rebuf));
    out
}

/// Fixed-width rendering of a CSV table for terminals.
pub fn aligned(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.len())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
