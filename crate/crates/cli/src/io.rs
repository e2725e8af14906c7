//! CSV and JSON output, CSV ingestion with line-numbered errors, and the
//! FNV-1a digest used to tag analysis inputs.

use anyhow::{bail, Context, Result};
use depauw_core::TorusPoint;
use std::fmt::Write as _;
use std::path::Path;

/// 17 significant digits: enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// FNV-1a 64-bit digest of a file's bytes, hex-encoded.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{hash:016x}"))
}

/// One `samples.csv` row.
#[derive(Debug, Clone, Copy)]
pub struct SampleRow {
    pub path_id: usize,
    pub t: f64,
    pub point: TorusPoint,
}

pub const SAMPLES_HEADER: &str = "path_id,t,x1,x2";

pub fn render_samples(rows: impl Iterator<Item = SampleRow>) -> String {
    let mut out = String::new();
    out.push_str(SAMPLES_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.path_id,
            fmt_f64(r.t),
            fmt_f64(r.point.x1()),
            fmt_f64(r.point.x2())
        );
    }
    out
}

/// Parse a samples CSV, reporting the offending line on malformed input.
pub fn parse_samples(path: &Path) -> Result<Vec<SampleRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SAMPLES_HEADER => {}
        Some((_, header)) => bail!(
            "{}:1: expected header `{SAMPLES_HEADER}`, found `{header}`",
            path.display()
        ),
        None => bail!("{}: empty file", path.display()),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bail!(
                "{}:{}: expected 4 fields, found {}",
                path.display(),
                lineno + 1,
                fields.len()
            );
        }
        let parse_field = |idx: usize, what: &str| -> Result<f64> {
            fields[idx].trim().parse::<f64>().map_err(|e| {
                anyhow::anyhow!("{}:{}: bad {what} `{}`: {e}", path.display(), lineno + 1, fields[idx])
            })
        };
        let path_id = fields[0].trim().parse::<usize>().map_err(|e| {
            anyhow::anyhow!("{}:{}: bad path_id `{}`: {e}", path.display(), lineno + 1, fields[0])
        })?;
        let t = parse_field(1, "time")?;
        let x1 = parse_field(2, "x1")?;
        let x2 = parse_field(3, "x2")?;
        rows.push(SampleRow {
            path_id,
            t,
            point: TorusPoint::new(x1, x2),
        });
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

/// Group sample rows by save time (times sorted ascending; rows keep their
/// path order within a group).
pub fn group_by_time(rows: &[SampleRow]) -> Vec<(f64, Vec<SampleRow>)> {
    let mut times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    times
        .into_iter()
        .map(|t| (t, rows.iter().filter(|r| r.t == t).copied().collect()))
        .collect()
}
