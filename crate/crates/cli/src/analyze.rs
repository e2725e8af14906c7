//! Analysis pipelines over stored sample files; each writes a JSON report
//! with metric values, sample counts, and confidence fields.

use crate::io::{self, SampleRow};
use crate::settings::Settings;
use anyhow::{bail, Context, Result};
use depauw_core::diagnostics::integral_curve_residual;
use depauw_core::stats::{
    branching_fraction, chi_square_uniformity, disintegrate, median_per_bin_spread, sliced_w1,
    spread, Coordinate, EmpiricalMeasure,
};
use depauw_core::{Path as TorusPath, TorusPoint};
use serde_json::{json, Value};
use std::path::PathBuf;

pub const KINDS: &[&str] = &["uniformity", "branching", "backward", "residual", "convergence"];

pub fn run(
    kind: &str,
    inputs: &[PathBuf],
    settings: &Settings,
    quad_substeps: usize,
) -> Result<Value> {
    if inputs.is_empty() {
        bail!("analyze needs at least one --input file");
    }
    let input_info: Vec<Value> = inputs
        .iter()
        .map(|p| {
            Ok(json!({
                "path": p.display().to_string(),
                "digest_fnv1a64": io::file_digest(p)?,
            }))
        })
        .collect::<Result<_>>()?;

    let metrics = match kind {
        "uniformity" => uniformity(inputs, settings)?,
        "branching" => branching(inputs, settings)?,
        "backward" => backward(inputs, settings)?,
        "residual" => residual(inputs, settings, quad_substeps)?,
        "convergence" => convergence(inputs, settings)?,
        other => bail!("unknown analysis kind `{other}` (expected one of {KINDS:?})"),
    };

    Ok(json!({
        "kind": kind,
        "inputs": input_info,
        "metrics": metrics,
    }))
}

fn read_single(inputs: &[PathBuf]) -> Result<Vec<SampleRow>> {
    if inputs.len() != 1 {
        bail!("this analysis kind takes exactly one --input file");
    }
    io::parse_samples(&inputs[0])
}

fn uniformity(inputs: &[PathBuf], settings: &Settings) -> Result<Value> {
    let rows = read_single(inputs)?;
    let groups = io::group_by_time(&rows);
    let mut per_time = Vec::new();
    for (t, group) in groups {
        let samples: Vec<TorusPoint> = group.iter().map(|r| r.point).collect();
        let (stat, p) = chi_square_uniformity(&samples, settings.bins)
            .with_context(|| format!("uniformity test at t = {t}"))?;
        per_time.push(json!({
            "t": t,
            "n": samples.len(),
            "statistic": stat,
            "p_value": p,
        }));
    }
    Ok(json!({
        "bins_per_side": settings.bins,
        "significance": 0.001,
        "times": per_time,
    }))
}

fn final_marginal(rows: &[SampleRow]) -> (f64, Vec<TorusPoint>) {
    let groups = io::group_by_time(rows);
    let (t, group) = groups.last().expect("nonempty samples").clone();
    (t, group.iter().map(|r| r.point).collect())
}

fn branching(inputs: &[PathBuf], settings: &Settings) -> Result<Value> {
    let rows = read_single(inputs)?;
    let field = settings.field()?;
    let (t, samples) = final_marginal(&rows);
    let fraction = branching_fraction(&samples, &field.final_checkerboard())
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let n = samples.len() as f64;
    let ci = 1.96 * (fraction * (1.0 - fraction) / n).sqrt();
    let measure = EmpiricalMeasure::uniform_on(samples).map_err(|e| anyhow::anyhow!("{e}"))?;
    let s = spread(&measure);
    Ok(json!({
        "t": t,
        "n": measure.len(),
        "black_fraction": fraction,
        "ci95_halfwidth": ci,
        "spread": s.value,
        "spread_singleton": s.singleton,
    }))
}

type PairedSample = (f64, f64, Vec<(TorusPoint, TorusPoint)>);

/// Pair each path's earliest and latest recorded states.
fn pair_rows(rows: &[SampleRow]) -> Result<PairedSample> {
    let groups = io::group_by_time(rows);
    if groups.len() < 2 {
        bail!("backward analysis needs at least two save times per path");
    }
    let (t0, first) = groups.first().expect("nonempty").clone();
    let (t1, last) = groups.last().expect("nonempty").clone();
    if first.len() != last.len() {
        bail!("save-time groups have mismatched path counts");
    }
    let mut by_id: std::collections::HashMap<usize, TorusPoint> =
        first.iter().map(|r| (r.path_id, r.point)).collect();
    let mut pairs = Vec::with_capacity(last.len());
    for r in &last {
        let start = by_id
            .remove(&r.path_id)
            .with_context(|| format!("path {} missing at t = {t0}", r.path_id))?;
        pairs.push((start, r.point));
    }
    Ok((t0, t1, pairs))
}

fn backward(inputs: &[PathBuf], settings: &Settings) -> Result<Value> {
    let rows = read_single(inputs)?;
    let (t0, t1, pairs) = pair_rows(&rows)?;
    let family = disintegrate(&pairs, Coordinate::Second, settings.bins)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut bin_spreads: Vec<f64> = family
        .nonempty()
        .filter(|(_, m)| m.len() >= 2)
        .map(|(_, m)| spread(m).value)
        .collect();
    bin_spreads.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let median = median_per_bin_spread(&family);
    let quartile = |f: f64| -> Option<f64> {
        if bin_spreads.is_empty() {
            None
        } else {
            Some(bin_spreads[((bin_spreads.len() - 1) as f64 * f) as usize])
        }
    };
    Ok(json!({
        "t_condition": t1,
        "t_reported": t0,
        "bins_per_side": settings.bins,
        "n_pairs": pairs.len(),
        "nonempty_bins": family.nonempty().count(),
        "median_bin_spread": median,
        "q1_bin_spread": quartile(0.25),
        "q3_bin_spread": quartile(0.75),
    }))
}

fn residual(inputs: &[PathBuf], settings: &Settings, quad_substeps: usize) -> Result<Value> {
    let rows = read_single(inputs)?;
    let field = settings.field()?;
    let groups = io::group_by_time(&rows);
    let times: Vec<f64> = groups.iter().map(|(t, _)| *t).collect();
    if times.len() < 2 {
        bail!("residual analysis needs paths recorded at several save times");
    }
    let n_paths = groups[0].1.len();
    for (t, group) in &groups {
        if group.len() != n_paths {
            bail!("save time {t} has {} rows, expected {n_paths}", group.len());
        }
    }
    let mut mean = 0.0;
    let mut worst: f64 = 0.0;
    for path_idx in 0..n_paths {
        // Within a time group rows keep file order, one per path.
        let expected_id = groups[0].1[path_idx].path_id;
        let mut points = Vec::with_capacity(times.len());
        for (t, group) in &groups {
            let row = group[path_idx];
            if row.path_id != expected_id {
                bail!("row order broken at t = {t}: path {} vs {expected_id}", row.path_id);
            }
            points.push(row.point);
        }
        let path = TorusPath::new(times.clone(), points).map_err(|e| anyhow::anyhow!("{e}"))?;
        let r = integral_curve_residual(&path, &field, quad_substeps)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        mean += r;
        worst = worst.max(r);
    }
    mean /= n_paths as f64;
    Ok(json!({
        "n_paths": n_paths,
        "save_times": times.len(),
        "quad_substeps": quad_substeps,
        "mean_residual": mean,
        "max_residual": worst,
    }))
}

fn convergence(inputs: &[PathBuf], settings: &Settings) -> Result<Value> {
    if inputs.len() < 2 {
        bail!("convergence analysis needs at least two --input files (a noise ladder)");
    }
    let field = settings.field()?;
    let mut ladder = Vec::new();
    let mut marginals = Vec::new();
    for input in inputs {
        let rows = io::parse_samples(input)?;
        let (t, samples) = final_marginal(&rows);
        let fraction = branching_fraction(&samples, &field.final_checkerboard())
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let measure = EmpiricalMeasure::uniform_on(samples).map_err(|e| anyhow::anyhow!("{e}"))?;
        let s = spread(&measure);
        ladder.push(json!({
            "input": input.display().to_string(),
            "t": t,
            "n": measure.len(),
            "spread": s.value,
            "black_fraction": fraction,
        }));
        marginals.push(measure);
    }
    let mut distances = Vec::new();
    for w in marginals.windows(2) {
        distances.push(sliced_w1(&w[0], &w[1], 8));
    }
    Ok(json!({
        "ladder": ladder,
        "sliced_w1_consecutive": distances,
        "n_directions": 8,
    }))
}
