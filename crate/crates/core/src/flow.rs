//! Closed-form Lagrangian flow of the checkerboard rotor field.
//!
//! Inside a filled cell every point circulates counterclockwise along the
//! sup-norm square through its start point, at constant perimeter speed `4r`
//! for radius `r`, hence with period exactly 2 in rotor time. Corners of the
//! square are crossed at that same speed even though the pointwise field
//! vanishes there: the crossing set is Lebesgue-null and this is the choice
//! selected by the bounded-variation well-posedness theory. Cell centers,
//! cell boundaries, and empty cells are fixed.
//!
//! A stage map composes to a rigid `π/2` rotation of each filled cell; the
//! full flow composes stage maps split at the dyadic breakpoints `T/2^k`.

use crate::error::{Error, Result};
use crate::field::{cell_center, is_even_cell, CheckerboardDensity, DepauwField, Stage};
use crate::rng::CounterRng;
use crate::torus::{Path, TorusPoint};
use rayon::prelude::*;

/// Position on a square streamline: sup-norm `radius` and counterclockwise
/// perimeter coordinate `arc ∈ [0, 8r)` with origin at the corner `(r, -r)`.
#[derive(Debug, Clone, Copy)]
pub struct LoopState {
    radius: f64,
    arc: f64,
}

impl LoopState {
    /// Loop through an offset in the open cell; `None` for the center and for
    /// offsets on or outside the cell boundary (those are fixed points).
    pub fn from_offset(xi: (f64, f64)) -> Option<Self> {
        let r = xi.0.abs().max(xi.1.abs());
        if r == 0.0 || r >= 0.5 {
            return None;
        }
        // The radius equals one of the coordinates exactly, so edge
        // classification by equality is exact.
        let arc = if xi.0 == r {
            r + xi.1
        } else if xi.1 == r {
            3.0 * r - xi.0
        } else if xi.0 == -r {
            5.0 * r - xi.1
        } else {
            7.0 * r + xi.0
        };
        let arc = if arc >= 8.0 * r { arc - 8.0 * r } else { arc };
        Some(Self { radius: r, arc })
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn arc(&self) -> f64 {
        self.arc
    }

    /// Back to cell-relative coordinates.
    pub fn to_offset(&self) -> (f64, f64) {
        let r = self.radius;
        let s = self.arc;
        if s < 2.0 * r {
            (r, s - r)
        } else if s < 4.0 * r {
            (3.0 * r - s, r)
        } else if s < 6.0 * r {
            (-r, 5.0 * r - s)
        } else {
            (s - 7.0 * r, -r)
        }
    }

    /// Advance by `tau_w` units of rotor time (negative runs backward).
    pub fn advanced(&self, tau_w: f64) -> Self {
        let perimeter = 8.0 * self.radius;
        let mut arc = (self.arc + 4.0 * self.radius * tau_w).rem_euclid(perimeter);
        if arc >= perimeter {
            arc -= perimeter;
        }
        Self {
            radius: self.radius,
            arc,
        }
    }

    /// Arc length to the next corner strictly ahead (corners sit at
    /// multiples of `2r`).
    pub fn arc_to_next_corner(&self) -> f64 {
        let edge = 2.0 * self.radius;
        let along = self.arc.rem_euclid(edge);
        if along == 0.0 {
            edge
        } else {
            edge - along
        }
    }
}

/// Exact motion of a cell-relative offset under `tau_w` units of rotor time.
///
/// Preserves the sup-norm radius exactly; the center, the cell boundary, and
/// everything outside are returned unchanged.
pub fn loop_advance(xi: (f64, f64), tau_w: f64) -> (f64, f64) {
    if tau_w == 0.0 {
        return xi;
    }
    match LoopState::from_offset(xi) {
        Some(state) => state.advanced(tau_w).to_offset(),
        None => xi,
    }
}

/// A flow lookup between two times in `[0, T]`; direction is implied by the
/// sign of `t_to - t_from`.
#[derive(Debug, Clone, Copy)]
pub struct FlowQuery {
    pub t_from: f64,
    pub t_to: f64,
}

impl FlowQuery {
    pub fn new(t_from: f64, t_to: f64) -> Self {
        Self { t_from, t_to }
    }
}

fn check_time(field: &DepauwField, t: f64) -> Result<()> {
    if (0.0..=field.horizon()).contains(&t) {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange {
            t,
            horizon: field.horizon(),
        })
    }
}

/// Stage-`k` flow from `t0` to `t1` (both in the stage's closed slot),
/// returning the moved point and the unwrapped displacement.
pub fn stage_flow_with_displacement(
    field: &DepauwField,
    k: u32,
    t0: f64,
    t1: f64,
    x: TorusPoint,
) -> Result<(TorusPoint, (f64, f64))> {
    let lo = field.stage_start(k);
    let hi = field.stage_end(k);
    if !(lo..=hi).contains(&t0) || !(lo..=hi).contains(&t1) {
        return Err(Error::TimeOutOfRange {
            t: if (lo..=hi).contains(&t0) { t1 } else { t0 },
            horizon: hi,
        });
    }
    let factor = field.stage_scale_factor(k);
    let y = (x.x1() * factor, x.x2() * factor);
    let c = cell_center(y);
    if !is_even_cell(c) {
        return Ok((x, (0.0, 0.0)));
    }
    let xi = (y.0 - c.0 as f64, y.1 - c.1 as f64);
    let tau_w = (t1 - t0) * field.stage_clock_rate(k);
    let xi2 = loop_advance(xi, tau_w);
    let moved = TorusPoint::new((c.0 as f64 + xi2.0) / factor, (c.1 as f64 + xi2.1) / factor);
    let disp = ((xi2.0 - xi.0) / factor, (xi2.1 - xi.1) / factor);
    Ok((moved, disp))
}

/// Stage-`k` flow map (see [`stage_flow_with_displacement`]).
pub fn stage_flow(field: &DepauwField, k: u32, t0: f64, t1: f64, x: TorusPoint) -> Result<TorusPoint> {
    stage_flow_with_displacement(field, k, t0, t1, x).map(|(p, _)| p)
}

/// Dyadic breakpoints strictly inside `(a, b)`, ascending.
fn breakpoints_between(field: &DepauwField, a: f64, b: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    for j in (1..=field.max_depth() + 1).rev() {
        let p = field.horizon() / (1u64 << j) as f64;
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts
}

/// Exact flow between two times, with the unwrapped displacement.
pub fn flow_with_displacement(
    field: &DepauwField,
    query: FlowQuery,
    x: TorusPoint,
) -> Result<(TorusPoint, (f64, f64))> {
    check_time(field, query.t_from)?;
    check_time(field, query.t_to)?;
    if query.t_from == query.t_to {
        return Ok((x, (0.0, 0.0)));
    }
    let forward = query.t_to > query.t_from;
    let (a, b) = if forward {
        (query.t_from, query.t_to)
    } else {
        (query.t_to, query.t_from)
    };
    let mut cuts = vec![a];
    cuts.extend(breakpoints_between(field, a, b));
    cuts.push(b);

    let mut pos = x;
    let mut disp = (0.0, 0.0);
    let piece = |t0: f64, t1: f64, pos: &mut TorusPoint, disp: &mut (f64, f64)| -> Result<()> {
        // The right endpoint of the piece determines its stage.
        let upper = t0.max(t1);
        match field.stage_at(upper)? {
            Stage::Truncated => Ok(()),
            Stage::Dyadic(k) => {
                let (p, d) = stage_flow_with_displacement(field, k, t0, t1, *pos)?;
                *pos = p;
                disp.0 += d.0;
                disp.1 += d.1;
                Ok(())
            }
        }
    };
    if forward {
        for w in cuts.windows(2) {
            piece(w[0], w[1], &mut pos, &mut disp)?;
        }
    } else {
        for w in cuts.windows(2).rev() {
            piece(w[1], w[0], &mut pos, &mut disp)?;
        }
    }
    Ok((pos, disp))
}

/// Exact flow map of the field between two times. Measure-preserving, and
/// inverted by the reversed query.
pub fn flow(field: &DepauwField, query: FlowQuery, x: TorusPoint) -> Result<TorusPoint> {
    flow_with_displacement(field, query, x).map(|(p, _)| p)
}

/// Integral curve from `x` sampled on `grid` (must run from 0 to `T`).
///
/// The lift is accumulated from the exact in-cell displacements, so it is the
/// true unwrapped trajectory at the grid nodes; between nodes the path
/// interpolates linearly, which is exact whenever no streamline corner is
/// crossed inside the interval (see [`trajectory_events`]).
pub fn integral_curve(field: &DepauwField, x: TorusPoint, grid: &[f64]) -> Result<Path> {
    if grid.len() < 2 {
        return Err(Error::BadGrid("integral curve grid needs at least two times"));
    }
    if grid[0] != 0.0 || *grid.last().expect("nonempty") != field.horizon() {
        return Err(Error::BadGrid("grid must cover [0, T]"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadGrid("times must be strictly increasing"));
    }
    let mut lift = Vec::with_capacity(grid.len());
    let mut pos = x;
    let mut acc = x.coords();
    lift.push(acc);
    for w in grid.windows(2) {
        let (next, d) = flow_with_displacement(field, FlowQuery::new(w[0], w[1]), pos)?;
        acc = (acc.0 + d.0, acc.1 + d.1);
        lift.push(acc);
        pos = next;
    }
    Path::from_lift(grid.to_vec(), lift)
}

/// Times in `(0, T)` where the exact trajectory from `x` crosses a streamline
/// corner or a dyadic breakpoint. A grid containing these knots makes the
/// sampled integral curve exact.
pub fn trajectory_events(field: &DepauwField, x: TorusPoint) -> Vec<f64> {
    let mut events = Vec::new();
    let mut pos = x;
    for k in (0..=field.max_depth()).rev() {
        let t0 = field.stage_start(k);
        let t1 = field.stage_end(k);
        if t1 < field.horizon() {
            events.push(t1);
        }
        let factor = field.stage_scale_factor(k);
        let y = (pos.x1() * factor, pos.x2() * factor);
        let c = cell_center(y);
        if is_even_cell(c) {
            if let Some(state) = LoopState::from_offset((y.0 - c.0 as f64, y.1 - c.1 as f64)) {
                let gap = state.arc_to_next_corner();
                let travel = 2.0 * state.radius();
                if gap < travel {
                    let dt = gap / (4.0 * state.radius()) / field.stage_clock_rate(k);
                    events.push(t0 + dt);
                }
            }
        }
        pos = stage_flow(field, k, t0, t1, pos).expect("stage bounds are exact");
    }
    events.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    events
}

/// Outcome of auditing one stage map against rigid quarter rotations.
#[derive(Debug, Clone, Copy)]
pub struct PermutationReport {
    pub stage: u32,
    pub cells_checked: usize,
    /// Largest distance between the flowed point and the rigid prediction
    /// (rotation on filled cells, identity on empty ones).
    pub max_deviation: f64,
    /// Subsquares of every filled cell permute in a cycle of length exactly 4.
    pub four_cycle_ok: bool,
}

/// Verify that the full stage-`k` map rotates every filled cell rigidly by
/// `π/2` (counterclockwise) and fixes empty cells pointwise.
pub fn permutation_check(
    field: &DepauwField,
    k: u32,
    points_per_subsquare: usize,
) -> Result<PermutationReport> {
    if k > field.max_depth() {
        return Err(Error::InvalidConfig(format!(
            "stage {k} exceeds max_depth {}",
            field.max_depth()
        )));
    }
    let t0 = field.stage_start(k);
    let t1 = field.stage_end(k);
    let scale = field.stage_lattice_scale(k);
    let n = 1i64 << scale;
    let factor = n as f64;

    let cell_ids: Vec<(i64, i64)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .collect();

    let results: Vec<(f64, bool)> = cell_ids
        .par_iter()
        .map(|&c| {
            let filled = is_even_cell(c);
            let mut rng = CounterRng::from_stream(0xA11D17, (k as u64) << 32 | ((c.0 as u64) << 16) | c.1 as u64);
            let mut dev: f64 = 0.0;
            let quadrants = [(0.25, -0.25), (0.25, 0.25), (-0.25, 0.25), (-0.25, -0.25)];
            for q in quadrants {
                for _ in 0..points_per_subsquare {
                    let xi = (
                        q.0 + (rng.next_f64() - 0.5) * 0.5,
                        q.1 + (rng.next_f64() - 0.5) * 0.5,
                    );
                    let x = TorusPoint::new((c.0 as f64 + xi.0) / factor, (c.1 as f64 + xi.1) / factor);
                    let moved = stage_flow(field, k, t0, t1, x).expect("in stage");
                    let predicted = if filled {
                        // Counterclockwise quarter turn about the cell center.
                        TorusPoint::new(
                            (c.0 as f64 - xi.1) / factor,
                            (c.1 as f64 + xi.0) / factor,
                        )
                    } else {
                        x
                    };
                    dev = dev.max(crate::torus::torus_dist(moved, predicted));
                }
            }
            // Subsquare centers of filled cells must step through a 4-cycle.
            let mut cycle_ok = true;
            if filled {
                let start = TorusPoint::new((c.0 as f64 + 0.25) / factor, (c.1 as f64 - 0.25) / factor);
                let mut p = start;
                for step in 1..=4 {
                    p = stage_flow(field, k, t0, t1, p).expect("in stage");
                    let expected_q = match step {
                        1 => (0.25, 0.25),
                        2 => (-0.25, 0.25),
                        3 => (-0.25, -0.25),
                        _ => (0.25, -0.25),
                    };
                    let expected = TorusPoint::new(
                        (c.0 as f64 + expected_q.0) / factor,
                        (c.1 as f64 + expected_q.1) / factor,
                    );
                    if crate::torus::torus_dist(p, expected) > 1e-12 {
                        cycle_ok = false;
                    }
                    if step < 4 && crate::torus::torus_dist(p, start) < 1e-12 {
                        cycle_ok = false; // cycle shorter than 4
                    }
                }
            }
            (dev, cycle_ok)
        })
        .collect();

    let max_deviation = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let four_cycle_ok = results.iter().all(|r| r.1);
    Ok(PermutationReport {
        stage: k,
        cells_checked: cell_ids.len(),
        max_deviation,
        four_cycle_ok,
    })
}

/// Phase flip of the one-time refinement calibration: pushing the stage-(k+1)
/// checkerboard through the stage-k flow recovers the stage-k checkerboard
/// with the complementary phase. Re-verified by
/// [`calibrate_refinement_phase`]; the acceptance suite runs it at scale.
pub const REFINEMENT_PHASE_FLIP: u8 = 1;

/// Determine the refinement phase empirically: find the phase `q` such that
/// the scale-1 phase-0 coloring after the stage-0 map equals the scale-2
/// phase-`q` coloring before it, with zero mismatches on a deterministic
/// sample away from cell boundaries.
pub fn calibrate_refinement_phase(field: &DepauwField) -> Result<u8> {
    let coarse = CheckerboardDensity::new(1, 0);
    let t0 = field.stage_start(0);
    let t1 = field.stage_end(0);
    let mut rng = CounterRng::from_stream(0xCA11B, 0);
    let mut samples = Vec::with_capacity(2000);
    while samples.len() < 2000 {
        let x = rng.next_point();
        if distance_to_dyadic_grid(x, 2) >= 1e-9 {
            samples.push(x);
        }
    }
    'phase: for q in 0..2u8 {
        let fine = CheckerboardDensity::new(2, q);
        for &x in &samples {
            let moved = stage_flow(field, 0, t0, t1, x)?;
            if coarse.value(moved) != fine.value(x) {
                continue 'phase;
            }
        }
        return Ok(q);
    }
    Err(Error::InvalidConfig(
        "refinement calibration failed: neither phase matches".into(),
    ))
}

/// Distance from a point to the scale-`s` dyadic grid lines (per coordinate
/// minimum), used to exclude measure-zero boundary ambiguities in exact
/// checkerboard comparisons.
pub fn distance_to_dyadic_grid(x: TorusPoint, scale: u32) -> f64 {
    let f = (1u64 << scale) as f64;
    let d = |v: f64| {
        let s = v * f;
        let fr = s - s.floor();
        fr.min(1.0 - fr) / f
    };
    d(x.x1()).min(d(x.x2()))
}

/// Transported black density `ρ_B(t, x) ∈ {0, 1}`.
///
/// Seeded by the dyadic-time formula at the start of `t`'s stage and pulled
/// back along the exact flow; at and below the truncation time the frozen
/// finest checkerboard is returned. `ρ_W = 1 - ρ_B` everywhere.
pub fn black_density(field: &DepauwField, t: f64, x: TorusPoint) -> Result<u8> {
    if !(t > 0.0 && t <= field.horizon()) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: field.horizon(),
        });
    }
    let board_at = |k_next: u32| {
        // Checkerboard at time T/2^(k_next): scale k_next + 1, phase flips per stage.
        CheckerboardDensity::new(
            k_next + 1,
            (k_next % 2) as u8 * REFINEMENT_PHASE_FLIP,
        )
    };
    match field.stage_at(t)? {
        Stage::Truncated => Ok(board_at(field.max_depth() + 1).value(x)),
        Stage::Dyadic(k) => {
            if t == field.stage_end(k) {
                // Dyadic query times read their checkerboard directly, which
                // also settles points sitting exactly on finer grid lines.
                return Ok(board_at(k).value(x));
            }
            let t0 = field.stage_start(k);
            let moved = flow(field, FlowQuery::new(t, t0), x)?;
            Ok(board_at(k + 1).value(moved))
        }
    }
}

/// Transported white density `ρ_W(t, x) = 1 - ρ_B(t, x)`.
pub fn white_density(field: &DepauwField, t: f64, x: TorusPoint) -> Result<u8> {
    Ok(1 - black_density(field, t, x)?)
}
