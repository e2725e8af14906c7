//! Path-regularity seminorms, space-time norms, and integral-curve residuals.
//!
//! All path functionals work on the lifted (unwrapped) trajectory: the
//! quantities of interest concern genuinely continuous paths, and wrapping
//! would create spurious jumps at the gluing seam.

use crate::error::{Error, Result};
use crate::sde::DriftField;
use crate::torus::{Path, TorusPoint};

/// Exponent pair for the parabolic integrability condition `d/p + 2/q < 1`
/// (with `1/∞ = 0`).
#[derive(Debug, Clone, Copy)]
pub struct ProdiSerrinParams {
    pub p: f64,
    pub q: f64,
    pub d: u32,
}

impl ProdiSerrinParams {
    pub fn new(p: f64, q: f64, d: u32) -> Self {
        Self { p, q, d }
    }
}

/// Admissibility and margin of the exponent condition: the margin is
/// `1 - d/p - 2/q`, and the pair is admissible when it is positive.
pub fn prodi_serrin_check(params: ProdiSerrinParams) -> (bool, f64) {
    let margin = 1.0 - params.d as f64 / params.p - 2.0 / params.q;
    (margin > 0.0, margin)
}

/// Parameters of the fractional-regularity toolkit, with the embedding
/// applicability condition `α ≥ θ + 1/p` recorded alongside.
#[derive(Debug, Clone, Copy)]
pub struct SeminormParams {
    pub alpha: f64,
    pub p_exp: f64,
    pub theta: f64,
}

impl SeminormParams {
    pub fn embedding_applicable(&self) -> bool {
        self.alpha >= self.theta + 1.0 / self.p_exp
    }
}

/// Nested Riemann approximation of the space-time norm
/// `(∫₀ᵀ (∫ |b|ᵖ dx)^(q/p) dt)^(1/q)` on a uniform midpoint grid
/// (`n_t` times × `n_x`² space cells). Infinite exponents take maxima.
pub fn lqlp_norm(
    sampler: impl Fn(f64, TorusPoint) -> (f64, f64),
    p: f64,
    q: f64,
    n_t: usize,
    n_x: usize,
    horizon: f64,
) -> f64 {
    assert!(n_t > 0 && n_x > 0, "grid must be nonempty");
    assert!(p >= 1.0 && q >= 1.0, "exponents must be at least 1");
    let mut time_acc: f64 = 0.0;
    let mut time_max: f64 = 0.0;
    for it in 0..n_t {
        let t = horizon * (it as f64 + 0.5) / n_t as f64;
        let mut space_acc: f64 = 0.0;
        let mut space_max: f64 = 0.0;
        for ix in 0..n_x {
            for iy in 0..n_x {
                let x = TorusPoint::new(
                    (ix as f64 + 0.5) / n_x as f64,
                    (iy as f64 + 0.5) / n_x as f64,
                );
                let v = sampler(t, x);
                let mag = (v.0 * v.0 + v.1 * v.1).sqrt();
                if p.is_finite() {
                    space_acc += mag.powf(p);
                } else {
                    space_max = space_max.max(mag);
                }
            }
        }
        let inner = if p.is_finite() {
            (space_acc / (n_x * n_x) as f64).powf(1.0 / p)
        } else {
            space_max
        };
        if q.is_finite() {
            time_acc += inner.powf(q) * (horizon / n_t as f64);
        } else {
            time_max = time_max.max(inner);
        }
    }
    if q.is_finite() {
        time_acc.powf(1.0 / q)
    } else {
        time_max
    }
}

fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let left = if i > 0 { times[i] - times[i - 1] } else { 0.0 };
        let right = if i + 1 < n { times[i + 1] - times[i] } else { 0.0 };
        w[i] = 0.5 * (left + right);
    }
    w
}

/// Discrete double-sum approximation of the fractional seminorm
/// `(∫∫ |u(s)-u(t)|ᵖ / |s-t|^(1+αp) ds dt)^(1/p)` over the sample grid of the
/// lifted path, diagonal excluded.
pub fn gagliardo_seminorm(path: &Path, alpha: f64, p_exp: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::BadGrid("seminorm needs at least two samples"));
    }
    let times = path.times();
    let lift = path.lift();
    let w = trapezoid_weights(times);
    let mut acc = 0.0;
    for i in 0..times.len() {
        for j in (i + 1)..times.len() {
            let du = (
                lift[i].0 - lift[j].0,
                lift[i].1 - lift[j].1,
            );
            let dist = (du.0 * du.0 + du.1 * du.1).sqrt();
            let dt = (times[j] - times[i]).abs();
            acc += 2.0 * w[i] * w[j] * dist.powf(p_exp) / dt.powf(1.0 + alpha * p_exp);
        }
    }
    Ok(acc.powf(1.0 / p_exp))
}

/// Hölder seminorm `sup |u(t)-u(s)| / |t-s|^θ` over all sample pairs of the
/// lifted path.
pub fn holder_seminorm(path: &Path, theta: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::BadGrid("seminorm needs at least two samples"));
    }
    let times = path.times();
    let lift = path.lift();
    let mut best: f64 = 0.0;
    for i in 0..times.len() {
        for j in (i + 1)..times.len() {
            let du = (lift[i].0 - lift[j].0, lift[i].1 - lift[j].1);
            let dist = (du.0 * du.0 + du.1 * du.1).sqrt();
            best = best.max(dist / (times[j] - times[i]).powf(theta));
        }
    }
    Ok(best)
}

/// Largest deviation, over the path's sample times, of
/// `γ(t) - γ(0) - ∫₀ᵗ b(s, γ(s)) ds`, with the drift integral taken by
/// midpoint quadrature along the interpolated lifted path, split at the
/// field's time breakpoints.
pub fn integral_curve_residual<F: DriftField>(
    path: &Path,
    field: &F,
    quad_substeps: usize,
) -> Result<f64> {
    if quad_substeps == 0 {
        return Err(Error::InvalidConfig("quad_substeps must be positive".into()));
    }
    let times = path.times();
    let lift = path.lift();
    let breakpoints = field.time_breakpoints();
    let mut integral = (0.0, 0.0);
    let mut worst: f64 = 0.0;
    for i in 0..times.len() - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        let (a, b) = (lift[i], lift[i + 1]);
        // Sub-intervals split at drift discontinuities.
        let mut cuts = vec![t0];
        for &p in &breakpoints {
            if t0 < p && p < t1 {
                cuts.push(p);
            }
        }
        cuts.push(t1);
        cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        for w in cuts.windows(2) {
            let h = (w[1] - w[0]) / quad_substeps as f64;
            for s in 0..quad_substeps {
                let tm = w[0] + (s as f64 + 0.5) * h;
                let frac = (tm - t0) / (t1 - t0);
                let pos = TorusPoint::new(
                    a.0 + frac * (b.0 - a.0),
                    a.1 + frac * (b.1 - a.1),
                );
                let v = field.value(tm, pos);
                integral.0 += v.0 * h;
                integral.1 += v.1 * h;
            }
        }
        let dev = (
            lift[i + 1].0 - lift[0].0 - integral.0,
            lift[i + 1].1 - lift[0].1 - integral.1,
        );
        worst = worst.max((dev.0 * dev.0 + dev.1 * dev.1).sqrt());
    }
    Ok(worst)
}
