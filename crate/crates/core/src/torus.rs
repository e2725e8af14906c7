//! Geometry of the flat torus `T² = R²/Z²` and time-sampled continuous paths.
//!
//! Points are stored with both coordinates reduced to the canonical
//! fundamental domain `[0,1)²` (floor-based wrap). Paths keep, next to the
//! wrapped samples, an unwrapped lift in `R²` so that seminorms and drift
//! integrals see genuinely continuous trajectories instead of wrap jumps.

use crate::error::{Error, Result};

/// Reduce a real coordinate to `[0, 1)`.
///
/// `x - floor(x)` can round to exactly `1.0` for tiny negative inputs, so the
/// result is folded once more to keep the invariant airtight.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        r - 1.0
    } else {
        r
    }
}

/// Signed representative of a coordinate difference in `[-1/2, 1/2)`.
///
/// Ties at exactly one half break toward `+1/2`, which makes path lifts
/// deterministic.
#[inline]
pub fn min_image(delta: f64) -> f64 {
    let mut d = delta - delta.round();
    // `round` ties away from zero; renormalize so -0.5 maps to +0.5.
    if d < -0.5 {
        d += 1.0;
    } else if d >= 0.5 {
        d -= 1.0;
    }
    if d == -0.5 {
        d = 0.5;
    }
    d
}

/// A point on `T²` with canonical coordinates in `[0, 1)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    x1: f64,
    x2: f64,
}

impl TorusPoint {
    /// Wrap arbitrary plane coordinates onto the torus.
    pub fn new(x1: f64, x2: f64) -> Self {
        Self {
            x1: wrap_unit(x1),
            x2: wrap_unit(x2),
        }
    }

    #[inline]
    pub fn x1(&self) -> f64 {
        self.x1
    }

    #[inline]
    pub fn x2(&self) -> f64 {
        self.x2
    }

    #[inline]
    pub fn coords(&self) -> (f64, f64) {
        (self.x1, self.x2)
    }

    /// Translate by a plane vector and wrap.
    #[inline]
    pub fn translate(&self, v: (f64, f64)) -> Self {
        Self::new(self.x1 + v.0, self.x2 + v.1)
    }
}

/// Euclidean length of the minimal representative of `a - b`.
///
/// Symmetric, satisfies the triangle inequality, and is bounded by `√2/2`.
pub fn torus_dist(a: TorusPoint, b: TorusPoint) -> f64 {
    let d1 = min_image(a.x1 - b.x1);
    let d2 = min_image(a.x2 - b.x2);
    (d1 * d1 + d2 * d2).sqrt()
}

/// A continuous path `[0, T] → T²`, piecewise linear between samples.
///
/// The stored lift is continuous: consecutive lifted points differ by the
/// minimal-displacement representative of the wrapped difference (ties toward
/// `+1/2`). Evaluation interpolates on the lift and wraps the result, so a
/// trajectory crossing the gluing seam stays continuous.
#[derive(Debug, Clone)]
pub struct Path {
    times: Vec<f64>,
    lift: Vec<(f64, f64)>,
}

impl Path {
    /// Build a path from wrapped samples, reconstructing the lift by the
    /// minimal-displacement convention.
    ///
    /// Valid only when consecutive samples are less than half a period apart
    /// per coordinate; denser grids remove the ambiguity.
    pub fn new(times: Vec<f64>, points: Vec<TorusPoint>) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::BadGrid("times and points must have equal length"));
        }
        if times.is_empty() {
            return Err(Error::BadGrid("path needs at least one sample"));
        }
        let mut lift = Vec::with_capacity(points.len());
        let first = points[0];
        lift.push((first.x1, first.x2));
        for w in points.windows(2) {
            let prev = *lift.last().expect("nonempty");
            let d1 = min_image(w[1].x1 - w[0].x1);
            let d2 = min_image(w[1].x2 - w[0].x2);
            lift.push((prev.0 + d1, prev.1 + d2));
        }
        Self::from_lift(times, lift)
    }

    /// Build a path from an explicit lift in `R²`.
    pub fn from_lift(times: Vec<f64>, lift: Vec<(f64, f64)>) -> Result<Self> {
        if times.len() != lift.len() {
            return Err(Error::BadGrid("times and lift must have equal length"));
        }
        if times.is_empty() {
            return Err(Error::BadGrid("path needs at least one sample"));
        }
        if times[0] != 0.0 {
            return Err(Error::BadGrid("path must start at time 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) && times.len() > 1 {
            return Err(Error::BadGrid("times must be strictly increasing"));
        }
        Ok(Self { times, lift })
    }

    /// Constant path on `[0, T]`.
    pub fn constant(horizon: f64, p: TorusPoint) -> Result<Self> {
        Self::from_lift(vec![0.0, horizon], vec![p.coords(), p.coords()])
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn lift(&self) -> &[(f64, f64)] {
        &self.lift
    }

    /// Wrapped sample at index `i`.
    #[inline]
    pub fn point(&self, i: usize) -> TorusPoint {
        TorusPoint::new(self.lift[i].0, self.lift[i].1)
    }

    /// Lifted value at time `t` (linear interpolation between samples).
    pub fn evaluate_lift(&self, t: f64) -> Result<(f64, f64)> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::TimeOutOfRange { t, horizon });
        }
        // Node times reproduce the stored sample exactly.
        match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => Ok(self.lift[i]),
            Err(i) => {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let (a, b) = (self.lift[i - 1], self.lift[i]);
                let s = (t - t0) / (t1 - t0);
                Ok((a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1)))
            }
        }
    }

    /// Wrapped value at time `t`.
    pub fn evaluate(&self, t: f64) -> Result<TorusPoint> {
        let (x1, x2) = self.evaluate_lift(t)?;
        Ok(TorusPoint::new(x1, x2))
    }

    /// Freeze the head of the path: the result equals `γ(max(τ, t))`, so it is
    /// constant at `γ(τ)` on `[0, τ]` and follows the original afterwards.
    pub fn stop_before(&self, tau: f64) -> Result<Self> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&tau) {
            return Err(Error::TimeOutOfRange { t: tau, horizon });
        }
        let at_tau = self.evaluate_lift(tau)?;
        let mut times = Vec::with_capacity(self.times.len() + 2);
        let mut lift = Vec::with_capacity(self.times.len() + 2);
        if tau > 0.0 {
            times.push(0.0);
            lift.push(at_tau);
        }
        // The kink at τ becomes an explicit knot.
        times.push(tau);
        lift.push(at_tau);
        for (i, &t) in self.times.iter().enumerate() {
            if t > tau {
                times.push(t);
                lift.push(self.lift[i]);
            }
        }
        if *times.last().expect("nonempty") < horizon {
            times.push(horizon);
            lift.push(*self.lift.last().expect("nonempty"));
        }
        Self::from_lift(times, lift)
    }

    /// Reversed head: the result equals `γ(T - min(τ, t))`, so it starts at
    /// `γ(T)`, runs the final segment backwards, and is constant on `[τ, T]`.
    pub fn reverse_head(&self, tau: f64) -> Result<Self> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&tau) {
            return Err(Error::TimeOutOfRange { t: tau, horizon });
        }
        let mut times = Vec::new();
        let mut lift = Vec::new();
        times.push(0.0);
        lift.push(*self.lift.last().expect("nonempty"));
        // Original samples s ∈ (T-τ, T) replay at t = T - s ∈ (0, τ).
        for (i, &s) in self.times.iter().enumerate().rev() {
            let t = horizon - s;
            if t > 0.0 && t < tau {
                times.push(t);
                lift.push(self.lift[i]);
            }
        }
        let at_cut = self.evaluate_lift(horizon - tau)?;
        if tau > 0.0 {
            times.push(tau);
            lift.push(at_cut);
        }
        if tau < horizon {
            times.push(horizon);
            lift.push(at_cut);
        }
        Self::from_lift(times, lift)
    }

    /// Full time reversal `γ(T - ·)`.
    ///
    /// Applying it twice reproduces the stored samples exactly whenever the
    /// time grid is symmetric under `t ↦ T - t` (uniform and dyadic grids
    /// are); otherwise node times may move by one rounding ulp.
    pub fn time_reverse(&self) -> Self {
        let horizon = self.horizon();
        let times: Vec<f64> = self.times.iter().rev().map(|&t| horizon - t).collect();
        let lift: Vec<(f64, f64)> = self.lift.iter().rev().copied().collect();
        Self { times, lift }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x1: f64, x2: f64) -> TorusPoint {
        TorusPoint::new(x1, x2)
    }

    #[test]
    fn wrap_reduces_to_unit_square() {
        assert_eq!(wrap_unit(0.0), 0.0);
        assert_eq!(wrap_unit(1.0), 0.0);
        assert_eq!(wrap_unit(-0.25), 0.75);
        assert_eq!(wrap_unit(3.5), 0.5);
        assert_eq!(wrap_unit(-1e-320), 0.0);
    }

    #[test]
    fn wrap_is_lattice_invariant() {
        // Dyadic coordinates make the integer shifts exact in f64.
        let p = pt(0.375, 0.8125);
        for (m, n) in [(1.0, 0.0), (-2.0, 3.0), (5.0, -7.0)] {
            let q = pt(0.375 + m, 0.8125 + n);
            assert_eq!(p, q);
        }
        // Generic coordinates agree up to rounding of the shifted input.
        let g = pt(0.37, 0.81);
        let shifted = pt(0.37 + 3.0, 0.81 - 2.0);
        assert!(torus_dist(g, shifted) < 1e-14);
    }

    #[test]
    fn dist_examples() {
        assert_eq!(torus_dist(pt(0.0, 0.0), pt(0.0, 0.0)), 0.0);
        assert!((torus_dist(pt(0.1, 0.0), pt(0.9, 0.0)) - 0.2).abs() < 1e-15);
        let anti = torus_dist(pt(0.0, 0.0), pt(0.5, 0.5));
        assert!((anti - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn dist_is_bounded_and_symmetric() {
        let mut rng = crate::rng::CounterRng::from_stream(7, 0);
        for _ in 0..1000 {
            let a = pt(rng.next_f64(), rng.next_f64());
            let b = pt(rng.next_f64(), rng.next_f64());
            let d = torus_dist(a, b);
            assert!(d <= std::f64::consts::SQRT_2 / 2.0 + 1e-15);
            assert_eq!(d, torus_dist(b, a));
        }
    }

    #[test]
    fn evaluate_interpolates_and_reproduces_nodes() {
        let p = Path::new(vec![0.0, 1.0], vec![pt(0.0, 0.0), pt(0.5, 0.0)]).unwrap();
        let mid = p.evaluate(0.5).unwrap();
        assert!((mid.x1() - 0.25).abs() < 1e-15);
        assert_eq!(mid.x2(), 0.0);
        assert_eq!(p.evaluate(1.0).unwrap(), pt(0.5, 0.0));
        assert_eq!(p.evaluate(0.0).unwrap(), pt(0.0, 0.0));
        assert!(p.evaluate(1.5).is_err());
        assert!(p.evaluate(-0.1).is_err());
    }

    #[test]
    fn constant_path_evaluates_to_the_constant() {
        let p = Path::constant(1.0, pt(0.3, 0.4)).unwrap();
        for t in [0.0, 0.2, 0.77, 1.0] {
            assert_eq!(p.evaluate(t).unwrap(), pt(0.3, 0.4));
        }
    }

    #[test]
    fn lift_crosses_the_seam_continuously() {
        // Samples 0.9 -> 0.1 must lift to 0.9 -> 1.1, not jump to 0.1.
        let p = Path::new(vec![0.0, 1.0], vec![pt(0.9, 0.0), pt(0.1, 0.0)]).unwrap();
        assert!((p.lift()[1].0 - 1.1).abs() < 1e-15);
        let q = p.evaluate(0.5).unwrap();
        assert!((q.x1() - 0.0).abs() < 1e-15);
    }

    #[test]
    fn lift_tie_breaks_toward_plus_half() {
        let p = Path::new(vec![0.0, 1.0], vec![pt(0.0, 0.0), pt(0.5, 0.0)]).unwrap();
        assert!((p.lift()[1].0 - 0.5).abs() < 1e-15);
        let q = Path::new(vec![0.0, 1.0], vec![pt(0.9, 0.0), pt(0.4, 0.0)]).unwrap();
        assert!((q.lift()[1].0 - 1.4).abs() < 1e-15);
    }

    fn ramp_path(n: usize) -> Path {
        // γ(t) = (t mod 1, 0) on [0, 1], sampled on a uniform grid.
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let lift: Vec<(f64, f64)> = times.iter().map(|&t| (t, 0.0)).collect();
        Path::from_lift(times, lift).unwrap()
    }

    #[test]
    fn stop_before_examples() {
        let p = ramp_path(16);
        let s0 = p.stop_before(0.0).unwrap();
        for t in [0.0, 0.3, 0.9] {
            assert_eq!(s0.evaluate(t).unwrap(), p.evaluate(t).unwrap());
        }
        let s1 = p.stop_before(1.0).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert_eq!(s1.evaluate(t).unwrap(), p.evaluate(1.0).unwrap());
        }
        let s = p.stop_before(0.5).unwrap();
        let v = s.evaluate(0.25).unwrap();
        assert!((v.x1() - 0.5).abs() < 1e-15 && v.x2() == 0.0);
    }

    #[test]
    fn reverse_head_examples() {
        let p = ramp_path(16);
        // τ = 0: constant at γ(T).
        let b0 = p.reverse_head(0.0).unwrap();
        for t in [0.0, 0.4, 1.0] {
            assert_eq!(b0.evaluate(t).unwrap(), p.evaluate(1.0).unwrap());
        }
        // τ = T equals full time reversal.
        let bt = p.reverse_head(1.0).unwrap();
        let rev = p.time_reverse();
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let d = torus_dist(bt.evaluate(t).unwrap(), rev.evaluate(t).unwrap());
            assert!(d < 1e-14);
        }
        // Direct formula γ(1 - 0.25).
        let b = p.reverse_head(0.5).unwrap();
        let v = b.evaluate(0.25).unwrap();
        assert!((v.x1() - 0.75).abs() < 1e-14 && v.x2() == 0.0);
    }

    #[test]
    fn transform_endpoint_relations() {
        let mut rng = crate::rng::CounterRng::from_stream(11, 0);
        for _ in 0..50 {
            let n = 8 + (rng.next_u64() % 24) as usize;
            let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let lift: Vec<(f64, f64)> = times
                .iter()
                .map(|_| (rng.next_f64() * 0.4, rng.next_f64() * 0.4))
                .collect();
            let p = Path::from_lift(times, lift).unwrap();
            let tau = rng.next_f64();
            let s = p.stop_before(tau).unwrap();
            assert!(torus_dist(s.evaluate(0.0).unwrap(), p.evaluate(tau).unwrap()) < 1e-12);
            let b = p.reverse_head(tau).unwrap();
            assert!(torus_dist(b.evaluate(0.0).unwrap(), p.evaluate(1.0).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn time_reverse_is_an_involution_on_samples() {
        let p = ramp_path(32);
        let pp = p.time_reverse().time_reverse();
        assert_eq!(p.times(), pp.times());
        assert_eq!(p.lift(), pp.lift());
        let c = Path::constant(1.0, pt(0.2, 0.9)).unwrap();
        let cc = c.time_reverse();
        assert_eq!(cc.evaluate(0.3).unwrap(), pt(0.2, 0.9));
        // γ(t) = (t, 0): reversal evaluated at 0.3 gives γ(0.7).
        let v = ramp_path(10).time_reverse().evaluate(0.3).unwrap();
        assert!((v.x1() - 0.7).abs() < 1e-14);
    }
}
