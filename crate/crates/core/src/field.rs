//! The dyadically rescaled checkerboard rotor field on `T²` and its cell and
//! density bookkeeping.
//!
//! The base pattern lives in the plane: a unit square cell carries a
//! divergence-free rotor whose streamlines are concentric sup-norm squares,
//! and the cell is periodized over the even-parity lattice
//! `Λ = {c ∈ Z² : c₁ + c₂ even}` so that filled (rotating) and empty (static)
//! cells alternate like a checkerboard. That plane pattern has period 2, not
//! 1, so it only descends to the unit torus after compressing lengths by one
//! half: on `T²` the coarsest cells have side `1/2`, and the stage-`k` field
//! reads the pattern in the scaled coordinate `y = 2^(k+1) x`. Stage `k`
//! occupies the time slot `(T/2^(k+1), T/2^k]`, and each stage turns its
//! filled cells by exactly a quarter period.
//!
//! Time truncation: below `T/2^(max_depth+1)` the field is zero, which keeps
//! the drift inside the bounded-variation well-posedness class while leaving
//! every statistic of interest unchanged at the noise levels used here.

use crate::torus::TorusPoint;

/// Velocity of the base rotor cell at offset `xi` from the cell center.
///
/// Piecewise linear and divergence-free in each of its two triangle regions:
/// `(0, 4ξ₁)` where `1/2 > |ξ₁| > |ξ₂|`, `(-4ξ₂, 0)` where
/// `1/2 > |ξ₂| > |ξ₁|`, zero otherwise (diagonals, center, and everything
/// outside the open cell). Points circulate counterclockwise along the
/// sup-norm square of their radius with period 2.
#[inline]
pub fn cell_velocity(xi: (f64, f64)) -> (f64, f64) {
    let a1 = xi.0.abs();
    let a2 = xi.1.abs();
    if a1 < 0.5 && a1 > a2 {
        (0.0, 4.0 * xi.0)
    } else if a2 < 0.5 && a2 > a1 {
        (-4.0 * xi.1, 0.0)
    } else {
        (0.0, 0.0)
    }
}

/// Center of the half-open unit cell `[c - 1/2, c + 1/2)²` containing `z`.
#[inline]
pub(crate) fn cell_center(z: (f64, f64)) -> (i64, i64) {
    ((z.0 + 0.5).floor() as i64, (z.1 + 0.5).floor() as i64)
}

#[inline]
pub(crate) fn is_even_cell(c: (i64, i64)) -> bool {
    (c.0 + c.1) % 2 == 0
}

/// Unit-amplitude periodization of the rotor over the even lattice.
#[inline]
pub(crate) fn lattice_velocity_unit(z: (f64, f64)) -> (f64, f64) {
    let c = cell_center(z);
    if is_even_cell(c) {
        cell_velocity((z.0 - c.0 as f64, z.1 - c.1 as f64))
    } else {
        (0.0, 0.0)
    }
}

/// Stage classification of a time in `(0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// `t` lies in the dyadic slot `(T/2^(k+1), T/2^k]`.
    Dyadic(u32),
    /// `t ≤ T/2^(max_depth+1)`: the field is zero there.
    Truncated,
}

/// Address of a half-open square cell of the scale-`s` dyadic lattice.
///
/// The cell is the square of side 1 around `center` in the scaled coordinate
/// `y = 2^scale · x`; it is filled (rotating) exactly when the center
/// coordinate sum is even.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellAddress {
    pub scale: u32,
    pub center: (i64, i64),
    pub filled: bool,
}

/// Locate the scale-`s` cell containing a torus point.
pub fn cell_at(scale: u32, x: TorusPoint) -> CellAddress {
    let factor = (1u64 << scale) as f64;
    let y = (x.x1() * factor, x.x2() * factor);
    let center = cell_center(y);
    CellAddress {
        scale,
        center,
        filled: is_even_cell(center),
    }
}

/// A dyadic checkerboard coloring of the torus.
///
/// The value at `x` is `phase XOR ((⌊2^scale x₁⌋ + ⌊2^scale x₂⌋) mod 2)`,
/// evaluated on the canonical representative in `[0,1)²`; the coloring is a
/// genuine torus function for `scale ≥ 1` (at scale 0 it is constant on the
/// fundamental domain). The complement coloring is `1 - value` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckerboardDensity {
    pub scale: u32,
    pub phase: u8,
}

impl CheckerboardDensity {
    pub fn new(scale: u32, phase: u8) -> Self {
        Self {
            scale,
            phase: phase & 1,
        }
    }

    /// Color bit at a torus point.
    #[inline]
    pub fn value(&self, x: TorusPoint) -> u8 {
        self.value_plane(x.coords())
    }

    /// Color bit of the plane formula at an arbitrary (possibly lifted)
    /// coordinate pair.
    #[inline]
    pub fn value_plane(&self, z: (f64, f64)) -> u8 {
        let factor = (1u64 << self.scale) as f64;
        let a = (z.0 * factor).floor() as i64;
        let b = (z.1 * factor).floor() as i64;
        self.phase ^ ((a + b).rem_euclid(2) as u8)
    }

    /// The swapped-color checkerboard.
    pub fn complement(&self) -> Self {
        Self {
            scale: self.scale,
            phase: self.phase ^ 1,
        }
    }
}

/// The dyadically rescaled rotor field on the unit torus.
#[derive(Debug, Clone, Copy)]
pub struct DepauwField {
    horizon: f64,
    max_depth: u32,
    speed_factor: f64,
}

impl DepauwField {
    pub const DEFAULT_MAX_DEPTH: u32 = 12;

    /// Field with horizon `T` and truncation depth `max_depth`.
    ///
    /// The amplitude is fixed to `1/(2T)`: the rotor clock accumulated across
    /// any single stage is then exactly one quarter period, so each stage map
    /// is a rigid `π/2` rotation of its filled cells for every horizon.
    pub fn new(horizon: f64, max_depth: u32) -> crate::Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(crate::Error::InvalidConfig(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if max_depth > 40 {
            return Err(crate::Error::InvalidConfig(format!(
                "max_depth {max_depth} too large (scaled coordinates overflow)"
            )));
        }
        Ok(Self {
            horizon,
            max_depth,
            speed_factor: 0.5 / horizon,
        })
    }

    /// Unit horizon, default truncation depth.
    pub fn standard() -> Self {
        Self::new(1.0, Self::DEFAULT_MAX_DEPTH).expect("standard parameters are valid")
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    #[inline]
    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    #[inline]
    pub fn speed_factor(&self) -> f64 {
        self.speed_factor
    }

    /// Test hook: scale the amplitude away from its calibrated value.
    /// Breaks the quarter-turn property on purpose (negative controls).
    pub fn with_speed_factor_scaled(mut self, factor: f64) -> Self {
        self.speed_factor *= factor;
        self
    }

    /// Plane periodization scaled like the coarsest-stage pattern of the
    /// original construction: amplitude `1/T` on unit cells.
    #[inline]
    pub fn lattice_velocity(&self, z: (f64, f64)) -> (f64, f64) {
        let v = lattice_velocity_unit(z);
        (v.0 / self.horizon, v.1 / self.horizon)
    }

    /// Start of stage `k`'s time slot, `T/2^(k+1)`.
    #[inline]
    pub fn stage_start(&self, k: u32) -> f64 {
        self.horizon / (1u64 << (k + 1)) as f64
    }

    /// End of stage `k`'s time slot, `T/2^k`.
    #[inline]
    pub fn stage_end(&self, k: u32) -> f64 {
        self.horizon / (1u64 << k) as f64
    }

    /// Below this time the field is zero.
    #[inline]
    pub fn truncation_time(&self) -> f64 {
        self.stage_start(self.max_depth)
    }

    /// Scaled-coordinate factor `2^(k+1)` of stage `k`: the stage reads the
    /// plane pattern in `y = 2^(k+1) x`.
    #[inline]
    pub fn stage_scale_factor(&self, k: u32) -> f64 {
        (1u64 << (k + 1)) as f64
    }

    /// Dyadic lattice scale of stage `k`'s cells.
    #[inline]
    pub fn stage_lattice_scale(&self, k: u32) -> u32 {
        k + 1
    }

    /// Rotor-clock rate of stage `k`: `d(tau_w)/dt = 2^k / T`.
    #[inline]
    pub fn stage_clock_rate(&self, k: u32) -> f64 {
        self.speed_factor * self.stage_scale_factor(k)
    }

    /// The unique stage whose slot `(T/2^(k+1), T/2^k]` contains `t`, or
    /// `Truncated` when `t` is at or below the truncation time. Breakpoints
    /// belong to the coarser stage.
    pub fn stage_at(&self, t: f64) -> crate::Result<Stage> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(crate::Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let ratio = t / self.horizon;
        let mut k = (-ratio.log2()).floor() as i64;
        if k < 0 {
            k = 0;
        }
        // log2 can land one off at exact breakpoints; fix by direct comparison.
        while (-(k as f64)).exp2() < ratio && k > 0 {
            k -= 1;
        }
        while (-(k as f64 + 1.0)).exp2() >= ratio {
            k += 1;
        }
        if k as u32 > self.max_depth {
            Ok(Stage::Truncated)
        } else {
            Ok(Stage::Dyadic(k as u32))
        }
    }

    /// Drift at a stage, bypassing the time lookup.
    #[inline]
    pub fn velocity_at_stage(&self, k: u32, x: TorusPoint) -> (f64, f64) {
        let factor = self.stage_scale_factor(k);
        let v = lattice_velocity_unit((x.x1() * factor, x.x2() * factor));
        (v.0 * self.speed_factor, v.1 * self.speed_factor)
    }

    /// Drift `b(t, x)`; zero at `t = 0` and in the truncated slot.
    /// Bounded by `2 · speed_factor` in the sup norm.
    pub fn velocity(&self, t: f64, x: TorusPoint) -> (f64, f64) {
        debug_assert!(
            (0.0..=self.horizon).contains(&t),
            "velocity queried outside [0, T]"
        );
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        match self.stage_at(t.min(self.horizon)) {
            Ok(Stage::Dyadic(k)) => self.velocity_at_stage(k, x),
            _ => (0.0, 0.0),
        }
    }

    /// The checkerboard coloring transported to the final time: scale 1,
    /// phase 0 (value 0 at `(1/2, 1/2)`).
    pub fn final_checkerboard(&self) -> CheckerboardDensity {
        CheckerboardDensity::new(1, 0)
    }
}
