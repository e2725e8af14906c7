//! Monte Carlo integration of `dX = b(t, X) dt + ν dW` on the torus.
//!
//! Paths are independent work units: each one owns counter-based RNG streams
//! keyed by `(seed, path_index)`, so ensembles are reproducible bit-for-bit
//! whatever the thread count. The stepper never straddles a dyadic breakpoint
//! or a save time, and inside stage `k` the step shrinks with the stage
//! length, because the drift is discontinuous in time exactly at the
//! breakpoints.

use crate::error::{Error, Result};
use crate::field::{DepauwField, Stage};
use crate::rng::CounterRng;
use crate::torus::TorusPoint;
use rayon::prelude::*;

/// Memory guard for ensemble allocation.
const MEMORY_LIMIT_BYTES: u64 = 4 << 30;

/// Drift fields the SDE engine can integrate.
pub trait DriftField: Sync {
    fn horizon(&self) -> f64;

    /// Times in `(0, T)` where the drift jumps in `t`.
    fn time_breakpoints(&self) -> Vec<f64>;

    /// Drift value at `(t, x)`.
    fn value(&self, t: f64, x: TorusPoint) -> (f64, f64);

    /// Exact drift-only flow across `[t0, t1]`, which the caller guarantees
    /// does not straddle a breakpoint.
    fn exact_flow_in_segment(&self, t0: f64, t1: f64, x: TorusPoint) -> TorusPoint;

    /// Largest admissible step for a segment ending at `segment_end`.
    fn effective_dt(&self, _segment_end: f64, dt_base: f64, _steps_per_stage_min: u32) -> f64 {
        dt_base
    }
}

impl DriftField for DepauwField {
    fn horizon(&self) -> f64 {
        DepauwField::horizon(self)
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        (1..=self.max_depth() + 1)
            .map(|j| DepauwField::horizon(self) / (1u64 << j) as f64)
            .collect()
    }

    fn value(&self, t: f64, x: TorusPoint) -> (f64, f64) {
        self.velocity(t, x)
    }

    fn exact_flow_in_segment(&self, t0: f64, t1: f64, x: TorusPoint) -> TorusPoint {
        if t0 == t1 {
            return x;
        }
        // The caller guarantees the segment stays within one stage slot, so
        // the breakpoint-splitting machinery of `flow` is unnecessary here.
        match self.stage_at(t0.max(t1)) {
            Ok(Stage::Dyadic(k)) => {
                crate::flow::stage_flow(self, k, t0, t1, x).expect("segment within stage")
            }
            _ => x,
        }
    }

    fn effective_dt(&self, segment_end: f64, dt_base: f64, steps_per_stage_min: u32) -> f64 {
        match self.stage_at(segment_end) {
            Ok(Stage::Dyadic(k)) => {
                let stage_len = self.stage_start(k);
                dt_base.min(stage_len / steps_per_stage_min as f64)
            }
            _ => dt_base,
        }
    }
}

/// The zero vector field: the SDE reduces to scaled Brownian motion.
#[derive(Debug, Clone, Copy)]
pub struct ZeroDrift {
    pub horizon: f64,
}

impl DriftField for ZeroDrift {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn value(&self, _t: f64, _x: TorusPoint) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn exact_flow_in_segment(&self, _t0: f64, _t1: f64, x: TorusPoint) -> TorusPoint {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    EulerMaruyama,
    /// Exact in-stage drift flow composed with the Gaussian kick; the only
    /// error is the operator splitting against the noise.
    DriftSplitting,
}

impl Integrator {
    pub fn name(&self) -> &'static str {
        match self {
            Integrator::EulerMaruyama => "euler_maruyama",
            Integrator::DriftSplitting => "drift_splitting",
        }
    }
}

#[derive(Debug, Clone)]
pub enum InitialLaw {
    /// Lebesgue on the torus, one substream per path.
    Uniform,
    Point(TorusPoint),
    /// One start point per path; the list length must equal `n_paths`.
    Custom(Vec<TorusPoint>),
}

/// Description of one Monte Carlo run.
#[derive(Debug, Clone)]
pub struct SdeConfig {
    pub nu: f64,
    pub n_paths: usize,
    pub dt_base: f64,
    pub steps_per_stage_min: u32,
    pub seed: u64,
    pub initial: InitialLaw,
    pub save_times: Vec<f64>,
    pub integrator: Integrator,
}

impl SdeConfig {
    pub fn new(nu: f64, n_paths: usize, dt_base: f64, seed: u64) -> Self {
        Self {
            nu,
            n_paths,
            dt_base,
            steps_per_stage_min: 8,
            seed,
            initial: InitialLaw::Uniform,
            save_times: vec![1.0],
            integrator: Integrator::DriftSplitting,
        }
    }

    pub fn with_initial(mut self, initial: InitialLaw) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_save_times(mut self, save_times: Vec<f64>) -> Self {
        self.save_times = save_times;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        if self.dt_base <= 0.0 || self.dt_base.is_nan() {
            return Err(Error::InvalidConfig("dt_base must be positive".into()));
        }
        if self.nu < 0.0 || !self.nu.is_finite() {
            return Err(Error::InvalidConfig("nu must be a nonnegative real".into()));
        }
        if self.steps_per_stage_min == 0 {
            return Err(Error::InvalidConfig(
                "steps_per_stage_min must be at least 1".into(),
            ));
        }
        if self.save_times.is_empty() {
            return Err(Error::InvalidConfig("save_times must be nonempty".into()));
        }
        if self
            .save_times
            .windows(2)
            .any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidConfig(
                "save_times must be strictly increasing".into(),
            ));
        }
        if self.save_times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
            return Err(Error::InvalidConfig("save_times must lie in [0, T]".into()));
        }
        if let InitialLaw::Custom(list) = &self.initial {
            if list.len() != self.n_paths {
                return Err(Error::InvalidConfig(format!(
                    "custom initial list has {} points for {} paths",
                    list.len(),
                    self.n_paths
                )));
            }
        }
        let bytes = self.n_paths as u64 * self.save_times.len() as u64 * 16;
        if bytes > MEMORY_LIMIT_BYTES {
            return Err(Error::ResourceLimit {
                bytes,
                limit: MEMORY_LIMIT_BYTES,
            });
        }
        Ok(())
    }
}

/// Gaussian torus increment over a step: two independent draws with mean 0
/// and standard deviation `ν √dt` per component, simulated in the covering
/// plane and wrapped on output by the caller.
#[inline]
pub fn brownian_increment(stream: &mut CounterRng, dt: f64, nu: f64) -> (f64, f64) {
    if nu == 0.0 {
        // Keep the stream position identical between noisy and noiseless runs.
        let _ = stream.next_gaussian_pair();
        return (0.0, 0.0);
    }
    let sigma = nu * dt.sqrt();
    let (g1, g2) = stream.next_gaussian_pair();
    (sigma * g1, sigma * g2)
}

/// One integrator step over `[t, t + dt]`, which must not straddle a drift
/// breakpoint (the stepper splits first).
pub fn step<F: DriftField>(
    field: &F,
    t: f64,
    dt: f64,
    x: TorusPoint,
    dw: (f64, f64),
    integrator: Integrator,
) -> Result<TorusPoint> {
    if dt < 0.0 || dt.is_nan() {
        return Err(Error::InvalidConfig("step dt must be nonnegative".into()));
    }
    let t1 = t + dt;
    if field
        .time_breakpoints()
        .iter()
        .any(|&p| t < p && p < t1)
    {
        return Err(Error::StepCrossesBreakpoint { t0: t, t1 });
    }
    Ok(step_unchecked(field, t, t1, x, dw, integrator))
}

#[inline]
fn step_unchecked<F: DriftField>(
    field: &F,
    t0: f64,
    t1: f64,
    x: TorusPoint,
    dw: (f64, f64),
    integrator: Integrator,
) -> TorusPoint {
    match integrator {
        Integrator::EulerMaruyama => {
            let v = field.value(t0, x);
            let dt = t1 - t0;
            x.translate((dt * v.0 + dw.0, dt * v.1 + dw.1))
        }
        Integrator::DriftSplitting => field.exact_flow_in_segment(t0, t1, x).translate(dw),
    }
}

#[derive(Debug, Clone, Copy)]
struct ScheduleStep {
    t0: f64,
    t1: f64,
    /// Index into `save_times` recorded after this step completes.
    save_after: Option<u32>,
}

/// Precomputed step sequence shared by all paths of a run.
fn build_schedule<F: DriftField>(field: &F, cfg: &SdeConfig) -> Vec<ScheduleStep> {
    let horizon = field.horizon();
    let mut boundaries: Vec<f64> = vec![0.0, horizon];
    boundaries.extend(field.time_breakpoints());
    boundaries.extend(cfg.save_times.iter().copied().filter(|&t| t > 0.0));
    boundaries.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    boundaries.dedup();

    let mut steps = Vec::new();
    for w in boundaries.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dt_eff = field.effective_dt(b, cfg.dt_base, cfg.steps_per_stage_min);
        let n = ((b - a) / dt_eff).ceil().max(1.0) as usize;
        for i in 0..n {
            let t0 = a + (b - a) * i as f64 / n as f64;
            let t1 = if i + 1 == n {
                b
            } else {
                a + (b - a) * (i + 1) as f64 / n as f64
            };
            steps.push(ScheduleStep {
                t0,
                t1,
                save_after: None,
            });
        }
        if let Ok(idx) = cfg
            .save_times
            .binary_search_by(|probe| probe.partial_cmp(&b).expect("finite"))
        {
            steps.last_mut().expect("segment has steps").save_after = Some(idx as u32);
        }
    }
    steps
}

/// A simulated ensemble: per-path torus states at each save time.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    config: SdeConfig,
    save_times: Vec<f64>,
    states: Vec<TorusPoint>,
}

impl PathEnsemble {
    pub fn config(&self) -> &SdeConfig {
        &self.config
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    pub fn save_times(&self) -> &[f64] {
        &self.save_times
    }

    /// States of one path at every save time.
    pub fn path_states(&self, path: usize) -> &[TorusPoint] {
        let m = self.save_times.len();
        &self.states[path * m..(path + 1) * m]
    }

    /// Marginal sample at one save time.
    pub fn marginal(&self, save_idx: usize) -> Vec<TorusPoint> {
        let m = self.save_times.len();
        (0..self.n_paths())
            .map(|i| self.states[i * m + save_idx])
            .collect()
    }

    /// Joint (start, end) sample between two save times.
    pub fn pair_marginal(&self, first: usize, second: usize) -> Vec<(TorusPoint, TorusPoint)> {
        let m = self.save_times.len();
        (0..self.n_paths())
            .map(|i| (self.states[i * m + first], self.states[i * m + second]))
            .collect()
    }
}

/// Run the Monte Carlo simulation described by `cfg` over `field`.
///
/// Deterministic in `(seed, config)`: thread count and scheduling do not
/// change a single bit of the output.
pub fn simulate<F: DriftField>(field: &F, cfg: &SdeConfig) -> Result<PathEnsemble> {
    cfg.validate(field.horizon())?;
    let schedule = build_schedule(field, cfg);
    let m = cfg.save_times.len();
    let record_initial = cfg.save_times[0] == 0.0;
    let mut states = vec![TorusPoint::new(0.0, 0.0); cfg.n_paths * m];

    states
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(path_idx, out)| {
            let mut x = match &cfg.initial {
                InitialLaw::Uniform => CounterRng::path_init(cfg.seed, path_idx as u64).next_point(),
                InitialLaw::Point(p) => *p,
                InitialLaw::Custom(list) => list[path_idx],
            };
            let mut noise = CounterRng::path_noise(cfg.seed, path_idx as u64);
            if record_initial {
                out[0] = x;
            }
            for s in &schedule {
                let dw = brownian_increment(&mut noise, s.t1 - s.t0, cfg.nu);
                x = step_unchecked(field, s.t0, s.t1, x, dw, cfg.integrator);
                if let Some(idx) = s.save_after {
                    out[idx as usize] = x;
                }
            }
        });

    Ok(PathEnsemble {
        config: cfg.clone(),
        save_times: cfg.save_times.clone(),
        states,
    })
}
