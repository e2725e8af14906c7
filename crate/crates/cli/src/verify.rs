//! Deterministic invariant suite behind `depauw verify`: one line per check,
//! exit code 1 when anything fails.

use depauw_core::diagnostics::{lqlp_norm, prodi_serrin_check, ProdiSerrinParams};
use depauw_core::flow::{
    calibrate_refinement_phase, distance_to_dyadic_grid, flow, loop_advance, permutation_check,
    stage_flow, FlowQuery, REFINEMENT_PHASE_FLIP,
};
use depauw_core::sde::{step, Integrator};
use depauw_core::stats::{chi_square_uniformity, circular_w1};
use depauw_core::{torus_dist, CheckerboardDensity, CounterRng, DepauwField, TorusPoint};

pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

/// Run every check against the given field (the speed factor may have been
/// corrupted on purpose through the CLI test hook).
pub fn run_all(field: &DepauwField) -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    // torus-metric: bound, symmetry, triangle inequality.
    {
        let mut rng = CounterRng::from_stream(0x0001, 0);
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for _ in 0..5_000 {
            let (a, b, c) = (rng.next_point(), rng.next_point(), rng.next_point());
            let ab = torus_dist(a, b);
            ok &= ab <= std::f64::consts::SQRT_2 / 2.0 + 1e-15;
            ok &= (ab - torus_dist(b, a)).abs() < 1e-15;
            let slack = torus_dist(a, c) + torus_dist(c, b) - ab;
            worst = worst.min(slack);
            ok &= slack > -1e-12;
        }
        out.push(check("torus-metric", ok, format!("min triangle slack {worst:.2e}")));
    }

    // loop-period-radius: period 2 and exact radius preservation.
    {
        let mut rng = CounterRng::from_stream(0x0002, 0);
        let mut max_period_err: f64 = 0.0;
        let mut max_radius_err: f64 = 0.0;
        for _ in 0..10_000 {
            let xi = (rng.next_f64() - 0.5, rng.next_f64() - 0.5);
            let p = loop_advance(xi, 2.0);
            max_period_err = max_period_err
                .max((p.0 - xi.0).abs())
                .max((p.1 - xi.1).abs());
            let q = loop_advance(xi, rng.next_f64() * 3.0);
            let r0 = xi.0.abs().max(xi.1.abs());
            let r1 = q.0.abs().max(q.1.abs());
            max_radius_err = max_radius_err.max((r0 - r1).abs());
        }
        out.push(check(
            "loop-period-radius",
            max_period_err < 1e-10 && max_radius_err < 1e-14,
            format!("period err {max_period_err:.2e}, radius err {max_radius_err:.2e}"),
        ));
    }

    // flow-inverse-semigroup.
    {
        let mut rng = CounterRng::from_stream(0x0003, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..2_000 {
            let x = rng.next_point();
            let mut ts = [rng.next_open_f64(), rng.next_open_f64(), rng.next_open_f64()];
            ts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let [s, t, u] = ts;
            let fwd = flow(field, FlowQuery::new(s, u), x).expect("in range");
            let back = flow(field, FlowQuery::new(u, s), fwd).expect("in range");
            worst = worst.max(torus_dist(back, x));
            let mid = flow(field, FlowQuery::new(s, t), x).expect("in range");
            let composed = flow(field, FlowQuery::new(t, u), mid).expect("in range");
            worst = worst.max(torus_dist(composed, fwd));
        }
        out.push(check(
            "flow-inverse-semigroup",
            worst < 1e-10,
            format!("max deviation {worst:.2e}"),
        ));
    }

    // property-R-permutation: rigid quarter turns and 4-cycles, stages 0-2.
    {
        let mut worst: f64 = 0.0;
        let mut cycles = true;
        for k in 0..=2 {
            match permutation_check(field, k, 200) {
                Ok(report) => {
                    worst = worst.max(report.max_deviation);
                    cycles &= report.four_cycle_ok;
                }
                Err(e) => {
                    out.push(check("property-R-permutation", false, format!("{e}")));
                    cycles = false;
                    break;
                }
            }
        }
        out.push(check(
            "property-R-permutation",
            worst < 1e-12 && cycles,
            format!("max rigid deviation {worst:.2e}, 4-cycles {cycles}"),
        ));
    }

    // refinement-identity: one-time phase calibration, then exact agreement.
    {
        let calibrated = calibrate_refinement_phase(field);
        let outcome = match calibrated {
            Ok(phase) => {
                let coarse = CheckerboardDensity::new(1, 0);
                let fine = CheckerboardDensity::new(2, phase);
                let t0 = field.stage_start(0);
                let t1 = field.stage_end(0);
                let mut rng = CounterRng::from_stream(0x0004, 0);
                let mut mismatches = 0u32;
                let mut tested = 0u32;
                while tested < 20_000 {
                    let x = rng.next_point();
                    if distance_to_dyadic_grid(x, 2) < 1e-9 {
                        continue;
                    }
                    let moved = stage_flow(field, 0, t0, t1, x).expect("in stage");
                    if coarse.value(moved) != fine.value(x) {
                        mismatches += 1;
                    }
                    tested += 1;
                }
                check(
                    "refinement-identity",
                    mismatches == 0 && phase == REFINEMENT_PHASE_FLIP,
                    format!("phase {phase}, {mismatches} mismatches / {tested}"),
                )
            }
            Err(e) => check("refinement-identity", false, format!("{e}")),
        };
        out.push(outcome);
    }

    // measure-preservation: pushforward of uniform stays uniform.
    {
        let mut rng = CounterRng::from_stream(0x0005, 0);
        let pushed: Vec<TorusPoint> = (0..100_000)
            .map(|_| {
                flow(field, FlowQuery::new(0.0, field.horizon()), rng.next_point())
                    .expect("in range")
            })
            .collect();
        let (stat, p) = chi_square_uniformity(&pushed, 16).expect("enough samples");
        out.push(check(
            "measure-preservation",
            p > 0.001,
            format!("chi2 {stat:.1}, p {p:.4}"),
        ));
    }

    // rng-uniformity: the counter-based generator itself.
    {
        let mut rng = CounterRng::from_stream(0x0006, 0);
        let samples: Vec<TorusPoint> = (0..100_000).map(|_| rng.next_point()).collect();
        let (stat, p) = chi_square_uniformity(&samples, 16).expect("enough samples");
        out.push(check("rng-uniformity", p > 0.001, format!("chi2 {stat:.1}, p {p:.4}")));
    }

    // prodi-serrin-margin for the bounded field.
    {
        let (ok, margin) = prodi_serrin_check(ProdiSerrinParams::new(f64::INFINITY, f64::INFINITY, 2));
        out.push(check(
            "prodi-serrin-margin",
            ok && margin == 1.0,
            format!("admissible {ok}, margin {margin}"),
        ));
    }

    // sup-norm: grid sup within 1% of 2·speed_factor.
    {
        let sup = lqlp_norm(
            |t, x| field.velocity(t, x),
            f64::INFINITY,
            f64::INFINITY,
            4,
            1024,
            field.horizon(),
        );
        let bound = 2.0 * field.speed_factor();
        let ok = sup <= bound + 1e-12 && sup > bound * 0.99;
        out.push(check("sup-norm", ok, format!("grid sup {sup:.6} vs bound {bound:.6}")));
    }

    // wasserstein-oracle: closed-form circle W1 against brute-force matching.
    {
        let mut rng = CounterRng::from_stream(0x0007, 0);
        let mut worst: f64 = 0.0;
        for trial in 0..30 {
            let n = 2 + (trial % 5);
            let a: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let wa: Vec<(f64, f64)> = a.iter().map(|&p| (p, 1.0 / n as f64)).collect();
            let wb: Vec<(f64, f64)> = b.iter().map(|&p| (p, 1.0 / n as f64)).collect();
            worst = worst.max((circular_w1(&wa, &wb) - brute_force_w1(&a, &b)).abs());
        }
        out.push(check(
            "wasserstein-oracle",
            worst < 1e-10,
            format!("max |cdf - matching| {worst:.2e}"),
        ));
    }

    // em-splitting-consistency: noiseless splitting equals the exact flow.
    {
        let mut rng = CounterRng::from_stream(0x0008, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let x = rng.next_point();
            let moved = step(field, 0.5, 0.25, x, (0.0, 0.0), Integrator::DriftSplitting)
                .expect("no breakpoint crossed");
            let exact = flow(field, FlowQuery::new(0.5, 0.75), x).expect("in range");
            worst = worst.max(torus_dist(moved, exact));
        }
        out.push(check(
            "em-splitting-consistency",
            worst < 1e-12,
            format!("max deviation {worst:.2e}"),
        ));
    }

    // field-bound: |b| never exceeds 2·speed_factor.
    {
        let mut rng = CounterRng::from_stream(0x0009, 0);
        let bound = 2.0 * field.speed_factor();
        let mut worst: f64 = 0.0;
        for _ in 0..20_000 {
            let v = field.velocity(rng.next_open_f64() * field.horizon(), rng.next_point());
            worst = worst.max((v.0 * v.0 + v.1 * v.1).sqrt());
        }
        out.push(check(
            "field-bound",
            worst <= bound + 1e-12,
            format!("max |b| {worst:.6} vs {bound:.6}"),
        ));
    }

    out
}

fn brute_force_w1(a: &[f64], b: &[f64]) -> f64 {
    fn circle_dist(x: f64, y: f64) -> f64 {
        let d = (x - y).rem_euclid(1.0);
        d.min(1.0 - d)
    }
    fn permute(idx: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == idx.len() {
            visit(idx);
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, visit);
            idx.swap(k, i);
        }
    }
    let n = a.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut idx, 0, &mut |perm| {
        let cost: f64 = (0..n).map(|i| circle_dist(a[i], b[perm[i]])).sum();
        best = best.min(cost / n as f64);
    });
    best
}
