//! Empirical measures on the torus, circular optimal transport, uniformity
//! tests, and grid disintegrations.

use crate::error::{Error, Result};
use crate::field::CheckerboardDensity;
use crate::rng::CounterRng;
use crate::torus::{torus_dist, wrap_unit, TorusPoint};

pub mod special {
    //! Log-gamma, regularized incomplete gamma, and the normal CDF family.
    //! Self-contained Lanczos + series/continued-fraction implementations,
    //! accurate to ~1e-12 over the ranges used by the tests.

    /// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
    #[allow(clippy::excessive_precision)] // canonical published coefficients
    pub fn ln_gamma(x: f64) -> f64 {
        const COEFFS: [f64; 8] = [
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        if x < 0.5 {
            // Reflection for the small-argument branch.
            let pi = std::f64::consts::PI;
            return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
        }
        let x = x - 1.0;
        let mut acc = 0.99999999999980993;
        for (i, &c) in COEFFS.iter().enumerate() {
            acc += c / (x + i as f64 + 1.0);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }

    /// Regularized lower incomplete gamma `P(a, x)`.
    pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
        assert!(a > 0.0 && x >= 0.0, "P(a,x) needs a > 0, x >= 0");
        if x == 0.0 {
            return 0.0;
        }
        if x < a + 1.0 {
            lower_series(a, x)
        } else {
            1.0 - upper_continued_fraction(a, x)
        }
    }

    /// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
    pub fn reg_upper_gamma(a: f64, x: f64) -> f64 {
        assert!(a > 0.0 && x >= 0.0, "Q(a,x) needs a > 0, x >= 0");
        if x == 0.0 {
            return 1.0;
        }
        if x < a + 1.0 {
            1.0 - lower_series(a, x)
        } else {
            upper_continued_fraction(a, x)
        }
    }

    fn lower_series(a: f64, x: f64) -> f64 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..500 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    }

    fn upper_continued_fraction(a: f64, x: f64) -> f64 {
        // Modified Lentz evaluation of the standard continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x + a * x.ln() - ln_gamma(a)).exp()
    }

    /// Standard normal CDF through the incomplete gamma.
    pub fn normal_cdf(z: f64) -> f64 {
        let half_tail = 0.5 * reg_upper_gamma(0.5, z * z / 2.0);
        if z >= 0.0 {
            1.0 - half_tail
        } else {
            half_tail
        }
    }

    /// CDF on `[0, 1]` of a Gaussian with mean `mu` and deviation `sigma`
    /// wrapped onto the unit circle.
    pub fn wrapped_normal_cdf(x: f64, mu: f64, sigma: f64) -> f64 {
        assert!((0.0..=1.0).contains(&x), "wrapped CDF argument in [0,1]");
        if sigma == 0.0 {
            let m = crate::torus::wrap_unit(mu);
            return if x > m || m == 0.0 { 1.0 } else { 0.0 };
        }
        let reach = (6.0 * sigma + mu.abs() + 2.0).ceil() as i64;
        let mut acc = 0.0;
        for m in -reach..=reach {
            let shift = m as f64;
            acc += normal_cdf((x - mu + shift) / sigma) - normal_cdf((-mu + shift) / sigma);
        }
        acc.clamp(0.0, 1.0)
    }

}

/// A weighted point cloud on the torus with weights summing to one.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    support: Vec<TorusPoint>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Equal weights `1/n`.
    pub fn uniform_on(support: Vec<TorusPoint>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyInput("empirical measure support"));
        }
        let w = 1.0 / support.len() as f64;
        let weights = vec![w; support.len()];
        Ok(Self { support, weights })
    }

    pub fn from_weighted(support: Vec<TorusPoint>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyInput("empirical measure support"));
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidConfig(
                "support and weights must have equal length".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::BadWeights { sum: f64::NAN });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::BadWeights { sum });
        }
        Ok(Self { support, weights })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[TorusPoint] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Image measure under a point map: the map moves the support, the
    /// weights ride along.
    pub fn pushforward(&self, f: impl Fn(TorusPoint) -> TorusPoint) -> Self {
        Self {
            support: self.support.iter().map(|&p| f(p)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Pearson chi-square test of uniformity on the `k × k` half-open grid.
///
/// Returns the statistic and the p-value from the chi-square law with
/// `k² - 1` degrees of freedom. Requires at least `5 k²` samples.
pub fn chi_square_uniformity(samples: &[TorusPoint], k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidConfig("bin count k must be positive".into()));
    }
    let bins = k * k;
    let min = 5 * bins;
    if samples.len() < min {
        return Err(Error::NotEnoughSamples {
            n: samples.len(),
            min,
        });
    }
    let mut counts = vec![0u64; bins];
    for p in samples {
        let i = ((p.x1() * k as f64).floor() as usize).min(k - 1);
        let j = ((p.x2() * k as f64).floor() as usize).min(k - 1);
        counts[i * k + j] += 1;
    }
    let expected = samples.len() as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = (bins - 1) as f64;
    let p_value = special::reg_upper_gamma(dof / 2.0, stat / 2.0);
    Ok((stat, p_value))
}

/// Exact 1-Wasserstein distance between weighted atom sets on the circle
/// `R/Z`: the minimum over additive constants of the L¹ distance between the
/// cumulative functions, attained at a weighted median of their difference
/// (ties broken toward the smallest value).
pub fn circular_w1(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "measures must be nonempty");
    // Events: CDF jumps of +w for a and -w for b.
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    events.extend(a.iter().map(|&(p, w)| (wrap_unit(p), w)));
    events.extend(b.iter().map(|&(p, w)| (wrap_unit(p), -w)));
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite positions"));

    // Piecewise-constant difference D on the segments between events,
    // including the wrap-around segment.
    let mut segments: Vec<(f64, f64)> = Vec::with_capacity(events.len());
    let mut level = 0.0;
    for i in 0..events.len() {
        level += events[i].1;
        let next_pos = if i + 1 < events.len() {
            events[i + 1].0
        } else {
            events[0].0 + 1.0
        };
        let len = next_pos - events[i].0;
        if len > 0.0 {
            segments.push((level, len));
        }
    }

    // Weighted median of the levels (lengths as weights), smallest on ties.
    let mut by_level = segments.clone();
    by_level.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite levels"));
    let total: f64 = by_level.iter().map(|s| s.1).sum();
    let mut acc = 0.0;
    let mut median = by_level[0].0;
    for &(level, len) in &by_level {
        acc += len;
        if acc >= total / 2.0 {
            median = level;
            break;
        }
    }

    segments
        .iter()
        .map(|&(level, len)| len * (level - median).abs())
        .sum()
}

/// 1-Wasserstein distance on the circle between a weighted empirical sample
/// and an absolutely continuous law given by its CDF on `[0, 1]`, evaluated
/// on a uniform comparison grid.
pub fn circular_w1_to_cdf(
    samples: &[(f64, f64)],
    cdf: impl Fn(f64) -> f64,
    grid: usize,
) -> f64 {
    assert!(grid >= 16, "comparison grid too coarse");
    let mut sorted: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(p, w)| (wrap_unit(p), w))
        .collect();
    sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite positions"));
    let mut diffs = Vec::with_capacity(grid);
    let mut idx = 0;
    let mut emp = 0.0;
    for g in 0..grid {
        let t = (g as f64 + 0.5) / grid as f64;
        while idx < sorted.len() && sorted[idx].0 <= t {
            emp += sorted[idx].1;
            idx += 1;
        }
        diffs.push(emp - cdf(t));
    }
    let mut by_level = diffs.clone();
    by_level.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let median = by_level[(by_level.len() - 1) / 2];
    diffs.iter().map(|d| (d - median).abs()).sum::<f64>() / grid as f64
}

/// Deterministic list of coprime projection directions: axes first, then
/// rational slopes ordered by squared norm.
pub fn projection_directions(n: usize) -> Vec<(i64, i64)> {
    let mut dirs = vec![(1i64, 0i64), (0, 1)];
    let mut rest: Vec<(i64, i64)> = Vec::new();
    for p in 1..=8i64 {
        for q in -8..=8i64 {
            if q == 0 || gcd(p, q.abs()) != 1 {
                continue;
            }
            rest.push((p, q));
        }
    }
    rest.sort_by_key(|&(p, q)| (p * p + q * q, q < 0, -p));
    dirs.extend(rest);
    dirs.truncate(n.max(1));
    dirs
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Project a torus measure onto the closed geodesic with direction `(p, q)`:
/// positions `p·x1 + q·x2 mod 1` with the original weights.
pub fn project_measure(m: &EmpiricalMeasure, dir: (i64, i64)) -> Vec<(f64, f64)> {
    m.support()
        .iter()
        .zip(m.weights())
        .map(|(pt, &w)| (wrap_unit(dir.0 as f64 * pt.x1() + dir.1 as f64 * pt.x2()), w))
        .collect()
}

/// Sliced 1-Wasserstein distance: the average of [`circular_w1`] over the
/// first `n_directions` entries of [`projection_directions`].
pub fn sliced_w1(a: &EmpiricalMeasure, b: &EmpiricalMeasure, n_directions: usize) -> f64 {
    let dirs = projection_directions(n_directions);
    let total: f64 = dirs
        .iter()
        .map(|&d| circular_w1(&project_measure(a, d), &project_measure(b, d)))
        .sum();
    total / dirs.len() as f64
}

/// Which coordinate of a sample pair carries the conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    First,
    Second,
}

/// Binned disintegration: the conditional empirical law of one pair
/// coordinate given that the other falls in a half-open grid bin.
#[derive(Debug, Clone)]
pub struct ConditionalFamily {
    k: usize,
    counts: Vec<usize>,
    conditionals: Vec<Option<EmpiricalMeasure>>,
}

impl ConditionalFamily {
    pub fn bins_per_side(&self) -> usize {
        self.k
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn conditional(&self, i: usize, j: usize) -> Option<&EmpiricalMeasure> {
        self.conditionals[i * self.k + j].as_ref()
    }

    pub fn nonempty(&self) -> impl Iterator<Item = (usize, &EmpiricalMeasure)> {
        self.conditionals
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.as_ref().map(|m| (i, m)))
    }

    pub fn total_count(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Bin the conditioning coordinate of each pair on the `k × k` grid and
/// collect the per-bin empirical law of the other coordinate. Empty bins are
/// flagged as `None`, never fabricated.
pub fn disintegrate(
    pairs: &[(TorusPoint, TorusPoint)],
    condition_on: Coordinate,
    k: usize,
) -> Result<ConditionalFamily> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("disintegration sample"));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("bin count k must be positive".into()));
    }
    let mut buckets: Vec<Vec<TorusPoint>> = vec![Vec::new(); k * k];
    for &(a, b) in pairs {
        let (cond, other) = match condition_on {
            Coordinate::First => (a, b),
            Coordinate::Second => (b, a),
        };
        let i = ((cond.x1() * k as f64).floor() as usize).min(k - 1);
        let j = ((cond.x2() * k as f64).floor() as usize).min(k - 1);
        buckets[i * k + j].push(other);
    }
    let counts: Vec<usize> = buckets.iter().map(Vec::len).collect();
    let conditionals = buckets
        .into_iter()
        .map(|pts| {
            if pts.is_empty() {
                None
            } else {
                Some(EmpiricalMeasure::uniform_on(pts).expect("nonempty"))
            }
        })
        .collect();
    Ok(ConditionalFamily {
        k,
        counts,
        conditionals,
    })
}

/// Fraction of samples colored 1 by the checkerboard.
pub fn branching_fraction(samples: &[TorusPoint], region: &CheckerboardDensity) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("branching sample"));
    }
    let hits = samples.iter().filter(|&&x| region.value(x) == 1).count();
    Ok(hits as f64 / samples.len() as f64)
}

/// Dispersion estimate of an empirical measure.
#[derive(Debug, Clone, Copy)]
pub struct SpreadEstimate {
    /// Weighted mean pairwise torus distance over distinct unordered pairs.
    pub value: f64,
    /// Support had fewer than two points; the value is 0 by convention.
    pub singleton: bool,
}

const SPREAD_MAX_PAIRS: usize = 10_000;

/// Weighted mean pairwise torus distance over distinct unordered pairs,
/// deterministically subsampled to at most `10^4` pairs.
pub fn spread(m: &EmpiricalMeasure) -> SpreadEstimate {
    let n = m.len();
    if n < 2 {
        return SpreadEstimate {
            value: 0.0,
            singleton: true,
        };
    }
    let exact_pairs = n * (n - 1) / 2;
    let (mut num, mut den) = (0.0, 0.0);
    if exact_pairs <= SPREAD_MAX_PAIRS {
        for i in 0..n {
            for j in (i + 1)..n {
                let w = m.weights()[i] * m.weights()[j];
                num += w * torus_dist(m.support()[i], m.support()[j]);
                den += w;
            }
        }
    } else {
        let mut rng = CounterRng::from_stream(0x5B4EAD, n as u64);
        let mut drawn = 0;
        while drawn < SPREAD_MAX_PAIRS {
            let i = (rng.next_u64() % n as u64) as usize;
            let j = (rng.next_u64() % n as u64) as usize;
            if i == j {
                continue;
            }
            let w = m.weights()[i] * m.weights()[j];
            num += w * torus_dist(m.support()[i], m.support()[j]);
            den += w;
            drawn += 1;
        }
    }
    SpreadEstimate {
        value: if den > 0.0 { num / den } else { 0.0 },
        singleton: false,
    }
}

/// Median of the spreads of all bins holding at least two samples.
pub fn median_per_bin_spread(family: &ConditionalFamily) -> Option<f64> {
    let mut spreads: Vec<f64> = family
        .nonempty()
        .filter(|(_, m)| m.len() >= 2)
        .map(|(_, m)| spread(m).value)
        .collect();
    if spreads.is_empty() {
        return None;
    }
    spreads.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = spreads.len() / 2;
    Some(if spreads.len() % 2 == 1 {
        spreads[mid]
    } else {
        0.5 * (spreads[mid - 1] + spreads[mid])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(a: f64, b: f64) -> TorusPoint {
        TorusPoint::new(a, b)
    }

    fn delta(pos: f64) -> Vec<(f64, f64)> {
        vec![(pos, 1.0)]
    }

    #[test]
    fn chi_square_equal_counts_gives_zero_statistic() {
        let k = 4usize;
        let per_bin = 5usize;
        let mut samples = Vec::new();
        for i in 0..k {
            for j in 0..k {
                for r in 0..per_bin {
                    samples.push(pt(
                        (i as f64 + 0.1 + 0.15 * r as f64) / k as f64,
                        (j as f64 + 0.5) / k as f64,
                    ));
                }
            }
        }
        let (stat, p) = chi_square_uniformity(&samples, k).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn chi_square_degenerate_case_formula() {
        let k = 4usize;
        let n = 5 * k * k;
        let samples = vec![pt(0.1, 0.1); n];
        let (stat, p) = chi_square_uniformity(&samples, k).unwrap();
        assert!((stat - (n * (k * k - 1)) as f64).abs() < 1e-9);
        assert!(p < 1e-12);
    }

    #[test]
    fn chi_square_accepts_rng_uniform_samples() {
        let mut rng = CounterRng::from_stream(12345, 0);
        let samples: Vec<TorusPoint> = (0..100_000).map(|_| rng.next_point()).collect();
        let (_, p) = chi_square_uniformity(&samples, 16).unwrap();
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn chi_square_rejects_small_samples() {
        let samples = vec![pt(0.1, 0.1); 10];
        assert!(matches!(
            chi_square_uniformity(&samples, 16),
            Err(Error::NotEnoughSamples { .. })
        ));
    }

    #[test]
    fn chi_square_p_value_matches_published_reference() {
        // Observed [28, 31, 40, 35] against uniform quarters, df = 3.
        let counts = [28u64, 31, 40, 35];
        let n: u64 = counts.iter().sum();
        let e = n as f64 / 4.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!((stat - 2.417910447761194).abs() < 1e-12);
        let p = special::reg_upper_gamma(1.5, stat / 2.0);
        assert!((p - 0.4903093069653883).abs() < 1e-9);
    }

    #[test]
    fn circular_w1_delta_examples() {
        assert!((circular_w1(&delta(0.0), &delta(0.25)) - 0.25).abs() < 1e-14);
        assert!((circular_w1(&delta(0.0), &delta(0.5)) - 0.5).abs() < 1e-14);
        // Wrap-around is shorter than the long way.
        assert!((circular_w1(&delta(0.05), &delta(0.95)) - 0.1).abs() < 1e-14);
        assert_eq!(circular_w1(&delta(0.3), &delta(0.3)), 0.0);
    }

    /// Brute-force minimum-cost matching over all permutations; for equal
    /// masses the optimal transport plan is a permutation.
    fn brute_force_w1(a: &[f64], b: &[f64]) -> f64 {
        fn circle_dist(x: f64, y: f64) -> f64 {
            let d = (x - y).rem_euclid(1.0);
            d.min(1.0 - d)
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

    #[test]
    fn circular_w1_matches_brute_force_transport() {
        let mut rng = CounterRng::from_stream(77, 0);
        for trial in 0..40 {
            let n = 2 + (trial % 5);
            let a: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let wa: Vec<(f64, f64)> = a.iter().map(|&p| (p, 1.0 / n as f64)).collect();
            let wb: Vec<(f64, f64)> = b.iter().map(|&p| (p, 1.0 / n as f64)).collect();
            let fast = circular_w1(&wa, &wb);
            let slow = brute_force_w1(&a, &b);
            assert!(
                (fast - slow).abs() < 1e-10,
                "n={n}: cdf {fast} vs brute {slow}"
            );
        }
    }

    #[test]
    fn circular_w1_metric_properties() {
        let mut rng = CounterRng::from_stream(78, 0);
        for _ in 0..1000 {
            let mk = |rng: &mut CounterRng| -> Vec<(f64, f64)> {
                let n = 2 + (rng.next_u64() % 4) as usize;
                let raw: Vec<f64> = (0..n).map(|_| rng.next_open_f64()).collect();
                let total: f64 = raw.iter().sum();
                raw.iter()
                    .map(|&w| (rng.next_f64(), w / total))
                    .collect()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let c = mk(&mut rng);
            let dab = circular_w1(&a, &b);
            let dba = circular_w1(&b, &a);
            assert!((dab - dba).abs() < 1e-12);
            let dac = circular_w1(&a, &c);
            let dcb = circular_w1(&c, &b);
            assert!(dab <= dac + dcb + 1e-9);
        }
    }

    #[test]
    fn circular_w1_translation_invariance() {
        let a = vec![(0.1, 0.5), (0.6, 0.5)];
        let b = vec![(0.3, 0.25), (0.8, 0.75)];
        let d0 = circular_w1(&a, &b);
        for shift in [0.17, 0.5, 0.93] {
            let at: Vec<(f64, f64)> = a.iter().map(|&(p, w)| (wrap_unit(p + shift), w)).collect();
            let bt: Vec<(f64, f64)> = b.iter().map(|&(p, w)| (wrap_unit(p + shift), w)).collect();
            assert!((circular_w1(&at, &bt) - d0).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_w1_to_cdf_known_cases() {
        // Dirac at 0 against the uniform law: distance 1/4.
        let d = circular_w1_to_cdf(&delta(0.0), |t| t, 8192);
        assert!((d - 0.25).abs() < 1e-3);
        // Uniform empirical grid against uniform: near zero.
        let grid: Vec<(f64, f64)> = (0..512).map(|i| (i as f64 / 512.0, 1.0 / 512.0)).collect();
        let d0 = circular_w1_to_cdf(&grid, |t| t, 8192);
        assert!(d0 < 2e-3, "d0 = {d0}");
    }

    #[test]
    fn direction_list_is_deterministic_and_coprime() {
        let dirs = projection_directions(10);
        assert_eq!(&dirs[..4], &[(1, 0), (0, 1), (1, 1), (1, -1)]);
        assert_eq!(&dirs[4..6], &[(2, 1), (1, 2)]);
        for &(p, q) in &dirs {
            assert_eq!(gcd(p.abs().max(1), q.abs()).max(1), 1);
        }
    }

    #[test]
    fn sliced_w1_examples() {
        let a = EmpiricalMeasure::uniform_on(vec![pt(0.2, 0.3), pt(0.2, 0.9)]).unwrap();
        assert_eq!(sliced_w1(&a, &a, 6), 0.0);
        // Translation by (1/2, 0) shows up in the first axis projection.
        let b = a.pushforward(|p| p.translate((0.5, 0.0)));
        let d = sliced_w1(&a, &b, 1);
        assert!((d - 0.5).abs() < 1e-12);
        // Stable in the number of directions for fixed distinct measures.
        let c = EmpiricalMeasure::uniform_on(vec![pt(0.1, 0.4), pt(0.5, 0.8)]).unwrap();
        let d8 = sliced_w1(&a, &c, 8);
        let d16 = sliced_w1(&a, &c, 16);
        assert!(d8 > 0.0 && d16 > 0.0);
        assert!((d8 - d16).abs() < 0.5 * d8);
    }

    #[test]
    fn disintegrate_examples() {
        let a = pt(0.1, 0.1);
        let pairs = vec![(a, pt(0.3, 0.3)), (a, pt(0.7, 0.7))];
        let fam = disintegrate(&pairs, Coordinate::First, 4).unwrap();
        let bin = fam.conditional(0, 0).unwrap();
        assert_eq!(bin.len(), 2);
        assert!((bin.weights()[0] - 0.5).abs() < 1e-15);
        assert_eq!(fam.total_count(), 2);
        // Conditioning on a constant second coordinate: one bin with all firsts.
        let pairs2 = vec![
            (pt(0.2, 0.9), pt(0.5, 0.5)),
            (pt(0.4, 0.1), pt(0.5, 0.5)),
            (pt(0.8, 0.3), pt(0.5, 0.5)),
        ];
        let fam2 = disintegrate(&pairs2, Coordinate::Second, 4).unwrap();
        let nonempty: Vec<_> = fam2.nonempty().collect();
        assert_eq!(nonempty.len(), 1);
        assert_eq!(nonempty[0].1.len(), 3);
    }

    #[test]
    fn disintegrate_preserves_counts() {
        let mut rng = CounterRng::from_stream(91, 0);
        let pairs: Vec<(TorusPoint, TorusPoint)> = (0..5_000)
            .map(|_| (rng.next_point(), rng.next_point()))
            .collect();
        let fam = disintegrate(&pairs, Coordinate::First, 8).unwrap();
        assert_eq!(fam.total_count(), pairs.len());
        for (idx, m) in fam.nonempty() {
            assert_eq!(fam.counts()[idx], m.len());
        }
    }

    #[test]
    fn branching_fraction_examples() {
        let board = CheckerboardDensity::new(1, 0);
        // All samples inside color-1 cells of the scale-1 board.
        let black: Vec<TorusPoint> = vec![pt(0.6, 0.1), pt(0.1, 0.6)];
        assert!(black.iter().all(|&x| board.value(x) == 1));
        assert_eq!(branching_fraction(&black, &board).unwrap(), 1.0);
        // Bin centers of the full grid split the colors evenly.
        let mut centers = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                centers.push(pt((i as f64 + 0.5) / 8.0, (j as f64 + 0.5) / 8.0));
            }
        }
        assert!((branching_fraction(&centers, &board).unwrap() - 0.5).abs() < 1e-15);
        // A color-preserving translation leaves every sample's color alone.
        let mut rng = CounterRng::from_stream(92, 0);
        let m = EmpiricalMeasure::uniform_on((0..2_000).map(|_| rng.next_point()).collect())
            .unwrap();
        let moved = m.pushforward(|p| p.translate((0.5, 0.5)));
        let f0 = branching_fraction(m.support(), &board).unwrap();
        let f1 = branching_fraction(moved.support(), &board).unwrap();
        assert_eq!(f0, f1);
    }

    #[test]
    fn spread_examples() {
        let dirac = EmpiricalMeasure::uniform_on(vec![pt(0.2, 0.2)]).unwrap();
        let s = spread(&dirac);
        assert_eq!(s.value, 0.0);
        assert!(s.singleton);
        // Two equal-weight points at torus distance 1/2: the only distinct
        // pair contributes 0.5.
        let two = EmpiricalMeasure::uniform_on(vec![pt(0.1, 0.1), pt(0.6, 0.1)]).unwrap();
        let s2 = spread(&two);
        assert!((s2.value - 0.5).abs() < 1e-14);
        assert!(!s2.singleton);
    }

    #[test]
    fn spread_of_uniform_matches_quadrature_oracle() {
        // Mean torus distance of two independent uniform points, by midpoint
        // quadrature over the displacement square [-1/2, 1/2)².
        let n = 400;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let u = (i as f64 + 0.5) / n as f64 - 0.5;
                let v = (j as f64 + 0.5) / n as f64 - 0.5;
                acc += (u * u + v * v).sqrt();
            }
        }
        let oracle = acc / (n * n) as f64;
        let mut rng = CounterRng::from_stream(93, 0);
        let m = EmpiricalMeasure::uniform_on((0..10_000).map(|_| rng.next_point()).collect())
            .unwrap();
        let s = spread(&m);
        assert!(
            (s.value - oracle).abs() < 0.01,
            "spread {} vs oracle {}",
            s.value,
            oracle
        );
    }

    #[test]
    fn spread_is_translation_invariant() {
        let mut rng = CounterRng::from_stream(94, 0);
        let pts: Vec<TorusPoint> = (0..500).map(|_| rng.next_point()).collect();
        let m = EmpiricalMeasure::uniform_on(pts).unwrap();
        let moved = m.pushforward(|p| p.translate((0.37, 0.81)));
        let a = spread(&m).value;
        let b = spread(&moved).value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pushforward_examples() {
        let mut rng = CounterRng::from_stream(95, 0);
        let m = EmpiricalMeasure::uniform_on((0..100).map(|_| rng.next_point()).collect())
            .unwrap();
        let id = m.pushforward(|p| p);
        assert_eq!(id.support(), m.support());
        let constant = m.pushforward(|_| pt(0.25, 0.75));
        assert!(constant.support().iter().all(|&p| p == pt(0.25, 0.75)));
        assert_eq!(constant.weights(), m.weights());
    }

    #[test]
    fn weights_are_validated() {
        let pts = vec![pt(0.1, 0.1), pt(0.2, 0.2)];
        assert!(EmpiricalMeasure::from_weighted(pts.clone(), vec![0.5, 0.5]).is_ok());
        assert!(EmpiricalMeasure::from_weighted(pts.clone(), vec![0.7, 0.5]).is_err());
        assert!(EmpiricalMeasure::from_weighted(pts.clone(), vec![-0.5, 1.5]).is_err());
        assert!(EmpiricalMeasure::from_weighted(pts, vec![1.0]).is_err());
    }
}
