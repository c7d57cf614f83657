//! (rate, state amplification) and (rate, state masking) regions.
//!
//! With an infinite battery the amplification region is
//! `R + Δa <= C(c_p, c_a, q)`, `0 <= Δa <= H_b(q)`, and perfect masking is
//! possible at every achievable rate. With no battery the transmitter picks
//! the strategy "send when energy arrives" with probability `p` and silence
//! otherwise; for fixed `p` the regions are
//!
//! ```text
//! amplification: R <= H_b(pq) - p H_b(q),  Δa <= H_b(q),  R + Δa <= H_b(pq)
//! masking:       R <= H_b(pq) - p H_b(q),  Δm >= p H_b(q)
//! ```
//!
//! with peak age `1/(pq)` and average age `1/(pq) - 1/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::age::{AgeConstraints, Bound};
use crate::capacity::{capacity, capacity_peak_only, CapacityOptions};
use crate::error::{Error, Result};
use crate::policies::{optimize_wat, zero_wait_optimize, PolicySpec};
use crate::prob::{hb, Probability};
use crate::search::bisect;

/// Uniform grid resolution of zero-battery `p` sweeps.
pub const P_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    Amplification,
    MaskingLowerBound,
}

/// Which scheme produced a region point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Age-constrained capacity with an infinite battery.
    BestAchievable,
    WaitAndTransmit,
    ZeroWait,
    ZeroBattery,
}

impl Source {
    pub const ALL: [Source; 4] = [
        Source::BestAchievable,
        Source::WaitAndTransmit,
        Source::ZeroWait,
        Source::ZeroBattery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Source::BestAchievable => "best_achievable",
            Source::WaitAndTransmit => "wait_and_transmit",
            Source::ZeroWait => "zero_wait",
            Source::ZeroBattery => "zero_battery",
        }
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "best_achievable" | "best" | "capacity" => Ok(Source::BestAchievable),
            "wait_and_transmit" | "wat" => Ok(Source::WaitAndTransmit),
            "zero_wait" | "zw" => Ok(Source::ZeroWait),
            "zero_battery" | "zb" => Ok(Source::ZeroBattery),
            _ => Err(Error::Config(format!("unknown source `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    /// Bits per slot.
    pub rate: f64,
    /// State uncertainty reduction, bits per slot.
    pub delta: f64,
    pub delta_kind: DeltaKind,
    /// `None` when no policy meets the budgets (or ages are unbounded).
    pub peak_age: Option<f64>,
    pub avg_age: Option<f64>,
    pub source: Source,
    pub policy_params: Option<PolicySpec>,
    pub constraints: AgeConstraints,
    /// `false` when the budgets or the rate floor cannot be met; `delta` is 0.
    pub feasible: bool,
}

/// Zero-battery amplification bounds at strategy probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroBatteryAmp {
    pub r_max: f64,
    pub delta_cap: f64,
    pub sum_cap: f64,
}

fn check_pq(p: Probability, q: Probability) -> Result<(f64, f64)> {
    let qv = q.get();
    if !(qv > 0.0) {
        return Err(Error::Domain {
            name: "q",
            value: qv,
            expected: "(0, 1]",
        });
    }
    Ok((p.get(), qv))
}

fn zb_rate(p: f64, q: f64) -> f64 {
    // H_b(pq) >= p H_b(q) by concavity; clamp rounding below zero.
    (hb(p * q) - p * hb(q)).max(0.0)
}

pub fn zero_battery_amp(p: Probability, q: Probability) -> Result<ZeroBatteryAmp> {
    let (p, q) = check_pq(p, q)?;
    Ok(ZeroBatteryAmp {
        r_max: zb_rate(p, q),
        delta_cap: hb(q),
        sum_cap: hb(p * q),
    })
}

/// `(r_max, Δm lower bound)` at strategy probability `p`.
pub fn zero_battery_mask(p: Probability, q: Probability) -> Result<(f64, f64)> {
    let (p, q) = check_pq(p, q)?;
    Ok((zb_rate(p, q), p * hb(q)))
}

/// `(peak, average)` age with no battery; both infinite at `p = 0`.
pub fn zero_battery_age(p: Probability, q: Probability) -> Result<(f64, f64)> {
    let (p, q) = check_pq(p, q)?;
    let pq = p * q;
    if pq == 0.0 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    Ok((1.0 / pq, (2.0 - pq) / (2.0 * pq)))
}

/// Per-slot mutual information `I(E; Y) = H_b(pq) - q H_b(p)` leaked by the
/// uncoded zero-battery strategy. This is a physical leakage figure, not a
/// region bound.
pub fn zero_battery_leakage(p: Probability, q: Probability) -> Result<f64> {
    let (p, q) = check_pq(p, q)?;
    Ok((hb(p * q) - q * hb(p)).max(0.0))
}

/// Smallest `p` meeting the age budgets with no battery.
pub fn zero_battery_p_min(q: f64, constraints: &AgeConstraints) -> f64 {
    let from_peak = constraints.c_p.finite().map_or(0.0, |c| 1.0 / (q * c));
    let from_avg = constraints.c_a.finite().map_or(0.0, |c| 1.0 / (q * (c + 0.5)));
    from_peak.max(from_avg)
}

/// The best amplification found with no battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroBatteryChoice {
    pub p: f64,
    pub rate: f64,
    pub delta: f64,
}

/// Maximizes `min(H_b(q), H_b(pq) - r_min)` over `p` subject to
/// `H_b(pq) - p H_b(q) >= r_min` and the age budgets. A uniform grid locates
/// the feasible set; its edges are refined by bisection.
pub fn zero_battery_best_amp(
    q: Probability,
    constraints: &AgeConstraints,
    r_min: f64,
) -> Result<Option<ZeroBatteryChoice>> {
    let qv = q.get();
    if !(qv > 0.0) {
        return Err(Error::Domain {
            name: "q",
            value: qv,
            expected: "(0, 1]",
        });
    }
    let p_age = zero_battery_p_min(qv, constraints);
    if p_age > 1.0 + 1e-12 {
        return Ok(None);
    }
    let p_age = p_age.min(1.0);
    let rate_ok = |p: f64| zb_rate(p, qv) >= r_min;
    let feasible = |p: f64| p > 0.0 && p >= p_age && p <= 1.0 && rate_ok(p);
    let objective = |p: f64| hb(qv).min(hb(p * qv) - r_min);

    let grid: Vec<f64> = (0..=P_GRID).map(|i| i as f64 / P_GRID as f64).collect();
    let mut candidates: Vec<f64> = grid.iter().copied().filter(|&p| feasible(p)).collect();
    candidates.push(p_age);
    if qv >= 0.5 {
        candidates.push(0.5 / qv);
    }
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        match (rate_ok(a), rate_ok(b)) {
            (true, false) => candidates.push(bisect(|p| zb_rate(p, qv) - r_min, a, b, 1e-15)),
            (false, true) => candidates.push(bisect(|p| zb_rate(p, qv) - r_min, b, a, 1e-15)),
            _ => {}
        }
    }

    let best = candidates
        .into_iter()
        .filter(|&p| feasible(p))
        .map(|p| (p, objective(p)))
        .fold(None::<(f64, f64)>, |acc, (p, v)| match acc {
            Some((bp, bv)) if bv > v || (bv == v && bp >= p) => Some((bp, bv)),
            _ => Some((p, v)),
        });
    Ok(best.map(|(p, delta)| {
        let delta = delta.max(0.0);
        let rate = (hb(p * qv) - delta).min(zb_rate(p, qv));
        ZeroBatteryChoice { p, rate, delta }
    }))
}

/// Rate ceiling of an infinite-battery source under the budgets, with the
/// ages and parameters of the policy reaching it.
struct SourceRate {
    rate: f64,
    peak: f64,
    avg: f64,
    policy: Option<PolicySpec>,
}

fn infinite_source_rate(
    q: Probability,
    constraints: &AgeConstraints,
    source: Source,
    opts: &CapacityOptions,
) -> Result<Option<SourceRate>> {
    let opt = match source {
        Source::BestAchievable => {
            let res = capacity(q, constraints, opts)?;
            return Ok(res.pmf_star.map(|pmf| {
                let (m1, m2) = pmf.moments();
                SourceRate {
                    rate: res.value,
                    peak: m1,
                    avg: m2 / (2.0 * m1),
                    policy: None,
                }
            }));
        }
        Source::WaitAndTransmit => optimize_wat(q, constraints)?,
        Source::ZeroWait => zero_wait_optimize(q, constraints)?,
        Source::ZeroBattery => unreachable!("zero battery has no infinite-battery rate"),
    };
    Ok(opt.map(|o| SourceRate {
        rate: o.metrics.rate,
        peak: o.metrics.peak_age,
        avg: o.metrics.avg_age,
        policy: Some(o.policy),
    }))
}

/// Boundary of the infinite-battery amplification region, sampled at `grid`
/// rates from 0 to the capacity.
pub fn amp_region_infinite(
    q: Probability,
    constraints: &AgeConstraints,
    grid: usize,
    opts: &CapacityOptions,
) -> Result<Vec<RegionPoint>> {
    let res = capacity(q, constraints, opts)?;
    let Some(pmf) = res.pmf_star.as_ref() else {
        return Err(Error::Infeasible(format!("{:?}", res.status)));
    };
    let c = res.value;
    let cap = hb(q.get());
    let (m1, m2) = pmf.moments();
    let point = |rate: f64| RegionPoint {
        rate,
        delta: (c - rate).min(cap).max(0.0),
        delta_kind: DeltaKind::Amplification,
        peak_age: Some(m1),
        avg_age: Some(m2 / (2.0 * m1)),
        source: Source::BestAchievable,
        policy_params: None,
        constraints: *constraints,
        feasible: true,
    };
    if c <= 0.0 || grid <= 1 {
        return Ok(vec![point(0.0)]);
    }
    let mut rates: Vec<f64> = (0..grid).map(|i| c * i as f64 / (grid - 1) as f64).collect();
    // Keep the corner where the Δa cap meets the sum-rate line.
    if c - cap > 1e-9 {
        rates.push(c - cap);
        rates.sort_by(f64::total_cmp);
        rates.dedup();
    }
    Ok(rates.into_iter().map(point).collect())
}

/// Largest Δa with `R >= r_min` for a source; 0 when the floor is out of
/// reach or the budgets are infeasible.
pub fn max_amp_given_rate(
    q: Probability,
    constraints: &AgeConstraints,
    r_min: f64,
    source: Source,
    opts: &CapacityOptions,
) -> Result<f64> {
    Ok(amp_point(q, constraints, r_min, source, opts)?.delta)
}

fn amp_point(
    q: Probability,
    constraints: &AgeConstraints,
    r_min: f64,
    source: Source,
    opts: &CapacityOptions,
) -> Result<RegionPoint> {
    if !(r_min >= 0.0) {
        return Err(Error::Domain {
            name: "r_min",
            value: r_min,
            expected: "[0, inf)",
        });
    }
    let cap = hb(q.get());
    let mut point = RegionPoint {
        rate: 0.0,
        delta: 0.0,
        delta_kind: DeltaKind::Amplification,
        peak_age: None,
        avg_age: None,
        source,
        policy_params: None,
        constraints: *constraints,
        feasible: false,
    };
    if source == Source::ZeroBattery {
        if let Some(choice) = zero_battery_best_amp(q, constraints, r_min)? {
            let (peak, avg) = zero_battery_age(Probability::new(choice.p)?, q)?;
            point.rate = choice.rate;
            point.delta = choice.delta;
            point.peak_age = Some(peak);
            point.avg_age = Some(avg);
            point.policy_params = Some(PolicySpec::ZeroBattery {
                p: Probability::new(choice.p)?,
            });
            point.feasible = true;
        }
        return Ok(point);
    }
    if let Some(sr) = infinite_source_rate(q, constraints, source, opts)? {
        point.peak_age = Some(sr.peak);
        point.avg_age = Some(sr.avg);
        point.policy_params = sr.policy;
        if sr.rate >= r_min {
            point.delta = (sr.rate - r_min).min(cap);
            point.rate = sr.rate - point.delta;
            point.feasible = true;
        }
    }
    Ok(point)
}

/// Best Δa subject to `R >= r_min` for every `(c_p, source)` pair; rows are
/// ordered by grid index, then by the order of `sources`.
pub fn tradeoff_sweep(
    q: Probability,
    r_min: f64,
    c_a: Bound,
    c_p_grid: &[f64],
    sources: &[Source],
    opts: &CapacityOptions,
) -> Result<Vec<RegionPoint>> {
    let rows: Vec<Vec<RegionPoint>> = c_p_grid
        .par_iter()
        .map(|&c_p| {
            let constraints = AgeConstraints::new(Bound::Finite(c_p), c_a)?;
            sources
                .iter()
                .map(|&s| amp_point(q, &constraints, r_min, s, opts))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Battery {
    Zero,
    Infinite,
}

impl std::str::FromStr for Battery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero" | "0" => Ok(Battery::Zero),
            "infinite" | "inf" => Ok(Battery::Infinite),
            _ => Err(Error::Config(format!("unknown battery `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSweep {
    pub points: Vec<RegionPoint>,
    /// Swept strategy probabilities (zero battery only).
    pub p_range: Option<(f64, f64)>,
    /// Set when even `p = 1` violates the peak-age budget.
    pub infeasible: bool,
}

/// Masking boundary points: for no battery, `(r_max(p), p H_b(q))` for `p`
/// from `1/(q c_p)` to 1; for an infinite battery, `Δm = 0` up to the
/// peak-age-constrained capacity.
pub fn mask_region_sweep(q: Probability, c_p: Bound, grid: usize, battery: Battery) -> Result<MaskSweep> {
    let qv = q.get();
    let constraints = AgeConstraints::new(c_p, Bound::Unbounded)?;
    let grid = grid.max(2);
    let point =
        |rate: f64, delta: f64, ages: Option<(f64, f64)>, policy: Option<PolicySpec>, source: Source| RegionPoint {
            rate,
            delta,
            delta_kind: DeltaKind::MaskingLowerBound,
            peak_age: ages.map(|a| a.0),
            avg_age: ages.map(|a| a.1),
            source,
            policy_params: policy,
            constraints,
            feasible: true,
        };
    match battery {
        Battery::Zero => {
            let p_min = zero_battery_p_min(qv, &constraints);
            if p_min > 1.0 + 1e-12 {
                return Ok(MaskSweep {
                    points: Vec::new(),
                    p_range: None,
                    infeasible: true,
                });
            }
            let p_min = p_min.min(1.0);
            let points = (0..grid)
                .map(|j| {
                    let p = if j + 1 == grid {
                        1.0
                    } else {
                        p_min + (1.0 - p_min) * j as f64 / (grid - 1) as f64
                    };
                    let pp = Probability::new(p)?;
                    let (r, d) = zero_battery_mask(pp, q)?;
                    let ages = (p > 0.0).then(|| zero_battery_age(pp, q)).transpose()?;
                    Ok(point(
                        r,
                        d,
                        ages,
                        Some(PolicySpec::ZeroBattery { p: pp }),
                        Source::ZeroBattery,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MaskSweep {
                points,
                p_range: Some((p_min, 1.0)),
                infeasible: false,
            })
        }
        Battery::Infinite => {
            let res = capacity_peak_only(q, c_p)?;
            let Some(pmf) = res.pmf_star.as_ref() else {
                return Ok(MaskSweep {
                    points: Vec::new(),
                    p_range: None,
                    infeasible: true,
                });
            };
            let (m1, m2) = pmf.moments();
            let points = (0..grid)
                .map(|j| {
                    let r = res.value * j as f64 / (grid - 1) as f64;
                    point(r, 0.0, Some((m1, m2 / (2.0 * m1))), None, Source::BestAchievable)
                })
                .collect();
            Ok(MaskSweep {
                points,
                p_range: None,
                infeasible: false,
            })
        }
    }
}

/// Δm lower bound with an infinite battery: the state can be masked
/// perfectly at every achievable rate.
pub fn mask_bound_infinite() -> f64 {
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    fn cons(c_p: f64, c_a: f64) -> AgeConstraints {
        let b = |x: f64| {
            if x.is_infinite() {
                Bound::Unbounded
            } else {
                Bound::Finite(x)
            }
        };
        AgeConstraints::new(b(c_p), b(c_a)).unwrap()
    }

    const HB02: f64 = 0.721_928_094_887_362_3;

    #[test]
    fn amp_region_unconstrained_low_q() {
        let pts = amp_region_infinite(
            p(0.2),
            &AgeConstraints::unconstrained(),
            11,
            &CapacityOptions::default(),
        )
        .unwrap();
        assert_eq!(pts.len(), 11);
        for pt in &pts {
            assert_abs_diff_eq!(pt.rate + pt.delta, HB02, epsilon = 1e-6);
            assert!(pt.delta <= HB02);
        }
    }

    #[test]
    fn amp_region_at_minimum_average_age_is_origin() {
        let pts = amp_region_infinite(p(0.2), &cons(f64::INFINITY, 2.5), 11, &CapacityOptions::default()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!((pts[0].rate, pts[0].delta), (0.0, 0.0));
    }

    #[test]
    fn amp_region_high_q_is_clipped() {
        let pts = amp_region_infinite(
            p(0.8),
            &AgeConstraints::unconstrained(),
            21,
            &CapacityOptions::default(),
        )
        .unwrap();
        let top = pts.iter().map(|pt| pt.delta).fold(0.0, f64::max);
        assert_abs_diff_eq!(top, HB02, epsilon = 1e-9);
        assert!(pts
            .iter()
            .any(|pt| (pt.rate - (1.0 - HB02)).abs() < 1e-6 && (pt.delta - HB02).abs() < 1e-9));
        let last = pts.last().unwrap();
        assert_abs_diff_eq!(last.rate, 1.0, epsilon = 1e-6);
        assert_eq!(last.delta, 0.0);
    }

    #[test]
    fn amp_region_infeasible_propagates() {
        assert!(amp_region_infinite(p(0.2), &cons(3.0, f64::INFINITY), 5, &CapacityOptions::default()).is_err());
    }

    #[test]
    fn max_amp_examples() {
        let opts = CapacityOptions::default();
        let d = max_amp_given_rate(
            p(0.2),
            &AgeConstraints::unconstrained(),
            0.05,
            Source::BestAchievable,
            &opts,
        )
        .unwrap();
        assert_abs_diff_eq!(d, HB02 - 0.05, epsilon = 1e-6);
        let d = max_amp_given_rate(p(0.2), &cons(f64::INFINITY, 2.5), 0.05, Source::BestAchievable, &opts).unwrap();
        assert_eq!(d, 0.0);
        let d = max_amp_given_rate(
            p(0.8),
            &AgeConstraints::unconstrained(),
            0.0,
            Source::BestAchievable,
            &opts,
        )
        .unwrap();
        assert_abs_diff_eq!(d, HB02, epsilon = 1e-9);
    }

    #[test]
    fn zero_battery_amp_examples() {
        let a = zero_battery_amp(p(1.0), p(0.5)).unwrap();
        assert_eq!((a.r_max, a.sum_cap), (0.0, 1.0));
        let a = zero_battery_amp(p(0.0), p(0.3)).unwrap();
        assert_eq!((a.r_max, a.sum_cap), (0.0, 0.0));
        assert_eq!(a.delta_cap, hb(0.3));
        // Root of H_b(0.2 p) - p H_b(0.2) = 0.05, from a 30-digit solve.
        let a = zero_battery_amp(p(0.827_150_737_932_025_8), p(0.2)).unwrap();
        assert_abs_diff_eq!(a.r_max, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(a.sum_cap, 0.647_143_356_419_943_3, epsilon = 1e-12);
    }

    #[test]
    fn zero_battery_mask_examples() {
        assert_eq!(zero_battery_mask(p(0.0), p(0.4)).unwrap(), (0.0, 0.0));
        assert_eq!(zero_battery_mask(p(1.0), p(0.5)).unwrap(), (0.0, 1.0));
        let (r, d) = zero_battery_mask(p(2.0 / 3.0), p(0.5)).unwrap();
        assert_abs_diff_eq!(r, 0.251_629_167_387_822_8, epsilon = 1e-12);
        assert_abs_diff_eq!(d, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_battery_age_examples() {
        assert_eq!(zero_battery_age(p(1.0), p(0.2)).unwrap(), (5.0, 4.5));
        let (peak, avg) = zero_battery_age(p(0.827_150_737_932_025_8), p(0.2)).unwrap();
        assert_abs_diff_eq!(peak, 6.044_847_414_995_468, epsilon = 1e-9);
        assert_abs_diff_eq!(avg, 5.544_847_414_995_468, epsilon = 1e-9);
        assert_eq!(zero_battery_age(p(1.0), p(1.0)).unwrap(), (1.0, 0.5));
        let (peak, avg) = zero_battery_age(p(0.0), p(0.5)).unwrap();
        assert!(peak.is_infinite() && avg.is_infinite());
    }

    #[test]
    fn zero_battery_sweep_thresholds() {
        let opts = CapacityOptions::default();
        let sweep = |c_p: f64| {
            tradeoff_sweep(p(0.2), 0.05, Bound::Unbounded, &[c_p], &[Source::ZeroBattery], &opts).unwrap()[0].clone()
        };
        let pt = sweep(6.05);
        assert!(pt.feasible);
        assert_abs_diff_eq!(pt.delta, 0.59, epsilon = 0.01);
        assert_abs_diff_eq!(pt.rate, 0.05, epsilon = 1e-9);
        // The exact threshold is 6.0448..., so 6.04 itself is just short.
        assert_eq!(sweep(6.04).delta, 0.0);
        let pt = sweep(5.9);
        assert_eq!(pt.delta, 0.0);
        assert!(!pt.feasible);
    }

    #[test]
    fn zero_wait_matches_best_with_loose_average_budget() {
        let opts = CapacityOptions::default();
        let rows = tradeoff_sweep(
            p(0.2),
            0.05,
            Bound::Unbounded,
            &[5.0, 6.0, 9.0],
            &[Source::BestAchievable, Source::ZeroWait],
            &opts,
        )
        .unwrap();
        for pair in rows.chunks(2) {
            assert_abs_diff_eq!(pair[0].delta, pair[1].delta, epsilon = 1e-6);
        }
    }

    #[test]
    fn mask_sweep_examples() {
        let s = mask_region_sweep(p(0.5), Bound::Finite(3.0), 11, Battery::Zero).unwrap();
        let (lo, hi) = s.p_range.unwrap();
        assert_abs_diff_eq!(lo, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(hi, 1.0);
        let last = s.points.last().unwrap();
        assert_eq!((last.rate, last.delta), (0.0, 1.0));

        let s = mask_region_sweep(p(0.5), Bound::Unbounded, 11, Battery::Zero).unwrap();
        assert_eq!(s.p_range, Some((0.0, 1.0)));
        assert_eq!(s.points[0].peak_age, None);

        let s = mask_region_sweep(p(0.5), Bound::Finite(1.9), 11, Battery::Zero).unwrap();
        assert!(s.infeasible && s.points.is_empty());

        let s = mask_region_sweep(p(0.5), Bound::Unbounded, 11, Battery::Infinite).unwrap();
        assert!(s.points.iter().all(|pt| pt.delta == 0.0));
        assert_eq!(s.points.last().unwrap().rate, 1.0);
        assert_eq!(mask_bound_infinite(), 0.0);
    }

    proptest! {
        #[test]
        fn zero_battery_rate_nonnegative(pv in 0.0f64..=1.0, q in 0.01f64..0.99) {
            let a = zero_battery_amp(p(pv), p(q)).unwrap();
            prop_assert!(a.r_max >= 0.0);
            let (r, d) = zero_battery_mask(p(pv), p(q)).unwrap();
            prop_assert_eq!(r, a.r_max);
            // sum_cap - r_max = p H_b(q) = Δm lower bound
            prop_assert!((a.sum_cap - a.r_max - d).abs() < 1e-12);
        }

        #[test]
        fn zero_battery_mask_bound_increasing(a in 0.0f64..1.0, b in 0.0f64..1.0, q in 0.01f64..0.99) {
            prop_assume!(a < b);
            prop_assert!(zero_battery_mask(p(a), p(q)).unwrap().1 < zero_battery_mask(p(b), p(q)).unwrap().1);
        }

        #[test]
        fn zero_battery_avg_is_peak_minus_half(pv in 0.01f64..=1.0, q in 0.01f64..=1.0) {
            let (peak, avg) = zero_battery_age(p(pv), p(q)).unwrap();
            prop_assert!((avg - (peak - 0.5)).abs() < 1e-9 * peak);
        }
    }

    #[test]
    fn zero_battery_rate_at_zero_p() {
        assert_eq!(zero_battery_amp(p(0.0), p(0.7)).unwrap().r_max, 0.0);
    }
}
