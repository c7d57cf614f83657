//! Age-constrained capacity of the infinite-battery timing channel.
//!
//! The capacity is `max H(V) / E[V]` over interval laws with
//! `1/q <= E[V] <= c_p` and `E[V^2] <= 2 c_a E[V]`. For a fixed mean `K` the
//! inner problem is a maximum-entropy problem whose solution lies in the
//! exponential family `p(v) ∝ exp(-a v - b v^2)`, `b >= 0`; the two duals are
//! found with a damped Newton method, falling back to nested bisection when
//! Newton stalls. The outer problem sweeps `K`.

use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::age::{min_ages_infinite, AgeConstraints, Bound};
use crate::error::{Error, Result};
use crate::prob::{hb, InterUpdatePmf, Probability, MAX_SUPPORT, TAIL_THRESHOLD};
use crate::search::golden_max;

/// Relative slack when comparing against feasibility thresholds.
const FEAS_RTOL: f64 = 1e-12;

/// Knobs for the inner maximum-entropy solver and the outer sweep over `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityOptions {
    /// Points in the initial coarse sweep.
    pub coarse_points: usize,
    /// Width at which golden-section refinement of `K` stops.
    pub k_tol: f64,
    /// Consecutive rate decreases that end the sweep extension.
    pub stop_after_decreases: usize,
    /// Dual residual tolerance of the inner solver.
    pub solver_tol: f64,
    pub max_newton_iter: usize,
    /// Fixed support bound; `None` picks `max(50, ceil(40 K))` and doubles it
    /// until the estimated tail is below the truncation threshold.
    pub v_max: Option<usize>,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            coarse_points: 64,
            k_tol: 1e-4,
            stop_after_decreases: 8,
            solver_tol: 1e-10,
            max_newton_iter: 100,
            v_max: None,
        }
    }
}

/// Which age budget, if any, rules out every policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    InfeasiblePeak,
    InfeasibleAvg,
}

impl Feasibility {
    pub fn is_feasible(self) -> bool {
        self == Feasibility::Feasible
    }
}

/// One evaluated point of the sweep over the mean interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub k: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacityDiagnostics {
    pub sweep: Vec<SweepSample>,
    pub inner_iterations: usize,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub status: Feasibility,
    /// Bits per slot; zero when infeasible.
    pub value: f64,
    /// Optimal mean interval.
    pub k_star: Option<f64>,
    pub pmf_star: Option<InterUpdatePmf>,
    pub diagnostics: CapacityDiagnostics,
}

impl CapacityResult {
    fn infeasible(status: Feasibility) -> Self {
        Self {
            status,
            value: 0.0,
            k_star: None,
            pmf_star: None,
            diagnostics: CapacityDiagnostics::default(),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status.is_feasible()
    }
}

/// A maximum-entropy solution at fixed mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntSolution {
    pub pmf: InterUpdatePmf,
    /// Exponential-family parameters `(a, b)` of `p(v) ∝ exp(-a v - b v^2)`
    /// in natural-log units; `b = 0` when the second-moment bound is slack.
    pub lambda: [f64; 2],
    pub second_moment_active: bool,
    pub iterations: usize,
    /// Estimate of the mass the untruncated law would put beyond the support.
    pub tail_estimate: f64,
}

/// Smallest second moment of an integer law with mean `k`: the two-point law
/// on `floor(k)` and `floor(k) + 1`.
pub fn min_second_moment(k: f64) -> f64 {
    let f = k - k.floor();
    k * k + f * (1.0 - f)
}

/// Largest mean `K` for which some integer law satisfies
/// `E[V^2] <= 2 c_a K`.
pub fn max_mean_for_avg_budget(c_a: Bound) -> f64 {
    match c_a {
        Bound::Unbounded => f64::INFINITY,
        Bound::Finite(c) => {
            // On [n, n + 1) the minimum of E[V^2] / E[V] is 2n + 1 - n(n + 1) / K.
            let t = 2.0 * c;
            let n = t.floor();
            if n < 1.0 {
                return 1.0;
            }
            n * (n + 1.0) / (2.0 * n + 1.0 - t)
        }
    }
}

/// Maximum-entropy interval law on `1..=v_max` with mean `k` and
/// `E[V^2] <= 2 c_a k`.
pub fn max_entropy_pmf(k: f64, c_a: Bound, v_max: usize, tol: f64) -> Result<InterUpdatePmf> {
    solve_max_entropy(k, c_a, v_max, tol, CapacityOptions::default().max_newton_iter).map(|s| s.pmf)
}

/// Full solver output for [`max_entropy_pmf`].
pub fn solve_max_entropy(k: f64, c_a: Bound, v_max: usize, tol: f64, max_iter: usize) -> Result<MaxEntSolution> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::Domain {
            name: "K",
            value: k,
            expected: "[1, inf)",
        });
    }
    if v_max == 0 || (v_max as f64) < k.ceil() {
        return Err(Error::Domain {
            name: "v_max",
            value: v_max as f64,
            expected: ">= ceil(K)",
        });
    }
    let m2_min = min_second_moment(k);
    let target = c_a.finite().map(|c| 2.0 * c * k);
    if let Some(m2) = target {
        if m2 < m2_min - FEAS_RTOL * m2_min.max(1.0) {
            return Err(Error::InfeasibleAtK { k, c_a: c_a.as_f64() });
        }
    }

    let degenerate = |why_b: f64| -> Result<MaxEntSolution> {
        let low = k.floor() as usize;
        let f = k - k.floor();
        let pmf = if f == 0.0 {
            InterUpdatePmf::point_mass(low)?
        } else {
            InterUpdatePmf::two_point(low, Probability::new(1.0 - f)?)?
        };
        Ok(MaxEntSolution {
            pmf,
            lambda: [0.0, why_b],
            second_moment_active: target.is_some(),
            iterations: 0,
            tail_estimate: 0.0,
        })
    };

    // Means at the edge of the support admit a single law.
    if k <= 1.0 || k >= v_max as f64 {
        return degenerate(0.0);
    }
    if let Some(m2) = target {
        if m2 <= m2_min + FEAS_RTOL * m2_min.max(1.0) {
            return degenerate(f64::INFINITY);
        }
    }

    let centered: Vec<f64> = (1..=v_max).map(|v| v as f64 - k).collect();

    // Slack second-moment bound: a truncated geometric law.
    let (a, it1) = solve_mean(&centered, 0.0, initial_rate(k), tol, max_iter).ok_or(Error::NonConvergence {
        k,
        residual: f64::NAN,
        iterations: max_iter,
        lambda: [f64::NAN, 0.0],
    })?;
    let slack = exp_family(&centered, a, 0.0);
    let m2_slack = k * k + slack.m2;
    let active = match target {
        Some(m2) => m2_slack > m2 * (1.0 + tol),
        None => false,
    };
    if !active {
        let pmf = slack.pmf(&centered, a, 0.0)?;
        return Ok(MaxEntSolution {
            tail_estimate: tail_estimate(pmf.masses()),
            pmf,
            lambda: [a, 0.0],
            second_moment_active: false,
            iterations: it1,
        });
    }

    // Active bound: match E[V] = K and Var(V) = s on the scaled support.
    let m2 = target.unwrap_or(f64::INFINITY);
    let var_target = m2 - k * k;
    let sigma = var_target.sqrt();
    let scaled: Vec<f64> = centered.iter().map(|x| x / sigma).collect();
    let (sa, sb, it2) = match newton_2d(&scaled, a * sigma, tol, sigma, m2, max_iter) {
        Some(sol) => sol,
        None => nested_bisection(&scaled, tol, sigma, m2, max_iter).ok_or_else(|| {
            let st = exp_family(&scaled, a * sigma, 0.0);
            Error::NonConvergence {
                k,
                residual: (st.m2 - 1.0).abs(),
                iterations: max_iter,
                lambda: [a, 0.0],
            }
        })?,
    };
    let fam = exp_family(&scaled, sa, sb);
    let pmf = fam.pmf(&scaled, sa, sb)?;
    // Back to v units: a x / sigma + b x^2 / sigma^2 with x = v - k.
    let b_v = sb / var_target;
    let a_v = sa / sigma - 2.0 * b_v * k;
    Ok(MaxEntSolution {
        tail_estimate: tail_estimate(pmf.masses()),
        pmf,
        lambda: [a_v, b_v],
        second_moment_active: true,
        iterations: it1 + it2,
    })
}

fn initial_rate(k: f64) -> f64 {
    if k > 1.0 {
        -(1.0 - 1.0 / k).ln()
    } else {
        1.0
    }
}

/// Geometric extrapolation of the mass past the last support point.
fn tail_estimate(mass: &[f64]) -> f64 {
    match mass {
        [.., prev, last] if *prev > 0.0 => {
            let r = last / prev;
            if r >= 1.0 {
                f64::INFINITY
            } else {
                last * r / (1.0 - r)
            }
        }
        [.., last] if *last == 0.0 => 0.0,
        _ => f64::INFINITY,
    }
}

/// Moments of `exp(-a x - b x^2)` over the support `xs`.
#[derive(Debug, Clone, Copy)]
struct FamilyStats {
    log_z: f64,
    m1: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl FamilyStats {
    fn pmf(&self, xs: &[f64], a: f64, b: f64) -> Result<InterUpdatePmf> {
        let w: Vec<f64> = xs.iter().map(|&x| (-a * x - b * x * x - self.log_z).exp()).collect();
        InterUpdatePmf::from_truncated(w, 0.0)
    }

    fn var(&self) -> f64 {
        (self.m2 - self.m1 * self.m1).max(0.0)
    }
}

fn exp_family(xs: &[f64], a: f64, b: f64) -> FamilyStats {
    let shift = xs.iter().map(|&x| -a * x - b * x * x).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &x in xs {
        let w = (-a * x - b * x * x - shift).exp();
        let x2 = x * x;
        z += w;
        s1 += w * x;
        s2 += w * x2;
        s3 += w * x2 * x;
        s4 += w * x2 * x2;
    }
    FamilyStats {
        log_z: z.ln() + shift,
        m1: s1 / z,
        m2: s2 / z,
        m3: s3 / z,
        m4: s4 / z,
    }
}

/// Finds `a` with `E[x] = 0` under `exp(-a x - b x^2)`. The mean is
/// decreasing in `a`, so Newton steps are safeguarded by a bracket.
fn solve_mean(xs: &[f64], b: f64, a0: f64, tol: f64, max_iter: usize) -> Option<(f64, usize)> {
    let mean = |a: f64| exp_family(xs, a, b);
    let mut a = a0;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for it in 0..max_iter.max(200) {
        let st = mean(a);
        if st.m1.abs() <= tol {
            return Some((a, it + 1));
        }
        if st.m1 > 0.0 {
            lo = lo.max(a);
        } else {
            hi = hi.min(a);
        }
        let var = st.var();
        let mut next = if var > 0.0 { a + st.m1 / var } else { f64::NAN };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + (lo.abs() + 1.0),
                (false, true) => hi - (hi.abs() + 1.0),
                _ => a + 1.0,
            };
        }
        if lo.is_finite() && hi.is_finite() && hi - lo <= 1e-15 * (1.0 + a.abs()) {
            return Some((0.5 * (lo + hi), it + 1));
        }
        a = next;
    }
    None
}

fn converged(st: &FamilyStats, tol: f64, sigma: f64, m2: f64) -> bool {
    st.m1.abs() * sigma <= tol && (st.m2 - 1.0).abs() * sigma * sigma <= tol * m2.max(1.0)
}

/// Damped Newton on the convex dual `log Z(a, b) + b` for the targets
/// `E[x] = 0`, `E[x^2] = 1`.
fn newton_2d(xs: &[f64], a0: f64, tol: f64, sigma: f64, m2: f64, max_iter: usize) -> Option<(f64, f64, usize)> {
    let dual = |st: &FamilyStats, b: f64| st.log_z + b;
    let (mut a, mut b) = (a0, 0.0);
    let mut st = exp_family(xs, a, b);
    for it in 0..max_iter {
        if converged(&st, tol, sigma, m2) {
            return Some((a, b, it));
        }
        let g = [-st.m1, 1.0 - st.m2];
        let h11 = st.var();
        let h12 = st.m3 - st.m1 * st.m2;
        let h22 = (st.m4 - st.m2 * st.m2).max(0.0);
        let det = h11 * h22 - h12 * h12;
        if !(det > 1e-300) {
            return None;
        }
        let da = -(h22 * g[0] - h12 * g[1]) / det;
        let db = -(-h12 * g[0] + h11 * g[1]) / det;
        let slope = g[0] * da + g[1] * db;
        if !(slope < 0.0) {
            return None;
        }
        let d0 = dual(&st, b);
        let mut t = 1.0;
        loop {
            let cand = exp_family(xs, a + t * da, b + t * db);
            if dual(&cand, b + t * db) <= d0 + 1e-4 * t * slope {
                a += t * da;
                b += t * db;
                st = cand;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return None;
            }
        }
    }
    converged(&st, tol, sigma, m2).then_some((a, b, max_iter))
}

/// Bisection on `b`, matching the mean for each `b` by a 1-D solve. The
/// variance at matched mean decreases in `b`.
fn nested_bisection(xs: &[f64], tol: f64, sigma: f64, m2: f64, max_iter: usize) -> Option<(f64, f64, usize)> {
    let mut iterations = 0;
    let mut at = |b: f64, a0: f64| -> Option<(f64, FamilyStats)> {
        let (a, it) = solve_mean(xs, b, a0, tol / sigma, max_iter)?;
        iterations += it;
        Some((a, exp_family(xs, a, b)))
    };
    let (mut a, _) = at(0.0, 0.0)?;
    let (mut lo, mut hi) = (0.0, 1.0);
    loop {
        let (a_hi, st) = at(hi, a)?;
        a = a_hi;
        if st.m2 < 1.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return None;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let (a_mid, st) = at(mid, a)?;
        a = a_mid;
        if converged(&st, tol, sigma, m2) {
            return Some((a, mid, iterations));
        }
        if st.m2 > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            return Some((a, mid, iterations));
        }
    }
    None
}

/// Default support bound for mean `k`.
pub fn default_v_max(k: f64) -> usize {
    ((40.0 * k).ceil() as usize).max(50)
}

/// Solves at `k`, growing the support until the estimated tail is below the
/// truncation threshold.
fn solve_auto(k: f64, c_a: Bound, opts: &CapacityOptions) -> Result<MaxEntSolution> {
    if let Some(v_max) = opts.v_max {
        return solve_max_entropy(k, c_a, v_max, opts.solver_tol, opts.max_newton_iter);
    }
    let mut v_max = default_v_max(k);
    loop {
        let sol = solve_max_entropy(k, c_a, v_max, opts.solver_tol, opts.max_newton_iter)?;
        if sol.tail_estimate < TAIL_THRESHOLD || v_max >= MAX_SUPPORT {
            return Ok(sol);
        }
        v_max = (2 * v_max).min(MAX_SUPPORT);
    }
}

fn check_q(q: Probability) -> Result<f64> {
    let q = q.get();
    if q > 0.0 {
        Ok(q)
    } else {
        Err(Error::Domain {
            name: "q",
            value: q,
            expected: "(0, 1]",
        })
    }
}

/// Classifies the age budgets for the infinite-battery channel.
pub fn feasibility(q: Probability, constraints: &AgeConstraints) -> Result<Feasibility> {
    let qv = check_q(q)?;
    let min = min_ages_infinite(q)?;
    if let Bound::Finite(c_p) = constraints.c_p {
        if c_p < (1.0 / qv) * (1.0 - FEAS_RTOL) {
            return Ok(Feasibility::InfeasiblePeak);
        }
    }
    if let Bound::Finite(c_a) = constraints.c_a {
        if c_a < min.avg_min * (1.0 - FEAS_RTOL) {
            return Ok(Feasibility::InfeasibleAvg);
        }
    }
    Ok(Feasibility::Feasible)
}

/// Closed-form capacity under a peak-age budget alone: `H_b(alpha)` with
/// `alpha = min(q, 1/2)` when `c_p >= 2` and `alpha = 1/c_p` otherwise.
pub fn capacity_peak_only(q: Probability, c_p: Bound) -> Result<CapacityResult> {
    let qv = check_q(q)?;
    let status = feasibility(
        q,
        &AgeConstraints {
            c_p,
            c_a: Bound::Unbounded,
        },
    )?;
    if !status.is_feasible() {
        return Ok(CapacityResult::infeasible(status));
    }
    let alpha = match c_p {
        Bound::Finite(c) if c < 2.0 => (1.0 / c).min(1.0),
        _ => qv.min(0.5),
    };
    let pmf = InterUpdatePmf::geometric(Probability::new(alpha)?)?;
    Ok(CapacityResult {
        status,
        value: hb(alpha),
        k_star: Some(1.0 / alpha),
        diagnostics: CapacityDiagnostics {
            tail_mass: pmf.tail_mass(),
            ..Default::default()
        },
        pmf_star: Some(pmf),
    })
}

/// Age-constrained capacity `C(c_p, c_a, q)` by sweeping the mean interval.
pub fn capacity(q: Probability, constraints: &AgeConstraints, opts: &CapacityOptions) -> Result<CapacityResult> {
    let qv = check_q(q)?;
    let status = feasibility(q, constraints)?;
    if !status.is_feasible() {
        return Ok(CapacityResult::infeasible(status));
    }

    let k_lo = 1.0 / qv;
    let k_hi = constraints
        .c_p
        .as_f64()
        .min(max_mean_for_avg_budget(constraints.c_a))
        .max(k_lo);

    let iterations = Mutex::new(0usize);
    let rate_at = |k: f64| -> Result<f64> {
        let sol = solve_auto(k, constraints.c_a, opts)?;
        *iterations.lock().unwrap() += sol.iterations;
        Ok(sol.pmf.entropy() / k)
    };
    let eval_batch = |ks: &[f64]| -> Result<Vec<SweepSample>> {
        ks.par_iter()
            .map(|&k| rate_at(k).map(|rate| SweepSample { k, rate }))
            .collect()
    };

    let mut sweep: Vec<SweepSample>;
    if k_hi - k_lo <= opts.k_tol {
        sweep = eval_batch(&[k_lo])?;
    } else {
        let n = opts.coarse_points.max(2);
        let first_end = k_hi.min(8.0 * k_lo.max(2.0)).max(k_lo);
        let step = (first_end - k_lo) / (n - 1) as f64;
        let ks: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { first_end } else { k_lo + step * i as f64 })
            .collect();
        sweep = eval_batch(&ks)?;
        // Keep extending while the tail of the sweep is not yet decreasing.
        let mut next_index = n;
        while sweep.last().is_some_and(|s| s.k < k_hi) && !decreasing_tail(&sweep, opts.stop_after_decreases) {
            let mut ks: Vec<f64> = (0..n)
                .map(|i| (k_lo + step * (next_index + i) as f64).min(k_hi))
                .collect();
            ks.dedup();
            next_index += n;
            sweep.extend(eval_batch(&ks)?);
        }
    }

    let best_idx = argmax_first(&sweep);
    let mut best = sweep[best_idx];
    if sweep.len() > 1 {
        let lo = sweep[best_idx.saturating_sub(1)].k;
        let hi = sweep[(best_idx + 1).min(sweep.len() - 1)].k;
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        let refined = golden_max(
            |k| match rate_at(k) {
                Ok(r) => r,
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            opts.k_tol,
        );
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        if refined.value > best.rate || (refined.value == best.rate && refined.x < best.k) {
            best = SweepSample {
                k: refined.x,
                rate: refined.value,
            };
        }
    }

    let sol = solve_auto(best.k, constraints.c_a, opts)?;
    let inner_iterations = *iterations.lock().unwrap() + sol.iterations;
    Ok(CapacityResult {
        status,
        value: sol.pmf.entropy() / best.k,
        k_star: Some(best.k),
        diagnostics: CapacityDiagnostics {
            sweep,
            inner_iterations,
            tail_mass: sol.tail_estimate,
        },
        pmf_star: Some(sol.pmf),
    })
}

fn decreasing_tail(sweep: &[SweepSample], run: usize) -> bool {
    sweep.len() > run && sweep[sweep.len() - run - 1..].windows(2).all(|w| w[1].rate < w[0].rate)
}

fn argmax_first(sweep: &[SweepSample]) -> usize {
    sweep
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if s.rate > sweep[best].rate { i } else { best })
}
