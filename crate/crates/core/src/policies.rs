//! Parametric transmission policies and their optimizers.
//!
//! With an infinite battery the transmitter controls the interval law
//! directly. Wait-and-transmit stays silent for `omega - 1` slots after an
//! update and then transmits with probability `g` per slot, giving
//! `P[V = v] = g (1-g)^(v - omega)` for `v >= omega`. Zero-wait is the
//! `omega = 1` case. The probabilistic-periodic policy mixes the periods
//! `floor(1/q)` and `floor(1/q) + 1` and attains the minimum average age.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::age::{periodic_split, AgeConstraints, Bound};
use crate::error::{Error, Result};
use crate::prob::{geometric_support, hb, InterUpdatePmf, Probability, TAIL_THRESHOLD};
use crate::search::golden_max;

/// Width of the golden-section bracket on `g`.
const G_TOL: f64 = 1e-12;
/// Relative slack on interval endpoints that coincide analytically.
const EDGE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    /// No battery: transmit with probability `p` whenever energy arrives.
    ZeroBattery {
        p: Probability,
    },
    ZeroWait {
        g: Probability,
    },
    WaitAndTransmit {
        omega: usize,
        g: Probability,
    },
    ProbPeriodic {
        period_low: usize,
        g_f: Probability,
    },
    ExplicitPmf {
        pmf: InterUpdatePmf,
    },
}

/// Rate and age figures of a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics {
    /// Bits per slot.
    pub rate: f64,
    pub peak_age: f64,
    pub avg_age: f64,
    pub mean_interval: f64,
    pub second_moment: f64,
}

impl PolicyMetrics {
    fn from_pmf(pmf: &InterUpdatePmf) -> Self {
        let (m1, m2) = pmf.moments();
        Self {
            rate: pmf.entropy() / m1,
            peak_age: m1,
            avg_age: m2 / (2.0 * m1),
            mean_interval: m1,
            second_moment: m2,
        }
    }
}

/// An optimizer's chosen policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOptimum {
    pub policy: PolicySpec,
    pub metrics: PolicyMetrics,
}

/// Closed-form metrics of wait-and-transmit with threshold `omega` and
/// transmission probability `g`.
pub fn wat_metrics(omega: usize, g: Probability) -> Result<PolicyMetrics> {
    if omega == 0 {
        return Err(Error::Domain {
            name: "omega",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let g = g.get();
    if g <= 0.0 {
        return Err(Error::Domain {
            name: "g",
            value: g,
            expected: "(0, 1]",
        });
    }
    let m = (omega - 1) as f64;
    let mean = m + 1.0 / g;
    let second = m * m + 2.0 * m / g + (2.0 - g) / (g * g);
    Ok(PolicyMetrics {
        rate: (hb(g) / g) / mean,
        peak_age: mean,
        avg_age: second / (2.0 * mean),
        mean_interval: mean,
        second_moment: second,
    })
}

/// Metrics of any policy. `q` is only read by the zero-battery policy, for
/// which the rate is the message-rate bound `H_b(pq) - p H_b(q)`.
pub fn policy_metrics(policy: &PolicySpec, q: Probability) -> Result<PolicyMetrics> {
    match policy {
        PolicySpec::ZeroWait { g } => wat_metrics(1, *g),
        PolicySpec::WaitAndTransmit { omega, g } => wat_metrics(*omega, *g),
        PolicySpec::ProbPeriodic { .. } => Ok(PolicyMetrics::from_pmf(&policy_to_pmf_auto(policy, q)?)),
        PolicySpec::ExplicitPmf { pmf } => Ok(PolicyMetrics::from_pmf(pmf)),
        PolicySpec::ZeroBattery { p } => {
            let pq = p.get() * q.get();
            if pq <= 0.0 {
                return Err(Error::Domain {
                    name: "p",
                    value: p.get(),
                    expected: "(0, 1] with q > 0",
                });
            }
            let mean = 1.0 / pq;
            Ok(PolicyMetrics {
                rate: hb(pq) - p.get() * hb(q.get()),
                peak_age: mean,
                avg_age: (2.0 - pq) / (2.0 * pq),
                mean_interval: mean,
                second_moment: (2.0 - pq) / (pq * pq),
            })
        }
    }
}

/// The average-age-optimal policy for arrival probability `q`.
pub fn prob_periodic_policy(q: Probability) -> Result<PolicySpec> {
    if q.get() <= 0.0 {
        return Err(Error::Domain {
            name: "q",
            value: q.get(),
            expected: "(0, 1]",
        });
    }
    let (period_low, g_f) = periodic_split(q.get());
    Ok(PolicySpec::ProbPeriodic {
        period_low,
        g_f: Probability::new(g_f)?,
    })
}

/// Interval law of a policy on `1..=v_max`; the probability beyond `v_max`
/// must stay below the truncation threshold.
pub fn policy_to_pmf(policy: &PolicySpec, q: Probability, v_max: usize) -> Result<InterUpdatePmf> {
    match policy {
        PolicySpec::ZeroWait { g } => InterUpdatePmf::shifted_geometric(1, *g, v_max, TAIL_THRESHOLD),
        PolicySpec::WaitAndTransmit { omega, g } => {
            InterUpdatePmf::shifted_geometric(*omega, *g, v_max, TAIL_THRESHOLD)
        }
        PolicySpec::ZeroBattery { p } => {
            InterUpdatePmf::shifted_geometric(1, Probability::new(p.get() * q.get())?, v_max, TAIL_THRESHOLD)
        }
        PolicySpec::ProbPeriodic { period_low, g_f } => {
            let needed = if g_f.get() < 1.0 { period_low + 1 } else { *period_low };
            if v_max < needed {
                return Err(Error::Truncation {
                    v_max,
                    tail: if v_max < *period_low { 1.0 } else { 1.0 - g_f.get() },
                    threshold: TAIL_THRESHOLD,
                });
            }
            InterUpdatePmf::two_point(*period_low, *g_f)
        }
        PolicySpec::ExplicitPmf { pmf } => {
            let beyond: f64 = pmf.masses().iter().skip(v_max).sum();
            if beyond > TAIL_THRESHOLD {
                return Err(Error::Truncation {
                    v_max,
                    tail: beyond,
                    threshold: TAIL_THRESHOLD,
                });
            }
            Ok(pmf.clone())
        }
    }
}

/// [`policy_to_pmf`] with the smallest support meeting the tail threshold.
pub fn policy_to_pmf_auto(policy: &PolicySpec, q: Probability) -> Result<InterUpdatePmf> {
    let v_max = match policy {
        PolicySpec::ZeroWait { g } => geometric_support(g.get(), 1, TAIL_THRESHOLD)?,
        PolicySpec::WaitAndTransmit { omega, g } => geometric_support(g.get(), *omega, TAIL_THRESHOLD)?,
        PolicySpec::ZeroBattery { p } => geometric_support(p.get() * q.get(), 1, TAIL_THRESHOLD)?,
        PolicySpec::ProbPeriodic { period_low, .. } => period_low + 1,
        PolicySpec::ExplicitPmf { pmf } => pmf.support_max(),
    };
    policy_to_pmf(policy, q, v_max)
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

/// Feasible interval of `g` for wait-and-transmit with `omega - 1 = m`
/// waiting slots, or `None` when empty.
fn wat_g_interval(q: f64, m: f64, constraints: &AgeConstraints) -> Option<(f64, f64)> {
    // Energy causality: m + 1/g >= 1/q.
    let causal = 1.0 / q - m;
    let mut hi: f64 = match (causal > 1.0, m == 0.0) {
        (true, true) => q,
        (true, false) => 1.0 / causal,
        (false, _) => 1.0,
    };
    let mut lo: f64 = 0.0;
    if let Bound::Finite(c_p) = constraints.c_p {
        let room = c_p - m;
        if room < 1.0 * (1.0 - EDGE_RTOL) {
            return None;
        }
        lo = lo.max(1.0 / room.max(1.0));
    }
    if let Bound::Finite(c_a) = constraints.c_a {
        // E[V^2] <= 2 c_a E[V] with x = 1/g: 2x^2 + (2m - 1 - 2c_a)x + m^2 - 2 c_a m <= 0.
        let b = 2.0 * m - 1.0 - 2.0 * c_a;
        let c = m * m - 2.0 * c_a * m;
        let disc = b * b - 8.0 * c;
        if disc < 0.0 {
            return None;
        }
        let x_max = (-b + disc.sqrt()) / 4.0;
        if x_max < 1.0 * (1.0 - EDGE_RTOL) {
            return None;
        }
        lo = lo.max(1.0 / x_max.max(1.0));
    }
    if lo > hi {
        if lo - hi <= EDGE_RTOL * hi {
            lo = hi;
        } else {
            return None;
        }
    }
    hi = hi.min(1.0);
    (lo > 0.0 || hi > 0.0).then_some((lo, hi))
}

/// Best zero-wait policy: maximize `H_b(g)` over
/// `max(1/c_p, 2/(1 + 2 c_a)) <= g <= q`.
pub fn zero_wait_optimize(q: Probability, constraints: &AgeConstraints) -> Result<Option<PolicyOptimum>> {
    let qv = check_q(q)?;
    let Some((lo, hi)) = wat_g_interval(qv, 0.0, constraints) else {
        return Ok(None);
    };
    let g = 0.5f64.min(hi).max(lo).max(f64::MIN_POSITIVE);
    let g = Probability::new(g)?;
    Ok(Some(PolicyOptimum {
        policy: PolicySpec::ZeroWait { g },
        metrics: wat_metrics(1, g)?,
    }))
}

/// Largest waiting threshold worth searching.
pub fn wat_omega_max(q: f64, constraints: &AgeConstraints) -> usize {
    let reach = match constraints.c_p {
        Bound::Finite(c) => c,
        Bound::Unbounded => 4.0 / q,
    };
    (2.0 * reach.max(1.0 / q)).ceil().max(1.0) as usize
}

/// Best wait-and-transmit policy over integer `omega` and `g in (0, 1]`.
pub fn optimize_wat(q: Probability, constraints: &AgeConstraints) -> Result<Option<PolicyOptimum>> {
    let qv = check_q(q)?;
    let omega_max = wat_omega_max(qv, constraints);
    let per_omega: Vec<Option<(usize, f64, f64)>> = (1..=omega_max)
        .into_par_iter()
        .map(|omega| {
            if omega == 1 {
                return zero_wait_optimize(q, constraints)
                    .ok()
                    .flatten()
                    .map(|opt| (1, policy_g(&opt.policy), opt.metrics.rate));
            }
            let m = (omega - 1) as f64;
            let (lo, hi) = wat_g_interval(qv, m, constraints)?;
            let best = golden_max(|g| hb(g) / (m * g + 1.0), lo.max(f64::MIN_POSITIVE), hi, G_TOL);
            Some((omega, best.x, best.value))
        })
        .collect();

    let best = per_omega
        .into_iter()
        .flatten()
        .fold(None::<(usize, f64, f64)>, |acc, cand| match acc {
            Some(a) if a.2 >= cand.2 => Some(a),
            _ => Some(cand),
        });
    let Some((omega, g, _)) = best else {
        return Ok(None);
    };
    let g = Probability::new(g)?;
    let policy = if omega == 1 {
        PolicySpec::ZeroWait { g }
    } else {
        PolicySpec::WaitAndTransmit { omega, g }
    };
    Ok(Some(PolicyOptimum {
        policy,
        metrics: wat_metrics(omega, g)?,
    }))
}

fn policy_g(policy: &PolicySpec) -> f64 {
    match policy {
        PolicySpec::ZeroWait { g } | PolicySpec::WaitAndTransmit { g, .. } => g.get(),
        _ => f64::NAN,
    }
}
