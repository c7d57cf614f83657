//! Seeded Monte Carlo simulation of the channel with battery dynamics.
//!
//! Energy arrives as `E_t ~ Bernoulli(q)` and the battery follows
//! `B_{t+1} = B_t + E_t - X_t`. Energy harvested in slot `t` can be spent in
//! the same slot.
//!
//! The random stream comes from [`ChaCha8Rng`] seeded with
//! [`SeedableRng::seed_from_u64`]. Every slot draws one uniform `f64` for the
//! arrival. With no battery a second uniform is drawn only when energy
//! arrives. With an unlimited battery a uniform is drawn after each
//! transmission to sample the next interval by inverting the interval cdf.
//!
//! With an unlimited battery nothing is sent during the save phase. The first
//! scheduled transmission is `V_1` slots after a virtual update placed in the
//! last save-phase slot. When a scheduled slot finds the battery empty the
//! transmission is deferred to the next slot with energy, the clock restarts
//! there, and one violation is counted.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::{policy_to_pmf_auto, PolicySpec};
use crate::prob::{xlog2x_neg, Probability};
use crate::regions::Battery;

/// Smallest trace length accepted by [`estimate_mi_zero_battery`].
pub const MIN_MI_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub q: Probability,
    pub battery: Battery,
    pub policy: PolicySpec,
    pub n_slots: u64,
    pub seed: u64,
    /// Unlimited battery only; `None` selects [`default_save_phase`].
    #[serde(default)]
    pub save_phase_slots: Option<u64>,
    /// Add the Miller–Madow correction to the interval entropy.
    #[serde(default)]
    pub miller_madow: bool,
}

/// `ceil(3 sqrt(n) / q)` slots.
pub fn default_save_phase(n_slots: u64, q: f64) -> u64 {
    if q <= 0.0 {
        return n_slots;
    }
    (3.0 * (n_slots as f64).sqrt() / q).ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub n_slots: u64,
    pub seed: u64,
    pub update_count: u64,
    /// Mean realized interval between consecutive updates.
    pub empirical_peak_age: Option<f64>,
    /// Time average of the age sawtooth from the first update to the end.
    pub empirical_avg_age: Option<f64>,
    /// `sum V^2 / (2 sum V)` over the realized intervals.
    pub interval_avg_age: Option<f64>,
    /// Bits per slot.
    pub interval_entropy_rate: Option<f64>,
    /// Plug-in `I(E; Y)` per slot; no battery only.
    pub empirical_mi_per_slot: Option<f64>,
    pub battery_violations: u64,
    pub final_battery: u64,
    pub save_phase_slots: u64,
    /// Fewer than two updates; the age and entropy estimates are absent.
    pub degenerate: bool,
}

/// One transmitted update. `interval` counts from the previous update (from
/// the virtual update for the first one); `battery` is the level after the
/// slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub slot: u64,
    pub interval: u64,
    pub battery: u64,
}

#[derive(Default)]
struct Tally {
    first: Option<u64>,
    last: u64,
    count: u64,
    sum: u64,
    sum_sq: u128,
    hist: BTreeMap<u64, u64>,
}

impl Tally {
    fn record(&mut self, t: u64) {
        if self.first.is_some() {
            let v = t - self.last;
            self.sum += v;
            self.sum_sq += u128::from(v) * u128::from(v);
            *self.hist.entry(v).or_insert(0) += 1;
        } else {
            self.first = Some(t);
        }
        self.last = t;
        self.count += 1;
    }

    fn intervals(&self) -> u64 {
        self.count.saturating_sub(1)
    }
}

fn entropy_rate(hist: &BTreeMap<u64, u64>, miller_madow: bool) -> f64 {
    let n: u64 = hist.values().sum();
    let sum: u64 = hist.iter().map(|(v, c)| v * c).sum();
    let nf = n as f64;
    let mut h: f64 = hist.values().map(|&c| xlog2x_neg(c as f64 / nf)).sum();
    if miller_madow {
        h += (hist.len() as f64 - 1.0) / (2.0 * nf * std::f64::consts::LN_2);
    }
    h / (sum as f64 / nf)
}

/// Plug-in entropy of the interval histogram divided by the sample mean, in
/// bits per slot. The plug-in entropy is biased downward for small samples.
pub fn estimate_interval_entropy(intervals: &[u64]) -> Result<f64> {
    if intervals.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} interval(s); at least 2 are needed",
            intervals.len()
        )));
    }
    if intervals.contains(&0) {
        return Err(Error::Domain {
            name: "interval",
            value: 0.0,
            expected: "positive integers",
        });
    }
    let mut hist = BTreeMap::new();
    for &v in intervals {
        *hist.entry(v).or_insert(0u64) += 1;
    }
    Ok(entropy_rate(&hist, false))
}

fn mi_from_counts(counts: &[[u64; 2]; 2]) -> f64 {
    let n: u64 = counts.iter().flatten().sum();
    let nf = n as f64;
    let row = [counts[0][0] + counts[0][1], counts[1][0] + counts[1][1]];
    let col = [counts[0][0] + counts[1][0], counts[0][1] + counts[1][1]];
    let mut mi = 0.0;
    for e in 0..2 {
        for y in 0..2 {
            let c = counts[e][y];
            if c > 0 {
                let ratio = (c as f64 * nf) / (row[e] as f64 * col[y] as f64);
                mi += c as f64 / nf * ratio.log2();
            }
        }
    }
    mi.max(0.0)
}

/// Plug-in per-slot mutual information between energy arrivals and channel
/// outputs.
pub fn estimate_mi_zero_battery(e_trace: &[bool], y_trace: &[bool]) -> Result<f64> {
    if e_trace.len() != y_trace.len() {
        return Err(Error::LengthMismatch {
            left: e_trace.len(),
            right: y_trace.len(),
        });
    }
    if e_trace.len() < MIN_MI_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} slots; at least {MIN_MI_SAMPLES} are needed",
            e_trace.len()
        )));
    }
    let mut counts = [[0u64; 2]; 2];
    for (&e, &y) in e_trace.iter().zip(y_trace) {
        counts[usize::from(e)][usize::from(y)] += 1;
    }
    Ok(mi_from_counts(&counts))
}

pub fn simulate(config: &SimConfig) -> Result<SimStats> {
    run(config, None)
}

/// [`simulate`] plus one record per update.
pub fn simulate_with_trace(config: &SimConfig) -> Result<(SimStats, Vec<UpdateRecord>)> {
    let mut trace = Vec::new();
    let stats = run(config, Some(&mut trace))?;
    Ok((stats, trace))
}

/// Independent runs in parallel; results keep the order of `configs`.
pub fn simulate_many(configs: &[SimConfig]) -> Vec<Result<SimStats>> {
    configs.par_iter().map(simulate).collect()
}

fn validate(config: &SimConfig) -> Result<()> {
    if config.n_slots == 0 {
        return Err(Error::Domain {
            name: "n_slots",
            value: 0.0,
            expected: ">= 1",
        });
    }
    match (config.battery, &config.policy) {
        (Battery::Zero, PolicySpec::ZeroBattery { .. }) => {
            if config.save_phase_slots.is_some_and(|s| s > 0) {
                return Err(Error::Config("a save phase needs a battery".into()));
            }
            Ok(())
        }
        (Battery::Zero, _) => Err(Error::Config(
            "with no battery only the zero_battery policy applies".into(),
        )),
        (Battery::Infinite, PolicySpec::ZeroBattery { .. }) => {
            Err(Error::Config("the zero_battery policy needs battery = zero".into()))
        }
        (Battery::Infinite, _) => Ok(()),
    }
}

fn run(config: &SimConfig, mut trace: Option<&mut Vec<UpdateRecord>>) -> Result<SimStats> {
    validate(config)?;
    let q = config.q.get();
    let n = config.n_slots;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tally = Tally::default();
    let mut violations = 0u64;
    let mut battery: i64 = 0;
    let mut save = 0u64;
    let mut mi = None;

    match &config.policy {
        PolicySpec::ZeroBattery { p } => {
            let p = p.get();
            let mut counts = [[0u64; 2]; 2];
            let mut prev = None;
            for t in 0..n {
                let e = rng.random::<f64>() < q;
                let x = e && rng.random::<f64>() < p;
                counts[usize::from(e)][usize::from(x)] += 1;
                if x {
                    tally.record(t);
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(UpdateRecord {
                            slot: t,
                            interval: prev.map_or(t + 1, |s| t - s),
                            battery: 0,
                        });
                    }
                    prev = Some(t);
                }
            }
            mi = Some(mi_from_counts(&counts));
        }
        policy => {
            let cdf = policy_to_pmf_auto(policy, config.q)?.cdf();
            let draw = |rng: &mut ChaCha8Rng| {
                let u: f64 = rng.random();
                cdf.partition_point(|&c| c < u).min(cdf.len() - 1) as u64 + 1
            };
            save = config.save_phase_slots.unwrap_or_else(|| default_save_phase(n, q));
            // Slot of the virtual update that starts the first interval.
            let mut origin = save as i128 - 1;
            let mut next = save + draw(&mut rng) - 1;
            for t in 0..n {
                let e = i64::from(rng.random::<f64>() < q);
                let available = battery + e;
                let send = t >= next && available >= 1;
                if t == next && !send {
                    violations += 1;
                }
                battery = available - i64::from(send);
                assert!(battery >= 0, "battery went negative at slot {t}");
                if send {
                    tally.record(t);
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(UpdateRecord {
                            slot: t,
                            interval: (t as i128 - origin) as u64,
                            battery: battery as u64,
                        });
                    }
                    origin = t as i128;
                    next = t + draw(&mut rng);
                }
            }
        }
    }

    let degenerate = tally.count < 2;
    let (mut peak, mut avg, mut ratio, mut rate) = (None, None, None, None);
    if !degenerate {
        let intervals = tally.intervals() as f64;
        let first = tally.first.unwrap_or(0);
        let tail = u128::from(n - tally.last);
        peak = Some(tally.sum as f64 / intervals);
        avg = Some((tally.sum_sq + tail * tail) as f64 / (2.0 * (n - first) as f64));
        ratio = Some(tally.sum_sq as f64 / (2.0 * tally.sum as f64));
        rate = Some(entropy_rate(&tally.hist, config.miller_madow));
    }
    Ok(SimStats {
        n_slots: n,
        seed: config.seed,
        update_count: tally.count,
        empirical_peak_age: peak,
        empirical_avg_age: avg,
        interval_avg_age: ratio,
        interval_entropy_rate: rate,
        empirical_mi_per_slot: mi,
        battery_violations: violations,
        final_battery: battery as u64,
        save_phase_slots: save,
        degenerate,
    })
}
