//! Acceptance gate: one PASS/FAIL line per criterion.

use std::time::Instant;

use ehaoi::capacity::{capacity, max_entropy_pmf, CapacityOptions};
use ehaoi::policies::{optimize_wat, zero_wait_optimize};
use ehaoi::regions::{mask_region_sweep, tradeoff_sweep, zero_battery_best_amp, zero_battery_mask, zero_battery_p_min};
use ehaoi::simulator::{simulate, SimConfig};
use ehaoi::{min_ages_infinite, min_ages_zero, AgeConstraints, Battery, Bound, PolicySpec, Probability, Source};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn p(x: f64) -> Probability {
    Probability::new(x).unwrap()
}

fn hb(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

fn bound(x: f64) -> Bound {
    if x.is_infinite() {
        Bound::Unbounded
    } else {
        Bound::Finite(x)
    }
}

fn cons(c_p: f64, c_a: f64) -> AgeConstraints {
    AgeConstraints::new(bound(c_p), bound(c_a)).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Check {
    let inf = min_ages_infinite(p(0.2)).map_err(|e| e.to_string())?;
    let zero = min_ages_zero(p(0.2)).map_err(|e| e.to_string())?;
    let half = min_ages_zero(p(0.5)).map_err(|e| e.to_string())?;
    ensure(inf.peak_min == 5.0 && zero.peak_min == 5.0, "peak minimum at q=0.2")?;
    ensure(
        zero.avg_min == 4.5,
        format!("zero-battery average minimum {}", zero.avg_min),
    )?;
    ensure(
        inf.avg_min == 2.5,
        format!("infinite-battery average minimum {}", inf.avg_min),
    )?;
    ensure(half.peak_min == 2.0, "peak minimum at q=0.5")?;
    Ok("A_p=5, A_a(zero)=4.5, A_a(inf)=2.5, A_p(q=0.5)=2 exactly".into())
}

fn criterion_2() -> Check {
    let opts = CapacityOptions::default();
    let multipliers = [1.0, 1.1, 1.25, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0, 40.0];
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let q = i as f64 * 0.05;
        for s in multipliers {
            let c_p = s / q;
            let expected = if c_p >= 2.0 { hb(q.min(0.5)) } else { hb(1.0 / c_p) };
            let res = capacity(p(q), &cons(c_p, f64::INFINITY), &opts).map_err(|e| e.to_string())?;
            ensure(res.is_feasible(), format!("q={q} c_p={c_p} reported infeasible"))?;
            let err = (res.value - expected).abs();
            worst = worst.max(err);
            ensure(err <= 1e-4, format!("q={q} c_p={c_p}: {} vs {expected}", res.value))?;
        }
    }
    Ok(format!("200 points, max |error| = {worst:.2e}"))
}

fn criterion_3() -> Check {
    let opts = CapacityOptions::default();
    let at = capacity(p(0.2), &cons(f64::INFINITY, 2.5), &opts).map_err(|e| e.to_string())?;
    let above = capacity(p(0.2), &cons(f64::INFINITY, 2.6), &opts).map_err(|e| e.to_string())?;
    ensure(
        at.is_feasible() && at.value.abs() <= 1e-6,
        format!("C(c_a=2.5) = {}", at.value),
    )?;
    ensure(above.value > 0.0, format!("C(c_a=2.6) = {}", above.value))?;
    Ok(format!(
        "C(c_a=2.5) = {:.1e}, C(c_a=2.6) = {:.6}",
        at.value, above.value
    ))
}

fn criterion_4() -> Check {
    let q = 0.2;
    // Independent oracle: bisection on the decreasing branch of the rate.
    let f = |x: f64| hb(q * x) - x * hb(q) - 0.05;
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = lo;
    let choice = zero_battery_best_amp(p(q), &AgeConstraints::unconstrained(), 0.05)
        .map_err(|e| e.to_string())?
        .ok_or("no feasible strategy")?;
    ensure(
        (choice.p - oracle).abs() < 1e-9,
        format!("p* = {} vs oracle {oracle}", choice.p),
    )?;
    let a_p = 1.0 / (choice.p * q);
    let a_a = a_p - 0.5;
    ensure((a_p - 6.04).abs() <= 0.02, format!("A_p(p*) = {a_p}"))?;
    ensure((a_a - 5.54).abs() <= 0.02, format!("A_a(p*) = {a_a}"))?;
    ensure(
        (choice.delta - 0.59).abs() <= 0.01,
        format!("max delta_a = {}", choice.delta),
    )?;
    Ok(format!(
        "p* = {:.6}, A_p = {a_p:.4}, A_a = {a_a:.4}, max delta_a = {:.4}",
        choice.p, choice.delta
    ))
}

fn criterion_5() -> Check {
    let p_min = zero_battery_p_min(0.5, &cons(3.0, f64::INFINITY));
    ensure((p_min - 2.0 / 3.0).abs() < 1e-12, format!("p_min = {p_min}"))?;
    let (r, d) = zero_battery_mask(p(1.0), p(0.5)).map_err(|e| e.to_string())?;
    ensure(
        r.abs() < 1e-12 && (d - 1.0).abs() < 1e-12,
        format!("p=1 point ({r}, {d})"),
    )?;
    let sweep = mask_region_sweep(p(0.5), Bound::Finite(3.0), 101, Battery::Zero).map_err(|e| e.to_string())?;
    let last = sweep.points.last().ok_or("empty zero-battery sweep")?;
    ensure(
        last.rate.abs() < 1e-12 && (last.delta - 1.0).abs() < 1e-12,
        "sweep misses (0, 1)",
    )?;
    for c_p in [Bound::Unbounded, Bound::Finite(3.0)] {
        let inf = mask_region_sweep(p(0.5), c_p, 101, Battery::Infinite).map_err(|e| e.to_string())?;
        ensure(!inf.points.is_empty(), "empty infinite-battery sweep")?;
        ensure(
            inf.points.iter().all(|pt| pt.delta == 0.0),
            "nonzero infinite-battery masking bound",
        )?;
    }
    Ok(format!(
        "p_min = {p_min:.6}, (R, delta_m)(p=1) = ({r}, {d}), infinite battery delta_m = 0"
    ))
}

/// Exhaustive maximization of entropy over pmfs on `1..=v_max` with mean `k`
/// and, when `m2` is given, that exact second moment. The lowest masses are
/// solved from the equality constraints; the others run over a uniform grid
/// that is re-centered on the best point and halved in width each round.
fn oracle_grid(v_max: usize, k: f64, m2: Option<f64>) -> Option<Vec<f64>> {
    let n_eq = if m2.is_some() { 3 } else { 2 };
    let free = v_max - n_eq;
    let rhs_target = [1.0, k, m2.unwrap_or(0.0)];
    let solve = |tail: &[f64]| -> Option<Vec<f64>> {
        let mut rhs = [0.0; 3];
        for (j, &m) in tail.iter().enumerate() {
            let v = (n_eq + j + 1) as f64;
            rhs[0] += m;
            rhs[1] += v * m;
            rhs[2] += v * v * m;
        }
        let r: Vec<f64> = (0..n_eq).map(|i| rhs_target[i] - rhs[i]).collect();
        let head = if n_eq == 2 {
            let p2 = r[1] - r[0];
            vec![r[0] - p2, p2]
        } else {
            // Vandermonde on {1, 2, 3}.
            let p3 = (r[2] - 3.0 * r[1] + 2.0 * r[0]) / 2.0;
            let p2 = r[1] - r[0] - 2.0 * p3;
            vec![r[0] - p2 - p3, p2, p3]
        };
        if head.iter().chain(tail).any(|&x| x < -1e-15) {
            return None;
        }
        Some(
            head.into_iter()
                .chain(tail.iter().copied())
                .map(|x| x.max(0.0))
                .collect(),
        )
    };
    let entropy = |m: &[f64]| -> f64 { m.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum() };
    if free == 0 {
        return solve(&[]);
    }
    let steps = match free {
        1 => 2001,
        2 => 201,
        3 => 41,
        _ => 21,
    };
    let mut center = vec![0.5; free];
    let mut half = 0.5;
    let mut best: Option<(f64, Vec<f64>)> = None;
    while half > 1e-12 {
        let mut idx = vec![0usize; free];
        loop {
            let tail: Vec<f64> = idx
                .iter()
                .zip(&center)
                .map(|(&i, &c)| (c - half + 2.0 * half * i as f64 / (steps - 1) as f64).clamp(0.0, 1.0))
                .collect();
            if let Some(m) = solve(&tail) {
                let h = entropy(&m);
                if best.as_ref().is_none_or(|(bh, _)| h > *bh) {
                    best = Some((h, m));
                }
            }
            let mut d = 0;
            loop {
                if d == free {
                    break;
                }
                idx[d] += 1;
                if idx[d] < steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == free {
                break;
            }
        }
        let (_, m) = best.as_ref()?;
        center = m[n_eq..].to_vec();
        half *= 0.5;
    }
    best.map(|(_, m)| m)
}

fn oracle_max_entropy(v_max: usize, k: f64, c_a: f64) -> Option<Vec<f64>> {
    let slack = oracle_grid(v_max, k, None)?;
    let m2: f64 = slack
        .iter()
        .enumerate()
        .map(|(i, x)| ((i + 1) * (i + 1)) as f64 * x)
        .sum();
    if m2 <= 2.0 * c_a * k * (1.0 + 1e-12) {
        Some(slack)
    } else {
        oracle_grid(v_max, k, Some(2.0 * c_a * k))
    }
}

fn criterion_6() -> Check {
    let cases: [(usize, f64, f64); 25] = [
        (3, 2.0, f64::INFINITY),
        (3, 1.5, 1.0),
        (3, 2.5, 1.4),
        (4, 2.5, f64::INFINITY),
        (4, 2.5, 1.5),
        (4, 2.0, 1.2),
        (4, 3.2, 1.8),
        (4, 1.7, 1.0),
        (5, 3.0, f64::INFINITY),
        (5, 3.0, 1.7),
        (5, 2.2, 1.3),
        (5, 4.1, 2.2),
        (5, 1.4, 0.9),
        (5, 3.5, 2.0),
        (6, 3.5, f64::INFINITY),
        (6, 3.5, 2.0),
        (6, 2.5, 1.5),
        (6, 4.5, 2.5),
        (6, 5.2, 2.7),
        (6, 1.9, 1.1),
        (6, 3.0, 1.6),
        (6, 2.0, 1.3),
        (6, 4.0, 2.2),
        (6, 1.3, 0.9),
        (6, 5.5, 3.0),
    ];
    let (mut worst_tv, mut worst_h, mut active) = (0.0f64, 0.0f64, 0);
    for (v_max, k, c_a) in cases {
        let oracle = oracle_max_entropy(v_max, k, c_a).ok_or(format!("oracle found nothing at {v_max},{k},{c_a}"))?;
        let pmf = max_entropy_pmf(k, bound(c_a), v_max, 1e-12).map_err(|e| format!("K={k} c_a={c_a}: {e}"))?;
        let tv = 0.5 * (1..=v_max).map(|v| (pmf.mass(v) - oracle[v - 1]).abs()).sum::<f64>();
        let h_oracle: f64 = oracle.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
        let dh = (pmf.entropy() - h_oracle).abs();
        let m2: f64 = oracle
            .iter()
            .enumerate()
            .map(|(i, x)| ((i + 1) * (i + 1)) as f64 * x)
            .sum();
        if c_a.is_finite() && m2 >= 2.0 * c_a * k * (1.0 - 1e-9) {
            active += 1;
        }
        worst_tv = worst_tv.max(tv);
        worst_h = worst_h.max(dh);
        ensure(
            tv <= 1e-3 && dh <= 1e-4,
            format!("V_max={v_max} K={k} c_a={c_a}: TV {tv:.2e}, |dH| {dh:.2e}"),
        )?;
    }
    Ok(format!(
        "25 pairs ({active} with active second moment), max TV {worst_tv:.2e}, max |dH| {worst_h:.2e}"
    ))
}

fn criterion_7() -> Check {
    let opts = CapacityOptions::default();
    let mut zw_feasible = 0;
    for i in 0..10 {
        let c_p = 5.0 + i as f64;
        for j in 0..10 {
            let c_a = 2.5 + 0.5 * j as f64;
            let c = cons(c_p, c_a);
            let cap = capacity(p(0.2), &c, &opts).map_err(|e| e.to_string())?;
            let best = match cap.pmf_star.as_ref() {
                Some(pmf) => {
                    let (m1, m2) = pmf.moments();
                    ensure(
                        m1 <= c_p * (1.0 + 1e-9) && m2 / (2.0 * m1) <= c_a * (1.0 + 1e-9),
                        format!("optimal pmf breaks the budgets at ({c_p}, {c_a})"),
                    )?;
                    pmf.entropy() / m1
                }
                None => 0.0,
            };
            let wat = optimize_wat(p(0.2), &c)
                .map_err(|e| e.to_string())?
                .map_or(0.0, |o| o.metrics.rate);
            let zw = zero_wait_optimize(p(0.2), &c).map_err(|e| e.to_string())?;
            let zw_rate = zw.as_ref().map_or(0.0, |o| o.metrics.rate);
            let tag = format!(
                "(c_p, c_a) = ({c_p}, {c_a}): best {best}, wat {wat}, zw {zw_rate}, C {}",
                cap.value
            );
            ensure(
                best >= wat - 1e-6 && wat >= zw_rate - 1e-12,
                format!("ordering fails at {tag}"),
            )?;
            ensure(best <= cap.value + 1e-6, format!("best above capacity at {tag}"))?;
            ensure(
                zw.is_some() == (c_a >= 4.5),
                format!("zero-wait feasibility wrong at {tag}"),
            )?;
            zw_feasible += usize::from(zw.is_some());
        }
    }
    Ok(format!(
        "100 points ordered; zero-wait feasible at {zw_feasible} points, all with c_a >= 4.5"
    ))
}

fn zero_config(seed: u64, pv: f64, q: f64) -> SimConfig {
    SimConfig {
        q: p(q),
        battery: Battery::Zero,
        policy: PolicySpec::ZeroBattery { p: p(pv) },
        n_slots: 1_000_000,
        seed,
        save_phase_slots: None,
        miller_madow: false,
    }
}

fn criterion_8() -> Check {
    let mut worst = [0.0f64; 3];
    for seed in 0..10 {
        let s = simulate(&zero_config(seed, 1.0, 0.2)).map_err(|e| e.to_string())?;
        let peak = s.empirical_peak_age.ok_or("degenerate run")?;
        let avg = s.empirical_avg_age.ok_or("degenerate run")?;
        worst[0] = worst[0].max((peak / 5.0 - 1.0).abs());
        worst[1] = worst[1].max((avg / 4.5 - 1.0).abs());
        let m = simulate(&zero_config(seed, 0.5, 0.5)).map_err(|e| e.to_string())?;
        let mi = m.empirical_mi_per_slot.ok_or("missing MI")?;
        worst[2] = worst[2].max((mi / (hb(0.25) - 0.5) - 1.0).abs());
    }
    ensure(worst[0] < 0.01, format!("peak age off by {:.3}%", 100.0 * worst[0]))?;
    ensure(worst[1] < 0.01, format!("average age off by {:.3}%", 100.0 * worst[1]))?;
    ensure(worst[2] < 0.01, format!("MI off by {:.3}%", 100.0 * worst[2]))?;
    let zw = SimConfig {
        q: p(0.2),
        battery: Battery::Infinite,
        policy: PolicySpec::ZeroWait { g: p(0.18) },
        n_slots: 1_000_000,
        seed: 7,
        save_phase_slots: Some(10_000),
        miller_madow: false,
    };
    let s = simulate(&zw).map_err(|e| e.to_string())?;
    let frac = s.battery_violations as f64 / s.update_count.max(1) as f64;
    let rate = s.interval_entropy_rate.ok_or("degenerate run")?;
    let rate_err = (rate / hb(0.18) - 1.0).abs();
    ensure(frac < 1e-3, format!("violation fraction {frac}"))?;
    ensure(rate_err < 0.02, format!("entropy rate {rate} vs {}", hb(0.18)))?;
    Ok(format!(
        "max rel. error peak {:.3}%, avg {:.3}%, MI {:.3}% over 10 seeds; zero-wait violations {frac:.1e}, rate error {:.3}%",
        100.0 * worst[0],
        100.0 * worst[1],
        100.0 * worst[2],
        100.0 * rate_err
    ))
}

fn criterion_9() -> Check {
    let cfg = SimConfig {
        q: p(0.2),
        battery: Battery::Infinite,
        policy: PolicySpec::ZeroWait { g: p(0.18) },
        n_slots: 200_000,
        seed: 7,
        save_phase_slots: None,
        miller_madow: false,
    };
    let a = serde_json::to_string(&simulate(&cfg).map_err(|e| e.to_string())?).unwrap();
    let b = serde_json::to_string(&simulate(&cfg).map_err(|e| e.to_string())?).unwrap();
    ensure(a == b, "simulate differs between identical runs")?;
    let grid: Vec<f64> = (0..=20).map(|i| 5.0 + 0.35 * i as f64).collect();
    let sweep = |threads: usize| -> std::result::Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| {
            tradeoff_sweep(
                p(0.2),
                0.05,
                Bound::Finite(6.0),
                &grid,
                &Source::ALL,
                &CapacityOptions::default(),
            )
        })
        .map(|pts| serde_json::to_string(&pts).unwrap())
        .map_err(|e| e.to_string())
    };
    let one = sweep(1)?;
    ensure(
        one == sweep(4)? && one == sweep(7)?,
        "sweep depends on the thread count",
    )?;
    Ok("simulate JSON identical across runs; sweep identical with 1, 4 and 7 threads".into())
}

fn criterion_10() -> Check {
    let grid: Vec<f64> = (0..=70).map(|i| 5.0 + 0.1 * i as f64).collect();
    let pts = tradeoff_sweep(
        p(0.2),
        0.05,
        Bound::Unbounded,
        &grid,
        &Source::ALL,
        &CapacityOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let series = |s: Source| -> Vec<f64> { pts.iter().filter(|pt| pt.source == s).map(|pt| pt.delta).collect() };
    for s in Source::ALL {
        let d = series(s);
        ensure(d.len() == grid.len(), "missing rows")?;
        ensure(
            d.windows(2).all(|w| w[1] >= w[0] - 1e-9),
            format!("{} is not monotone in c_p", s.name()),
        )?;
    }
    let zb = series(Source::ZeroBattery);
    let threshold = grid
        .iter()
        .zip(&zb)
        .find(|(_, &d)| d > 0.0)
        .map(|(&c, _)| c)
        .ok_or("zero battery never positive")?;
    ensure(
        grid.iter().zip(&zb).all(|(&c, &d)| c >= 6.04 || d == 0.0),
        "zero battery positive below c_p = 6.04",
    )?;
    ensure(
        (threshold - 6.1).abs() < 1e-9,
        format!("first positive zero-battery point at c_p = {threshold}"),
    )?;
    let best = series(Source::BestAchievable);
    let zw = series(Source::ZeroWait);
    ensure(
        best.iter().zip(&zw).all(|(b, z)| (b - z).abs() <= 1e-6),
        "zero-wait and best-achievable differ",
    )?;
    ensure(
        (best[0] - (hb(0.2) - 0.05)).abs() <= 1e-6,
        format!("delta level {}", best[0]),
    )?;
    Ok(format!(
        "monotone in c_p; zero battery 0 below 6.04 and {:.4} at 6.1; zero-wait = best = {:.6}",
        zb[11], best[0]
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("minimum-age anchors", criterion_1),
        ("closed-form capacity", criterion_2),
        ("zero-rate boundary", criterion_3),
        ("zero-battery operating point", criterion_4),
        ("masking thresholds", criterion_5),
        ("solver vs oracle", criterion_6),
        ("policy dominance", criterion_7),
        ("Monte Carlo convergence", criterion_8),
        ("determinism", criterion_9),
        ("figure reproduction", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
