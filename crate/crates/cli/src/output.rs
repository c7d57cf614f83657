use std::io::Write;

use ehaoi::{Bound, PolicySpec, RegionPoint, UpdateRecord};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Infeasible,
    Degenerate,
}

/// Self-describing result: running `command` again reproduces the record.
#[derive(Serialize)]
pub struct OutputRecord<P: Serialize, R: Serialize> {
    pub command: Vec<String>,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: P,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub result: Option<R>,
}

pub fn write_json<T: Serialize>(out: &mut impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

/// Shortest decimal that round-trips the value rounded to 9 significant
/// digits.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

fn bound(b: Bound) -> String {
    b.finite().map_or_else(|| "inf".into(), sig9)
}

fn opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

pub fn policy_label(policy: &PolicySpec) -> String {
    match policy {
        PolicySpec::ZeroBattery { p } => format!("zero_battery p={}", sig9(p.get())),
        PolicySpec::ZeroWait { g } => format!("zero_wait g={}", sig9(g.get())),
        PolicySpec::WaitAndTransmit { omega, g } => {
            format!("wait_and_transmit omega={omega} g={}", sig9(g.get()))
        }
        PolicySpec::ProbPeriodic { period_low, g_f } => {
            format!("prob_periodic period_low={period_low} g_f={}", sig9(g_f.get()))
        }
        PolicySpec::ExplicitPmf { pmf } => format!("explicit_pmf v_max={}", pmf.support_max()),
    }
}

const REGION_HEADER: [&str; 10] = [
    "source",
    "c_p",
    "c_a",
    "rate",
    "delta",
    "delta_kind",
    "peak_age",
    "avg_age",
    "feasible",
    "policy",
];

pub fn write_region_csv(out: impl Write, points: &[RegionPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGION_HEADER)?;
    for pt in points {
        let kind = match pt.delta_kind {
            ehaoi::DeltaKind::Amplification => "amplification",
            ehaoi::DeltaKind::MaskingLowerBound => "masking_lower_bound",
        };
        w.write_record([
            pt.source.name().to_string(),
            bound(pt.constraints.c_p),
            bound(pt.constraints.c_a),
            sig9(pt.rate),
            sig9(pt.delta),
            kind.to_string(),
            opt(pt.peak_age),
            opt(pt.avg_age),
            pt.feasible.to_string(),
            pt.policy_params.as_ref().map(policy_label).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(out: impl Write, trace: &[UpdateRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "interval", "battery"])?;
    for r in trace {
        w.write_record([r.slot.to_string(), r.interval.to_string(), r.battery.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
