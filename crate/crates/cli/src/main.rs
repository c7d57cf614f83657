//! `ehaoi` command-line front end.
//!
//! Exit codes: 0 success, 1 feasible but degenerate, 2 usage error,
//! 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod grid;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ehaoi::capacity::CapacityOptions;
use ehaoi::regions::{
    amp_region_infinite, mask_region_sweep, tradeoff_sweep, zero_battery_age, zero_battery_amp, zero_battery_p_min,
    DeltaKind, RegionPoint, Source,
};
use ehaoi::{
    capacity, min_ages_infinite, min_ages_zero, optimize_wat, policy_metrics, prob_periodic_policy, simulate,
    simulate_with_trace, zero_wait_optimize, AgeConstraints, Battery, Bound, InterUpdatePmf, PolicyOptimum, PolicySpec,
    Probability, SimConfig, SimStats,
};
use serde::Serialize;

use grid::Grid;
use output::{write_json, write_region_csv, write_trace_csv, OutputRecord, Status};

#[derive(Parser)]
#[command(
    name = "ehaoi",
    version,
    about = "Age, rate and energy-state leakage trade-offs of binary energy-harvesting channels"
)]
struct Cli {
    /// Worker threads for sweeps; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum peak and average age.
    Minage(MinageArgs),
    /// Capacity under peak and average age budgets.
    Capacity(CapacityArgs),
    /// Rate/state-information regions as plot data.
    #[command(subcommand)]
    Region(RegionCommand),
    /// Optimize a parametric transmission policy.
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Monte Carlo simulation of the channel.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum BatteryArg {
    Zero,
    Infinite,
}

impl From<BatteryArg> for Battery {
    fn from(b: BatteryArg) -> Self {
        match b {
            BatteryArg::Zero => Battery::Zero,
            BatteryArg::Infinite => Battery::Infinite,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Serialize)]
struct MinageArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum)]
    battery: BatteryArg,
}

#[derive(Args, Serialize)]
struct SolverArgs {
    /// Points in the coarse sweep over the mean interval.
    #[arg(long, default_value_t = 64)]
    coarse_points: usize,
    /// Final bracket width on the mean interval.
    #[arg(long, default_value_t = 1e-4)]
    k_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    solver_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_newton_iter: usize,
    /// Fixed support bound for the inner solver.
    #[arg(long)]
    v_max: Option<usize>,
}

impl SolverArgs {
    fn options(&self) -> CapacityOptions {
        CapacityOptions {
            coarse_points: self.coarse_points,
            k_tol: self.k_tol,
            solver_tol: self.solver_tol,
            max_newton_iter: self.max_newton_iter,
            v_max: self.v_max,
            ..CapacityOptions::default()
        }
    }
}

#[derive(Args, Serialize)]
struct CapacityArgs {
    #[arg(long)]
    q: f64,
    /// Peak-age budget, or `inf`.
    #[arg(long, default_value = "inf")]
    cp: Bound,
    /// Average-age budget, or `inf`.
    #[arg(long, default_value = "inf")]
    ca: Bound,
    /// Include the optimal interval pmf.
    #[arg(long)]
    pmf: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Subcommand)]
enum RegionCommand {
    /// (rate, state amplification): Δa against c_p with `--cp-grid`, or the
    /// region boundary at a single `--cp`.
    Amplify(AmplifyArgs),
    /// (rate, state masking) boundary.
    Mask(MaskArgs),
}

#[derive(Args, Serialize)]
struct AmplifyArgs {
    #[arg(long)]
    q: f64,
    /// Rate floor in bits per slot.
    #[arg(long, default_value_t = 0.0)]
    rmin: f64,
    #[arg(long, default_value = "inf")]
    ca: Bound,
    #[arg(long, conflicts_with = "cp_grid")]
    cp: Option<Bound>,
    /// Peak-age budgets as start:stop:step.
    #[arg(long)]
    cp_grid: Option<Grid>,
    /// Restrict the sources to one battery regime.
    #[arg(long, value_enum)]
    battery: Option<BatteryArg>,
    /// Samples along a single region boundary.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Serialize)]
struct MaskArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value = "inf")]
    cp: Bound,
    #[arg(long, value_enum, default_value_t = BatteryArg::Zero)]
    battery: BatteryArg,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum PolicyCommand {
    /// Best zero-wait transmission probability.
    ZeroWait(PolicyArgs),
    /// Best wait-and-transmit threshold and probability.
    Wat(PolicyArgs),
    /// The average-age-optimal probabilistic-periodic policy.
    Periodic(PolicyArgs),
}

#[derive(Args, Serialize)]
struct PolicyArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value = "inf")]
    cp: Bound,
    #[arg(long, default_value = "inf")]
    ca: Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum PolicyKind {
    ZeroBattery,
    ZeroWait,
    Wat,
    Periodic,
    Pmf,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    battery: BatteryArg,
    /// Defaults to zero-battery with no battery.
    #[arg(long, value_enum)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    q: f64,
    /// Transmission probability per energy arrival (zero battery).
    #[arg(long)]
    p: Option<f64>,
    /// Transmission probability per slot (zero-wait, wat).
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    omega: Option<usize>,
    /// Interval masses for v = 1, 2, ... separated by commas.
    #[arg(long, value_delimiter = ',')]
    pmf: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long)]
    seed: u64,
    /// Silent slots before the first scheduled update.
    #[arg(long)]
    save_phase: Option<u64>,
    #[arg(long)]
    miller_madow: bool,
    /// Write one CSV row per update to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ehaoi::Error> for Failure {
    fn from(e: ehaoi::Error) -> Self {
        let code = match e {
            ehaoi::Error::NonConvergence { .. } | ehaoi::Error::Truncation { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

/// Arguments after the program name, without `--threads`, which never
/// changes the output.
fn echo() -> Vec<String> {
    let mut out = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--threads" {
            args.next();
        } else if !a.starts_with("--threads=") {
            out.push(a);
        }
    }
    out
}

fn prob(name: &'static str, x: f64) -> Result<Probability, Failure> {
    Ok(Probability::named(name, x)?)
}

fn positive_q(q: f64) -> Result<Probability, Failure> {
    let q = prob("q", q)?;
    if q.get() > 0.0 {
        Ok(q)
    } else {
        Err(usage("q must lie in (0, 1]"))
    }
}

fn emit<P: Serialize, R: Serialize>(
    params: &P,
    seed: Option<u64>,
    status: Status,
    reason: Option<String>,
    result: Option<R>,
) -> io::Result<()> {
    let record = OutputRecord {
        command: echo(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        params,
        status,
        reason,
        result,
    };
    let mut out = io::stdout().lock();
    write_json(&mut out, &record)
}

fn cmd_minage(a: &MinageArgs) -> CmdResult {
    let q = positive_q(a.q)?;
    let report = match a.battery {
        BatteryArg::Zero => min_ages_zero(q)?,
        BatteryArg::Infinite => min_ages_infinite(q)?,
    };
    emit(a, None, Status::Ok, None, Some(report))?;
    Ok(0)
}

fn cmd_capacity(a: &CapacityArgs) -> CmdResult {
    let q = positive_q(a.q)?;
    let constraints = AgeConstraints::new(a.cp, a.ca)?;
    let mut res = capacity(q, &constraints, &a.solver.options())?;
    if !a.pmf {
        res.pmf_star = None;
    }
    let (status, reason) = match res.status {
        ehaoi::Feasibility::Feasible => (Status::Ok, None),
        ehaoi::Feasibility::InfeasiblePeak => {
            (Status::Infeasible, Some("c_p is below the minimum peak age 1/q".into()))
        }
        ehaoi::Feasibility::InfeasibleAvg => (Status::Infeasible, Some("c_a is below the minimum average age".into())),
    };
    emit(a, None, status, reason, Some(res))?;
    Ok(0)
}

fn default_sources(battery: Option<BatteryArg>) -> Vec<Source> {
    match battery {
        None => Source::ALL.to_vec(),
        Some(BatteryArg::Zero) => vec![Source::ZeroBattery],
        Some(BatteryArg::Infinite) => vec![Source::BestAchievable, Source::WaitAndTransmit, Source::ZeroWait],
    }
}

/// Corners `(r_max(p), min(H_b(q), H_b(pq) - r_max(p)))` of the zero-battery
/// amplification region for `p` from the age-feasible minimum to 1.
fn zero_battery_amp_corners(
    q: Probability,
    constraints: &AgeConstraints,
    grid: usize,
) -> Result<Vec<RegionPoint>, Failure> {
    let p_min = zero_battery_p_min(q.get(), constraints);
    if p_min > 1.0 {
        return Ok(Vec::new());
    }
    let grid = grid.max(2);
    (0..grid)
        .map(|j| {
            let p = if j + 1 == grid {
                1.0
            } else {
                p_min + (1.0 - p_min) * j as f64 / (grid - 1) as f64
            };
            let pp = prob("p", p)?;
            let amp = zero_battery_amp(pp, q)?;
            let ages = (p > 0.0).then(|| zero_battery_age(pp, q)).transpose()?;
            Ok(RegionPoint {
                rate: amp.r_max,
                delta: amp.delta_cap.min(amp.sum_cap - amp.r_max).max(0.0),
                delta_kind: DeltaKind::Amplification,
                peak_age: ages.map(|a| a.0),
                avg_age: ages.map(|a| a.1),
                source: Source::ZeroBattery,
                policy_params: Some(PolicySpec::ZeroBattery { p: pp }),
                constraints: *constraints,
                feasible: true,
            })
        })
        .collect()
}

fn emit_region(params: &impl Serialize, format: Format, points: Vec<RegionPoint>, reason: Option<String>) -> CmdResult {
    let status = if reason.is_some() {
        Status::Infeasible
    } else {
        Status::Ok
    };
    match format {
        Format::Json => emit(params, None, status, reason, Some(points))?,
        Format::Csv => {
            if let Some(r) = reason {
                eprintln!("ehaoi: infeasible: {r}");
            }
            write_region_csv(io::stdout().lock(), &points)?;
        }
    }
    Ok(0)
}

fn cmd_amplify(a: &AmplifyArgs) -> CmdResult {
    let q = positive_q(a.q)?;
    let opts = a.solver.options();
    if let Some(grid) = &a.cp_grid {
        let points = tradeoff_sweep(q, a.rmin, a.ca, &grid.values(), &default_sources(a.battery), &opts)?;
        return emit_region(a, a.format, points, None);
    }
    let constraints = AgeConstraints::new(a.cp.unwrap_or(Bound::Unbounded), a.ca)?;
    match a.battery.unwrap_or(BatteryArg::Infinite) {
        BatteryArg::Infinite => match amp_region_infinite(q, &constraints, a.grid, &opts) {
            Ok(points) => emit_region(a, a.format, points, None),
            Err(ehaoi::Error::Infeasible(why)) => emit_region(a, a.format, Vec::new(), Some(why)),
            Err(e) => Err(e.into()),
        },
        BatteryArg::Zero => {
            let points = zero_battery_amp_corners(q, &constraints, a.grid)?;
            let reason = points
                .is_empty()
                .then(|| "no transmission probability meets the age budgets".to_string());
            emit_region(a, a.format, points, reason)
        }
    }
}

fn cmd_mask(a: &MaskArgs) -> CmdResult {
    let q = positive_q(a.q)?;
    let sweep = mask_region_sweep(q, a.cp, a.grid, a.battery.into())?;
    let reason = sweep
        .infeasible
        .then(|| "no policy meets the peak-age budget".to_string());
    emit_region(a, a.format, sweep.points, reason)
}

fn cmd_policy(kind: &PolicyCommand) -> CmdResult {
    let (a, optimum) = match kind {
        PolicyCommand::ZeroWait(a) => {
            let c = AgeConstraints::new(a.cp, a.ca)?;
            (a, zero_wait_optimize(positive_q(a.q)?, &c)?)
        }
        PolicyCommand::Wat(a) => {
            let c = AgeConstraints::new(a.cp, a.ca)?;
            (a, optimize_wat(positive_q(a.q)?, &c)?)
        }
        PolicyCommand::Periodic(a) => {
            let q = positive_q(a.q)?;
            let c = AgeConstraints::new(a.cp, a.ca)?;
            let policy = prob_periodic_policy(q)?;
            let metrics = policy_metrics(&policy, q)?;
            let ok = c.admits(metrics.peak_age, metrics.avg_age);
            (a, ok.then_some(PolicyOptimum { policy, metrics }))
        }
    };
    match optimum {
        Some(o) => emit(a, None, Status::Ok, None, Some(o))?,
        None => emit::<_, PolicyOptimum>(
            a,
            None,
            Status::Infeasible,
            Some("no policy of this family meets the age budgets".into()),
            None,
        )?,
    }
    Ok(0)
}

fn sim_policy(a: &SimulateArgs) -> Result<PolicySpec, Failure> {
    let kind = match (a.policy, a.battery) {
        (Some(k), _) => k,
        (None, BatteryArg::Zero) => PolicyKind::ZeroBattery,
        (None, BatteryArg::Infinite) => return Err(usage("--policy is required with an infinite battery")),
    };
    let need = |x: Option<f64>, flag: &str| x.ok_or_else(|| usage(format!("--{flag} is required for this policy")));
    Ok(match kind {
        PolicyKind::ZeroBattery => PolicySpec::ZeroBattery {
            p: prob("p", need(a.p, "p")?)?,
        },
        PolicyKind::ZeroWait => PolicySpec::ZeroWait {
            g: prob("g", need(a.g, "g")?)?,
        },
        PolicyKind::Wat => PolicySpec::WaitAndTransmit {
            omega: a.omega.ok_or_else(|| usage("--omega is required for this policy"))?,
            g: prob("g", need(a.g, "g")?)?,
        },
        PolicyKind::Periodic => prob_periodic_policy(positive_q(a.q)?)?,
        PolicyKind::Pmf => PolicySpec::ExplicitPmf {
            pmf: InterUpdatePmf::from_masses(
                a.pmf
                    .clone()
                    .ok_or_else(|| usage("--pmf is required for this policy"))?,
            )?,
        },
    })
}

#[derive(Serialize)]
struct SimPayload {
    #[serde(flatten)]
    stats: SimStats,
    violation_fraction: Option<f64>,
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let config = SimConfig {
        q: prob("q", a.q)?,
        battery: a.battery.into(),
        policy: sim_policy(a)?,
        n_slots: a.n,
        seed: a.seed,
        save_phase_slots: a.save_phase,
        miller_madow: a.miller_madow,
    };
    let stats = match &a.trace {
        Some(path) => {
            let (stats, trace) = simulate_with_trace(&config)?;
            let file = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write_trace_csv(&mut w, &trace)?;
            w.flush()?;
            stats
        }
        None => simulate(&config)?,
    };
    let degenerate = stats.degenerate;
    let payload = SimPayload {
        violation_fraction: (stats.update_count > 0)
            .then(|| stats.battery_violations as f64 / stats.update_count as f64),
        stats,
    };
    if degenerate {
        eprintln!("ehaoi: warning: degenerate run (fewer than two updates); age estimates are absent");
        let reason = Some("fewer than two updates".to_string());
        emit(a, Some(a.seed), Status::Degenerate, reason, Some(payload))?;
        return Ok(1);
    }
    emit(a, Some(a.seed), Status::Ok, None, Some(payload))?;
    Ok(0)
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Minage(a) => cmd_minage(a),
        Command::Capacity(a) => cmd_capacity(a),
        Command::Region(RegionCommand::Amplify(a)) => cmd_amplify(a),
        Command::Region(RegionCommand::Mask(a)) => cmd_mask(a),
        Command::Policy(kind) => cmd_policy(kind),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ehaoi: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("ehaoi: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
