use clap::{Args, Parser, Subcommand};
use ddruc::ccga::{oracle_inspection, oracle_milp, CcgaTrace, OracleMode};
use ddruc::config::{ForecastKind, ModelKind, RunConfig};
use ddruc::evaluation::{
    backtest, cost_vs_lolp_csv, reserve_cost_csv, scenario_projection_csv, selected_scenarios_csv, window_mean, BacktestReport,
    CostLolpPoint,
};
use ddruc::formulation::{Epsilon, HighsBackend};
use ddruc::io::{parse_history, parse_instance, write_atomic};
use ddruc::network::default_network;
use ddruc::schedule::{validate_schedule, CommitmentSchedule, CostBreakdown};
use ddruc::uncertainty::{
    build_ddus_window, generate_lognormal_scenarios, History, ScenarioSet, ScenarioWindowSpec, Uncertainty,
};
use ddruc::Error;
use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "ddruc", version, about = "Robust day-ahead unit commitment with data-driven uncertainty sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and, optionally, a history file against it.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Schedule one day and write schedule.json and trace.csv.
    SolveDay {
        #[arg(long)]
        date: NaiveDate,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rolling-horizon backtest over a date range.
    Backtest {
        #[arg(long)]
        start: Option<NaiveDate>,
        #[arg(long)]
        end: Option<NaiveDate>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run both oracles on a stored schedule and compare them.
    OracleCheck {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        date: NaiveDate,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sample lognormal scenarios fitted on the days before a date.
    GenScenarios {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        date: NaiveDate,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write plot-data CSVs from stored backtest and solve-day outputs.
    Report {
        /// Output directories of earlier runs.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Two 1-based hours for the scenario projection.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        hours: Option<Vec<usize>>,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["ddruc", "bruc", "bsuc"])]
    model: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long, value_parser = ["inspection", "milp"])]
    oracle: Option<String>,
    /// Imbalance tolerance as a fraction of total demand.
    #[arg(long, conflicts_with = "epsilon_mwh")]
    epsilon_fraction: Option<f64>,
    /// Imbalance tolerance in MWh.
    #[arg(long)]
    epsilon_mwh: Option<f64>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Worker threads for independent solves (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["instance", "window_mean"])]
    forecast: Option<String>,
}

enum Failure {
    Usage(String),
    Data(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { instance, history } => validate(&instance, history.as_deref()),
        Command::SolveDay { date, run } => solve_day(date, &run),
        Command::Backtest { start, end, run } => run_backtest(start, end, &run),
        Command::OracleCheck { schedule, date, run } => oracle_check(&schedule, date, &run),
        Command::GenScenarios { history, date, count, window, seed, out } => gen_scenarios(&history, date, count, window, seed, &out),
        Command::Report { input, out, hours } => report(&input, &out, hours),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("data error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver error: {m}");
            ExitCode::from(4)
        }
    }
}

fn load_config(run: &RunArgs) -> CliResult<RunConfig> {
    let mut c = match &run.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = &run.model {
        c.model = match m.as_str() {
            "bruc" => ModelKind::Bruc,
            "bsuc" => ModelKind::Bsuc,
            _ => ModelKind::Ddruc,
        };
    }
    if let Some(o) = &run.oracle {
        c.oracle = if o == "milp" { OracleMode::Milp } else { OracleMode::Inspection };
    }
    if let Some(f) = &run.forecast {
        c.forecast = if f == "window_mean" { ForecastKind::WindowMean } else { ForecastKind::Instance };
    }
    if let Some(k) = run.k {
        c.k = k;
    }
    if let Some(g) = run.gamma {
        c.gamma = g;
    }
    if let Some(l) = run.lambda {
        c.lambda = Some(l);
    }
    if let Some(x) = run.epsilon_fraction {
        c.epsilon = Epsilon::FractionOfDemand(x);
    }
    if let Some(x) = run.epsilon_mwh {
        c.epsilon = Epsilon::Absolute(x);
    }
    if let Some(g) = run.gap {
        c.solver.relative_gap = g;
    }
    if let Some(t) = run.time_limit {
        c.solver.time_limit_s = t;
    }
    if let Some(t) = run.threads {
        c.solver.threads = t;
    }
    if run.seed.is_some() {
        c.seed = run.seed;
    }
    if run.instance.is_some() {
        c.paths.instance = run.instance.clone();
    }
    if run.history.is_some() {
        c.paths.history = run.history.clone();
    }
    if run.out.is_some() {
        c.paths.output = run.out.clone();
    }
    c.check().map_err(|e| Failure::Usage(e.to_string()))?;
    // each HiGHS instance is single-threaded; the pool runs independent solves
    let _ = rayon::ThreadPoolBuilder::new().num_threads(c.solver.threads).build_global();
    Ok(c)
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    p.as_deref().ok_or_else(|| Failure::Usage(format!("missing --{what} (or paths.{what} in the config)")))
}

fn load_data(c: &RunConfig) -> CliResult<(ddruc::system::SystemModel, History)> {
    let system = parse_instance(required(&c.paths.instance, "instance")?)?;
    let history = parse_history(required(&c.paths.history, "history")?, Some(system.horizon))?;
    Ok((system, history))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

fn validate(instance: &Path, history: Option<&Path>) -> CliResult {
    let system = parse_instance(instance)?;
    println!(
        "instance ok: {} buses, {} lines, {} thermal, {} renewable, {} hours",
        system.n_buses(),
        system.n_lines(),
        system.n_thermal(),
        system.n_renewable(),
        system.horizon
    );
    if let Some(h) = history {
        let hist = parse_history(h, Some(system.horizon))?;
        let ids: Vec<usize> = system.renewable_units.iter().map(|u| u.id).collect();
        if hist.unit_ids != ids {
            return Err(Failure::Data(format!("history units {:?} differ from instance renewables {:?}", hist.unit_ids, ids)));
        }
        println!(
            "history ok: {} days from {} to {}",
            hist.days.len(),
            hist.first_day().map(|d| d.to_string()).unwrap_or_default(),
            hist.last_day().map(|d| d.to_string()).unwrap_or_default()
        );
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    schema_version: u32,
    date: NaiveDate,
    model: String,
    schedule: CommitmentSchedule,
    cost: CostBreakdown,
    /// Worst-case imbalance certified at the end of CCGA (robust models).
    imbalance: Option<f64>,
    /// Expected imbalance over the sampled scenarios (BSUC).
    expected_imbalance: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct WindowFile {
    schema_version: u32,
    scenarios: ScenarioSet,
    selected: Vec<String>,
}

fn trace_csv(trace: &CcgaTrace) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "master_objective", "master_gap", "selected", "imbalance", "master_time_s", "oracle_time_s"])
        .expect("in-memory write");
    for r in &trace.iterations {
        w.write_record([
            r.iteration.to_string(),
            r.master_objective.to_string(),
            r.master_gap.to_string(),
            r.selected.clone().unwrap_or_default(),
            r.imbalance.to_string(),
            r.master_time_s.to_string(),
            r.oracle_time_s.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn solve_day(date: NaiveDate, run: &RunArgs) -> CliResult {
    let c = load_config(run)?;
    let out = required(&c.paths.output, "out")?.to_path_buf();
    let (base, history) = load_data(&c)?;
    let system = match c.forecast {
        ForecastKind::Instance => base,
        ForecastKind::WindowMean => base.with_forecast(window_mean(&history, date, c.forecast_window_days)?),
    };
    let network = default_network(&system).map_err(Error::from)?;
    let model = c.model_spec(system.horizon);
    let day = ddruc::evaluation::solve_day(&HighsBackend, &system, &network, &history, date, &model, &c.ccga_options(), None)?;
    if let Some(trace) = &day.trace {
        write_atomic(&out.join("trace.csv"), &trace_csv(trace))?;
        println!("converged in {} iterations, worst-case imbalance {} MWh", day.iterations, day.imbalance.unwrap_or(0.0));
    }
    if let Some(set) = day.window {
        let wf = WindowFile { schema_version: SCHEMA_VERSION, scenarios: set, selected: day.selected.clone() };
        write_atomic(&out.join("window.json"), &to_json(&wf))?;
    }
    let violations = validate_schedule(&system, &network, &day.schedule, 1e-6).map_err(Error::from)?;
    if !violations.is_empty() {
        return Err(Failure::Solver(format!("schedule violates {} constraint(s), first: {}", violations.len(), violations[0])));
    }
    let file = ScheduleFile {
        schema_version: SCHEMA_VERSION,
        date,
        model: model.label(),
        schedule: day.schedule,
        cost: day.cost,
        imbalance: day.imbalance,
        expected_imbalance: day.expected_imbalance,
    };
    println!("total cost {:.2}", file.cost.total);
    write_atomic(&out.join("schedule.json"), &to_json(&file))?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    model: String,
    lolp: f64,
    pws: f64,
    avg_cost: f64,
    avg_iterations: f64,
    avg_time_s: f64,
    max_time_s: f64,
    days: usize,
    failed_days: usize,
}

fn run_backtest(start: Option<NaiveDate>, end: Option<NaiveDate>, run: &RunArgs) -> CliResult {
    let c = load_config(run)?;
    let out = required(&c.paths.output, "out")?.to_path_buf();
    let start = start.or(c.start).ok_or_else(|| Failure::Usage("missing --start".into()))?;
    let end = end.or(c.end).ok_or_else(|| Failure::Usage("missing --end".into()))?;
    if end < start {
        return Err(Failure::Usage("--end is before --start".into()));
    }
    let (system, history) = load_data(&c)?;
    let network = default_network(&system).map_err(Error::from)?;
    let mut days = Vec::new();
    let mut d = start;
    while d <= end {
        days.push(d);
        d = d + Days::new(1);
    }
    let config = c.backtest_config(system.horizon, days);
    let report = backtest(&HighsBackend, &system, &network, &history, &config)?;
    for day in &report.days {
        if let Some(s) = &day.schedule {
            let file = ScheduleFile {
                schema_version: SCHEMA_VERSION,
                date: day.date,
                model: report.model.clone(),
                schedule: s.clone(),
                cost: day.evaluation.as_ref().map(|e| e.cost).unwrap_or_default(),
                imbalance: None,
                expected_imbalance: None,
            };
            write_atomic(&out.join("days").join(format!("{}.json", day.date)), &to_json(&file))?;
        }
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        model: report.model.clone(),
        lolp: report.reliability.lolp,
        pws: report.reliability.pws,
        avg_cost: report.avg_cost.total,
        avg_iterations: report.avg_iterations,
        avg_time_s: report.avg_time_s,
        max_time_s: report.max_time_s,
        days: report.days.len(),
        failed_days: report.n_failed,
    };
    write_atomic(&out.join("report.csv"), report.days_csv().as_bytes())?;
    write_atomic(&out.join("hourly.csv"), report.hourly_csv().as_bytes())?;
    write_atomic(&out.join("timings.csv"), report.timings_csv().as_bytes())?;
    write_atomic(&out.join("report.json"), &to_json(&report))?;
    write_atomic(&out.join("summary.json"), &to_json(&summary))?;
    println!(
        "{}: {} days ({} failed), LOLP {:.4}%, PWS {:.4}%, average cost {:.2}",
        report.model,
        report.days.len(),
        report.n_failed,
        100.0 * report.reliability.lolp,
        100.0 * report.reliability.pws,
        report.avg_cost.total
    );
    Ok(())
}

fn oracle_check(schedule: &Path, date: NaiveDate, run: &RunArgs) -> CliResult {
    let c = load_config(run)?;
    let (system, history) = load_data(&c)?;
    let network = default_network(&system).map_err(Error::from)?;
    let text = std::fs::read_to_string(schedule)?;
    let file: ScheduleFile = serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", schedule.display())))?;
    file.schedule.check_dimensions(&system).map_err(Error::from)?;
    let window = ScenarioWindowSpec { k: c.k, augment_prior_year: c.prior_year };
    let set = build_ddus_window(&history, date, &window).map_err(Error::from)?;
    let backend = HighsBackend;
    let insp = oracle_inspection(&backend, &system, &network, &file.schedule, &set, true)?;
    let milp = oracle_milp(&backend, &system, &network, &file.schedule, &Uncertainty::Scenarios(set), &c.dual_bounds, c.solver.time_limit_s)?;
    let diff = (insp.imbalance - milp.imbalance).abs();
    let rel = diff / insp.imbalance.abs().max(1.0);
    println!("inspection: {} MWh at {}", insp.imbalance, insp.worst_case.label);
    println!("milp:       {} MWh at {}", milp.imbalance, milp.worst_case.label);
    if rel <= ddruc::ccga::AUDIT_TOL {
        println!("agreement within {:e} (relative difference {rel:e})", ddruc::ccga::AUDIT_TOL);
        Ok(())
    } else {
        Err(Failure::Solver(format!("oracles disagree: relative difference {rel:e}")))
    }
}

fn gen_scenarios(history: &Path, date: NaiveDate, count: usize, window: usize, seed: u64, out: &Path) -> CliResult {
    let hist = parse_history(history, None)?;
    let set = generate_lognormal_scenarios(&hist, date, window, count, seed).map_err(Error::from)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["scenario".to_string(), "hour".to_string()];
    header.extend(hist.unit_ids.iter().map(|id| format!("unit_{id}")));
    w.write_record(&header).expect("in-memory write");
    for s in &set.scenarios {
        for h in 0..s.horizon() {
            let mut row = vec![s.label.clone(), (h + 1).to_string()];
            row.extend(s.values.iter().map(|u| u[h].to_string()));
            w.write_record(&row).expect("in-memory write");
        }
    }
    write_atomic(out, &w.into_inner().expect("in-memory flush"))?;
    println!("wrote {count} scenarios to {}", out.display());
    Ok(())
}

fn report(inputs: &[PathBuf], out: &Path, hours: Option<Vec<usize>>) -> CliResult {
    let mut points = Vec::new();
    let mut wrote = 0;
    for dir in inputs {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        let report_path = dir.join("report.json");
        if report_path.exists() {
            let report: BacktestReport = serde_json::from_str(&std::fs::read_to_string(&report_path)?)
                .map_err(|e| Failure::Data(format!("{}: {e}", report_path.display())))?;
            write_atomic(&out.join(format!("{name}_reserve_cost.csv")), reserve_cost_csv(&report).as_bytes())?;
            points.push(CostLolpPoint::from(&report));
            wrote += 1;
        }
        let window_path = dir.join("window.json");
        if window_path.exists() {
            let wf: WindowFile = serde_json::from_str(&std::fs::read_to_string(&window_path)?)
                .map_err(|e| Failure::Data(format!("{}: {e}", window_path.display())))?;
            write_atomic(&out.join(format!("{name}_selected.csv")), selected_scenarios_csv(&wf.scenarios, &wf.selected).as_bytes())?;
            let h = wf.scenarios.scenarios[0].horizon();
            let (a, b) = match &hours {
                Some(v) => (v[0], v[1]),
                None => (1, h),
            };
            if a == 0 || b == 0 || a > h || b > h {
                return Err(Failure::Usage(format!("--hours must lie in 1..={h}")));
            }
            write_atomic(&out.join(format!("{name}_projection.csv")), scenario_projection_csv(&wf.scenarios, a - 1, b - 1).as_bytes())?;
            wrote += 1;
        }
    }
    if wrote == 0 {
        return Err(Failure::Data("no report.json or window.json found in the inputs".into()));
    }
    if !points.is_empty() {
        write_atomic(&out.join("cost_vs_lolp.csv"), cost_vs_lolp_csv(&points).as_bytes())?;
    }
    println!("plot data written to {}", out.display());
    Ok(())
}
