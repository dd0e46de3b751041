//! Rolling-horizon backtest: each day is scheduled with uncertainty built
//! from earlier days only and then evaluated against its realized output.

use super::{compute_reliability, evaluate_day, DayEvaluation, Reliability, DEFAULT_THRESHOLD};
use crate::ccga::{bsuc_solve, ccga_solve, BsucOptions, CcgaOptions, CcgaTrace, OracleMode, Termination};
use crate::error::{Result, UncertaintyError};
use crate::formulation::SolverBackend;
use crate::network::NetworkMatrices;
use crate::schedule::{CommitmentSchedule, CostBreakdown};
use crate::system::SystemModel;
use crate::uncertainty::{
    build_ddus_window, estimate_box_limits, required_days, History, ScenarioSet, ScenarioWindowSpec, Uncertainty,
};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Where the nominal forecast of each day comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "days", rename_all = "snake_case")]
pub enum ForecastSource {
    /// The forecast stored in the instance, reused every day.
    Instance,
    /// Mean of the given number of days before the target day.
    WindowMean(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Ddruc { window: ScenarioWindowSpec },
    Bruc { gamma: f64, lambda: usize, window_days: usize },
    Bsuc(BsucOptions),
}

impl ModelSpec {
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Ddruc { window } => format!("DDRUC({})", window.k),
            ModelSpec::Bruc { gamma, lambda, .. } => format!("BRUC({gamma},{lambda})"),
            ModelSpec::Bsuc(o) => format!("BSUC({})", o.scenario_count),
        }
    }

    /// Days the uncertainty of `target` is built from.
    pub fn uncertainty_days(&self, target: NaiveDate) -> std::result::Result<Vec<NaiveDate>, UncertaintyError> {
        match self {
            ModelSpec::Ddruc { window } => required_days(target, window),
            ModelSpec::Bruc { window_days, .. } => required_days(target, &ScenarioWindowSpec::last(*window_days)),
            ModelSpec::Bsuc(o) => required_days(target, &ScenarioWindowSpec::last(o.fit_window_days)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub model: ModelSpec,
    pub ccga: CcgaOptions,
    pub forecast: ForecastSource,
    pub days: Vec<NaiveDate>,
    pub threshold: f64,
    /// Schedule independent days concurrently (ignored for BSUC, whose
    /// warm start chains consecutive days).
    pub parallel_days: bool,
}

impl BacktestConfig {
    pub fn new(model: ModelSpec, days: Vec<NaiveDate>) -> Self {
        BacktestConfig {
            model,
            ccga: CcgaOptions::default(),
            forecast: ForecastSource::Instance,
            days,
            threshold: DEFAULT_THRESHOLD,
            parallel_days: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "snake_case")]
pub enum DayStatus {
    Solved,
    /// Solved, but some solve stopped at its time limit.
    TimeLimited,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestDay {
    pub date: NaiveDate,
    pub status: DayStatus,
    /// Every historical date read to build the day's uncertainty and forecast.
    pub uncertainty_days: Vec<NaiveDate>,
    pub evaluation: Option<DayEvaluation>,
    pub schedule: Option<CommitmentSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub model: String,
    pub days: Vec<BacktestDay>,
    pub reliability: Reliability,
    /// Averages over successful days.
    pub avg_cost: CostBreakdown,
    pub avg_iterations: f64,
    pub avg_time_s: f64,
    pub max_time_s: f64,
    pub n_failed: usize,
    /// Violation threshold used for LOLP and PWS.
    pub threshold: f64,
}

impl BacktestReport {
    pub fn evaluations(&self) -> Vec<&DayEvaluation> {
        self.days.iter().filter_map(|d| d.evaluation.as_ref()).collect()
    }

    fn assemble(model: String, days: Vec<BacktestDay>, threshold: f64) -> Self {
        let evals: Vec<DayEvaluation> = days.iter().filter_map(|d| d.evaluation.clone()).collect();
        let n = evals.len() as f64;
        let mean = |f: &dyn Fn(&DayEvaluation) -> f64| if evals.is_empty() { 0.0 } else { evals.iter().map(f).sum::<f64>() / n };
        let avg_cost = CostBreakdown {
            total: mean(&|e| e.cost.total),
            production: mean(&|e| e.cost.production),
            reserve: mean(&|e| e.cost.reserve),
            startup_shutdown: mean(&|e| e.cost.startup_shutdown),
        };
        BacktestReport {
            model,
            reliability: compute_reliability(&evals, threshold),
            avg_cost,
            avg_iterations: mean(&|e| e.iterations as f64),
            avg_time_s: mean(&|e| e.solve_time_s),
            max_time_s: evals.iter().map(|e| e.solve_time_s).fold(0.0, f64::max),
            n_failed: days.iter().filter(|d| matches!(d.status, DayStatus::Failed(_))).count(),
            days,
            threshold,
        }
    }

    /// One row per day. Wall-clock times are left out so that reruns give
    /// identical files; see [`BacktestReport::timings_csv`].
    pub fn days_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "date",
            "status",
            "total_cost",
            "production_cost",
            "reserve_cost",
            "startup_shutdown_cost",
            "iterations",
            "shedding_mwh",
            "spillage_mwh",
            "hours",
            "lolp_hours",
            "pws_hours",
            "first_input_day",
            "last_input_day",
            "n_input_days",
        ])
        .expect("in-memory write");
        for d in &self.days {
            let status = match &d.status {
                DayStatus::Solved => "solved",
                DayStatus::TimeLimited => "time_limited",
                DayStatus::Failed(_) => "failed",
            };
            let first = d.uncertainty_days.first().map(|x| x.to_string()).unwrap_or_default();
            let last = d.uncertainty_days.last().map(|x| x.to_string()).unwrap_or_default();
            let mut row = vec![d.date.to_string(), status.to_string()];
            match &d.evaluation {
                Some(e) => row.extend([
                    e.cost.total.to_string(),
                    e.cost.production.to_string(),
                    e.cost.reserve.to_string(),
                    e.cost.startup_shutdown.to_string(),
                    e.iterations.to_string(),
                    e.shedding_total().to_string(),
                    e.spillage_total().to_string(),
                    e.hourly_demand.len().to_string(),
                    e.lolp_hours(self.threshold).to_string(),
                    e.pws_hours(self.threshold).to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 10)),
            }
            row.extend([first, last, d.uncertainty_days.len().to_string()]);
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// One row per evaluated hour.
    pub fn hourly_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["date", "hour", "demand_mw", "available_mw", "shedding_mw", "spillage_mw"]).expect("in-memory write");
        for d in &self.days {
            if let Some(e) = &d.evaluation {
                for h in 0..e.hourly_demand.len() {
                    w.write_record([
                        d.date.to_string(),
                        (h + 1).to_string(),
                        e.hourly_demand[h].to_string(),
                        e.hourly_available[h].to_string(),
                        e.hourly_shedding[h].to_string(),
                        e.hourly_spillage[h].to_string(),
                    ])
                    .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Per-day wall-clock times and failure messages.
    pub fn timings_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["date", "solve_time_s", "message"]).expect("in-memory write");
        for d in &self.days {
            let t = d.evaluation.as_ref().map(|e| e.solve_time_s.to_string()).unwrap_or_default();
            let msg = match &d.status {
                DayStatus::Failed(m) => m.clone(),
                _ => String::new(),
            };
            w.write_record([d.date.to_string(), t, msg]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Hour-by-hour mean of the `n` days before `target`.
pub fn window_mean(history: &History, target: NaiveDate, n: usize) -> Result<Vec<Vec<f64>>> {
    let days = history.collect(&required_days(target, &ScenarioWindowSpec::last(n))?)?;
    let mut mean = vec![vec![0.0; days[0].horizon()]; days[0].n_units()];
    for d in &days {
        for (r, row) in d.values.iter().enumerate() {
            for (h, x) in row.iter().enumerate() {
                mean[r][h] += x / days.len() as f64;
            }
        }
    }
    Ok(mean)
}

/// Schedule of one day and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySolution {
    pub schedule: CommitmentSchedule,
    pub cost: CostBreakdown,
    pub iterations: usize,
    /// A master, oracle or BSUC solve stopped at its time limit.
    pub limited: bool,
    /// CCGA models only.
    pub trace: Option<CcgaTrace>,
    /// Worst-case imbalance of the schedule (CCGA models).
    pub imbalance: Option<f64>,
    /// Mean imbalance over the sampled scenarios (BSUC).
    pub expected_imbalance: Option<f64>,
    /// The DDUS window, for DDRUC.
    pub window: Option<ScenarioSet>,
    pub selected: Vec<String>,
}

/// Schedule `date` with `model`, using only history before it. BRUC always
/// uses the MILP oracle. For BSUC the seed is offset by the date so every
/// day draws its own scenarios, and `warm` is passed as a starting point.
#[allow(clippy::too_many_arguments)]
pub fn solve_day(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    history: &History,
    date: NaiveDate,
    model: &ModelSpec,
    ccga: &CcgaOptions,
    warm: Option<&CommitmentSchedule>,
) -> Result<DaySolution> {
    let (uncertainty, options, window) = match model {
        ModelSpec::Ddruc { window } => {
            let set = build_ddus_window(history, date, window)?;
            (Uncertainty::Scenarios(set.clone()), *ccga, Some(set))
        }
        ModelSpec::Bruc { gamma, lambda, window_days } => {
            let set = estimate_box_limits(history, date, *window_days, Some(&system.nominal_forecast))?.with_budgets(*gamma, *lambda)?;
            (Uncertainty::Budget(set), CcgaOptions { oracle: OracleMode::Milp, ..*ccga }, None)
        }
        ModelSpec::Bsuc(options) => {
            let seed = options.seed.wrapping_add(chrono::Datelike::num_days_from_ce(&date) as u64);
            let day_options = BsucOptions { seed, ..*options };
            let out = bsuc_solve(backend, system, network, history, date, &day_options, &ccga.solver, warm)?;
            return Ok(DaySolution {
                schedule: out.schedule,
                cost: out.cost,
                iterations: 1,
                limited: !out.optimal,
                trace: None,
                imbalance: None,
                expected_imbalance: Some(out.expected_imbalance),
                window: None,
                selected: Vec::new(),
            });
        }
    };
    let out = ccga_solve(backend, system, network, &uncertainty, &options)?;
    Ok(DaySolution {
        iterations: out.n_iterations(),
        limited: out.trace.termination != Termination::Converged,
        cost: out.cost,
        imbalance: Some(out.imbalance),
        expected_imbalance: None,
        selected: out.selected.iter().map(|s| s.label.clone()).collect(),
        trace: Some(out.trace),
        window,
        schedule: out.schedule,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_day(
    backend: &dyn SolverBackend,
    base: &SystemModel,
    network: &NetworkMatrices,
    history: &History,
    date: NaiveDate,
    used: Vec<NaiveDate>,
    config: &BacktestConfig,
    warm: Option<&CommitmentSchedule>,
) -> BacktestDay {
    let started = Instant::now();
    let attempt = || -> Result<(DayEvaluation, CommitmentSchedule, bool)> {
        let system = match config.forecast {
            ForecastSource::Instance => base.clone(),
            ForecastSource::WindowMean(n) => base.with_forecast(window_mean(history, date, n)?),
        };
        let day = solve_day(backend, &system, network, history, date, &config.model, &config.ccga, warm)?;
        let elapsed = started.elapsed().as_secs_f64();
        let realized = history.scenario(date).ok_or_else(|| UncertaintyError::MissingDays(vec![date]))?;
        let mut eval = evaluate_day(backend, &system, network, &day.schedule, &realized)?;
        eval.iterations = day.iterations;
        eval.solve_time_s = elapsed;
        Ok((eval, day.schedule, day.limited))
    };
    match attempt() {
        Ok((eval, schedule, limited)) => BacktestDay {
            date,
            status: if limited { DayStatus::TimeLimited } else { DayStatus::Solved },
            uncertainty_days: used,
            evaluation: Some(eval),
            schedule: Some(schedule),
        },
        Err(e) => BacktestDay { date, status: DayStatus::Failed(e.to_string()), uncertainty_days: used, evaluation: None, schedule: None },
    }
}

/// Schedule and evaluate every day of `config.days`.
///
/// Windows are checked for every day before any solve, so missing history
/// is an error for the whole run. Failures of individual days are recorded
/// in the report and left out of the averages.
pub fn backtest(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    history: &History,
    config: &BacktestConfig,
) -> Result<BacktestReport> {
    let ids: Vec<usize> = system.renewable_units.iter().map(|u| u.id).collect();
    if ids != history.unit_ids {
        return Err(UncertaintyError::InvalidParameter(format!(
            "history units {:?} differ from the instance renewables {:?}",
            history.unit_ids, ids
        ))
        .into());
    }
    let mut plans = Vec::with_capacity(config.days.len());
    for &date in &config.days {
        let mut used = config.model.uncertainty_days(date)?;
        if let ForecastSource::WindowMean(n) = config.forecast {
            used.extend(required_days(date, &ScenarioWindowSpec::last(n))?);
            used.sort();
            used.dedup();
        }
        assert!(used.iter().all(|d| *d < date), "inputs of {date} include the day itself or later days");
        let mut needed = used.clone();
        needed.push(date);
        history.collect(&needed)?;
        plans.push((date, used));
    }
    let days: Vec<BacktestDay> = match (&config.model, config.parallel_days) {
        (ModelSpec::Bsuc(_), _) | (_, false) => {
            let mut out: Vec<BacktestDay> = Vec::with_capacity(plans.len());
            for (date, used) in plans {
                let warm = match config.model {
                    ModelSpec::Bsuc(_) => out.iter().rev().find_map(|d| d.schedule.as_ref()),
                    _ => None,
                };
                let day = run_day(backend, system, network, history, date, used, config, warm);
                out.push(day);
            }
            out
        }
        _ => plans.into_par_iter().map(|(date, used)| run_day(backend, system, network, history, date, used, config, None)).collect(),
    };
    Ok(BacktestReport::assemble(config.model.label(), days, config.threshold))
}
