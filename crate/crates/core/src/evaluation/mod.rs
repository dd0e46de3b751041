//! Out-of-sample evaluation: per-hour redispatch of a fixed schedule against
//! the realized renewable output, reliability metrics and the rolling backtest.

mod backtest;
mod plots;

pub use backtest::{
    backtest, solve_day, window_mean, BacktestConfig, BacktestDay, BacktestReport, DaySolution, DayStatus, ForecastSource, ModelSpec,
};
pub use plots::{cost_vs_lolp_csv, reserve_cost_csv, scenario_projection_csv, selected_scenarios_csv, CostLolpPoint};

use crate::error::{Error, Result};
use crate::formulation::{build_single_period_redispatch, SolveOptions, SolverBackend};
use crate::network::NetworkMatrices;
use crate::schedule::{schedule_cost, CommitmentSchedule, CostBreakdown};
use crate::system::SystemModel;
use crate::uncertainty::Scenario;
use serde::{Deserialize, Serialize};

/// Default violation threshold: 0.1% of the hour's demand or available output.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// System totals per hour for one evaluated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayEvaluation {
    pub day: String,
    pub hourly_shedding: Vec<f64>,
    pub hourly_spillage: Vec<f64>,
    pub hourly_available: Vec<f64>,
    pub hourly_demand: Vec<f64>,
    pub cost: CostBreakdown,
    pub iterations: usize,
    pub solve_time_s: f64,
}

impl DayEvaluation {
    pub fn shedding_total(&self) -> f64 {
        self.hourly_shedding.iter().sum()
    }

    pub fn spillage_total(&self) -> f64 {
        self.hourly_spillage.iter().sum()
    }

    /// Hours with shedding above `threshold` times the hour's demand.
    pub fn lolp_hours(&self, threshold: f64) -> usize {
        self.hourly_shedding.iter().zip(&self.hourly_demand).filter(|(s, d)| **s > threshold * **d).count()
    }

    /// Hours with spillage above `threshold` times the available output.
    /// Hours with nothing available never count.
    pub fn pws_hours(&self, threshold: f64) -> usize {
        self.hourly_spillage.iter().zip(&self.hourly_available).filter(|(s, a)| **a > 0.0 && **s > threshold * **a).count()
    }
}

/// Redispatch `schedule` hour by hour against `realized`, without ramp
/// coupling between hours.
pub fn evaluate_day(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    realized: &Scenario,
) -> Result<DayEvaluation> {
    let cost = schedule_cost(system, schedule)?;
    let mut eval = DayEvaluation {
        day: realized.label.clone(),
        hourly_shedding: Vec::with_capacity(system.horizon),
        hourly_spillage: Vec::with_capacity(system.horizon),
        hourly_available: realized.hourly_total(),
        hourly_demand: (0..system.horizon).map(|h| system.hourly_demand(h)).collect(),
        cost,
        iterations: 0,
        solve_time_s: 0.0,
    };
    for hour in 0..system.horizon {
        let lp = build_single_period_redispatch(system, network, schedule, realized, hour)?;
        let sol = backend.solve(&lp.model, &SolveOptions::default()).map_err(|source| Error::HourSolve { hour: hour + 1, source })?;
        let out = lp.outcome(&sol);
        eval.hourly_shedding.push(out.shedding[0].iter().sum());
        eval.hourly_spillage.push(out.spillage[0].iter().sum());
    }
    Ok(eval)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    pub lolp: f64,
    pub pws: f64,
    pub hours: usize,
    pub lolp_hours: usize,
    pub pws_hours: usize,
}

/// LOLP and PWS over all hours of `evals`.
pub fn compute_reliability(evals: &[DayEvaluation], threshold: f64) -> Reliability {
    let hours: usize = evals.iter().map(|e| e.hourly_demand.len()).sum();
    let lolp_hours: usize = evals.iter().map(|e| e.lolp_hours(threshold)).sum();
    let pws_hours: usize = evals.iter().map(|e| e.pws_hours(threshold)).sum();
    let frac = |n: usize| if hours == 0 { 0.0 } else { n as f64 / hours as f64 };
    Reliability { lolp: frac(lolp_hours), pws: frac(pws_hours), hours, lolp_hours, pws_hours }
}
