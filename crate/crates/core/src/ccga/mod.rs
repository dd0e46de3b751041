//! Column-and-constraint generation for the robust day-ahead problem, the
//! extensive-form baseline and the stochastic benchmark.

mod oracle;

pub use oracle::{argmax_lowest, oracle_inspection, oracle_milp, run_oracle, scenario_imbalance, OracleMode, OracleResult, AUDIT_TOL};

use crate::error::{Error, Result, SolverError, UncertaintyError};
use crate::formulation::{build_bsuc, build_master, DualBounds, SolveOptions, SolveStatus, SolverBackend, SolverConfig};
use crate::network::NetworkMatrices;
use crate::schedule::{schedule_cost, CommitmentSchedule, CostBreakdown};
use crate::system::SystemModel;
use crate::uncertainty::{generate_lognormal_scenarios, History, Scenario, Uncertainty};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Absolute slack on the stop test per MWh of total demand.
pub const STOP_SLACK: f64 = 1e-9;

/// Iteration cap for budget sets when none is configured.
pub const BUDGET_ITERATION_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcgaOptions {
    pub solver: SolverConfig,
    pub oracle: OracleMode,
    pub bounds: DualBounds,
    /// Defaults to `2K` for scenario sets and 100 for budget sets.
    pub max_iterations: Option<usize>,
    /// Evaluate inspection LPs on the rayon pool.
    pub parallel: bool,
}

impl Default for CcgaOptions {
    fn default() -> Self {
        CcgaOptions {
            solver: SolverConfig::default(),
            oracle: OracleMode::Inspection,
            bounds: DualBounds::default(),
            max_iterations: None,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub master_objective: f64,
    /// Relative MIP gap reported for the master.
    pub master_gap: f64,
    /// Scenario added after this iteration; `None` on the last one.
    pub selected: Option<String>,
    pub imbalance: f64,
    pub master_time_s: f64,
    pub oracle_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// Converged, but a master or oracle solve stopped at its time limit.
    ConvergedWithIncumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcgaTrace {
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcgaOutcome {
    pub schedule: CommitmentSchedule,
    pub cost: CostBreakdown,
    pub trace: CcgaTrace,
    /// Φ of the returned schedule from the final oracle call.
    pub imbalance: f64,
    pub selected: Vec<Scenario>,
}

impl CcgaOutcome {
    pub fn n_iterations(&self) -> usize {
        self.trace.iterations.len()
    }
}

fn solve_master(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    scenarios: &[Scenario],
    config: &SolverConfig,
    hint: Option<&CommitmentSchedule>,
) -> Result<(CommitmentSchedule, f64, f64, bool)> {
    let master = build_master(system, network, scenarios, config)?;
    let mut options = config.solve_options();
    if let Some(h) = hint {
        options.hint = master.hint_from(h);
    }
    let sol = backend.solve(&master.model, &options).map_err(|e| match e {
        SolverError::Infeasible => Error::MasterInfeasible,
        other => Error::Solver(other),
    })?;
    Ok((master.schedule(&sol), sol.objective, sol.mip_gap, sol.status == SolveStatus::Optimal))
}

/// Alternate master solves over a growing scenario list with worst-case
/// oracle calls until the oracle's imbalance is within ε.
///
/// The stop test is `Φ <= ε + 1e-9 · total demand`; the slack absorbs
/// solver feasibility tolerances when ε is zero.
pub fn ccga_solve(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    uncertainty: &Uncertainty,
    options: &CcgaOptions,
) -> Result<CcgaOutcome> {
    let total = system.total_demand();
    let eps = options.solver.epsilon.resolve(total)?;
    let stop = eps + STOP_SLACK * total;
    let cap = options.max_iterations.unwrap_or(match uncertainty {
        Uncertainty::Scenarios(s) => 2 * s.len(),
        Uncertainty::Budget(_) => BUDGET_ITERATION_CAP,
    });
    if let (OracleMode::Inspection, Uncertainty::Budget(_)) = (options.oracle, uncertainty) {
        return Err(UncertaintyError::InvalidParameter("the inspection oracle needs a scenario set".into()).into());
    }
    let mut selected: Vec<Scenario> = Vec::new();
    let mut records = Vec::new();
    let mut limited = false;
    for iteration in 0..cap {
        let t0 = Instant::now();
        let (schedule, objective, gap, optimal) = solve_master(backend, system, network, &selected, &options.solver, None)?;
        let master_time_s = t0.elapsed().as_secs_f64();
        limited |= !optimal;
        let t1 = Instant::now();
        let result = match (options.oracle, uncertainty) {
            (OracleMode::Inspection, Uncertainty::Scenarios(set)) => {
                oracle_inspection(backend, system, network, &schedule, set, options.parallel)?
            }
            _ => run_oracle(options.oracle, backend, system, network, &schedule, uncertainty, &options.bounds, options.solver.time_limit_s)?,
        };
        let oracle_time_s = t1.elapsed().as_secs_f64();
        limited |= !result.optimal;
        let done = result.imbalance <= stop;
        records.push(IterationRecord {
            iteration,
            master_objective: objective,
            master_gap: gap,
            selected: (!done).then(|| result.worst_case.label.clone()),
            imbalance: result.imbalance,
            master_time_s,
            oracle_time_s,
        });
        if done {
            let cost = schedule_cost(system, &schedule)?;
            return Ok(CcgaOutcome {
                schedule,
                cost,
                trace: CcgaTrace {
                    iterations: records,
                    termination: if limited { Termination::ConvergedWithIncumbent } else { Termination::Converged },
                },
                imbalance: result.imbalance,
                selected,
            });
        }
        if selected.iter().any(|s| s.values == result.worst_case.values) {
            return Err(Error::Reselected(result.worst_case.label));
        }
        selected.push(result.worst_case);
    }
    Err(Error::IterationCap(cap))
}

/// Master with every scenario at once. Fails with `CapExceeded` above `cap` scenarios.
pub fn extensive_form_solve(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    scenarios: &[Scenario],
    config: &SolverConfig,
    cap: usize,
) -> Result<(CommitmentSchedule, CostBreakdown)> {
    if scenarios.len() > cap {
        return Err(UncertaintyError::CapExceeded { size: scenarios.len(), cap }.into());
    }
    let (schedule, _, _, _) = solve_master(backend, system, network, scenarios, config, None)?;
    let cost = schedule_cost(system, &schedule)?;
    Ok((schedule, cost))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsucOptions {
    pub scenario_count: usize,
    /// $/MWh.
    pub imbalance_cost: f64,
    pub fit_window_days: usize,
    pub seed: u64,
}

impl Default for BsucOptions {
    fn default() -> Self {
        BsucOptions { scenario_count: 500, imbalance_cost: 500.0, fit_window_days: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsucOutcome {
    pub schedule: CommitmentSchedule,
    pub cost: CostBreakdown,
    /// Mean imbalance over the sampled scenarios in MWh.
    pub expected_imbalance: f64,
    pub objective: f64,
    pub optimal: bool,
}

/// Stochastic benchmark for `target`: lognormal scenarios fitted on the days
/// before it, imbalance priced in the objective. `warm_start` is passed as a
/// starting point only.
#[allow(clippy::too_many_arguments)]
pub fn bsuc_solve(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    history: &History,
    target: NaiveDate,
    options: &BsucOptions,
    config: &SolverConfig,
    warm_start: Option<&CommitmentSchedule>,
) -> Result<BsucOutcome> {
    let set = generate_lognormal_scenarios(history, target, options.fit_window_days, options.scenario_count, options.seed)?;
    bsuc_solve_scenarios(backend, system, network, &set.scenarios, options.imbalance_cost, config, warm_start)
}

/// BSUC on a given scenario list.
pub fn bsuc_solve_scenarios(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    scenarios: &[Scenario],
    imbalance_cost: f64,
    config: &SolverConfig,
    warm_start: Option<&CommitmentSchedule>,
) -> Result<BsucOutcome> {
    let model = build_bsuc(system, network, scenarios, imbalance_cost)?;
    let mut solve_options: SolveOptions = config.solve_options();
    if let Some(w) = warm_start {
        if w.check_dimensions(system).is_ok() {
            solve_options.hint = model.hint_from(w);
        }
    }
    let sol = backend.solve(&model.model, &solve_options).map_err(|e| match e {
        SolverError::Infeasible => Error::MasterInfeasible,
        other => Error::Solver(other),
    })?;
    let schedule = model.schedule(&sol);
    let cost = schedule_cost(system, &schedule)?;
    let expected_imbalance = (0..model.n_copies()).map(|k| model.copy_outcome(k, &sol).imbalance).sum::<f64>() / scenarios.len() as f64;
    Ok(BsucOutcome { schedule, cost, expected_imbalance, objective: sol.objective, optimal: sol.status == SolveStatus::Optimal })
}
