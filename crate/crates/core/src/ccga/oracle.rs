//! Worst-case imbalance oracles.

use crate::error::{Error, Result, SolverError, UncertaintyError};
use crate::formulation::{build_dual_oracle_milp, build_redispatch_lp, DualBounds, SolveOptions, SolveStatus, SolverBackend};
use crate::network::NetworkMatrices;
use crate::schedule::CommitmentSchedule;
use crate::system::SystemModel;
use crate::uncertainty::{Scenario, ScenarioSet, Uncertainty};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative tolerance for the MILP audit and for tie-breaking.
pub const AUDIT_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Inspection,
    Milp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub worst_case: Scenario,
    /// Position of the worst case in the scenario set, for scenario hulls.
    pub worst_index: Option<usize>,
    /// Φ, total shedding plus spillage in MWh.
    pub imbalance: f64,
    /// Imbalance of every scenario (inspection only).
    pub per_scenario: Option<Vec<f64>>,
    /// False when the MILP stopped at its time limit.
    pub optimal: bool,
}

/// Index of the largest value, preferring the lowest index among near-ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOL * max.abs().max(1.0);
    values.iter().position(|v| *v >= max - tol).unwrap_or(0)
}

/// Imbalance of one realization.
pub fn scenario_imbalance(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    scenario: &Scenario,
) -> Result<f64> {
    let lp = build_redispatch_lp(system, network, schedule, scenario)?;
    let sol = backend
        .solve(&lp.model, &SolveOptions::default())
        .map_err(|source| Error::ScenarioSolve { label: scenario.label.clone(), source })?;
    Ok(sol.objective.max(0.0))
}

/// Solve the redispatch LP of every scenario and return the worst.
///
/// With `parallel` the LPs run on the rayon pool; the reduction runs in
/// scenario order either way, so the result does not depend on scheduling.
pub fn oracle_inspection(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    scenarios: &ScenarioSet,
    parallel: bool,
) -> Result<OracleResult> {
    let eval = |s: &Scenario| scenario_imbalance(backend, system, network, schedule, s);
    let results: Vec<Result<f64>> = if parallel {
        scenarios.scenarios.par_iter().map(eval).collect()
    } else {
        scenarios.scenarios.iter().map(eval).collect()
    };
    let values = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let k = argmax_lowest(&values);
    Ok(OracleResult {
        worst_case: scenarios.scenarios[k].clone(),
        worst_index: Some(k),
        imbalance: values[k],
        per_scenario: Some(values),
        optimal: true,
    })
}

/// Solve the MILP oracle and audit it against the redispatch LP at the
/// recovered worst case. If the audit fails with the configured dual boxes
/// the MILP is rebuilt once with the fallback box.
pub fn oracle_milp(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    uncertainty: &Uncertainty,
    bounds: &DualBounds,
    time_limit_s: f64,
) -> Result<OracleResult> {
    let attempts = [*bounds, bounds.with_box(bounds.fallback.max(bounds.beta).max(bounds.xi))];
    let mut last = (0.0, 0.0);
    for b in &attempts {
        let oracle = build_dual_oracle_milp(system, network, schedule, uncertainty, b)?;
        let options = SolveOptions { relative_gap: 0.0, time_limit_s, ..SolveOptions::default() };
        let sol = backend.solve(&oracle.model, &options)?;
        let worst = oracle
            .worst_case(uncertainty, &sol.values)
            .ok_or(Error::Solver(SolverError::Status("oracle selected no scenario".into())))?;
        let primal = scenario_imbalance(backend, system, network, schedule, &worst)?;
        if (sol.objective - primal).abs() <= AUDIT_TOL * primal.abs().max(1.0) {
            return Ok(OracleResult {
                worst_index: oracle.selected_index(&sol.values),
                worst_case: worst,
                imbalance: primal,
                per_scenario: None,
                optimal: sol.status == SolveStatus::Optimal,
            });
        }
        last = (sol.objective, primal);
    }
    Err(Error::OracleAudit { milp: last.0, primal: last.1 })
}

/// Run the requested oracle on `uncertainty`.
#[allow(clippy::too_many_arguments)]
pub fn run_oracle(
    mode: OracleMode,
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    uncertainty: &Uncertainty,
    bounds: &DualBounds,
    time_limit_s: f64,
) -> Result<OracleResult> {
    match (mode, uncertainty) {
        (OracleMode::Inspection, Uncertainty::Scenarios(set)) => oracle_inspection(backend, system, network, schedule, set, true),
        (OracleMode::Inspection, Uncertainty::Budget(_)) => {
            Err(UncertaintyError::InvalidParameter("the inspection oracle needs a scenario set".into()).into())
        }
        (OracleMode::Milp, _) => oracle_milp(backend, system, network, schedule, uncertainty, bounds, time_limit_s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_the_lowest_index() {
        assert_eq!(argmax_lowest(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax_lowest(&[0.0, 0.0]), 0);
        assert_eq!(argmax_lowest(&[2.0, 2.0 + 1e-12, 1.0]), 0);
        assert_eq!(argmax_lowest(&[2.0, 2.1]), 1);
    }
}
