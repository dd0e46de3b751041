//! Third-level redispatch: minimum total shedding plus spillage for a fixed
//! schedule under one renewable realization.

use super::blocks::{add_redispatch_block, check_profile, FirstLevel, RedispatchVars};
use super::model::{ObjectiveSense, OptimizationModel};
use super::solver::{SolveOptions, Solution, SolverBackend};
use crate::error::{ModelError, SolverError};
use crate::network::NetworkMatrices;
use crate::schedule::{CommitmentSchedule, RedispatchOutcome};
use crate::system::SystemModel;
use crate::uncertainty::Scenario;

/// A redispatch LP together with the handles needed to read its solution.
#[derive(Debug, Clone)]
pub struct RedispatchModel {
    pub model: OptimizationModel,
    vars: RedispatchVars,
}

impl RedispatchModel {
    /// Hours covered, 0-based.
    pub fn hours(&self) -> &[usize] {
        &self.vars.hours
    }

    pub fn outcome(&self, solution: &Solution) -> RedispatchOutcome {
        self.vars.outcome(&solution.values)
    }
}

fn build(
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    scenario: &Scenario,
    hours: &[usize],
    ramps: bool,
) -> Result<RedispatchModel, ModelError> {
    schedule.check_dimensions(system)?;
    check_profile(system, &scenario.values, "scenario")?;
    let mut model = OptimizationModel::new("redispatch", ObjectiveSense::Minimize);
    let vars = add_redispatch_block(&mut model, system, network, &FirstLevel::fixed(schedule), &scenario.values, hours, ramps, "");
    model.add_objective(&vars.imbalance());
    Ok(RedispatchModel { model, vars })
}

/// Multi-period redispatch LP with ramp envelopes from the fixed statuses.
pub fn build_redispatch_lp(
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    scenario: &Scenario,
) -> Result<RedispatchModel, ModelError> {
    let hours: Vec<usize> = (0..system.horizon).collect();
    build(system, network, schedule, scenario, &hours, true)
}

/// Redispatch LP for one hour, without ramp constraints.
pub fn build_single_period_redispatch(
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    scenario: &Scenario,
    hour: usize,
) -> Result<RedispatchModel, ModelError> {
    if hour >= system.horizon {
        return Err(ModelError::HourOutOfRange { hour, horizon: system.horizon });
    }
    build(system, network, schedule, scenario, &[hour], false)
}

/// Build and solve the multi-period redispatch LP.
pub fn solve_redispatch(
    backend: &dyn SolverBackend,
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    scenario: &Scenario,
) -> crate::Result<RedispatchOutcome> {
    let lp = build_redispatch_lp(system, network, schedule, scenario)?;
    let sol = backend
        .solve(&lp.model, &SolveOptions::default())
        .map_err(|source: SolverError| crate::Error::ScenarioSolve { label: scenario.label.clone(), source })?;
    Ok(lp.outcome(&sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::HighsBackend;
    use crate::network::default_network;
    use crate::system::tests::one_bus_system;
    use crate::system::{Bus, TransmissionLine};

    fn schedule_for(system: &SystemModel, g: f64, rup: f64, rdn: f64) -> CommitmentSchedule {
        let mut s = CommitmentSchedule::zeros(1, system.n_lines(), system.n_buses(), system.horizon);
        s.on_off[0] = vec![true; system.horizon];
        s.generation[0] = vec![g; system.horizon];
        s.reserve_up[0] = vec![rup; system.horizon];
        s.reserve_down[0] = vec![rdn; system.horizon];
        s
    }

    fn solve(system: &SystemModel, schedule: &CommitmentSchedule, u: Vec<Vec<f64>>) -> RedispatchOutcome {
        let net = default_network(system).unwrap();
        solve_redispatch(&HighsBackend, system, &net, schedule, &Scenario::new("s", u)).unwrap()
    }

    #[test]
    fn forecast_realization_needs_no_correction() {
        let sys = one_bus_system();
        let out = solve(&sys, &schedule_for(&sys, 80.0, 0.0, 0.0), vec![vec![20.0]]);
        assert_eq!(out.imbalance, 0.0);
    }

    #[test]
    fn shortfall_beyond_reserve_is_shed() {
        let sys = one_bus_system();
        // forecast 20, realization 0, reserve up 5: 15 MW shed
        let out = solve(&sys, &schedule_for(&sys, 80.0, 5.0, 0.0), vec![vec![0.0]]);
        assert!((out.imbalance - 15.0).abs() < 1e-7);
        assert!((out.shedding[0][0] - 15.0).abs() < 1e-7);
    }

    #[test]
    fn stranded_surplus_is_spilled() {
        // renewables at bus 2 export over a 10 MW line; 10 MW extra cannot leave
        let mut sys = one_bus_system();
        sys.buses.push(Bus { id: 2, demand: vec![0.0] });
        sys.lines.push(TransmissionLine { id: 1, from_bus: 2, to_bus: 1, susceptance: 5.0, capacity: 10.0 });
        sys.renewable_units[0].bus = 2;
        sys.nominal_forecast = vec![vec![10.0]];
        let sched = schedule_for(&sys, 90.0, 0.0, 0.0);
        let out = solve(&sys, &sched, vec![vec![20.0]]);
        assert!((out.imbalance - 10.0).abs() < 1e-7);
        assert!((out.spillage[0][1] - 10.0).abs() < 1e-7);
    }

    #[test]
    fn nothing_committed_and_no_renewables_sheds_all_demand() {
        let mut sys = one_bus_system();
        sys.thermal_units[0].init_status = -1;
        sys.thermal_units[0].init_output = 0.0;
        let mut sched = schedule_for(&sys, 0.0, 0.0, 0.0);
        sched.on_off[0][0] = false;
        let out = solve(&sys, &sched, vec![vec![0.0]]);
        assert!((out.imbalance - 100.0).abs() < 1e-7);
    }

    #[test]
    fn single_period_matches_hand_computation() {
        let mut sys = one_bus_system();
        sys.horizon = 2;
        sys.buses[0].demand = vec![100.0, 100.0];
        sys.nominal_forecast = vec![vec![20.0, 20.0]];
        let sched = schedule_for(&sys, 80.0, 4.0, 0.0);
        let net = default_network(&sys).unwrap();
        let sc = Scenario::new("s", vec![vec![20.0, 8.0]]);
        let lp = build_single_period_redispatch(&sys, &net, &sched, &sc, 1).unwrap();
        let sol = HighsBackend.solve(&lp.model, &SolveOptions::default()).unwrap();
        assert!((sol.objective - 8.0).abs() < 1e-7);
        assert_eq!(lp.outcome(&sol).shedding.len(), 1);
        assert!(build_single_period_redispatch(&sys, &net, &sched, &sc, 2).is_err());
    }

    #[test]
    fn single_period_sum_equals_multi_period_without_binding_ramps() {
        let mut sys = one_bus_system();
        sys.horizon = 3;
        sys.buses[0].demand = vec![100.0, 110.0, 90.0];
        sys.nominal_forecast = vec![vec![20.0, 20.0, 20.0]];
        let mut sched = schedule_for(&sys, 80.0, 5.0, 5.0);
        sched.generation[0] = vec![80.0, 90.0, 70.0];
        let net = default_network(&sys).unwrap();
        let sc = Scenario::new("s", vec![vec![0.0, 40.0, 10.0]]);
        let full = HighsBackend.solve(&build_redispatch_lp(&sys, &net, &sched, &sc).unwrap().model, &SolveOptions::default()).unwrap();
        let mut sum = 0.0;
        for h in 0..3 {
            let lp = build_single_period_redispatch(&sys, &net, &sched, &sc, h).unwrap();
            sum += HighsBackend.solve(&lp.model, &SolveOptions::default()).unwrap().objective;
        }
        // 15 shed, 15 spilled, 5 shed
        assert!((full.objective - 35.0).abs() < 1e-7);
        assert!((sum - full.objective).abs() < 1e-7);
    }

    #[test]
    fn wrong_scenario_shape_is_rejected() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let sched = schedule_for(&sys, 80.0, 0.0, 0.0);
        let err = build_redispatch_lp(&sys, &net, &sched, &Scenario::new("s", vec![vec![1.0, 2.0]])).unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { .. }));
    }
}
