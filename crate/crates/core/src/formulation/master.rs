//! CCGA master problem and the stochastic (BSUC) extensive form.

use super::blocks::{add_first_level, add_redispatch_block, check_profile, FirstLevelVars, RedispatchVars};
use super::model::{LinExpr, ObjectiveSense, OptimizationModel};
use super::solver::{Solution, SolverConfig};
use crate::error::ModelError;
use crate::network::NetworkMatrices;
use crate::schedule::{CommitmentSchedule, RedispatchOutcome};
use crate::system::SystemModel;
use crate::uncertainty::Scenario;

/// A master or BSUC model with handles to its first-level variables and
/// scenario copies.
#[derive(Debug, Clone)]
pub struct MasterModel {
    pub model: OptimizationModel,
    first: FirstLevelVars,
    copies: Vec<RedispatchVars>,
}

impl MasterModel {
    pub fn schedule(&self, solution: &Solution) -> CommitmentSchedule {
        self.first.schedule(&solution.values)
    }

    pub fn n_copies(&self) -> usize {
        self.copies.len()
    }

    /// Redispatch of scenario copy `k` in the solution.
    pub fn copy_outcome(&self, k: usize, solution: &Solution) -> RedispatchOutcome {
        self.copies[k].outcome(&solution.values)
    }

    /// First-level part of the objective at `solution` (excludes imbalance penalties).
    pub fn first_level_cost(&self, system: &SystemModel, solution: &Solution) -> f64 {
        self.first.cost(system).evaluate(&solution.values)
    }

    /// Starting point fixing statuses and reserves to those of `schedule`.
    pub fn hint_from(&self, schedule: &CommitmentSchedule) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.first.on.iter().enumerate() {
            for (h, v) in row.iter().enumerate() {
                out.push((v.0, if schedule.on_off[i][h] { 1.0 } else { 0.0 }));
                out.push((self.first.reserve_up[i][h].0, schedule.reserve_up[i][h]));
                out.push((self.first.reserve_down[i][h].0, schedule.reserve_down[i][h]));
            }
        }
        out
    }
}

enum Imbalance {
    Cap(f64),
    Penalty(f64),
}

fn build(
    name: &str,
    system: &SystemModel,
    network: &NetworkMatrices,
    scenarios: &[Scenario],
    imbalance: Imbalance,
) -> Result<MasterModel, ModelError> {
    check_profile(system, &system.nominal_forecast, "forecast")?;
    for s in scenarios {
        check_profile(system, &s.values, "scenario")?;
    }
    let mut model = OptimizationModel::new(name, ObjectiveSense::Minimize);
    let first = add_first_level(&mut model, system, network);
    model.add_objective(&first.cost(system));
    let terms = first.terms();
    let hours: Vec<usize> = (0..system.horizon).collect();
    let mut copies = Vec::with_capacity(scenarios.len());
    let mut penalty = LinExpr::default();
    for (k, s) in scenarios.iter().enumerate() {
        let tag = format!("s{k}");
        let vars = add_redispatch_block(&mut model, system, network, &terms, &s.values, &hours, true, &tag);
        match imbalance {
            Imbalance::Cap(eps) => {
                model.le(format!("cap[{tag}]"), vars.imbalance(), eps);
            }
            Imbalance::Penalty(cost) => {
                penalty.add_scaled(&vars.imbalance(), cost / scenarios.len() as f64);
            }
        }
        copies.push(vars);
    }
    model.add_objective(&penalty);
    Ok(MasterModel { model, first, copies })
}

/// Master over the selected scenarios: first-level constraints plus one
/// redispatch copy per scenario with total imbalance at most ε.
pub fn build_master(
    system: &SystemModel,
    network: &NetworkMatrices,
    scenarios: &[Scenario],
    config: &SolverConfig,
) -> Result<MasterModel, ModelError> {
    let eps = config.epsilon.resolve(system.total_demand())?;
    build("master", system, network, scenarios, Imbalance::Cap(eps))
}

/// Extensive-form stochastic UC: the master objective plus the mean
/// imbalance over `scenarios` priced at `imbalance_cost` per MWh, no cap.
pub fn build_bsuc(
    system: &SystemModel,
    network: &NetworkMatrices,
    scenarios: &[Scenario],
    imbalance_cost: f64,
) -> Result<MasterModel, ModelError> {
    if scenarios.is_empty() {
        return Err(ModelError::EmptyUncertainty);
    }
    build("bsuc", system, network, scenarios, Imbalance::Penalty(imbalance_cost))
}

/// Closed-form size of a master model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasterCensus {
    pub variables: usize,
    pub binaries: usize,
    pub constraints: usize,
}

/// Size of `build_master` on these inputs.
///
/// With `G` thermal units, `L` lines, `B` buses and `H` hours the first level
/// has `6GH + LH + (B-1)H` variables (`GH` binary) and
/// `BH + LH + 6GH + 2GH + F` rows, `F` counting the minimum up/down rows.
/// Each scenario copy adds `GH + LH + (B-1)H + n_sp + n_sm` variables, where
/// `n_sp` (`n_sm`) counts bus-hours with positive renewable output (demand),
/// and `BH + LH + 4GH + 1` rows.
pub fn master_census(system: &SystemModel, scenarios: &[Scenario]) -> MasterCensus {
    let (g, l, b, h) = (system.n_thermal(), system.n_lines(), system.n_buses(), system.horizon);
    let mut f = 0;
    for u in &system.thermal_units {
        let forced = u.forced_initial_periods(h);
        let (lup, ldown) = if u.initially_on() { (forced, 0) } else { (0, forced) };
        if u.min_up > 1 {
            f += h - lup;
        }
        if u.min_down > 1 {
            f += h - ldown;
        }
    }
    let n_sm = system.buses.iter().map(|bus| bus.demand.iter().filter(|d| **d > 0.0).count()).sum::<usize>();
    let mut variables = 6 * g * h + l * h + (b - 1) * h;
    let mut constraints = b * h + l * h + 6 * g * h + 2 * g * h + f;
    for s in scenarios {
        let n_sp: usize = (0..h).map(|t| system.nodal_renewable(&s.values, t).iter().filter(|x| **x > 0.0).count()).sum();
        variables += g * h + l * h + (b - 1) * h + n_sp + n_sm;
        constraints += b * h + l * h + 4 * g * h + 1;
    }
    MasterCensus { variables, binaries: g * h, constraints }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{HighsBackend, SolveOptions, SolverBackend};
    use crate::network::default_network;
    use crate::schedule::validate_schedule;
    use crate::system::tests::one_bus_system;

    fn exact() -> SolverConfig {
        SolverConfig::exact()
    }

    #[test]
    fn empty_master_is_deterministic_uc_without_reserves() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let m = build_master(&sys, &net, &[], &exact()).unwrap();
        let sol = HighsBackend.solve(&m.model, &SolveOptions::default()).unwrap();
        let sched = m.schedule(&sol);
        assert_eq!(sched.reserve_up[0][0], 0.0);
        assert_eq!(sched.reserve_down[0][0], 0.0);
        assert!((sol.objective - 800.0).abs() < 1e-6);
        assert!(validate_schedule(&sys, &net, &sched, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn forecast_scenario_leaves_cost_unchanged() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let base = HighsBackend.solve(&build_master(&sys, &net, &[], &exact()).unwrap().model, &SolveOptions::default()).unwrap();
        let one = [Scenario::new("f", sys.nominal_forecast.clone())];
        let with = HighsBackend.solve(&build_master(&sys, &net, &one, &exact()).unwrap().model, &SolveOptions::default()).unwrap();
        assert!((base.objective - with.objective).abs() < 1e-6);
    }

    #[test]
    fn low_scenario_buys_up_reserve() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let sc = [Scenario::new("low", vec![vec![5.0]])];
        let m = build_master(&sys, &net, &sc, &exact()).unwrap();
        let sol = HighsBackend.solve(&m.model, &SolveOptions::default()).unwrap();
        let sched = m.schedule(&sol);
        // 15 MW of up reserve at 2 $/MW on top of 800 $ energy
        assert!((sched.reserve_up[0][0] - 15.0).abs() < 1e-6);
        assert!((sol.objective - 830.0).abs() < 1e-6);
        assert_eq!(m.copy_outcome(0, &sol).imbalance, 0.0);
    }

    #[test]
    fn census_matches_built_model() {
        let mut sys = one_bus_system();
        sys.horizon = 4;
        sys.buses[0].demand = vec![100.0, 0.0, 120.0, 90.0];
        sys.nominal_forecast = vec![vec![20.0; 4]];
        sys.thermal_units[0].min_up = 3;
        sys.thermal_units[0].min_down = 2;
        let net = default_network(&sys).unwrap();
        let sc = [Scenario::new("a", vec![vec![0.0, 1.0, 2.0, 0.0]]), Scenario::new("b", vec![vec![5.0; 4]])];
        for n in 0..=2 {
            let m = build_master(&sys, &net, &sc[..n], &exact()).unwrap();
            let c = master_census(&sys, &sc[..n]);
            assert_eq!(c.variables, m.model.variables.len());
            assert_eq!(c.binaries, m.model.n_integer());
            assert_eq!(c.constraints, m.model.constraints.len());
        }
    }

    #[test]
    fn builder_is_deterministic() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let sc = [Scenario::new("a", vec![vec![3.0]])];
        let a = build_master(&sys, &net, &sc, &exact()).unwrap().model.to_lp_string();
        let b = build_master(&sys, &net, &sc, &exact()).unwrap().model.to_lp_string();
        assert_eq!(a, b);
        assert!(a.contains("gw_s0(1,1)"));
    }

    #[test]
    fn bsuc_prices_mean_imbalance() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let sc = [Scenario::new("a", vec![vec![20.0]]), Scenario::new("b", vec![vec![0.0]])];
        // covering scenario b costs 2 $/MW of reserve, leaving it costs 500/2 $/MW
        let m = build_bsuc(&sys, &net, &sc, 500.0).unwrap();
        let sol = HighsBackend.solve(&m.model, &SolveOptions::default()).unwrap();
        assert!((m.schedule(&sol).reserve_up[0][0] - 20.0).abs() < 1e-6);
        // with zero imbalance cost no reserve is bought
        let m0 = build_bsuc(&sys, &net, &sc, 0.0).unwrap();
        let sol0 = HighsBackend.solve(&m0.model, &SolveOptions::default()).unwrap();
        assert_eq!(m0.schedule(&sol0).reserve_up[0][0], 0.0);
        assert!((sol0.objective - m0.first_level_cost(&sys, &sol0)).abs() < 1e-9);
        assert!(build_bsuc(&sys, &net, &[], 500.0).is_err());
    }
}
