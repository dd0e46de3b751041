//! Shared fixtures: the bundled 4-bus instance and seeded random small systems.
#![allow(dead_code)]

use ddruc::ccga::extensive_form_solve;
use ddruc::formulation::{HighsBackend, SolverConfig};
use ddruc::io::{parse_history, parse_instance};
use ddruc::network::{default_network, NetworkMatrices};
use ddruc::schedule::CommitmentSchedule;
use ddruc::system::{validate_system, Bus, RenewableUnit, SystemModel, ThermalUnit, TransmissionLine};
use ddruc::uncertainty::{BudgetUncertaintySet, History, Scenario, ScenarioSet};
use ddruc::Error;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn four_bus() -> (SystemModel, NetworkMatrices, History) {
    let system = parse_instance(&fixture_dir().join("four_bus.toml")).expect("four_bus.toml");
    let history = parse_history(&fixture_dir().join("four_bus_wind.csv"), Some(system.horizon)).expect("four_bus_wind.csv");
    let network = default_network(&system).unwrap();
    (system, network, history)
}

/// Size limits for [`random_system`].
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub buses: usize,
    pub thermal: usize,
    pub hours: usize,
    pub renewables: usize,
}

pub const SMALL: Limits = Limits { buses: 3, thermal: 4, hours: 6, renewables: 2 };

/// Random system whose renewable output never exceeds the demand at its bus,
/// so every redispatch LP is feasible.
pub fn random_system(rng: &mut ChaCha8Rng, limits: Limits) -> SystemModel {
    let n_bus = rng.random_range(1..=limits.buses);
    let n_thermal = rng.random_range(1..=limits.thermal);
    let horizon = rng.random_range(1..=limits.hours);
    let n_ren = rng.random_range(1..=limits.renewables);
    let buses: Vec<Bus> = (1..=n_bus)
        .map(|id| Bus { id, demand: (0..horizon).map(|_| rng.random_range(20.0..90.0f64).round()).collect() })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (2..=n_bus).map(|b| (rng.random_range(1..b), b)).collect();
    if n_bus == 3 && rng.random_bool(0.5) && !pairs.contains(&(1, 3)) {
        pairs.push((1, 3));
    }
    let lines = pairs
        .iter()
        .enumerate()
        .map(|(i, (from, to))| TransmissionLine {
            id: i + 1,
            from_bus: *from,
            to_bus: *to,
            susceptance: rng.random_range(5.0..15.0f64).round(),
            capacity: if rng.random_bool(0.2) { f64::INFINITY } else { rng.random_range(30.0..150.0f64).round() },
        })
        .collect();
    let peak: f64 = (0..horizon).map(|h| buses.iter().map(|b| b.demand[h]).sum::<f64>()).fold(0.0, f64::max);
    let thermal_units = (1..=n_thermal)
        .map(|id| {
            let g_max = (rng.random_range(1.0..2.0) * peak / n_thermal as f64).round().max(30.0);
            let g_min = (rng.random_range(0.0..0.3) * g_max).round();
            let ramp = rng.random_range(0.3..1.0f64) * g_max;
            let on = rng.random_bool(0.6);
            ThermalUnit {
                id,
                bus: rng.random_range(1..=n_bus),
                g_min,
                g_max,
                ramp_up: ramp.round(),
                ramp_down: ramp.round(),
                startup_ramp: ramp.max(g_min).round(),
                shutdown_ramp: ramp.max(g_min).round(),
                corrective_up_limit: (rng.random_range(0.1..0.5f64) * g_max).round(),
                corrective_down_limit: (rng.random_range(0.1..0.5f64) * g_max).round(),
                min_up: rng.random_range(1..=3),
                min_down: rng.random_range(1..=3),
                fuel_cost: rng.random_range(10.0..50.0f64).round(),
                reserve_up_cost: rng.random_range(1.0..10.0f64).round(),
                reserve_down_cost: rng.random_range(1.0..10.0f64).round(),
                startup_cost: rng.random_range(0.0..500.0f64).round(),
                shutdown_cost: rng.random_range(0.0..100.0f64).round(),
                init_status: if on { rng.random_range(1..=3) } else { -rng.random_range(1..=3) },
                init_output: if on { rng.random_range(g_min..=g_max).round() } else { 0.0 },
            }
        })
        .collect();
    let renewable_units: Vec<RenewableUnit> =
        (1..=n_ren).map(|id| RenewableUnit { id, bus: rng.random_range(1..=n_bus) }).collect();
    let mut system = SystemModel { buses, lines, thermal_units, renewable_units, horizon, nominal_forecast: Vec::new() };
    let caps = renewable_caps(&system);
    system.nominal_forecast = caps.iter().map(|c| c.iter().map(|x| (x * rng.random_range(0.2..0.8)).round()).collect()).collect();
    assert!(validate_system(&system).is_empty(), "{:?}", validate_system(&system));
    system
}

/// Per-unit, per-hour ceiling on renewable output: the bus demand shared
/// among the renewable units at that bus.
pub fn renewable_caps(system: &SystemModel) -> Vec<Vec<f64>> {
    let buses = system.renewable_bus_positions();
    system
        .renewable_units
        .iter()
        .enumerate()
        .map(|(r, _)| {
            let share = buses.iter().filter(|b| **b == buses[r]).count() as f64;
            (0..system.horizon).map(|h| system.buses[buses[r]].demand[h] / share).collect()
        })
        .collect()
}

pub fn random_scenarios(rng: &mut ChaCha8Rng, system: &SystemModel, k: usize) -> ScenarioSet {
    let caps = renewable_caps(system);
    let scenarios = (0..k)
        .map(|i| Scenario::new(format!("s{i}"), caps.iter().map(|c| c.iter().map(|x| (x * rng.random_range(0.0..1.0)).round()).collect()).collect()))
        .collect();
    ScenarioSet::new(scenarios).unwrap()
}

/// Random box set around the nominal forecast, staying inside `[0, cap]`.
pub fn random_budget_set(rng: &mut ChaCha8Rng, system: &SystemModel, gamma: f64, lambda: usize) -> BudgetUncertaintySet {
    let caps = renewable_caps(system);
    let nominal = system.nominal_forecast.clone();
    let up = nominal
        .iter()
        .zip(&caps)
        .map(|(n, c)| n.iter().zip(c).map(|(x, cap)| (rng.random_range(0.0..1.0) * (cap - x)).round()).collect())
        .collect();
    let down = nominal.iter().map(|n| n.iter().map(|x| (rng.random_range(0.0..1.0) * x).round()).collect()).collect();
    BudgetUncertaintySet::new(nominal, up, down, gamma, lambda).unwrap()
}

/// A system, a scenario hull and a schedule that protects against a random
/// subset of the hull (possibly empty).
pub struct Case {
    pub seed: u64,
    pub system: SystemModel,
    pub network: NetworkMatrices,
    pub scenarios: ScenarioSet,
    pub schedule: CommitmentSchedule,
}

/// Draw cases from `seed` until one has a feasible first-stage schedule.
pub fn random_case(seed: u64, limits: Limits, max_k: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let system = random_system(&mut rng, limits);
        let network = default_network(&system).unwrap();
        let k = rng.random_range(1..=max_k);
        let scenarios = random_scenarios(&mut rng, &system, k);
        let n_sub = rng.random_range(0..=k.min(2));
        let subset: Vec<Scenario> = sample(&mut rng, k, n_sub).iter().map(|i| scenarios.scenarios[i].clone()).collect();
        match extensive_form_solve(&HighsBackend, &system, &network, &subset, &SolverConfig::exact(), usize::MAX) {
            Ok((schedule, _)) => return Case { seed, system, network, scenarios, schedule },
            Err(Error::MasterInfeasible) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}

/// Draw a system from `seed` whose first stage is feasible with no scenarios.
pub fn random_feasible_system(seed: u64, limits: Limits) -> (ChaCha8Rng, SystemModel, NetworkMatrices, CommitmentSchedule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let system = random_system(&mut rng, limits);
        let network = default_network(&system).unwrap();
        match extensive_form_solve(&HighsBackend, &system, &network, &[], &SolverConfig::exact(), 0) {
            Ok((schedule, _)) => return (rng, system, network, schedule),
            Err(Error::MasterInfeasible) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
