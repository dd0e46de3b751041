mod common;

use common::{random_case, random_feasible_system, random_scenarios, rel_close, SMALL};
use ddruc::ccga::{ccga_solve, extensive_form_solve, oracle_inspection, scenario_imbalance, CcgaOptions};
use ddruc::formulation::{HighsBackend, SolverConfig};
use ddruc::schedule::{schedule_cost, validate_schedule};
use ddruc::uncertainty::{Scenario, Uncertainty};
use ddruc::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FEAS_TOL: f64 = 1e-6;

fn exact() -> CcgaOptions {
    CcgaOptions { solver: SolverConfig::exact(), ..CcgaOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn master_schedules_pass_first_level_checks(seed in 0u64..10_000) {
        let case = random_case(seed, SMALL, 4);
        let violations = validate_schedule(&case.system, &case.network, &case.schedule, FEAS_TOL).unwrap();
        prop_assert!(violations.is_empty(), "seed {seed}: {violations:?}");
    }

    #[test]
    fn nominal_forecast_needs_no_redispatch(seed in 0u64..10_000) {
        let (_, system, network, schedule) = random_feasible_system(seed, SMALL);
        let nominal = Scenario::new("nominal", system.nominal_forecast.clone());
        let phi = scenario_imbalance(&HighsBackend, &system, &network, &schedule, &nominal).unwrap();
        prop_assert!(phi <= FEAS_TOL * system.total_demand().max(1.0), "seed {seed}: {phi}");
    }

    #[test]
    fn protected_scenarios_have_no_imbalance(seed in 0u64..10_000) {
        let case = random_case(seed, SMALL, 4);
        let backend = HighsBackend;
        let subset = &case.scenarios.scenarios[..case.scenarios.len().min(2)];
        let Ok((schedule, _)) = extensive_form_solve(&backend, &case.system, &case.network, subset, &SolverConfig::exact(), usize::MAX) else {
            return Ok(());
        };
        for s in subset {
            let phi = scenario_imbalance(&backend, &case.system, &case.network, &schedule, s).unwrap();
            prop_assert!(phi <= FEAS_TOL * case.system.total_demand().max(1.0), "seed {seed} {}: {phi}", s.label);
        }
    }

    #[test]
    fn more_scenarios_never_lower_cost(seed in 0u64..10_000) {
        let mut case = random_case(seed, SMALL, 3);
        let extra = random_scenarios(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed), &case.system, 1);
        let backend = HighsBackend;
        let base = &case.scenarios.scenarios;
        let Ok((_, small)) = extensive_form_solve(&backend, &case.system, &case.network, base, &SolverConfig::exact(), usize::MAX) else {
            return Ok(());
        };
        case.scenarios.scenarios.extend(extra.scenarios);
        match extensive_form_solve(&backend, &case.system, &case.network, &case.scenarios.scenarios, &SolverConfig::exact(), usize::MAX) {
            Ok((_, large)) => prop_assert!(large.total + 1e-6 * large.total.abs().max(1.0) >= small.total, "seed {seed}: {} < {}", large.total, small.total),
            Err(Error::MasterInfeasible) => {}
            Err(e) => return Err(TestCaseError::fail(format!("seed {seed}: {e}"))),
        }
    }

    #[test]
    fn ccga_schedule_covers_every_scenario(seed in 0u64..10_000) {
        let case = random_case(seed, SMALL, 5);
        let backend = HighsBackend;
        let outcome = match ccga_solve(&backend, &case.system, &case.network, &Uncertainty::Scenarios(case.scenarios.clone()), &exact()) {
            Ok(o) => o,
            Err(Error::MasterInfeasible) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("seed {seed}: {e}"))),
        };
        let check = oracle_inspection(&backend, &case.system, &case.network, &outcome.schedule, &case.scenarios, false).unwrap();
        prop_assert!(check.imbalance <= 1e-9 * case.system.total_demand() + FEAS_TOL, "seed {seed}: {}", check.imbalance);
        prop_assert!(outcome.selected.len() <= case.scenarios.len());
        prop_assert_eq!(outcome.n_iterations(), outcome.selected.len() + 1);
        let recomputed = schedule_cost(&case.system, &outcome.schedule).unwrap();
        prop_assert!(rel_close(recomputed.total, outcome.cost.total, 1e-9));
    }
}
