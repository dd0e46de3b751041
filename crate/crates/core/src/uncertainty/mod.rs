//! Uncertainty sets for renewable output: scenario hulls, budget polytopes and
//! the lognormal scenario generator.

mod budget;
mod lognormal;
mod window;

pub use budget::{budget_deviation_cap, budget_value_levels, budget_vertex_enumeration, DEFAULT_VERTEX_CAP};
pub use lognormal::{generate_lognormal_scenarios, LognormalFit};
pub use window::{build_ddus_window, scenario_count_bound, estimate_box_limits, required_days, PriorYearAugment, ScenarioWindowSpec};

use crate::error::UncertaintyError;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One renewable profile, `values[unit][hour]` in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub values: Vec<Vec<f64>>,
}

impl Scenario {
    pub fn new(label: impl Into<String>, values: Vec<Vec<f64>>) -> Self {
        Scenario { label: label.into(), values }
    }

    pub fn n_units(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// System-wide renewable output per hour.
    pub fn hourly_total(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.horizon()];
        for row in &self.values {
            for (h, x) in row.iter().enumerate() {
                out[h] += x;
            }
        }
        out
    }

    /// Convex combination of scenarios with the given weights.
    pub fn combine(label: impl Into<String>, scenarios: &[&Scenario], weights: &[f64]) -> Scenario {
        let first = scenarios[0];
        let mut values = vec![vec![0.0; first.horizon()]; first.n_units()];
        for (s, w) in scenarios.iter().zip(weights) {
            for (r, row) in s.values.iter().enumerate() {
                for (h, x) in row.iter().enumerate() {
                    values[r][h] += w * x;
                }
            }
        }
        Scenario::new(label, values)
    }
}

/// Ordered scenario collection; its convex hull is the uncertainty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    /// Checks that the set is nonempty, rectangular, nonnegative and uniquely labelled.
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self, UncertaintyError> {
        let first = scenarios.first().ok_or_else(|| UncertaintyError::InvalidScenarioSet("no scenarios".into()))?;
        let (n, h) = (first.n_units(), first.horizon());
        let mut labels = std::collections::HashSet::new();
        for s in &scenarios {
            if s.n_units() != n || s.values.iter().any(|row| row.len() != h) {
                return Err(UncertaintyError::InvalidScenarioSet(format!("scenario {} has a different shape", s.label)));
            }
            if s.values.iter().flatten().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(UncertaintyError::InvalidScenarioSet(format!("scenario {} has negative or non-finite values", s.label)));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(UncertaintyError::InvalidScenarioSet(format!("duplicate label {}", s.label)));
            }
        }
        Ok(ScenarioSet { scenarios })
    }

    pub fn single(scenario: Scenario) -> Self {
        ScenarioSet { scenarios: vec![scenario] }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.scenarios.iter().map(|s| s.label.as_str()).collect()
    }
}

/// Box deviations around a nominal profile with spatial and temporal budgets.
///
/// `u = û + Δ⁺ z⁺ − Δ⁻ z⁻`, `0 <= z <= 1`, per hour `Σ_r (z⁺ + z⁻) <= Γ|R|`,
/// per unit `Σ_h (z⁺ + z⁻) <= Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetUncertaintySet {
    pub nominal: Vec<Vec<f64>>,
    pub dev_up: Vec<Vec<f64>>,
    pub dev_down: Vec<Vec<f64>>,
    pub gamma: f64,
    pub lambda: usize,
}

impl BudgetUncertaintySet {
    pub fn new(
        nominal: Vec<Vec<f64>>,
        dev_up: Vec<Vec<f64>>,
        dev_down: Vec<Vec<f64>>,
        gamma: f64,
        lambda: usize,
    ) -> Result<Self, UncertaintyError> {
        let set = BudgetUncertaintySet { nominal, dev_up, dev_down, gamma, lambda };
        set.check()?;
        Ok(set)
    }

    pub fn check(&self) -> Result<(), UncertaintyError> {
        let bad = |m: &str| Err(UncertaintyError::InvalidParameter(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.lambda > self.horizon() {
            return bad("lambda must lie in [0, |H|]");
        }
        let shape = |m: &Vec<Vec<f64>>| m.len() == self.nominal.len() && m.iter().all(|r| r.len() == self.horizon());
        if !shape(&self.dev_up) || !shape(&self.dev_down) || !shape(&self.nominal) {
            return bad("nominal and deviations must share one shape");
        }
        for r in 0..self.n_units() {
            for h in 0..self.horizon() {
                if !(self.dev_up[r][h] >= 0.0) || !(self.dev_down[r][h] >= 0.0) {
                    return bad("deviations must be nonnegative");
                }
                if self.nominal[r][h] - self.dev_down[r][h] < -1e-9 {
                    return bad("lower limit below zero");
                }
            }
        }
        Ok(())
    }

    pub fn with_budgets(mut self, gamma: f64, lambda: usize) -> Result<Self, UncertaintyError> {
        self.gamma = gamma;
        self.lambda = lambda;
        self.check()?;
        Ok(self)
    }

    pub fn n_units(&self) -> usize {
        self.nominal.len()
    }

    pub fn horizon(&self) -> usize {
        self.nominal.first().map_or(0, Vec::len)
    }

    /// Right-hand side of the per-hour budget row.
    pub fn hour_budget(&self) -> f64 {
        self.gamma * self.n_units() as f64
    }

    /// Whether `values` satisfies the set definition, using the cheapest
    /// deviation variables for each coordinate.
    pub fn contains(&self, values: &[Vec<f64>], tol: f64) -> bool {
        let mut unit_use = vec![0.0; self.n_units()];
        let mut hour_use = vec![0.0; self.horizon()];
        for r in 0..self.n_units() {
            for h in 0..self.horizon() {
                let s = values[r][h] - self.nominal[r][h];
                let z = if s > tol {
                    if self.dev_up[r][h] <= 0.0 {
                        return false;
                    }
                    s / self.dev_up[r][h]
                } else if s < -tol {
                    if self.dev_down[r][h] <= 0.0 {
                        return false;
                    }
                    -s / self.dev_down[r][h]
                } else {
                    0.0
                };
                if z > 1.0 + tol {
                    return false;
                }
                unit_use[r] += z;
                hour_use[h] += z;
            }
        }
        unit_use.iter().all(|u| *u <= self.lambda as f64 + tol) && hour_use.iter().all(|u| *u <= self.hour_budget() + tol)
    }

    pub fn nominal_scenario(&self) -> Scenario {
        Scenario::new("nominal", self.nominal.clone())
    }
}

/// Either uncertainty-set family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Uncertainty {
    Scenarios(ScenarioSet),
    Budget(BudgetUncertaintySet),
}

impl Uncertainty {
    pub fn n_units(&self) -> usize {
        match self {
            Uncertainty::Scenarios(s) => s.scenarios[0].n_units(),
            Uncertainty::Budget(b) => b.n_units(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Uncertainty::Scenarios(s) => s.scenarios[0].horizon(),
            Uncertainty::Budget(b) => b.horizon(),
        }
    }
}

/// Dated daily renewable profiles, `[unit][hour]` per day, ordered by date.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub unit_ids: Vec<usize>,
    pub days: BTreeMap<NaiveDate, Vec<Vec<f64>>>,
}

impl History {
    pub fn new(unit_ids: Vec<usize>) -> Self {
        History { unit_ids, days: BTreeMap::new() }
    }

    pub fn get(&self, day: NaiveDate) -> Option<&Vec<Vec<f64>>> {
        self.days.get(&day)
    }

    pub fn scenario(&self, day: NaiveDate) -> Option<Scenario> {
        self.days.get(&day).map(|v| Scenario::new(day.to_string(), v.clone()))
    }

    /// Scenarios for the given days, in order, or the list of missing days.
    pub fn collect(&self, days: &[NaiveDate]) -> Result<Vec<Scenario>, UncertaintyError> {
        let missing: Vec<NaiveDate> = days.iter().copied().filter(|d| !self.days.contains_key(d)).collect();
        if !missing.is_empty() {
            return Err(UncertaintyError::MissingDays(missing));
        }
        Ok(days.iter().map(|d| self.scenario(*d).expect("checked above")).collect())
    }

    pub fn first_day(&self) -> Option<NaiveDate> {
        self.days.keys().next().copied()
    }

    pub fn last_day(&self) -> Option<NaiveDate> {
        self.days.keys().next_back().copied()
    }
}
