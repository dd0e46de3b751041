use super::{BudgetUncertaintySet, History, ScenarioSet};
use crate::error::UncertaintyError;
use chrono::{Days, Months, NaiveDate};
use serde::{Deserialize, Serialize};

/// Extra days taken from the previous year: `count` consecutive days starting
/// `lead_days` before the same date one year earlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorYearAugment {
    pub count: usize,
    pub lead_days: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioWindowSpec {
    pub k: usize,
    pub augment_prior_year: Option<PriorYearAugment>,
}

impl ScenarioWindowSpec {
    pub fn last(k: usize) -> Self {
        ScenarioWindowSpec { k, augment_prior_year: None }
    }
}

fn days_before(day: NaiveDate, n: usize) -> Result<NaiveDate, UncertaintyError> {
    day.checked_sub_days(Days::new(n as u64))
        .ok_or_else(|| UncertaintyError::InvalidParameter(format!("date arithmetic underflow before {day}")))
}

/// Dates a window needs, oldest first. All are strictly before `target`.
pub fn required_days(target: NaiveDate, window: &ScenarioWindowSpec) -> Result<Vec<NaiveDate>, UncertaintyError> {
    if window.k == 0 {
        return Err(UncertaintyError::InvalidParameter("K must be at least 1".into()));
    }
    let mut days = Vec::with_capacity(window.k);
    if let Some(aug) = window.augment_prior_year {
        let anchor = target
            .checked_sub_months(Months::new(12))
            .ok_or_else(|| UncertaintyError::InvalidParameter(format!("no prior year for {target}")))?;
        let start = days_before(anchor, aug.lead_days)?;
        for i in 0..aug.count {
            days.push(start + Days::new(i as u64));
        }
    }
    for back in (1..=window.k).rev() {
        days.push(days_before(target, back)?);
    }
    let mut sorted = days.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != days.len() {
        return Err(UncertaintyError::InvalidParameter("prior-year days overlap the recent window".into()));
    }
    Ok(sorted)
}

/// Scenario hull built from the `K` days before `target` (plus the optional
/// prior-year days), oldest first. `target` itself is never included.
pub fn build_ddus_window(history: &History, target: NaiveDate, window: &ScenarioWindowSpec) -> Result<ScenarioSet, UncertaintyError> {
    let days = required_days(target, window)?;
    debug_assert!(days.iter().all(|d| *d < target));
    ScenarioSet::new(history.collect(&days)?)
}

/// Hourly min/max box over the `window_days` days before `target`.
///
/// The nominal profile is `nominal` when given, otherwise the window mean;
/// either way it is clipped into `[min, max]` so both deviations are nonnegative.
/// Budgets are left at `Γ = 1`, `Λ = |H|`.
pub fn estimate_box_limits(
    history: &History,
    target: NaiveDate,
    window_days: usize,
    nominal: Option<&[Vec<f64>]>,
) -> Result<BudgetUncertaintySet, UncertaintyError> {
    let days = required_days(target, &ScenarioWindowSpec::last(window_days))?;
    let window = history.collect(&days)?;
    let n = window[0].n_units();
    let h = window[0].horizon();
    let mut lo = vec![vec![f64::INFINITY; h]; n];
    let mut hi = vec![vec![f64::NEG_INFINITY; h]; n];
    let mut mean = vec![vec![0.0; h]; n];
    for s in &window {
        for r in 0..n {
            for t in 0..h {
                let x = s.values[r][t];
                lo[r][t] = lo[r][t].min(x);
                hi[r][t] = hi[r][t].max(x);
                mean[r][t] += x / window.len() as f64;
            }
        }
    }
    if let Some(nom) = nominal {
        if nom.len() != n || nom.iter().any(|row| row.len() != h) {
            return Err(UncertaintyError::InvalidParameter("nominal forecast shape differs from history".into()));
        }
    }
    let mut nominal_out = vec![vec![0.0; h]; n];
    let mut up = vec![vec![0.0; h]; n];
    let mut down = vec![vec![0.0; h]; n];
    for r in 0..n {
        for t in 0..h {
            let base = nominal.map_or(mean[r][t], |m| m[r][t]);
            let u = base.clamp(lo[r][t], hi[r][t]);
            nominal_out[r][t] = u;
            up[r][t] = hi[r][t] - u;
            down[r][t] = u - lo[r][t];
        }
    }
    BudgetUncertaintySet::new(nominal_out, up, down, 1.0, h)
}

/// Smallest integer strictly greater than `|R||H|/ε − 1`.
pub fn scenario_count_bound(n_renewables: usize, horizon: usize, epsilon_prob: f64) -> Result<usize, UncertaintyError> {
    if !(epsilon_prob > 0.0 && epsilon_prob < 1.0) {
        return Err(UncertaintyError::InvalidParameter(format!("violation probability {epsilon_prob} outside (0, 1)")));
    }
    let x = (n_renewables * horizon) as f64 / epsilon_prob - 1.0;
    // absorb representation error so that exact integers stay exact
    let snapped = if (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0) { x.round() } else { x.floor() };
    Ok(snapped.max(-1.0) as usize + 1)
}
