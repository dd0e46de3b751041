//! Run configuration read from TOML, with defaults for every field.

use crate::ccga::{BsucOptions, CcgaOptions, OracleMode};
use crate::error::{Error, Result};
use crate::evaluation::{BacktestConfig, ForecastSource, ModelSpec, DEFAULT_THRESHOLD};
use crate::formulation::{DualBounds, Epsilon, SolverConfig};
use crate::uncertainty::{PriorYearAugment, ScenarioWindowSpec};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Ddruc,
    Bruc,
    Bsuc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForecastKind {
    #[default]
    Instance,
    WindowMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub relative_gap: f64,
    pub time_limit_s: f64,
    pub threads: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection { relative_gap: d.relative_gap, time_limit_s: d.time_limit_s, threads: d.threads }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsucSection {
    pub scenarios: usize,
    pub imbalance_cost: f64,
    pub fit_window_days: usize,
}

impl Default for BsucSection {
    fn default() -> Self {
        let d = BsucOptions::default();
        BsucSection { scenarios: d.scenario_count, imbalance_cost: d.imbalance_cost, fit_window_days: d.fit_window_days }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub instance: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// Everything a `solve-day` or `backtest` run needs besides the data files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    /// DDUS window length.
    pub k: usize,
    pub prior_year: Option<PriorYearAugment>,
    pub gamma: f64,
    /// Defaults to the horizon.
    pub lambda: Option<usize>,
    pub box_window_days: usize,
    pub epsilon: Epsilon,
    pub oracle: OracleMode,
    pub dual_bounds: DualBounds,
    pub max_iterations: Option<usize>,
    pub forecast: ForecastKind,
    /// Days averaged for `forecast = "window_mean"`.
    pub forecast_window_days: usize,
    pub threshold: f64,
    pub seed: Option<u64>,
    #[serde(deserialize_with = "optional_date")]
    pub start: Option<NaiveDate>,
    #[serde(deserialize_with = "optional_date")]
    pub end: Option<NaiveDate>,
    pub solver: SolverSection,
    pub bsuc: BsucSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Ddruc,
            k: 35,
            prior_year: None,
            gamma: 1.0,
            lambda: None,
            box_window_days: 35,
            epsilon: SolverConfig::default().epsilon,
            oracle: OracleMode::Inspection,
            dual_bounds: DualBounds::default(),
            max_iterations: None,
            forecast: ForecastKind::Instance,
            forecast_window_days: 35,
            threshold: DEFAULT_THRESHOLD,
            seed: None,
            start: None,
            end: None,
            solver: SolverSection::default(),
            bsuc: BsucSection::default(),
            paths: PathsSection::default(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parse { path: "config".into(), message: msg.into() }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| usage(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<()> {
        if self.solver.relative_gap < 0.0 {
            return Err(usage("solver.relative_gap must be >= 0"));
        }
        if !(self.solver.time_limit_s > 0.0) {
            return Err(usage("solver.time_limit_s must be > 0"));
        }
        if self.k == 0 {
            return Err(usage("k must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(usage("gamma must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            relative_gap: self.solver.relative_gap,
            time_limit_s: self.solver.time_limit_s,
            threads: self.solver.threads,
            epsilon: self.epsilon,
        }
    }

    pub fn ccga_options(&self) -> CcgaOptions {
        CcgaOptions {
            solver: self.solver_config(),
            oracle: self.oracle,
            bounds: self.dual_bounds,
            max_iterations: self.max_iterations,
            parallel: true,
        }
    }

    pub fn model_spec(&self, horizon: usize) -> ModelSpec {
        match self.model {
            ModelKind::Ddruc => ModelSpec::Ddruc { window: ScenarioWindowSpec { k: self.k, augment_prior_year: self.prior_year } },
            ModelKind::Bruc => ModelSpec::Bruc {
                gamma: self.gamma,
                lambda: self.lambda.unwrap_or(horizon).min(horizon),
                window_days: self.box_window_days,
            },
            ModelKind::Bsuc => ModelSpec::Bsuc(BsucOptions {
                scenario_count: self.bsuc.scenarios,
                imbalance_cost: self.bsuc.imbalance_cost,
                fit_window_days: self.bsuc.fit_window_days,
                seed: self.seed.unwrap_or(0),
            }),
        }
    }

    pub fn forecast_source(&self) -> ForecastSource {
        match self.forecast {
            ForecastKind::Instance => ForecastSource::Instance,
            ForecastKind::WindowMean => ForecastSource::WindowMean(self.forecast_window_days),
        }
    }

    pub fn backtest_config(&self, horizon: usize, days: Vec<NaiveDate>) -> BacktestConfig {
        BacktestConfig {
            model: self.model_spec(horizon),
            ccga: self.ccga_options(),
            forecast: self.forecast_source(),
            days,
            threshold: self.threshold,
            parallel_days: true,
        }
    }
}

/// Accepts a TOML local date (`start = 2012-08-01`) or a quoted string.
fn optional_date<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<NaiveDate>, D::Error> {
    use serde::de::Error as _;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Native(toml::value::Datetime),
        Text(String),
    }
    let text = match Option::<Raw>::deserialize(d)? {
        None => return Ok(None),
        Some(Raw::Native(dt)) if dt.time.is_none() && dt.offset.is_none() => dt.to_string(),
        Some(Raw::Native(dt)) => return Err(D::Error::custom(format!("expected a date without time, got {dt}"))),
        Some(Raw::Text(s)) => s,
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d").map(Some).map_err(D::Error::custom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.epsilon, Epsilon::FractionOfDemand(1e-3));
        assert_eq!(c.solver.relative_gap, 5e-4);
        assert_eq!(c.bsuc.scenarios, 500);
        assert_eq!(c.bsuc.imbalance_cost, 500.0);
        assert_eq!(c.bsuc.fit_window_days, 100);
        assert_eq!(c.box_window_days, 35);
    }

    #[test]
    fn round_trip_and_sections() {
        let text = r#"
model = "bruc"
gamma = 0.5
lambda = 12
epsilon = { mode = "absolute", value = 2.0 }
oracle = "milp"
[solver]
relative_gap = 0.0
[paths]
instance = "a.toml"
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.model, ModelKind::Bruc);
        assert_eq!(c.epsilon, Epsilon::Absolute(2.0));
        assert_eq!(c.model_spec(24), ModelSpec::Bruc { gamma: 0.5, lambda: 12, window_days: 35 });
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn dates_native_or_quoted() {
        let c = RunConfig::from_toml("start = 2012-08-01\nend = \"2012-08-03\"").unwrap();
        assert_eq!(c.start, NaiveDate::from_ymd_opt(2012, 8, 1));
        assert_eq!(c.end, NaiveDate::from_ymd_opt(2012, 8, 3));
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(RunConfig::from_toml("start = 2012-08-01T10:00:00").is_err());
        assert!(RunConfig::from_toml("start = \"08/01/2012\"").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("kk = 3").is_err());
        let c = RunConfig { gamma: 2.0, ..Default::default() };
        assert!(c.check().is_err());
    }
}
