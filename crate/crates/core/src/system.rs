//! Power-system data: buses, lines, thermal and renewable fleets.
//!
//! All quantities are in MW, one-hour periods and dollars. Entities refer to
//! buses by bus id; [`SystemModel::bus_position`] maps ids to the dense
//! positions used by every matrix and model builder.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    /// Hourly nodal demand in MW, one entry per period.
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionLine {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Per-unit susceptance; flow = susceptance * (angle_from - angle_to).
    pub susceptance: f64,
    /// Thermal rating in MW, symmetric in both directions.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalUnit {
    pub id: usize,
    pub bus: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_ramp: f64,
    pub shutdown_ramp: f64,
    /// Largest upward corrective deviation per period (caps the up reserve).
    pub corrective_up_limit: f64,
    /// Largest downward corrective deviation per period (caps the down reserve).
    pub corrective_down_limit: f64,
    pub min_up: usize,
    pub min_down: usize,
    /// $/MWh.
    pub fuel_cost: f64,
    /// $/MW per period.
    pub reserve_up_cost: f64,
    /// $/MW per period.
    pub reserve_down_cost: f64,
    /// $ per start.
    pub startup_cost: f64,
    /// $ per stop.
    pub shutdown_cost: f64,
    /// Signed count of periods the unit has been on (> 0) or off (< 0)
    /// before the first period of the horizon.
    pub init_status: i64,
    /// Output in MW at period zero.
    pub init_output: f64,
}

impl ThermalUnit {
    pub fn initially_on(&self) -> bool {
        self.init_status > 0
    }

    /// Number of leading periods whose status is forced by the minimum
    /// up/down time already accrued before the horizon.
    pub fn forced_initial_periods(&self, horizon: usize) -> usize {
        let accrued = self.init_status.unsigned_abs() as usize;
        let required = if self.initially_on() { self.min_up } else { self.min_down };
        required.saturating_sub(accrued).min(horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableUnit {
    pub id: usize,
    pub bus: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub buses: Vec<Bus>,
    pub lines: Vec<TransmissionLine>,
    pub thermal_units: Vec<ThermalUnit>,
    pub renewable_units: Vec<RenewableUnit>,
    pub horizon: usize,
    /// Nominal renewable forecast, one row per renewable unit, one column per period.
    pub nominal_forecast: Vec<Vec<f64>>,
}

/// A broken data rule, reported as data rather than as an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
    pub detail: String,
}

impl Violation {
    pub fn new(entity: impl Into<String>, rule: impl Into<String>, detail: impl Into<String>) -> Self {
        Violation { entity: entity.into(), rule: rule.into(), detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.entity, self.rule, self.detail)
    }
}

impl SystemModel {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_thermal(&self) -> usize {
        self.thermal_units.len()
    }

    pub fn n_renewable(&self) -> usize {
        self.renewable_units.len()
    }

    /// Dense position of the bus with the given id.
    pub fn bus_position(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Positions of the thermal units' buses, in unit order.
    ///
    /// Panics if a unit references an unknown bus; call [`validate_system`] first.
    pub fn thermal_bus_positions(&self) -> Vec<usize> {
        let index = self.bus_index();
        self.thermal_units.iter().map(|u| index[&u.bus]).collect()
    }

    pub fn renewable_bus_positions(&self) -> Vec<usize> {
        let index = self.bus_index();
        self.renewable_units.iter().map(|u| index[&u.bus]).collect()
    }

    fn bus_index(&self) -> HashMap<usize, usize> {
        self.buses.iter().enumerate().map(|(pos, b)| (b.id, pos)).collect()
    }

    /// Demand of every bus in one period.
    pub fn demand_at(&self, hour: usize) -> Vec<f64> {
        self.buses.iter().map(|b| b.demand[hour]).collect()
    }

    /// System demand of one period.
    pub fn hourly_demand(&self, hour: usize) -> f64 {
        self.buses.iter().map(|b| b.demand[hour]).sum()
    }

    /// Total demand over buses and periods, in MWh.
    pub fn total_demand(&self) -> f64 {
        self.buses.iter().flat_map(|b| b.demand.iter()).sum()
    }

    /// Nodal renewable injection `P u_h` for a |R| x |H| profile.
    pub fn nodal_renewable(&self, profile: &[Vec<f64>], hour: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_buses()];
        for (r, pos) in self.renewable_bus_positions().into_iter().enumerate() {
            out[pos] += profile[r][hour];
        }
        out
    }

    /// Copy of the system with a different nominal renewable forecast.
    pub fn with_forecast(&self, forecast: Vec<Vec<f64>>) -> SystemModel {
        SystemModel { nominal_forecast: forecast, ..self.clone() }
    }
}

/// Check every data invariant of a system. An empty list means the system is valid.
pub fn validate_system(system: &SystemModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let h = system.horizon;
    if h == 0 {
        out.push(Violation::new("system", "horizon", "horizon must be at least 1"));
    }
    if system.buses.is_empty() {
        out.push(Violation::new("system", "buses", "at least one bus is required"));
    }

    let mut seen = std::collections::HashSet::new();
    for bus in &system.buses {
        let name = format!("bus {}", bus.id);
        if !seen.insert(bus.id) {
            out.push(Violation::new(&name, "unique id", "duplicate bus id"));
        }
        if bus.demand.len() != h {
            out.push(Violation::new(
                &name,
                "demand length",
                format!("{} entries for horizon {h}", bus.demand.len()),
            ));
        }
        if let Some((t, d)) = bus.demand.iter().enumerate().find(|(_, d)| !(**d >= 0.0)) {
            out.push(Violation::new(&name, "demand >= 0", format!("hour {} has {d}", t + 1)));
        }
    }

    let has_bus = |id: usize| system.buses.iter().any(|b| b.id == id);

    let mut seen = std::collections::HashSet::new();
    for line in &system.lines {
        let name = format!("line {}", line.id);
        if !seen.insert(line.id) {
            out.push(Violation::new(&name, "unique id", "duplicate line id"));
        }
        if line.from_bus == line.to_bus {
            out.push(Violation::new(&name, "from_bus != to_bus", format!("both ends at bus {}", line.from_bus)));
        }
        for end in [line.from_bus, line.to_bus] {
            if !has_bus(end) {
                out.push(Violation::new(&name, "bus exists", format!("unknown bus {end}")));
            }
        }
        if !(line.capacity > 0.0) {
            out.push(Violation::new(&name, "capacity > 0", format!("capacity {}", line.capacity)));
        }
        if !(line.susceptance > 0.0) {
            out.push(Violation::new(&name, "susceptance > 0", format!("susceptance {}", line.susceptance)));
        }
    }

    let mut seen = std::collections::HashSet::new();
    for unit in &system.thermal_units {
        let name = format!("thermal {}", unit.id);
        if !seen.insert(unit.id) {
            out.push(Violation::new(&name, "unique id", "duplicate thermal id"));
        }
        if !has_bus(unit.bus) {
            out.push(Violation::new(&name, "bus exists", format!("unknown bus {}", unit.bus)));
        }
        if !(unit.g_min >= 0.0 && unit.g_min <= unit.g_max) {
            out.push(Violation::new(
                &name,
                "0 <= g_min <= g_max",
                format!("g_min {} g_max {}", unit.g_min, unit.g_max),
            ));
        }
        if unit.startup_ramp < unit.g_min {
            out.push(Violation::new(&name, "startup_ramp >= g_min", format!("{} < {}", unit.startup_ramp, unit.g_min)));
        }
        if unit.shutdown_ramp < unit.g_min {
            out.push(Violation::new(&name, "shutdown_ramp >= g_min", format!("{} < {}", unit.shutdown_ramp, unit.g_min)));
        }
        for (label, value) in [
            ("ramp_up", unit.ramp_up),
            ("ramp_down", unit.ramp_down),
            ("corrective_up_limit", unit.corrective_up_limit),
            ("corrective_down_limit", unit.corrective_down_limit),
        ] {
            if !(value >= 0.0) {
                out.push(Violation::new(&name, format!("{label} >= 0"), format!("{value}")));
            }
        }
        for (label, value) in [
            ("fuel_cost", unit.fuel_cost),
            ("reserve_up_cost", unit.reserve_up_cost),
            ("reserve_down_cost", unit.reserve_down_cost),
            ("startup_cost", unit.startup_cost),
            ("shutdown_cost", unit.shutdown_cost),
        ] {
            if !(value >= 0.0) {
                out.push(Violation::new(&name, format!("{label} >= 0"), format!("{value}")));
            }
        }
        if unit.min_up < 1 || unit.min_down < 1 {
            out.push(Violation::new(
                &name,
                "min_up, min_down >= 1",
                format!("min_up {} min_down {}", unit.min_up, unit.min_down),
            ));
        }
        if unit.initially_on() {
            if unit.init_output < unit.g_min || unit.init_output > unit.g_max {
                out.push(Violation::new(
                    &name,
                    "g_min <= init_output <= g_max",
                    format!("init_output {}", unit.init_output),
                ));
            }
        } else if unit.init_output != 0.0 {
            out.push(Violation::new(&name, "init_output = 0 when off", format!("init_output {}", unit.init_output)));
        }
    }

    let mut seen = std::collections::HashSet::new();
    for unit in &system.renewable_units {
        let name = format!("renewable {}", unit.id);
        if !seen.insert(unit.id) {
            out.push(Violation::new(&name, "unique id", "duplicate renewable id"));
        }
        if !has_bus(unit.bus) {
            out.push(Violation::new(&name, "bus exists", format!("unknown bus {}", unit.bus)));
        }
    }

    if system.nominal_forecast.len() != system.n_renewable() {
        out.push(Violation::new(
            "forecast",
            "one row per renewable",
            format!("{} rows for {} units", system.nominal_forecast.len(), system.n_renewable()),
        ));
    }
    for (r, row) in system.nominal_forecast.iter().enumerate() {
        if row.len() != h {
            out.push(Violation::new(format!("forecast row {r}"), "row length", format!("{} entries", row.len())));
        }
        if row.iter().any(|v| !(*v >= 0.0)) {
            out.push(Violation::new(format!("forecast row {r}"), "forecast >= 0", "negative or NaN entry"));
        }
    }
    out
}
