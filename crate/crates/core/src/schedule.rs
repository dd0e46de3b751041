//! First-level schedules, redispatch outcomes and cost accounting.

use crate::error::ModelError;
use crate::network::NetworkMatrices;
use crate::system::{SystemModel, ThermalUnit, Violation};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// On/off status, energy and reserves for every thermal unit and period.
///
/// Unit-indexed fields are `[unit][hour]`; network fields are `[hour][line]`
/// and `[hour][bus]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitmentSchedule {
    pub on_off: Vec<Vec<bool>>,
    pub generation: Vec<Vec<f64>>,
    pub reserve_up: Vec<Vec<f64>>,
    pub reserve_down: Vec<Vec<f64>>,
    pub startup_costs: Vec<Vec<f64>>,
    pub shutdown_costs: Vec<Vec<f64>>,
    pub flows: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
}

impl CommitmentSchedule {
    /// A schedule with every unit off and every quantity zero.
    pub fn zeros(n_units: usize, n_lines: usize, n_buses: usize, horizon: usize) -> Self {
        let units = vec![vec![0.0; horizon]; n_units];
        CommitmentSchedule {
            on_off: vec![vec![false; horizon]; n_units],
            generation: units.clone(),
            reserve_up: units.clone(),
            reserve_down: units.clone(),
            startup_costs: units.clone(),
            shutdown_costs: units,
            flows: vec![vec![0.0; n_lines]; horizon],
            angles: vec![vec![0.0; n_buses]; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.on_off.first().map_or(self.flows.len(), Vec::len)
    }

    /// Status in period `hour`, with `None` meaning the period before the horizon.
    pub fn status(&self, unit: &ThermalUnit, index: usize, hour: Option<usize>) -> bool {
        match hour {
            Some(h) => self.on_off[index][h],
            None => unit.initially_on(),
        }
    }

    pub fn check_dimensions(&self, system: &SystemModel) -> Result<(), ModelError> {
        let h = system.horizon;
        let g = system.n_thermal();
        let unit_fields: [(&str, usize, Option<usize>); 6] = [
            ("on_off", self.on_off.len(), self.on_off.iter().map(Vec::len).find(|l| *l != h)),
            ("generation", self.generation.len(), self.generation.iter().map(Vec::len).find(|l| *l != h)),
            ("reserve_up", self.reserve_up.len(), self.reserve_up.iter().map(Vec::len).find(|l| *l != h)),
            ("reserve_down", self.reserve_down.len(), self.reserve_down.iter().map(Vec::len).find(|l| *l != h)),
            ("startup_costs", self.startup_costs.len(), self.startup_costs.iter().map(Vec::len).find(|l| *l != h)),
            ("shutdown_costs", self.shutdown_costs.len(), self.shutdown_costs.iter().map(Vec::len).find(|l| *l != h)),
        ];
        for (what, rows, bad_row) in unit_fields {
            if rows != g {
                return Err(ModelError::DimensionMismatch { what: format!("schedule {what} units"), expected: g, found: rows });
            }
            if let Some(found) = bad_row {
                return Err(ModelError::DimensionMismatch { what: format!("schedule {what} hours"), expected: h, found });
            }
        }
        if self.flows.len() != h || self.flows.iter().any(|f| f.len() != system.n_lines()) {
            return Err(ModelError::DimensionMismatch {
                what: "schedule flows".into(),
                expected: h * system.n_lines(),
                found: self.flows.iter().map(Vec::len).sum(),
            });
        }
        if self.angles.len() != h || self.angles.iter().any(|a| a.len() != system.n_buses()) {
            return Err(ModelError::DimensionMismatch {
                what: "schedule angles".into(),
                expected: h * system.n_buses(),
                found: self.angles.iter().map(Vec::len).sum(),
            });
        }
        Ok(())
    }
}

/// Corrective redispatch of one schedule under one renewable realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedispatchOutcome {
    /// `[unit][hour]`.
    pub generation: Vec<Vec<f64>>,
    /// `[hour][line]`.
    pub flows: Vec<Vec<f64>>,
    /// `[hour][bus]`.
    pub angles: Vec<Vec<f64>>,
    /// Renewable spillage, `[hour][bus]`.
    pub spillage: Vec<Vec<f64>>,
    /// Load shedding, `[hour][bus]`.
    pub shedding: Vec<Vec<f64>>,
    /// Total shedding plus spillage in MWh.
    pub imbalance: f64,
}

impl RedispatchOutcome {
    pub fn hourly_shedding(&self) -> Vec<f64> {
        self.shedding.iter().map(|h| h.iter().sum()).collect()
    }

    pub fn hourly_spillage(&self) -> Vec<f64> {
        self.spillage.iter().map(|h| h.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    pub production: f64,
    pub reserve: f64,
    pub startup_shutdown: f64,
}

impl CostBreakdown {
    pub fn new(production: f64, reserve: f64, startup_shutdown: f64) -> Self {
        CostBreakdown { total: production + reserve + startup_shutdown, production, reserve, startup_shutdown }
    }
}

impl std::ops::Add for CostBreakdown {
    type Output = CostBreakdown;
    fn add(self, rhs: CostBreakdown) -> CostBreakdown {
        CostBreakdown::new(
            self.production + rhs.production,
            self.reserve + rhs.reserve,
            self.startup_shutdown + rhs.startup_shutdown,
        )
    }
}

/// Ramp envelope `(a, b)` for a unit moving from status `on_prev` to `on_now`.
///
/// `a` bounds the increase `g_h - g_{h-1}`, `b` bounds the decrease:
///
/// ```text
/// a = RU v_{h-1} + SU (v_h - v_{h-1}) + Gmax (1 - v_h)
/// b = RD v_h + SD (v_{h-1} - v_h) + Gmax (1 - v_{h-1})
/// ```
pub fn ramp_envelope(unit: &ThermalUnit, on_now: bool, on_prev: bool) -> (f64, f64) {
    let v = f64::from(u8::from(on_now));
    let p = f64::from(u8::from(on_prev));
    let a = unit.ramp_up * p + unit.startup_ramp * (v - p) + unit.g_max * (1.0 - v);
    let b = unit.ramp_down * v + unit.shutdown_ramp * (p - v) + unit.g_max * (1.0 - p);
    (a, b)
}

/// Cost of a schedule, split into production, reserve and start/stop components.
pub fn schedule_cost(system: &SystemModel, schedule: &CommitmentSchedule) -> Result<CostBreakdown, ModelError> {
    schedule.check_dimensions(system)?;
    Ok(cost_over_hours(system, schedule, 0..system.horizon))
}

pub(crate) fn cost_over_hours(system: &SystemModel, schedule: &CommitmentSchedule, hours: Range<usize>) -> CostBreakdown {
    let mut production = 0.0;
    let mut reserve = 0.0;
    let mut startup_shutdown = 0.0;
    for h in hours {
        for (i, unit) in system.thermal_units.iter().enumerate() {
            production += unit.fuel_cost * schedule.generation[i][h];
            reserve += unit.reserve_up_cost * schedule.reserve_up[i][h] + unit.reserve_down_cost * schedule.reserve_down[i][h];
            startup_shutdown += schedule.startup_costs[i][h] + schedule.shutdown_costs[i][h];
        }
    }
    CostBreakdown::new(production, reserve, startup_shutdown)
}

/// Check a schedule against the first-level constraints: nodal balance with
/// the nominal forecast, line limits, DC flow, generation and reserve boxes,
/// ramp envelopes, minimum up/down times and start/stop cost bounds.
pub fn validate_schedule(
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    tolerance: f64,
) -> Result<Vec<Violation>, ModelError> {
    schedule.check_dimensions(system)?;
    let mut out = Vec::new();
    let horizon = system.horizon;
    let tol = tolerance;

    for h in 0..horizon {
        let hour = h + 1;
        // nodal balance
        let mut net = network.nodal_inflow(&schedule.flows[h]);
        for (b, row) in network.thermal_incidence.iter().enumerate() {
            net[b] += row.iter().enumerate().map(|(i, x)| x * schedule.generation[i][h]).sum::<f64>();
        }
        let renewable = system.nodal_renewable(&system.nominal_forecast, h);
        for (b, bus) in system.buses.iter().enumerate() {
            let residual = net[b] + renewable[b] - bus.demand[h];
            if residual.abs() > tol {
                out.push(Violation::new(format!("bus {} hour {hour}", bus.id), "nodal balance", format!("residual {residual}")));
            }
        }
        let implied = network.flows_from_angles(&schedule.angles[h]);
        for (l, line) in system.lines.iter().enumerate() {
            let f = schedule.flows[h][l];
            if f.abs() > line.capacity + tol {
                out.push(Violation::new(format!("line {} hour {hour}", line.id), "flow limit", format!("|{f}| > {}", line.capacity)));
            }
            if (f - implied[l]).abs() > tol {
                out.push(Violation::new(
                    format!("line {} hour {hour}", line.id),
                    "flow = S theta",
                    format!("flow {f} vs angles {}", implied[l]),
                ));
            }
        }
    }

    for (i, unit) in system.thermal_units.iter().enumerate() {
        let name = |h: usize| format!("thermal {} hour {}", unit.id, h + 1);
        for h in 0..horizon {
            let on = schedule.on_off[i][h];
            let v = if on { 1.0 } else { 0.0 };
            let g = schedule.generation[i][h];
            let ru = schedule.reserve_up[i][h];
            let rd = schedule.reserve_down[i][h];
            if ru < -tol || rd < -tol {
                out.push(Violation::new(name(h), "reserves >= 0", format!("up {ru} down {rd}")));
            }
            if g < unit.g_min * v + rd - tol {
                out.push(Violation::new(name(h), "g >= Gmin v + r_dn", format!("{g} < {}", unit.g_min * v + rd)));
            }
            if g > unit.g_max * v - ru + tol {
                out.push(Violation::new(name(h), "g <= Gmax v - r_up", format!("{g} > {}", unit.g_max * v - ru)));
            }
            if ru > unit.corrective_up_limit * v + tol {
                out.push(Violation::new(name(h), "r_up <= R_up v", format!("{ru}")));
            }
            if rd > unit.corrective_down_limit * v + tol {
                out.push(Violation::new(name(h), "r_dn <= R_dn v", format!("{rd}")));
            }

            let prev_on = if h == 0 { unit.initially_on() } else { schedule.on_off[i][h - 1] };
            let prev_g = if h == 0 { unit.init_output } else { schedule.generation[i][h - 1] };
            let (a, b) = ramp_envelope(unit, on, prev_on);
            if g - prev_g > a + tol {
                out.push(Violation::new(name(h), "ramp up envelope", format!("increase {} > {a}", g - prev_g)));
            }
            if prev_g - g > b + tol {
                out.push(Violation::new(name(h), "ramp down envelope", format!("decrease {} > {b}", prev_g - g)));
            }

            let started = on && !prev_on;
            let stopped = !on && prev_on;
            let su = schedule.startup_costs[i][h];
            let sd = schedule.shutdown_costs[i][h];
            if su < -tol || (started && su < unit.startup_cost - tol) {
                out.push(Violation::new(name(h), "startup cost bound", format!("{su}")));
            }
            if sd < -tol || (stopped && sd < unit.shutdown_cost - tol) {
                out.push(Violation::new(name(h), "shutdown cost bound", format!("{sd}")));
            }
        }

        let forced = unit.forced_initial_periods(horizon);
        if let Some(h) = (0..forced).find(|h| schedule.on_off[i][*h] != unit.initially_on()) {
            out.push(Violation::new(name(h), "initial minimum up/down time", "status changed before accrued time elapsed"));
        }
        for h in 0..horizon {
            let on = schedule.on_off[i][h];
            let prev_on = if h == 0 { unit.initially_on() } else { schedule.on_off[i][h - 1] };
            if on && !prev_on {
                let end = (h + unit.min_up).min(horizon);
                if (h..end).any(|t| !schedule.on_off[i][t]) {
                    out.push(Violation::new(name(h), "minimum up time", format!("must stay on {} periods", unit.min_up)));
                }
            }
            if !on && prev_on {
                let end = (h + unit.min_down).min(horizon);
                if (h..end).any(|t| schedule.on_off[i][t]) {
                    out.push(Violation::new(name(h), "minimum down time", format!("must stay off {} periods", unit.min_down)));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::default_network;
    use crate::system::tests::one_bus_system;
    use proptest::prelude::*;

    fn unit() -> ThermalUnit {
        ThermalUnit { ramp_up: 30.0, ramp_down: 35.0, startup_ramp: 50.0, shutdown_ramp: 55.0, ..one_bus_system().thermal_units[0].clone() }
    }

    #[test]
    fn envelope_on_on() {
        let (a, b) = ramp_envelope(&unit(), true, true);
        assert_eq!((a, b), (30.0, 35.0));
    }

    #[test]
    fn envelope_start() {
        let (a, _) = ramp_envelope(&unit(), true, false);
        assert_eq!(a, 50.0);
    }

    #[test]
    fn envelope_stop() {
        let (_, b) = ramp_envelope(&unit(), false, true);
        assert_eq!(b, 55.0);
    }

    proptest! {
        #[test]
        fn envelope_nonnegative_where_it_binds(
            ru in 0.0..500.0f64, rd in 0.0..500.0f64, su in 0.0..500.0f64, sd in 0.0..500.0f64, gmax in 0.0..500.0f64,
        ) {
            let u = ThermalUnit { ramp_up: ru, ramp_down: rd, startup_ramp: su, shutdown_ramp: sd, g_max: gmax, ..unit() };
            for (now, prev) in [(true, true), (true, false), (false, true)] {
                let (a, b) = ramp_envelope(&u, now, prev);
                // (0,1) can give a < 0 when SU > RU + Gmax, but then g_h = 0 so only b binds
                if now { prop_assert!(a >= 0.0); }
                if prev || now { prop_assert!(b >= 0.0 || !prev); }
            }
        }
    }

    fn single_hour_schedule(g: f64, ru: f64) -> CommitmentSchedule {
        let mut s = CommitmentSchedule::zeros(1, 0, 1, 1);
        s.on_off[0][0] = true;
        s.generation[0][0] = g;
        s.reserve_up[0][0] = ru;
        s
    }

    #[test]
    fn zero_schedule_costs_nothing() {
        let sys = one_bus_system();
        let c = schedule_cost(&sys, &CommitmentSchedule::zeros(1, 0, 1, 1)).unwrap();
        assert_eq!(c, CostBreakdown::default());
    }

    #[test]
    fn one_unit_one_hour_cost() {
        let sys = one_bus_system();
        let c = schedule_cost(&sys, &single_hour_schedule(100.0, 10.0)).unwrap();
        assert_eq!(c, CostBreakdown { total: 1020.0, production: 1000.0, reserve: 20.0, startup_shutdown: 0.0 });
    }

    #[test]
    fn cost_rejects_wrong_dimensions() {
        let sys = one_bus_system();
        assert!(schedule_cost(&sys, &CommitmentSchedule::zeros(2, 0, 1, 1)).is_err());
    }

    proptest! {
        #[test]
        fn cost_is_additive_over_hours(
            values in proptest::collection::vec((0.0..200.0f64, 0.0..30.0f64, 0.0..30.0f64, 0.0..50.0f64), 2..24),
            split in 0usize..24,
        ) {
            let horizon = values.len();
            let split = split.min(horizon);
            let mut sys = one_bus_system();
            sys.horizon = horizon;
            sys.buses[0].demand = vec![0.0; horizon];
            sys.nominal_forecast = vec![vec![0.0; horizon]];
            let mut s = CommitmentSchedule::zeros(1, 0, 1, horizon);
            for (h, (g, ru, rd, su)) in values.iter().enumerate() {
                s.generation[0][h] = *g;
                s.reserve_up[0][h] = *ru;
                s.reserve_down[0][h] = *rd;
                s.startup_costs[0][h] = *su;
            }
            let whole = schedule_cost(&sys, &s).unwrap();
            let parts = cost_over_hours(&sys, &s, 0..split) + cost_over_hours(&sys, &s, split..horizon);
            prop_assert!((whole.total - parts.total).abs() <= 1e-9 * whole.total.max(1.0));
            prop_assert!((whole.total - (whole.production + whole.reserve + whole.startup_shutdown)).abs() <= 1e-9 * whole.total.max(1.0));
        }
    }

    fn three_hour_system() -> SystemModel {
        let mut sys = one_bus_system();
        sys.horizon = 3;
        sys.buses[0].demand = vec![100.0, 100.0, 100.0];
        sys.nominal_forecast = vec![vec![20.0, 20.0, 20.0]];
        sys
    }

    fn balanced_three_hour() -> CommitmentSchedule {
        let mut s = CommitmentSchedule::zeros(1, 0, 1, 3);
        for h in 0..3 {
            s.on_off[0][h] = true;
            s.generation[0][h] = 80.0;
        }
        s
    }

    #[test]
    fn balanced_schedule_is_valid() {
        let sys = three_hour_system();
        let net = default_network(&sys).unwrap();
        assert!(validate_schedule(&sys, &net, &balanced_three_hour(), 1e-6).unwrap().is_empty());
    }

    #[test]
    fn ramp_breach_is_reported() {
        let mut sys = three_hour_system();
        sys.buses[0].demand = vec![100.0, 180.0, 100.0];
        let net = default_network(&sys).unwrap();
        let mut s = balanced_three_hour();
        s.generation[0][1] = 160.0; // +80 against a ramp limit of 50
        let v = validate_schedule(&sys, &net, &s, 1e-6).unwrap();
        assert!(v.iter().any(|x| x.rule == "ramp up envelope"), "{v:?}");
    }

    #[test]
    fn min_up_breach_is_reported() {
        let mut sys = three_hour_system();
        sys.thermal_units[0].init_status = -5;
        sys.thermal_units[0].init_output = 0.0;
        sys.thermal_units[0].min_up = 3;
        sys.nominal_forecast = vec![vec![20.0, 100.0, 100.0]];
        let net = default_network(&sys).unwrap();
        let mut s = CommitmentSchedule::zeros(1, 0, 1, 3);
        s.on_off[0][0] = true;
        s.generation[0][0] = 40.0;
        sys.buses[0].demand = vec![60.0, 100.0, 100.0];
        let v = validate_schedule(&sys, &net, &s, 1e-6).unwrap();
        assert!(v.iter().any(|x| x.rule == "minimum up time"), "{v:?}");
    }
}
