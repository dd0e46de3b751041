//! Constraint blocks shared by the master, redispatch and benchmark models.

use super::model::{LinExpr, OptimizationModel, VarId};
use crate::error::ModelError;
use crate::network::NetworkMatrices;
use crate::schedule::{CommitmentSchedule, RedispatchOutcome};
use crate::system::SystemModel;

/// First-level quantities as seen by a redispatch block: constants for a
/// fixed schedule, variables inside the master. Indexed `[unit][hour]`.
pub(crate) struct FirstLevel {
    pub on: Vec<Vec<LinExpr>>,
    pub generation: Vec<Vec<LinExpr>>,
    pub reserve_up: Vec<Vec<LinExpr>>,
    pub reserve_down: Vec<Vec<LinExpr>>,
}

impl FirstLevel {
    pub fn fixed(schedule: &CommitmentSchedule) -> Self {
        let lift = |m: &Vec<Vec<f64>>| m.iter().map(|row| row.iter().map(|x| LinExpr::constant(*x)).collect()).collect();
        FirstLevel {
            on: schedule.on_off.iter().map(|row| row.iter().map(|b| LinExpr::constant(if *b { 1.0 } else { 0.0 })).collect()).collect(),
            generation: lift(&schedule.generation),
            reserve_up: lift(&schedule.reserve_up),
            reserve_down: lift(&schedule.reserve_down),
        }
    }

    fn on_prev(&self, system: &SystemModel, unit: usize, hour: usize) -> LinExpr {
        if hour == 0 {
            LinExpr::constant(if system.thermal_units[unit].initially_on() { 1.0 } else { 0.0 })
        } else {
            self.on[unit][hour - 1].clone()
        }
    }

    /// Ramp envelope `(a, b)` of `unit` in `hour` as affine expressions of the status.
    pub fn ramp_limits(&self, system: &SystemModel, unit: usize, hour: usize) -> (LinExpr, LinExpr) {
        let u = &system.thermal_units[unit];
        let v = &self.on[unit][hour];
        let p = self.on_prev(system, unit, hour);
        let mut a = LinExpr::constant(u.g_max);
        a.add_scaled(&p, u.ramp_up - u.startup_ramp).add_scaled(v, u.startup_ramp - u.g_max);
        let mut b = LinExpr::constant(u.g_max);
        b.add_scaled(v, u.ramp_down - u.shutdown_ramp).add_scaled(&p, u.shutdown_ramp - u.g_max);
        (a, b)
    }
}

pub(crate) fn check_profile(system: &SystemModel, profile: &[Vec<f64>], what: &str) -> Result<(), ModelError> {
    if profile.len() != system.n_renewable() {
        return Err(ModelError::DimensionMismatch { what: format!("{what} units"), expected: system.n_renewable(), found: profile.len() });
    }
    if let Some(row) = profile.iter().find(|r| r.len() != system.horizon) {
        return Err(ModelError::DimensionMismatch { what: format!("{what} hours"), expected: system.horizon, found: row.len() });
    }
    Ok(())
}

/// Variable name `symbol[entity,hour]` with an optional copy tag on the symbol.
pub(crate) fn name(symbol: &str, tag: &str, entity: impl std::fmt::Display, hour: usize) -> String {
    if tag.is_empty() {
        format!("{symbol}[{entity},{}]", hour + 1)
    } else {
        format!("{symbol}_{tag}[{entity},{}]", hour + 1)
    }
}

/// Variables of one redispatch copy. Hour-indexed vectors follow the
/// block's hour list; slack entries are `None` where their cap is zero.
#[derive(Debug, Clone)]
pub(crate) struct RedispatchVars {
    pub hours: Vec<usize>,
    pub generation: Vec<Vec<VarId>>,
    pub flows: Vec<Vec<VarId>>,
    pub angles: Vec<Vec<Option<VarId>>>,
    pub spillage: Vec<Vec<Option<VarId>>>,
    pub shedding: Vec<Vec<Option<VarId>>>,
}

impl RedispatchVars {
    pub fn imbalance(&self) -> LinExpr {
        let mut e = LinExpr::default();
        for v in self.spillage.iter().chain(&self.shedding).flatten().flatten() {
            e.add_term(*v, 1.0);
        }
        e
    }

    pub fn outcome(&self, values: &[f64]) -> RedispatchOutcome {
        let val = |v: &Option<VarId>| v.map_or(0.0, |x| clean(values[x.0]));
        let spillage: Vec<Vec<f64>> = self.spillage.iter().map(|h| h.iter().map(val).collect()).collect();
        let shedding: Vec<Vec<f64>> = self.shedding.iter().map(|h| h.iter().map(val).collect()).collect();
        let imbalance = spillage.iter().chain(&shedding).flatten().sum();
        RedispatchOutcome {
            generation: self.generation.iter().map(|u| u.iter().map(|v| values[v.0]).collect()).collect(),
            flows: self.flows.iter().map(|h| h.iter().map(|v| values[v.0]).collect()).collect(),
            angles: self.angles.iter().map(|h| h.iter().map(|v| v.map_or(0.0, |x| values[x.0])).collect()).collect(),
            spillage,
            shedding,
            imbalance,
        }
    }
}

/// Slack values below solver noise are reported as zero.
fn clean(x: f64) -> f64 {
    if x.abs() <= 1e-10 {
        0.0
    } else {
        x
    }
}

/// Add DC network variables (flows within limits, angles with the reference
/// fixed) and Kirchhoff rows `f = S θ` for one hour.
fn add_network_hour(
    model: &mut OptimizationModel,
    system: &SystemModel,
    network: &NetworkMatrices,
    tag: &str,
    hour: usize,
    symbols: (&str, &str, &str),
) -> (Vec<VarId>, Vec<Option<VarId>>) {
    let (fsym, tsym, ksym) = symbols;
    let flows: Vec<VarId> = system
        .lines
        .iter()
        .map(|line| model.continuous(name(fsym, tag, line.id, hour), -line.capacity, line.capacity))
        .collect();
    let angles: Vec<Option<VarId>> = system
        .buses
        .iter()
        .enumerate()
        .map(|(b, bus)| (b != network.reference_bus).then(|| model.continuous(name(tsym, tag, bus.id, hour), f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for (l, line) in system.lines.iter().enumerate() {
        let mut e = LinExpr::var(flows[l]);
        for (b, s) in network.angle_to_flow[l].iter().enumerate() {
            if let (Some(t), true) = (angles[b], *s != 0.0) {
                e.add_term(t, -s);
            }
        }
        model.eq(name(ksym, tag, line.id, hour), e, 0.0);
    }
    (flows, angles)
}

/// Net inflow expression `-A' f` at each bus.
fn inflow(network: &NetworkMatrices, flows: &[VarId], n_buses: usize) -> Vec<LinExpr> {
    let mut out = vec![LinExpr::default(); n_buses];
    for (l, row) in network.line_bus.iter().enumerate() {
        for (b, a) in row.iter().enumerate() {
            if *a != 0.0 {
                out[b].add_term(flows[l], -a);
            }
        }
    }
    out
}

/// One copy of the redispatch constraints for `renewable` (`[unit][hour]`)
/// over `hours`. Ramp rows link consecutive hours and hour 0 to the initial
/// output; they are only valid when `hours` is `0..H`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_redispatch_block(
    model: &mut OptimizationModel,
    system: &SystemModel,
    network: &NetworkMatrices,
    first: &FirstLevel,
    renewable: &[Vec<f64>],
    hours: &[usize],
    ramps: bool,
    tag: &str,
) -> RedispatchVars {
    let n_bus = system.n_buses();
    let thermal_bus = system.thermal_bus_positions();
    let mut vars = RedispatchVars {
        hours: hours.to_vec(),
        generation: vec![Vec::with_capacity(hours.len()); system.n_thermal()],
        flows: Vec::new(),
        angles: Vec::new(),
        spillage: Vec::new(),
        shedding: Vec::new(),
    };
    for (k, &h) in hours.iter().enumerate() {
        for (i, unit) in system.thermal_units.iter().enumerate() {
            let gw = model.continuous(name("gw", tag, unit.id, h), f64::NEG_INFINITY, f64::INFINITY);
            vars.generation[i].push(gw);
        }
        let (flows, angles) = add_network_hour(model, system, network, tag, h, ("fw", "thw", "kirw"));
        let pu = system.nodal_renewable(renewable, h);
        let mut balance = inflow(network, &flows, n_bus);
        let mut spill = Vec::with_capacity(n_bus);
        let mut shed = Vec::with_capacity(n_bus);
        for (b, bus) in system.buses.iter().enumerate() {
            let sp = (pu[b] > 0.0).then(|| model.continuous(name("sp", tag, bus.id, h), 0.0, pu[b]));
            let sm = (bus.demand[h] > 0.0).then(|| model.continuous(name("sm", tag, bus.id, h), 0.0, bus.demand[h]));
            if let Some(v) = sp {
                balance[b].add_term(v, -1.0);
            }
            if let Some(v) = sm {
                balance[b].add_term(v, 1.0);
            }
            spill.push(sp);
            shed.push(sm);
        }
        for (i, pos) in thermal_bus.iter().enumerate() {
            balance[*pos].add_term(vars.generation[i][k], 1.0);
        }
        for (b, bus) in system.buses.iter().enumerate() {
            model.eq(name("balw", tag, bus.id, h), std::mem::take(&mut balance[b]), bus.demand[h] - pu[b]);
        }
        for (i, unit) in system.thermal_units.iter().enumerate() {
            let gw = LinExpr::var(vars.generation[i][k]);
            let g = &first.generation[i][h];
            let lower = g.clone() - first.reserve_down[i][h].clone();
            let upper = g.clone() + first.reserve_up[i][h].clone();
            model.ge(name("boxdn", tag, unit.id, h), gw.clone(), lower);
            model.le(name("boxup", tag, unit.id, h), gw.clone(), upper);
            if ramps {
                let prev = if k == 0 {
                    debug_assert_eq!(h, 0);
                    LinExpr::constant(unit.init_output)
                } else {
                    LinExpr::var(vars.generation[i][k - 1])
                };
                let (a, b) = first.ramp_limits(system, i, h);
                model.le(name("rampupw", tag, unit.id, h), gw.clone() - prev.clone(), a);
                model.le(name("rampdnw", tag, unit.id, h), prev - gw, b);
            }
        }
        vars.flows.push(flows);
        vars.angles.push(angles);
        vars.spillage.push(spill);
        vars.shedding.push(shed);
    }
    vars
}

/// First-level decision variables, `[unit][hour]` and `[hour][line|bus]`.
#[derive(Debug, Clone)]
pub(crate) struct FirstLevelVars {
    pub on: Vec<Vec<VarId>>,
    pub generation: Vec<Vec<VarId>>,
    pub reserve_up: Vec<Vec<VarId>>,
    pub reserve_down: Vec<Vec<VarId>>,
    pub startup: Vec<Vec<VarId>>,
    pub shutdown: Vec<Vec<VarId>>,
    pub flows: Vec<Vec<VarId>>,
    pub angles: Vec<Vec<Option<VarId>>>,
}

impl FirstLevelVars {
    pub fn terms(&self) -> FirstLevel {
        let lift = |m: &Vec<Vec<VarId>>| m.iter().map(|r| r.iter().map(|v| LinExpr::var(*v)).collect()).collect();
        FirstLevel {
            on: lift(&self.on),
            generation: lift(&self.generation),
            reserve_up: lift(&self.reserve_up),
            reserve_down: lift(&self.reserve_down),
        }
    }

    /// Objective: production, reserve and start/stop costs.
    pub fn cost(&self, system: &SystemModel) -> LinExpr {
        let mut e = LinExpr::default();
        for (i, u) in system.thermal_units.iter().enumerate() {
            for h in 0..system.horizon {
                e.add_term(self.generation[i][h], u.fuel_cost)
                    .add_term(self.reserve_up[i][h], u.reserve_up_cost)
                    .add_term(self.reserve_down[i][h], u.reserve_down_cost)
                    .add_term(self.startup[i][h], 1.0)
                    .add_term(self.shutdown[i][h], 1.0);
            }
        }
        e
    }

    pub fn schedule(&self, values: &[f64]) -> CommitmentSchedule {
        let grab = |m: &Vec<Vec<VarId>>| m.iter().map(|r| r.iter().map(|v| values[v.0]).collect()).collect();
        CommitmentSchedule {
            on_off: self.on.iter().map(|r| r.iter().map(|v| values[v.0] > 0.5).collect()).collect(),
            generation: grab(&self.generation),
            reserve_up: grab(&self.reserve_up),
            reserve_down: grab(&self.reserve_down),
            startup_costs: grab(&self.startup),
            shutdown_costs: grab(&self.shutdown),
            flows: grab(&self.flows),
            angles: self.angles.iter().map(|r| r.iter().map(|v| v.map_or(0.0, |x| values[x.0])).collect()).collect(),
        }
    }
}

/// First-level variables and constraints: nodal balance at the nominal
/// forecast, flow limits, DC flow, generation and reserve limits, ramp
/// envelopes and the commitment logic.
///
/// Commitment logic for a unit with minimum up time `UT`, minimum down time
/// `DT`, `v_0` from the initial status and `L` periods still owed from before
/// the horizon (hours numbered from 1):
///
/// ```text
/// v_h = v_0                                             h <= L
/// Σ_{τ=h}^{h+UT-1} v_τ >= UT (v_h - v_{h-1})             L < h <= H-UT+1
/// Σ_{τ=h}^{H} (v_τ - (v_h - v_{h-1})) >= 0               H-UT+1 < h <= H
/// Σ_{τ=h}^{h+DT-1} (1 - v_τ) >= DT (v_{h-1} - v_h)       L < h <= H-DT+1
/// Σ_{τ=h}^{H} (1 - v_τ - (v_{h-1} - v_h)) >= 0           H-DT+1 < h <= H
/// c^su_h >= SU_cost (v_h - v_{h-1}),  c^sd_h >= SD_cost (v_{h-1} - v_h),  c >= 0
/// ```
///
/// Up-time rows are omitted when `UT = 1` and down-time rows when `DT = 1`,
/// where they are implied by binarity.
pub(crate) fn add_first_level(model: &mut OptimizationModel, system: &SystemModel, network: &NetworkMatrices) -> FirstLevelVars {
    let horizon = system.horizon;
    let n_g = system.n_thermal();
    let mut vars = FirstLevelVars {
        on: vec![Vec::with_capacity(horizon); n_g],
        generation: vec![Vec::with_capacity(horizon); n_g],
        reserve_up: vec![Vec::with_capacity(horizon); n_g],
        reserve_down: vec![Vec::with_capacity(horizon); n_g],
        startup: vec![Vec::with_capacity(horizon); n_g],
        shutdown: vec![Vec::with_capacity(horizon); n_g],
        flows: Vec::new(),
        angles: Vec::new(),
    };
    for (i, u) in system.thermal_units.iter().enumerate() {
        let forced = u.forced_initial_periods(horizon);
        for h in 0..horizon {
            let v = model.binary(name("v", "", u.id, h));
            if h < forced {
                let x = if u.initially_on() { 1.0 } else { 0.0 };
                model.variables[v.0].lower = x;
                model.variables[v.0].upper = x;
            }
            vars.on[i].push(v);
            vars.generation[i].push(model.continuous(name("g", "", u.id, h), 0.0, f64::INFINITY));
            vars.reserve_up[i].push(model.continuous(name("rup", "", u.id, h), 0.0, f64::INFINITY));
            vars.reserve_down[i].push(model.continuous(name("rdn", "", u.id, h), 0.0, f64::INFINITY));
            vars.startup[i].push(model.continuous(name("csu", "", u.id, h), 0.0, f64::INFINITY));
            vars.shutdown[i].push(model.continuous(name("csd", "", u.id, h), 0.0, f64::INFINITY));
        }
    }
    let thermal_bus = system.thermal_bus_positions();
    for h in 0..horizon {
        let (flows, angles) = add_network_hour(model, system, network, "", h, ("f", "th", "kir"));
        let pu = system.nodal_renewable(&system.nominal_forecast, h);
        let mut balance = inflow(network, &flows, system.n_buses());
        for (i, pos) in thermal_bus.iter().enumerate() {
            balance[*pos].add_term(vars.generation[i][h], 1.0);
        }
        for (b, bus) in system.buses.iter().enumerate() {
            model.eq(name("bal", "", bus.id, h), std::mem::take(&mut balance[b]), bus.demand[h] - pu[b]);
        }
        vars.flows.push(flows);
        vars.angles.push(angles);
    }
    let terms = vars.terms();
    for (i, u) in system.thermal_units.iter().enumerate() {
        let status = |h: isize| -> LinExpr {
            if h < 0 {
                LinExpr::constant(if u.initially_on() { 1.0 } else { 0.0 })
            } else {
                LinExpr::var(vars.on[i][h as usize])
            }
        };
        for h in 0..horizon {
            let v = LinExpr::var(vars.on[i][h]);
            let g = LinExpr::var(vars.generation[i][h]);
            let ru = LinExpr::var(vars.reserve_up[i][h]);
            let rd = LinExpr::var(vars.reserve_down[i][h]);
            model.ge(name("gmin", "", u.id, h), g.clone() - rd.clone(), v.clone() * u.g_min);
            model.le(name("gmax", "", u.id, h), g.clone() + ru.clone(), v.clone() * u.g_max);
            model.le(name("rupcap", "", u.id, h), ru, v.clone() * u.corrective_up_limit);
            model.le(name("rdncap", "", u.id, h), rd, v.clone() * u.corrective_down_limit);
            let prev_g = if h == 0 { LinExpr::constant(u.init_output) } else { LinExpr::var(vars.generation[i][h - 1]) };
            let (a, b) = terms.ramp_limits(system, i, h);
            model.le(name("rampup", "", u.id, h), g.clone() - prev_g.clone(), a);
            model.le(name("rampdn", "", u.id, h), prev_g - g, b);
            let change = v.clone() - status(h as isize - 1);
            model.ge(name("su", "", u.id, h), LinExpr::var(vars.startup[i][h]), change.clone() * u.startup_cost);
            model.ge(name("sd", "", u.id, h), LinExpr::var(vars.shutdown[i][h]), change * -u.shutdown_cost);
        }
        let forced = u.forced_initial_periods(horizon);
        let (up_from, down_from) = if u.initially_on() { (forced, 0) } else { (0, forced) };
        if u.min_up > 1 {
            for h in up_from..horizon {
                let change = status(h as isize) - status(h as isize - 1);
                if h + u.min_up <= horizon {
                    let mut window = LinExpr::default();
                    for t in h..h + u.min_up {
                        window.add_term(vars.on[i][t], 1.0);
                    }
                    model.ge(name("minup", "", u.id, h), window, change * u.min_up as f64);
                } else {
                    let mut tail = LinExpr::default();
                    for t in h..horizon {
                        tail.add_term(vars.on[i][t], 1.0);
                        tail.add_scaled(&change, -1.0);
                    }
                    model.ge(name("minup", "", u.id, h), tail, 0.0);
                }
            }
        }
        if u.min_down > 1 {
            for h in down_from..horizon {
                let change = status(h as isize - 1) - status(h as isize);
                if h + u.min_down <= horizon {
                    let mut window = LinExpr::constant(u.min_down as f64);
                    for t in h..h + u.min_down {
                        window.add_term(vars.on[i][t], -1.0);
                    }
                    model.ge(name("mindn", "", u.id, h), window, change * u.min_down as f64);
                } else {
                    let mut tail = LinExpr::default();
                    for t in h..horizon {
                        tail.constant += 1.0;
                        tail.add_term(vars.on[i][t], -1.0);
                        tail.add_scaled(&change, -1.0);
                    }
                    model.ge(name("mindn", "", u.id, h), tail, 0.0);
                }
            }
        }
    }
    vars
}
