//! Dual of the redispatch LP and the MILP oracle built on it.
//!
//! For a fixed schedule the redispatch LP
//!
//! ```text
//! min Σ_h Σ_b (sp_bh + sm_bh)
//!   β:  Σ_{i@b} gw_ih − Σ_l A_lb f_lh − sp_bh + sm_bh = d_bh − Pu_bh
//!   ω:  f_lh − Σ_b S_lb θ_bh = 0,              −f̄_l <= f_lh <= f̄_l  (π, σ)
//!   ζ:  gw_ih − gw_i,h−1 <= a_ih,   κ:  gw_i,h−1 − gw_ih <= b_ih    (gw_i,0 = g⁰_i)
//!   γ:  gw_ih >= g_ih − rdn_ih,     τ:  gw_ih <= g_ih + rup_ih
//!   0 <= sm_bh <= d_bh (ς),         0 <= sp_bh <= Pu_bh (ξ)
//! ```
//!
//! has the dual
//!
//! ```text
//! max Σ β(d − Pu) − Σ ξ Pu − Σ ς d − Σ f̄(π + σ) − Σ ζ a − Σ κ b
//!     − Σ_i ζ_i1 g⁰_i + Σ_i κ_i1 g⁰_i + Σ γ(g − rdn) − Σ τ(g + rup)
//!   sp:  −β_bh − ξ_bh <= 1          sm:  β_bh − ς_bh <= 1
//!   f:   Σ_b A_lb β_bh − ω_lh + σ_lh − π_lh = 0
//!   θ:   Σ_l S_lb ω_lh = 0   (b not the reference)
//!   gw:  −β_b(i)h + ζ_ih − ζ_i,h+1 − κ_ih + κ_i,h+1 − γ_ih + τ_ih = 0
//! ```
//!
//! Only `η = β + ξ` multiplies the renewable output. In the oracle `η` is
//! boxed through `β ∈ [−B_β, B_β]`, `ξ ∈ [0, B_ξ]` at buses with renewables
//! and each product with a binary is replaced by a McCormick envelope, which
//! is exact for binary factors.

use super::model::{LinExpr, ObjectiveSense, OptimizationModel, VarId};
use crate::error::ModelError;
use crate::network::NetworkMatrices;
use crate::schedule::{ramp_envelope, CommitmentSchedule};
use crate::system::SystemModel;
use crate::uncertainty::{budget_value_levels, BudgetUncertaintySet, Scenario, ScenarioSet, Uncertainty};
use serde::{Deserialize, Serialize};

/// Boxes on the duals that multiply renewable output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualBounds {
    pub beta: f64,
    pub xi: f64,
    /// Box used for a second attempt when the audit finds the first one too tight.
    pub fallback: f64,
    /// Forbid simultaneous upward and downward deviation of one budget coordinate.
    pub exclusive_directions: bool,
    /// Add `Σ_k w_k = η` where every scenario has a product term.
    pub hull_tightening: bool,
}

impl Default for DualBounds {
    fn default() -> Self {
        DualBounds { beta: 1.0, xi: 1.0, fallback: 10.0, exclusive_directions: false, hull_tightening: true }
    }
}

impl DualBounds {
    pub fn with_box(self, bound: f64) -> Self {
        DualBounds { beta: bound, xi: bound, ..self }
    }

    fn check(&self) -> Result<(), ModelError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(ModelError::UnboundedDualBox("beta"));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(ModelError::UnboundedDualBox("xi"));
        }
        Ok(())
    }

    fn eta_range(&self) -> (f64, f64) {
        (-self.beta, self.beta + self.xi)
    }
}

struct DualBlock {
    /// Objective terms that do not involve renewable output.
    objective: LinExpr,
    /// `η_bh` at buses with renewable units, `[hour][bus]`.
    eta: Vec<Vec<Option<LinExpr>>>,
}

fn name(symbol: &str, entity: impl std::fmt::Display, hour: usize) -> String {
    format!("{symbol}[{entity},{}]", hour + 1)
}

fn add_dual_block(
    model: &mut OptimizationModel,
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    bounds: Option<&DualBounds>,
) -> DualBlock {
    let inf = f64::INFINITY;
    let horizon = system.horizon;
    let mut has_renewable = vec![false; system.n_buses()];
    for pos in system.renewable_bus_positions() {
        has_renewable[pos] = true;
    }
    let thermal_bus = system.thermal_bus_positions();
    let mut obj = LinExpr::default();
    let mut eta = Vec::with_capacity(horizon);
    let mut zeta: Vec<Vec<VarId>> = Vec::with_capacity(horizon);
    let mut kappa: Vec<Vec<VarId>> = Vec::with_capacity(horizon);
    let mut beta_all = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let mut beta = Vec::with_capacity(system.n_buses());
        let mut eta_h = Vec::with_capacity(system.n_buses());
        for (b, bus) in system.buses.iter().enumerate() {
            let d = bus.demand[h];
            let (lo, hi) = match (bounds, has_renewable[b]) {
                (Some(bx), true) => (-bx.beta, bx.beta),
                _ => (-inf, inf),
            };
            let beta_v = model.continuous(name("beta", bus.id, h), lo, hi);
            obj.add_term(beta_v, d);
            if d > 0.0 {
                let vs = model.continuous(name("vsig", bus.id, h), 0.0, inf);
                obj.add_term(vs, -d);
                model.le(name("dsm", bus.id, h), LinExpr::var(beta_v) - LinExpr::var(vs), 1.0);
            }
            if has_renewable[b] {
                let xi = model.continuous(name("xi", bus.id, h), 0.0, bounds.map_or(inf, |bx| bx.xi));
                let e = LinExpr::var(beta_v) + LinExpr::var(xi);
                model.le(name("dsp", bus.id, h), -e.clone(), 1.0);
                eta_h.push(Some(e));
            } else {
                eta_h.push(None);
            }
            beta.push(beta_v);
        }
        let mut omega = Vec::with_capacity(system.n_lines());
        for (l, line) in system.lines.iter().enumerate() {
            let w = model.continuous(name("omega", line.id, h), -inf, inf);
            let mut row = LinExpr::term(w, -1.0);
            for (b, a) in network.line_bus[l].iter().enumerate() {
                if *a != 0.0 {
                    row.add_term(beta[b], *a);
                }
            }
            if line.capacity.is_finite() {
                let s = model.continuous(name("sigma", line.id, h), 0.0, inf);
                let p = model.continuous(name("pi", line.id, h), 0.0, inf);
                row.add_term(s, 1.0).add_term(p, -1.0);
                obj.add_term(s, -line.capacity).add_term(p, -line.capacity);
            }
            model.eq(name("df", line.id, h), row, 0.0);
            omega.push(w);
        }
        for (b, bus) in system.buses.iter().enumerate() {
            if b == network.reference_bus {
                continue;
            }
            let mut row = LinExpr::default();
            for (l, w) in omega.iter().enumerate() {
                let s = network.angle_to_flow[l][b];
                if s != 0.0 {
                    row.add_term(*w, s);
                }
            }
            model.eq(name("dth", bus.id, h), row, 0.0);
        }
        let mut z_h = Vec::with_capacity(system.n_thermal());
        let mut k_h = Vec::with_capacity(system.n_thermal());
        for (i, u) in system.thermal_units.iter().enumerate() {
            let z = model.continuous(name("zeta", u.id, h), 0.0, inf);
            let k = model.continuous(name("kappa", u.id, h), 0.0, inf);
            let on_prev = if h == 0 { u.initially_on() } else { schedule.on_off[i][h - 1] };
            let (a, bb) = ramp_envelope(u, schedule.on_off[i][h], on_prev);
            if h == 0 {
                obj.add_term(z, -(a + u.init_output)).add_term(k, -(bb - u.init_output));
            } else {
                obj.add_term(z, -a).add_term(k, -bb);
            }
            z_h.push(z);
            k_h.push(k);
        }
        zeta.push(z_h);
        kappa.push(k_h);
        beta_all.push(beta);
        eta.push(eta_h);
    }
    for h in 0..horizon {
        for (i, u) in system.thermal_units.iter().enumerate() {
            let g = schedule.generation[i][h];
            let gam = model.continuous(name("gamma", u.id, h), 0.0, inf);
            let tau = model.continuous(name("tau", u.id, h), 0.0, inf);
            obj.add_term(gam, g - schedule.reserve_down[i][h]).add_term(tau, -(g + schedule.reserve_up[i][h]));
            let mut row = LinExpr::term(beta_all[h][thermal_bus[i]], -1.0);
            row.add_term(zeta[h][i], 1.0).add_term(kappa[h][i], -1.0).add_term(gam, -1.0).add_term(tau, 1.0);
            if h + 1 < horizon {
                row.add_term(zeta[h + 1][i], -1.0).add_term(kappa[h + 1][i], 1.0);
            }
            model.eq(name("dgw", u.id, h), row, 0.0);
        }
    }
    DualBlock { objective: obj, eta }
}

fn check_inputs(system: &SystemModel, schedule: &CommitmentSchedule, n_units: usize, horizon: usize) -> Result<(), ModelError> {
    schedule.check_dimensions(system)?;
    if n_units != system.n_renewable() {
        return Err(ModelError::DimensionMismatch { what: "uncertainty units".into(), expected: system.n_renewable(), found: n_units });
    }
    if horizon != system.horizon {
        return Err(ModelError::DimensionMismatch { what: "uncertainty hours".into(), expected: system.horizon, found: horizon });
    }
    Ok(())
}

/// Dual of the redispatch LP at a fixed realization. With `bounds = None`
/// every dual is unrestricted apart from its sign, so by strong duality the
/// optimum equals the redispatch LP optimum.
pub fn build_redispatch_dual(
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    scenario: &Scenario,
    bounds: Option<&DualBounds>,
) -> Result<OptimizationModel, ModelError> {
    check_inputs(system, schedule, scenario.n_units(), scenario.horizon())?;
    if let Some(b) = bounds {
        b.check()?;
    }
    let mut model = OptimizationModel::new("redispatch_dual", ObjectiveSense::Maximize);
    let mut block = add_dual_block(&mut model, system, network, schedule, bounds);
    let mut obj = std::mem::take(&mut block.objective);
    for h in 0..system.horizon {
        let pu = system.nodal_renewable(&scenario.values, h);
        for (b, e) in block.eta[h].iter().enumerate() {
            if let Some(e) = e {
                obj.add_scaled(e, -pu[b]);
            }
        }
    }
    model.add_objective(&obj);
    Ok(model)
}

/// Add `w = e·y` for binary `y` and `e ∈ [lo, hi]`.
fn add_product(model: &mut OptimizationModel, label: String, e: &LinExpr, y: VarId, (lo, hi): (f64, f64)) -> VarId {
    let w = model.continuous(label.clone(), lo.min(0.0), hi.max(0.0));
    let wv = LinExpr::var(w);
    let yv = LinExpr::var(y);
    model.ge(format!("mc1_{label}"), wv.clone(), yv.clone() * lo);
    model.le(format!("mc2_{label}"), wv.clone(), yv.clone() * hi);
    model.ge(format!("mc3_{label}"), wv.clone(), e.clone() - (LinExpr::constant(1.0) - yv.clone()) * hi);
    model.le(format!("mc4_{label}"), wv, e.clone() - (LinExpr::constant(1.0) - yv) * lo);
    w
}

/// Deviation levels of one coordinate with their up and down binaries.
type Levels = Vec<(f64, Option<VarId>, Option<VarId>)>;

#[derive(Debug, Clone)]
enum Selection {
    /// `α_k`, one per scenario.
    Scenarios(Vec<VarId>),
    /// Per `[unit][hour]`.
    Budget(Vec<Vec<Levels>>),
}

/// The MILP oracle and the handles needed to recover the worst case.
#[derive(Debug, Clone)]
pub struct DualOracleModel {
    pub model: OptimizationModel,
    selection: Selection,
}

impl DualOracleModel {
    /// Index of the selected scenario (scenario-hull oracle only).
    pub fn selected_index(&self, values: &[f64]) -> Option<usize> {
        match &self.selection {
            Selection::Scenarios(alpha) => alpha.iter().position(|a| values[a.0] > 0.5),
            Selection::Budget(_) => None,
        }
    }

    /// Worst-case realization encoded by `values`.
    pub fn worst_case(&self, uncertainty: &Uncertainty, values: &[f64]) -> Option<Scenario> {
        match (&self.selection, uncertainty) {
            (Selection::Scenarios(_), Uncertainty::Scenarios(set)) => self.selected_index(values).map(|k| set.scenarios[k].clone()),
            (Selection::Budget(levels), Uncertainty::Budget(set)) => {
                let mut u = set.nominal.clone();
                let mut tag = Vec::new();
                for (r, unit) in levels.iter().enumerate() {
                    for (h, cells) in unit.iter().enumerate() {
                        for (v, up, down) in cells {
                            if up.is_some_and(|y| values[y.0] > 0.5) {
                                u[r][h] += set.dev_up[r][h] * v;
                                tag.push(format!("+{r}.{h}"));
                            }
                            if down.is_some_and(|y| values[y.0] > 0.5) {
                                u[r][h] -= set.dev_down[r][h] * v;
                                tag.push(format!("-{r}.{h}"));
                            }
                        }
                    }
                }
                let label = if tag.is_empty() { "nominal".to_string() } else { format!("budget[{}]", tag.join(" ")) };
                Some(Scenario::new(label, u))
            }
            _ => None,
        }
    }
}

/// Single-level MILP for the worst-case imbalance of `schedule` over
/// `uncertainty`.
///
/// Scenario hull: binary `α_k` with `Σ α_k = 1` picks a scenario and
/// `w_kbh = α_k η_bh` where scenario `k` has output at bus `b`.
///
/// Budget set: every nonzero value `v` a deviation can take at an extreme
/// point (see `budget_value_levels`) gets binaries `y⁺_rhv`, `y⁻_rhv` with at
/// most one level per direction, `z± = Σ_v v y±`, the hour and unit budget
/// rows on `z⁺ + z⁻`, and `w = η y`. With integral `Γ|R|` the only level is 1.
pub fn build_dual_oracle_milp(
    system: &SystemModel,
    network: &NetworkMatrices,
    schedule: &CommitmentSchedule,
    uncertainty: &Uncertainty,
    bounds: &DualBounds,
) -> Result<DualOracleModel, ModelError> {
    check_inputs(system, schedule, uncertainty.n_units(), uncertainty.horizon())?;
    bounds.check()?;
    let mut model = OptimizationModel::new("oracle", ObjectiveSense::Maximize);
    let mut block = add_dual_block(&mut model, system, network, schedule, Some(bounds));
    let mut obj = std::mem::take(&mut block.objective);
    let range = bounds.eta_range();
    let selection = match uncertainty {
        Uncertainty::Scenarios(set) => scenario_products(&mut model, system, set, &block, range, bounds, &mut obj)?,
        Uncertainty::Budget(set) => budget_products(&mut model, system, set, &block, range, bounds, &mut obj),
    };
    model.add_objective(&obj);
    Ok(DualOracleModel { model, selection })
}

fn scenario_products(
    model: &mut OptimizationModel,
    system: &SystemModel,
    set: &ScenarioSet,
    block: &DualBlock,
    range: (f64, f64),
    bounds: &DualBounds,
    obj: &mut LinExpr,
) -> Result<Selection, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyUncertainty);
    }
    let alpha: Vec<VarId> = (0..set.len()).map(|k| model.binary(format!("alpha[{k}]"))).collect();
    let mut sum = LinExpr::default();
    for a in &alpha {
        sum.add_term(*a, 1.0);
    }
    model.eq("select", sum, 1.0);
    for h in 0..system.horizon {
        let pu: Vec<Vec<f64>> = set.scenarios.iter().map(|s| system.nodal_renewable(&s.values, h)).collect();
        for (b, bus) in system.buses.iter().enumerate() {
            let Some(eta) = &block.eta[h][b] else { continue };
            let mut hull = LinExpr::default();
            let mut complete = true;
            for (k, a) in alpha.iter().enumerate() {
                if pu[k][b] == 0.0 {
                    complete = false;
                    continue;
                }
                let w = add_product(model, format!("w_s{k}[{},{}]", bus.id, h + 1), eta, *a, range);
                obj.add_term(w, -pu[k][b]);
                hull.add_term(w, 1.0);
            }
            if bounds.hull_tightening && complete {
                model.eq(name("hull", bus.id, h), hull - eta.clone(), 0.0);
            }
        }
    }
    Ok(Selection::Scenarios(alpha))
}

fn budget_products(
    model: &mut OptimizationModel,
    system: &SystemModel,
    set: &BudgetUncertaintySet,
    block: &DualBlock,
    range: (f64, f64),
    bounds: &DualBounds,
    obj: &mut LinExpr,
) -> Selection {
    let levels = budget_value_levels(set.hour_budget(), set.horizon());
    let bus_of = system.renewable_bus_positions();
    let mut hour_use = vec![LinExpr::default(); set.horizon()];
    let mut cells = Vec::with_capacity(set.n_units());
    for (r, unit) in system.renewable_units.iter().enumerate() {
        let mut unit_use = LinExpr::default();
        let mut row = Vec::with_capacity(set.horizon());
        for h in 0..set.horizon() {
            let eta = block.eta[h][bus_of[r]].as_ref().expect("renewable bus has an eta term");
            obj.add_scaled(eta, -set.nominal[r][h]);
            let mut cell = Vec::new();
            let mut ups = LinExpr::default();
            let mut downs = LinExpr::default();
            for (j, v) in levels.iter().enumerate() {
                let mut make = |dir: &str, dev: f64, sign: f64, sum: &mut LinExpr| -> Option<VarId> {
                    if dev <= 0.0 {
                        return None;
                    }
                    let y = model.binary(format!("y{dir}_{j}[{},{}]", unit.id, h + 1));
                    let w = add_product(model, format!("w{dir}_{j}[{},{}]", unit.id, h + 1), eta, y, range);
                    // −η u with u = û + Δ⁺ z⁺ − Δ⁻ z⁻
                    obj.add_term(w, -sign * dev * v);
                    sum.add_term(y, 1.0);
                    unit_use.add_term(y, *v);
                    hour_use[h].add_term(y, *v);
                    Some(y)
                };
                let up = make("up", set.dev_up[r][h], 1.0, &mut ups);
                let down = make("dn", set.dev_down[r][h], -1.0, &mut downs);
                cell.push((*v, up, down));
            }
            if bounds.exclusive_directions {
                if !ups.is_constant() || !downs.is_constant() {
                    model.le(name("onelevel", unit.id, h), ups + downs, 1.0);
                }
            } else {
                if !ups.is_constant() {
                    model.le(name("oneup", unit.id, h), ups, 1.0);
                }
                if !downs.is_constant() {
                    model.le(name("onedn", unit.id, h), downs, 1.0);
                }
            }
            row.push(cell);
        }
        if !unit_use.is_constant() {
            model.le(format!("unitbudget[{}]", unit.id), unit_use, set.lambda as f64);
        }
        cells.push(row);
    }
    for (h, e) in hour_use.into_iter().enumerate() {
        if !e.is_constant() {
            model.le(format!("hourbudget[{}]", h + 1), e, set.hour_budget());
        }
    }
    Selection::Budget(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{build_redispatch_lp, HighsBackend, SolveOptions, SolverBackend};
    use crate::network::default_network;
    use crate::system::tests::one_bus_system;

    fn sched(sys: &SystemModel, rup: f64, rdn: f64) -> CommitmentSchedule {
        let mut s = CommitmentSchedule::zeros(1, 0, 1, sys.horizon);
        s.on_off[0] = vec![true; sys.horizon];
        s.generation[0] = vec![80.0; sys.horizon];
        s.reserve_up[0] = vec![rup; sys.horizon];
        s.reserve_down[0] = vec![rdn; sys.horizon];
        s
    }

    fn primal(sys: &SystemModel, s: &CommitmentSchedule, sc: &Scenario) -> f64 {
        let net = default_network(sys).unwrap();
        HighsBackend.solve(&build_redispatch_lp(sys, &net, s, sc).unwrap().model, &SolveOptions::default()).unwrap().objective
    }

    #[test]
    fn unrestricted_dual_matches_primal() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let s = sched(&sys, 5.0, 3.0);
        for u in [0.0, 10.0, 20.0, 40.0] {
            let sc = Scenario::new("u", vec![vec![u]]);
            let dual = build_redispatch_dual(&sys, &net, &s, &sc, None).unwrap();
            let d = HighsBackend.solve(&dual, &SolveOptions::default()).unwrap().objective;
            assert!((d - primal(&sys, &s, &sc)).abs() < 1e-7, "u = {u}");
        }
    }

    #[test]
    fn scenario_oracle_picks_largest_imbalance() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let s = sched(&sys, 5.0, 3.0);
        let set = ScenarioSet::new(vec![
            Scenario::new("a", vec![vec![18.0]]),
            Scenario::new("b", vec![vec![30.0]]),
            Scenario::new("c", vec![vec![12.0]]),
        ])
        .unwrap();
        let unc = Uncertainty::Scenarios(set.clone());
        let m = build_dual_oracle_milp(&sys, &net, &s, &unc, &DualBounds::default()).unwrap();
        let sol = HighsBackend.solve(&m.model, &SolveOptions::default()).unwrap();
        let best = set.scenarios.iter().map(|sc| primal(&sys, &s, sc)).fold(0.0, f64::max);
        assert!((sol.objective - best).abs() < 1e-7);
        assert_eq!(best, 7.0);
        assert_eq!(m.worst_case(&unc, &sol.values).unwrap().label, "b");
    }

    #[test]
    fn zero_gamma_budget_is_the_nominal_case() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let s = sched(&sys, 0.0, 0.0);
        let set = BudgetUncertaintySet::new(vec![vec![15.0]], vec![vec![5.0]], vec![vec![5.0]], 0.0, 1).unwrap();
        let unc = Uncertainty::Budget(set);
        let m = build_dual_oracle_milp(&sys, &net, &s, &unc, &DualBounds::default()).unwrap();
        let sol = HighsBackend.solve(&m.model, &SolveOptions::default()).unwrap();
        assert!((sol.objective - 5.0).abs() < 1e-7);
        let wc = m.worst_case(&unc, &sol.values).unwrap();
        assert_eq!(wc.values, vec![vec![15.0]]);
        assert_eq!(wc.label, "nominal");
    }

    #[test]
    fn budget_oracle_takes_the_larger_side() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let s = sched(&sys, 2.0, 1.0);
        let set = BudgetUncertaintySet::new(vec![vec![20.0]], vec![vec![4.0]], vec![vec![9.0]], 1.0, 1).unwrap();
        let unc = Uncertainty::Budget(set);
        let m = build_dual_oracle_milp(&sys, &net, &s, &unc, &DualBounds::default()).unwrap();
        let sol = HighsBackend.solve(&m.model, &SolveOptions::default()).unwrap();
        // down 9 against reserve 2 leaves 7 shed; up 4 against 1 leaves 3 spilled
        assert!((sol.objective - 7.0).abs() < 1e-7);
        assert_eq!(m.worst_case(&unc, &sol.values).unwrap().values, vec![vec![11.0]]);
    }

    #[test]
    fn infinite_box_is_rejected() {
        let sys = one_bus_system();
        let net = default_network(&sys).unwrap();
        let unc = Uncertainty::Scenarios(ScenarioSet::single(Scenario::new("a", vec![vec![1.0]])));
        let b = DualBounds { beta: f64::INFINITY, ..DualBounds::default() };
        assert!(matches!(
            build_dual_oracle_milp(&sys, &net, &sched(&sys, 0.0, 0.0), &unc, &b),
            Err(ModelError::UnboundedDualBox("beta"))
        ));
    }
}
