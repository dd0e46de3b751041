//! Solver abstraction and the HiGHS backend.

use super::model::{ConstraintSense, ObjectiveSense, OptimizationModel, VarKind};
use crate::error::{ModelError, SolverError};
use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};
use serde::{Deserialize, Serialize};

/// Imbalance tolerance, either absolute MWh or a fraction of total demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Epsilon {
    Absolute(f64),
    FractionOfDemand(f64),
}

impl Epsilon {
    pub fn resolve(self, total_demand: f64) -> Result<f64, ModelError> {
        match self {
            Epsilon::Absolute(x) => Ok(x),
            Epsilon::FractionOfDemand(f) if total_demand > 0.0 => Ok(f * total_demand),
            Epsilon::FractionOfDemand(f) => {
                if f == 0.0 {
                    Ok(0.0)
                } else {
                    Err(ModelError::UnresolvedEpsilon)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub relative_gap: f64,
    pub time_limit_s: f64,
    pub threads: usize,
    pub epsilon: Epsilon,
}

impl Default for SolverConfig {
    /// 0.05% gap and an imbalance tolerance of 0.1% of total demand.
    fn default() -> Self {
        SolverConfig { relative_gap: 5e-4, time_limit_s: 3600.0, threads: 1, epsilon: Epsilon::FractionOfDemand(1e-3) }
    }
}

impl SolverConfig {
    /// Gap 0 and ε = 0, for exactness checks on small instances.
    pub fn exact() -> Self {
        SolverConfig { relative_gap: 0.0, time_limit_s: 600.0, threads: 1, epsilon: Epsilon::Absolute(0.0) }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { relative_gap: self.relative_gap, time_limit_s: self.time_limit_s, ..SolveOptions::default() }
    }
}

/// Options for a single solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub relative_gap: f64,
    pub time_limit_s: f64,
    /// Partial starting point as `(column, value)` pairs.
    pub hint: Vec<(usize, f64)>,
    /// After a MIP solve, fix integers at their rounded values and re-solve the LP.
    pub polish: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { relative_gap: 0.0, time_limit_s: 600.0, hint: Vec::new(), polish: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// Stopped at a limit with a feasible incumbent.
    Feasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    /// Recomputed from `values`.
    pub objective: f64,
    /// Rate of change of the optimal objective per unit increase of each row's
    /// right-hand side. Continuous models only.
    pub duals: Option<Vec<f64>>,
    pub mip_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub continuous: bool,
    pub mixed_integer: bool,
    pub duals: bool,
    pub hints: bool,
}

/// An LP/MILP engine. Implementations keep no state between calls, so one
/// value can serve concurrent solves.
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn capabilities(&self) -> Capabilities;
    fn solve(&self, model: &OptimizationModel, options: &SolveOptions) -> Result<Solution, SolverError>;
}

/// HiGHS through its C API. Each solve builds a fresh single-threaded instance.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

const FEASIBILITY_TOL: f64 = 1e-9;
const INTEGRALITY_TOL: f64 = 1e-9;

impl HighsBackend {
    fn run(&self, model: &OptimizationModel, options: &SolveOptions, fixed: Option<&[f64]>) -> Result<Solution, SolverError> {
        let mut problem = RowProblem::default();
        let mut cols = Vec::with_capacity(model.variables.len());
        for (j, v) in model.variables.iter().enumerate() {
            let integer = v.kind != VarKind::Continuous && fixed.is_none();
            let (lo, hi) = match fixed {
                Some(vals) if v.kind != VarKind::Continuous => (vals[j], vals[j]),
                _ => (v.lower, v.upper),
            };
            cols.push(problem.add_column_with_integrality(v.objective, lo..=hi, integer));
        }
        for c in &model.constraints {
            let terms: Vec<_> = c.terms.iter().map(|(v, a)| (cols[v.0], *a)).collect();
            match c.sense {
                ConstraintSense::Le => problem.add_row(..=c.rhs, terms),
                ConstraintSense::Ge => problem.add_row(c.rhs.., terms),
                ConstraintSense::Eq => problem.add_row(c.rhs..=c.rhs, terms),
            }
        }
        let sense = match model.sense {
            ObjectiveSense::Minimize => Sense::Minimise,
            ObjectiveSense::Maximize => Sense::Maximise,
        };
        let mut highs = problem.try_optimise(sense).map_err(|e| SolverError::Status(format!("{e:?}")))?;
        highs.make_quiet();
        let is_mip = fixed.is_none() && model.is_mip();
        let set = |m: &mut highs::Model, k: &str, v: f64| {
            m.try_set_option(k, v).map_err(|_| SolverError::Status(format!("cannot set option {k}")))
        };
        highs.try_set_option("threads", 1).map_err(|_| SolverError::Status("cannot set threads".into()))?;
        set(&mut highs, "time_limit", options.time_limit_s.max(1e-3))?;
        set(&mut highs, "primal_feasibility_tolerance", FEASIBILITY_TOL)?;
        set(&mut highs, "dual_feasibility_tolerance", FEASIBILITY_TOL)?;
        if is_mip {
            set(&mut highs, "mip_rel_gap", options.relative_gap)?;
            set(&mut highs, "mip_abs_gap", if options.relative_gap == 0.0 { 0.0 } else { 1e-6 })?;
            set(&mut highs, "mip_feasibility_tolerance", INTEGRALITY_TOL)?;
            if !options.hint.is_empty() {
                set_sparse_hint(&mut highs, &options.hint)?;
            }
        }
        let solved = highs.try_solve().map_err(|e| SolverError::Status(format!("{e:?}")))?;
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => return Err(SolverError::Infeasible),
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => return Err(SolverError::Unbounded),
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt => {
                if solved.primal_solution_status() == HighsSolutionStatus::Feasible {
                    SolveStatus::Feasible
                } else {
                    return Err(SolverError::NoSolution);
                }
            }
            other => return Err(SolverError::Status(format!("{other:?}"))),
        };
        let solution = solved.get_solution();
        let mut values = solution.columns().to_vec();
        if is_mip {
            for (x, v) in values.iter_mut().zip(&model.variables) {
                if v.kind != VarKind::Continuous {
                    *x = x.round();
                }
            }
        }
        let duals = if is_mip { None } else { Some(solution.dual_rows().to_vec()) };
        let mip_gap = if is_mip { solved.mip_gap() } else { 0.0 };
        let objective = model.objective_value(&values);
        let reported = solved.objective_value() + model.objective_constant;
        let scale = 1.0 + reported.abs().max(objective.abs());
        if !is_mip && status == SolveStatus::Optimal && (reported - objective).abs() > 1e-6 * scale {
            return Err(SolverError::Status(format!("objective {reported} disagrees with primal recomputation {objective}")));
        }
        Ok(Solution { status, values, objective, duals, mip_gap })
    }
}

fn set_sparse_hint(highs: &mut highs::Model, hint: &[(usize, f64)]) -> Result<(), SolverError> {
    let index: Vec<highs_sys::HighsInt> = hint.iter().map(|(j, _)| *j as highs_sys::HighsInt).collect();
    let value: Vec<f64> = hint.iter().map(|(_, x)| *x).collect();
    // SAFETY: pointers are valid for `hint.len()` entries and the model outlives the call.
    let status = unsafe {
        highs_sys::Highs_setSparseSolution(highs.as_mut_ptr(), hint.len() as highs_sys::HighsInt, index.as_ptr(), value.as_ptr())
    };
    if status == highs_sys::STATUS_ERROR {
        return Err(SolverError::Status("rejected warm-start hint".into()));
    }
    Ok(())
}

impl SolverBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { continuous: true, mixed_integer: true, duals: true, hints: true }
    }

    fn solve(&self, model: &OptimizationModel, options: &SolveOptions) -> Result<Solution, SolverError> {
        if model.variables.is_empty() {
            return Ok(Solution {
                status: SolveStatus::Optimal,
                values: Vec::new(),
                objective: model.objective_constant,
                duals: Some(vec![0.0; model.constraints.len()]),
                mip_gap: 0.0,
            });
        }
        let first = self.run(model, options, None)?;
        if !model.is_mip() || !options.polish {
            return Ok(first);
        }
        // The continuous part is re-solved with integers pinned so that it is
        // exactly consistent with the rounded integer values.
        match self.run(model, options, Some(&first.values)) {
            Ok(polished) => {
                let better = match model.sense {
                    ObjectiveSense::Minimize => polished.objective <= first.objective + 1e-9 * (1.0 + first.objective.abs()),
                    ObjectiveSense::Maximize => polished.objective >= first.objective - 1e-9 * (1.0 + first.objective.abs()),
                };
                if better {
                    Ok(Solution { status: first.status, duals: None, mip_gap: first.mip_gap, ..polished })
                } else {
                    Ok(first)
                }
            }
            Err(_) => Ok(first),
        }
    }
}
