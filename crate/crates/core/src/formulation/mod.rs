//! Optimization models: the CCGA master, the redispatch LP and its dual,
//! the MILP oracle and the stochastic benchmark, plus the solver interface.

mod blocks;
mod dual_oracle;
mod master;
pub mod model;
mod redispatch;
pub mod solver;

pub use dual_oracle::{build_dual_oracle_milp, build_redispatch_dual, DualBounds, DualOracleModel};
pub use master::{build_bsuc, build_master, master_census, MasterCensus, MasterModel};
pub use model::{Constraint, ConstraintSense, LinExpr, ObjectiveSense, OptimizationModel, VarId, VarKind, Variable};
pub use redispatch::{build_redispatch_lp, build_single_period_redispatch, solve_redispatch, RedispatchModel};
pub use solver::{Capabilities, Epsilon, HighsBackend, SolveOptions, SolveStatus, Solution, SolverBackend, SolverConfig};
