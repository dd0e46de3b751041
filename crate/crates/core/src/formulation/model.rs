//! Solver-independent linear and mixed-integer models.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable, no duplicates, no zero coefficients.
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// Affine expression over model variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(value: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: value }
    }

    pub fn var(var: VarId) -> Self {
        LinExpr { terms: vec![(var, 1.0)], constant: 0.0 }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        LinExpr { terms: vec![(var, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) -> &mut Self {
        self.terms.push((var, coef));
        self
    }

    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms.extend(other.terms.iter().map(|(v, c)| (*v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == 0.0)
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Terms merged by variable and sorted, zeros dropped.
    pub fn canonical_terms(&self) -> Vec<(VarId, f64)> {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|(v, _)| *v);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match out.last_mut() {
                Some((last, acc)) if *last == v => *acc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        out
    }
}

impl From<f64> for LinExpr {
    fn from(value: f64) -> Self {
        LinExpr::constant(value)
    }
}

impl From<VarId> for LinExpr {
    fn from(var: VarId) -> Self {
        LinExpr::var(var)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, rhs: f64) -> LinExpr {
        for (_, c) in &mut self.terms {
            *c *= rhs;
        }
        self.constant *= rhs;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationModel {
    pub name: String,
    pub sense: ObjectiveSense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective_constant: f64,
}

impl OptimizationModel {
    pub fn new(name: impl Into<String>, sense: ObjectiveSense) -> Self {
        OptimizationModel { name: name.into(), sense, variables: Vec::new(), constraints: Vec::new(), objective_constant: 0.0 }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, kind: VarKind) -> VarId {
        self.variables.push(Variable { name: name.into(), lower, upper, kind, objective: 0.0 });
        VarId(self.variables.len() - 1)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    /// Add `expr` to the objective.
    pub fn add_objective(&mut self, expr: &LinExpr) {
        for (v, c) in &expr.terms {
            self.variables[v.0].objective += c;
        }
        self.objective_constant += expr.constant;
    }

    /// Add `lhs (sense) rhs`, moving variables left and constants right.
    pub fn add_constraint(&mut self, name: impl Into<String>, lhs: LinExpr, sense: ConstraintSense, rhs: LinExpr) -> usize {
        let expr = lhs - rhs;
        self.constraints.push(Constraint { name: name.into(), terms: expr.canonical_terms(), sense, rhs: -expr.constant });
        self.constraints.len() - 1
    }

    pub fn le(&mut self, name: impl Into<String>, lhs: LinExpr, rhs: impl Into<LinExpr>) -> usize {
        self.add_constraint(name, lhs, ConstraintSense::Le, rhs.into())
    }

    pub fn ge(&mut self, name: impl Into<String>, lhs: LinExpr, rhs: impl Into<LinExpr>) -> usize {
        self.add_constraint(name, lhs, ConstraintSense::Ge, rhs.into())
    }

    pub fn eq(&mut self, name: impl Into<String>, lhs: LinExpr, rhs: impl Into<LinExpr>) -> usize {
        self.add_constraint(name, lhs, ConstraintSense::Eq, rhs.into())
    }

    pub fn is_mip(&self) -> bool {
        self.variables.iter().any(|v| v.kind != VarKind::Continuous)
    }

    pub fn n_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.kind != VarKind::Continuous).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.variables.iter().zip(values).map(|(v, x)| v.objective * x).sum::<f64>()
    }

    pub fn row_activity(&self, row: usize, values: &[f64]) -> f64 {
        self.constraints[row].terms.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    /// Largest bound, row or integrality violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.kind != VarKind::Continuous {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for (row, c) in self.constraints.iter().enumerate() {
            let a = self.row_activity(row, values);
            let gap = match c.sense {
                ConstraintSense::Le => a - c.rhs,
                ConstraintSense::Ge => c.rhs - a,
                ConstraintSense::Eq => (a - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    /// Canonical text in LP file format. Identical models give identical text.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ {}", self.name);
        out.push_str(match self.sense {
            ObjectiveSense::Minimize => "Minimize\n",
            ObjectiveSense::Maximize => "Maximize\n",
        });
        out.push_str(" obj:");
        let mut any = false;
        for v in &self.variables {
            if v.objective != 0.0 {
                write_term(&mut out, v.objective, &lp_name(&v.name));
                any = true;
            }
        }
        if self.objective_constant != 0.0 || !any {
            let _ = write!(out, " {} {}", sign(self.objective_constant), fmt_num(self.objective_constant.abs()));
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", lp_name(&c.name));
            if c.terms.is_empty() {
                // LP format needs a variable on the left; an empty row is written against the first column
                if let Some(v) = self.variables.first() {
                    let _ = write!(out, " 0 {}", lp_name(&v.name));
                }
            }
            for (v, coef) in &c.terms {
                write_term(&mut out, *coef, &lp_name(&self.variables[v.0].name));
            }
            let op = match c.sense {
                ConstraintSense::Le => "<=",
                ConstraintSense::Ge => ">=",
                ConstraintSense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", fmt_num(c.rhs));
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            let name = lp_name(&v.name);
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {name} free");
                }
                (true, false) => {
                    let _ = writeln!(out, " {name} >= {}", fmt_num(v.lower));
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {name} <= {}", fmt_num(v.upper));
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(v.lower), fmt_num(v.upper));
                }
            }
        }
        let write_section = |out: &mut String, title: &str, kind: VarKind| {
            let names: Vec<String> = self.variables.iter().filter(|v| v.kind == kind).map(|v| lp_name(&v.name)).collect();
            if !names.is_empty() {
                let _ = writeln!(out, "{title}");
                for n in names {
                    let _ = writeln!(out, " {n}");
                }
            }
        };
        write_section(&mut out, "Binaries", VarKind::Binary);
        write_section(&mut out, "Generals", VarKind::Integer);
        out.push_str("End\n");
        out
    }
}

fn sign(x: f64) -> &'static str {
    if x < 0.0 {
        "-"
    } else {
        "+"
    }
}

fn write_term(out: &mut String, coef: f64, name: &str) {
    let _ = write!(out, " {} {} {}", sign(coef), fmt_num(coef.abs()), name);
}

/// Shortest round-trip decimal form.
fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:?}")
    }
}

/// LP readers reject square brackets in names.
fn lp_name(name: &str) -> String {
    name.replace('[', "(").replace(']', ")")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> OptimizationModel {
        let mut m = OptimizationModel::new("tiny", ObjectiveSense::Minimize);
        let x = m.continuous("x[1,1]", 0.0, f64::INFINITY);
        let y = m.binary("y[1]");
        m.add_objective(&(LinExpr::term(x, 2.0) + LinExpr::term(y, 3.5) + 1.0.into()));
        m.ge("c[1]", LinExpr::var(x) + LinExpr::var(y), 1.0);
        m
    }

    #[test]
    fn constants_move_to_rhs_and_terms_merge() {
        let mut m = OptimizationModel::new("m", ObjectiveSense::Minimize);
        let x = m.continuous("x", 0.0, 1.0);
        let lhs = LinExpr::term(x, 2.0) + LinExpr::constant(3.0) + LinExpr::term(x, -0.5);
        let row = m.le("r", lhs, LinExpr::constant(10.0) + LinExpr::term(x, 1.5));
        assert_eq!(m.constraints[row].terms, vec![]);
        assert_eq!(m.constraints[row].rhs, 7.0);
    }

    #[test]
    fn objective_and_violation() {
        let m = tiny();
        assert_eq!(m.objective_value(&[0.5, 1.0]), 5.5);
        assert_eq!(m.max_violation(&[0.0, 1.0]), 0.0);
        assert!((m.max_violation(&[0.0, 0.4]) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn lp_text_is_canonical() {
        let text = tiny().to_lp_string();
        let expected = "\\ tiny\nMinimize\n obj: + 2.0 x(1,1) + 3.5 y(1) + 1.0\nSubject To\n c(1): + 1.0 x(1,1) + 1.0 y(1) >= 1.0\nBounds\n x(1,1) >= 0\n 0 <= y(1) <= 1.0\nBinaries\n y(1)\nEnd\n";
        assert_eq!(text, expected);
        assert_eq!(text, tiny().to_lp_string());
    }
}
