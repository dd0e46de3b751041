use super::{BudgetUncertaintySet, Scenario, ScenarioSet};
use crate::error::UncertaintyError;

/// Largest `|R||H|` accepted by [`budget_vertex_enumeration`] by default.
pub const DEFAULT_VERTEX_CAP: usize = 12;

const TOL: f64 = 1e-9;

fn snap_integer(x: f64) -> f64 {
    if (x - x.round()).abs() <= TOL * x.abs().max(1.0) {
        x.round()
    } else {
        x
    }
}

/// `(⌊Γ|R|⌋, Γ|R| − ⌊Γ|R|⌋)`.
pub fn budget_deviation_cap(gamma: f64, n_units: usize) -> Result<(usize, f64), UncertaintyError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(UncertaintyError::InvalidParameter(format!("gamma {gamma} outside [0, 1]")));
    }
    let x = snap_integer(gamma * n_units as f64);
    let full = x.floor();
    Ok((full as usize, x - full))
}

/// Nonzero values a deviation variable takes at the extreme points of a budget
/// set with per-hour budget `hour_budget` over `horizon` periods.
///
/// With an integral budget the constraint matrix is totally unimodular and the
/// only nonzero value is 1. Otherwise a fractional coordinate equals
/// `k ± m·hour_budget` for integers `k` and `1 <= m <= horizon`.
pub fn budget_value_levels(hour_budget: f64, horizon: usize) -> Vec<f64> {
    let c = snap_integer(hour_budget);
    let mut out = vec![1.0];
    if c.fract() != 0.0 {
        for m in 1..=horizon {
            let f = snap_integer(m as f64 * c).fract();
            if f > TOL && f < 1.0 - TOL {
                out.push(f);
                out.push(1.0 - f);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    out
}

/// Rank of a set of rows by Gaussian elimination with partial pivoting.
fn rank(rows: &[&[f64]]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..m.len()).max_by(|a, b| m[*a][col].abs().total_cmp(&m[*b][col].abs()));
        let Some(p) = pivot else { break };
        if m[p][col].abs() <= 1e-9 {
            continue;
        }
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            let f = m[i][col] / m[rank][col];
            if f != 0.0 {
                for j in col..cols {
                    m[i][j] -= f * m[rank][j];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Vertices of `{x : rows·(x, 1) >= 0}` by the double description method,
/// assuming the first `n + 1` rows are `x >= 0` and the homogenizing `x0 >= 0`
/// and that the polytope is bounded.
fn polytope_vertices(n: usize, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    struct Ray {
        x: Vec<f64>,
        zero: u64,
    }
    let d = n + 1;
    assert!(rows.len() <= 64, "at most 64 constraints");
    let initial_mask: u64 = (1u64 << d) - 1;
    let mut rays: Vec<Ray> = (0..d)
        .map(|i| {
            let mut x = vec![0.0; d];
            x[i] = 1.0;
            Ray { x, zero: initial_mask & !(1u64 << i) }
        })
        .collect();

    for (c, row) in rows.iter().enumerate().skip(d) {
        let value = |x: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let g: Vec<f64> = rays.iter().map(|r| value(&r.x)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|i| g[*i] > 1e-10).collect();
        let minus: Vec<usize> = (0..rays.len()).filter(|i| g[*i] < -1e-10).collect();
        let mut next: Vec<Ray> = Vec::new();
        for &p in &plus {
            for &m in &minus {
                let common = rays[p].zero & rays[m].zero;
                if (common.count_ones() as usize) < d - 2 {
                    continue;
                }
                let tight: Vec<&[f64]> = (0..c).filter(|k| common & (1u64 << k) != 0).map(|k| rows[k].as_slice()).collect();
                if rank(&tight) != d - 2 {
                    continue;
                }
                let mut x: Vec<f64> = rays[m].x.iter().zip(&rays[p].x).map(|(xm, xp)| g[p] * xm - g[m] * xp).collect();
                let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                x.iter_mut().for_each(|v| *v /= scale);
                next.push(Ray { x, zero: common | (1u64 << c) });
            }
        }
        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + next.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            if g[i] >= -1e-10 {
                if g[i] <= 1e-10 {
                    r.zero |= 1u64 << c;
                }
                kept.push(r);
            }
        }
        kept.extend(next);
        rays = kept;
    }

    let mut out: Vec<Vec<f64>> = rays
        .into_iter()
        .filter(|r| r.x[n] > 1e-10)
        .map(|r| {
            r.x[..n]
                .iter()
                .map(|v| {
                    let y = v / r.x[n];
                    if y.abs() <= 1e-9 {
                        0.0
                    } else if (y - 1.0).abs() <= 1e-9 {
                        1.0
                    } else {
                        y
                    }
                })
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    out.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= 1e-9));
    out
}

/// All extreme points of a budget set, as scenarios labelled `vertex-<i>`.
///
/// Works on deviation magnitudes `a = |u − û| / Δ`: vertices of the magnitude
/// polytope are enumerated, a vertex with an idle two-sided coordinate is kept
/// only if a tight budget row stops that coordinate from moving, and every
/// nonzero two-sided coordinate is expanded into both signs.
pub fn budget_vertex_enumeration(set: &BudgetUncertaintySet, cap: usize) -> Result<ScenarioSet, UncertaintyError> {
    set.check()?;
    let (n_units, horizon) = (set.n_units(), set.horizon());
    if n_units * horizon > cap {
        return Err(UncertaintyError::CapExceeded { size: n_units * horizon, cap });
    }
    // coordinates that can move at all
    let coords: Vec<(usize, usize)> = (0..n_units)
        .flat_map(|r| (0..horizon).map(move |h| (r, h)))
        .filter(|&(r, h)| set.dev_up[r][h] > 0.0 || set.dev_down[r][h] > 0.0)
        .collect();
    let n = coords.len();
    let hour_budget = snap_integer(set.hour_budget());
    let lambda = set.lambda as f64;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for j in 0..=n {
        let mut row = vec![0.0; n + 1];
        row[j] = 1.0;
        rows.push(row);
    }
    for j in 0..n {
        let mut row = vec![0.0; n + 1];
        row[j] = -1.0;
        row[n] = 1.0;
        rows.push(row);
    }
    // (coordinate members, rhs) of each budget row
    let mut budgets: Vec<(Vec<usize>, f64)> = Vec::new();
    for h in 0..horizon {
        budgets.push(((0..n).filter(|j| coords[*j].1 == h).collect(), hour_budget));
    }
    for r in 0..n_units {
        budgets.push(((0..n).filter(|j| coords[*j].0 == r).collect(), lambda));
    }
    budgets.retain(|(members, _)| !members.is_empty());
    for (members, rhs) in &budgets {
        let mut row = vec![0.0; n + 1];
        for j in members {
            row[*j] = -1.0;
        }
        row[n] = *rhs;
        rows.push(row);
    }

    let magnitudes = if n == 0 { vec![Vec::new()] } else { polytope_vertices(n, &rows) };
    let mut scenarios = Vec::new();
    for a in magnitudes {
        let tight_row = |(members, rhs): &(Vec<usize>, f64)| (members.iter().map(|j| a[*j]).sum::<f64>() - rhs).abs() <= 1e-9;
        let blocked = |j: usize| budgets.iter().any(|b| b.0.contains(&j) && tight_row(b));
        let extreme = (0..n).all(|j| {
            let (r, h) = coords[j];
            let two_sided = set.dev_up[r][h] > 0.0 && set.dev_down[r][h] > 0.0;
            a[j] > 0.0 || !two_sided || blocked(j)
        });
        if !extreme {
            continue;
        }
        // sign choices per moving coordinate
        let choices: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let (r, h) = coords[j];
                match (a[j] > 0.0, set.dev_up[r][h] > 0.0, set.dev_down[r][h] > 0.0) {
                    (false, _, _) => vec![0.0],
                    (true, true, true) => vec![1.0, -1.0],
                    (true, true, false) => vec![1.0],
                    (true, false, _) => vec![-1.0],
                }
            })
            .collect();
        let mut patterns: Vec<Vec<f64>> = vec![Vec::new()];
        for options in &choices {
            patterns = patterns
                .into_iter()
                .flat_map(|p| {
                    options.iter().map(move |s| {
                        let mut q = p.clone();
                        q.push(*s);
                        q
                    })
                })
                .collect();
        }
        for signs in patterns {
            let mut values = set.nominal.clone();
            for (j, &(r, h)) in coords.iter().enumerate() {
                if signs[j] > 0.0 {
                    values[r][h] = set.nominal[r][h] + set.dev_up[r][h] * a[j];
                } else if signs[j] < 0.0 {
                    values[r][h] = (set.nominal[r][h] - set.dev_down[r][h] * a[j]).max(0.0);
                }
            }
            scenarios.push(values);
        }
    }
    let scenarios = scenarios.into_iter().enumerate().map(|(i, v)| Scenario::new(format!("vertex-{i}"), v)).collect();
    ScenarioSet::new(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::model::{LinExpr, ObjectiveSense, OptimizationModel};
    use crate::formulation::solver::{HighsBackend, SolveOptions, SolverBackend};
    use proptest::prelude::*;

    fn set(nominal: Vec<Vec<f64>>, up: Vec<Vec<f64>>, down: Vec<Vec<f64>>, gamma: f64, lambda: usize) -> BudgetUncertaintySet {
        BudgetUncertaintySet::new(nominal, up, down, gamma, lambda).unwrap()
    }

    fn uniform(n_units: usize, horizon: usize, gamma: f64, lambda: usize) -> BudgetUncertaintySet {
        set(vec![vec![10.0; horizon]; n_units], vec![vec![4.0; horizon]; n_units], vec![vec![3.0; horizon]; n_units], gamma, lambda)
    }

    fn sorted_values(s: &ScenarioSet) -> Vec<Vec<Vec<f64>>> {
        let mut v: Vec<_> = s.scenarios.iter().map(|x| x.values.clone()).collect();
        v.sort_by(|a, b| a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap());
        v
    }

    #[test]
    fn deviation_cap_examples() {
        assert_eq!(budget_deviation_cap(0.5, 3).unwrap(), (1, 0.5));
        assert_eq!(budget_deviation_cap(1.0, 10).unwrap(), (10, 0.0));
        assert_eq!(budget_deviation_cap(0.9, 10).unwrap(), (9, 0.0));
        assert!(budget_deviation_cap(1.5, 2).is_err());
    }

    #[test]
    fn value_levels() {
        assert_eq!(budget_value_levels(2.0, 5), vec![1.0]);
        let v = budget_value_levels(0.5, 3);
        assert_eq!(v, vec![0.5, 1.0]);
        let v = budget_value_levels(1.5, 2);
        assert_eq!(v, vec![0.5, 1.0]);
        let v = budget_value_levels(0.3, 2);
        assert!(v.iter().zip([0.3, 0.4, 0.6, 0.7, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12), "{v:?}");
    }

    #[test]
    fn zero_budgets_leave_nominal() {
        for (g, l) in [(0.0, 2), (1.0, 0)] {
            let s = budget_vertex_enumeration(&uniform(2, 2, g, l), 12).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(s.scenarios[0].values, vec![vec![10.0; 2]; 2]);
        }
    }

    #[test]
    fn interval_endpoints() {
        let s = budget_vertex_enumeration(&uniform(1, 1, 1.0, 1), 12).unwrap();
        assert_eq!(sorted_values(&s), vec![vec![vec![7.0]], vec![vec![14.0]]]);
    }

    #[test]
    fn one_of_two_units_deviates() {
        let s = budget_vertex_enumeration(&uniform(2, 1, 0.5, 1), 12).unwrap();
        assert_eq!(
            sorted_values(&s),
            vec![vec![vec![7.0], vec![10.0]], vec![vec![10.0], vec![7.0]], vec![vec![10.0], vec![14.0]], vec![vec![14.0], vec![10.0]]]
        );
    }

    #[test]
    fn full_budgets_give_box_corners() {
        for (r, h) in [(1, 3), (2, 2), (3, 2), (2, 5)] {
            let s = budget_vertex_enumeration(&uniform(r, h, 1.0, h), 12).unwrap();
            assert_eq!(s.len(), 1 << (r * h));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(budget_vertex_enumeration(&uniform(3, 5, 1.0, 5), 12), Err(UncertaintyError::CapExceeded { size: 15, cap: 12 })));
    }

    #[test]
    fn one_sided_coordinates() {
        // unit 0 can only rise, unit 1 can only fall
        let s = set(vec![vec![5.0], vec![5.0]], vec![vec![2.0], vec![0.0]], vec![vec![0.0], vec![5.0]], 0.5, 1);
        let v = budget_vertex_enumeration(&s, 12).unwrap();
        assert_eq!(sorted_values(&v), vec![vec![vec![5.0], vec![0.0]], vec![vec![5.0], vec![5.0]], vec![vec![7.0], vec![5.0]]]);
    }

    /// max of `w·u` over the set, by LP over the deviation variables.
    fn support_lp(set: &BudgetUncertaintySet, w: &[Vec<f64>]) -> f64 {
        let mut m = OptimizationModel::new("support", ObjectiveSense::Maximize);
        let (n, h) = (set.n_units(), set.horizon());
        let mut hour = vec![LinExpr::default(); h];
        let mut unit = vec![LinExpr::default(); n];
        let mut obj = LinExpr::default();
        for r in 0..n {
            for t in 0..h {
                let zp = m.continuous(format!("zp[{r},{t}]"), 0.0, 1.0);
                let zm = m.continuous(format!("zm[{r},{t}]"), 0.0, 1.0);
                obj.add_term(zp, w[r][t] * set.dev_up[r][t]).add_term(zm, -w[r][t] * set.dev_down[r][t]);
                obj.constant += w[r][t] * set.nominal[r][t];
                for e in [&mut hour[t], &mut unit[r]] {
                    e.add_term(zp, 1.0).add_term(zm, 1.0);
                }
            }
        }
        m.add_objective(&obj);
        for (t, e) in hour.into_iter().enumerate() {
            m.le(format!("hour[{t}]"), e, set.hour_budget());
        }
        for (r, e) in unit.into_iter().enumerate() {
            m.le(format!("unit[{r}]"), e, set.lambda as f64);
        }
        HighsBackend.solve(&m, &SolveOptions::default()).unwrap().objective
    }

    /// Whether `target` is a convex combination of `others`.
    fn in_hull(target: &[Vec<f64>], others: &[&Vec<Vec<f64>>]) -> bool {
        if others.is_empty() {
            return false;
        }
        let mut m = OptimizationModel::new("hull", ObjectiveSense::Minimize);
        let lam: Vec<_> = (0..others.len()).map(|k| m.continuous(format!("l[{k}]"), 0.0, 1.0)).collect();
        let mut sum = LinExpr::default();
        for l in &lam {
            sum.add_term(*l, 1.0);
        }
        OptimizationModel::eq(&mut m, "sum", sum, 1.0);
        for (r, row) in target.iter().enumerate() {
            for (t, x) in row.iter().enumerate() {
                let mut e = LinExpr::default();
                for (k, o) in others.iter().enumerate() {
                    e.add_term(lam[k], o[r][t]);
                }
                OptimizationModel::eq(&mut m, format!("c[{r},{t}]"), e, *x);
            }
        }
        HighsBackend.solve(&m, &SolveOptions::default()).is_ok()
    }

    fn arb_set() -> impl Strategy<Value = BudgetUncertaintySet> {
        (1usize..=3, 1usize..=4).prop_flat_map(|(n, h)| {
            let cells = n * h;
            (
                proptest::collection::vec(0.0..20.0f64, cells),
                proptest::collection::vec(prop_oneof![Just(0.0), 0.5..6.0f64], cells),
                proptest::collection::vec(prop_oneof![Just(0.0), 0.5..6.0f64], cells),
                prop_oneof![Just(0.0), Just(1.0), 0.0..1.0f64],
                0..=h,
            )
                .prop_map(move |(nom, up, down, gamma, lambda)| {
                    let shape = |v: &Vec<f64>| v.chunks(h).map(|c| c.to_vec()).collect::<Vec<_>>();
                    let nominal: Vec<Vec<f64>> = shape(&nom).into_iter().map(|r| r.into_iter().map(|x| x + 6.0).collect()).collect();
                    BudgetUncertaintySet::new(nominal, shape(&up), shape(&down), gamma, lambda).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn vertices_are_members_and_extreme(s in arb_set()) {
            let v = budget_vertex_enumeration(&s, 12).unwrap();
            for x in &v.scenarios {
                prop_assert!(s.contains(&x.values, 1e-7));
            }
            if v.len() <= 64 {
                for (i, x) in v.scenarios.iter().enumerate() {
                    let others: Vec<_> = v.scenarios.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| &y.values).collect();
                    prop_assert!(!in_hull(&x.values, &others), "vertex {} is a combination of the others", x.label);
                }
            }
        }

        #[test]
        fn vertices_attain_every_support_value(s in arb_set(), seed in proptest::collection::vec(-1.0..1.0f64, 12)) {
            let v = budget_vertex_enumeration(&s, 12).unwrap();
            let w: Vec<Vec<f64>> = (0..s.n_units()).map(|r| (0..s.horizon()).map(|t| seed[(r * s.horizon() + t) % 12]).collect()).collect();
            let best = v.scenarios.iter().map(|x| {
                x.values.iter().flatten().zip(w.iter().flatten()).map(|(a, b)| a * b).sum::<f64>()
            }).fold(f64::NEG_INFINITY, f64::max);
            let lp = support_lp(&s, &w);
            prop_assert!((best - lp).abs() <= 1e-6 * lp.abs().max(1.0), "vertices {best} vs lp {lp}");
        }

        #[test]
        fn vertex_components_use_value_levels(s in arb_set()) {
            let levels = budget_value_levels(s.hour_budget(), s.horizon());
            let v = budget_vertex_enumeration(&s, 12).unwrap();
            for x in &v.scenarios {
                for r in 0..s.n_units() {
                    for t in 0..s.horizon() {
                        let d = x.values[r][t] - s.nominal[r][t];
                        let a = if d > 0.0 { d / s.dev_up[r][t] } else if d < 0.0 { -d / s.dev_down[r][t] } else { 0.0 };
                        prop_assert!(a == 0.0 || levels.iter().any(|l| (l - a).abs() <= 1e-7), "magnitude {a} not in {levels:?}");
                    }
                }
            }
        }
    }
}
