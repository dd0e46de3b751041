//! CSV data for the usual figures: cost against LOLP, daily reserve cost,
//! two-hour projections of a scenario set and the scenarios CCGA selected.

use super::BacktestReport;
use crate::uncertainty::ScenarioSet;
use serde::{Deserialize, Serialize};

/// One model run in a cost-versus-reliability scatter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLolpPoint {
    pub model: String,
    pub avg_cost: f64,
    pub lolp: f64,
    pub pws: f64,
}

impl From<&BacktestReport> for CostLolpPoint {
    fn from(r: &BacktestReport) -> Self {
        CostLolpPoint { model: r.model.clone(), avg_cost: r.avg_cost.total, lolp: r.reliability.lolp, pws: r.reliability.pws }
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// `model,avg_cost,lolp,pws`, one row per point in the given order.
pub fn cost_vs_lolp_csv(points: &[CostLolpPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "avg_cost", "lolp", "pws"]).expect("in-memory write");
    for p in points {
        w.write_record([p.model.clone(), p.avg_cost.to_string(), p.lolp.to_string(), p.pws.to_string()]).expect("in-memory write");
    }
    finish(w)
}

/// `date,reserve_cost`, one row per backtest day; empty cost on failed days.
pub fn reserve_cost_csv(report: &BacktestReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "reserve_cost"]).expect("in-memory write");
    for d in &report.days {
        let c = d.evaluation.as_ref().map(|e| e.cost.reserve.to_string()).unwrap_or_default();
        w.write_record([d.date.to_string(), c]).expect("in-memory write");
    }
    finish(w)
}

/// `label,total_mw_a,total_mw_b`: system-wide output of each scenario in two
/// hours (1-based in the header).
pub fn scenario_projection_csv(set: &ScenarioSet, hour_a: usize, hour_b: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label".to_string(), format!("total_mw_h{}", hour_a + 1), format!("total_mw_h{}", hour_b + 1)]).expect("in-memory write");
    for s in &set.scenarios {
        let t = s.hourly_total();
        w.write_record([s.label.clone(), t[hour_a].to_string(), t[hour_b].to_string()]).expect("in-memory write");
    }
    finish(w)
}

/// `label,total_mwh,max_hourly_change_mw,selected`: daily energy, largest
/// change of system output between consecutive hours, and whether the
/// scenario is among `selected`.
pub fn selected_scenarios_csv(set: &ScenarioSet, selected: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "total_mwh", "max_hourly_change_mw", "selected"]).expect("in-memory write");
    for s in &set.scenarios {
        let t = s.hourly_total();
        let energy: f64 = t.iter().sum();
        let change = t.windows(2).map(|p| (p[1] - p[0]).abs()).fold(0.0, f64::max);
        let flag = if selected.contains(&s.label) { "1" } else { "0" };
        w.write_record([s.label.clone(), energy.to_string(), change.to_string(), flag.to_string()]).expect("in-memory write");
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::Scenario;

    #[test]
    fn selected_scatter_rows() {
        let set = ScenarioSet::new(vec![
            Scenario::new("a", vec![vec![1.0, 4.0, 2.0], vec![0.0, 1.0, 1.0]]),
            Scenario::new("b", vec![vec![3.0, 3.0, 3.0], vec![0.0, 0.0, 0.0]]),
        ])
        .unwrap();
        let csv = selected_scenarios_csv(&set, &["b".to_string()]);
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows, vec!["label,total_mwh,max_hourly_change_mw,selected", "a,9,4,0", "b,9,0,1"]);
        let proj = scenario_projection_csv(&set, 0, 2);
        assert_eq!(proj.lines().nth(1), Some("a,1,3"));
    }

    #[test]
    fn cost_points_keep_order() {
        let pts = vec![
            CostLolpPoint { model: "x".into(), avg_cost: 2.5, lolp: 0.0, pws: 0.1 },
            CostLolpPoint { model: "y".into(), avg_cost: 1.0, lolp: 0.5, pws: 0.0 },
        ];
        assert_eq!(cost_vs_lolp_csv(&pts).lines().count(), 3);
    }
}
