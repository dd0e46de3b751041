//! Instance files, history CSV and result artifacts.
//!
//! Instance files are TOML with the sections `buses`, `lines`, `thermal`,
//! `renewables`, `demand` and `forecast`; demand and forecast rows are keyed
//! by bus id and renewable id. History files are CSV with the header
//! `date,hour,unit_<id>,...` and hours numbered from 1.

use crate::error::{Error, ModelError, Result};
use crate::system::{validate_system, Bus, RenewableUnit, SystemModel, ThermalUnit, TransmissionLine};
use crate::uncertainty::History;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusEntry {
    id: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    buses: Vec<BusEntry>,
    #[serde(default)]
    lines: Vec<TransmissionLine>,
    thermal: Vec<ThermalUnit>,
    #[serde(default)]
    renewables: Vec<RenewableUnit>,
    demand: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    forecast: BTreeMap<String, Vec<f64>>,
}

fn parse_err(path: &str, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), message: message.into() }
}

fn keyed_rows(path: &str, section: &str, rows: &BTreeMap<String, Vec<f64>>) -> Result<BTreeMap<usize, Vec<f64>>> {
    rows.iter()
        .map(|(k, v)| {
            let id = k.parse::<usize>().map_err(|_| parse_err(path, format!("[{section}]: key {k:?} is not an id")))?;
            Ok((id, v.clone()))
        })
        .collect()
}

/// Parse and validate an instance from TOML text; `path` only labels errors.
pub fn parse_instance_str(text: &str, path: &str) -> Result<SystemModel> {
    let file: InstanceFile = toml::from_str(text).map_err(|e| parse_err(path, e.to_string()))?;
    let mut demand = keyed_rows(path, "demand", &file.demand)?;
    let forecast_rows = keyed_rows(path, "forecast", &file.forecast)?;
    let horizon = demand.values().next().map_or(0, Vec::len);
    if horizon == 0 {
        return Err(parse_err(path, "[demand]: no demand rows"));
    }
    let mut buses = Vec::with_capacity(file.buses.len());
    for b in &file.buses {
        let d = demand.remove(&b.id).ok_or_else(|| parse_err(path, format!("[demand]: no row for bus {}", b.id)))?;
        buses.push(Bus { id: b.id, demand: d });
    }
    if let Some(id) = demand.keys().next() {
        return Err(parse_err(path, format!("[demand]: row for unknown bus {id}")));
    }
    let mut nominal_forecast = Vec::with_capacity(file.renewables.len());
    for r in &file.renewables {
        let row = forecast_rows.get(&r.id).ok_or_else(|| parse_err(path, format!("[forecast]: no row for renewable {}", r.id)))?;
        nominal_forecast.push(row.clone());
    }
    if forecast_rows.len() != file.renewables.len() {
        return Err(parse_err(path, "[forecast]: rows for unknown renewables"));
    }
    let system = SystemModel { buses, lines: file.lines, thermal_units: file.thermal, renewable_units: file.renewables, horizon, nominal_forecast };
    let violations = validate_system(&system);
    if !violations.is_empty() {
        return Err(ModelError::InvalidSystem(violations).into());
    }
    Ok(system)
}

pub fn parse_instance(path: &Path) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))?;
    parse_instance_str(&text, &path.display().to_string())
}

/// TOML text that [`parse_instance_str`] reads back to the same system.
pub fn write_instance_string(system: &SystemModel) -> String {
    let file = InstanceFile {
        buses: system.buses.iter().map(|b| BusEntry { id: b.id }).collect(),
        lines: system.lines.clone(),
        thermal: system.thermal_units.clone(),
        renewables: system.renewable_units.clone(),
        demand: system.buses.iter().map(|b| (b.id.to_string(), b.demand.clone())).collect(),
        forecast: system.renewable_units.iter().zip(&system.nominal_forecast).map(|(r, f)| (r.id.to_string(), f.clone())).collect(),
    };
    toml::to_string(&file).expect("instance serializes")
}

/// Parse history CSV text. Every date must have hours `1..=H`, where `H` is
/// `horizon` when given and otherwise the largest hour in the file.
pub fn parse_history_str(text: &str, path: &str, horizon: Option<usize>) -> Result<History> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(path, e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "date" || &header[1] != "hour" {
        return Err(parse_err(path, "header must be date,hour,unit_<id>,..."));
    }
    let unit_ids = header
        .iter()
        .skip(2)
        .map(|c| c.strip_prefix("unit_").and_then(|x| x.parse::<usize>().ok()).ok_or_else(|| parse_err(path, format!("bad column {c:?}"))))
        .collect::<Result<Vec<usize>>>()?;
    let n = unit_ids.len();
    let mut rows: BTreeMap<NaiveDate, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(path, format!("line {line}: {e}")))?;
        if rec.len() != n + 2 {
            return Err(parse_err(path, format!("line {line}: expected {} fields, found {}", n + 2, rec.len())));
        }
        let date: NaiveDate = rec[0].parse().map_err(|_| parse_err(path, format!("line {line}: bad date {:?}", &rec[0])))?;
        let hour: usize = rec[1].parse().map_err(|_| parse_err(path, format!("line {line}: bad hour {:?}", &rec[1])))?;
        if hour == 0 {
            return Err(parse_err(path, format!("line {line}: hours are numbered from 1")));
        }
        let mut vals = Vec::with_capacity(n);
        for x in rec.iter().skip(2) {
            let v: f64 = x.parse().map_err(|_| parse_err(path, format!("line {line}: bad value {x:?}")))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(parse_err(path, format!("line {line}: value {x} must be a nonnegative number")));
            }
            vals.push(v);
        }
        if rows.entry(date).or_default().insert(hour, vals).is_some() {
            return Err(parse_err(path, format!("line {line}: duplicate hour {hour} on {date}")));
        }
    }
    let h = horizon.unwrap_or_else(|| rows.values().flat_map(|m| m.keys().copied()).max().unwrap_or(0));
    let mut history = History::new(unit_ids);
    for (date, hours) in rows {
        if hours.len() != h || hours.keys().copied().ne(1..=h) {
            return Err(parse_err(path, format!("{date}: expected hours 1..={h}, found {}", hours.len())));
        }
        let mut day = vec![vec![0.0; h]; n];
        for (hour, vals) in hours {
            for (r, v) in vals.into_iter().enumerate() {
                day[r][hour - 1] = v;
            }
        }
        history.days.insert(date, day);
    }
    Ok(history)
}

pub fn parse_history(path: &Path, horizon: Option<usize>) -> Result<History> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))?;
    parse_history_str(&text, &path.display().to_string(), horizon)
}

/// History CSV text, dates in order.
pub fn write_history_string(history: &History) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["date".to_string(), "hour".to_string()];
    header.extend(history.unit_ids.iter().map(|id| format!("unit_{id}")));
    w.write_record(&header).expect("in-memory write");
    for (date, day) in &history.days {
        let h = day.first().map_or(0, Vec::len);
        for hour in 0..h {
            let mut row = vec![date.to_string(), (hour + 1).to_string()];
            row.extend(day.iter().map(|u| u[hour].to_string()));
            w.write_record(&row).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Write `contents` to a temporary file next to `path`, then rename it into
/// place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::tests::one_bus_system;

    #[test]
    fn instance_round_trip() {
        let mut sys = one_bus_system();
        sys.buses.push(Bus { id: 4, demand: vec![0.25] });
        sys.lines.push(TransmissionLine { id: 1, from_bus: 1, to_bus: 4, susceptance: 10.0, capacity: 50.0 });
        let text = write_instance_string(&sys);
        assert_eq!(parse_instance_str(&text, "x.toml").unwrap(), sys);
    }

    #[test]
    fn missing_demand_section_is_named() {
        let text = write_instance_string(&one_bus_system());
        let cut: String = text.split("[demand]").next().unwrap().to_string() + "[forecast]\n1 = [20.0]\n";
        let err = parse_instance_str(&cut, "x.toml").unwrap_err().to_string();
        assert!(err.contains("demand"), "{err}");
    }

    #[test]
    fn invalid_system_is_rejected() {
        let mut sys = one_bus_system();
        sys.thermal_units[0].g_min = 500.0;
        let err = parse_instance_str(&write_instance_string(&sys), "x.toml").unwrap_err();
        assert!(matches!(err, Error::Model(ModelError::InvalidSystem(_))));
    }

    const THREE_DAYS: &str = "date,hour,unit_7,unit_9\n\
        2013-01-01,1,1.0,2.0\n2013-01-01,2,3.0,4.0\n\
        2013-01-02,1,5.0,6.0\n2013-01-02,2,7.0,8.0\n\
        2013-01-03,2,11.0,12.0\n2013-01-03,1,9.0,10.0\n";

    #[test]
    fn three_days_parse() {
        let h = parse_history_str(THREE_DAYS, "h.csv", None).unwrap();
        assert_eq!(h.unit_ids, vec![7, 9]);
        assert_eq!(h.days.len(), 3);
        assert_eq!(h.days[&"2013-01-03".parse().unwrap()], vec![vec![9.0, 11.0], vec![10.0, 12.0]]);
        assert_eq!(parse_history_str(&write_history_string(&h), "h.csv", None).unwrap(), h);
    }

    #[test]
    fn short_day_is_named() {
        let err = parse_history_str(THREE_DAYS, "h.csv", Some(3)).unwrap_err().to_string();
        assert!(err.contains("2013-01-01"), "{err}");
        let text = THREE_DAYS.replace("2013-01-02,2,7.0,8.0\n", "");
        let err = parse_history_str(&text, "h.csv", None).unwrap_err().to_string();
        assert!(err.contains("2013-01-02"), "{err}");
    }

    #[test]
    fn duplicates_and_negatives_are_rejected() {
        let dup = format!("{THREE_DAYS}2013-01-01,1,1.0,2.0\n");
        assert!(parse_history_str(&dup, "h.csv", None).unwrap_err().to_string().contains("duplicate"));
        let neg = THREE_DAYS.replace("5.0", "-5.0");
        assert!(parse_history_str(&neg, "h.csv", None).unwrap_err().to_string().contains("nonnegative"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
