#![allow(clippy::needless_range_loop)]

//! Regenerates the bundled 4-bus instance and its two-year synthetic wind
//! history. Usage: `cargo run --example make_fixtures -- <dir>`.

use chrono::{Datelike, Days, NaiveDate};
use ddruc::io::{write_history_string, write_instance_string};
use ddruc::system::{validate_system, Bus, RenewableUnit, SystemModel, ThermalUnit, TransmissionLine};
use ddruc::uncertainty::History;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use std::path::PathBuf;

const HOURS: usize = 24;
const WIND_CAP: f64 = 100.0;

#[allow(clippy::too_many_arguments)]
fn unit(id: usize, bus: usize, g_min: f64, g_max: f64, ramp: f64, fuel: f64, reserve: f64, startup: f64, min_up: usize, min_down: usize, init_status: i64, init_output: f64) -> ThermalUnit {
    ThermalUnit {
        id,
        bus,
        g_min,
        g_max,
        ramp_up: ramp,
        ramp_down: ramp,
        startup_ramp: ramp.max(g_min),
        shutdown_ramp: ramp.max(g_min),
        corrective_up_limit: ramp,
        corrective_down_limit: ramp,
        min_up,
        min_down,
        fuel_cost: fuel,
        reserve_up_cost: reserve,
        reserve_down_cost: reserve,
        startup_cost: startup,
        shutdown_cost: startup / 4.0,
        init_status,
        init_output,
    }
}

fn load_shape(h: usize) -> f64 {
    // night trough, morning ramp, evening peak
    let x = h as f64;
    0.72 + 0.18 * (-(x - 11.0).powi(2) / 18.0).exp() + 0.22 * (-(x - 19.0).powi(2) / 8.0).exp()
}

fn instance() -> SystemModel {
    let peak = 520.0;
    let shares = [0.2, 0.3, 0.3, 0.2];
    let buses = (0..4).map(|b| Bus { id: b + 1, demand: (0..HOURS).map(|h| (shares[b] * peak * load_shape(h) * 100.0).round() / 100.0).collect() }).collect();
    let line = |id, from_bus, to_bus, susceptance, capacity| TransmissionLine { id, from_bus, to_bus, susceptance, capacity };
    let lines = vec![line(1, 1, 2, 10.0, 180.0), line(2, 2, 3, 10.0, 120.0), line(3, 3, 4, 10.0, 180.0), line(4, 4, 1, 10.0, 200.0), line(5, 1, 3, 8.0, 150.0)];
    let thermal_units = vec![
        unit(1, 1, 60.0, 260.0, 70.0, 14.0, 4.0, 1800.0, 4, 3, 8, 200.0),
        unit(2, 4, 40.0, 200.0, 60.0, 21.0, 5.0, 900.0, 3, 2, 5, 120.0),
        unit(3, 1, 15.0, 110.0, 60.0, 33.0, 7.0, 250.0, 1, 1, -3, 0.0),
        unit(4, 4, 10.0, 90.0, 60.0, 41.0, 8.0, 120.0, 1, 1, -5, 0.0),
    ];
    let renewable_units = vec![RenewableUnit { id: 1, bus: 2 }, RenewableUnit { id: 2, bus: 3 }];
    let forecast = (0..2).map(|r| (0..HOURS).map(|h| 38.0 + 6.0 * r as f64 + 8.0 * (2.0 * PI * (h as f64 - 3.0) / 24.0).cos()).collect()).collect();
    SystemModel { buses, lines, thermal_units, renewable_units, horizon: HOURS, nominal_forecast: forecast }
}

/// Daily regimes follow a seasonal AR(1); hours add a diurnal wave and an
/// AR(1) disturbance shared in part by both farms.
fn history(first: NaiveDate, days: usize, seed: u64) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 1.0).unwrap();
    let mut h = History::new(vec![1, 2]);
    let mut regime = 0.4;
    let mut noise = [0.0f64; 2];
    for d in 0..days {
        let date = first + Days::new(d as u64);
        let season = 0.42 + 0.12 * (2.0 * PI * (date.ordinal() as f64 - 20.0) / 365.25).cos();
        regime = (season + 0.7 * (regime - season) + 0.12 * n.sample(&mut rng)).clamp(0.05, 0.9);
        let phase = 2.0 * PI * n.sample(&mut rng) * 0.05;
        let mut day = vec![vec![0.0; HOURS]; 2];
        for hour in 0..HOURS {
            let common = n.sample(&mut rng);
            for (r, z) in noise.iter_mut().enumerate() {
                let own = n.sample(&mut rng);
                *z = 0.8 * *z + 0.06 * (0.7 * common + 0.71 * own);
                let wave = 0.1 * (2.0 * PI * (hour as f64 - 3.0 + 2.0 * r as f64) / 24.0 + phase).cos();
                let x = (regime + wave + *z).clamp(0.0, 1.0);
                day[r][hour] = (x * WIND_CAP * 1000.0).round() / 1000.0;
            }
        }
        h.days.insert(date, day);
    }
    h
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/tests/fixtures".into()));
    let sys = instance();
    let violations = validate_system(&sys);
    assert!(violations.is_empty(), "{violations:?}");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("four_bus.toml"), write_instance_string(&sys)).unwrap();
    let first = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
    std::fs::write(dir.join("four_bus_wind.csv"), write_history_string(&history(first, 731, 20120101))).unwrap();
    println!("fixtures written to {}", dir.display());
}
