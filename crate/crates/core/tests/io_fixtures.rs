mod common;

use chrono::NaiveDate;
use common::{four_bus, random_system, SMALL};
use ddruc::io::{parse_history_str, parse_instance_str, write_history_string, write_instance_string};
use ddruc::uncertainty::History;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn four_bus_fixture_is_consistent() {
    let (system, network, history) = four_bus();
    assert_eq!(system.buses.len(), 4);
    assert_eq!(system.horizon, 24);
    assert_eq!(network.line_bus.len(), system.lines.len());
    assert_eq!(history.unit_ids, system.renewable_units.iter().map(|r| r.id).collect::<Vec<_>>());
    assert_eq!(history.first_day(), NaiveDate::from_ymd_opt(2012, 1, 1));
    assert_eq!(history.last_day(), NaiveDate::from_ymd_opt(2013, 12, 31));
    assert_eq!(history.days.len(), 731);
    for day in history.days.values() {
        assert!(day.iter().flatten().all(|x| x.is_finite() && *x >= 0.0));
    }
}

#[test]
fn history_rejects_gaps_in_hours() {
    let text = "date,hour,unit_1\n2012-01-01,1,3.0\n2012-01-01,3,4.0\n";
    assert!(parse_history_str(text, "h.csv", None).is_err());
    let text = "date,hour,unit_1\n2012-01-01,1,3.0\n2012-01-01,2,-1.0\n";
    assert!(parse_history_str(text, "h.csv", None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_instances_round_trip(seed in any::<u64>()) {
        let system = random_system(&mut ChaCha8Rng::seed_from_u64(seed), SMALL);
        let text = write_instance_string(&system);
        let back = parse_instance_str(&text, "mem").unwrap();
        prop_assert_eq!(back, system);
    }

    #[test]
    fn histories_round_trip(
        days in prop::collection::vec(prop::collection::vec(prop::collection::vec(0.0f64..500.0, 3), 2), 1..6),
    ) {
        let mut history = History::new(vec![4, 9]);
        let start = NaiveDate::from_ymd_opt(2013, 2, 27).unwrap();
        for (i, day) in days.into_iter().enumerate() {
            history.days.insert(start + chrono::Days::new(i as u64), day);
        }
        let back = parse_history_str(&write_history_string(&history), "mem", Some(3)).unwrap();
        prop_assert_eq!(back, history);
    }
}
