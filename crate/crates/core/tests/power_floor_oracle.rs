use dashu_int::UBig;
use fibrecross::precision::{power_floor, Certainty};
use fibrecross::Rational;

const CASES: &str = include_str!("data/power_floor_cases.csv");

#[test]
fn power_floor_matches_frozen_oracle() {
    let mut reader = csv::Reader::from_reader(CASES.as_bytes());
    let mut count = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let g: u64 = record[0].parse().unwrap();
        let alpha: Rational = record[1].parse().unwrap();
        let expected: UBig = record[2].parse().unwrap();
        let floor = power_floor(g, &alpha, 40).unwrap();
        assert_eq!(floor.certainty, Certainty::Certified, "{g}^(1+{alpha}) left ambiguous");
        assert_eq!(floor.value, expected, "{g}^(1+{alpha})");
        count += 1;
    }
    assert_eq!(count, 1000);
}

#[test]
fn exact_powers_take_the_exact_path() {
    for (g, alpha, value) in [(100u64, "1", 10_000u64), (8, "1/3", 16), (1_000_000, "1/2", 1_000_000_000)] {
        let floor = power_floor(g, &alpha.parse().unwrap(), 40).unwrap();
        assert!(floor.exact && floor.is_certified());
        assert_eq!(floor.value, UBig::from(value));
    }
}
