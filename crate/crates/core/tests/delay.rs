use gridshield::delay::{measure, total, DelayError};
use gridshield::netsim::EventLog;
use gridshield::scenarios::{load_builtin, run_scenario, ScenarioId};
use proptest::prelude::*;

fn run(overrides: &[&str]) -> gridshield::scenarios::ScenarioRun {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    run_scenario(&load_builtin(ScenarioId::Baseline, &overrides).unwrap()).unwrap()
}

// Hand-derived from the fixture: fault sample at 200 ms, then
// MU 3 + link 1 + process bus 1 + link 1 + relay 10 + link 1 + station bus 1
// + link 0.5 + IDS (0 or 4) + link 0.5 + Omicron 4.
const FAULT_SAMPLE_US: u64 = 200_000;
const TRIP_BYPASS_US: u64 = 223_000;
const TRIP_WITH_IDS_US: u64 = 227_000;

#[test]
fn bypass_trip_time_matches_hand_derivation() {
    let r = run(&[]);
    let d = r.result.delay.as_ref().unwrap();
    assert_eq!(d.fault_sample_time.as_us(), FAULT_SAMPLE_US);
    assert_eq!(d.trip_time.as_us(), TRIP_BYPASS_US);
    assert_eq!(d.total_us, 23_000);
}

#[test]
fn with_ids_trip_time_matches_hand_derivation() {
    let r = run(&["with_ids=true"]);
    let d = r.result.delay.as_ref().unwrap();
    assert_eq!(d.trip_time.as_us(), TRIP_WITH_IDS_US);
    assert_eq!(d.total_us, 27_000);
    assert!(d.passed(), "{:?}", d.checks);
}

#[test]
fn measured_equals_configured_components() {
    for ids in ["with_ids=false", "with_ids=true"] {
        let spec = load_builtin(ScenarioId::Baseline, &[ids.to_string()]).unwrap();
        let configured = spec.delay_components().unwrap();
        let r = run_scenario(&spec).unwrap();
        let measured = r.result.delay.unwrap().components;
        assert_eq!(measured, configured, "{ids}");
    }
}

#[test]
fn differential_ids_term() {
    let base = run(&[]).result.delay.unwrap();
    let with = run(&["with_ids=true"]).result.delay.unwrap();
    assert_eq!(with.total_us - base.total_us, with.components.t_ids);
    assert_eq!(with.components.t_ids, 4_000);
}

#[test]
fn zero_inspection_time_gives_baseline_total() {
    let d = run(&["with_ids=true", "t_ids=0"]).result.delay.unwrap();
    assert_eq!(d.total_us, 23_000);
    let d = run(&["t_ids=0"]).result.delay.unwrap();
    assert_eq!(d.total_us, 23_000);
}

#[test]
fn two_inspection_passes_double_the_ids_term() {
    let d = run(&["with_ids=true", "inspection_passes=2"]).result.delay.unwrap();
    assert_eq!(d.components.t_ids, 8_000);
    assert_eq!(d.total_us, 31_000);
    assert!(!d.passed());
}

#[test]
fn no_trip_is_an_error() {
    let r = run(&["waveform.fault_current_ma=1000"]);
    assert_eq!(r.result.breaker_trips, 0);
    assert_eq!(measure(&r.log), Err(DelayError::NoTripFound));
    assert!(!r.result.passed);
    assert_eq!(measure(&EventLog::new()), Err(DelayError::MissingHeader));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any admissible configuration: the measured split is the configured
    /// split and adds up exactly to the end-to-end latency.
    #[test]
    fn additivity_under_random_delays(
        t_mu in 0u64..5_000,
        t_sp in 0u64..5_000,
        t_pied in 0u64..20_000,
        t_ss in 0u64..5_000,
        t_oc in 0u64..10_000,
        t_ids in 0u64..6_000,
        links in prop::array::uniform5(1u64..3_000),
        with_ids in any::<bool>(),
    ) {
        let mut o = vec![
            format!("t_mu={t_mu}"), format!("t_sp={t_sp}"), format!("t_pied={t_pied}"),
            format!("t_ss={t_ss}"), format!("t_oc={t_oc}"), format!("t_ids={t_ids}"),
            format!("with_ids={with_ids}"),
            // keep the process bus mirror slower than the station bus path
            "topology.links.2.latency_us=100000".to_string(),
        ];
        for (i, link) in [0usize, 1, 3, 4, 7].iter().zip(links) {
            o.push(format!("topology.links.{i}.latency_us={link}"));
        }
        let spec = load_builtin(ScenarioId::Baseline, &o).unwrap();
        let configured = spec.delay_components().unwrap();
        let r = run_scenario(&spec).unwrap();
        let d = r.result.delay.unwrap();
        prop_assert_eq!(d.components, configured);
        prop_assert_eq!(d.total_us, total(&configured));
        prop_assert_eq!(d.total_us, d.trip_time.as_us() - d.fault_sample_time.as_us());
    }
}
