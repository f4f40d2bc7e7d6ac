use deltacut_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stream(n: usize) -> SetpointStream {
    SetpointStream::new(
        (0..n)
            .map(|k| Sample {
                t: k as f64 * 0.0025,
                pose: Pose::new(-50.0 + k as f64, 0.0, -300.0),
                joints: JointAngles::default(),
                laser_on: true,
            })
            .collect(),
    )
    .unwrap()
}

/// Recorded from the first verified run of the motion-dropout scenario: last pulse sent at
/// tick 19, received at 20, gap of 5 > 4 on tick 25.
const MOTION_DROPOUT_TRACE: &str = "\
25\tpulse_missed\tmotion\tlast pulse received at tick 20
25\twatchdog_trip\tmotion\telapsed 5 > timeout 4
25\tcorrective_action\tmotion\tcritical: laser off, hold motion, abort
25\tlaser_off\tmotion\t
25\tmotion_hold\tmotion\tholding at sample 25
25\trun_aborted\t\tcritical process motion failed
";

#[test]
fn motion_dropout_golden_trace() {
    let out = simulate(
        &stream(59),
        &WatchdogConfig::default(),
        &FaultScript::suppress_from("motion", 20),
    )
    .unwrap();
    assert_eq!(format_trace(&out.trace), MOTION_DROPOUT_TRACE);
    assert_eq!(out.status, RunStatus::Aborted);
}

#[test]
fn nominal_golden_trace() {
    let out = simulate(
        &stream(59),
        &WatchdogConfig::default(),
        &FaultScript::none(),
    )
    .unwrap();
    assert_eq!(
        format_trace(&out.trace),
        "58\trun_complete\t\t59 samples executed\n"
    );
}

fn random_config(rng: &mut ChaCha8Rng) -> WatchdogConfig {
    let pulse_period = rng.random_range(1..=4);
    WatchdogConfig {
        pulse_period,
        timeout: pulse_period + rng.random_range(0..=6),
        ..WatchdogConfig::default()
    }
}

#[test]
fn no_false_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let cfg = random_config(&mut rng);
        let n = rng.random_range(1..200);
        let out = simulate(&stream(n), &cfg, &FaultScript::none()).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].kind, EventKind::RunComplete);
        assert_eq!(out.final_tick, n as u64 - 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn long_gaps_trip_within_bound(
        period in 1u64..4, slack in 0u64..6, start in 0u64..80,
        process in 0usize..3, len in 1u64..40,
    ) {
        let cfg = WatchdogConfig { pulse_period: period, timeout: period + slack, ..WatchdogConfig::default() };
        let name = ["motion", "laser", "logging"][process];
        let gap_end = start + cfg.timeout + len;
        let faults = FaultScript {
            faults: vec![FaultInterval { process_name: name.into(), start_tick: start, end_tick: gap_end }],
        };
        let out = simulate(&stream(200), &cfg, &faults).unwrap();
        // last pulse sent before the gap, received one tick later
        let last_received = if start == 0 { 0 } else { (start - 1) / period * period + 1 };
        let trip = out.trace.iter().find(|e| e.kind == EventKind::WatchdogTrip);
        let gap = (gap_end + 1).div_ceil(period) * period + 1 - last_received;
        if gap > cfg.timeout {
            let trip = trip.expect("gap above timeout must trip");
            prop_assert_eq!(trip.tick, last_received + cfg.timeout + 1);
            if name == "motion" {
                prop_assert!(out.trace.iter().any(|e| e.kind == EventKind::LaserOff && e.tick == trip.tick));
            }
        } else {
            prop_assert!(trip.is_none());
        }

        let ticks: Vec<u64> = out.trace.iter().map(|e| e.tick).collect();
        prop_assert!(ticks.windows(2).all(|w| w[0] <= w[1]));
        let terminals = out.trace.iter().filter(|e| e.kind.is_terminal()).count();
        prop_assert_eq!(terminals, 1);
        prop_assert!(out.trace.last().unwrap().kind.is_terminal());
        prop_assert!(replay_check(&out.trace, &stream(200), &cfg, &faults));
    }
}
