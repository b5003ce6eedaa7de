mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{isolation, random_schedule, ScheduleScenario};

#[test]
fn fixed_two_partition_schedule_is_isolated() {
    let s = ScheduleScenario {
        frame: 20_000,
        windows: vec![(1, 0, 8_000), (2, 10_000, 6_000)],
        partitions: 2,
        procs: vec![vec![(5, 3000, 100), (7, 500, 2500)], vec![(3, 9000, 0)]],
    };
    isolation(&s, 10).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_schedules_are_isolated_and_periodic(seed in any::<u64>()) {
        let s = random_schedule(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(isolation(&s, 10), Ok(()));
    }
}
