//! Equilibrium enumeration against the brute-force definition.

mod common;

use std::collections::BTreeSet;

use refgame_core::gametheory::{enumerate_nash, ComplexityGuard, PayoffTable};
use refgame_core::seed;

#[test]
fn enumeration_matches_brute_force() {
    let guard = ComplexityGuard::default();
    let mut checked = 0;
    for i in 0..240u64 {
        let mut rng = seed::substream(7, &[i]);
        let (n_c, max_m, max_p) = match i % 3 {
            0 => (2, 8, 4),
            1 => (3, 5, 3),
            _ => (2, 6, 6),
        };
        let game = common::random_game(&mut rng, n_c, max_m, max_p, i % 2 == 0);
        let table = PayoffTable::build(&game, &guard).unwrap();
        let got: BTreeSet<(Vec<usize>, Vec<usize>)> = enumerate_nash(&table)
            .into_iter()
            .map(|e| (table.speaker_strategies[e.speaker].0.clone(), table.listener_strategy(e.listener).0))
            .collect();
        assert_eq!(got, common::nash_oracle(&game), "game {i}");
        checked += 1;
    }
    assert!(checked >= 200);
}
