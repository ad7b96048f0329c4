//! RSA and IBR outcomes against direct iteration of the recursion.

mod common;

use refgame_core::pragmatics::{
    ibr_play, ibr_strategies, rsa_play, rsa_strategies, update_once, Depth, Rationality, CONVERGENCE_TOL,
};
use refgame_core::seed;

#[test]
fn rsa_matches_iterate_oracle() {
    let one = Rationality::Finite(1.0);
    for i in 0..250u64 {
        let mut rng = seed::substream(11, &[i]);
        let game = common::random_game(&mut rng, 2, 6, 4, false);
        for depth in [Depth::Rounds(1), Depth::Rounds(2), Depth::Rounds(5), Depth::Converge] {
            let (want, change) = common::rsa_oracle(&game, depth);
            for (t, &(m, c)) in want.iter().enumerate() {
                let out = rsa_play(&game, t, depth);
                assert_eq!((game.message_index(&out.message), out.choice), (Some(m), c), "game {i} {depth:?}");
            }
            if depth == Depth::Converge {
                let pair = rsa_strategies(&game, depth);
                if pair.diagnostics.converged {
                    assert!(change < CONVERGENCE_TOL);
                    let next = update_once(&game, &pair, one, one);
                    let residual = next.speaker.max_abs_diff(&pair.speaker).max(next.listener.max_abs_diff(&pair.listener));
                    assert!(residual < CONVERGENCE_TOL, "game {i}: residual {residual:e}");
                }
            }
        }
    }
}

#[test]
fn ibr_matches_iterate_oracle() {
    for i in 0..250u64 {
        let mut rng = seed::substream(13, &[i]);
        let game = common::random_game(&mut rng, 2, 6, 4, i % 2 == 0);
        for depth in [Depth::Rounds(0), Depth::Rounds(1), Depth::Rounds(2), Depth::Rounds(3), Depth::Converge] {
            let want = common::ibr_oracle(&game, depth);
            for (t, &(m, c)) in want.iter().enumerate() {
                let out = ibr_play(&game, t, depth);
                assert_eq!((game.message_index(&out.message), out.choice), (Some(m), c), "game {i} {depth:?}");
            }
        }
        let pair = ibr_strategies(&game, Depth::Converge);
        for v in (0..game.n_messages()).flat_map(|m| (0..2).map(move |c| (m, c))) {
            assert!(matches!(pair.speaker.get(v.0, v.1), x if x == 0.0 || x == 1.0));
            assert!(matches!(pair.listener.get(v.0, v.1), x if x == 0.0 || x == 1.0));
        }
    }
}
