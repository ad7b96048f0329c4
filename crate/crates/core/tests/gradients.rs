//! Analytic REINFORCE gradients against central finite differences of
//! objectives recomputed from scratch (full enumeration for the speaker's
//! entropy).

mod common;

use common::{listener_oracle, random_view, speaker_oracle};
use rand::Rng;
use refgame_core::emergence::{listener_gradient, speaker_gradient};
use refgame_core::policy::{ListenerPolicy, Message, MessageSpace, SpeakerPolicy};
use refgame_core::seed;
use refgame_core::world::FeatureView;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-5;
const POINTS: u64 = 60;

#[test]
fn speaker_gradient_matches_finite_differences() {
    let space = MessageSpace { alphabet: 3, length: 2 };
    let dim = 3;
    let mut worst: f64 = 0.0;
    for point in 0..POINTS {
        let mut rng = seed::substream(100, &[point]);
        let mut sp = SpeakerPolicy::new(dim, space, 1.0, &mut rng);
        sp.temperature = rng.random_range(0.5..2.0);
        let u = random_view(dim, &mut rng);
        let m = Message(vec![rng.random_range(0..3), rng.random_range(0..3)]);
        let a = rng.random_range(-1.0..1.0);
        let c = rng.random_range(0.0..0.5);
        let grad = speaker_gradient(&sp, &u, &m, a, c);
        for i in 0..sp.weights.len() {
            let w = sp.weights[i];
            sp.weights[i] = w + STEP;
            let up = speaker_oracle(&sp, &u, &m, a, c);
            sp.weights[i] = w - STEP;
            let down = speaker_oracle(&sp, &u, &m, a, c);
            sp.weights[i] = w;
            let fd = (up - down) / (2.0 * STEP);
            worst = worst.max((fd - grad[i]).abs());
        }
    }
    assert!(worst < TOL, "max deviation {worst:e}");
}

#[test]
fn listener_gradient_matches_finite_differences() {
    let space = MessageSpace { alphabet: 4, length: 2 };
    let dim = 3;
    let mut worst: f64 = 0.0;
    for point in 0..POINTS {
        let mut rng = seed::substream(200, &[point]);
        let mut l = ListenerPolicy::new(dim, space, 1.0, &mut rng);
        l.temperature = rng.random_range(0.5..2.0);
        let n = rng.random_range(2..5);
        let views: Vec<FeatureView> = (0..n).map(|_| random_view(dim, &mut rng)).collect();
        let m = Message(vec![rng.random_range(0..4), rng.random_range(0..4)]);
        let choice = rng.random_range(0..n);
        let a = rng.random_range(-1.0..1.0);
        let c = rng.random_range(0.0..0.5);
        let grad = listener_gradient(&l, &m, &views, choice, a, c);
        for i in 0..l.embeddings.len() {
            let w = l.embeddings[i];
            l.embeddings[i] = w + STEP;
            let up = listener_oracle(&l, &m, &views, choice, a, c);
            l.embeddings[i] = w - STEP;
            let down = listener_oracle(&l, &m, &views, choice, a, c);
            l.embeddings[i] = w;
            let fd = (up - down) / (2.0 * STEP);
            worst = worst.max((fd - grad[i]).abs());
        }
    }
    assert!(worst < TOL, "max deviation {worst:e}");
}
