//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use refgame_core::policy::{ListenerPolicy, Message, SpeakerPolicy};
use refgame_core::pragmatics::{Depth, StageGame};
use refgame_core::world::FeatureView;

/// Random stage game: `n_c` candidates, a pool of at most `max_messages`
/// messages, proposal sets of 1..=max_prop. With `coarse`, priors take few
/// distinct values so ties are common.
pub fn random_game<R: Rng>(rng: &mut R, n_c: usize, max_messages: usize, max_prop: usize, coarse: bool) -> StageGame {
    let n_m = rng.random_range(1..=max_messages);
    let weight = |rng: &mut R| -> f64 {
        if coarse {
            f64::from(rng.random_range(1..=3u8))
        } else {
            rng.random_range(0.05..1.0)
        }
    };
    let mut s0 = vec![vec![0.0; n_m]; n_c];
    for col in &mut s0 {
        let k = rng.random_range(1..=max_prop.min(n_m));
        let picks = rand::seq::index::sample(rng, n_m, k);
        for m in picks.iter() {
            col[m] = weight(rng);
        }
    }
    // keep only messages somebody proposes
    let used: Vec<usize> = (0..n_m).filter(|&m| s0.iter().any(|c| c[m] > 0.0)).collect();
    let s0: Vec<Vec<f64>> = s0.iter().map(|c| used.iter().map(|&m| c[m]).collect()).collect();
    let l0: Vec<Vec<f64>> = used.iter().map(|_| (0..n_c).map(|_| weight(rng)).collect()).collect();
    StageGame::from_priors(&s0, &l0).expect("valid game")
}

fn speaker_strategies(game: &StageGame) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for prop in &game.proposals {
        let mut next = Vec::new();
        for prefix in &out {
            for &m in prop {
                let mut s = prefix.clone();
                s.push(m);
                next.push(s);
            }
        }
        out = next;
    }
    out
}

fn listener_strategies(game: &StageGame) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..game.n_messages() {
        let mut next = Vec::new();
        for prefix in &out {
            for c in 0..game.n_candidates {
                let mut l = prefix.clone();
                l.push(c);
                next.push(l);
            }
        }
        out = next;
    }
    out
}

fn payoff(game: &StageGame, s: &[usize], l: &[usize]) -> (f64, f64) {
    let matched = s.iter().enumerate().all(|(c, &m)| l[m] == c);
    if !matched {
        return (0.0, 0.0);
    }
    let mut ps = 1.0;
    for (c, &m) in s.iter().enumerate() {
        ps *= game.speaker.get(m, c);
    }
    let mut pl = 1.0;
    for (m, &c) in l.iter().enumerate() {
        pl *= game.listener.get(m, c);
    }
    (ps, pl)
}

/// Every pure pair from which neither agent has a strictly profitable
/// unilateral deviation.
pub fn nash_oracle(game: &StageGame) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let ss = speaker_strategies(game);
    let ls = listener_strategies(game);
    let mut out = BTreeSet::new();
    for s in &ss {
        for l in &ls {
            let (ps, pl) = payoff(game, s, l);
            let speaker_ok = ss.iter().all(|s2| payoff(game, s2, l).0 <= ps);
            let listener_ok = ls.iter().all(|l2| payoff(game, s, l2).1 <= pl);
            if speaker_ok && listener_ok {
                out.insert((s.clone(), l.clone()));
            }
        }
    }
    out
}

fn first_max(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// `(message, choice)` for every target under RSA, iterated directly on
/// probability tables. Returns the outcomes and the final max-norm change.
pub fn rsa_oracle(game: &StageGame, depth: Depth) -> (Vec<(usize, usize)>, f64) {
    let (n_m, n_c) = (game.n_messages(), game.n_candidates);
    let mut s: Vec<Vec<f64>> = (0..n_c).map(|t| (0..n_m).map(|m| game.speaker.get(m, t)).collect()).collect();
    let mut l: Vec<Vec<f64>> = (0..n_m).map(|m| (0..n_c).map(|t| game.listener.get(m, t)).collect()).collect();
    let rounds = match depth {
        Depth::Rounds(k) => k,
        Depth::Converge => 100,
    };
    let mut change = 0.0;
    for _ in 0..rounds {
        let mut s2 = vec![vec![0.0; n_m]; n_c];
        for t in 0..n_c {
            let w: Vec<f64> = (0..n_m).map(|m| l[m][t] * game.speaker.get(m, t)).collect();
            let z: f64 = w.iter().sum();
            for m in 0..n_m {
                s2[t][m] = if z > 0.0 {
                    w[m] / z
                } else if game.speaker.get(m, t) > 0.0 {
                    1.0 / game.proposals[t].len() as f64
                } else {
                    0.0
                };
            }
        }
        let mut l2 = vec![vec![0.0; n_c]; n_m];
        for m in 0..n_m {
            let z: f64 = (0..n_c).map(|t| s2[t][m]).sum();
            for t in 0..n_c {
                l2[m][t] = if z > 0.0 { s2[t][m] / z } else { 1.0 / n_c as f64 };
            }
        }
        change = 0.0f64;
        for t in 0..n_c {
            for m in 0..n_m {
                change = change.max((s2[t][m] - s[t][m]).abs()).max((l2[m][t] - l[m][t]).abs());
            }
        }
        s = s2;
        l = l2;
        if depth == Depth::Converge && change < 1e-8 {
            break;
        }
    }
    let out = (0..n_c)
        .map(|t| {
            let m = first_max(&s[t]);
            (m, first_max(&l[m]))
        })
        .collect();
    (out, change)
}

/// `(message, choice)` for every target under IBR, iterating deterministic
/// maps until a pair of maps repeats.
pub fn ibr_oracle(game: &StageGame, depth: Depth) -> Vec<(usize, usize)> {
    let (n_m, n_c) = (game.n_messages(), game.n_candidates);
    let step_speaker = |listener: &dyn Fn(usize, usize) -> f64| -> Vec<usize> {
        (0..n_c)
            .map(|t| {
                let support: Vec<usize> = (0..n_m).filter(|&m| game.speaker.get(m, t) > 0.0).collect();
                let mut best: Option<(usize, f64)> = None;
                for &m in &support {
                    let v = listener(m, t) * game.speaker.get(m, t);
                    if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                        best = Some((m, v));
                    }
                }
                best.map_or(support[0], |(m, _)| m)
            })
            .collect()
    };
    let step_listener = |sigma: &[usize]| -> Vec<usize> {
        (0..n_m).map(|m| (0..n_c).find(|&t| sigma[t] == m).unwrap_or(0)).collect()
    };

    let mut sigma = step_speaker(&|m, t| game.listener.get(m, t));
    let mut rho = step_listener(&sigma);
    let mut history = vec![(sigma.clone(), rho.clone())];
    let rounds = match depth {
        Depth::Rounds(0) => {
            return (0..n_c)
                .map(|t| {
                    let m = first_max(&(0..n_m).map(|m| game.speaker.get(m, t)).collect::<Vec<_>>());
                    (m, first_max(&(0..n_c).map(|c| game.listener.get(m, c)).collect::<Vec<_>>()))
                })
                .collect()
        }
        Depth::Rounds(k) => k - 1,
        Depth::Converge => 99,
    };
    for _ in 0..rounds {
        let r = rho.clone();
        sigma = step_speaker(&move |m, t| if r[m] == t { 1.0 } else { 0.0 });
        rho = step_listener(&sigma);
        let pair = (sigma.clone(), rho.clone());
        if depth == Depth::Converge && history.contains(&pair) {
            break;
        }
        history.push(pair);
    }
    (0..n_c).map(|t| (sigma[t], rho[sigma[t]])).collect()
}

pub fn random_view<R: Rng>(dim: usize, rng: &mut R) -> FeatureView {
    FeatureView {
        values: (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect(),
    }
}

/// Speaker objective with the entropy summed over every message.
pub fn speaker_oracle(sp: &SpeakerPolicy, u: &FeatureView, m: &Message, a: f64, c: f64) -> f64 {
    let joint_entropy: f64 = sp
        .space
        .enumerate()
        .iter()
        .map(|x| {
            let p = sp.prob(u, x);
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum();
    a * sp.prob(u, m).ln() + c * joint_entropy
}

/// Listener objective recomputed from the raw embeddings.
pub fn listener_oracle(l: &ListenerPolicy, m: &Message, views: &[FeatureView], choice: usize, a: f64, c: f64) -> f64 {
    let scores: Vec<f64> = views
        .iter()
        .map(|v| {
            let mut s = 0.0;
            for (j, &sym) in m.0.iter().enumerate() {
                for (k, x) in v.values.iter().enumerate() {
                    s += l.embeddings[l.index(j, usize::from(sym), k)] * x;
                }
            }
            s / l.temperature
        })
        .collect();
    let z: f64 = scores.iter().map(|s| s.exp()).sum();
    let p: Vec<f64> = scores.iter().map(|s| s.exp() / z).collect();
    let h: f64 = p.iter().map(|q| -q * q.ln()).sum();
    a * p[choice].ln() + c * h
}
