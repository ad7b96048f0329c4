//! Short-term pragmatic reasoning on frozen priors.
//!
//! A [`StageGame`] restricts the priors to the messages the speaker would
//! plausibly use for any candidate. One-sided models (SampleL, ArgmaxL) let
//! the speaker consult a listener model; two-sided models alternate
//! normalized power updates between the agents, with RSA (`alpha = beta = 1`)
//! and IBR (`alpha = beta = inf`) as the named presets.
//!
//! Ties are always broken toward the lowest message or candidate index.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::policy::{argmax, sample_index, ListenerPolicy, Message, SpeakerPolicy};
use crate::world::GameInstance;

/// Dense `messages x candidates` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn max_abs_diff(&self, other: &Table) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The priors of one instance restricted to the union of proposal sets.
#[derive(Debug, Clone, PartialEq)]
pub struct StageGame {
    pub n_candidates: usize,
    /// `M_∪` in first-appearance order: candidate 0's proposals by
    /// descending probability, then candidate 1's new ones, and so on.
    pub messages: Vec<Message>,
    /// Per candidate, indices into `messages` of its proposal set.
    pub proposals: Vec<Vec<usize>>,
    /// Speaker prior renormalized over each candidate's proposals; zero
    /// outside them. Columns sum to 1.
    pub speaker: Table,
    /// Unnormalized speaker prior for every `(message, candidate)` pair.
    pub speaker_raw: Table,
    /// Listener prior over candidates for each message. Rows sum to 1.
    pub listener: Table,
}

impl StageGame {
    /// Builds the stage game of an instance: proposal sets from the speaker
    /// on its own views, listener distributions on the listener's views.
    pub fn build(
        instance: &GameInstance,
        speaker: &SpeakerPolicy,
        listener: &ListenerPolicy,
        mass_threshold: f64,
        max_size: usize,
    ) -> Result<Self> {
        let n = instance.n_candidates();
        let mut messages: Vec<Message> = Vec::new();
        let mut proposals = Vec::with_capacity(n);
        for view in &instance.speaker_views {
            let set = speaker.proposal_set(view, mass_threshold, max_size)?;
            if set.is_empty() {
                return Err(Error::InvalidArgument("empty proposal set".into()));
            }
            let mut idx = Vec::with_capacity(set.len());
            for (m, _) in set.entries {
                let i = match messages.iter().position(|x| *x == m) {
                    Some(i) => i,
                    None => {
                        messages.push(m);
                        messages.len() - 1
                    }
                };
                idx.push(i);
            }
            proposals.push(idx);
        }
        let mut speaker_raw = Table::zeros(messages.len(), n);
        for (c, view) in instance.speaker_views.iter().enumerate() {
            for (m, msg) in messages.iter().enumerate() {
                speaker_raw.set(m, c, speaker.prob(view, msg));
            }
        }
        let mut table = Table::zeros(messages.len(), n);
        for (m, msg) in messages.iter().enumerate() {
            for (c, p) in listener.probs(msg, &instance.listener_views).into_iter().enumerate() {
                table.set(m, c, p);
            }
        }
        Ok(Self::assemble(messages, proposals, speaker_raw, table))
    }

    /// Builds a game directly from prior tables. `speaker_prior[c][m]` is the
    /// speaker prior of message `m` for candidate `c` (0 = not proposed);
    /// `listener_prior[m][c]` the listener prior. Messages are labelled by
    /// their index.
    pub fn from_priors(speaker_prior: &[Vec<f64>], listener_prior: &[Vec<f64>]) -> Result<Self> {
        let n = speaker_prior.len();
        let n_msg = listener_prior.len();
        if n == 0 || speaker_prior.iter().any(|col| col.len() != n_msg) {
            return Err(Error::InvalidArgument("speaker prior has inconsistent shape".into()));
        }
        if listener_prior.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument("listener prior has inconsistent shape".into()));
        }
        let messages = (0..n_msg).map(|i| Message(vec![i as u8])).collect();
        let mut speaker_raw = Table::zeros(n_msg, n);
        let mut proposals = Vec::with_capacity(n);
        for (c, col) in speaker_prior.iter().enumerate() {
            let mut idx: Vec<usize> = (0..n_msg).filter(|&m| col[m] > 0.0).collect();
            if idx.is_empty() {
                return Err(Error::InvalidArgument(format!("candidate {c} proposes nothing")));
            }
            idx.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
            for &m in &idx {
                speaker_raw.set(m, c, col[m]);
            }
            proposals.push(idx);
        }
        let mut listener = Table::zeros(n_msg, n);
        for (m, row) in listener_prior.iter().enumerate() {
            let total: f64 = row.iter().sum();
            for (c, &p) in row.iter().enumerate() {
                listener.set(m, c, p / total);
            }
        }
        Ok(Self::assemble(messages, proposals, speaker_raw, listener))
    }

    fn assemble(messages: Vec<Message>, proposals: Vec<Vec<usize>>, speaker_raw: Table, listener: Table) -> Self {
        let n = proposals.len();
        let mut speaker = Table::zeros(messages.len(), n);
        for (c, idx) in proposals.iter().enumerate() {
            let total: f64 = idx.iter().map(|&m| speaker_raw.get(m, c)).sum();
            for &m in idx {
                speaker.set(m, c, speaker_raw.get(m, c) / total);
            }
        }
        Self {
            n_candidates: n,
            messages,
            proposals,
            speaker,
            speaker_raw,
            listener,
        }
    }

    pub fn n_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn message_index(&self, m: &Message) -> Option<usize> {
        self.messages.iter().position(|x| x == m)
    }

    pub fn in_support(&self, m: usize, c: usize) -> bool {
        self.speaker.get(m, c) > 0.0
    }

    fn outcome(&self, target: usize, message: usize, choice: usize) -> Outcome {
        Outcome {
            message: self.messages[message].clone(),
            choice,
            success: choice == target,
            sp: self.speaker_raw.get(message, target),
            lp: self.listener.get(message, choice),
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Non-fatal events during a strategy computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Unnormalizable rows replaced by a uniform distribution.
    pub fallbacks: usize,
    /// Recursion rounds actually run.
    pub rounds: usize,
    /// False when a convergence run hit the iteration cap or cycled.
    pub converged: bool,
}

/// Realized play of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub message: Message,
    pub choice: usize,
    pub success: bool,
    /// Prior speaker probability of the sent message for the target.
    pub sp: f64,
    /// Prior listener probability of the choice given the message.
    pub lp: f64,
    pub diagnostics: Diagnostics,
}

// ---------------------------------------------------------------------------
// one-sided models

/// Speaker's habitual message: argmax of the prior for the target.
pub fn baseline_message(game: &StageGame, target: usize) -> usize {
    argmax(&game.speaker.col(target))
}

pub fn baseline_play(game: &StageGame, target: usize) -> Outcome {
    let m = baseline_message(game, target);
    game.outcome(target, m, argmax(game.listener.row(m)))
}

/// `x^w` in the log domain, with `0^0 = 1`.
fn weighted_log(x: f64, w: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * x.ln()
    }
}

/// SampleL speaker: argmax over the target's proposals of
/// `S0(m|t)^lambda * L0(t|m)^(1-lambda)`.
pub fn sample_l_message(game: &StageGame, target: usize, lambda: f64) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for &m in sorted(&game.proposals[target]).iter() {
        let score = weighted_log(game.speaker.get(m, target), lambda)
            + weighted_log(game.listener.get(m, target), 1.0 - lambda);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((m, score));
        }
    }
    best.map(|(m, _)| m).expect("nonempty proposal set")
}

fn sorted(idx: &[usize]) -> Vec<usize> {
    let mut v = idx.to_vec();
    v.sort_unstable();
    v
}

pub fn sample_l<R: Rng + ?Sized>(game: &StageGame, target: usize, lambda: f64, rng: &mut R) -> Outcome {
    let m = sample_l_message(game, target, lambda);
    let choice = sample_index(game.listener.row(m), rng);
    game.outcome(target, m, choice)
}

/// ArgmaxL speaker: the highest-prior proposal that the listener's argmax
/// maps to the target, else the habitual message.
pub fn argmax_l_message(game: &StageGame, target: usize) -> usize {
    let col = game.speaker.col(target);
    let mut best: Option<usize> = None;
    for &m in sorted(&game.proposals[target]).iter() {
        if argmax(game.listener.row(m)) == target && best.is_none_or(|b| col[m] > col[b]) {
            best = Some(m);
        }
    }
    best.unwrap_or_else(|| baseline_message(game, target))
}

pub fn argmax_l(game: &StageGame, target: usize) -> Outcome {
    let m = argmax_l_message(game, target);
    game.outcome(target, m, argmax(game.listener.row(m)))
}

// ---------------------------------------------------------------------------
// two-sided recursion

/// Exponent of a power update; `Infinite` is the argmax (best-response) limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rationality {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Rounds(usize),
    Converge,
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Rounds(k) => write!(f, "{k}rnd"),
            Depth::Converge => write!(f, "cnvg"),
        }
    }
}

pub const CONVERGENCE_TOL: f64 = 1e-8;
pub const MAX_ROUNDS: usize = 100;

/// Speaker strategy `S_k(m|c)` (columns stochastic) and listener strategy
/// `L_k(c|m)` (rows stochastic) after `depth` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyPair {
    pub speaker: Table,
    pub listener: Table,
    pub depth: usize,
    pub diagnostics: Diagnostics,
}

impl StrategyPair {
    pub fn initial(game: &StageGame) -> Self {
        Self {
            speaker: game.speaker.clone(),
            listener: game.listener.clone(),
            depth: 0,
            diagnostics: Diagnostics {
                converged: true,
                ..Diagnostics::default()
            },
        }
    }

    pub fn speaker_message(&self, target: usize) -> usize {
        argmax(&self.speaker.col(target))
    }

    pub fn listener_choice(&self, message: usize) -> usize {
        argmax(self.listener.row(message))
    }
}

/// Normalizes `log_weights` over `support` with exponent `rate`; returns
/// `false` when every weight is zero (the caller falls back to uniform).
fn power_normalize(log_weights: &[f64], rate: Rationality, out: &mut [f64]) -> bool {
    out.iter_mut().for_each(|x| *x = 0.0);
    let finite: Vec<usize> = (0..log_weights.len()).filter(|&i| log_weights[i] > f64::NEG_INFINITY).collect();
    if finite.is_empty() {
        return false;
    }
    match rate {
        Rationality::Infinite => {
            let mut best = finite[0];
            for &i in &finite {
                if log_weights[i] > log_weights[best] {
                    best = i;
                }
            }
            out[best] = 1.0;
        }
        Rationality::Finite(a) => {
            let max = finite.iter().map(|&i| a * log_weights[i]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for &i in &finite {
                out[i] = (a * log_weights[i] - max).exp();
                total += out[i];
            }
            out.iter_mut().for_each(|x| *x /= total);
        }
    }
    true
}

/// One alternating update with reciprocal-prior message cost and a uniform
/// candidate prior:
/// `S'(m|t) ∝ [L(t|m) S0(m|t)]^alpha`, `L'(t|m) ∝ S'(m|t)^beta`.
pub fn update_once(game: &StageGame, current: &StrategyPair, alpha: Rationality, beta: Rationality) -> StrategyPair {
    let (n_m, n_c) = (game.n_messages(), game.n_candidates);
    let mut fallbacks = 0;

    let mut speaker = Table::zeros(n_m, n_c);
    let mut logw = vec![f64::NEG_INFINITY; n_m];
    let mut col = vec![0.0; n_m];
    for t in 0..n_c {
        for (m, w) in logw.iter_mut().enumerate() {
            *w = if game.in_support(m, t) {
                (current.listener.get(m, t) * game.speaker.get(m, t)).ln()
            } else {
                f64::NEG_INFINITY
            };
        }
        if !power_normalize(&logw, alpha, &mut col) {
            fallbacks += 1;
            let support: Vec<usize> = (0..n_m).filter(|&m| game.in_support(m, t)).collect();
            let uniform: Vec<f64> = (0..n_m)
                .map(|m| if game.in_support(m, t) { 0.0 } else { f64::NEG_INFINITY })
                .collect();
            power_normalize(&uniform, alpha, &mut col);
            debug_assert!(!support.is_empty());
        }
        for (m, &p) in col.iter().enumerate() {
            speaker.set(m, t, p);
        }
    }

    let mut listener = Table::zeros(n_m, n_c);
    let mut logw = vec![0.0; n_c];
    let mut row = vec![0.0; n_c];
    for m in 0..n_m {
        for (t, w) in logw.iter_mut().enumerate() {
            *w = speaker.get(m, t).ln();
        }
        if !power_normalize(&logw, beta, &mut row) {
            fallbacks += 1;
            power_normalize(&vec![0.0; n_c], beta, &mut row);
        }
        for (t, &p) in row.iter().enumerate() {
            listener.set(m, t, p);
        }
    }

    StrategyPair {
        speaker,
        listener,
        depth: current.depth + 1,
        diagnostics: Diagnostics {
            fallbacks: current.diagnostics.fallbacks + fallbacks,
            rounds: current.diagnostics.rounds + 1,
            converged: false,
        },
    }
}

/// Runs `k` alternating updates from the priors.
pub fn recursive_update(game: &StageGame, alpha: Rationality, beta: Rationality, k: usize) -> StrategyPair {
    let mut pair = StrategyPair::initial(game);
    for _ in 0..k {
        let next = update_once(game, &pair, alpha, beta);
        let still = next.speaker.max_abs_diff(&pair.speaker).max(next.listener.max_abs_diff(&pair.listener))
            < CONVERGENCE_TOL;
        pair = next;
        pair.diagnostics.converged = still;
    }
    if k == 0 {
        pair.diagnostics.converged = true;
    }
    pair
}

/// RSA strategies (`alpha = beta = 1`) to a fixed depth, or until the
/// max-norm change drops below [`CONVERGENCE_TOL`] (at most [`MAX_ROUNDS`]).
pub fn rsa_strategies(game: &StageGame, depth: Depth) -> StrategyPair {
    let one = Rationality::Finite(1.0);
    match depth {
        Depth::Rounds(k) => recursive_update(game, one, one, k),
        Depth::Converge => {
            let mut pair = StrategyPair::initial(game);
            for _ in 0..MAX_ROUNDS {
                let next = update_once(game, &pair, one, one);
                let delta = next.speaker.max_abs_diff(&pair.speaker).max(next.listener.max_abs_diff(&pair.listener));
                pair = next;
                if delta < CONVERGENCE_TOL {
                    pair.diagnostics.converged = true;
                    return pair;
                }
            }
            pair
        }
    }
}

/// IBR strategies (one-hot best responses) to a fixed depth, or until a
/// strategy pair repeats. A repeat of an older pair is a cycle: the
/// recurring pair is returned with `converged = false`.
pub fn ibr_strategies(game: &StageGame, depth: Depth) -> StrategyPair {
    let inf = Rationality::Infinite;
    match depth {
        Depth::Rounds(k) => recursive_update(game, inf, inf, k),
        Depth::Converge => {
            let mut history = vec![StrategyPair::initial(game)];
            for _ in 0..MAX_ROUNDS {
                let next = update_once(game, history.last().expect("nonempty"), inf, inf);
                let same = |p: &StrategyPair| p.speaker == next.speaker && p.listener == next.listener;
                if let Some(pos) = history.iter().position(same) {
                    let mut pair = next;
                    pair.diagnostics.converged = pos + 1 == history.len();
                    return pair;
                }
                history.push(next);
            }
            let mut pair = history.pop().expect("nonempty");
            pair.diagnostics.converged = false;
            pair
        }
    }
}

fn play_pair(game: &StageGame, target: usize, pair: &StrategyPair) -> Outcome {
    let m = pair.speaker_message(target);
    let mut out = game.outcome(target, m, pair.listener_choice(m));
    out.diagnostics = pair.diagnostics;
    out
}

pub fn rsa_play(game: &StageGame, target: usize, depth: Depth) -> Outcome {
    play_pair(game, target, &rsa_strategies(game, depth))
}

pub fn ibr_play(game: &StageGame, target: usize, depth: Depth) -> Outcome {
    play_pair(game, target, &ibr_strategies(game, depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn two_by_two(l0: [[f64; 2]; 2]) -> StageGame {
        // S0 columns c1:(.8,.2), c2:(.3,.7) over {m1,m2}
        StageGame::from_priors(&[vec![0.8, 0.2], vec![0.3, 0.7]], &[l0[0].to_vec(), l0[1].to_vec()]).unwrap()
    }

    fn uniform_l0() -> StageGame {
        two_by_two([[0.5, 0.5], [0.5, 0.5]])
    }

    #[test]
    fn baseline_examples() {
        let g = StageGame::from_priors(&[vec![0.8, 0.2], vec![0.5, 0.5]], &[vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let out = baseline_play(&g, 0);
        assert_eq!((out.message.0[0], out.choice), (0, 0));
        let single = StageGame::from_priors(&[vec![0.6, 0.4]], &[vec![1.0], vec![1.0]]).unwrap();
        assert!(baseline_play(&single, 0).success);
        let flat = StageGame::from_priors(&[vec![0.9, 0.1], vec![0.1, 0.9]], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(baseline_play(&flat, 1).choice, 0);
    }

    #[test]
    fn sample_l_limits_and_blend() {
        let g = StageGame::from_priors(&[vec![0.8, 0.2], vec![0.5, 0.5]], &[vec![0.4, 0.6], vec![0.9, 0.1]]).unwrap();
        let mut rng = seed::stream(0);
        assert_eq!(sample_l(&g, 0, 1.0, &mut rng).message, baseline_play(&g, 0).message);
        // lambda = 0: argmax L0(target|m) = m2 (0.9 vs 0.4)
        assert_eq!(sample_l_message(&g, 0, 0.0), 1);
        // lambda = .5: sqrt(.8*.4)=.566 vs sqrt(.2*.9)=.424 -> m1
        assert_eq!(sample_l_message(&g, 0, 0.5), 0);
    }

    #[test]
    fn argmax_l_constrained_choice() {
        // only m2 is decoded as c1
        let g = StageGame::from_priors(&[vec![0.6, 0.4], vec![0.5, 0.5]], &[vec![0.3, 0.7], vec![0.8, 0.2]]).unwrap();
        let out = argmax_l(&g, 0);
        assert_eq!(out.message.0[0], 1);
        assert!(out.success);
        // nothing decodes as c2 -> identical to baseline
        let g = StageGame::from_priors(&[vec![0.6, 0.4], vec![0.5, 0.5]], &[vec![0.9, 0.1], vec![0.8, 0.2]]).unwrap();
        assert_eq!(argmax_l(&g, 1), baseline_play(&g, 1));
    }

    #[test]
    fn zero_depth_returns_priors() {
        let g = uniform_l0();
        let p = recursive_update(&g, Rationality::Finite(1.0), Rationality::Finite(1.0), 0);
        assert_eq!(p.speaker, g.speaker);
        assert_eq!(p.listener, g.listener);
        let (a, b) = (rsa_play(&g, 1, Depth::Rounds(0)), baseline_play(&g, 1));
        assert_eq!((a.message, a.choice), (b.message, b.choice));
    }

    #[test]
    fn one_rsa_step_by_hand() {
        let g = uniform_l0();
        let p = recursive_update(&g, Rationality::Finite(1.0), Rationality::Finite(1.0), 1);
        assert!((p.speaker.get(0, 0) - 0.8).abs() < 1e-12);
        assert!((p.speaker.get(1, 0) - 0.2).abs() < 1e-12);
        assert!((p.listener.get(0, 0) - 8.0 / 11.0).abs() < 1e-12);
        assert!((p.listener.get(0, 1) - 3.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn large_alpha_approaches_one_hot() {
        let g = uniform_l0();
        let p = recursive_update(&g, Rationality::Finite(500.0), Rationality::Finite(1.0), 1);
        assert!((p.speaker.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((p.speaker.get(1, 1) - 1.0).abs() < 1e-12);
        let q = recursive_update(&g, Rationality::Infinite, Rationality::Finite(1.0), 1);
        assert!(p.speaker.max_abs_diff(&q.speaker) < 1e-12);
    }

    #[test]
    fn rsa_converges_to_separating_listener() {
        let g = uniform_l0();
        let p = rsa_strategies(&g, Depth::Converge);
        assert!(p.diagnostics.converged);
        assert_eq!(p.listener_choice(0), 0);
        assert_eq!(p.listener_choice(1), 1);
        let again = update_once(&g, &p, Rationality::Finite(1.0), Rationality::Finite(1.0));
        assert!(again.speaker.max_abs_diff(&p.speaker) < CONVERGENCE_TOL);
    }

    #[test]
    fn ibr_hand_example() {
        let g = uniform_l0();
        let s1 = ibr_strategies(&g, Depth::Rounds(1));
        assert_eq!(s1.speaker_message(0), 0);
        assert_eq!(s1.speaker_message(1), 1);
        assert_eq!(s1.listener_choice(0), 0);
        assert_eq!(s1.listener_choice(1), 1);
        let fixed = ibr_strategies(&g, Depth::Converge);
        assert!(fixed.diagnostics.converged);
        assert!(ibr_play(&g, 0, Depth::Converge).success);
        assert!(ibr_play(&g, 1, Depth::Converge).success);
    }

    #[test]
    fn identical_candidates_stay_symmetric() {
        let g = StageGame::from_priors(&[vec![0.7, 0.3], vec![0.7, 0.3]], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let ibr = ibr_strategies(&g, Depth::Converge);
        assert_eq!(ibr.speaker_message(0), ibr.speaker_message(1));
        assert_eq!(ibr.listener_choice(ibr.speaker_message(0)), 0);
        let rsa = rsa_strategies(&g, Depth::Converge);
        for m in 0..2 {
            assert!((rsa.speaker.get(m, 0) - rsa.speaker.get(m, 1)).abs() < 1e-12);
            assert!((rsa.listener.get(m, 0) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn unnormalizable_rows_fall_back_to_uniform() {
        // L0 puts zero mass on c2 for every message c2 proposes
        let g = StageGame::from_priors(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.6, 0.4]], &[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]])
            .unwrap();
        let p = recursive_update(&g, Rationality::Finite(1.0), Rationality::Finite(1.0), 1);
        assert!(p.diagnostics.fallbacks >= 1);
        assert!((p.speaker.get(1, 1) - 0.5).abs() < 1e-12);
        assert!((p.speaker.get(2, 1) - 0.5).abs() < 1e-12);
    }
}
