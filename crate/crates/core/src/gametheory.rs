//! Pure-strategy equilibria of the stage game.
//!
//! A speaker strategy assigns one proposal to each candidate; a listener
//! strategy assigns a candidate to every message of the stage game. A pair
//! matches when the listener inverts the speaker on every candidate. Matched
//! pairs pay the product of the prior probabilities of the used choices to
//! each agent; anything else pays `(0, 0)`.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::policy::sample_index;
use crate::pragmatics::{Outcome, StageGame};

/// Bounds on table size; exceeding them is an error, never a silent skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityGuard {
    pub max_messages: usize,
    pub max_candidates: usize,
    pub max_cells: usize,
}

impl Default for ComplexityGuard {
    fn default() -> Self {
        Self {
            max_messages: 12,
            max_candidates: 4,
            max_cells: 1 << 24,
        }
    }
}

/// Message index (into the stage game) for each candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpeakerStrategy(pub Vec<usize>);

/// Candidate index for each message of the stage game.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ListenerStrategy(pub Vec<usize>);

impl SpeakerStrategy {
    pub fn uses(&self, m: usize) -> bool {
        self.0.contains(&m)
    }
}

pub fn match_strategies(s: &SpeakerStrategy, l: &ListenerStrategy) -> bool {
    s.0.iter().enumerate().all(|(c, &m)| l.0[m] == c)
}

/// Unconditional payoffs `(P_S, P_L)`: the prior probability of each agent
/// playing its side of the pair.
pub fn psych_payoffs(s: &SpeakerStrategy, l: &ListenerStrategy, game: &StageGame) -> (f64, f64) {
    (speaker_payoff(s, game), listener_payoff(l, game))
}

fn speaker_payoff(s: &SpeakerStrategy, game: &StageGame) -> f64 {
    s.0.iter().enumerate().fold(1.0, |acc, (c, &m)| acc * game.speaker.get(m, c))
}

fn listener_payoff(l: &ListenerStrategy, game: &StageGame) -> f64 {
    l.0.iter().enumerate().fold(1.0, |acc, (m, &c)| acc * game.listener.get(m, c))
}

/// Both agents' payoffs over every strategy pair, stored as the two
/// marginal vectors; cells are evaluated on demand.
#[derive(Debug, Clone)]
pub struct PayoffTable {
    pub n_candidates: usize,
    pub n_messages: usize,
    pub speaker_strategies: Vec<SpeakerStrategy>,
    speaker_payoffs: Vec<f64>,
    listener_payoffs: Vec<f64>,
    powers: Vec<usize>,
}

impl PayoffTable {
    pub fn build(game: &StageGame, guard: &ComplexityGuard) -> Result<Self> {
        let (n_c, n_m) = (game.n_candidates, game.n_messages());
        if n_c > guard.max_candidates {
            return Err(Error::ComplexityGuard(format!("{n_c} candidates (max {})", guard.max_candidates)));
        }
        if n_m > guard.max_messages {
            return Err(Error::ComplexityGuard(format!("{n_m} messages (max {})", guard.max_messages)));
        }
        let n_listener = n_c
            .checked_pow(n_m as u32)
            .ok_or_else(|| Error::ComplexityGuard("listener strategy count overflows".into()))?;
        let n_speaker: usize = game.proposals.iter().map(Vec::len).product();
        if n_speaker.saturating_mul(n_listener) > guard.max_cells {
            return Err(Error::ComplexityGuard(format!(
                "{n_speaker} x {n_listener} cells (max {})",
                guard.max_cells
            )));
        }

        let mut speaker_strategies = Vec::with_capacity(n_speaker);
        let mut digits = vec![0usize; n_c];
        loop {
            speaker_strategies.push(SpeakerStrategy(
                digits.iter().enumerate().map(|(c, &d)| game.proposals[c][d]).collect(),
            ));
            let mut pos = 0;
            while pos < n_c {
                digits[pos] += 1;
                if digits[pos] < game.proposals[pos].len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == n_c {
                break;
            }
        }
        let speaker_payoffs = speaker_strategies.iter().map(|s| speaker_payoff(s, game)).collect();

        let powers: Vec<usize> = (0..n_m).map(|j| n_c.pow(j as u32)).collect();
        let mut table = Self {
            n_candidates: n_c,
            n_messages: n_m,
            speaker_strategies,
            speaker_payoffs,
            listener_payoffs: Vec::new(),
            powers,
        };
        table.listener_payoffs = (0..n_listener)
            .map(|code| listener_payoff(&table.listener_strategy(code), game))
            .collect();
        Ok(table)
    }

    pub fn n_speaker(&self) -> usize {
        self.speaker_strategies.len()
    }

    pub fn n_listener(&self) -> usize {
        self.listener_payoffs.len()
    }

    /// Candidate that listener strategy `code` assigns to message `m`.
    #[inline]
    pub fn listener_digit(&self, code: usize, m: usize) -> usize {
        (code / self.powers[m]) % self.n_candidates
    }

    pub fn listener_strategy(&self, code: usize) -> ListenerStrategy {
        ListenerStrategy((0..self.n_messages).map(|m| self.listener_digit(code, m)).collect())
    }

    #[inline]
    pub fn matches(&self, s: usize, l: usize) -> bool {
        self.speaker_strategies[s]
            .0
            .iter()
            .enumerate()
            .all(|(c, &m)| self.listener_digit(l, m) == c)
    }

    pub fn payoff(&self, s: usize, l: usize) -> (f64, f64) {
        if self.matches(s, l) {
            (self.speaker_payoffs[s], self.listener_payoffs[l])
        } else {
            (0.0, 0.0)
        }
    }

    /// Human-readable dump of every cell, for debugging small games.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (si, s) in self.speaker_strategies.iter().enumerate() {
            let _ = write!(out, "s{si} {:?}:", s.0);
            for l in 0..self.n_listener() {
                let (a, b) = self.payoff(si, l);
                let _ = write!(out, " ({a:.3},{b:.3})");
            }
            out.push('\n');
        }
        out
    }
}

/// A pure-strategy Nash equilibrium, as (speaker index, listener code).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equilibrium {
    pub speaker: usize,
    pub listener: usize,
}

/// Every weak pure-strategy Nash equilibrium, in row-major order.
pub fn enumerate_nash(table: &PayoffTable) -> Vec<Equilibrium> {
    let (n_s, n_l) = (table.n_speaker(), table.n_listener());
    let mut best_speaker = vec![0.0f64; n_l];
    let mut best_listener = vec![0.0f64; n_s];
    for s in 0..n_s {
        for l in 0..n_l {
            if table.matches(s, l) {
                best_speaker[l] = best_speaker[l].max(table.speaker_payoffs[s]);
                best_listener[s] = best_listener[s].max(table.listener_payoffs[l]);
            }
        }
    }
    let mut eq = Vec::new();
    for s in 0..n_s {
        for l in 0..n_l {
            let (ps, pl) = table.payoff(s, l);
            if ps >= best_speaker[l] && pl >= best_listener[s] {
                eq.push(Equilibrium { speaker: s, listener: l });
            }
        }
    }
    eq
}

/// The unique equilibrium whose payoffs weakly dominate every other one.
pub fn pareto_select(eq: &[Equilibrium], table: &PayoffTable) -> Option<Equilibrium> {
    let pays: Vec<(f64, f64)> = eq.iter().map(|e| table.payoff(e.speaker, e.listener)).collect();
    let max_s = pays.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let max_l = pays.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut top = eq.iter().zip(&pays).filter(|(_, p)| p.0 == max_s && p.1 == max_l);
    match (top.next(), top.next()) {
        (Some((e, _)), None) => Some(*e),
        _ => None,
    }
}

/// Candidates to which `m` is assigned by every equilibrium speaker
/// strategy that uses it; empty when no such strategy uses `m`.
pub fn consistent_targets(eq: &[Equilibrium], table: &PayoffTable, m: usize) -> Vec<usize> {
    let mut users = eq.iter().map(|e| &table.speaker_strategies[e.speaker]).filter(|s| s.uses(m)).peekable();
    if users.peek().is_none() {
        return Vec::new();
    }
    let mut targets: Vec<usize> = (0..table.n_candidates).collect();
    for s in users {
        targets.retain(|&c| s.0[c] == m);
    }
    targets
}

/// The candidate a message unambiguously refers to across the equilibria.
pub fn qualifying_candidate(eq: &[Equilibrium], table: &PayoffTable, m: usize) -> Option<usize> {
    match consistent_targets(eq, table, m).as_slice() {
        [c] => Some(*c),
        _ => None,
    }
}

/// A message that every equilibrium using it assigns to `target` and to no
/// other candidate; the highest-prior one wins.
pub fn sequential_refine(eq: &[Equilibrium], table: &PayoffTable, game: &StageGame, target: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut candidates = game.proposals[target].clone();
    candidates.sort_unstable();
    for m in candidates {
        if qualifying_candidate(eq, table, m) == Some(target)
            && best.is_none_or(|b| game.speaker.get(m, target) > game.speaker.get(b, target))
        {
            best = Some(m);
        }
    }
    best
}

/// How an agent resolved the equilibrium set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Unique,
    Pareto,
    Sequential,
    Random,
}

/// Speaker decision: a message index, or `None` to fall back to the prior.
pub fn speaker_decide(
    game: &StageGame,
    table: &PayoffTable,
    eq: &[Equilibrium],
    target: usize,
    sequential: bool,
) -> (Option<usize>, Selection) {
    if eq.is_empty() {
        return (None, Selection::Random);
    }
    if eq.len() == 1 {
        return (Some(table.speaker_strategies[eq[0].speaker].0[target]), Selection::Unique);
    }
    if let Some(e) = pareto_select(eq, table) {
        return (Some(table.speaker_strategies[e.speaker].0[target]), Selection::Pareto);
    }
    if sequential {
        if let Some(m) = sequential_refine(eq, table, game, target) {
            return (Some(m), Selection::Sequential);
        }
    }
    (None, Selection::Random)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListenerDecision {
    Choose(usize),
    Random,
}

/// Listener decision for message `m` of its own stage game; `None` means the
/// message is outside that game.
pub fn listener_decide(
    table: &PayoffTable,
    eq: &[Equilibrium],
    m: Option<usize>,
    sequential: bool,
) -> (ListenerDecision, Selection) {
    let Some(m) = m else {
        return (ListenerDecision::Random, Selection::Random);
    };
    if eq.is_empty() {
        return (ListenerDecision::Random, Selection::Random);
    }
    if eq.len() == 1 {
        return (ListenerDecision::Choose(table.listener_digit(eq[0].listener, m)), Selection::Unique);
    }
    if let Some(e) = pareto_select(eq, table) {
        return (ListenerDecision::Choose(table.listener_digit(e.listener, m)), Selection::Pareto);
    }
    if sequential {
        if let Some(c) = qualifying_candidate(eq, table, m) {
            return (ListenerDecision::Choose(c), Selection::Sequential);
        }
    }
    (ListenerDecision::Random, Selection::Random)
}

/// Both agents reason over the same stage game. Random fallbacks sample the
/// speaker prior (over the target's proposals) and the listener prior.
pub fn gametable_play<R: Rng + ?Sized>(
    game: &StageGame,
    target: usize,
    sequential: bool,
    guard: &ComplexityGuard,
    speaker_rng: &mut R,
    listener_rng: &mut R,
) -> Result<(Outcome, Selection)> {
    let table = PayoffTable::build(game, guard)?;
    let eq = enumerate_nash(&table);
    let (m, selection) = speaker_decide(game, &table, &eq, target, sequential);
    let m = m.unwrap_or_else(|| sample_index(&game.speaker.col(target), speaker_rng));
    let choice = match listener_decide(&table, &eq, Some(m), sequential).0 {
        ListenerDecision::Choose(c) => c,
        ListenerDecision::Random => sample_index(game.listener.row(m), listener_rng),
    };
    Ok((
        Outcome {
            message: game.messages[m].clone(),
            choice,
            success: choice == target,
            sp: game.speaker_raw.get(m, target),
            lp: game.listener.get(m, choice),
            diagnostics: Default::default(),
        },
        selection,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn game(s0: &[Vec<f64>], l0: &[Vec<f64>]) -> StageGame {
        StageGame::from_priors(s0, l0).unwrap()
    }

    fn separating() -> StageGame {
        game(&[vec![0.8, 0.2], vec![0.3, 0.7]], &[vec![0.6, 0.4], vec![0.3, 0.7]])
    }

    #[test]
    fn matching_examples() {
        assert!(match_strategies(&SpeakerStrategy(vec![0, 1]), &ListenerStrategy(vec![0, 1])));
        assert!(!match_strategies(&SpeakerStrategy(vec![0, 0]), &ListenerStrategy(vec![0, 1])));
        assert!(match_strategies(&SpeakerStrategy(vec![0]), &ListenerStrategy(vec![0, 0])));
    }

    #[test]
    fn payoff_examples() {
        let g = separating();
        let (ps, pl) = psych_payoffs(&SpeakerStrategy(vec![0, 1]), &ListenerStrategy(vec![0, 1]), &g);
        assert!((ps - 0.56).abs() < 1e-12);
        assert!((pl - 0.42).abs() < 1e-12);
        let t = PayoffTable::build(&g, &ComplexityGuard::default()).unwrap();
        assert_eq!(t.payoff(0, 0), (0.0, 0.0));
    }

    #[test]
    fn two_by_two_table_selects_dominant_separating_pair() {
        let g = separating();
        let t = PayoffTable::build(&g, &ComplexityGuard::default()).unwrap();
        assert_eq!((t.n_speaker(), t.n_listener()), (4, 4));
        let eq = enumerate_nash(&t);
        let positive: Vec<_> = eq.iter().filter(|e| t.payoff(e.speaker, e.listener).0 > 0.0).collect();
        assert_eq!(positive.len(), 2);
        let e = pareto_select(&eq, &t).unwrap();
        assert_eq!(t.speaker_strategies[e.speaker].0, vec![0, 1]);
        assert_eq!(t.listener_strategy(e.listener).0, vec![0, 1]);
        let mut a = seed::stream(0);
        let mut b = seed::stream(1);
        for target in 0..2 {
            let (out, sel) = gametable_play(&g, target, false, &ComplexityGuard::default(), &mut a, &mut b).unwrap();
            assert!(out.success);
            assert_eq!(sel, Selection::Pareto);
        }
    }

    #[test]
    fn pareto_requires_joint_dominance() {
        let g = separating();
        let t = PayoffTable::build(&g, &ComplexityGuard::default()).unwrap();
        let s01 = t.speaker_strategies.iter().position(|s| s.0 == vec![0, 1]).unwrap();
        let s10 = t.speaker_strategies.iter().position(|s| s.0 == vec![1, 0]).unwrap();
        // (0.56, 0.42) and (0.06, 0.12) plus a conflicting pair
        let e1 = Equilibrium { speaker: s01, listener: 0b10 };
        let e2 = Equilibrium { speaker: s10, listener: 0b01 };
        assert_eq!(pareto_select(&[e1, e2], &t), Some(e1));
        assert_eq!(pareto_select(&[e1], &t), Some(e1));
        assert_eq!(pareto_select(&[], &t), None);
    }

    #[test]
    fn sequential_refinement_examples() {
        // three messages; m0 always means c0, m2 is used for both candidates
        let g = game(&[vec![0.5, 0.0, 0.5], vec![0.0, 0.5, 0.5]], &vec![vec![0.5, 0.5]; 3]);
        let t = PayoffTable::build(&g, &ComplexityGuard::default()).unwrap();
        let s_a = t.speaker_strategies.iter().position(|s| s.0 == vec![0, 2]).unwrap();
        let s_b = t.speaker_strategies.iter().position(|s| s.0 == vec![2, 1]).unwrap();
        let eq = [Equilibrium { speaker: s_a, listener: 0 }, Equilibrium { speaker: s_b, listener: 0 }];
        assert_eq!(sequential_refine(&eq, &t, &g, 0), Some(0));
        assert_eq!(sequential_refine(&eq, &t, &g, 1), Some(1));
        assert_eq!(qualifying_candidate(&eq, &t, 2), None);
        let (d, sel) = listener_decide(&t, &eq, Some(2), true);
        assert_eq!((d, sel), (ListenerDecision::Random, Selection::Random));
        assert_eq!(listener_decide(&t, &eq, Some(0), true).0, ListenerDecision::Choose(0));
        assert_eq!(listener_decide(&t, &eq, Some(0), false).0, ListenerDecision::Random);
    }

    #[test]
    fn empty_equilibrium_set_is_random() {
        let g = separating();
        let t = PayoffTable::build(&g, &ComplexityGuard::default()).unwrap();
        assert_eq!(speaker_decide(&g, &t, &[], 0, true), (None, Selection::Random));
        assert_eq!(listener_decide(&t, &[], Some(0), true).0, ListenerDecision::Random);
    }

    #[test]
    fn guard_rejects_large_games() {
        let s0: Vec<Vec<f64>> = vec![vec![1.0; 13], vec![1.0; 13]];
        let g = game(&s0, &vec![vec![0.5, 0.5]; 13]);
        assert!(matches!(
            PayoffTable::build(&g, &ComplexityGuard::default()),
            Err(Error::ComplexityGuard(_))
        ));
        let small = ComplexityGuard { max_cells: 10, ..ComplexityGuard::default() };
        assert!(PayoffTable::build(&separating(), &small).is_err());
    }

    #[test]
    fn render_lists_every_cell() {
        let t = PayoffTable::build(&separating(), &ComplexityGuard::default()).unwrap();
        let text = t.render();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("(0.560,0.420)"));
    }
}
