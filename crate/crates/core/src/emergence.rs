//! Long-term training of the speaker/listener priors with REINFORCE, and
//! distillation of virtual opponent models.
//!
//! Both agents receive reward 1 when the listener picks the target and 0
//! otherwise, and ascend `(R - b) * grad log P(action) + c * grad H` where
//! `b` is a running mean of recent rewards and `c` is an entropy bonus that
//! decays linearly to zero early in training.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{entropy, ListenerPolicy, MessageSpace, SpeakerPolicy};
use crate::seed;
use crate::world::{sample_instance, Dataset, FeatureView, GameInstance, Split, WorldConfig, FEATURE_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_steps: u64,
    pub speaker_lr: f64,
    pub listener_lr: f64,
    /// Entropy bonus at step 0.
    pub entropy_start: f64,
    /// Fraction of `n_steps` over which the bonus decays linearly to 0.
    pub entropy_decay_fraction: f64,
    /// Number of recent rewards averaged into the baseline.
    pub baseline_window: usize,
    pub n_candidates: usize,
    /// Standard deviation of the initial parameters.
    pub init_scale: f64,
    pub checkpoint_every: u64,
    pub space: MessageSpace,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_steps: 1_000_000,
            speaker_lr: 0.1,
            listener_lr: 0.1,
            entropy_start: 0.05,
            entropy_decay_fraction: 0.2,
            baseline_window: 1000,
            n_candidates: 2,
            init_scale: 0.01,
            checkpoint_every: 10_000,
            space: MessageSpace::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.speaker_lr >= 0.0 && self.listener_lr >= 0.0) {
            return bad("learning rates must be nonnegative");
        }
        if !(self.entropy_start >= 0.0) || !(0.0..=1.0).contains(&self.entropy_decay_fraction) {
            return bad("entropy schedule out of range");
        }
        if self.baseline_window == 0 || self.n_candidates == 0 || self.checkpoint_every == 0 {
            return bad("baseline_window, n_candidates and checkpoint_every must be positive");
        }
        self.space.validate()
    }

    pub fn entropy_coefficient(&self, step: u64) -> f64 {
        let horizon = self.entropy_decay_fraction * self.n_steps as f64;
        if horizon <= 0.0 {
            return 0.0;
        }
        self.entropy_start * (1.0 - step as f64 / horizon).max(0.0)
    }
}

/// Running mean of the last `window` rewards.
#[derive(Debug, Clone)]
pub struct RewardBaseline {
    window: usize,
    history: VecDeque<f64>,
    sum: f64,
}

impl RewardBaseline {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            history: VecDeque::with_capacity(window),
            sum: 0.0,
        }
    }

    /// 0 until the first reward arrives.
    pub fn value(&self) -> f64 {
        if self.history.is_empty() {
            0.0
        } else {
            self.sum / self.history.len() as f64
        }
    }

    pub fn push(&mut self, reward: f64) {
        if self.history.len() == self.window {
            if let Some(old) = self.history.pop_front() {
                self.sum -= old;
            }
        }
        self.history.push_back(reward);
        self.sum += reward;
    }
}

/// Objective `A * ln P(m|u) + c * H(P(.|u))` for the speaker.
pub fn speaker_objective(
    speaker: &SpeakerPolicy,
    features: &FeatureView,
    message: &crate::policy::Message,
    advantage: f64,
    entropy_coef: f64,
) -> f64 {
    advantage * speaker.prob(features, message).ln() + entropy_coef * speaker.entropy(features)
}

/// Gradient of [`speaker_objective`] with respect to the speaker weights.
pub fn speaker_gradient(
    speaker: &SpeakerPolicy,
    features: &FeatureView,
    message: &crate::policy::Message,
    advantage: f64,
    entropy_coef: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; speaker.n_params()];
    let probs = speaker.position_probs(features);
    for (j, p) in probs.iter().enumerate() {
        let h = entropy(p);
        let chosen = usize::from(message.0[j]);
        for (k, &pk) in p.iter().enumerate() {
            let indicator = if k == chosen { 1.0 } else { 0.0 };
            let d_ent = if pk > 0.0 { -pk * (pk.ln() + h) } else { 0.0 };
            let d_logit = (advantage * (indicator - pk) + entropy_coef * d_ent) / speaker.temperature;
            if d_logit == 0.0 {
                continue;
            }
            let row = speaker.index(j, k, 0);
            for (g, u) in grad[row..row + speaker.dim].iter_mut().zip(&features.values) {
                *g += d_logit * u;
            }
        }
    }
    grad
}

/// Objective `A * ln P(t|m,C) + c * H(P(.|m,C))` for the listener.
pub fn listener_objective(
    listener: &ListenerPolicy,
    message: &crate::policy::Message,
    views: &[FeatureView],
    choice: usize,
    advantage: f64,
    entropy_coef: f64,
) -> f64 {
    let p = listener.probs(message, views);
    advantage * p[choice].ln() + entropy_coef * entropy(&p)
}

/// Gradient of [`listener_objective`] with respect to the symbol embeddings.
pub fn listener_gradient(
    listener: &ListenerPolicy,
    message: &crate::policy::Message,
    views: &[FeatureView],
    choice: usize,
    advantage: f64,
    entropy_coef: f64,
) -> Vec<f64> {
    let p = listener.probs(message, views);
    let h = entropy(&p);
    let mut d_decoded = vec![0.0; listener.dim];
    for (i, (&pi, v)) in p.iter().zip(views).enumerate() {
        let indicator = if i == choice { 1.0 } else { 0.0 };
        let d_ent = if pi > 0.0 { -pi * (pi.ln() + h) } else { 0.0 };
        let d_score = (advantage * (indicator - pi) + entropy_coef * d_ent) / listener.temperature;
        for (d, x) in d_decoded.iter_mut().zip(&v.values) {
            *d += d_score * x;
        }
    }
    let mut grad = vec![0.0; listener.n_params()];
    for (j, &s) in message.0.iter().enumerate() {
        let row = listener.index(j, usize::from(s), 0);
        for (g, d) in grad[row..row + listener.dim].iter_mut().zip(&d_decoded) {
            *g += d;
        }
    }
    grad
}

fn ascend(params: &mut [f64], grad: &[f64], lr: f64) {
    if lr == 0.0 {
        return;
    }
    for (p, g) in params.iter_mut().zip(grad) {
        *p += lr * g;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub speaker_lr: f64,
    pub listener_lr: f64,
    pub entropy_coef: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub message: crate::policy::Message,
    pub choice: usize,
    pub reward: f64,
    pub speaker_entropy: f64,
    pub listener_entropy: f64,
}

/// Plays one instance with sampled actions and applies one REINFORCE ascent
/// step to both policies.
pub fn reinforce_step<R: Rng + ?Sized>(
    speaker: &mut SpeakerPolicy,
    listener: &mut ListenerPolicy,
    instance: &GameInstance,
    rng: &mut R,
    params: StepParams,
) -> StepOutcome {
    let u = instance.target_view();
    let message = speaker.sample(u, rng);
    let choice = listener.sample(&message, &instance.listener_views, rng);
    let reward = if choice == instance.target_index { 1.0 } else { 0.0 };
    let advantage = reward - params.baseline;

    let speaker_entropy = speaker.entropy(u);
    let listener_entropy = entropy(&listener.probs(&message, &instance.listener_views));

    let gs = speaker_gradient(speaker, u, &message, advantage, params.entropy_coef);
    let gl = listener_gradient(
        listener,
        &message,
        &instance.listener_views,
        choice,
        advantage,
        params.entropy_coef,
    );
    ascend(&mut speaker.weights, &gs, params.speaker_lr);
    ascend(&mut listener.embeddings, &gl, params.listener_lr);

    StepOutcome {
        message,
        choice,
        reward,
        speaker_entropy,
        listener_entropy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: u64,
    pub reward_ma: f64,
    pub speaker_entropy: f64,
    pub listener_entropy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn last_reward(&self) -> Option<f64> {
        self.rows.last().map(|r| r.reward_ma)
    }

    /// CSV with header `step,reward_ma,speaker_entropy,listener_entropy`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,reward_ma,speaker_entropy,listener_entropy")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6}",
                r.step, r.reward_ma, r.speaker_entropy, r.listener_entropy
            )?;
        }
        Ok(())
    }
}

fn finite(params: &[f64]) -> bool {
    params.iter().all(|p| p.is_finite())
}

/// Trains a fresh speaker/listener pair on the training split.
pub fn train(
    world: &WorldConfig,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(SpeakerPolicy, ListenerPolicy, TrainLog)> {
    config.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::InvalidArgument("empty training split".into()));
    }
    let mut speaker = SpeakerPolicy::new(
        FEATURE_DIM,
        config.space,
        config.init_scale,
        &mut seed::substream(config.seed, &[1]),
    );
    let mut listener = ListenerPolicy::new(
        FEATURE_DIM,
        config.space,
        config.init_scale,
        &mut seed::substream(config.seed, &[2]),
    );
    let mut rng = seed::substream(config.seed, &[3]);
    let mut baseline = RewardBaseline::new(config.baseline_window);
    let mut log = TrainLog::default();
    let (mut se_acc, mut le_acc, mut n_acc) = (0.0, 0.0, 0u64);

    for step in 0..config.n_steps {
        let instance = sample_instance(world, dataset, Split::Train, config.n_candidates, &mut rng)?;
        let out = reinforce_step(
            &mut speaker,
            &mut listener,
            &instance,
            &mut rng,
            StepParams {
                speaker_lr: config.speaker_lr,
                listener_lr: config.listener_lr,
                entropy_coef: config.entropy_coefficient(step),
                baseline: baseline.value(),
            },
        );
        baseline.push(out.reward);
        se_acc += out.speaker_entropy;
        le_acc += out.listener_entropy;
        n_acc += 1;

        let done = step + 1;
        if done % config.checkpoint_every == 0 || done == config.n_steps {
            if !finite(&speaker.weights) {
                return Err(Error::Divergence { step: done, what: "speaker" });
            }
            if !finite(&listener.embeddings) {
                return Err(Error::Divergence { step: done, what: "listener" });
            }
            log.rows.push(LogRow {
                step: done,
                reward_ma: baseline.value(),
                speaker_entropy: se_acc / n_acc as f64,
                listener_entropy: le_acc / n_acc as f64,
            });
            (se_acc, le_acc, n_acc) = (0.0, 0.0, 0);
        }
    }
    Ok((speaker, listener, log))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub n_rounds: u64,
    pub speaker_lr: f64,
    pub listener_lr: f64,
    pub init_scale: f64,
    pub n_candidates: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100_000,
            speaker_lr: 0.05,
            listener_lr: 0.05,
            init_scale: 0.01,
            n_candidates: 2,
            seed: 0,
        }
    }
}

/// Fits fresh policies to the outputs of a trained pair by cross-entropy.
///
/// Per round, the virtual speaker matches the target speaker's full
/// per-position distributions on the target view, and the virtual listener
/// matches the target listener's candidate distribution for a message
/// sampled from the target speaker. The targets are only read.
pub fn distill_virtual(
    target_speaker: &SpeakerPolicy,
    target_listener: &ListenerPolicy,
    world: &WorldConfig,
    dataset: &Dataset,
    config: &DistillConfig,
) -> Result<(SpeakerPolicy, ListenerPolicy)> {
    let mut speaker = SpeakerPolicy::new(
        target_speaker.dim,
        target_speaker.space,
        config.init_scale,
        &mut seed::substream(config.seed, &[11]),
    );
    speaker.temperature = target_speaker.temperature;
    let mut listener = ListenerPolicy::new(
        target_listener.dim,
        target_listener.space,
        config.init_scale,
        &mut seed::substream(config.seed, &[12]),
    );
    listener.temperature = target_listener.temperature;
    let mut rng = seed::substream(config.seed, &[13]);

    for _ in 0..config.n_rounds {
        let inst = sample_instance(world, dataset, Split::Train, config.n_candidates, &mut rng)?;
        let u = inst.target_view();

        let want = target_speaker.position_probs(u);
        let have = speaker.position_probs(u);
        for (j, (p, q)) in want.iter().zip(&have).enumerate() {
            for (k, (pk, qk)) in p.iter().zip(q).enumerate() {
                let d = config.speaker_lr * (pk - qk) / speaker.temperature;
                let row = speaker.index(j, k, 0);
                for (w, x) in speaker.weights[row..row + speaker.dim].iter_mut().zip(&u.values) {
                    *w += d * x;
                }
            }
        }

        let m = target_speaker.sample(u, &mut rng);
        let want = target_listener.probs(&m, &inst.listener_views);
        let have = listener.probs(&m, &inst.listener_views);
        let mut d_decoded = vec![0.0; listener.dim];
        for ((p, q), v) in want.iter().zip(&have).zip(&inst.listener_views) {
            let d = (p - q) / listener.temperature;
            for (acc, x) in d_decoded.iter_mut().zip(&v.values) {
                *acc += d * x;
            }
        }
        for (j, &s) in m.0.iter().enumerate() {
            let row = listener.index(j, usize::from(s), 0);
            for (e, d) in listener.embeddings[row..row + listener.dim].iter_mut().zip(&d_decoded) {
                *e += config.listener_lr * d;
            }
        }
    }
    Ok((speaker, listener))
}

/// Cosine similarity of two nonnegative vectors; 0 when either is all zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Mean cosine similarity of paired output distributions.
pub fn fidelity(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("fidelity needs at least one probe".into()));
    }
    Ok(pairs.iter().map(|(a, b)| cosine(a, b)).sum::<f64>() / pairs.len() as f64)
}

/// Speaker fidelity over probe targets: both models' probabilities on the
/// union of their proposal sets for the target view.
pub fn speaker_fidelity(
    real: &SpeakerPolicy,
    virtual_: &SpeakerPolicy,
    probes: &[GameInstance],
    mass_threshold: f64,
    max_size: usize,
) -> Result<f64> {
    let mut pairs = Vec::with_capacity(probes.len());
    for inst in probes {
        let u = inst.target_view();
        let mut support: Vec<_> = real
            .proposal_set(u, mass_threshold, max_size)?
            .entries
            .into_iter()
            .map(|(m, _)| m)
            .collect();
        for (m, _) in virtual_.proposal_set(u, mass_threshold, max_size)?.entries {
            if !support.contains(&m) {
                support.push(m);
            }
        }
        let a = support.iter().map(|m| real.prob(u, m)).collect();
        let b = support.iter().map(|m| virtual_.prob(u, m)).collect();
        pairs.push((a, b));
    }
    fidelity(&pairs)
}

/// Listener fidelity over probes: candidate distributions for the real
/// speaker's most likely message about the target.
pub fn listener_fidelity(
    real: &ListenerPolicy,
    virtual_: &ListenerPolicy,
    speaker: &SpeakerPolicy,
    probes: &[GameInstance],
) -> Result<f64> {
    let pairs: Vec<_> = probes
        .iter()
        .map(|inst| {
            let m = speaker.argmax_message(inst.target_view());
            (
                real.probs(&m, &inst.listener_views),
                virtual_.probs(&m, &inst.listener_views),
            )
        })
        .collect();
    fidelity(&pairs)
}
