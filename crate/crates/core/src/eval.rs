//! Evaluation harness: accuracy and prior-consistency per method, the
//! similar-color challenge subset, runs against virtual opponent models, and
//! lexicon inspection.
//!
//! Every test object is the target once per epoch. The distractors, views
//! and random fallbacks of an instance come from sub-streams keyed by
//! `(seed, subset, epoch, object)`, so all methods face the same instances.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emergence::{listener_fidelity, speaker_fidelity};
use crate::error::{Error, Result};
use crate::gametheory::{
    enumerate_nash, listener_decide, speaker_decide, ComplexityGuard, Equilibrium, ListenerDecision, PayoffTable,
};
use crate::policy::{sample_index, ListenerPolicy, Message, SpeakerPolicy};
use crate::pragmatics::{
    argmax_l_message, baseline_message, ibr_strategies, rsa_strategies, sample_l_message, Depth, StageGame,
    StrategyPair,
};
use crate::seed;
use crate::world::{instance_for_target, GameInstance, ObjectSpec, WorldConfig, COLOR_NAMES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Baseline,
    SampleL(f64),
    ArgmaxL,
    Rsa(Depth),
    Ibr(Depth),
    GameTable,
    GameTableSeq,
}

impl Method {
    /// Methods in which both agents reason about each other.
    pub fn is_two_sided(&self) -> bool {
        matches!(self, Method::Rsa(_) | Method::Ibr(_) | Method::GameTable | Method::GameTableSeq)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Baseline => f.write_str("baseline"),
            Method::SampleL(l) => write!(f, "samplel_{l}"),
            Method::ArgmaxL => f.write_str("argmaxl"),
            Method::Rsa(d) => write!(f, "rsa_{d}"),
            Method::Ibr(d) => write!(f, "ibr_{d}"),
            Method::GameTable => f.write_str("gametable"),
            Method::GameTableSeq => f.write_str("gametable_seq"),
        }
    }
}

fn parse_depth(s: &str) -> Option<Depth> {
    if s == "cnvg" {
        return Some(Depth::Converge);
    }
    s.strip_suffix("rnd")?.parse().ok().map(Depth::Rounds)
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMethod(s.to_string());
        match s {
            "baseline" => return Ok(Method::Baseline),
            "argmaxl" => return Ok(Method::ArgmaxL),
            "gametable" => return Ok(Method::GameTable),
            "gametable_seq" => return Ok(Method::GameTableSeq),
            _ => {}
        }
        if let Some(l) = s.strip_prefix("samplel_") {
            let l: f64 = l.parse().map_err(|_| unknown())?;
            if !(0.0..=1.0).contains(&l) {
                return Err(unknown());
            }
            return Ok(Method::SampleL(l));
        }
        if let Some(d) = s.strip_prefix("rsa_") {
            return parse_depth(d).map(Method::Rsa).ok_or_else(unknown);
        }
        if let Some(d) = s.strip_prefix("ibr_") {
            return parse_depth(d).map(Method::Ibr).ok_or_else(unknown);
        }
        Err(unknown())
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subset {
    All,
    Challenge,
}

impl Subset {
    pub const BOTH: [Subset; 2] = [Subset::All, Subset::Challenge];
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subset::All => "all",
            Subset::Challenge => "challenge",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub methods: Vec<Method>,
    pub n_candidates: usize,
    pub n_epochs: usize,
    /// Cumulative speaker mass covered by each proposal set.
    pub mass_threshold: f64,
    pub max_proposals: usize,
    pub max_messages: usize,
    pub max_cells: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let guard = ComplexityGuard::default();
        Self {
            methods: ["baseline", "argmaxl", "rsa_2rnd", "rsa_cnvg", "ibr_2rnd", "ibr_cnvg", "gametable", "gametable_seq"]
                .iter()
                .map(|m| m.parse().expect("known method"))
                .collect(),
            n_candidates: 2,
            n_epochs: 5,
            mass_threshold: 0.9,
            max_proposals: 6,
            max_messages: guard.max_messages,
            max_cells: guard.max_cells,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn guard(&self) -> ComplexityGuard {
        ComplexityGuard {
            max_messages: self.max_messages,
            max_candidates: ComplexityGuard::default().max_candidates,
            max_cells: self.max_cells,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no evaluation methods".into()));
        }
        if self.n_candidates == 0 || self.n_epochs == 0 || self.max_proposals == 0 {
            return Err(Error::InvalidArgument(
                "n_candidates, n_epochs and max_proposals must be positive".into(),
            ));
        }
        if !(self.mass_threshold > 0.0 && self.mass_threshold <= 1.0) {
            return Err(Error::InvalidArgument("mass_threshold must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// The agents that act, and the opponent models each one reasons with.
#[derive(Debug, Clone, Copy)]
pub struct Agents<'a> {
    pub speaker: &'a SpeakerPolicy,
    pub listener: &'a ListenerPolicy,
    /// The speaker's model of the listener.
    pub listener_model: &'a ListenerPolicy,
    /// The listener's model of the speaker.
    pub speaker_model: &'a SpeakerPolicy,
}

impl<'a> Agents<'a> {
    /// Each agent models its partner perfectly.
    pub fn exact(speaker: &'a SpeakerPolicy, listener: &'a ListenerPolicy) -> Self {
        Self {
            speaker,
            listener,
            listener_model: listener,
            speaker_model: speaker,
        }
    }

    fn models_are_exact(&self) -> bool {
        self.listener_model == self.listener && self.speaker_model == self.speaker
    }
}

/// One evaluated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRow {
    pub subset: Subset,
    pub epoch: usize,
    /// Index of the target object in the test set.
    pub object: usize,
    pub method: Method,
    /// Position of the target among the candidates.
    pub target: usize,
    pub message: Message,
    pub choice: usize,
    pub success: bool,
    pub sp: f64,
    pub lp: f64,
}

impl InstanceRow {
    pub fn instance_id(&self) -> String {
        format!("{}-{}-{}", self.subset, self.epoch, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub acc: f64,
    /// Mean prior speaker probability over successful instances.
    pub sp: f64,
    /// Mean prior listener probability over successful instances.
    pub lp: f64,
    pub n_instances: usize,
    pub n_success: usize,
}

impl EpochMetrics {
    pub fn from_rows(epoch: usize, rows: &[InstanceRow]) -> Self {
        let wins: Vec<&InstanceRow> = rows.iter().filter(|r| r.success).collect();
        let mean = |f: fn(&InstanceRow) -> f64| {
            if wins.is_empty() {
                0.0
            } else {
                wins.iter().map(|r| f(r)).sum::<f64>() / wins.len() as f64
            }
        };
        Self {
            epoch,
            acc: if rows.is_empty() { 0.0 } else { wins.len() as f64 / rows.len() as f64 },
            sp: mean(|r| r.sp),
            lp: mean(|r| r.lp),
            n_instances: rows.len(),
            n_success: wins.len(),
        }
    }
}

/// Aggregate over epochs: means and sample standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub acc: f64,
    pub acc_sd: f64,
    pub sp: f64,
    pub sp_sd: f64,
    pub lp: f64,
    pub lp_sd: f64,
    pub n_instances: usize,
    pub n_epochs: usize,
    pub epochs: Vec<EpochMetrics>,
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

impl Metrics {
    pub fn from_epochs(epochs: Vec<EpochMetrics>) -> Self {
        let (acc, acc_sd) = mean_sd(epochs.iter().map(|e| e.acc));
        let (sp, sp_sd) = mean_sd(epochs.iter().map(|e| e.sp));
        let (lp, lp_sd) = mean_sd(epochs.iter().map(|e| e.lp));
        Self {
            acc,
            acc_sd,
            sp,
            sp_sd,
            lp,
            lp_sd,
            n_instances: epochs.iter().map(|e| e.n_instances).sum(),
            n_epochs: epochs.len(),
            epochs,
        }
    }
}

/// Per-game precomputation shared by both sides when they see the same game.
enum Analysis {
    Plain,
    Pair(StrategyPair),
    Table(PayoffTable, Vec<Equilibrium>),
}

fn analyze(method: Method, game: &StageGame, guard: &ComplexityGuard) -> Result<Analysis> {
    Ok(match method {
        Method::Rsa(d) => Analysis::Pair(rsa_strategies(game, d)),
        Method::Ibr(d) => Analysis::Pair(ibr_strategies(game, d)),
        Method::GameTable | Method::GameTableSeq => {
            let table = PayoffTable::build(game, guard)?;
            let eq = enumerate_nash(&table);
            Analysis::Table(table, eq)
        }
        _ => Analysis::Plain,
    })
}

fn speak(method: Method, game: &StageGame, analysis: &Analysis, target: usize, rng: &mut seed::Stream) -> usize {
    match (method, analysis) {
        (Method::SampleL(l), _) => sample_l_message(game, target, l),
        (Method::ArgmaxL, _) => argmax_l_message(game, target),
        (_, Analysis::Pair(pair)) => pair.speaker_message(target),
        (_, Analysis::Table(table, eq)) => {
            let seq = method == Method::GameTableSeq;
            speaker_decide(game, table, eq, target, seq)
                .0
                .unwrap_or_else(|| sample_index(&game.speaker.col(target), rng))
        }
        _ => baseline_message(game, target),
    }
}

fn listen(
    method: Method,
    game: &StageGame,
    analysis: &Analysis,
    message: &Message,
    listener: &ListenerPolicy,
    views: &[crate::world::FeatureView],
    rng: &mut seed::Stream,
) -> usize {
    let local = game.message_index(message);
    match (method, analysis) {
        (Method::SampleL(_), _) => listener.sample(message, views, rng),
        (_, Analysis::Pair(pair)) => match local {
            Some(m) => pair.listener_choice(m),
            None => listener.choose(message, views),
        },
        (_, Analysis::Table(table, eq)) => {
            let seq = method == Method::GameTableSeq;
            match listener_decide(table, eq, local, seq).0 {
                ListenerDecision::Choose(c) => c,
                ListenerDecision::Random => listener.sample(message, views, rng),
            }
        }
        _ => listener.choose(message, views),
    }
}

fn instance_stream(cfg: &EvalConfig, subset: Subset, epoch: usize, object: usize, role: u64) -> seed::Stream {
    seed::substream(cfg.seed, &[subset as u64, epoch as u64, object as u64, role])
}

/// The instance in which test object `object` is the target.
pub fn make_instance(
    world: &WorldConfig,
    testset: &[ObjectSpec],
    object: usize,
    subset: Subset,
    epoch: usize,
    cfg: &EvalConfig,
) -> Option<GameInstance> {
    let mut rng = instance_stream(cfg, subset, epoch, object, 0);
    instance_for_target(world, testset, object, cfg.n_candidates, subset == Subset::Challenge, &mut rng)
}

/// Plays one instance. The speaker reasons over the stage game built from
/// its own prior and its listener model; the listener over the one built
/// from its speaker model and its own prior.
pub fn play_instance(
    agents: &Agents,
    instance: &GameInstance,
    method: Method,
    cfg: &EvalConfig,
    speaker_rng: &mut seed::Stream,
    listener_rng: &mut seed::Stream,
) -> Result<(Message, usize)> {
    let guard = cfg.guard();
    let target = instance.target_index;
    let sg = StageGame::build(instance, agents.speaker, agents.listener_model, cfg.mass_threshold, cfg.max_proposals)?;
    let s_analysis = analyze(method, &sg, &guard)?;
    let m = speak(method, &sg, &s_analysis, target, speaker_rng);
    let message = sg.messages[m].clone();

    let choice = if agents.models_are_exact() {
        listen(method, &sg, &s_analysis, &message, agents.listener, &instance.listener_views, listener_rng)
    } else {
        let lg = StageGame::build(instance, agents.speaker_model, agents.listener, cfg.mass_threshold, cfg.max_proposals)?;
        let l_analysis = analyze(method, &lg, &guard)?;
        listen(method, &lg, &l_analysis, &message, agents.listener, &instance.listener_views, listener_rng)
    };
    Ok((message, choice))
}

/// One pass over the test set with fresh distractors.
pub fn run_epoch(
    world: &WorldConfig,
    agents: &Agents,
    testset: &[ObjectSpec],
    method: Method,
    subset: Subset,
    epoch: usize,
    cfg: &EvalConfig,
) -> Result<(EpochMetrics, Vec<InstanceRow>)> {
    let mut rows = Vec::with_capacity(testset.len());
    for object in 0..testset.len() {
        let Some(instance) = make_instance(world, testset, object, subset, epoch, cfg) else {
            continue;
        };
        let mut srng = instance_stream(cfg, subset, epoch, object, 1);
        let mut lrng = instance_stream(cfg, subset, epoch, object, 2);
        let (message, choice) = play_instance(agents, &instance, method, cfg, &mut srng, &mut lrng)?;
        let target = instance.target_index;
        rows.push(InstanceRow {
            subset,
            epoch,
            object,
            method,
            target,
            sp: agents.speaker.prob(instance.target_view(), &message),
            lp: agents.listener.probs(&message, &instance.listener_views)[choice],
            success: choice == target,
            message,
            choice,
        });
    }
    Ok((EpochMetrics::from_rows(epoch, &rows), rows))
}

/// All epochs of one method on one subset.
pub fn run_method(
    world: &WorldConfig,
    agents: &Agents,
    testset: &[ObjectSpec],
    method: Method,
    subset: Subset,
    cfg: &EvalConfig,
) -> Result<(Metrics, Vec<InstanceRow>)> {
    cfg.validate()?;
    let mut epochs = Vec::with_capacity(cfg.n_epochs);
    let mut rows = Vec::new();
    for epoch in 0..cfg.n_epochs {
        let (m, r) = run_epoch(world, agents, testset, method, subset, epoch, cfg)?;
        epochs.push(m);
        rows.extend(r);
    }
    Ok((Metrics::from_epochs(epochs), rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub subset: Subset,
    pub metrics: Metrics,
}

pub fn evaluate(
    world: &WorldConfig,
    agents: &Agents,
    testset: &[ObjectSpec],
    methods: &[Method],
    subsets: &[Subset],
    cfg: &EvalConfig,
) -> Result<(Vec<MethodResult>, Vec<InstanceRow>)> {
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for &subset in subsets {
        for &method in methods {
            let (metrics, r) = run_method(world, agents, testset, method, subset, cfg)?;
            results.push(MethodResult { method, subset, metrics });
            rows.extend(r);
        }
    }
    Ok((results, rows))
}

/// Robustness run against imperfect opponent models.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualReport {
    pub speaker_fidelity: f64,
    pub listener_fidelity: f64,
    pub results: Vec<MethodResult>,
}

/// Each agent reasons with its own model of the other (the speaker with
/// `virtual_listener`, the listener with `virtual_speaker`); real actions are
/// exchanged. Fidelities are measured on the epoch-0 instances of the test set.
#[allow(clippy::too_many_arguments)]
pub fn run_virtual(
    world: &WorldConfig,
    speaker: &SpeakerPolicy,
    listener: &ListenerPolicy,
    virtual_speaker: &SpeakerPolicy,
    virtual_listener: &ListenerPolicy,
    testset: &[ObjectSpec],
    methods: &[Method],
    subsets: &[Subset],
    cfg: &EvalConfig,
) -> Result<VirtualReport> {
    let probes: Vec<GameInstance> = (0..testset.len())
        .filter_map(|i| make_instance(world, testset, i, Subset::All, 0, cfg))
        .collect();
    let sf = speaker_fidelity(speaker, virtual_speaker, &probes, cfg.mass_threshold, cfg.max_proposals)?;
    let lf = listener_fidelity(listener, virtual_listener, speaker, &probes)?;
    let agents = Agents {
        speaker,
        listener,
        listener_model: virtual_listener,
        speaker_model: virtual_speaker,
    };
    let (results, _) = evaluate(world, &agents, testset, methods, subsets, cfg)?;
    Ok(VirtualReport {
        speaker_fidelity: sf,
        listener_fidelity: lf,
        results,
    })
}

pub fn write_results_csv<W: Write>(results: &[MethodResult], mut w: W) -> Result<()> {
    writeln!(w, "method,subset,epoch,acc,sp,lp")?;
    for r in results {
        for e in &r.metrics.epochs {
            writeln!(w, "{},{},{},{:.6},{:.6},{:.6}", r.method, r.subset, e.epoch, e.acc, e.sp, e.lp)?;
        }
    }
    Ok(())
}

pub fn write_instances_csv<W: Write>(rows: &[InstanceRow], mut w: W) -> Result<()> {
    writeln!(w, "instance_id,method,target,message,choice,success,sp,lp")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.9},{:.9}",
            r.instance_id(),
            r.method,
            r.target,
            r.message,
            r.choice,
            u8::from(r.success),
            r.sp,
            r.lp
        )?;
    }
    Ok(())
}

/// Exact-copy and virtual-model results side by side.
pub fn write_robustness_csv<W: Write>(exact: &[MethodResult], report: &VirtualReport, mut w: W) -> Result<()> {
    writeln!(w, "method,subset,model,acc,acc_sd,sp,lp,speaker_fidelity,listener_fidelity")?;
    let rows = exact
        .iter()
        .map(|r| (r, "exact", 1.0, 1.0))
        .chain(report.results.iter().map(|r| (r, "virtual", report.speaker_fidelity, report.listener_fidelity)));
    for (r, model, sf, lf) in rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.method, r.subset, model, r.metrics.acc, r.metrics.acc_sd, r.metrics.sp, r.metrics.lp, sf, lf
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// lexicon

pub const LEXICON_PREFIX: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    Color(u8),
    /// Horizontal position in thirds: 0 left, 1 center, 2 right.
    X(u8),
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attribute::Color(c) => write!(f, "color={}", COLOR_NAMES[usize::from(*c)]),
            Attribute::X(b) => write!(f, "x={}", ["left", "center", "right"][usize::from(*b)]),
        }
    }
}

pub fn x_bucket(object: &ObjectSpec) -> u8 {
    ((object.position[0] * 3.0).floor() as u8).min(2)
}

/// A message (or a 2-symbol prefix, rendered with a trailing `*`) and the
/// attribute it most consistently co-occurs with.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub key: String,
    pub is_prefix: bool,
    pub attribute: Attribute,
    pub purity: f64,
    pub support: usize,
}

fn dominant(uses: &[ObjectSpec]) -> (Attribute, f64) {
    let mut colors: BTreeMap<u8, usize> = BTreeMap::new();
    let mut xs: BTreeMap<u8, usize> = BTreeMap::new();
    for o in uses {
        *colors.entry(o.color).or_default() += 1;
        *xs.entry(x_bucket(o)).or_default() += 1;
    }
    let top = |m: &BTreeMap<u8, usize>| {
        let mut best = (0u8, 0usize);
        for (&k, &v) in m {
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    };
    let (c, nc) = top(&colors);
    let (x, nx) = top(&xs);
    let n = uses.len() as f64;
    if nx > nc {
        (Attribute::X(x), nx as f64 / n)
    } else {
        (Attribute::Color(c), nc as f64 / n)
    }
}

/// Groups realized messages by full message and by prefix.
pub fn lexicon_from_uses(uses: &[(Message, ObjectSpec)]) -> Vec<LexiconEntry> {
    let mut full: BTreeMap<String, Vec<ObjectSpec>> = BTreeMap::new();
    let mut prefix: BTreeMap<String, Vec<ObjectSpec>> = BTreeMap::new();
    for (m, o) in uses {
        full.entry(m.to_string()).or_default().push(*o);
        prefix.entry(format!("{}*", m.prefix(LEXICON_PREFIX))).or_default().push(*o);
    }
    let entry = |is_prefix: bool| {
        move |(key, objs): (String, Vec<ObjectSpec>)| {
            let (attribute, purity) = dominant(&objs);
            LexiconEntry {
                key,
                is_prefix,
                attribute,
                purity,
                support: objs.len(),
            }
        }
    };
    full.into_iter()
        .map(entry(false))
        .chain(prefix.into_iter().map(entry(true)))
        .collect()
}

/// Realized messages for every test object (epoch 0, unrestricted
/// distractors) under one method.
pub fn lexicon_map(
    world: &WorldConfig,
    agents: &Agents,
    testset: &[ObjectSpec],
    method: Method,
    cfg: &EvalConfig,
) -> Result<Vec<LexiconEntry>> {
    let (_, rows) = run_epoch(world, agents, testset, method, Subset::All, 0, cfg)?;
    let uses: Vec<(Message, ObjectSpec)> = rows.into_iter().map(|r| (r.message, testset[r.object])).collect();
    Ok(lexicon_from_uses(&uses))
}

/// Full messages of `b` that never occur in `a`.
pub fn lexicon_diff(a: &[LexiconEntry], b: &[LexiconEntry]) -> Vec<LexiconEntry> {
    b.iter()
        .filter(|e| !e.is_prefix && !a.iter().any(|x| !x.is_prefix && x.key == e.key))
        .cloned()
        .collect()
}

/// Writes the union of two lexicons. Keys present in both keep `a`'s
/// statistics; the `methods` column names where each key occurs.
pub fn write_lexicon_tsv<W: Write>(
    a: (&Method, &[LexiconEntry]),
    b: (&Method, &[LexiconEntry]),
    mut w: W,
) -> Result<()> {
    writeln!(w, "message\tattribute\tpurity\tsupport\tmethods")?;
    let mut rows: Vec<(&LexiconEntry, String)> = Vec::new();
    for e in a.1 {
        let shared = b.1.iter().any(|x| x.key == e.key);
        let methods = if shared { format!("{},{}", a.0, b.0) } else { a.0.to_string() };
        rows.push((e, methods));
    }
    for e in b.1 {
        if !a.1.iter().any(|x| x.key == e.key) {
            rows.push((e, b.0.to_string()));
        }
    }
    rows.sort_by(|x, y| (x.0.is_prefix, &x.0.key).cmp(&(y.0.is_prefix, &y.0.key)));
    for (e, methods) in rows {
        writeln!(w, "{}\t{}\t{:.4}\t{}\t{}", e.key, e.attribute, e.purity, e.support, methods)?;
    }
    Ok(())
}
