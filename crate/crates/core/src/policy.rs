//! Position-factorized speaker and listener policies.
//!
//! The speaker maps a feature vector to one softmax per message position;
//! the probability of a message is the product of its per-position symbol
//! probabilities, which keeps the message distribution exactly enumerable.
//! The listener decodes a message into a feature-space vector by summing
//! per-position symbol embeddings and scores candidates by dot product.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::FeatureView;

pub const DEFAULT_ALPHABET: usize = 17;
pub const DEFAULT_LENGTH: usize = 5;
pub const DEFAULT_MAX_PROPOSALS: usize = 16;

/// Fixed-length symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message(pub Vec<u8>);

impl Message {
    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Message {
        Message(self.0[..n.min(self.0.len())].to_vec())
    }
}

/// Symbols render as lowercase letters (`a` = 0).
impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{}", (b'a' + s) as char)?;
        }
        Ok(())
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.bytes()
            .map(|b| match b {
                b'a'..=b'z' => Ok(b - b'a'),
                _ => Err(Error::InvalidArgument(format!("bad message symbol in `{s}`"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageSpace {
    pub alphabet: usize,
    pub length: usize,
}

impl Default for MessageSpace {
    fn default() -> Self {
        Self {
            alphabet: DEFAULT_ALPHABET,
            length: DEFAULT_LENGTH,
        }
    }
}

impl MessageSpace {
    pub fn validate(&self) -> Result<()> {
        if self.alphabet == 0 || self.alphabet > 26 || self.length == 0 {
            return Err(Error::InvalidArgument(format!(
                "message space needs 1..=26 symbols and positive length, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn check(&self, m: &Message) -> Result<()> {
        if m.len() != self.length || m.0.iter().any(|&s| usize::from(s) >= self.alphabet) {
            return Err(Error::InvalidArgument(format!(
                "message `{m}` is not in a space of length {} over {} symbols",
                self.length, self.alphabet
            )));
        }
        Ok(())
    }

    /// Every message in lexicographic order. Only sensible for tiny spaces.
    pub fn enumerate(&self) -> Vec<Message> {
        let mut out = vec![Vec::new()];
        for _ in 0..self.length {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..self.alphabet as u8).map(move |s| {
                        let mut q = p.clone();
                        q.push(s);
                        q
                    })
                })
                .collect();
        }
        out.into_iter().map(Message).collect()
    }
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub(crate) fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver of mass past the last bucket
    p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

/// First index of the maximum; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > p[best] {
            best = i;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn init_params<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, scale).expect("positive scale");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Speaker prior `P(m | features)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPolicy {
    pub dim: usize,
    pub space: MessageSpace,
    pub temperature: f64,
    /// Row-major `[position][symbol][feature]`.
    pub weights: Vec<f64>,
}

impl SpeakerPolicy {
    pub fn new<R: Rng + ?Sized>(dim: usize, space: MessageSpace, init_scale: f64, rng: &mut R) -> Self {
        let n = space.length * space.alphabet * dim;
        Self {
            dim,
            space,
            temperature: 1.0,
            weights: init_params(n, init_scale, rng),
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn index(&self, position: usize, symbol: usize, feature: usize) -> usize {
        (position * self.space.alphabet + symbol) * self.dim + feature
    }

    /// Per-position symbol distributions.
    pub fn position_probs(&self, features: &FeatureView) -> Vec<Vec<f64>> {
        debug_assert_eq!(features.dim(), self.dim);
        let a = self.space.alphabet;
        (0..self.space.length)
            .map(|j| {
                let mut logits: Vec<f64> = (0..a)
                    .map(|s| {
                        let row = self.index(j, s, 0);
                        dot(&self.weights[row..row + self.dim], &features.values) / self.temperature
                    })
                    .collect();
                softmax_in_place(&mut logits);
                logits
            })
            .collect()
    }

    pub fn prob(&self, features: &FeatureView, message: &Message) -> f64 {
        let probs = self.position_probs(features);
        message
            .0
            .iter()
            .zip(&probs)
            .map(|(&s, p)| p[usize::from(s)])
            .product()
    }

    pub fn entropy(&self, features: &FeatureView) -> f64 {
        self.position_probs(features).iter().map(|p| entropy(p)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, features: &FeatureView, rng: &mut R) -> Message {
        let probs = self.position_probs(features);
        Message(probs.iter().map(|p| sample_categorical(p, rng) as u8).collect())
    }

    pub fn argmax_message(&self, features: &FeatureView) -> Message {
        Message(self.position_probs(features).iter().map(|p| argmax(p) as u8).collect())
    }

    /// Highest-probability messages until their mass reaches
    /// `mass_threshold` or `max_size` entries are collected.
    ///
    /// Exact best-first enumeration: each message is a vector of per-position
    /// ranks into the sorted symbol lists, expanded from its unique parent
    /// (the vector with its last nonzero rank decremented), so the heap pops
    /// messages in nonincreasing probability.
    pub fn proposal_set(
        &self,
        features: &FeatureView,
        mass_threshold: f64,
        max_size: usize,
    ) -> Result<ProposalSet> {
        if max_size == 0 {
            return Err(Error::InvalidArgument("max_size must be positive".into()));
        }
        if !(mass_threshold > 0.0 && mass_threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mass threshold {mass_threshold} outside (0,1]"
            )));
        }
        let probs = self.position_probs(features);
        let sorted: Vec<Vec<(u8, f64)>> = probs
            .iter()
            .map(|p| {
                let mut v: Vec<(u8, f64)> = p.iter().enumerate().map(|(s, &x)| (s as u8, x)).collect();
                v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                v
            })
            .collect();
        let length = self.space.length;
        let alphabet = self.space.alphabet;
        let make = |ranks: Vec<usize>| -> Frontier {
            let mut symbols = Vec::with_capacity(length);
            let mut prob = 1.0;
            for (j, &r) in ranks.iter().enumerate() {
                let (s, p) = sorted[j][r];
                symbols.push(s);
                prob *= p;
            }
            Frontier {
                prob,
                message: Message(symbols),
                ranks,
            }
        };

        let mut heap = BinaryHeap::new();
        heap.push(make(vec![0; length]));
        let mut entries: Vec<(Message, f64)> = Vec::new();
        let mut mass = 0.0;
        while let Some(node) = heap.pop() {
            if node.prob <= 0.0 {
                break;
            }
            let last = node.ranks.iter().rposition(|&r| r > 0).unwrap_or(0);
            for j in last..length {
                if node.ranks[j] + 1 < alphabet {
                    let mut ranks = node.ranks.clone();
                    ranks[j] += 1;
                    heap.push(make(ranks));
                }
            }
            mass += node.prob;
            entries.push((node.message, node.prob));
            if mass + 1e-12 >= mass_threshold || entries.len() >= max_size {
                break;
            }
        }
        Ok(ProposalSet { entries, mass })
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        write_params(w, "speaker", self.dim, self.space, self.temperature, &self.weights)
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let (dim, space, temperature, weights) = read_params(r, "speaker")?;
        Ok(Self {
            dim,
            space,
            temperature,
            weights,
        })
    }
}

#[derive(Debug)]
struct Frontier {
    prob: f64,
    message: Message,
    ranks: Vec<usize>,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    // max-heap on probability, then lexicographically smaller message first
    fn cmp(&self, other: &Self) -> Ordering {
        self.prob
            .total_cmp(&other.prob)
            .then_with(|| other.message.cmp(&self.message))
    }
}

/// A truncated, probability-sorted slice of a speaker's message distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSet {
    pub entries: Vec<(Message, f64)>,
    pub mass: f64,
}

impl ProposalSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, m: &Message) -> bool {
        self.entries.iter().any(|(x, _)| x == m)
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.entries.iter().map(|(m, _)| m)
    }
}

/// Listener prior `P(t | m, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ListenerPolicy {
    pub dim: usize,
    pub space: MessageSpace,
    pub temperature: f64,
    /// Row-major `[position][symbol][feature]` symbol embeddings.
    pub embeddings: Vec<f64>,
}

impl ListenerPolicy {
    pub fn new<R: Rng + ?Sized>(dim: usize, space: MessageSpace, init_scale: f64, rng: &mut R) -> Self {
        let n = space.length * space.alphabet * dim;
        Self {
            dim,
            space,
            temperature: 1.0,
            embeddings: init_params(n, init_scale, rng),
        }
    }

    pub fn n_params(&self) -> usize {
        self.embeddings.len()
    }

    #[inline]
    pub fn index(&self, position: usize, symbol: usize, feature: usize) -> usize {
        (position * self.space.alphabet + symbol) * self.dim + feature
    }

    /// Sum of the message's symbol embeddings.
    pub fn decode(&self, message: &Message) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        for (j, &s) in message.0.iter().enumerate() {
            let row = self.index(j, usize::from(s), 0);
            for (acc, e) in z.iter_mut().zip(&self.embeddings[row..row + self.dim]) {
                *acc += e;
            }
        }
        z
    }

    pub fn probs(&self, message: &Message, views: &[FeatureView]) -> Vec<f64> {
        let z = self.decode(message);
        let mut scores: Vec<f64> = views
            .iter()
            .map(|v| dot(&z, &v.values) / self.temperature)
            .collect();
        softmax_in_place(&mut scores);
        scores
    }

    pub fn sample<R: Rng + ?Sized>(&self, message: &Message, views: &[FeatureView], rng: &mut R) -> usize {
        sample_categorical(&self.probs(message, views), rng)
    }

    pub fn choose(&self, message: &Message, views: &[FeatureView]) -> usize {
        argmax(&self.probs(message, views))
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        write_params(w, "listener", self.dim, self.space, self.temperature, &self.embeddings)
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let (dim, space, temperature, embeddings) = read_params(r, "listener")?;
        Ok(Self {
            dim,
            space,
            temperature,
            embeddings,
        })
    }
}

/// Draws a categorical sample; exposed for callers that hold an explicit
/// distribution rather than a policy.
pub fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    sample_categorical(p, rng)
}

const POLICY_MAGIC: &str = "refgame-policy v1";

// Text layout, one token pair per header line then one parameter per line:
//   refgame-policy v1
//   kind <speaker|listener>
//   dim <n>
//   alphabet <n>
//   length <n>
//   temperature <f64>
//   params <count>
//   <f64> ...
fn write_params<W: Write>(
    mut w: W,
    kind: &str,
    dim: usize,
    space: MessageSpace,
    temperature: f64,
    params: &[f64],
) -> Result<()> {
    writeln!(w, "{POLICY_MAGIC}")?;
    writeln!(w, "kind {kind}")?;
    writeln!(w, "dim {dim}")?;
    writeln!(w, "alphabet {}", space.alphabet)?;
    writeln!(w, "length {}", space.length)?;
    writeln!(w, "temperature {temperature}")?;
    writeln!(w, "params {}", params.len())?;
    for p in params {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

fn read_params<R: BufRead>(r: R, kind: &str) -> Result<(usize, MessageSpace, f64, Vec<f64>)> {
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(Error::Parse {
                line: 0,
                msg: "truncated policy file".into(),
            }),
        }
    };
    let (line, magic) = next()?;
    if magic.trim() != POLICY_MAGIC {
        return Err(Error::Parse {
            line,
            msg: format!("expected `{POLICY_MAGIC}`"),
        });
    }
    let mut field = |key: &str| -> Result<String> {
        let (line, s) = next()?;
        s.strip_prefix(key)
            .and_then(|v| v.strip_prefix(' '))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `{key} <value>`"),
            })
    };
    let bad = |what: &str| Error::Parse {
        line: 0,
        msg: format!("invalid {what}"),
    };
    let found = field("kind")?;
    if found != kind {
        return Err(Error::Parse {
            line: 2,
            msg: format!("expected a {kind} policy, found {found}"),
        });
    }
    let dim: usize = field("dim")?.parse().map_err(|_| bad("dim"))?;
    let alphabet: usize = field("alphabet")?.parse().map_err(|_| bad("alphabet"))?;
    let length: usize = field("length")?.parse().map_err(|_| bad("length"))?;
    let temperature: f64 = field("temperature")?.parse().map_err(|_| bad("temperature"))?;
    let count: usize = field("params")?.parse().map_err(|_| bad("params"))?;
    let space = MessageSpace { alphabet, length };
    space.validate()?;
    if count != dim * alphabet * length {
        return Err(Error::Parse {
            line: 7,
            msg: format!("expected {} parameters, header says {count}", dim * alphabet * length),
        });
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, s) = next()?;
        params.push(s.trim().parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad parameter `{s}`"),
        })?);
    }
    Ok((dim, space, temperature, params))
}
