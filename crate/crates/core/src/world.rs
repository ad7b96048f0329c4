//! Synthetic object universe, per-agent feature views and game instances.
//!
//! Objects are symbolic `(color, shape, position)` triples. Each agent
//! perceives an object through a fixed embedding plus independent Gaussian
//! view noise, so the speaker and the listener never see the same vector
//! for the same object.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COLOR_NAMES: [&str; 8] = [
    "red", "green", "blue", "yellow", "magenta", "cyan", "white", "black",
];
pub const SHAPE_NAMES: [&str; 5] = ["cube", "sphere", "cylinder", "cone", "torus"];

pub const MAX_COLORS: usize = COLOR_NAMES.len();
pub const MAX_SHAPES: usize = SHAPE_NAMES.len();

/// Feature layout: color block, shape block, `(x, y)`, constant bias.
pub const FEATURE_DIM: usize = MAX_COLORS + MAX_SHAPES + 2 + 1;
const SHAPE_OFFSET: usize = MAX_COLORS;
const POSITION_OFFSET: usize = MAX_COLORS + MAX_SHAPES;
const BIAS_OFFSET: usize = POSITION_OFFSET + 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub color: u8,
    pub shape: u8,
    pub position: [f64; 2],
}

impl ObjectSpec {
    pub fn new(color: u8, shape: u8, position: [f64; 2]) -> Result<Self> {
        let spec = Self {
            color,
            shape,
            position,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if usize::from(self.color) >= MAX_COLORS {
            return Err(Error::InvalidArgument(format!("color {} out of range", self.color)));
        }
        if usize::from(self.shape) >= MAX_SHAPES {
            return Err(Error::InvalidArgument(format!("shape {} out of range", self.shape)));
        }
        if !self.position.iter().all(|p| (0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!(
                "position {:?} outside [0,1]^2",
                self.position
            )));
        }
        Ok(())
    }

    pub fn color_name(&self) -> &'static str {
        COLOR_NAMES[usize::from(self.color)]
    }

    /// Cell of the `grid x grid` partition of the unit square.
    pub fn bucket(&self, grid: usize) -> (usize, usize) {
        let cell = |v: f64| ((v * grid as f64) as usize).min(grid - 1);
        (cell(self.position[0]), cell(self.position[1]))
    }
}

/// An agent's perception of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureView {
    pub values: Vec<f64>,
}

impl FeatureView {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// World generation and perception parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// The first `n_colors` entries of [`COLOR_NAMES`] are in play.
    pub n_colors: usize,
    pub n_shapes: usize,
    /// Side of the position grid used for duplicate and disjointness checks.
    pub position_grid: usize,
    /// How often one `(color, shape, cell)` key may recur inside a split.
    pub max_repeats: usize,
    /// Standard deviation of the per-agent view noise.
    pub view_noise: f64,
    pub color_gain: f64,
    pub shape_gain: f64,
    pub position_gain: f64,
    /// Groups of mutually similar colors. Colors outside every group are
    /// similar only to themselves.
    pub similar_colors: Vec<Vec<u8>>,
    /// Cross-talk between similar colors in the color block; 0 is a plain
    /// one-hot code.
    pub color_blend: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_colors: MAX_COLORS,
            n_shapes: MAX_SHAPES,
            position_grid: 4,
            max_repeats: 8,
            view_noise: 0.1,
            color_gain: 1.0,
            shape_gain: 1.0,
            position_gain: 1.0,
            // red and magenta
            similar_colors: vec![vec![0, 4]],
            color_blend: 0.5,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_colors == 0 || self.n_colors > MAX_COLORS {
            return bad(format!("n_colors must be in 1..={MAX_COLORS}"));
        }
        if self.n_shapes == 0 || self.n_shapes > MAX_SHAPES {
            return bad(format!("n_shapes must be in 1..={MAX_SHAPES}"));
        }
        if self.position_grid == 0 || self.max_repeats == 0 {
            return bad("position_grid and max_repeats must be positive".into());
        }
        if !(self.view_noise >= 0.0) || !self.view_noise.is_finite() {
            return bad("view_noise must be a finite nonnegative number".into());
        }
        if !(0.0..1.0).contains(&self.color_blend) {
            return bad("color_blend must be in [0,1)".into());
        }
        for group in &self.similar_colors {
            if group.iter().any(|&c| usize::from(c) >= MAX_COLORS) {
                return bad(format!("similarity group {group:?} names an unknown color"));
            }
        }
        Ok(())
    }

    /// Number of distinct `(color, shape, cell)` keys.
    pub fn capacity(&self) -> usize {
        self.n_colors * self.n_shapes * self.position_grid * self.position_grid
    }

    pub fn colors_similar(&self, a: u8, b: u8) -> bool {
        a == b
            || self
                .similar_colors
                .iter()
                .any(|g| g.contains(&a) && g.contains(&b))
    }

    /// Noiseless embedding of an object.
    pub fn embed(&self, object: &ObjectSpec) -> FeatureView {
        let mut values = vec![0.0; FEATURE_DIM];
        let color = object.color;
        for c in 0..MAX_COLORS as u8 {
            let weight = if c == color {
                1.0
            } else if self.colors_similar(c, color) {
                self.color_blend
            } else {
                0.0
            };
            values[usize::from(c)] = self.color_gain * weight;
        }
        values[SHAPE_OFFSET + usize::from(object.shape)] = self.shape_gain;
        for (k, p) in object.position.iter().enumerate() {
            values[POSITION_OFFSET + k] = self.position_gain * (p - 0.5);
        }
        values[BIAS_OFFSET] = 1.0;
        FeatureView { values }
    }

    /// Embedding plus isotropic Gaussian noise of standard deviation
    /// `noise_scale`. Always consumes `FEATURE_DIM` normal draws when the
    /// scale is positive.
    pub fn featurize<R: Rng + ?Sized>(
        &self,
        object: &ObjectSpec,
        noise_scale: f64,
        rng: &mut R,
    ) -> FeatureView {
        let mut view = self.embed(object);
        if noise_scale > 0.0 {
            for v in &mut view.values {
                let z: f64 = StandardNormal.sample(rng);
                *v += noise_scale * z;
            }
        }
        view
    }

    pub fn is_challenge(&self, instance: &GameInstance) -> bool {
        let c = &instance.candidates;
        (0..c.len()).all(|i| (i + 1..c.len()).all(|j| self.colors_similar(c[i].color, c[j].color)))
    }

    fn draw_split<R: Rng + ?Sized>(
        &self,
        keys: &[(u8, u8, usize, usize)],
        n: usize,
        rng: &mut R,
    ) -> Vec<ObjectSpec> {
        let cell = 1.0 / self.position_grid as f64;
        let mut counts = vec![0usize; keys.len()];
        let mut open: Vec<usize> = (0..keys.len()).collect();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let slot = rng.random_range(0..open.len());
            let k = open[slot];
            counts[k] += 1;
            if counts[k] == self.max_repeats {
                open.swap_remove(slot);
            }
            let (color, shape, bx, by) = keys[k];
            let x = (bx as f64 + rng.random::<f64>()) * cell;
            let y = (by as f64 + rng.random::<f64>()) * cell;
            out.push(ObjectSpec {
                color,
                shape,
                position: [x.min(1.0), y.min(1.0)],
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<ObjectSpec>,
    pub test: Vec<ObjectSpec>,
    pub seed: u64,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[ObjectSpec] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Writes the line-oriented text format:
    ///
    /// ```text
    /// # refgame dataset v1
    /// seed <u64>
    /// train <count>
    /// <color> <shape> <x> <y>      (one line per object)
    /// test <count>
    /// <color> <shape> <x> <y>
    /// ```
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# refgame dataset v1")?;
        writeln!(w, "seed {}", self.seed)?;
        for (name, objects) in [("train", &self.train), ("test", &self.test)] {
            writeln!(w, "{name} {}", objects.len())?;
            for o in objects {
                writeln!(w, "{} {} {} {}", o.color, o.shape, o.position[0], o.position[1])?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty() || s.starts_with('#')));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(s))) => Ok((i, s)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of input, expected {what}"),
                }),
            }
        };
        let header = |line: usize, s: &str, key: &str| -> Result<u64> {
            s.strip_prefix(key)
                .and_then(|rest| rest.trim().parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("expected `{key} <n>`"),
                })
        };
        let (i, s) = next("seed")?;
        let seed = header(i, &s, "seed ")?;
        let mut splits = Vec::new();
        for key in ["train ", "test "] {
            let (i, s) = next(key)?;
            let n = header(i, &s, key)? as usize;
            let mut objects = Vec::with_capacity(n);
            for _ in 0..n {
                let (i, s) = next("object")?;
                objects.push(parse_object(&s).map_err(|msg| Error::Parse { line: i, msg })?);
            }
            splits.push(objects);
        }
        let test = splits.pop().unwrap_or_default();
        let train = splits.pop().unwrap_or_default();
        Ok(Self { train, test, seed })
    }
}

fn parse_object(line: &str) -> std::result::Result<ObjectSpec, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let color = fields[0].parse::<u8>().map_err(|e| e.to_string())?;
    let shape = fields[1].parse::<u8>().map_err(|e| e.to_string())?;
    let x = fields[2].parse::<f64>().map_err(|e| e.to_string())?;
    let y = fields[3].parse::<f64>().map_err(|e| e.to_string())?;
    ObjectSpec::new(color, shape, [x, y]).map_err(|e| e.to_string())
}

/// Draws a dataset whose train and test splits share no
/// `(color, shape, cell)` key.
///
/// Keys are shuffled and divided between the splits in proportion to the
/// requested sizes; each split then draws keys uniformly, at most
/// `max_repeats` times each, with a uniform position inside the key's cell.
pub fn generate_dataset(
    world: &WorldConfig,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<Dataset> {
    world.validate()?;
    if n_train == 0 || n_test == 0 {
        return Err(Error::InvalidArgument("both splits must be nonempty".into()));
    }
    let capacity = world.capacity();
    let need_train = n_train.div_ceil(world.max_repeats);
    let need_test = n_test.div_ceil(world.max_repeats);
    if need_train + need_test > capacity {
        return Err(Error::Capacity {
            capacity,
            required: need_train + need_test,
        });
    }

    let g = world.position_grid;
    let mut keys = Vec::with_capacity(capacity);
    for color in 0..world.n_colors as u8 {
        for shape in 0..world.n_shapes as u8 {
            for bx in 0..g {
                for by in 0..g {
                    keys.push((color, shape, bx, by));
                }
            }
        }
    }
    let mut rng = crate::seed::substream(seed, &[0xDA7A]);
    keys.shuffle(&mut rng);

    let share = (capacity as f64 * n_test as f64 / (n_train + n_test) as f64).round() as usize;
    let n_test_keys = share.clamp(need_test, capacity - need_train);
    let (test_keys, train_keys) = keys.split_at(n_test_keys);

    let train = world.draw_split(train_keys, n_train, &mut rng);
    let test = world.draw_split(test_keys, n_test, &mut rng);
    Ok(Dataset { train, test, seed })
}

/// One round of the referential game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    pub candidates: Vec<ObjectSpec>,
    pub target_index: usize,
    pub speaker_views: Vec<FeatureView>,
    pub listener_views: Vec<FeatureView>,
}

impl GameInstance {
    /// Builds an instance, drawing a fresh speaker view then a fresh listener
    /// view for every candidate.
    pub fn observe<R: Rng + ?Sized>(
        world: &WorldConfig,
        candidates: Vec<ObjectSpec>,
        target_index: usize,
        rng: &mut R,
    ) -> Self {
        let mut speaker_views = Vec::with_capacity(candidates.len());
        let mut listener_views = Vec::with_capacity(candidates.len());
        for c in &candidates {
            speaker_views.push(world.featurize(c, world.view_noise, rng));
            listener_views.push(world.featurize(c, world.view_noise, rng));
        }
        Self {
            candidates,
            target_index,
            speaker_views,
            listener_views,
        }
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn target(&self) -> &ObjectSpec {
        &self.candidates[self.target_index]
    }

    pub fn target_view(&self) -> &FeatureView {
        &self.speaker_views[self.target_index]
    }
}

/// Samples `n_candidates` distinct objects from a split, a uniform target
/// among them, and fresh views.
pub fn sample_instance<R: Rng + ?Sized>(
    world: &WorldConfig,
    dataset: &Dataset,
    split: Split,
    n_candidates: usize,
    rng: &mut R,
) -> Result<GameInstance> {
    let objects = dataset.split(split);
    if n_candidates == 0 || n_candidates > objects.len() {
        return Err(Error::NotEnoughObjects {
            available: objects.len(),
            requested: n_candidates,
        });
    }
    let picks = rand::seq::index::sample(rng, objects.len(), n_candidates);
    let candidates: Vec<ObjectSpec> = picks.iter().map(|i| objects[i]).collect();
    let target_index = rng.random_range(0..n_candidates);
    Ok(GameInstance::observe(world, candidates, target_index, rng))
}

/// Builds an instance around a fixed target object with uniformly drawn
/// distractors. With `challenge_only`, distractors are restricted to objects
/// whose color is similar to the target's; returns `None` when too few exist.
pub fn instance_for_target<R: Rng + ?Sized>(
    world: &WorldConfig,
    objects: &[ObjectSpec],
    target: usize,
    n_candidates: usize,
    challenge_only: bool,
    rng: &mut R,
) -> Option<GameInstance> {
    let target_obj = objects[target];
    let pool: Vec<usize> = (0..objects.len())
        .filter(|&i| i != target)
        .filter(|&i| !challenge_only || world.colors_similar(objects[i].color, target_obj.color))
        .collect();
    let n_distractors = n_candidates.checked_sub(1)?;
    if pool.len() < n_distractors {
        return None;
    }
    let picks = rand::seq::index::sample(rng, pool.len(), n_distractors);
    let target_index = rng.random_range(0..n_candidates);
    let mut candidates: Vec<ObjectSpec> = picks.iter().map(|i| objects[pool[i]]).collect();
    candidates.insert(target_index, target_obj);
    Some(GameInstance::observe(world, candidates, target_index, rng))
}
