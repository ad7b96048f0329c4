//! File-based experiment pipeline behind the `refgame` command.
//!
//! Every stage reads its inputs from and writes its outputs to one output
//! directory under fixed names, plus a `<stage>.manifest.toml` recording the
//! config hash, seed, crate version and the SHA-256 of each output.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dropcode::{self, EmbeddingModel, Encoder};
use crate::emergence::{self, DistillConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{self, Agents, EvalConfig, Method, Subset};
use crate::policy::{ListenerPolicy, SpeakerPolicy};
use crate::seed;
use crate::world::{generate_dataset, Dataset, WorldConfig};

pub const DATASET: &str = "dataset.txt";
pub const SPEAKER: &str = "speaker.policy";
pub const LISTENER: &str = "listener.policy";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const RESULTS: &str = "results.csv";
pub const INSTANCES: &str = "instances.csv";
pub const VIRTUAL_SPEAKER: &str = "virtual_speaker.policy";
pub const VIRTUAL_LISTENER: &str = "virtual_listener.policy";
pub const ROBUSTNESS: &str = "robustness.csv";
pub const LEXICON: &str = "lexicon.tsv";
pub const DROPSIM: &str = "dropsim.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { n_train: 600, n_test: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconConfig {
    pub method_a: Method,
    pub method_b: Method,
}

impl Default for LexiconConfig {
    fn default() -> Self {
        Self {
            method_a: Method::Baseline,
            method_b: Method::GameTableSeq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropConfig {
    pub dim: usize,
    pub mean: f64,
    pub noise_scale: f64,
    pub message_noise: f64,
    pub p_grid: Vec<f64>,
    pub n_samples: usize,
}

impl Default for DropConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            mean: 2.0,
            noise_scale: 1.0,
            message_noise: 0.0,
            p_grid: vec![0.0, 0.3, 0.6, 0.9, 1.0],
            n_samples: 100_000,
        }
    }
}

impl DropConfig {
    pub fn model(&self) -> EmbeddingModel {
        EmbeddingModel {
            means: vec![vec![self.mean; self.dim]],
            noise_scale: self.noise_scale,
            message_noise: self.message_noise,
        }
    }
}

/// Complete experiment definition. The defaults describe the 4-color x
/// 2-shape toy world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub world: WorldConfig,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    #[serde(rename = "virtual")]
    pub virtual_: DistillConfig,
    pub lexicon: LexiconConfig,
    pub dropcode: DropConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            world: WorldConfig {
                n_colors: 4,
                n_shapes: 2,
                shape_gain: 0.2,
                view_noise: 0.25,
                ..WorldConfig::default()
            },
            data: DataConfig::default(),
            train: TrainConfig {
                n_steps: 200_000,
                ..TrainConfig::default()
            },
            eval: EvalConfig::default(),
            virtual_: DistillConfig {
                n_rounds: 3_000,
                ..DistillConfig::default()
            },
            lexicon: LexiconConfig::default(),
            dropcode: DropConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", path.display())),
            _ => Error::Io(e),
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.train.validate()?;
        self.eval.validate()?;
        if self.data.n_train == 0 || self.data.n_test == 0 {
            return Err(Error::Config("data sizes must be positive".into()));
        }
        self.dropcode.model().validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering, ignoring `out_dir`.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: seed::derive(self.seed, &[2]),
            ..self.train.clone()
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: seed::derive(self.seed, &[3]),
            ..self.eval.clone()
        }
    }

    pub fn distill_config(&self) -> DistillConfig {
        DistillConfig {
            seed: seed::derive(self.seed, &[4]),
            ..self.virtual_.clone()
        }
    }
}

/// Subcommand names, used in manifests and error hints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    GenData,
    Train,
    Eval,
    Virtual,
    Lexicon,
    Dropsim,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Virtual => "virtual",
            Stage::Lexicon => "lexicon",
            Stage::Dropsim => "dropsim",
        }
    }
}

pub struct Pipeline {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let out_dir = config.out_dir.clone();
        Ok(Self { config, out_dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn input(&self, name: &str, producer: Stage) -> Result<BufReader<File>> {
        let path = self.path(name);
        match File::open(&path) {
            Ok(f) => Ok(BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingArtifact {
                path,
                producer: producer.name(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn output(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn finish(&self, stage: Stage, outputs: &[&str]) -> Result<Vec<PathBuf>> {
        let mut w = self.output(&format!("{}.manifest.toml", stage.name()))?;
        writeln!(w, "command = \"{}\"", stage.name())?;
        writeln!(w, "config_sha256 = \"{}\"", self.config.hash())?;
        writeln!(w, "seed = {}", self.config.seed)?;
        writeln!(w, "version = \"{}\"", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "\n[outputs]")?;
        for name in outputs {
            writeln!(w, "\"{name}\" = \"{}\"", sha256_file(&self.path(name))?)?;
        }
        w.flush()?;
        Ok(outputs.iter().map(|n| self.path(n)).collect())
    }

    fn dataset(&self) -> Result<Dataset> {
        Dataset::read_from(self.input(DATASET, Stage::GenData)?)
    }

    fn policies(&self) -> Result<(SpeakerPolicy, ListenerPolicy)> {
        Ok((
            SpeakerPolicy::read_from(self.input(SPEAKER, Stage::Train)?)?,
            ListenerPolicy::read_from(self.input(LISTENER, Stage::Train)?)?,
        ))
    }

    pub fn gen_data(&self) -> Result<Vec<PathBuf>> {
        let c = &self.config;
        let ds = generate_dataset(&c.world, c.data.n_train, c.data.n_test, seed::derive(c.seed, &[1]))?;
        let mut w = self.output(DATASET)?;
        ds.write_to(&mut w)?;
        w.flush()?;
        self.finish(Stage::GenData, &[DATASET])
    }

    pub fn train(&self) -> Result<Vec<PathBuf>> {
        let ds = self.dataset()?;
        let (s, l, log) = emergence::train(&self.config.world, &ds, &self.config.train_config())?;
        let mut w = self.output(SPEAKER)?;
        s.write_to(&mut w)?;
        w.flush()?;
        let mut w = self.output(LISTENER)?;
        l.write_to(&mut w)?;
        w.flush()?;
        let mut w = self.output(TRAIN_LOG)?;
        log.write_csv(&mut w)?;
        w.flush()?;
        self.finish(Stage::Train, &[SPEAKER, LISTENER, TRAIN_LOG])
    }

    pub fn eval(&self) -> Result<Vec<PathBuf>> {
        let ds = self.dataset()?;
        let (s, l) = self.policies()?;
        let (results, rows) = eval::evaluate(
            &self.config.world,
            &Agents::exact(&s, &l),
            &ds.test,
            &self.config.eval.methods,
            &Subset::BOTH,
            &self.config.eval_config(),
        )?;
        let mut w = self.output(RESULTS)?;
        eval::write_results_csv(&results, &mut w)?;
        w.flush()?;
        let mut w = self.output(INSTANCES)?;
        eval::write_instances_csv(&rows, &mut w)?;
        w.flush()?;
        self.finish(Stage::Eval, &[RESULTS, INSTANCES])
    }

    pub fn virtual_(&self) -> Result<Vec<PathBuf>> {
        let ds = self.dataset()?;
        let (s, l) = self.policies()?;
        let c = &self.config;
        let (vs, vl) = emergence::distill_virtual(&s, &l, &c.world, &ds, &c.distill_config())?;
        let methods: Vec<Method> = c.eval.methods.iter().copied().filter(Method::is_two_sided).collect();
        let cfg = c.eval_config();
        let (exact, _) = eval::evaluate(&c.world, &Agents::exact(&s, &l), &ds.test, &methods, &Subset::BOTH, &cfg)?;
        let report = eval::run_virtual(&c.world, &s, &l, &vs, &vl, &ds.test, &methods, &Subset::BOTH, &cfg)?;
        let mut w = self.output(VIRTUAL_SPEAKER)?;
        vs.write_to(&mut w)?;
        w.flush()?;
        let mut w = self.output(VIRTUAL_LISTENER)?;
        vl.write_to(&mut w)?;
        w.flush()?;
        let mut w = self.output(ROBUSTNESS)?;
        eval::write_robustness_csv(&exact, &report, &mut w)?;
        w.flush()?;
        self.finish(Stage::Virtual, &[VIRTUAL_SPEAKER, VIRTUAL_LISTENER, ROBUSTNESS])
    }

    pub fn lexicon(&self) -> Result<Vec<PathBuf>> {
        let ds = self.dataset()?;
        let (s, l) = self.policies()?;
        let c = &self.config;
        let agents = Agents::exact(&s, &l);
        let cfg = c.eval_config();
        let (a, b) = (c.lexicon.method_a, c.lexicon.method_b);
        let lex_a = eval::lexicon_map(&c.world, &agents, &ds.test, a, &cfg)?;
        let lex_b = eval::lexicon_map(&c.world, &agents, &ds.test, b, &cfg)?;
        let mut w = self.output(LEXICON)?;
        eval::write_lexicon_tsv((&a, &lex_a), (&b, &lex_b), &mut w)?;
        w.flush()?;
        self.finish(Stage::Lexicon, &[LEXICON])
    }

    pub fn dropsim(&self) -> Result<Vec<PathBuf>> {
        let d = &self.config.dropcode;
        let model = d.model();
        let mut rows = Vec::new();
        for encoder in Encoder::ALL {
            rows.extend(dropcode::drop_benchmark(
                &model,
                &d.p_grid,
                encoder,
                d.n_samples,
                seed::derive(self.config.seed, &[5]),
            )?);
        }
        let mut w = self.output(DROPSIM)?;
        dropcode::write_csv(&rows, &mut w)?;
        w.flush()?;
        self.finish(Stage::Dropsim, &[DROPSIM])
    }

    pub fn run(&self, stage: Stage) -> Result<Vec<PathBuf>> {
        match stage {
            Stage::GenData => self.gen_data(),
            Stage::Train => self.train(),
            Stage::Eval => self.eval(),
            Stage::Virtual => self.virtual_(),
            Stage::Lexicon => self.lexicon(),
            Stage::Dropsim => self.dropsim(),
        }
    }
}
