//! Shared-network self-play training and frozen-policy evaluation.
//!
//! All four seats act with the same online network and push into one replay
//! buffer. A run directory looks like:
//!
//! ```text
//! out/
//!   config.json
//!   metrics.jsonl            one EpisodeStats per line
//!   checkpoints/ep_00500.ckpt + ep_00500.json
//!   final.ckpt + final.json
//!   resume/                  optimizer, target net, buffer and RNG state
//!   traces/ep_00001.jsonl    when trace_every > 0
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::codec::{self, BufferCodecError};
use crate::agents::{
    compute_targets, select_action, AgentError, AgentVariant, ExplorationSchedule, ReplayBuffer, Transition,
    DEFAULT_CAPACITY,
};
use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::env::{ActionGroup, Env, EnvError, EnvSpec, ACTION_COUNT};
use crate::game::{Player, N_PLAYERS};
use crate::neural::{Adam, AdamConfig, Architecture, Batch, NetShape, Network, NeuralError};
use crate::rng::SeededRng;
use crate::trace::EpisodeTrace;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Checkpoint {
        context: String,
        #[source]
        source: CheckpointError,
    },
    #[error("replay buffer snapshot: {0}")]
    Buffer(#[from] BufferCodecError),
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot resume: {0}")]
    Resume(String),
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> TrainError {
    let context = context.into();
    move |source| TrainError::Io { context, source }
}

fn ckpt_err(context: impl Into<String>) -> impl FnOnce(CheckpointError) -> TrainError {
    let context = context.into();
    move |source| TrainError::Checkpoint { context, source }
}

fn json_err(context: impl Into<String>) -> impl FnOnce(serde_json::Error) -> TrainError {
    let context = context.into();
    move |source| TrainError::Json { context, source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub variant: AgentVariant,
    pub episodes: u32,
    pub seed: u64,
    pub gamma: f64,
    pub lr: f32,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub batch_size: usize,
    /// Gradient step whenever the episode step count is a multiple of this.
    pub update_every: u64,
    /// Target sync and checkpoint period in episodes.
    pub sync_every: u32,
    pub buffer_capacity: usize,
    pub hidden: usize,
    /// Write a replayable trace for every n-th episode; 0 disables traces.
    pub trace_every: u32,
    pub env: EnvSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: AgentVariant::Dqn,
            episodes: 10_000,
            seed: 0,
            gamma: 0.95,
            lr: 0.001,
            epsilon_start: 1.0,
            epsilon_decay: 0.995,
            epsilon_min: 0.01,
            batch_size: 64,
            update_every: 10,
            sync_every: 500,
            buffer_capacity: DEFAULT_CAPACITY,
            hidden: crate::neural::DEFAULT_HIDDEN,
            trace_every: 0,
            env: EnvSpec::default(),
            out_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.variant.architecture().is_none() {
            return fail("the random agent has nothing to train");
        }
        if self.episodes == 0 {
            return fail("episodes must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1)");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail("lr must be positive");
        }
        if !self.schedule().is_valid() {
            return fail("epsilon schedule needs 0 <= min <= start <= 1 and decay in [0, 1]");
        }
        if self.batch_size == 0 || self.update_every == 0 || self.sync_every == 0 || self.hidden == 0 {
            return fail("batch_size, update_every, sync_every and hidden must be positive");
        }
        if self.buffer_capacity < self.batch_size {
            return fail("buffer_capacity must be at least batch_size");
        }
        self.env.validate()?;
        Ok(())
    }

    pub fn schedule(&self) -> ExplorationSchedule {
        ExplorationSchedule::new(self.epsilon_start, self.epsilon_decay, self.epsilon_min)
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeStats {
    pub episode: u32,
    /// Sum of every seat's rewards.
    pub reward: f64,
    pub steps: u64,
    pub illegal: u32,
    pub epsilon: f64,
    /// Mean minibatch loss, absent when no update ran.
    pub loss: Option<f64>,
    pub updates: u32,
    pub winner: Option<Player>,
    pub truncated: bool,
    /// Transitions contributed by each seat.
    pub seat_steps: [u32; N_PLAYERS],
}

/// Sidecar written next to every checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub episode: u32,
    pub epsilon: f64,
    pub rng: SeededRng,
    pub config_hash: String,
    pub variant: AgentVariant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResumeState {
    config: TrainConfig,
    config_hash: String,
    episode: u32,
    schedule: ExplorationSchedule,
    rng: SeededRng,
}

pub struct TrainOutcome {
    /// Stats for the episodes run by this call.
    pub stats: Vec<EpisodeStats>,
    pub network: Network,
    pub final_checkpoint: Option<PathBuf>,
}

pub struct Trainer {
    config: TrainConfig,
    env: Env,
    online: Network,
    target: Network,
    adam: Adam,
    buffer: ReplayBuffer,
    schedule: ExplorationSchedule,
    rng: SeededRng,
    episode: u32,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let arch = config.variant.architecture().expect("validated");
        let env = Env::new(config.env.clone())?;
        let mut rng = SeededRng::new(config.seed);
        let shape = NetShape {
            input: config.env.obs_size(),
            hidden: config.hidden,
            actions: ACTION_COUNT,
        };
        let online = Network::with_shape(arch, shape, rng.gen());
        let adam = Adam::new(&online, adam_config(&config));
        Ok(Self {
            target: online.clone(),
            online,
            adam,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            schedule: config.schedule(),
            env,
            rng,
            episode: 0,
            config,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn online(&self) -> &Network {
        &self.online
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn epsilon(&self) -> f64 {
        self.schedule.epsilon
    }

    /// Episodes completed so far.
    pub fn episode(&self) -> u32 {
        self.episode
    }

    /// Plays one self-play episode with learning, then decays epsilon and
    /// syncs the target network when the period comes round.
    pub fn run_episode(&mut self, record: bool) -> Result<(EpisodeStats, Option<EpisodeTrace>), TrainError> {
        let seed = self.rng.gen::<u64>();
        let mut obs = self.env.reset(seed).observation;
        let mut trace = record.then(|| EpisodeTrace::new(seed, self.config.env.clone()));
        let epsilon = self.schedule.epsilon;
        let mut stats = EpisodeStats {
            episode: self.episode + 1,
            reward: 0.0,
            steps: 0,
            illegal: 0,
            epsilon,
            loss: None,
            updates: 0,
            winner: None,
            truncated: false,
            seat_steps: [0; N_PLAYERS],
        };
        let mut loss_sum = 0.0;
        loop {
            let player = self.env.current_player();
            let group = ActionGroup::for_phase(self.env.phase());
            let action = select_action(
                self.config.variant,
                Some(&self.online),
                obs.as_slice(),
                group,
                epsilon,
                &mut self.rng,
            )?;
            let result = self.env.step(action)?;
            if let Some(t) = trace.as_mut() {
                t.push(action, &result);
            }
            self.buffer.push(Transition {
                obs,
                action,
                reward: result.reward,
                next_obs: result.observation.clone(),
                next_mask: ActionGroup::for_phase(self.env.phase()).mask(),
                done: result.done,
            });
            stats.reward += result.reward;
            stats.steps = result.info.t;
            stats.illegal += u32::from(!result.info.legal);
            stats.seat_steps[player.index()] += 1;
            if self.buffer.len() > self.config.batch_size && result.info.t % self.config.update_every == 0 {
                loss_sum += f64::from(self.learn()?);
                stats.updates += 1;
            }
            obs = result.observation;
            if result.done {
                stats.truncated = result.info.truncated;
                break;
            }
        }
        stats.winner = self.env.state().winner().map(|(w, _)| w);
        if stats.updates > 0 {
            stats.loss = Some(loss_sum / f64::from(stats.updates));
        }
        self.schedule.step();
        self.episode += 1;
        if self.sync_due() {
            self.target.copy_from(&self.online);
        }
        Ok((stats, trace))
    }

    fn sync_due(&self) -> bool {
        self.episode.is_multiple_of(self.config.sync_every)
    }

    /// One minibatch gradient step toward the bootstrap targets.
    fn learn(&mut self) -> Result<f32, TrainError> {
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
        let targets = compute_targets(
            self.config.variant,
            &self.online,
            &self.target,
            &batch,
            self.config.gamma as f32,
        )?;
        let mut inputs = Vec::with_capacity(batch.len() * self.online.shape().input);
        for t in &batch {
            inputs.extend_from_slice(t.obs.as_slice());
        }
        let batch = Batch {
            inputs,
            actions: batch.iter().map(|t| t.action.index()).collect(),
            targets,
        };
        let (grads, loss) = self.online.backward(&batch)?;
        self.adam.update(&mut self.online, &grads)?;
        Ok(loss)
    }

    fn meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            episode: self.episode,
            epsilon: self.schedule.epsilon,
            rng: self.rng.clone(),
            config_hash: self.config.hash(),
            variant: self.config.variant,
        }
    }

    /// Writes the online network and its sidecar as `<stem>.ckpt` / `<stem>.json`.
    pub fn write_checkpoint(&self, dir: &Path, stem: &str) -> Result<PathBuf, TrainError> {
        let path = dir.join(format!("{stem}.ckpt"));
        Checkpoint::new(self.online.clone())
            .save(&path)
            .map_err(ckpt_err(format!("writing {}", path.display())))?;
        write_json(&dir.join(format!("{stem}.json")), &self.meta())?;
        Ok(path)
    }

    /// Saves everything needed to continue bit-for-bit.
    pub fn save_resume(&self, dir: &Path) -> Result<(), TrainError> {
        fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
        let online = dir.join("online.ckpt");
        Checkpoint::with_optimizer(self.online.clone(), self.adam.clone())
            .save(&online)
            .map_err(ckpt_err(format!("writing {}", online.display())))?;
        let target = dir.join("target.ckpt");
        Checkpoint::new(self.target.clone())
            .save(&target)
            .map_err(ckpt_err(format!("writing {}", target.display())))?;
        let buffer = dir.join("buffer.bin");
        fs::write(&buffer, codec::encode(&self.buffer)).map_err(io_err(format!("writing {}", buffer.display())))?;
        let state = ResumeState {
            config: self.config.clone(),
            config_hash: self.config.hash(),
            episode: self.episode,
            schedule: self.schedule,
            rng: self.rng.clone(),
        };
        // The state file is written last so a partial save is never picked up.
        let tmp = dir.join("state.json.tmp");
        write_json(&tmp, &state)?;
        fs::rename(&tmp, dir.join("state.json")).map_err(io_err("finalizing resume state"))?;
        Ok(())
    }

    pub fn load_resume(dir: &Path) -> Result<Self, TrainError> {
        let state_path = dir.join("state.json");
        let text = fs::read_to_string(&state_path).map_err(io_err(format!("reading {}", state_path.display())))?;
        let state: ResumeState = serde_json::from_str(&text).map_err(json_err(state_path.display().to_string()))?;
        if state.config.hash() != state.config_hash {
            return Err(TrainError::Resume(
                "config hash does not match the stored config".into(),
            ));
        }
        let mut trainer = Trainer::new(state.config)?;
        let online_path = dir.join("online.ckpt");
        let online = Checkpoint::load(&online_path).map_err(ckpt_err(format!("reading {}", online_path.display())))?;
        let target_path = dir.join("target.ckpt");
        let target = Checkpoint::load(&target_path).map_err(ckpt_err(format!("reading {}", target_path.display())))?;
        let adam = online
            .optimizer
            .ok_or_else(|| TrainError::Resume("online checkpoint lacks optimizer state".into()))?;
        let same_shape =
            |n: &Network| n.architecture() == trainer.online.architecture() && n.shape() == trainer.online.shape();
        if !same_shape(&online.network) || !same_shape(&target.network) {
            return Err(TrainError::Resume("network shape differs from the config".into()));
        }
        let buffer_path = dir.join("buffer.bin");
        let bytes = fs::read(&buffer_path).map_err(io_err(format!("reading {}", buffer_path.display())))?;
        let buffer = codec::decode(&bytes)?;
        if buffer.capacity() != trainer.config.buffer_capacity
            || buffer
                .iter()
                .next()
                .is_some_and(|t| t.obs.len() != trainer.online.shape().input)
        {
            return Err(TrainError::Resume("replay buffer does not match the config".into()));
        }
        trainer.online = online.network;
        trainer.target = target.network;
        trainer.adam = adam;
        trainer.buffer = buffer;
        trainer.schedule = state.schedule;
        trainer.rng = state.rng;
        trainer.episode = state.episode;
        Ok(trainer)
    }

    /// Runs until `config.episodes` episodes are complete, writing into
    /// `out_dir` when one is configured.
    pub fn run(mut self, mut on_episode: impl FnMut(&EpisodeStats)) -> Result<TrainOutcome, TrainError> {
        let out = self.config.out_dir.clone();
        let mut metrics = match &out {
            Some(dir) => Some(self.open_run_dir(dir)?),
            None => None,
        };
        let mut stats = Vec::new();
        while self.episode < self.config.episodes {
            let record = self.config.trace_every > 0 && (self.episode + 1).is_multiple_of(self.config.trace_every);
            let (s, trace) = self.run_episode(record)?;
            on_episode(&s);
            if let (Some(dir), Some(w)) = (&out, metrics.as_mut()) {
                let ctx = || format!("episode {}: writing metrics", s.episode);
                serde_json::to_writer(&mut *w, &s).map_err(json_err(ctx()))?;
                w.write_all(b"\n").map_err(io_err(ctx()))?;
                if let Some(trace) = trace {
                    let path = dir.join("traces").join(format!("ep_{:05}.jsonl", s.episode));
                    fs::write(&path, trace.to_jsonl()).map_err(io_err(format!(
                        "episode {}: writing {}",
                        s.episode,
                        path.display()
                    )))?;
                }
                if self.sync_due() {
                    w.flush().map_err(io_err(ctx()))?;
                    self.write_checkpoint(&dir.join("checkpoints"), &format!("ep_{:05}", self.episode))?;
                    self.save_resume(&dir.join("resume"))?;
                }
            }
            stats.push(s);
        }
        let mut final_checkpoint = None;
        if let (Some(dir), Some(mut w)) = (&out, metrics) {
            w.flush().map_err(io_err("flushing metrics"))?;
            final_checkpoint = Some(self.write_checkpoint(dir, "final")?);
        }
        Ok(TrainOutcome {
            stats,
            network: self.online,
            final_checkpoint,
        })
    }

    /// Prepares the run directory. A fresh run truncates the metrics file; a
    /// resumed run keeps only the lines of completed episodes.
    fn open_run_dir(&self, dir: &Path) -> Result<BufWriter<File>, TrainError> {
        for sub in ["checkpoints", "traces"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).map_err(io_err(format!("creating {}", p.display())))?;
        }
        write_json(&dir.join("config.json"), &self.config)?;
        let path = dir.join("metrics.jsonl");
        let kept = if self.episode == 0 {
            Vec::new()
        } else {
            let f = File::open(&path).map_err(io_err(format!("reading {}", path.display())))?;
            let lines = BufReader::new(f)
                .lines()
                .take(self.episode as usize)
                .collect::<Result<Vec<_>, _>>()
                .map_err(io_err(format!("reading {}", path.display())))?;
            if lines.len() != self.episode as usize {
                return Err(TrainError::Resume(format!(
                    "{} holds {} episodes, expected {}",
                    path.display(),
                    lines.len(),
                    self.episode
                )));
            }
            lines
        };
        let f = File::create(&path).map_err(io_err(format!("creating {}", path.display())))?;
        let mut w = BufWriter::new(f);
        for line in kept {
            writeln!(w, "{line}").map_err(io_err(format!("writing {}", path.display())))?;
        }
        Ok(w)
    }
}

fn adam_config(config: &TrainConfig) -> AdamConfig {
    AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), TrainError> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path.display().to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(format!("writing {}", path.display())))
}

/// Trains from scratch per `config`.
pub fn train(config: TrainConfig, on_episode: impl FnMut(&EpisodeStats)) -> Result<TrainOutcome, TrainError> {
    Trainer::new(config)?.run(on_episode)
}

/// Continues the run stored in `dir`, optionally extending its episode count.
pub fn resume(
    dir: &Path,
    episodes: Option<u32>,
    on_episode: impl FnMut(&EpisodeStats),
) -> Result<TrainOutcome, TrainError> {
    let mut trainer = Trainer::load_resume(&dir.join("resume"))?;
    if let Some(n) = episodes {
        trainer.config.episodes = n;
    }
    trainer.config.out_dir = Some(dir.to_path_buf());
    trainer.run(on_episode)
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpisodeStats>, TrainError> {
    let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(json_err(format!("{} line {}", path.display(), i + 1))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub episodes: u32,
    pub epsilon: f64,
    pub seed: u64,
    pub env: EnvSpec,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            epsilon: 0.01,
            seed: 0,
            env: EnvSpec::default(),
        }
    }
}

/// Mean, population standard deviation and range of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            stdev: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: AgentVariant,
    pub checkpoint: Option<String>,
    pub episodes: u32,
    pub epsilon: f64,
    pub seed: u64,
    pub reward: Summary,
    pub steps: Summary,
    /// Fraction of steps whose chosen action was illegal.
    pub illegal_rate: f64,
    pub truncated: u32,
    pub wins: [u32; N_PLAYERS],
}

/// Plays `config.episodes` frozen-policy episodes. Learned variants need a
/// network; the random variant ignores it.
pub fn evaluate(
    variant: AgentVariant,
    network: Option<&Network>,
    checkpoint: Option<String>,
    config: &EvalConfig,
) -> Result<EvalReport, TrainError> {
    if config.episodes == 0 {
        return Err(TrainError::Config("evaluation needs at least one episode".into()));
    }
    if !(0.0..=1.0).contains(&config.epsilon) {
        return Err(TrainError::Config("epsilon must lie in [0, 1]".into()));
    }
    if let (Some(net), Some(arch)) = (network, variant.architecture()) {
        if net.architecture() != arch {
            return Err(TrainError::Config(format!("{variant} needs a {arch:?} network")));
        }
        if net.shape().input != config.env.obs_size() || net.shape().actions != ACTION_COUNT {
            return Err(TrainError::Config(
                "network shape does not match the environment".into(),
            ));
        }
    }
    let mut env = Env::new(config.env.clone())?;
    let mut rng = SeededRng::new(config.seed);
    let mut rewards = Vec::with_capacity(config.episodes as usize);
    let mut steps = Vec::with_capacity(config.episodes as usize);
    let (mut illegal, mut total_steps, mut truncated) = (0u64, 0u64, 0u32);
    let mut wins = [0u32; N_PLAYERS];
    for _ in 0..config.episodes {
        let mut obs = env.reset(rng.gen()).observation;
        let mut reward = 0.0;
        loop {
            let group = ActionGroup::for_phase(env.phase());
            let action = select_action(variant, network, obs.as_slice(), group, config.epsilon, &mut rng)?;
            let r = env.step(action)?;
            reward += r.reward;
            illegal += u64::from(!r.info.legal);
            total_steps += 1;
            obs = r.observation;
            if r.done {
                steps.push(r.info.t as f64);
                truncated += u32::from(r.info.truncated);
                break;
            }
        }
        if let Some((w, _)) = env.state().winner() {
            wins[w.index()] += 1;
        }
        rewards.push(reward);
    }
    Ok(EvalReport {
        variant,
        checkpoint,
        episodes: config.episodes,
        epsilon: config.epsilon,
        seed: config.seed,
        reward: Summary::of(&rewards).expect("non-empty"),
        steps: Summary::of(&steps).expect("non-empty"),
        illegal_rate: illegal as f64 / total_steps.max(1) as f64,
        truncated,
        wins,
    })
}

/// Loads a checkpoint and its sidecar (when present) for evaluation.
pub fn load_policy(path: &Path) -> Result<(AgentVariant, Network), TrainError> {
    let ck = Checkpoint::load(path).map_err(ckpt_err(format!("loading {}", path.display())))?;
    let sidecar = path.with_extension("json");
    let variant = match fs::read_to_string(&sidecar) {
        Ok(text) => {
            serde_json::from_str::<CheckpointMeta>(&text)
                .map_err(json_err(sidecar.display().to_string()))?
                .variant
        }
        Err(_) => match ck.network.architecture() {
            Architecture::Standard => AgentVariant::Dqn,
            Architecture::Dueling => AgentVariant::Dueling,
        },
    };
    if variant.architecture() != Some(ck.network.architecture()) {
        return Err(TrainError::Config(format!(
            "sidecar says {variant} but the checkpoint holds a {:?} network",
            ck.network.architecture()
        )));
    }
    Ok((variant, ck.network))
}
