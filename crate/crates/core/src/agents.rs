//! Value-based agents: exploration schedule, phase-aware action selection,
//! replay buffer and bootstrap targets.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionGroup, ActionId, ActionMask, Observation};
use crate::neural::{Architecture, Network, NeuralError};

pub const DEFAULT_CAPACITY: usize = 50_000;

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("buffer holds {len} transitions, cannot sample {batch}")]
    Underfilled { len: usize, batch: usize },
    #[error("transition {0} is not terminal but its next-state mask is empty")]
    EmptyMask(usize),
    #[error("{0:?} agents need a network")]
    MissingNetwork(AgentVariant),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentVariant {
    Dqn,
    Ddqn,
    Dueling,
    Random,
}

impl AgentVariant {
    pub const LEARNED: [AgentVariant; 3] = [AgentVariant::Dqn, AgentVariant::Ddqn, AgentVariant::Dueling];

    pub fn architecture(self) -> Option<Architecture> {
        match self {
            AgentVariant::Dqn | AgentVariant::Ddqn => Some(Architecture::Standard),
            AgentVariant::Dueling => Some(Architecture::Dueling),
            AgentVariant::Random => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentVariant::Dqn => "dqn",
            AgentVariant::Ddqn => "ddqn",
            AgentVariant::Dueling => "dueling",
            AgentVariant::Random => "random",
        }
    }
}

impl fmt::Display for AgentVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dqn" => Ok(AgentVariant::Dqn),
            "ddqn" => Ok(AgentVariant::Ddqn),
            "dueling" => Ok(AgentVariant::Dueling),
            "random" => Ok(AgentVariant::Random),
            _ => Err(format!("unknown variant `{s}` (expected dqn, ddqn, dueling or random)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationSchedule {
    pub epsilon: f64,
    pub start: f64,
    pub decay: f64,
    pub min: f64,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        Self::new(1.0, 0.995, 0.01)
    }
}

impl ExplorationSchedule {
    pub fn new(start: f64, decay: f64, min: f64) -> Self {
        Self {
            epsilon: start,
            start,
            decay,
            min,
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.min)
            && (self.min..=1.0).contains(&self.start)
            && (0.0..=1.0).contains(&self.decay)
            && (self.min..=self.start).contains(&self.epsilon)
    }

    /// Applies one episode's multiplicative decay.
    pub fn step(&mut self) {
        self.epsilon = (self.epsilon * self.decay).max(self.min);
    }

    /// Rate after `episodes` decays from the start value.
    pub fn after(&self, episodes: u32) -> f64 {
        let mut s = Self::new(self.start, self.decay, self.min);
        for _ in 0..episodes {
            s.step();
        }
        s.epsilon
    }
}

/// Greedy action within a phase group; ties go to the lowest id.
pub fn greedy_action(q: &[f32], group: ActionGroup) -> ActionId {
    let mut ids = group.ids();
    let mut best = ids.next().expect("groups are non-empty") as usize;
    for id in ids {
        if q[id as usize] > q[best] {
            best = id as usize;
        }
    }
    ActionId::new(best).expect("group ids are valid actions")
}

pub fn random_action<R: Rng + ?Sized>(group: ActionGroup, rng: &mut R) -> ActionId {
    let id = rng.gen_range(group.ids());
    ActionId::new(id as usize).expect("group ids are valid actions")
}

/// Epsilon-greedy selection restricted to the phase group.
///
/// The random variant ignores epsilon and the network. Learned variants draw
/// one uniform number to decide between exploring and acting greedily.
pub fn select_action<R: Rng + ?Sized>(
    variant: AgentVariant,
    net: Option<&Network>,
    obs: &[f32],
    group: ActionGroup,
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionId, AgentError> {
    if variant == AgentVariant::Random {
        return Ok(random_action(group, rng));
    }
    let net = net.ok_or(AgentError::MissingNetwork(variant))?;
    if rng.gen::<f64>() < epsilon {
        return Ok(random_action(group, rng));
    }
    Ok(greedy_action(&net.q_values(obs)?, group))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: ActionId,
    pub reward: f64,
    pub next_obs: Observation,
    /// Phase-group mask of the next state.
    pub next_mask: ActionMask,
    pub done: bool,
}

/// Bootstrap targets for a minibatch.
///
/// DQN and dueling take the target network's maximum over the next-state
/// mask. Double DQN picks the action with the online network and evaluates it
/// with the target network.
pub fn compute_targets(
    variant: AgentVariant,
    online: &Network,
    target: &Network,
    batch: &[&Transition],
    gamma: f32,
) -> Result<Vec<f32>, AgentError> {
    if let Some(i) = batch.iter().position(|t| !t.done && t.next_mask.is_empty()) {
        return Err(AgentError::EmptyMask(i));
    }
    let n = batch.len();
    let width = target.shape().input;
    let mut next = Vec::with_capacity(n * width);
    for t in batch {
        next.extend_from_slice(t.next_obs.as_slice());
    }
    let q_target = target.forward(&next, n)?;
    let q_online = match variant {
        AgentVariant::Ddqn => Some(online.forward(&next, n)?),
        _ => None,
    };
    let actions = target.shape().actions;
    Ok(batch
        .iter()
        .enumerate()
        .map(|(b, t)| {
            let r = t.reward as f32;
            if t.done {
                return r;
            }
            let row = &q_target[b * actions..(b + 1) * actions];
            let bootstrap = match &q_online {
                Some(q) => row[masked_argmax(&q[b * actions..(b + 1) * actions], &t.next_mask)],
                None => row[masked_argmax(row, &t.next_mask)],
            };
            r + gamma * bootstrap
        })
        .collect())
}

fn masked_argmax(q: &[f32], mask: &ActionMask) -> usize {
    greedy_legal_action(q, mask).expect("mask checked non-empty").index()
}

/// Greedy action over an exact legality mask; ties go to the lowest id.
pub fn greedy_legal_action(q: &[f32], mask: &ActionMask) -> Option<ActionId> {
    let mut best: Option<ActionId> = None;
    for a in mask.allowed() {
        if best.is_none_or(|b| q[a.index()] > q[b.index()]) {
            best = Some(a);
        }
    }
    best
}

/// Fixed-capacity FIFO ring of transitions sampled uniformly with replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            capacity,
            slots: Vec::new(),
            head: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.slots.len() < self.capacity {
            self.slots.push(t);
        } else {
            self.slots[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.slots.split_at(self.head);
        older.iter().chain(newer)
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>, AgentError> {
        if self.slots.len() < batch || self.slots.is_empty() {
            return Err(AgentError::Underfilled {
                len: self.slots.len(),
                batch,
            });
        }
        Ok((0..batch)
            .map(|_| &self.slots[rng.gen_range(0..self.slots.len())])
            .collect())
    }

    /// Storage slots in physical order, with the index of the oldest entry.
    pub fn raw_parts(&self) -> (&[Transition], usize) {
        (&self.slots, self.head)
    }

    /// Rebuilds a buffer from [`ReplayBuffer::raw_parts`] output.
    pub fn from_raw_parts(capacity: usize, slots: Vec<Transition>, head: usize) -> Option<Self> {
        let ok = capacity > 0
            && slots.len() <= capacity
            && if slots.len() < capacity {
                head == 0
            } else {
                head < capacity
            };
        ok.then_some(Self { capacity, slots, head })
    }
}

/// Binary snapshot of a [`ReplayBuffer`], little-endian.
///
/// Header: magic `b"SLSRPLY\0"`, then u32 version, capacity, observation
/// size, length and head. Each slot in physical order follows as: u8 action,
/// u8 flags (bit 0 done, bit 1 observation shared with the previous slot's
/// next observation), u16 next-state mask, f64 reward, the observation unless
/// shared, and the next observation. Observations are sparse: u32 count, then
/// `(u32 index, f32 value)` pairs with strictly increasing indices.
pub mod codec {
    use super::*;
    use crate::env::ACTION_COUNT;

    pub const MAGIC: [u8; 8] = *b"SLSRPLY\0";
    pub const VERSION: u32 = 1;
    const FLAG_DONE: u8 = 1;
    const FLAG_SHARED: u8 = 2;

    #[derive(Debug, Error, PartialEq, Eq)]
    pub enum BufferCodecError {
        #[error("unexpected end of data")]
        Truncated,
        #[error("bad magic bytes")]
        Magic,
        #[error("unsupported version {0}")]
        Version(u32),
        #[error("invalid header")]
        Header,
        #[error("slot {0} is malformed")]
        Slot(usize),
        #[error("{0} trailing bytes")]
        Trailing(usize),
    }

    pub fn encode(buf: &ReplayBuffer) -> Vec<u8> {
        let (slots, head) = buf.raw_parts();
        let obs_size = slots.first().map_or(0, |t| t.obs.len());
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        for w in [
            VERSION,
            buf.capacity() as u32,
            obs_size as u32,
            slots.len() as u32,
            head as u32,
        ] {
            out.extend_from_slice(&w.to_le_bytes());
        }
        let mut prev: Option<&Observation> = None;
        for t in slots {
            let shared = prev.is_some_and(|p| p.shares_storage(&t.obs));
            let flags = if t.done { FLAG_DONE } else { 0 } | if shared { FLAG_SHARED } else { 0 };
            out.push(t.action.index() as u8);
            out.push(flags);
            let mask = t
                .next_mask
                .0
                .iter()
                .enumerate()
                .fold(0u16, |m, (i, on)| m | (u16::from(*on) << i));
            out.extend_from_slice(&mask.to_le_bytes());
            out.extend_from_slice(&t.reward.to_le_bytes());
            if !shared {
                put_sparse(&mut out, &t.obs);
            }
            put_sparse(&mut out, &t.next_obs);
            prev = Some(&t.next_obs);
        }
        out
    }

    fn put_sparse(out: &mut Vec<u8>, obs: &Observation) {
        let nz: Vec<(usize, f32)> = obs
            .as_slice()
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| *v != 0.0)
            .collect();
        out.extend_from_slice(&(nz.len() as u32).to_le_bytes());
        for (i, v) in nz {
            out.extend_from_slice(&(i as u32).to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    struct Reader<'a> {
        bytes: &'a [u8],
        pos: usize,
    }

    impl<'a> Reader<'a> {
        fn take(&mut self, n: usize) -> Result<&'a [u8], BufferCodecError> {
            let end = self.pos.checked_add(n).ok_or(BufferCodecError::Truncated)?;
            let s = self.bytes.get(self.pos..end).ok_or(BufferCodecError::Truncated)?;
            self.pos = end;
            Ok(s)
        }

        fn u32(&mut self) -> Result<u32, BufferCodecError> {
            Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
        }
    }

    fn read_sparse(r: &mut Reader, size: usize, slot: usize) -> Result<Observation, BufferCodecError> {
        let bad = BufferCodecError::Slot(slot);
        let nnz = r.u32()? as usize;
        if nnz > size {
            return Err(bad);
        }
        let mut v = vec![0.0f32; size];
        let mut last: Option<usize> = None;
        for _ in 0..nnz {
            let i = r.u32()? as usize;
            let x = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
            if i >= size || last.is_some_and(|l| i <= l) || x == 0.0 || !x.is_finite() {
                return Err(bad);
            }
            v[i] = x;
            last = Some(i);
        }
        Ok(Observation::from_vec(v))
    }

    pub fn decode(bytes: &[u8]) -> Result<ReplayBuffer, BufferCodecError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(BufferCodecError::Magic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(BufferCodecError::Version(version));
        }
        let capacity = r.u32()? as usize;
        let obs_size = r.u32()? as usize;
        let len = r.u32()? as usize;
        let head = r.u32()? as usize;
        if capacity == 0 || len > capacity || (len > 0 && obs_size == 0) || obs_size > 1 << 20 {
            return Err(BufferCodecError::Header);
        }
        let mut slots: Vec<Transition> = Vec::new();
        for i in 0..len {
            let action = r.take(1)?[0];
            let flags = r.take(1)?[0];
            let mask = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
            let reward = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
            let shared = flags & FLAG_SHARED != 0;
            if flags & !(FLAG_DONE | FLAG_SHARED) != 0
                || mask >> ACTION_COUNT != 0
                || !reward.is_finite()
                || (shared && i == 0)
            {
                return Err(BufferCodecError::Slot(i));
            }
            let action = ActionId::new(action as usize).ok_or(BufferCodecError::Slot(i))?;
            let obs = match slots.last() {
                Some(prev) if shared => prev.next_obs.clone(),
                _ => read_sparse(&mut r, obs_size, i)?,
            };
            let next_obs = read_sparse(&mut r, obs_size, i)?;
            let mut next_mask = ActionMask::none();
            for (b, on) in next_mask.0.iter_mut().enumerate() {
                *on = mask & (1 << b) != 0;
            }
            slots.push(Transition {
                obs,
                action,
                reward,
                next_obs,
                next_mask,
                done: flags & FLAG_DONE != 0,
            });
        }
        let rest = bytes.len() - r.pos;
        if rest != 0 {
            return Err(BufferCodecError::Trailing(rest));
        }
        ReplayBuffer::from_raw_parts(capacity, slots, head).ok_or(BufferCodecError::Header)
    }
}
