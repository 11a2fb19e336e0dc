//! Episode trace files and replay verification.
//!
//! A trace is JSON lines. The first line is a header naming the environment
//! parameters and reset seed; every following line is one step:
//!
//! ```text
//! {"version":1,"seed":7,"env":{"n_chips":5,...}}
//! {"t":1,"player":2,"phase":"choose_pile","action":3,"legal":true,"reward":5.0,"done":false}
//! {"t":2,"player":2,"phase":"choose_chip","action":6,"legal":false,"reward":-5.0,"done":false,"fallback":8}
//! ```
//!
//! `fallback` is present when an illegal action was replaced by a drawn legal
//! move. Replaying re-simulates the episode from the header and checks every
//! field of every record.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionId, Env, EnvError, EnvSpec, StepResult};
use crate::game::{Phase, Player};

pub const TRACE_VERSION: u32 = 1;
const REWARD_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub version: u32,
    pub seed: u64,
    pub env: EnvSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub t: u64,
    pub player: Player,
    pub phase: Phase,
    pub action: ActionId,
    pub legal: bool,
    pub reward: f64,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<ActionId>,
}

impl TraceRecord {
    pub fn from_step(action: ActionId, result: &StepResult) -> Self {
        Self {
            t: result.info.t,
            player: result.info.acting_player,
            phase: result.info.acting_phase,
            action,
            legal: result.info.legal,
            reward: result.reward,
            done: result.done,
            fallback: result.info.fallback.and_then(ActionId::from_move),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported trace version {0}")]
    Version(u32),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// First disagreement between a trace and its re-simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub line: usize,
    pub field: &'static str,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: field `{}` recorded {} but re-simulation gives {}",
            self.line, self.field, self.found, self.expected
        )
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{0}")]
    Mismatch(Mismatch),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplaySummary {
    pub steps: usize,
    pub total_reward: f64,
    pub winner: Option<Player>,
}

impl EpisodeTrace {
    pub fn new(seed: u64, env: EnvSpec) -> Self {
        Self {
            header: TraceHeader {
                version: TRACE_VERSION,
                seed,
                env,
            },
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, action: ActionId, result: &StepResult) {
        self.records.push(TraceRecord::from_step(action, result));
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(TraceError::Empty)?;
        let header: TraceHeader = serde_json::from_str(first).map_err(|e| TraceError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.version != TRACE_VERSION {
            return Err(TraceError::Version(header.version));
        }
        let records = lines
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| TraceError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, records })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, TraceError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Re-simulates the episode and checks every recorded field.
    pub fn replay(&self) -> Result<ReplaySummary, ReplayError> {
        let mut env = Env::new(self.header.env.clone()).map_err(TraceError::from)?;
        env.reset(self.header.seed);
        let mut total_reward = 0.0;
        for (i, rec) in self.records.iter().enumerate() {
            let line = i + 2;
            let mismatch = |field: &'static str, expected: String, found: String| {
                ReplayError::Mismatch(Mismatch {
                    line,
                    field,
                    expected,
                    found,
                })
            };
            if env.is_done() {
                return Err(mismatch("done", "end of trace".into(), "further records".into()));
            }
            if env.current_player() != rec.player {
                return Err(mismatch(
                    "player",
                    env.current_player().to_string(),
                    rec.player.to_string(),
                ));
            }
            if env.phase() != rec.phase {
                return Err(mismatch(
                    "phase",
                    format!("{:?}", env.phase()),
                    format!("{:?}", rec.phase),
                ));
            }
            let result = env.step(rec.action).map_err(TraceError::from)?;
            let expected = TraceRecord::from_step(rec.action, &result);
            if expected.t != rec.t {
                return Err(mismatch("t", expected.t.to_string(), rec.t.to_string()));
            }
            if expected.legal != rec.legal {
                return Err(mismatch("legal", expected.legal.to_string(), rec.legal.to_string()));
            }
            if expected.fallback != rec.fallback {
                return Err(mismatch(
                    "fallback",
                    format!("{:?}", expected.fallback),
                    format!("{:?}", rec.fallback),
                ));
            }
            if (expected.reward - rec.reward).abs() > REWARD_TOLERANCE || !rec.reward.is_finite() {
                return Err(mismatch("reward", expected.reward.to_string(), rec.reward.to_string()));
            }
            if expected.done != rec.done {
                return Err(mismatch("done", expected.done.to_string(), rec.done.to_string()));
            }
            total_reward += result.reward;
        }
        Ok(ReplaySummary {
            steps: self.records.len(),
            total_reward,
            winner: env.state().winner().map(|(w, _)| w),
        })
    }
}
