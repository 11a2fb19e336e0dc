//! JSON request and response shapes.

use serde::{Deserialize, Serialize};
use sls_core::agents::AgentVariant;
use sls_core::game::N_PLAYERS;
use sls_core::{GameState, Move, MoveError, Phase, Player};
use thiserror::Error;

/// Longest per-move delay a session may ask for.
pub const MAX_DELAY_MS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "SeatRepr")]
pub enum SeatRequest {
    Human,
    Random,
    /// A learned policy. Without `checkpoint` the server's default is used.
    Agent {
        variant: Option<AgentVariant>,
        checkpoint: Option<String>,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum SeatKind {
    Human,
    Random,
    Agent,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeatRepr {
    kind: SeatKind,
    #[serde(default)]
    variant: Option<AgentVariant>,
    #[serde(default)]
    checkpoint: Option<String>,
}

impl TryFrom<SeatRepr> for SeatRequest {
    type Error = &'static str;

    fn try_from(r: SeatRepr) -> Result<Self, Self::Error> {
        match (r.kind, r.variant.is_some() || r.checkpoint.is_some()) {
            (SeatKind::Agent, _) => Ok(SeatRequest::Agent {
                variant: r.variant,
                checkpoint: r.checkpoint,
            }),
            (_, true) => Err("only agent seats take a variant or checkpoint"),
            (SeatKind::Human, false) => Ok(SeatRequest::Human),
            (SeatKind::Random, false) => Ok(SeatRequest::Random),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub seats: Vec<SeatRequest>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Allows sessions without a human seat.
    #[serde(default)]
    pub spectator: bool,
    #[serde(default)]
    pub delay_ms: Option<u64>,
    /// Exploration rate for agent seats; 0 plays greedily.
    #[serde(default)]
    pub agent_epsilon: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum RequestError {
    #[error("malformed request: {0}")]
    Json(String),
    #[error("expected {N_PLAYERS} seats, got {0}")]
    SeatCount(usize),
    #[error("a session needs a human seat or spectator: true")]
    NoHuman,
    #[error("delay_ms must be at most {MAX_DELAY_MS}")]
    Delay,
    #[error("agent_epsilon must be within [0, 1]")]
    Epsilon,
}

impl CreateSession {
    pub fn from_json(bytes: &[u8]) -> Result<Self, RequestError> {
        let req: CreateSession = serde_json::from_slice(bytes).map_err(|e| RequestError::Json(e.to_string()))?;
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), RequestError> {
        if self.seats.len() != N_PLAYERS {
            return Err(RequestError::SeatCount(self.seats.len()));
        }
        if !self.spectator && !self.seats.contains(&SeatRequest::Human) {
            return Err(RequestError::NoHuman);
        }
        if self.delay_ms.is_some_and(|d| d > MAX_DELAY_MS) {
            return Err(RequestError::Delay);
        }
        if !(0.0..=1.0).contains(&self.agent_epsilon) {
            return Err(RequestError::Epsilon);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitMove {
    pub seat: Player,
    #[serde(rename = "move")]
    pub mv: Move,
}

impl SubmitMove {
    pub fn from_json(bytes: &[u8]) -> Result<Self, RequestError> {
        serde_json::from_slice(bytes).map_err(|e| RequestError::Json(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeatInfo {
    Human,
    Random,
    Agent { variant: AgentVariant, checkpoint: String },
}

/// Everything a client needs to render the latest version.
#[derive(Clone, Debug, Serialize)]
pub struct SessionView {
    pub id: String,
    pub version: u64,
    pub state: GameState,
    pub current_player: Player,
    pub phase: Phase,
    pub legal_moves: Vec<Move>,
    /// Legal action ids in the environment's numbering.
    pub legal_actions: Vec<usize>,
    pub seats: Vec<SeatInfo>,
    pub done: bool,
    pub winner: Option<Player>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Human,
    Agent,
    Random,
}

/// One applied move and the game events it produced.
#[derive(Clone, Debug, Serialize)]
pub struct MoveRecord {
    pub seat: Player,
    pub actor: Actor,
    pub phase: Phase,
    #[serde(rename = "move")]
    pub mv: Move,
    pub events: Vec<sls_core::GameEvent>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Frame<'a> {
    pub version: u64,
    pub event: Option<&'a MoveRecord>,
    pub state: &'a SessionView,
}

#[derive(Clone, Debug, Serialize)]
pub struct Accepted {
    /// Version created by the submitted move.
    pub version: u64,
    /// Latest version once any immediate agent replies were played.
    pub latest: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum Rejection {
    NotYourTurn {
        current: Player,
    },
    SeatNotHuman {
        seat: Player,
    },
    IllegalMove {
        reason: MoveError,
        message: String,
        legal: Vec<Move>,
    },
    GameOver,
}
