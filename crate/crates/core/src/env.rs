//! MDP wrapper around the rules engine.
//!
//! Observation layout (bottom-first depth, `P` players, `M` = max pile):
//!
//! ```text
//! [ board  rows·M·P : (row, depth, color) one-hot          ]
//! [ holdings  P·P   : chips of color j in hand i, raw count ]
//! [ eliminated  P   : 0/1 per player                        ]
//! [ current     P   : one-hot, all zero once decided        ]
//! [ phase       4   : ChoosePile, ChooseChip, ChooseNextPlayer, EliminateChip ]
//! [ step        1   : raw episode step count                ]
//! ```
//!
//! Actions 0..=5 pick a row, 6..=9 a player/color.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{ConfigError, GameConfig, GameEvent, GameState, Move, MoveError, Phase, Player, N_PLAYERS};
use crate::rng::SeededRng;

pub const ACTION_COUNT: usize = 10;
pub const PILE_ACTIONS: usize = 6;
const PHASES: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid environment parameter: {0}")]
    Spec(&'static str),
    #[error("episode is finished; call reset")]
    EpisodeFinished,
}

/// What happens to the game after an illegal action. Both variants charge
/// `-reward_cap` and advance the step counter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IllegalPolicy {
    /// The decision is consumed: a uniformly drawn legal move is applied for
    /// the acting player.
    #[default]
    RandomLegal,
    /// The game is left untouched and the same player decides again.
    Retry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSpec {
    pub n_chips: u32,
    pub n_rows: usize,
    pub payoff: u32,
    /// Reward magnitude for a legal move before decay, and the illegal penalty.
    pub reward_cap: f64,
    pub decay: f64,
    /// Episode safety bound.
    pub max_steps: u64,
    pub on_illegal: IllegalPolicy,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self {
            n_chips: 5,
            n_rows: 6,
            payoff: 1,
            reward_cap: 5.0,
            decay: 0.3,
            max_steps: 500,
            on_illegal: IllegalPolicy::RandomLegal,
        }
    }
}

impl EnvSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        self.game_config(0).validate()?;
        if self.n_rows > PILE_ACTIONS {
            return Err(EnvError::Spec("n_rows cannot exceed the 6 pile actions"));
        }
        if !(self.reward_cap.is_finite() && self.reward_cap > 0.0) {
            return Err(EnvError::Spec("reward_cap must be positive"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(EnvError::Spec("decay must be in (0, 1]"));
        }
        if self.max_steps == 0 {
            return Err(EnvError::Spec("max_steps must be positive"));
        }
        Ok(())
    }

    pub fn game_config(&self, seed: u64) -> GameConfig {
        GameConfig {
            n_players: N_PLAYERS,
            n_chips: self.n_chips,
            n_rows: self.n_rows,
            payoff: self.payoff,
            seed,
        }
    }

    pub fn layout(&self) -> ObsLayout {
        ObsLayout::new(self.n_rows, self.n_chips)
    }

    pub fn obs_size(&self) -> usize {
        self.layout().size
    }

    pub fn action_count(&self) -> usize {
        ACTION_COUNT
    }

    pub fn reward_params(&self) -> RewardParams {
        RewardParams {
            cap: self.reward_cap,
            decay: self.decay,
            n_chips: self.n_chips,
        }
    }
}

/// Offsets of each block inside an observation vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsLayout {
    pub n_rows: usize,
    pub max_pile: usize,
    pub holdings: usize,
    pub eliminated: usize,
    pub current: usize,
    pub phase: usize,
    pub step: usize,
    pub size: usize,
}

impl ObsLayout {
    pub fn new(n_rows: usize, n_chips: u32) -> Self {
        let max_pile = N_PLAYERS * n_chips as usize;
        let holdings = n_rows * N_PLAYERS * max_pile;
        let eliminated = holdings + N_PLAYERS * N_PLAYERS;
        let current = eliminated + N_PLAYERS;
        let phase = current + N_PLAYERS;
        let step = phase + PHASES;
        Self {
            n_rows,
            max_pile,
            holdings,
            eliminated,
            current,
            phase,
            step,
            size: step + 1,
        }
    }

    pub fn board_index(&self, row: usize, depth: usize, color: Player) -> usize {
        (row * self.max_pile + depth) * N_PLAYERS + color.index()
    }
}

/// Flat observation vector; cheap to clone.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation(Arc<[f32]>);

impl Observation {
    pub fn from_vec(values: Vec<f32>) -> Self {
        Self(values.into())
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when both handles point at the same storage.
    pub fn shares_storage(&self, other: &Observation) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

pub fn encode(state: &GameState) -> Observation {
    let cfg = state.config();
    let layout = ObsLayout::new(cfg.n_rows, cfg.n_chips);
    let mut v = vec![0.0f32; layout.size];
    for (row, pile) in state.board().iter().enumerate() {
        for (depth, chip) in pile.iter().enumerate() {
            v[layout.board_index(row, depth, *chip)] = 1.0;
        }
    }
    for (i, hand) in state.holdings().iter().enumerate() {
        for (j, n) in hand.iter().enumerate() {
            v[layout.holdings + i * N_PLAYERS + j] = *n as f32;
        }
    }
    for (i, out) in state.eliminated().iter().enumerate() {
        if *out {
            v[layout.eliminated + i] = 1.0;
        }
    }
    if !state.is_terminal() {
        v[layout.current + state.current_player().index()] = 1.0;
    }
    v[layout.phase + state.phase().index()] = 1.0;
    v[layout.step] = state.step_count() as f32;
    Observation::from_vec(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionGroup {
    Pile,
    Player,
}

impl ActionGroup {
    pub fn for_phase(phase: Phase) -> Self {
        match phase {
            Phase::ChoosePile => ActionGroup::Pile,
            _ => ActionGroup::Player,
        }
    }

    pub fn ids(self) -> std::ops::Range<u8> {
        match self {
            ActionGroup::Pile => 0..PILE_ACTIONS as u8,
            ActionGroup::Player => PILE_ACTIONS as u8..ACTION_COUNT as u8,
        }
    }

    pub fn mask(self) -> ActionMask {
        let mut m = ActionMask::none();
        for id in self.ids() {
            m.0[id as usize] = true;
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ActionId(u8);

impl ActionId {
    pub fn new(id: usize) -> Option<Self> {
        (id < ACTION_COUNT).then_some(ActionId(id as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn group(self) -> ActionGroup {
        if (self.0 as usize) < PILE_ACTIONS {
            ActionGroup::Pile
        } else {
            ActionGroup::Player
        }
    }

    pub fn to_move(self) -> Move {
        match self.group() {
            ActionGroup::Pile => Move::SelectRow(self.index()),
            ActionGroup::Player => Move::SelectColor(Player::ALL[self.index() - PILE_ACTIONS]),
        }
    }

    /// `None` for rows beyond the pile action range.
    pub fn from_move(mv: Move) -> Option<Self> {
        match mv {
            Move::SelectRow(r) if r < PILE_ACTIONS => Some(ActionId(r as u8)),
            Move::SelectRow(_) => None,
            Move::SelectColor(p) => Some(ActionId((PILE_ACTIONS + p.index()) as u8)),
        }
    }
}

impl TryFrom<u8> for ActionId {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        ActionId::new(value as usize).ok_or_else(|| format!("action id {value} out of range 0..{ACTION_COUNT}"))
    }
}

impl From<ActionId> for u8 {
    fn from(a: ActionId) -> u8 {
        a.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionMask(pub [bool; ACTION_COUNT]);

impl ActionMask {
    pub fn none() -> Self {
        Self([false; ACTION_COUNT])
    }

    pub fn allows(&self, action: ActionId) -> bool {
        self.0[action.index()]
    }

    pub fn allowed(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..ACTION_COUNT).filter(|i| self.0[*i]).map(|i| ActionId(i as u8))
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Full-legality mask: exactly the actions `apply` would accept.
pub fn action_mask(state: &GameState) -> ActionMask {
    let mut mask = ActionMask::none();
    for mv in state.legal_moves() {
        if let Some(id) = ActionId::from_move(mv) {
            mask.0[id.index()] = true;
        }
    }
    mask
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardParams {
    pub cap: f64,
    pub decay: f64,
    pub n_chips: u32,
}

impl Default for RewardParams {
    fn default() -> Self {
        EnvSpec::default().reward_params()
    }
}

/// Step-decayed reward: `min(cap, cap / ((decay / n_chips) * t))` for a legal
/// move at episode step `t`, `-cap` for an illegal one.
///
/// # Panics
///
/// If `legal` and `t == 0`; steps are counted from 1.
pub fn shaped_reward(t: u64, legal: bool, params: &RewardParams) -> f64 {
    if !legal {
        return -params.cap;
    }
    assert!(t >= 1, "legal rewards are defined for t >= 1");
    let scale = params.decay / f64::from(params.n_chips);
    params.cap.min(params.cap / (scale * t as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepInfo {
    pub legal: bool,
    pub error: Option<MoveError>,
    /// Move applied in place of an illegal action.
    pub fallback: Option<Move>,
    pub events: Vec<GameEvent>,
    pub acting_player: Player,
    pub acting_phase: Phase,
    /// Legality mask of the state after the step.
    pub phase_mask: ActionMask,
    /// Episode ended on the step bound rather than a decided game.
    pub truncated: bool,
    pub t: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reset {
    pub observation: Observation,
    pub player: Player,
    pub mask: ActionMask,
}

/// Single-owner episode driver.
#[derive(Clone, Debug)]
pub struct Env {
    spec: EnvSpec,
    state: GameState,
    done: bool,
    fallback_rng: SeededRng,
}

const FALLBACK_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

impl Env {
    pub fn new(spec: EnvSpec) -> Result<Self, EnvError> {
        spec.validate()?;
        let state = GameState::new(spec.game_config(0))?;
        Ok(Self {
            spec,
            state,
            done: false,
            fallback_rng: SeededRng::new(FALLBACK_STREAM),
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn current_player(&self) -> Player {
        self.state.current_player()
    }

    pub fn phase(&self) -> Phase {
        self.state.phase()
    }

    pub fn observation(&self) -> Observation {
        encode(&self.state)
    }

    pub fn reset(&mut self, seed: u64) -> Reset {
        self.state = GameState::new(self.spec.game_config(seed)).expect("spec validated at construction");
        self.done = false;
        self.fallback_rng = SeededRng::new(seed ^ FALLBACK_STREAM);
        Reset {
            observation: self.observation(),
            player: self.state.current_player(),
            mask: action_mask(&self.state),
        }
    }

    pub fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let acting_player = self.state.current_player();
        let acting_phase = self.state.phase();
        let (legal, error, fallback, events) = match self.state.play(action.to_move()) {
            Ok(events) => (true, None, None, events),
            Err(e) => match self.spec.on_illegal {
                IllegalPolicy::Retry => {
                    self.state.record_rejected_attempt();
                    (false, Some(e), None, Vec::new())
                }
                IllegalPolicy::RandomLegal => {
                    let moves = self.state.legal_moves();
                    let mv = moves[self.fallback_rng.gen_range(0..moves.len())];
                    let events = self.state.play(mv).expect("drawn from legal moves");
                    (false, Some(e), Some(mv), events)
                }
            },
        };
        let t = self.state.step_count();
        let reward = shaped_reward(t, legal, &self.spec.reward_params());
        let decided = self.state.is_terminal();
        let truncated = !decided && t >= self.spec.max_steps;
        self.done = decided || truncated;
        Ok(StepResult {
            observation: self.observation(),
            reward,
            done: self.done,
            info: StepInfo {
                legal,
                error,
                fallback,
                events,
                acting_player,
                acting_phase,
                phase_mask: action_mask(&self.state),
                truncated,
                t,
            },
        })
    }
}
