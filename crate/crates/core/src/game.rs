//! Rules engine for the four-player zero-sum So Long Sucker variant.
//!
//! A turn is split into decision phases:
//!
//! ```text
//! ChoosePile --SelectRow--> ChooseChip --SelectColor--> (no capture)  ChooseNextPlayer --SelectColor--> ChoosePile
//!                                                   \-> (forced)      ChoosePile of the deepest chip's owner
//!                                                   \-> (capture)     EliminateChip --SelectColor--> ChoosePile
//! ```
//!
//! Every entry into `ChoosePile` checks the current player's hand. An empty
//! hand eliminates the player and hands the turn back along the pass history,
//! falling back to a seeded uniform draw over the survivors.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

pub const N_PLAYERS: usize = 4;

/// Upper bounds accepted from configuration files; they keep observation and
/// pile sizes bounded for untrusted input.
pub const MAX_CHIPS: u32 = 64;
pub const MAX_ROWS: usize = 64;

/// A seat, which is also a chip color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Player(u8);

impl Player {
    pub const ALL: [Player; N_PLAYERS] = [Player(0), Player(1), Player(2), Player(3)];

    pub fn new(id: usize) -> Option<Self> {
        (id < N_PLAYERS).then_some(Player(id as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for Player {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Player::new(value as usize).ok_or_else(|| format!("player id {value} out of range 0..{N_PLAYERS}"))
    }
}

impl From<Player> for u8 {
    fn from(p: Player) -> u8 {
        p.0
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("n_players must be {N_PLAYERS}, got {0}")]
    Players(usize),
    #[error("n_chips must be in 1..={MAX_CHIPS}, got {0}")]
    Chips(u32),
    #[error("n_rows must be in 1..={MAX_ROWS}, got {0}")]
    Rows(usize),
    #[error("payoff must be at least 1")]
    Payoff,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameConfig {
    pub n_players: usize,
    pub n_chips: u32,
    pub n_rows: usize,
    /// Amount paid to the sole survivor.
    pub payoff: u32,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            n_players: N_PLAYERS,
            n_chips: 5,
            n_rows: 6,
            payoff: 1,
            seed: 0,
        }
    }
}

impl GameConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_players != N_PLAYERS {
            return Err(ConfigError::Players(self.n_players));
        }
        if self.n_chips == 0 || self.n_chips > MAX_CHIPS {
            return Err(ConfigError::Chips(self.n_chips));
        }
        if self.n_rows == 0 || self.n_rows > MAX_ROWS {
            return Err(ConfigError::Rows(self.n_rows));
        }
        if self.payoff == 0 {
            return Err(ConfigError::Payoff);
        }
        Ok(())
    }

    /// Largest possible pile: every chip in the game stacked on one row.
    pub fn max_pile(&self) -> usize {
        self.n_players * self.n_chips as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ChoosePile,
    ChooseChip,
    ChooseNextPlayer,
    EliminateChip,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::ChoosePile,
        Phase::ChooseChip,
        Phase::ChooseNextPlayer,
        Phase::EliminateChip,
    ];

    /// Position in the phase one-hot block.
    pub fn index(self) -> usize {
        match self {
            Phase::ChoosePile => 0,
            Phase::ChooseChip => 1,
            Phase::ChooseNextPlayer => 2,
            Phase::EliminateChip => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    SelectRow(usize),
    SelectColor(Player),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnReason {
    Chosen,
    Deepest,
    Capture,
    Backtrack,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GameEvent {
    ChipPlaced { player: Player, row: usize, color: Player },
    PileCaptured { capturer: Player, row: usize },
    ChipKilled { color: Player, row: usize, prisoners: u32 },
    PileDestroyed { row: usize, color: Player, chips: u32 },
    PlayerEliminated { player: Player },
    TurnAssigned { player: Player, reason: TurnReason },
    GameOver { winner: Player, payoff: Vec<u32> },
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveError {
    #[error("game is over")]
    GameOver,
    #[error("move does not match the current phase")]
    WrongPhase,
    #[error("row {0} out of range")]
    RowOutOfRange(usize),
    #[error("current player holds no chip of color {0}")]
    EmptyHand(Player),
    #[error("color {0} is not present in the captured pile")]
    ColorAbsent(Player),
    #[error("player {0} cannot be chosen to move next")]
    NotEligible(Player),
}

impl MoveError {
    pub fn code(&self) -> &'static str {
        match self {
            MoveError::GameOver => "game_over",
            MoveError::WrongPhase => "wrong_phase",
            MoveError::RowOutOfRange(_) => "row_out_of_range",
            MoveError::EmptyHand(_) => "empty_hand",
            MoveError::ColorAbsent(_) => "color_absent",
            MoveError::NotEligible(_) => "not_eligible",
        }
    }
}

/// Who may move after a non-capturing placement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NextPlayer {
    Choice(Vec<Player>),
    /// All four colors are in the pile: the owner of the bottom chip moves.
    Forced(Player),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("malformed state JSON: {0}")]
    Json(String),
    #[error("board has {found} rows, config says {expected}")]
    RowCount { expected: usize, found: usize },
    #[error("pile at row {row} holds {len} chips, limit {limit}")]
    PileTooLarge { row: usize, len: usize, limit: usize },
    #[error("color {color} accounts for {found} chips, expected {expected}")]
    Conservation { color: Player, found: u64, expected: u64 },
    #[error("phase {phase:?} inconsistent with row markers")]
    PhaseMarkers { phase: Phase },
    #[error("marker row {0} is out of range or empty")]
    MarkerRow(usize),
    #[error("captured pile does not end in a pair of the capturer's color")]
    CapturePile,
    #[error("winner field disagrees with elimination flags")]
    Winner,
    #[error("current player {0} is eliminated in a live game")]
    CurrentEliminated(Player),
    #[error("current player {0} has an empty hand while placing")]
    EmptyHandOnTurn(Player),
    #[error("every player is eliminated")]
    NoSurvivor,
}

/// Authoritative game snapshot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr")]
pub struct GameState {
    config: GameConfig,
    board: Vec<Vec<Player>>,
    holdings: [[u32; N_PLAYERS]; N_PLAYERS],
    dead: [u32; N_PLAYERS],
    eliminated: [bool; N_PLAYERS],
    current_player: Player,
    phase: Phase,
    selected_row: Option<usize>,
    capture_row: Option<usize>,
    /// Row the mover just extended; set iff phase = ChooseNextPlayer.
    pass_row: Option<usize>,
    pass_history: Vec<Player>,
    step_count: u64,
    winner: Option<Player>,
    rng: SeededRng,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRepr {
    config: GameConfig,
    board: Vec<Vec<Player>>,
    holdings: [[u32; N_PLAYERS]; N_PLAYERS],
    dead: [u32; N_PLAYERS],
    eliminated: [bool; N_PLAYERS],
    current_player: Player,
    phase: Phase,
    selected_row: Option<usize>,
    capture_row: Option<usize>,
    pass_row: Option<usize>,
    pass_history: Vec<Player>,
    step_count: u64,
    winner: Option<Player>,
    rng: SeededRng,
}

impl TryFrom<StateRepr> for GameState {
    type Error = StateError;

    fn try_from(r: StateRepr) -> Result<Self, StateError> {
        let state = GameState {
            config: r.config,
            board: r.board,
            holdings: r.holdings,
            dead: r.dead,
            eliminated: r.eliminated,
            current_player: r.current_player,
            phase: r.phase,
            selected_row: r.selected_row,
            capture_row: r.capture_row,
            pass_row: r.pass_row,
            pass_history: r.pass_history,
            step_count: r.step_count,
            winner: r.winner,
            rng: r.rng,
        };
        state.check_invariants()?;
        Ok(state)
    }
}

impl GameState {
    pub fn new(config: GameConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        let starter = Player::ALL[rng.gen_range(0..N_PLAYERS)];
        let mut holdings = [[0; N_PLAYERS]; N_PLAYERS];
        for (i, row) in holdings.iter_mut().enumerate() {
            row[i] = config.n_chips;
        }
        Ok(Self {
            board: vec![Vec::new(); config.n_rows],
            config,
            holdings,
            dead: [0; N_PLAYERS],
            eliminated: [false; N_PLAYERS],
            current_player: starter,
            phase: Phase::ChoosePile,
            selected_row: None,
            capture_row: None,
            pass_row: None,
            pass_history: Vec::new(),
            step_count: 0,
            winner: None,
            rng,
        })
    }

    /// Parses the canonical JSON form and checks every state invariant.
    pub fn from_json(text: &str) -> Result<Self, StateError> {
        serde_json::from_str(text).map_err(|e| StateError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("game state serializes")
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn board(&self) -> &[Vec<Player>] {
        &self.board
    }

    pub fn pile(&self, row: usize) -> &[Player] {
        &self.board[row]
    }

    pub fn holdings(&self) -> &[[u32; N_PLAYERS]; N_PLAYERS] {
        &self.holdings
    }

    pub fn hand(&self, player: Player) -> &[u32; N_PLAYERS] {
        &self.holdings[player.index()]
    }

    pub fn hand_total(&self, player: Player) -> u32 {
        self.holdings[player.index()].iter().sum()
    }

    pub fn dead(&self) -> &[u32; N_PLAYERS] {
        &self.dead
    }

    pub fn eliminated(&self) -> &[bool; N_PLAYERS] {
        &self.eliminated
    }

    pub fn is_eliminated(&self, player: Player) -> bool {
        self.eliminated[player.index()]
    }

    pub fn alive(&self) -> impl Iterator<Item = Player> + '_ {
        Player::ALL.into_iter().filter(|p| !self.is_eliminated(*p))
    }

    pub fn current_player(&self) -> Player {
        self.current_player
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn selected_row(&self) -> Option<usize> {
        self.selected_row
    }

    pub fn capture_row(&self) -> Option<usize> {
        self.capture_row
    }

    pub fn pass_row(&self) -> Option<usize> {
        self.pass_row
    }

    pub fn pass_history(&self) -> &[Player] {
        &self.pass_history
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Counts a rejected decision attempt. Only the environment uses this; the
    /// rules themselves never charge for illegal moves.
    pub fn record_rejected_attempt(&mut self) {
        self.step_count += 1;
    }

    pub fn is_terminal(&self) -> bool {
        self.winner.is_some()
    }

    /// The sole survivor and the payoff vector, once the game is decided.
    pub fn winner(&self) -> Option<(Player, Vec<u32>)> {
        let mut alive = self.alive();
        let first = alive.next()?;
        if alive.next().is_some() {
            return None;
        }
        Some((first, self.payoff_for(first)))
    }

    fn payoff_for(&self, winner: Player) -> Vec<u32> {
        Player::ALL
            .iter()
            .map(|p| if *p == winner { self.config.payoff } else { 0 })
            .collect()
    }

    pub fn next_player_options(&self, row: usize) -> NextPlayer {
        let pile = &self.board[row];
        assert!(!pile.is_empty(), "next player options require a non-empty pile");
        let mut present = [false; N_PLAYERS];
        for chip in pile {
            present[chip.index()] = true;
        }
        if present.iter().all(|p| *p) {
            return NextPlayer::Forced(pile[0]);
        }
        NextPlayer::Choice(
            Player::ALL
                .into_iter()
                .filter(|p| !present[p.index()] && !self.is_eliminated(*p))
                .collect(),
        )
    }

    pub fn legal_moves(&self) -> Vec<Move> {
        if self.is_terminal() {
            return Vec::new();
        }
        match self.phase {
            Phase::ChoosePile => (0..self.config.n_rows).map(Move::SelectRow).collect(),
            Phase::ChooseChip => Player::ALL
                .into_iter()
                .filter(|c| self.hand(self.current_player)[c.index()] > 0)
                .map(Move::SelectColor)
                .collect(),
            Phase::ChooseNextPlayer => match self.pass_row.map(|r| self.next_player_options(r)) {
                Some(NextPlayer::Choice(set)) => set.into_iter().map(Move::SelectColor).collect(),
                _ => Vec::new(),
            },
            Phase::EliminateChip => {
                let pile = &self.board[self.capture_row.expect("capture row set")];
                Player::ALL
                    .into_iter()
                    .filter(|c| pile.contains(c))
                    .map(Move::SelectColor)
                    .collect()
            }
        }
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        self.check_move(mv).is_ok()
    }

    pub fn check_move(&self, mv: Move) -> Result<(), MoveError> {
        if self.is_terminal() {
            return Err(MoveError::GameOver);
        }
        match (self.phase, mv) {
            (Phase::ChoosePile, Move::SelectRow(row)) => {
                if row >= self.config.n_rows {
                    return Err(MoveError::RowOutOfRange(row));
                }
                Ok(())
            }
            (Phase::ChoosePile, Move::SelectColor(_)) | (_, Move::SelectRow(_)) => Err(MoveError::WrongPhase),
            (Phase::ChooseChip, Move::SelectColor(c)) => {
                if self.hand(self.current_player)[c.index()] == 0 {
                    return Err(MoveError::EmptyHand(c));
                }
                Ok(())
            }
            (Phase::ChooseNextPlayer, Move::SelectColor(p)) => {
                let row = self.pass_row.expect("pass row set");
                match self.next_player_options(row) {
                    NextPlayer::Choice(set) if set.contains(&p) => Ok(()),
                    _ => Err(MoveError::NotEligible(p)),
                }
            }
            (Phase::EliminateChip, Move::SelectColor(c)) => {
                let row = self.capture_row.expect("capture row set");
                if !self.board[row].contains(&c) {
                    return Err(MoveError::ColorAbsent(c));
                }
                Ok(())
            }
        }
    }

    /// Functional form of [`GameState::play`].
    pub fn apply(&self, mv: Move) -> Result<(GameState, Vec<GameEvent>), MoveError> {
        let mut next = self.clone();
        let events = next.play(mv)?;
        Ok((next, events))
    }

    /// Applies a move in place. On error the state is untouched.
    pub fn play(&mut self, mv: Move) -> Result<Vec<GameEvent>, MoveError> {
        self.check_move(mv)?;
        let mut events = Vec::new();
        match (self.phase, mv) {
            (Phase::ChoosePile, Move::SelectRow(row)) => {
                self.selected_row = Some(row);
                self.phase = Phase::ChooseChip;
            }
            (Phase::ChooseChip, Move::SelectColor(color)) => self.place_chip(color, &mut events),
            (Phase::ChooseNextPlayer, Move::SelectColor(next)) => {
                self.pass_row = None;
                self.pass_history.push(self.current_player);
                self.begin_turn(next, TurnReason::Chosen, &mut events);
            }
            (Phase::EliminateChip, Move::SelectColor(color)) => self.resolve_capture(color, &mut events),
            _ => unreachable!("check_move rejects phase mismatches"),
        }
        self.step_count += 1;
        Ok(events)
    }

    fn place_chip(&mut self, color: Player, events: &mut Vec<GameEvent>) {
        let row = self.selected_row.take().expect("selected row set");
        let mover = self.current_player;
        self.holdings[mover.index()][color.index()] -= 1;
        let pile = &mut self.board[row];
        pile.push(color);
        events.push(GameEvent::ChipPlaced {
            player: mover,
            row,
            color,
        });

        let n = pile.len();
        if n >= 2 && pile[n - 1] == pile[n - 2] {
            if self.eliminated[color.index()] {
                for chip in pile.drain(..) {
                    self.dead[chip.index()] += 1;
                }
                events.push(GameEvent::PileDestroyed {
                    row,
                    color,
                    chips: n as u32,
                });
                self.begin_turn(mover, TurnReason::Capture, events);
            } else {
                events.push(GameEvent::PileCaptured { capturer: color, row });
                self.current_player = color;
                self.capture_row = Some(row);
                self.phase = Phase::EliminateChip;
                events.push(GameEvent::TurnAssigned {
                    player: color,
                    reason: TurnReason::Capture,
                });
            }
            return;
        }

        match self.next_player_options(row) {
            NextPlayer::Forced(p) if !self.is_eliminated(p) => self.begin_turn(p, TurnReason::Deepest, events),
            NextPlayer::Choice(set) if !set.is_empty() => {
                self.pass_row = Some(row);
                self.phase = Phase::ChooseNextPlayer;
            }
            _ => {
                let (p, reason) = self.backtrack_target();
                self.begin_turn(p, reason, events);
            }
        }
    }

    fn resolve_capture(&mut self, color: Player, events: &mut Vec<GameEvent>) {
        let row = self.capture_row.take().expect("capture row set");
        let capturer = self.current_player;
        let mut pile = std::mem::take(&mut self.board[row]);
        let top = pile.iter().rposition(|c| *c == color).expect("color present");
        pile.remove(top);
        self.dead[color.index()] += 1;
        for chip in &pile {
            self.holdings[capturer.index()][chip.index()] += 1;
        }
        events.push(GameEvent::ChipKilled {
            color,
            row,
            prisoners: pile.len() as u32,
        });
        self.phase = Phase::ChoosePile;
        self.settle_turn(events);
    }

    fn begin_turn(&mut self, player: Player, reason: TurnReason, events: &mut Vec<GameEvent>) {
        self.current_player = player;
        self.phase = Phase::ChoosePile;
        self.selected_row = None;
        self.capture_row = None;
        self.pass_row = None;
        events.push(GameEvent::TurnAssigned { player, reason });
        self.settle_turn(events);
    }

    /// Elimination check at the start of a `ChoosePile` decision.
    fn settle_turn(&mut self, events: &mut Vec<GameEvent>) {
        while self.hand_total(self.current_player) == 0 {
            let out = self.current_player;
            self.eliminated[out.index()] = true;
            events.push(GameEvent::PlayerEliminated { player: out });
            if let Some((winner, payoff)) = self.winner() {
                self.current_player = winner;
                self.winner = Some(winner);
                events.push(GameEvent::GameOver { winner, payoff });
                return;
            }
            let (next, reason) = self.backtrack_target();
            self.current_player = next;
            events.push(GameEvent::TurnAssigned { player: next, reason });
        }
    }

    fn backtrack_target(&mut self) -> (Player, TurnReason) {
        while let Some(p) = self.pass_history.pop() {
            if !self.is_eliminated(p) {
                return (p, TurnReason::Backtrack);
            }
        }
        let alive: Vec<Player> = self.alive().collect();
        let pick = alive[self.rng.gen_range(0..alive.len())];
        (pick, TurnReason::Random)
    }

    /// Checks conservation, pile bounds, phase markers and the survivor rule.
    pub fn check_invariants(&self) -> Result<(), StateError> {
        let cfg = &self.config;
        cfg.validate()?;
        if self.board.len() != cfg.n_rows {
            return Err(StateError::RowCount {
                expected: cfg.n_rows,
                found: self.board.len(),
            });
        }
        let limit = cfg.max_pile();
        for (row, pile) in self.board.iter().enumerate() {
            if pile.len() > limit {
                return Err(StateError::PileTooLarge {
                    row,
                    len: pile.len(),
                    limit,
                });
            }
        }
        for color in Player::ALL {
            let c = color.index();
            let in_hands: u64 = self.holdings.iter().map(|h| u64::from(h[c])).sum();
            let on_board = self.board.iter().flatten().filter(|x| **x == color).count() as u64;
            let found = in_hands + on_board + u64::from(self.dead[c]);
            if found != u64::from(cfg.n_chips) {
                return Err(StateError::Conservation {
                    color,
                    found,
                    expected: u64::from(cfg.n_chips),
                });
            }
        }

        let markers_ok = match self.phase {
            Phase::ChoosePile => self.selected_row.is_none() && self.capture_row.is_none() && self.pass_row.is_none(),
            Phase::ChooseChip => self.selected_row.is_some() && self.capture_row.is_none() && self.pass_row.is_none(),
            Phase::ChooseNextPlayer => {
                self.selected_row.is_none() && self.capture_row.is_none() && self.pass_row.is_some()
            }
            Phase::EliminateChip => {
                self.selected_row.is_none() && self.capture_row.is_some() && self.pass_row.is_none()
            }
        };
        if !markers_ok {
            return Err(StateError::PhaseMarkers { phase: self.phase });
        }
        if let Some(row) = self.selected_row {
            if row >= cfg.n_rows {
                return Err(StateError::MarkerRow(row));
            }
        }
        for row in [self.capture_row, self.pass_row].into_iter().flatten() {
            if row >= cfg.n_rows || self.board[row].is_empty() {
                return Err(StateError::MarkerRow(row));
            }
        }
        if let Some(row) = self.capture_row {
            let pile = &self.board[row];
            let n = pile.len();
            if n < 2 || pile[n - 1] != pile[n - 2] || pile[n - 1] != self.current_player {
                return Err(StateError::CapturePile);
            }
        }

        let alive = self.alive().count();
        if alive == 0 {
            return Err(StateError::NoSurvivor);
        }
        let decided = self.winner().map(|(w, _)| w);
        if decided != self.winner {
            return Err(StateError::Winner);
        }
        if self.winner.is_none() {
            if self.is_eliminated(self.current_player) {
                return Err(StateError::CurrentEliminated(self.current_player));
            }
            if matches!(self.phase, Phase::ChoosePile | Phase::ChooseChip) && self.hand_total(self.current_player) == 0
            {
                return Err(StateError::EmptyHandOnTurn(self.current_player));
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn test_setup(
        &mut self,
        f: impl FnOnce(&mut Vec<Vec<Player>>, &mut [[u32; N_PLAYERS]; N_PLAYERS], &mut [u32; N_PLAYERS]),
    ) {
        f(&mut self.board, &mut self.holdings, &mut self.dead);
    }

    #[cfg(test)]
    pub(crate) fn test_set_turn(&mut self, player: Player, phase: Phase, row: Option<usize>) {
        self.current_player = player;
        self.phase = phase;
        self.selected_row = None;
        self.capture_row = None;
        self.pass_row = None;
        match phase {
            Phase::ChooseChip => self.selected_row = row,
            Phase::ChooseNextPlayer => self.pass_row = row,
            Phase::EliminateChip => self.capture_row = row,
            Phase::ChoosePile => {}
        }
    }

    #[cfg(test)]
    pub(crate) fn test_eliminate(&mut self, player: Player) {
        self.eliminated[player.index()] = true;
        self.winner = self.winner().map(|(w, _)| w);
    }

    #[cfg(test)]
    pub(crate) fn test_push_history(&mut self, player: Player) {
        self.pass_history.push(player);
    }
}

/// Convenience constructor mirroring the operation name used by callers.
pub fn new_game(config: GameConfig) -> Result<GameState, ConfigError> {
    GameState::new(config)
}
