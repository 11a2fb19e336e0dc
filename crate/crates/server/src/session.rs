//! One task per session owns the game state; everyone else reads snapshots.

use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sls_core::agents::{greedy_legal_action, AgentVariant};
use sls_core::env::{action_mask, encode};
use sls_core::neural::Network;
use sls_core::{GameState, Move, Player};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::time::{sleep_until, Instant};

use crate::api::{Accepted, Actor, Frame, MoveRecord, Rejection, SeatInfo, SessionView};

const COMMAND_QUEUE: usize = 64;
const FRAME_BUFFER: usize = 1024;

#[derive(Clone, Debug)]
pub enum Seat {
    Human,
    Random,
    Agent {
        variant: AgentVariant,
        network: Arc<Network>,
        checkpoint: String,
    },
}

impl Seat {
    fn info(&self) -> SeatInfo {
        match self {
            Seat::Human => SeatInfo::Human,
            Seat::Random => SeatInfo::Random,
            Seat::Agent {
                variant, checkpoint, ..
            } => SeatInfo::Agent {
                variant: *variant,
                checkpoint: checkpoint.clone(),
            },
        }
    }
}

pub struct SessionSetup {
    pub id: String,
    pub state: GameState,
    pub seats: Vec<Seat>,
    pub seed: u64,
    pub delay: Duration,
    pub agent_epsilon: f64,
}

/// A frame as sent to subscribers.
#[derive(Debug)]
pub struct Published {
    pub version: u64,
    pub json: String,
}

enum Command {
    Submit {
        seat: Player,
        mv: Move,
        reply: oneshot::Sender<Result<Accepted, Rejection>>,
    },
}

#[derive(Clone)]
pub struct SessionHandle {
    commands: mpsc::Sender<Command>,
    snapshot: watch::Receiver<Arc<SessionView>>,
    frames: broadcast::Sender<Arc<Published>>,
}

impl SessionHandle {
    /// Builds the session, plays any opening agent turns when there is no
    /// delay, and starts its task.
    pub fn spawn(setup: SessionSetup) -> Self {
        let (frames, _) = broadcast::channel(FRAME_BUFFER);
        let mut actor = SessionActor {
            id: setup.id,
            state: setup.state,
            seats: setup.seats,
            rng: ChaCha8Rng::seed_from_u64(setup.seed),
            delay: setup.delay,
            agent_epsilon: setup.agent_epsilon,
            version: 1,
            next_agent_move: None,
            snapshot: None,
            frames: frames.clone(),
        };
        let (tx, rx) = watch::channel(Arc::new(actor.view()));
        actor.snapshot = Some(tx);
        if actor.delay.is_zero() {
            actor.play_agents();
        }
        let (commands, queue) = mpsc::channel(COMMAND_QUEUE);
        tokio::spawn(actor.run(queue));
        SessionHandle {
            commands,
            snapshot: rx,
            frames,
        }
    }

    pub fn snapshot(&self) -> Arc<SessionView> {
        self.snapshot.borrow().clone()
    }

    /// Current snapshot plus a receiver for every later frame. Frames at or
    /// below the snapshot version may still arrive and must be skipped.
    pub fn subscribe(&self) -> (Arc<SessionView>, broadcast::Receiver<Arc<Published>>) {
        let rx = self.frames.subscribe();
        (self.snapshot(), rx)
    }

    pub async fn submit(&self, seat: Player, mv: Move) -> Result<Accepted, Rejection> {
        let (reply, answer) = oneshot::channel();
        if self.commands.send(Command::Submit { seat, mv, reply }).await.is_err() {
            return Err(Rejection::GameOver);
        }
        answer.await.unwrap_or(Err(Rejection::GameOver))
    }
}

struct SessionActor {
    id: String,
    state: GameState,
    seats: Vec<Seat>,
    rng: ChaCha8Rng,
    delay: Duration,
    agent_epsilon: f64,
    version: u64,
    next_agent_move: Option<Instant>,
    snapshot: Option<watch::Sender<Arc<SessionView>>>,
    frames: broadcast::Sender<Arc<Published>>,
}

impl SessionActor {
    async fn run(mut self, mut queue: mpsc::Receiver<Command>) {
        loop {
            if self.automated_turn() {
                let due = *self.next_agent_move.get_or_insert_with(|| Instant::now() + self.delay);
                tokio::select! {
                    biased;
                    cmd = queue.recv() => match cmd {
                        Some(cmd) => self.handle(cmd),
                        None => return,
                    },
                    _ = sleep_until(due) => {
                        self.next_agent_move = None;
                        self.play_automated();
                    }
                }
            } else {
                match queue.recv().await {
                    Some(cmd) => self.handle(cmd),
                    None => return,
                }
            }
        }
    }

    fn handle(&mut self, cmd: Command) {
        let Command::Submit { seat, mv, reply } = cmd;
        let _ = reply.send(self.submit(seat, mv));
    }

    fn submit(&mut self, seat: Player, mv: Move) -> Result<Accepted, Rejection> {
        if self.state.is_terminal() {
            return Err(Rejection::GameOver);
        }
        if !matches!(self.seats[seat.index()], Seat::Human) {
            return Err(Rejection::SeatNotHuman { seat });
        }
        let current = self.state.current_player();
        if seat != current {
            return Err(Rejection::NotYourTurn { current });
        }
        if let Err(reason) = self.state.check_move(mv) {
            return Err(Rejection::IllegalMove {
                reason,
                message: reason.to_string(),
                legal: self.state.legal_moves(),
            });
        }
        self.apply(seat, Actor::Human, mv);
        let version = self.version;
        if self.delay.is_zero() {
            self.play_agents();
        }
        Ok(Accepted {
            version,
            latest: self.version,
        })
    }

    fn automated_turn(&self) -> bool {
        !self.state.is_terminal() && !matches!(self.seats[self.state.current_player().index()], Seat::Human)
    }

    fn play_agents(&mut self) {
        while self.automated_turn() {
            self.play_automated();
        }
    }

    fn play_automated(&mut self) {
        let seat = self.state.current_player();
        let (actor, mv) = match self.seats[seat.index()].clone() {
            Seat::Human => return,
            Seat::Random => (Actor::Random, self.random_move()),
            Seat::Agent { network, .. } => {
                if self.agent_epsilon > 0.0 && self.rng.gen::<f64>() < self.agent_epsilon {
                    (Actor::Agent, self.random_move())
                } else {
                    let q = network
                        .q_values(encode(&self.state).as_slice())
                        .expect("network input checked at session creation");
                    let action =
                        greedy_legal_action(&q, &action_mask(&self.state)).expect("live state has a legal move");
                    (Actor::Agent, action.to_move())
                }
            }
        };
        self.apply(seat, actor, mv);
    }

    fn random_move(&mut self) -> Move {
        let moves = self.state.legal_moves();
        moves[self.rng.gen_range(0..moves.len())]
    }

    fn apply(&mut self, seat: Player, actor: Actor, mv: Move) {
        let phase = self.state.phase();
        let events = self.state.play(mv).expect("move validated before applying");
        self.version += 1;
        let record = MoveRecord {
            seat,
            actor,
            phase,
            mv,
            events,
        };
        let view = Arc::new(self.view());
        let json = serde_json::to_string(&Frame {
            version: self.version,
            event: Some(&record),
            state: &view,
        })
        .expect("frames serialize");
        let published = Arc::new(Published {
            version: self.version,
            json,
        });
        // The snapshot must move first so a new subscriber never misses a frame.
        if let Some(tx) = &self.snapshot {
            tx.send_replace(view);
        }
        let _ = self.frames.send(published);
    }

    fn view(&self) -> SessionView {
        let state = &self.state;
        let legal_moves = state.legal_moves();
        SessionView {
            id: self.id.clone(),
            version: self.version,
            state: state.clone(),
            current_player: state.current_player(),
            phase: state.phase(),
            legal_actions: action_mask(state).allowed().map(|a| a.index()).collect(),
            legal_moves,
            seats: self.seats.iter().map(Seat::info).collect(),
            done: state.is_terminal(),
            winner: state.winner().map(|(w, _)| w),
        }
    }
}
