//! Core of the So Long Sucker reinforcement-learning framework.

pub mod agents;
pub mod checkpoint;
pub mod config;
pub mod curves;
pub mod env;
pub mod game;
pub mod neural;
pub mod rng;
pub mod trace;
pub mod training;

pub use game::{new_game, GameConfig, GameEvent, GameState, Move, MoveError, NextPlayer, Phase, Player, TurnReason};
pub use rng::SeededRng;
