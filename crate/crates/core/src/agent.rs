//! The interface every player implements, and the per-round protocol.
//!
//! Each round runs in this order: both sides `speak`, both sides `hear` the
//! other's acts, both sides `act` simultaneously, then both `observe` the
//! outcome. `speak`/`hear` are skipped entirely when talk is off.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Action, JointAction, Player};
use crate::signaling::{SignalError, SpeechAct};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("protocol violation: expected round {expected}, got {got}")]
    ProtocolViolation { expected: usize, got: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Realized result of one round, shared with both players.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub round: usize,
    pub joint: JointAction,
    pub payoffs: (f64, f64),
}

impl Outcome {
    pub fn payoff(&self, player: Player) -> f64 {
        match player {
            Player::Row => self.payoffs.0,
            Player::Col => self.payoffs.1,
        }
    }

    pub fn action_of(&self, player: Player) -> Action {
        self.joint.action_of(player)
    }
}

pub trait Agent: Send {
    /// Acts sent at the start of `round`, before the partner's are seen.
    fn speak(&mut self, _round: usize) -> Vec<SpeechAct> {
        Vec::new()
    }

    /// The partner's acts for `round`.
    fn hear(&mut self, _round: usize, _acts: &[SpeechAct]) -> Result<(), AgentError> {
        Ok(())
    }

    fn act(&mut self, round: usize) -> Result<Action, AgentError>;

    fn observe(&mut self, outcome: &Outcome) -> Result<(), AgentError>;
}

/// Tracks the expected round index for agents that enforce ordering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundClock {
    next: usize,
}

impl RoundClock {
    pub fn next_round(&self) -> usize {
        self.next
    }

    pub fn check(&self, round: usize) -> Result<(), AgentError> {
        if round == self.next {
            Ok(())
        } else {
            Err(AgentError::ProtocolViolation {
                expected: self.next,
                got: round,
            })
        }
    }

    pub fn advance(&mut self, round: usize) -> Result<(), AgentError> {
        self.check(round)?;
        self.next += 1;
        Ok(())
    }
}
