//! Repeated two-player 2x2 games: the periodic table of ordinal games,
//! exact solvers, aspiration-learning expert agents with cheap talk,
//! classical comparison agents, and a tournament engine.
//!
//! Game analysis is generic over the payoff scalar (`f64`, `f32` or exact
//! rationals); the agents and tournaments run on `f64` games.

pub mod agent;
pub mod baselines;
pub mod experts;
pub mod game;
pub mod meta;
pub mod model;
pub mod scalar;
pub mod session;
pub mod signaling;
pub mod solve;
pub mod table;
pub mod tournament;

use num_rational::Ratio;

pub use agent::{Agent, AgentError, Outcome};
pub use baselines::{instantiate_baseline, BaselineError, BaselineSpec, REGISTRY};
pub use game::{Action, Game, GameError, JointAction, JointPlan, Player};
pub use meta::{MetaAgent, MetaConfig, Variant};
pub use scalar::Scalar;
pub use session::{Session, SessionConfig, SessionError};
pub use table::enumerate_periodic_table;
pub use tournament::{run_match, MatchConfig, Transcript};

/// Exact rational payoffs.
pub type Rational = Ratio<i64>;
pub type GameF64 = Game<f64>;
pub type GameF32 = Game<f32>;
pub type RationalGame = Game<Rational>;
