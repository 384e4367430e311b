//! Matches, round-robins, ranking metrics, the cooperation analyzers, and
//! result export.

mod analysis;
mod export;
mod metrics;
mod roundrobin;

pub use analysis::{analyze_fidelity, cooperation_stats, CooperationStats, Fidelity};
pub use export::{
    export_results, load_metadata, load_transcripts, metadata_document, reanalyze, tensor_from_transcripts,
    ExportError, ExportFiles, RunMetadata, METADATA_FILE, RANKINGS_PREFIX, TRANSCRIPTS_FILE,
};
pub use metrics::{
    compute_metrics, mean_payoff_matrix, replicator_dynamics, Metric, MetricError, MetricReport, ReplicatorRun,
    REPLICATOR_STEPS, REPLICATOR_THRESHOLD,
};
pub use roundrobin::{
    match_seed, run_round_robin, run_round_robin_with, worker_count, PayoffTensor, RoundRobin, RoundRobinError,
    WORKERS_ENV,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::{Agent, AgentError, Outcome};
use crate::baselines::{instantiate_baseline, BaselineError, BaselineSpec};
use crate::game::{Game, JointAction, Player};
use crate::signaling::{SpeechAct, CATALOG_VERSION};

/// Name recorded for a seat driven from outside (a person at the service).
pub const HUMAN: &str = "human";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub game: Game,
    /// Row player.
    pub agent_a: BaselineSpec,
    /// Column player.
    pub agent_b: BaselineSpec,
    pub rounds: usize,
    pub talk: bool,
    /// Master seed. The agents' own `seed` fields are ignored; each side
    /// gets a seed derived from this one.
    pub seed: u64,
}

impl MatchConfig {
    pub fn new(game: Game, agent_a: &str, agent_b: &str, rounds: usize, seed: u64) -> Self {
        MatchConfig {
            game,
            agent_a: BaselineSpec::new(agent_a, 0),
            agent_b: BaselineSpec::new(agent_b, 0),
            rounds,
            talk: false,
            seed,
        }
    }

    pub fn with_talk(mut self, talk: bool) -> Self {
        self.talk = talk;
        self
    }

    /// The spec for `seat` with its derived seed filled in.
    pub fn seated_spec(&self, seat: Player) -> BaselineSpec {
        let mut spec = match seat {
            Player::Row => self.agent_a.clone(),
            Player::Col => self.agent_b.clone(),
        };
        spec.seed = derive_seed(&[b"seat", &self.seed.to_le_bytes(), &[seat.index() as u8]]);
        spec
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        if self.rounds == 0 {
            return Err(MatchError::NoRounds);
        }
        Ok(())
    }
}

/// First eight bytes of the SHA-256 of the length-prefixed parts.
pub(crate) fn derive_seed(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub joint: JointAction,
    pub payoffs: (f64, f64),
    /// Acts sent by the row player this round.
    pub messages_a: Vec<SpeechAct>,
    /// Acts sent by the column player this round.
    pub messages_b: Vec<SpeechAct>,
}

impl RoundRecord {
    pub fn outcome(&self) -> Outcome {
        Outcome {
            round: self.round,
            joint: self.joint,
            payoffs: self.payoffs,
        }
    }

    pub fn messages_of(&self, player: Player) -> &[SpeechAct] {
        match player {
            Player::Row => &self.messages_a,
            Player::Col => &self.messages_b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMeta {
    pub config: MatchConfig,
    /// Round-robin trial index, when the match belongs to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    pub agent_version: String,
    pub catalog_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub meta: TranscriptMeta,
    pub records: Vec<RoundRecord>,
}

impl Transcript {
    pub fn new(config: MatchConfig) -> Self {
        Transcript {
            meta: TranscriptMeta {
                config,
                trial: None,
                agent_version: env!("CARGO_PKG_VERSION").to_string(),
                catalog_version: CATALOG_VERSION.to_string(),
            },
            records: Vec::new(),
        }
    }

    pub fn game(&self) -> &Game {
        &self.meta.config.game
    }

    /// Mean per-round payoff of `player`.
    pub fn mean_payoff(&self, player: Player) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let total: f64 = self.records.iter().map(|r| r.outcome().payoff(player)).sum();
        total / self.records.len() as f64
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("transcripts serialize")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("a match needs at least one round")]
    NoRounds,
    #[error(transparent)]
    Agent(#[from] BaselineError),
    #[error("{player:?} player failed in round {round}: {source}")]
    AgentFailure {
        round: usize,
        player: Player,
        source: AgentError,
    },
}

fn failure(round: usize, player: Player) -> impl Fn(AgentError) -> MatchError {
    move |source| MatchError::AgentFailure { round, player, source }
}

/// Plays one round between two agents and returns its record.
pub fn play_round(
    game: &Game,
    round: usize,
    talk: bool,
    a: &mut dyn Agent,
    b: &mut dyn Agent,
) -> Result<RoundRecord, MatchError> {
    let (messages_a, messages_b) = if talk {
        let ma = a.speak(round);
        let mb = b.speak(round);
        a.hear(round, &mb).map_err(failure(round, Player::Row))?;
        b.hear(round, &ma).map_err(failure(round, Player::Col))?;
        (ma, mb)
    } else {
        (Vec::new(), Vec::new())
    };
    let row = a.act(round).map_err(failure(round, Player::Row))?;
    let col = b.act(round).map_err(failure(round, Player::Col))?;
    let joint = JointAction::new(row, col);
    let outcome = Outcome {
        round,
        joint,
        payoffs: game.payoffs(joint),
    };
    a.observe(&outcome).map_err(failure(round, Player::Row))?;
    b.observe(&outcome).map_err(failure(round, Player::Col))?;
    Ok(RoundRecord {
        round,
        joint,
        payoffs: outcome.payoffs,
        messages_a,
        messages_b,
    })
}

/// Runs a full match between two registered agents.
pub fn run_match(cfg: &MatchConfig) -> Result<Transcript, MatchError> {
    cfg.validate()?;
    let mut a = instantiate_baseline(&cfg.seated_spec(Player::Row), &cfg.game, Player::Row, cfg.talk)?;
    let mut b = instantiate_baseline(&cfg.seated_spec(Player::Col), &cfg.game, Player::Col, cfg.talk)?;
    run_match_with(cfg, a.as_mut(), b.as_mut())
}

/// Runs a match with agents supplied by the caller.
pub fn run_match_with(cfg: &MatchConfig, a: &mut dyn Agent, b: &mut dyn Agent) -> Result<Transcript, MatchError> {
    cfg.validate()?;
    let mut transcript = Transcript::new(cfg.clone());
    transcript.records.reserve(cfg.rounds);
    for round in 0..cfg.rounds {
        transcript.records.push(play_round(&cfg.game, round, cfg.talk, a, b)?);
    }
    Ok(transcript)
}
