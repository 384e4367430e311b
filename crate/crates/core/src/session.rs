//! A repeated game between an outside player (seated as row) and a
//! registered agent, advanced one request at a time.
//!
//! Talk-enabled rounds go `AwaitingMessages -> AwaitingAction ->
//! RoundComplete`; silent rounds skip the message phase. The next round
//! starts as soon as an outcome is reported, so `RoundComplete` is only
//! ever returned inside an outcome, never held by a live session.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, Outcome};
use crate::baselines::{instantiate_baseline, BaselineError, BaselineSpec};
use crate::game::{Action, Game, JointAction, Player};
use crate::signaling::{catalog, Catalog, SpeechAct, MAX_ACTS_PER_ROUND};
use crate::tournament::{MatchConfig, MatchError, RoundRecord, Transcript, HUMAN};

/// The outside player's seat.
pub const HUMAN_SEAT: Player = Player::Row;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingMessages,
    AwaitingAction,
    RoundComplete,
    Finished,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("request not allowed in phase {actual:?}")]
    WrongPhase { actual: Phase },
    #[error("this session has talk disabled")]
    TalkDisabled,
    #[error("invalid speech act: {0}")]
    InvalidAct(String),
    #[error("invalid action {0}; expected 0 or 1")]
    InvalidAction(i64),
    #[error(transparent)]
    AgentFailure(#[from] MatchError),
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownAgent(_) => "unknown_agent",
            SessionError::InvalidGame(_) => "invalid_game",
            SessionError::WrongPhase { .. } => "wrong_phase",
            SessionError::TalkDisabled => "talk_disabled",
            SessionError::InvalidAct(_) => "invalid_act",
            SessionError::InvalidAction(_) => "invalid_action",
            SessionError::AgentFailure(_) => "agent_failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub game: Game,
    pub agent: BaselineSpec,
    pub rounds: usize,
    pub talk: bool,
    pub seed: u64,
}

/// What the outside player is shown when the session starts. Carries no
/// trace of which agent sits across the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerView {
    /// Always `"row"`: the player picks rows of the matrices.
    pub seat: String,
    pub row_payoffs: [[f64; 2]; 2],
    pub col_payoffs: [[f64; 2]; 2],
    pub rounds: usize,
    pub talk: bool,
    /// The speech-act menu, present only when talk is on.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub menu: Option<Catalog>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub joint: JointAction,
    /// `(player, partner)`.
    pub payoffs: (f64, f64),
    /// Running totals `(player, partner)` including this round.
    pub totals: (f64, f64),
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    /// Index of the round being played (equals `rounds` when finished).
    pub round: usize,
    pub rounds: usize,
    pub talk: bool,
    pub totals: (f64, f64),
    /// The partner's acts for the current round, once exchanged.
    pub partner_messages: Vec<SpeechAct>,
    pub last_outcome: Option<RoundOutcome>,
}

pub struct Session {
    config: MatchConfig,
    agent: Box<dyn Agent>,
    phase: Phase,
    round: usize,
    totals: (f64, f64),
    human_messages: Vec<SpeechAct>,
    agent_messages: Vec<SpeechAct>,
    last_outcome: Option<RoundOutcome>,
    transcript: Transcript,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("phase", &self.phase)
            .field("round", &self.round)
            .finish_non_exhaustive()
    }
}

fn check_game(game: &Game) -> Result<(), SessionError> {
    Game::new(game.row_payoffs, game.col_payoffs)
        .map(|_| ())
        .map_err(|e| SessionError::InvalidGame(e.to_string()))
}

fn agent_error(e: BaselineError) -> SessionError {
    match e {
        BaselineError::UnknownName(n) | BaselineError::NotImplemented(n) => SessionError::UnknownAgent(n),
        other => SessionError::AgentFailure(MatchError::Agent(other)),
    }
}

/// Parses acts as submitted by a client: each needs a catalog id and, for
/// proposals, a well-formed plan payload. At most three per round.
pub fn validate_acts(acts: &[SpeechAct]) -> Result<(), SessionError> {
    if acts.len() > MAX_ACTS_PER_ROUND {
        return Err(SessionError::InvalidAct(format!(
            "at most {MAX_ACTS_PER_ROUND} acts per round, got {}",
            acts.len()
        )));
    }
    for act in acts {
        if !act.id.is_proposal() && !act.cells.is_empty() {
            return Err(SessionError::InvalidAct(format!(
                "act {} takes no payload",
                act.id.id()
            )));
        }
        act.plan().map_err(|e| SessionError::InvalidAct(e.to_string()))?;
    }
    Ok(())
}

impl Session {
    pub fn new(cfg: SessionConfig) -> Result<Session, SessionError> {
        check_game(&cfg.game)?;
        if cfg.rounds == 0 {
            return Err(SessionError::InvalidGame("rounds must be at least 1".into()));
        }
        let config = MatchConfig {
            game: cfg.game,
            agent_a: BaselineSpec::new(HUMAN, 0),
            agent_b: cfg.agent,
            rounds: cfg.rounds,
            talk: cfg.talk,
            seed: cfg.seed,
        };
        let agent_seat = HUMAN_SEAT.other();
        let agent = instantiate_baseline(&config.seated_spec(agent_seat), &config.game, agent_seat, config.talk)
            .map_err(agent_error)?;
        Ok(Session {
            phase: if config.talk {
                Phase::AwaitingMessages
            } else {
                Phase::AwaitingAction
            },
            transcript: Transcript::new(config.clone()),
            config,
            agent,
            round: 0,
            totals: (0.0, 0.0),
            human_messages: Vec::new(),
            agent_messages: Vec::new(),
            last_outcome: None,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    pub fn view(&self) -> PlayerView {
        let g = &self.config.game;
        PlayerView {
            seat: "row".to_string(),
            row_payoffs: g.row_payoffs,
            col_payoffs: g.col_payoffs,
            rounds: self.config.rounds,
            talk: self.config.talk,
            menu: self.config.talk.then(catalog),
        }
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            phase: self.phase,
            round: self.round,
            rounds: self.config.rounds,
            talk: self.config.talk,
            totals: self.totals,
            partner_messages: self.agent_messages.clone(),
            last_outcome: self.last_outcome.clone(),
        }
    }

    /// The transcript so far; complete once the session is finished.
    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Exchanges this round's messages. The agent's acts are fixed before
    /// it hears the player's.
    pub fn submit_messages(&mut self, acts: Vec<SpeechAct>) -> Result<Vec<SpeechAct>, SessionError> {
        if !self.config.talk {
            return Err(SessionError::TalkDisabled);
        }
        if self.phase != Phase::AwaitingMessages {
            return Err(SessionError::WrongPhase { actual: self.phase });
        }
        validate_acts(&acts)?;
        let round = self.round;
        let reply = self.agent.speak(round);
        self.agent
            .hear(round, &acts)
            .map_err(|source| MatchError::AgentFailure {
                round,
                player: HUMAN_SEAT.other(),
                source,
            })?;
        self.human_messages = acts;
        self.agent_messages = reply.clone();
        self.phase = Phase::AwaitingAction;
        Ok(reply)
    }

    pub fn submit_action(&mut self, action: i64) -> Result<RoundOutcome, SessionError> {
        let ready = match self.phase {
            Phase::AwaitingAction => true,
            Phase::AwaitingMessages => !self.config.talk,
            _ => false,
        };
        if !ready {
            return Err(SessionError::WrongPhase { actual: self.phase });
        }
        let mine = Action::new(action).map_err(|_| SessionError::InvalidAction(action))?;
        let round = self.round;
        let fail = |source| MatchError::AgentFailure {
            round,
            player: HUMAN_SEAT.other(),
            source,
        };
        let theirs = self.agent.act(round).map_err(fail)?;
        let joint = JointAction::from_seat(HUMAN_SEAT, mine, theirs);
        let outcome = Outcome {
            round,
            joint,
            payoffs: self.config.game.payoffs(joint),
        };
        self.agent.observe(&outcome).map_err(fail)?;

        let mine_pay = outcome.payoff(HUMAN_SEAT);
        let theirs_pay = outcome.payoff(HUMAN_SEAT.other());
        self.totals.0 += mine_pay;
        self.totals.1 += theirs_pay;
        self.transcript.records.push(RoundRecord {
            round,
            joint,
            payoffs: outcome.payoffs,
            messages_a: std::mem::take(&mut self.human_messages),
            messages_b: std::mem::take(&mut self.agent_messages),
        });
        self.round += 1;
        let next = if self.round >= self.config.rounds {
            Phase::Finished
        } else if self.config.talk {
            Phase::AwaitingMessages
        } else {
            Phase::AwaitingAction
        };
        let result = RoundOutcome {
            round,
            joint,
            payoffs: (mine_pay, theirs_pay),
            totals: self.totals,
            phase: Phase::RoundComplete,
        };
        self.phase = next;
        self.last_outcome = Some(result.clone());
        Ok(result)
    }
}

/// Replays a session transcript against a fresh copy of its agent and
/// checks that the agent sends the same acts and takes the same actions.
pub fn replay_matches(transcript: &Transcript) -> Result<bool, SessionError> {
    let cfg = &transcript.meta.config;
    let seat = HUMAN_SEAT.other();
    let mut agent = instantiate_baseline(&cfg.seated_spec(seat), &cfg.game, seat, cfg.talk).map_err(agent_error)?;
    for r in &transcript.records {
        let fail = |source| MatchError::AgentFailure {
            round: r.round,
            player: seat,
            source,
        };
        if cfg.talk {
            if agent.speak(r.round) != r.messages_of(seat) {
                return Ok(false);
            }
            agent.hear(r.round, r.messages_of(HUMAN_SEAT)).map_err(fail)?;
        }
        if agent.act(r.round).map_err(fail)? != r.joint.action_of(seat) {
            return Ok(false);
        }
        agent.observe(&r.outcome()).map_err(fail)?;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointPlan;
    use crate::signaling::Act;

    fn config(talk: bool) -> SessionConfig {
        SessionConfig {
            game: Game::prisoners_dilemma(),
            agent: BaselineSpec::new("ssharp", 0),
            rounds: 4,
            talk,
            seed: 3,
        }
    }

    #[test]
    fn talk_session_cycles_phases() {
        let mut s = Session::new(config(true)).unwrap();
        assert_eq!(s.view().menu.as_ref().unwrap().acts.len(), 19);
        assert_eq!(
            s.submit_action(0).err(),
            Some(SessionError::WrongPhase {
                actual: Phase::AwaitingMessages
            })
        );
        let cc = SpeechAct::proposal(&JointPlan::stationary(JointAction::new(Action::FIRST, Action::FIRST)));
        for r in 0..4 {
            s.submit_messages(vec![cc.clone()]).unwrap();
            assert_eq!(s.phase(), Phase::AwaitingAction);
            assert!(s.submit_messages(vec![]).is_err());
            let out = s.submit_action(0).unwrap();
            assert_eq!(out.round, r);
            assert_eq!(out.phase, Phase::RoundComplete);
        }
        assert_eq!(s.phase(), Phase::Finished);
        assert_eq!(s.transcript().records.len(), 4);
        assert!(replay_matches(s.transcript()).unwrap());
    }

    #[test]
    fn silent_session_rejects_messages() {
        let mut s = Session::new(config(false)).unwrap();
        assert!(s.view().menu.is_none());
        assert_eq!(s.submit_messages(vec![]).err(), Some(SessionError::TalkDisabled));
        s.submit_action(1).unwrap();
        assert_eq!(s.state().round, 1);
    }

    #[test]
    fn bad_inputs() {
        let mut cfg = config(true);
        cfg.agent = BaselineSpec::new("nobody", 0);
        assert_eq!(Session::new(cfg).err().unwrap().code(), "unknown_agent");
        let mut s = Session::new(config(true)).unwrap();
        let four = vec![SpeechAct::plain(Act::Thanks); 4];
        assert_eq!(s.submit_messages(four).err().unwrap().code(), "invalid_act");
        let bad = SpeechAct {
            id: Act::ProposeStationary,
            cells: vec![[0, 2]],
        };
        assert_eq!(s.submit_messages(vec![bad]).err().unwrap().code(), "invalid_act");
        s.submit_messages(vec![]).unwrap();
        assert_eq!(s.submit_action(2).err(), Some(SessionError::InvalidAction(2)));
    }

    #[test]
    fn view_has_no_agent_name() {
        let s = Session::new(config(true)).unwrap();
        let json = serde_json::to_string(&s.view()).unwrap();
        assert!(!json.contains("ssharp"));
        let state = serde_json::to_string(&s.state()).unwrap();
        assert!(!state.contains("ssharp"));
    }
}
