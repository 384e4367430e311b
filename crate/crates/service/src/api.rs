//! Request and response bodies.
//!
//! | route | body | response |
//! |---|---|---|
//! | `POST /sessions` | [`CreateSession`] | [`SessionCreated`] |
//! | `POST /sessions/{id}/messages` | [`SubmitMessages`] | [`MessagesExchanged`] |
//! | `POST /sessions/{id}/action` | [`SubmitAction`] | [`ActionResolved`] |
//! | `GET /sessions/{id}/state` | | [`SessionState`] |
//! | `GET /sessions/{id}/transcript` | | [`Transcript`](repgame::Transcript) |
//!
//! Failures return [`ErrorBody`](crate::ErrorBody).

use std::collections::BTreeMap;

use repgame::session::{PlayerView, RoundOutcome, SessionState};
use repgame::signaling::{Act, SpeechAct};
use repgame::SessionError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    /// `{"row_payoffs": [[..],[..]], "col_payoffs": [[..],[..]], "name": ..}`.
    pub game: Value,
    /// Registry name of the partner agent.
    pub agent: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub rounds: usize,
    #[serde(default)]
    pub talk: bool,
    /// Drawn by the server when absent; the stored transcript records it.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub view: PlayerView,
    pub state: SessionState,
}

/// An act as a client writes it. Ids are checked against the catalog
/// when the request is handled, so an out-of-range id gets `invalid_act`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireAct {
    pub id: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<[i64; 2]>,
}

impl WireAct {
    pub fn parse(&self) -> Result<SpeechAct, SessionError> {
        let id = Act::from_id(self.id).map_err(|e| SessionError::InvalidAct(e.to_string()))?;
        Ok(SpeechAct {
            id,
            cells: self.cells.clone(),
        })
    }
}

impl From<&SpeechAct> for WireAct {
    fn from(act: &SpeechAct) -> Self {
        WireAct {
            id: act.id.id() as i64,
            cells: act.cells.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubmitMessages {
    #[serde(default)]
    pub acts: Vec<WireAct>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessagesExchanged {
    /// The partner's acts for this round, possibly empty.
    pub partner_acts: Vec<SpeechAct>,
    pub state: SessionState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmitAction {
    /// 0 or 1: the row the player picks.
    pub action: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionResolved {
    pub outcome: RoundOutcome,
    pub state: SessionState,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn act_nineteen_is_invalid() {
        let err = WireAct { id: 19, cells: vec![] }.parse().unwrap_err();
        assert_eq!(err.code(), "invalid_act");
        assert!(WireAct { id: 18, cells: vec![] }.parse().is_ok());
        assert!(WireAct { id: -1, cells: vec![] }.parse().is_err());
    }

    #[test]
    fn seed_is_optional() {
        let body: CreateSession = serde_json::from_str(r#"{"game": {}, "agent": "ssharp", "rounds": 5}"#).unwrap();
        assert_eq!(body.seed, None);
        assert!(!body.talk);
    }

    #[test]
    fn wire_act_round_trips() {
        let act = SpeechAct {
            id: Act::from_id(0).unwrap(),
            cells: vec![[0, 0]],
        };
        assert_eq!(WireAct::from(&act).parse().unwrap(), act);
    }
}
