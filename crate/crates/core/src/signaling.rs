//! Cheap talk: the fixed speech-act catalog, plan payloads, and the
//! game-generic speech state machines attached to experts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{JointAction, JointPlan};

pub const CATALOG_VERSION: &str = "1";

/// Most acts a speaker may send in one round.
pub const MAX_ACTS_PER_ROUND: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignalError {
    #[error("unknown speech act id {0}")]
    UnknownAct(i64),
    #[error("malformed plan payload: {0}")]
    MalformedPayload(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Plans,
    Threats,
    Praise,
    Hate,
    Other,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Plans,
        Category::Threats,
        Category::Praise,
        Category::Hate,
        Category::Other,
    ];
}

/// The 19 speech acts. Discriminants are the wire ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Act {
    ProposeStationary = 0,
    ProposeAlternation = 1,
    ProposeOneShot = 2,
    Accept = 3,
    Reject = 4,
    TrySomethingElse = 5,
    DoAsISay = 6,
    LastWarning = 7,
    PunishingNow = 8,
    Excellent = 9,
    BothWinning = 10,
    Thanks = 11,
    GoodDeal = 12,
    YouBetrayedMe = 13,
    CurseYou = 14,
    InYourFace = 15,
    ChangingStrategy = 16,
    IForgiveYou = 17,
    WeCanDoBetter = 18,
}

impl Act {
    pub const ALL: [Act; 19] = [
        Act::ProposeStationary,
        Act::ProposeAlternation,
        Act::ProposeOneShot,
        Act::Accept,
        Act::Reject,
        Act::TrySomethingElse,
        Act::DoAsISay,
        Act::LastWarning,
        Act::PunishingNow,
        Act::Excellent,
        Act::BothWinning,
        Act::Thanks,
        Act::GoodDeal,
        Act::YouBetrayedMe,
        Act::CurseYou,
        Act::InYourFace,
        Act::ChangingStrategy,
        Act::IForgiveYou,
        Act::WeCanDoBetter,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: i64) -> Result<Act, SignalError> {
        usize::try_from(id)
            .ok()
            .and_then(|i| Act::ALL.get(i).copied())
            .ok_or(SignalError::UnknownAct(id))
    }

    pub fn category(self) -> Category {
        match self.id() {
            0..=5 => Category::Plans,
            6..=8 => Category::Threats,
            9..=12 => Category::Praise,
            13..=15 => Category::Hate,
            _ => Category::Other,
        }
    }

    /// Number of cells the act's payload must carry.
    pub fn payload_cells(self) -> usize {
        match self {
            Act::ProposeStationary | Act::ProposeOneShot => 1,
            Act::ProposeAlternation => 2,
            _ => 0,
        }
    }

    pub fn is_proposal(self) -> bool {
        self.payload_cells() > 0
    }

    pub fn key(self) -> &'static str {
        match self {
            Act::ProposeStationary => "propose_stationary",
            Act::ProposeAlternation => "propose_alternation",
            Act::ProposeOneShot => "propose_one_shot",
            Act::Accept => "accept",
            Act::Reject => "reject",
            Act::TrySomethingElse => "try_something_else",
            Act::DoAsISay => "do_as_i_say",
            Act::LastWarning => "last_warning",
            Act::PunishingNow => "punishing_now",
            Act::Excellent => "excellent",
            Act::BothWinning => "both_winning",
            Act::Thanks => "thanks",
            Act::GoodDeal => "good_deal",
            Act::YouBetrayedMe => "you_betrayed_me",
            Act::CurseYou => "curse_you",
            Act::InYourFace => "in_your_face",
            Act::ChangingStrategy => "changing_strategy",
            Act::IForgiveYou => "i_forgive_you",
            Act::WeCanDoBetter => "we_can_do_better",
        }
    }

    /// Display template; `{0}` and `{1}` stand for payload cells.
    pub fn template(self) -> &'static str {
        match self {
            Act::ProposeStationary => "Let's always play {0}.",
            Act::ProposeAlternation => "Let's alternate: {0} on even rounds, {1} on odd rounds.",
            Act::ProposeOneShot => "This round, let's play {0}.",
            Act::Accept => "I accept your proposal.",
            Act::Reject => "I don't accept your proposal.",
            Act::TrySomethingElse => "Let's try something else.",
            Act::DoAsISay => "Do as I say or I'll punish you.",
            Act::LastWarning => "This is your last warning.",
            Act::PunishingNow => "I am punishing you now.",
            Act::Excellent => "Excellent!",
            Act::BothWinning => "Nice, we're both winning.",
            Act::Thanks => "Thanks.",
            Act::GoodDeal => "Good deal.",
            Act::YouBetrayedMe => "You betrayed me.",
            Act::CurseYou => "Curse you!",
            Act::InYourFace => "In your face!",
            Act::ChangingStrategy => "I'm changing my strategy.",
            Act::IForgiveYou => "I forgive you.",
            Act::WeCanDoBetter => "We can both do better than this.",
        }
    }
}

/// Category of a raw act id.
pub fn categorize(id: i64) -> Result<Category, SignalError> {
    Act::from_id(id).map(Act::category)
}

/// A speech act as sent over the wire. `cells` holds `[row, col]` action
/// indices and is validated lazily by [`interpret_plan`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpeechAct")]
pub struct SpeechAct {
    #[serde(serialize_with = "ser_act")]
    pub id: Act,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<[i64; 2]>,
}

fn ser_act<S: serde::Serializer>(act: &Act, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(act.id())
}

#[derive(Deserialize)]
struct RawSpeechAct {
    id: i64,
    #[serde(default)]
    cells: Vec<[i64; 2]>,
}

impl TryFrom<RawSpeechAct> for SpeechAct {
    type Error = SignalError;
    fn try_from(raw: RawSpeechAct) -> Result<Self, Self::Error> {
        Ok(SpeechAct {
            id: Act::from_id(raw.id)?,
            cells: raw.cells,
        })
    }
}

impl SpeechAct {
    pub fn plain(id: Act) -> Self {
        SpeechAct { id, cells: Vec::new() }
    }

    /// The proposal act describing `plan`: stationary for one cell,
    /// alternation for two.
    pub fn proposal(plan: &JointPlan) -> Self {
        let cells: Vec<[i64; 2]> = plan
            .cycle()
            .iter()
            .map(|c| [c.row.index() as i64, c.col.index() as i64])
            .collect();
        let id = if cells.len() == 1 {
            Act::ProposeStationary
        } else {
            Act::ProposeAlternation
        };
        SpeechAct { id, cells }
    }

    pub fn category(&self) -> Category {
        self.id.category()
    }

    /// Parses the payload of a proposal act.
    pub fn plan(&self) -> Result<Option<JointPlan>, SignalError> {
        let need = self.id.payload_cells();
        if need == 0 {
            return Ok(None);
        }
        if self.cells.len() != need {
            return Err(SignalError::MalformedPayload(format!(
                "{} expects {} cell(s), got {}",
                self.id.key(),
                need,
                self.cells.len()
            )));
        }
        let cycle = self
            .cells
            .iter()
            .map(|[r, c]| {
                JointAction::from_indices(*r, *c)
                    .map_err(|_| SignalError::MalformedPayload(format!("no cell ({r},{c}) in a 2x2 game")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(JointPlan::new(cycle).expect("payload has at least one cell")))
    }

    /// Rendered text using `C`/`D` style labels (action 0 / action 1).
    pub fn render(&self) -> String {
        let mut text = self.id.template().to_string();
        for (i, [r, c]) in self.cells.iter().enumerate() {
            let label = |a: i64| if a == 0 { "A" } else { "B" };
            text = text.replace(&format!("{{{i}}}"), &format!("({},{})", label(*r), label(*c)));
        }
        text
    }
}

/// The joint plan of the most recent well-formed proposal in `acts`.
/// A malformed proposal is an error rather than being skipped.
pub fn interpret_plan(acts: &[SpeechAct]) -> Result<Option<JointPlan>, SignalError> {
    for act in acts.iter().rev() {
        if act.id.is_proposal() {
            return act.plan();
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: u8,
    pub key: String,
    pub category: Category,
    pub template: String,
    /// Number of `[row, col]` cells the payload must carry.
    pub payload_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub version: String,
    pub max_acts_per_round: usize,
    pub acts: Vec<CatalogEntry>,
}

pub fn catalog() -> Catalog {
    Catalog {
        version: CATALOG_VERSION.to_string(),
        max_acts_per_round: MAX_ACTS_PER_ROUND,
        acts: Act::ALL
            .iter()
            .map(|a| CatalogEntry {
                id: a.id(),
                key: a.key().to_string(),
                category: a.category(),
                template: a.template().to_string(),
                payload_cells: a.payload_cells(),
            })
            .collect(),
    }
}

/// States of a speech state machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeechState {
    Propose,
    Cooperating,
    Punishing,
    Acquiescing,
    Renewing,
}

impl SpeechState {
    pub const ALL: [SpeechState; 5] = [
        SpeechState::Propose,
        SpeechState::Cooperating,
        SpeechState::Punishing,
        SpeechState::Acquiescing,
        SpeechState::Renewing,
    ];
}

/// Game events that drive speech.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeechEvent {
    RoundStartFirst,
    PartnerComplied,
    PartnerDeviated,
    PunishmentStart,
    PunishmentEnd,
    ExpertSwitched,
    ProposalReceived { congruent: bool },
}

impl SpeechEvent {
    pub const ALL: [SpeechEvent; 8] = [
        SpeechEvent::RoundStartFirst,
        SpeechEvent::PartnerComplied,
        SpeechEvent::PartnerDeviated,
        SpeechEvent::PunishmentStart,
        SpeechEvent::PunishmentEnd,
        SpeechEvent::ExpertSwitched,
        SpeechEvent::ProposalReceived { congruent: true },
        SpeechEvent::ProposalReceived { congruent: false },
    ];
}

/// Which table an expert speaks from. Tables are shared per role and
/// parameterized only by the expert's target plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeakerRole {
    /// Proposes a target plan and enforces it.
    Leader,
    /// Goes along with the partner's demands.
    Follower,
    /// Has no plan to talk about.
    Silent,
}

/// Per-expert speech machine state: FSM state plus the run of consecutive
/// compliant rounds used for praise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechMachine {
    pub state: SpeechState,
    pub compliant_streak: u32,
}

impl Default for SpeechMachine {
    fn default() -> Self {
        SpeechMachine {
            state: SpeechState::Propose,
            compliant_streak: 0,
        }
    }
}

/// Praise fires on this many consecutive compliant rounds.
const PRAISE_STREAK: u32 = 3;

/// One transition of the speech machine. Total over every (state, event).
pub fn emit_speech(
    role: SpeakerRole,
    target: Option<&JointPlan>,
    machine: SpeechMachine,
    event: SpeechEvent,
) -> (SpeechMachine, Vec<SpeechAct>) {
    use SpeechEvent as E;
    use SpeechState as S;

    let propose = || target.map(SpeechAct::proposal);
    let plain = SpeechAct::plain;
    let mut next = machine;
    let mut out: Vec<SpeechAct> = Vec::new();

    match event {
        E::ExpertSwitched => {
            next.state = S::Propose;
            next.compliant_streak = 0;
            out.push(plain(Act::ChangingStrategy));
        }
        E::RoundStartFirst => {
            next.compliant_streak = 0;
            match role {
                SpeakerRole::Leader => {
                    next.state = S::Cooperating;
                    out.extend(propose());
                }
                SpeakerRole::Follower => next.state = S::Acquiescing,
                SpeakerRole::Silent => next.state = S::Cooperating,
            }
        }
        E::PartnerComplied => {
            if machine.state == S::Punishing {
                return (next, out);
            }
            next.compliant_streak = machine.compliant_streak + 1;
            if machine.state == S::Renewing || machine.state == S::Propose {
                next.state = match role {
                    SpeakerRole::Follower => S::Acquiescing,
                    _ => S::Cooperating,
                };
            }
            if next.compliant_streak == PRAISE_STREAK {
                out.push(plain(match role {
                    SpeakerRole::Leader => Act::Excellent,
                    SpeakerRole::Follower => Act::GoodDeal,
                    SpeakerRole::Silent => Act::BothWinning,
                }));
            }
        }
        E::PartnerDeviated => {
            next.compliant_streak = 0;
            match (role, machine.state) {
                (_, S::Punishing) => {}
                (SpeakerRole::Leader, _) => {
                    next.state = S::Punishing;
                    out.push(plain(Act::YouBetrayedMe));
                    out.push(plain(Act::PunishingNow));
                }
                (SpeakerRole::Follower, _) => out.push(plain(Act::WeCanDoBetter)),
                (SpeakerRole::Silent, _) => {}
            }
        }
        E::PunishmentStart => {
            if role == SpeakerRole::Leader {
                next.state = S::Punishing;
                out.push(plain(Act::PunishingNow));
            }
        }
        E::PunishmentEnd => {
            if machine.state == S::Punishing {
                next.state = S::Renewing;
                out.push(plain(Act::IForgiveYou));
                out.extend(propose());
            }
        }
        E::ProposalReceived { congruent: true } => {
            out.push(plain(Act::Accept));
            if role == SpeakerRole::Follower {
                next.state = S::Acquiescing;
            }
        }
        E::ProposalReceived { congruent: false } => {
            out.push(plain(Act::Reject));
            if role == SpeakerRole::Leader {
                out.push(plain(Act::DoAsISay));
            }
        }
    }
    (next, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointAction;

    fn cc() -> JointPlan {
        JointPlan::stationary(JointAction::from_indices(0, 0).unwrap())
    }

    #[test]
    fn catalog_has_nineteen_acts_in_five_categories() {
        let cat = catalog();
        assert_eq!(cat.acts.len(), 19);
        let mut cats: Vec<Category> = cat.acts.iter().map(|e| e.category).collect();
        cats.sort();
        cats.dedup();
        assert_eq!(cats.len(), 5);
        let sizes: Vec<usize> = Category::ALL
            .iter()
            .map(|c| cat.acts.iter().filter(|e| e.category == *c).count())
            .collect();
        assert_eq!(sizes, vec![6, 3, 4, 3, 3]);
        assert_eq!(sizes.iter().sum::<usize>(), 19);
    }

    #[test]
    fn categorize_bounds() {
        assert_eq!(categorize(8), Ok(Category::Threats));
        assert_eq!(categorize(6), Ok(Category::Threats));
        assert_eq!(categorize(19), Err(SignalError::UnknownAct(19)));
        assert_eq!(categorize(-1), Err(SignalError::UnknownAct(-1)));
    }

    #[test]
    fn interpret_stationary_and_alternation() {
        let a = SpeechAct {
            id: Act::ProposeStationary,
            cells: vec![[0, 0]],
        };
        assert_eq!(interpret_plan(&[a]).unwrap(), Some(cc()));
        let b = SpeechAct {
            id: Act::ProposeAlternation,
            cells: vec![[0, 1], [1, 0]],
        };
        let plan = interpret_plan(&[b]).unwrap().unwrap();
        assert_eq!(
            plan.cycle(),
            &[
                JointAction::from_indices(0, 1).unwrap(),
                JointAction::from_indices(1, 0).unwrap()
            ]
        );
        assert_eq!(interpret_plan(&[SpeechAct::plain(Act::Excellent)]).unwrap(), None);
    }

    #[test]
    fn interpret_takes_latest_proposal() {
        let first = SpeechAct::proposal(&cc());
        let second = SpeechAct {
            id: Act::ProposeOneShot,
            cells: vec![[1, 1]],
        };
        let plan = interpret_plan(&[first, second, SpeechAct::plain(Act::Thanks)])
            .unwrap()
            .unwrap();
        assert_eq!(plan, JointPlan::stationary(JointAction::from_indices(1, 1).unwrap()));
    }

    #[test]
    fn malformed_payload_is_error() {
        let bad = SpeechAct {
            id: Act::ProposeStationary,
            cells: vec![[2, 0]],
        };
        assert!(matches!(interpret_plan(&[bad]), Err(SignalError::MalformedPayload(_))));
        let short = SpeechAct {
            id: Act::ProposeAlternation,
            cells: vec![[0, 0]],
        };
        assert!(interpret_plan(&[short]).is_err());
    }

    #[test]
    fn wire_format() {
        let act = SpeechAct::proposal(&cc());
        let s = serde_json::to_string(&act).unwrap();
        assert_eq!(s, r#"{"id":0,"cells":[[0,0]]}"#);
        assert_eq!(serde_json::from_str::<SpeechAct>(&s).unwrap(), act);
        assert!(serde_json::from_str::<SpeechAct>(r#"{"id":19}"#).is_err());
        assert_eq!(
            serde_json::to_string(&SpeechAct::plain(Act::Thanks)).unwrap(),
            r#"{"id":11}"#
        );
    }

    #[test]
    fn leader_proposes_on_first_round() {
        let plan = cc();
        let (m, acts) = emit_speech(
            SpeakerRole::Leader,
            Some(&plan),
            SpeechMachine::default(),
            SpeechEvent::RoundStartFirst,
        );
        assert_eq!(m.state, SpeechState::Cooperating);
        assert_eq!(acts, vec![SpeechAct::proposal(&plan)]);
    }

    #[test]
    fn leader_threatens_on_deviation() {
        let plan = cc();
        let start = SpeechMachine {
            state: SpeechState::Cooperating,
            compliant_streak: 2,
        };
        let (m, acts) = emit_speech(SpeakerRole::Leader, Some(&plan), start, SpeechEvent::PartnerDeviated);
        assert_eq!(m.state, SpeechState::Punishing);
        assert!(acts.iter().any(|a| a.category() == Category::Threats));
    }

    #[test]
    fn praise_on_third_compliance_for_every_role() {
        let plan = cc();
        for role in [SpeakerRole::Leader, SpeakerRole::Follower, SpeakerRole::Silent] {
            let (mut m, _) = emit_speech(
                role,
                Some(&plan),
                SpeechMachine::default(),
                SpeechEvent::RoundStartFirst,
            );
            let mut praised = Vec::new();
            for _ in 0..4 {
                let (next, acts) = emit_speech(role, Some(&plan), m, SpeechEvent::PartnerComplied);
                praised.push(acts.iter().any(|a| a.category() == Category::Praise));
                m = next;
            }
            assert_eq!(praised, vec![false, false, true, false], "{role:?}");
        }
    }

    #[test]
    fn machine_is_total_and_emits_catalog_acts_only() {
        let plan = JointPlan::alternation(
            JointAction::from_indices(0, 1).unwrap(),
            JointAction::from_indices(1, 0).unwrap(),
        );
        for role in [SpeakerRole::Leader, SpeakerRole::Follower, SpeakerRole::Silent] {
            for state in SpeechState::ALL {
                for event in SpeechEvent::ALL {
                    for streak in 0..4 {
                        let m = SpeechMachine {
                            state,
                            compliant_streak: streak,
                        };
                        let (_, acts) = emit_speech(role, Some(&plan), m, event);
                        assert!(acts.len() <= MAX_ACTS_PER_ROUND);
                        for a in acts {
                            if a.id.is_proposal() {
                                assert!(a.plan().unwrap().unwrap().same_cycle(&plan));
                            }
                        }
                    }
                }
            }
        }
    }
}
