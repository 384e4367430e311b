//! The expert roster an aspiration learner selects from.
//!
//! Every expert is a complete strategy for the repeated game built from the
//! game description alone: trigger leaders that propose and enforce a target
//! plan, followers that go along with the partner's demand, a security
//! (maximin) player and a model-based learner. Each one reports a potential:
//! the per-round payoff it currently expects to be able to deliver.

use rand::Rng;
use serde::Serialize;

use crate::agent::Outcome;
use crate::game::{Action, Game, JointAction, JointPlan, Player};
use crate::model::{MbrlParams, ModelBasedLearner};
use crate::signaling::{SpeakerRole, SpeechMachine};
use crate::solve::{
    attack_action, best_bully_plan, bully_cell, maximin, nash_bargaining, punished_payoff, security_action,
    MaximinResult,
};

/// Weight on the previous compliance estimate in the exponential average.
pub const COMPLIANCE_WEIGHT: f64 = 0.9;

/// Upper bound on trigger punishment length.
pub const MAX_PUNISH_LEN: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ExpertKind {
    TriggerLeader,
    Follower,
    Bully,
    BullyL,
    BullyF,
    Maximin,
    Mbrl,
}

impl ExpertKind {
    pub fn speaker_role(self) -> SpeakerRole {
        match self {
            ExpertKind::TriggerLeader | ExpertKind::Bully | ExpertKind::BullyL => SpeakerRole::Leader,
            ExpertKind::Follower | ExpertKind::BullyF => SpeakerRole::Follower,
            ExpertKind::Maximin | ExpertKind::Mbrl => SpeakerRole::Silent,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ExpertKind::TriggerLeader => "trigger_leader",
            ExpertKind::Follower => "follower",
            ExpertKind::Bully => "bully",
            ExpertKind::BullyL => "bully_l",
            ExpertKind::BullyF => "bully_f",
            ExpertKind::Maximin => "maximin",
            ExpertKind::Mbrl => "mbrl",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ExpertId {
    pub kind: ExpertKind,
    pub target: Option<JointPlan>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    Propose,
    Cooperate,
    Punish,
    Acquiesce,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpertState {
    pub phase: Phase,
    pub punish_rounds_left: u32,
    /// Position in the target cycle of the next round to be played.
    pub cycle_position: usize,
    pub speech: SpeechMachine,
}

impl Default for ExpertState {
    fn default() -> Self {
        ExpertState {
            phase: Phase::Propose,
            punish_rounds_left: 0,
            cycle_position: 0,
            speech: SpeechMachine::default(),
        }
    }
}

/// What happened to an expert's relationship with the partner this round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transition {
    None,
    Complied,
    Deviated,
    PunishmentEnd,
}

/// Game facts an expert needs from its own seat.
#[derive(Clone, Debug, Serialize)]
pub struct SeatAnalysis {
    pub seat: Player,
    pub maximin: MaximinResult<f64>,
    pub partner_maximin: MaximinResult<f64>,
    pub security_action: Action,
    pub attack_action: Action,
    /// Partner's best-reply payoff against the attack action.
    pub punished_partner_payoff: f64,
    pub nbs_plan: JointPlan,
    pub bully_plan: JointPlan,
    pub bully_cell: JointAction,
    pub partner_bully_cell: JointAction,
    pub min_payoff: f64,
    pub max_payoff: f64,
}

impl SeatAnalysis {
    pub fn new(game: &Game, seat: Player) -> Self {
        SeatAnalysis {
            seat,
            maximin: maximin(game, seat),
            partner_maximin: maximin(game, seat.other()),
            security_action: security_action(game, seat),
            attack_action: attack_action(game, seat),
            punished_partner_payoff: punished_payoff(game, seat),
            nbs_plan: nash_bargaining(game).plan,
            bully_plan: best_bully_plan(game, seat),
            bully_cell: bully_cell(game, seat),
            partner_bully_cell: bully_cell(game, seat.other()),
            min_payoff: game.min_payoff(),
            max_payoff: game.max_payoff(),
        }
    }

    /// Samples the maximin mixed strategy.
    pub fn sample_maximin<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        let p = self.maximin.strategy[0];
        if p >= 1.0 {
            Action::FIRST
        } else if p <= 0.0 {
            Action::SECOND
        } else if rng.gen::<f64>() < p {
            Action::FIRST
        } else {
            Action::SECOND
        }
    }
}

/// Rounds of punishment needed to make the partner's best one-shot deviation
/// from `target` a strict loss: the smallest `k >= 1` with
/// `k * (partner target payoff - partner punished payoff) > max gain`.
pub fn punish_len(game: &Game, seat: Player, target: &JointPlan) -> u32 {
    let partner = seat.other();
    let target_payoff = target.average_payoff(game, partner);
    let loss_per_round = target_payoff - punished_payoff(game, seat);
    let gain = target
        .cycle()
        .iter()
        .map(|cell| {
            let mine = cell.action_of(seat);
            let best = Action::BOTH
                .iter()
                .map(|b| game.payoff_seat(partner, *b, mine))
                .fold(f64::NEG_INFINITY, f64::max);
            best - game.payoff(partner, *cell)
        })
        .fold(0.0, f64::max);
    if gain <= 0.0 || loss_per_round <= 0.0 {
        return 1;
    }
    ((gain / loss_per_round).floor() as u32 + 1).clamp(1, MAX_PUNISH_LEN)
}

#[derive(Clone, Debug)]
pub struct Expert {
    pub id: ExpertId,
    pub state: ExpertState,
    /// Exponentially weighted rate at which the partner matched this
    /// expert's target while it was in control.
    pub compliance: f64,
    punish_len: u32,
    attack: Action,
    /// Follower: the partner's current demand.
    demand: Option<JointPlan>,
    demand_from_talk: bool,
    model: Option<ModelBasedLearner>,
}

impl Expert {
    fn leader(kind: ExpertKind, target: JointPlan, game: &Game, a: &SeatAnalysis) -> Self {
        let (punish_len, attack) = match kind {
            // a plain bully's only threat is to keep demanding
            ExpertKind::Bully => (1, target.action_at(a.seat, 0)),
            _ => (punish_len(game, a.seat, &target), a.attack_action),
        };
        Expert {
            id: ExpertId {
                kind,
                target: Some(target),
            },
            state: ExpertState::default(),
            compliance: 1.0,
            punish_len,
            attack,
            demand: None,
            demand_from_talk: false,
            model: None,
        }
    }

    fn plain(kind: ExpertKind, a: &SeatAnalysis) -> Self {
        Expert {
            id: ExpertId { kind, target: None },
            state: ExpertState::default(),
            compliance: 1.0,
            punish_len: 1,
            attack: a.attack_action,
            demand: None,
            demand_from_talk: false,
            model: None,
        }
    }

    pub fn kind(&self) -> ExpertKind {
        self.id.kind
    }

    pub fn target(&self) -> Option<&JointPlan> {
        self.id.target.as_ref()
    }

    pub fn punish_len(&self) -> u32 {
        self.punish_len
    }

    pub fn demand(&self) -> Option<&JointPlan> {
        self.demand.as_ref()
    }

    /// Plan this expert currently carries out, if any: its target for
    /// leaders, the accepted demand for followers.
    pub fn plan(&self) -> Option<&JointPlan> {
        match self.id.kind {
            ExpertKind::Follower => self.demand.as_ref(),
            _ => self.id.target.as_ref(),
        }
    }

    fn is_leader(&self) -> bool {
        matches!(
            self.id.kind,
            ExpertKind::TriggerLeader | ExpertKind::Bully | ExpertKind::BullyL
        )
    }

    /// Back to the start-of-control state (used when the expert is selected).
    pub fn reset(&mut self, round: usize) {
        self.state.phase = match self.id.kind {
            ExpertKind::Follower | ExpertKind::BullyF => Phase::Acquiesce,
            _ => Phase::Propose,
        };
        self.state.punish_rounds_left = 0;
        self.state.cycle_position = self.id.target.as_ref().map_or(0, |t| round % t.len());
        self.state.speech = SpeechMachine::default();
    }

    /// Whether the follower would accept `plan` as a demand.
    pub fn accepts(&self, game: &Game, a: &SeatAnalysis, plan: &JointPlan) -> bool {
        match self.id.kind {
            ExpertKind::Follower => plan.average_payoff(game, a.seat) >= a.maximin.value,
            ExpertKind::BullyF => plan.same_cycle(&JointPlan::stationary(a.partner_bully_cell)),
            _ => false,
        }
    }

    /// Whether this expert's plan matches a proposal (up to rotation), or it
    /// is a follower that would comply with it.
    pub fn congruent_with(&self, game: &Game, a: &SeatAnalysis, proposal: &JointPlan) -> bool {
        match self.id.kind {
            ExpertKind::Follower | ExpertKind::BullyF => self.accepts(game, a, proposal),
            ExpertKind::Maximin | ExpertKind::Mbrl => false,
            _ => self.id.target.as_ref().is_some_and(|t| t.same_cycle(proposal)),
        }
    }

    /// Sets a demand announced through talk.
    pub fn set_demand(&mut self, plan: JointPlan) {
        if self.id.kind == ExpertKind::Follower {
            self.demand = Some(plan);
            self.demand_from_talk = true;
        }
    }

    /// Highest per-round payoff the expert currently expects to obtain.
    pub fn potential(&mut self, game: &Game, a: &SeatAnalysis) -> f64 {
        let floor = a.maximin.value;
        let p = match self.id.kind {
            ExpertKind::TriggerLeader | ExpertKind::Bully | ExpertKind::BullyL => {
                let target = self.id.target.as_ref().expect("leaders carry a target");
                let goal = target.average_payoff(game, a.seat);
                self.compliance * goal
            }
            ExpertKind::BullyF => {
                let goal = game.payoff(a.seat, a.partner_bully_cell);
                self.compliance * goal
            }
            ExpertKind::Follower => match &self.demand {
                Some(d) => d.average_payoff(game, a.seat).max(floor),
                None => floor,
            },
            ExpertKind::Maximin => floor,
            ExpertKind::Mbrl => self.model.as_mut().expect("mbrl expert owns a model").potential(),
        };
        p.clamp(a.min_payoff, a.max_payoff)
    }

    pub fn next_action<R: Rng + ?Sized>(&mut self, game: &Game, a: &SeatAnalysis, round: usize, rng: &mut R) -> Action {
        match self.id.kind {
            ExpertKind::TriggerLeader | ExpertKind::Bully | ExpertKind::BullyL => {
                if self.state.phase == Phase::Punish {
                    self.attack
                } else {
                    let t = self.id.target.as_ref().expect("leaders carry a target");
                    t.action_at(a.seat, round)
                }
            }
            ExpertKind::BullyF => a.partner_bully_cell.action_of(a.seat),
            ExpertKind::Follower => match &self.demand {
                Some(d) if d.average_payoff(game, a.seat) >= a.maximin.value => d.action_at(a.seat, round),
                _ => a.security_action,
            },
            ExpertKind::Maximin => a.sample_maximin(rng),
            ExpertKind::Mbrl => self.model.as_mut().expect("mbrl expert owns a model").choose(rng),
        }
    }

    fn update_compliance(&mut self, matched: bool) {
        let hit = if matched { 1.0 } else { 0.0 };
        self.compliance = COMPLIANCE_WEIGHT * self.compliance + (1.0 - COMPLIANCE_WEIGHT) * hit;
    }

    /// Records that the partner explicitly refused this expert's proposal.
    pub fn refused(&mut self) {
        self.compliance = 0.0;
    }

    /// Updates the expert after a round. `in_control` is true when this
    /// expert chose the action that was played; the state machine and
    /// compliance only advance then, while learned models always update.
    pub fn observe(&mut self, game: &Game, a: &SeatAnalysis, outcome: &Outcome, in_control: bool) -> Transition {
        let partner = a.seat.other();
        let partner_action = outcome.action_of(partner);

        if let Some(model) = self.model.as_mut() {
            model.observe(outcome.joint);
        }
        if self.id.kind == ExpertKind::Follower && !self.demand_from_talk {
            // infer the demand: the cell in the partner's last column that
            // the partner likes best
            let cell = Action::BOTH
                .iter()
                .map(|mine| JointAction::from_seat(a.seat, *mine, partner_action))
                .max_by(|x, y| {
                    game.payoff(partner, *x)
                        .partial_cmp(&game.payoff(partner, *y))
                        .expect("finite payoffs")
                })
                .expect("two cells");
            self.demand = Some(JointPlan::stationary(cell));
        }
        if !in_control {
            return Transition::None;
        }

        let next_round = outcome.round + 1;
        if let Some(t) = self.id.target.as_ref() {
            self.state.cycle_position = next_round % t.len();
        }

        match self.id.kind {
            ExpertKind::TriggerLeader | ExpertKind::Bully | ExpertKind::BullyL => {
                let target = self.id.target.clone().expect("leaders carry a target");
                let prescribed = target.action_at(partner, outcome.round);
                match self.state.phase {
                    Phase::Propose => {
                        self.state.phase = Phase::Cooperate;
                        Transition::None
                    }
                    Phase::Cooperate | Phase::Acquiesce => {
                        let matched = partner_action == prescribed;
                        self.update_compliance(matched);
                        if matched {
                            Transition::Complied
                        } else {
                            self.state.phase = Phase::Punish;
                            self.state.punish_rounds_left = self.punish_len;
                            Transition::Deviated
                        }
                    }
                    Phase::Punish => {
                        self.state.punish_rounds_left -= 1;
                        if self.state.punish_rounds_left == 0 {
                            self.state.phase = Phase::Cooperate;
                            Transition::PunishmentEnd
                        } else {
                            Transition::None
                        }
                    }
                }
            }
            ExpertKind::BullyF => {
                let matched = partner_action == a.partner_bully_cell.action_of(partner);
                self.update_compliance(matched);
                if matched {
                    Transition::Complied
                } else {
                    Transition::Deviated
                }
            }
            ExpertKind::Follower => match &self.demand {
                Some(d) if self.demand_from_talk => {
                    if partner_action == d.action_at(partner, outcome.round) {
                        Transition::Complied
                    } else {
                        Transition::Deviated
                    }
                }
                _ => Transition::None,
            },
            ExpertKind::Maximin | ExpertKind::Mbrl => Transition::None,
        }
    }

    pub fn is_leader_kind(&self) -> bool {
        self.is_leader()
    }
}

/// Which experts make up the roster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RosterKind {
    /// Every expert kind.
    Full,
    /// Cooperative leader, follower, bully and maximin only.
    Simple,
}

/// The fixed, ordered expert roster for `seat` in `game`.
///
/// Full roster order: TriggerLeader(NBS plan), TriggerLeader(own best bully
/// plan), Bully, BullyL, BullyF, Follower, Maximin, MBRL.
pub fn build_expert_set(game: &Game, seat: Player, roster: RosterKind, mbrl: MbrlParams) -> Vec<Expert> {
    let a = SeatAnalysis::new(game, seat);
    let bully_target = JointPlan::stationary(a.bully_cell);
    let mut out = vec![Expert::leader(ExpertKind::TriggerLeader, a.nbs_plan.clone(), game, &a)];
    if roster == RosterKind::Full {
        out.push(Expert::leader(
            ExpertKind::TriggerLeader,
            a.bully_plan.clone(),
            game,
            &a,
        ));
    }
    out.push(Expert::leader(ExpertKind::Bully, bully_target.clone(), game, &a));
    if roster == RosterKind::Full {
        out.push(Expert::leader(ExpertKind::BullyL, bully_target, game, &a));
        out.push(Expert::plain(ExpertKind::BullyF, &a));
    }
    out.push(Expert::plain(ExpertKind::Follower, &a));
    out.push(Expert::plain(ExpertKind::Maximin, &a));
    if roster == RosterKind::Full {
        let mut e = Expert::plain(ExpertKind::Mbrl, &a);
        e.model = Some(ModelBasedLearner::new(game, seat, mbrl));
        out.push(e);
    }
    for e in out.iter_mut() {
        e.reset(0);
    }
    out
}
