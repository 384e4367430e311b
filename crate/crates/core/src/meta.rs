//! Aspiration-driven expert selection: algorithm S, S++ and S#.
//!
//! The three variants share one agent. S satisfices over the whole roster,
//! S++ first prunes experts whose potential falls short of the aspiration
//! level, and S# additionally restricts itself to experts congruent with
//! the partner's latest proposal and narrates its selected expert's state.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentError, Outcome, RoundClock};
use crate::experts::{build_expert_set, Expert, ExpertId, RosterKind, SeatAnalysis, Transition};
use crate::game::{Action, Game, JointPlan, Player};
use crate::model::MbrlParams;
use crate::signaling::{emit_speech, interpret_plan, Act, SpeakerRole, SpeechAct, SpeechEvent, MAX_ACTS_PER_ROUND};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    S,
    Spp,
    SSharp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetaConfig {
    pub variant: Variant,
    pub lambda: f64,
    /// Epoch length in rounds.
    pub m: usize,
    /// Initial aspiration; `None` starts at the agent's own payoff under
    /// the game's bargaining solution, or at its maximin value if that is
    /// higher.
    pub alpha0: Option<f64>,
    pub seed: u64,
    pub talk: bool,
    pub roster: RosterKind,
    pub mbrl: MbrlParams,
}

impl MetaConfig {
    pub fn new(variant: Variant, seed: u64) -> Self {
        MetaConfig {
            variant,
            lambda: 0.99,
            m: 10,
            alpha0: None,
            seed,
            talk: false,
            roster: RosterKind::Full,
            mbrl: MbrlParams::default(),
        }
    }

    pub fn with_talk(mut self, talk: bool) -> Self {
        self.talk = talk;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AspirationState<F = f64> {
    pub alpha: F,
    pub lambda: F,
    pub m: usize,
    pub epoch_reward_sum: F,
}

impl<F: Float> AspirationState<F> {
    pub fn new(alpha: F, lambda: F, m: usize) -> Self {
        assert!(m >= 1, "epoch length must be at least one round");
        AspirationState {
            alpha,
            lambda,
            m,
            epoch_reward_sum: F::zero(),
        }
    }
}

/// `alpha' = lambda^m * alpha + (1 - lambda^m) * r`, clamped to `[lo, hi]`.
/// The epoch reward sum is reset.
pub fn update_aspiration<F: Float>(s: &AspirationState<F>, r: F, lo: F, hi: F) -> AspirationState<F> {
    let w = s.lambda.powi(s.m as i32);
    let alpha = (w * s.alpha + (F::one() - w) * r).max(lo).min(hi);
    AspirationState {
        alpha,
        epoch_reward_sum: F::zero(),
        ..*s
    }
}

/// Indices of experts whose potential reaches `alpha`; when none does, the
/// single highest-potential expert (lowest index on ties).
pub fn prune_by_aspiration(potentials: &[f64], alpha: f64) -> Vec<usize> {
    let kept: Vec<usize> = (0..potentials.len()).filter(|&i| potentials[i] >= alpha).collect();
    if !kept.is_empty() || potentials.is_empty() {
        return kept;
    }
    let mut best = 0;
    for (i, p) in potentials.iter().enumerate() {
        if *p > potentials[best] {
            best = i;
        }
    }
    vec![best]
}

/// Indices of experts congruent with the partner's last proposal, or every
/// expert when nothing has been proposed.
pub fn prune_by_congruence(
    experts: &[Expert],
    game: &Game,
    analysis: &SeatAnalysis,
    proposal: Option<&JointPlan>,
) -> Vec<usize> {
    match proposal {
        None => (0..experts.len()).collect(),
        Some(p) => (0..experts.len())
            .filter(|&i| experts[i].congruent_with(game, analysis, p))
            .collect(),
    }
}

/// Satisficing choice: keep `current` when it is a candidate and the epoch
/// met the aspiration, otherwise draw uniformly from `candidates`.
pub fn select_expert<R: Rng + ?Sized>(
    candidates: &[usize],
    current: Option<usize>,
    epoch_avg_reward: f64,
    alpha: f64,
    rng: &mut R,
) -> usize {
    assert!(!candidates.is_empty(), "selection needs a candidate");
    if let Some(c) = current {
        if epoch_avg_reward >= alpha && candidates.contains(&c) {
            return c;
        }
    }
    candidates[rng.gen_range(0..candidates.len())]
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|i| b.contains(i)).collect()
}

/// Inspectable snapshot of the agent's selection machinery.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetaState {
    pub variant: Variant,
    pub talk_enabled: bool,
    pub aspiration: AspirationState,
    pub experts: Vec<ExpertId>,
    pub potentials: Vec<f64>,
    pub selected: usize,
    pub pruned: Vec<usize>,
    pub congruent: Vec<usize>,
}

#[derive(Clone, Debug)]
struct OwnProposal {
    round: usize,
    expert: usize,
    plan: JointPlan,
}

pub struct MetaAgent {
    game: Game,
    analysis: SeatAnalysis,
    config: MetaConfig,
    experts: Vec<Expert>,
    selected: usize,
    aspiration: AspirationState,
    potentials: Vec<f64>,
    pruned: Vec<usize>,
    congruent: Vec<usize>,
    rng: ChaCha8Rng,
    clock: RoundClock,
    partner_plan: Option<JointPlan>,
    own_proposal: Option<OwnProposal>,
    pending: Vec<SpeechEvent>,
    switches: Vec<(usize, usize)>,
}

impl MetaAgent {
    pub fn new(game: &Game, seat: Player, config: MetaConfig) -> Self {
        let analysis = SeatAnalysis::new(game, seat);
        let experts = build_expert_set(game, seat, config.roster, config.mbrl);
        let alpha0 = config
            .alpha0
            .unwrap_or_else(|| analysis.nbs_plan.average_payoff(game, seat).max(analysis.maximin.value))
            .clamp(analysis.min_payoff, analysis.max_payoff);
        let mut agent = MetaAgent {
            game: game.clone(),
            analysis,
            aspiration: AspirationState::new(alpha0, config.lambda, config.m),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            experts,
            selected: 0,
            potentials: Vec::new(),
            pruned: Vec::new(),
            congruent: Vec::new(),
            clock: RoundClock::default(),
            partner_plan: None,
            own_proposal: None,
            pending: Vec::new(),
            switches: Vec::new(),
        };
        let candidates = agent.epoch_candidates();
        let first = select_expert(&candidates, None, 0.0, alpha0, &mut agent.rng);
        agent.selected = first;
        agent.experts[first].reset(0);
        agent.switches.push((0, first));
        if agent.talk_active() {
            agent.pending.push(SpeechEvent::RoundStartFirst);
        }
        agent
    }

    pub fn config(&self) -> &MetaConfig {
        &self.config
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn selected(&self) -> &Expert {
        &self.experts[self.selected]
    }

    pub fn selected_index(&self) -> usize {
        self.selected
    }

    pub fn aspiration(&self) -> &AspirationState {
        &self.aspiration
    }

    /// `(round, expert index)` for every selection change, starting with the
    /// initial choice.
    pub fn switch_log(&self) -> &[(usize, usize)] {
        &self.switches
    }

    pub fn state(&self) -> MetaState {
        MetaState {
            variant: self.config.variant,
            talk_enabled: self.config.talk,
            aspiration: self.aspiration,
            experts: self.experts.iter().map(|e| e.id.clone()).collect(),
            potentials: self.potentials.clone(),
            selected: self.selected,
            pruned: self.pruned.clone(),
            congruent: self.congruent.clone(),
        }
    }

    fn talk_active(&self) -> bool {
        self.config.talk && self.config.variant == Variant::SSharp
    }

    fn compute_potentials(&mut self) {
        let (game, analysis) = (&self.game, &self.analysis);
        self.potentials = self.experts.iter_mut().map(|e| e.potential(game, analysis)).collect();
    }

    /// Selection set at an epoch boundary.
    fn epoch_candidates(&mut self) -> Vec<usize> {
        if self.config.variant == Variant::S {
            let all: Vec<usize> = (0..self.experts.len()).collect();
            self.pruned = all.clone();
            self.congruent = all.clone();
            return all;
        }
        self.compute_potentials();
        let e1 = prune_by_aspiration(&self.potentials, self.aspiration.alpha);
        self.pruned = e1.clone();
        if !self.talk_active() {
            self.congruent = (0..self.experts.len()).collect();
            return e1;
        }
        self.congruent = prune_by_congruence(&self.experts, &self.game, &self.analysis, self.partner_plan.as_ref());
        let e3 = intersect(&e1, &self.congruent);
        self.articulate(if e3.is_empty() { e1 } else { e3 })
    }

    /// With talk on, prefers experts that can voice a plan over silent ones.
    fn articulate(&self, set: Vec<usize>) -> Vec<usize> {
        if !self.talk_active() {
            return set;
        }
        let vocal: Vec<usize> = set
            .iter()
            .copied()
            .filter(|&i| self.experts[i].kind().speaker_role() != SpeakerRole::Silent)
            .collect();
        if vocal.is_empty() {
            set
        } else {
            vocal
        }
    }

    fn switch_to(&mut self, next: usize, round: usize) {
        if next == self.selected {
            return;
        }
        self.selected = next;
        self.experts[next].reset(round);
        self.switches.push((round, next));
        if self.talk_active() {
            self.pending
                .retain(|e| matches!(e, SpeechEvent::ProposalReceived { .. }));
            self.pending.insert(0, SpeechEvent::ExpertSwitched);
            self.pending.insert(1, SpeechEvent::RoundStartFirst);
        }
    }

    fn epoch_boundary(&mut self, next_round: usize) {
        let m = self.aspiration.m as f64;
        let r = self.aspiration.epoch_reward_sum / m;
        self.aspiration = update_aspiration(&self.aspiration, r, self.analysis.min_payoff, self.analysis.max_payoff);
        let alpha = self.aspiration.alpha;
        let mut candidates = self.epoch_candidates();
        let current = self.selected;
        if r >= alpha && !candidates.contains(&current) {
            // a satisfied agent keeps its expert regardless of pruning
            candidates.push(current);
            self.pruned.push(current);
        }
        let next = select_expert(&candidates, Some(current), r, alpha, &mut self.rng);
        self.switch_to(next, next_round);
    }

    /// Mid-epoch re-selection after new information from the partner.
    fn reconsider(&mut self, round: usize) {
        self.compute_potentials();
        let e1 = prune_by_aspiration(&self.potentials, self.aspiration.alpha);
        let cong = prune_by_congruence(&self.experts, &self.game, &self.analysis, self.partner_plan.as_ref());
        let e3 = intersect(&e1, &cong);
        let cur = self.selected;
        let next = if e3.contains(&cur) {
            cur
        } else if !e3.is_empty() {
            let pool = self.articulate(e3);
            pool[self.rng.gen_range(0..pool.len())]
        } else if e1.contains(&cur) {
            cur
        } else {
            let pool = self.articulate(e1.clone());
            pool[self.rng.gen_range(0..pool.len())]
        };
        self.pruned = e1;
        self.congruent = cong;
        self.switch_to(next, round);
    }

    fn transition_event(t: Transition) -> Option<SpeechEvent> {
        match t {
            Transition::None => None,
            Transition::Complied => Some(SpeechEvent::PartnerComplied),
            Transition::Deviated => Some(SpeechEvent::PartnerDeviated),
            Transition::PunishmentEnd => Some(SpeechEvent::PunishmentEnd),
        }
    }
}

impl Agent for MetaAgent {
    fn speak(&mut self, round: usize) -> Vec<SpeechAct> {
        if !self.talk_active() {
            return Vec::new();
        }
        let events = std::mem::take(&mut self.pending);
        let expert = &mut self.experts[self.selected];
        let role = expert.kind().speaker_role();
        let plan = expert.plan().cloned();
        let mut out = Vec::new();
        for event in events {
            let (machine, acts) = emit_speech(role, plan.as_ref(), expert.state.speech, event);
            expert.state.speech = machine;
            out.extend(acts);
        }
        while out.len() > MAX_ACTS_PER_ROUND {
            match out.iter().position(|a| !a.id.is_proposal()) {
                Some(i) => out.remove(i),
                None => out.remove(0),
            };
        }
        if let Some(p) = out.iter().rev().find_map(|a| a.plan().ok().flatten()) {
            self.own_proposal = Some(OwnProposal {
                round,
                expert: self.selected,
                plan: p,
            });
        }
        out
    }

    fn hear(&mut self, round: usize, acts: &[SpeechAct]) -> Result<(), AgentError> {
        let proposal = interpret_plan(acts)?;
        if !self.talk_active() {
            return Ok(());
        }
        let mut rethink = false;
        if acts.iter().any(|a| a.id == Act::Reject) {
            if let Some(own) = &self.own_proposal {
                if own.round < round && own.expert == self.selected {
                    let refused = own.plan.clone();
                    for e in self.experts.iter_mut() {
                        if e.target().is_some_and(|t| t.same_cycle(&refused)) {
                            e.refused();
                        }
                    }
                    self.own_proposal = None;
                    rethink = true;
                }
            }
        }
        let mut fresh = false;
        if let Some(p) = proposal {
            fresh = self.partner_plan.as_ref().is_none_or(|old| !old.same_cycle(&p));
            for e in self.experts.iter_mut() {
                e.set_demand(p.clone());
            }
            self.partner_plan = Some(p);
            rethink |= fresh;
        }
        if rethink {
            self.reconsider(round);
        }
        if fresh {
            let plan = self.partner_plan.as_ref().expect("just stored");
            let congruent = self.experts[self.selected].congruent_with(&self.game, &self.analysis, plan);
            self.pending.push(SpeechEvent::ProposalReceived { congruent });
        }
        Ok(())
    }

    fn act(&mut self, round: usize) -> Result<Action, AgentError> {
        self.clock.check(round)?;
        let (game, analysis) = (&self.game, &self.analysis);
        Ok(self.experts[self.selected].next_action(game, analysis, round, &mut self.rng))
    }

    fn observe(&mut self, outcome: &Outcome) -> Result<(), AgentError> {
        self.clock.advance(outcome.round)?;
        let selected = self.selected;
        let mut event = None;
        for (i, e) in self.experts.iter_mut().enumerate() {
            let t = e.observe(&self.game, &self.analysis, outcome, i == selected);
            if i == selected {
                event = Self::transition_event(t);
            }
        }
        if self.talk_active() {
            self.pending.extend(event);
        }
        self.aspiration.epoch_reward_sum += outcome.payoff(self.analysis.seat);
        let next_round = outcome.round + 1;
        if next_round.is_multiple_of(self.aspiration.m) {
            self.epoch_boundary(next_round);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointAction;

    fn play(a: &mut MetaAgent, b: &mut MetaAgent, game: &Game, rounds: usize, talk: bool) -> Vec<JointAction> {
        let mut trace = Vec::new();
        for t in 0..rounds {
            if talk {
                let sa = a.speak(t);
                let sb = b.speak(t);
                a.hear(t, &sb).unwrap();
                b.hear(t, &sa).unwrap();
            }
            let joint = JointAction::new(a.act(t).unwrap(), b.act(t).unwrap());
            let o = Outcome {
                round: t,
                joint,
                payoffs: game.payoffs(joint),
            };
            a.observe(&o).unwrap();
            b.observe(&o).unwrap();
            trace.push(joint);
        }
        trace
    }

    #[test]
    fn aspiration_update_value() {
        let s = AspirationState::new(1.0, 0.95, 5);
        let next = update_aspiration(&s, 3.0, 0.0, 5.0);
        assert!((next.alpha - 1.4524381250).abs() < 1e-9);
        let s32 = AspirationState::new(1.0f32, 0.95, 5);
        assert!((update_aspiration(&s32, 3.0, 0.0, 5.0).alpha - 1.452_438_1).abs() < 1e-5);
    }

    #[test]
    fn aspiration_fixed_point_and_clamp() {
        let s = AspirationState::new(2.0, 0.7, 3);
        assert_eq!(update_aspiration(&s, 2.0, 1.0, 4.0).alpha, 2.0);
        let s = AspirationState::new(4.0, 0.0, 1);
        assert_eq!(update_aspiration(&s, 9.0, 1.0, 4.0).alpha, 4.0);
    }

    #[test]
    fn pruning_examples() {
        let p = [3.0, 2.5, 1.0];
        assert_eq!(prune_by_aspiration(&p, 2.0), vec![0, 1]);
        assert_eq!(prune_by_aspiration(&p, 0.0), vec![0, 1, 2]);
        assert_eq!(prune_by_aspiration(&p, 4.0), vec![0]);
        assert_eq!(prune_by_aspiration(&[1.0, 2.0, 2.0], 9.0), vec![1]);
    }

    #[test]
    fn congruence_examples() {
        let g = Game::prisoners_dilemma();
        let a = SeatAnalysis::new(&g, Player::Row);
        let ex = build_expert_set(&g, Player::Row, RosterKind::Full, MbrlParams::default());
        assert_eq!(prune_by_congruence(&ex, &g, &a, None).len(), ex.len());
        let cc = JointPlan::stationary(JointAction::from_indices(0, 0).unwrap());
        let kinds: Vec<_> = prune_by_congruence(&ex, &g, &a, Some(&cc))
            .into_iter()
            .map(|i| ex[i].kind())
            .collect();
        use crate::experts::ExpertKind::*;
        assert!(kinds.contains(&TriggerLeader) && kinds.contains(&Follower));
        assert!(!kinds.contains(&Maximin) && !kinds.contains(&Mbrl));
    }

    #[test]
    fn selection_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(select_expert(&[0, 2, 5], Some(2), 3.0, 2.5, &mut rng), 2);
        assert_eq!(select_expert(&[4], Some(1), 0.0, 2.5, &mut rng), 4);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[select_expert(&[0, 1, 2, 3], Some(0), 1.0, 2.0, &mut rng)] += 1;
        }
        // chi-square with 3 dof; 16.27 is the 0.999 quantile
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        assert!(chi2 < 16.27, "{counts:?}");
    }

    #[test]
    fn ssharp_without_talk_matches_spp() {
        let g = Game::chicken();
        for seed in 0..4 {
            let mk = |v, s| MetaAgent::new(&g, Player::Row, MetaConfig::new(v, s));
            let mk_c = |v, s| MetaAgent::new(&g, Player::Col, MetaConfig::new(v, s));
            let x = play(
                &mut mk(Variant::Spp, seed),
                &mut mk_c(Variant::Spp, seed + 100),
                &g,
                300,
                false,
            );
            let y = play(
                &mut mk(Variant::SSharp, seed),
                &mut mk_c(Variant::SSharp, seed + 100),
                &g,
                300,
                false,
            );
            assert_eq!(x, y);
        }
    }

    #[test]
    fn protocol_violation_on_skipped_round() {
        let g = Game::prisoners_dilemma();
        let mut a = MetaAgent::new(&g, Player::Row, MetaConfig::new(Variant::Spp, 0));
        let joint = JointAction::from_indices(0, 0).unwrap();
        let o = Outcome {
            round: 1,
            joint,
            payoffs: g.payoffs(joint),
        };
        assert_eq!(
            a.observe(&o),
            Err(AgentError::ProtocolViolation { expected: 0, got: 1 })
        );
    }

    #[test]
    fn s_variant_never_computes_potentials() {
        let g = Game::prisoners_dilemma();
        let mut a = MetaAgent::new(&g, Player::Row, MetaConfig::new(Variant::S, 1));
        let mut b = MetaAgent::new(&g, Player::Col, MetaConfig::new(Variant::S, 2));
        play(&mut a, &mut b, &g, 50, false);
        assert!(a.state().potentials.is_empty());
        assert_eq!(a.state().pruned.len(), a.experts().len());
    }

    #[test]
    fn ssharp_pair_proposes_and_cooperates() {
        let g = Game::prisoners_dilemma();
        let mut a = MetaAgent::new(&g, Player::Row, MetaConfig::new(Variant::SSharp, 11).with_talk(true));
        let mut b = MetaAgent::new(&g, Player::Col, MetaConfig::new(Variant::SSharp, 12).with_talk(true));
        let trace = play(&mut a, &mut b, &g, 60, true);
        let cc = JointAction::from_indices(0, 0).unwrap();
        assert!(trace[40..].iter().all(|j| *j == cc), "{trace:?}");
    }
}
