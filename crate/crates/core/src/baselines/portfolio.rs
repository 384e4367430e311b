//! Expert-portfolio learners that select among the same experts as S++,
//! but with classical bandit and explore/exploit rules.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Policy;
use crate::agent::Outcome;
use crate::experts::{build_expert_set, Expert, RosterKind, SeatAnalysis};
use crate::game::{Action, Game, Player};
use crate::model::MbrlParams;

struct Portfolio {
    game: Game,
    analysis: SeatAnalysis,
    experts: Vec<Expert>,
    selected: usize,
}

impl Portfolio {
    fn new(game: &Game, seat: Player, roster: RosterKind) -> Self {
        Portfolio {
            game: game.clone(),
            analysis: SeatAnalysis::new(game, seat),
            experts: build_expert_set(game, seat, roster, MbrlParams::default()),
            selected: 0,
        }
    }

    fn select(&mut self, i: usize, round: usize) {
        if i != self.selected || round == 0 {
            self.experts[i].reset(round);
        }
        self.selected = i;
    }

    fn act(&mut self, round: usize, rng: &mut ChaCha8Rng) -> Action {
        self.experts[self.selected].next_action(&self.game, &self.analysis, round, rng)
    }

    fn observe(&mut self, outcome: &Outcome) -> f64 {
        for (i, e) in self.experts.iter_mut().enumerate() {
            e.observe(&self.game, &self.analysis, outcome, i == self.selected);
        }
        outcome.payoff(self.analysis.seat)
    }

    fn normalized(&self, payoff: f64) -> f64 {
        let span = self.analysis.max_payoff - self.analysis.min_payoff;
        if span > 0.0 {
            (payoff - self.analysis.min_payoff) / span
        } else {
            0.5
        }
    }
}

/// Explore/exploit over experts: each phase of `phase` rounds follows one
/// expert, exploring uniformly with probability `1/sqrt(k)` in phase `k`
/// and otherwise exploiting the best average so far.
pub(crate) struct Eee {
    pf: Portfolio,
    phase: usize,
    phases_started: usize,
    averages: Vec<f64>,
    rounds_played: Vec<u64>,
    phase_sum: f64,
    phase_rounds: usize,
}

impl Eee {
    pub fn new(game: &Game, seat: Player, roster: RosterKind, phase: usize) -> Self {
        let pf = Portfolio::new(game, seat, roster);
        let n = pf.experts.len();
        let optimistic = pf.analysis.max_payoff;
        Eee {
            pf,
            phase: phase.max(1),
            phases_started: 0,
            averages: vec![optimistic; n],
            rounds_played: vec![0; n],
            phase_sum: 0.0,
            phase_rounds: 0,
        }
    }

    fn start_phase(&mut self, round: usize, rng: &mut ChaCha8Rng) {
        self.phases_started += 1;
        let explore = 1.0 / (self.phases_started as f64).sqrt();
        let n = self.averages.len();
        let pick = if rng.gen::<f64>() < explore {
            rng.gen_range(0..n)
        } else {
            let mut best = 0;
            for i in 1..n {
                if self.averages[i] > self.averages[best] {
                    best = i;
                }
            }
            best
        };
        self.pf.select(pick, round);
    }
}

impl Policy for Eee {
    fn choose(&mut self, round: usize, rng: &mut ChaCha8Rng) -> Action {
        if round.is_multiple_of(self.phase) {
            self.start_phase(round, rng);
        }
        self.pf.act(round, rng)
    }

    fn update(&mut self, outcome: &Outcome) {
        self.phase_sum += self.pf.observe(outcome);
        self.phase_rounds += 1;
        if (outcome.round + 1).is_multiple_of(self.phase) {
            let i = self.pf.selected;
            let before = self.rounds_played[i] as f64;
            let added = self.phase_rounds as f64;
            let prior = if self.rounds_played[i] == 0 {
                0.0
            } else {
                self.averages[i] * before
            };
            self.averages[i] = (prior + self.phase_sum) / (before + added);
            self.rounds_played[i] += self.phase_rounds as u64;
            self.phase_sum = 0.0;
            self.phase_rounds = 0;
        }
    }
}

/// Exp3 over experts; one draw per block of `block` rounds, rewarded with
/// the block's mean payoff rescaled to `[0, 1]`.
pub(crate) struct Exp3Experts {
    pf: Portfolio,
    gamma: f64,
    block: usize,
    logw: Vec<f64>,
    probs: Vec<f64>,
    block_sum: f64,
    block_rounds: usize,
}

impl Exp3Experts {
    pub fn new(game: &Game, seat: Player, gamma: f64, block: usize) -> Self {
        let pf = Portfolio::new(game, seat, RosterKind::Full);
        let n = pf.experts.len();
        Exp3Experts {
            pf,
            gamma,
            block: block.max(1),
            logw: vec![0.0; n],
            probs: vec![1.0 / n as f64; n],
            block_sum: 0.0,
            block_rounds: 0,
        }
    }

    fn distribution(&self) -> Vec<f64> {
        let k = self.logw.len() as f64;
        let m = self.logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = self.logw.iter().map(|w| (w - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|x| (1.0 - self.gamma) * x / z + self.gamma / k).collect()
    }
}

impl Policy for Exp3Experts {
    fn choose(&mut self, round: usize, rng: &mut ChaCha8Rng) -> Action {
        if round.is_multiple_of(self.block) {
            self.probs = self.distribution();
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = self.probs.len() - 1;
            for (i, p) in self.probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            self.pf.select(pick, round);
        }
        self.pf.act(round, rng)
    }

    fn update(&mut self, outcome: &Outcome) {
        self.block_sum += self.pf.observe(outcome);
        self.block_rounds += 1;
        if (outcome.round + 1).is_multiple_of(self.block) {
            let i = self.pf.selected;
            let x = self.pf.normalized(self.block_sum / self.block_rounds as f64);
            let k = self.logw.len() as f64;
            self.logw[i] += self.gamma * (x / self.probs[i]) / k;
            let m = self.logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for w in self.logw.iter_mut() {
                *w -= m;
            }
            self.block_sum = 0.0;
            self.block_rounds = 0;
        }
    }
}
