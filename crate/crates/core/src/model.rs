//! Model-based reinforcement learning over short joint-action histories.
//!
//! The state is the last `memory` joint actions. The learner counts the
//! partner's replies in each state, runs finite-horizon discounted value
//! iteration on that model, and acts epsilon-greedily. Unvisited states are
//! valued optimistically at the game's maximum payoff, and exact ties between
//! actions go to the security action. Values are kept in per-round payoff
//! units.

use rand::Rng;
use serde::Serialize;

use crate::game::{Action, Game, JointAction, Player};
use crate::solve::security_action;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MbrlParams {
    pub memory: usize,
    pub gamma: f64,
    pub horizon: usize,
    pub epsilon0: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub explore: bool,
}

impl Default for MbrlParams {
    fn default() -> Self {
        MbrlParams {
            memory: 1,
            gamma: 0.95,
            horizon: 50,
            epsilon0: 0.1,
            epsilon_decay: 0.999,
            epsilon_min: 0.01,
            explore: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelBasedLearner {
    params: MbrlParams,
    seat: Player,
    /// `own[a][b]`: own payoff for own action `a`, partner action `b`.
    own: [[f64; 2]; 2],
    optimistic: f64,
    tie_break: Action,
    /// Partner reply counts per complete history state.
    counts: Vec<[u32; 2]>,
    history: Vec<JointAction>,
    steps: u64,
    values: Option<Vec<f64>>,
}

impl ModelBasedLearner {
    pub fn new(game: &Game, seat: Player, params: MbrlParams) -> Self {
        assert!(params.memory >= 1, "memory must be at least one round");
        let mut own = [[0.0; 2]; 2];
        for a in Action::BOTH {
            for b in Action::BOTH {
                own[a.index()][b.index()] = game.payoff_seat(seat, a, b);
            }
        }
        ModelBasedLearner {
            params,
            seat,
            own,
            optimistic: game.max_payoff(),
            tie_break: security_action(game, seat),
            counts: vec![[0, 0]; 4usize.pow(params.memory as u32)],
            history: Vec::new(),
            steps: 0,
            values: None,
        }
    }

    pub fn params(&self) -> &MbrlParams {
        &self.params
    }

    fn n_states(&self) -> usize {
        self.counts.len()
    }

    fn state_of(&self, history: &[JointAction]) -> Option<usize> {
        if history.len() < self.params.memory {
            return None;
        }
        let tail = &history[history.len() - self.params.memory..];
        Some(tail.iter().fold(0, |acc, ja| acc * 4 + ja.cell_index()))
    }

    fn successor(&self, s: usize, ja: JointAction) -> usize {
        (s * 4 + ja.cell_index()) % self.n_states()
    }

    fn current_state(&self) -> Option<usize> {
        self.state_of(&self.history)
    }

    fn value_table(&mut self) -> &Vec<f64> {
        if self.values.is_none() {
            self.values = Some(self.value_iteration());
        }
        self.values.as_ref().expect("just computed")
    }

    fn value_iteration(&self) -> Vec<f64> {
        let n = self.n_states();
        let mut v = vec![self.optimistic; n];
        for _ in 0..self.params.horizon {
            let next: Vec<f64> = (0..n)
                .map(|s| {
                    let q = self.q_values(s, &v);
                    q[0].max(q[1])
                })
                .collect();
            v = next;
        }
        v
    }

    fn q_values(&self, s: usize, v: &[f64]) -> [f64; 2] {
        let [c0, c1] = self.counts[s];
        let total = c0 + c1;
        if total == 0 {
            return [self.optimistic; 2];
        }
        let g = self.params.gamma;
        let mut q = [0.0; 2];
        for a in Action::BOTH {
            let mut acc = 0.0;
            for b in Action::BOTH {
                let p = self.counts[s][b.index()] as f64 / total as f64;
                if p == 0.0 {
                    continue;
                }
                let ja = JointAction::from_seat(self.seat, a, b);
                acc += p * ((1.0 - g) * self.own[a.index()][b.index()] + g * v[self.successor(s, ja)]);
            }
            q[a.index()] = acc;
        }
        q
    }

    /// Greedy action values in the current state.
    pub fn current_q(&mut self) -> [f64; 2] {
        let Some(s) = self.current_state() else {
            return [self.optimistic; 2];
        };
        let v = self.value_table().clone();
        self.q_values(s, &v)
    }

    /// Highest estimated long-run per-round value from the current state.
    pub fn potential(&mut self) -> f64 {
        let q = self.current_q();
        q[0].max(q[1])
    }

    pub fn epsilon(&self) -> f64 {
        if !self.params.explore {
            return 0.0;
        }
        (self.params.epsilon0 * self.params.epsilon_decay.powf(self.steps as f64)).max(self.params.epsilon_min)
    }

    pub fn greedy_action(&mut self) -> Action {
        let q = self.current_q();
        if q[1] > q[0] {
            Action::SECOND
        } else if q[0] > q[1] {
            Action::FIRST
        } else {
            self.tie_break
        }
    }

    pub fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Action {
        let eps = self.epsilon();
        if eps > 0.0 && rng.gen::<f64>() < eps {
            if rng.gen::<bool>() {
                Action::FIRST
            } else {
                Action::SECOND
            }
        } else {
            self.greedy_action()
        }
    }

    pub fn observe(&mut self, joint: JointAction) {
        if let Some(s) = self.current_state() {
            let b = joint.action_of(self.seat.other());
            self.counts[s][b.index()] += 1;
            self.values = None;
        }
        self.history.push(joint);
        let keep = self.params.memory;
        if self.history.len() > keep {
            self.history.drain(..self.history.len() - keep);
        }
        self.steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_model_is_optimistic() {
        let g = Game::prisoners_dilemma_0135();
        let mut m = ModelBasedLearner::new(&g, Player::Row, MbrlParams::default());
        assert_eq!(m.potential(), 5.0);
    }

    #[test]
    fn learns_to_defect_against_always_cooperate() {
        let g = Game::prisoners_dilemma_0135();
        let params = MbrlParams {
            explore: false,
            ..Default::default()
        };
        let mut m = ModelBasedLearner::new(&g, Player::Row, params);
        for _ in 0..40 {
            let a = m.greedy_action();
            m.observe(JointAction::new(a, Action::FIRST));
        }
        // every reached state predicts cooperation, so defecting pays 5
        m.observe(JointAction::new(Action::SECOND, Action::FIRST));
        assert_eq!(m.greedy_action(), Action::SECOND);
    }

    #[test]
    fn epsilon_schedule_floor() {
        let g = Game::prisoners_dilemma();
        let mut m = ModelBasedLearner::new(&g, Player::Col, MbrlParams::default());
        assert!((m.epsilon() - 0.1).abs() < 1e-15);
        for _ in 0..5000 {
            m.observe(JointAction::all()[0]);
        }
        assert_eq!(m.epsilon(), 0.01);
    }

    #[test]
    fn deterministic_without_exploration() {
        let g = Game::chicken();
        let params = MbrlParams {
            explore: false,
            memory: 2,
            ..Default::default()
        };
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = ModelBasedLearner::new(&g, Player::Row, params);
            let mut trace = Vec::new();
            for t in 0..30 {
                let a = m.choose(&mut rng);
                let b = if t % 3 == 0 { Action::SECOND } else { Action::FIRST };
                m.observe(JointAction::new(a, b));
                trace.push(a);
            }
            trace
        };
        assert_eq!(run(1), run(2));
    }
}
