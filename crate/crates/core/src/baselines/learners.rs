use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Policy, SeatView};
use crate::agent::Outcome;
use crate::game::{Action, Game, Player};
use crate::model::{MbrlParams, ModelBasedLearner};

fn sample2(rng: &mut ChaCha8Rng, p_first: f64) -> Action {
    if rng.gen::<f64>() < p_first {
        Action::FIRST
    } else {
        Action::SECOND
    }
}

/// Softmax over two log-weights, computed stably.
fn softmax2(logw: [f64; 2]) -> [f64; 2] {
    let m = logw[0].max(logw[1]);
    let e = [(logw[0] - m).exp(), (logw[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

/// Best (or logit, when `temperature` is set) response to the empirical
/// frequency of the partner's past actions.
pub(crate) struct FictitiousPlay {
    view: SeatView,
    temperature: Option<f64>,
    counts: [u64; 2],
}

impl FictitiousPlay {
    pub fn new(view: SeatView, temperature: Option<f64>) -> Self {
        FictitiousPlay {
            view,
            temperature,
            counts: [0, 0],
        }
    }

    /// Believed probability that the partner plays its first action.
    pub fn belief(&self) -> f64 {
        let total = self.counts[0] + self.counts[1];
        if total == 0 {
            0.5
        } else {
            self.counts[0] as f64 / total as f64
        }
    }

    fn best_response(&self, p: f64) -> Action {
        let u0 = self.view.expected(Action::FIRST, p);
        let u1 = self.view.expected(Action::SECOND, p);
        if u1 > u0 {
            Action::SECOND
        } else if u0 > u1 {
            Action::FIRST
        } else {
            self.view.security
        }
    }
}

impl Policy for FictitiousPlay {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        let p = self.belief();
        match self.temperature {
            None => self.best_response(p),
            Some(tau) => {
                let u = [
                    self.view.normalized(self.view.expected(Action::FIRST, p)),
                    self.view.normalized(self.view.expected(Action::SECOND, p)),
                ];
                let probs = softmax2([u[0] / tau, u[1] / tau]);
                sample2(rng, probs[0])
            }
        }
    }

    fn update(&mut self, outcome: &Outcome) {
        self.counts[outcome.action_of(self.view.seat.other()).index()] += 1;
    }
}

/// Epsilon-greedy Q-learning with the previous joint action as state.
pub(crate) struct QLearner {
    view: SeatView,
    alpha: f64,
    gamma: f64,
    epsilon: f64,
    /// State 0 is the start of the game; states 1..=4 are the last cell.
    q: [[f64; 2]; 5],
    state: usize,
}

impl QLearner {
    pub fn new(view: SeatView, alpha: f64, gamma: f64, epsilon: f64) -> Self {
        QLearner {
            view,
            alpha,
            gamma,
            epsilon,
            q: [[0.0; 2]; 5],
            state: 0,
        }
    }
}

impl Policy for QLearner {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        if rng.gen::<f64>() < self.epsilon {
            return sample2(rng, 0.5);
        }
        let q = self.q[self.state];
        if q[1] > q[0] {
            Action::SECOND
        } else if q[0] > q[1] {
            Action::FIRST
        } else {
            self.view.security
        }
    }

    fn update(&mut self, outcome: &Outcome) {
        let a = outcome.action_of(self.view.seat).index();
        let r = outcome.payoff(self.view.seat);
        let next = outcome.joint.cell_index() + 1;
        let target = r + self.gamma * self.q[next][0].max(self.q[next][1]);
        let cell = &mut self.q[self.state][a];
        *cell += self.alpha * (target - *cell);
        self.state = next;
    }
}

pub(crate) struct Mbrl {
    model: ModelBasedLearner,
}

impl Mbrl {
    pub fn new(game: &Game, seat: Player, params: MbrlParams) -> Self {
        Mbrl {
            model: ModelBasedLearner::new(game, seat, params),
        }
    }
}

impl Policy for Mbrl {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        self.model.choose(rng)
    }

    fn update(&mut self, outcome: &Outcome) {
        self.model.observe(outcome.joint);
    }
}

/// Exp3 bandit over the two actions, rewards rescaled to `[0, 1]`.
pub(crate) struct Exp3Actions {
    view: SeatView,
    gamma: f64,
    logw: [f64; 2],
    last_probs: [f64; 2],
}

impl Exp3Actions {
    pub fn new(view: SeatView, gamma: f64) -> Self {
        Exp3Actions {
            view,
            gamma,
            logw: [0.0; 2],
            last_probs: [0.5; 2],
        }
    }

    fn probs(&self) -> [f64; 2] {
        let s = softmax2(self.logw);
        [
            (1.0 - self.gamma) * s[0] + self.gamma / 2.0,
            (1.0 - self.gamma) * s[1] + self.gamma / 2.0,
        ]
    }

    #[cfg(test)]
    pub fn weights(&self) -> [f64; 2] {
        softmax2(self.logw)
    }
}

impl Policy for Exp3Actions {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        self.last_probs = self.probs();
        sample2(rng, self.last_probs[0])
    }

    fn update(&mut self, outcome: &Outcome) {
        let a = outcome.action_of(self.view.seat).index();
        let x = self.view.normalized(outcome.payoff(self.view.seat));
        self.logw[a] += self.gamma * (x / self.last_probs[a]) / 2.0;
        let m = self.logw[0].max(self.logw[1]);
        self.logw = [self.logw[0] - m, self.logw[1] - m];
    }
}

/// Randomized weighted majority over the two actions with full
/// information: both actions are scored against the partner's real move.
pub(crate) struct WeightedMajority {
    view: SeatView,
    eta: f64,
    logw: [f64; 2],
}

impl WeightedMajority {
    pub fn new(view: SeatView, eta: f64) -> Self {
        WeightedMajority {
            view,
            eta,
            logw: [0.0; 2],
        }
    }

    #[cfg(test)]
    pub fn weights(&self) -> [f64; 2] {
        softmax2(self.logw)
    }
}

impl Policy for WeightedMajority {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        sample2(rng, softmax2(self.logw)[0])
    }

    fn update(&mut self, outcome: &Outcome) {
        let b = outcome.action_of(self.view.seat.other());
        for a in Action::BOTH {
            self.logw[a.index()] += self.eta * self.view.normalized(self.view.payoff(a, b));
        }
        let m = self.logw[0].max(self.logw[1]);
        self.logw = [self.logw[0] - m, self.logw[1] - m];
    }
}
