use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Policy, SeatView};
use crate::agent::Outcome;
use crate::game::{Action, Game, Player};
use crate::solve::bully_cell;

fn coin(rng: &mut ChaCha8Rng, p_first: f64) -> Action {
    if rng.gen::<f64>() < p_first {
        Action::FIRST
    } else {
        Action::SECOND
    }
}

pub(crate) struct Uniform;

impl Policy for Uniform {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        coin(rng, 0.5)
    }

    fn update(&mut self, _outcome: &Outcome) {}
}

/// Always plays its part of the bully cell.
pub(crate) struct Bully {
    action: Action,
}

impl Bully {
    pub fn new(game: &Game, seat: Player) -> Self {
        Bully {
            action: bully_cell(game, seat).action_of(seat),
        }
    }
}

impl Policy for Bully {
    fn choose(&mut self, _round: usize, _rng: &mut ChaCha8Rng) -> Action {
        self.action
    }

    fn update(&mut self, _outcome: &Outcome) {}
}

/// Bullies until the trailing mean payoff over `window` rounds drops below
/// the maximin value, then plays maximin for `window` rounds and retries.
pub(crate) struct Manipulator {
    bully: Action,
    view: SeatView,
    window: usize,
    recent: VecDeque<f64>,
    fallback_left: usize,
}

impl Manipulator {
    pub fn new(game: &Game, view: SeatView, window: usize) -> Self {
        Manipulator {
            bully: bully_cell(game, view.seat).action_of(view.seat),
            view,
            window: window.max(1),
            recent: VecDeque::new(),
            fallback_left: 0,
        }
    }
}

impl Policy for Manipulator {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        if self.fallback_left > 0 {
            coin(rng, self.view.maximin_p0)
        } else {
            self.bully
        }
    }

    fn update(&mut self, outcome: &Outcome) {
        if self.fallback_left > 0 {
            self.fallback_left -= 1;
            return;
        }
        self.recent.push_back(outcome.payoff(self.view.seat));
        if self.recent.len() > self.window {
            self.recent.pop_front();
        }
        if self.recent.len() == self.window {
            let mean = self.recent.iter().sum::<f64>() / self.window as f64;
            if mean < self.view.maximin_value {
                self.fallback_left = self.window;
                self.recent.clear();
            }
        }
    }
}

/// Cooperates, and answers a partner defection with the security action
/// unless it forgives (with probability `forgiveness`).
pub(crate) struct GenerousTitForTat {
    view: SeatView,
    forgiveness: f64,
    partner_defected: bool,
}

impl GenerousTitForTat {
    pub fn new(view: SeatView, forgiveness: f64) -> Self {
        GenerousTitForTat {
            view,
            forgiveness,
            partner_defected: false,
        }
    }
}

impl Policy for GenerousTitForTat {
    fn choose(&mut self, _round: usize, rng: &mut ChaCha8Rng) -> Action {
        if self.partner_defected && rng.gen::<f64>() >= self.forgiveness {
            self.view.security
        } else {
            self.view.cooperate
        }
    }

    fn update(&mut self, outcome: &Outcome) {
        self.partner_defected = outcome.action_of(self.view.seat.other()) != self.view.partner_cooperate;
    }
}

/// Repeats its last action when the payoff reached the midpoint of the
/// game's payoff range, otherwise switches.
pub(crate) struct WinStayLoseShift {
    view: SeatView,
    threshold: f64,
    next: Action,
}

impl WinStayLoseShift {
    pub fn new(view: SeatView) -> Self {
        WinStayLoseShift {
            threshold: (view.min_payoff + view.max_payoff) / 2.0,
            next: view.cooperate,
            view,
        }
    }
}

impl Policy for WinStayLoseShift {
    fn choose(&mut self, _round: usize, _rng: &mut ChaCha8Rng) -> Action {
        self.next
    }

    fn update(&mut self, outcome: &Outcome) {
        let mine = outcome.action_of(self.view.seat);
        self.next = if outcome.payoff(self.view.seat) >= self.threshold {
            mine
        } else {
            mine.other()
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointAction;
    use rand::SeedableRng;

    fn outcome(g: &Game, round: usize, r: i64, c: i64) -> Outcome {
        let joint = JointAction::from_indices(r, c).unwrap();
        Outcome {
            round,
            joint,
            payoffs: g.payoffs(joint),
        }
    }

    #[test]
    fn gtft_without_forgiveness_punishes() {
        let g = Game::prisoners_dilemma();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = GenerousTitForTat::new(SeatView::new(&g, Player::Row), 0.0);
        assert_eq!(p.choose(0, &mut rng), Action::FIRST);
        p.update(&outcome(&g, 0, 0, 1));
        assert_eq!(p.choose(1, &mut rng), Action::SECOND);
        p.update(&outcome(&g, 1, 1, 0));
        assert_eq!(p.choose(2, &mut rng), Action::FIRST);
    }

    #[test]
    fn wsls_in_0135_pd() {
        let g = Game::prisoners_dilemma_0135();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = WinStayLoseShift::new(SeatView::new(&g, Player::Row));
        p.update(&outcome(&g, 0, 0, 0));
        assert_eq!(p.choose(1, &mut rng), Action::FIRST);
        p.update(&outcome(&g, 1, 0, 1));
        assert_eq!(p.choose(2, &mut rng), Action::SECOND);
    }

    #[test]
    fn bully_demands_its_cell() {
        let g = Game::chicken();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(Bully::new(&g, Player::Row).choose(0, &mut rng), Action::SECOND);
        assert_eq!(Bully::new(&g, Player::Col).choose(0, &mut rng), Action::SECOND);
    }

    #[test]
    fn manipulator_falls_back_when_exploitation_fails() {
        let g = Game::chicken();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = Manipulator::new(&g, SeatView::new(&g, Player::Row), 3);
        for t in 0..3 {
            assert_eq!(p.choose(t, &mut rng), Action::SECOND);
            p.update(&outcome(&g, t, 1, 1));
        }
        // maximin in Chicken is pure C
        assert_eq!(p.choose(3, &mut rng), Action::FIRST);
    }
}
