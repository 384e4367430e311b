//! One-shot solution concepts for 2x2 games: pure Nash equilibria, maximin
//! (security) strategies, the Nash bargaining solution and the bully targets
//! used by the leader experts.

use serde::Serialize;

use crate::game::{Action, Game, JointAction, JointPlan, Player};
use crate::scalar::Scalar;

/// Every cell where both actions are (weak) best responses to each other.
pub fn pure_nash_equilibria<S: Scalar>(game: &Game<S>) -> Vec<JointAction> {
    JointAction::all()
        .into_iter()
        .filter(|ja| {
            game.best_responses(Player::Row, ja.col).contains(&ja.row)
                && game.best_responses(Player::Col, ja.row).contains(&ja.col)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaximinResult<S> {
    /// Guaranteed expected payoff.
    pub value: S,
    /// Probability of playing each of the player's two actions.
    pub strategy: [S; 2],
}

impl<S: Scalar> MaximinResult<S> {
    pub fn is_pure(&self) -> bool {
        self.strategy[0] == S::one() || self.strategy[1] == S::one()
    }
}

/// Own-perspective payoff matrix: `m[own][other]`.
fn seat_matrix<S: Scalar>(game: &Game<S>, player: Player) -> [[S; 2]; 2] {
    let mut m = [[S::zero(); 2]; 2];
    for a in Action::BOTH {
        for b in Action::BOTH {
            m[a.index()][b.index()] = game.payoff_seat(player, a, b);
        }
    }
    m
}

/// Maximin mixed strategy for `player`, exact for 2x2.
///
/// The worst-case payoff of playing action 0 with probability `p` is the
/// lower envelope of two lines, so its maximum sits at `p = 0`, `p = 1`, or
/// where the lines cross. Pure candidates win ties; action 0 wins ties
/// between pure candidates.
pub fn maximin<S: Scalar>(game: &Game<S>, player: Player) -> MaximinResult<S> {
    let m = seat_matrix(game, player);
    let one = S::one();
    let zero = S::zero();
    let mut best = MaximinResult {
        value: m[0][0].min_of(m[0][1]),
        strategy: [one, zero],
    };
    let v1 = m[1][0].min_of(m[1][1]);
    if v1 > best.value {
        best = MaximinResult {
            value: v1,
            strategy: [zero, one],
        };
    }
    // p * m[0][j] + (1 - p) * m[1][j] equal for j = 0, 1
    let denom = m[0][0] - m[0][1] - m[1][0] + m[1][1];
    if denom != zero {
        let p = (m[1][1] - m[1][0]) / denom;
        if p > zero && p < one {
            let value = p * m[0][0] + (one - p) * m[1][0];
            if value > best.value {
                best = MaximinResult {
                    value,
                    strategy: [p, one - p],
                };
            }
        }
    }
    best
}

/// Worst-case payoff of a given mixed strategy (probability `p` on action 0).
pub fn guaranteed_payoff<S: Scalar>(game: &Game<S>, player: Player, p: S) -> S {
    let m = seat_matrix(game, player);
    let one = S::one();
    let e0 = p * m[0][0] + (one - p) * m[1][0];
    let e1 = p * m[0][1] + (one - p) * m[1][1];
    e0.min_of(e1)
}

/// The pure action with the best worst case (action 0 on ties).
pub fn security_action<S: Scalar>(game: &Game<S>, player: Player) -> Action {
    let m = seat_matrix(game, player);
    if m[1][0].min_of(m[1][1]) > m[0][0].min_of(m[0][1]) {
        Action::SECOND
    } else {
        Action::FIRST
    }
}

/// The pure action that minimizes the partner's best-reply payoff. Ties go
/// to the action with the better own worst case, then to action 0.
pub fn attack_action<S: Scalar>(game: &Game<S>, player: Player) -> Action {
    let partner = player.other();
    let partner_best = |a: Action| {
        let p0 = game.payoff_seat(partner, Action::FIRST, a);
        let p1 = game.payoff_seat(partner, Action::SECOND, a);
        p0.max_of(p1)
    };
    let (b0, b1) = (partner_best(Action::FIRST), partner_best(Action::SECOND));
    if b1 < b0 {
        Action::SECOND
    } else if b0 < b1 {
        Action::FIRST
    } else {
        security_action(game, player)
    }
}

/// Partner's best-reply payoff when `player` plays its attack action.
pub fn punished_payoff<S: Scalar>(game: &Game<S>, player: Player) -> S {
    let a = attack_action(game, player);
    let partner = player.other();
    game.payoff_seat(partner, Action::FIRST, a)
        .max_of(game.payoff_seat(partner, Action::SECOND, a))
}

/// The ten deterministic plans considered for bargaining and bully targets:
/// four stationary cells followed by six two-cell alternations.
pub fn candidate_plans() -> Vec<JointPlan> {
    let cells = JointAction::all();
    let mut out: Vec<JointPlan> = cells.iter().map(|c| JointPlan::stationary(*c)).collect();
    for i in 0..4 {
        for j in (i + 1)..4 {
            out.push(JointPlan::alternation(cells[i], cells[j]));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BargainingSolution<S> {
    pub plan: JointPlan,
    pub payoffs: (S, S),
    /// Maximin values of the two players.
    pub disagreement: (S, S),
    /// `(u1 - d1)(u2 - d2)` at `payoffs`.
    pub nash_product: S,
    /// True when no candidate strictly dominates the disagreement point and
    /// the plan is repeated pure security play.
    pub fallback: bool,
}

/// Nash product of a payoff pair relative to a disagreement point, or `None`
/// when the pair does not strictly dominate it.
pub fn nash_product<S: Scalar>(payoffs: (S, S), d: (S, S)) -> Option<S> {
    if payoffs.0 > d.0 && payoffs.1 > d.1 {
        Some((payoffs.0 - d.0) * (payoffs.1 - d.1))
    } else {
        None
    }
}

fn min_pair<S: Scalar>(p: (S, S)) -> S {
    p.0.min_of(p.1)
}

/// Nash bargaining solution realized as a stationary cell or a strict
/// two-cell alternation, with the maximin values as disagreement point.
///
/// Ties prefer shorter cycles, then the larger minimum payoff, then the
/// earlier candidate in [`candidate_plans`] order.
pub fn nash_bargaining<S: Scalar>(game: &Game<S>) -> BargainingSolution<S> {
    let d = (maximin(game, Player::Row).value, maximin(game, Player::Col).value);
    let mut best: Option<(JointPlan, (S, S), S)> = None;
    for plan in candidate_plans() {
        let u = plan.average_payoffs(game);
        let Some(prod) = nash_product(u, d) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((bp, bu, bprod)) => {
                if prod != *bprod {
                    prod > *bprod
                } else if plan.len() != bp.len() {
                    plan.len() < bp.len()
                } else {
                    min_pair(u) > min_pair(*bu)
                }
            }
        };
        if better {
            best = Some((plan, u, prod));
        }
    }
    match best {
        Some((plan, payoffs, nash_product)) => BargainingSolution {
            plan,
            payoffs,
            disagreement: d,
            nash_product,
            fallback: false,
        },
        None => {
            let cell = JointAction::new(security_action(game, Player::Row), security_action(game, Player::Col));
            let plan = JointPlan::stationary(cell);
            let payoffs = plan.average_payoffs(game);
            BargainingSolution {
                plan,
                payoffs,
                disagreement: d,
                nash_product: S::zero(),
                fallback: true,
            }
        }
    }
}

/// The cell `player` would demand as a bully: highest own payoff among cells
/// where the partner's action is a myopic best response to `player`'s.
pub fn bully_cell<S: Scalar>(game: &Game<S>, player: Player) -> JointAction {
    let partner = player.other();
    let mut best: Option<(JointAction, S)> = None;
    for ja in JointAction::all() {
        let own = ja.action_of(player);
        if !game.best_responses(partner, own).contains(&ja.action_of(partner)) {
            continue;
        }
        let v = game.payoff(player, ja);
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((ja, v));
        }
    }
    best.expect("every own action has a partner best response").0
}

/// The plan maximizing `player`'s average payoff subject to the partner
/// receiving at least its maximin value. Ties prefer shorter cycles, then a
/// higher partner payoff.
pub fn best_bully_plan<S: Scalar>(game: &Game<S>, player: Player) -> JointPlan {
    let partner = player.other();
    let floor = maximin(game, partner).value;
    let mut best: Option<(JointPlan, S, S)> = None;
    for plan in candidate_plans() {
        let own = plan.average_payoff(game, player);
        let theirs = plan.average_payoff(game, partner);
        if theirs < floor {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bp, bown, btheirs)) => {
                if own != *bown {
                    own > *bown
                } else if plan.len() != bp.len() {
                    plan.len() < bp.len()
                } else {
                    theirs > *btheirs
                }
            }
        };
        if better {
            best = Some((plan, own, theirs));
        }
    }
    best.expect("a cell with the partner's best reply meets its maximin").0
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn ja(r: i64, c: i64) -> JointAction {
        JointAction::from_indices(r, c).unwrap()
    }

    #[test]
    fn pd_equilibrium_is_mutual_defection() {
        let g: Game = Game::prisoners_dilemma();
        assert_eq!(pure_nash_equilibria(&g), vec![ja(1, 1)]);
    }

    #[test]
    fn chicken_has_two_equilibria() {
        let g: Game = Game::chicken();
        assert_eq!(pure_nash_equilibria(&g), vec![ja(0, 1), ja(1, 0)]);
    }

    #[test]
    fn matching_pennies_pattern_has_none() {
        let g: Game = Game::from_ints([[4, 1], [2, 3]], [[1, 4], [3, 2]]);
        assert!(pure_nash_equilibria(&g).is_empty());
    }

    #[test]
    fn maximin_pd_and_chicken() {
        let pd: Game<Q> = Game::prisoners_dilemma();
        let r = maximin(&pd, Player::Row);
        assert_eq!(r.value, Q::from_integer(2));
        assert_eq!(r.strategy, [Q::from_integer(0), Q::from_integer(1)]);
        let ch: Game<Q> = Game::chicken();
        let r = maximin(&ch, Player::Col);
        assert_eq!(r.value, Q::from_integer(2));
        assert_eq!(r.strategy, [Q::from_integer(1), Q::from_integer(0)]);
    }

    #[test]
    fn maximin_mixed_in_cyclic_game() {
        // Row: [[4,1],[2,3]] -> p*4+(1-p)*2 = p*1+(1-p)*3 -> p = 1/4, value 5/2.
        let g: Game<Q> = Game::from_ints([[4, 1], [2, 3]], [[1, 4], [3, 2]]);
        let r = maximin(&g, Player::Row);
        assert_eq!(r.value, Q::new(5, 2));
        assert_eq!(r.strategy, [Q::new(1, 4), Q::new(3, 4)]);
        assert!(!r.is_pure());
    }

    #[test]
    fn dominant_action_is_pure_maximin() {
        // action 1's worst (3) beats action 0's best (2)
        let g: Game = Game::from_ints([[1, 2], [3, 4]], [[1, 2], [3, 4]]);
        let r = maximin(&g, Player::Row);
        assert_eq!(r.strategy, [0.0, 1.0]);
        assert_eq!(r.value, 3.0);
    }

    #[test]
    fn nbs_pd_is_mutual_cooperation() {
        let g: Game<Q> = Game::prisoners_dilemma();
        let s = nash_bargaining(&g);
        assert_eq!(s.plan, JointPlan::stationary(ja(0, 0)));
        assert_eq!(s.payoffs, (Q::from_integer(3), Q::from_integer(3)));
        assert_eq!(s.nash_product, Q::from_integer(1));
        assert!(!s.fallback);
        // the (4,1)/(1,4) alternation does not strictly dominate d = (2,2)
        let alt = JointPlan::alternation(ja(0, 1), ja(1, 0));
        let u = alt.average_payoffs(&g);
        assert_eq!(u, (Q::new(5, 2), Q::new(5, 2)));
        assert_eq!(nash_product(u, s.disagreement), Some(Q::new(1, 4)));
    }

    #[test]
    fn nbs_chicken_prefers_stationary_on_tie() {
        let g: Game<Q> = Game::chicken();
        let s = nash_bargaining(&g);
        assert_eq!(s.plan, JointPlan::stationary(ja(0, 0)));
        let alt = JointPlan::alternation(ja(0, 1), ja(1, 0));
        assert_eq!(
            nash_product(alt.average_payoffs(&g), s.disagreement),
            Some(s.nash_product)
        );
    }

    #[test]
    fn nbs_battle_of_sexes_alternates() {
        let g: Game<Q> = Game::from_ints([[4, 1], [2, 3]], [[3, 2], [1, 4]]);
        let s = nash_bargaining(&g);
        // security levels are mixed here: (5/2, 5/2)
        assert_eq!(s.disagreement, (Q::new(5, 2), Q::new(5, 2)));
        assert_eq!(s.plan, JointPlan::alternation(ja(0, 0), ja(1, 1)));
        assert_eq!(s.payoffs, (Q::new(7, 2), Q::new(7, 2)));
    }

    #[test]
    fn bully_targets_in_chicken_and_pd() {
        let ch: Game = Game::chicken();
        assert_eq!(bully_cell(&ch, Player::Row), ja(1, 0));
        assert_eq!(bully_cell(&ch, Player::Col), ja(0, 1));
        let pd: Game = Game::prisoners_dilemma();
        assert_eq!(bully_cell(&pd, Player::Row), ja(1, 1));
        let plan = best_bully_plan(&pd, Player::Row);
        assert_eq!(plan, JointPlan::alternation(ja(0, 0), ja(1, 0)));
        assert_eq!(plan.average_payoffs(&pd), (3.5, 2.0));
    }

    #[test]
    fn attack_action_in_chicken_is_dare() {
        let ch: Game = Game::chicken();
        assert_eq!(attack_action(&ch, Player::Row), Action::SECOND);
        assert_eq!(security_action(&ch, Player::Row), Action::FIRST);
        assert_eq!(punished_payoff(&ch, Player::Row), 2.0);
    }
}
