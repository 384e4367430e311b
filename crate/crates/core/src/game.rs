//! 2x2 general-sum games, joint actions and cyclic joint plans.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("payoffs are not a permutation of 1..=4 for the {0:?} player")]
    NotStrictOrdinal(Player),
    #[error("payoff matrix contains a non-finite entry")]
    NonFinite,
    #[error("joint plan must contain at least one joint action")]
    EmptyPlan,
    #[error("action index {0} out of range (expected 0 or 1)")]
    InvalidAction(i64),
}

/// Seat of a player in the bimatrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Row,
    Col,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::Row, Player::Col];

    pub fn other(self) -> Player {
        match self {
            Player::Row => Player::Col,
            Player::Col => Player::Row,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::Row => 0,
            Player::Col => 1,
        }
    }
}

/// One of a player's two actions. Index 0 is conventionally "cooperate"
/// in the named social dilemmas below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Action(u8);

impl Action {
    pub const FIRST: Action = Action(0);
    pub const SECOND: Action = Action(1);
    pub const BOTH: [Action; 2] = [Action::FIRST, Action::SECOND];

    pub fn new(index: i64) -> Result<Action, GameError> {
        match index {
            0 | 1 => Ok(Action(index as u8)),
            _ => Err(GameError::InvalidAction(index)),
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn other(self) -> Action {
        Action(1 - self.0)
    }
}

impl TryFrom<i64> for Action {
    type Error = GameError;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Action::new(value)
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A cell of the bimatrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointAction {
    pub row: Action,
    pub col: Action,
}

impl JointAction {
    pub fn new(row: Action, col: Action) -> Self {
        JointAction { row, col }
    }

    pub fn from_indices(row: i64, col: i64) -> Result<Self, GameError> {
        Ok(JointAction::new(Action::new(row)?, Action::new(col)?))
    }

    /// All four cells in row-major order.
    pub fn all() -> [JointAction; 4] {
        [
            JointAction::new(Action::FIRST, Action::FIRST),
            JointAction::new(Action::FIRST, Action::SECOND),
            JointAction::new(Action::SECOND, Action::FIRST),
            JointAction::new(Action::SECOND, Action::SECOND),
        ]
    }

    pub fn from_cell_index(i: usize) -> JointAction {
        JointAction::all()[i]
    }

    pub fn cell_index(self) -> usize {
        self.row.index() * 2 + self.col.index()
    }

    pub fn action_of(self, player: Player) -> Action {
        match player {
            Player::Row => self.row,
            Player::Col => self.col,
        }
    }

    /// Builds a cell from one player's action and the other's.
    pub fn from_seat(player: Player, own: Action, other: Action) -> JointAction {
        match player {
            Player::Row => JointAction::new(own, other),
            Player::Col => JointAction::new(other, own),
        }
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A 2x2 bimatrix game. `row_payoffs[r][c]` and `col_payoffs[r][c]` are the
/// payoffs to the row and column player when row plays `r` and column plays `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawGame<S>",
    bound(deserialize = "S: Scalar + Deserialize<'de>", serialize = "S: Serialize")
)]
pub struct Game<S = f64> {
    pub row_payoffs: [[S; 2]; 2],
    pub col_payoffs: [[S; 2]; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Deserialize)]
struct RawGame<S> {
    row_payoffs: [[S; 2]; 2],
    col_payoffs: [[S; 2]; 2],
    #[serde(default)]
    name: Option<String>,
}

impl<S: Scalar> TryFrom<RawGame<S>> for Game<S> {
    type Error = GameError;
    fn try_from(raw: RawGame<S>) -> Result<Self, Self::Error> {
        let mut g = Game::new(raw.row_payoffs, raw.col_payoffs)?;
        g.name = raw.name;
        Ok(g)
    }
}

impl<S: Scalar> Game<S> {
    pub fn new(row_payoffs: [[S; 2]; 2], col_payoffs: [[S; 2]; 2]) -> Result<Self, GameError> {
        let all_finite = row_payoffs
            .iter()
            .chain(col_payoffs.iter())
            .flatten()
            .all(|v| v.is_finite_value());
        if !all_finite {
            return Err(GameError::NonFinite);
        }
        Ok(Game {
            row_payoffs,
            col_payoffs,
            name: None,
        })
    }

    /// Builds a game from integer payoffs.
    pub fn from_ints(row: [[i64; 2]; 2], col: [[i64; 2]; 2]) -> Self {
        let conv = |m: [[i64; 2]; 2]| m.map(|r| r.map(S::from_int));
        Game {
            row_payoffs: conv(row),
            col_payoffs: conv(col),
            name: None,
        }
    }

    /// Symmetric game given the row player's matrix; the column player's is its transpose.
    pub fn symmetric(row: [[S; 2]; 2]) -> Result<Self, GameError> {
        let col = [[row[0][0], row[1][0]], [row[0][1], row[1][1]]];
        Game::new(row, col)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn payoff(&self, player: Player, ja: JointAction) -> S {
        let (r, c) = (ja.row.index(), ja.col.index());
        match player {
            Player::Row => self.row_payoffs[r][c],
            Player::Col => self.col_payoffs[r][c],
        }
    }

    pub fn payoffs(&self, ja: JointAction) -> (S, S) {
        (self.payoff(Player::Row, ja), self.payoff(Player::Col, ja))
    }

    /// Payoff to `player` when it plays `own` and its partner plays `other`.
    pub fn payoff_seat(&self, player: Player, own: Action, other: Action) -> S {
        self.payoff(player, JointAction::from_seat(player, own, other))
    }

    /// Best responses of `player` to the partner's action `other` (one or both actions).
    pub fn best_responses(&self, player: Player, other: Action) -> Vec<Action> {
        let p0 = self.payoff_seat(player, Action::FIRST, other);
        let p1 = self.payoff_seat(player, Action::SECOND, other);
        if p0 > p1 {
            vec![Action::FIRST]
        } else if p1 > p0 {
            vec![Action::SECOND]
        } else {
            vec![Action::FIRST, Action::SECOND]
        }
    }

    pub fn min_payoff(&self) -> S {
        self.entries().fold(self.row_payoffs[0][0], S::min_of)
    }

    pub fn max_payoff(&self) -> S {
        self.entries().fold(self.row_payoffs[0][0], S::max_of)
    }

    fn entries(&self) -> impl Iterator<Item = S> + '_ {
        self.row_payoffs
            .iter()
            .chain(self.col_payoffs.iter())
            .flatten()
            .copied()
    }

    /// True when each player's four payoffs are a permutation of {1,2,3,4}.
    pub fn is_strict_ordinal(&self) -> bool {
        self.check_strict_ordinal().is_ok()
    }

    pub fn check_strict_ordinal(&self) -> Result<(), GameError> {
        for player in Player::BOTH {
            let m = match player {
                Player::Row => &self.row_payoffs,
                Player::Col => &self.col_payoffs,
            };
            let mut seen = [false; 4];
            for v in m.iter().flatten() {
                let idx = (1..=4).find(|k| *v == S::from_int(*k));
                match idx {
                    Some(k) if !seen[(k - 1) as usize] => seen[(k - 1) as usize] = true,
                    _ => return Err(GameError::NotStrictOrdinal(player)),
                }
            }
        }
        Ok(())
    }

    /// Applies an action relabeling: optionally swap the row player's two
    /// actions and/or the column player's two actions.
    pub fn relabeled(&self, swap_row: bool, swap_col: bool) -> Self {
        let map = |m: &[[S; 2]; 2]| {
            let mut out = *m;
            for (r, row) in out.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    let sr = if swap_row { 1 - r } else { r };
                    let sc = if swap_col { 1 - c } else { c };
                    *v = m[sr][sc];
                }
            }
            out
        };
        Game {
            row_payoffs: map(&self.row_payoffs),
            col_payoffs: map(&self.col_payoffs),
            name: self.name.clone(),
        }
    }

    /// Exchanges the roles of the two players.
    pub fn players_swapped(&self) -> Self {
        let t = |m: &[[S; 2]; 2]| [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
        Game {
            row_payoffs: t(&self.col_payoffs),
            col_payoffs: t(&self.row_payoffs),
            name: self.name.clone(),
        }
    }

    /// Row payoffs then column payoffs, row-major. Used as the canonical ordering key.
    pub fn flat_key(&self) -> [S; 8] {
        let r = &self.row_payoffs;
        let c = &self.col_payoffs;
        [r[0][0], r[0][1], r[1][0], r[1][1], c[0][0], c[0][1], c[1][0], c[1][1]]
    }

    pub fn to_f64(&self) -> Game<f64> {
        Game {
            row_payoffs: self.row_payoffs.map(|r| r.map(|v| v.to_f64_lossy())),
            col_payoffs: self.col_payoffs.map(|r| r.map(|v| v.to_f64_lossy())),
            name: self.name.clone(),
        }
    }

    /// Ordinal prisoner's dilemma: CC=3, CD=1, DC=4, DD=2.
    pub fn prisoners_dilemma() -> Self {
        Game::from_ints([[3, 1], [4, 2]], [[3, 4], [1, 2]]).with_name("prisoners_dilemma")
    }

    /// Ordinal chicken: CC=3, CD=2, DC=4, DD=1.
    pub fn chicken() -> Self {
        Game::from_ints([[3, 2], [4, 1]], [[3, 4], [2, 1]]).with_name("chicken")
    }

    /// Prisoner's dilemma with payoffs 0, 1, 3, 5.
    pub fn prisoners_dilemma_0135() -> Self {
        Game::from_ints([[3, 0], [5, 1]], [[3, 5], [0, 1]]).with_name("prisoners_dilemma_0135")
    }
}

/// Lexicographic comparison of flat keys; payoffs are finite so the partial
/// order is total on valid games.
pub(crate) fn key_less<S: Scalar>(a: &[S; 8], b: &[S; 8]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// A finite cyclic sequence of joint actions. Position `k` of the cycle is
/// played in every round `t` with `t mod len == k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<JointAction>", into = "Vec<JointAction>")]
pub struct JointPlan {
    cycle: Vec<JointAction>,
}

impl TryFrom<Vec<JointAction>> for JointPlan {
    type Error = GameError;
    fn try_from(cycle: Vec<JointAction>) -> Result<Self, Self::Error> {
        JointPlan::new(cycle)
    }
}

impl From<JointPlan> for Vec<JointAction> {
    fn from(p: JointPlan) -> Self {
        p.cycle
    }
}

impl JointPlan {
    pub fn new(cycle: Vec<JointAction>) -> Result<Self, GameError> {
        if cycle.is_empty() {
            return Err(GameError::EmptyPlan);
        }
        Ok(JointPlan { cycle })
    }

    pub fn stationary(cell: JointAction) -> Self {
        JointPlan { cycle: vec![cell] }
    }

    /// Two-cell alternation, ordered by cell index so that independently
    /// computed alternations agree on phase.
    pub fn alternation(a: JointAction, b: JointAction) -> Self {
        let (first, second) = if a.cell_index() <= b.cell_index() {
            (a, b)
        } else {
            (b, a)
        };
        JointPlan {
            cycle: vec![first, second],
        }
    }

    pub fn cycle(&self) -> &[JointAction] {
        &self.cycle
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn is_stationary(&self) -> bool {
        self.cycle.len() == 1
    }

    /// Cell prescribed for round `round`.
    pub fn at(&self, round: usize) -> JointAction {
        self.cycle[round % self.cycle.len()]
    }

    pub fn action_at(&self, player: Player, round: usize) -> Action {
        self.at(round).action_of(player)
    }

    pub fn contains(&self, cell: JointAction) -> bool {
        self.cycle.contains(&cell)
    }

    /// Per-player mean payoff along the cycle.
    pub fn average_payoffs<S: Scalar>(&self, game: &Game<S>) -> (S, S) {
        let n = S::from_usize(self.cycle.len()).expect("cycle length fits scalar");
        let (r, c) = self.cycle.iter().fold((S::zero(), S::zero()), |(r, c), ja| {
            let (pr, pc) = game.payoffs(*ja);
            (r + pr, c + pc)
        });
        (r / n, c / n)
    }

    pub fn average_payoff<S: Scalar>(&self, game: &Game<S>, player: Player) -> S {
        let (r, c) = self.average_payoffs(game);
        match player {
            Player::Row => r,
            Player::Col => c,
        }
    }

    /// Equality up to cyclic rotation.
    pub fn same_cycle(&self, other: &JointPlan) -> bool {
        let n = self.cycle.len();
        if n != other.cycle.len() {
            return false;
        }
        (0..n).any(|shift| (0..n).all(|k| self.cycle[(k + shift) % n] == other.cycle[k]))
    }
}

impl fmt::Display for JointPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.cycle.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn ordinal_pd_is_strict_ordinal() {
        let g: Game = Game::prisoners_dilemma();
        assert!(g.is_strict_ordinal());
        assert!(!Game::<f64>::prisoners_dilemma_0135().is_strict_ordinal());
    }

    #[test]
    fn non_finite_rejected() {
        let err = Game::new([[f64::NAN, 0.0], [0.0, 0.0]], [[0.0; 2]; 2]).unwrap_err();
        assert_eq!(err, GameError::NonFinite);
    }

    #[test]
    fn duplicate_payoffs_are_not_ordinal() {
        let g: Game = Game::from_ints([[1, 1], [3, 4]], [[1, 2], [3, 4]]);
        assert_eq!(g.check_strict_ordinal(), Err(GameError::NotStrictOrdinal(Player::Row)));
    }

    #[test]
    fn relabel_twice_is_identity() {
        let g: Game = Game::chicken();
        assert_eq!(g.relabeled(true, true).relabeled(true, true), g);
        assert_eq!(g.players_swapped().players_swapped(), g);
    }

    #[test]
    fn plan_average_and_rotation() {
        let g: Game<Ratio<i64>> = Game::from_ints([[4, 1], [2, 3]], [[3, 1], [2, 4]]);
        let a = JointAction::from_indices(0, 0).unwrap();
        let b = JointAction::from_indices(1, 1).unwrap();
        let p = JointPlan::alternation(b, a);
        assert_eq!(p.cycle(), &[a, b]);
        assert_eq!(p.average_payoffs(&g), (Ratio::new(7, 2), Ratio::new(7, 2)));
        let q = JointPlan::new(vec![b, a]).unwrap();
        assert!(p.same_cycle(&q));
        assert!(!p.same_cycle(&JointPlan::stationary(a)));
        assert_eq!(JointPlan::new(vec![]), Err(GameError::EmptyPlan));
    }

    #[test]
    fn game_json_round_trip() {
        let g: Game = Game::prisoners_dilemma();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("row_payoffs"));
        let back: Game = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"row_payoffs":[[1,2],[3,4]],"col_payoffs":[[1,2],[3]]}"#;
        assert!(serde_json::from_str::<Game>(bad).is_err());
    }

    #[test]
    fn action_bounds() {
        assert!(Action::new(2).is_err());
        assert!(serde_json::from_str::<Action>("3").is_err());
        assert_eq!(serde_json::from_str::<Action>("1").unwrap(), Action::SECOND);
    }
}
