//! The periodic table of strict ordinal 2x2 games.
//!
//! Two ordered games are the same structure when one is obtained from the
//! other by relabeling actions (row swap, column swap, or both). Players stay
//! distinguished, which leaves 576 / 4 = 144 structures.

use crate::game::{key_less, Game, GameError};
use crate::scalar::Scalar;

/// The four action relabelings: identity, row swap, column swap, both.
pub const RELABELINGS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

/// Lexicographically least member of `game`'s relabeling orbit, compared by
/// flattened (row payoffs, column payoffs).
pub fn canonicalize<S: Scalar>(game: &Game<S>) -> Result<Game<S>, GameError> {
    game.check_strict_ordinal()?;
    Ok(least_relabeling(game))
}

fn least_relabeling<S: Scalar>(game: &Game<S>) -> Game<S> {
    let mut best = game.clone();
    let mut best_key = best.flat_key();
    for (sr, sc) in RELABELINGS.iter().skip(1) {
        let cand = game.relabeled(*sr, *sc);
        let key = cand.flat_key();
        if key_less(&key, &best_key) {
            best_key = key;
            best = cand;
        }
    }
    best
}

/// All 4! permutations of {1,2,3,4} laid out as a 2x2 matrix, in lexicographic order.
pub fn ordinal_matrices() -> Vec<[[i64; 2]; 2]> {
    let mut out = Vec::with_capacity(24);
    let vals = [1i64, 2, 3, 4];
    for a in vals {
        for b in vals {
            for c in vals {
                for d in vals {
                    let m = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| m[i] != m[j]));
                    if distinct {
                        out.push([[a, b], [c, d]]);
                    }
                }
            }
        }
    }
    out
}

/// Every ordered strict ordinal game (24 x 24 = 576).
pub fn all_ordinal_games<S: Scalar>() -> Vec<Game<S>> {
    let mats = ordinal_matrices();
    let mut out = Vec::with_capacity(mats.len() * mats.len());
    for r in &mats {
        for c in &mats {
            out.push(Game::from_ints(*r, *c));
        }
    }
    out
}

/// Canonical representatives of all strict ordinal 2x2 games under action
/// relabeling, sorted by their flat key and named `g001`..`g144`.
pub fn enumerate_periodic_table<S: Scalar>() -> Vec<Game<S>> {
    let mut reps: Vec<Game<S>> = all_ordinal_games::<S>().iter().map(least_relabeling).collect();
    reps.sort_by(|a, b| {
        let (ka, kb) = (a.flat_key(), b.flat_key());
        if key_less(&ka, &kb) {
            std::cmp::Ordering::Less
        } else if key_less(&kb, &ka) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    reps.dedup_by(|a, b| a.flat_key() == b.flat_key());
    for (i, g) in reps.iter_mut().enumerate() {
        g.name = Some(format!("g{:03}", i + 1));
    }
    reps
}

/// Canonical form under action relabeling and player exchange.
pub fn canonicalize_unordered<S: Scalar>(game: &Game<S>) -> Result<Game<S>, GameError> {
    let a = canonicalize(game)?;
    let b = canonicalize(&game.players_swapped())?;
    Ok(if key_less(&b.flat_key(), &a.flat_key()) { b } else { a })
}

/// Looks up a game in the table by label (`g001`..`g144`).
pub fn table_game(label: &str) -> Option<Game<f64>> {
    enumerate_periodic_table::<f64>()
        .into_iter()
        .find(|g| g.name.as_deref() == Some(label))
}

/// A deterministic stratified sample of `n` table games: evenly spaced
/// through the canonical ordering.
pub fn stratified_sample(n: usize) -> Vec<Game<f64>> {
    let table = enumerate_periodic_table::<f64>();
    if n >= table.len() {
        return table;
    }
    (0..n).map(|i| table[i * table.len() / n].clone()).collect()
}
