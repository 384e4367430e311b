use std::collections::HashSet;

use proptest::prelude::*;
use repgame::table::{
    all_ordinal_games, canonicalize, canonicalize_unordered, enumerate_periodic_table, stratified_sample, table_game,
};
use repgame::{Game, Rational};

#[test]
fn one_hundred_forty_four_structures() {
    let table = enumerate_periodic_table::<f64>();
    assert_eq!(table.len(), 144);
    let keys: HashSet<_> = table.iter().map(|g| g.flat_key().map(|v| v as i64)).collect();
    assert_eq!(keys.len(), 144);
    assert_eq!(table[0].name.as_deref(), Some("g001"));
    assert_eq!(table[143].name.as_deref(), Some("g144"));
}

#[test]
fn seventy_eight_up_to_player_swap() {
    let classes: HashSet<_> = enumerate_periodic_table::<Rational>()
        .iter()
        .map(|g| canonicalize_unordered(g).unwrap().flat_key())
        .collect();
    assert_eq!(classes.len(), 78);
}

#[test]
fn scalar_choice_does_not_change_the_table() {
    let a: Vec<_> = enumerate_periodic_table::<f64>()
        .iter()
        .map(|g| g.flat_key().map(|v| v as i64))
        .collect();
    let b: Vec<_> = enumerate_periodic_table::<Rational>()
        .iter()
        .map(|g| g.flat_key().map(|v| v.to_integer()))
        .collect();
    let c: Vec<_> = enumerate_periodic_table::<f32>()
        .iter()
        .map(|g| g.flat_key().map(|v| v as i64))
        .collect();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn every_ordered_game_lands_in_the_table() {
    let table: HashSet<_> = enumerate_periodic_table::<Rational>()
        .iter()
        .map(|g| g.flat_key())
        .collect();
    let orbit_sizes = all_ordinal_games::<Rational>()
        .iter()
        .filter(|g| table.contains(&canonicalize(g).unwrap().flat_key()))
        .count();
    assert_eq!(orbit_sizes, 576);
}

#[test]
fn named_lookups_and_samples() {
    assert!(table_game("g077").is_some());
    assert!(table_game("g145").is_none());
    let sample = stratified_sample(20);
    assert_eq!(sample.len(), 20);
    let names: HashSet<_> = sample.iter().map(|g| g.name.clone()).collect();
    assert_eq!(names.len(), 20);
    assert_eq!(stratified_sample(500).len(), 144);
}

#[test]
fn non_ordinal_games_are_rejected() {
    let tied: Game = Game::new([[1.0, 1.0], [2.0, 3.0]], [[1.0, 2.0], [3.0, 4.0]]).unwrap();
    assert!(canonicalize(&tied).is_err());
}

fn permutation() -> impl Strategy<Value = [[i64; 2]; 2]> {
    Just(vec![1i64, 2, 3, 4])
        .prop_shuffle()
        .prop_map(|v| [[v[0], v[1]], [v[2], v[3]]])
}

proptest! {
    #[test]
    fn relabeling_never_changes_the_class(r in permutation(), c in permutation(), sr: bool, sc: bool) {
        let g: Game<Rational> = Game::from_ints(r, c);
        let h = g.relabeled(sr, sc);
        prop_assert_eq!(canonicalize(&g).unwrap().flat_key(), canonicalize(&h).unwrap().flat_key());
        let swapped = g.players_swapped();
        prop_assert_eq!(
            canonicalize_unordered(&g).unwrap().flat_key(),
            canonicalize_unordered(&swapped).unwrap().flat_key()
        );
    }

    #[test]
    fn canonical_form_is_idempotent(r in permutation(), c in permutation()) {
        let g: Game<Rational> = Game::from_ints(r, c);
        let once = canonicalize(&g).unwrap();
        prop_assert_eq!(canonicalize(&once).unwrap().flat_key(), once.flat_key());
    }
}
