use serde::{Deserialize, Serialize};

use super::{RoundRecord, Transcript};
use crate::game::{Game, JointPlan, Player};
use crate::signaling::Act;
use crate::solve::nash_bargaining;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CooperationStats {
    /// Per transcript, the 1-based round completing the first two
    /// consecutive cooperative rounds, or the game length plus one.
    pub rounds_to_cc: Vec<usize>,
    /// `(k, fraction of transcripts with rounds_to_cc <= k)` for every
    /// distinct observed value, ascending.
    pub cdf: Vec<(usize, f64)>,
    /// Per transcript: `Some(true)` if it never left the cooperative plan
    /// after reaching it, `None` if it never reached it.
    pub loyal: Vec<Option<bool>>,
    /// Fraction of reaching transcripts that stayed loyal.
    pub loyalty: Option<f64>,
}

impl CooperationStats {
    pub fn reached_within(&self, rounds: usize) -> usize {
        self.rounds_to_cc.iter().filter(|r| **r <= rounds).count()
    }
}

fn conformant(plan: &JointPlan, records: &[RoundRecord]) -> Vec<bool> {
    records.iter().map(|r| plan.contains(r.joint)).collect()
}

/// 0-based index of the second of the first two consecutive conformant rounds.
fn establishment(conf: &[bool]) -> Option<usize> {
    (1..conf.len()).find(|&i| conf[i] && conf[i - 1])
}

/// Mutual cooperation is play inside the cells of `game`'s bargaining plan.
pub fn cooperation_stats(transcripts: &[Transcript], game: &Game) -> CooperationStats {
    let plan = nash_bargaining(game).plan;
    let mut rounds_to_cc = Vec::with_capacity(transcripts.len());
    let mut loyal = Vec::with_capacity(transcripts.len());
    for t in transcripts {
        let conf = conformant(&plan, &t.records);
        match establishment(&conf) {
            Some(i) => {
                rounds_to_cc.push(i + 1);
                loyal.push(Some(conf[i..].iter().all(|c| *c)));
            }
            None => {
                rounds_to_cc.push(t.records.len() + 1);
                loyal.push(None);
            }
        }
    }

    let mut sorted = rounds_to_cc.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let total = transcripts.len().max(1) as f64;
    let cdf = sorted
        .into_iter()
        .map(|k| (k, rounds_to_cc.iter().filter(|r| **r <= k).count() as f64 / total))
        .collect();

    let reached: Vec<bool> = loyal.iter().flatten().copied().collect();
    let loyalty = (!reached.is_empty()).then(|| reached.iter().filter(|l| **l).count() as f64 / reached.len() as f64);

    CooperationStats {
        rounds_to_cc,
        cdf,
        loyal,
        loyalty,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    /// Per player (row, column): `None` if cooperation was never
    /// established, else whether the player never broke it.
    pub loyal: [Option<bool>; 2],
    /// Per player: share of committed rounds in which the player's action
    /// matched its latest commitment; `None` without any commitment.
    pub honest: [Option<f64>; 2],
}

/// The player whose actions broke the plan after it was established.
fn loyalty_by_player(plan: &JointPlan, records: &[RoundRecord]) -> [Option<bool>; 2] {
    let conf = conformant(plan, records);
    let Some(start) = establishment(&conf) else {
        return [None, None];
    };
    let phase = (0..plan.len())
        .find(|k| plan.at(k + start) == records[start].joint)
        .unwrap_or(0);
    let mut loyal = [true, true];
    for (t, r) in records.iter().enumerate().skip(start + 1) {
        if conf[t] {
            continue;
        }
        let expected = plan.at(phase + t);
        for p in Player::BOTH {
            if r.joint.action_of(p) != expected.action_of(p) {
                loyal[p.index()] = false;
            }
        }
    }
    [Some(loyal[0]), Some(loyal[1])]
}

/// A commitment: the plan a player signed up to and the round it starts.
struct Commitment {
    plan: JointPlan,
    from: usize,
    one_shot: bool,
}

fn honesty(player: Player, records: &[RoundRecord]) -> Option<f64> {
    let mut commitment: Option<Commitment> = None;
    let mut partner_proposal: Option<JointPlan> = None;
    let mut kept = 0usize;
    let mut counted = 0usize;
    for r in records {
        for act in r.messages_of(player) {
            match act.id {
                Act::ProposeStationary | Act::ProposeAlternation | Act::ProposeOneShot => {
                    if let Ok(Some(plan)) = act.plan() {
                        commitment = Some(Commitment {
                            plan,
                            from: r.round,
                            one_shot: act.id == Act::ProposeOneShot,
                        });
                    }
                }
                Act::Accept => {
                    if let Some(plan) = partner_proposal.clone() {
                        commitment = Some(Commitment {
                            plan,
                            from: r.round,
                            one_shot: false,
                        });
                    }
                }
                Act::Reject | Act::TrySomethingElse => commitment = None,
                _ => {}
            }
        }
        for act in r.messages_of(player.other()) {
            if let Ok(Some(plan)) = act.plan() {
                partner_proposal = Some(plan);
            }
        }
        if let Some(c) = &commitment {
            counted += 1;
            if r.joint.action_of(player) == c.plan.action_at(player, r.round - c.from) {
                kept += 1;
            }
            if c.one_shot {
                commitment = None;
            }
        }
    }
    (counted > 0).then(|| kept as f64 / counted as f64)
}

/// Loyalty and honesty of each player in one transcript.
pub fn analyze_fidelity(transcript: &Transcript) -> Fidelity {
    let plan = nash_bargaining(transcript.game()).plan;
    Fidelity {
        loyal: loyalty_by_player(&plan, &transcript.records),
        honest: [
            honesty(Player::Row, &transcript.records),
            honesty(Player::Col, &transcript.records),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Action, JointAction};
    use crate::signaling::SpeechAct;
    use crate::tournament::MatchConfig;
    use proptest::prelude::*;

    const C: Action = Action::FIRST;
    const D: Action = Action::SECOND;

    fn transcript(game: Game, cells: &[(Action, Action)]) -> Transcript {
        let mut t = Transcript::new(MatchConfig::new(game.clone(), "human", "human", cells.len(), 0));
        for (i, (a, b)) in cells.iter().enumerate() {
            let joint = JointAction::new(*a, *b);
            t.records.push(RoundRecord {
                round: i,
                joint,
                payoffs: game.payoffs(joint),
                messages_a: vec![],
                messages_b: vec![],
            });
        }
        t
    }

    #[test]
    fn cc_from_round_three_completes_at_four() {
        let mut cells = vec![(D, D), (C, D)];
        cells.extend(std::iter::repeat_n((C, C), 8));
        let s = cooperation_stats(
            &[transcript(Game::prisoners_dilemma(), &cells)],
            &Game::prisoners_dilemma(),
        );
        assert_eq!(s.rounds_to_cc, vec![4]);
        assert_eq!(s.loyalty, Some(1.0));
    }

    #[test]
    fn never_cooperating_is_censored() {
        let cells = vec![(D, D); 10];
        let s = cooperation_stats(
            &[transcript(Game::prisoners_dilemma(), &cells)],
            &Game::prisoners_dilemma(),
        );
        assert_eq!(s.rounds_to_cc, vec![11]);
        assert_eq!(s.loyal, vec![None]);
        assert_eq!(s.loyalty, None);
    }

    #[test]
    fn defection_after_cooperation_is_disloyal() {
        // rounds 5,6 (1-based) cooperative, defection at round 9
        let cells = vec![
            (D, D),
            (D, D),
            (D, D),
            (D, D),
            (C, C),
            (C, C),
            (C, C),
            (C, C),
            (D, C),
            (C, C),
        ];
        let t = transcript(Game::prisoners_dilemma(), &cells);
        let s = cooperation_stats(std::slice::from_ref(&t), &Game::prisoners_dilemma());
        assert_eq!(s.rounds_to_cc, vec![6]);
        assert_eq!(s.loyalty, Some(0.0));
        assert_eq!(analyze_fidelity(&t).loyal, [Some(false), Some(true)]);
    }

    #[test]
    fn honesty_examples() {
        let g = Game::prisoners_dilemma();
        let always_cc = SpeechAct::proposal(&JointPlan::stationary(JointAction::new(C, C)));

        let mut t = transcript(g.clone(), &[(C, C); 6]);
        t.records[0].messages_a.push(always_cc.clone());
        let f = analyze_fidelity(&t);
        assert_eq!(f.honest[0], Some(1.0));
        assert_eq!(f.honest[1], None);

        let mut t = transcript(g, &[(D, C); 6]);
        t.records[0].messages_a.push(always_cc);
        assert_eq!(analyze_fidelity(&t).honest[0], Some(0.0));
    }

    #[test]
    fn accept_commits_to_partner_proposal() {
        let g = Game::prisoners_dilemma();
        let mut t = transcript(g, &[(C, C), (C, C), (C, D), (C, D)]);
        t.records[0]
            .messages_a
            .push(SpeechAct::proposal(&JointPlan::stationary(JointAction::new(C, C))));
        t.records[1].messages_b.push(SpeechAct::plain(Act::Accept));
        assert_eq!(analyze_fidelity(&t).honest[1], Some(1.0 / 3.0));
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_bounded(games in proptest::collection::vec(proptest::collection::vec(0usize..4, 1..30), 1..20)) {
            let g = Game::prisoners_dilemma();
            let ts: Vec<Transcript> = games
                .iter()
                .map(|cells| {
                    let cs: Vec<(Action, Action)> = cells
                        .iter()
                        .map(|c| { let j = JointAction::from_cell_index(*c); (j.row, j.col) })
                        .collect();
                    transcript(g.clone(), &cs)
                })
                .collect();
            let s = cooperation_stats(&ts, &g);
            prop_assert!(s.cdf.windows(2).all(|w| w[0].1 <= w[1].1 && w[0].0 < w[1].0));
            prop_assert!(s.cdf.iter().all(|(_, p)| *p > 0.0 && *p <= 1.0));
            prop_assert!((s.cdf.last().unwrap().1 - 1.0).abs() < 1e-12);
        }
    }
}
