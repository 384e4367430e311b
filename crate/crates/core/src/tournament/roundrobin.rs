use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{derive_seed, run_match, MatchConfig, MatchError, Transcript};
use crate::baselines::BaselineSpec;
use crate::game::{Game, Player};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "REPGAME_WORKERS";

/// Worker threads to use: `REPGAME_WORKERS` if set to a positive integer,
/// otherwise one per available core.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRobin {
    pub roster: Vec<BaselineSpec>,
    pub games: Vec<Game>,
    pub rounds: usize,
    pub trials: usize,
    pub talk: bool,
    pub seed: u64,
}

impl RoundRobin {
    /// Row and column labels of the payoff tensor: agent names, with
    /// parameter overrides appended as `name[k=v,...]`.
    pub fn agent_keys(&self) -> Vec<String> {
        self.roster.iter().map(agent_key).collect()
    }

    pub fn game_keys(&self) -> Vec<String> {
        self.games.iter().map(game_key).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoundRobinError {
    #[error("a round-robin needs at least two agents")]
    TooFewAgents,
    #[error("a round-robin needs at least one trial")]
    NoTrials,
    #[error("a round-robin needs at least one game")]
    NoGames,
    #[error("{row} vs {col} on game {game}, trial {trial}: {source}")]
    Match {
        row: String,
        col: String,
        game: usize,
        trial: usize,
        source: Box<MatchError>,
    },
}

/// Mean per-round payoffs indexed `[agent][partner][game][trial]`.
///
/// Each entry averages the agent's payoff over both seatings against the
/// partner; for self-play both seats of the one match count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffTensor {
    pub agents: Vec<String>,
    pub games: Vec<String>,
    pub trials: usize,
    data: Vec<f64>,
}

impl PayoffTensor {
    /// A tensor with every entry missing (`NaN`).
    pub fn empty(agents: Vec<String>, games: Vec<String>, trials: usize) -> Self {
        let len = agents.len() * agents.len() * games.len() * trials;
        PayoffTensor {
            agents,
            games,
            trials,
            data: vec![f64::NAN; len],
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.agents.len(), self.agents.len(), self.games.len(), self.trials]
    }

    fn offset(&self, agent: usize, partner: usize, game: usize, trial: usize) -> usize {
        let [n, _, g, t] = self.shape();
        assert!(
            agent < n && partner < n && game < g && trial < t,
            "tensor index out of range"
        );
        ((agent * n + partner) * g + game) * t + trial
    }

    pub fn get(&self, agent: usize, partner: usize, game: usize, trial: usize) -> f64 {
        self.data[self.offset(agent, partner, game, trial)]
    }

    pub fn set(&mut self, agent: usize, partner: usize, game: usize, trial: usize, value: f64) {
        let k = self.offset(agent, partner, game, trial);
        self.data[k] = value;
    }

    pub fn is_complete(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Mean over trials.
    pub fn trial_mean(&self, agent: usize, partner: usize, game: usize) -> f64 {
        (0..self.trials).map(|t| self.get(agent, partner, game, t)).sum::<f64>() / self.trials as f64
    }
}

/// Stable identity of a roster entry: its name plus any parameter overrides.
pub(crate) fn agent_key(spec: &BaselineSpec) -> String {
    if spec.params.is_empty() {
        spec.name.clone()
    } else {
        let params: Vec<String> = spec.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", spec.name, params.join(","))
    }
}

pub(crate) fn game_key(game: &Game) -> String {
    match &game.name {
        Some(name) => name.clone(),
        None => format!("{:?}", game.flat_key()),
    }
}

/// Per-match seed from the seated agents, the game, the trial and the
/// master seed. Independent of roster order.
pub fn match_seed(row: &BaselineSpec, col: &BaselineSpec, game: &str, trial: usize, master: u64) -> u64 {
    derive_seed(&[
        agent_key(row).as_bytes(),
        agent_key(col).as_bytes(),
        game.as_bytes(),
        &(trial as u64).to_le_bytes(),
        &master.to_le_bytes(),
    ])
}

pub fn run_round_robin(
    roster: &[BaselineSpec],
    games: &[Game],
    rounds: usize,
    trials: usize,
    seed: u64,
) -> Result<PayoffTensor, RoundRobinError> {
    let rr = RoundRobin {
        roster: roster.to_vec(),
        games: games.to_vec(),
        rounds,
        trials,
        talk: false,
        seed,
    };
    run_round_robin_with(&rr, false).map(|(tensor, _)| tensor)
}

/// Plays every ordered pairing (self-play included) `trials` times per
/// game. Transcripts are returned in job order when `keep_transcripts`.
pub fn run_round_robin_with(
    rr: &RoundRobin,
    keep_transcripts: bool,
) -> Result<(PayoffTensor, Vec<Transcript>), RoundRobinError> {
    if rr.roster.len() < 2 {
        return Err(RoundRobinError::TooFewAgents);
    }
    if rr.trials == 0 {
        return Err(RoundRobinError::NoTrials);
    }
    if rr.games.is_empty() {
        return Err(RoundRobinError::NoGames);
    }
    let n = rr.roster.len();
    let game_keys: Vec<String> = rr.games.iter().map(game_key).collect();
    let mut jobs = Vec::with_capacity(n * n * rr.games.len() * rr.trials);
    for i in 0..n {
        for j in 0..n {
            for g in 0..rr.games.len() {
                for t in 0..rr.trials {
                    jobs.push((i, j, g, t));
                }
            }
        }
    }

    let run = |&(i, j, g, t): &(usize, usize, usize, usize)| {
        let cfg = MatchConfig {
            game: rr.games[g].clone(),
            agent_a: rr.roster[i].clone(),
            agent_b: rr.roster[j].clone(),
            rounds: rr.rounds,
            talk: rr.talk,
            seed: match_seed(&rr.roster[i], &rr.roster[j], &game_keys[g], t, rr.seed),
        };
        let mut transcript = run_match(&cfg).map_err(|source| RoundRobinError::Match {
            row: rr.roster[i].name.clone(),
            col: rr.roster[j].name.clone(),
            game: g,
            trial: t,
            source: Box::new(source),
        })?;
        transcript.meta.trial = Some(t);
        let means = (transcript.mean_payoff(Player::Row), transcript.mean_payoff(Player::Col));
        Ok((means, keep_transcripts.then_some(transcript)))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .expect("thread pool builds");
    let results: Vec<Result<_, RoundRobinError>> = pool.install(|| jobs.par_iter().map(run).collect());

    let mut sums = vec![0.0; n * n * rr.games.len() * rr.trials];
    let idx = |a: usize, b: usize, g: usize, t: usize| ((a * n + b) * rr.games.len() + g) * rr.trials + t;
    let mut transcripts = Vec::new();
    for (&(i, j, g, t), result) in jobs.iter().zip(results) {
        let ((row_mean, col_mean), transcript) = result?;
        sums[idx(i, j, g, t)] += row_mean;
        sums[idx(j, i, g, t)] += col_mean;
        transcripts.extend(transcript);
    }

    let mut tensor = PayoffTensor::empty(rr.roster.iter().map(agent_key).collect(), game_keys, rr.trials);
    for i in 0..n {
        for j in 0..n {
            for g in 0..rr.games.len() {
                for t in 0..rr.trials {
                    tensor.set(i, j, g, t, sums[idx(i, j, g, t)] / 2.0);
                }
            }
        }
    }
    Ok((tensor, transcripts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(names: &[&str]) -> Vec<BaselineSpec> {
        names.iter().map(|n| BaselineSpec::new(*n, 0)).collect()
    }

    #[test]
    fn shape_is_agents_squared_by_games_by_trials() {
        let games = vec![Game::prisoners_dilemma(), Game::chicken()];
        let t = run_round_robin(&roster(&["random", "bully", "gtft"]), &games, 20, 5, 1).unwrap();
        assert_eq!(t.shape(), [3, 3, 2, 5]);
        assert!(t.is_complete());
    }

    #[test]
    fn entries_do_not_depend_on_roster_order() {
        let games = vec![Game::chicken()];
        let a = run_round_robin(&roster(&["random", "wsls", "qlearn"]), &games, 50, 2, 7).unwrap();
        let b = run_round_robin(&roster(&["qlearn", "random", "wsls"]), &games, 50, 2, 7).unwrap();
        // a: random=0, wsls=1, qlearn=2; b: qlearn=0, random=1, wsls=2
        let map = [1, 2, 0];
        for i in 0..3 {
            for j in 0..3 {
                for t in 0..2 {
                    assert_eq!(a.get(i, j, 0, t), b.get(map[i], map[j], 0, t));
                }
            }
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let games = vec![Game::chicken()];
        assert_eq!(
            run_round_robin(&roster(&["random"]), &games, 10, 1, 0).err(),
            Some(RoundRobinError::TooFewAgents)
        );
        assert_eq!(
            run_round_robin(&roster(&["random", "bully"]), &games, 10, 0, 0).err(),
            Some(RoundRobinError::NoTrials)
        );
    }

    #[test]
    fn seed_depends_on_seating() {
        let a = BaselineSpec::new("random", 0);
        let b = BaselineSpec::new("bully", 0);
        assert_ne!(match_seed(&a, &b, "g001", 0, 1), match_seed(&b, &a, "g001", 0, 1));
        assert_ne!(
            match_seed(&a, &b, "g001", 0, 1),
            match_seed(&a, &b.clone().with_param("x", 1.0), "g001", 0, 1)
        );
    }
}
