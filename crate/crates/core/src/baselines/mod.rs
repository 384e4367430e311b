//! Comparison agents for tournaments, built by name from a registry.

mod classic;
mod learners;
mod memory;
mod portfolio;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, AgentError, Outcome, RoundClock};
use crate::experts::RosterKind;
use crate::game::{Action, Game, Player};
use crate::meta::{MetaAgent, MetaConfig, Variant};
use crate::solve::{maximin, nash_bargaining, security_action};

pub use memory::{MemoryTables, MemoryTablesError};

/// Implemented registry entries, in registry order (also the ranking
/// tie-break order).
pub const REGISTRY: [&str; 21] = [
    "random",
    "bully",
    "manipulator",
    "gtft",
    "wsls",
    "mem1",
    "mem2",
    "fictitious_play",
    "stochastic_fp",
    "qlearn",
    "mbrl1",
    "mbrl2",
    "eee",
    "eee_simple",
    "exp3",
    "exp3_simple",
    "wma",
    "s",
    "spp",
    "spp_simple",
    "ssharp",
];

/// Names that belong to the roster but have no implementation.
pub const RESERVED: [&str; 5] = ["mqubed", "cjal", "wolf_phc", "giga_wolf", "manip_gf"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("unknown agent name `{0}`")]
    UnknownName(String),
    #[error("agent `{0}` is reserved but not implemented")]
    NotImplemented(String),
    #[error("agent `{agent}` has no parameter `{param}`")]
    UnknownParam { agent: String, param: String },
    #[error("parameter `{param}` of `{agent}` must be {expected}, got {value}")]
    InvalidParam {
        agent: String,
        param: String,
        value: f64,
        expected: &'static str,
    },
}

/// Which agent to build, with parameter overrides and a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl BaselineSpec {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        BaselineSpec {
            name: name.into(),
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }
}

pub fn is_registered(name: &str) -> bool {
    REGISTRY.contains(&name)
}

fn check_name(name: &str) -> Result<(), BaselineError> {
    if is_registered(name) {
        Ok(())
    } else if RESERVED.contains(&name) {
        Err(BaselineError::NotImplemented(name.to_string()))
    } else {
        Err(BaselineError::UnknownName(name.to_string()))
    }
}

/// Default hyperparameters of a registered agent.
pub fn default_params(name: &str) -> Result<BTreeMap<String, f64>, BaselineError> {
    check_name(name)?;
    let pairs: &[(&str, f64)] = match name {
        "manipulator" => &[("window", 10.0)],
        "gtft" => &[("forgiveness", 0.1)],
        "stochastic_fp" => &[("temperature", 0.1)],
        "qlearn" => &[("alpha", 0.1), ("gamma", 0.95), ("epsilon", 0.1)],
        "mbrl1" | "mbrl2" => &[
            ("gamma", 0.95),
            ("horizon", 50.0),
            ("epsilon0", 0.1),
            ("epsilon_decay", 0.999),
            ("epsilon_min", 0.01),
        ],
        "eee" | "eee_simple" => &[("phase", 10.0)],
        "exp3" => &[("gamma", 0.07), ("block", 10.0)],
        "exp3_simple" => &[("gamma", 0.07)],
        "wma" => &[("eta", 0.1)],
        "s" | "spp" | "spp_simple" | "ssharp" => &[("lambda", 0.99), ("m", 10.0)],
        _ => &[],
    };
    Ok(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

/// Defaults overlaid with the spec's overrides; unknown keys are rejected.
pub fn resolved_params(spec: &BaselineSpec) -> Result<BTreeMap<String, f64>, BaselineError> {
    let mut params = default_params(&spec.name)?;
    let is_meta = matches!(spec.name.as_str(), "s" | "spp" | "spp_simple" | "ssharp");
    for (k, v) in &spec.params {
        let known = params.contains_key(k) || (is_meta && k == "alpha0");
        if !known {
            return Err(BaselineError::UnknownParam {
                agent: spec.name.clone(),
                param: k.clone(),
            });
        }
        if let Some(expected) = out_of_range(k, *v) {
            return Err(BaselineError::InvalidParam {
                agent: spec.name.clone(),
                param: k.clone(),
                value: *v,
                expected,
            });
        }
        params.insert(k.clone(), *v);
    }
    Ok(params)
}

/// Description of the allowed range when `value` falls outside it.
fn out_of_range(key: &str, value: f64) -> Option<&'static str> {
    let (ok, expected) = match key {
        "lambda" => (value > 0.0 && value < 1.0, "in (0, 1)"),
        "gamma" | "epsilon_decay" => (value > 0.0 && value <= 1.0, "in (0, 1]"),
        "alpha" | "epsilon" | "epsilon0" | "epsilon_min" | "forgiveness" => ((0.0..=1.0).contains(&value), "in [0, 1]"),
        "m" | "window" | "phase" | "block" | "horizon" => (value >= 1.0, "at least 1"),
        "temperature" | "eta" => (value > 0.0, "positive"),
        _ => (true, ""),
    };
    if ok && value.is_finite() {
        None
    } else {
        Some(if expected.is_empty() { "finite" } else { expected })
    }
}

/// Per-seat game facts shared by the classical strategies. "Cooperate" is
/// the player's own action in the first cell of the bargaining plan.
#[derive(Clone, Debug)]
pub(crate) struct SeatView {
    pub seat: Player,
    /// `own[a][b]`: own payoff for own action `a` against partner action `b`.
    pub own: [[f64; 2]; 2],
    pub cooperate: Action,
    pub partner_cooperate: Action,
    pub security: Action,
    pub maximin_value: f64,
    pub maximin_p0: f64,
    pub min_payoff: f64,
    pub max_payoff: f64,
}

impl SeatView {
    pub fn new(game: &Game, seat: Player) -> Self {
        let mut own = [[0.0; 2]; 2];
        for a in Action::BOTH {
            for b in Action::BOTH {
                own[a.index()][b.index()] = game.payoff_seat(seat, a, b);
            }
        }
        let first = nash_bargaining(game).plan.at(0);
        let mm = maximin(game, seat);
        SeatView {
            seat,
            own,
            cooperate: first.action_of(seat),
            partner_cooperate: first.action_of(seat.other()),
            security: security_action(game, seat),
            maximin_value: mm.value,
            maximin_p0: mm.strategy[0],
            min_payoff: game.min_payoff(),
            max_payoff: game.max_payoff(),
        }
    }

    pub fn payoff(&self, own: Action, other: Action) -> f64 {
        self.own[own.index()][other.index()]
    }

    /// Payoff rescaled to `[0, 1]` over the game's range.
    pub fn normalized(&self, payoff: f64) -> f64 {
        let span = self.max_payoff - self.min_payoff;
        if span > 0.0 {
            (payoff - self.min_payoff) / span
        } else {
            0.5
        }
    }

    pub fn expected(&self, own: Action, p_partner_first: f64) -> f64 {
        p_partner_first * self.payoff(own, Action::FIRST) + (1.0 - p_partner_first) * self.payoff(own, Action::SECOND)
    }
}

/// A per-round decision rule with private state.
pub(crate) trait Policy: Send {
    fn choose(&mut self, round: usize, rng: &mut ChaCha8Rng) -> Action;
    fn update(&mut self, outcome: &Outcome);
}

/// Adapts a [`Policy`] to the [`Agent`] protocol.
pub struct Baseline {
    name: String,
    policy: Box<dyn Policy>,
    rng: ChaCha8Rng,
    clock: RoundClock,
}

impl Baseline {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl Agent for Baseline {
    fn act(&mut self, round: usize) -> Result<Action, AgentError> {
        self.clock.check(round)?;
        Ok(self.policy.choose(round, &mut self.rng))
    }

    fn observe(&mut self, outcome: &Outcome) -> Result<(), AgentError> {
        self.clock.advance(outcome.round)?;
        self.policy.update(outcome);
        Ok(())
    }
}

/// Builds a registered agent for `seat` with the embedded memory tables.
pub fn instantiate_baseline(
    spec: &BaselineSpec,
    game: &Game,
    seat: Player,
    talk: bool,
) -> Result<Box<dyn Agent>, BaselineError> {
    instantiate_with_tables(spec, game, seat, talk, MemoryTables::embedded())
}

pub fn instantiate_with_tables(
    spec: &BaselineSpec,
    game: &Game,
    seat: Player,
    talk: bool,
    tables: &MemoryTables,
) -> Result<Box<dyn Agent>, BaselineError> {
    let p = resolved_params(spec)?;
    let name = spec.name.as_str();
    let get = |k: &str| p[k];

    let meta = |variant, roster| {
        let mut cfg = MetaConfig::new(variant, spec.seed).with_talk(talk);
        cfg.lambda = get("lambda");
        cfg.m = (get("m").round() as usize).max(1);
        cfg.alpha0 = p.get("alpha0").copied();
        cfg.roster = roster;
        Box::new(MetaAgent::new(game, seat, cfg)) as Box<dyn Agent>
    };
    match name {
        "s" => return Ok(meta(Variant::S, RosterKind::Full)),
        "spp" => return Ok(meta(Variant::Spp, RosterKind::Full)),
        "spp_simple" => return Ok(meta(Variant::Spp, RosterKind::Simple)),
        "ssharp" => return Ok(meta(Variant::SSharp, RosterKind::Full)),
        _ => {}
    }

    let view = SeatView::new(game, seat);
    let policy: Box<dyn Policy> = match name {
        "random" => Box::new(classic::Uniform),
        "bully" => Box::new(classic::Bully::new(game, seat)),
        "manipulator" => Box::new(classic::Manipulator::new(game, view, get("window") as usize)),
        "gtft" => Box::new(classic::GenerousTitForTat::new(view, get("forgiveness"))),
        "wsls" => Box::new(classic::WinStayLoseShift::new(view)),
        "mem1" => Box::new(memory::MemoryPolicy::new(view, tables.mem1.clone())),
        "mem2" => Box::new(memory::MemoryPolicy::new(view, tables.mem2.clone())),
        "fictitious_play" => Box::new(learners::FictitiousPlay::new(view, None)),
        "stochastic_fp" => Box::new(learners::FictitiousPlay::new(view, Some(get("temperature")))),
        "qlearn" => Box::new(learners::QLearner::new(
            view,
            get("alpha"),
            get("gamma"),
            get("epsilon"),
        )),
        "mbrl1" | "mbrl2" => {
            let params = crate::model::MbrlParams {
                memory: if name == "mbrl1" { 1 } else { 2 },
                gamma: get("gamma"),
                horizon: get("horizon") as usize,
                epsilon0: get("epsilon0"),
                epsilon_decay: get("epsilon_decay"),
                epsilon_min: get("epsilon_min"),
                explore: true,
            };
            Box::new(learners::Mbrl::new(game, seat, params))
        }
        "eee" | "eee_simple" => {
            let roster = if name == "eee" {
                RosterKind::Full
            } else {
                RosterKind::Simple
            };
            Box::new(portfolio::Eee::new(game, seat, roster, get("phase") as usize))
        }
        "exp3" => Box::new(portfolio::Exp3Experts::new(
            game,
            seat,
            get("gamma"),
            get("block") as usize,
        )),
        "exp3_simple" => Box::new(learners::Exp3Actions::new(view, get("gamma"))),
        "wma" => Box::new(learners::WeightedMajority::new(view, get("eta"))),
        other => return Err(BaselineError::UnknownName(other.to_string())),
    };
    Ok(Box::new(Baseline {
        name: spec.name.clone(),
        policy,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        clock: RoundClock::default(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointAction;

    #[test]
    fn registry_has_21_entries_and_rejects_reserved() {
        assert_eq!(REGISTRY.len(), 21);
        let g = Game::prisoners_dilemma();
        for name in REGISTRY {
            assert!(instantiate_baseline(&BaselineSpec::new(name, 1), &g, Player::Row, false).is_ok());
        }
        for name in RESERVED {
            assert_eq!(
                instantiate_baseline(&BaselineSpec::new(name, 1), &g, Player::Row, false).err(),
                Some(BaselineError::NotImplemented(name.to_string()))
            );
        }
        assert!(matches!(
            instantiate_baseline(&BaselineSpec::new("nope", 1), &g, Player::Row, false),
            Err(BaselineError::UnknownName(_))
        ));
    }

    #[test]
    fn unknown_params_are_rejected() {
        let spec = BaselineSpec::new("gtft", 0).with_param("temperature", 1.0);
        assert!(matches!(
            resolved_params(&spec),
            Err(BaselineError::UnknownParam { .. })
        ));
        let spec = BaselineSpec::new("gtft", 0).with_param("forgiveness", 0.0);
        assert_eq!(resolved_params(&spec).unwrap()["forgiveness"], 0.0);
    }

    #[test]
    fn out_of_range_params_are_rejected() {
        for (name, key, value) in [
            ("spp", "lambda", 1.0),
            ("spp", "m", 0.0),
            ("qlearn", "epsilon", 1.5),
            ("wma", "eta", 0.0),
            ("ssharp", "alpha0", f64::NAN),
        ] {
            let spec = BaselineSpec::new(name, 0).with_param(key, value);
            assert!(
                matches!(resolved_params(&spec), Err(BaselineError::InvalidParam { .. })),
                "{name}.{key}={value}"
            );
        }
        let spec = BaselineSpec::new("mbrl1", 0).with_param("epsilon_decay", 1.0);
        assert!(resolved_params(&spec).is_ok());
    }

    #[test]
    fn random_is_uniform() {
        let g = Game::chicken();
        let mut a = instantiate_baseline(&BaselineSpec::new("random", 5), &g, Player::Row, false).unwrap();
        let n = 10_000;
        let mut first = 0;
        for t in 0..n {
            let x = a.act(t).unwrap();
            if x == Action::FIRST {
                first += 1;
            }
            let joint = JointAction::new(x, Action::FIRST);
            a.observe(&Outcome {
                round: t,
                joint,
                payoffs: g.payoffs(joint),
            })
            .unwrap();
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((first as f64 - n as f64 / 2.0).abs() < 3.0 * sigma);
    }
}
