use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::metrics::{compute_metrics, Metric, MetricError, MetricReport, REPLICATOR_STEPS, REPLICATOR_THRESHOLD};
use super::roundrobin::{agent_key, game_key, PayoffTensor};
use super::{RoundRobin, Transcript};
use crate::baselines::{resolved_params, BaselineError};
use crate::experts::{COMPLIANCE_WEIGHT, MAX_PUNISH_LEN};
use crate::game::Player;
use crate::model::MbrlParams;
use crate::signaling::{CATALOG_VERSION, MAX_ACTS_PER_ROUND};

pub const RANKINGS_PREFIX: &str = "rankings_";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed record in {path} line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Agent(#[from] BaselineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub round_robin: RoundRobin,
    /// Every match length that was run with `round_robin`.
    pub lengths: Vec<usize>,
    pub parameters: Value,
}

/// Builds the run-metadata document: the round-robin configuration, each
/// agent's fully resolved parameters, and the fixed design constants.
pub fn metadata_document(rr: &RoundRobin, lengths: &[usize]) -> Result<RunMetadata, ExportError> {
    let mut agents = BTreeMap::new();
    for spec in &rr.roster {
        agents.insert(agent_key(spec), resolved_params(spec)?);
    }
    let mbrl = MbrlParams::default();
    let parameters = json!({
        "crate_version": env!("CARGO_PKG_VERSION"),
        "catalog_version": CATALOG_VERSION,
        "agents": agents,
        "games": rr.games.iter().map(game_key).collect::<Vec<_>>(),
        "expert_mbrl": mbrl,
        "compliance_weight": COMPLIANCE_WEIGHT,
        "max_punish_len": MAX_PUNISH_LEN,
        "max_acts_per_round": MAX_ACTS_PER_ROUND,
        "replicator_steps": REPLICATOR_STEPS,
        "replicator_threshold": REPLICATOR_THRESHOLD,
        "replicator_shift": "payoffs shifted so the minimum is 1 when any payoff is non-positive",
        "rank_tie_break": "score, then (replicator only) later extinction, then registry order, then roster order",
        "match_seed": "sha256(row agent, column agent, game, trial, master seed), first 8 bytes little-endian",
        "seat_seed": "sha256(\"seat\", match seed, seat index), first 8 bytes little-endian",
        "mutual_cooperation": "joint action inside the cells of the game's bargaining plan",
        "tensor_entry": "agent's mean per-round payoff against the partner, averaged over both seatings",
    });
    Ok(RunMetadata {
        round_robin: rr.clone(),
        lengths: lengths.to_vec(),
        parameters,
    })
}

/// Paths written by [`export_results`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExportFiles {
    pub rankings: Vec<PathBuf>,
    pub transcripts: Option<PathBuf>,
    pub metadata: PathBuf,
}

fn write_rankings(path: &Path, reports: &[MetricReport]) -> Result<(), ExportError> {
    let file = File::create(path).map_err(io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["agent".to_string()];
    header.extend(Metric::ALL.iter().map(|m| m.name().to_string()));
    header.extend(Metric::ALL.iter().map(|m| format!("{}_rank", m.name())));
    w.write_record(&header)?;
    let ordered: Vec<&MetricReport> = Metric::ALL
        .iter()
        .filter_map(|m| reports.iter().find(|r| r.metric == *m))
        .collect();
    let agents = ordered.first().map(|r| r.agents.clone()).unwrap_or_default();
    for (i, agent) in agents.iter().enumerate() {
        let mut row = vec![agent.clone()];
        row.extend(ordered.iter().map(|r| format!("{}", r.scores[i])));
        row.extend(ordered.iter().map(|r| r.ranks[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(io(path))?;
    Ok(())
}

/// Writes `rankings_<rounds>.csv` per match length, `transcripts.jsonl`
/// (one transcript per line, only if any are given) and `metadata.json`
/// into `dir`, creating it if needed.
pub fn export_results(
    dir: &Path,
    reports: &[(usize, Vec<MetricReport>)],
    transcripts: &[Transcript],
    metadata: &RunMetadata,
) -> Result<ExportFiles, ExportError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut rankings = Vec::new();
    for (rounds, reps) in reports {
        let path = dir.join(format!("{RANKINGS_PREFIX}{rounds}.csv"));
        write_rankings(&path, reps)?;
        rankings.push(path);
    }

    let transcripts_path = if transcripts.is_empty() {
        None
    } else {
        let path = dir.join(TRANSCRIPTS_FILE);
        let mut w = BufWriter::new(File::create(&path).map_err(io(&path))?);
        for t in transcripts {
            writeln!(w, "{}", t.to_json_line()).map_err(io(&path))?;
        }
        w.flush().map_err(io(&path))?;
        Some(path)
    };

    let metadata_path = dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(metadata).expect("metadata serializes");
    std::fs::write(&metadata_path, text + "\n").map_err(io(&metadata_path))?;

    Ok(ExportFiles {
        rankings,
        transcripts: transcripts_path,
        metadata: metadata_path,
    })
}

pub fn load_transcripts(path: &Path) -> Result<Vec<Transcript>, ExportError> {
    let file = File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ExportError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn load_metadata(path: &Path) -> Result<RunMetadata, ExportError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| ExportError::Json {
        path: path.to_path_buf(),
        line: 1,
        source,
    })
}

/// Rebuilds the payoff tensor for one match length from stored
/// transcripts. Transcripts of other lengths, or naming agents or games
/// outside the given lists, are ignored; missing entries stay `NaN`.
pub fn tensor_from_transcripts(
    transcripts: &[Transcript],
    agents: &[String],
    games: &[String],
    trials: usize,
    rounds: usize,
) -> PayoffTensor {
    let mut sums = PayoffTensor::empty(agents.to_vec(), games.to_vec(), trials);
    let mut counts = vec![0u8; agents.len() * agents.len() * games.len() * trials];
    let n = agents.len();
    let slot = |a: usize, b: usize, g: usize, t: usize| ((a * n + b) * games.len() + g) * trials + t;
    for tr in transcripts.iter().filter(|t| t.records.len() == rounds) {
        let cfg = &tr.meta.config;
        let find = |key: String| agents.iter().position(|a| *a == key);
        let (Some(i), Some(j)) = (find(agent_key(&cfg.agent_a)), find(agent_key(&cfg.agent_b))) else {
            continue;
        };
        let Some(g) = games.iter().position(|k| *k == game_key(&cfg.game)) else {
            continue;
        };
        let t = tr.meta.trial.unwrap_or(0);
        if t >= trials {
            continue;
        }
        for (me, partner, seat) in [(i, j, Player::Row), (j, i, Player::Col)] {
            let k = slot(me, partner, g, t);
            let prev = if counts[k] == 0 {
                0.0
            } else {
                sums.get(me, partner, g, t)
            };
            sums.set(me, partner, g, t, prev + tr.mean_payoff(seat));
            counts[k] += 1;
        }
    }
    for i in 0..n {
        for j in 0..n {
            for g in 0..games.len() {
                for t in 0..trials {
                    let c = counts[slot(i, j, g, t)];
                    let v = if c == 2 { sums.get(i, j, g, t) / 2.0 } else { f64::NAN };
                    sums.set(i, j, g, t, v);
                }
            }
        }
    }
    sums
}

/// Recomputes the rankings of every match length recorded in `dir` from
/// its `metadata.json` and `transcripts.jsonl`.
pub fn reanalyze(dir: &Path) -> Result<Vec<(usize, Vec<MetricReport>)>, ExportError> {
    let meta = load_metadata(&dir.join(METADATA_FILE))?;
    let transcripts = load_transcripts(&dir.join(TRANSCRIPTS_FILE))?;
    let rr = &meta.round_robin;
    let (agents, games) = (rr.agent_keys(), rr.game_keys());
    meta.lengths
        .iter()
        .map(|&rounds| {
            let tensor = tensor_from_transcripts(&transcripts, &agents, &games, rr.trials, rounds);
            Ok((rounds, compute_metrics(&tensor)?))
        })
        .collect()
}
