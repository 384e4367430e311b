//! Argument parsing helpers and command bodies for the `repgame` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use repgame::baselines::{default_params, is_registered, RESERVED};
use repgame::experts::{build_expert_set, RosterKind, SeatAnalysis};
use repgame::model::MbrlParams;
use repgame::table::{enumerate_periodic_table, stratified_sample, table_game};
use repgame::tournament::{
    analyze_fidelity, compute_metrics, cooperation_stats, export_results, load_transcripts, metadata_document,
    reanalyze, run_round_robin_with, ExportError, ExportFiles, MatchError, Metric, MetricError, MetricReport,
    RoundRobin, RoundRobinError, METADATA_FILE,
};
use repgame::{BaselineError, BaselineSpec, Game, Player, Transcript, REGISTRY};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    RoundRobin(#[from] RoundRobinError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Export(#[from] ExportError),
}

/// Parses one roster entry: `name` or `name[key=value,...]`.
pub fn parse_agent(text: &str) -> Result<BaselineSpec, CliError> {
    let text = text.trim();
    let (name, params) = match text.split_once('[') {
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::Usage(format!("unclosed parameter list in `{text}`")))?;
            (name, inner)
        }
        None => (text, ""),
    };
    if !is_registered(name) {
        return Err(BaselineError::UnknownName(name.to_string()).into());
    }
    let mut spec = BaselineSpec::new(name, 0);
    for pair in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{pair}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("parameter `{k}` needs a number, got `{v}`")))?;
        spec = spec.with_param(k.trim(), v);
    }
    Ok(spec)
}

/// `all` for the whole registry, otherwise a comma-separated list of
/// entries accepted by [`parse_agent`]. Commas inside brackets belong to
/// the parameter list.
pub fn parse_roster(text: &str) -> Result<Vec<BaselineSpec>, CliError> {
    if text.trim() == "all" {
        return Ok(REGISTRY.iter().map(|n| BaselineSpec::new(*n, 0)).collect());
    }
    let mut items = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    for (i, c) in text.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                items.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    items.push(&text[start..]);
    items
        .into_iter()
        .filter(|s| !s.trim().is_empty())
        .map(parse_agent)
        .collect()
}

pub fn parse_lengths(text: &str) -> Result<Vec<usize>, CliError> {
    let lengths: Vec<usize> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Usage(format!("bad match length `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    if lengths.is_empty() {
        return Err(CliError::Usage("no match lengths given".into()));
    }
    Ok(lengths)
}

pub fn parse_switch(text: &str) -> Result<bool, CliError> {
    match text {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        other => Err(CliError::Usage(format!("expected on or off, got `{other}`"))),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a JSON file holding one game or an array of games. Unnamed games
/// are labeled `<file stem>_<index>`.
pub fn load_games(path: &Path) -> Result<Vec<Game>, CliError> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let values = match value {
        serde_json::Value::Array(items) => items,
        single => vec![single],
    };
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("game");
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let g: Game = serde_json::from_value(v).map_err(|source| CliError::Json {
                path: path.to_path_buf(),
                source,
            })?;
            Ok(if g.name.is_some() {
                g
            } else {
                g.with_name(format!("{stem}_{i}"))
            })
        })
        .collect()
}

/// `periodic` (all 144), `sample:N` (stratified sample), or a game file.
pub fn resolve_games(text: &str) -> Result<Vec<Game>, CliError> {
    if text == "periodic" {
        return Ok(enumerate_periodic_table());
    }
    if let Some(n) = text.strip_prefix("sample:") {
        let n: usize = n
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("bad sample size `{n}`")))?;
        return Ok(stratified_sample(n));
    }
    load_games(Path::new(text))
}

/// `pd`, `chicken`, a table label such as `g017`, or a file holding one game.
pub fn resolve_game(text: &str) -> Result<Game, CliError> {
    match text {
        "pd" => return Ok(Game::prisoners_dilemma().with_name("pd")),
        "chicken" => return Ok(Game::chicken().with_name("chicken")),
        _ => {}
    }
    if let Some(g) = table_game(text) {
        return Ok(g);
    }
    let mut games = load_games(Path::new(text))?;
    if games.len() != 1 {
        return Err(CliError::Usage(format!(
            "{text} holds {} games; expected one",
            games.len()
        )));
    }
    Ok(games.remove(0))
}

/// Metric reports per match length.
pub type LengthReports = Vec<(usize, Vec<MetricReport>)>;

pub struct TournamentArgs {
    pub roster: Vec<BaselineSpec>,
    pub games: Vec<Game>,
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub talk: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub transcripts: bool,
}

/// Runs one round-robin per match length and exports everything.
pub fn run_tournament(args: &TournamentArgs) -> Result<(ExportFiles, LengthReports), CliError> {
    let mut reports = Vec::new();
    let mut transcripts = Vec::new();
    let mut rr = RoundRobin {
        roster: args.roster.clone(),
        games: args.games.clone(),
        rounds: args.lengths[0],
        trials: args.trials,
        talk: args.talk,
        seed: args.seed,
    };
    for &rounds in &args.lengths {
        rr.rounds = rounds;
        let (tensor, ts) = run_round_robin_with(&rr, args.transcripts)?;
        reports.push((rounds, compute_metrics(&tensor)?));
        transcripts.extend(ts);
    }
    rr.rounds = args.lengths[0];
    let meta = metadata_document(&rr, &args.lengths)?;
    let files = export_results(&args.out, &reports, &transcripts, &meta)?;
    Ok((files, reports))
}

/// Plain-text ranking table: one line per agent, in round-robin-average
/// order, with every metric's rank.
pub fn format_rankings(rounds: usize, reports: &[MetricReport]) -> String {
    let mut out = String::new();
    let Some(primary) = reports.iter().find(|r| r.metric == Metric::RoundRobinAverage) else {
        return out;
    };
    let _ = writeln!(out, "rounds = {rounds}");
    let _ = write!(out, "{:<24} {:>10}", "agent", "rr_average");
    for r in reports {
        let _ = write!(out, " {:>6}", short(r.metric));
    }
    out.push('\n');
    for &i in &primary.ranking {
        let _ = write!(out, "{:<24} {:>10.4}", primary.agents[i], primary.scores[i]);
        for r in reports {
            let _ = write!(out, " {:>6}", r.ranks[i]);
        }
        out.push('\n');
    }
    out
}

fn short(m: Metric) -> &'static str {
    match m {
        Metric::RoundRobinAverage => "avg",
        Metric::PctBestScore => "best",
        Metric::WorstCaseScore => "worst",
        Metric::ReplicatorDynamic => "repl",
        Metric::Group1Tourney => "grp1",
        Metric::Group2Tourney => "grp2",
    }
}

/// Analysis text for `path`: a tournament output directory (rankings are
/// recomputed from its transcripts) or a transcript file, JSON or JSON
/// lines (cooperation and fidelity per transcript).
pub fn analyze(path: &Path) -> Result<String, CliError> {
    if path.is_dir() {
        if !path.join(METADATA_FILE).exists() {
            return Err(CliError::Usage(format!("{} has no {METADATA_FILE}", path.display())));
        }
        let mut out = String::new();
        for (rounds, reports) in reanalyze(path)? {
            out.push_str(&format_rankings(rounds, &reports));
            out.push('\n');
        }
        return Ok(out);
    }
    let text = read_file(path)?;
    let transcripts: Vec<Transcript> = match serde_json::from_str::<Transcript>(&text) {
        Ok(t) => vec![t],
        Err(_) => load_transcripts(path)?,
    };
    let mut out = String::new();
    for (k, t) in transcripts.iter().enumerate() {
        let coop = cooperation_stats(std::slice::from_ref(t), t.game());
        let fid = analyze_fidelity(t);
        let line = json!({
            "transcript": k,
            "rounds": t.records.len(),
            "mean_payoff": [t.mean_payoff(Player::Row), t.mean_payoff(Player::Col)],
            "rounds_to_cooperation": coop.rounds_to_cc[0],
            "loyal": fid.loyal,
            "honest": fid.honest,
        });
        let _ = writeln!(out, "{line}");
    }
    Ok(out)
}

/// One JSON line per registered agent with its default parameters;
/// reserved names are listed as unimplemented.
pub fn list_agents() -> Result<String, CliError> {
    let mut out = String::new();
    for name in REGISTRY {
        let line = json!({"name": name, "params": default_params(name)?});
        let _ = writeln!(out, "{line}");
    }
    for name in RESERVED {
        let _ = writeln!(out, "{}", json!({"name": name, "implemented": false}));
    }
    Ok(out)
}

/// One JSON line per expert of the roster for `seat` in `game`.
pub fn dump_experts(game: &Game, seat: Player, roster: RosterKind) -> String {
    let analysis = SeatAnalysis::new(game, seat);
    let mut out = String::new();
    for (i, mut e) in build_expert_set(game, seat, roster, MbrlParams::default())
        .into_iter()
        .enumerate()
    {
        let line = json!({
            "index": i,
            "kind": e.kind().label(),
            "role": format!("{:?}", e.kind().speaker_role()),
            "target": e.target().map(|p| p.to_string()),
            "punish_len": e.punish_len(),
            "potential": e.potential(game, &analysis),
        });
        let _ = writeln!(out, "{line}");
    }
    out
}
