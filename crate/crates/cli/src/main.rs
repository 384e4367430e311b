use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use repgame::experts::RosterKind;
use repgame::tournament::{worker_count, MatchConfig, WORKERS_ENV};
use repgame::{run_match, Player};
use repgame_cli::{
    analyze, dump_experts, format_rankings, list_agents, parse_agent, parse_lengths, parse_roster, parse_switch,
    resolve_game, resolve_games, run_tournament, CliError, TournamentArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "repgame",
    version,
    about = "Repeated 2x2 games: matches, tournaments and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Seat {
    Row,
    Col,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Roster {
    Full,
    Simple,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Round-robin tournament; writes rankings, metadata and optionally transcripts.
    #[command(after_help = format!("Worker threads come from {WORKERS_ENV} (default: one per core)."))]
    Tournament {
        /// `all`, or comma-separated names, each optionally `name[key=value,...]`.
        #[arg(long, default_value = "all")]
        roster: String,
        /// `periodic`, `sample:N`, or a JSON file with one game or an array.
        #[arg(long, default_value = "periodic")]
        games: String,
        /// Comma-separated match lengths.
        #[arg(long, default_value = "100,1000")]
        rounds: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// on or off.
        #[arg(long, default_value = "off")]
        talk: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write every match transcript (needed by `analyze`).
        #[arg(long)]
        transcripts: bool,
    },
    /// A single match; prints its transcript as one JSON line.
    Match {
        /// Row player.
        #[arg(long)]
        a: String,
        /// Column player.
        #[arg(long)]
        b: String,
        /// `pd`, `chicken`, a table label like `g017`, or a JSON game file.
        #[arg(long)]
        game: String,
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        #[arg(long, default_value = "off")]
        talk: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print only the mean payoffs instead of the transcript.
        #[arg(long)]
        summary: bool,
    },
    /// Recompute rankings from a tournament directory, or summarize a transcript file.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// List registered agents and their default parameters.
    Agents,
    /// Dump the expert roster an S-family agent builds for one seat.
    Experts {
        #[arg(long)]
        game: String,
        #[arg(long, value_enum, default_value = "row")]
        seat: Seat,
        #[arg(long, value_enum, default_value = "full")]
        roster: Roster,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Tournament {
            roster,
            games,
            rounds,
            trials,
            talk,
            seed,
            out,
            transcripts,
        } => {
            let args = TournamentArgs {
                roster: parse_roster(&roster)?,
                games: resolve_games(&games)?,
                lengths: parse_lengths(&rounds)?,
                trials,
                talk: parse_switch(&talk)?,
                seed,
                out,
                transcripts,
            };
            eprintln!(
                "{} agents, {} games, {} trials, lengths {:?}, {} workers",
                args.roster.len(),
                args.games.len(),
                args.trials,
                args.lengths,
                worker_count()
            );
            let (files, reports) = run_tournament(&args)?;
            for (rounds, reps) in &reports {
                println!("{}", format_rankings(*rounds, reps));
            }
            for p in files
                .rankings
                .iter()
                .chain(files.transcripts.iter())
                .chain([&files.metadata])
            {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Match {
            a,
            b,
            game,
            rounds,
            talk,
            seed,
            summary,
        } => {
            let cfg = MatchConfig {
                game: resolve_game(&game)?,
                agent_a: parse_agent(&a)?,
                agent_b: parse_agent(&b)?,
                rounds,
                talk: parse_switch(&talk)?,
                seed,
            };
            let t = run_match(&cfg)?;
            if summary {
                println!(
                    "{}",
                    serde_json::json!({
                        "row": a,
                        "col": b,
                        "rounds": rounds,
                        "mean_payoff": [t.mean_payoff(Player::Row), t.mean_payoff(Player::Col)],
                    })
                );
            } else {
                println!("{}", t.to_json_line());
            }
        }
        Command::Analyze { input } => print!("{}", analyze(&input)?),
        Command::Agents => print!("{}", list_agents()?),
        Command::Experts { game, seat, roster } => {
            let seat = match seat {
                Seat::Row => Player::Row,
                Seat::Col => Player::Col,
            };
            let roster = match roster {
                Roster::Full => RosterKind::Full,
                Roster::Simple => RosterKind::Simple,
            };
            print!("{}", dump_experts(&resolve_game(&game)?, seat, roster));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
