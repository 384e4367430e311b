use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use repgame_service::{serve, spawn_sweeper, AppState, ServiceConfig};

/// Serve repeated-game sessions over HTTP.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Seconds a session may sit idle before it is dropped.
    #[arg(long, default_value_t = 1800)]
    idle_timeout: u64,
    /// Directory for finished and expired session transcripts.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt::init();
    let args = Args::parse();
    let idle_timeout = Duration::from_secs(args.idle_timeout.max(1));
    let state = AppState::new(ServiceConfig {
        idle_timeout,
        transcript_dir: args.transcripts,
    });
    spawn_sweeper(state.clone(), (idle_timeout / 4).max(Duration::from_secs(1)));
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
