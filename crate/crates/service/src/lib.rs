//! HTTP+JSON service for playing a repeated game against a registered
//! agent. The client always sits in the row seat and never learns which
//! agent it is playing; see [`api`] for the routes and bodies.

pub mod api;
mod error;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use repgame::session::{Phase, SessionState};
use repgame::{BaselineSpec, Game, Session, SessionConfig, SessionError, Transcript};
use serde::de::DeserializeOwned;

use api::{ActionResolved, CreateSession, MessagesExchanged, SessionCreated, SubmitAction, SubmitMessages};
pub use error::{ApiError, ErrorBody, ErrorDetail};

/// Name shown in place of the partner agent in transcripts sent to clients.
pub const HIDDEN_AGENT: &str = "partner";

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Sessions untouched for this long are dropped by [`AppState::sweep`].
    pub idle_timeout: Duration,
    /// Where finished and expired transcripts are written, one
    /// `<session id>.json` each. Nothing is written when `None`.
    pub transcript_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            transcript_dir: None,
        }
    }
}

struct Entry {
    session: Session,
    last_active: Instant,
}

struct Inner {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Entry>>>>,
    expired: Mutex<HashSet<String>>,
}

/// Shared service state. Cloning is cheap; every clone sees the same
/// sessions.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            inner: Arc::new(Inner {
                config,
                sessions: Mutex::new(HashMap::new()),
                expired: Mutex::new(HashSet::new()),
            }),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn session_count(&self) -> usize {
        lock(&self.inner.sessions).len()
    }

    pub fn create(&self, req: CreateSession) -> Result<SessionCreated, ApiError> {
        let game: Game = serde_json::from_value(req.game).map_err(|e| SessionError::InvalidGame(e.to_string()))?;
        let mut agent = BaselineSpec::new(req.agent, 0);
        agent.params = req.params;
        let session = Session::new(SessionConfig {
            game,
            agent,
            rounds: req.rounds,
            talk: req.talk,
            seed: req.seed.unwrap_or_else(rand::random),
        })?;
        let id = uuid::Uuid::new_v4().to_string();
        let created = SessionCreated {
            session_id: id.clone(),
            view: session.view(),
            state: session.state(),
        };
        let entry = Entry {
            session,
            last_active: Instant::now(),
        };
        lock(&self.inner.sessions).insert(id, Arc::new(Mutex::new(entry)));
        Ok(created)
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        if let Some(e) = lock(&self.inner.sessions).get(id) {
            return Ok(Arc::clone(e));
        }
        if lock(&self.inner.expired).contains(id) {
            Err(ApiError::Expired(id.to_string()))
        } else {
            Err(ApiError::UnknownSession(id.to_string()))
        }
    }

    /// Runs `f` on the session while holding its lock, so requests for one
    /// session are applied one at a time.
    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let entry = self.entry(id)?;
        let mut guard = lock(&entry);
        guard.last_active = Instant::now();
        let was_finished = guard.session.phase() == Phase::Finished;
        let out = f(&mut guard.session)?;
        if !was_finished && guard.session.phase() == Phase::Finished {
            self.persist(id, guard.session.transcript());
        }
        Ok(out)
    }

    pub fn submit_messages(&self, id: &str, req: SubmitMessages) -> Result<MessagesExchanged, ApiError> {
        let acts = req.acts.iter().map(|a| a.parse()).collect::<Result<Vec<_>, _>>()?;
        self.with_session(id, |s| {
            let partner_acts = s.submit_messages(acts)?;
            Ok(MessagesExchanged {
                partner_acts,
                state: s.state(),
            })
        })
    }

    pub fn submit_action(&self, id: &str, req: SubmitAction) -> Result<ActionResolved, ApiError> {
        self.with_session(id, |s| {
            let outcome = s.submit_action(req.action)?;
            Ok(ActionResolved {
                outcome,
                state: s.state(),
            })
        })
    }

    pub fn state(&self, id: &str) -> Result<SessionState, ApiError> {
        self.with_session(id, |s| Ok(s.state()))
    }

    /// The transcript so far with the partner's name and parameters
    /// replaced by [`HIDDEN_AGENT`].
    pub fn client_transcript(&self, id: &str) -> Result<Transcript, ApiError> {
        self.with_session(id, |s| Ok(redact(s.transcript())))
    }

    /// Drops every session idle since before `now - idle_timeout`, writing
    /// its transcript so far. Returns the ids removed.
    pub fn sweep(&self, now: Instant) -> Vec<String> {
        let timeout = self.inner.config.idle_timeout;
        let stale: Vec<(String, Arc<Mutex<Entry>>)> = {
            let mut sessions = lock(&self.inner.sessions);
            let ids: Vec<String> = sessions
                .iter()
                .filter(|(_, e)| now.saturating_duration_since(lock(e).last_active) >= timeout)
                .map(|(id, _)| id.clone())
                .collect();
            ids.into_iter()
                .filter_map(|id| sessions.remove(&id).map(|e| (id, e)))
                .collect()
        };
        let mut expired = lock(&self.inner.expired);
        let mut removed = Vec::with_capacity(stale.len());
        for (id, entry) in stale {
            let guard = lock(&entry);
            if guard.session.phase() != Phase::Finished {
                self.persist(&id, guard.session.transcript());
            }
            expired.insert(id.clone());
            removed.push(id);
        }
        removed.sort();
        removed
    }

    fn persist(&self, id: &str, transcript: &Transcript) {
        let Some(dir) = &self.inner.config.transcript_dir else {
            return;
        };
        let path = dir.join(format!("{id}.json"));
        let written =
            std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, transcript.to_json_line() + "\n"));
        if let Err(e) = written {
            tracing::error!(path = %path.display(), error = %e, "could not write transcript");
        }
    }
}

/// Copy of `t` that does not name the agent.
pub fn redact(t: &Transcript) -> Transcript {
    let mut out = t.clone();
    let seat = &mut out.meta.config.agent_b;
    seat.name = HIDDEN_AGENT.to_string();
    seat.params.clear();
    out
}

/// Spawns a task that calls [`AppState::sweep`] every `every`.
pub fn spawn_sweeper(state: AppState, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            for id in state.sweep(Instant::now()) {
                tracing::info!(session = %id, "session expired");
            }
        }
    })
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Json<SessionCreated>, ApiError> {
    state.create(parse_body(&body)?).map(Json)
}

async fn post_messages(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<MessagesExchanged>, ApiError> {
    state.submit_messages(&id, parse_body(&body)?).map(Json)
}

async fn post_action(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ActionResolved>, ApiError> {
    state.submit_action(&id, parse_body(&body)?).map(Json)
}

async fn get_state(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    state.state(&id).map(Json)
}

async fn get_transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Transcript>, ApiError> {
    state.client_transcript(&id).map(Json)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/messages", post(post_messages))
        .route("/sessions/{id}/action", post(post_action))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .with_state(state)
}

/// Serves [`router`] on `listener` until `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, state: AppState, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

#[cfg(test)]
mod tests {
    use super::*;
    use api::WireAct;
    use serde_json::json;

    fn pd() -> serde_json::Value {
        serde_json::to_value(repgame::GameF64::prisoners_dilemma()).unwrap()
    }

    fn create(state: &AppState, talk: bool, rounds: usize) -> String {
        state
            .create(CreateSession {
                game: pd(),
                agent: "ssharp".into(),
                params: Default::default(),
                rounds,
                talk,
                seed: Some(3),
            })
            .unwrap()
            .session_id
    }

    #[test]
    fn view_hides_agent() {
        let state = AppState::new(ServiceConfig::default());
        let created = state
            .create(CreateSession {
                game: pd(),
                agent: "ssharp".into(),
                params: Default::default(),
                rounds: 4,
                talk: true,
                seed: None,
            })
            .unwrap();
        let text = serde_json::to_string(&created).unwrap();
        assert!(!text.contains("ssharp"));
        assert_eq!(created.view.menu.as_ref().unwrap().acts.len(), 19);
    }

    #[test]
    fn unknown_agent_and_bad_game() {
        let state = AppState::new(ServiceConfig::default());
        let mut req = CreateSession {
            game: pd(),
            agent: "nobody".into(),
            params: Default::default(),
            rounds: 3,
            talk: false,
            seed: None,
        };
        assert_eq!(state.create(req.clone()).unwrap_err().code(), "unknown_agent");
        req.agent = "spp".into();
        req.game = json!({"row_payoffs": [[1, 2]]});
        assert_eq!(state.create(req).unwrap_err().code(), "invalid_game");
    }

    #[test]
    fn phases_and_errors() {
        let state = AppState::new(ServiceConfig::default());
        let id = create(&state, true, 2);
        let err = state.submit_action(&id, SubmitAction { action: 0 }).unwrap_err();
        assert_eq!(err.code(), "wrong_phase");
        let bad = SubmitMessages {
            acts: vec![WireAct { id: 19, cells: vec![] }],
        };
        assert_eq!(state.submit_messages(&id, bad).unwrap_err().code(), "invalid_act");
        state.submit_messages(&id, SubmitMessages::default()).unwrap();
        let err = state.submit_messages(&id, SubmitMessages::default()).unwrap_err();
        assert_eq!(err.code(), "wrong_phase");
        assert_eq!(
            state.submit_action(&id, SubmitAction { action: 2 }).unwrap_err().code(),
            "invalid_action"
        );
        let r = state.submit_action(&id, SubmitAction { action: 0 }).unwrap();
        assert_eq!(r.state.round, 1);
        assert_eq!(r.state.phase, Phase::AwaitingMessages);
    }

    #[test]
    fn silent_session_rejects_messages() {
        let state = AppState::new(ServiceConfig::default());
        let id = create(&state, false, 1);
        let err = state.submit_messages(&id, SubmitMessages::default()).unwrap_err();
        assert_eq!(err.code(), "talk_disabled");
        let r = state.submit_action(&id, SubmitAction { action: 1 }).unwrap();
        assert_eq!(r.state.phase, Phase::Finished);
    }

    #[test]
    fn sessions_are_isolated() {
        let state = AppState::new(ServiceConfig::default());
        let a = create(&state, false, 3);
        let b = create(&state, false, 3);
        state.submit_action(&a, SubmitAction { action: 0 }).unwrap();
        assert_eq!(state.state(&a).unwrap().round, 1);
        assert_eq!(state.state(&b).unwrap().round, 0);
        assert_eq!(state.state("missing").unwrap_err().code(), "unknown_session");
    }

    #[test]
    fn expiry_writes_partial_transcript() {
        let dir = tempfile::tempdir().unwrap();
        let state = AppState::new(ServiceConfig {
            idle_timeout: Duration::from_secs(60),
            transcript_dir: Some(dir.path().to_path_buf()),
        });
        let id = create(&state, false, 10);
        state.submit_action(&id, SubmitAction { action: 0 }).unwrap();
        assert!(state.sweep(Instant::now()).is_empty());
        let removed = state.sweep(Instant::now() + Duration::from_secs(61));
        assert_eq!(removed, vec![id.clone()]);
        assert_eq!(state.state(&id).unwrap_err().code(), "session_expired");
        let text = std::fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap();
        let t: Transcript = serde_json::from_str(&text).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.meta.config.agent_b.name, "ssharp");
        assert_eq!(t.meta.config.seed, 3);
    }

    #[test]
    fn transcript_is_redacted_for_clients() {
        let state = AppState::new(ServiceConfig::default());
        let id = create(&state, true, 1);
        state.submit_messages(&id, SubmitMessages::default()).unwrap();
        state.submit_action(&id, SubmitAction { action: 0 }).unwrap();
        let t = state.client_transcript(&id).unwrap();
        assert_eq!(t.meta.config.agent_b.name, HIDDEN_AGENT);
        assert!(!t.to_json_line().contains("ssharp"));
    }
}
