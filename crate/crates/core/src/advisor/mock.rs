//! Local stand-in for a completion endpoint, used by tests and the
//! `mock-advisor` subcommand.

use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::State;
use axum::http::StatusCode;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use super::prompt::render_answer;
use crate::envs::make_task;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockMode {
    /// Reads the environment name and state vector from the prompt and
    /// answers with the task's oracle action.
    Oracle,
    /// Always replies with this completion.
    Fixed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockConfig {
    pub mode: MockMode,
    /// Respond 503 to the first `fail_first` requests.
    pub fail_first: usize,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            mode: MockMode::Oracle,
            fail_first: 0,
        }
    }
}

#[derive(Deserialize)]
struct PromptBody {
    prompt: String,
}

#[derive(Serialize)]
struct CompletionBody {
    completion: String,
}

struct Shared {
    config: MockConfig,
    hits: AtomicUsize,
}

/// Completion the oracle mode gives for `prompt`.
pub fn oracle_completion(prompt: &str) -> Option<String> {
    let field = |name: &str| {
        prompt
            .lines()
            .find_map(|l| l.strip_prefix(name).map(|rest| rest.trim().to_string()))
    };
    let env = field("Environment:")?;
    let raw = field("State vector:")?;
    let inner = raw.strip_prefix('[')?.strip_suffix(']')?;
    let state: Vec<f64> = inner.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    let task = make_task(&env).ok()?;
    if state.len() != task.spec().state_dim {
        return None;
    }
    let action = task.oracle_action(&state);
    Some(render_answer(&task.spec().action_space, &task.action_labels(), &action))
}

async fn complete(State(shared): State<Arc<Shared>>, Json(body): Json<PromptBody>) -> (StatusCode, Json<CompletionBody>) {
    let hit = shared.hits.fetch_add(1, Ordering::SeqCst);
    if hit < shared.config.fail_first {
        return (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(CompletionBody {
                completion: String::new(),
            }),
        );
    }
    let completion = match &shared.config.mode {
        MockMode::Fixed(text) => text.clone(),
        MockMode::Oracle => oracle_completion(&body.prompt).unwrap_or_else(|| "I cannot tell from this prompt.".into()),
    };
    (StatusCode::OK, Json(CompletionBody { completion }))
}

/// A running mock server; shut down on drop.
pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl MockServer {
    /// Binds `127.0.0.1:port` (`0` picks a free port) and serves in a
    /// background thread.
    pub fn start(config: MockConfig, port: u16) -> Result<Self> {
        let listener = TcpListener::bind(("127.0.0.1", port))?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            config,
            hits: AtomicUsize::new(0),
        });
        let (tx, rx) = oneshot::channel::<()>();
        let app = Router::new().fallback(axum::routing::post(complete)).with_state(shared.clone());
        let thread = std::thread::Builder::new().name("mock-advisor".into()).spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        })?;
        Ok(Self {
            addr,
            shared,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/complete", self.addr)
    }

    /// Requests received so far, including injected failures.
    pub fn hits(&self) -> usize {
        self.shared.hits.load(Ordering::SeqCst)
    }

    /// Blocks until the server thread exits.
    pub fn wait(mut self) -> Result<()> {
        let thread = self.thread.take().expect("server thread");
        thread
            .join()
            .map_err(|_| Error::Config("mock server thread panicked".into()))?
            .map_err(Error::from)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::prompt::{render_prompt, AdvisorRequest};
    use crate::envs::{make_task, Action};
    use rand::SeedableRng;

    #[test]
    fn oracle_completion_reads_prompt() {
        for name in crate::envs::ENV_NAMES {
            let task = make_task(name).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let s = task.initial_state(&mut rng);
            let prior = task.spec().action_space.sample(&mut rng);
            let prompt = render_prompt(&AdvisorRequest::new(task.as_ref(), &s, &prior));
            let text = oracle_completion(&prompt).unwrap();
            let parsed = crate::advisor::parse_answer(&text, &task.spec().action_space, &task.action_labels()).unwrap();
            match (parsed, task.oracle_action(&s)) {
                (Action::Continuous(a), Action::Continuous(b)) => {
                    a.iter().zip(&b).for_each(|(x, y)| assert!((x - y).abs() < 1e-4, "{name}"))
                }
                (a, b) => assert_eq!(a, b, "{name}"),
            }
        }
        assert!(oracle_completion("hello").is_none());
    }
}
