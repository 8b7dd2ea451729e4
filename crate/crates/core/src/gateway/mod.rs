//! Chat-completion client with record/replay fixtures.
//!
//! In `Replay` mode the gateway answers from fixture files keyed by a digest
//! of the request and never touches the network. `Record` sends the request
//! live and persists the answer; `Live` only sends.

mod fixtures;
mod generate;
mod http;
pub mod stub;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use fixtures::{Fixture, FixtureStore};
pub use generate::{generate_layout, Diagnostics, GenerateError};
pub use http::HttpTransport;

pub const API_KEY_ENV: &str = "ROOMWEAVER_API_KEY";
pub const BASE_URL_ENV: &str = "ROOMWEAVER_BASE_URL";
pub const FIXTURE_DIR_ENV: &str = "ROOMWEAVER_FIXTURE_DIR";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4";
pub const DEFAULT_MAX_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("network failure after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },
    #[error("no recorded fixture for request {0}")]
    FixtureMiss(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("upstream returned status {status}: {body}")]
    Upstream { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("invalid exchange: {0}")]
    InvalidExchange(String),
    #[error("fixture i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatParams {
    /// Deterministic settings used for layout generation.
    pub fn layout() -> Self {
        Self { model: DEFAULT_MODEL.to_string(), temperature: 0.0, max_tokens: 1500 }
    }

    /// Settings used for paraphrasing descriptions.
    pub fn paraphrase() -> Self {
        Self { model: DEFAULT_MODEL.to_string(), temperature: 0.7, max_tokens: 800 }
    }
}

/// A conversation to send. The last message must come from the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub messages: Vec<ChatMessage>,
    pub params: ChatParams,
}

impl ChatExchange {
    pub fn new(params: ChatParams) -> Self {
        Self { messages: Vec::new(), params }
    }

    pub fn push(&mut self, role: Role, content: impl Into<String>) -> &mut Self {
        self.messages.push(ChatMessage { role, content: content.into() });
        self
    }

    pub fn with(mut self, role: Role, content: impl Into<String>) -> Self {
        self.push(role, content);
        self
    }

    /// Hex SHA-256 over the canonical JSON of messages and params.
    pub fn request_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("exchanges always serialize");
        hex::encode(Sha256::digest(&canonical))
    }

    fn check(&self) -> Result<(), GatewayError> {
        match self.messages.last() {
            Some(m) if m.role == Role::User => Ok(()),
            Some(_) => Err(GatewayError::InvalidExchange("last message must have role user".into())),
            None => Err(GatewayError::InvalidExchange("no messages".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
}

impl FromStr for GatewayMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown gateway mode {other:?} (expected live, record or replay)")),
        }
    }
}

impl fmt::Display for GatewayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Live => "live",
            Self::Record => "record",
            Self::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

/// Sends one exchange to a chat-completion service.
pub trait ChatTransport: Send + Sync {
    fn send(&self, exchange: &ChatExchange) -> Result<String, GatewayError>;
}

#[derive(Clone)]
pub struct GatewayConfig {
    pub mode: GatewayMode,
    pub fixture_dir: Option<PathBuf>,
    pub base_url: String,
    pub api_key: Option<String>,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
}

impl fmt::Debug for GatewayConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GatewayConfig")
            .field("mode", &self.mode)
            .field("fixture_dir", &self.fixture_dir)
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("max_concurrency", &self.max_concurrency)
            .finish()
    }
}

impl GatewayConfig {
    pub fn new(mode: GatewayMode) -> Self {
        Self {
            mode,
            fixture_dir: None,
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: None,
            max_concurrency: DEFAULT_MAX_CONCURRENCY,
            retry: RetryPolicy::default(),
        }
    }

    /// Fills key, base URL and fixture directory from the environment.
    pub fn from_env(mode: GatewayMode) -> Self {
        let mut config = Self::new(mode);
        config.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        if let Ok(url) = std::env::var(BASE_URL_ENV) {
            config.base_url = url;
        }
        config.fixture_dir = std::env::var_os(FIXTURE_DIR_ENV).map(PathBuf::from);
        config
    }

    pub fn fixture_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.fixture_dir = Some(dir.into());
        self
    }
}

/// Counting semaphore bounding in-flight requests.
struct Limiter {
    free: Mutex<usize>,
    cond: Condvar,
}

impl Limiter {
    fn new(permits: usize) -> Self {
        Self { free: Mutex::new(permits.max(1)), cond: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cond.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cond.notify_one();
    }
}

/// Thread-safe front door to the language model.
pub struct Gateway {
    mode: GatewayMode,
    fixtures: Option<FixtureStore>,
    transport: Option<Box<dyn ChatTransport>>,
    limiter: Limiter,
    secrets: Vec<String>,
}

impl Gateway {
    /// Builds a gateway from configuration. Live and record modes need an API
    /// key; record and replay need a fixture directory.
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        let transport: Option<Box<dyn ChatTransport>> = match config.mode {
            GatewayMode::Replay => None,
            GatewayMode::Live | GatewayMode::Record => {
                let key =
                    config.api_key.clone().ok_or_else(|| GatewayError::Auth(format!("{API_KEY_ENV} is not set")))?;
                Some(Box::new(HttpTransport::new(&config.base_url, &key, config.retry)))
            }
        };
        let mut gateway = Self::assemble(config.mode, config.fixture_dir, transport, config.max_concurrency)?;
        gateway.secrets.extend(config.api_key);
        Ok(gateway)
    }

    /// Gateway over a caller-supplied transport (a local stub, another
    /// provider). `transport` is ignored in replay mode.
    pub fn with_transport(
        mode: GatewayMode,
        fixture_dir: Option<PathBuf>,
        transport: Box<dyn ChatTransport>,
    ) -> Result<Self, GatewayError> {
        let transport = (mode != GatewayMode::Replay).then_some(transport);
        Self::assemble(mode, fixture_dir, transport, DEFAULT_MAX_CONCURRENCY)
    }

    /// Replay-only gateway over a fixture directory.
    pub fn replay(fixture_dir: impl Into<PathBuf>) -> Self {
        Self::assemble(GatewayMode::Replay, Some(fixture_dir.into()), None, DEFAULT_MAX_CONCURRENCY)
            .expect("replay gateway with fixture dir is always valid")
    }

    fn assemble(
        mode: GatewayMode,
        fixture_dir: Option<PathBuf>,
        transport: Option<Box<dyn ChatTransport>>,
        max_concurrency: usize,
    ) -> Result<Self, GatewayError> {
        let fixtures = fixture_dir.map(FixtureStore::new);
        if mode != GatewayMode::Live && fixtures.is_none() {
            return Err(GatewayError::Io(format!("{mode} mode requires a fixture directory")));
        }
        Ok(Self { mode, fixtures, transport, limiter: Limiter::new(max_concurrency), secrets: Vec::new() })
    }

    /// Marks a string that must never reach a fixture file.
    pub fn add_secret(&mut self, secret: impl Into<String>) {
        self.secrets.push(secret.into());
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    /// Sends the exchange (or replays it) and returns the assistant text.
    pub fn complete(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
        exchange.check()?;
        let hash = exchange.request_hash();
        if self.mode == GatewayMode::Replay {
            let store = self.fixtures.as_ref().expect("replay gateways own a fixture store");
            return store.get(&hash)?.map(|f| f.response).ok_or(GatewayError::FixtureMiss(hash));
        }
        let transport = self.transport.as_ref().expect("live gateways own a transport");
        let response = {
            let _permit = self.limiter.acquire();
            transport.send(exchange)?
        };
        log::debug!("completion {hash}: {} chars", response.len());
        if self.mode == GatewayMode::Record {
            let store = self.fixtures.as_ref().expect("record gateways own a fixture store");
            store.put(&Fixture { hash, request: exchange.clone(), response: response.clone() }, &self.secrets)?;
        }
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Echo(Arc<AtomicUsize>);

    impl ChatTransport for Echo {
        fn send(&self, exchange: &ChatExchange) -> Result<String, GatewayError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(format!("echo: {}", exchange.messages.last().unwrap().content))
        }
    }

    fn exchange(text: &str) -> ChatExchange {
        ChatExchange::new(ChatParams::layout()).with(Role::System, "sys").with(Role::User, text)
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = exchange("hello");
        assert_eq!(a.request_hash(), exchange("hello").request_hash());
        assert_ne!(a.request_hash(), exchange("hello!").request_hash());
        let mut hot = a.clone();
        hot.params.temperature = 0.7;
        assert_ne!(a.request_hash(), hot.request_hash());
        assert_eq!(a.request_hash().len(), 64);
    }

    #[test]
    fn exchange_must_end_with_user() {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::replay(dir.path());
        let bad = ChatExchange::new(ChatParams::layout()).with(Role::User, "a").with(Role::Assistant, "b");
        assert!(matches!(gw.complete(&bad), Err(GatewayError::InvalidExchange(_))));
        let empty = ChatExchange::new(ChatParams::layout());
        assert!(matches!(gw.complete(&empty), Err(GatewayError::InvalidExchange(_))));
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let calls = Arc::new(AtomicUsize::new(0));
        let rec =
            Gateway::with_transport(GatewayMode::Record, Some(dir.path().to_path_buf()), Box::new(Echo(calls.clone())))
                .unwrap();
        let text = rec.complete(&exchange("layout please")).unwrap();
        assert_eq!(text, "echo: layout please");

        let replay = Gateway::replay(dir.path());
        assert_eq!(replay.complete(&exchange("layout please")).unwrap(), text);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        let miss = replay.complete(&exchange("something else"));
        assert!(matches!(miss, Err(GatewayError::FixtureMiss(h)) if h == exchange("something else").request_hash()));
    }

    #[test]
    fn live_and_record_need_a_key() {
        let err = Gateway::new(GatewayConfig::new(GatewayMode::Live)).err().unwrap();
        assert!(matches!(err, GatewayError::Auth(_)));
        let mut cfg = GatewayConfig::new(GatewayMode::Record);
        cfg.api_key = Some("k".into());
        assert!(matches!(Gateway::new(cfg).err().unwrap(), GatewayError::Io(_)));
        assert!(format!(
            "{:?}",
            GatewayConfig { api_key: Some("sk-secret".into()), ..GatewayConfig::new(GatewayMode::Live) }
        )
        .contains("<redacted>"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("replay".parse::<GatewayMode>(), Ok(GatewayMode::Replay));
        assert!("offline".parse::<GatewayMode>().is_err());
    }

    #[test]
    fn limiter_caps_parallelism() {
        struct Slow {
            active: AtomicUsize,
            peak: AtomicUsize,
        }
        impl ChatTransport for Arc<Slow> {
            fn send(&self, _: &ChatExchange) -> Result<String, GatewayError> {
                let now = self.active.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(20));
                self.active.fetch_sub(1, Ordering::SeqCst);
                Ok(String::new())
            }
        }
        let slow = Arc::new(Slow { active: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
        let gw = Arc::new(Gateway::with_transport(GatewayMode::Live, None, Box::new(slow.clone())).unwrap());
        let handles: Vec<_> = (0..12)
            .map(|i| {
                let gw = gw.clone();
                std::thread::spawn(move || gw.complete(&exchange(&i.to_string())).unwrap())
            })
            .collect();
        handles.into_iter().for_each(|h| {
            h.join().unwrap();
        });
        let peak = slow.peak.load(Ordering::SeqCst);
        assert!((1..=DEFAULT_MAX_CONCURRENCY).contains(&peak), "peak {peak}");
    }
}
