use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatExchange, GatewayError};

const REDACTED: &str = "[REDACTED]";

/// One recorded request/response pair, stored as `<hash>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub hash: String,
    pub request: ChatExchange,
    pub response: String,
}

/// Directory of fixture files. Reads and writes are serialized.
pub struct FixtureStore {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), lock: Mutex::new(()) }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    pub fn get(&self, hash: &str) -> Result<Option<Fixture>, GatewayError> {
        if !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Ok(None);
        }
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let text = match fs::read_to_string(self.path(hash)) {
            Ok(text) => text,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GatewayError::Io(e.to_string())),
        };
        let fixture: Fixture =
            serde_json::from_str(&text).map_err(|e| GatewayError::Io(format!("fixture {hash}: {e}")))?;
        Ok(Some(fixture))
    }

    /// Writes the fixture with every secret replaced by a redaction marker.
    /// Only message and response text is scrubbed, so short secrets cannot
    /// corrupt field names. The hash still refers to the original request.
    pub fn put(&self, fixture: &Fixture, secrets: &[String]) -> Result<(), GatewayError> {
        let scrub = |text: &str| {
            secrets.iter().filter(|s| !s.is_empty()).fold(text.to_string(), |t, s| t.replace(s.as_str(), REDACTED))
        };
        let mut clean = fixture.clone();
        for m in &mut clean.request.messages {
            m.content = scrub(&m.content);
        }
        clean.response = scrub(&clean.response);
        let mut text = serde_json::to_string_pretty(&clean).expect("fixtures always serialize");
        text.push('\n');
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&self.dir).map_err(|e| GatewayError::Io(e.to_string()))?;
        fs::write(self.path(&fixture.hash), text).map_err(|e| GatewayError::Io(e.to_string()))
    }
}
