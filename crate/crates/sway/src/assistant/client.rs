use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{PromptBundle, DEFAULT_CONTEXT_BUDGET};
use crate::svg::sha256_hex;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error("model endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("model request timed out")]
    Timeout,
    #[error("model endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected model response: {0}")]
    Decode(String),
    #[error("cannot load stub fixtures: {0}")]
    Fixtures(String),
}

/// A vision-language model behind a chat interface.
pub trait ModelClient: Send + Sync {
    /// Runs one completion and returns the model's raw text.
    fn complete(&self, bundle: &PromptBundle) -> Result<String, ClientError>;

    fn max_context_tokens(&self) -> usize {
        DEFAULT_CONTEXT_BUDGET
    }

    fn name(&self) -> &str;
}

/// Fixture key of a request: the first 16 hex digits of the SHA-256 of the
/// lowercased, whitespace-collapsed text.
pub fn request_key(user_text: &str) -> String {
    let normalized = user_text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    sha256_hex(normalized.as_bytes())[..16].to_owned()
}

#[derive(Deserialize)]
struct FixtureEntry {
    request: String,
    reply: Value,
}

const BUILTIN_FIXTURES: &str = include_str!("../../fixtures/stub/replies.json");

const FALLBACK_REPLY: &str =
    r#"{"message":"The offline assistant has no canned reply for this request. Set SWAY_API_KEY to use a live model."}"#;

/// Offline client replaying canned replies keyed by [`request_key`].
#[derive(Clone, Debug, Default)]
pub struct StubClient {
    replies: HashMap<String, String>,
}

fn reply_text(v: Value) -> String {
    match v {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

impl StubClient {
    pub fn empty() -> Self {
        StubClient::default()
    }

    /// Client preloaded with the fixtures bundled with the crate.
    pub fn builtin() -> Self {
        let mut stub = StubClient::empty();
        stub.add_fixture_list(BUILTIN_FIXTURES).expect("bundled fixtures parse");
        stub
    }

    /// Adds `[{"request": ..., "reply": ...}]` entries.
    pub fn add_fixture_list(&mut self, json: &str) -> Result<(), ClientError> {
        let entries: Vec<FixtureEntry> = serde_json::from_str(json).map_err(|e| ClientError::Fixtures(e.to_string()))?;
        for e in entries {
            self.replies.insert(request_key(&e.request), reply_text(e.reply));
        }
        Ok(())
    }

    pub fn insert(&mut self, request: &str, reply: impl Into<String>) {
        self.replies.insert(request_key(request), reply.into());
    }

    /// Loads a directory in which each `<key>.json` file holds the raw reply
    /// for the request with that key, and each `*.list.json` file holds a
    /// fixture list.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), ClientError> {
        let entries = fs::read_dir(dir).map_err(|e| ClientError::Fixtures(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths {
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
            let read = || fs::read_to_string(&path).map_err(|e| ClientError::Fixtures(format!("{}: {e}", path.display())));
            if name.ends_with(".list.json") {
                self.add_fixture_list(&read()?)?;
            } else if let Some(key) = name.strip_suffix(".json") {
                self.replies.insert(key.to_owned(), read()?);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

impl ModelClient for StubClient {
    fn complete(&self, bundle: &PromptBundle) -> Result<String, ClientError> {
        let key = request_key(&bundle.user_text);
        Ok(self.replies.get(&key).cloned().unwrap_or_else(|| FALLBACK_REPLY.to_owned()))
    }

    fn name(&self) -> &str {
        "stub"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_ignore_case_and_spacing() {
        assert_eq!(request_key("Please make  the flowers grow up"), request_key("please make the flowers\ngrow up "));
        assert_ne!(request_key("a"), request_key("b"));
        assert_eq!(request_key("x").len(), 16);
    }

    #[test]
    fn builtin_fixtures_load() {
        let stub = StubClient::builtin();
        assert!(stub.len() >= 3);
    }

    #[test]
    fn directory_fixtures() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(format!("{}.json", request_key("hello"))), r#"{"message":"hi"}"#).unwrap();
        fs::write(dir.path().join("more.list.json"), r#"[{"request":"bye","reply":{"message":"ciao"}}]"#).unwrap();
        let mut stub = StubClient::empty();
        stub.load_dir(dir.path()).unwrap();
        assert_eq!(stub.replies[&request_key("hello")], r#"{"message":"hi"}"#);
        assert_eq!(stub.replies[&request_key("bye")], r#"{"message":"ciao"}"#);
    }
}
