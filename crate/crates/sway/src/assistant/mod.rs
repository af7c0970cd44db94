//! Prompt construction, reply parsing and version generation.

mod client;
#[cfg(feature = "remote")]
mod remote;

use serde::Serialize;
use serde_json::Value;
use sway_core::encoding::check_encoding_conflict_in;
use sway_core::{ClipSpec, Version};

pub use client::{request_key, ClientError, ModelClient, StubClient};
#[cfg(feature = "remote")]
pub use remote::{ChatCompletionsClient, DEFAULT_BASE_URL, DEFAULT_MODEL};

use crate::canonical::to_canonical_string;
use crate::clip_json::{clip_from_value, PathDiagnostic};
use crate::session::{Role, Session};
use crate::svg::{condense_for_prompt, estimate_tokens, CondenseError, CondenseReport};

pub const DEFAULT_CONTEXT_BUDGET: usize = 16384;

/// JSON schema of the reply the model must produce.
pub const REPLY_SCHEMA: &str = include_str!("reply_schema.json");
pub const ONE_SHOT_EXAMPLE: &str = include_str!("one_shot.json");
pub const SYSTEM_TEXT: &str = include_str!("system.txt");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssistantError {
    #[error("version {0} does not exist")]
    UnknownVersion(u64),
    #[error("prompt does not fit the {budget}-token budget (needs at least {required})")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("cannot condense document: {0}")]
    Condense(String),
}

impl From<CondenseError> for AssistantError {
    fn from(e: CondenseError) -> Self {
        match e {
            CondenseError::BudgetTooSmall { budget, required } => AssistantError::BudgetTooSmall { budget, required },
            other => AssistantError::Condense(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferencedVersion {
    pub id: u64,
    /// Canonical JSON array of the version's clips.
    pub clips: String,
}

/// Everything sent to the model for one request.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub history: Vec<Turn>,
    pub svg_text: String,
    /// Per-class sampling counts when the SVG was condensed.
    pub sampling_report: CondenseReport,
    #[serde(skip)]
    pub screenshot: Option<Vec<u8>>,
    pub referenced_specs: Vec<ReferencedVersion>,
    pub output_schema: String,
    pub one_shot_example: String,
    pub user_text: String,
}

pub struct ChatMessage {
    pub role: &'static str,
    pub content: String,
}

impl PromptBundle {
    /// Bundle with only the fixed parts and a request, no document.
    pub fn for_text(user_text: &str) -> Self {
        PromptBundle {
            system_text: SYSTEM_TEXT.to_owned(),
            history: Vec::new(),
            svg_text: String::new(),
            sampling_report: CondenseReport::default(),
            screenshot: None,
            referenced_specs: Vec::new(),
            output_schema: REPLY_SCHEMA.to_owned(),
            one_shot_example: ONE_SHOT_EXAMPLE.to_owned(),
            user_text: user_text.to_owned(),
        }
    }

    fn system_message(&self) -> String {
        format!("{}\nReply schema:\n{}\nExample reply:\n{}", self.system_text, self.output_schema, self.one_shot_example)
    }

    fn request_message(&self) -> String {
        let mut s = String::new();
        if !self.svg_text.is_empty() {
            s.push_str("SVG document:\n");
            s.push_str(&self.svg_text);
            s.push('\n');
        }
        if !self.sampling_report.is_passthrough() {
            s.push_str("The SVG was shortened by sampling repeated elements:\n");
            s.push_str(&self.sampling_report.to_string());
        }
        for r in &self.referenced_specs {
            s.push_str(&format!("Clips of version {} (base for this request):\n{}\n", r.id, r.clips));
        }
        s.push_str("Request:\n");
        s.push_str(&self.user_text);
        s
    }

    pub fn chat_messages(&self) -> Vec<ChatMessage> {
        let mut out = vec![ChatMessage { role: "system", content: self.system_message() }];
        for t in &self.history {
            let role = match t.role {
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            out.push(ChatMessage { role, content: t.text.clone() });
        }
        out.push(ChatMessage { role: "user", content: self.request_message() });
        out
    }

    /// Token estimate of all text the model receives. The screenshot is
    /// not counted.
    pub fn estimated_tokens(&self) -> usize {
        self.chat_messages().iter().map(|m| estimate_tokens(&m.content)).sum()
    }
}

fn condense_seed(digest: &str) -> u64 {
    u64::from_str_radix(digest.get(..16).unwrap_or("0"), 16).unwrap_or(0)
}

/// Assembles the prompt for `user_text`, condensing the SVG when the whole
/// bundle would exceed `budget` tokens.
pub fn build_prompt(
    session: &Session,
    user_text: &str,
    base_version_ids: &[u64],
    budget: usize,
    screenshot: Option<Vec<u8>>,
) -> Result<PromptBundle, AssistantError> {
    let mut bundle = PromptBundle::for_text(user_text);
    bundle.screenshot = screenshot;
    bundle.history = session.history.iter().map(|h| Turn { role: h.role, text: h.text.clone() }).collect();
    for &id in base_version_ids {
        let version = session.version(id).ok_or(AssistantError::UnknownVersion(id))?;
        let clips: Vec<&ClipSpec> = version.clips.iter().map(|g| &g.clip).collect();
        bundle.referenced_specs.push(ReferencedVersion { id, clips: to_canonical_string(&clips).expect("clips serialize") });
    }

    let doc = &session.document;
    bundle.svg_text = doc.text().to_owned();
    let total = bundle.estimated_tokens();
    if total <= budget {
        return Ok(bundle);
    }
    bundle.svg_text.clear();
    let fixed = bundle.estimated_tokens();
    // Room for the document plus its sampling note; shrink until both fit.
    let mut svg_budget = budget.saturating_sub(fixed + 8);
    let seed = condense_seed(doc.source_digest());
    for _ in 0..8 {
        if svg_budget == 0 {
            break;
        }
        let (text, report) = condense_for_prompt(doc, svg_budget, seed)?;
        bundle.svg_text = text;
        bundle.sampling_report = report;
        let total = bundle.estimated_tokens();
        if total <= budget {
            return Ok(bundle);
        }
        svg_budget = svg_budget.saturating_sub(total - budget);
    }
    Err(AssistantError::BudgetTooSmall { budget, required: fixed + 1 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReplyIssue {
    NoJsonFound,
    InvalidClip {
        path: String,
        #[serde(serialize_with = "crate::clip_json::serialize_display")]
        diagnostic: sway_core::clip::Diagnostic,
    },
}

impl From<PathDiagnostic> for ReplyIssue {
    fn from(d: PathDiagnostic) -> Self {
        ReplyIssue::InvalidClip { path: d.path, diagnostic: d.diagnostic }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssistantReply {
    pub message: String,
    pub clips: Option<Vec<ClipSpec>>,
    pub raw: String,
    pub issues: Vec<ReplyIssue>,
}

/// First JSON object in `raw` that has a string `message` or a `clips` field.
fn first_reply_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    for (i, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(obj))) = stream.next() {
            if obj.get("message").is_some_and(Value::is_string) || obj.contains_key("clips") {
                return Some(obj);
            }
        }
    }
    None
}

/// Extracts the structured reply from raw model output. Replies without a
/// usable JSON object become message-only with the raw text as message; a
/// reply with any invalid clip keeps its message and drops all clips.
pub fn parse_reply(raw: &str) -> AssistantReply {
    let Some(obj) = first_reply_object(raw) else {
        return AssistantReply { message: raw.trim().to_owned(), clips: None, raw: raw.to_owned(), issues: vec![ReplyIssue::NoJsonFound] };
    };
    let message = obj.get("message").and_then(Value::as_str).unwrap_or("").to_owned();
    let mut issues = Vec::new();
    let clips = match obj.get("clips") {
        Some(Value::Array(items)) if !items.is_empty() => {
            let mut clips = Vec::new();
            for (i, item) in items.iter().enumerate() {
                match clip_from_value(item, &format!("clips[{i}]")) {
                    Ok(c) => clips.push(c),
                    Err(ds) => issues.extend(ds.into_iter().map(ReplyIssue::from)),
                }
            }
            issues.is_empty().then_some(clips)
        }
        None | Some(Value::Null) | Some(Value::Array(_)) => None,
        Some(_) => {
            issues.push(ReplyIssue::InvalidClip {
                path: "clips".into(),
                diagnostic: sway_core::clip::Diagnostic::Malformed("clips must be an array".into()),
            });
            None
        }
    };
    AssistantReply { message, clips, raw: raw.to_owned(), issues }
}

/// Result of one request: the parsed reply and, when it carried clips, the
/// version they form (not yet added to the session).
#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub reply: AssistantReply,
    pub version: Option<Version>,
    pub prompt_tokens: usize,
}

/// Prompts the model and turns its reply into a candidate version with
/// default timing and any encoding warnings attached. The session is not
/// modified.
pub fn generate_version(
    session: &Session,
    client: &dyn ModelClient,
    user_text: &str,
    base_version_ids: &[u64],
    budget: usize,
    screenshot: Option<Vec<u8>>,
) -> Result<Generation, AssistantError> {
    let budget = budget.min(client.max_context_tokens());
    let bundle = build_prompt(session, user_text, base_version_ids, budget, screenshot)?;
    let raw = client.complete(&bundle)?;
    let reply = parse_reply(&raw);
    let version = reply.clips.as_ref().map(|clips| {
        // The assistant entry follows the user entry appended for this request.
        let origin = session.history.len() + 1;
        let mut v = Version::from_clips(session.next_version_id(), clips.clone(), origin, base_version_ids.to_vec());
        if let Some(manifest) = &session.manifest {
            v.warnings = check_encoding_conflict_in(session.document.model(), manifest, clips);
        }
        v
    });
    Ok(Generation { reply, version, prompt_tokens: bundle.estimated_tokens() })
}
