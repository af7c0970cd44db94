use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};

use super::client::{ClientError, ModelClient};
use super::PromptBundle;

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o";

/// Client for OpenAI-compatible `/chat/completions` endpoints.
pub struct ChatCompletionsClient {
    agent: ureq::Agent,
    base_url: String,
    model: String,
    api_key: String,
    context_tokens: usize,
}

impl ChatCompletionsClient {
    pub fn new(base_url: &str, model: &str, api_key: &str, timeout: Duration, context_tokens: usize) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        ChatCompletionsClient {
            agent,
            base_url: base_url.trim_end_matches('/').to_owned(),
            model: model.to_owned(),
            api_key: api_key.to_owned(),
            context_tokens,
        }
    }

    /// Built from `SWAY_API_KEY`, `SWAY_API_BASE` and `SWAY_MODEL`; `None`
    /// when no key is set.
    pub fn from_env(context_tokens: usize) -> Option<Self> {
        let key = std::env::var("SWAY_API_KEY").ok().filter(|k| !k.is_empty())?;
        let base = std::env::var("SWAY_API_BASE").unwrap_or_else(|_| DEFAULT_BASE_URL.to_owned());
        let model = std::env::var("SWAY_MODEL").unwrap_or_else(|_| DEFAULT_MODEL.to_owned());
        Some(ChatCompletionsClient::new(&base, &model, &key, Duration::from_secs(120), context_tokens))
    }

    fn request_body(&self, bundle: &PromptBundle) -> Value {
        let mut messages: Vec<Value> = bundle.chat_messages().into_iter().map(|m| json!({"role": m.role, "content": m.content})).collect();
        if let (Some(png), Some(last)) = (&bundle.screenshot, messages.last_mut()) {
            let text = last["content"].take();
            let url = format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(png));
            last["content"] = json!([{"type": "text", "text": text}, {"type": "image_url", "image_url": {"url": url}}]);
        }
        json!({
            "model": self.model,
            "messages": messages,
            "response_format": {"type": "json_object"},
        })
    }
}

impl ModelClient for ChatCompletionsClient {
    fn complete(&self, bundle: &PromptBundle) -> Result<String, ClientError> {
        let url = format!("{}/chat/completions", self.base_url);
        let mut response = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(self.request_body(bundle))
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ClientError::Timeout,
                other => ClientError::Unreachable(other.to_string()),
            })?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| ClientError::Decode(e.to_string()))?;
        if status >= 400 {
            return Err(ClientError::Status { status, body });
        }
        let v: Value = serde_json::from_str(&body).map_err(|e| ClientError::Decode(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| ClientError::Decode("no message content in response".into()))
    }

    fn max_context_tokens(&self) -> usize {
        self.context_tokens
    }

    fn name(&self) -> &str {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assistant::PromptBundle;

    #[test]
    fn unreachable_endpoint_is_a_client_error() {
        let client = ChatCompletionsClient::new("http://127.0.0.1:9", "m", "k", Duration::from_secs(2), 1000);
        let err = client.complete(&PromptBundle::for_text("hello")).unwrap_err();
        assert!(matches!(err, ClientError::Unreachable(_) | ClientError::Timeout), "{err:?}");
    }

    #[test]
    fn screenshot_becomes_image_part() {
        let client = ChatCompletionsClient::new("http://localhost", "m", "k", Duration::from_secs(1), 1000);
        let mut bundle = PromptBundle::for_text("hello");
        bundle.screenshot = Some(vec![1, 2, 3]);
        let body = client.request_body(&bundle);
        let last = body["messages"].as_array().unwrap().last().unwrap();
        assert_eq!(last["content"][1]["image_url"]["url"], "data:image/png;base64,AQID");
    }
}
