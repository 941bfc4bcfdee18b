use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CompletionBackend, CompletionRequest, GatewayError};

/// Wire shape of the remote API. Chat APIs receive the prompt as one user message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiStyle {
    #[default]
    Chat,
    Completion,
}

/// OpenAI-compatible `chat/completions` or `completions` client.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    style: ApiStyle,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, style: ApiStyle, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpBackend { agent, endpoint: endpoint.into(), api_key, style }
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let mut body = match self.style {
            ApiStyle::Chat => json!({
                "model": request.model,
                "messages": [{"role": "user", "content": request.prompt}],
            }),
            ApiStyle::Completion => json!({
                "model": request.model,
                "prompt": request.prompt,
            }),
        };
        body["temperature"] = json!(request.temperature);
        body["max_tokens"] = json!(request.max_tokens);
        if let Some(stop) = &request.stop {
            body["stop"] = json!(stop);
        }
        body
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(self.body(request))
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 {
            return Err(GatewayError::RateLimited { attempts: 1 });
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::Transport(format!("HTTP {status}: {text}")));
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Transport(format!("response is not JSON: {e}")))?;
        let choice = &value["choices"][0];
        choice["message"]["content"]
            .as_str()
            .or_else(|| choice["text"].as_str())
            .map(str::to_string)
            .ok_or_else(|| GatewayError::Transport(format!("no completion text in response: {text}")))
    }

    fn name(&self) -> &str {
        "http"
    }
}
