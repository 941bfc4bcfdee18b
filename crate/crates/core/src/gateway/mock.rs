use std::collections::HashMap;

use super::{prompt_hash, CompletionBackend, CompletionRequest, GatewayError};

type Responder = dyn Fn(&CompletionRequest) -> Result<String, GatewayError> + Send + Sync;

/// Scripted backend for tests and dry runs.
pub struct MockBackend {
    script: HashMap<String, String>,
    responder: Option<Box<Responder>>,
    fallback: Option<String>,
}

impl MockBackend {
    /// Answers from a map keyed by [`prompt_hash`].
    pub fn scripted(script: HashMap<String, String>) -> Self {
        MockBackend { script, responder: None, fallback: None }
    }

    /// Answers by calling `f` for every request not covered by the script.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&CompletionRequest) -> Result<String, GatewayError> + Send + Sync + 'static,
    {
        MockBackend { script: HashMap::new(), responder: Some(Box::new(f)), fallback: None }
    }

    /// Response for prompts that are not scripted.
    pub fn with_fallback(mut self, response: impl Into<String>) -> Self {
        self.fallback = Some(response.into());
        self
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let hash = prompt_hash(&request.prompt);
        if let Some(response) = self.script.get(&hash) {
            return Ok(response.clone());
        }
        if let Some(f) = &self.responder {
            return f(request);
        }
        self.fallback
            .clone()
            .ok_or(GatewayError::Unscripted { hash })
    }

    fn name(&self) -> &str {
        "mock"
    }
}
