//! Text generation backends: a remote chat-completions client and
//! deterministic mocks, behind one blocking trait.

mod mock;
mod remote;
mod simulated;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::trajectory::PromptBundle;

pub use mock::{FnBackend, ScriptedBackend};
pub use remote::{RemoteBackend, RemoteConfig};
pub use simulated::SimulatedReasoner;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn from_prompt(
        prompt: &PromptBundle,
        model: impl Into<String>,
        temperature: f64,
        max_tokens: u32,
        seed: Option<u64>,
    ) -> Self {
        GenerationRequest {
            model: model.into(),
            messages: vec![
                Message {
                    role: "system".into(),
                    content: prompt.system.clone(),
                },
                Message {
                    role: "user".into(),
                    content: prompt.user_message(),
                },
            ],
            temperature,
            max_tokens,
            seed,
        }
    }

    /// All message contents joined by newlines.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn validate(&self) -> Result<(), LlmError> {
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest(
                "max_tokens must be at least 1".into(),
            ));
        }
        if !(self.temperature >= 0.0) {
            return Err(LlmError::InvalidRequest(
                "temperature must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: Usage,
    pub latency_ms: u64,
    /// HTTP attempts made; 1 when the first try succeeded.
    pub attempts: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable { attempts: u32, message: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

pub trait Backend: Send + Sync {
    /// Identifier recorded as the trajectory generator.
    fn id(&self) -> String;

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError>;
}

/// Runs `reqs` with at most `parallelism` in flight; results keep request order.
pub fn generate_batch(
    backend: &dyn Backend,
    reqs: &[GenerationRequest],
    parallelism: usize,
) -> Vec<Result<GenerationResponse, LlmError>> {
    let workers = parallelism.max(1).min(reqs.len());
    if workers <= 1 {
        return reqs.iter().map(|r| backend.generate(r)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<GenerationResponse, LlmError>>>> =
        reqs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = reqs.get(i) else { break };
                let result = backend.generate(req);
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| {
            s.into_inner()
                .expect("slot lock")
                .expect("every slot is filled")
        })
        .collect()
}

/// Hex SHA-256 of a prompt, the key used by scripted backends.
pub fn hash_prompt(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Whitespace token count, the measure the local backends use.
pub fn approx_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Builds a local response, cutting the text to `max_tokens` words.
pub(crate) fn local_response(req: &GenerationRequest, text: String) -> GenerationResponse {
    let limit = req.max_tokens as usize;
    let (text, finish_reason) = if text.split_whitespace().count() > limit {
        let cut = text
            .split_whitespace()
            .take(limit)
            .collect::<Vec<_>>()
            .join(" ");
        (cut, FinishReason::Length)
    } else if text.is_empty() {
        (text, FinishReason::Error)
    } else {
        (text, FinishReason::Stop)
    };
    GenerationResponse {
        usage: Usage {
            prompt_tokens: approx_tokens(&req.prompt_text()),
            completion_tokens: approx_tokens(&text),
        },
        text,
        finish_reason,
        latency_ms: 0,
        attempts: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(content: &str, max_tokens: u32) -> GenerationRequest {
        GenerationRequest {
            model: "m".into(),
            messages: vec![Message {
                role: "user".into(),
                content: content.into(),
            }],
            temperature: 0.7,
            max_tokens,
            seed: None,
        }
    }

    #[test]
    fn local_responses_respect_max_tokens() {
        let r = local_response(&req("x", 3), "a b c d e".into());
        assert_eq!(r.text, "a b c");
        assert_eq!(r.finish_reason, FinishReason::Length);
        let r = local_response(&req("x", 10), "a b".into());
        assert_eq!(r.finish_reason, FinishReason::Stop);
    }

    #[test]
    fn invalid_requests() {
        assert!(req("x", 0).validate().is_err());
        let mut r = req("x", 1);
        r.temperature = -1.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn batch_preserves_order() {
        let backend = FnBackend::new("echo", |r: &GenerationRequest| {
            std::thread::sleep(std::time::Duration::from_millis(
                (10 - r.prompt_text().len() as u64 % 10) * 2,
            ));
            Ok(r.prompt_text())
        });
        let reqs: Vec<_> = (0..10).map(|i| req(&"y".repeat(i + 1), 100)).collect();
        let out = generate_batch(&backend, &reqs, 3);
        for (i, r) in out.into_iter().enumerate() {
            assert_eq!(r.unwrap().text, "y".repeat(i + 1));
        }
    }

    #[test]
    fn batch_surfaces_item_errors() {
        let backend = FnBackend::new("flaky", |r: &GenerationRequest| {
            if r.prompt_text() == "bad" {
                Err(LlmError::MalformedResponse("scripted".into()))
            } else {
                Ok("ok".into())
            }
        });
        let mut reqs: Vec<_> = (0..9).map(|_| req("good", 10)).collect();
        reqs.insert(4, req("bad", 10));
        let out = generate_batch(&backend, &reqs, 4);
        assert_eq!(out.iter().filter(|r| r.is_ok()).count(), 9);
        assert!(out[4].is_err());
    }
}
