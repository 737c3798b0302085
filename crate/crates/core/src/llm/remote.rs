use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::warn;

use super::{Backend, FinishReason, GenerationRequest, GenerationResponse, LlmError, Usage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Endpoint root; `/chat/completions` is appended unless already present.
    pub base_url: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
    pub timeout_s: u64,
    /// Total attempts per request, the first included.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub retry_base_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            api_key_env: None,
            timeout_s: 120,
            max_retries: 5,
            retry_base_ms: 1000,
        }
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("url", &self.url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

enum Attempt {
    Retry(String),
    Fatal(LlmError),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let trimmed = config.base_url.trim_end_matches('/');
        let url = if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        };
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_s.max(1)))
            .build();
        RemoteBackend {
            config,
            url,
            api_key,
            agent,
        }
    }

    fn backoff(&self, retry: u32) -> Duration {
        let base = self.config.retry_base_ms as f64 * 2f64.powi(retry as i32);
        let jitter = rand::thread_rng().gen_range(0.0..0.25);
        Duration::from_millis((base * (1.0 + jitter)) as u64)
    }

    fn attempt(&self, body: &str) -> Result<String, Attempt> {
        let mut call = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        match call.send_string(body) {
            Ok(resp) => resp
                .into_string()
                .map_err(|e| Attempt::Retry(format!("reading body: {e}"))),
            Err(ureq::Error::Status(code, resp)) => {
                let detail = resp.into_string().unwrap_or_default();
                let message = format!(
                    "HTTP {code}: {}",
                    detail.chars().take(200).collect::<String>()
                );
                if code == 429 || code >= 500 {
                    Err(Attempt::Retry(message))
                } else {
                    Err(Attempt::Fatal(LlmError::BackendUnavailable {
                        attempts: 1,
                        message,
                    }))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(Attempt::Retry(t.to_string())),
        }
    }
}

fn parse_completion(body: &str) -> Result<(String, FinishReason, Usage), LlmError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| LlmError::MalformedResponse("no choices[0]".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| {
            LlmError::MalformedResponse("choices[0].message.content is not a string".into())
        })?
        .to_string();
    let finish = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("length") => FinishReason::Length,
        Some("stop") | None => FinishReason::Stop,
        Some(_) => FinishReason::Error,
    };
    if finish == FinishReason::Stop && text.is_empty() {
        return Err(LlmError::MalformedResponse(
            "empty completion with finish_reason stop".into(),
        ));
    }
    let count = |key: &str| {
        v.pointer(&format!("/usage/{key}"))
            .and_then(Value::as_u64)
            .unwrap_or(0)
    };
    Ok((
        text,
        finish,
        Usage {
            prompt_tokens: count("prompt_tokens"),
            completion_tokens: count("completion_tokens"),
        },
    ))
}

impl Backend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}", self.url)
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        req.validate()?;
        let body = json!({
            "model": req.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "seed": req.seed,
        })
        .to_string();
        let start = Instant::now();
        let max_attempts = self.config.max_retries.max(1);
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            match self.attempt(&body) {
                Ok(text) => {
                    let (text, finish_reason, usage) = parse_completion(&text)?;
                    return Ok(GenerationResponse {
                        text,
                        finish_reason,
                        usage,
                        latency_ms: start.elapsed().as_millis() as u64,
                        attempts: attempt,
                    });
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => {
                    warn!(attempt, url = %self.url, "retryable generation failure: {message}");
                    last = message;
                    if attempt < max_attempts {
                        std::thread::sleep(self.backoff(attempt - 1));
                    }
                }
            }
        }
        Err(LlmError::BackendUnavailable {
            attempts: max_attempts,
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_shapes() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"hi"},"finish_reason":"length"}],"usage":{"prompt_tokens":3,"completion_tokens":1}}"#;
        let (text, finish, usage) = parse_completion(ok).unwrap();
        assert_eq!(text, "hi");
        assert_eq!(finish, FinishReason::Length);
        assert_eq!(usage.prompt_tokens, 3);
        assert!(parse_completion(r#"{"choices":[]}"#).is_err());
        assert!(parse_completion(
            r#"{"choices":[{"message":{"content":""},"finish_reason":"stop"}]}"#
        )
        .is_err());
        assert!(parse_completion("nope").is_err());
    }

    #[test]
    fn url_gets_endpoint_suffix() {
        let b = RemoteBackend::new(RemoteConfig {
            base_url: "http://h/v1/".into(),
            ..Default::default()
        });
        assert_eq!(b.url, "http://h/v1/chat/completions");
        let b = RemoteBackend::new(RemoteConfig {
            base_url: "http://h/v1/chat/completions".into(),
            ..Default::default()
        });
        assert_eq!(b.url, "http://h/v1/chat/completions");
    }

    #[test]
    fn debug_hides_key() {
        std::env::set_var("SYMTRACE_TEST_KEY", "sekrit");
        let b = RemoteBackend::new(RemoteConfig {
            api_key_env: Some("SYMTRACE_TEST_KEY".into()),
            ..Default::default()
        });
        assert!(!format!("{b:?}").contains("sekrit"));
    }
}
