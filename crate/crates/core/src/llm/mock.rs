use std::collections::HashMap;

use super::{
    hash_prompt, local_response, Backend, GenerationRequest, GenerationResponse, LlmError,
};

/// Replays fixed completions keyed by the SHA-256 of the prompt text.
#[derive(Clone, Debug, Default)]
pub struct ScriptedBackend {
    table: HashMap<String, String>,
    fallback: Option<String>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scripts `text` as the completion for the exact prompt `prompt`.
    pub fn with(mut self, prompt: &str, text: impl Into<String>) -> Self {
        self.table.insert(hash_prompt(prompt), text.into());
        self
    }

    pub fn with_hash(mut self, hash: impl Into<String>, text: impl Into<String>) -> Self {
        self.table.insert(hash.into(), text.into());
        self
    }

    /// Completion for prompts missing from the table; without one they fail.
    pub fn with_fallback(mut self, text: impl Into<String>) -> Self {
        self.fallback = Some(text.into());
        self
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        req.validate()?;
        let key = hash_prompt(&req.prompt_text());
        match self.table.get(&key).or(self.fallback.as_ref()) {
            Some(text) => Ok(local_response(req, text.clone())),
            None => Err(LlmError::BackendUnavailable {
                attempts: 1,
                message: format!("no scripted completion for prompt {}", &key[..12]),
            }),
        }
    }
}

/// Wraps a closure from request to completion text.
pub struct FnBackend<F> {
    id: String,
    f: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&GenerationRequest) -> Result<String, LlmError> + Send + Sync,
{
    pub fn new(id: impl Into<String>, f: F) -> Self {
        FnBackend { id: id.into(), f }
    }
}

impl<F> Backend for FnBackend<F>
where
    F: Fn(&GenerationRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn id(&self) -> String {
        self.id.clone()
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        req.validate()?;
        (self.f)(req).map(|text| local_response(req, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Message;

    fn req(content: &str) -> GenerationRequest {
        GenerationRequest {
            model: "m".into(),
            messages: vec![Message {
                role: "user".into(),
                content: content.into(),
            }],
            temperature: 0.0,
            max_tokens: 64,
            seed: Some(1),
        }
    }

    #[test]
    fn scripted_text_is_verbatim() {
        let b = ScriptedBackend::new().with("hello", "Thought: hi\nFinish [True]");
        assert_eq!(
            b.generate(&req("hello")).unwrap().text,
            "Thought: hi\nFinish [True]"
        );
        assert!(b.generate(&req("other")).is_err());
        assert_eq!(b.generate(&req("hello")), b.generate(&req("hello")));
    }

    #[test]
    fn fallback_covers_unknown_prompts() {
        let b = ScriptedBackend::new().with_fallback("Finish [False]");
        assert_eq!(b.generate(&req("anything")).unwrap().text, "Finish [False]");
    }
}
