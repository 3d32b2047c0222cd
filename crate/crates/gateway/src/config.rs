use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::GatewayError;

/// One model endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub url: String,
    pub model_id: String,
    /// Expected vector length for embedding endpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl Endpoint {
    fn new(url: String, model_id: &str, dim: Option<usize>) -> Self {
        Self { url, model_id: model_id.to_owned(), dim }
    }
}

pub const DEFAULT_BASE_URL: &str = "http://127.0.0.1:8780";
pub const IMAGE_EMBEDDING_PATH: &str = "/v1/embed/image";
pub const DESCRIPTION_PATH: &str = "/v1/describe";
pub const TEXT_EMBEDDING_PATH: &str = "/v1/embed/text";
pub const CHAT_PATH: &str = "/v1/chat";

/// Overrides every endpoint URL with `<base><default path>`.
pub const ENV_BASE_URL: &str = "ATLAS_GATEWAY_URL";
pub const ENV_IMAGE_EMBEDDING_URL: &str = "ATLAS_IMAGE_EMBEDDING_URL";
pub const ENV_DESCRIPTION_URL: &str = "ATLAS_DESCRIPTION_URL";
pub const ENV_TEXT_EMBEDDING_URL: &str = "ATLAS_TEXT_EMBEDDING_URL";
pub const ENV_CHAT_URL: &str = "ATLAS_CHAT_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub image_embedding: Endpoint,
    pub description: Endpoint,
    pub text_embedding: Endpoint,
    pub chat: Endpoint,
    pub batch_size: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: f64,
    /// On-disk response cache; `None` keeps responses in memory only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Upper bound on concurrent upstream requests.
    pub max_parallel: usize,
    pub chat_max_new_tokens: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self::with_base_url(DEFAULT_BASE_URL)
    }
}

impl GatewayConfig {
    /// Defaults with every endpoint under `base`.
    pub fn with_base_url(base: &str) -> Self {
        let base = base.trim_end_matches('/');
        Self {
            image_embedding: Endpoint::new(format!("{base}{IMAGE_EMBEDDING_PATH}"), "clip-ViT-L-14", Some(768)),
            description: Endpoint::new(format!("{base}{DESCRIPTION_PATH}"), "llava-onevision-qwen2-7b-ov-hf", None),
            text_embedding: Endpoint::new(format!("{base}{TEXT_EMBEDDING_PATH}"), "gte-large-en-v1.5", Some(1024)),
            chat: Endpoint::new(format!("{base}{CHAT_PATH}"), "Llama-2-7b", None),
            batch_size: 8,
            max_retries: 3,
            backoff_ms: 250,
            timeout_secs: 120.0,
            cache_dir: None,
            max_parallel: 4,
            chat_max_new_tokens: 64,
        }
    }

    /// Points every endpoint at `base`, keeping model ids and dims.
    pub fn set_base_url(&mut self, base: &str) {
        let fresh = Self::with_base_url(base);
        self.image_embedding.url = fresh.image_embedding.url;
        self.description.url = fresh.description.url;
        self.text_embedding.url = fresh.text_embedding.url;
        self.chat.url = fresh.chat.url;
    }

    /// Applies URL overrides from the process environment.
    pub fn apply_env(&mut self) {
        self.apply_env_from(|k| std::env::var(k).ok().filter(|v| !v.is_empty()));
    }

    pub fn apply_env_from(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(base) = get(ENV_BASE_URL) {
            self.set_base_url(&base);
        }
        for (key, ep) in [
            (ENV_IMAGE_EMBEDDING_URL, &mut self.image_embedding),
            (ENV_DESCRIPTION_URL, &mut self.description),
            (ENV_TEXT_EMBEDDING_URL, &mut self.text_embedding),
            (ENV_CHAT_URL, &mut self.chat),
        ] {
            if let Some(url) = get(key) {
                ep.url = url;
            }
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(m.to_owned()));
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad("timeout_secs must be positive");
        }
        if self.max_parallel < 1 {
            return bad("max_parallel must be >= 1");
        }
        if self.chat_max_new_tokens < 1 {
            return bad("chat_max_new_tokens must be >= 1");
        }
        for ep in [&self.image_embedding, &self.description, &self.text_embedding, &self.chat] {
            if ep.url.is_empty() || ep.model_id.is_empty() {
                return bad("every endpoint needs a url and a model_id");
            }
            if ep.dim == Some(0) {
                return bad("embedding dim must be >= 1");
            }
        }
        Ok(())
    }
}

/// Image description settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescribeParams {
    pub prompt: String,
    pub max_new_tokens: usize,
    pub temperature: f64,
}

impl Default for DescribeParams {
    fn default() -> Self {
        Self {
            prompt: atlas_core::corpus::DESCRIPTION_PROMPT.to_owned(),
            max_new_tokens: 128,
            temperature: 0.0,
        }
    }
}

impl DescribeParams {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_new_tokens < 1 {
            return Err(GatewayError::InvalidConfig("max_new_tokens must be >= 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::InvalidConfig("temperature must be >= 0".into()));
        }
        if self.prompt.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("prompt must not be empty".into()));
        }
        Ok(())
    }

    pub fn prompt_hash(&self) -> String {
        atlas_core::corpus::prompt_hash(&self.prompt, self.max_new_tokens, self.temperature)
    }
}
