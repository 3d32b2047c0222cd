//! Clients for the external model endpoints (image embedding, image
//! description, text embedding, chat completion) with batching, retry and an
//! on-disk response cache, plus a deterministic stub server that speaks the
//! same JSON protocol.
//!
//! Every endpoint takes `{"model", "inputs": [...], "params": {...}}` and
//! answers `{"outputs": [...]}`, one output per input. Chat requests carry the
//! ordered prompt blocks as inputs and return a single completion.

mod cache;
mod client;
mod config;
pub mod stub;

use atlas_core::retrieval::{QueryEmbedder, Space};
use atlas_core::topics::{ChatError, ChatModel, LabelPrompt};

pub use client::{Capability, Gateway, GatewayStats, WireRequest, WireResponse};
pub use config::{
    DescribeParams, Endpoint, GatewayConfig, CHAT_PATH, DEFAULT_BASE_URL, DESCRIPTION_PATH, ENV_BASE_URL, ENV_CHAT_URL,
    ENV_DESCRIPTION_URL, ENV_IMAGE_EMBEDDING_URL, ENV_TEXT_EMBEDDING_URL, IMAGE_EMBEDDING_PATH, TEXT_EMBEDDING_PATH,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid gateway configuration: {0}")]
    InvalidConfig(String),
    #[error("{url} unreachable after {attempts} attempts: {last}")]
    Unreachable { url: String, attempts: u32, last: String },
    #[error("{url} answered HTTP {code}: {body}")]
    Status { url: String, code: u16, body: String },
    #[error("prompt exceeds the model context")]
    ContextOverflow,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("endpoint returned dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cache: {0}")]
    Cache(String),
}

impl ChatModel for Gateway {
    fn complete(&self, prompt: &LabelPrompt) -> Result<String, ChatError> {
        self.complete_chat(&[&prompt.system, &prompt.example, &prompt.main]).map_err(|e| match e {
            GatewayError::ContextOverflow => ChatError::ContextOverflow,
            other => ChatError::Failed(other.to_string()),
        })
    }
}

impl QueryEmbedder for Gateway {
    fn embed_query(&self, space: Space, text: &str) -> Result<Vec<f32>, String> {
        match space {
            Space::ImageEmbedding => self.embed_query_image_space(text),
            Space::DescriptionEmbedding => self.embed_texts(&[text]).map(|mut v| v.remove(0)),
        }
        .map_err(|e| e.to_string())
    }
}
