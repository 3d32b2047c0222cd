use thiserror::Error;

use super::prompt::{build_label_prompt, LabelPrompt, EXAMPLE_LABEL};
use super::{TopicError, TopicModelParams};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChatError {
    #[error("prompt exceeds the model context")]
    ContextOverflow,
    #[error("completion failed: {0}")]
    Failed(String),
}

/// Text completion endpoint used for labeling.
pub trait ChatModel: Send + Sync {
    fn complete(&self, prompt: &LabelPrompt) -> Result<String, ChatError>;
}

/// Why a topic carries a keyword label instead of a generated one.
pub const FLAG_ECHO: &str = "echoed_example_label";
pub const FLAG_EMPTY: &str = "empty_completion";
pub const FLAG_GATEWAY: &str = "gateway_failure";
pub const FLAG_UNLABELED: &str = "unlabeled";

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutcome {
    pub label: String,
    pub flags: Vec<String>,
    /// Prompts sent, in order.
    pub prompts: Vec<LabelPrompt>,
}

const TAGS: [&str; 6] = ["[INST]", "[/INST]", "<<SYS>>", "<</SYS>>", "<s>", "</s>"];

/// First non-empty line with surrounding whitespace, quotes and prompt tags
/// removed; `None` if nothing is left.
pub fn clean_completion(raw: &str) -> Option<String> {
    for line in raw.lines() {
        let mut s = line.trim().to_string();
        loop {
            let before = s.len();
            for tag in TAGS {
                if let Some(rest) = s.strip_prefix(tag) {
                    s = rest.to_string();
                }
                if let Some(rest) = s.strip_suffix(tag) {
                    s = rest.to_string();
                }
            }
            s = s.trim().trim_matches(|c| matches!(c, '"' | '\'' | '`' | '“' | '”' | '‘' | '’')).trim().to_string();
            if s.len() == before {
                break;
            }
        }
        if !s.is_empty() {
            return Some(s);
        }
    }
    None
}

pub fn keyword_label(keywords: &[String]) -> String {
    keywords.join(", ")
}

fn is_echo(label: &str) -> bool {
    label.eq_ignore_ascii_case(EXAMPLE_LABEL)
}

/// Asks the model for a label. An echo of the example label is retried once
/// with one document fewer; an echo again, an empty answer or a failed call
/// falls back to the keywords and flags the topic. Context overflows retry
/// with fewer documents while more than one remains.
pub fn generate_label(
    model: &dyn ChatModel,
    docs: &[&str],
    keywords: &[String],
    params: &TopicModelParams,
) -> Result<LabelOutcome, TopicError> {
    let fallback = |flag: &str, prompts: Vec<LabelPrompt>| LabelOutcome {
        label: keyword_label(keywords),
        flags: vec![flag.to_string()],
        prompts,
    };
    let mut n_docs = docs.len().min(params.n_representative_docs).max(1);
    let mut prompts = Vec::new();
    let mut echoed = false;
    loop {
        let prompt = build_label_prompt(&docs[..n_docs.min(docs.len())], keywords, params)?;
        n_docs = prompt.n_documents;
        let reply = model.complete(&prompt);
        prompts.push(prompt);
        match reply {
            Ok(text) => match clean_completion(&text) {
                None => return Ok(fallback(FLAG_EMPTY, prompts)),
                Some(label) if is_echo(&label) => {
                    if echoed {
                        return Ok(fallback(FLAG_ECHO, prompts));
                    }
                    echoed = true;
                    n_docs = n_docs.saturating_sub(1).max(1);
                }
                Some(label) => {
                    return Ok(LabelOutcome {
                        label,
                        flags: Vec::new(),
                        prompts,
                    })
                }
            },
            Err(ChatError::ContextOverflow) if prompts.last().is_some_and(|p| p.n_documents > 1) => {
                n_docs = prompts.last().map_or(1, |p| p.n_documents - 1);
            }
            Err(_) => return Ok(fallback(FLAG_GATEWAY, prompts)),
        }
    }
}
