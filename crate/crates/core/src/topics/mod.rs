//! Keyword topics and generated labels for clusters of descriptions.

mod ctfidf;
mod label;
mod prompt;
mod tokenize;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ctfidf::{sparse_cosine, ClassTfidf};
pub use label::{
    clean_completion, generate_label, keyword_label, ChatError, ChatModel, LabelOutcome, FLAG_ECHO, FLAG_EMPTY,
    FLAG_GATEWAY, FLAG_UNLABELED,
};
pub use prompt::{
    build_label_prompt, estimate_tokens, usable_budget, LabelPrompt, BUDGET_SAFETY, EXAMPLE_BLOCK, EXAMPLE_LABEL,
    MAIN_BLOCK, SYSTEM_BLOCK,
};
pub use tokenize::{english_stopwords, stopwords, tokenize, ENGLISH_STOPWORDS_SHA256};

use crate::density::NOISE;

/// Label reserved for the noise group.
pub const NOISE_LABEL: &str = "Unclustered";

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("no non-noise cluster has documents")]
    NoClusters,
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("a label prompt needs at least one keyword")]
    NoKeywords,
    #[error("a label prompt needs at least one document")]
    NoDocuments,
    #[error("prompt needs {needed} tokens with one document, budget is {budget}")]
    BudgetTooSmall { needed: usize, budget: usize },
    #[error("unknown stopword list {0:?}")]
    UnknownStopwords(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicModelParams {
    pub top_n_keywords: usize,
    pub n_representative_docs: usize,
    pub token_budget: usize,
    pub chars_per_token: f64,
    pub stopwords: String,
    pub lowercase: bool,
}

impl Default for TopicModelParams {
    fn default() -> Self {
        Self {
            top_n_keywords: 5,
            n_representative_docs: 3,
            token_budget: 4096,
            chars_per_token: 4.0,
            stopwords: "english".into(),
            lowercase: true,
        }
    }
}

impl TopicModelParams {
    pub fn validate(&self) -> Result<(), TopicError> {
        if self.top_n_keywords == 0 {
            return Err(TopicError::InvalidParams("top_n_keywords must be at least 1".into()));
        }
        if self.n_representative_docs == 0 {
            return Err(TopicError::InvalidParams("n_representative_docs must be at least 1".into()));
        }
        if !(self.chars_per_token > 0.0) {
            return Err(TopicError::InvalidParams("chars_per_token must be positive".into()));
        }
        let skeleton = estimate_tokens(&[SYSTEM_BLOCK, EXAMPLE_BLOCK, MAIN_BLOCK].concat(), self.chars_per_token);
        if usable_budget(self) <= skeleton {
            return Err(TopicError::InvalidParams(format!(
                "token_budget {} leaves no room beyond the {skeleton}-token prompt skeleton",
                self.token_budget
            )));
        }
        if stopwords(&self.stopwords).is_none() {
            return Err(TopicError::UnknownStopwords(self.stopwords.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: i64,
    pub keywords: Vec<String>,
    pub label: String,
    pub size: usize,
    pub representative_ids: Vec<String>,
    #[serde(default)]
    pub flags: Vec<String>,
}

/// One description with its cluster.
#[derive(Debug, Clone, Copy)]
pub struct TopicDoc<'a> {
    pub record_id: &'a str,
    pub cluster: i64,
    pub text: &'a str,
}

/// Keywords and representative documents for every cluster, plus the noise
/// group when present. Labels start as the joined keywords, flagged
/// [`FLAG_UNLABELED`].
pub fn extract_topics(docs: &[TopicDoc<'_>], params: &TopicModelParams) -> Result<Vec<Topic>, TopicError> {
    params.validate()?;
    let stop = stopwords(&params.stopwords).expect("validated");
    let tokens: Vec<Vec<String>> = docs.par_iter().map(|d| tokenize(d.text, params.lowercase, stop)).collect();
    let model = ClassTfidf::fit(docs.iter().zip(&tokens).map(|(d, t)| (d.cluster, t.as_slice())))?;

    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, d) in docs.iter().enumerate() {
        groups.entry(d.cluster).or_default().push(i);
    }
    Ok(groups
        .par_iter()
        .map(|(&cluster, members)| {
            if cluster == NOISE {
                return Topic {
                    topic_id: NOISE,
                    keywords: Vec::new(),
                    label: NOISE_LABEL.into(),
                    size: members.len(),
                    representative_ids: Vec::new(),
                    flags: Vec::new(),
                };
            }
            let keywords = model.top_keywords(cluster, params.top_n_keywords);
            let member_docs: Vec<(&str, &[String])> =
                members.iter().map(|&i| (docs[i].record_id, tokens[i].as_slice())).collect();
            let mut representative_ids = model.representative_docs(cluster, &member_docs, params.n_representative_docs);
            if representative_ids.is_empty() {
                let mut ids: Vec<&str> = members.iter().map(|&i| docs[i].record_id).collect();
                ids.sort_unstable();
                representative_ids = ids.into_iter().take(params.n_representative_docs).map(String::from).collect();
            }
            Topic {
                topic_id: cluster,
                label: fallback_label(cluster, &keywords),
                keywords,
                size: members.len(),
                representative_ids,
                flags: vec![FLAG_UNLABELED.into()],
            }
        })
        .collect())
}

fn fallback_label(cluster: i64, keywords: &[String]) -> String {
    if keywords.is_empty() {
        format!("Topic {cluster}")
    } else {
        keyword_label(keywords)
    }
}

/// Generates labels for every non-noise topic, concurrently. Returns the
/// prompts sent per topic id.
pub fn label_topics(
    topics: &mut [Topic],
    texts: &HashMap<&str, &str>,
    model: &dyn ChatModel,
    params: &TopicModelParams,
) -> Result<BTreeMap<i64, Vec<LabelPrompt>>, TopicError> {
    params.validate()?;
    let outcomes: Vec<Option<Result<LabelOutcome, TopicError>>> = topics
        .par_iter()
        .map(|t| {
            if t.topic_id == NOISE {
                return None;
            }
            let docs: Vec<&str> = t.representative_ids.iter().filter_map(|id| texts.get(id.as_str()).copied()).collect();
            if t.keywords.is_empty() || docs.is_empty() {
                return Some(Ok(LabelOutcome {
                    label: fallback_label(t.topic_id, &t.keywords),
                    flags: vec![FLAG_UNLABELED.into()],
                    prompts: Vec::new(),
                }));
            }
            Some(generate_label(model, &docs, &t.keywords, params))
        })
        .collect();
    let mut prompts = BTreeMap::new();
    for (t, outcome) in topics.iter_mut().zip(outcomes) {
        let Some(outcome) = outcome else { continue };
        let outcome = outcome?;
        t.label = outcome.label;
        t.flags = outcome.flags;
        prompts.insert(t.topic_id, outcome.prompts);
    }
    Ok(prompts)
}
