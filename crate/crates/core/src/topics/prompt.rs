use serde::{Deserialize, Serialize};

use super::{TopicError, TopicModelParams};

pub const SYSTEM_BLOCK: &str = "
You are a helpful, respectful, and honest assistant for labeling topics.
<</SYS>>
";

pub const EXAMPLE_BLOCK: &str = "
I have a topic that contains the following documents:
- The screenshot displays a website where it says traditional diets in most cultures were primarily plant-based with a little meat on top, but with the rise of industrial style meat production and factory farming, meat has become a staple food.
- The screenshot features an image of meat and the captions read: Meat, but especially beef, is the word food in terms of emissions.
- The screenshot shows a quote on Twitter: \"Eating meat doesn't make you a bad person, not eating meat doesn't make you a good one\".
The topic is described by the following keywords: 'meat, beef, eating, emissions, food, health, image, processed, climate change, Twitter quote'.
Based on the information about the topic above, please create a short and specific label of this topic, in English. Make sure you only return the label and nothing more.

[/INST] Environmental impacts of eating meat
";

pub const MAIN_BLOCK: &str = "
[INST]
I have a topic that contains the following documents:
[DOCUMENTS]
The topic is described by the following keywords: '[KEYWORDS]'.
Based on the information about the topic above, please create a short and specific label of this
topic, in English. Make sure you only return the label and nothing more.
[/INST]
";

/// Label of the few-shot example; a completion equal to it is an echo.
pub const EXAMPLE_LABEL: &str = "Environmental impacts of eating meat";

/// Share of the token budget usable by a prompt.
pub const BUDGET_SAFETY: f64 = 0.9;

/// The three prompt blocks of one labeling request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPrompt {
    pub system: String,
    pub example: String,
    pub main: String,
    /// Documents that made it into the main block.
    pub n_documents: usize,
}

impl LabelPrompt {
    /// Blocks concatenated in order.
    pub fn text(&self) -> String {
        [self.system.as_str(), &self.example, &self.main].concat()
    }
}

pub fn estimate_tokens(text: &str, chars_per_token: f64) -> usize {
    (text.chars().count() as f64 / chars_per_token).ceil() as usize
}

/// Tokens a prompt may use after the safety margin.
pub fn usable_budget(params: &TopicModelParams) -> usize {
    (params.token_budget as f64 * BUDGET_SAFETY).floor() as usize
}

fn main_block(docs: &[&str], keywords: &[String]) -> String {
    let documents = docs
        .iter()
        .map(|d| format!("- {}", d.split_whitespace().collect::<Vec<_>>().join(" ")))
        .collect::<Vec<_>>()
        .join("\n");
    MAIN_BLOCK
        .replace("[DOCUMENTS]", &documents)
        .replace("[KEYWORDS]", &keywords.join(", "))
}

/// Fills the main block, dropping whole documents from the end until the
/// estimated size fits the usable budget. Whitespace runs inside a document
/// collapse to single spaces so each document stays on one line.
pub fn build_label_prompt(docs: &[&str], keywords: &[String], params: &TopicModelParams) -> Result<LabelPrompt, TopicError> {
    if keywords.is_empty() {
        return Err(TopicError::NoKeywords);
    }
    if docs.is_empty() {
        return Err(TopicError::NoDocuments);
    }
    let budget = usable_budget(params);
    let mut take = docs.len();
    loop {
        let prompt = LabelPrompt {
            system: SYSTEM_BLOCK.to_string(),
            example: EXAMPLE_BLOCK.to_string(),
            main: main_block(&docs[..take], keywords),
            n_documents: take,
        };
        let tokens = estimate_tokens(&prompt.text(), params.chars_per_token);
        if tokens <= budget {
            return Ok(prompt);
        }
        if take == 1 {
            return Err(TopicError::BudgetTooSmall { needed: tokens, budget });
        }
        take -= 1;
    }
}
