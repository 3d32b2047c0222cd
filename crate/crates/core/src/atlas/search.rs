use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bundle::AtlasBundle;
use crate::density::NOISE;
use crate::topics::NOISE_LABEL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchField {
    App,
    Category,
    Participant,
    Topic,
    Description,
}

impl SearchField {
    pub const ALL: [SearchField; 5] = [Self::App, Self::Category, Self::Participant, Self::Topic, Self::Description];
}

impl fmt::Display for SearchField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::App => "app",
            Self::Category => "category",
            Self::Participant => "participant",
            Self::Topic => "topic",
            Self::Description => "description",
        })
    }
}

impl FromStr for SearchField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|f| f.to_string() == s.trim())
            .ok_or_else(|| format!("unknown search field {s:?}"))
    }
}

/// Parses a comma-separated field list; empty means every field.
pub fn parse_fields(s: &str) -> Result<Vec<SearchField>, String> {
    if s.trim().is_empty() {
        return Ok(SearchField::ALL.to_vec());
    }
    s.split(',').map(str::parse).collect()
}

/// Record ids, in point order, whose selected fields contain `q`
/// case-insensitively. The topic field matches the topic label.
pub fn search(bundle: &AtlasBundle, q: &str, fields: &[SearchField]) -> Vec<String> {
    let needle = q.to_lowercase();
    let topic_labels: std::collections::HashMap<i64, String> =
        bundle.topics.iter().map(|t| (t.topic_id, t.label.to_lowercase())).collect();
    let noise = NOISE_LABEL.to_lowercase();
    bundle
        .points
        .iter()
        .filter(|p| {
            fields.iter().any(|f| match f {
                SearchField::App => p.app_name.to_lowercase().contains(&needle),
                SearchField::Category => p.app_category.to_lowercase().contains(&needle),
                SearchField::Participant => p.participant_id.to_lowercase().contains(&needle),
                SearchField::Description => p.description_snippet.to_lowercase().contains(&needle),
                SearchField::Topic => {
                    let label = if p.topic_id == NOISE { Some(&noise) } else { topic_labels.get(&p.topic_id) };
                    label.is_some_and(|l| l.contains(&needle))
                }
            })
        })
        .map(|p| p.record_id.clone())
        .collect()
}
