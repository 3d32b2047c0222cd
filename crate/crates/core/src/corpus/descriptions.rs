use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

/// Default image description prompt.
pub const DESCRIPTION_PROMPT: &str = "Describe this screenshot in detail, using this output format: The screenshot displays [the content goes here, including verbatim text if present, or a specific description of what the text is about; if there is an image, describe exactly what it depicts]. Focus on explaining the exact content of any text or image. Include the app name if identifiable, but DO NOT include quantitative details, such as likes or status bar information.";

/// Identifies one description generation setting.
pub fn prompt_hash(prompt: &str, max_new_tokens: usize, temperature: f64) -> String {
    crate::hash::hash_parts([prompt.as_bytes(), &(max_new_tokens as u64).to_le_bytes(), &temperature.to_le_bytes()])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionRecord {
    pub record_id: String,
    pub text: String,
    pub model_id: String,
    pub prompt_hash: String,
}

impl DescriptionRecord {
    fn key(&self) -> (String, String, String) {
        (self.record_id.clone(), self.model_id.clone(), self.prompt_hash.clone())
    }
}

/// All descriptions on disk; several (model, prompt) generations may coexist.
#[derive(Debug, Clone, Default)]
pub struct DescriptionStore {
    records: Vec<DescriptionRecord>,
}

impl DescriptionStore {
    pub fn from_records(records: Vec<DescriptionRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.text.trim().is_empty() {
                return Err(CorpusError::Parse {
                    line: i as u64 + 1,
                    message: format!("empty description text for {}", r.record_id),
                });
            }
            if !seen.insert(r.key()) {
                return Err(CorpusError::DuplicateDescription {
                    line: i as u64 + 1,
                    record_id: r.record_id.clone(),
                    model_id: r.model_id.clone(),
                    prompt_hash: r.prompt_hash.clone(),
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[DescriptionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Text per record id, restricted to one generation when `model_id` /
    /// `prompt_hash` are given. Later lines win when a filter leaves several.
    pub fn texts(&self, model_id: Option<&str>, prompt_hash: Option<&str>) -> HashMap<String, String> {
        self.records
            .iter()
            .filter(|r| model_id.is_none_or(|m| m == r.model_id))
            .filter(|r| prompt_hash.is_none_or(|p| p == r.prompt_hash))
            .map(|r| (r.record_id.clone(), r.text.clone()))
            .collect()
    }

    pub fn contains(&self, record_id: &str, model_id: &str, prompt_hash: &str) -> bool {
        self.records
            .iter()
            .any(|r| r.record_id == record_id && r.model_id == model_id && r.prompt_hash == prompt_hash)
    }
}

pub fn load_descriptions(path: impl AsRef<Path>) -> Result<DescriptionStore> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(DescriptionStore::default());
    }
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DescriptionRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    DescriptionStore::from_records(records)
}

/// Appends records whose (record, model, prompt) key is not yet on disk.
/// Returns how many were written.
pub fn append_descriptions(path: impl AsRef<Path>, new: &[DescriptionRecord]) -> Result<usize> {
    let path = path.as_ref();
    let existing = load_descriptions(path)?;
    let mut keys: HashSet<_> = existing.records.iter().map(DescriptionRecord::key).collect();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut written = 0;
    for r in new {
        if r.text.trim().is_empty() || !keys.insert(r.key()) {
            continue;
        }
        let line = serde_json::to_string(r).expect("serializable");
        writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
        written += 1;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))?;
    Ok(written)
}
