use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::colors::{ColorMode, ColorTable};
use super::layers::LabelLayer;
use super::AtlasError;
use crate::corpus::{AnnotatedCorpus, UNKNOWN_CATEGORY};
use crate::density::{LabelRow, NOISE};
use crate::topics::{Topic, NOISE_LABEL};

pub const FORMAT_VERSION: u32 = 1;
pub const SNIPPET_CHARS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasPoint {
    pub record_id: String,
    pub x: f32,
    pub y: f32,
    pub topic_id: i64,
    pub participant_id: String,
    pub app_name: String,
    pub app_category: String,
    pub description_snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

/// What produced the bundle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// `tsne` or `umap`.
    pub projection: String,
    /// Content hash of each input artifact.
    pub inputs: BTreeMap<String, String>,
    /// Hash of each module's parameters.
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasBundle {
    pub format_version: u32,
    pub points: Vec<AtlasPoint>,
    pub topics: Vec<Topic>,
    pub label_layers: Vec<LabelLayer>,
    /// One table per [`ColorMode`], in `ColorMode::ALL` order.
    pub color_tables: Vec<ColorTable>,
    pub provenance: Provenance,
}

/// Everything [`build_bundle`] joins, keyed by record id.
pub struct BundleInputs<'a> {
    pub corpus: &'a AnnotatedCorpus,
    /// Record id and 2D coordinates.
    pub layout: &'a [(String, [f32; 2])],
    pub labels: &'a [LabelRow],
    pub descriptions: &'a HashMap<String, String>,
    pub topics: &'a [Topic],
    pub layers: &'a [LabelLayer],
    pub provenance: Provenance,
}

pub fn snippet(text: &str) -> String {
    text.chars().take(SNIPPET_CHARS).collect()
}

fn check_ids<'a>(
    what: &'static str,
    corpus_ids: &HashSet<&'a str>,
    ids: impl Iterator<Item = &'a str>,
) -> Result<HashSet<&'a str>, AtlasError> {
    let mut seen = HashSet::new();
    let mut dup = BTreeSet::new();
    let mut extra = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dup.insert(id.to_string());
        }
        if !corpus_ids.contains(id) {
            extra.insert(id.to_string());
        }
    }
    let missing: BTreeSet<String> = corpus_ids.iter().filter(|id| !seen.contains(*id)).map(|s| s.to_string()).collect();
    if !missing.is_empty() || !extra.is_empty() || !dup.is_empty() {
        return Err(AtlasError::Misaligned {
            artifact: what,
            missing: missing.into_iter().collect(),
            unknown: extra.into_iter().collect(),
            duplicate: dup.into_iter().collect(),
        });
    }
    Ok(seen)
}

/// Joins the artifacts into a bundle, points in corpus order.
pub fn build_bundle(input: BundleInputs<'_>) -> Result<AtlasBundle, AtlasError> {
    let records = input.corpus.corpus.records();
    let corpus_ids: HashSet<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
    check_ids("layout", &corpus_ids, input.layout.iter().map(|p| p.0.as_str()))?;
    check_ids("labels", &corpus_ids, input.labels.iter().map(|l| l.record_id.as_str()))?;
    let missing_desc: Vec<String> = records
        .iter()
        .filter(|r| !input.descriptions.contains_key(&r.record_id))
        .map(|r| r.record_id.clone())
        .collect();
    if !missing_desc.is_empty() {
        return Err(AtlasError::Misaligned {
            artifact: "descriptions",
            missing: missing_desc,
            unknown: Vec::new(),
            duplicate: Vec::new(),
        });
    }
    let coords: HashMap<&str, [f32; 2]> = input.layout.iter().map(|(id, c)| (id.as_str(), *c)).collect();
    let labels: HashMap<&str, i64> = input.labels.iter().map(|l| (l.record_id.as_str(), l.label)).collect();

    let points: Vec<AtlasPoint> = records
        .iter()
        .zip(&input.corpus.apps)
        .map(|(r, app)| {
            let id = r.record_id.as_str();
            let [x, y] = coords[id];
            AtlasPoint {
                record_id: r.record_id.clone(),
                x,
                y,
                topic_id: labels[id],
                participant_id: r.participant_id.clone(),
                app_name: app.app_name.clone(),
                app_category: app.app_category.clone(),
                description_snippet: snippet(&input.descriptions[id]),
                image_ref: r.image_ref.clone(),
            }
        })
        .collect();
    let mut topics = input.topics.to_vec();
    topics.sort_by_key(|t| t.topic_id);
    let color_tables = color_tables(&points, &topics)?;
    let bundle = AtlasBundle {
        format_version: FORMAT_VERSION,
        points,
        topics,
        label_layers: input.layers.to_vec(),
        color_tables,
        provenance: input.provenance,
    };
    bundle.validate()?;
    Ok(bundle)
}

fn topic_key(t: &Topic, duplicated: bool) -> String {
    if duplicated {
        format!("{} (#{})", t.label, t.topic_id)
    } else {
        t.label.clone()
    }
}

/// Legend keys per point for every color mode.
pub fn color_tables(points: &[AtlasPoint], topics: &[Topic]) -> Result<Vec<ColorTable>, AtlasError> {
    let mut label_counts: HashMap<&str, usize> = HashMap::new();
    for t in topics {
        *label_counts.entry(t.label.as_str()).or_default() += 1;
    }
    let topic_keys: HashMap<i64, String> =
        topics.iter().map(|t| (t.topic_id, topic_key(t, label_counts[t.label.as_str()] > 1))).collect();
    let noise = NOISE_LABEL.to_string();
    ColorMode::ALL
        .into_iter()
        .map(|mode| {
            let keys: Vec<&str> = points
                .iter()
                .map(|p| match mode {
                    ColorMode::Topic => topic_keys.get(&p.topic_id).unwrap_or(&noise).as_str(),
                    ColorMode::App => p.app_name.as_str(),
                    ColorMode::Category => p.app_category.as_str(),
                    ColorMode::Participant => p.participant_id.as_str(),
                })
                .collect();
            let muted: &[&str] = match mode {
                ColorMode::Topic => &[NOISE_LABEL],
                ColorMode::Category => &[UNKNOWN_CATEGORY],
                _ => &[],
            };
            ColorTable::build(mode, &keys, muted)
        })
        .collect()
}

impl AtlasBundle {
    pub fn topic(&self, id: i64) -> Option<&Topic> {
        self.topics.binary_search_by_key(&id, |t| t.topic_id).ok().map(|i| &self.topics[i])
    }

    pub fn point(&self, record_id: &str) -> Option<&AtlasPoint> {
        self.points.iter().find(|p| p.record_id == record_id)
    }

    pub fn color_table(&self, mode: ColorMode) -> &ColorTable {
        &self.color_tables[ColorMode::ALL.iter().position(|m| *m == mode).expect("listed")]
    }

    /// Checks every bundle invariant, naming offending ids.
    pub fn validate(&self) -> Result<(), AtlasError> {
        if self.format_version != FORMAT_VERSION {
            return Err(AtlasError::Version(self.format_version));
        }
        let mut seen = HashSet::new();
        let dup: Vec<String> = self.points.iter().filter(|p| !seen.insert(&p.record_id)).map(|p| p.record_id.clone()).collect();
        if !dup.is_empty() {
            return Err(AtlasError::Misaligned {
                artifact: "points",
                missing: Vec::new(),
                unknown: Vec::new(),
                duplicate: dup,
            });
        }
        let bad: Vec<String> =
            self.points.iter().filter(|p| !(p.x.is_finite() && p.y.is_finite())).map(|p| p.record_id.clone()).collect();
        if !bad.is_empty() {
            return Err(AtlasError::NonFinite(bad));
        }
        if !self.topics.windows(2).all(|w| w[0].topic_id < w[1].topic_id) {
            return Err(AtlasError::Invalid("topic table is not sorted by unique topic id".into()));
        }
        let orphans: Vec<String> = self
            .points
            .iter()
            .filter(|p| p.topic_id != NOISE && self.topic(p.topic_id).is_none())
            .map(|p| p.record_id.clone())
            .collect();
        if !orphans.is_empty() {
            return Err(AtlasError::UnknownTopic(orphans));
        }
        if self.color_tables.len() != ColorMode::ALL.len()
            || self.color_tables.iter().zip(ColorMode::ALL).any(|(t, m)| t.mode != m)
        {
            return Err(AtlasError::Invalid("expected one color table per mode".into()));
        }
        for t in &self.color_tables {
            if t.indices.len() != self.points.len() || t.indices.iter().any(|&i| i as usize >= t.legend.len()) {
                return Err(AtlasError::Invalid(format!("color table {} does not cover every point", t.mode)));
            }
        }
        for layer in &self.label_layers {
            for label in &layer.labels {
                if let Some(id) = label.topic_ids.iter().find(|&&id| self.topic(id).is_none()) {
                    return Err(AtlasError::Invalid(format!("layer {} references unknown topic {id}", layer.layer)));
                }
            }
        }
        Ok(())
    }

    /// Compact JSON; identical bundles give identical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("bundle serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AtlasError> {
        let b: Self = serde_json::from_slice(bytes).map_err(|e| AtlasError::Parse(e.to_string()))?;
        b.validate()?;
        Ok(b)
    }
}

pub fn write_bundle(bundle: &AtlasBundle, path: impl AsRef<Path>) -> Result<(), AtlasError> {
    bundle.validate()?;
    fs::write(path, bundle.to_bytes()).map_err(|e| AtlasError::Io(e.to_string()))
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<AtlasBundle, AtlasError> {
    AtlasBundle::from_bytes(&fs::read(path).map_err(|e| AtlasError::Io(e.to_string()))?)
}
