use serde::Serialize;

use super::{Corpus, DescriptionStore, EmbeddingMatrix};

/// Which manifest ids each artifact lacks, and which ids it carries that the
/// manifest does not know.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AlignmentReport {
    pub missing_image_embedding: Vec<String>,
    pub missing_description_embedding: Vec<String>,
    pub missing_description: Vec<String>,
    pub unknown_ids: Vec<String>,
}

impl AlignmentReport {
    pub fn is_complete(&self) -> bool {
        self.missing_image_embedding.is_empty()
            && self.missing_description_embedding.is_empty()
            && self.missing_description.is_empty()
            && self.unknown_ids.is_empty()
    }
}

/// Cross-checks every artifact that is present against the manifest. Absent
/// artifacts (`None`) are not reported as missing.
pub fn validate_alignment(
    corpus: &Corpus,
    image: Option<&EmbeddingMatrix>,
    description_embeddings: Option<&EmbeddingMatrix>,
    descriptions: Option<&DescriptionStore>,
) -> AlignmentReport {
    let missing_in = |have: &dyn Fn(&str) -> bool| -> Vec<String> {
        corpus.ids().filter(|id| !have(id)).map(str::to_owned).collect()
    };
    let mut report = AlignmentReport::default();
    let mut unknown = std::collections::BTreeSet::new();
    if let Some(m) = image {
        let set: std::collections::HashSet<&str> = m.ids.iter().map(String::as_str).collect();
        report.missing_image_embedding = missing_in(&|id| set.contains(id));
        unknown.extend(m.unknown_ids(corpus).into_iter().map(str::to_owned));
    }
    if let Some(m) = description_embeddings {
        let set: std::collections::HashSet<&str> = m.ids.iter().map(String::as_str).collect();
        report.missing_description_embedding = missing_in(&|id| set.contains(id));
        unknown.extend(m.unknown_ids(corpus).into_iter().map(str::to_owned));
    }
    if let Some(store) = descriptions {
        let set: std::collections::HashSet<&str> = store.records().iter().map(|r| r.record_id.as_str()).collect();
        report.missing_description = missing_in(&|id| set.contains(id));
        unknown.extend(set.into_iter().filter(|id| !corpus.contains(id)).map(str::to_owned));
    }
    report.unknown_ids = unknown.into_iter().collect();
    report
}
