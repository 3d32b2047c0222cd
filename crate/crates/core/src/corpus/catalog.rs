use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Result};

/// Category assigned to records whose package is absent or not cataloged.
pub const UNKNOWN_CATEGORY: &str = "Unknown";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppCatalogEntry {
    pub app_package: String,
    pub app_name: String,
    pub app_category: String,
}

#[derive(Debug, Clone, Default)]
pub struct AppCatalog {
    entries: HashMap<String, AppCatalogEntry>,
}

impl AppCatalog {
    pub fn from_entries(entries: impl IntoIterator<Item = AppCatalogEntry>) -> Result<Self> {
        let mut map = HashMap::new();
        for e in entries {
            if map.contains_key(&e.app_package) {
                return Err(CorpusError::DuplicatePackage(e.app_package));
            }
            map.insert(e.app_package.clone(), e);
        }
        Ok(Self { entries: map })
    }

    pub fn get(&self, package: &str) -> Option<&AppCatalogEntry> {
        self.entries.get(package)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| CorpusError::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let col = |name: &'static str| headers.iter().position(|h| h == name).ok_or(CorpusError::MissingColumn(name));
        let (pkg, name, cat) = (col("app_package")?, col("app_name")?, col("app_category")?);
        let mut entries = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| CorpusError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let get = |i: usize| row.get(i).unwrap_or("").to_owned();
            entries.push(AppCatalogEntry {
                app_package: get(pkg),
                app_name: get(name),
                app_category: get(cat),
            });
        }
        Self::from_entries(entries)
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<AppCatalog> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    AppCatalog::parse(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppInfo {
    pub app_name: String,
    pub app_category: String,
}

/// Corpus records paired with their resolved app name and category.
#[derive(Debug, Clone)]
pub struct AnnotatedCorpus {
    pub corpus: Corpus,
    /// Row-aligned with `corpus.records()`.
    pub apps: Vec<AppInfo>,
    /// Records that received the [`UNKNOWN_CATEGORY`] sentinel.
    pub unmatched: usize,
}

impl AnnotatedCorpus {
    pub fn app(&self, record_id: &str) -> Option<&AppInfo> {
        self.corpus.position(record_id).map(|i| &self.apps[i])
    }
}

/// Attaches app names and categories. Unmatched packages keep their package
/// string as the name; absent packages are named "Unknown".
pub fn join_catalog(corpus: Corpus, catalog: &AppCatalog) -> AnnotatedCorpus {
    let mut unmatched = 0;
    let apps = corpus
        .records()
        .iter()
        .map(|r| match r.app_package.as_deref().and_then(|p| catalog.get(p)) {
            Some(e) => AppInfo {
                app_name: e.app_name.clone(),
                app_category: e.app_category.clone(),
            },
            None => {
                unmatched += 1;
                AppInfo {
                    app_name: r.app_package.clone().unwrap_or_else(|| UNKNOWN_CATEGORY.to_owned()),
                    app_category: UNKNOWN_CATEGORY.to_owned(),
                }
            }
        })
        .collect();
    AnnotatedCorpus {
        corpus,
        apps,
        unmatched,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_manifest;

    fn catalog() -> AppCatalog {
        AppCatalog::parse(
            "app_package,app_name,app_category,rating\ncom.x.y,Xy Chat,Communication,4.1\ncom.insta,Instagram,Social,4.5\n"
                .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn known_unknown_and_absent_packages() {
        let m = "record_id,participant_id,captured_at,app_package,image_ref\n\
                 a,p,2021-01-01T00:00:00Z,com.x.y,\n\
                 b,p,2021-01-01T00:00:05Z,com.insta,\n\
                 c,p,2021-01-01T00:00:10Z,com.x.y,\n\
                 d,p,2021-01-01T00:00:15Z,org.mystery,\n\
                 e,p,2021-01-01T00:00:20Z,,\n";
        let corpus = parse_manifest(m.as_bytes(), "").unwrap();
        let joined = join_catalog(corpus, &catalog());
        assert_eq!(joined.unmatched, 2);
        assert_eq!(joined.app("a").unwrap().app_name, "Xy Chat");
        assert_eq!(joined.app("a").unwrap().app_category, "Communication");
        assert_eq!(joined.app("d").unwrap().app_category, UNKNOWN_CATEGORY);
        assert_eq!(joined.app("d").unwrap().app_name, "org.mystery");
        assert_eq!(joined.app("e").unwrap().app_name, UNKNOWN_CATEGORY);
    }

    #[test]
    fn duplicate_package_rejected() {
        let r = AppCatalog::parse("app_package,app_name,app_category\na,A,X\na,B,Y\n".as_bytes());
        assert!(matches!(r, Err(CorpusError::DuplicatePackage(p)) if p == "a"));
    }
}
