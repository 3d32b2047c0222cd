use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenRecord {
    pub record_id: String,
    pub participant_id: String,
    pub captured_at: DateTime<Utc>,
    pub app_package: Option<String>,
    pub image_ref: Option<String>,
}

/// Immutable, validated view of a manifest. Records keep file order.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<ScreenRecord>,
    index: HashMap<String, usize>,
    root: PathBuf,
}

impl Corpus {
    pub fn from_records(records: Vec<ScreenRecord>, root: impl Into<PathBuf>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.record_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: r.record_id.clone(),
                    line: i as u64 + 2,
                });
            }
        }
        Ok(Self {
            records,
            index,
            root: root.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ScreenRecord] {
        &self.records
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.record_id.as_str())
    }

    pub fn position(&self, record_id: &str) -> Option<usize> {
        self.index.get(record_id).copied()
    }

    pub fn get(&self, record_id: &str) -> Option<&ScreenRecord> {
        self.position(record_id).map(|i| &self.records[i])
    }

    pub fn contains(&self, record_id: &str) -> bool {
        self.index.contains_key(record_id)
    }

    /// Directory that relative `image_ref`s resolve against.
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Absolute path of a record's screenshot, if it has one. The file may
    /// not exist; callers decide whether that matters.
    pub fn image_path(&self, record: &ScreenRecord) -> Option<PathBuf> {
        let r = record.image_ref.as_deref()?;
        let p = Path::new(r);
        Some(if p.is_absolute() { p.to_path_buf() } else { self.root.join(p) })
    }
}

const REQUIRED: [&str; 3] = ["record_id", "participant_id", "captured_at"];

fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    let parsed = DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").map(|t| t.and_utc()))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").map(|t| t.and_utc()))
        .map_err(|e| format!("bad captured_at {s:?}: {e}"))?;
    // seconds resolution
    Ok(DateTime::from_timestamp(parsed.timestamp(), 0).expect("in range"))
}

fn non_empty(s: Option<&str>) -> Option<String> {
    s.map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned)
}

/// Parses manifest text. `root` is where relative image refs resolve.
pub fn parse_manifest(reader: impl Read, root: impl Into<PathBuf>) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut required = [0usize; 3];
    for (slot, name) in required.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or(CorpusError::MissingColumn(name))?;
    }
    let [id_col, participant_col, time_col] = required;
    let app_col = col("app_package");
    let image_col = col("image_ref");

    let mut records = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CorpusError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let record_id = field(id_col).to_owned();
        if record_id.is_empty() {
            return Err(CorpusError::Parse {
                line,
                message: "empty record_id".into(),
            });
        }
        if seen.insert(record_id.clone(), line).is_some() {
            return Err(CorpusError::DuplicateId { id: record_id, line });
        }
        let captured_at = parse_timestamp(field(time_col)).map_err(|message| CorpusError::Parse { line, message })?;
        records.push(ScreenRecord {
            record_id,
            participant_id: field(participant_col).to_owned(),
            captured_at,
            app_package: non_empty(app_col.map(field)),
            image_ref: non_empty(image_col.map(field)),
        });
    }
    Corpus::from_records(records, root)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(std::io::BufReader::new(file), root)
}

pub fn write_manifest(records: &[ScreenRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| CorpusError::io(path, e.into()))?;
    let io = |e: csv::Error| CorpusError::io(path, e.into());
    w.write_record(["record_id", "participant_id", "captured_at", "app_package", "image_ref"])
        .map_err(io)?;
    for r in records {
        w.write_record([
            r.record_id.as_str(),
            r.participant_id.as_str(),
            &r.captured_at.to_rfc3339_opts(SecondsFormat::Secs, true),
            r.app_package.as_deref().unwrap_or(""),
            r.image_ref.as_deref().unwrap_or(""),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "record_id,participant_id,captured_at,app_package,image_ref\n";

    #[test]
    fn three_rows_in_file_order() {
        let text = format!(
            "{HEADER}a,p1,2020-12-15T10:00:00Z,com.x.y,img/a.png\nb,p1,2020-12-15T10:00:05Z,,\nc,p2,2020-12-15 10:00:10,com.z,img/c.png\n"
        );
        let c = parse_manifest(text.as_bytes(), "/data").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.ids().collect::<Vec<_>>(), ["a", "b", "c"]);
        let b = c.get("b").unwrap();
        assert_eq!(b.app_package, None);
        assert_eq!(b.image_ref, None);
        assert_eq!(c.image_path(c.get("a").unwrap()).unwrap(), PathBuf::from("/data/img/a.png"));
        assert_eq!(c.get("c").unwrap().captured_at.timestamp(), 1_608_026_410);
    }

    #[test]
    fn duplicate_id_rejected_with_line() {
        let text = format!("{HEADER}a,p1,2020-12-15T10:00:00Z,,\na,p1,2020-12-15T10:00:05Z,,\n");
        match parse_manifest(text.as_bytes(), "") {
            Err(CorpusError::DuplicateId { id, line }) => {
                assert_eq!(id, "a");
                assert_eq!(line, 3);
            }
            other => panic!("expected duplicate id, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_bad_timestamp() {
        let text = "record_id,captured_at\na,2020-12-15T10:00:00Z\n";
        assert!(matches!(
            parse_manifest(text.as_bytes(), ""),
            Err(CorpusError::MissingColumn("participant_id"))
        ));
        let text = format!("{HEADER}a,p1,2020-12-15T10:00:00Z,,\nb,p1,yesterday,,\n");
        match parse_manifest(text.as_bytes(), "") {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ten_thousand_rows_for_one_participant() {
        let mut text = String::from(HEADER);
        let start = 1_608_019_200i64;
        for i in 0..10_000 {
            let t = DateTime::from_timestamp(start + 5 * i, 0).unwrap();
            text.push_str(&format!("p07-{i:05},p07,{},com.app.{},\n", t.to_rfc3339(), i % 13));
        }
        let c = parse_manifest(text.as_bytes(), "").unwrap();
        assert_eq!(c.len(), 10_000);
        let times: Vec<_> = c.records().iter().map(|r| r.captured_at).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{HEADER}a,p1,2020-12-15T10:00:00Z,com.x.y,img/a.png\nb,p2,2020-12-15T10:00:05Z,,\n");
        let c = parse_manifest(text.as_bytes(), dir.path()).unwrap();
        let path = dir.path().join("manifest.csv");
        write_manifest(c.records(), &path).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back.records(), c.records());
    }
}
