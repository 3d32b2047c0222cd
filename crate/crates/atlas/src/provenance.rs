use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use atlas_core::hash::PartsHasher;
use serde::Serialize;

/// SHA-256 of a file's bytes; `None` if it cannot be read.
pub fn file_hash(path: &Path) -> Option<String> {
    let mut f = std::fs::File::open(path).ok()?;
    let mut h = PartsHasher::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).ok()?;
        if n == 0 {
            break;
        }
        h.part(&buf[..n]);
    }
    Some(h.hex())
}

pub fn params_hash(params: &impl Serialize) -> String {
    PartsHasher::new().part(serde_json::to_vec(params).expect("params serialize")).hex()
}

/// Named input hashes and parameter hashes of one command.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub files: BTreeMap<String, String>,
    pub params: BTreeMap<String, String>,
}

impl Inputs {
    pub fn file(&mut self, name: &str, path: &Path) -> &mut Self {
        let h = file_hash(path).unwrap_or_else(|| "absent".into());
        self.files.insert(name.to_owned(), h);
        self
    }

    pub fn param(&mut self, name: &str, params: &impl Serialize) -> &mut Self {
        self.params.insert(name.to_owned(), params_hash(params));
        self
    }

    /// Combined hash over every input and parameter.
    pub fn digest(&self) -> String {
        let mut h = PartsHasher::new();
        for (k, v) in &self.files {
            h.part("file").part(k).part(v);
        }
        for (k, v) in &self.params {
            h.part("param").part(k).part(v);
        }
        h.hex()
    }
}
