//! Binary embedding matrix file.
//!
//! Little-endian layout:
//!
//! ```text
//! magic    8 bytes  "MCAEMB01"
//! version  u32      1
//! kind     u8       0 = image, 1 = description, 2 = layout
//! n        u64
//! d        u32
//! payload  n*d f32, row-major
//! ids      u64 count, then per id: u32 byte length + UTF-8 bytes
//! ```

use std::collections::HashSet;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Result};
use crate::Matrix;

pub const EMBEDDING_MAGIC: &[u8; 8] = b"MCAEMB01";
pub const EMBEDDING_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Image,
    Description,
    Layout,
}

impl EmbeddingKind {
    pub fn tag(self) -> u8 {
        match self {
            Self::Image => 0,
            Self::Description => 1,
            Self::Layout => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Self::Image),
            1 => Ok(Self::Description),
            2 => Ok(Self::Layout),
            t => Err(CorpusError::UnknownKind(t)),
        }
    }
}

/// Row-aligned `n x d` f32 matrix with the record id of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub kind: EmbeddingKind,
    pub ids: Vec<String>,
    pub data: Matrix<f32>,
}

impl EmbeddingMatrix {
    pub fn new(kind: EmbeddingKind, ids: Vec<String>, data: Matrix<f32>) -> Result<Self> {
        let m = Self { kind, ids, data };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn d(&self) -> usize {
        self.data.cols()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        self.data.row(i)
    }

    /// Shape, uniqueness, finiteness and (except for layouts) non-zero rows.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CorpusError::InvalidMatrix(m));
        if self.ids.len() != self.data.rows() {
            return bad(format!("{} ids for {} rows", self.ids.len(), self.data.rows()));
        }
        let min_d = if self.kind == EmbeddingKind::Layout { 1 } else { 2 };
        if self.data.rows() > 0 && self.data.cols() < min_d {
            return bad(format!("dimension {} < {min_d}", self.data.cols()));
        }
        let mut seen = HashSet::with_capacity(self.ids.len());
        for id in &self.ids {
            if !seen.insert(id.as_str()) {
                return bad(format!("duplicate id {id:?}"));
            }
        }
        for (i, row) in self.data.iter_rows().enumerate() {
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return bad(format!("row {:?} has non-finite value {v}", self.ids[i]));
            }
            if self.kind != EmbeddingKind::Layout && row.iter().all(|v| *v == 0.0) {
                return bad(format!("row {:?} has zero norm", self.ids[i]));
            }
        }
        Ok(())
    }

    /// Ids present here but absent from the manifest.
    pub fn unknown_ids<'a>(&'a self, corpus: &Corpus) -> Vec<&'a str> {
        self.ids.iter().map(String::as_str).filter(|id| !corpus.contains(id)).collect()
    }

    /// Reorders / subsets rows to follow `ids`. Fails naming the first id
    /// that has no row.
    pub fn aligned_to(&self, ids: &[&str]) -> Result<Self> {
        let pos: std::collections::HashMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut idx = Vec::with_capacity(ids.len());
        for id in ids {
            match pos.get(id) {
                Some(&i) => idx.push(i),
                None => return Err(CorpusError::InvalidMatrix(format!("no row for record {id:?}"))),
            }
        }
        Ok(Self {
            kind: self.kind,
            ids: ids.iter().map(|s| s.to_string()).collect(),
            data: self.data.select_rows(&idx),
        })
    }
}

pub fn write_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    m.validate()?;
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    encode(m, &mut w).map_err(|e| CorpusError::io(path, e))?;
    w.flush().map_err(|e| CorpusError::io(path, e))
}

fn encode(m: &EmbeddingMatrix, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(EMBEDDING_MAGIC)?;
    w.write_all(&EMBEDDING_VERSION.to_le_bytes())?;
    w.write_all(&[m.kind.tag()])?;
    w.write_all(&(m.n() as u64).to_le_bytes())?;
    w.write_all(&(m.d() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in m.data.as_slice().chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.write_all(&(m.ids.len() as u64).to_le_bytes())?;
    for id in &m.ids {
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    Ok(())
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => CorpusError::Truncated(what),
        _ => CorpusError::io("<embedding stream>", e),
    })
}

fn read_u32(r: &mut impl Read, what: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, what: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    decode(&mut BufReader::with_capacity(1 << 20, file))
}

pub(crate) fn decode(r: &mut impl Read) -> Result<EmbeddingMatrix> {
    let mut magic = [0u8; 8];
    read_exact_or(r, &mut magic, "magic")?;
    if &magic != EMBEDDING_MAGIC {
        return Err(CorpusError::BadMagic);
    }
    let version = read_u32(r, "version")?;
    if version != EMBEDDING_VERSION {
        return Err(CorpusError::UnsupportedVersion(version));
    }
    let mut kind = [0u8; 1];
    read_exact_or(r, &mut kind, "kind")?;
    let kind = EmbeddingKind::from_tag(kind[0])?;
    let n = read_u64(r, "row count")?;
    let d = read_u32(r, "dimension")? as u64;
    let len = n
        .checked_mul(d)
        .filter(|l| *l <= (usize::MAX / 4) as u64)
        .ok_or_else(|| CorpusError::InvalidMatrix(format!("implausible shape {n} x {d}")))? as usize;

    let mut data: Vec<f32> = Vec::new();
    data.try_reserve_exact(len)
        .map_err(|_| CorpusError::InvalidMatrix(format!("cannot allocate {n} x {d}")))?;
    let mut buf = vec![0u8; 4 * 4096];
    let mut remaining = len;
    while remaining > 0 {
        let take = remaining.min(4096);
        let bytes = &mut buf[..4 * take];
        read_exact_or(r, bytes, "payload")?;
        data.extend(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])));
        remaining -= take;
    }

    let count = read_u64(r, "id table")?;
    if count != n {
        return Err(CorpusError::IdTableLength { expected: n, found: count });
    }
    let mut ids = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let l = read_u32(r, "id length")? as usize;
        let mut b = vec![0u8; l];
        read_exact_or(r, &mut b, "id bytes")?;
        ids.push(String::from_utf8(b).map_err(|e| CorpusError::InvalidMatrix(format!("id is not UTF-8: {e}")))?);
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(CorpusError::TrailingBytes),
        Err(e) => return Err(CorpusError::io("<embedding stream>", e)),
    }
    let m = EmbeddingMatrix {
        kind,
        ids,
        data: Matrix::from_vec(n as usize, d as usize, data),
    };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EmbeddingMatrix {
        EmbeddingMatrix::new(
            EmbeddingKind::Image,
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&[[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        )
        .unwrap()
    }

    fn encoded(m: &EmbeddingMatrix) -> Vec<u8> {
        let mut v = Vec::new();
        encode(m, &mut v).unwrap();
        v
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encoded(&small());
        assert_eq!(&bytes[..8], b"MCAEMB01");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(bytes[12], 0);
        assert_eq!(u64::from_le_bytes(bytes[13..21].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[21..25].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(bytes[25..29].try_into().unwrap()), 1.0);
        // header + payload + count + 2 * (len + 1 byte)
        assert_eq!(bytes.len(), 25 + 24 + 8 + 2 * 5);
    }

    #[test]
    fn small_matrix_round_trips() {
        let m = small();
        assert_eq!(decode(&mut encoded(&m).as_slice()).unwrap(), m);
    }

    #[test]
    fn truncation_and_corruption_are_detected() {
        let bytes = encoded(&small());
        let cut = &bytes[..30];
        assert!(matches!(decode(&mut &cut[..]), Err(CorpusError::Truncated("payload"))));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&mut bad.as_slice()), Err(CorpusError::BadMagic)));

        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(decode(&mut v2.as_slice()), Err(CorpusError::UnsupportedVersion(2))));

        let mut count = bytes.clone();
        count[49] = 3;
        assert!(matches!(
            decode(&mut count.as_slice()),
            Err(CorpusError::IdTableLength { expected: 2, found: 3 })
        ));

        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(decode(&mut extra.as_slice()), Err(CorpusError::TrailingBytes)));
    }

    #[test]
    fn invariants_enforced() {
        let zero = EmbeddingMatrix::new(
            EmbeddingKind::Description,
            vec!["a".into()],
            Matrix::from_rows(&[[0.0f32, 0.0]]),
        );
        assert!(zero.is_err());
        let nan = EmbeddingMatrix::new(EmbeddingKind::Image, vec!["a".into()], Matrix::from_rows(&[[f32::NAN, 1.0]]));
        assert!(nan.is_err());
        let dup = EmbeddingMatrix::new(
            EmbeddingKind::Image,
            vec!["a".into(), "a".into()],
            Matrix::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]]),
        );
        assert!(dup.is_err());
        let origin = EmbeddingMatrix::new(EmbeddingKind::Layout, vec!["a".into()], Matrix::from_rows(&[[0.0f32, 0.0]]));
        assert!(origin.is_ok());
    }
}
