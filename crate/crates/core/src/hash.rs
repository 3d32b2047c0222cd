//! Content hashes used for cache keys and provenance.

use sha2::{Digest, Sha256};

/// Incremental SHA-256 over length-delimited parts, so `["ab","c"]` and
/// `["a","bc"]` hash differently.
#[derive(Default, Clone)]
pub struct PartsHasher {
    inner: Sha256,
}

impl PartsHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn part(&mut self, bytes: impl AsRef<[u8]>) -> &mut Self {
        let b = bytes.as_ref();
        self.inner.update((b.len() as u64).to_le_bytes());
        self.inner.update(b);
        self
    }

    pub fn hex(&self) -> String {
        hex::encode(self.inner.clone().finalize())
    }
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

pub fn hash_parts<I, B>(parts: I) -> String
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut h = PartsHasher::new();
    for p in parts {
        h.part(p);
    }
    h.hex()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_are_delimited() {
        assert_ne!(hash_parts(["ab", "c"]), hash_parts(["a", "bc"]));
        assert_eq!(hash_parts(["ab", "c"]), hash_parts(["ab", "c"]));
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
