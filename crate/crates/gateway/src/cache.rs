use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};

use serde_json::Value;

use crate::GatewayError;

/// Response cache: memory in front of optional hex-keyed files, plus the set
/// of keys currently being fetched so concurrent callers wait instead of
/// requesting the same input twice.
#[derive(Debug, Default)]
pub(crate) struct ResponseCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Value>>,
    inflight: Mutex<HashSet<String>>,
    released: Condvar,
}

pub(crate) enum Claim {
    Hit(Value),
    Owned,
    Busy,
}

impl ResponseCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir, ..Default::default() }
    }

    fn path(dir: &Path, key: &str) -> PathBuf {
        dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<Value> {
        if let Some(v) = self.memory.lock().unwrap().get(key) {
            return Some(v.clone());
        }
        let dir = self.dir.as_ref()?;
        let bytes = std::fs::read(Self::path(dir, key)).ok()?;
        let v: Value = serde_json::from_slice(&bytes).ok()?;
        self.memory.lock().unwrap().insert(key.to_owned(), v.clone());
        Some(v)
    }

    pub fn put(&self, key: &str, value: &Value) -> Result<(), GatewayError> {
        if let Some(dir) = &self.dir {
            let path = Self::path(dir, key);
            let parent = path.parent().expect("cache path has a parent");
            std::fs::create_dir_all(parent).map_err(|e| GatewayError::Cache(format!("{}: {e}", parent.display())))?;
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, serde_json::to_vec(value).expect("serializable"))
                .and_then(|_| std::fs::rename(&tmp, &path))
                .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display())))?;
        }
        self.memory.lock().unwrap().insert(key.to_owned(), value.clone());
        Ok(())
    }

    /// Cached value, or the right to fetch `key`, or a note that another
    /// caller holds that right.
    pub fn claim(&self, key: &str) -> Claim {
        if let Some(v) = self.get(key) {
            return Claim::Hit(v);
        }
        let mut inflight = self.inflight.lock().unwrap();
        if inflight.contains(key) {
            return Claim::Busy;
        }
        // a fetch may have finished between the lookup and the lock
        if let Some(v) = self.memory.lock().unwrap().get(key) {
            return Claim::Hit(v.clone());
        }
        inflight.insert(key.to_owned());
        Claim::Owned
    }

    pub fn release(&self, keys: impl IntoIterator<Item = String>) {
        let mut inflight = self.inflight.lock().unwrap();
        for k in keys {
            inflight.remove(&k);
        }
        self.released.notify_all();
    }

    /// Blocks until no caller is fetching `key`.
    pub fn wait_for(&self, key: &str) {
        let mut inflight = self.inflight.lock().unwrap();
        while inflight.contains(key) {
            inflight = self.released.wait(inflight).unwrap();
        }
    }
}

/// Counting semaphore bounding concurrent upstream requests.
#[derive(Debug)]
pub(crate) struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

pub(crate) struct Permit<'a>(&'a Permits);

impl Permits {
    pub fn new(n: usize) -> Self {
        Self { free: Mutex::new(n), cv: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}
