//! Disk-backed prompt cache.
//!
//! Entries are keyed by (backend id, prompt text, k); each lives in its own
//! JSON file named by the SHA-256 of the key, so lookups never scan. Writes
//! go through a temp file plus rename under an exclusive lock; a hit
//! bypasses the wrapped backend entirely.

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use chimera_core::backend::{BackendDescriptor, BackendError, MaskBackend};
use chimera_core::prompt::MaskSlotPrompt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One cached query result; the raw backend output before normalization,
/// so cached and uncached paths share the exact same downstream pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheRecord {
    backend_id: String,
    prompt: String,
    k: usize,
    predictions: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: u64,
}

#[derive(Debug, Clone)]
pub struct PromptCache {
    dir: PathBuf,
}

impl PromptCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, backend_id: &str, prompt: &str, k: usize) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(backend_id.as_bytes());
        hasher.update([0]);
        hasher.update(prompt.as_bytes());
        hasher.update([0]);
        hasher.update(k.to_le_bytes());
        let digest = hasher.finalize();
        let mut name = String::with_capacity(69);
        for byte in digest {
            name.push_str(&format!("{byte:02x}"));
        }
        name.push_str(".json");
        self.dir.join(name)
    }

    /// `None` on miss; unreadable or mismatched entries count as misses.
    pub fn get(&self, backend_id: &str, prompt: &str, k: usize) -> Option<Vec<(String, f64)>> {
        let path = self.entry_path(backend_id, prompt, k);
        let text = fs::read_to_string(path).ok()?;
        let record: CacheRecord = serde_json::from_str(&text).ok()?;
        (record.backend_id == backend_id && record.prompt == prompt && record.k == k)
            .then_some(record.predictions)
    }

    pub fn put(
        &self,
        backend_id: &str,
        prompt: &str,
        k: usize,
        predictions: &[(String, f64)],
    ) -> io::Result<()> {
        let record = CacheRecord {
            backend_id: backend_id.to_string(),
            prompt: prompt.to_string(),
            k,
            predictions: predictions.to_vec(),
        };
        let path = self.entry_path(backend_id, prompt, k);
        let _guard = self.write_lock()?;
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&tmp, &record)?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    /// Exclusive advisory lock held for the duration of one write.
    fn write_lock(&self) -> io::Result<File> {
        let lock = File::create(self.dir.join(".lock"))?;
        lock.lock()?;
        Ok(lock)
    }

    fn entry_files(&self) -> io::Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let is_entry = path.extension().is_some_and(|e| e == "json")
                && path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .is_some_and(|s| s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit()));
            if is_entry {
                files.push(path);
            }
        }
        files.sort();
        Ok(files)
    }

    pub fn stats(&self) -> io::Result<CacheStats> {
        let files = self.entry_files()?;
        let mut bytes = 0;
        for f in &files {
            bytes += fs::metadata(f)?.len();
        }
        Ok(CacheStats {
            entries: files.len(),
            bytes,
        })
    }

    /// Remove all entries; idempotent. Returns how many were removed.
    pub fn purge(&self) -> io::Result<usize> {
        let _guard = self.write_lock()?;
        let files = self.entry_files()?;
        for f in &files {
            fs::remove_file(f)?;
        }
        Ok(files.len())
    }
}

/// A [`MaskBackend`] whose raw predictions are memoized in a [`PromptCache`].
pub struct CachedBackend<B> {
    inner: B,
    cache: PromptCache,
}

impl<B: MaskBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: PromptCache) -> Self {
        Self { inner, cache }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: MaskBackend> MaskBackend for CachedBackend<B> {
    fn descriptor(&self) -> &BackendDescriptor {
        self.inner.descriptor()
    }

    fn predict(
        &self,
        prompt: &MaskSlotPrompt,
        k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        let id = self.inner.descriptor().id.clone();
        if let Some(hit) = self.cache.get(&id, prompt.text(), k) {
            return Ok(hit);
        }
        let fresh = self.inner.predict(prompt, k)?;
        self.cache
            .put(&id, prompt.text(), k, &fresh)
            .map_err(|e| BackendError::Unavailable {
                backend: id,
                reason: format!("cache write failed: {e}"),
            })?;
        Ok(fresh)
    }

    fn concurrent_ok(&self) -> bool {
        // concurrent readers are fine; writes are lock-serialized
        self.inner.concurrent_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chimera_core::backend::{fill_mask, CountingBackend, TableBackend};

    fn backend() -> TableBackend {
        TableBackend::new("t").with_entry(
            "the moon is like a [MASK]",
            vec![("ghost", -0.1), ("dream", -0.2)],
        )
    }

    fn prompt() -> MaskSlotPrompt {
        MaskSlotPrompt::new("the moon is like a [MASK]").unwrap()
    }

    #[test]
    fn hit_bypasses_the_adapter() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PromptCache::open(dir.path()).unwrap();
        let counting = CountingBackend::new(backend());
        let cached = CachedBackend::new(counting, cache);

        let first = fill_mask(&cached, &prompt(), 2).unwrap();
        let second = fill_mask(&cached, &prompt(), 2).unwrap();
        assert_eq!(first, second);
        assert_eq!(cached.inner().calls(), 1);
    }

    #[test]
    fn cached_equals_uncached() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PromptCache::open(dir.path()).unwrap();
        let cached = CachedBackend::new(backend(), cache);
        let via_cache = fill_mask(&cached, &prompt(), 2).unwrap();
        let direct = fill_mask(&backend(), &prompt(), 2).unwrap();
        assert_eq!(via_cache, direct);
        // and again, now served from disk
        let via_cache = fill_mask(&cached, &prompt(), 2).unwrap();
        assert_eq!(via_cache, direct);
    }

    #[test]
    fn distinct_k_distinct_entries() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PromptCache::open(dir.path()).unwrap();
        let cached = CachedBackend::new(CountingBackend::new(backend()), cache.clone());
        fill_mask(&cached, &prompt(), 1).unwrap();
        fill_mask(&cached, &prompt(), 2).unwrap();
        fill_mask(&cached, &prompt(), 2).unwrap();
        assert_eq!(cached.inner().calls(), 2);
        assert_eq!(cache.stats().unwrap().entries, 2);
    }

    #[test]
    fn purge_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PromptCache::open(dir.path()).unwrap();
        cache
            .put("b", "p [MASK]", 3, &[("x".into(), -1.0)])
            .unwrap();
        assert_eq!(cache.stats().unwrap().entries, 1);
        assert_eq!(cache.purge().unwrap(), 1);
        assert_eq!(cache.purge().unwrap(), 0);
        assert_eq!(
            cache.stats().unwrap(),
            CacheStats {
                entries: 0,
                bytes: 0
            }
        );
    }

    #[test]
    fn corrupted_entries_are_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PromptCache::open(dir.path()).unwrap();
        cache
            .put("b", "p [MASK]", 3, &[("x".into(), -1.0)])
            .unwrap();
        let path = cache.entry_path("b", "p [MASK]", 3);
        std::fs::write(&path, "not json").unwrap();
        assert_eq!(cache.get("b", "p [MASK]", 3), None);
    }

    #[test]
    fn stats_on_missing_dir_counts_zero() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PromptCache::open(dir.path().join("fresh")).unwrap();
        assert_eq!(cache.stats().unwrap().entries, 0);
    }
}
