//! On-disk cache for expensive results, keyed by a SHA-256 fingerprint of the
//! serialized problem.
//!
//! Each entry is one JSON file holding the key and the value. Writers take an
//! exclusive advisory lock on a sibling `.lock` file and publish through a
//! rename, so readers never see partial files.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Bumped whenever a cached computation changes its output.
pub const CACHE_FORMAT: u32 = 1;

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "POINTGAS_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry<K, V> {
    format: u32,
    kind: String,
    key: K,
    value: V,
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

/// Hex SHA-256 of `kind`, the cache format and the JSON form of `key`.
pub fn fingerprint<K: Serialize>(kind: &str, key: &K) -> Result<String> {
    let mut h = Sha256::new();
    h.update(kind.as_bytes());
    h.update([0]);
    h.update(CACHE_FORMAT.to_le_bytes());
    h.update(serde_json::to_vec(key)?);
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$POINTGAS_CACHE_DIR` when set and non-empty, `default` otherwise.
    pub fn from_env(default: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(default),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, kind: &str, fp: &str) -> PathBuf {
        self.dir.join(format!("{kind}-{fp}.json"))
    }

    fn read<K, V>(&self, path: &Path, kind: &str, key: &K) -> Option<V>
    where
        K: Serialize + DeserializeOwned + PartialEq,
        V: DeserializeOwned,
    {
        let bytes = fs::read(path).ok()?;
        let e: Entry<K, V> = serde_json::from_slice(&bytes).ok()?;
        (e.format == CACHE_FORMAT && e.kind == kind && &e.key == key).then_some(e.value)
    }

    /// Cached value for `key`, computing and storing it on a miss. The flag
    /// reports a hit.
    pub fn get_or_compute<K, V, F>(&self, kind: &str, key: &K, compute: F) -> Result<(V, bool)>
    where
        K: Serialize + DeserializeOwned + PartialEq,
        V: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<V>,
    {
        let fp = fingerprint(kind, key)?;
        let path = self.path(kind, &fp);
        if let Some(v) = self.read(&path, kind, key) {
            return Ok((v, true));
        }
        fs::create_dir_all(&self.dir)?;
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(self.dir.join(format!("{kind}-{fp}.lock")))?;
        lock.lock()?;
        // another process may have finished while we waited
        if let Some(v) = self.read(&path, kind, key) {
            return Ok((v, true));
        }
        let value = compute()?;
        let entry = Entry { format: CACHE_FORMAT, kind: kind.to_string(), key, value };
        let tmp = self.dir.join(format!(".{kind}-{fp}.{}.tmp", std::process::id()));
        {
            let mut f = File::create(&tmp)?;
            serde_json::to_writer(&mut f, &entry)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        lock.unlock()?;
        Ok((entry.value, false))
    }

    /// Deletes every entry of `kind`.
    pub fn clear(&self, kind: &str) -> Result<usize> {
        let mut n = 0;
        let Ok(rd) = fs::read_dir(&self.dir) else { return Ok(0) };
        for e in rd.flatten() {
            let name = e.file_name();
            let name = name.to_string_lossy();
            if name.starts_with(&format!("{kind}-")) && name.ends_with(".json") {
                fs::remove_file(e.path())?;
                n += 1;
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn hit_after_miss_and_exact_floats() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let calls = Cell::new(0);
        let v = vec![0.1f64, 1.0 / 3.0, std::f64::consts::PI * 1e-300, 123456.789e12];
        let key = (3u32, "x".to_string());
        let (a, hit) = c.get_or_compute("t", &key, || {
            calls.set(calls.get() + 1);
            Ok(v.clone())
        }).unwrap();
        assert!(!hit);
        let (b, hit): (Vec<f64>, bool) = c.get_or_compute("t", &key, || unreachable!()).unwrap();
        assert!(hit);
        assert_eq!(calls.get(), 1);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(c.clear("t").unwrap(), 1);
    }

    #[test]
    fn keys_are_distinguished() {
        assert_ne!(fingerprint("a", &1u32).unwrap(), fingerprint("a", &2u32).unwrap());
        assert_ne!(fingerprint("a", &1u32).unwrap(), fingerprint("b", &1u32).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let (x, _) = c.get_or_compute("k", &1u32, || Ok(10u32)).unwrap();
        let (y, hit) = c.get_or_compute("k", &2u32, || Ok(20u32)).unwrap();
        assert_eq!((x, y, hit), (10, 20, false));
    }

    #[test]
    fn corrupt_entries_are_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        c.get_or_compute("k", &1u32, || Ok(5u32)).unwrap();
        let fp = fingerprint("k", &1u32).unwrap();
        fs::write(c.path("k", &fp), b"{not json").unwrap();
        let (v, hit) = c.get_or_compute("k", &1u32, || Ok(5u32)).unwrap();
        assert_eq!((v, hit), (5, false));
    }
}
