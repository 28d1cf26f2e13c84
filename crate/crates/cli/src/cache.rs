//! Content-addressed artifact cache. Every entry is a payload file plus a
//! SHA-256 checksum; writers hold an exclusive lock on a sidecar file.

use log::warn;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::{self, File, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// The stored entry failed its checksum and was rebuilt.
    Rebuilt,
    Disabled,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Key of an artifact: hash of its kind, parameters and the code version.
pub fn cache_key<P: Serialize>(kind: &str, params: &P) -> String {
    let body = serde_json::json!({ "kind": kind, "params": params, "version": env!("CARGO_PKG_VERSION") });
    sha256_hex(body.to_string().as_bytes())
}

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Cache { dir }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn paths(dir: &Path, kind: &str, key: &str) -> (PathBuf, PathBuf, PathBuf) {
        let stem = format!("{kind}-{}", &key[..16]);
        (dir.join(format!("{stem}.dat")), dir.join(format!("{stem}.sha256")), dir.join(format!("{stem}.lock")))
    }

    fn read_verified(data: &Path, sum: &Path) -> Option<Result<Vec<u8>, ()>> {
        let bytes = fs::read(data).ok()?;
        let expected = fs::read_to_string(sum).ok();
        match expected {
            Some(e) if e.trim() == sha256_hex(&bytes) => Some(Ok(bytes)),
            _ => Some(Err(())),
        }
    }

    /// Load the artifact for (kind, params), or build and store it. `encode`
    /// and `decode` convert between the value and the stored bytes.
    pub fn load_or_build<P, T, E>(
        &self,
        kind: &str,
        params: &P,
        build: impl FnOnce() -> Result<T, E>,
        encode: impl Fn(&T) -> Vec<u8>,
        decode: impl Fn(&[u8]) -> Option<T>,
    ) -> Result<(T, CacheStatus), E>
    where
        P: Serialize,
        E: From<io::Error>,
    {
        let Some(dir) = &self.dir else {
            return Ok((build()?, CacheStatus::Disabled));
        };
        fs::create_dir_all(dir)?;
        let key = cache_key(kind, params);
        let (data, sum, lock) = Self::paths(dir, kind, &key);
        let lock_file: File = OpenOptions::new().create(true).truncate(false).write(true).open(&lock)?;
        lock_file.lock()?;
        let mut status = CacheStatus::Miss;
        match Self::read_verified(&data, &sum) {
            Some(Ok(bytes)) => match decode(&bytes) {
                Some(v) => return Ok((v, CacheStatus::Hit)),
                None => {
                    warn!("cache entry {} does not decode, rebuilding", data.display());
                    status = CacheStatus::Rebuilt;
                }
            },
            Some(Err(())) => {
                warn!("cache entry {} failed its checksum, rebuilding", data.display());
                status = CacheStatus::Rebuilt;
            }
            None => {}
        }
        let value = build()?;
        let bytes = encode(&value);
        let tmp = data.with_extension("tmp");
        fs::write(&tmp, &bytes)?;
        fs::rename(&tmp, &data)?;
        fs::write(&sum, sha256_hex(&bytes))?;
        drop(lock_file);
        Ok((value, status))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(calls: &mut u32) -> Result<Vec<u32>, io::Error> {
        *calls += 1;
        Ok(vec![1, 2, 3])
    }

    fn enc(v: &Vec<u32>) -> Vec<u8> {
        serde_json::to_vec(v).unwrap()
    }

    fn dec(b: &[u8]) -> Option<Vec<u32>> {
        serde_json::from_slice(b).ok()
    }

    #[test]
    fn hit_miss_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path().to_path_buf()));
        let mut calls = 0;
        let (_, s) = cache.load_or_build("t", &1.5, || build(&mut calls), enc, dec).unwrap();
        assert_eq!(s, CacheStatus::Miss);
        let (v, s) = cache.load_or_build("t", &1.5, || build(&mut calls), enc, dec).unwrap();
        assert_eq!((s, v, calls), (CacheStatus::Hit, vec![1, 2, 3], 1));
        let (_, s) = cache.load_or_build("t", &2.0, || build(&mut calls), enc, dec).unwrap();
        assert_eq!(s, CacheStatus::Miss);
        let (data, _, _) = Cache::paths(dir.path(), "t", &cache_key("t", &1.5));
        fs::write(&data, b"[9,9]").unwrap();
        let (v, s) = cache.load_or_build("t", &1.5, || build(&mut calls), enc, dec).unwrap();
        assert_eq!((s, v), (CacheStatus::Rebuilt, vec![1, 2, 3]));
        let (_, s) = cache.load_or_build("t", &1.5, || build(&mut calls), enc, dec).unwrap();
        assert_eq!(s, CacheStatus::Hit);
    }

    #[test]
    fn key_depends_on_params() {
        assert_ne!(cache_key("a", &1.5), cache_key("a", &1.6));
        assert_ne!(cache_key("a", &1.5), cache_key("b", &1.5));
        assert_eq!(cache_key("a", &1.5), cache_key("a", &1.5));
    }
}
