use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Content-addressed file store; the key of a blob is its SHA-256 in hex.
#[derive(Debug, Clone)]
pub struct BlobStore {
    dir: PathBuf,
}

pub fn content_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn is_valid_id(id: &str) -> bool {
    id.len() == 64 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl BlobStore {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(id)
    }

    /// Writes through a temporary file and a rename, so a blob is either
    /// absent or complete.
    pub fn put(&self, bytes: &[u8]) -> io::Result<String> {
        let id = content_id(bytes);
        let target = self.path(&id);
        if target.exists() {
            return Ok(id);
        }
        let tmp = self.dir.join(format!(".tmp-{}", uuid::Uuid::new_v4().simple()));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        sync_dir(&self.dir)?;
        Ok(id)
    }

    pub fn get(&self, id: &str) -> io::Result<Vec<u8>> {
        if !is_valid_id(id) {
            return Err(io::Error::new(io::ErrorKind::NotFound, "not a blob id"));
        }
        fs::read(self.path(id))
    }

    pub fn contains(&self, id: &str) -> bool {
        is_valid_id(id) && self.path(id).is_file()
    }
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    #[cfg(unix)]
    {
        File::open(dir)?.sync_all()?;
    }
    #[cfg(not(unix))]
    let _ = dir;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_dedup() {
        let dir = tempfile::tempdir().unwrap();
        let store = BlobStore::open(dir.path()).unwrap();
        let a = store.put(b"hello").unwrap();
        assert_eq!(a, store.put(b"hello").unwrap());
        assert_eq!(store.get(&a).unwrap(), b"hello");
        assert!(store.contains(&a));
        assert_eq!(
            a,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
    }

    #[test]
    fn rejects_path_like_ids() {
        let dir = tempfile::tempdir().unwrap();
        let store = BlobStore::open(dir.path()).unwrap();
        assert!(store.get("../etc/passwd").is_err());
        assert!(!store.contains("abc"));
    }
}
