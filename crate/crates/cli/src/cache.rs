//! Append-only JSON-lines result cache.
//!
//! One record per completed experiment, keyed by a content hash of the
//! experiment description plus the crate version. Lookups scan the whole
//! file; corrupt lines (including a torn final line from an interrupted
//! append) are skipped and counted, never fatal.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub command: String,
    pub version: String,
    /// Wall-clock metadata only; payloads stay timestamp-free so identical
    /// experiments render byte-identically.
    pub created_unix: u64,
    pub payload: serde_json::Value,
}

/// Content hash of an experiment description, versioned so stale results
/// are not served across releases.
pub fn cache_key(description: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(description.as_bytes());
    hasher.update(b"\n");
    hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Latest payload stored under `key`, plus the number of corrupt lines
/// skipped along the way.
pub fn lookup(path: &Path, key: &str) -> std::io::Result<(Option<serde_json::Value>, usize)> {
    if !path.exists() {
        return Ok((None, 0));
    }
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut hit = None;
    let mut skipped = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CacheRecord>(&line) {
            Ok(record) => {
                if record.key == key {
                    hit = Some(record.payload);
                }
            }
            Err(_) => skipped += 1,
        }
    }
    Ok((hit, skipped))
}

pub fn append(path: &Path, command: &str, key: &str, payload: &serde_json::Value) -> std::io::Result<()> {
    let record = CacheRecord {
        key: key.to_owned(),
        command: command.to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        payload: payload.clone(),
    };
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(&record).expect("serializable record");
    writeln!(file, "{line}")?;
    Ok(())
}
