use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{io_at, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(io_at(path))?))
}

/// Digest of a value's JSON form. Struct fields serialize in declaration
/// order, so equal values always hash equally.
pub fn json_digest<T: serde::Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("plain data serializes"))
}
