//! Canonical JSON encoding and content hashing.
//!
//! Every machine-readable artifact the engine emits (evidence records,
//! plans, reports, aggregate signals) passes through this module so that
//! equal objects always produce byte-identical output: object keys sorted
//! lexicographically, no insignificant whitespace, floats rendered as the
//! shortest decimal string that round-trips the underlying binary value.
//!
//! One extra rule keeps the encoding injective: `null` is forbidden.
//! Optional fields must be omitted instead of serialized as `null`, and a
//! non-finite float (which serde_json would silently turn into `null`)
//! is rejected as an error.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("non-finite number or null is not canonically representable")]
    NonRepresentable,
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("deserialization failed: {0}")]
    Deserialize(String),
}

/// Canonical JSON bytes of `value`.
pub fn to_canonical_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let tree = to_checked_value(value)?;
    value_to_bytes(&tree)
}

/// Canonical JSON as a `String`.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String, CanonicalError> {
    let bytes = to_canonical_bytes(value)?;
    // canonical output is produced from valid UTF-8 JSON
    Ok(String::from_utf8(bytes).expect("canonical JSON is UTF-8"))
}

/// Decode an object from its canonical (or any valid) JSON encoding.
pub fn from_canonical_bytes<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, CanonicalError> {
    serde_json::from_slice(bytes).map_err(|e| CanonicalError::Deserialize(e.to_string()))
}

/// Lowercase hex SHA-256 of arbitrary bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Lowercase hex SHA-256 of the canonical serialization of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> Result<String, CanonicalError> {
    Ok(sha256_hex(&to_canonical_bytes(value)?))
}

/// Content hash with one top-level field removed before serialization.
///
/// Self-referential hash fields (`report_hash`, `signal_hash`, the record
/// `hash`) are defined as the hash of the object minus the field itself.
pub fn content_hash_excluding<T: Serialize>(
    value: &T,
    field: &str,
) -> Result<String, CanonicalError> {
    let mut tree = to_checked_value(value)?;
    if let Value::Object(map) = &mut tree {
        map.remove(field);
    }
    Ok(sha256_hex(&value_to_bytes(&tree)?))
}

/// True iff `bytes` already are the canonical encoding of the value they
/// decode to. Used by chain verification to reject cosmetic tampering
/// (reordered keys, inserted whitespace, re-rendered numbers).
pub fn is_canonical(bytes: &[u8]) -> bool {
    match serde_json::from_slice::<Value>(bytes) {
        Ok(tree) => match value_to_bytes(&tree) {
            Ok(reencoded) => reencoded == bytes,
            Err(_) => false,
        },
        Err(_) => false,
    }
}

fn to_checked_value<T: Serialize>(value: &T) -> Result<Value, CanonicalError> {
    let tree =
        serde_json::to_value(value).map_err(|e| CanonicalError::Serialize(e.to_string()))?;
    reject_null(&tree)?;
    Ok(tree)
}

fn value_to_bytes(tree: &Value) -> Result<Vec<u8>, CanonicalError> {
    // serde_json's Map is BTreeMap-backed here, so object keys iterate in
    // sorted order; compact writing adds no whitespace; f64 rendering goes
    // through ryu, which emits the shortest round-tripping form.
    serde_json::to_vec(tree).map_err(|e| CanonicalError::Serialize(e.to_string()))
}

fn reject_null(tree: &Value) -> Result<(), CanonicalError> {
    match tree {
        Value::Null => Err(CanonicalError::NonRepresentable),
        Value::Array(items) => items.iter().try_for_each(reject_null),
        Value::Object(map) => map.values().try_for_each(reject_null),
        _ => Ok(()),
    }
}
