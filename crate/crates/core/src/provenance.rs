//! Configuration hashing for output provenance.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of the canonical JSON serialization of `value`.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("configuration types serialize infallibly");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn stable_and_sensitive() {
        let a = super::digest(&[1.0, 2.0]);
        assert_eq!(a, super::digest(&[1.0, 2.0]));
        assert_ne!(a, super::digest(&[1.0, 2.5]));
        assert_eq!(a.len(), 64);
    }
}
