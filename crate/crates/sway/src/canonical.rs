//! Canonical JSON: object keys sorted, compact, shortest round-trip floats.

use serde::Serialize;

/// Serializes `value` canonically. Keys are sorted because values pass
/// through `serde_json::Value`, whose maps are ordered.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&v)
}

pub fn to_canonical_vec<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    to_canonical_string(value).map(String::into_bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_are_sorted_at_every_level() {
        let mut inner = HashMap::new();
        inner.insert("zeta", 1.5);
        inner.insert("alpha", 0.1);
        let mut outer = HashMap::new();
        outer.insert("b", inner.clone());
        outer.insert("a", inner);
        assert_eq!(to_canonical_string(&outer).unwrap(), r#"{"a":{"alpha":0.1,"zeta":1.5},"b":{"alpha":0.1,"zeta":1.5}}"#);
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1f64, 1.0 / 3.0, 1e-300, 123456789.125, -0.0] {
            let s = to_canonical_string(&v).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
