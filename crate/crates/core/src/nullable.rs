//! Serde adapter writing non-finite floats as `null`. A `null` reads back as
//! `+∞`, the only non-finite value the library produces on purpose.

use serde::{Deserialize, Deserializer, Serializer};

pub(crate) fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub(crate) fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    match finite(*v) {
        Some(x) => s.serialize_f64(x),
        None => s.serialize_none(),
    }
}

pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}
