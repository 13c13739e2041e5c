//! Flat key-value serialization of integrand specifications.
//!
//! The document is line-oriented: `key = value` pairs, `#` comments, blank
//! lines ignored. `name` selects the family; numeric values go to the
//! parameter map, everything else to the expression-field map. Serialization
//! emits `name` first and the maps in key order, so parse(serialize(s)) == s.

use super::{example_library, Integrand};
use crate::error::{Error, Result};
use crate::geometry::BoxN;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub fields: BTreeMap<String, String>,
}

impl IntegrandSpec {
    pub fn new(name: &str) -> Self {
        IntegrandSpec { name: name.into(), params: BTreeMap::new(), fields: BTreeMap::new() }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn with_field(mut self, key: &str, value: &str) -> Self {
        self.fields.insert(key.into(), value.into());
        self
    }

    pub fn build(&self, domain: BoxN) -> Result<Integrand> {
        example_library(&self.name, &self.params, &self.fields, domain)
    }

    pub fn to_kv(&self) -> String {
        let mut out = format!("name = {}\n", self.name);
        for (k, v) in &self.params {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (k, v) in &self.fields {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn parse_kv(src: &str) -> Result<IntegrandSpec> {
        let mut name = None;
        let mut params = BTreeMap::new();
        let mut fields = BTreeMap::new();
        for (lineno, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "name" {
                name = Some(value.to_string());
            } else if let Ok(v) = value.parse::<f64>() {
                params.insert(key.to_string(), v);
            } else {
                fields.insert(key.to_string(), value.to_string());
            }
        }
        Ok(IntegrandSpec {
            name: name.ok_or_else(|| Error::Parse("missing `name` entry".into()))?,
            params,
            fields,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let spec = IntegrandSpec::new("double-phase")
            .with_param("p", 2.0)
            .with_param("q", 2.5)
            .with_field("weight", "qdist(0)^1");
        let text = spec.to_kv();
        let back = IntegrandSpec::parse_kv(&text).unwrap();
        assert_eq!(spec, back);
        assert_eq!(back.to_kv(), text);
    }

    #[test]
    fn kv_rejects_missing_name() {
        assert!(IntegrandSpec::parse_kv("p = 2\n").is_err());
    }
}
