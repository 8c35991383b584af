//! Flat `key = value` text, shared by ENVI headers, raster sidecars and
//! pipeline config files.
//!
//! Keys are case-insensitive and have internal whitespace collapsed, so
//! `Data  Type` and `data type` name the same entry. Values wrapped in braces
//! may span several lines. Lines starting with `;` or `#` are comments.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KeyValueError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unterminated `{{` list")]
    Unterminated { line: usize },
}

pub(crate) fn normalize_key(key: &str) -> String {
    key.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_lowercase()
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, KeyValueError> {
        let mut entries = BTreeMap::new();
        let mut lines = text.lines().enumerate();
        while let Some((idx, raw)) = lines.next() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
                continue;
            }
            // ENVI magic line.
            if idx == 0 && line.eq_ignore_ascii_case("envi") {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(KeyValueError::Malformed { line: idx + 1 });
            };
            let mut value = value.trim().to_string();
            if value.starts_with('{') {
                while !value.contains('}') {
                    match lines.next() {
                        Some((_, more)) => {
                            value.push(' ');
                            value.push_str(more.trim());
                        }
                        None => return Err(KeyValueError::Unterminated { line: idx + 1 }),
                    }
                }
            }
            entries.insert(normalize_key(key), value);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(&normalize_key(key))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(normalize_key(key), value.into());
    }
}

/// Splits `{a, b, c}` (or a bare `a, b, c`) into trimmed items.
pub fn split_list(value: &str) -> Vec<&str> {
    let inner = value
        .trim()
        .trim_start_matches('{')
        .trim_end_matches('}')
        .trim();
    if inner.is_empty() {
        return Vec::new();
    }
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}
