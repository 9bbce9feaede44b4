//! Flat `key = value` configuration files with `[section]` headers.
//!
//! ```text
//! # comment
//! [section]
//! key = value   # trailing comment
//! ```
//!
//! Keys are unique within a section. Lookups report the line of the
//! offending entry; unknown sections and keys are rejected by
//! [`ConfigDocument::check_known`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ConfigDocument {
    source: String,
    entries: BTreeMap<(String, String), Entry>,
    sections: BTreeMap<String, usize>,
}

impl ConfigDocument {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut doc = ConfigDocument {
            source: source.to_string(),
            ..Default::default()
        };
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| doc.error(line, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(doc.error(line, "empty section name"));
                }
                if doc.sections.insert(name.to_string(), line).is_some() {
                    return Err(doc.error(line, &format!("section [{name}] repeated")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(sec) = section.clone() else {
                return Err(doc.error(line, "entry before any [section] header"));
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| doc.error(line, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(doc.error(line, "empty key"));
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line,
            };
            if doc
                .entries
                .insert((sec.clone(), key.to_string()), entry)
                .is_some()
            {
                return Err(doc.error(line, &format!("key `{key}` repeated in [{sec}]")));
            }
        }
        Ok(doc)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn error(&self, line: usize, message: &str) -> Error {
        Error::Parse {
            path: self.source.clone(),
            line,
            message: message.to_string(),
        }
    }

    /// Rejects sections and keys not listed in `known`.
    pub fn check_known(&self, known: &[(&str, &[&str])]) -> Result<()> {
        for (name, line) in &self.sections {
            if !known.iter().any(|(s, _)| s == name) {
                return Err(self.error(*line, &format!("unknown section [{name}]")));
            }
        }
        for ((sec, key), e) in &self.entries {
            let keys = known
                .iter()
                .find(|(s, _)| s == sec)
                .map(|(_, k)| *k)
                .unwrap_or(&[]);
            let ok = keys.iter().any(|k| {
                k == key
                    || k.strip_suffix('*')
                        .is_some_and(|prefix| key.starts_with(prefix))
            });
            if !ok {
                return Err(self.error(e.line, &format!("unknown key `{key}` in [{sec}]")));
            }
        }
        Ok(())
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|e| (e.value.as_str(), e.line))
    }

    /// Keys of `section` beginning with `prefix`, with the prefix removed.
    pub fn keys_with_prefix<'a>(
        &'a self,
        section: &'a str,
        prefix: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a str, usize)> + 'a {
        self.entries.iter().filter_map(move |((s, k), e)| {
            if s != section {
                return None;
            }
            k.strip_prefix(prefix)
                .map(|rest| (rest, e.value.as_str(), e.line))
        })
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.raw(section, key)
            .map(|(v, line)| self.parse_f64(v, line, key))
            .transpose()
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(section, key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.raw(section, key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| {
                self.error(
                    line,
                    &format!("`{key}` expects a non-negative integer, got `{v}`"),
                )
            }),
        }
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, section: &str, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => {
                let list = v
                    .split(',')
                    .map(|s| self.parse_f64(s.trim(), line, key))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some((list, line)))
            }
        }
    }

    pub fn parse_f64(&self, v: &str, line: usize, key: &str) -> Result<f64> {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.error(line, &format!("`{key}` expects a finite number, got `{v}`"))),
        }
    }
}
