//! Flat `key = value` files with `[section]` headers, used for configs and run manifests.

use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sections and keys are kept sorted so written files are stable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self> {
        let mut ini = Ini::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(i + 1, "section header must end with `]`"))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::parse(i + 1, "empty section name"));
                }
                section = name.to_string();
                ini.sections.entry(section.clone()).or_default();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(i + 1, "empty key"));
            }
            let entry = ini.sections.entry(section.clone()).or_default();
            if entry.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::parse(i + 1, format!("duplicate key `{k}` in section [{section}]")));
            }
        }
        Ok(ini)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Parsed value, `None` when absent; unparseable values are argument errors.
    pub fn get_parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::argument(format!("[{section}] {key}: cannot parse `{v}`"))),
        }
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Display) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    /// Every key that is not in `allowed` (as `(section, key)`).
    pub fn unknown_keys(&self, allowed: &[(&str, &str)]) -> Vec<String> {
        let mut out = Vec::new();
        for (s, keys) in &self.sections {
            for k in keys.keys() {
                if !allowed.iter().any(|(a, b)| a == s && b == k) {
                    out.push(format!("[{s}] {k}"));
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, keys) in &self.sections {
            if keys.is_empty() {
                continue;
            }
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{s}]");
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}
