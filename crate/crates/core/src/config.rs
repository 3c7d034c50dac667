//! Flat, sectioned `key = value` configuration files.
//!
//! ```text
//! # comment
//! [experiment]
//! kind = design-study-gaussian
//! seed = 7
//!
//! [kernel]
//! family = sqexp
//! lengthscale = 1.0
//! ```
//!
//! Lists are comma separated. Every key must belong to a section. Values are
//! read through a [`Resolver`], which records what was consumed (including
//! defaults) so that unknown keys can be rejected and the fully resolved
//! configuration echoed back.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// A configuration problem, located by line and key where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub section: Option<String>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        match (&self.section, &self.key) {
            (Some(s), Some(k)) => write!(f, "key `{k}` in [{s}]: ")?,
            (Some(s), None) => write!(f, "section [{s}]: ")?,
            _ => {}
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

/// Parsed configuration text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    entries: Vec<Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError {
                line: Some(line_no),
                section: None,
                key: None,
                message,
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header `{line}`")))?
                    .trim();
                if name.is_empty() {
                    return Err(err("empty section name".into()));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            let section = section
                .clone()
                .ok_or_else(|| err(format!("key `{key}` appears before any [section]")))?;
            if let Some(prev) = entries.iter().find(|e| e.section == section && e.key == key) {
                return Err(ConfigError {
                    line: Some(line_no),
                    section: Some(section),
                    key: Some(key.into()),
                    message: format!("duplicate key (first set on line {})", prev.line),
                });
            }
            entries.push(Entry {
                section,
                key: key.to_string(),
                value: value.trim().to_string(),
                line: line_no,
            });
        }
        Ok(ConfigFile { entries })
    }

    /// Raw value of `[section] key`.
    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.section == section && e.key == key)
    }

    /// Sets or replaces a value (used for command-line overrides).
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        match self.entries.iter_mut().find(|e| e.section == section && e.key == key) {
            Some(e) => e.value = value.to_string(),
            None => self.entries.push(Entry {
                section: section.into(),
                key: key.into(),
                value: value.into(),
                line: 0,
            }),
        }
    }
}

/// Typed access to a [`ConfigFile`] that tracks consumed keys.
#[derive(Debug)]
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    used: BTreeSet<(String, String)>,
    resolved: Vec<(String, String, String)>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Resolver {
            file,
            used: BTreeSet::new(),
            resolved: Vec::new(),
        }
    }

    fn error(&self, section: &str, key: &str, message: String) -> ConfigError {
        ConfigError {
            line: self.file.entry(section, key).map(|e| e.line).filter(|l| *l > 0),
            section: Some(section.into()),
            key: Some(key.into()),
            message,
        }
    }

    fn record(&mut self, section: &str, key: &str, value: String) {
        self.used.insert((section.into(), key.into()));
        match self.resolved.iter_mut().find(|(s, k, _)| s == section && k == key) {
            Some(slot) => slot.2 = value,
            None => self.resolved.push((section.into(), key.into(), value)),
        }
    }

    fn parse_one<T: FromStr>(&self, section: &str, key: &str, text: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        text.trim()
            .parse::<T>()
            .map_err(|e| self.error(section, key, format!("cannot parse `{}`: {e}", text.trim())))
    }

    /// Required scalar value.
    pub fn require<T>(&mut self, section: &str, key: &str) -> Result<T, ConfigError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        let text = self
            .file
            .raw(section, key)
            .ok_or_else(|| self.error(section, key, "missing required key".into()))?;
        let v: T = self.parse_one(section, key, text)?;
        self.record(section, key, v.to_string());
        Ok(v)
    }

    /// Scalar value with a default.
    pub fn get<T>(&mut self, section: &str, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        let v = match self.file.raw(section, key) {
            Some(text) => self.parse_one(section, key, text)?,
            None => default,
        };
        self.record(section, key, v.to_string());
        Ok(v)
    }

    /// Optional scalar value without a default.
    pub fn optional<T>(&mut self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        match self.file.raw(section, key) {
            Some(text) => {
                let v: T = self.parse_one(section, key, text)?;
                self.record(section, key, v.to_string());
                Ok(Some(v))
            }
            None => {
                self.used.insert((section.into(), key.into()));
                Ok(None)
            }
        }
    }

    fn parse_list<T>(&self, section: &str, key: &str, text: &str) -> Result<Vec<T>, ConfigError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        text.split(',').map(|s| self.parse_one(section, key, s)).collect()
    }

    fn record_list<T: fmt::Display>(&mut self, section: &str, key: &str, v: &[T]) {
        let s = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        self.record(section, key, s);
    }

    /// Comma-separated list with a default.
    pub fn list<T>(&mut self, section: &str, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        let v = match self.file.raw(section, key) {
            Some(text) => self.parse_list(section, key, text)?,
            None => default,
        };
        self.record_list(section, key, &v);
        Ok(v)
    }

    /// Optional comma-separated list.
    pub fn optional_list<T>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        match self.file.raw(section, key) {
            Some(text) => {
                let v = self.parse_list(section, key, text)?;
                self.record_list(section, key, &v);
                Ok(Some(v))
            }
            None => {
                self.used.insert((section.into(), key.into()));
                Ok(None)
            }
        }
    }

    /// Builds an error attached to `[section] key`.
    pub fn invalid(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        self.error(section, key, message.into())
    }

    /// Positive finite real.
    pub fn positive(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.get(section, key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(self.invalid(section, key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    /// Rejects keys that were never read and returns the resolved text.
    pub fn finish(self) -> Result<String, ConfigError> {
        if let Some(e) = self
            .file
            .entries
            .iter()
            .find(|e| !self.used.contains(&(e.section.clone(), e.key.clone())))
        {
            return Err(ConfigError {
                line: Some(e.line).filter(|l| *l > 0),
                section: Some(e.section.clone()),
                key: Some(e.key.clone()),
                message: "unknown key".into(),
            });
        }
        // Sections in order of first use, keys in the order they were read.
        let mut sections: Vec<&str> = Vec::new();
        for (s, _, _) in &self.resolved {
            if !sections.contains(&s.as_str()) {
                sections.push(s);
            }
        }
        let blocks: Vec<String> = sections
            .iter()
            .map(|section| {
                let mut block = format!("[{section}]\n");
                for (_, k, v) in self.resolved.iter().filter(|(s, _, _)| s == section) {
                    block.push_str(&format!("{k} = {v}\n"));
                }
                block
            })
            .collect();
        Ok(blocks.join("\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# demo\n[experiment]\nkind = regress  # trailing\nseed = 3\n\n[kernel]\nlengthscale = 0.5\nlist = 1, 2,3\n";

    #[test]
    fn parses_sections_and_values() {
        let f = ConfigFile::parse(SAMPLE).unwrap();
        assert_eq!(f.raw("experiment", "kind"), Some("regress"));
        let mut r = Resolver::new(&f);
        assert_eq!(r.require::<String>("experiment", "kind").unwrap(), "regress");
        assert_eq!(r.get("experiment", "seed", 0u64).unwrap(), 3);
        assert_eq!(r.positive("kernel", "lengthscale", 1.0).unwrap(), 0.5);
        assert_eq!(r.list::<f64>("kernel", "list", vec![]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(r.get("kernel", "variance", 2.0).unwrap(), 2.0);
        let resolved = r.finish().unwrap();
        assert!(resolved.contains("[kernel]\nlengthscale = 0.5\nlist = 1,2,3\nvariance = 2\n"));
        // the echo parses back to the same values
        let again = ConfigFile::parse(&resolved).unwrap();
        assert_eq!(again.raw("kernel", "variance"), Some("2"));
    }

    #[test]
    fn unknown_key_is_reported_with_line() {
        let f = ConfigFile::parse(SAMPLE).unwrap();
        let mut r = Resolver::new(&f);
        r.require::<String>("experiment", "kind").unwrap();
        r.get("experiment", "seed", 0u64).unwrap();
        r.get("kernel", "lengthscale", 1.0).unwrap();
        let e = r.finish().unwrap_err();
        assert_eq!(e.line, Some(8));
        assert_eq!(e.key.as_deref(), Some("list"));
        assert_eq!(e.to_string(), "line 8: key `list` in [kernel]: unknown key");
    }

    #[test]
    fn validation_errors_name_the_key() {
        let f = ConfigFile::parse("[kernel]\nlengthscale = -1\nx = abc\n").unwrap();
        let mut r = Resolver::new(&f);
        let e = r.positive("kernel", "lengthscale", 1.0).unwrap_err();
        assert!(e.to_string().contains("lengthscale") && e.to_string().starts_with("line 2"));
        let e = r.get("kernel", "x", 1.0).unwrap_err();
        assert!(e.to_string().contains("`x`"));
        assert!(r.require::<f64>("kernel", "missing").is_err());
    }

    #[test]
    fn malformed_text() {
        assert!(ConfigFile::parse("key = 1\n").is_err());
        assert!(ConfigFile::parse("[a\n").is_err());
        assert!(ConfigFile::parse("[a]\nnovalue\n").is_err());
        let e = ConfigFile::parse("[a]\nk = 1\nk = 2\n").unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn echo_groups_sections_and_reread_keys() {
        let f = ConfigFile::parse("[a]\nx = 1\n[b]\ny = 2\n").unwrap();
        let mut r = Resolver::new(&f);
        r.get("a", "x", 0).unwrap();
        r.get("b", "y", 0).unwrap();
        r.get("a", "x", 0).unwrap();
        r.get("a", "z", 5).unwrap();
        let resolved = r.finish().unwrap();
        assert_eq!(resolved, "[a]\nx = 1\nz = 5\n\n[b]\ny = 2\n");
        assert!(ConfigFile::parse(&resolved).is_ok());
    }

    #[test]
    fn overrides() {
        let mut f = ConfigFile::parse(SAMPLE).unwrap();
        f.set("experiment", "seed", "99");
        f.set("extra", "k", "v");
        assert_eq!(f.raw("experiment", "seed"), Some("99"));
        assert_eq!(f.raw("extra", "k"), Some("v"));
    }
}
