//! Flat key-value configuration with dotted keys.
//!
//! Files hold one `key = value` pair per line (`#` comments). The CLI maps
//! `--key value` flags onto the same namespace, applied after the file so
//! flags override it. Readers mark keys as consumed; leftover keys are
//! config errors, so typos abort before any run.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct KvConfig {
    map: BTreeMap<String, String>,
    consumed: RefCell<BTreeSet<String>>,
}

impl KvConfig {
    pub fn new() -> KvConfig {
        KvConfig::default()
    }

    pub fn parse(text: &str) -> Result<KvConfig> {
        let mut cfg = KvConfig::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        if let Some(v) = self.map.get(key) {
            self.consumed.borrow_mut().insert(key.to_string());
            Some(v.as_str())
        } else {
            None
        }
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: expected integer, got {v:?}"))),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: expected integer, got {v:?}"))),
        }
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: expected number, got {v:?}"))),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("on") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("off") | Some("no") => Ok(false),
            Some(v) => Err(Error::Config(format!("{key}: expected boolean, got {v:?}"))),
        }
    }

    /// Seed lists: either a closed range `a..b` (exclusive end) or a comma
    /// list `1,2,3`.
    pub fn get_seeds(&self, key: &str, default: &[u64]) -> Result<Vec<u64>> {
        let Some(v) = self.get(key) else {
            return Ok(default.to_vec());
        };
        if let Some((a, b)) = v.split_once("..") {
            let a: u64 = a
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad range start {a:?}")))?;
            let b: u64 = b
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad range end {b:?}")))?;
            if b <= a {
                return Err(Error::Config(format!("{key}: empty range {v:?}")));
            }
            return Ok((a..b).collect());
        }
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: bad seed {s:?}")))
            })
            .collect()
    }

    /// Comma-separated float list.
    pub fn get_f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let Some(v) = self.get(key) else {
            return Ok(default.to_vec());
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: bad number {s:?}")))
            })
            .collect()
    }

    /// `x,y` pair.
    pub fn get_point(&self, key: &str) -> Result<Option<(f64, f64)>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let (x, y) = v
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("{key}: expected x,y, got {v:?}")))?;
        Ok(Some((
            x.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad x in {v:?}")))?,
            y.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad y in {v:?}")))?,
        )))
    }

    /// Keys never read by any consumer; non-empty means a config error.
    pub fn unused_keys(&self) -> Vec<String> {
        let consumed = self.consumed.borrow();
        self.map
            .keys()
            .filter(|k| !consumed.contains(*k))
            .cloned()
            .collect()
    }

    pub fn reject_unused(&self) -> Result<()> {
        let unused = self.unused_keys();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unknown configuration keys: {}",
                unused.join(", ")
            )))
        }
    }
}

/// Parse CLI arguments of the form `--key value` or `--key=value` into
/// overrides on top of an optional `--config <file>`.
pub fn from_cli_args(args: &[String]) -> Result<KvConfig> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut config_path: Option<String> = None;
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --key, got {arg:?}")))?;
        let (key, value) = if let Some((k, v)) = key.split_once('=') {
            (k.to_string(), v.to_string())
        } else {
            let v = args
                .get(i + 1)
                .ok_or_else(|| Error::Config(format!("flag --{key} is missing a value")))?;
            i += 1;
            (key.to_string(), v.clone())
        };
        if key == "config" {
            config_path = Some(value);
        } else {
            pairs.push((key, value));
        }
        i += 1;
    }
    let mut cfg = match config_path {
        Some(path) => KvConfig::parse(&std::fs::read_to_string(&path)?)?,
        None => KvConfig::new(),
    };
    for (k, v) in pairs {
        cfg.set(&k, &v);
    }
    Ok(cfg)
}
