use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single hyperparameter value as written in a config or on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl HyperValue {
    /// `true`/`false`, then integer, then float, else text.
    pub fn parse(s: &str) -> HyperValue {
        let s = s.trim();
        match s {
            "true" => return HyperValue::Bool(true),
            "false" => return HyperValue::Bool(false),
            _ => {}
        }
        if let Ok(i) = s.parse::<i64>() {
            return HyperValue::Int(i);
        }
        match s.parse::<f64>() {
            Ok(f) if f.is_finite() => HyperValue::Float(f),
            _ => HyperValue::Text(s.to_string()),
        }
    }
}

impl std::fmt::Display for HyperValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HyperValue::Bool(b) => write!(f, "{b}"),
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Float(x) => write!(f, "{x}"),
            HyperValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for HyperValue {
    fn from(v: i64) -> Self {
        HyperValue::Int(v)
    }
}

impl From<f64> for HyperValue {
    fn from(v: f64) -> Self {
        HyperValue::Float(v)
    }
}

impl From<bool> for HyperValue {
    fn from(v: bool) -> Self {
        HyperValue::Bool(v)
    }
}

impl From<&str> for HyperValue {
    fn from(v: &str) -> Self {
        HyperValue::Text(v.to_string())
    }
}

/// Typed, consuming view over a hyperparameter map.
pub(crate) struct Params<'a> {
    map: &'a BTreeMap<String, HyperValue>,
    used: BTreeSet<&'a str>,
}

impl<'a> Params<'a> {
    pub(crate) fn new(map: &'a BTreeMap<String, HyperValue>) -> Self {
        Params {
            map,
            used: BTreeSet::new(),
        }
    }

    fn get(&mut self, name: &'a str) -> Option<&'a HyperValue> {
        self.used.insert(name);
        self.map.get(name)
    }

    pub(crate) fn text(&mut self, name: &'a str) -> Result<Option<&'a str>> {
        match self.get(name) {
            None => Ok(None),
            Some(HyperValue::Text(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(Error::param(format!("{name} expects a name, got {v}"))),
        }
    }

    pub(crate) fn count(&mut self, name: &'a str, min: usize) -> Result<Option<usize>> {
        match self.get(name) {
            None => Ok(None),
            Some(HyperValue::Int(i)) if *i >= min as i64 => Ok(Some(*i as usize)),
            Some(v) => Err(Error::param(format!("{name} expects an integer >= {min}, got {v}"))),
        }
    }

    /// Integer or the text `none`.
    pub(crate) fn optional_count(&mut self, name: &'a str, min: usize) -> Result<Option<Option<usize>>> {
        match self.get(name) {
            Some(HyperValue::Text(s)) if s == "none" => Ok(Some(None)),
            None => Ok(None),
            Some(HyperValue::Int(i)) if *i >= min as i64 => Ok(Some(Some(*i as usize))),
            Some(v) => Err(Error::param(format!("{name} expects an integer >= {min} or none, got {v}"))),
        }
    }

    pub(crate) fn positive(&mut self, name: &'a str) -> Result<Option<f64>> {
        let v = match self.get(name) {
            None => return Ok(None),
            Some(HyperValue::Int(i)) => *i as f64,
            Some(HyperValue::Float(f)) => *f,
            Some(v) => return Err(Error::param(format!("{name} expects a number, got {v}"))),
        };
        if v > 0.0 && v.is_finite() {
            Ok(Some(v))
        } else {
            Err(Error::param(format!("{name} must be positive, got {v}")))
        }
    }

    pub(crate) fn flag(&mut self, name: &'a str) -> Result<Option<bool>> {
        match self.get(name) {
            None => Ok(None),
            Some(HyperValue::Bool(b)) => Ok(Some(*b)),
            Some(v) => Err(Error::param(format!("{name} expects true or false, got {v}"))),
        }
    }

    pub(crate) fn raw(&mut self, name: &'a str) -> Option<&'a HyperValue> {
        self.get(name)
    }

    /// Fails on any key not read so far.
    pub(crate) fn finish(self, family: &str) -> Result<()> {
        match self.map.keys().find(|k| !self.used.contains(k.as_str())) {
            Some(k) => Err(Error::param(format!("unknown hyperparameter {k:?} for {family}"))),
            None => Ok(()),
        }
    }
}
