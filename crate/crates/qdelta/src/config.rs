//! Flat `key = value` configuration files.
//!
//! Blank lines and text after `#` are ignored. Vectors are whitespace
//! separated. Instance keys:
//!
//! ```text
//! form = 1 1 -1 0 0 0        # a11 a22 a33 a12 a13 a23
//! m0 = 1
//! p0 = 5
//! h = 1
//! L = 1                      # optional, default 1
//! lambda = 0 0 0             # optional, default 0 0 0
//! weight.center = 1.4142135623730951 0 1
//! weight.radius = 1
//! weight.profile = ball      # ball | box, default ball
//! ```
//!
//! Everything else is read by the consumer through the typed getters.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::arch::{QuadratureSpec, WeightSpec};
use crate::error::{Error, Result};
use crate::instance::{CongruenceDatum, ProblemInstance};
use crate::qform::QForm;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            let value = value.split_whitespace().collect::<Vec<_>>().join(" ");
            if entries.insert(key.to_string(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::MissingField(key.to_string()))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_vec<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{x}`"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn get_array<T: FromStr + Copy + Default, const N: usize>(&self, key: &str) -> Result<Option<[T; N]>> {
        let Some(v) = self.get_vec::<T>(key)? else { return Ok(None) };
        if v.len() != N {
            return Err(Error::Config(format!("`{key}`: expected {N} values, got {}", v.len())));
        }
        let mut out = [T::default(); N];
        out.copy_from_slice(&v);
        Ok(Some(out))
    }

    pub fn require_array<T: FromStr + Copy + Default, const N: usize>(&self, key: &str) -> Result<[T; N]> {
        self.get_array(key)?.ok_or_else(|| Error::MissingField(key.to_string()))
    }

    /// Canonical text: sorted keys, one `key = value` per line. Parsing the
    /// echo gives back an equal config.
    pub fn echo(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn form(&self) -> Result<QForm> {
        QForm::new(self.require_array("form")?)
    }

    pub fn weight(&self) -> Result<WeightSpec> {
        let center: [f64; 3] = self.require_array("weight.center")?;
        let radius: f64 = self.require("weight.radius")?;
        if !(radius > 0.0) {
            return Err(Error::Config(format!("`weight.radius` must be positive, got {radius}")));
        }
        match self.raw("weight.profile").unwrap_or("ball") {
            "ball" => Ok(WeightSpec::ball(center, radius)),
            "box" => Ok(WeightSpec::product(center, radius)),
            other => Err(Error::Config(format!("`weight.profile`: unknown profile `{other}`"))),
        }
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        let form = self.form()?;
        let m0: i64 = self.require("m0")?;
        let p0: u64 = self.require("p0")?;
        let h: u32 = self.require("h")?;
        let l: u64 = self.get_or("L", 1)?;
        let lambda: [i64; 3] = self.get_array("lambda")?.unwrap_or([0; 3]);
        let cong = CongruenceDatum::new(&form, m0, l, lambda)?;
        ProblemInstance::new(form, m0, p0, h, cong, self.weight()?)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        let d = QuadratureSpec::default();
        Ok(QuadratureSpec {
            points_per_radius: self.get_or("quad.points_per_radius", d.points_per_radius)?,
            points_per_period: self.get_or("quad.points_per_period", d.points_per_period)?,
        })
    }
}
