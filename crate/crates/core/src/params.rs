//! Model parameters and the flat key-value configuration format.
//!
//! A configuration file is a list of `key = value` lines. Blank lines and
//! lines starting with `#` are ignored. Recognised model keys are `k`, `nu`,
//! `delta`, `beta`, `y`, `c`, `gamma`, `xbar` and `fn`; any other key is kept
//! in the [`KeyValues`] map for front ends to interpret.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::verification::{Family, Verification};

/// Diffusion and preference parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Meetings per instant.
    pub k: u32,
    /// Transmission rate per meeting.
    pub nu: f64,
    /// Death (forgetting) rate.
    pub delta: f64,
    /// Probability that a meeting is with someone of the same bias group.
    pub beta: f64,
    /// Prior that one's own bias is the true state.
    pub y: f64,
    /// Marginal cost of verification effort.
    pub c: f64,
    /// Fraction of partisans in each group.
    pub gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            k: 4,
            nu: 0.05,
            delta: 0.1,
            beta: 0.6,
            y: 0.88,
            c: 0.1,
            gamma: 0.0,
        }
    }
}

impl ModelParams {
    pub fn new(k: u32, nu: f64, delta: f64, beta: f64, y: f64, c: f64, gamma: f64) -> Result<Self> {
        let params = Self {
            k,
            nu,
            delta,
            beta,
            y,
            c,
            gamma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: &str) -> Error {
            Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            }
        }
        if self.k == 0 {
            return Err(bad("k", "must be a positive integer"));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(bad("nu", "must be finite and > 0"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(bad("delta", "must be finite and > 0"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(bad("beta", "must lie in [0, 1]"));
        }
        if !(self.y > 0.5 && self.y < 1.0) {
            return Err(bad("y", "must lie in (0.5, 1)"));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(bad("c", "must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(bad("gamma", "must lie in [0, 1)"));
        }
        let lambda = self.lambda();
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(bad("nu", "effective diffusion rate nu/delta must be finite"));
        }
        Ok(())
    }

    /// Effective diffusion rate `nu / delta`.
    pub fn lambda(&self) -> f64 {
        self.nu / self.delta
    }

    pub fn lambda_k(&self) -> f64 {
        self.lambda() * f64::from(self.k)
    }

    /// Returns a copy whose `nu` is chosen so that `lambda * k` equals `target`.
    pub fn with_lambda_k(&self, target: f64) -> Self {
        Self {
            nu: target * self.delta / f64::from(self.k),
            ..*self
        }
    }

    /// Checks that at most one message per agent and step is a sound approximation.
    pub fn check_step(&self, dt: f64) -> Result<()> {
        let load = f64::from(self.k) * self.nu * dt;
        if !(dt > 0.0 && load < 1.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("k*nu*dt = {load} must be < 1"),
            });
        }
        Ok(())
    }

    /// Soft warnings: admissible values outside the range the model is usually studied in.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.beta < 0.5 {
            out.push(format!("beta = {} < 0.5 (heterophilous mixing)", self.beta));
        }
        if self.lambda_k() <= 1.0 {
            out.push(format!(
                "lambda*k = {} <= 1: information dies out",
                self.lambda_k()
            ));
        }
        out
    }
}

/// Verification rates: `l` for messages in line with one's bias, `h` for messages against it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub l: f64,
    pub h: f64,
}

impl Rates {
    pub const ZERO: Rates = Rates { l: 0.0, h: 0.0 };

    pub fn new(l: f64, h: f64) -> Self {
        Self { l, h }
    }

    pub fn check_unit(&self) -> Result<()> {
        for (name, value) in [("l", self.l), ("h", self.h)] {
            if !value.is_finite() {
                return Err(Error::NonFinite(name));
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{value} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }

    /// Rates scaled by `factor`, e.g. the effective rates `(1 - gamma) * (l, h)`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            l: self.l * factor,
            h: self.h * factor,
        }
    }

    pub fn distance(&self, other: &Rates) -> f64 {
        (self.l - other.l).abs().max((self.h - other.h).abs())
    }
}

/// Parsed `key = value` pairs in file order-independent form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(pub BTreeMap<String, String>);

impl KeyValues {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.insert(key.into(), value.into());
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("cannot parse `{key}` from `{raw}`"))),
        }
    }
}

impl FromStr for KeyValues {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            let value = value.trim().trim_matches('"');
            map.insert(key.to_string(), value.to_string());
        }
        Ok(KeyValues(map))
    }
}

/// Model parameters together with the verification technology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub params: ModelParams,
    pub family: Family,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            family: Family::exp_no_cap(),
        }
    }
}

impl ModelSpec {
    /// Overlays the recognised keys of `kv` on top of `self`.
    pub fn overlay(mut self, kv: &KeyValues) -> Result<Self> {
        let p = &mut self.params;
        if let Some(v) = kv.parse("k")? {
            p.k = v;
        }
        if let Some(v) = kv.parse("nu")? {
            p.nu = v;
        }
        if let Some(v) = kv.parse("delta")? {
            p.delta = v;
        }
        if let Some(v) = kv.parse("beta")? {
            p.beta = v;
        }
        if let Some(v) = kv.parse("y")? {
            p.y = v;
        }
        if let Some(v) = kv.parse("c")? {
            p.c = v;
        }
        if let Some(v) = kv.parse("gamma")? {
            p.gamma = v;
        }
        let x_bar: Option<f64> = kv.parse("xbar")?;
        let name = kv.get("fn");
        if name.is_some() || x_bar.is_some() {
            let name = name.unwrap_or(self.family.name());
            let x_bar = x_bar.unwrap_or(self.family.cap());
            self.family = Family::from_name(name, x_bar)?;
        }
        self.params.validate()?;
        Ok(self)
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        Self::default().overlay(kv)
    }

    /// Serialises back to the flat key-value format.
    pub fn to_config_string(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let _ = writeln!(out, "k = {}", p.k);
        let _ = writeln!(out, "nu = {:?}", p.nu);
        let _ = writeln!(out, "delta = {:?}", p.delta);
        let _ = writeln!(out, "beta = {:?}", p.beta);
        let _ = writeln!(out, "y = {:?}", p.y);
        let _ = writeln!(out, "c = {:?}", p.c);
        let _ = writeln!(out, "gamma = {:?}", p.gamma);
        let _ = writeln!(out, "xbar = {:?}", self.family.cap());
        let _ = writeln!(out, "fn = {}", self.family.name());
        out
    }
}
