use std::fmt;
use std::path::Path;

use crn_relay::{
    derive_stats, parse_rational, LinkStats, PowerConstraints, RateSet, Rational, Scheme,
    SystemGeometry,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// A number, or a string such as `"inf"`, `"3/4"` or `"1.75"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Str(String),
}

impl Value {
    fn as_f64(&self, what: &str) -> Result<f64, CliError> {
        match self {
            Value::Num(x) => Ok(*x),
            Value::Str(s) if s.eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            Value::Str(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("{what}: cannot read {s:?} as a number"))),
        }
    }

    /// Exact value; floats go through their shortest decimal representation.
    fn as_rational(&self, what: &str) -> Result<Rational, CliError> {
        let text = match self {
            Value::Num(x) if x.is_finite() => x.to_string(),
            Value::Num(x) => return Err(CliError::Input(format!("{what}: {x} is not a rate"))),
            Value::Str(s) => s.clone(),
        };
        parse_rational(&text).map_err(|e| CliError::Input(format!("{what}: {e}")))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d1p: f64,
    pub d2p: f64,
    #[serde(default = "default_alpha_pl")]
    pub alpha_pl: f64,
}

fn default_alpha_pl() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Powers {
    /// Peak transmit SNR in dB, or `"inf"` for the interference-limited regime.
    pub gamma_max_db: Value,
    pub gamma_p_db: f64,
}

/// Either explicit rate lists or `levels` uniform steps, multiplied by `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link1: Option<Vec<Value>>,
    /// Defaults to `link1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link2: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeChoice {
    #[serde(rename = "1", alias = "relay-only")]
    One,
    #[serde(rename = "2", alias = "alamouti")]
    Two,
    #[serde(rename = "both")]
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> &'static [Scheme] {
        match self {
            SchemeChoice::One => &[Scheme::RelayOnly],
            SchemeChoice::Two => &[Scheme::Alamouti],
            SchemeChoice::Both => &Scheme::BOTH,
        }
    }
}

impl std::str::FromStr for SchemeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "1" => Ok(SchemeChoice::One),
            "2" => Ok(SchemeChoice::Two),
            "both" => Ok(SchemeChoice::Both),
            _ => Err(format!("expected 1, 2 or both, got {s:?}")),
        }
    }
}

fn default_scheme() -> SchemeChoice {
    SchemeChoice::Both
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    #[serde(default = "default_slots")]
    pub slots: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Defaults to 1% of `slots`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default = "default_replications")]
    pub replications: u64,
}

fn default_slots() -> u64 {
    1_000_000
}

fn default_seed() -> u64 {
    1
}

fn default_replications() -> u64 {
    1
}

impl Default for SimBlock {
    fn default() -> Self {
        SimBlock {
            slots: default_slots(),
            seed: default_seed(),
            warmup: None,
            replications: default_replications(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<Value>,
}

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 9] =
    ["gamma_p_db", "gamma_max_db", "scale", "d1", "d2", "d3", "d1p", "d2p", "alpha_pl"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub powers: Powers,
    pub rates: Rates,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeChoice,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

/// Module inputs for one evaluation point.
#[derive(Debug, Clone)]
pub struct System {
    pub stats: LinkStats,
    pub rates: RateSet,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg: ExperimentConfig = if is_toml {
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        self.system()?;
        if self.sim.slots == 0 || self.sim.replications == 0 {
            return Err(CliError::Input("sim.slots and sim.replications must be positive".into()));
        }
        if let Some(s) = &self.sweep {
            if !SWEEP_PARAMETERS.contains(&s.parameter.as_str()) {
                return Err(CliError::Input(format!(
                    "unknown sweep parameter {:?}; expected one of {}",
                    s.parameter,
                    SWEEP_PARAMETERS.join(", ")
                )));
            }
            if s.values.is_empty() {
                return Err(CliError::Input("sweep.values is empty".into()));
            }
            for v in &s.values {
                self.with_parameter(&s.parameter, v)?.system()?;
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn gamma_max_db(&self) -> Result<f64, CliError> {
        self.powers.gamma_max_db.as_f64("powers.gamma_max_db")
    }

    pub fn rate_set(&self) -> Result<RateSet, CliError> {
        let r = &self.rates;
        let scale = match &r.scale {
            Some(v) => v.as_rational("rates.scale")?,
            None => Rational::from_integer(1.into()),
        };
        let list = |vals: &[Value], what: &str| -> Result<Vec<Rational>, CliError> {
            vals.iter().map(|v| Ok(v.as_rational(what)? * &scale)).collect()
        };
        let set = match (&r.link1, &r.link2, r.levels) {
            (Some(l1), l2, None) => {
                let r1 = list(l1, "rates.link1")?;
                let r2 = match l2 {
                    Some(l2) => list(l2, "rates.link2")?,
                    None => r1.clone(),
                };
                RateSet::new(r1, r2)
            }
            (None, None, Some(k)) => RateSet::uniform(k, scale),
            _ => {
                return Err(CliError::Input(
                    "rates: give either link1 (and optionally link2) or levels".into(),
                ))
            }
        };
        set.map_err(|e| CliError::Input(format!("rates: {e}")))
    }

    pub fn system(&self) -> Result<System, CliError> {
        let g = &self.geometry;
        let geom = SystemGeometry {
            d1: g.d1,
            d2: g.d2,
            d3: g.d3,
            d1p: g.d1p,
            d2p: g.d2p,
            alpha_pl: g.alpha_pl,
        };
        let gm = self.gamma_max_db()?;
        let gamma_max_db = if gm == f64::INFINITY { None } else { Some(gm) };
        if gm.is_nan() || gm == f64::NEG_INFINITY {
            return Err(CliError::Input(format!("powers.gamma_max_db: {gm} is not allowed")));
        }
        let powers = PowerConstraints::from_db(gamma_max_db, self.powers.gamma_p_db);
        let stats = derive_stats(&geom, &powers).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(System {
            stats,
            rates: self.rate_set()?,
        })
    }

    /// A copy with one sweep parameter replaced.
    pub fn with_parameter(&self, name: &str, v: &Value) -> Result<Self, CliError> {
        let mut c = self.clone();
        c.sweep = None;
        let num = || v.as_f64(name);
        match name {
            "gamma_p_db" => c.powers.gamma_p_db = num()?,
            "gamma_max_db" => c.powers.gamma_max_db = v.clone(),
            "scale" => {
                v.as_rational(name)?;
                c.rates.scale = Some(v.clone());
            }
            "d1" => c.geometry.d1 = num()?,
            "d2" => c.geometry.d2 = num()?,
            "d3" => c.geometry.d3 = num()?,
            "d1p" => c.geometry.d1p = num()?,
            "d2p" => c.geometry.d2p = num()?,
            "alpha_pl" => c.geometry.alpha_pl = num()?,
            other => return Err(CliError::Input(format!("unknown sweep parameter {other:?}"))),
        }
        Ok(c)
    }
}
