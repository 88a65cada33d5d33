//! The JSON run configuration, flag overrides, and the hash stamped on outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{LatticeContext, Momentum, Normalization};
use crate::model::{Conventions, DispersionMode, Model};
use crate::mollifier::KroneckerConvention;
use crate::potential::Potential;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub d: usize,
    #[serde(rename = "p_F")]
    pub p_f: f64,
    pub r: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub k: Momentum,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `V̂ = amplitude` on `1 <= |k| <= radius`; `radius` defaults to the lattice `r`.
    Indicator {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<i64>,
    },
    Table { radius: i64, values: Vec<TableEntry> },
}

fn default_m() -> f64 {
    6.0
}

fn default_c() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub kronecker: KroneckerConvention,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub dispersion: DispersionMode,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(rename = "C", default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lattice: LatticeConfig { d: 3, p_f: 10.0, r: 1 },
            potential: PotentialConfig::Indicator { amplitude: 1.0, radius: None },
            kronecker: KroneckerConvention::default(),
            normalization: Normalization::default(),
            dispersion: DispersionMode::default(),
            m: default_m(),
            c: default_c(),
            seed: 0,
        }
    }
}

/// Values given on the command line; each one replaces the config entry.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub d: Option<usize>,
    pub p_f: Option<f64>,
    pub r: Option<i64>,
    pub potential: Option<PotentialConfig>,
    pub amplitude: Option<f64>,
    pub kronecker: Option<KroneckerConvention>,
    pub normalization: Option<Normalization>,
    pub dispersion: Option<DispersionMode>,
    pub m: Option<f64>,
    pub c: Option<f64>,
    pub seed: Option<u64>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    from_commented_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Parses JSON after dropping leading `#` lines.
pub fn from_commented_json<T: for<'de> Deserialize<'de>>(text: &str) -> serde_json::Result<T> {
    let body: String = text.lines().skip_while(|l| l.starts_with('#')).collect::<Vec<_>>().join("\n");
    serde_json::from_str(&body)
}

impl RunConfig {
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => read_json(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(ov)?;
        Ok(cfg)
    }

    fn apply(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(d) = ov.d {
            self.lattice.d = d;
        }
        if let Some(p) = ov.p_f {
            self.lattice.p_f = p;
        }
        if let Some(r) = ov.r {
            self.lattice.r = r;
        }
        if let Some(p) = &ov.potential {
            self.potential = p.clone();
        }
        if let Some(a) = ov.amplitude {
            match &mut self.potential {
                PotentialConfig::Indicator { amplitude, .. } => *amplitude = a,
                PotentialConfig::Table { .. } => {
                    return Err(Error::Config("--amplitude applies only to the indicator potential".into()))
                }
            }
        }
        self.kronecker = ov.kronecker.unwrap_or(self.kronecker);
        self.normalization = ov.normalization.unwrap_or(self.normalization);
        self.dispersion = ov.dispersion.unwrap_or(self.dispersion);
        self.m = ov.m.unwrap_or(self.m);
        self.c = ov.c.unwrap_or(self.c);
        self.seed = ov.seed.unwrap_or(self.seed);
        Ok(())
    }

    pub fn conventions(&self) -> Conventions {
        Conventions { normalization: self.normalization, kronecker: self.kronecker, dispersion: self.dispersion }
    }

    pub fn lattice_at(&self, p_f: f64) -> Result<LatticeContext> {
        LatticeContext::new(self.lattice.d, p_f, self.lattice.r)
    }

    pub fn potential(&self) -> Result<Potential> {
        let d = self.lattice.d;
        match &self.potential {
            PotentialConfig::Indicator { amplitude, radius } => {
                Potential::indicator(d, radius.unwrap_or(self.lattice.r), *amplitude)
            }
            PotentialConfig::Table { radius, values } => {
                Potential::from_table(d, *radius, values.iter().map(|e| (e.k, e.value)))
            }
        }
    }

    /// The model at the configured `p_F`, after checking every field.
    pub fn model(&self) -> Result<Model> {
        self.model_at(self.lattice.p_f)
    }

    pub fn model_at(&self, p_f: f64) -> Result<Model> {
        self.check_scalars()?;
        Ok(Model::new(self.lattice_at(p_f)?, self.potential()?)?.with_conventions(self.conventions()))
    }

    pub fn check_scalars(&self) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(Error::Config(format!("m must be positive, got {}", self.m)));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        Ok(())
    }
}

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn hash_json(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("json values always encode");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
