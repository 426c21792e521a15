use std::fs;
use std::path::Path;

use conexa_core::builtins;
use conexa_core::devices::{pauli_menus, Device, DeviceJson, MenuEntry};
use conexa_core::io::{DensityJson, MenusJson, StateJson};
use conexa_core::quantum::{DensityOperator, PureState};
use conexa_core::randvars::{brunnian_family, DistributionJson, FiniteJointDistribution};
use conexa_core::{ConnectiveStructure, Error, Result};
use serde_json::Value;

/// Where an analysed object comes from, as echoed in reports.
#[derive(Clone, Debug)]
pub enum Source {
    File(String),
    Builtin(String),
}

impl Source {
    pub fn from_args(file: Option<&str>, builtin: Option<&str>) -> Result<Source> {
        match (file, builtin) {
            (Some(f), None) => Ok(Source::File(f.to_string())),
            (None, Some(b)) => Ok(Source::Builtin(b.to_string())),
            _ => Err(Error::domain("give exactly one of --file or --builtin")),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Source::File(f) => serde_json::json!({ "file": f }),
            Source::Builtin(b) => serde_json::json!({ "builtin": b }),
        }
    }
}

pub fn read_text(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::parse(format!("{path}: {e}")))
}

/// Parses JSON, keeping serde's line and column in the message.
pub fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(format!("{path}: {e}")))
}

pub fn load_state(source: &Source) -> Result<PureState> {
    match source {
        Source::Builtin(name) => builtins::state(name),
        Source::File(path) => parse_json::<StateJson>(path, &read_text(path)?)?.into_state(),
    }
}

/// A density file, or the projector of a builtin pure state.
pub fn load_density(source: &Source, tol: f64) -> Result<DensityOperator> {
    match source {
        Source::Builtin(name) => Ok(builtins::state(name)?.density()),
        Source::File(path) => parse_json::<DensityJson>(path, &read_text(path)?)?.into_density(tol),
    }
}

pub fn load_device(source: &Source) -> Result<Device> {
    match source {
        Source::Builtin(name) => builtins::device(name),
        Source::File(path) => Device::try_from(parse_json::<DeviceJson>(path, &read_text(path)?)?),
    }
}

pub const DISTRIBUTION_NAMES: [&str; 2] = ["XOR", "BRUNNIAN-<k>-<n>"];

/// `XOR` is the brunnian family with k = 2, n = 2.
pub fn builtin_distribution(name: &str) -> Result<FiniteJointDistribution> {
    if name == "XOR" {
        return brunnian_family(2, 2);
    }
    let parts: Vec<&str> = name.split('-').collect();
    match parts.as_slice() {
        ["BRUNNIAN", k, n] => match (k.parse(), n.parse()) {
            (Ok(k), Ok(n)) => brunnian_family(k, n),
            _ => Err(Error::domain(format!("bad brunnian parameters in '{name}'"))),
        },
        _ => Err(Error::domain(format!(
            "unknown builtin distribution '{name}' (known: {})",
            DISTRIBUTION_NAMES.join(", ")
        ))),
    }
}

pub fn load_distribution(source: &Source) -> Result<FiniteJointDistribution> {
    match source {
        Source::Builtin(name) => builtin_distribution(name),
        Source::File(path) => {
            FiniteJointDistribution::try_from(parse_json::<DistributionJson>(path, &read_text(path)?)?)
        }
    }
}

/// A menu file, or Pauli shorthand such as `ZX` applied to every site.
pub fn load_menus(spec: &str, sites: usize) -> Result<Vec<Vec<MenuEntry>>> {
    if Path::new(spec).is_file() {
        let menus = parse_json::<MenusJson>(spec, &read_text(spec)?)?.into_menus()?;
        if menus.len() != sites {
            return Err(Error::domain(format!("{spec}: expected {sites} menus, got {}", menus.len())));
        }
        Ok(menus)
    } else {
        pauli_menus(spec, sites)
    }
}

/// Kind of object held in a JSON file, from its keys.
#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    State,
    Density,
    Device,
    Rvs,
    Structure,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::State => "state",
            Kind::Density => "density",
            Kind::Device => "device",
            Kind::Rvs => "rvs",
            Kind::Structure => "structure",
        }
    }

    pub fn detect(path: &str, text: &str) -> Result<Kind> {
        let v: Value = parse_json(path, text)?;
        let has = |k: &str| v.get(k).is_some();
        if has("amplitudes") {
            Ok(Kind::State)
        } else if has("matrix") {
            Ok(Kind::Density)
        } else if has("relation") {
            Ok(Kind::Device)
        } else if has("prob") {
            Ok(Kind::Rvs)
        } else if has("connected") {
            Ok(Kind::Structure)
        } else {
            Err(Error::parse(format!(
                "{path}: cannot tell the input kind (expected amplitudes, matrix, relation, prob or connected)"
            )))
        }
    }
}

pub fn load_structure(path: &str) -> Result<ConnectiveStructure> {
    parse_json(path, &read_text(path)?)
}
