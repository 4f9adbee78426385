//! Built-in experiment presets.

use crate::{KFunction, ParityConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetData {
    Parities(ParityConfig),
    Curvature(KFunction),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    #[serde(flatten)]
    pub data: PresetData,
}

macro_rules! sources {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../presets/", $name, ".json")))),*]
    };
}

const SOURCES: &[(&str, &str)] = sources![
    "m2-even",
    "m2-odd",
    "all-even-m3",
    "all-even-m4",
    "all-even-m5",
    "all-even-m6",
    "all-odd-m3",
    "all-odd-m4",
    "all-odd-m5",
    "all-odd-m6",
    "index-one-ell-1",
    "index-one-ell-2",
    "index-one-ell-3",
    "three-max-one-saddle",
    "three-max-blowup-saddle",
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Option<Preset> {
    let (_, src) = SOURCES.iter().find(|(n, _)| *n == name)?;
    Some(serde_json::from_str(src).expect("built-in presets are valid"))
}

pub fn parities(name: &str) -> Option<ParityConfig> {
    match preset(name)?.data {
        PresetData::Parities(c) => Some(c),
        PresetData::Curvature(_) => None,
    }
}

pub fn curvature(name: &str) -> Option<KFunction> {
    match preset(name)?.data {
        PresetData::Curvature(k) => Some(k),
        PresetData::Parities(_) => None,
    }
}
