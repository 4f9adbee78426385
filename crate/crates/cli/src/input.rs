use crate::error::CliError;
use crate::{Cli, ParityArgs};
use morsecount_core::index_calculus::Parity;
use morsecount_core::presets::{self, PresetData};
use morsecount_core::{
    extract_k_infinity, find_critical_points, Bubble, BubbleSum, BumpTerm, CriticalPoint, IndexError, KFunction,
    ParityConfig,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const DEFAULT_DIMENSION: u32 = 7;
pub const DEFAULT_MAX_LEVEL: usize = 12;

/// Where the input came from, as recorded in the report.
#[derive(Debug, Clone, Serialize)]
pub struct Source {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

impl Source {
    pub fn default_input() -> Self {
        Self { kind: "default", value: None }
    }
}

pub enum Input {
    Parities { n: Option<u32>, parities: Vec<Parity>, max_level: Option<usize> },
    Curvature(KFunction),
    Bubbles(BubbleSum),
}

impl Input {
    pub fn describe(&self) -> &'static str {
        match self {
            Input::Parities { .. } => "a parity configuration",
            Input::Curvature(_) => "a curvature function",
            Input::Bubbles(_) => "a bubble sum",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParities {
    n: Option<u32>,
    parities: Vec<i64>,
    #[serde(rename = "N")]
    max_level: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurvature {
    n: usize,
    epsilon: f64,
    #[serde(default)]
    terms: Vec<BumpTerm>,
    #[serde(default)]
    scale: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBubbles {
    n: usize,
    #[serde(default)]
    tau: f64,
    bubbles: Vec<Bubble>,
    alphas: Option<Vec<f64>>,
}

fn parity_list(values: &[i64]) -> Result<Vec<Parity>, CliError> {
    values
        .iter()
        .map(|&v| match v {
            0 => Ok(Parity::Even),
            1 => Ok(Parity::Odd),
            v => Err(IndexError::BadParity(v).into()),
        })
        .collect()
}

fn parse_json<T: for<'de> Deserialize<'de>>(value: serde_json::Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::parse(format!("{what}: {e}")))
}

fn read_config(path: &Path) -> Result<Input, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let has = |key: &str| value.get(key).is_some();
    if has("parities") {
        let raw: RawParities = parse_json(value, "parity configuration")?;
        Ok(Input::Parities { n: raw.n, parities: parity_list(&raw.parities)?, max_level: raw.max_level })
    } else if has("bubbles") {
        let raw: RawBubbles = parse_json(value, "bubble sum")?;
        let alphas = raw.alphas.unwrap_or_else(|| vec![1.0; raw.bubbles.len()]);
        Ok(Input::Bubbles(BubbleSum::new(raw.n, raw.tau, raw.bubbles, alphas)?))
    } else if has("epsilon") {
        let raw: RawCurvature = parse_json(value, "curvature function")?;
        Ok(Input::Curvature(KFunction::with_scale(raw.n, raw.epsilon, raw.terms, raw.scale.unwrap_or(1.0))?))
    } else {
        Err(CliError::parse(format!(
            "{}: expected a parity configuration (\"parities\"), a curvature function (\"epsilon\") or a bubble sum (\"bubbles\")",
            path.display()
        )))
    }
}

fn read_preset(name: &str) -> Result<Input, CliError> {
    let preset = presets::preset(name).ok_or_else(|| {
        CliError::parse(format!("unknown preset {name:?}; known: {}", presets::names().collect::<Vec<_>>().join(", ")))
    })?;
    Ok(match preset.data {
        PresetData::Parities(c) => {
            Input::Parities { n: Some(c.n()), parities: c.parities().to_vec(), max_level: Some(c.max_level()) }
        }
        PresetData::Curvature(k) => Input::Curvature(k),
    })
}

fn parse_parities(text: &str) -> Result<Vec<Parity>, CliError> {
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<i64>().map_err(|_| CliError::parse(format!("--parities: {s:?} is not an integer")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    parity_list(&values)
}

/// Reads the single input named by `--parities`, `--config` or `--preset`.
pub fn load(cli: &Cli, parities: Option<&str>) -> Result<Option<(Input, Source)>, CliError> {
    let given = [parities.is_some(), cli.config.is_some(), cli.preset.is_some()].iter().filter(|&&b| b).count();
    if given > 1 {
        return Err(CliError::parse("give at most one of --parities, --config and --preset"));
    }
    if let Some(text) = parities {
        let list = parse_parities(text)?;
        let source = Source { kind: "parities", value: Some(text.to_string()) };
        return Ok(Some((Input::Parities { n: None, parities: list, max_level: None }, source)));
    }
    if let Some(path) = &cli.config {
        let source = Source { kind: "config", value: Some(path.display().to_string()) };
        return Ok(Some((read_config(path)?, source)));
    }
    if let Some(name) = &cli.preset {
        let source = Source { kind: "preset", value: Some(name.clone()) };
        return Ok(Some((read_preset(name)?, source)));
    }
    Ok(None)
}

/// The blow-up set found for a curvature input.
#[derive(Debug, Clone, Serialize)]
pub struct BlowUp {
    pub euler_consistent: bool,
    pub critical_points: usize,
    pub points: Vec<CriticalPoint>,
}

/// Resolves a parity configuration, applying `--dim` and `--N`.
/// Curvature inputs go through the critical-point search.
pub fn parity_config(cli: &Cli, args: &ParityArgs) -> Result<(ParityConfig, Source, Option<BlowUp>), CliError> {
    let (input, source) = load(cli, args.parities.as_deref())?
        .ok_or_else(|| CliError::parse("one of --parities, --config or --preset is required"))?;
    match input {
        Input::Parities { n, parities, max_level } => {
            let n = args.dim.or(n).unwrap_or(DEFAULT_DIMENSION);
            let max_level = args.max_level.or(max_level).unwrap_or(DEFAULT_MAX_LEVEL);
            Ok((ParityConfig::new(n, parities, max_level)?, source, None))
        }
        Input::Curvature(k) => {
            if args.dim.is_some_and(|d| d as usize != k.n()) {
                return Err(CliError::parse("--dim conflicts with the dimension of the curvature function"));
            }
            let max_level = args.max_level.unwrap_or(DEFAULT_MAX_LEVEL);
            let search = find_critical_points(&k, args.seeds, cli.seed)?;
            let kinf = extract_k_infinity(&search.points, k.n(), max_level)?;
            let blow_up = BlowUp {
                euler_consistent: search.euler_consistent(),
                critical_points: search.points.len(),
                points: kinf.points,
            };
            Ok((kinf.config, source, Some(blow_up)))
        }
        other => Err(CliError::parse(format!("expected parities or a curvature function, got {}", other.describe()))),
    }
}
