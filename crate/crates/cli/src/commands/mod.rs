mod counts;
mod flow;
mod quadrature;

use crate::error::CliError;
use crate::input::Source;
use crate::output::Run;
use crate::{Cli, Command};
use serde::Serialize;

/// Everything that determines a run, as echoed into the report.
#[derive(Serialize)]
pub struct RunConfig<'a, T: Serialize> {
    pub command: &'a Command,
    pub seed: u64,
    pub out: Option<String>,
    pub source: Source,
    pub input: T,
}

impl<'a, T: Serialize> RunConfig<'a, T> {
    pub fn new(cli: &'a Cli, source: Source, input: T) -> Self {
        Self {
            command: &cli.command,
            seed: cli.seed,
            out: cli.out.as_ref().map(|p| p.display().to_string()),
            source,
            input,
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Indices(args) => counts::indices(cli, args),
        Command::Bounds(args) => counts::bounds(cli, args),
        Command::Verify(args) => counts::verify(cli, args),
        Command::Flow(args) => flow::flow(cli, args),
        Command::Quadrature(args) => quadrature::quadrature(cli, args),
        Command::Presets => list_presets(cli),
    }
}

#[derive(Serialize)]
struct PresetEntry {
    name: &'static str,
    kind: &'static str,
    description: String,
}

fn list_presets(cli: &Cli) -> Result<(), CliError> {
    use morsecount_core::presets::{self, PresetData};
    let entries: Vec<PresetEntry> = presets::names()
        .filter_map(|name| presets::preset(name).map(|p| (name, p)))
        .map(|(name, p)| PresetEntry {
            name,
            kind: match p.data {
                PresetData::Parities(_) => "parities",
                PresetData::Curvature(_) => "curvature",
            },
            description: p.description,
        })
        .collect();
    let run = Run::start("presets", cli.out.clone());
    run.finish(&RunConfig::new(cli, Source::default_input(), ()), &entries, &[])
}
