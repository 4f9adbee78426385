use super::flow::scheme;
use super::RunConfig;
use crate::error::CliError;
use crate::input::{self, Input, Source};
use crate::output::{Run, Table};
use crate::{Cli, QuadratureArgs};
use morsecount_core::bubble::quadrature::bubble_mass;
use morsecount_core::bubble::JEstimate;
use morsecount_core::{functional_j, i_from_j, sobolev_constant, BubbleSum, KFunction, QuadratureScheme};
use nalgebra::DVector;
use serde::Serialize;

#[derive(Serialize)]
struct QuadratureInput<'a> {
    bubbles: &'a BubbleSum,
    curvature: &'a KFunction,
    quadrature: &'a QuadratureScheme,
}

#[derive(Serialize)]
struct QuadratureResult {
    n: usize,
    sobolev_constant: f64,
    /// `int delta^{2n/(n-2)}` for the first bubble; equals the Sobolev constant exactly.
    first_bubble_mass: f64,
    first_bubble_mass_relative_error: f64,
    j: JEstimate,
    i_value: f64,
    /// `S_n^{2/n}`, the value of `J` for one bubble when `K = 1` and `tau = 0`.
    single_bubble_reference: f64,
}

pub fn quadrature(cli: &Cli, args: &QuadratureArgs) -> Result<(), CliError> {
    let run = Run::start("quadrature", cli.out.clone());
    let (u, k, source) = match input::load(cli, None)? {
        Some((Input::Bubbles(u), source)) => {
            let k = KFunction::constant(u.n(), 1.0)?;
            (u, k, source)
        }
        Some((Input::Curvature(k), source)) => {
            let u = default_bubble(k.n(), args)?;
            (u, k, source)
        }
        Some((other, _)) => {
            return Err(CliError::parse(format!(
                "quadrature needs a bubble sum or a curvature function, got {}",
                other.describe()
            )))
        }
        None => {
            let u = default_bubble(args.dim, args)?;
            (u, KFunction::constant(args.dim.max(2), 1.0)?, Source::default_input())
        }
    };
    let n = u.n();
    let q = scheme(&args.quadrature, cli.seed);
    let sn = sobolev_constant(n)?;
    let j = functional_j(&u, &k, &q)?;
    let mass = bubble_mass(&u, &q);
    let result = QuadratureResult {
        n,
        sobolev_constant: sn,
        first_bubble_mass: mass,
        first_bubble_mass_relative_error: (mass - sn).abs() / sn,
        j,
        i_value: i_from_j(j.value, n),
        single_bubble_reference: sn.powf(2.0 / n as f64),
    };
    let mut table = Table::new("quadrature.csv", vec!["quantity".into(), "value".into()]);
    for (name, v) in [
        ("sobolev_constant", result.sobolev_constant),
        ("first_bubble_mass", result.first_bubble_mass),
        ("j", result.j.value),
        ("j_refined", result.j.refined),
        ("j_difference", result.j.difference),
        ("i", result.i_value),
        ("single_bubble_reference", result.single_bubble_reference),
    ] {
        table.push(vec![name.to_string(), format!("{v:e}")]);
    }
    let config = RunConfig::new(cli, source, QuadratureInput { bubbles: &u, curvature: &k, quadrature: &q });
    run.finish(&config, &result, &[table])
}

/// One bubble at the last coordinate pole.
fn default_bubble(n: usize, args: &QuadratureArgs) -> Result<BubbleSum, CliError> {
    let mut pole = DVector::zeros(n + 1);
    pole[n] = 1.0;
    Ok(BubbleSum::single(n, args.tau, &pole, args.lambda)?)
}
