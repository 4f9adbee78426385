use super::RunConfig;
use crate::error::{CliError, ErrorKind};
use crate::input::{self, Input};
use crate::output::{Run, Table};
use crate::{Cli, FlowArgs, Mode, QuadratureFlags};
use morsecount_core::bubble::{AngularOrder, FlowStatus, MorseCount, NearestBlowUp};
use morsecount_core::sphere::{exp_map, geodesic_distance, tangent_frame};
use morsecount_core::{
    extract_k_infinity, find_critical_points, flow_to_critical, i_from_j, reduced_morse_index, BubbleSum,
    CriticalPoint, FlowMode, FlowOptions, KFunction, QuadratureScheme,
};
use nalgebra::DVector;
use serde::Serialize;

pub fn scheme(flags: &QuadratureFlags, seed: u64) -> QuadratureScheme {
    let q = match flags.samples {
        Some(samples) => QuadratureScheme::monte_carlo(samples, seed),
        None => {
            let angular = flags.angular.map_or(AngularOrder::Auto, AngularOrder::Fixed);
            QuadratureScheme::radial(flags.panels, flags.nodes, angular)
        }
    };
    match flags.tolerance {
        Some(t) => q.with_tolerance(t),
        None => q,
    }
}

#[derive(Serialize)]
struct FlowInput<'a> {
    curvature: &'a KFunction,
    quadrature: &'a QuadratureScheme,
}

#[derive(Serialize)]
struct PointFlow {
    point: usize,
    target: CriticalPoint,
    start: Vec<f64>,
    status: Option<FlowStatus>,
    iterations: usize,
    j: Option<f64>,
    i_value: Option<f64>,
    gradient_norm: Option<f64>,
    center: Option<Vec<f64>>,
    lambda: Option<f64>,
    distance_to_target: Option<f64>,
    nearest: Vec<NearestBlowUp>,
    /// The co-index of the target, which the reduced index should reproduce.
    predicted_index: usize,
    reduced_index: Option<MorseCount>,
    /// `None` when the index is inconclusive or the flow failed.
    index_matches: Option<bool>,
    error: Option<String>,
}

#[derive(Serialize)]
struct FlowResult {
    n: usize,
    parities: Vec<u8>,
    euler_consistent: bool,
    critical_points: Vec<CriticalPoint>,
    flows: Vec<PointFlow>,
    all_converged: bool,
}

/// Start center at geodesic distance `offset` from `y`, along a fixed diagonal tangent direction.
fn start_center(y: &DVector<f64>, offset: f64) -> DVector<f64> {
    let frame = tangent_frame(y);
    let n = frame.ncols();
    let dir = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 }) / (n as f64).sqrt();
    exp_map(y, &(&frame * dir * offset))
}

pub fn flow(cli: &Cli, args: &FlowArgs) -> Result<(), CliError> {
    let run = Run::start("flow", cli.out.clone());
    let (input, source) = input::load(cli, None)?
        .ok_or_else(|| CliError::parse("flow needs a curvature function via --preset or --config"))?;
    let Input::Curvature(k) = input else {
        return Err(CliError::parse(format!("flow needs a curvature function, got {}", input.describe())));
    };
    if k.n() < 3 {
        return Err(CliError::invariant("bubble flows need n >= 3"));
    }
    let q = scheme(&args.quadrature, cli.seed);
    let search = find_critical_points(&k, args.seeds, cli.seed)?;
    let kinf = extract_k_infinity(&search.points, k.n(), args.max_level)?;
    let targets: Vec<usize> = match args.point {
        Some(p) if p < kinf.points.len() => vec![p],
        Some(p) => {
            return Err(CliError::parse(format!(
                "--point {p} is out of range: the blow-up set has {} points",
                kinf.points.len()
            )))
        }
        None => (0..kinf.points.len()).collect(),
    };
    let mode = match args.mode {
        Mode::Newton => FlowMode::Newton,
        Mode::Descent => FlowMode::Descent,
    };
    let mut opts = FlowOptions::new(mode, q.clone());
    if let Some(it) = args.max_iterations {
        opts.max_iterations = it;
    }
    opts.blow_up_points = kinf.points.iter().map(|p| p.location.clone()).collect();

    let dim = k.n() + 1;
    let mut header: Vec<String> = ["point", "step", "j", "gradient_norm"].map(String::from).to_vec();
    header.extend((0..dim).map(|c| format!("a1_{c}")));
    header.extend(["lambda1", "alpha1"].map(String::from));
    let mut trajectory = Table::new("trajectory.csv", header);

    let mut flows = Vec::with_capacity(targets.len());
    for &i in &targets {
        let target = &kinf.points[i];
        let y = target.point();
        let start = start_center(&y, args.offset);
        log::info!("flowing towards blow-up point {i}");
        let mut record = PointFlow {
            point: i,
            target: target.clone(),
            start: start.as_slice().to_vec(),
            status: None,
            iterations: 0,
            j: None,
            i_value: None,
            gradient_norm: None,
            center: None,
            lambda: None,
            distance_to_target: None,
            nearest: Vec::new(),
            predicted_index: target.co_index,
            reduced_index: None,
            index_matches: None,
            error: None,
        };
        let outcome = BubbleSum::single(k.n(), args.tau, &start, args.lambda0)
            .and_then(|u| flow_to_critical(&u, &k, &opts))
            .and_then(|(end, rep)| {
                let index = if rep.converged() { Some(reduced_morse_index(&end, &k, &q)?) } else { None };
                Ok((end, rep, index))
            });
        match outcome {
            Ok((end, rep, index)) => {
                for s in &rep.trajectory {
                    let mut row = vec![i.to_string(), s.step.to_string(), format!("{:e}", s.j), format!("{:e}", s.gradient_norm)];
                    row.extend(s.centers[0].iter().map(|v| format!("{v:e}")));
                    row.push(format!("{:e}", s.lambdas[0]));
                    row.push(format!("{:e}", s.alphas[0]));
                    trajectory.push(row);
                }
                let b = &end.bubbles()[0];
                record.status = Some(rep.status);
                record.iterations = rep.iterations;
                record.j = Some(rep.j);
                record.i_value = Some(i_from_j(rep.j, k.n()));
                record.gradient_norm = Some(rep.gradient_norm);
                record.center = Some(b.a.clone());
                record.lambda = Some(b.lambda);
                record.distance_to_target = Some(geodesic_distance(&b.center(), &y));
                record.nearest = rep.nearest;
                record.index_matches =
                    index.as_ref().filter(|m| m.conclusive()).map(|m| m.negative == target.co_index);
                record.reduced_index = index;
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        flows.push(record);
    }
    let all_converged = flows.iter().all(|f| f.status == Some(FlowStatus::Converged) && f.error.is_none());
    let result = FlowResult {
        n: k.n(),
        parities: kinf.config.bits(),
        euler_consistent: search.euler_consistent(),
        critical_points: search.points,
        flows,
        all_converged,
    };
    let config = RunConfig::new(cli, source, FlowInput { curvature: &k, quadrature: &q });
    run.finish(&config, &result, &[trajectory])?;
    if all_converged {
        Ok(())
    } else {
        Err(CliError::new(ErrorKind::Nonconvergence, "at least one flow did not converge"))
    }
}
