use morsecount_core::bubble::quadrature::bubble_mass;
use morsecount_core::bubble::{
    bubble_constant, energy_parts, eval_bubble, flow_to_critical, functional_j, i_from_j, reduced_gradient,
    reduced_morse_index, sobolev_constant, AngularOrder, Bubble, BubbleError, BubbleSum, FlowMode, FlowOptions,
    FlowStatus, QuadratureScheme,
};
use morsecount_core::k_function::{extract_k_infinity, find_critical_points, BumpTerm, KFunction};
use morsecount_core::presets;
use morsecount_core::sphere::{exp_map, geodesic_distance, normalized, random_unit, tangent_frame};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn radial() -> QuadratureScheme {
    QuadratureScheme::radial(32, 8, AngularOrder::Auto)
}

fn unit(v: &[f64]) -> DVector<f64> {
    normalized(DVector::from_column_slice(v))
}

fn pair(n: usize, lambda: f64) -> BubbleSum {
    let mut a = DVector::zeros(n + 1);
    a[0] = 1.0;
    BubbleSum::new(n, 0.0, vec![Bubble::new(&a, lambda).unwrap(), Bubble::new(&-&a, lambda).unwrap()], vec![1.0, 1.0])
        .unwrap()
}

#[test]
fn pointwise_bubble_values() {
    for n in 3..=6 {
        let c0 = bubble_constant(n);
        let h = (n as f64 - 2.0) / 2.0;
        let a = random_unit(n, &mut ChaCha8Rng::seed_from_u64(n as u64));
        let flat = Bubble::new(&a, 1.0).unwrap();
        let x = random_unit(n, &mut ChaCha8Rng::seed_from_u64(100 + n as u64));
        assert!((eval_bubble(&flat, &x, n).unwrap() - c0 / 2f64.powf(h)).abs() < 1e-14);
        let sharp = Bubble::new(&a, 17.0).unwrap();
        let peak = c0 * 17f64.powf(h) / 2f64.powf(h);
        assert!((eval_bubble(&sharp, &a, n).unwrap() / peak - 1.0).abs() < 1e-13);
    }
}

#[test]
fn normalization_identity_in_several_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=6 {
        let s = sobolev_constant(n).unwrap();
        for _ in 0..5 {
            let a = random_unit(n, &mut rng);
            let lambda = 10f64.powf(rng.random_range(-1.0..2.0));
            let u = BubbleSum::single(n, 0.0, &a, lambda).unwrap();
            assert!((bubble_mass(&u, &radial()) / s - 1.0).abs() < 1e-10, "n {n} lambda {lambda}");
            let one = KFunction::constant(n, 1.0).unwrap();
            let parts = energy_parts(&u, &one, &radial()).unwrap();
            assert!((parts.norm_squared() / s - 1.0).abs() < 1e-9, "n {n} lambda {lambda}");
        }
    }
}

#[test]
fn monte_carlo_agrees_with_radial() {
    let s = sobolev_constant(3).unwrap();
    let a = unit(&[0.2, 0.4, -0.1, 0.9]);
    for (i, lambda) in [0.5, 3.0, 40.0].into_iter().enumerate() {
        let u = BubbleSum::single(3, 0.0, &a, lambda).unwrap();
        let mc = bubble_mass(&u, &QuadratureScheme::monte_carlo(40_000, i as u64));
        assert!((mc / s - 1.0).abs() < 1e-2, "lambda {lambda}: {mc}");
    }
    let k = presets::curvature("three-max-one-saddle").unwrap();
    let u = BubbleSum::new(
        3,
        0.05,
        vec![Bubble::new(&unit(&[1.0, 0.3, 0.0, 0.0]), 4.0).unwrap(), Bubble::new(&unit(&[0.0, 0.0, 1.0, 0.2]), 6.0).unwrap()],
        vec![1.0, 0.8],
    )
    .unwrap();
    let exact = functional_j(&u, &k, &QuadratureScheme::radial(64, 8, AngularOrder::Fixed(32)).with_tolerance(1e-4))
        .unwrap()
        .value;
    let mc_scheme = QuadratureScheme::monte_carlo(100_000, 7);
    let mc = functional_j(&u, &k, &mc_scheme).unwrap();
    assert!((mc.value / exact - 1.0).abs() < 1e-2, "{} vs {exact}", mc.value);
    // same seed, same value; another seed, another value
    assert_eq!(functional_j(&u, &k, &mc_scheme).unwrap().value, mc.value);
    assert_ne!(functional_j(&u, &k, &QuadratureScheme::monte_carlo(100_000, 8)).unwrap().value, mc.value);
}

#[test]
fn quantization_error_decreases_with_scale() {
    for n in [3, 4, 5] {
        let one = KFunction::constant(n, 1.0).unwrap();
        let two = (2.0 * sobolev_constant(n).unwrap()).powf(2.0 / n as f64);
        let errors: Vec<f64> = [10.0, 30.0, 100.0, 300.0]
            .into_iter()
            .map(|l| (functional_j(&pair(n, l), &one, &radial()).unwrap().value / two - 1.0).abs())
            .collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "n {n}: {errors:?}");
        // the pair interaction decays like lambda^{-(n-2)}
        let rate = (errors[2] / errors[3]).ln() / 3f64.ln();
        assert!((rate - (n as f64 - 2.0)).abs() < 0.15, "n {n}: observed rate {rate}");
    }
}

#[test]
fn energy_conversion_examples() {
    for n in 3..=8 {
        let s = sobolev_constant(n).unwrap();
        let nf = n as f64;
        assert!((i_from_j(s.powf(2.0 / nf), n) / (s / nf) - 1.0).abs() < 1e-14);
        assert!((i_from_j((2.0 * s).powf(2.0 / nf), n) / (2.0 * s / nf) - 1.0).abs() < 1e-14);
    }
    assert!(i_from_j(1e-300, 3) < 1e-300);
}

#[test]
fn perturbed_curvature_changes_j_by_order_epsilon() {
    let a = unit(&[0.3, 0.1, -0.5, 0.8]);
    let u = BubbleSum::single(3, 0.0, &a, 5.0).unwrap();
    let j1 = functional_j(&u, &KFunction::constant(3, 1.0).unwrap(), &radial()).unwrap().value;
    let mut ratios = Vec::new();
    for eps in [0.01, 0.05, 0.1] {
        let k = KFunction::new(3, eps, vec![BumpTerm { center: vec![0.0, 0.0, 0.0, 1.0], weight: 1.0, width: 0.7 }])
            .unwrap();
        let jk = functional_j(&u, &k, &radial()).unwrap().value;
        let c = (jk - j1).abs() / (eps * j1);
        assert!(c <= 1.0, "eps {eps}: C = {c}");
        ratios.push(c);
    }
    println!("observed |J_K - J_1| / (eps J_1): {ratios:?}, (n-2)/n = {}", 1.0 / 3.0);
}

#[test]
fn quadrature_validation() {
    let u = BubbleSum::single(3, 0.0, &unit(&[1.0, 0.0, 0.0, 0.0]), 2.0).unwrap();
    let one = KFunction::constant(3, 1.0).unwrap();
    assert!(matches!(functional_j(&u, &one, &QuadratureScheme::radial(1, 8, AngularOrder::Auto)), Err(BubbleError::Quadrature(_))));
    let u7 = BubbleSum::single(7, 0.0, &unit(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 2.0).unwrap();
    let one7 = KFunction::constant(7, 1.0).unwrap();
    assert!(functional_j(&u7, &one7, &QuadratureScheme::radial(32, 8, AngularOrder::Fixed(4))).is_err());
    let mc = functional_j(&u7, &one7, &QuadratureScheme::monte_carlo(20_000, 1)).unwrap();
    assert!((mc.value / sobolev_constant(7).unwrap().powf(2.0 / 7.0) - 1.0).abs() < 1e-2);
    assert!(matches!(
        functional_j(&u, &KFunction::constant(4, 1.0).unwrap(), &radial()),
        Err(BubbleError::Mismatch { .. })
    ));
    // too few angular directions for a two-bubble sum is caught by node doubling
    let k = presets::curvature("three-max-one-saddle").unwrap();
    let v = BubbleSum::new(
        3,
        0.05,
        vec![Bubble::new(&unit(&[1.0, 0.0, 0.0, 0.0]), 2.5).unwrap(), Bubble::new(&unit(&[0.0, 1.0, 0.0, 0.0]), 15.0).unwrap()],
        vec![1.0, 1.0],
    )
    .unwrap();
    assert!(matches!(
        functional_j(&v, &k, &QuadratureScheme::radial(32, 8, AngularOrder::Fixed(8))),
        Err(BubbleError::QuadratureNonconvergence { .. })
    ));
}

#[test]
fn coarse_monte_carlo_gradient_is_reported_as_noisy() {
    let k = presets::curvature("three-max-one-saddle").unwrap();
    let u = BubbleSum::single(3, 0.05, &unit(&[0.7, 0.6, 0.1, 0.0]), 10.0).unwrap();
    let r = reduced_gradient(&u, &k, &QuadratureScheme::monte_carlo(2_000, 3).with_tolerance(1.0));
    match r {
        Err(BubbleError::NoisyGradient { noise, suggested_panels }) => {
            assert!(noise > 0.0);
            assert_eq!(suggested_panels, 8_000);
        }
        // common random numbers may still make the stencils agree
        Ok(g) => assert!(g.noise <= 1e-4 * g.j.abs()),
        Err(e) => panic!("{e}"),
    }
}

fn top_maximum(name: &str) -> (KFunction, Vec<DVector<f64>>) {
    let k = presets::curvature(name).unwrap();
    let s = find_critical_points(&k, 400, 1).unwrap();
    let kinf = extract_k_infinity(&s.points, 3, 4).unwrap();
    (k, kinf.points.iter().map(|p| p.point()).collect())
}

fn log_lambda_derivative(k: &KFunction, a: &DVector<f64>, lambda: f64) -> f64 {
    let u = BubbleSum::single(3, 0.05, a, lambda).unwrap();
    let g = reduced_gradient(&u, k, &radial()).unwrap();
    let i = g.labels.iter().position(|l| l == "log_lambda_1").unwrap();
    g.values[i]
}

/// Along `log lambda` with the center frozen at the flow's end point, the
/// derivative changes sign exactly at the flow's `lambda`.
#[test]
fn critical_scale_by_bisection_matches_flow() {
    let (k, points) = top_maximum("three-max-one-saddle");
    let y = &points[0];
    let mut opts = FlowOptions::new(FlowMode::Newton, radial());
    opts.blow_up_points = vec![y.as_slice().to_vec()];
    let (end, report) = flow_to_critical(&BubbleSum::single(3, 0.05, y, 3.0).unwrap(), &k, &opts).unwrap();
    assert!(report.converged());
    assert!(report.nearest[0].distance < 0.02, "distance {}", report.nearest[0].distance);
    let center = end.bubbles()[0].center();
    let scan: Vec<(f64, f64)> =
        [2.0, 8.0, 32.0, 128.0].into_iter().map(|l| (l, log_lambda_derivative(&k, &center, l))).collect();
    let bracket = scan.windows(2).find(|w| w[0].1.signum() != w[1].1.signum()).expect("sign change");
    let (mut lo, mut hi) = (bracket[0].0.ln(), bracket[1].0.ln());
    let lo_sign = bracket[0].1.signum();
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        if log_lambda_derivative(&k, &center, mid.exp()).signum() == lo_sign {
            lo = mid
        } else {
            hi = mid
        }
    }
    let critical = (0.5 * (lo + hi)).exp();
    let lambda = end.bubbles()[0].lambda;
    assert!((lambda / critical - 1.0).abs() < 1e-3, "flow {lambda} vs bisection {critical}");
}

#[test]
fn gradient_matches_independent_finite_differences() {
    let k = presets::curvature("three-max-blowup-saddle").unwrap();
    let a = unit(&[0.6, 0.5, 0.3, 0.1]);
    let lambda = 8.0;
    let u = BubbleSum::single(3, 0.05, &a, lambda).unwrap();
    let q = radial();
    let g = reduced_gradient(&u, &k, &q).unwrap();
    let j = |v: &BubbleSum| energy_parts(v, &k, &q).unwrap().j();
    let h = 1e-3;
    let frame = tangent_frame(&a);
    let mut fd = Vec::new();
    for c in 0..3 {
        // chart coordinate eta = lambda * xi
        let shift = |s: f64| {
            let moved = exp_map(&a, &(frame.column(c) * (s * h / lambda)));
            BubbleSum::single(3, 0.05, &moved, lambda).unwrap()
        };
        fd.push((j(&shift(1.0)) - j(&shift(-1.0))) / (2.0 * h));
    }
    let scaled = |s: f64| BubbleSum::single(3, 0.05, &a, lambda * (s * h).exp()).unwrap();
    fd.push((j(&scaled(1.0)) - j(&scaled(-1.0))) / (2.0 * h));
    let scale = g.norm().max(1e-3);
    for (i, (lib, oracle)) in g.values.iter().zip(&fd).enumerate() {
        let tol = 10.0 * g.noise + 1e-5 * scale;
        assert!((lib - oracle).abs() < tol, "{}: {lib} vs {oracle} (tol {tol})", g.labels[i]);
    }
    for (fine, coarse) in g.values.iter().zip(&g.coarse) {
        assert!((fine - coarse).abs() <= g.noise);
    }
}

#[test]
fn descent_from_near_a_maximum_converges_to_it() {
    let (k, points) = top_maximum("three-max-one-saddle");
    let y = &points[1];
    let seed = normalized(y + DVector::from_vec(vec![0.02, -0.02, 0.02, 0.01]));
    let mut opts = FlowOptions::new(FlowMode::Descent, radial());
    opts.blow_up_points = points.iter().map(|p| p.as_slice().to_vec()).collect();
    let (end, report) = flow_to_critical(&BubbleSum::single(3, 0.05, &seed, 5.0).unwrap(), &k, &opts).unwrap();
    assert!(report.converged(), "{:?} after {}", report.status, report.iterations);
    assert_eq!(report.nearest[0].point, 1);
    assert!(report.nearest[0].distance < 0.05, "distance {}", report.nearest[0].distance);
    // J is non-increasing along the descent up to roundoff
    for w in report.trajectory.windows(2) {
        assert!(w[1].j <= w[0].j + 1e-10 * w[0].j.abs());
    }
    let m = reduced_morse_index(&end, &k, &radial()).unwrap();
    assert_eq!((m.negative, m.indeterminate), (0, 0));
}

#[test]
fn bubble_at_a_positive_laplacian_minimum_moves_away() {
    let k = KFunction::new(
        3,
        0.3,
        vec![
            BumpTerm { center: vec![1.0, 0.0, 0.0, 0.0], weight: 1.0, width: 0.6 },
            BumpTerm { center: vec![0.0, 0.0, 0.0, 1.0], weight: -0.8, width: 0.5 },
        ],
    )
    .unwrap();
    let s = find_critical_points(&k, 128, 1).unwrap();
    let min = s.points.last().unwrap();
    assert!(min.morse_index == 0 && min.laplacian > 0.0);
    let y = min.point();
    let seed = normalized(&y + DVector::from_vec(vec![0.05, 0.03, -0.02, 0.0]));
    let mut opts = FlowOptions::new(FlowMode::Descent, radial());
    opts.max_iterations = 150;
    let (end, report) = flow_to_critical(&BubbleSum::single(3, 0.05, &seed, 5.0).unwrap(), &k, &opts).unwrap();
    let distance = geodesic_distance(&end.bubbles()[0].center(), &y);
    assert!(distance > 0.3, "ended {distance} from the minimum with status {:?}", report.status);
    assert!(report.trajectory.last().unwrap().j < report.trajectory[0].j);
}

#[test]
fn unit_curvature_descent_keeps_the_center() {
    let one = KFunction::constant(3, 1.0).unwrap();
    let a = unit(&[0.1, 0.2, 0.3, 0.9]);
    let opts = FlowOptions::new(FlowMode::Descent, radial());
    let (end, report) = flow_to_critical(&BubbleSum::single(3, 0.05, &a, 6.0).unwrap(), &one, &opts).unwrap();
    assert_ne!(report.status, FlowStatus::BlowUpEscape);
    assert!(geodesic_distance(&end.bubbles()[0].center(), &a) < 1e-8);
    let lambda = end.bubbles()[0].lambda;
    assert!((lambda - 1.0).abs() < 1e-3, "lambda {lambda}");
}
