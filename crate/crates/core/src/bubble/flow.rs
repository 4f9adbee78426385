//! Finite-dimensional calculus on bubble parameters.
//!
//! Chart coordinates, in order: `log(alpha_i / alpha_1)` for `i >= 2`, the
//! tangential displacement of every center measured in units of `1/lambda_i`,
//! then `log lambda_i`. `J` is homogeneous of degree 0, so the overall size
//! of the coefficients is not a coordinate.

use super::functional::{check_inputs, parts_with};
use super::quadrature::{default_frames, QuadratureScheme};
use super::{Bubble, BubbleError, BubbleSum};
use crate::sphere::{exp_map, geodesic_distance, rotate_along, Point};
use crate::KFunction;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct Chart {
    n: usize,
    tau: f64,
    centers: Vec<Point>,
    frames: Vec<DMatrix<f64>>,
    lambdas: Vec<f64>,
    alpha1: f64,
    angular: usize,
}

impl Chart {
    pub fn new(u: &BubbleSum, frames: Vec<DMatrix<f64>>, angular: usize) -> Self {
        Self {
            n: u.n(),
            tau: u.tau(),
            centers: u.bubbles().iter().map(Bubble::center).collect(),
            frames,
            lambdas: u.bubbles().iter().map(|b| b.lambda).collect(),
            alpha1: u.alphas()[0],
            angular,
        }
    }

    pub fn at(u: &BubbleSum, k: &KFunction, q: &QuadratureScheme) -> Self {
        Self::new(u, default_frames(u), q.angular_order(u, k))
    }

    pub fn bubbles(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        let k = self.bubbles();
        k - 1 + k * self.n + k
    }

    /// Coordinates of the alpha ratios.
    pub fn alpha_coords(&self) -> std::ops::Range<usize> {
        0..self.bubbles() - 1
    }

    /// Coordinates of the displacement of center `i`.
    pub fn center_coords(&self, i: usize) -> std::ops::Range<usize> {
        let start = self.bubbles() - 1 + i * self.n;
        start..start + self.n
    }

    pub fn lambda_coord(&self, i: usize) -> usize {
        self.bubbles() - 1 + self.bubbles() * self.n + i
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        for i in 1..self.bubbles() {
            out.push(format!("log_alpha_ratio_{}", i + 1));
        }
        for i in 0..self.bubbles() {
            for j in 0..self.n {
                out.push(format!("center_{}_{}", i + 1, j + 1));
            }
        }
        for i in 0..self.bubbles() {
            out.push(format!("log_lambda_{}", i + 1));
        }
        out
    }

    /// Coordinates of `u` itself, the chart base.
    pub fn origin(&self, u: &BubbleSum) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for i in 1..self.bubbles() {
            x[i - 1] = (u.alphas()[i] / self.alpha1).ln();
        }
        for i in 0..self.bubbles() {
            x[self.lambda_coord(i)] = self.lambdas[i].ln();
        }
        x
    }

    /// Bubble sum and frames at chart coordinates `x`.
    pub fn point(&self, x: &DVector<f64>) -> (BubbleSum, Vec<DMatrix<f64>>) {
        let k = self.bubbles();
        let mut bubbles = Vec::with_capacity(k);
        let mut frames = Vec::with_capacity(k);
        let mut alphas = vec![self.alpha1];
        for i in 1..k {
            alphas.push(self.alpha1 * x[i - 1].exp());
        }
        for i in 0..k {
            let base = &self.centers[i];
            let frame = &self.frames[i];
            let xi = x.rows(self.center_coords(i).start, self.n) / self.lambdas[i];
            let w = frame * xi;
            let a = exp_map(base, &w);
            let mut moved = DMatrix::zeros(self.n + 1, self.n);
            for c in 0..self.n {
                moved.set_column(c, &rotate_along(base, &w, &frame.column(c).into_owned()));
            }
            bubbles.push(Bubble { a: a.as_slice().to_vec(), lambda: x[self.lambda_coord(i)].exp() });
            frames.push(moved);
        }
        let u = BubbleSum::new(self.n, self.tau, bubbles, alphas).expect("chart images are valid bubble sums");
        (u, frames)
    }

    /// A chart based at coordinates `x`, carrying the moved frames along.
    pub fn recenter(&self, x: &DVector<f64>) -> (Chart, BubbleSum) {
        let (u, frames) = self.point(x);
        (Chart::new(&u, frames, self.angular), u)
    }

    pub fn j(&self, x: &DVector<f64>, k: &KFunction, q: &QuadratureScheme) -> f64 {
        let (u, frames) = self.point(x);
        parts_with(&u, &frames, k, q, 1, self.angular).j()
    }
}

fn gradient_at(chart: &Chart, x: &DVector<f64>, k: &KFunction, q: &QuadratureScheme, h: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (chart.j(&xp, k, q) - chart.j(&xm, k, q)) / (2.0 * h);
    }
    g
}

fn hessian_at(chart: &Chart, x: &DVector<f64>, k: &KFunction, q: &QuadratureScheme, h: f64) -> DMatrix<f64> {
    let d = x.len();
    let f0 = chart.j(x, k, q);
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut y = x.clone();
        y[i] += si * h;
        y[j] += sj * h;
        chart.j(&y, k, q)
    };
    let mut hm = DMatrix::zeros(d, d);
    for i in 0..d {
        let fp = shifted(i, 1.0, i, 0.0);
        let fm = shifted(i, -1.0, i, 0.0);
        hm[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let v = (shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0) - shifted(i, -1.0, j, 1.0)
                + shifted(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            hm[(i, j)] = v;
            hm[(j, i)] = v;
        }
    }
    hm
}

pub const DEFAULT_GRADIENT_STEP: f64 = 1e-4;
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedGradient {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    /// Same stencil at twice the step.
    pub coarse: Vec<f64>,
    /// Largest componentwise gap between the two stencils.
    pub noise: f64,
    pub step: f64,
    pub j: f64,
}

impl ReducedGradient {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn gradient_report(
    chart: &Chart,
    x: &DVector<f64>,
    k: &KFunction,
    q: &QuadratureScheme,
    h: f64,
) -> Result<ReducedGradient, BubbleError> {
    let fine = gradient_at(chart, x, k, q, h);
    let coarse = gradient_at(chart, x, k, q, 2.0 * h);
    let noise = (&fine - &coarse).amax();
    let j = chart.j(x, k, q);
    if !j.is_finite() || fine.iter().any(|g| !g.is_finite()) {
        return Err(BubbleError::NonFinite);
    }
    if noise > 1e-4 * j.abs() {
        let panels = match q.kind {
            super::QuadratureKind::Radial { panels, .. } => 2 * panels,
            super::QuadratureKind::MonteCarlo { samples, .. } => 4 * samples,
        };
        return Err(BubbleError::NoisyGradient { noise, suggested_panels: panels });
    }
    Ok(ReducedGradient {
        labels: chart.labels(),
        values: fine.iter().copied().collect(),
        coarse: coarse.iter().copied().collect(),
        noise,
        step: h,
        j,
    })
}

/// Central-difference gradient of `J` in chart coordinates at `u`.
pub fn reduced_gradient(u: &BubbleSum, k: &KFunction, q: &QuadratureScheme) -> Result<ReducedGradient, BubbleError> {
    check_inputs(u, k, q)?;
    let chart = Chart::at(u, k, q);
    gradient_report(&chart, &chart.origin(u), k, q, DEFAULT_GRADIENT_STEP)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseCount {
    pub negative: usize,
    pub positive: usize,
    /// Eigenvalues inside the noise band.
    pub indeterminate: usize,
    pub eigenvalues: Vec<f64>,
    pub noise_band: f64,
    pub labels: Vec<String>,
}

impl MorseCount {
    /// The count is only meaningful when nothing is indeterminate.
    pub fn conclusive(&self) -> bool {
        self.indeterminate == 0
    }
}

fn morse_count(chart: &Chart, x: &DVector<f64>, k: &KFunction, q: &QuadratureScheme, h: f64) -> MorseCount {
    let fine = hessian_at(chart, x, k, q, h);
    let coarse = hessian_at(chart, x, k, q, 2.0 * h);
    let j = chart.j(x, k, q);
    let gap = (&fine - &coarse).symmetric_eigenvalues().amax();
    let roundoff = 16.0 * f64::EPSILON * j.abs() / (h * h);
    let band = 10.0 * (gap + roundoff);
    let mut eigenvalues: Vec<f64> = fine.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let indeterminate = eigenvalues.iter().filter(|e| e.abs() < band).count();
    let negative = eigenvalues.iter().filter(|&&e| e <= -band).count();
    let positive = eigenvalues.iter().filter(|&&e| e >= band).count();
    MorseCount { negative, positive, indeterminate, eigenvalues, noise_band: band, labels: chart.labels() }
}

/// Number of negative eigenvalues of the finite-difference Hessian of `J`
/// in chart coordinates, with a noise band estimated from two step sizes.
pub fn reduced_morse_index(u: &BubbleSum, k: &KFunction, q: &QuadratureScheme) -> Result<MorseCount, BubbleError> {
    check_inputs(u, k, q)?;
    let chart = Chart::at(u, k, q);
    Ok(morse_count(&chart, &chart.origin(u), k, q, DEFAULT_HESSIAN_STEP))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// Armijo descent on `J` after maximizing over the coefficient ratios.
    Descent,
    /// Newton iteration on the reduced gradient; finds saddles as well as minima.
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowOptions {
    pub mode: FlowMode,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub lambda_cap: f64,
    /// Largest coordinate change per step.
    pub max_step: f64,
    pub quadrature: QuadratureScheme,
    /// Known blow-up points, for the nearest-point report.
    pub blow_up_points: Vec<Vec<f64>>,
}

impl FlowOptions {
    pub fn new(mode: FlowMode, quadrature: QuadratureScheme) -> Self {
        let max_iterations = match mode {
            FlowMode::Descent => 400,
            FlowMode::Newton => 60,
        };
        Self {
            mode,
            max_iterations,
            gradient_tolerance: 1e-7,
            lambda_cap: 1e4,
            max_step: 0.5,
            quadrature,
            blow_up_points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxIterations,
    /// Some `lambda` passed the cap; meaningful when `tau` is too small.
    BlowUpEscape,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowStep {
    pub step: usize,
    pub j: f64,
    pub gradient_norm: f64,
    pub centers: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestBlowUp {
    pub bubble: usize,
    pub point: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub status: FlowStatus,
    pub mode: FlowMode,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub j: f64,
    pub trajectory: Vec<FlowStep>,
    pub nearest: Vec<NearestBlowUp>,
}

impl FlowReport {
    pub fn converged(&self) -> bool {
        self.status == FlowStatus::Converged
    }
}

fn record(step: usize, u: &BubbleSum, j: f64, gradient_norm: f64) -> FlowStep {
    FlowStep {
        step,
        j,
        gradient_norm,
        centers: u.bubbles().iter().map(|b| b.a.clone()).collect(),
        lambdas: u.bubbles().iter().map(|b| b.lambda).collect(),
        alphas: u.alphas().to_vec(),
    }
}

fn clip(step: &mut DVector<f64>, limit: f64) {
    let m = step.amax();
    if m > limit {
        *step *= limit / m;
    }
}

/// Newton steps on the coefficient ratios alone, which `J` maximizes.
fn maximize_alphas(chart: &Chart, x: &mut DVector<f64>, k: &KFunction, q: &QuadratureScheme, tol: f64) {
    let range = chart.alpha_coords();
    if range.is_empty() {
        return;
    }
    let d = range.len();
    let h = DEFAULT_HESSIAN_STEP;
    for _ in 0..30 {
        let mut g = DVector::zeros(d);
        let mut hm = DMatrix::zeros(d, d);
        let f0 = chart.j(x, k, q);
        let eval = |y: &DVector<f64>| chart.j(y, k, q);
        for a in 0..d {
            let mut p = x.clone();
            let mut m = x.clone();
            p[a] += h;
            m[a] -= h;
            let (fp, fm) = (eval(&p), eval(&m));
            g[a] = (fp - fm) / (2.0 * h);
            hm[(a, a)] = (fp - 2.0 * f0 + fm) / (h * h);
            for b in 0..a {
                let mut pp = x.clone();
                pp[a] += h;
                pp[b] += h;
                let mut pm = x.clone();
                pm[a] += h;
                pm[b] -= h;
                let mut mp = x.clone();
                mp[a] -= h;
                mp[b] += h;
                let mut mm = x.clone();
                mm[a] -= h;
                mm[b] -= h;
                let v = (eval(&pp) - eval(&pm) - eval(&mp) + eval(&mm)) / (4.0 * h * h);
                hm[(a, b)] = v;
                hm[(b, a)] = v;
            }
        }
        if g.amax() < tol {
            return;
        }
        // Ascent: use -|H| so the step always increases J.
        let eig = hm.symmetric_eigen();
        let mut step = DVector::zeros(d);
        for (i, &mu) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(i);
            step += v * (v.dot(&g) / mu.abs().max(1e-8));
        }
        clip(&mut step, 0.5);
        for a in 0..d {
            x[range.start + a] += step[a];
        }
    }
}

fn nearest_report(u: &BubbleSum, points: &[Vec<f64>]) -> Vec<NearestBlowUp> {
    if points.is_empty() {
        return Vec::new();
    }
    u.bubbles()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let a = b.center();
            let (point, distance) = points
                .iter()
                .enumerate()
                .map(|(j, p)| (j, geodesic_distance(&a, &DVector::from_column_slice(p))))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("non-empty");
            NearestBlowUp { bubble: i, point, distance }
        })
        .collect()
}

fn escaped(u: &BubbleSum, cap: f64) -> bool {
    u.bubbles().iter().any(|b| b.lambda > cap || b.lambda < 1.0 / cap)
}

/// Drives `u0` to a critical point of `J_{K,tau}` in bubble-parameter space.
pub fn flow_to_critical(
    u0: &BubbleSum,
    k: &KFunction,
    opts: &FlowOptions,
) -> Result<(BubbleSum, FlowReport), BubbleError> {
    let q = &opts.quadrature;
    check_inputs(u0, k, q)?;
    if !(u0.tau() > 0.0) {
        return Err(BubbleError::Tau { tau: u0.tau(), limit: 4.0 / (u0.n() as f64 - 2.0) });
    }
    let tol = opts.gradient_tolerance;
    let mut chart = Chart::at(u0, k, q);
    let mut u = u0.clone();
    let mut trajectory = Vec::new();
    let mut status = FlowStatus::MaxIterations;
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    let mut j = chart.j(&chart.origin(&u), k, q);
    let mut armijo: f64 = 1.0;

    if opts.mode == FlowMode::Newton {
        // Settle the scales first: J is convex in log lambda near a bubble critical point.
        for _ in 0..40 {
            let x = chart.origin(&u);
            let mut moved = x.clone();
            let mut largest: f64 = 0.0;
            for i in 0..u.len() {
                let c = chart.lambda_coord(i);
                let h = DEFAULT_HESSIAN_STEP;
                let mut p = x.clone();
                let mut m = x.clone();
                p[c] += h;
                m[c] -= h;
                let (fp, f0, fm) = (chart.j(&p, k, q), chart.j(&x, k, q), chart.j(&m, k, q));
                let g = (fp - fm) / (2.0 * h);
                let curv = (fp - 2.0 * f0 + fm) / (h * h);
                let step = if curv > 0.0 { -g / curv } else { -g.signum() * opts.max_step };
                let step = step.clamp(-opts.max_step, opts.max_step);
                largest = largest.max(g.abs());
                moved[c] += step;
            }
            if largest < tol {
                break;
            }
            let (c, v) = chart.recenter(&moved);
            chart = c;
            u = v;
            if escaped(&u, opts.lambda_cap) {
                break;
            }
        }
    }

    for it in 0..opts.max_iterations {
        iterations = it;
        if escaped(&u, opts.lambda_cap) {
            status = FlowStatus::BlowUpEscape;
            break;
        }
        let mut x = chart.origin(&u);
        if opts.mode == FlowMode::Descent {
            maximize_alphas(&chart, &mut x, k, q, 0.1 * tol);
        }
        let grad = gradient_report(&chart, &x, k, q, DEFAULT_GRADIENT_STEP)?;
        let g = DVector::from_vec(grad.values.clone());
        j = grad.j;
        gnorm = g.norm();
        trajectory.push(record(it, &chart.point(&x).0, j, gnorm));
        if gnorm < tol {
            status = FlowStatus::Converged;
            let (c, v) = chart.recenter(&x);
            chart = c;
            u = v;
            break;
        }
        let next = match opts.mode {
            FlowMode::Descent => {
                let mut dir = -g.clone();
                for a in chart.alpha_coords() {
                    dir[a] = 0.0;
                }
                let slope = dir.norm_squared();
                let mut s = (armijo * 2.0).min(opts.max_step / dir.amax().max(1e-300));
                let mut accepted = None;
                for _ in 0..40 {
                    let mut trial = &x + &dir * s;
                    maximize_alphas(&chart, &mut trial, k, q, 0.1 * tol);
                    let jt = chart.j(&trial, k, q);
                    if jt <= j - 1e-4 * s * slope {
                        accepted = Some(trial);
                        break;
                    }
                    s *= 0.5;
                }
                armijo = s;
                match accepted {
                    Some(t) => t,
                    None => {
                        // No decrease resolvable above roundoff: treat as converged to noise level.
                        status = FlowStatus::Converged;
                        break;
                    }
                }
            }
            FlowMode::Newton => {
                let h = hessian_at(&chart, &x, k, q, DEFAULT_HESSIAN_STEP);
                let eig = h.symmetric_eigen();
                let floor = 1e-8 * eig.eigenvalues.amax().max(1e-300);
                let mut step = DVector::zeros(x.len());
                for (i, &mu) in eig.eigenvalues.iter().enumerate() {
                    let v = eig.eigenvectors.column(i);
                    let mu = if mu.abs() < floor { floor.copysign(mu) } else { mu };
                    step -= v * (v.dot(&g) / mu);
                }
                clip(&mut step, opts.max_step);
                let mut trial = &x + &step;
                for _ in 0..6 {
                    let gt = gradient_at(&chart, &trial, k, q, DEFAULT_GRADIENT_STEP);
                    if gt.norm() < gnorm {
                        break;
                    }
                    step *= 0.5;
                    trial = &x + &step;
                }
                trial
            }
        };
        let (c, v) = chart.recenter(&next);
        chart = c;
        u = v;
    }
    if status == FlowStatus::Converged && trajectory.last().map(|s| s.step) != Some(iterations) {
        let x = chart.origin(&u);
        j = chart.j(&x, k, q);
        trajectory.push(record(iterations + 1, &u, j, gnorm));
    }
    let nearest = nearest_report(&u, &opts.blow_up_points);
    let report =
        FlowReport { status, mode: opts.mode, iterations: iterations + 1, gradient_norm: gnorm, j, trajectory, nearest };
    Ok((u, report))
}
