//! Integration over `S^n` of integrands concentrated at bubbles.
//!
//! `Radial`: for each bubble, geodesic polar coordinates around its center
//! with the radial variable `v` defined by `tan(theta/2) = e^v / lambda`.
//! In `v` the bubble density `delta^{2n/(n-2)} sin^n(theta)` becomes
//! `c0^{2n/(n-2)} (2 cosh v)^{-n}` whatever `lambda` is, so a fixed
//! Gauss-Legendre panel grid on `[-L, L]` resolves every scale. Directions
//! use a product rule on `S^{n-1}`. Several bubbles are combined through
//! the partition of unity `chi_i ~ (alpha_i delta_i)^2`.
//!
//! `MonteCarlo`: stratified mixture sampling. Each bubble stratum pushes
//! uniform points through the conformal dilation, which has density
//! `delta^{2n/(n-2)} / S_n`; a defensive uniform stratum keeps weights bounded.

use super::gauss::{gauss_chebyshev_u, gauss_legendre};
use super::{bubble_constant, critical_exponent, sobolev_constant, BubbleError, BubbleSum};
use crate::sphere::{random_unit, sphere_area, tangent_frame};
use crate::KFunction;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularOrder {
    /// One direction when the integrand is axially symmetric, otherwise a dimension-dependent default.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadratureKind {
    Radial { panels: usize, nodes_per_panel: usize, angular: AngularOrder },
    MonteCarlo { samples: usize, seed: u64, defensive: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    #[serde(flatten)]
    pub kind: QuadratureKind,
    /// Relative tolerance on the node-doubling difference.
    pub tolerance: f64,
}

pub const MIN_NODES: usize = 16;

impl QuadratureScheme {
    pub fn radial(panels: usize, nodes_per_panel: usize, angular: AngularOrder) -> Self {
        Self { kind: QuadratureKind::Radial { panels, nodes_per_panel, angular }, tolerance: 1e-6 }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { kind: QuadratureKind::MonteCarlo { samples, seed, defensive: 0.1 }, tolerance: 1e-2 }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn nodes_per_bubble(&self) -> usize {
        match self.kind {
            QuadratureKind::Radial { panels, nodes_per_panel, .. } => panels * nodes_per_panel,
            QuadratureKind::MonteCarlo { samples, .. } => samples,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), BubbleError> {
        if self.nodes_per_bubble() < MIN_NODES {
            return Err(BubbleError::Quadrature(format!("need at least {MIN_NODES} nodes")));
        }
        if !(self.tolerance > 0.0) {
            return Err(BubbleError::Quadrature("tolerance must be positive".into()));
        }
        match self.kind {
            QuadratureKind::Radial { angular: AngularOrder::Fixed(o), .. } => {
                if o == 0 {
                    return Err(BubbleError::Quadrature("angular order must be positive".into()));
                }
                if o > 1 && n >= 7 {
                    return Err(BubbleError::Quadrature(
                        "product angular rules are limited to n <= 6; use monte_carlo".into(),
                    ));
                }
            }
            QuadratureKind::MonteCarlo { defensive, .. } => {
                if !(defensive > 0.0 && defensive < 1.0) {
                    return Err(BubbleError::Quadrature("defensive share must lie in (0, 1)".into()));
                }
                if n >= 7 {
                    log::warn!("monte carlo quadrature at n = {n}: expect slow convergence");
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Angular order actually used for `u` and `k`.
    pub fn angular_order(&self, u: &BubbleSum, k: &KFunction) -> usize {
        match self.kind {
            QuadratureKind::Radial { angular: AngularOrder::Fixed(o), .. } => o,
            QuadratureKind::Radial { angular: AngularOrder::Auto, .. } => {
                if k.is_constant() && collinear(u) {
                    1
                } else {
                    default_angular_order(u.n())
                }
            }
            QuadratureKind::MonteCarlo { .. } => 0,
        }
    }
}

pub fn default_angular_order(n: usize) -> usize {
    match n {
        0..=3 => 16,
        4 => 10,
        5 => 6,
        _ => 4,
    }
}

fn collinear(u: &BubbleSum) -> bool {
    let a0 = u.bubbles()[0].center();
    u.bubbles().iter().all(|b| (b.center().dot(&a0).abs() - 1.0).abs() < 1e-14)
}

/// Product rule on `S^d`: unit vectors in `R^{d+1}` and weights.
pub fn sphere_rule(d: usize, order: usize) -> (Vec<DVector<f64>>, Vec<f64>) {
    if order == 1 {
        let mut e = DVector::zeros(d + 1);
        e[0] = 1.0;
        return (vec![e], vec![sphere_area(d)]);
    }
    if d == 0 {
        return (vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-1.0])], vec![1.0, 1.0]);
    }
    if d == 1 {
        let count = 2 * order;
        let h = 2.0 * std::f64::consts::PI / count as f64;
        let nodes = (0..count).map(|k| DVector::from_vec(vec![(k as f64 * h).cos(), (k as f64 * h).sin()])).collect();
        return (nodes, vec![h; count]);
    }
    let (ts, mut wt) = if d % 2 == 1 { gauss_chebyshev_u(order) } else { gauss_legendre(order) };
    let power = if d % 2 == 1 { (d - 3) / 2 } else { (d - 2) / 2 };
    for (w, t) in wt.iter_mut().zip(&ts) {
        *w *= (1.0 - t * t).powi(power as i32);
    }
    let (sub, wsub) = sphere_rule(d - 1, order);
    let mut nodes = Vec::with_capacity(ts.len() * sub.len());
    let mut weights = Vec::with_capacity(ts.len() * sub.len());
    for (t, w) in ts.iter().zip(&wt) {
        let r = (1.0 - t * t).sqrt();
        for (s, ws) in sub.iter().zip(&wsub) {
            let mut x = DVector::zeros(d + 1);
            x[0] = *t;
            x.rows_mut(1, d).copy_from(&(s * r));
            nodes.push(x);
            weights.push(w * ws);
        }
    }
    (nodes, weights)
}

/// Half-width of the radial window in `v`.
fn radial_window(n: usize) -> f64 {
    40.0 / n as f64 + 1.0
}

fn add<const M: usize>(acc: &mut [f64; M], w: f64, v: &[f64; M]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += w * x;
    }
}

/// Partition weight of bubble `i` at `x`.
fn partition(u: &BubbleSum, i: usize, x: &[f64]) -> f64 {
    if u.len() == 1 {
        return 1.0;
    }
    let n = u.n();
    let mut own = 0.0;
    let mut total = 0.0;
    for (j, (b, al)) in u.bubbles().iter().zip(u.alphas()).enumerate() {
        let t: f64 = b.a.iter().zip(x).map(|(a, x)| a * x).sum();
        let v = al * b.profile(t, n);
        let v2 = v * v;
        total += v2;
        if j == i {
            own = v2;
        }
    }
    own / total
}

/// Integrates a vector-valued integrand. `frames` gives a tangent frame at
/// each bubble center (radial rule only); `refine` multiplies node counts.
pub(crate) fn integrate<const M: usize, F>(
    scheme: &QuadratureScheme,
    refine: usize,
    angular: usize,
    u: &BubbleSum,
    frames: &[DMatrix<f64>],
    f: F,
) -> [f64; M]
where
    F: Fn(&[f64]) -> [f64; M] + Sync,
{
    match scheme.kind {
        QuadratureKind::Radial { panels, nodes_per_panel, .. } => {
            let ang = if angular == 1 { 1 } else { angular * refine };
            radial(u, frames, panels * refine, nodes_per_panel, ang, &f)
        }
        QuadratureKind::MonteCarlo { samples, seed, defensive } => {
            monte_carlo(u, samples * refine, seed, defensive, &f)
        }
    }
}

fn radial<const M: usize, F>(
    u: &BubbleSum,
    frames: &[DMatrix<f64>],
    panels: usize,
    per_panel: usize,
    angular: usize,
    f: &F,
) -> [f64; M]
where
    F: Fn(&[f64]) -> [f64; M] + Sync,
{
    let n = u.n();
    let big_l = radial_window(n);
    let (gx, gw) = gauss_legendre(per_panel);
    let width = 2.0 * big_l / panels as f64;
    let mut vnodes = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let mid = -big_l + (p as f64 + 0.5) * width;
        for (x, w) in gx.iter().zip(&gw) {
            vnodes.push((mid + 0.5 * width * x, 0.5 * width * w));
        }
    }
    let (omegas, ow) = sphere_rule(n - 1, angular);
    let mut total = [0.0; M];
    for (i, b) in u.bubbles().iter().enumerate() {
        let a = b.center();
        let frame = &frames[i];
        let dirs: Vec<DVector<f64>> = omegas.iter().map(|o| frame * o).collect();
        let parts: Vec<[f64; M]> = vnodes
            .par_iter()
            .map(|&(v, wv)| {
                let s = v.exp() / b.lambda;
                let s2 = s * s;
                let (c, sn) = ((1.0 - s2) / (1.0 + s2), 2.0 * s / (1.0 + s2));
                let radial_weight = wv * sn.powi(n as i32);
                let mut acc = [0.0; M];
                let mut x = vec![0.0; n + 1];
                for (d, w) in dirs.iter().zip(&ow) {
                    for k in 0..=n {
                        x[k] = c * a[k] + sn * d[k];
                    }
                    let val = f(&x);
                    add(&mut acc, w * partition(u, i, &x), &val);
                }
                acc.iter_mut().for_each(|e| *e *= radial_weight);
                acc
            })
            .collect();
        for p in &parts {
            add(&mut total, 1.0, p);
        }
    }
    total
}

/// Moves `y` by the conformal dilation centered at `a` with factor `lambda`.
fn dilate(y: &DVector<f64>, a: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let t = y.dot(a);
    let w = y - a * t;
    let r = w.norm();
    if r < 1e-300 {
        return if t > 0.0 { a.clone() } else { -a };
    }
    let half = if t > -0.5 { r / (1.0 + t) } else { (1.0 - t) / r };
    let s = half / lambda;
    let s2 = s * s;
    a * ((1.0 - s2) / (1.0 + s2)) + w * (2.0 * s / ((1.0 + s2) * r))
}

fn monte_carlo<const M: usize, F>(u: &BubbleSum, samples: usize, seed: u64, defensive: f64, f: &F) -> [f64; M]
where
    F: Fn(&[f64]) -> [f64; M] + Sync,
{
    let n = u.n();
    let k = u.len();
    let area = sphere_area(n);
    let s_n = sobolev_constant(n).expect("n >= 3 checked by BubbleSum");
    let p_crit = critical_exponent(n);
    let shares: Vec<f64> = std::iter::once(defensive).chain(std::iter::repeat_n((1.0 - defensive) / k as f64, k)).collect();
    let centers: Vec<DVector<f64>> = u.bubbles().iter().map(|b| b.center()).collect();
    let density = |x: &[f64]| -> f64 {
        let mut q = shares[0] / area;
        for (j, b) in u.bubbles().iter().enumerate() {
            let t: f64 = b.a.iter().zip(x).map(|(a, x)| a * x).sum();
            q += shares[j + 1] * b.profile(t, n).powf(p_crit) / s_n;
        }
        q
    };
    let mut total = [0.0; M];
    for (stratum, share) in shares.iter().enumerate() {
        let count = ((share * samples as f64).round() as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stratum as u64);
        let ys: Vec<DVector<f64>> = (0..count).map(|_| random_unit(n, &mut rng)).collect();
        let parts: Vec<[f64; M]> = ys
            .par_chunks(1024)
            .map(|chunk| {
                let mut acc = [0.0; M];
                for y in chunk {
                    let x = if stratum == 0 {
                        y.clone()
                    } else {
                        let b = &u.bubbles()[stratum - 1];
                        dilate(y, &centers[stratum - 1], b.lambda)
                    };
                    let xs = x.as_slice();
                    add(&mut acc, 1.0 / density(xs), &f(xs));
                }
                acc
            })
            .collect();
        for p in &parts {
            add(&mut total, share / count as f64, p);
        }
    }
    total
}

/// Default tangent frames at the bubble centers.
pub fn default_frames(u: &BubbleSum) -> Vec<DMatrix<f64>> {
    u.bubbles().iter().map(|b| tangent_frame(&b.center())).collect()
}

/// `int_{S^n} delta^{2n/(n-2)}` for one bubble, used as a calibration check.
pub fn bubble_mass(u: &BubbleSum, scheme: &QuadratureScheme) -> f64 {
    let n = u.n();
    let p = critical_exponent(n);
    let frames = default_frames(u);
    let angular = match scheme.kind {
        QuadratureKind::Radial { angular: AngularOrder::Fixed(o), .. } => o,
        _ => 1,
    };
    let b = u.bubbles()[0].clone();
    let c0 = bubble_constant(n);
    let r = integrate(scheme, 1, angular, u, &frames, |x| {
        let t: f64 = b.a.iter().zip(x).map(|(a, x)| a * x).sum();
        [b.profile_with_slope(t, n, c0).0.powf(p)]
    });
    r[0]
}
