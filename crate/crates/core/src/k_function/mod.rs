//! Prescribed-curvature candidates `K = beta * (1 + eps * f)` on `S^n`,
//! where `f` is a finite sum of smooth bumps
//! `w * exp(-(1 - <x, c>) / s^2)`.
//!
//! Derivatives are intrinsic: the tangential gradient, the Riemannian
//! Hessian `P D^2F P - <DF, x> P` and the Laplace-Beltrami operator, all
//! obtained from closed-form ambient derivatives of the bumps.

mod critical;

pub use critical::{extract_k_infinity, find_critical_points, CriticalPoint, CriticalSearch, KInfinity};

use crate::sphere::{self, check_point, GeometryError, Point};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("dimension n = {0} must be at least 2")]
    Dimension(usize),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("bump {index}: {reason}")]
    BadTerm { index: usize, reason: String },
    #[error("K is not positive: minimum {0} found")]
    NonPositive(f64),
    #[error("H1 violated at {location:?}: {reason}")]
    H1Violated { location: Vec<f64>, reason: String },
    #[error("no critical point with negative Laplacian was found")]
    EmptyBlowUpSet,
    #[error("highest critical point found (K = {0}) is not a local maximum; the search is incomplete")]
    MissingMaximum(f64),
    #[error("eta = {eta} must lie in (0, 1/(2N+1)) = (0, {limit})")]
    EtaOutOfRange { eta: f64, limit: f64 },
    #[error("max level N must be at least 1")]
    ZeroLevel,
    #[error(transparent)]
    Index(#[from] crate::index_calculus::IndexError),
}

/// One bump `weight * exp(-(1 - <x, center>) / width^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpTerm {
    pub center: Vec<f64>,
    pub weight: f64,
    pub width: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct RawKFunction {
    n: usize,
    epsilon: f64,
    #[serde(default)]
    terms: Vec<BumpTerm>,
    #[serde(default = "default_scale")]
    scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKFunction")]
pub struct KFunction {
    n: usize,
    epsilon: f64,
    terms: Vec<BumpTerm>,
    /// Overall factor `beta`; 1 unless the function has been normalised.
    scale: f64,
    #[serde(skip)]
    centers: Vec<Point>,
}

impl TryFrom<RawKFunction> for KFunction {
    type Error = KError;

    fn try_from(raw: RawKFunction) -> Result<Self, KError> {
        KFunction::with_scale(raw.n, raw.epsilon, raw.terms, raw.scale)
    }
}

/// Number of sample points used for positivity and extremum estimates.
const DENSE_SAMPLES: usize = 20_000;

impl KFunction {
    pub fn new(n: usize, epsilon: f64, terms: Vec<BumpTerm>) -> Result<Self, KError> {
        Self::with_scale(n, epsilon, terms, 1.0)
    }

    /// `K = scale` everywhere.
    pub fn constant(n: usize, scale: f64) -> Result<Self, KError> {
        Self::with_scale(n, 1.0, Vec::new(), scale)
    }

    pub fn with_scale(n: usize, epsilon: f64, terms: Vec<BumpTerm>, scale: f64) -> Result<Self, KError> {
        if n < 2 {
            return Err(KError::Dimension(n));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(KError::Epsilon(epsilon));
        }
        let mut centers = Vec::with_capacity(terms.len());
        for (index, t) in terms.iter().enumerate() {
            if t.center.len() != n + 1 {
                return Err(KError::BadTerm { index, reason: format!("center must lie in R^{}", n + 1) });
            }
            if !(t.width > 0.0 && t.width.is_finite()) {
                return Err(KError::BadTerm { index, reason: format!("width must be positive, got {}", t.width) });
            }
            if !t.weight.is_finite() {
                return Err(KError::BadTerm { index, reason: "weight must be finite".into() });
            }
            let c = DVector::from_column_slice(&t.center);
            let norm = c.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(KError::BadTerm { index, reason: format!("center has norm {norm}") });
            }
            centers.push(c / norm);
        }
        let k = Self { n, epsilon, terms, scale, centers };
        let min = k.sample_extremes(DENSE_SAMPLES).0;
        if !(min > 0.0) || !(scale > 0.0) {
            return Err(KError::NonPositive(min.min(scale)));
        }
        Ok(k)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn terms(&self) -> &[BumpTerm] {
        &self.terms
    }

    /// Ambient dimension `n + 1`.
    pub fn ambient(&self) -> usize {
        self.n + 1
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.weight == 0.0)
    }

    /// `K(x)` without the unit-norm check. Used by quadrature loops.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut f = 0.0;
        for (t, c) in self.terms.iter().zip(&self.centers) {
            let dot: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
            f += t.weight * (-(1.0 - dot) / (t.width * t.width)).exp();
        }
        self.scale * (1.0 + self.epsilon * f)
    }

    /// Ambient gradient and Hessian of the extension `F(x) = K(x)` to `R^{n+1}`.
    fn ambient_derivatives(&self, x: &Point) -> (DVector<f64>, DMatrix<f64>) {
        let dim = self.ambient();
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        let amp = self.scale * self.epsilon;
        for (t, c) in self.terms.iter().zip(&self.centers) {
            let s2 = t.width * t.width;
            let bump = t.weight * (-(1.0 - c.dot(x)) / s2).exp();
            g.axpy(amp * bump / s2, c, 1.0);
            h.ger(amp * bump / (s2 * s2), c, c, 1.0);
        }
        (g, h)
    }

    pub fn eval(&self, x: &Point) -> Result<f64, GeometryError> {
        check_point(x, self.ambient())?;
        Ok(self.eval_unchecked(x.as_slice()))
    }

    /// Tangential gradient, as an ambient vector orthogonal to `x`.
    pub fn grad(&self, x: &Point) -> Result<DVector<f64>, GeometryError> {
        check_point(x, self.ambient())?;
        let (g, _) = self.ambient_derivatives(x);
        Ok(sphere::project_tangent(x, &g))
    }

    /// Riemannian Hessian as an ambient `(n+1) x (n+1)` form acting on tangent vectors.
    pub fn hess(&self, x: &Point) -> Result<DMatrix<f64>, GeometryError> {
        check_point(x, self.ambient())?;
        let (g, h) = self.ambient_derivatives(x);
        let dim = self.ambient();
        let p = DMatrix::identity(dim, dim) - x * x.transpose();
        Ok(&p * h * &p - p * g.dot(x))
    }

    /// Riemannian Hessian in an orthonormal tangent frame (`frame` is `(n+1) x n`).
    pub fn hess_in_frame(&self, x: &Point, frame: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
        check_point(x, self.ambient())?;
        let (g, h) = self.ambient_derivatives(x);
        let n = frame.ncols();
        Ok(frame.transpose() * h * frame - DMatrix::identity(n, n) * g.dot(x))
    }

    /// Laplace-Beltrami operator, the trace of the Riemannian Hessian.
    pub fn laplace(&self, x: &Point) -> Result<f64, GeometryError> {
        check_point(x, self.ambient())?;
        let (g, h) = self.ambient_derivatives(x);
        let hx = &h * x;
        let trace_p_h_p = h.trace() - 2.0 * x.dot(&hx) + x.dot(&hx) * x.norm_squared();
        Ok(trace_p_h_p - self.n as f64 * g.dot(x))
    }

    /// Minimum and maximum of `K` over a deterministic sample, including the bump centers.
    pub fn sample_extremes(&self, count: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |x: &Point| {
            let v = self.eval_unchecked(x.as_slice());
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for c in &self.centers {
            visit(c);
            visit(&(-c));
        }
        for x in sphere::quasi_uniform_points(self.n, count, 0x5eed) {
            visit(&x);
        }
        (lo, hi)
    }

    /// Estimated `K_max / K_min - 1`.
    pub fn pinching(&self) -> f64 {
        let (lo, hi) = self.refined_extremes();
        hi / lo - 1.0
    }

    /// Extremes from the dense sample, polished by local descent/ascent from the best samples.
    pub fn refined_extremes(&self) -> (f64, f64) {
        let samples = sphere::quasi_uniform_points(self.n, DENSE_SAMPLES, 0x5eed);
        let mut values: Vec<(f64, usize)> =
            samples.iter().enumerate().map(|(i, x)| (self.eval_unchecked(x.as_slice()), i)).collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut lo = values[0].0;
        let mut hi = values[values.len() - 1].0;
        for c in &self.centers {
            lo = lo.min(self.eval_unchecked(c.as_slice())).min(self.eval_unchecked((-c).as_slice()));
            hi = hi.max(self.eval_unchecked(c.as_slice()));
        }
        for &(_, i) in values.iter().take(8) {
            lo = lo.min(self.local_extremum(&samples[i], -1.0));
        }
        for &(_, i) in values.iter().rev().take(8) {
            hi = hi.max(self.local_extremum(&samples[i], 1.0));
        }
        (lo, hi)
    }

    /// Riemannian gradient ascent (`direction = 1`) or descent (`-1`) with backtracking.
    fn local_extremum(&self, start: &Point, direction: f64) -> f64 {
        let mut x = start.clone();
        let mut value = self.eval_unchecked(x.as_slice());
        let mut step = 1.0;
        for _ in 0..500 {
            let (g, _) = self.ambient_derivatives(&x);
            let g = sphere::project_tangent(&x, &g);
            let gn = g.norm();
            if gn < 1e-13 {
                break;
            }
            loop {
                let trial = sphere::exp_map(&x, &(&g * (direction * step)));
                let tv = self.eval_unchecked(trial.as_slice());
                if direction * (tv - value) >= 0.5 * step * gn * gn {
                    x = trial;
                    value = tv;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    return value;
                }
            }
        }
        value
    }

    /// Rescales `K` so that its minimum is 1; returns the new function and the factor `beta`.
    pub fn normalize(&self) -> Result<(KFunction, f64), KError> {
        let (lo, _) = self.refined_extremes();
        if !(lo > 0.0) {
            return Err(KError::NonPositive(lo));
        }
        let beta = 1.0 / lo;
        let mut out = self.clone();
        out.scale *= beta;
        Ok((out, beta))
    }
}

/// Upper limit on `eps` below which all sublevel windows up to level `N`
/// stay free of critical points:
/// `((N+1)/N)^{2/(n-2)} ((1-eta)/(1+eta))^{2/(n-2)} - 1`.
///
/// Only the explicit part of the admissibility window is computable; the
/// companion constant `eps_{N,eta}` is not constructive.
pub fn admissible_epsilon(max_level: usize, eta: f64, n: usize) -> Result<f64, KError> {
    if max_level == 0 {
        return Err(KError::ZeroLevel);
    }
    if n < 3 {
        return Err(KError::Dimension(n));
    }
    let limit = 1.0 / (2 * max_level + 1) as f64;
    if !(eta > 0.0 && eta < limit) {
        return Err(KError::EtaOutOfRange { eta, limit });
    }
    let big_n = max_level as f64;
    let ratio = (big_n + 1.0) / big_n * (1.0 - eta) / (1.0 + eta);
    Ok(ratio.powf(2.0 / (n as f64 - 2.0)) - 1.0)
}
