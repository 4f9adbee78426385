//! Bubbles on `S^n` and the subcritical quotient functional built from them.
//!
//! A bubble is `c0 lambda^{(n-2)/2} (2 + (lambda^2 - 1)(1 - <x, a>))^{-(n-2)/2}`
//! with `c0 = (n(n-2))^{(n-2)/4}`; it solves `L u = u^{(n+2)/(n-2)}` for the
//! conformal Laplacian `L = -Delta + n(n-2)/4`.

mod flow;
mod functional;
pub mod gauss;
pub mod quadrature;

pub use flow::{
    flow_to_critical, reduced_gradient, reduced_morse_index, Chart, FlowMode, FlowOptions, FlowReport, FlowStatus,
    FlowStep, MorseCount, NearestBlowUp, ReducedGradient,
};
pub use functional::{energy_parts, functional_j, i_from_j, EnergyParts, JEstimate};
pub use quadrature::{AngularOrder, QuadratureKind, QuadratureScheme};

use crate::sphere::{check_point, geodesic_distance, GeometryError, Point};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BubbleError {
    #[error("bubble calculus needs n >= 3, got {0}")]
    Dimension(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error("coefficients must be positive, got {0}")]
    Alpha(f64),
    #[error("tau = {tau} must lie in [0, {limit})")]
    Tau { tau: f64, limit: f64 },
    #[error("bubble sum needs matching bubbles and coefficients ({bubbles} vs {alphas})")]
    Shape { bubbles: usize, alphas: usize },
    #[error("K lives on S^{k}, bubbles on S^{u}")]
    Mismatch { k: usize, u: usize },
    #[error("invalid quadrature: {0}")]
    Quadrature(String),
    #[error("quadrature did not converge: value {value}, doubling difference {difference} > tolerance {tolerance}")]
    QuadratureNonconvergence { value: f64, difference: f64, tolerance: f64 },
    #[error("finite-difference noise {noise:e} swamps the gradient; try {suggested_panels} radial panels")]
    NoisyGradient { noise: f64, suggested_panels: usize },
    #[error("J is not finite at the current parameters")]
    NonFinite,
}

/// `Gamma(n/2) pi^{n/2} / Gamma(n)` is `int_{R^n} (1 + |x|^2)^{-n} dx`.
pub fn sobolev_constant(n: usize) -> Result<f64, BubbleError> {
    if n < 3 {
        return Err(BubbleError::Dimension(n));
    }
    let nf = n as f64;
    let log = 0.5 * nf * (nf * (nf - 2.0)).ln() + 0.5 * nf * std::f64::consts::PI.ln() + libm::lgamma(0.5 * nf)
        - libm::lgamma(nf);
    Ok(log.exp())
}

/// Largest supported number of bubbles in a sum.
pub const MAX_BUBBLES: usize = 16;

/// `2n / (n - 2)`.
pub fn critical_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// `(n(n-2))^{(n-2)/4}`.
pub fn bubble_constant(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub a: Vec<f64>,
    pub lambda: f64,
}

impl Bubble {
    pub fn new(a: &Point, lambda: f64) -> Result<Self, BubbleError> {
        check_point(a, a.len())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(BubbleError::Lambda(lambda));
        }
        Ok(Self { a: a.as_slice().to_vec(), lambda })
    }

    pub fn center(&self) -> Point {
        DVector::from_column_slice(&self.a)
    }

    /// Value as a function of `t = <x, a>`.
    #[inline]
    pub fn profile(&self, t: f64, n: usize) -> f64 {
        let h = 0.5 * (n as f64 - 2.0);
        let l2 = self.lambda * self.lambda;
        bubble_constant(n) * self.lambda.powf(h) * (2.0 + (l2 - 1.0) * (1.0 - t)).powf(-h)
    }

    /// Value and `t`-derivative of the profile.
    #[inline]
    pub(crate) fn profile_with_slope(&self, t: f64, n: usize, c0: f64) -> (f64, f64) {
        let h = 0.5 * (n as f64 - 2.0);
        let l2m1 = self.lambda * self.lambda - 1.0;
        let d = 2.0 + l2m1 * (1.0 - t);
        let v = c0 * self.lambda.powf(h) * d.powf(-h);
        (v, v * h * l2m1 / d)
    }
}

/// Pointwise value of a single bubble.
pub fn eval_bubble(b: &Bubble, x: &Point, n: usize) -> Result<f64, BubbleError> {
    check_point(x, n + 1)?;
    if b.a.len() != n + 1 {
        return Err(GeometryError::Dimension { expected: n + 1, got: b.a.len() }.into());
    }
    let t: f64 = b.a.iter().zip(x.iter()).map(|(a, x)| a * x).sum();
    Ok(b.profile(t, n))
}

#[derive(Deserialize)]
struct RawBubbleSum {
    n: usize,
    tau: f64,
    bubbles: Vec<Bubble>,
    alphas: Vec<f64>,
}

/// `sum alpha_i delta_(a_i, lambda_i)` with subcritical defect `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBubbleSum")]
pub struct BubbleSum {
    n: usize,
    tau: f64,
    bubbles: Vec<Bubble>,
    alphas: Vec<f64>,
}

impl TryFrom<RawBubbleSum> for BubbleSum {
    type Error = BubbleError;

    fn try_from(raw: RawBubbleSum) -> Result<Self, BubbleError> {
        BubbleSum::new(raw.n, raw.tau, raw.bubbles, raw.alphas)
    }
}

impl BubbleSum {
    pub fn new(n: usize, tau: f64, bubbles: Vec<Bubble>, alphas: Vec<f64>) -> Result<Self, BubbleError> {
        if n < 3 {
            return Err(BubbleError::Dimension(n));
        }
        let limit = 4.0 / (n as f64 - 2.0);
        if !(tau >= 0.0 && tau < limit) {
            return Err(BubbleError::Tau { tau, limit });
        }
        if bubbles.len() != alphas.len() || bubbles.is_empty() || bubbles.len() > MAX_BUBBLES {
            return Err(BubbleError::Shape { bubbles: bubbles.len(), alphas: alphas.len() });
        }
        for b in &bubbles {
            check_point(&b.center(), n + 1)?;
            if !(b.lambda > 0.0 && b.lambda.is_finite()) {
                return Err(BubbleError::Lambda(b.lambda));
            }
        }
        if let Some(&a) = alphas.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
            return Err(BubbleError::Alpha(a));
        }
        Ok(Self { n, tau, bubbles, alphas })
    }

    pub fn single(n: usize, tau: f64, a: &Point, lambda: f64) -> Result<Self, BubbleError> {
        Self::new(n, tau, vec![Bubble::new(a, lambda)?], vec![1.0])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    /// `2n/(n-2) - tau`.
    pub fn exponent(&self) -> f64 {
        critical_exponent(self.n) - self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self, BubbleError> {
        Self::new(self.n, tau, self.bubbles.clone(), self.alphas.clone())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.alphas.iter_mut().for_each(|a| *a *= factor);
        out
    }

    /// Smallest pairwise geodesic distance between centers (`None` for one bubble).
    pub fn min_separation(&self) -> Option<f64> {
        let centers: Vec<Point> = self.bubbles.iter().map(Bubble::center).collect();
        let mut best: Option<f64> = None;
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                let d = geodesic_distance(&centers[i], &centers[j]);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// `u(x)`.
    pub fn eval(&self, x: &Point) -> Result<f64, BubbleError> {
        check_point(x, self.n + 1)?;
        Ok(self
            .bubbles
            .iter()
            .zip(&self.alphas)
            .map(|(b, al)| {
                let t: f64 = b.a.iter().zip(x.iter()).map(|(a, x)| a * x).sum();
                al * b.profile(t, self.n)
            })
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::quasi_uniform_points;

    #[test]
    fn sobolev_closed_forms() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((sobolev_constant(3).unwrap() - 27f64.sqrt() * pi2 / 4.0).abs() < 1e-12);
        assert!((sobolev_constant(4).unwrap() - 64.0 * pi2 / 6.0).abs() < 1e-10);
        assert!(sobolev_constant(2).is_err());
    }

    #[test]
    fn bubble_at_unit_scale_is_constant() {
        let a = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]);
        let b = Bubble::new(&a, 1.0).unwrap();
        let expected = bubble_constant(3) / 2f64.sqrt();
        for x in quasi_uniform_points(3, 10, 5) {
            assert!((eval_bubble(&b, &x, 3).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn bubble_peak_value() {
        let a = DVector::from_vec(vec![0.6, 0.0, 0.8, 0.0]);
        let b = Bubble::new(&a, 7.0).unwrap();
        let expected = bubble_constant(3) * 7f64.sqrt() / 2f64.sqrt();
        assert!((eval_bubble(&b, &a, 3).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn antipodal_inverse_scale_symmetry() {
        let a = DVector::from_vec(vec![0.6, 0.0, 0.8, 0.0]);
        let b = Bubble::new(&a, 3.0).unwrap();
        let c = Bubble::new(&(-&a), 1.0 / 3.0).unwrap();
        for x in quasi_uniform_points(3, 10, 9) {
            let (u, v) = (eval_bubble(&b, &x, 3).unwrap(), eval_bubble(&c, &x, 3).unwrap());
            assert!((u - v).abs() < 1e-13 * u);
        }
    }

    #[test]
    fn slope_matches_difference() {
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let b = Bubble::new(&a, 4.0).unwrap();
        let (_, d) = b.profile_with_slope(0.3, 3, bubble_constant(3));
        let fd = (b.profile(0.3 + 1e-6, 3) - b.profile(0.3 - 1e-6, 3)) / 2e-6;
        assert!((d - fd).abs() < 1e-6 * d.abs());
    }

    #[test]
    fn validation() {
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(Bubble::new(&a, 0.0).is_err());
        assert!(BubbleSum::single(3, 4.0, &a, 2.0).is_err());
        let b = Bubble::new(&a, 2.0).unwrap();
        assert!(BubbleSum::new(3, 0.0, vec![b.clone()], vec![-1.0]).is_err());
        assert!(BubbleSum::new(3, 0.0, vec![b], vec![]).is_err());
    }
}
