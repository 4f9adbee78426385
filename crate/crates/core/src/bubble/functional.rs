use super::quadrature::{default_frames, integrate, QuadratureScheme};
use super::{bubble_constant, BubbleError, BubbleSum, MAX_BUBBLES};
use crate::KFunction;
use nalgebra::DMatrix;
use serde::Serialize;

/// The three integrals behind `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    /// `int |grad u|^2`
    pub gradient: f64,
    /// `int u^2`
    pub mass: f64,
    /// `int K |u|^{p}` with `p = 2n/(n-2) - tau`
    pub weighted: f64,
    pub n: usize,
    pub exponent: f64,
}

impl EnergyParts {
    /// `||u||^2 = int |grad u|^2 + n(n-2)/4 int u^2`.
    pub fn norm_squared(&self) -> f64 {
        let nf = self.n as f64;
        self.gradient + 0.25 * nf * (nf - 2.0) * self.mass
    }

    /// `||u||^2 / (int K |u|^p)^{2/p}`, which is homogeneous of degree 0.
    pub fn j(&self) -> f64 {
        self.norm_squared() / self.weighted.powf(2.0 / self.exponent)
    }
}

/// `J` with a node-doubling error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JEstimate {
    pub value: f64,
    /// `|J(2 x nodes) - J(nodes)|`.
    pub difference: f64,
    pub refined: f64,
    pub parts: EnergyParts,
    pub nodes_per_bubble: usize,
    pub angular_order: usize,
}

pub(crate) fn check_inputs(u: &BubbleSum, k: &KFunction, q: &QuadratureScheme) -> Result<(), BubbleError> {
    if k.n() != u.n() {
        return Err(BubbleError::Mismatch { k: k.n(), u: u.n() });
    }
    q.validate(u.n())
}

pub(crate) fn parts_with(
    u: &BubbleSum,
    frames: &[DMatrix<f64>],
    k: &KFunction,
    q: &QuadratureScheme,
    refine: usize,
    angular: usize,
) -> EnergyParts {
    let n = u.n();
    let p = u.exponent();
    let c0 = bubble_constant(n);
    let k_count = u.len();
    let gram: Vec<f64> = u
        .bubbles()
        .iter()
        .flat_map(|bi| u.bubbles().iter().map(move |bj| bi.a.iter().zip(&bj.a).map(|(x, y)| x * y).sum::<f64>()))
        .collect();
    let r = integrate(q, refine, angular, u, frames, |x| {
        let mut value = 0.0;
        let mut ts = [0.0f64; MAX_BUBBLES];
        let mut cs = [0.0f64; MAX_BUBBLES];
        for (i, (b, al)) in u.bubbles().iter().zip(u.alphas()).enumerate() {
            let t: f64 = b.a.iter().zip(x).map(|(a, x)| a * x).sum();
            let (d, slope) = b.profile_with_slope(t, n, c0);
            value += al * d;
            ts[i] = t;
            cs[i] = al * slope;
        }
        // <P a_i, P a_j> = <a_i, a_j> - t_i t_j with P the tangent projection at x
        let g2 = if k_count == 1 {
            cs[0] * cs[0] * (1.0 - ts[0]) * (1.0 + ts[0])
        } else {
            let mut s = 0.0;
            for i in 0..k_count {
                for j in 0..k_count {
                    s += cs[i] * cs[j] * (gram[i * k_count + j] - ts[i] * ts[j]);
                }
            }
            s.max(0.0)
        };
        [g2, value * value, k.eval_unchecked(x) * value.abs().powf(p)]
    });
    EnergyParts { gradient: r[0], mass: r[1], weighted: r[2], n, exponent: p }
}

/// The three integrals with default frames and the scheme's resolved angular order.
pub fn energy_parts(u: &BubbleSum, k: &KFunction, q: &QuadratureScheme) -> Result<EnergyParts, BubbleError> {
    check_inputs(u, k, q)?;
    Ok(parts_with(u, &default_frames(u), k, q, 1, q.angular_order(u, k)))
}

/// `J_{K,tau}(u)`; fails when doubling the nodes moves the value by more
/// than the scheme's relative tolerance.
pub fn functional_j(u: &BubbleSum, k: &KFunction, q: &QuadratureScheme) -> Result<JEstimate, BubbleError> {
    check_inputs(u, k, q)?;
    let frames = default_frames(u);
    let angular = q.angular_order(u, k);
    let parts = parts_with(u, &frames, k, q, 1, angular);
    let refined = parts_with(u, &frames, k, q, 2, angular).j();
    let value = parts.j();
    if !value.is_finite() {
        return Err(BubbleError::NonFinite);
    }
    let difference = (refined - value).abs();
    if difference > q.tolerance * value.abs() {
        return Err(BubbleError::QuadratureNonconvergence { value, difference, tolerance: q.tolerance });
    }
    Ok(JEstimate { value, difference, refined, parts, nodes_per_bubble: q.nodes_per_bubble(), angular_order: angular })
}

/// `I = J^{n/2} / n`.
pub fn i_from_j(jval: f64, n: usize) -> f64 {
    if jval <= 0.0 {
        return 0.0;
    }
    jval.powf(0.5 * n as f64) / n as f64
}
