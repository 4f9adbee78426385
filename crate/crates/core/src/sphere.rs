//! Small toolkit for the unit sphere `S^n` embedded in `R^{n+1}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type Point = DVector<f64>;

/// Accepted deviation of `|x|` from 1.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point is not on the unit sphere: |x| = {norm}")]
    NotUnit { norm: f64 },
    #[error("expected a vector in R^{expected}, got R^{got}")]
    Dimension { expected: usize, got: usize },
}

pub fn check_point(x: &Point, ambient: usize) -> Result<(), GeometryError> {
    if x.len() != ambient {
        return Err(GeometryError::Dimension { expected: ambient, got: x.len() });
    }
    let norm = x.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(GeometryError::NotUnit { norm });
    }
    Ok(())
}

pub fn normalized(x: Point) -> Point {
    let norm = x.norm();
    x / norm
}

/// Orthonormal basis of the tangent space at `x`, as the columns of an
/// `(n+1) x n` matrix. Built from a Householder reflection, so it is
/// deterministic but only locally smooth in `x`.
pub fn tangent_frame(x: &Point) -> DMatrix<f64> {
    let dim = x.len();
    let pivot = x.iamax();
    let mut v = x.clone();
    let sign = if x[pivot] >= 0.0 { 1.0 } else { -1.0 };
    v[pivot] += sign;
    let vv = v.norm_squared();
    let mut frame = DMatrix::zeros(dim, dim - 1);
    let mut col = 0;
    for j in 0..dim {
        if j == pivot {
            continue;
        }
        // Householder image of e_j; the image of e_pivot is -sign * x.
        let mut e = DVector::zeros(dim);
        e[j] = 1.0;
        let coeff = 2.0 * v[j] / vv;
        e -= &v * coeff;
        frame.set_column(col, &e);
        col += 1;
    }
    frame
}

/// Projection of an ambient vector onto the tangent space at `x`.
pub fn project_tangent(x: &Point, v: &DVector<f64>) -> DVector<f64> {
    v - x * x.dot(v)
}

/// Geodesic exponential map.
pub fn exp_map(x: &Point, v: &DVector<f64>) -> Point {
    let t = v.norm();
    if t < 1e-300 {
        return x.clone();
    }
    normalized(x * t.cos() + v * (t.sin() / t))
}

pub fn geodesic_distance(x: &Point, y: &Point) -> f64 {
    let c = x.dot(y);
    let s = (x - y * c).norm();
    s.atan2(c)
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

fn cosc(t: f64) -> f64 {
    // (1 - cos t) / t^2
    if t.abs() < 1e-4 {
        0.5 - t * t / 24.0
    } else {
        (1.0 - t.cos()) / (t * t)
    }
}

/// The rotation that moves `base` to `exp_map(base, w)` inside the plane
/// spanned by `base` and `w`, fixing its orthogonal complement. Smooth in `w`.
pub fn rotate_along(base: &Point, w: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let t = w.norm();
    let vb = v.dot(base);
    let vw = v.dot(w);
    let s = sinc(t);
    let c = cosc(t);
    v + (w * vb - base * vw) * s - (base * (vb * t * t) + w * vw) * c
}

/// Deterministic, roughly uniform points on `S^n` (normalised Gaussians from a seeded stream).
pub fn quasi_uniform_points(n: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_unit(n, &mut rng)).collect()
}

pub fn random_unit<R: Rng>(n: usize, rng: &mut R) -> Point {
    loop {
        let v = DVector::from_fn(n + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Uniformly distributed rotation of `R^{dim}` (QR of a Gaussian matrix with sign fix).
pub fn random_rotation<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    if q.determinant() < 0.0 {
        let col = -q.column(0);
        q.set_column(0, &col);
    }
    q
}

/// Surface area of `S^d`.
pub fn sphere_area(d: usize) -> f64 {
    let k = (d + 1) as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(k) / libm::tgamma(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        for x in quasi_uniform_points(3, 20, 7) {
            let e = tangent_frame(&x);
            let gram = e.transpose() * &e;
            assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
            assert!((e.transpose() * &x).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_moves_base_and_preserves_norms() {
        let b = quasi_uniform_points(3, 1, 1).remove(0);
        let w = project_tangent(&b, &DVector::from_vec(vec![0.3, -0.2, 0.1, 0.4]));
        let moved = rotate_along(&b, &w, &b);
        assert!((moved - exp_map(&b, &w)).norm() < 1e-12);
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        assert!((rotate_along(&b, &w, &v).norm() - v.norm()).abs() < 1e-12);
        let tiny = &w * 1e-9;
        assert!((rotate_along(&b, &tiny, &v) - &v).norm() < 1e-8);
    }

    #[test]
    fn distance_and_area() {
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!((geodesic_distance(&x, &y) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(3) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn rejects_off_sphere_points() {
        let x = DVector::from_vec(vec![1.0, 1e-5, 0.0]);
        assert!(matches!(check_point(&x, 3), Err(GeometryError::NotUnit { .. })));
        assert!(matches!(check_point(&x, 4), Err(GeometryError::Dimension { .. })));
    }
}
