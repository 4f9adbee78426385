use super::{KError, KFunction};
use crate::index_calculus::{ConfigWarning, Parity, ParityConfig};
use crate::sphere::{self, geodesic_distance, tangent_frame, Point};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

/// Gradient norm below which a Newton iterate counts as critical.
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
/// Relative eigenvalue floor for nondegeneracy.
pub const DEGENERACY_RATIO: f64 = 1e-6;
/// Points closer than this (geodesically) are merged.
pub const DEDUP_DISTANCE: f64 = 1e-6;
const MAX_NEWTON_STEP: f64 = 0.3;
const NEWTON_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub k_value: f64,
    /// Number of negative Hessian eigenvalues.
    pub morse_index: usize,
    /// `n` minus the Morse index.
    pub co_index: usize,
    pub laplacian: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub gradient_norm: f64,
}

impl CriticalPoint {
    pub fn point(&self) -> Point {
        DVector::from_column_slice(&self.location)
    }

    pub fn is_local_max(&self) -> bool {
        self.co_index == 0
    }

    pub fn laplacian_sign(&self) -> i8 {
        if self.laplacian < 0.0 {
            -1
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSearch {
    /// Distinct critical points, by decreasing `K`.
    pub points: Vec<CriticalPoint>,
    pub seeds: usize,
    pub converged_seeds: usize,
    /// `sum (-1)^{morse index}` over the points found.
    pub euler_sum: i64,
    /// `chi(S^n) = 1 + (-1)^n`.
    pub euler_expected: i64,
}

impl CriticalSearch {
    /// Necessary but not sufficient for completeness.
    pub fn euler_consistent(&self) -> bool {
        self.euler_sum == self.euler_expected
    }
}

/// Tangent-frame Newton iteration from one seed. Returns `None` without convergence.
fn newton(k: &KFunction, seed: &Point) -> Option<Point> {
    let mut x = seed.clone();
    for _ in 0..NEWTON_ITERS {
        let frame = tangent_frame(&x);
        let g = frame.transpose() * k.grad(&x).ok()?;
        if g.norm() < 1e-14 {
            return Some(x);
        }
        let h = k.hess_in_frame(&x, &frame).ok()?;
        let eig = h.symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(1e-300);
        let mut step = DVector::zeros(g.len());
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            let q = eig.eigenvectors.column(i);
            let floor = 1e-12 * scale;
            let lambda = if lambda.abs() < floor { floor.copysign(lambda) } else { lambda };
            step -= q * (q.dot(&g) / lambda);
        }
        let len = step.norm();
        if len > MAX_NEWTON_STEP {
            step *= MAX_NEWTON_STEP / len;
        }
        x = sphere::exp_map(&x, &(&frame * step));
    }
    let g = k.grad(&x).ok()?.norm();
    (g < GRADIENT_TOLERANCE).then_some(x)
}

fn describe(k: &KFunction, x: &Point) -> Result<CriticalPoint, KError> {
    let frame = tangent_frame(x);
    let h = k.hess_in_frame(x, &frame)?;
    let mut eig: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let largest = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let smallest = eig.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
    if !(smallest > DEGENERACY_RATIO * largest) {
        return Err(KError::H1Violated {
            location: x.as_slice().to_vec(),
            reason: format!("degenerate Hessian, eigenvalues {eig:?}"),
        });
    }
    let laplacian = k.laplace(x)?;
    if laplacian.abs() <= DEGENERACY_RATIO * largest {
        return Err(KError::H1Violated { location: x.as_slice().to_vec(), reason: "vanishing Laplacian".into() });
    }
    let morse_index = eig.iter().filter(|&&e| e < 0.0).count();
    Ok(CriticalPoint {
        location: x.as_slice().to_vec(),
        k_value: k.eval(x)?,
        morse_index,
        co_index: k.n() - morse_index,
        laplacian,
        hessian_eigenvalues: eig,
        gradient_norm: k.grad(x)?.norm(),
    })
}

/// Multistart Newton search for the critical points of `K`.
///
/// Seeds are quasi-uniform plus the bump centers, their antipodes and
/// pairwise midpoints. Completeness is not guaranteed; compare
/// [`CriticalSearch::euler_consistent`].
/// Fails with [`KError::H1Violated`] when a converged point is degenerate
/// or carries a vanishing Laplacian.
pub fn find_critical_points(k: &KFunction, seeds: usize, rng_seed: u64) -> Result<CriticalSearch, KError> {
    let mut starts: Vec<Point> = Vec::new();
    for t in k.terms() {
        let c = DVector::from_column_slice(&t.center);
        starts.push(-&c);
        starts.push(c);
    }
    // saddles tend to sit between pairs of bumps
    let centers: Vec<Point> = k.terms().iter().map(|t| DVector::from_column_slice(&t.center)).collect();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let mid = &centers[i] + &centers[j];
            if mid.norm() > 1e-6 {
                starts.push(sphere::normalized(mid));
            }
        }
    }
    starts.extend(sphere::quasi_uniform_points(k.n(), seeds, rng_seed));
    let results: Vec<Option<Point>> = starts.par_iter().map(|s| newton(k, s)).collect();
    let converged_seeds = results.iter().filter(|r| r.is_some()).count();
    if converged_seeds < starts.len() {
        log::debug!("{} of {} Newton seeds discarded without convergence", starts.len() - converged_seeds, starts.len());
    }

    let mut distinct: Vec<Point> = Vec::new();
    for x in results.into_iter().flatten() {
        if distinct.iter().all(|y| geodesic_distance(&x, y) > DEDUP_DISTANCE) {
            distinct.push(x);
        }
    }
    let mut points = distinct.iter().map(|x| describe(k, x)).collect::<Result<Vec<_>, _>>()?;
    points.sort_by(|a, b| b.k_value.total_cmp(&a.k_value));
    let euler_sum = points.iter().map(|p| if p.morse_index % 2 == 0 { 1 } else { -1 }).sum();
    let euler_expected = if k.n().is_multiple_of(2) { 2 } else { 0 };
    Ok(CriticalSearch { points, seeds: starts.len(), converged_seeds, euler_sum, euler_expected })
}

/// The blow-up set `{dK = 0, Delta K < 0}` with its parity configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KInfinity {
    /// Global maximum first, then by decreasing `K`.
    pub points: Vec<CriticalPoint>,
    pub config: ParityConfig,
    pub warnings: Vec<ConfigWarning>,
}

/// Filters critical points with negative Laplacian and builds their parity
/// configuration. The highest critical point overall must be a local maximum,
/// otherwise the search is treated as incomplete.
pub fn extract_k_infinity(points: &[CriticalPoint], n: usize, max_level: usize) -> Result<KInfinity, KError> {
    let top = points.iter().max_by(|a, b| a.k_value.total_cmp(&b.k_value)).ok_or(KError::EmptyBlowUpSet)?;
    let mut kept: Vec<CriticalPoint> = points.iter().filter(|p| p.laplacian < 0.0).cloned().collect();
    if kept.is_empty() {
        return Err(KError::EmptyBlowUpSet);
    }
    if !top.is_local_max() || top.laplacian >= 0.0 {
        return Err(KError::MissingMaximum(top.k_value));
    }
    kept.sort_by(|a, b| b.k_value.total_cmp(&a.k_value));
    let parities = kept.iter().map(|p| Parity::from_co_index(p.co_index)).collect();
    let n32 = u32::try_from(n).map_err(|_| KError::Dimension(n))?;
    let config = ParityConfig::new(n32, parities, max_level)?;
    let warnings = config.warnings();
    Ok(KInfinity { points: kept, config, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::k_function::BumpTerm;

    fn two_bumps() -> KFunction {
        KFunction::new(
            3,
            0.05,
            vec![
                BumpTerm { center: vec![1.0, 0.0, 0.0, 0.0], weight: 1.0, width: 0.5 },
                BumpTerm { center: vec![0.0, 1.0, 0.0, 0.0], weight: 0.8, width: 0.5 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn constant_function_is_degenerate() {
        let k = KFunction::new(3, 0.1, vec![]).unwrap();
        assert!(matches!(find_critical_points(&k, 8, 1), Err(KError::H1Violated { .. })));
    }

    #[test]
    fn single_bump_on_s2() {
        let k = KFunction::new(2, 0.1, vec![BumpTerm { center: vec![0.0, 0.0, 1.0], weight: 1.0, width: 0.7 }])
            .unwrap();
        let s = find_critical_points(&k, 64, 2).unwrap();
        assert_eq!(s.points.len(), 2);
        assert!(s.euler_consistent());
        assert_eq!(s.points[0].morse_index, 2);
        assert_eq!(s.points[1].morse_index, 0);
        assert!((s.points[1].location[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_bumps_on_s3() {
        let k = two_bumps();
        let s = find_critical_points(&k, 64, 3).unwrap();
        let indices: Vec<usize> = s.points.iter().map(|p| p.morse_index).collect();
        assert_eq!(indices, vec![3, 3, 2, 0]);
        assert!(s.euler_consistent());
        let kinf = extract_k_infinity(&s.points, 3, 2).unwrap();
        assert_eq!(kinf.config.bits(), vec![0, 0, 1]);
        assert!(kinf.points[0].location[0] > 0.999);
    }

    #[test]
    fn extraction_requires_local_maximum() {
        let mut s = find_critical_points(&two_bumps(), 32, 4).unwrap().points;
        s.retain(|p| !p.is_local_max());
        let r = extract_k_infinity(&s, 3, 2);
        assert!(matches!(r, Err(KError::MissingMaximum(_))), "{r:?}");
        assert!(matches!(extract_k_infinity(&[], 3, 2), Err(KError::EmptyBlowUpSet)));
    }
}
