//! One-dimensional Gauss rules on `[-1, 1]`.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights (Newton iteration on the three-term recurrence).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_order(z), p0 = P_{order-1}(z)
            dp = order as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss rule for the weight `sqrt(1 - t^2)` (Chebyshev polynomials of the second kind).
pub fn gauss_chebyshev_u(order: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (order as f64 + 1.0);
    (1..=order)
        .map(|k| {
            let s = (k as f64 * h).sin();
            ((k as f64 * h).cos(), h * s * s)
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for order in [1, 2, 5, 8, 16, 33] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * order - 1;
            for p in 0..=deg {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "order {order} degree {p}");
            }
        }
    }

    #[test]
    fn chebyshev_u_weights() {
        let (x, w) = gauss_chebyshev_u(7);
        assert!((w.iter().sum::<f64>() - PI / 2.0).abs() < 1e-14);
        // int t^2 sqrt(1-t^2) = pi/8
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((q - PI / 8.0).abs() < 1e-14);
    }
}
