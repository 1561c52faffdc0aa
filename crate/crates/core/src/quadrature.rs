//! One-dimensional quadrature rules used to discretize line shapes.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Gauss–Hermite nodes and weights for the weight function `exp(-x^2)`.
///
/// Nodes come back in ascending order. Initial roots are the eigenvalues of
/// the Jacobi matrix; each is polished by Newton iteration on the
/// orthonormal recurrence, which also yields the weight.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (0.5 * i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(f64::total_cmp);
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for mut z in guesses {
        let mut pp = 0.0;
        for _ in 0..20 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x.push(z);
        w.push(2.0 / (pp * pp));
    }
    // Symmetrize.
    for i in 0..n / 2 {
        let xs = 0.5 * (x[n - 1 - i] - x[i]);
        let ws = 0.5 * (w[n - 1 - i] + w[i]);
        x[i] = -xs;
        x[n - 1 - i] = xs;
        w[i] = ws;
        w[n - 1 - i] = ws;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Nodes and normalized weights representing a zero-mean Gaussian of standard
/// deviation `sigma` with `n` Gauss–Hermite points.
pub fn gaussian_gh(sigma: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_hermite(n);
    let scale = std::f64::consts::SQRT_2 * sigma;
    let norm: f64 = w.iter().sum();
    (
        x.iter().map(|&xi| xi * scale).collect(),
        w.iter().map(|&wi| wi / norm).collect(),
    )
}

/// Uniform grid on `[-5 sigma, 5 sigma]` with normalized Gaussian weights.
pub fn gaussian_uniform(sigma: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let half = 5.0 * sigma;
    let h = 2.0 * half / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| -half + h * i as f64).collect();
    let raw: Vec<f64> = x.iter().map(|&d| (-0.5 * (d / sigma).powi(2)).exp()).collect();
    let norm: f64 = raw.iter().sum();
    (x, raw.into_iter().map(|r| r / norm).collect())
}
