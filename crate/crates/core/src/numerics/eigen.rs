use std::f64::consts::TAU;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Spectral radius (largest eigenvalue modulus) of a 1x1, 2x2 or 3x3 matrix,
/// from closed-form roots of the characteristic polynomial.
pub fn small_spectral_radius(m: &DenseMatrix) -> Result<f64> {
    let unsupported = || Error::UnsupportedSize {
        rows: m.rows(),
        cols: m.cols(),
    };
    if m.rows() != m.cols() {
        return Err(unsupported());
    }
    match m.rows() {
        1 => Ok(m[(0, 0)].abs()),
        2 => {
            let trace = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            Ok(quadratic_max_modulus(-trace, det))
        }
        3 => {
            let a = |i, j| m[(i, j)];
            let trace = a(0, 0) + a(1, 1) + a(2, 2);
            let minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)
                + a(1, 1) * a(2, 2)
                - a(1, 2) * a(2, 1);
            let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
            Ok(cubic_max_modulus(-trace, minors, -det))
        }
        _ => Err(unsupported()),
    }
}

/// Largest root modulus of `z^2 + p z + q`.
pub(crate) fn quadratic_max_modulus(p: f64, q: f64) -> f64 {
    let disc = p * p - 4.0 * q;
    if disc < 0.0 {
        // complex pair: |z|^2 = q
        q.sqrt()
    } else {
        // real roots; the larger one in modulus avoids cancellation
        let big = -0.5 * (p + p.signum() * disc.sqrt());
        if p == 0.0 {
            return disc.sqrt() / 2.0;
        }
        let small = if big != 0.0 { q / big } else { 0.0 };
        big.abs().max(small.abs())
    }
}

/// Largest root modulus of `z^3 + a z^2 + b z + c`.
pub(crate) fn cubic_max_modulus(a: f64, b: f64, c: f64) -> f64 {
    let poly = |z: f64| ((z + a) * z + b) * z + c;
    let dpoly = |z: f64| (3.0 * z + 2.0 * a) * z + b;
    let polish = |mut z: f64| {
        for _ in 0..4 {
            let d = dpoly(z);
            if d == 0.0 {
                break;
            }
            let next = z - poly(z) / d;
            if !next.is_finite() || poly(next).abs() >= poly(z).abs() {
                break;
            }
            z = next;
        }
        z
    };

    // depressed cubic t^3 + p t + q with z = t - a/3
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    if disc > 0.0 {
        // one real root and a complex-conjugate pair
        let s = disc.sqrt();
        let t = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        let real = polish(t - shift);
        // deflate: z^3 + a z^2 + b z + c = (z - real)(z^2 + pp z + qq)
        let pp = a + real;
        let qq = b + pp * real;
        real.abs().max(quadratic_max_modulus(pp, qq))
    } else if p == 0.0 {
        // triple root
        shift.abs()
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let cos_arg = ((3.0 * q) / (p * r)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos() / 3.0;
        (0..3)
            .map(|k| polish(r * (phi - TAU * k as f64 / 3.0).cos() - shift).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// det(M - zI) by cofactor expansion over complex numbers.
    fn char_det(m: &DenseMatrix, z: Complex64) -> Complex64 {
        let n = m.rows();
        let e = |i: usize, j: usize| {
            let v = Complex64::new(m[(i, j)], 0.0);
            if i == j {
                v - z
            } else {
                v
            }
        };
        match n {
            1 => e(0, 0),
            2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
            3 => {
                e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
            }
            _ => unreachable!(),
        }
    }

    /// Independent root oracle: coarse complex grid to seed candidates, then
    /// Durand–Kerner on the determinant itself (monic up to sign).
    fn oracle_radius(m: &DenseMatrix) -> f64 {
        let n = m.rows();
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let f = |z: Complex64| char_det(m, z) * sign;
        let bound = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(1e-3);

        // grid: pick the n best local minima of |det| as starting points
        let steps = 60;
        let mut cands: Vec<(f64, Complex64)> = Vec::new();
        for i in 0..=steps {
            for j in 0..=steps {
                let z = Complex64::new(
                    -bound + 2.0 * bound * i as f64 / steps as f64,
                    -bound + 2.0 * bound * j as f64 / steps as f64 + 1e-3 * bound,
                );
                cands.push((f(z).norm(), z));
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut roots: Vec<Complex64> = Vec::new();
        for (_, z) in cands {
            if roots.iter().all(|r| (r - z).norm() > 0.1 * bound / n as f64) {
                roots.push(z);
            }
            if roots.len() == n {
                break;
            }
        }
        for _ in 0..500 {
            let prev = roots.clone();
            for (k, root) in roots.iter_mut().enumerate() {
                let mut denom = Complex64::new(1.0, 0.0);
                for (j, r) in prev.iter().enumerate() {
                    if j != k {
                        denom *= *root - r;
                    }
                }
                *root -= f(*root) / denom;
            }
        }
        roots.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn scalar() {
        let m = DenseMatrix::from_rows(&[[-1.5]]);
        assert_eq!(small_spectral_radius(&m).unwrap(), 1.5);
    }

    #[test]
    fn complex_pair() {
        let m = DenseMatrix::from_rows(&[[-0.6, -0.9], [1.0, 0.0]]);
        let rho = small_spectral_radius(&m).unwrap();
        assert!((rho - 0.9f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn identity_three() {
        let rho = small_spectral_radius(&DenseMatrix::identity(3)).unwrap();
        assert!((rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_four_by_four() {
        assert!(matches!(
            small_spectral_radius(&DenseMatrix::identity(4)),
            Err(Error::UnsupportedSize { rows: 4, cols: 4 })
        ));
    }

    #[test]
    fn real_roots_of_mixed_sign() {
        // eigenvalues 0.5, -2.0, 1.25 on the diagonal of a triangular matrix
        let m = DenseMatrix::from_rows(&[[0.5, 3.0, -1.0], [0.0, -2.0, 4.0], [0.0, 0.0, 1.25]]);
        assert!((small_spectral_radius(&m).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_root_oracle() {
        let mut rng = crate::numerics::SeededRng::new(2024);
        for trial in 0..300 {
            let n = 2 + trial % 2;
            let entries = (0..n * n).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let m = DenseMatrix::from_row_major(n, n, entries).unwrap();
            let fast = small_spectral_radius(&m).unwrap();
            let slow = oracle_radius(&m);
            assert!(
                (fast - slow).abs() <= 1e-10 * slow.max(1.0),
                "trial {trial}: {fast} vs {slow} for {m:?}"
            );
        }
    }

    #[test]
    fn agrees_with_oracle_on_mode_like_matrices() {
        // companion-like structure used by the stability analysis
        let mut rng = crate::numerics::SeededRng::new(77);
        for _ in 0..200 {
            let s = rng.uniform(0.0, 3.0);
            let beta = rng.uniform(0.0, 0.99);
            let alpha = rng.uniform(0.0, 2.0);
            let eta = rng.uniform(0.001, 0.1);
            let lam = s / eta;
            let w = 1.0 - beta;
            let m = DenseMatrix::from_rows(&[
                [1.0 - eta * w * lam * (1.0 + alpha), eta * w * alpha * lam, -eta * beta],
                [1.0, 0.0, 0.0],
                [w * lam * (1.0 + alpha), -w * alpha * lam, beta],
            ]);
            let fast = small_spectral_radius(&m).unwrap();
            let slow = oracle_radius(&m);
            assert!((fast - slow).abs() <= 1e-10 * slow.max(1.0), "{fast} vs {slow}");
        }
    }
}
