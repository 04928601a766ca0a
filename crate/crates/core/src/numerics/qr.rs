use super::{DenseMatrix, SeededRng};

/// Random orthogonal `d x d` matrix: the Q factor of a Householder QR of a
/// standard-normal matrix, with column signs chosen so that R has a positive
/// diagonal. Consumes `d * d` normals (more only if a zero column forces a redraw).
pub fn random_orthogonal(rng: &mut SeededRng, d: usize) -> DenseMatrix {
    assert!(d >= 1, "dimension must be positive");
    loop {
        let g = DenseMatrix::from_row_major(d, d, rng.standard_normal(d * d).into_vec()).expect("d*d entries");
        if let Some(q) = householder_q(g) {
            return q;
        }
    }
}

/// Householder QR returning the sign-normalized Q, or `None` when a column
/// is exactly zero below the diagonal.
fn householder_q(mut a: DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut q = DenseMatrix::identity(n);
    let mut r_diag = vec![0.0; n];
    let mut v = vec![0.0; n];

    for k in 0..n {
        let norm = (k..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let x0 = a[(k, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k..n {
            v[i] = a[(i, k)];
        }
        v[k] -= alpha;
        let vnorm = (k..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        for vi in v.iter_mut().take(n).skip(k) {
            *vi /= vnorm;
        }

        // A <- H A on the trailing block
        for j in k..n {
            let s: f64 = (k..n).map(|i| v[i] * a[(i, j)]).sum();
            for i in k..n {
                a[(i, j)] -= 2.0 * s * v[i];
            }
        }
        // Q <- Q H
        for i in 0..n {
            let s: f64 = (k..n).map(|j| q[(i, j)] * v[j]).sum();
            for j in k..n {
                q[(i, j)] -= 2.0 * s * v[j];
            }
        }
        r_diag[k] = a[(k, k)];
    }

    for (k, &r) in r_diag.iter().enumerate() {
        if r < 0.0 {
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonality_error(q: &DenseMatrix) -> f64 {
        let qtq = q.transpose().matmul(q).unwrap();
        qtq.max_abs_diff(&DenseMatrix::identity(q.rows()))
    }

    /// Determinant by partial-pivot LU, independent of the QR path.
    fn lu_det(m: &DenseMatrix) -> f64 {
        let n = m.rows();
        let mut a = m.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                det = -det;
            }
            det *= a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
            }
        }
        det
    }

    #[test]
    fn one_dimensional() {
        let q = random_orthogonal(&mut SeededRng::new(3), 1);
        assert_eq!(q[(0, 0)].abs(), 1.0);
    }

    #[test]
    fn ten_dimensional_is_orthogonal() {
        let q = random_orthogonal(&mut SeededRng::new(42), 10);
        assert!(orthogonality_error(&q) <= 1e-10);
        assert!((lu_det(&q).abs() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn orthogonal_up_to_64() {
        for seed in 0..4 {
            let mut rng = SeededRng::new(seed);
            for d in [2, 3, 5, 16, 33, 64] {
                let q = random_orthogonal(&mut rng, d);
                assert!(orthogonality_error(&q) <= 1e-10, "seed {seed} d {d}");
            }
        }
    }

    #[test]
    fn reconstructs_with_positive_r() {
        // Q^T G must be upper triangular with positive diagonal.
        let mut rng = SeededRng::new(11);
        let g = DenseMatrix::from_row_major(6, 6, rng.clone().standard_normal(36).into_vec()).unwrap();
        let q = random_orthogonal(&mut rng, 6);
        let r = q.transpose().matmul(&g).unwrap();
        for i in 0..6 {
            assert!(r[(i, i)] > 0.0);
            for j in 0..i {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = random_orthogonal(&mut SeededRng::new(8), 7);
        let b = random_orthogonal(&mut SeededRng::new(8), 7);
        assert_eq!(a, b);
    }
}
