//! Small dense linear-algebra kernels.
//!
//! Group blocks are narrow (a handful of columns), so a cyclic Jacobi
//! eigensolver on the per-group Gram matrix covers every spectral need of the
//! crate — spectral norms for step constants and basis changes for group
//! orthogonalization — without pulling in a LAPACK backend, and it stays
//! generic over the scalar type.

use ndarray::{Array1, Array2, ArrayView2};

use crate::scalar::Scalar;

/// Eigendecomposition of a symmetric matrix: eigenvalues in descending order
/// with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEigen<F> {
    pub values: Array1<F>,
    pub vectors: Array2<F>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Converges quadratically; intended for the small (group-sized) matrices
/// this crate produces. The input is asserted square; symmetry is assumed.
pub fn sym_eigen<F: Scalar>(a: ArrayView2<'_, F>) -> SymEigen<F> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");

    let mut m = a.to_owned();
    let mut v = Array2::<F>::eye(n);
    if n <= 1 {
        return sorted(m.diag().to_owned(), v);
    }

    let half = F::cast(0.5);
    // Sweep until the off-diagonal mass is negligible relative to the matrix.
    let scale = a.iter().fold(F::zero(), |acc, &x| acc + x * x).sqrt();
    let tol = if scale > F::zero() {
        scale * F::epsilon() * F::cast(n as f64)
    } else {
        F::epsilon()
    };

    for _ in 0..100 {
        let mut off = F::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[[p, q]] * m[[p, q]];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == F::zero() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = half * (aqq - app) / apq;
                // Stable tangent of the rotation angle.
                let t = {
                    let s = if theta >= F::zero() {
                        F::one()
                    } else {
                        -F::one()
                    };
                    s / (theta.abs() + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;

                for i in 0..n {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = c * mip - s * miq;
                    m[[i, q]] = s * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[[p, j]];
                    let mqj = m[[q, j]];
                    m[[p, j]] = c * mpj - s * mqj;
                    m[[q, j]] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    sorted(m.diag().to_owned(), v)
}

fn sorted<F: Scalar>(values: Array1<F>, vectors: Array2<F>) -> SymEigen<F> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());

    let mut sorted_values = Array1::zeros(n);
    let mut sorted_vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        sorted_values[dst] = values[src];
        sorted_vectors.column_mut(dst).assign(&vectors.column(src));
    }
    SymEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// Largest eigenvalue of the Gram matrix `XᵀX` of a design block, i.e. the
/// squared spectral norm of `x`.
pub fn gram_spectral_max<F: Scalar>(x: ArrayView2<'_, F>) -> F {
    let gram = x.t().dot(&x);
    let eig = sym_eigen(gram.view());
    eig.values[0].max(F::zero())
}
