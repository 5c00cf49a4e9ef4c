//! Dense linear-algebra helpers on top of nalgebra: sorted decompositions,
//! eigenvectors of general (non-symmetric) matrices and SVD least squares.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cabs, Real};

/// Singular values below `max_sv * tol` are treated as zero in least-squares solves.
fn rank_tolerance<T: Real>(rows: usize, cols: usize) -> T {
    T::eps() * T::from_count(rows.max(cols).max(1))
}

/// Thin singular value decomposition `m = u diag(s) v_t` with singular
/// values in descending order.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub u: DMatrix<T>,
    pub s: DVector<T>,
    pub v_t: DMatrix<T>,
}

/// Thin SVD computed by `faer` in double precision.
pub fn svd<T: Real>(m: &DMatrix<T>) -> Result<Svd<T>> {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(r, 0),
            s: DVector::zeros(0),
            v_t: DMatrix::zeros(0, c),
        });
    }
    let a = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)].as_f64());
    let d = a
        .thin_svd()
        .map_err(|e| Error::Singular(format!("SVD did not converge: {e:?}")))?;
    let (u, sv, v) = (d.U(), d.S().column_vector(), d.V());
    Ok(Svd {
        u: DMatrix::from_fn(r, k, |i, j| T::lit(u[(i, j)])),
        s: DVector::from_fn(k, |i, _| T::lit(sv[i])),
        v_t: DMatrix::from_fn(k, c, |i, j| T::lit(v[(j, i)])),
    })
}

/// `v diag(1/s) u^T b` over the singular values above `tol`.
fn svd_solve<T: Real>(d: &Svd<T>, b: &DVector<T>, tol: T) -> DVector<T> {
    let mut utb = d.u.transpose() * b;
    for (i, x) in utb.iter_mut().enumerate() {
        *x = if d.s[i] > tol { *x / d.s[i] } else { T::zero() };
    }
    d.v_t.transpose() * utb
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
///
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn symmetric_eigen_desc<T: Real>(m: DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues and unit eigenvectors of a general square real matrix.
///
/// Works through the complex Schur form `A = Q T Q*` and back substitution on
/// the triangular factor. Nearly coincident diagonal entries are separated by
/// a perturbation of order `eps * ||T||`, so defective matrices still return
/// (nearly parallel) vectors instead of failing.
pub fn general_eigen<T: Real>(a: &DMatrix<T>) -> Result<(Vec<Complex<T>>, DMatrix<Complex<T>>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let ac: DMatrix<Complex<T>> = a.map(|x| Complex::new(x, T::zero()));
    let schur = Schur::try_new(ac, T::eps(), 10_000 * n.max(1))
        .ok_or_else(|| Error::Singular("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();

    let t_norm = t.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)));
    let small = if t_norm > T::zero() { T::eps() * t_norm } else { T::eps() };

    let values: Vec<Complex<T>> = (0..n).map(|i| t[(i, i)]).collect();
    let mut vectors = DMatrix::<Complex<T>>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = DVector::<Complex<T>>::zeros(n);
        y[k] = Complex::new(T::one(), T::zero());
        for i in (0..k).rev() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if cabs(denom) < small {
                denom = Complex::new(small, T::zero());
            }
            y[i] = -acc / denom;
        }
        let mut v = &q * y;
        let norm = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if norm > T::zero() {
            v.iter_mut().for_each(|z| *z = *z / norm);
        }
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

/// Least-squares solution of `a x = b` through the SVD, together with the
/// 2-norm condition number estimate `sigma_max / sigma_min` (infinite when
/// `a` is rank deficient).
pub fn lstsq<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> Result<(DVector<T>, T)> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let d = svd(a)?;
    let smax = d.s.iter().copied().fold(T::zero(), T::max);
    let smin = d.s.iter().copied().fold(smax, T::min);
    let tol = smax * rank_tolerance::<T>(a.nrows(), a.ncols());
    let x = svd_solve(&d, b, tol);
    let cond = if smin > tol { smax / smin } else { T::max_value().unwrap_or(smax) };
    Ok((x, cond))
}

/// Minimum-norm least-squares solution of a complex system `a x = b`.
pub fn complex_lstsq<T: Real>(
    a: &DMatrix<Complex<T>>,
    b: &DVector<Complex<T>>,
) -> Result<DVector<Complex<T>>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    // real embedding [[Re, -Im], [Im, Re]] keeps the minimum-norm solution
    let (r, c) = a.shape();
    let big = DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let rhs = DVector::from_fn(2 * r, |i, _| if i < r { b[i].re } else { b[i - r].im });
    let d = svd(&big)?;
    let smax = d.s.iter().copied().fold(T::zero(), T::max);
    let tol = smax * rank_tolerance::<T>(a.nrows(), a.ncols());
    let x = svd_solve(&d, &rhs, tol);
    Ok(DVector::from_fn(c, |j, _| Complex::new(x[j], x[j + c])))
}
