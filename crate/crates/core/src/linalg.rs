//! Small dense complex linear-algebra helpers shared across modules.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

#[cfg(test)]
pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
#[cfg(test)]
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `e^{j·phase}`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::new(libm::cos(phase), libm::sin(phase))
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eig_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    // Symmetrize so round-off in the input cannot leak into the solver.
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Singular values of `m`, largest first.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `rel_tol · σ_max` discarded. Returns the inverse and the retained rank.
pub fn pinv(m: &CMatrix, rel_tol: f64) -> (CMatrix, usize) {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rel_tol * s_max;
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let vi = v_t.row(i).adjoint();
            let ui = u.column(i).adjoint();
            out += (vi * ui).scale(1.0 / s);
        }
    }
    (out, rank)
}

/// Eigenvalues of a general square complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Option<Vec<C64>> {
    if m.nrows() == 1 {
        return Some(alloc::vec![m[(0, 0)]]);
    }
    Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().copied().collect())
}

/// Column-major vectorization `vec(M)`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Modified Gram-Schmidt over the columns of `g`. Columns whose residual norm
/// falls below `rel_tol` times the largest input column norm are dropped.
pub fn orthonormal_basis(g: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    let lead = g.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CVector> = Vec::new();
    if lead == 0.0 {
        return basis;
    }
    for col in g.column_iter() {
        let mut v: CVector = col.into_owned();
        for q in &basis {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let n = v.norm();
        if n > rel_tol * lead {
            basis.push(v.unscale(n));
        }
    }
    basis
}

/// Widen a real matrix to complex.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}
