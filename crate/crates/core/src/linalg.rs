//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` (column-major). The helpers
//! here either wrap nalgebra decompositions with the ordering and rank
//! conventions the rest of the crate relies on, or are small hand loops for
//! hot paths in the manifold solvers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type ComplexMatrix = DMatrix<Complex64>;

/// Matrices whose Hermitian condition number exceeds this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn frobenius_sq(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    frobenius_sq(m).sqrt()
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Rows of `h` at `indices`, in the given order.
pub fn select_rows(h: &ComplexMatrix, indices: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(indices.len(), h.ncols(), |i, j| h[(indices[i], j)])
}

/// Singular value decomposition with singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("u requested");
    let v = dec.v_t.expect("v_t requested").adjoint();
    let s: Vec<f64> = dec.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    Svd {
        u: ComplexMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&k| s[k]).collect(),
        v: ComplexMatrix::from_fn(v.nrows(), order.len(), |i, j| v[(i, order[j])]),
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let herm = hermitize(m);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(m + m^H) / 2`, removing round-off asymmetry.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Condition number of a Hermitian positive semidefinite matrix; infinite when singular.
pub fn hermitian_condition(m: &ComplexMatrix) -> f64 {
    let ev = hermitian_eigenvalues(m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if hi <= 0.0 || !hi.is_finite() {
        return f64::INFINITY;
    }
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `a x = b` for Hermitian positive definite `a`; `None` if the Cholesky factorization fails.
pub fn solve_hpd(a: &ComplexMatrix, b: &ComplexMatrix) -> Option<ComplexMatrix> {
    hermitize(a).cholesky().map(|c| c.solve(b))
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
pub fn least_squares(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let gram = a.adjoint() * a;
    if hermitian_condition(&gram) < MAX_CONDITION {
        if let Some(x) = solve_hpd(&gram, &(a.adjoint() * b)) {
            return x;
        }
    }
    let pinv = a
        .clone()
        .pseudo_inverse(1e-12 * svd(a).singular_values.first().copied().unwrap_or(0.0))
        .expect("non-negative epsilon");
    pinv * b
}

/// `a^H b` reduced to a real scalar: `Re tr(a^H b)`.
pub fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
