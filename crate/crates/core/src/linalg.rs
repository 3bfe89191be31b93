//! Small dense linear-algebra helpers shared by the optimisation stages.

use nalgebra::DMatrix;

/// Damped pseudo-inverse `V diag(s / (s^2 + lambda^2)) U^T`.
pub fn damped_pinv(m: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    let l2 = lambda * lambda;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let inv = s / (s * s + l2);
        if inv == 0.0 {
            continue;
        }
        out += v_t.row(k).transpose() * u.column(k).transpose() * inv;
    }
    out
}

/// Smallest singular value.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

/// Orthogonal projector onto the null space of `a`. Singular values below
/// `rel_tol * s_max` are treated as zero.
pub fn null_space_projector(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd v_t");
    let s_max = svd.singular_values.max();
    let mut p = DMatrix::identity(n, n);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > rel_tol * s_max && s > 0.0 {
            let v = v_t.row(k);
            p -= v.transpose() * v;
        }
    }
    p
}

/// Minimum-norm solution of the symmetric positive semidefinite system
/// `m x = b`. Cholesky when `m` is well conditioned, otherwise an SVD solve
/// that drops singular values below `rel_tol * sigma_max`.
pub fn solve_psd(m: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if let Some(ch) = m.clone().cholesky() {
        let d = ch.l_dirty().diagonal();
        let (lo, hi) = (d.min(), d.max());
        if lo * lo > rel_tol * hi * hi {
            return ch.solve(b);
        }
    }
    let svd = m.clone().svd(true, true);
    let cutoff = rel_tol * svd.singular_values.max();
    svd.solve(b, cutoff).expect("svd computed with both factors")
}
