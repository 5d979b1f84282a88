//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Determinant by LU with partial pivoting.
pub fn det(m: &CMat) -> C64 {
    assert!(m.is_square());
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Solves `m x = b` by LU with partial pivoting.
pub fn solve(m: &CMat, b: &CVec) -> Option<CVec> {
    m.clone().lu().solve(b)
}

/// Determinant by cofactor expansion along the first row.
///
/// Exponential cost; only meant for the tiny matrices where an independent
/// second algorithm is wanted.
pub fn det_cofactor(m: &CMat) -> C64 {
    assert!(m.is_square());
    let n = m.nrows();
    match n {
        0 => C64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                if m[(0, j)] == C64::new(0.0, 0.0) {
                    continue;
                }
                let minor = m.clone().remove_row(0).remove_column(j);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += m[(0, j)] * sign * det_cofactor(&minor);
            }
            acc
        }
    }
}

/// Cramer's rule with cofactor determinants.
pub fn cramer_solve(m: &CMat, b: &CVec) -> Option<CVec> {
    let d = det_cofactor(m);
    if d.norm() == 0.0 || !d.is_finite() {
        return None;
    }
    let n = m.nrows();
    let mut x = CVec::zeros(n);
    for k in 0..n {
        let mut mk = m.clone();
        mk.set_column(k, b);
        x[k] = det_cofactor(&mk) / d;
    }
    Some(x)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// σ_min / σ_max over the min(rows, cols) singular values; zero for a zero matrix.
pub fn singular_ratio(m: &CMat) -> f64 {
    let s = singular_values(m);
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Orthonormal basis (as columns) of the kernel of `m`.
///
/// Singular values at or below `rel_tol · σ_max` count as zero.
pub fn kernel_basis(m: &CMat, rel_tol: f64) -> CMat {
    let (rows, cols) = m.shape();
    // pad to square so the SVD returns a full set of right singular vectors
    let k = rows.max(cols);
    let mut sq = CMat::zeros(k, cols);
    sq.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let picked: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cut)
        .collect();
    let mut basis = CMat::zeros(cols, picked.len());
    for (c_idx, &i) in picked.iter().enumerate() {
        for r in 0..cols {
            basis[(r, c_idx)] = vt[(i, r)].conj();
        }
    }
    basis
}

/// Orthonormal basis of the range of `m`, using the same threshold rule.
pub fn range_basis(m: &CMat, rel_tol: f64) -> CMat {
    let (rows, cols) = m.shape();
    let k = rows.max(cols);
    let mut sq = CMat::zeros(rows, k);
    sq.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = sq.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let picked: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > cut)
        .collect();
    let mut basis = CMat::zeros(rows, picked.len());
    for (c_idx, &i) in picked.iter().enumerate() {
        basis.set_column(c_idx, &u.column(i));
    }
    basis
}

/// Orthogonal projector `B B*` for a basis with orthonormal columns.
pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Moore–Penrose pseudo-inverse (small matrices only).
pub fn pinv(m: &CMat, rel_tol: f64) -> CMat {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.pseudo_inverse(rel_tol * smax.max(f64::MIN_POSITIVE))
        .expect("both factors computed")
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(entries))
}

/// Block diagonal `[[a, 0], [0, b]]`.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = CMat::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

/// Unit vector `e_i` of length `n`.
pub fn unit(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = C64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn lu_and_cofactor_determinants_agree() {
        for n in 1..=5 {
            for seed in 0..5 {
                let m = sample(n, seed * 31 + n as u64);
                let a = det(&m);
                let b = det_cofactor(&m);
                assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()), "n={n}");
            }
        }
    }

    #[test]
    fn cramer_matches_lu_solve() {
        let m = sample(3, 7);
        let b = CVec::from_fn(3, |i, _| c(i as f64, 1.0));
        let x1 = solve(&m, &b).unwrap();
        let x2 = cramer_solve(&m, &b).unwrap();
        assert!(max_abs_vec(&(x1 - x2)) < 1e-12);
    }

    #[test]
    fn kernel_of_rank_one_matrix() {
        let m = CMat::from_row_slice(2, 2, &[re(1.0), re(1.0), re(2.0), re(2.0)]);
        let k = kernel_basis(&m, 1e-10);
        assert_eq!(k.ncols(), 1);
        assert!(max_abs(&(&m * &k)) < 1e-14);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        // [1 0 0] has a two dimensional kernel
        let m = CMat::from_row_slice(1, 3, &[re(1.0), re(0.0), re(0.0)]);
        let k = kernel_basis(&m, 1e-10);
        assert_eq!(k.ncols(), 2);
        let p = projector(&k);
        assert!((p[(0, 0)]).norm() < 1e-14);
        assert!((p[(1, 1)] - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_kernel_is_everything() {
        let k = kernel_basis(&CMat::zeros(3, 3), 1e-10);
        assert_eq!(k.ncols(), 3);
        assert_eq!(range_basis(&CMat::zeros(3, 3), 1e-10).ncols(), 0);
    }

    #[test]
    fn singular_ratio_detects_rank() {
        let m = CMat::from_row_slice(2, 4, &[re(1.0), re(0.0), re(0.0), re(0.0), re(0.0), re(0.0), re(0.0), re(0.0)]);
        assert_eq!(singular_ratio(&m), 0.0);
        assert!(singular_ratio(&identity(3)) > 0.99);
    }
}
