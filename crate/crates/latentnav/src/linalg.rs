//! Dense linear algebra kernels.
//!
//! Everything here is written against a plain row-major [`Mat`] and runs the
//! same instruction sequence on every platform, so results are reproducible
//! byte for byte. The SVD is a one-sided Jacobi (Hestenes) iteration with a
//! fixed sweep order and a documented sign/tie rule; it is deterministic by
//! construction rather than by accident of a vendor library.

use crate::error::{Error, Result};

/// Relative off-diagonal tolerance for the Jacobi SVD sweeps.
const SVD_TOL: f64 = 1e-14;

/// Relative off-diagonal tolerance for the symmetric eigensolver.
const EIGEN_TOL: f64 = 1e-14;

/// Sweep cap per matrix dimension for both iterations.
const SWEEPS_PER_DIM: usize = 100;

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

/// Dot product. Panics on length mismatch.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Elementwise `a - b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "sub: length mismatch");
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Elementwise `a + s * b`.
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "add_scaled: length mismatch");
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Input(format!(
                    "matrix row {i} has length {}, expected {ncols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    /// Square matrix with the given diagonal.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Mat::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` as a fresh vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Nested-row copy, row-major. Used by the JSON weight format.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec: dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `x^T * self` for a row vector `x`.
    pub fn vecmat(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "vecmat: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                out[j] += xi * self[(i, j)];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace: matrix not square");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Mat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// Singular value decomposition
// ---------------------------------------------------------------------------

/// Full SVD `J = U Σ V^T` of a square matrix.
///
/// Columns of `u` and `v` are the left/right singular vectors; `sigma` is
/// sorted non-increasing. Ties keep the pre-sort column order, and each left
/// singular vector is oriented so its largest-magnitude entry (lowest index
/// on ties) is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSystem {
    u: Mat,
    sigma: Vec<f64>,
    v: Mat,
}

impl SingularSystem {
    pub fn u(&self) -> &Mat {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v(&self) -> &Mat {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// Left singular vector `u_i`.
    pub fn left_vector(&self, i: usize) -> Vec<f64> {
        self.u.col(i)
    }

    /// Right singular vector `v_i`.
    pub fn right_vector(&self, i: usize) -> Vec<f64> {
        self.v.col(i)
    }

    /// `U Σ V^T`, for residual checks.
    pub fn reconstruct(&self) -> Mat {
        let n = self.dim();
        let mut us = self.u.clone();
        for j in 0..n {
            for i in 0..n {
                us[(i, j)] *= self.sigma[j];
            }
        }
        us.matmul(&self.v.transpose())
    }
}

/// Full SVD of a square matrix via one-sided Jacobi orthogonalization.
///
/// The sweep order (cyclic over column pairs), rotation formula, tie rule
/// and sign rule are all fixed, so repeated calls on the same input return
/// bit-identical output.
pub fn svd(j: &Mat) -> Result<SingularSystem> {
    if !j.is_square() {
        return Err(Error::Dim {
            context: "svd",
            expected: j.rows(),
            actual: j.cols(),
        });
    }
    if !j.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    let n = j.rows();

    // Work on B = J * V_acc; on convergence the columns of B are orthogonal
    // and equal u_i * sigma_i.
    let mut b = j.clone();
    let mut v = Mat::identity(n);
    let max_sweeps = SWEEPS_PER_DIM * n.max(1);
    let mut sweeps = 0usize;
    // Rotations preserve the Frobenius norm, so this absolute floor is a
    // fixed noise level; it keeps denormal-scale columns from being chased
    // forever.
    let floor = 1e-30 * j.frobenius_norm().powi(2);
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..n {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                if apq.abs() <= SVD_TOL * (app * aqq).sqrt() + floor {
                    continue;
                }
                let zeta = (aqq - app) / (2.0 * apq);
                if !zeta.is_finite() {
                    // Column norms differ by so many orders of magnitude that
                    // the rotation would be numerically the identity.
                    continue;
                }
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotated = true;
                for i in 0..n {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    b[(i, p)] = c * bp - s * bq;
                    b[(i, q)] = s * bp + c * bq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps >= max_sweeps {
            return Err(Error::SvdConvergence { sweeps });
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| norm(&b.col(j))).collect();

    // Descending by norm; ties keep original column order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| norms[c].partial_cmp(&norms[a]).unwrap().then(a.cmp(&c)));

    let mut u = Mat::zeros(n, n);
    let mut sigma = vec![0.0; n];
    let mut v_sorted = Mat::zeros(n, n);
    let mut zero_cols = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        for i in 0..n {
            v_sorted[(i, dst)] = v[(i, src)];
        }
        if norms[src] > 0.0 {
            for i in 0..n {
                u[(i, dst)] = b[(i, src)] / norms[src];
            }
        } else {
            zero_cols.push(dst);
        }
    }
    complete_orthonormal(&mut u, &zero_cols);

    // Sign rule: largest-magnitude entry of each u_i positive.
    for jcol in 0..n {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..n {
            let a = u[(i, jcol)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if u[(best, jcol)] < 0.0 {
            for i in 0..n {
                u[(i, jcol)] = -u[(i, jcol)];
                v_sorted[(i, jcol)] = -v_sorted[(i, jcol)];
            }
        }
    }

    Ok(SingularSystem {
        u,
        sigma,
        v: v_sorted,
    })
}

/// Fill the listed zero columns of `u` with a deterministic orthonormal
/// completion (best standard basis vector, projected and re-orthogonalized).
fn complete_orthonormal(u: &mut Mat, zero_cols: &[usize]) {
    let n = u.rows();
    for &col in zero_cols {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..n {
            let mut r = vec![0.0; n];
            r[k] = 1.0;
            project_out(u, col, zero_cols, &mut r);
            let rn = norm(&r);
            let better = match &best {
                Some((bn, _)) => rn > *bn,
                None => true,
            };
            if better {
                best = Some((rn, r));
            }
        }
        let (_, mut r) = best.expect("n > 0");
        // Second pass for orthogonality at working precision.
        project_out(u, col, zero_cols, &mut r);
        let rn = norm(&r);
        for i in 0..n {
            u[(i, col)] = r[i] / rn;
        }
    }
}

/// Subtract from `r` its projection onto every already-filled column of `u`.
fn project_out(u: &Mat, current: usize, zero_cols: &[usize], r: &mut [f64]) {
    let n = u.rows();
    for j in 0..n {
        if zero_cols.contains(&j) && j >= current {
            continue; // not filled yet
        }
        let mut d = 0.0;
        for i in 0..n {
            d += u[(i, j)] * r[i];
        }
        for i in 0..n {
            r[i] -= d * u[(i, j)];
        }
    }
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver and Tr((C1 C2)^{1/2})
// ---------------------------------------------------------------------------

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(values, vectors)` with values descending and eigenvectors as
/// columns of the returned matrix.
pub(crate) fn symmetric_eigen(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    assert!(a.is_square(), "symmetric_eigen: matrix not square");
    let n = a.rows();
    let mut m = a.clone();
    let mut q = Mat::identity(n);
    let max_sweeps = SWEEPS_PER_DIM * n.max(1);
    let mut sweeps = 0usize;
    // Off-diagonals below the round-off level of the matrix count as
    // converged; without the floor, rank-deficient inputs make the sweeps
    // chase noise around a zero block forever.
    let floor = 1e-15 * a.frobenius_norm();
    loop {
        let mut rotated = false;
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m[(p, r)];
                if apq.abs() <= EIGEN_TOL * (m[(p, p)].abs() + m[(r, r)].abs()) + floor {
                    continue;
                }
                let theta = (m[(r, r)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                } else {
                    continue;
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotated = true;
                // A <- G^T A G for the (p, r) rotation.
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, r)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, r)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(r, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(r, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkq;
                    q[(k, r)] = s * qkp + c * qkq;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps >= max_sweeps {
            return Err(Error::EigenConvergence { sweeps });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = q[(i, src)];
        }
    }
    Ok((values, vectors))
}

fn check_symmetric_psd(c: &Mat, name: &'static str) -> Result<()> {
    if !c.is_square() {
        return Err(Error::Dim {
            context: name,
            expected: c.rows(),
            actual: c.cols(),
        });
    }
    if !c.is_finite() {
        return Err(Error::NonFinite(name));
    }
    let scale = 1.0 + c.frobenius_norm();
    for i in 0..c.rows() {
        for j in (i + 1)..c.cols() {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Input(format!(
                    "{name} is not symmetric within tolerance at ({i}, {j})"
                )));
            }
        }
    }
    let (values, _) = symmetric_eigen(&symmetrize(c))?;
    let lambda_max = values.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&lambda_min) = values.last() {
        if lambda_min < -1e-10 * (1.0 + lambda_max) {
            return Err(Error::Input(format!(
                "{name} is indefinite: smallest eigenvalue {lambda_min:e}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn symmetrize(c: &Mat) -> Mat {
    let mut s = c.clone();
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            s[(i, j)] = 0.5 * (c[(i, j)] + c[(j, i)]);
        }
    }
    s
}

/// `Tr((C1 C2)^{1/2})` for symmetric PSD `C1`, `C2`, the cross term of the
/// Fréchet-Gaussian distance.
///
/// Computed through the eigenvalues of `C1^{1/2} C2 C1^{1/2}`, which is
/// symmetric PSD and similar to `C1 C2`. Small negative eigenvalues (down to
/// `-1e-8` relative) are clamped to zero; anything below that is treated as
/// a broken input rather than rounding noise.
pub fn trace_sqrt_product(c1: &Mat, c2: &Mat) -> Result<f64> {
    check_symmetric_psd(c1, "c1")?;
    check_symmetric_psd(c2, "c2")?;
    if c1.rows() != c2.rows() {
        return Err(Error::Dim {
            context: "trace_sqrt_product",
            expected: c1.rows(),
            actual: c2.rows(),
        });
    }

    let (values, vectors) = symmetric_eigen(&symmetrize(c1))?;
    let n = c1.rows();
    // C1^{1/2} = Q sqrt(Λ) Q^T with tiny negatives clamped.
    let mut half = Mat::zeros(n, n);
    for k in 0..n {
        let s = values[k].max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            let qik = vectors[(i, k)] * s;
            if qik == 0.0 {
                continue;
            }
            for j in 0..n {
                half[(i, j)] += qik * vectors[(j, k)];
            }
        }
    }

    let inner = symmetrize(&half.matmul(&symmetrize(c2)).matmul(&half));
    let (inner_values, _) = symmetric_eigen(&inner)?;
    let lambda_max = inner_values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = -1e-8 * (1.0 + lambda_max);
    let mut total = 0.0;
    for &lambda in &inner_values {
        if lambda < floor {
            return Err(Error::Input(format!(
                "product spectrum has eigenvalue {lambda:e} below clamp floor"
            )));
        }
        total += lambda.max(0.0).sqrt();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(n: usize, rng: &mut ChaCha8Rng) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        m
    }

    fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> Mat {
        let a = random_mat(n, rng);
        let mut p = a.matmul(&a.transpose());
        for i in 0..n {
            p[(i, i)] += 0.1;
        }
        symmetrize(&p)
    }

    fn assert_orthonormal(m: &Mat, tol: f64) {
        let n = m.rows();
        let gram = m.transpose().matmul(m);
        let resid = gram.distance(&Mat::identity(n));
        assert!(resid <= tol, "orthogonality residual {resid:e} > {tol:e}");
    }

    #[test]
    fn svd_identity() {
        let sys = svd(&Mat::identity(2)).unwrap();
        assert_eq!(sys.sigma(), &[1.0, 1.0]);
        assert_eq!(sys.reconstruct(), Mat::identity(2));
        assert_eq!(sys.u(), &Mat::identity(2));
    }

    #[test]
    fn svd_diagonal() {
        let j = Mat::from_diag(&[3.0, 1.0]);
        let sys = svd(&j).unwrap();
        assert_eq!(sys.sigma(), &[3.0, 1.0]);
        assert!(sys.reconstruct().distance(&j) <= 1e-12);
    }

    #[test]
    fn svd_diagonal_reorders_descending() {
        let j = Mat::from_diag(&[1.0, 5.0, 2.0]);
        let sys = svd(&j).unwrap();
        assert_eq!(sys.sigma(), &[5.0, 2.0, 1.0]);
        // u_1 should be e_2 after reordering.
        assert_eq!(sys.left_vector(0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn svd_negative_diagonal_sign_rule() {
        let j = Mat::from_diag(&[-2.0, 1.0]);
        let sys = svd(&j).unwrap();
        assert_eq!(sys.sigma(), &[2.0, 1.0]);
        // Largest-magnitude entry of u_1 made positive; the sign moves into v.
        assert_eq!(sys.left_vector(0), vec![1.0, 0.0]);
        assert_eq!(sys.right_vector(0), vec![-1.0, 0.0]);
        assert!(sys.reconstruct().distance(&j) <= 1e-12);
    }

    #[test]
    fn svd_random_reconstruction_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let j = random_mat(16, &mut rng);
            let sys = svd(&j).unwrap();
            let rel = sys.reconstruct().distance(&j) / j.frobenius_norm();
            assert!(rel <= 1e-10, "reconstruction residual {rel:e}");
            assert_orthonormal(sys.u(), 1e-10 * 16.0);
            assert_orthonormal(sys.v(), 1e-10 * 16.0);
            for w in sys.sigma().windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_rank_deficient_completes_basis() {
        let mut j = Mat::zeros(4, 4);
        j[(0, 0)] = 2.0;
        j[(1, 1)] = 1.0;
        let sys = svd(&j).unwrap();
        assert_eq!(sys.sigma()[2], 0.0);
        assert_eq!(sys.sigma()[3], 0.0);
        assert_orthonormal(sys.u(), 1e-12);
        assert!(sys.reconstruct().distance(&j) <= 1e-12);
    }

    #[test]
    fn svd_zero_matrix() {
        let sys = svd(&Mat::zeros(3, 3)).unwrap();
        assert_eq!(sys.sigma(), &[0.0, 0.0, 0.0]);
        assert_orthonormal(sys.u(), 1e-12);
    }

    #[test]
    fn svd_deterministic_bytes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = random_mat(12, &mut rng);
        let a = svd(&j).unwrap();
        let b = svd(&j).unwrap();
        let bits = |m: &Mat| -> Vec<u64> {
            (0..m.rows())
                .flat_map(|i| m.row(i).iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                .collect()
        };
        assert_eq!(bits(a.u()), bits(b.u()));
        assert_eq!(bits(a.v()), bits(b.v()));
        let sa: Vec<u64> = a.sigma().iter().map(|v| v.to_bits()).collect();
        let sb: Vec<u64> = b.sigma().iter().map(|v| v.to_bits()).collect();
        assert_eq!(sa, sb);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut j = Mat::identity(2);
        j[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&j), Err(Error::NonFinite(_))));
    }

    #[test]
    fn svd_rejects_non_square() {
        let j = Mat::zeros(2, 3);
        assert!(matches!(svd(&j), Err(Error::Dim { .. })));
    }

    #[test]
    fn eigen_diagonal() {
        let (values, vectors) = symmetric_eigen(&Mat::from_diag(&[1.0, 4.0, 2.0])).unwrap();
        assert_eq!(values, vec![4.0, 2.0, 1.0]);
        assert_orthonormal(&vectors, 1e-12);
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_psd(8, &mut rng);
        let (values, vectors) = symmetric_eigen(&a).unwrap();
        // Q Λ Q^T == A
        let mut ql = vectors.clone();
        for j in 0..8 {
            for i in 0..8 {
                ql[(i, j)] *= values[j];
            }
        }
        let back = ql.matmul(&vectors.transpose());
        assert!(back.distance(&a) <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn trace_sqrt_identity() {
        let i3 = Mat::identity(3);
        let t = trace_sqrt_product(&i3, &i3).unwrap();
        assert!((t - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn trace_sqrt_commuting_diagonals() {
        let c1 = Mat::from_diag(&[4.0, 1.0]);
        let c2 = Mat::from_diag(&[1.0, 4.0]);
        let t = trace_sqrt_product(&c1, &c2).unwrap();
        assert!((t - 4.0).abs() <= 1e-12, "got {t}");
    }

    #[test]
    fn trace_sqrt_symmetric_in_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c1 = random_psd(6, &mut rng);
            let c2 = random_psd(6, &mut rng);
            let a = trace_sqrt_product(&c1, &c2).unwrap();
            let b = trace_sqrt_product(&c2, &c1).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    // Independent oracle: Denman–Beavers iteration for the square root of
    // C1*C2, which shares its spectrum with the symmetric PSD form used by
    // the implementation but follows a completely different algorithm.
    fn denman_beavers_sqrt(a: &Mat) -> Mat {
        let n = a.rows();
        let mut y = a.clone();
        let mut z = Mat::identity(n);
        for _ in 0..60 {
            let y_inv = invert(&y);
            let z_inv = invert(&z);
            let mut y_next = Mat::zeros(n, n);
            let mut z_next = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    y_next[(i, j)] = 0.5 * (y[(i, j)] + z_inv[(i, j)]);
                    z_next[(i, j)] = 0.5 * (z[(i, j)] + y_inv[(i, j)]);
                }
            }
            let delta = y_next.distance(&y);
            y = y_next;
            z = z_next;
            if delta <= 1e-14 * (1.0 + y.frobenius_norm()) {
                break;
            }
        }
        y
    }

    fn invert(a: &Mat) -> Mat {
        let n = a.rows();
        let mut work = a.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if work[(r, col)].abs() > work[(pivot, col)].abs() {
                    pivot = r;
                }
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = work[(col, j)];
                    work[(col, j)] = work[(pivot, j)];
                    work[(pivot, j)] = tmp;
                    let tmp = inv[(col, j)];
                    inv[(col, j)] = inv[(pivot, j)];
                    inv[(pivot, j)] = tmp;
                }
            }
            let d = work[(col, col)];
            assert!(d.abs() > 1e-300, "singular matrix in test inverse");
            for j in 0..n {
                work[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = work[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    work[(r, j)] -= f * work[(col, j)];
                    inv[(r, j)] -= f * inv[(col, j)];
                }
            }
        }
        inv
    }

    #[test]
    fn trace_sqrt_matches_denman_beavers() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let c1 = random_psd(5, &mut rng);
            let c2 = random_psd(5, &mut rng);
            let got = trace_sqrt_product(&c1, &c2).unwrap();
            let expected = denman_beavers_sqrt(&c1.matmul(&c2)).trace();
            let rel = (got - expected).abs() / expected.abs().max(1.0);
            assert!(rel <= 1e-8, "trace mismatch: {got} vs {expected}");
        }
    }

    #[test]
    fn trace_sqrt_rejects_asymmetric() {
        let mut c1 = Mat::identity(2);
        c1[(0, 1)] = 0.5; // c1[(1,0)] stays 0
        let c2 = Mat::identity(2);
        assert!(matches!(
            trace_sqrt_product(&c1, &c2),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn trace_sqrt_rejects_indefinite() {
        let c1 = Mat::from_diag(&[1.0, -0.5]);
        let c2 = Mat::identity(2);
        assert!(matches!(
            trace_sqrt_product(&c1, &c2),
            Err(Error::Input(_))
        ));
    }
}
