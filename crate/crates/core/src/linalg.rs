//! Dense linear-algebra primitives used by the CCA and cleaning stages.
//!
//! Matrices are `nalgebra::DMatrix<f64>` laid out as samples × channels. The
//! storage is column-major, so each channel is a contiguous slice; the
//! Householder kernels below rely on that.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Checks the basic matrix invariants: at least one row and column, and
/// every entry finite.
pub fn validate_matrix(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::shape(format!(
            "matrix must be non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let rows = m.nrows();
    if let Some(idx) = m.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: idx % rows,
            col: idx / rows,
            value: m.as_slice()[idx],
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn col(m: &DMatrix<f64>, j: usize) -> &[f64] {
    let r = m.nrows();
    &m.as_slice()[j * r..(j + 1) * r]
}

#[inline]
pub(crate) fn col_mut(m: &mut DMatrix<f64>, j: usize) -> &mut [f64] {
    let r = m.nrows();
    &mut m.as_mut_slice()[j * r..(j + 1) * r]
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Subtracts each column's mean. Returns the centered matrix and the means,
/// so that `m == centered + means` broadcast over rows.
pub fn mean_center(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    validate_matrix(m)?;
    Ok(mean_center_unchecked(m))
}

pub(crate) fn mean_center_unchecked(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = m.nrows() as f64;
    let mut centered = m.clone();
    let mut means = DVector::zeros(m.ncols());
    for j in 0..m.ncols() {
        let c = col_mut(&mut centered, j);
        let mu = c.iter().sum::<f64>() / n;
        c.iter_mut().for_each(|v| *v -= mu);
        means[j] = mu;
    }
    (centered, means)
}

/// Default relative rank tolerance for an `rows x cols` matrix.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Householder QR with column pivoting (largest remaining column norm first).
///
/// Reflector `k` is `I - tau[k] * v * v^T` with `v[k] = 1` and the rest of `v`
/// stored below the diagonal of column `k` in `factors`.
pub(crate) struct PivotedQr {
    factors: DMatrix<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

/// Applies `I - tau * v * v^T` to `c`, where `v = [1, v_tail...]`.
#[inline]
fn apply_reflector(v_tail: &[f64], tau: f64, c: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let (head, tail) = c.split_first_mut().expect("reflector target is non-empty");
    let w = tau * (*head + dot(v_tail, tail));
    *head -= w;
    for (t, v) in tail.iter_mut().zip(v_tail) {
        *t -= w * v;
    }
}

impl PivotedQr {
    pub(crate) fn new(mut a: DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let kmax = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms: Vec<f64> = (0..n).map(|j| dot(col(&a, j), col(&a, j))).collect();
        let mut ref_norms = norms.clone();
        let mut tau = Vec::with_capacity(kmax);
        // Partial norms below this fraction of their reference are recomputed
        // instead of downdated, since the downdate has lost too many digits.
        let recompute_below = f64::EPSILON.sqrt();

        for k in 0..kmax {
            let mut p = k;
            for j in k + 1..n {
                if norms[j] > norms[p] {
                    p = j;
                }
            }
            if p != k {
                a.swap_columns(k, p);
                perm.swap(k, p);
                norms.swap(k, p);
                ref_norms.swap(k, p);
            }

            let (left, right) = a.as_mut_slice().split_at_mut((k + 1) * m);
            let ck = &mut left[k * m..];
            let alpha = ck[k];
            let xnorm = dot(&ck[k + 1..], &ck[k + 1..]).sqrt();
            let t = if xnorm == 0.0 {
                0.0
            } else {
                let beta = -alpha.hypot(xnorm).copysign(alpha);
                let scale = 1.0 / (alpha - beta);
                ck[k + 1..].iter_mut().for_each(|v| *v *= scale);
                ck[k] = beta;
                (beta - alpha) / beta
            };
            tau.push(t);

            let v_tail = &ck[k + 1..];
            for (jj, cj) in right.chunks_exact_mut(m).enumerate() {
                apply_reflector(v_tail, t, &mut cj[k..]);
                let j = k + 1 + jj;
                let rkj = cj[k];
                let updated = norms[j] - rkj * rkj;
                if updated <= recompute_below * ref_norms[j] {
                    let fresh = dot(&cj[k + 1..], &cj[k + 1..]);
                    norms[j] = fresh;
                    ref_norms[j] = fresh;
                } else {
                    norms[j] = updated;
                }
            }
        }

        PivotedQr { factors: a, tau, perm }
    }

    /// `perm[j]` is the original column index placed at position `j`.
    pub(crate) fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub(crate) fn n_reflectors(&self) -> usize {
        self.tau.len()
    }

    /// Upper-trapezoidal factor, `min(m, n) x n`, in pivoted column order.
    pub(crate) fn r(&self) -> DMatrix<f64> {
        let k = self.n_reflectors();
        let n = self.factors.ncols();
        DMatrix::from_fn(k, n, |i, j| if i <= j { self.factors[(i, j)] } else { 0.0 })
    }

    /// Overwrites `b` with `H_{count-1} ... H_0 b`; with `count` equal to the
    /// number of reflectors this is `Q^T b`.
    pub(crate) fn apply_qt(&self, b: &mut DMatrix<f64>, count: usize) {
        let m = self.factors.nrows();
        assert_eq!(b.nrows(), m);
        for j in 0..b.ncols() {
            let bj = col_mut(b, j);
            for k in 0..count {
                let v_tail = &col(&self.factors, k)[k + 1..];
                apply_reflector(v_tail, self.tau[k], &mut bj[k..]);
            }
        }
    }

    /// The first `ncols` columns of `Q`.
    pub(crate) fn thin_q(&self, ncols: usize) -> DMatrix<f64> {
        let m = self.factors.nrows();
        assert!(ncols <= self.n_reflectors());
        let mut q = DMatrix::zeros(m, ncols);
        for j in 0..ncols {
            q[(j, j)] = 1.0;
        }
        for k in (0..ncols).rev() {
            let v_tail = &col(&self.factors, k)[k + 1..];
            // columns left of k are still zero in rows k.. and unaffected
            for j in k..ncols {
                apply_reflector(v_tail, self.tau[k], &mut col_mut(&mut q, j)[k..]);
            }
        }
        q
    }
}

pub(crate) fn svd(m: DMatrix<f64>, compute_vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m, compute_vectors, compute_vectors, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))
}

/// Number of singular values strictly above `tol * sigma_max`.
pub(crate) fn count_above(singular_values: &[f64], tol: f64) -> usize {
    let smax = singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > tol * smax).count()
}

/// Numerical rank with the default tolerance `max(rows, cols) * eps`
/// relative to the largest singular value.
pub fn estimate_rank(m: &DMatrix<f64>) -> Result<usize> {
    estimate_rank_with_tol(m, default_rank_tol(m.nrows(), m.ncols()))
}

/// Numerical rank: singular values greater than `tol * sigma_max`.
/// An all-zero matrix has rank 0.
pub fn estimate_rank_with_tol(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    validate_matrix(m)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::config(format!("rank tolerance must be positive, got {tol}")));
    }
    let tall = if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        m.transpose()
    };
    let qr = PivotedQr::new(tall);
    let sv = svd(qr.r(), false)?;
    Ok(count_above(sv.singular_values.as_slice(), tol))
}

/// Least-squares solution of `basis * coefficients ≈ targets`, minimizing the
/// Frobenius norm of the residual. Rank-deficient bases get the minimum-norm
/// solution, with the rank decided by the same tolerance as [`estimate_rank`].
pub fn least_squares_solve(basis: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    validate_matrix(basis)?;
    validate_matrix(targets)?;
    if basis.nrows() != targets.nrows() {
        return Err(Error::shape(format!(
            "basis has {} rows but targets have {}",
            basis.nrows(),
            targets.nrows()
        )));
    }
    least_squares_unchecked(basis, targets)
}

pub(crate) fn least_squares_unchecked(basis: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, k) = basis.shape();
    let n = targets.ncols();
    let qr = PivotedQr::new(basis.clone());
    let kmax = qr.n_reflectors();

    // basis * P = Q * R and R = Ur * S * Vr^T, so
    // pinv(basis) = P * Vr * pinv(S) * Ur^T * Q^T.
    let dec = svd(qr.r(), true)?;
    let u = dec.u.as_ref().expect("left singular vectors requested");
    let v_t = dec.v_t.as_ref().expect("right singular vectors requested");
    let s = dec.singular_values.as_slice();
    let rank = count_above(s, default_rank_tol(rows, k));

    let mut qtb = targets.clone();
    qr.apply_qt(&mut qtb, kmax);
    let top = qtb.rows(0, kmax);

    let mut coef_piv = DMatrix::zeros(k, n);
    for (i, &si) in s.iter().enumerate().take(rank) {
        // (u_i^T top) / s_i, outer product with v_i
        let proj = u.column(i).transpose() * top / si;
        coef_piv += v_t.row(i).transpose() * proj;
    }

    let mut coef = DMatrix::zeros(k, n);
    for (pos, &orig) in qr.perm().iter().enumerate() {
        coef.set_row(orig, &coef_piv.row(pos));
    }
    Ok(coef)
}
