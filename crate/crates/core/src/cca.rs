//! Canonical correlation analysis.
//!
//! Both inputs are mean-centered and factored with a column-pivoted QR,
//! truncated to their numerical rank. The SVD of `Q_x^T Q_y` gives the
//! canonical correlations and the rotations; unmixing matrices follow from a
//! triangular solve against the leading block of each `R` factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Side};
use crate::linalg::{self, PivotedQr};

/// Output of one CCA run on a data block `x` (T x N_data) and a reference
/// block `y` (T x N_noise).
#[derive(Debug, Clone)]
pub struct CcaResult {
    /// N_data x n_comp; `u_variates = (x - x_mean) * a_unmix`.
    pub a_unmix: DMatrix<f64>,
    /// N_noise x n_comp; `v_variates = (y - y_mean) * b_unmix`.
    pub b_unmix: DMatrix<f64>,
    /// Canonical correlations, non-increasing, each in [0, 1].
    pub correlations: Vec<f64>,
    pub u_variates: DMatrix<f64>,
    pub v_variates: DMatrix<f64>,
    pub n_comp: usize,
    pub x_mean: DVector<f64>,
    pub y_mean: DVector<f64>,
    /// Numerical rank of the mean-centered data block.
    pub x_rank: usize,
    /// Numerical rank of the mean-centered reference block.
    pub y_rank: usize,
}

/// Smallest sample count accepted for the given channel counts: more samples
/// than channels on either side, and never fewer than three.
pub fn min_samples(n_data: usize, n_noise: usize) -> usize {
    (n_data.max(n_noise) + 1).max(3)
}

struct RankedQr {
    qr: PivotedQr,
    rank: usize,
}

fn factor(centered: &DMatrix<f64>) -> Result<RankedQr> {
    let (t, n) = centered.shape();
    let qr = PivotedQr::new(centered.clone());
    let sv = linalg::svd(qr.r(), false)?;
    let rank = linalg::count_above(sv.singular_values.as_slice(), linalg::default_rank_tol(t, n));
    Ok(RankedQr { qr, rank })
}

/// Solves `R11 * W = rhs` with `R11` the leading `rank x rank` block of the
/// pivoted factor, then scatters rows back to the original channel order.
fn unmixing(f: &RankedQr, rhs: &DMatrix<f64>, n_channels: usize) -> Result<DMatrix<f64>> {
    let r = f.qr.r();
    let r11 = r.view((0, 0), (f.rank, f.rank));
    let w = r11
        .solve_upper_triangular(rhs)
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;
    let mut out = DMatrix::zeros(n_channels, rhs.ncols());
    for (pos, &orig) in f.qr.perm().iter().take(f.rank).enumerate() {
        out.set_row(orig, &w.row(pos));
    }
    Ok(out)
}

/// Canonical correlation analysis of `x` against `y`.
///
/// Variates are scaled to unit sample variance (denominator `T - 1`). Each
/// pair is signed so its correlation is non-negative and the largest
/// magnitude entry of the corresponding `a_unmix` column is positive.
pub fn canoncorr(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<CcaResult> {
    linalg::validate_matrix(x)?;
    linalg::validate_matrix(y)?;
    let t = x.nrows();
    if y.nrows() != t {
        return Err(Error::shape(format!(
            "data has {} samples but reference has {}",
            t,
            y.nrows()
        )));
    }
    let required = min_samples(x.ncols(), y.ncols());
    if t < required {
        return Err(Error::InsufficientSamples { samples: t, required });
    }

    let (x0, x_mean) = linalg::mean_center_unchecked(x);
    let (y0, y_mean) = linalg::mean_center_unchecked(y);

    let fx = factor(&x0)?;
    if fx.rank == 0 {
        return Err(Error::Degenerate(Side::Data));
    }
    let fy = factor(&y0)?;
    if fy.rank == 0 {
        return Err(Error::Degenerate(Side::Noise));
    }

    // Q_x^T Q_y restricted to the rank-truncated orthonormal bases
    let mut cross = fy.qr.thin_q(fy.rank);
    fx.qr.apply_qt(&mut cross, fx.rank);
    let cross = cross.rows(0, fx.rank).into_owned();

    let n_comp = fx.rank.min(fy.rank);
    let dec = linalg::svd(cross, true)?;
    let l = dec.u.as_ref().expect("requested").columns(0, n_comp).into_owned();
    let m = dec.v_t.as_ref().expect("requested").rows(0, n_comp).transpose();

    let scale = ((t - 1) as f64).sqrt();
    let mut a_unmix = unmixing(&fx, &(l * scale), x.ncols())?;
    let mut b_unmix = unmixing(&fy, &(m * scale), y.ncols())?;

    let correlations: Vec<f64> = dec.singular_values.as_slice()[..n_comp]
        .iter()
        .map(|r| r.clamp(0.0, 1.0))
        .collect();

    for i in 0..n_comp {
        let col = a_unmix.column(i);
        let mut imax = 0;
        for (k, v) in col.iter().enumerate() {
            if v.abs() > col[imax].abs() {
                imax = k;
            }
        }
        if col[imax] < 0.0 {
            a_unmix.column_mut(i).neg_mut();
            b_unmix.column_mut(i).neg_mut();
        }
    }

    let u_variates = &x0 * &a_unmix;
    let v_variates = &y0 * &b_unmix;

    Ok(CcaResult {
        a_unmix,
        b_unmix,
        correlations,
        u_variates,
        v_variates,
        n_comp,
        x_mean,
        y_mean,
        x_rank: fx.rank,
        y_rank: fy.rank,
    })
}
