#![allow(dead_code)]

pub mod checks;

use icanclean::Recording;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// x and y sharing `shared` latent factors on top of independent noise,
/// with random per-channel offsets.
pub fn correlated_pair(seed: u64, t: usize, nx: usize, ny: usize, shared: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut r = rng(seed);
    let z = randn(&mut r, t, shared.max(1));
    let mut x = randn(&mut r, t, nx) + &z * randn(&mut r, shared.max(1), nx) * if shared > 0 { 1.5 } else { 0.0 };
    let mut y = randn(&mut r, t, ny) + &z * randn(&mut r, shared.max(1), ny) * if shared > 0 { 1.5 } else { 0.0 };
    for j in 0..nx {
        let off = r.random_range(-5.0..5.0);
        x.column_mut(j).add_scalar_mut(off);
    }
    for j in 0..ny {
        let off = r.random_range(-5.0..5.0);
        y.column_mut(j).add_scalar_mut(off);
    }
    (x, y)
}

fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for mut col in c.column_iter_mut() {
        let mu = col.mean();
        col.add_scalar_mut(-mu);
    }
    c
}

/// Canonical correlations from the covariance eigenproblem
/// `Cxx^-1 Cxy Cyy^-1 Cyx`, solved in whitened symmetric form. Needs both
/// covariance blocks to be positive definite.
pub fn oracle_correlations(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Vec<f64> {
    let t = x.nrows() as f64;
    let (xc, yc) = (centered(x), centered(y));
    let cxx = xc.transpose() * &xc / (t - 1.0);
    let cyy = yc.transpose() * &yc / (t - 1.0);
    let cxy = xc.transpose() * &yc / (t - 1.0);
    let lx = cxx.cholesky().expect("Cxx positive definite").l();
    let ly = cyy.cholesky().expect("Cyy positive definite").l();
    // M = Lx^-1 Cxy Ly^-T; eigenvalues of M M^T are the squared correlations.
    let lx_inv = lx.try_inverse().unwrap();
    let ly_inv = ly.try_inverse().unwrap();
    let m = &lx_inv * cxy * ly_inv.transpose();
    let sym = &m * m.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.truncate(x.ncols().min(y.ncols()));
    ev.into_iter().map(|v| v.clamp(0.0, 1.0).sqrt()).collect()
}

/// `(B^T B)^-1 B^T Y`
pub fn normal_equations(basis: &DMatrix<f64>, targets: &DMatrix<f64>) -> DMatrix<f64> {
    let btb = basis.transpose() * basis;
    btb.try_inverse().expect("full column rank") * basis.transpose() * targets
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub fn max_abs_diff_vec(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub fn rec(m: DMatrix<f64>, prefix: &str) -> Recording {
    Recording::with_numbered_labels(m, prefix, 250.0).unwrap()
}

/// A T x n matrix of rank `rank` (before centering offsets), built from a
/// random low-rank factorization plus per-column offsets.
pub fn low_rank(r: &mut ChaCha8Rng, t: usize, n: usize, rank: usize) -> DMatrix<f64> {
    let mut m = randn(r, t, rank) * randn(r, rank, n);
    for j in 0..n {
        let off = r.random_range(-3.0..3.0);
        m.column_mut(j).add_scalar_mut(off);
    }
    m
}

/// Constructed rank-deficient case `k`: returns (x, y, rank_x, rank_y)
/// where the ranks are those of the mean-centered blocks.
pub fn rank_case(k: u64) -> (DMatrix<f64>, DMatrix<f64>, usize, usize) {
    let mut r = rng(1000 + k);
    let t = 60 + (k as usize % 5) * 20;
    match k % 4 {
        // duplicate columns in x
        0 => {
            let base = randn(&mut r, t, 3);
            let x = DMatrix::from_fn(t, 5, |i, j| base[(i, j % 3)]);
            let y = randn(&mut r, t, 4);
            (x, y, 3, 4)
        }
        // embedded low-rank factor in both blocks
        1 => {
            let rx = 1 + (k as usize / 4) % 3;
            let x = low_rank(&mut r, t, 6, rx);
            let y = low_rank(&mut r, t, 4, 2);
            (x, y, rx, 2)
        }
        // y has a duplicated column plus a linear combination
        2 => {
            let x = randn(&mut r, t, 4);
            let b = randn(&mut r, t, 2);
            let y = DMatrix::from_fn(t, 4, |i, j| match j {
                0 | 1 => b[(i, j)],
                2 => b[(i, 0)],
                _ => 2.0 * b[(i, 0)] - 0.5 * b[(i, 1)],
            });
            (x, y, 4, 2)
        }
        // a constant column vanishes after centering
        _ => {
            let mut x = randn(&mut r, t, 5);
            x.column_mut(2).fill(7.25);
            let y = low_rank(&mut r, t, 5, 3);
            (x, y, 4, 3)
        }
    }
}
