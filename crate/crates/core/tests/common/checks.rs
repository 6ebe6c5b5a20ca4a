//! Property checks shared by the property tests and the acceptance suite.
//! Each returns the worst observed deviation, or a description of the first
//! violation.

use icanclean::synth::RefMixing;
use icanclean::{
    apply_spatial_filter, canoncorr, clean_batch, clean_sliding, fit_spatial_filter, generate_scenario, run_pipeline,
    CleanConfig, Recording, Scenario, ScenarioParams,
};
use nalgebra::DMatrix;

use super::*;

pub type Check = Result<f64, String>;

const THRESHOLDS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

/// Small seeded scenario `k`, with noisy references so correlations stay
/// below one.
pub fn case(k: u64) -> (Scenario, CleanConfig) {
    let n_data = 6 + (k as usize % 4) * 2;
    let n_noise = 2 + k as usize % 3;
    let s = generate_scenario(&ScenarioParams {
        n_samples: 600 + (k as usize % 5) * 150,
        n_data,
        n_noise,
        n_signal_sources: 2 + k as usize % 2,
        n_noise_sources: n_noise,
        ref_sensor_noise_level: 0.05 + 0.1 * (k % 4) as f64,
        seed: 500 + k,
        ..ScenarioParams::default()
    })
    .unwrap();
    (s, CleanConfig::new(THRESHOLDS[k as usize % 4]))
}

fn col_mean(m: &DMatrix<f64>, j: usize) -> f64 {
    m.column(j).mean()
}

fn col_var(m: &DMatrix<f64>, j: usize) -> f64 {
    m.column(j).variance() * m.nrows() as f64 / (m.nrows() - 1) as f64
}

pub fn oracle_equivalence(instances: u64) -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..instances {
        let t = 40 + (seed as usize * 37) % 161;
        let nx = 1 + seed as usize % 4;
        let ny = 1 + (seed as usize / 4) % 2;
        let (x, y) = correlated_pair(9000 + seed, t, nx, ny, (seed % 3) as usize);
        let got = canoncorr(&x, &y).map_err(|e| format!("seed {seed}: {e}"))?.correlations;
        let want = oracle_correlations(&x, &y);
        let d = max_abs_diff_vec(&got, &want);
        if d >= 1e-8 {
            return Err(format!("seed {seed}: deviation {d:e}"));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

pub fn affine_invariance(cases: u64) -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (x, y) = correlated_pair(7000 + k, 120 + k as usize, 3 + k as usize % 3, 2 + k as usize % 2, 2);
        let mut r = rng(7100 + k);
        let (nx, ny) = (x.ncols(), y.ncols());
        let mx = randn(&mut r, nx, nx) * 0.3 + DMatrix::identity(nx, nx) * nx as f64;
        let my = randn(&mut r, ny, ny) * 0.3 + DMatrix::identity(ny, ny) * ny as f64;
        let shift_x = randn(&mut r, 1, nx) * 10.0;
        let xm = DMatrix::from_fn(x.nrows(), nx, |i, j| (&x * &mx)[(i, j)] + shift_x[(0, j)]);
        let base = canoncorr(&x, &y).map_err(|e| e.to_string())?.correlations;
        let mapped = canoncorr(&xm, &(&y * &my)).map_err(|e| e.to_string())?.correlations;
        let d = max_abs_diff_vec(&base, &mapped);
        if d >= 1e-8 {
            return Err(format!("case {k}: deviation {d:e}"));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Largest |mean(x_clean_j) - mean(x_j)| relative to channel scale.
pub fn mean_preservation(cases: u64) -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (s, cfg) = case(k);
        let (xc, _) = clean_batch(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
        let (x, c) = (s.x.samples(), xc.samples());
        for j in 0..x.ncols() {
            let scale = x.column(j).amax().max(f64::MIN_POSITIVE);
            let d = (col_mean(c, j) - col_mean(x, j)).abs() / scale;
            if d >= 1e-10 {
                return Err(format!("case {k} channel {j}: relative mean shift {d:e}"));
            }
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Largest |<x_clean_j - mean, bad_i>| / (|x_clean_j - mean| |bad_i|).
pub fn residual_orthogonality(cases: u64) -> Check {
    let mut worst: f64 = 0.0;
    let mut any = false;
    for k in 0..cases {
        let (s, cfg) = case(k);
        let tr = run_pipeline(s.x.samples(), s.y.samples(), &cfg).map_err(|e| e.to_string())?;
        let (resid, _) = icanclean::mean_center(&tr.x_clean).map_err(|e| e.to_string())?;
        for i in 0..tr.selection.n_bad() {
            any = true;
            let b = tr.selection.bad_activity.column(i);
            for j in 0..resid.ncols() {
                let r = resid.column(j);
                let denom = (r.norm() * b.norm()).max(f64::MIN_POSITIVE);
                let d = r.dot(&b).abs() / denom;
                if d >= 1e-8 {
                    return Err(format!("case {k} component {i} channel {j}: cosine {d:e}"));
                }
                worst = worst.max(d);
            }
        }
    }
    if !any {
        return Err("no case selected any component".into());
    }
    Ok(worst)
}

/// Largest relative variance increase (negative means strict decrease).
pub fn variance_monotonicity(cases: u64) -> Check {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..cases {
        let (s, cfg) = case(k);
        let (xc, _) = clean_batch(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
        for j in 0..s.x.n_channels() {
            let before = col_var(s.x.samples(), j);
            let after = col_var(xc.samples(), j);
            let d = (after - before) / before;
            if d > 1e-10 {
                return Err(format!("case {k} channel {j}: variance grew by {d:e}"));
            }
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Threshold just above the largest r^2 must leave x bit-identical.
pub fn empty_selection_identity(cases: u64) -> Check {
    for k in 0..cases {
        let (s, _) = case(k);
        let cca = canoncorr(s.x.samples(), s.y.samples()).map_err(|e| e.to_string())?;
        let top = cca.correlations[0] * cca.correlations[0];
        let thresh = (top + (1.0 - top) / 2.0).min(1.0);
        if thresh <= top {
            return Err(format!("case {k}: top r^2 is {top}, no threshold above it"));
        }
        let (xc, rep) = clean_batch(&s.x, &s.y, &CleanConfig::new(thresh)).map_err(|e| e.to_string())?;
        if !rep.bad_indices.is_empty() || xc.samples() != s.x.samples() {
            return Err(format!("case {k}: output differs from input"));
        }
    }
    Ok(0.0)
}

/// Largest second-pass r^2 minus threshold (must stay negative).
pub fn idempotence(cases: u64) -> Check {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..cases {
        let (s, cfg) = case(k);
        let (xc, _) = clean_batch(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
        let (_, rep) = clean_batch(&xc, &s.y, &cfg).map_err(|e| e.to_string())?;
        let top = rep.correlations.first().copied().unwrap_or(0.0);
        let margin = top * top - cfg.thresh;
        if !rep.bad_indices.is_empty() || margin >= 0.0 {
            return Err(format!(
                "case {k}: second pass selected {:?} (top r^2 {})",
                rep.bad_indices,
                top * top
            ));
        }
        worst = worst.max(margin);
    }
    Ok(worst)
}

pub fn filter_batch_equivalence(cases: u64) -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (s, cfg) = case(k);
        let (xc, _) = clean_batch(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
        let f = fit_spatial_filter(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
        let xf = apply_spatial_filter(&s.x, &f).map_err(|e| e.to_string())?;
        let d = max_abs_diff(xc.samples(), xf.samples());
        if d >= 1e-10 {
            return Err(format!("case {k}: deviation {d:e}"));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Scaling x by c > 0 scales x_clean by c when the selection is unchanged.
pub fn linearity(cases: u64) -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (s, cfg) = case(k);
        let c = 0.5 + k as f64 * 0.75;
        let scaled = s.x.with_samples(s.x.samples() * c).unwrap();
        let (a, ra) = clean_batch(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
        let (b, rb) = clean_batch(&scaled, &s.y, &cfg).map_err(|e| e.to_string())?;
        if ra.bad_indices != rb.bad_indices {
            return Err(format!("case {k}: selection changed under scaling"));
        }
        let scale = s.x.samples().amax() * c;
        let d = max_abs_diff(&(a.samples() * c), b.samples()) / scale;
        if d >= 1e-10 {
            return Err(format!("case {k}: relative deviation {d:e}"));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

pub fn sliding_full_window_equals_batch(cases: u64) -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (s, cfg) = case(k);
        let t = s.x.n_samples();
        let (b, _) = clean_batch(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
        let (w, rep) = clean_sliding(&s.x, &s.y, &cfg.with_window(t, Some(t))).map_err(|e| e.to_string())?;
        if rep.windows_processed != 1 {
            return Err(format!("case {k}: {} windows", rep.windows_processed));
        }
        let d = max_abs_diff(b.samples(), w.samples());
        if d >= 1e-10 {
            return Err(format!("case {k}: deviation {d:e}"));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

pub fn transient_params() -> ScenarioParams {
    ScenarioParams {
        n_samples: 8000,
        n_data: 16,
        n_noise: 4,
        n_signal_sources: 2,
        n_noise_sources: 4,
        ref_sensor_noise_level: 0.1,
        transient_onset: Some(4000),
        seed: 42,
        ..ScenarioParams::default()
    }
}

/// Windows before the noise onset select nothing at thresh 0.7; windows
/// after it select at least one component. Returns the smallest bad count
/// in the noisy half.
pub fn transient_windows() -> Check {
    let p = transient_params();
    let onset = p.transient_onset.unwrap();
    let s = generate_scenario(&p).map_err(|e| e.to_string())?;
    let cfg = CleanConfig::new(0.7).with_window(1000, None);
    let (_, rep) = clean_sliding(&s.x, &s.y, &cfg).map_err(|e| e.to_string())?;
    let mut min_noisy = usize::MAX;
    for w in &rep.windows {
        let n_bad = w.bad_indices.len();
        if w.start + w.len <= onset && n_bad != 0 {
            return Err(format!("clean window at {} selected {n_bad}", w.start));
        }
        if w.start >= onset {
            if n_bad == 0 {
                return Err(format!("noisy window at {} selected none", w.start));
            }
            min_noisy = min_noisy.min(n_bad);
        }
    }
    Ok(min_noisy as f64)
}

/// Noise-free identity references: `y` equals the noise sources.
pub fn identity_ref_params(seed: u64) -> ScenarioParams {
    ScenarioParams {
        n_samples: 4000,
        n_data: 16,
        n_noise: 2,
        n_signal_sources: 4,
        n_noise_sources: 2,
        ref_mixing: RefMixing::Identity,
        seed,
        ..ScenarioParams::default()
    }
}

pub fn recording_of(m: &DMatrix<f64>, like: &Recording) -> Recording {
    like.with_samples(m.clone()).unwrap()
}
