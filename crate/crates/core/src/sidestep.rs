//! Synthetic `(Λ₀, Λ₁)` eigenvalue ensembles and `Ein`/`Eout` estimates.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tracelab::{loglog_slope, trial_seed};

pub type Sampler = Arc<dyn Fn(usize, u64) -> Vec<Complex<f64>> + Send + Sync>;

/// A random `n`-element eigenvalue multiset for each `n`, drawn by `sampler(n, seed)`.
#[derive(Clone)]
pub struct MatrixModel {
    pub lambda0: f64,
    pub lambda1: f64,
    pub n_grid: Vec<usize>,
    pub sampler: Sampler,
}

impl fmt::Debug for MatrixModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixModel")
            .field("lambda0", &self.lambda0)
            .field("lambda1", &self.lambda1)
            .field("n_grid", &self.n_grid)
            .finish_non_exhaustive()
    }
}

impl MatrixModel {
    pub fn new(lambda0: f64, lambda1: f64, n_grid: Vec<usize>, sampler: Sampler) -> Result<MatrixModel> {
        if !(0.0 < lambda0 && lambda0 < lambda1) {
            return Err(Error::InvalidArgument(format!("need 0 < lambda0 < lambda1, got {lambda0}, {lambda1}")));
        }
        Ok(MatrixModel { lambda0, lambda1, n_grid, sampler })
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<Complex<f64>> {
        (self.sampler)(n, seed)
    }

    /// Whether every value lies in `B_{Λ₀}(0) ∪ [-Λ₁, Λ₁]`.
    pub fn admissible(&self, values: &[Complex<f64>]) -> bool {
        values.iter().all(|z| {
            z.norm() <= self.lambda0 + 1e-12 || (z.im.abs() <= 1e-12 && z.re.abs() <= self.lambda1 + 1e-12)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionQuery {
    pub discs: Vec<(Complex<f64>, f64)>,
    pub intervals: Vec<(f64, f64)>,
}

impl RegionQuery {
    pub fn new(discs: Vec<(Complex<f64>, f64)>, intervals: Vec<(f64, f64)>) -> Result<RegionQuery> {
        if discs.iter().any(|d| !(d.1 > 0.0)) {
            return Err(Error::InvalidArgument("disc radii must be positive".into()));
        }
        if intervals.iter().any(|i| i.0 > i.1) {
            return Err(Error::InvalidArgument("interval endpoints out of order".into()));
        }
        Ok(RegionQuery { discs, intervals })
    }

    pub fn whole_plane() -> RegionQuery {
        RegionQuery { discs: vec![(Complex::new(0.0, 0.0), f64::INFINITY)], intervals: vec![] }
    }

    pub fn contains(&self, z: Complex<f64>) -> bool {
        self.discs.iter().any(|&(c, r)| (z - c).norm() <= r)
            || self.intervals.iter().any(|&(a, b)| z.im == 0.0 && a <= z.re && z.re <= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InOut {
    pub e_in: f64,
    pub e_out: f64,
    pub stderr: f64,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Monte-Carlo `Ein` and `Eout` of a region; `stderr` is that of the inside count.
pub fn e_in_out(model: &MatrixModel, n: usize, region: &RegionQuery, trials: usize, seed: u64) -> Result<InOut> {
    if !model.n_grid.contains(&n) {
        return Err(Error::InvalidArgument(format!("n = {n} is not in the model grid")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let inside: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let vals = model.sample(n, trial_seed(seed, n, t));
            debug_assert_eq!(vals.len(), n);
            vals.iter().filter(|&&z| region.contains(z)).count() as f64
        })
        .collect();
    let (e_in, stderr) = mean_stderr(&inside);
    Ok(InOut { e_in, e_out: n as f64 - e_in, stderr })
}

/// Monte-Carlo mean and standard error of `Trace(M^k) = Σ λ^k` (real part), for `k = 1..=kmax`.
pub fn ensemble_traces(model: &MatrixModel, n: usize, kmax: usize, trials: usize, seed: u64) -> Vec<(usize, f64, f64)> {
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let vals = model.sample(n, trial_seed(seed, n, t));
            (1..=kmax).map(|k| vals.iter().map(|z| z.powu(k as u32).re).sum()).collect()
        })
        .collect();
    (1..=kmax)
        .map(|k| {
            let col: Vec<f64> = per_trial.iter().map(|v| v[k - 1]).collect();
            let (m, s) = mean_stderr(&col);
            (k, m, s)
        })
        .collect()
}

/// Each of the `n` eigenvalues is 2 with probability `1 - n^{-3}`, else uniform on `[4, 5]`.
pub fn typical_side_ensemble(n_grid: Vec<usize>) -> MatrixModel {
    let sampler: Sampler = Arc::new(|n: usize, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (n as f64).powi(-3);
        (0..n)
            .map(|_| {
                if rng.gen::<f64>() < p {
                    Complex::new(rng.gen_range(4.0..=5.0), 0.0)
                } else {
                    Complex::new(2.0, 0.0)
                }
            })
            .collect()
    });
    MatrixModel { lambda0: 3.0, lambda1: 5.0, n_grid, sampler }
}

/// `E[Trace(M^k)] = 2^k n + n^{-2}(c_k - 2^k)` with `c_k = (5^{k+1} - 4^{k+1})/(k+1)`.
pub fn typical_side_expected_trace(n: usize, k: usize) -> f64 {
    let ck = (5f64.powi(k as i32 + 1) - 4f64.powi(k as i32 + 1)) / (k + 1) as f64;
    let two = 2f64.powi(k as i32);
    two * n as f64 + (ck - two) / (n as f64).powi(2)
}

/// Planted ensemble: each eigenvalue equals `ℓ` with probability `C_ℓ n^{-j-1}`,
/// lies uniformly on `(Λ₀, Λ₁]` away from the bases with probability `n^{-j-2}`,
/// and is otherwise uniform in the disc of radius `Λ₀`.
pub fn planted_model(lambda0: f64, lambda1: f64, j: usize, bases: Vec<(f64, f64)>, n_grid: Vec<usize>) -> Result<MatrixModel> {
    if bases.iter().any(|&(l, c)| !(l > lambda0 && l <= lambda1) || c < 0.0) {
        return Err(Error::InvalidArgument("planted bases must lie in (lambda0, lambda1] with C >= 0".into()));
    }
    let for_sampler = bases.clone();
    let sampler: Sampler = Arc::new(move |n: usize, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nf = n as f64;
        let planted: Vec<(f64, f64)> = for_sampler.iter().map(|&(l, c)| (l, c * nf.powi(-(j as i32) - 1))).collect();
        let stray = nf.powi(-(j as i32) - 2);
        (0..n)
            .map(|_| {
                let mut u: f64 = rng.gen();
                for &(l, p) in &planted {
                    if u < p {
                        return Complex::new(l, 0.0);
                    }
                    u -= p;
                }
                if u < stray {
                    loop {
                        let x = rng.gen_range(lambda0..=lambda1);
                        if for_sampler.iter().all(|&(l, _)| (x - l).abs() > 0.5 * nf.powf(-0.5)) {
                            return Complex::new(x, 0.0);
                        }
                    }
                }
                let r = lambda0 * rng.gen::<f64>().sqrt();
                let a = 2.0 * PI * rng.gen::<f64>();
                Complex::from_polar(r, a)
            })
            .collect()
    });
    MatrixModel::new(lambda0, lambda1, n_grid, sampler)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidestepRow {
    pub n: usize,
    /// `Ein(B_{n^{-θ}}(ℓ))` for each base, with standard errors.
    pub e_in: Vec<(f64, f64)>,
    /// `Eout` of `B_{Λ₀+δ}(0) ∪ ⋃ B_{n^{-θ}}(ℓ)`.
    pub e_out: f64,
    pub e_out_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidestepReport {
    pub j: usize,
    pub rows: Vec<SidestepRow>,
    /// Fitted decay exponent (minus the log-log slope) of `Ein` per base.
    pub exponents: Vec<Option<f64>>,
    /// Fitted decay exponent of `Eout`, when it is ever nonzero.
    pub e_out_exponent: Option<f64>,
    pub slopes_ok: bool,
    pub e_out_ok: bool,
}

/// Margin `δ` added to `Λ₀` in the `Eout` region.
pub const DISC_MARGIN: f64 = 1e-9;

/// Estimates `Ein` near each planted base across the model's grid and compares the decay with `n^{-j}`.
pub fn sidestep_demo(
    model: &MatrixModel,
    j: usize,
    bases: &[(Complex<f64>, f64)],
    theta: f64,
    trials: usize,
    seed: u64,
) -> Result<SidestepReport> {
    let nmin = *model.n_grid.iter().min().ok_or_else(|| Error::InvalidArgument("empty n grid".into()))?;
    let needed = (100_000 + nmin - 1) / nmin;
    if trials < needed {
        return Err(Error::InsufficientTrials { needed, got: trials });
    }
    let mut rows = Vec::new();
    for &n in &model.n_grid {
        let rad = (n as f64).powf(-theta);
        let per_trial: Vec<(Vec<f64>, f64)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let vals = model.sample(n, trial_seed(seed, n, t));
                let near: Vec<f64> =
                    bases.iter().map(|&(l, _)| vals.iter().filter(|z| (**z - l).norm() <= rad).count() as f64).collect();
                let out = vals
                    .iter()
                    .filter(|z| z.norm() > model.lambda0 + DISC_MARGIN && bases.iter().all(|&(l, _)| (**z - l).norm() > rad))
                    .count() as f64;
                (near, out)
            })
            .collect();
        let e_in = (0..bases.len())
            .map(|b| mean_stderr(&per_trial.iter().map(|p| p.0[b]).collect::<Vec<_>>()))
            .collect();
        let (e_out, e_out_stderr) = mean_stderr(&per_trial.iter().map(|p| p.1).collect::<Vec<_>>());
        rows.push(SidestepRow { n, e_in, e_out, e_out_stderr });
    }
    let exponents: Vec<Option<f64>> = (0..bases.len())
        .map(|b| loglog_slope(&rows.iter().map(|r| (r.n as f64, r.e_in[b].0)).collect::<Vec<_>>()).map(|s| -s))
        .collect();
    let e_out_exponent = loglog_slope(&rows.iter().map(|r| (r.n as f64, r.e_out)).collect::<Vec<_>>()).map(|s| -s);
    let slopes_ok = exponents.iter().all(|e| e.map_or(false, |e| (e - j as f64).abs() <= 0.5));
    let e_out_ok = match e_out_exponent {
        Some(e) => e > j as f64,
        None => rows.iter().filter(|r| r.e_out > 0.0).count() <= 1,
    };
    Ok(SidestepReport { j, rows, exponents, e_out_exponent, slopes_ok, e_out_ok })
}
