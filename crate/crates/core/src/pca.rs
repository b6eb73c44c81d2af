//! PCA and singular spectrum analysis: time-series preprocessing, Hankel
//! trajectories, antidiagonal reconstruction, random perturbation models and
//! a-priori subspace perturbation bounds.

use std::io::BufRead;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::operators::{DenseOp, HankelTrajectoryOp, LinearOperator, RankOnePerturbationOp, SharedOp};
use crate::rng::{gaussian_matrix, gaussian_vector, rng_from_seed, standard_normal};

/// Means of `window` consecutive samples, advancing by `step`.
pub fn moving_average(values: &[f64], window: usize, step: usize) -> Result<Vec<f64>> {
    if window == 0 || step == 0 {
        return Err(Error::InvalidArgument("window and step must be positive".into()));
    }
    if window > values.len() {
        return Err(Error::WindowTooLarge { window, len: values.len() });
    }
    let count = (values.len() - window) / step + 1;
    Ok((0..count)
        .map(|k| values[k * step..k * step + window].iter().sum::<f64>() / window as f64)
        .collect())
}

/// Scaled trajectory operator of a whole series.
pub fn build_trajectory(values: &[f64], window: usize) -> Result<HankelTrajectoryOp> {
    HankelTrajectoryOp::from_series(values.to_vec(), window)
}

/// Rebuilds a series of length `n` from the rank-`r` factorization
/// `F = sum_i sigma_i u_i v_i^T` of a scaled trajectory matrix by averaging
/// its antidiagonals and undoing the `1/sqrt(n)` scaling.
pub fn reconstruct(left: &DenseMatrix, sigmas: &[f64], right: &DenseMatrix, n: usize, window: usize) -> Result<Vec<f64>> {
    let lags = n.checked_sub(window).map(|d| d + 1).unwrap_or(0);
    if window == 0 || lags == 0 || left.nrows() != window || right.nrows() != lags {
        return Err(Error::DimensionMismatch(format!(
            "factors of shape {}x{} and {}x{} for n = {n}, window = {window}",
            left.nrows(),
            left.ncols(),
            right.nrows(),
            right.ncols()
        )));
    }
    if left.ncols() != sigmas.len() || right.ncols() != sigmas.len() {
        return Err(Error::DimensionMismatch("factor ranks disagree with the number of singular values".into()));
    }
    let mut sums = vec![0.0; n];
    for (k, s) in sigmas.iter().enumerate() {
        let (u, v) = (left.col(k), right.col(k));
        for (i, ui) in u.iter().enumerate() {
            let c = s * ui;
            for (j, vj) in v.iter().enumerate() {
                sums[i + j] += c * vj;
            }
        }
    }
    let scale = (n as f64).sqrt();
    Ok(sums
        .iter()
        .enumerate()
        .map(|(t, total)| {
            let lo = t.saturating_sub(lags - 1);
            let hi = t.min(window - 1);
            total / (hi - lo + 1) as f64 * scale
        })
        .collect())
}

/// Right singular vectors `v_i = C^T u_i / sigma_i` and singular values from
/// the left vectors and eigenvalues of `C C^T`.
pub fn right_factors(op: &HankelTrajectoryOp, left: &DenseMatrix, gram_values: &[f64]) -> Result<(Vec<f64>, DenseMatrix)> {
    if left.nrows() != op.nrows() || left.ncols() != gram_values.len() {
        return Err(Error::DimensionMismatch("left factors do not match the trajectory".into()));
    }
    let sigmas: Vec<f64> = gram_values.iter().map(|l| l.max(0.0).sqrt()).collect();
    let mut right = DenseMatrix::zeros(op.ncols(), left.ncols());
    for (k, s) in sigmas.iter().enumerate() {
        op.apply_transpose_into(left.col(k), right.col_mut(k));
        if *s > 0.0 {
            for x in right.col_mut(k) {
                *x /= s;
            }
        }
    }
    Ok((sigmas, right))
}

/// Fraction of spectral energy captured by the leading singular values:
/// `||Sigma_{1:r}||_F / ||Sigma||_F`.
pub fn energy_ratio(leading_sigma_sq: &[f64], total_frobenius_sq: f64) -> f64 {
    if total_frobenius_sq <= 0.0 {
        return 1.0;
    }
    (leading_sigma_sq.iter().sum::<f64>() / total_frobenius_sq).clamp(0.0, 1.0).sqrt()
}

/// Random perturbation laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationModel {
    /// Dense `n x n` matrix with i.i.d. `N(0, 1/n^2)` entries, not symmetrized.
    DenseGaussian,
    /// `s z z^T` with `z_i ~ N(0, 1/n)` and a fair random sign `s`.
    RankOneSigned,
}

/// Draws one perturbation of size `n`.
pub fn sample_perturbation(model: PerturbationModel, n: usize, seed: u64) -> Result<SharedOp> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let sd = 1.0 / n as f64;
    Ok(match model {
        PerturbationModel::DenseGaussian => Arc::new(DenseOp::new(gaussian_matrix(&mut rng, n, n).scaled(sd))),
        PerturbationModel::RankOneSigned => {
            let (sign, z) = draw_rank_one(&mut rng, n);
            Arc::new(RankOnePerturbationOp::new(sign, z)?)
        }
    })
}

/// Sign and vector of a [`PerturbationModel::RankOneSigned`] draw, for callers
/// that fold the update into a low-rank operator themselves.
pub fn sample_rank_one(n: usize, seed: u64) -> (f64, Vec<f64>) {
    draw_rank_one(&mut rng_from_seed(seed), n)
}

fn draw_rank_one(rng: &mut crate::rng::Rng, n: usize) -> (f64, Vec<f64>) {
    let sd = (1.0 / n as f64).sqrt();
    let z: Vec<f64> = gaussian_vector(rng, n).into_iter().map(|x| x * sd).collect();
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    (sign, z)
}

/// `(E + E^T) / 2` of a dense Gaussian draw, for perturbing symmetric matrices.
pub fn sample_symmetric_gaussian(n: usize, seed: u64) -> Result<SharedOp> {
    let mut rng = rng_from_seed(seed);
    let g = gaussian_matrix(&mut rng, n, n).scaled(1.0 / n as f64);
    let sym = g.add(&g.transpose())?.scaled(0.5);
    Ok(Arc::new(DenseOp::symmetric(sym)?))
}

/// High-probability bound on the singular subspace distance after a dense
/// Gaussian perturbation:
/// `(2/sqrt(n) + sqrt(r)/n) / (sigma_r - sigma_{r+1} - (C_A + ln n)/n)`.
pub fn wedin_gaussian_bound(sigma_r: f64, sigma_r1: f64, n: usize, r: usize, c_a: f64) -> Result<f64> {
    let nf = n as f64;
    let denom = sigma_r - sigma_r1 - (c_a + nf.ln()) / nf;
    if !(denom > 0.0) {
        return Err(Error::GapTooSmall(denom));
    }
    Ok((2.0 / nf.sqrt() + (r as f64).sqrt() / nf) / denom)
}

/// High-probability bound after a signed rank-one Gaussian perturbation of a
/// matrix with eigengap `delta_r > 2 + epsilon`:
/// `((1 + epsilon)/delta_r) (sqrt(r/n) + sqrt(2 ln n / n))`.
pub fn lowrank_gaussian_bound(delta_r: f64, n: usize, r: usize, epsilon: f64) -> Result<f64> {
    if !(delta_r > 2.0 + epsilon) {
        return Err(Error::GapTooSmall(delta_r - 2.0 - epsilon));
    }
    let nf = n as f64;
    Ok((1.0 + epsilon) / delta_r * ((r as f64 / nf).sqrt() + (2.0 * nf.ln() / nf).sqrt()))
}

/// A sum of two sinusoids plus Gaussian noise.
pub fn two_sinusoids(len: usize, periods: (f64, f64), amplitudes: (f64, f64), noise: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let tau = std::f64::consts::TAU;
    (0..len)
        .map(|t| {
            let t = t as f64;
            amplitudes.0 * (tau * t / periods.0).sin() + amplitudes.1 * (tau * t / periods.1).sin() + noise * standard_normal(&mut rng)
        })
        .collect()
}

/// A parsed time series and the number of missing samples that were filled.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedSeries {
    pub values: Vec<f64>,
    pub filled: usize,
}

/// Reads a single-column or `timestamp,value` CSV. Missing values (`?` or
/// empty) are forward-filled; a non-numeric first line is treated as a header.
pub fn parse_time_series(reader: impl BufRead) -> Result<ParsedSeries> {
    let mut values = Vec::new();
    let mut filled = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() && values.is_empty() && i > 0 {
            continue;
        }
        let field = trimmed.rsplit([',', ';']).next().unwrap_or("").trim();
        if field.is_empty() || field == "?" {
            let Some(&last) = values.last() else {
                return Err(Error::Parse { line: i + 1, message: "missing value before any observation".into() });
            };
            values.push(last);
            filled += 1;
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if i == 0 => continue,
            _ => return Err(Error::Parse { line: i + 1, message: format!("cannot parse value `{field}`") }),
        }
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument("a time series needs at least 2 values".into()));
    }
    Ok(ParsedSeries { values, filled })
}

/// Relative reconstruction error `||x - y|| / ||x||`.
pub fn relative_error(reference: &[f64], approx: &[f64]) -> f64 {
    let diff: Vec<f64> = reference.iter().zip(approx).map(|(a, b)| a - b).collect();
    (dot(&diff, &diff) / dot(reference, reference).max(f64::MIN_POSITIVE)).sqrt()
}
