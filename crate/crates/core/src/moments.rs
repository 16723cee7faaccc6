//! Sample moments, studentized objective functions and estimated sets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::param::{GridMask, ParameterGrid, ParameterPoint};

/// Standard deviations at or below this value are treated as degenerate.
pub const SIGMA_FLOOR: f64 = 1e-10;
/// Normalized value assigned to a degenerate moment whose mean is not positive.
pub const DEGENERATE_SLACK: f64 = -1e6;
/// `Q̂_κ` values at or below this count as zero when forming estimated sets.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// A finite collection of moment inequalities `E[m_j(Z; θ)] ≤ 0`.
pub trait MomentModel: Sync {
    type Observation: Sync;

    fn num_moments(&self) -> usize;

    /// Writes `m_j(obs; θ)` for every j into `out` (length `num_moments`).
    fn evaluate(&self, obs: &Self::Observation, theta: &ParameterPoint, out: &mut [f64]);

    /// Number of θ coordinates when every moment is affine in the flattened θ,
    /// `m_j = c_j0 + Σ_k c_jk θ_k`. Models that return `Some` must implement
    /// [`MomentModel::affine_coefficients`] consistently with `evaluate`.
    fn affine_dim(&self) -> Option<usize> {
        None
    }

    /// Writes the `p × (1+d)` row-major coefficient table of one observation.
    fn affine_coefficients(&self, _obs: &Self::Observation, _out: &mut [f64]) {
        unimplemented!("model does not expose affine moments")
    }
}

/// Sample mean and standard deviation (divisor n) of each moment at one θ.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mbar: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub n: usize,
}

impl MomentSummary {
    pub fn num_moments(&self) -> usize {
        self.mbar.len()
    }

    pub fn is_degenerate(&self, j: usize) -> bool {
        self.sigma_hat[j] <= SIGMA_FLOOR
    }

    /// `m̄_j / σ̂_j` with the degenerate-variance rule applied.
    pub fn normalized(&self, j: usize) -> f64 {
        floored_ratio(self.mbar[j], self.sigma_hat[j])
    }

    pub fn normalized_moments(&self) -> Vec<f64> {
        (0..self.num_moments()).map(|j| self.normalized(j)).collect()
    }

    pub fn sqrt_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }
}

/// `value / sigma` where a degenerate sigma maps non-positive values to
/// [`DEGENERATE_SLACK`] and positive values to `value / SIGMA_FLOOR`.
#[inline]
pub(crate) fn floored_ratio(value: f64, sigma: f64) -> f64 {
    if sigma > SIGMA_FLOOR {
        value / sigma
    } else if value <= 0.0 {
        DEGENERATE_SLACK
    } else {
        value / SIGMA_FLOOR
    }
}

#[inline]
pub(crate) fn positive_part(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Sample moments of `model` at `theta`.
pub fn sample_moments<M: MomentModel>(
    data: &[M::Observation],
    model: &M,
    theta: &ParameterPoint,
) -> Result<MomentSummary> {
    check_len(data.len())?;
    let p = model.num_moments();
    let rows = moment_rows(data, model, theta);
    Ok(summarize_rows(&rows, data.len(), p))
}

pub(crate) fn check_len(n: usize) -> Result<()> {
    match n {
        0 => Err(Error::EmptyDataset),
        1 => Err(Error::TooFewObservations { needed: 2, got: 1 }),
        _ => Ok(()),
    }
}

/// Row-major `n × p` table of moment values.
pub(crate) fn moment_rows<M: MomentModel>(data: &[M::Observation], model: &M, theta: &ParameterPoint) -> Vec<f64> {
    let p = model.num_moments();
    let mut rows = vec![0.0; data.len() * p];
    for (obs, out) in data.iter().zip(rows.chunks_exact_mut(p)) {
        model.evaluate(obs, theta, out);
    }
    rows
}

pub(crate) fn summarize_rows(rows: &[f64], n: usize, p: usize) -> MomentSummary {
    let mut mbar = vec![0.0; p];
    for row in rows.chunks_exact(p) {
        for (m, v) in mbar.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mbar {
        *m /= n as f64;
    }
    let mut var = vec![0.0; p];
    for row in rows.chunks_exact(p) {
        for j in 0..p {
            let d = row[j] - mbar[j];
            var[j] += d * d;
        }
    }
    let sigma_hat = var.into_iter().map(|v| (v / n as f64).sqrt()).collect();
    MomentSummary { mbar, sigma_hat, n }
}

/// `Q̂_κ = Σ_j [m̄_j/σ̂_j + κ]_+`.
pub fn q_hat(summary: &MomentSummary, kappa: f64) -> f64 {
    (0..summary.num_moments()).map(|j| positive_part(summary.normalized(j) + kappa)).sum()
}

/// `T = √n · Q̂_0`.
pub fn test_statistic(summary: &MomentSummary) -> f64 {
    summary.sqrt_n() * q_hat(summary, 0.0)
}

/// Per-observation moment coefficients, summarized once so that any θ can be
/// evaluated without another pass over the data.
#[derive(Debug, Clone)]
pub(crate) struct AffineTable {
    pub p: usize,
    pub width: usize,
    /// `n × p × width` coefficients.
    pub rows: Vec<f64>,
    /// `p × width` coefficient means.
    pub mean: Vec<f64>,
    /// `p × width × width` coefficient covariances (divisor n).
    pub cov: Vec<f64>,
}

impl AffineTable {
    fn build<M: MomentModel>(data: &[M::Observation], model: &M, d: usize) -> Self {
        let p = model.num_moments();
        let width = d + 1;
        let stride = p * width;
        let n = data.len();
        let mut rows = vec![0.0; n * stride];
        for (obs, out) in data.iter().zip(rows.chunks_exact_mut(stride)) {
            model.affine_coefficients(obs, out);
        }
        let mut mean = vec![0.0; stride];
        for row in rows.chunks_exact(stride) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut cov = vec![0.0; p * width * width];
        for row in rows.chunks_exact(stride) {
            for j in 0..p {
                let base = j * width;
                for a in 0..width {
                    let da = row[base + a] - mean[base + a];
                    if da == 0.0 {
                        continue;
                    }
                    for b in 0..width {
                        cov[(j * width + a) * width + b] += da * (row[base + b] - mean[base + b]);
                    }
                }
            }
        }
        for c in &mut cov {
            *c /= n as f64;
        }
        Self { p, width, rows, mean, cov }
    }

    pub fn design(theta: &ParameterPoint) -> Vec<f64> {
        let mut x = Vec::with_capacity(theta.dim() + 1);
        x.push(1.0);
        x.extend_from_slice(&theta.beta);
        x.extend_from_slice(&theta.gamma);
        x
    }

    fn summary(&self, theta: &ParameterPoint, n: usize) -> MomentSummary {
        let x = Self::design(theta);
        assert_eq!(x.len(), self.width, "parameter dimension does not match the model");
        let w = self.width;
        let mut mbar = vec![0.0; self.p];
        let mut sigma_hat = vec![0.0; self.p];
        for j in 0..self.p {
            mbar[j] = dot(&self.mean[j * w..(j + 1) * w], &x);
            let c = &self.cov[j * w * w..(j + 1) * w * w];
            let mut q = 0.0;
            for a in 0..w {
                q += x[a] * dot(&c[a * w..(a + 1) * w], &x);
            }
            sigma_hat[j] = q.max(0.0).sqrt();
        }
        MomentSummary { mbar, sigma_hat, n }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A dataset bound to a model, ready for repeated evaluation over a grid.
pub struct PreparedMoments<'a, M: MomentModel> {
    pub(crate) model: &'a M,
    pub(crate) data: &'a [M::Observation],
    pub(crate) affine: Option<AffineTable>,
}

impl<'a, M: MomentModel> PreparedMoments<'a, M> {
    pub fn new(model: &'a M, data: &'a [M::Observation]) -> Result<Self> {
        check_len(data.len())?;
        let affine = model.affine_dim().map(|d| AffineTable::build(data, model, d));
        Ok(Self { model, data, affine })
    }

    /// Same as [`PreparedMoments::new`] but always evaluates the model row by row.
    pub fn generic(model: &'a M, data: &'a [M::Observation]) -> Result<Self> {
        check_len(data.len())?;
        Ok(Self { model, data, affine: None })
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn num_moments(&self) -> usize {
        self.model.num_moments()
    }

    pub fn model(&self) -> &M {
        self.model
    }

    pub fn data(&self) -> &[M::Observation] {
        self.data
    }

    pub fn summary(&self, theta: &ParameterPoint) -> MomentSummary {
        match &self.affine {
            Some(table) => table.summary(theta, self.n()),
            None => summarize_rows(&moment_rows(self.data, self.model, theta), self.n(), self.num_moments()),
        }
    }

    /// Summaries at every grid point, in grid order.
    pub fn grid_summaries(&self, grid: &ParameterGrid) -> Vec<MomentSummary> {
        (0..grid.len()).into_par_iter().map(|i| self.summary(&grid.point(i))).collect()
    }
}

/// `Γ̂_κ(β)`: γ grid points at the given β index whose `Q̂_κ` is zero.
pub fn gamma_hat_kappa<M: MomentModel>(
    prepared: &PreparedMoments<'_, M>,
    grid: &ParameterGrid,
    beta_index: usize,
    kappa: f64,
) -> GridMask {
    let flags = (0..grid.gamma_len())
        .map(|g| {
            let s = prepared.summary(&grid.point(grid.index(beta_index, g)));
            q_hat(&s, kappa) <= ZERO_TOLERANCE
        })
        .collect();
    GridMask::from_flags(grid.gamma.clone(), flags).expect("flag count matches gamma lattice")
}

/// `Γ̂_κ(β)` for every β, from precomputed grid summaries.
pub fn gamma_hat_masks(summaries: &[MomentSummary], grid: &ParameterGrid, kappa: f64) -> Vec<GridMask> {
    (0..grid.beta.len())
        .map(|b| {
            let flags = (0..grid.gamma_len())
                .map(|g| q_hat(&summaries[grid.index(b, g)], kappa) <= ZERO_TOLERANCE)
                .collect();
            GridMask::from_flags(grid.gamma.clone(), flags).expect("flag count matches gamma lattice")
        })
        .collect()
}
