//! Bootstrap critical values: the least-favorable (conservative) scheme and
//! the two-step Bonferroni scheme with an estimated slackness shift.
//!
//! All three bootstrap statistics at a parameter point are computed from one
//! set of resamples, and the same resamples are used at every grid point.
//! Replicate `b` draws its indices from the substream
//! `(plan.seed, Domain::Resample, b)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{
    check_len, dot, floored_ratio, moment_rows, positive_part, summarize_rows, MomentModel, MomentSummary,
    PreparedMoments, SIGMA_FLOOR,
};
use crate::param::ParameterPoint;
use crate::rng::{substream, Domain};

/// How a level-q quantile is read off B sorted draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRule {
    /// `t_(k)` with `k = clamp(⌈q·(B+1)⌉, 1, B)`.
    #[default]
    OrderStatistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub replications: usize,
    pub alpha: f64,
    pub alpha1: f64,
    pub kappa: f64,
    pub seed: u64,
    #[serde(default)]
    pub quantile: QuantileRule,
}

impl Default for BootstrapPlan {
    fn default() -> Self {
        Self { replications: 199, alpha: 0.05, alpha1: 0.005, kappa: 0.02, seed: 1, quantile: QuantileRule::OrderStatistic }
    }
}

impl BootstrapPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InvalidPlan("replication count must be at least 1".into()));
        }
        if !(self.alpha1 > 0.0 && self.alpha1 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidPlan(format!(
                "levels must satisfy 0 < alpha1 < alpha < 1, got alpha={} alpha1={}",
                self.alpha, self.alpha1
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidPlan(format!("kappa must be finite and non-negative, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Empirical quantile of `draws` at `level`; reorders `draws`.
pub fn quantile(draws: &mut [f64], level: f64, rule: QuantileRule) -> f64 {
    assert!(!draws.is_empty(), "quantile of an empty sample");
    let b = draws.len();
    let k = match rule {
        // The small offset keeps products such as 0.95·1000 from rounding up a rank.
        QuantileRule::OrderStatistic => ((level * (b + 1) as f64 - 1e-9).ceil() as i64).clamp(1, b as i64) as usize,
    };
    let (_, v, _) = draws.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

/// B resamples of `{0, …, n−1}` with replacement (0-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleSet {
    pub n: usize,
    pub indices: Vec<Vec<u32>>,
}

impl ResampleSet {
    pub fn replications(&self) -> usize {
        self.indices.len()
    }
}

pub fn resample_indices(n: usize, replications: usize, seed: u64) -> ResampleSet {
    assert!(n >= 1, "cannot resample an empty dataset");
    let indices = (0..replications)
        .map(|b| {
            let mut rng = substream(seed, Domain::Resample, b as u64);
            (0..n).map(|_| rng.gen_range(0..n as u32)).collect()
        })
        .collect();
    ResampleSet { n, indices }
}

/// Resampled moment means for a prepared dataset.
pub struct BootstrapMoments<'a, 'b, M: MomentModel> {
    prepared: &'b PreparedMoments<'a, M>,
    resamples: &'b ResampleSet,
    /// For affine models: `B × p × (1+d)` differences between resampled and
    /// original coefficient means.
    affine_shift: Option<Vec<f64>>,
}

impl<'a, 'b, M: MomentModel> BootstrapMoments<'a, 'b, M> {
    pub fn new(prepared: &'b PreparedMoments<'a, M>, resamples: &'b ResampleSet) -> Result<Self> {
        if resamples.n != prepared.n() {
            return Err(Error::InvalidPlan(format!(
                "resamples were drawn for n={} but the dataset has n={}",
                resamples.n,
                prepared.n()
            )));
        }
        let affine_shift = prepared.affine.as_ref().map(|table| {
            let stride = table.p * table.width;
            let n = prepared.n() as f64;
            let mut out = vec![0.0; resamples.replications() * stride];
            for (idx, block) in resamples.indices.iter().zip(out.chunks_exact_mut(stride)) {
                for &i in idx {
                    let row = &table.rows[i as usize * stride..(i as usize + 1) * stride];
                    for (acc, v) in block.iter_mut().zip(row) {
                        *acc += v;
                    }
                }
                for (acc, m) in block.iter_mut().zip(&table.mean) {
                    *acc = *acc / n - m;
                }
            }
            out
        });
        Ok(Self { prepared, resamples, affine_shift })
    }

    pub fn replications(&self) -> usize {
        self.resamples.replications()
    }

    pub fn prepared(&self) -> &PreparedMoments<'a, M> {
        self.prepared
    }

    /// Original-sample summary and the `B × p` table of `m̄*_j − m̄_j` at θ.
    pub fn evaluate(&self, theta: &ParameterPoint) -> (MomentSummary, Vec<f64>) {
        let p = self.prepared.num_moments();
        let bcount = self.replications();
        let mut dev = vec![0.0; bcount * p];
        match (&self.affine_shift, &self.prepared.affine) {
            (Some(shift), Some(table)) => {
                let summary = self.prepared.summary(theta);
                let x = crate::moments::AffineTable::design(theta);
                let w = table.width;
                for (b, out) in dev.chunks_exact_mut(p).enumerate() {
                    let block = &shift[b * p * w..(b + 1) * p * w];
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = dot(&block[j * w..(j + 1) * w], &x);
                    }
                }
                (summary, dev)
            }
            _ => {
                let rows = moment_rows(self.prepared.data, self.prepared.model, theta);
                let summary = summarize_rows(&rows, self.prepared.n(), p);
                let n = self.prepared.n() as f64;
                for (idx, out) in self.resamples.indices.iter().zip(dev.chunks_exact_mut(p)) {
                    for &i in idx {
                        let row = &rows[i as usize * p..(i as usize + 1) * p];
                        for (o, v) in out.iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                    for (o, m) in out.iter_mut().zip(&summary.mbar) {
                        *o = *o / n - m;
                    }
                }
                (summary, dev)
            }
        }
    }
}

/// `(m̄*_j − m̄_j + shift_j)/σ̂_j` with σ̂ from the original sample. A degenerate
/// moment has no resampling variation, so its deviation is taken as exactly 0
/// and an unshifted degenerate moment contributes 0.
#[inline]
fn normalized_deviation(dev: f64, shift: f64, sigma: f64) -> f64 {
    if sigma > SIGMA_FLOOR {
        (dev + shift) / sigma
    } else if shift == 0.0 {
        0.0
    } else {
        floored_ratio(shift, sigma)
    }
}

/// `√n Σ_j [(m̄*_j − m̄_j + shift_j)/σ̂_j]_+` for every replicate.
pub fn shifted_draws(summary: &MomentSummary, deviations: &[f64], shift: &[f64]) -> Vec<f64> {
    let p = summary.num_moments();
    let rn = summary.sqrt_n();
    deviations
        .chunks_exact(p)
        .map(|row| {
            let q: f64 = (0..p)
                .map(|j| positive_part(normalized_deviation(row[j], shift[j], summary.sigma_hat[j])))
                .sum();
            rn * q
        })
        .collect()
}

/// Draws of `T̂* = √n Σ_j [(m̄*_j − m̄_j)/σ̂_j]_+`.
pub fn conservative_draws(summary: &MomentSummary, deviations: &[f64]) -> Vec<f64> {
    shifted_draws(summary, deviations, &vec![0.0; summary.num_moments()])
}

/// Draws of `min_j √n (m̄*_j − m̄_j)/σ̂_j`.
pub fn min_draws(summary: &MomentSummary, deviations: &[f64]) -> Vec<f64> {
    let p = summary.num_moments();
    let rn = summary.sqrt_n();
    deviations
        .chunks_exact(p)
        .map(|row| {
            let m = (0..p)
                .map(|j| normalized_deviation(row[j], 0.0, summary.sigma_hat[j]))
                .fold(f64::INFINITY, f64::min);
            rn * m
        })
        .collect()
}

/// `λ̂_j = min{m̄_j − σ̂_j κ̂ / √n, 0}`.
pub fn lambda_hat(summary: &MomentSummary, kappa_hat: f64, n: usize) -> Vec<f64> {
    let rn = (n as f64).sqrt();
    summary
        .mbar
        .iter()
        .zip(&summary.sigma_hat)
        .map(|(&m, &s)| (m - s * kappa_hat / rn).min(0.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    /// `ĉ_{1−α}`.
    pub c_conservative: f64,
    /// `c̃_{1−α+α₁}`.
    pub c_bonferroni: f64,
    /// `κ̂_{α₁}`.
    pub kappa_hat: f64,
    /// `λ̂_{j,α₁}`.
    pub lambda_hat: Vec<f64>,
}

/// Both critical values from one table of bootstrap deviations.
pub fn critical_values(summary: &MomentSummary, deviations: &[f64], plan: &BootstrapPlan) -> CriticalValues {
    let mut cons = conservative_draws(summary, deviations);
    let c_conservative = quantile(&mut cons, 1.0 - plan.alpha, plan.quantile);
    let mut mins = min_draws(summary, deviations);
    let kappa_hat = quantile(&mut mins, plan.alpha1, plan.quantile);
    let lambda = lambda_hat(summary, kappa_hat, summary.n);
    let mut shifted = shifted_draws(summary, deviations, &lambda);
    let c_bonferroni = quantile(&mut shifted, 1.0 - plan.alpha + plan.alpha1, plan.quantile);
    CriticalValues { c_conservative, c_bonferroni, kappa_hat, lambda_hat: lambda }
}

/// Level `1−α+α₁` quantile of `√n Σ_j [(m̄*_j − m̄_j + m_j)/σ̂_j]_+` with the
/// population moment means `m_j` in place of `λ̂_j`; the benchmark the
/// Bonferroni critical value is compared against in simulations.
pub fn comparison_critical_value(
    summary: &MomentSummary,
    deviations: &[f64],
    population_means: &[f64],
    plan: &BootstrapPlan,
) -> f64 {
    let mut draws = shifted_draws(summary, deviations, population_means);
    quantile(&mut draws, 1.0 - plan.alpha + plan.alpha1, plan.quantile)
}

/// `√n Σ_j [(m̄*_j − m̄_j)/σ̂_j]_+` for a single resample, σ̂ from the original sample.
pub fn conservative_statistic<M: MomentModel>(
    data: &[M::Observation],
    resample: &[u32],
    model: &M,
    theta: &ParameterPoint,
) -> Result<f64> {
    check_len(data.len())?;
    if resample.len() != data.len() {
        return Err(Error::InvalidPlan("resample length must equal the sample size".into()));
    }
    let p = model.num_moments();
    let rows = moment_rows(data, model, theta);
    let summary = summarize_rows(&rows, data.len(), p);
    let mut dev = vec![0.0; p];
    for &i in resample {
        for (d, v) in dev.iter_mut().zip(&rows[i as usize * p..(i as usize + 1) * p]) {
            *d += v;
        }
    }
    for (d, m) in dev.iter_mut().zip(&summary.mbar) {
        *d = *d / data.len() as f64 - m;
    }
    Ok(conservative_draws(&summary, &dev)[0])
}

fn single_point<M: MomentModel>(
    data: &[M::Observation],
    model: &M,
    theta: &ParameterPoint,
    plan: &BootstrapPlan,
) -> Result<(MomentSummary, Vec<f64>)> {
    plan.validate()?;
    let prepared = PreparedMoments::new(model, data)?;
    let resamples = resample_indices(data.len(), plan.replications, plan.seed);
    let boot = BootstrapMoments::new(&prepared, &resamples)?;
    Ok(boot.evaluate(theta))
}

/// `ĉ_{1−α}(θ)`.
pub fn conservative_critical_value<M: MomentModel>(
    data: &[M::Observation],
    model: &M,
    theta: &ParameterPoint,
    plan: &BootstrapPlan,
) -> Result<f64> {
    let (summary, dev) = single_point(data, model, theta, plan)?;
    let mut draws = conservative_draws(&summary, &dev);
    Ok(quantile(&mut draws, 1.0 - plan.alpha, plan.quantile))
}

/// `κ̂_{α₁}(θ)`.
pub fn kappa_hat<M: MomentModel>(
    data: &[M::Observation],
    model: &M,
    theta: &ParameterPoint,
    plan: &BootstrapPlan,
) -> Result<f64> {
    let (summary, dev) = single_point(data, model, theta, plan)?;
    let mut draws = min_draws(&summary, &dev);
    Ok(quantile(&mut draws, plan.alpha1, plan.quantile))
}

/// `c̃_{1−α+α₁}(θ)`.
pub fn bonferroni_critical_value<M: MomentModel>(
    data: &[M::Observation],
    model: &M,
    theta: &ParameterPoint,
    plan: &BootstrapPlan,
) -> Result<f64> {
    let (summary, dev) = single_point(data, model, theta, plan)?;
    Ok(critical_values(&summary, &dev, plan).c_bonferroni)
}
