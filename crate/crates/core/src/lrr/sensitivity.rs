//! Brute-force check of the sensitivity characterization: the worst-case rate
//! at which the ASO moves under density perturbations of the selection rule
//! equals `√Q^LRR`, for any base rule and any perturbation radius K.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::criterion::{
    q_lrr_generic, CounterfactualContext, DiscretizedSelectionRule, RhoTable, ShockRule, StructuralModel,
};
use crate::error::{Error, Result};
use crate::param::ParameterPoint;
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub q_lrr: f64,
    pub sqrt_q_lrr: f64,
    /// Largest `‖ASO(G') − ASO(G)‖ / δ(G', G)` over the random perturbations.
    pub max_observed_ratio: f64,
    /// Ratio along the extremal direction; `None` when that direction cannot
    /// be applied to the base rule without producing a negative density.
    pub extremal_ratio: Option<f64>,
    pub perturbations: usize,
    pub feasible_perturbations: usize,
    pub scale_k: f64,
}

impl SensitivityReport {
    /// Every observed ratio is within the bound and the extremal direction,
    /// when feasible, attains it, both to relative tolerance `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        let bound = self.sqrt_q_lrr;
        let below = self.max_observed_ratio <= bound * (1.0 + tol) + 1e-15;
        let attained = match self.extremal_ratio {
            Some(r) if bound > 0.0 => ((r - bound) / bound).abs() <= tol,
            Some(r) => r <= 1e-15,
            None => true,
        };
        below && attained
    }
}

/// The perturbation problem on the finite support `states × m`.
struct Problem<'a> {
    table: RhoTable,
    mu: &'a [f64],
    base: Vec<f64>,
    base_aso: Vec<f64>,
}

impl Problem<'_> {
    fn norm(&self, h: &[f64]) -> f64 {
        let m = self.table.m;
        let mut acc = 0.0;
        for s in 0..self.table.states() {
            let fw = self.table.state_weights[s];
            for k in 0..m {
                let v = h[s * m + k];
                acc += fw * self.mu[k] * v * v;
            }
        }
        acc.sqrt()
    }

    /// Largest t with `base + t·h ≥ 0`; zero when h pushes a zero density down.
    fn max_step(&self, h: &[f64]) -> f64 {
        self.base
            .iter()
            .zip(h)
            .filter(|(_, &v)| v < 0.0)
            .map(|(&g, &v)| g / -v)
            .fold(f64::INFINITY, f64::min)
    }

    /// ASO ratio for the perturbation `t·h` scaled to radius at most K.
    fn ratio(&self, h: &[f64], k: f64, eta: &super::EtaMeasure) -> Option<f64> {
        let size = self.norm(h);
        if size == 0.0 {
            return Some(0.0);
        }
        let t = (k / size).min(self.max_step(h));
        if !(t > 0.0) {
            return None;
        }
        let m = self.table.m;
        let perturbed: Vec<f64> = self.base.iter().zip(h).map(|(g, v)| (g + t * v).max(0.0)).collect();
        let moved = self.table.aso(eta, |s| &perturbed[s * m..(s + 1) * m]);
        let diff: Vec<f64> = perturbed.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        let delta = self.norm(&diff);
        let num = moved.iter().zip(&self.base_aso).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Some(num / delta)
    }
}

/// Removes the μ-mean of `h` within each state.
fn center(h: &mut [f64], mu: &[f64]) {
    for block in h.chunks_exact_mut(mu.len()) {
        let mean: f64 = block.iter().zip(mu).map(|(a, b)| a * b).sum();
        for v in block.iter_mut() {
            *v -= mean;
        }
    }
}

/// Leading eigenvector of a small symmetric matrix by power iteration.
fn leading_eigenvector(gram: &[f64], d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![1.0];
    }
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 * 0.1).collect();
    for _ in 0..500 {
        let mut w = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                w[i] += gram[i * d + j] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return v;
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    v
}

/// Draws random feasible perturbations of `rule_g` and records the largest
/// ASO sensitivity ratio, together with the ratio along the extremal
/// direction proportional to `ρ − ∫ρ dμ`. `√Q^LRR` comes from
/// [`q_lrr_generic`] on the same discrete support.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_oracle<S: StructuralModel>(
    model: &S,
    theta: &ParameterPoint,
    rule_g: &DiscretizedSelectionRule,
    context: &CounterfactualContext<S::Covariate>,
    shocks: &ShockRule,
    scale_k: f64,
    perturbations: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    if !(scale_k > 0.0 && scale_k.is_finite()) {
        return Err(Error::InfeasibleScale(format!("perturbation radius must be positive and finite, got {scale_k}")));
    }
    let eta = &rule_g.eta;
    let table = RhoTable::build(model, theta, context, eta, shocks)?;
    rule_g.validate(table.states())?;
    let m = table.m;
    let states = table.states();
    let base: Vec<f64> = (0..states).flat_map(|s| rule_g.density(s).to_vec()).collect();
    let base_aso = table.aso(eta, |s| rule_g.density(s));
    let q = q_lrr_generic(model, theta, context, eta, shocks)?;
    let problem = Problem { table, mu: &eta.weights, base, base_aso };

    let mut max_ratio: f64 = 0.0;
    let mut feasible = 0;
    let mut h = vec![0.0; states * m];
    for r in 0..perturbations {
        let mut rng = substream(seed, Domain::Perturbation, r as u64);
        for v in h.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        center(&mut h, &eta.weights);
        if let Some(ratio) = problem.ratio(&h, scale_k, eta) {
            feasible += 1;
            max_ratio = max_ratio.max(ratio);
        }
    }
    if perturbations > 0 && feasible == 0 {
        return Err(Error::InfeasibleScale("no random perturbation keeps the selection rule non-negative".into()));
    }

    // extremal direction: Σ_c v_c Δ_c with v the leading eigenvector of the
    // Gram matrix of the centered outcome components
    let d = problem.table.dim;
    let mut dev = vec![0.0; states * m * d];
    for s in 0..states {
        let first = problem.table.at(s, 0).to_vec();
        let mut mean = first.clone();
        for k in 0..m {
            for (c, v) in problem.table.at(s, k).iter().enumerate() {
                mean[c] += eta.weights[k] * (v - first[c]);
            }
        }
        for k in 0..m {
            for (c, v) in problem.table.at(s, k).iter().enumerate() {
                dev[(s * m + k) * d + c] = v - mean[c];
            }
        }
    }
    let mut gram = vec![0.0; d * d];
    for s in 0..states {
        let fw = problem.table.state_weights[s];
        for k in 0..m {
            let row = &dev[(s * m + k) * d..(s * m + k + 1) * d];
            for a in 0..d {
                for b in 0..d {
                    gram[a * d + b] += fw * eta.weights[k] * row[a] * row[b];
                }
            }
        }
    }
    let lead = leading_eigenvector(&gram, d);
    let extremal: Vec<f64> = dev.chunks_exact(d).map(|row| row.iter().zip(&lead).map(|(a, b)| a * b).sum()).collect();
    let extremal_ratio = problem.ratio(&extremal, scale_k, eta);

    Ok(SensitivityReport {
        q_lrr: q,
        sqrt_q_lrr: q.sqrt(),
        max_observed_ratio: max_ratio,
        extremal_ratio,
        perturbations,
        feasible_perturbations: feasible,
        scale_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lrr::criterion::{Densities, EtaMeasure};
    use crate::models::entry::EntryStructure;
    use crate::models::interval::{IntervalAtom, IntervalStructure};

    struct Flat;

    impl StructuralModel for Flat {
        type Covariate = f64;
        fn outcome_dim(&self) -> usize {
            1
        }
        fn shock_dim(&self) -> usize {
            1
        }
        fn rho(&self, x: &f64, shock: &[f64], _eta: f64, _theta: &ParameterPoint, out: &mut [f64]) {
            out[0] = x + shock[0];
        }
    }

    fn interval_context() -> CounterfactualContext<IntervalAtom> {
        CounterfactualContext::uniform(
            vec![
                IntervalAtom { x1: vec![1.0, 0.0], z1: 2.3, z2: 4.5 },
                IntervalAtom { x1: vec![1.0, 1.0], z1: 2.3, z2: 4.5 },
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn insensitive_model() {
        let ctx = CounterfactualContext::uniform(vec![0.0, 1.0], 1.0).unwrap();
        let g = DiscretizedSelectionRule::uniform(EtaMeasure::uniform_bins(9).unwrap());
        let rep = sensitivity_oracle(&Flat, &ParameterPoint::scalar(0.0, 0.0), &g, &ctx, &ShockRule::QuantileMidpoints { nodes: 8 }, 0.5, 20, 1).unwrap();
        assert_eq!(rep.sqrt_q_lrr, 0.0);
        assert!(rep.max_observed_ratio < 1e-12);
        assert!(rep.holds(1e-6));
    }

    #[test]
    fn interval_bound_and_attainment() {
        let g = DiscretizedSelectionRule::uniform(EtaMeasure::uniform_bins(21).unwrap());
        let rule = ShockRule::QuantileMidpoints { nodes: 24 };
        for k in [0.01, 0.3, 5.0] {
            let rep = sensitivity_oracle(&IntervalStructure, &ParameterPoint::scalar(2.0, 0.6), &g, &interval_context(), &rule, k, 50, 3).unwrap();
            assert!(rep.sqrt_q_lrr > 0.0);
            assert!(rep.max_observed_ratio <= rep.sqrt_q_lrr * (1.0 + 1e-9));
            let ext = rep.extremal_ratio.unwrap();
            assert!(((ext - rep.sqrt_q_lrr) / rep.sqrt_q_lrr).abs() < 1e-9);
            assert_eq!(rep.feasible_perturbations, 50);
        }
    }

    #[test]
    fn entry_bound_and_attainment() {
        let ctx = CounterfactualContext::uniform(vec![vec![1.0], vec![0.5]], 1.0).unwrap();
        let theta = ParameterPoint { beta: vec![-1.0, -0.8], gamma: vec![0.2, 0.1] };
        let g = DiscretizedSelectionRule::uniform(EtaMeasure::uniform_bins(5).unwrap());
        let rep = sensitivity_oracle(&EntryStructure, &theta, &g, &ctx, &ShockRule::QuantileMidpoints { nodes: 20 }, 1.0, 40, 9).unwrap();
        assert!(rep.holds(1e-9), "{rep:?}");
        assert!(rep.sqrt_q_lrr > 0.0);
    }

    #[test]
    fn zero_density_blocks_extremal_direction() {
        let eta = EtaMeasure::uniform_bins(4).unwrap();
        let g = DiscretizedSelectionRule { eta, densities: Densities::Shared(vec![0.0, 2.0, 2.0, 0.0]) };
        let rule = ShockRule::QuantileMidpoints { nodes: 8 };
        let err = sensitivity_oracle(&IntervalStructure, &ParameterPoint::scalar(2.0, 0.6), &g, &interval_context(), &rule, 1.0, 30, 3);
        assert!(matches!(err, Err(Error::InfeasibleScale(_))));
    }

    #[test]
    fn invalid_radius() {
        let g = DiscretizedSelectionRule::uniform(EtaMeasure::uniform_bins(4).unwrap());
        let rule = ShockRule::QuantileMidpoints { nodes: 4 };
        for k in [0.0, -1.0, f64::INFINITY, f64::NAN] {
            let r = sensitivity_oracle(&IntervalStructure, &ParameterPoint::scalar(2.0, 0.6), &g, &interval_context(), &rule, k, 5, 1);
            assert!(matches!(r, Err(Error::InfeasibleScale(_))));
        }
    }
}
