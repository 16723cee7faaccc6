//! Linear model `Y* = X₁'θ + ε` observed through top-coding: `Y*` is seen
//! when `Y* ≤ Z₁` and only bracketed by `[Z₁, Z₂]` otherwise.
//!
//! The simulation design uses `X₁ = (1, X̃)` with binary `X̃`, `β` the
//! intercept and `γ` the slope, giving four moment inequalities.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lrr::criterion::{CounterfactualContext, LrrCriterion, StructuralModel, WeightedAtom};
use crate::moments::MomentModel;
use crate::normal;
use crate::param::ParameterPoint;

/// One observation `(Z̃₁, Z̃₂, X̃)`; `censored` records whether `Y*` exceeded `Z₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalObservation {
    pub z1_tilde: f64,
    pub z2_tilde: f64,
    pub x: u8,
    pub censored: bool,
}

impl IntervalObservation {
    /// Applies the top-coding rule; `y_star == z1` counts as uncensored.
    pub fn from_latent(y_star: f64, x: u8, z1: f64, z2: f64) -> Self {
        if y_star <= z1 {
            Self { z1_tilde: y_star, z2_tilde: y_star, x, censored: false }
        } else {
            Self { z1_tilde: z1, z2_tilde: z2, x, censored: true }
        }
    }
}

/// The four moment functions for θ = (β, γ) with scalar β and γ.
pub fn interval_moments(obs: &IntervalObservation, theta: &ParameterPoint) -> [f64; 4] {
    let (beta, gamma) = (theta.beta[0], theta.gamma[0]);
    let d0 = f64::from(obs.x == 0);
    let d1 = f64::from(obs.x == 1);
    [
        obs.z1_tilde * d0 - beta * d0,
        beta * d0 - obs.z2_tilde * d0,
        obs.z1_tilde * d1 - (beta + gamma) * d1,
        (beta + gamma) * d1 - obs.z2_tilde * d1,
    ]
}

/// Moment inequalities of the top-coded model with a binary regressor.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntervalMoments;

impl MomentModel for IntervalMoments {
    type Observation = IntervalObservation;

    fn num_moments(&self) -> usize {
        4
    }

    fn evaluate(&self, obs: &IntervalObservation, theta: &ParameterPoint, out: &mut [f64]) {
        out.copy_from_slice(&interval_moments(obs, theta));
    }

    fn affine_dim(&self) -> Option<usize> {
        Some(2)
    }

    fn affine_coefficients(&self, obs: &IntervalObservation, out: &mut [f64]) {
        let d0 = f64::from(obs.x == 0);
        let d1 = f64::from(obs.x == 1);
        out.copy_from_slice(&[
            obs.z1_tilde * d0, -d0, 0.0, //
            -obs.z2_tilde * d0, d0, 0.0, //
            obs.z1_tilde * d1, -d1, -d1, //
            -obs.z2_tilde * d1, d1, d1,
        ]);
    }
}

/// Counterfactual covariate atom `(x₁, z₁, z₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAtom {
    pub x1: Vec<f64>,
    pub z1: f64,
    pub z2: f64,
}

fn index(x1: &[f64], theta: &ParameterPoint) -> f64 {
    x1.iter().zip(theta.beta.iter().chain(&theta.gamma)).map(|(a, b)| a * b).sum()
}

/// `X₁'θ + ε` when it does not exceed `z₁`, otherwise `η z₁ + (1−η) z₂`.
pub fn interval_rho(x1: &[f64], z1: f64, z2: f64, eps: f64, eta: f64, theta: &ParameterPoint) -> f64 {
    let y = index(x1, theta) + eps;
    if y <= z1 {
        y
    } else {
        eta * z1 + (1.0 - eta) * z2
    }
}

/// Structural function of the top-coded model.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntervalStructure;

impl StructuralModel for IntervalStructure {
    type Covariate = IntervalAtom;

    fn outcome_dim(&self) -> usize {
        1
    }

    fn shock_dim(&self) -> usize {
        1
    }

    fn rho(&self, x: &IntervalAtom, shock: &[f64], eta: f64, theta: &ParameterPoint, out: &mut [f64]) {
        out[0] = interval_rho(&x.x1, x.z1, x.z2, shock[0], eta, theta);
    }
}

/// `(1/12) Σ_atoms w (z₁−z₂)² (1 − F_ε(z₁ − x₁'θ))` with `ε ~ N(0, σ²)`.
pub fn q_lrr_interval(theta: &ParameterPoint, context: &CounterfactualContext<IntervalAtom>) -> f64 {
    let s = context.shock_scale;
    context
        .atoms
        .iter()
        .map(|a| {
            let x = &a.value;
            a.weight * (x.z1 - x.z2).powi(2) * normal::sf((x.z1 - index(&x.x1, theta)) / s)
        })
        .sum::<f64>()
        / 12.0
}

/// Closed-form LRR criterion of the top-coded model.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalLrr {
    pub context: CounterfactualContext<IntervalAtom>,
}

impl IntervalLrr {
    /// Counterfactual distribution equal to the empirical distribution of the
    /// regressor `(1, X̃)` with fixed thresholds.
    pub fn from_sample(data: &[IntervalObservation], z1: f64, z2: f64, shock_scale: f64) -> Result<Self> {
        let ones = data.iter().filter(|o| o.x == 1).count() as f64;
        let zeros = data.len() as f64 - ones;
        let atoms = [(0.0, zeros), (1.0, ones)]
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(x, weight)| WeightedAtom { value: IntervalAtom { x1: vec![1.0, x], z1, z2 }, weight })
            .collect();
        Ok(Self { context: CounterfactualContext::new(atoms, shock_scale)? })
    }
}

impl LrrCriterion for IntervalLrr {
    fn q_lrr(&self, theta: &ParameterPoint) -> Result<f64> {
        Ok(q_lrr_interval(theta, &self.context))
    }
}
