//! Two-firm complete-information entry game.
//!
//! Firm i enters iff `β_i D_{-i} + x'γ_i ≥ ε_i`. With `β₁, β₂ ≤ 0` the shock
//! plane splits into the regions
//!
//! * A₁ `ε₁ > x'γ₁, ε₂ > x'γ₂`: nobody enters,
//! * A₂ `ε₁ ≤ β₁+x'γ₁, ε₂ ≤ β₂+x'γ₂`: both enter,
//! * A₃ `ε₁ > β₁+x'γ₁, ε₂ ≤ x'γ₂`: only firm 2 enters is an equilibrium,
//! * A₄ `ε₁ ≤ x'γ₁, ε₂ > β₂+x'γ₂`: only firm 1 enters is an equilibrium,
//!
//! and the rectangle A₃ ∩ A₄ supports both monopoly equilibria. There the
//! selection index η picks firm 1's monopoly with weight η and firm 2's with
//! weight 1 − η.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrr::criterion::{CounterfactualContext, LrrCriterion, StructuralModel};
use crate::normal;
use crate::param::ParameterPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryParameters {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
}

impl EntryParameters {
    /// Validates the strategic-interaction signs; only `β₁, β₂ ≤ 0` has the
    /// region geometry implemented here.
    pub fn new(beta1: f64, beta2: f64, gamma1: Vec<f64>, gamma2: Vec<f64>) -> Result<Self> {
        if gamma1.len() != gamma2.len() {
            return Err(Error::InvalidParameter("both firms need the same number of covariate coefficients".into()));
        }
        if [beta1, beta2].iter().chain(&gamma1).chain(&gamma2).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("entry parameters must be finite".into()));
        }
        if beta1 > 0.0 || beta2 > 0.0 {
            return Err(Error::Unsupported(format!(
                "entry regions are derived for non-positive strategic effects, got beta=({beta1}, {beta2})"
            )));
        }
        Ok(Self { beta1, beta2, gamma1, gamma2 })
    }

    /// Reads θ as `β = (β₁, β₂)` and `γ = (γ₁, γ₂)` split in equal halves.
    pub fn from_point(theta: &ParameterPoint) -> Result<Self> {
        if theta.beta.len() != 2 || !theta.gamma.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "entry game expects beta=(beta1, beta2) and gamma=(gamma1, gamma2) with equal halves".into(),
            ));
        }
        let k = theta.gamma.len() / 2;
        Self::new(theta.beta[0], theta.beta[1], theta.gamma[..k].to_vec(), theta.gamma[k..].to_vec())
    }

    fn indices(&self, x: &[f64]) -> (f64, f64) {
        assert_eq!(x.len(), self.gamma1.len(), "covariate dimension does not match gamma");
        let a1 = x.iter().zip(&self.gamma1).map(|(a, b)| a * b).sum();
        let a2 = x.iter().zip(&self.gamma2).map(|(a, b)| a * b).sum();
        (a1, a2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryRegion {
    /// A₁
    NoEntry,
    /// A₂
    BothEnter,
    /// A₃ ∖ A₄
    OnlyFirmTwo,
    /// A₄ ∖ A₃
    OnlyFirmOne,
    /// A₃ ∩ A₄
    Multiple,
}

pub fn entry_region(x: &[f64], eps1: f64, eps2: f64, params: &EntryParameters) -> EntryRegion {
    let (a1, a2) = params.indices(x);
    region_of(a1, a2, params.beta1, params.beta2, eps1, eps2)
}

fn region_of(a1: f64, a2: f64, beta1: f64, beta2: f64, eps1: f64, eps2: f64) -> EntryRegion {
    let in_a3 = eps1 > beta1 + a1 && eps2 <= a2;
    let in_a4 = eps1 <= a1 && eps2 > beta2 + a2;
    match (in_a3, in_a4) {
        (true, true) => EntryRegion::Multiple,
        (true, false) => EntryRegion::OnlyFirmTwo,
        (false, true) => EntryRegion::OnlyFirmOne,
        (false, false) => {
            if eps1 <= beta1 + a1 && eps2 <= beta2 + a2 {
                EntryRegion::BothEnter
            } else {
                EntryRegion::NoEntry
            }
        }
    }
}

fn decisions(region: EntryRegion, eta: f64) -> [f64; 2] {
    match region {
        EntryRegion::NoEntry => [0.0, 0.0],
        EntryRegion::BothEnter => [1.0, 1.0],
        EntryRegion::OnlyFirmTwo => [0.0, 1.0],
        EntryRegion::OnlyFirmOne => [1.0, 0.0],
        EntryRegion::Multiple => [eta, 1.0 - eta],
    }
}

/// Entry decisions `(D₁, D₂)`, blended by η inside the multiplicity region.
pub fn entry_rho(x: &[f64], eps1: f64, eps2: f64, eta: f64, params: &EntryParameters) -> [f64; 2] {
    decisions(entry_region(x, eps1, eps2, params), eta)
}

/// Probability of the multiplicity rectangle under independent `N(0, s²)` shocks:
/// `[Φ(x'γ₁/s) − Φ((x'γ₁+β₁)/s)]·[Φ(x'γ₂/s) − Φ((x'γ₂+β₂)/s)]`.
pub fn multiplicity_probability(x: &[f64], params: &EntryParameters, shock_scale: f64) -> f64 {
    let (a1, a2) = params.indices(x);
    let s = shock_scale;
    let side1 = normal::cdf(a1 / s) - normal::cdf((a1 + params.beta1) / s);
    let side2 = normal::cdf(a2 / s) - normal::cdf((a2 + params.beta2) / s);
    side1.max(0.0) * side2.max(0.0)
}

/// `(1/2) Σ_atoms w · P{ε ∈ A₃ ∩ A₄(x)}`.
pub fn q_lrr_entry(theta: &ParameterPoint, context: &CounterfactualContext<Vec<f64>>) -> Result<f64> {
    let params = EntryParameters::from_point(theta)?;
    Ok(0.5
        * context
            .atoms
            .iter()
            .map(|a| a.weight * multiplicity_probability(&a.value, &params, context.shock_scale))
            .sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryLrr {
    pub context: CounterfactualContext<Vec<f64>>,
}

impl LrrCriterion for EntryLrr {
    fn q_lrr(&self, theta: &ParameterPoint) -> Result<f64> {
        q_lrr_entry(theta, &self.context)
    }
}

/// Structural function of the entry game for the generic criterion.
#[derive(Debug, Clone, Copy, Default)]
pub struct EntryStructure;

impl StructuralModel for EntryStructure {
    type Covariate = Vec<f64>;

    fn outcome_dim(&self) -> usize {
        2
    }

    fn shock_dim(&self) -> usize {
        2
    }

    fn check(&self, theta: &ParameterPoint) -> Result<()> {
        EntryParameters::from_point(theta).map(|_| ())
    }

    fn rho(&self, x: &Vec<f64>, shock: &[f64], eta: f64, theta: &ParameterPoint, out: &mut [f64]) {
        // θ was validated by `check`; read it in place to keep this allocation free
        let k = theta.gamma.len() / 2;
        let a1 = x.iter().zip(&theta.gamma[..k]).map(|(a, b)| a * b).sum();
        let a2 = x.iter().zip(&theta.gamma[k..]).map(|(a, b)| a * b).sum();
        let region = region_of(a1, a2, theta.beta[0], theta.beta[1], shock[0], shock[1]);
        out.copy_from_slice(&decisions(region, eta));
    }
}
