//! The LRR criterion `Q^LRR(β,γ) = ∫∫ ‖ρ(w;η) − ∫ρ(w;η')dμ(η')‖² dμ(η) dF̃(w)`
//! evaluated generically from a structural function, plus the counterfactual
//! average structural outcome (ASO) under a discretized selection rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::param::ParameterPoint;

/// A model-specific (usually closed-form) evaluator of `Q^LRR`.
pub trait LrrCriterion: Sync {
    fn q_lrr(&self, theta: &ParameterPoint) -> Result<f64>;
}

/// Structural function `ρ_θ(x, ε; η)` with unobserved shocks `ε` and a
/// reduced-form index `η ∈ [0, 1]`.
pub trait StructuralModel: Sync {
    type Covariate: Sync;

    fn outcome_dim(&self) -> usize;

    fn shock_dim(&self) -> usize;

    /// Rejects parameter values the structural function is not defined for.
    fn check(&self, _theta: &ParameterPoint) -> Result<()> {
        Ok(())
    }

    fn rho(&self, x: &Self::Covariate, shock: &[f64], eta: f64, theta: &ParameterPoint, out: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAtom<X> {
    pub value: X,
    pub weight: f64,
}

/// Counterfactual distribution `F̃` of the external variables: a finite list
/// of covariate atoms and independent `N(0, shock_scale²)` shocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualContext<X> {
    pub atoms: Vec<WeightedAtom<X>>,
    pub shock_scale: f64,
}

impl<X> CounterfactualContext<X> {
    /// Builds a context, normalizing the weights to sum to one.
    pub fn new(atoms: Vec<WeightedAtom<X>>, shock_scale: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("counterfactual context needs at least one atom".into()));
        }
        if !(shock_scale > 0.0 && shock_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("shock scale must be positive, got {shock_scale}")));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if atoms.iter().any(|a| !(a.weight >= 0.0) || !a.weight.is_finite()) || !(total > 0.0) {
            return Err(Error::InvalidParameter("atom weights must be non-negative with a positive sum".into()));
        }
        let atoms = atoms.into_iter().map(|a| WeightedAtom { weight: a.weight / total, value: a.value }).collect();
        Ok(Self { atoms, shock_scale })
    }

    /// Equal-weight atoms.
    pub fn uniform(values: Vec<X>, shock_scale: f64) -> Result<Self> {
        Self::new(values.into_iter().map(|value| WeightedAtom { value, weight: 1.0 }).collect(), shock_scale)
    }
}

/// Discretization of the dominating measure μ on the η support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EtaMeasure {
    /// Uniform μ on [0, 1] split into `m` equal bins represented by their midpoints.
    pub fn uniform_bins(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("eta grid needs at least one bin".into()));
        }
        let nodes = (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect();
        Ok(Self { nodes, weights: vec![1.0 / m as f64; m] })
    }

    /// Equal mass on the two pure selections η = 0 and η = 1.
    pub fn two_point() -> Self {
        Self { nodes: vec![0.0, 1.0], weights: vec![0.5, 0.5] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// How the shock distribution is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShockRule {
    /// Product grid of `nodes` equal-probability quantile midpoints per shock
    /// coordinate.
    QuantileMidpoints { nodes: usize },
    /// The first `points` Halton points (bases 2, 3, 5, …) mapped through the
    /// normal quantile function, equal weights.
    Halton { points: usize },
    /// Nested adaptive Simpson quadrature on the probability scale with
    /// absolute tolerance `tol` per unit interval. Not a finite support, so it
    /// cannot back a selection rule.
    Adaptive { tol: f64 },
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

impl ShockRule {
    /// Calls `f(shock, probability)` for every point of the finite shock
    /// support, without materializing it.
    pub fn for_each_node(&self, dim: usize, scale: f64, mut f: impl FnMut(&[f64], f64)) -> Result<()> {
        match *self {
            ShockRule::QuantileMidpoints { nodes } => {
                if nodes == 0 {
                    return Err(Error::InvalidParameter("shock rule needs at least one node".into()));
                }
                let axis: Vec<f64> = (0..nodes).map(|i| scale * normal::quantile((i as f64 + 0.5) / nodes as f64)).collect();
                let count = nodes.pow(dim as u32);
                let w = 1.0 / count as f64;
                let mut e = vec![0.0; dim];
                for mut flat in 0..count {
                    for slot in e.iter_mut().rev() {
                        *slot = axis[flat % nodes];
                        flat /= nodes;
                    }
                    f(&e, w);
                }
                Ok(())
            }
            ShockRule::Halton { points } => {
                if points == 0 {
                    return Err(Error::InvalidParameter("shock rule needs at least one point".into()));
                }
                if dim > HALTON_BASES.len() {
                    return Err(Error::Unsupported(format!("Halton rule supports up to {} shocks", HALTON_BASES.len())));
                }
                let w = 1.0 / points as f64;
                let mut e = vec![0.0; dim];
                for i in 1..=points as u64 {
                    for (slot, &b) in e.iter_mut().zip(&HALTON_BASES[..dim]) {
                        *slot = scale * normal::quantile(radical_inverse(i, b));
                    }
                    f(&e, w);
                }
                Ok(())
            }
            ShockRule::Adaptive { .. } => Err(Error::Unsupported(
                "adaptive quadrature has no finite support; use a quantile-midpoint or Halton rule".into(),
            )),
        }
    }

    /// Finite shock support with probabilities, for the discrete rules.
    pub fn nodes(&self, dim: usize, scale: f64) -> Result<Vec<(Vec<f64>, f64)>> {
        let mut out = Vec::new();
        self.for_each_node(dim, scale, |e, w| out.push((e.to_vec(), w)))?;
        Ok(out)
    }
}

/// `Σ_k μ_k ‖ρ_k − ρ̄‖²` at one (x, ε).
fn eta_dispersion<S: StructuralModel>(
    model: &S,
    x: &S::Covariate,
    shock: &[f64],
    theta: &ParameterPoint,
    eta: &EtaMeasure,
    buf: &mut [f64],
) -> f64 {
    let d = model.outcome_dim();
    let m = eta.len();
    let (values, mean) = buf.split_at_mut(m * d);
    for (k, &node) in eta.nodes.iter().enumerate() {
        model.rho(x, shock, node, theta, &mut values[k * d..(k + 1) * d]);
    }
    // mean taken relative to the first node so an η-constant ρ gives exactly 0
    mean.fill(0.0);
    for (k, &mu) in eta.weights.iter().enumerate() {
        for c in 0..d {
            mean[c] += mu * (values[k * d + c] - values[c]);
        }
    }
    for c in 0..d {
        mean[c] += values[c];
    }
    let mut total = 0.0;
    for (k, &mu) in eta.weights.iter().enumerate() {
        let mut sq = 0.0;
        for c in 0..d {
            let dev = values[k * d + c] - mean[c];
            sq += dev * dev;
        }
        total += mu * sq;
    }
    total
}

/// Generic `Q^LRR` of a structural model under the counterfactual context,
/// with μ discretized by `eta` and the shocks integrated by `rule`.
pub fn q_lrr_generic<S: StructuralModel>(
    model: &S,
    theta: &ParameterPoint,
    context: &CounterfactualContext<S::Covariate>,
    eta: &EtaMeasure,
    rule: &ShockRule,
) -> Result<f64> {
    Ok(q_lrr_generic_batch(model, std::slice::from_ref(theta), context, eta, rule)?[0])
}

/// [`q_lrr_generic`] at several parameter values. Discrete shock rules are
/// walked once for the whole batch.
pub fn q_lrr_generic_batch<S: StructuralModel>(
    model: &S,
    thetas: &[ParameterPoint],
    context: &CounterfactualContext<S::Covariate>,
    eta: &EtaMeasure,
    rule: &ShockRule,
) -> Result<Vec<f64>> {
    for theta in thetas {
        model.check(theta)?;
    }
    let d = model.outcome_dim();
    let mut buf = vec![0.0; (eta.len() + 1) * d];
    let dim = model.shock_dim();
    let atoms = context.atoms.len();
    match *rule {
        ShockRule::Adaptive { tol } => {
            if !(tol > 0.0) {
                return Err(Error::InvalidParameter("adaptive tolerance must be positive".into()));
            }
            let mut out = Vec::with_capacity(thetas.len());
            let mut shock = vec![0.0; dim];
            for theta in thetas {
                let mut total = 0.0;
                for atom in &context.atoms {
                    let value = integrate_unit_cube(dim, tol, &mut |u: &[f64]| {
                        for (s, &ui) in shock.iter_mut().zip(u) {
                            *s = context.shock_scale * normal::quantile(ui.clamp(1e-15, 1.0 - 1e-15));
                        }
                        eta_dispersion(model, &atom.value, &shock, theta, eta, &mut buf)
                    });
                    total += atom.weight * value;
                }
                out.push(total);
            }
            Ok(out)
        }
        _ => {
            // per (θ, atom) sums, weighted by atom at the end
            let mut inner = vec![0.0; thetas.len() * atoms];
            rule.for_each_node(dim, context.shock_scale, |shock, w| {
                for (t, theta) in thetas.iter().enumerate() {
                    for (a, atom) in context.atoms.iter().enumerate() {
                        inner[t * atoms + a] += w * eta_dispersion(model, &atom.value, shock, theta, eta, &mut buf);
                    }
                }
            })?;
            Ok(inner
                .chunks_exact(atoms)
                .map(|row| context.atoms.iter().zip(row).map(|(a, v)| a.weight * v).sum())
                .collect())
        }
    }
}

/// Integral of `f` over `[0,1]^dim` by nested adaptive Simpson quadrature.
fn integrate_unit_cube(dim: usize, tol: f64, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let mut point = vec![0.0; dim];
    nested(0, dim, tol, &mut point, f)
}

fn nested(level: usize, dim: usize, tol: f64, point: &mut Vec<f64>, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    if level == dim {
        return f(point);
    }
    // inner integrals are solved more tightly so their noise does not drive
    // refinement of the outer ones
    let inner_tol = tol * 0.1;
    let mut g = |u: f64, point: &mut Vec<f64>, f: &mut dyn FnMut(&[f64]) -> f64| {
        point[level] = u;
        nested(level + 1, dim, inner_tol, point, f)
    };
    let fa = g(0.0, point, f);
    let fm = g(0.5, point, f);
    let fb = g(1.0, point, f);
    let whole = (fa + 4.0 * fm + fb) / 6.0;
    simpson(&mut g, point, f, 0.0, 1.0, fa, fm, fb, whole, tol, 0)
}

const MAX_DEPTH: u32 = 48;

#[allow(clippy::too_many_arguments)]
fn simpson(
    g: &mut dyn FnMut(f64, &mut Vec<f64>, &mut dyn FnMut(&[f64]) -> f64) -> f64,
    point: &mut Vec<f64>,
    f: &mut dyn FnMut(&[f64]) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = g(lm, point, f);
    let frm = g(rm, point, f);
    let h = b - a;
    let left = (fa + 4.0 * flm + fm) * h / 12.0;
    let right = (fm + 4.0 * frm + fb) * h / 12.0;
    let err = left + right - whole;
    // tolerance per unit length: a jump keeps failing the test until the
    // depth cap, where its contribution is below 2^-48 of the jump size
    if depth >= MAX_DEPTH || err.abs() <= 15.0 * tol * h {
        return left + right + err / 15.0;
    }
    simpson(g, point, f, a, m, fa, flm, fm, left, tol, depth + 1)
        + simpson(g, point, f, m, b, fm, frm, fb, right, tol, depth + 1)
}

/// Density of η with respect to μ, either shared by all external states or
/// given per state (atom-major, shock-minor order of the discrete support).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Densities {
    Shared(Vec<f64>),
    PerState(Vec<Vec<f64>>),
}

/// A selection rule `G` on the discretized η support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSelectionRule {
    pub eta: EtaMeasure,
    pub densities: Densities,
}

impl DiscretizedSelectionRule {
    /// `dG/dμ ≡ 1`.
    pub fn uniform(eta: EtaMeasure) -> Self {
        let m = eta.len();
        Self { eta, densities: Densities::Shared(vec![1.0; m]) }
    }

    fn check_density(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.eta.len() {
            return Err(Error::InvalidSelectionRule(format!(
                "density has {} entries for {} eta states",
                g.len(),
                self.eta.len()
            )));
        }
        if g.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSelectionRule("densities must be finite and non-negative".into()));
        }
        let mass: f64 = g.iter().zip(&self.eta.weights).map(|(a, b)| a * b).sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSelectionRule(format!("density integrates to {mass}, not 1")));
        }
        Ok(())
    }

    pub fn validate(&self, states: usize) -> Result<()> {
        match &self.densities {
            Densities::Shared(g) => self.check_density(g),
            Densities::PerState(gs) => {
                if gs.len() != states {
                    return Err(Error::InvalidSelectionRule(format!(
                        "rule has densities for {} states, the context has {states}",
                        gs.len()
                    )));
                }
                gs.iter().try_for_each(|g| self.check_density(g))
            }
        }
    }

    pub fn density(&self, state: usize) -> &[f64] {
        match &self.densities {
            Densities::Shared(g) => g,
            Densities::PerState(gs) => &gs[state],
        }
    }
}

/// Structural outcomes on the finite support: `states × m × outcome_dim`.
pub(crate) struct RhoTable {
    pub state_weights: Vec<f64>,
    pub values: Vec<f64>,
    pub m: usize,
    pub dim: usize,
}

impl RhoTable {
    pub fn build<S: StructuralModel>(
        model: &S,
        theta: &ParameterPoint,
        context: &CounterfactualContext<S::Covariate>,
        eta: &EtaMeasure,
        rule: &ShockRule,
    ) -> Result<Self> {
        model.check(theta)?;
        let nodes = rule.nodes(model.shock_dim(), context.shock_scale)?;
        let dim = model.outcome_dim();
        let m = eta.len();
        let states = context.atoms.len() * nodes.len();
        let mut values = vec![0.0; states * m * dim];
        let mut state_weights = Vec::with_capacity(states);
        let mut s = 0;
        for atom in &context.atoms {
            for (shock, w) in &nodes {
                state_weights.push(atom.weight * w);
                for (k, &node) in eta.nodes.iter().enumerate() {
                    let at = (s * m + k) * dim;
                    model.rho(&atom.value, shock, node, theta, &mut values[at..at + dim]);
                }
                s += 1;
            }
        }
        Ok(Self { state_weights, values, m, dim })
    }

    pub fn states(&self) -> usize {
        self.state_weights.len()
    }

    #[inline]
    pub fn at(&self, state: usize, k: usize) -> &[f64] {
        let i = (state * self.m + k) * self.dim;
        &self.values[i..i + self.dim]
    }

    /// `Σ_w f_w Σ_k μ_k g_wk ρ_wk` with densities given per state by `density`.
    pub fn aso<'g>(&self, eta: &EtaMeasure, density: impl Fn(usize) -> &'g [f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for s in 0..self.states() {
            let g = density(s);
            let fw = self.state_weights[s];
            for k in 0..self.m {
                let c = fw * eta.weights[k] * g[k];
                if c == 0.0 {
                    continue;
                }
                for (o, v) in out.iter_mut().zip(self.at(s, k)) {
                    *o += c * v;
                }
            }
        }
        out
    }
}

/// Counterfactual average structural outcome `∫∫ ρ dG dF̃` on the discrete support.
pub fn aso<S: StructuralModel>(
    model: &S,
    theta: &ParameterPoint,
    rule_g: &DiscretizedSelectionRule,
    context: &CounterfactualContext<S::Covariate>,
    shocks: &ShockRule,
) -> Result<Vec<f64>> {
    let table = RhoTable::build(model, theta, context, &rule_g.eta, shocks)?;
    rule_g.validate(table.states())?;
    Ok(table.aso(&rule_g.eta, |s| rule_g.density(s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ρ = x + ε, no dependence on η.
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

    /// ρ = c·η: dispersion c²·Var_μ(η).
    struct Linear;

    impl StructuralModel for Linear {
        type Covariate = f64;
        fn outcome_dim(&self) -> usize {
            1
        }
        fn shock_dim(&self) -> usize {
            1
        }
        fn rho(&self, x: &f64, _shock: &[f64], eta: f64, _theta: &ParameterPoint, out: &mut [f64]) {
            out[0] = x * eta;
        }
    }

    fn theta() -> ParameterPoint {
        ParameterPoint::scalar(0.0, 0.0)
    }

    #[test]
    fn constant_in_eta_has_zero_q_and_g_free_aso() {
        let ctx = CounterfactualContext::uniform(vec![0.5, 1.5], 1.0).unwrap();
        let eta = EtaMeasure::uniform_bins(11).unwrap();
        let rule = ShockRule::QuantileMidpoints { nodes: 21 };
        assert!(q_lrr_generic(&Flat, &theta(), &ctx, &eta, &rule).unwrap() < 1e-28);
        assert!(q_lrr_generic(&Flat, &theta(), &ctx, &eta, &ShockRule::Adaptive { tol: 1e-9 }).unwrap() < 1e-28);

        let uniform = DiscretizedSelectionRule::uniform(eta.clone());
        let tilted: Vec<f64> = (0..11).map(|k| 2.0 * eta.nodes[k]).collect();
        let tilted = DiscretizedSelectionRule { eta: eta.clone(), densities: Densities::Shared(tilted) };
        let a = aso(&Flat, &theta(), &uniform, &ctx, &rule).unwrap();
        let b = aso(&Flat, &theta(), &tilted, &ctx, &rule).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((a[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_bins_variance() {
        let ctx = CounterfactualContext::uniform(vec![1.0], 1.0).unwrap();
        for m in [1usize, 2, 10, 1000] {
            let eta = EtaMeasure::uniform_bins(m).unwrap();
            let q = q_lrr_generic(&Linear, &theta(), &ctx, &eta, &ShockRule::QuantileMidpoints { nodes: 3 }).unwrap();
            let want = (1.0 - 1.0 / (m * m) as f64) / 12.0;
            assert!((q - want).abs() < 1e-14, "m={m}: {q} vs {want}");
        }
        let q = q_lrr_generic(&Linear, &theta(), &ctx, &EtaMeasure::two_point(), &ShockRule::Halton { points: 3 }).unwrap();
        assert!((q - 0.25).abs() < 1e-15);
    }

    #[test]
    fn batch_matches_single_evaluations() {
        let ctx = CounterfactualContext::uniform(vec![0.5, 1.5], 1.0).unwrap();
        let eta = EtaMeasure::uniform_bins(7).unwrap();
        let thetas = [ParameterPoint::scalar(0.0, 0.0), ParameterPoint::scalar(1.0, -2.0)];
        for rule in [ShockRule::QuantileMidpoints { nodes: 9 }, ShockRule::Adaptive { tol: 1e-8 }] {
            let batch = q_lrr_generic_batch(&Linear, &thetas, &ctx, &eta, &rule).unwrap();
            for (t, b) in thetas.iter().zip(&batch) {
                assert_eq!(*b, q_lrr_generic(&Linear, t, &ctx, &eta, &rule).unwrap());
            }
        }
    }

    #[test]
    fn selection_rule_validation() {
        let eta = EtaMeasure::uniform_bins(4).unwrap();
        let bad_mass = DiscretizedSelectionRule { eta: eta.clone(), densities: Densities::Shared(vec![1.0, 1.0, 1.0, 2.0]) };
        assert!(bad_mass.validate(1).is_err());
        let negative = DiscretizedSelectionRule { eta: eta.clone(), densities: Densities::Shared(vec![2.0, -1.0, 1.0, 2.0]) };
        assert!(negative.validate(1).is_err());
        let per_state = DiscretizedSelectionRule { eta, densities: Densities::PerState(vec![vec![1.0; 4]; 2]) };
        assert!(per_state.validate(2).is_ok());
        assert!(per_state.validate(3).is_err());
    }

    #[test]
    fn adaptive_rule_has_no_support() {
        assert!(ShockRule::Adaptive { tol: 1e-8 }.nodes(1, 1.0).is_err());
    }

    #[test]
    fn halton_points_cover_the_square() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
        let nodes = ShockRule::Halton { points: 4096 }.nodes(2, 1.0).unwrap();
        let below = nodes.iter().filter(|(e, _)| e[0] <= 0.0 && e[1] <= 0.0).count();
        assert!((below as f64 / 4096.0 - 0.25).abs() < 2e-3);
    }

    #[test]
    fn adaptive_quadrature_handles_jumps() {
        // indicator of ε > 0.3: integral 1 − Φ(0.3)
        let mut f = |u: &[f64]| if normal::quantile(u[0].clamp(1e-15, 1.0 - 1e-15)) > 0.3 { 1.0 } else { 0.0 };
        let v = integrate_unit_cube(1, 1e-10, &mut f);
        assert!((v - normal::sf(0.3)).abs() < 1e-9, "{v}");
        let mut g = |u: &[f64]| u[0] * u[1];
        assert!((integrate_unit_cube(2, 1e-10, &mut g) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn context_normalizes_weights() {
        let ctx = CounterfactualContext::new(
            vec![WeightedAtom { value: 0.0, weight: 3.0 }, WeightedAtom { value: 1.0, weight: 1.0 }],
            1.0,
        )
        .unwrap();
        assert_eq!(ctx.atoms[0].weight, 0.75);
        assert!(CounterfactualContext::<f64>::new(vec![], 1.0).is_err());
        assert!(CounterfactualContext::uniform(vec![0.0], 0.0).is_err());
    }
}
