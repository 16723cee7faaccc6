//! Monte Carlo designs for the top-coded regression and coverage experiments.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{comparison_critical_value, resample_indices, BootstrapMoments, BootstrapPlan};
use crate::error::{Error, Result};
use crate::lrr::criterion::CounterfactualContext;
use crate::lrr::region::{analyze_grid, Method};
use crate::models::interval::{q_lrr_interval, IntervalAtom, IntervalLrr, IntervalMoments, IntervalObservation};
use crate::moments::PreparedMoments;
use crate::normal;
use crate::param::{Axis, GridMask, ParameterGrid, ParameterPoint};
use crate::rng::{derive_seed, substream, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub beta0: f64,
    pub gamma0: f64,
    pub z1: f64,
    pub z2: f64,
    pub n: usize,
    pub replications: usize,
    pub plan: BootstrapPlan,
}

impl McSpec {
    /// Design 1 or 2: `(β₀, γ₀, Z₁, Z₂)` = (2, 1, 2.3, 4.5) or (2, 1, 1, 5).
    pub fn standard(spec_id: u8, n: usize, replications: usize, plan: BootstrapPlan) -> Result<Self> {
        let (z1, z2) = match spec_id {
            1 => (2.3, 4.5),
            2 => (1.0, 5.0),
            other => return Err(Error::InvalidParameter(format!("unknown design {other}, expected 1 or 2"))),
        };
        let spec = Self { beta0: 2.0, gamma0: 1.0, z1, z2, n, replications, plan };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z1 < self.z2) {
            return Err(Error::InvalidParameter(format!("need z1 < z2, got {} and {}", self.z1, self.z2)));
        }
        if self.n < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: self.n });
        }
        if self.replications < 1 {
            return Err(Error::InvalidParameter("at least one replicate is required".into()));
        }
        if ![self.beta0, self.gamma0, self.z1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("design parameters must be finite".into()));
        }
        self.plan.validate()
    }

    pub fn theta0(&self) -> ParameterPoint {
        ParameterPoint::scalar(self.beta0, self.gamma0)
    }

    fn mean(&self, x: u8) -> f64 {
        self.beta0 + self.gamma0 * f64::from(x)
    }
}

/// Default plotting grid for each design.
pub fn default_grid(spec_id: u8) -> Result<ParameterGrid> {
    match spec_id {
        1 => ParameterGrid::plane(Axis::new(1.4, 2.9, 31)?, Axis::new(-0.8, 2.5, 34)?),
        2 => ParameterGrid::plane(Axis::new(0.5, 4.7, 43)?, Axis::new(-3.8, 4.5, 84)?),
        other => Err(Error::InvalidParameter(format!("unknown design {other}, expected 1 or 2"))),
    }
}

/// Draws `n` rows of `(X̃, Y*)` and applies top-coding. A row whose `Y*`
/// exceeds `Z₂` has its shock redrawn from the normal law restricted to
/// `(Z₁ − μ, Z₂ − μ]`, so it stays censored and lands inside the bracket.
pub fn dgp_interval(spec: &McSpec, seed: u64, replicate: u64) -> Vec<IntervalObservation> {
    let mut rng = substream(seed, Domain::Dataset, replicate);
    (0..spec.n)
        .map(|_| {
            let x = u8::from(rng.gen_bool(0.5));
            let mu = spec.mean(x);
            let e: f64 = rng.sample(StandardNormal);
            let mut y = mu + e;
            if y > spec.z2 {
                let lo = normal::cdf(spec.z1 - mu);
                let hi = normal::cdf(spec.z2 - mu);
                let u: f64 = rng.gen();
                y = (mu + normal::quantile(lo + u * (hi - lo))).clamp(spec.z1, spec.z2);
                if y <= spec.z1 {
                    y = spec.z2;
                }
            }
            IntervalObservation::from_latent(y, x, spec.z1, spec.z2)
        })
        .collect()
}

/// `P(Y* > Z₁)`, the share of censored rows.
pub fn censoring_probability(spec: &McSpec) -> f64 {
    0.5 * (normal::sf(spec.z1 - spec.mean(0)) + normal::sf(spec.z1 - spec.mean(1)))
}

/// `(E[Z̃₁ | X̃=x], E[Z̃₂ | X̃=x])`.
pub fn conditional_bounds(spec: &McSpec, x: u8) -> (f64, f64) {
    let mu = spec.mean(x);
    let c = spec.z1 - mu;
    let base = mu * normal::cdf(c) - normal::pdf(c);
    let tail = normal::sf(c);
    (base + spec.z1 * tail, base + spec.z2 * tail)
}

/// Population values of the four moment functions at θ.
pub fn population_moments(spec: &McSpec, theta: &ParameterPoint) -> [f64; 4] {
    let (beta, gamma) = (theta.beta[0], theta.gamma[0]);
    let (l0, u0) = conditional_bounds(spec, 0);
    let (l1, u1) = conditional_bounds(spec, 1);
    [0.5 * (l0 - beta), 0.5 * (beta - u0), 0.5 * (l1 - beta - gamma), 0.5 * (beta + gamma - u1)]
}

/// Grid points in the population identified set.
pub fn population_identified(spec: &McSpec, grid: &ParameterGrid) -> GridMask {
    let flags = (0..grid.len()).map(|i| population_moments(spec, &grid.point(i)).iter().all(|&m| m <= 0.0)).collect();
    GridMask::from_flags(grid.full_lattice(), flags).expect("one flag per grid point")
}

/// Points of `mask` whose axis neighbours on the grid are all in `mask`.
/// Points on the edge of the grid are never interior.
pub fn interior(mask: &GridMask) -> GridMask {
    let lattice = mask.lattice().clone();
    let mut out = GridMask::empty(lattice.clone());
    for i in mask.flagged() {
        let idx = lattice.indices(i);
        let ok = (0..idx.len()).all(|a| {
            let steps = lattice.axes[a].steps;
            if idx[a] == 0 || idx[a] + 1 == steps {
                return false;
            }
            [idx[a] - 1, idx[a] + 1].iter().all(|&v| {
                let mut nb = idx.clone();
                nb[a] = v;
                mask.get(lattice.flat_index(&nb))
            })
        });
        out.set(i, ok);
    }
    out
}

/// Counterfactual context with the population covariate law `X̃ ~ Bernoulli(1/2)`.
pub fn population_context(spec: &McSpec) -> Result<CounterfactualContext<IntervalAtom>> {
    CounterfactualContext::uniform(
        vec![
            IntervalAtom { x1: vec![1.0, 0.0], z1: spec.z1, z2: spec.z2 },
            IntervalAtom { x1: vec![1.0, 1.0], z1: spec.z1, z2: spec.z2 },
        ],
        1.0,
    )
}

/// Brute-force minimizer of the closed-form criterion over the population
/// identified set at `beta`, scanning the points of `gamma_axis`. Returns the
/// index and value of the first minimizing γ, or `None` if the set is empty.
pub fn population_lrr_argmin(spec: &McSpec, beta: f64, gamma_axis: &Axis) -> Result<Option<(usize, f64)>> {
    gamma_axis.validate()?;
    let ctx = population_context(spec)?;
    let mut best: Option<(usize, f64, f64)> = None;
    for g in 0..gamma_axis.steps {
        let theta = ParameterPoint::scalar(beta, gamma_axis.value(g));
        if population_moments(spec, &theta).iter().any(|&m| m > 0.0) {
            continue;
        }
        let q = q_lrr_interval(&theta, &ctx);
        if best.is_none_or(|(_, _, bq)| q < bq) {
            best = Some((g, theta.gamma[0], q));
        }
    }
    Ok(best.map(|(g, v, _)| (g, v)))
}

/// Order of the four accumulated regions.
pub const REGIONS: [(&str, Method, bool); 4] = [
    ("identified_conservative", Method::Conservative, false),
    ("identified_bonferroni", Method::Bonferroni, false),
    ("lrr_conservative", Method::Conservative, true),
    ("lrr_bonferroni", Method::Bonferroni, true),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub grid: ParameterGrid,
    pub spec: McSpec,
    /// Per-point membership counts for each entry of [`REGIONS`].
    pub counts: [Vec<u32>; 4],
    pub replications: usize,
    /// Mean number of grid points in each region.
    pub mean_cardinality: [f64; 4],
    /// Replicates where the LRR region left the identified-set region,
    /// conservative then Bonferroni. Always zero by construction.
    pub containment_violations: [usize; 2],
    /// Replicates where the LRR region is a strict subset.
    pub strict_containment: [usize; 2],
    /// Comparisons `c̃ ≥ c̄` at population identified-set points.
    pub comparison_checks: usize,
    pub comparison_hits: usize,
    pub population_identified: GridMask,
}

impl CoverageGrid {
    pub fn frequency(&self, region: usize, point: usize) -> f64 {
        f64::from(self.counts[region][point]) / self.replications as f64
    }

    pub fn frequencies(&self, region: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.frequency(region, i)).collect()
    }

    pub fn comparison_frequency(&self) -> f64 {
        if self.comparison_checks == 0 {
            return f64::NAN;
        }
        self.comparison_hits as f64 / self.comparison_checks as f64
    }
}

struct Tally {
    counts: [Vec<u32>; 4],
    cardinality: [usize; 4],
    violations: [usize; 2],
    strict: [usize; 2],
    checks: usize,
    hits: usize,
}

impl Tally {
    fn zero(len: usize) -> Self {
        Self {
            counts: std::array::from_fn(|_| vec![0; len]),
            cardinality: [0; 4],
            violations: [0; 2],
            strict: [0; 2],
            checks: 0,
            hits: 0,
        }
    }

    fn add(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for k in 0..4 {
            self.cardinality[k] += other.cardinality[k];
        }
        for k in 0..2 {
            self.violations[k] += other.violations[k];
            self.strict[k] += other.strict[k];
        }
        self.checks += other.checks;
        self.hits += other.hits;
        self
    }
}

fn replicate(spec: &McSpec, grid: &ParameterGrid, population: &GridMask, r: usize) -> Result<Tally> {
    let data = dgp_interval(spec, spec.plan.seed, r as u64);
    let plan = BootstrapPlan { seed: derive_seed(spec.plan.seed, Domain::Replicate, r as u64), ..spec.plan.clone() };
    let prepared = PreparedMoments::new(&IntervalMoments, &data)?;
    let resamples = resample_indices(data.len(), plan.replications, plan.seed);
    let boot = BootstrapMoments::new(&prepared, &resamples)?;
    let criterion = IntervalLrr::from_sample(&data, spec.z1, spec.z2, 1.0)?;
    let analysis = analyze_grid(&boot, &criterion, grid, &plan)?;

    let mut tally = Tally::zero(grid.len());
    let mut masks = Vec::with_capacity(4);
    for (k, &(_, method, restricted)) in REGIONS.iter().enumerate() {
        let mask = if restricted { analysis.lrr(method) } else { analysis.identified(method) };
        for i in mask.flagged() {
            tally.counts[k][i] += 1;
        }
        tally.cardinality[k] = mask.count();
        masks.push(mask);
    }
    for m in 0..2 {
        let (id, lrr) = (&masks[m], &masks[m + 2]);
        if !lrr.is_subset(id)? {
            tally.violations[m] += 1;
        } else if id.difference(lrr)?.count() > 0 {
            tally.strict[m] += 1;
        }
    }
    for i in population.flagged() {
        let theta = grid.point(i);
        let (summary, dev) = boot.evaluate(&theta);
        let c_bar = comparison_critical_value(&summary, &dev, &population_moments(spec, &theta), &plan);
        tally.checks += 1;
        if analysis.points[i].critical.c_bonferroni >= c_bar {
            tally.hits += 1;
        }
    }
    Ok(tally)
}

/// Runs `spec.replications` independent experiments on `grid` and accumulates
/// how often each grid point falls in each of the four confidence regions.
pub fn run_coverage(spec: &McSpec, grid: &ParameterGrid) -> Result<CoverageGrid> {
    spec.validate()?;
    if grid.beta.dim() != 1 || grid.gamma.dim() != 1 {
        return Err(Error::InvalidGrid("the top-coded design has scalar β and γ".into()));
    }
    let population = population_identified(spec, grid);
    let tally = (0..spec.replications)
        .into_par_iter()
        .map(|r| replicate(spec, grid, &population, r))
        .try_reduce(|| Tally::zero(grid.len()), |a, b| Ok(a.add(b)))?;
    let reps = spec.replications as f64;
    Ok(CoverageGrid {
        grid: grid.clone(),
        spec: spec.clone(),
        mean_cardinality: std::array::from_fn(|k| tally.cardinality[k] as f64 / reps),
        counts: tally.counts,
        replications: spec.replications,
        containment_violations: tally.violations,
        strict_containment: tally.strict,
        comparison_checks: tally.checks,
        comparison_hits: tally.hits,
        population_identified: population,
    })
}

/// [`run_coverage`] for design 1 or 2 with sample size `n`.
pub fn run_standard(spec_id: u8, n: usize, grid: &ParameterGrid, plan: &BootstrapPlan, replications: usize) -> Result<CoverageGrid> {
    run_coverage(&McSpec::standard(spec_id, n, replications, plan.clone())?, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec1(n: usize) -> McSpec {
        McSpec::standard(1, n, 1, BootstrapPlan::default()).unwrap()
    }

    #[test]
    fn censoring_off() {
        let spec = McSpec { z1: 1e9, z2: 2e9, ..spec1(2000) };
        assert!(dgp_interval(&spec, 3, 0).iter().all(|o| !o.censored && o.z1_tilde == o.z2_tilde));
    }

    #[test]
    fn dataset_is_reproducible() {
        let spec = spec1(300);
        assert_eq!(dgp_interval(&spec, 11, 4), dgp_interval(&spec, 11, 4));
        assert_ne!(dgp_interval(&spec, 11, 4), dgp_interval(&spec, 11, 5));
    }

    #[test]
    fn censored_rows_stay_bracketed() {
        let spec = McSpec::standard(2, 5000, 1, BootstrapPlan::default()).unwrap();
        for o in dgp_interval(&spec, 1, 0) {
            if o.censored {
                assert_eq!((o.z1_tilde, o.z2_tilde), (1.0, 5.0));
            } else {
                assert!(o.z1_tilde <= 1.0);
            }
        }
    }

    #[test]
    fn censoring_probability_value() {
        // 0.5·(1 − Φ(0.3)) + 0.5·(1 − Φ(−0.7)) from an independent evaluation
        assert!((censoring_probability(&spec1(10)) - 0.57006246279398717).abs() < 1e-12);
    }

    #[test]
    fn conditional_bounds_reference() {
        let s1 = spec1(10);
        let want = [(1.7332387578827901, 2.5738336290670943), (2.1571206231893899, 3.8248005882986292)];
        for x in 0..2u8 {
            let (l, u) = conditional_bounds(&s1, x);
            assert!((l - want[x as usize].0).abs() < 1e-12 && (u - want[x as usize].1).abs() < 1e-12);
        }
        let s2 = McSpec::standard(2, 10, 1, BootstrapPlan::default()).unwrap();
        let want = [(0.9166845294123137, 4.2820635136864855), (0.99150929738317036, 4.9005087695904535)];
        for x in 0..2u8 {
            let (l, u) = conditional_bounds(&s2, x);
            assert!((l - want[x as usize].0).abs() < 1e-12 && (u - want[x as usize].1).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_bounds_match_population() {
        let spec = spec1(200_000);
        let data = dgp_interval(&spec, 8, 0);
        for x in 0..2u8 {
            let rows: Vec<_> = data.iter().filter(|o| o.x == x).collect();
            let m = rows.len() as f64;
            let l = rows.iter().map(|o| o.z1_tilde).sum::<f64>() / m;
            let u = rows.iter().map(|o| o.z2_tilde).sum::<f64>() / m;
            let (pl, pu) = conditional_bounds(&spec, x);
            assert!((l - pl).abs() < 0.01 && (u - pu).abs() < 0.01, "{x}: {l} {u} vs {pl} {pu}");
        }
    }

    #[test]
    fn truth_is_identified_and_sets_nest() {
        let grid = default_grid(2).unwrap();
        let s1 = spec1(10);
        let s2 = McSpec::standard(2, 10, 1, BootstrapPlan::default()).unwrap();
        let a = population_identified(&s1, &grid);
        let b = population_identified(&s2, &grid);
        assert!(a.is_subset(&b).unwrap());
        assert!(b.difference(&a).unwrap().count() > 0);
        for (id, spec) in [(1u8, &s1), (2, &s2)] {
            let g = default_grid(id).unwrap();
            let truth = (0..g.len())
                .find(|&i| {
                    let p = g.point(i);
                    (p.beta[0] - 2.0).abs() < 1e-9 && (p.gamma[0] - 1.0).abs() < 1e-9
                })
                .expect("truth on the default grid");
            assert!(population_identified(spec, &g).get(truth));
        }
    }

    #[test]
    fn interior_excludes_boundary() {
        let grid = ParameterGrid::plane(Axis::new(0.0, 4.0, 5).unwrap(), Axis::new(0.0, 4.0, 5).unwrap()).unwrap();
        let full = GridMask::full(grid.full_lattice());
        let inner = interior(&full);
        assert_eq!(inner.count(), 9);
        let mut holed = full.clone();
        holed.set(grid.index(2, 2), false);
        assert_eq!(interior(&holed).count(), 4);
    }

    #[test]
    fn argmin_sits_on_the_lower_edge() {
        let spec = spec1(10);
        let axis = Axis::new(-0.8, 2.5, 3301).unwrap();
        let (g, gamma) = population_lrr_argmin(&spec, 2.0, &axis).unwrap().unwrap();
        assert!((gamma - 0.158).abs() < 1e-9, "{gamma}");
        assert!(population_moments(&spec, &ParameterPoint::scalar(2.0, axis.value(g - 1)))[2] > 0.0);
    }

    #[test]
    fn single_replicate_is_binary_and_ordered() {
        let plan = BootstrapPlan { replications: 49, ..BootstrapPlan::default() };
        let grid = ParameterGrid::plane(Axis::new(1.4, 2.9, 8).unwrap(), Axis::new(-0.8, 2.5, 9).unwrap()).unwrap();
        let cov = run_standard(1, 150, &grid, &plan, 1).unwrap();
        for k in 0..4 {
            assert!(cov.frequencies(k).iter().all(|&f| f == 0.0 || f == 1.0));
        }
        assert_eq!(cov.containment_violations, [0, 0]);
        let again = run_standard(1, 150, &grid, &plan, 1).unwrap();
        assert_eq!(cov, again);
    }

    #[test]
    fn replicate_order_is_irrelevant() {
        let plan = BootstrapPlan { replications: 29, ..BootstrapPlan::default() };
        let grid = ParameterGrid::plane(Axis::new(1.4, 2.9, 6).unwrap(), Axis::new(-0.8, 2.5, 7).unwrap()).unwrap();
        let spec = McSpec::standard(1, 100, 6, plan).unwrap();
        let pooled = run_coverage(&spec, &grid).unwrap();
        let population = population_identified(&spec, &grid);
        let serial = (0..6).rev().map(|r| replicate(&spec, &grid, &population, r).unwrap()).fold(Tally::zero(grid.len()), Tally::add);
        assert_eq!(pooled.counts, serial.counts);
    }

    #[test]
    fn rejects_bad_designs() {
        assert!(McSpec::standard(3, 10, 1, BootstrapPlan::default()).is_err());
        assert!(McSpec::standard(1, 1, 1, BootstrapPlan::default()).is_err());
        assert!(McSpec::standard(1, 10, 0, BootstrapPlan::default()).is_err());
    }
}
