//! Upper LRR sets and LRR-restricted confidence regions on a parameter grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::criterion::LrrCriterion;
use crate::bootstrap::{critical_values, resample_indices, BootstrapMoments, BootstrapPlan, CriticalValues};
use crate::error::{Error, Result};
use crate::moments::{gamma_hat_kappa, q_hat, test_statistic, MomentModel, PreparedMoments, ZERO_TOLERANCE};
use crate::param::{GridMask, ParameterGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Conservative,
    Bonferroni,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conservative" => Ok(Method::Conservative),
            "bonferroni" => Ok(Method::Bonferroni),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}` (expected conservative or bonferroni)"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Conservative => "conservative",
            Method::Bonferroni => "bonferroni",
        })
    }
}

/// `{γ ∈ Γ̂_{−κ}(β) : Q̂^LRR(β,γ) ≤ inf_{γ' ∈ Γ̂_κ(β)} Q̂^LRR(β,γ') + 2κ}`.
///
/// `q_lrr` holds the criterion at every γ of the lattice. An empty `Γ̂_κ(β)`
/// has infimum `+∞`, which returns `Γ̂_{−κ}(β)` unchanged.
pub fn gamma_lrr_upper(gamma_minus: &GridMask, gamma_plus: &GridMask, q_lrr: &[f64], kappa: f64) -> Result<GridMask> {
    if gamma_minus.lattice() != gamma_plus.lattice() {
        return Err(Error::GridMismatch);
    }
    if q_lrr.len() != gamma_minus.len() {
        return Err(Error::InvalidGrid(format!(
            "{} criterion values for a lattice of {} points",
            q_lrr.len(),
            gamma_minus.len()
        )));
    }
    let inf = gamma_plus.flagged().map(|g| q_lrr[g]).fold(f64::INFINITY, f64::min);
    let cut = inf + 2.0 * kappa;
    let flags = (0..gamma_minus.len()).map(|g| gamma_minus.get(g) && q_lrr[g] <= cut).collect();
    GridMask::from_flags(gamma_minus.lattice().clone(), flags)
}

/// [`gamma_lrr_upper`] at one β index, evaluating `Γ̂_{±κ}(β)` and `Q̂^LRR`
/// directly from the data.
pub fn gamma_lrr_upper_at<M: MomentModel, C: LrrCriterion + ?Sized>(
    prepared: &PreparedMoments<'_, M>,
    criterion: &C,
    grid: &ParameterGrid,
    beta_index: usize,
    kappa: f64,
) -> Result<GridMask> {
    if beta_index >= grid.beta.len() {
        return Err(Error::InvalidGrid(format!("β index {beta_index} outside a lattice of {}", grid.beta.len())));
    }
    let minus = gamma_hat_kappa(prepared, grid, beta_index, -kappa);
    let plus = gamma_hat_kappa(prepared, grid, beta_index, kappa);
    let q = (0..grid.gamma_len())
        .into_par_iter()
        .map(|g| criterion.q_lrr(&grid.point(grid.index(beta_index, g))))
        .collect::<Result<Vec<_>>>()?;
    gamma_lrr_upper(&minus, &plus, &q, kappa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub statistic: f64,
    pub critical: CriticalValues,
    pub q_lrr: f64,
}

impl PointDiagnostics {
    pub fn critical_value(&self, method: Method) -> f64 {
        match method {
            Method::Conservative => self.critical.c_conservative,
            Method::Bonferroni => self.critical.c_bonferroni,
        }
    }

    pub fn accepted(&self, method: Method) -> bool {
        self.statistic <= self.critical_value(method)
    }
}

/// Everything computed once per (grid, data) pair; both methods read from it.
#[derive(Debug, Clone)]
pub struct GridAnalysis {
    pub grid: ParameterGrid,
    pub kappa: f64,
    pub points: Vec<PointDiagnostics>,
    /// `Γ̂_{−κ}(β)` per β index.
    pub gamma_minus: Vec<GridMask>,
    /// `Γ̂_κ(β)` per β index.
    pub gamma_plus: Vec<GridMask>,
    /// `Γ̂^LRR_{κ,U}(β)` per β index.
    pub lrr_upper: Vec<GridMask>,
}

fn stack(grid: &ParameterGrid, per_beta: &[GridMask]) -> GridMask {
    let flags = per_beta.iter().flat_map(|m| m.flags().iter().copied()).collect();
    GridMask::from_flags(grid.full_lattice(), flags).expect("one γ mask per β")
}

impl GridAnalysis {
    /// `{θ : T(θ) ≤ c(θ)}` over the full grid.
    pub fn identified(&self, method: Method) -> GridMask {
        let flags = self.points.iter().map(|p| p.accepted(method)).collect();
        GridMask::from_flags(self.grid.full_lattice(), flags).expect("one entry per grid point")
    }

    pub fn gamma_minus_mask(&self) -> GridMask {
        stack(&self.grid, &self.gamma_minus)
    }

    pub fn lrr_upper_mask(&self) -> GridMask {
        stack(&self.grid, &self.lrr_upper)
    }

    /// Identified-set region restricted to the upper LRR set.
    pub fn lrr(&self, method: Method) -> GridMask {
        self.identified(method).intersection(&self.lrr_upper_mask()).expect("same lattice")
    }

    pub fn report(&self, method: Method, plan: &BootstrapPlan) -> ConfidenceReport {
        let identified = self.identified(method);
        let lrr = self.lrr(method);
        ConfidenceReport {
            grid: self.grid.clone(),
            method,
            plan: plan.clone(),
            points: self.points.clone(),
            empty: lrr.none(),
            gamma_minus: self.gamma_minus_mask(),
            lrr_upper: self.lrr_upper_mask(),
            identified,
            lrr,
        }
    }
}

/// Test statistic, critical values and `Q̂^LRR` at every grid point, plus the
/// per-β masks `Γ̂_{±κ}` and the upper LRR sets.
pub fn analyze_grid<M: MomentModel, C: LrrCriterion + ?Sized>(
    boot: &BootstrapMoments<'_, '_, M>,
    criterion: &C,
    grid: &ParameterGrid,
    plan: &BootstrapPlan,
) -> Result<GridAnalysis> {
    plan.validate()?;
    if boot.replications() != plan.replications {
        return Err(Error::InvalidPlan(format!(
            "{} resamples prepared for a plan of {} replications",
            boot.replications(),
            plan.replications
        )));
    }
    let kappa = plan.kappa;
    let evaluated: Vec<(PointDiagnostics, bool, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let theta = grid.point(i);
            let (summary, dev) = boot.evaluate(&theta);
            let q_lrr = criterion.q_lrr(&theta)?;
            let point = PointDiagnostics {
                statistic: test_statistic(&summary),
                critical: critical_values(&summary, &dev, plan),
                q_lrr,
            };
            let minus = q_hat(&summary, -kappa) <= ZERO_TOLERANCE;
            let plus = q_hat(&summary, kappa) <= ZERO_TOLERANCE;
            Ok((point, minus, plus))
        })
        .collect::<Result<_>>()?;

    let gl = grid.gamma_len();
    let mut gamma_minus = Vec::with_capacity(grid.beta.len());
    let mut gamma_plus = Vec::with_capacity(grid.beta.len());
    let mut lrr_upper = Vec::with_capacity(grid.beta.len());
    for block in evaluated.chunks_exact(gl) {
        let minus = GridMask::from_flags(grid.gamma.clone(), block.iter().map(|e| e.1).collect())?;
        let plus = GridMask::from_flags(grid.gamma.clone(), block.iter().map(|e| e.2).collect())?;
        let q: Vec<f64> = block.iter().map(|e| e.0.q_lrr).collect();
        lrr_upper.push(gamma_lrr_upper(&minus, &plus, &q, kappa)?);
        gamma_minus.push(minus);
        gamma_plus.push(plus);
    }
    let points = evaluated.into_iter().map(|e| e.0).collect();
    Ok(GridAnalysis { grid: grid.clone(), kappa, points, gamma_minus, gamma_plus, lrr_upper })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub grid: ParameterGrid,
    pub method: Method,
    pub plan: BootstrapPlan,
    pub points: Vec<PointDiagnostics>,
    /// `{T ≤ c}` without the LRR restriction.
    pub identified: GridMask,
    pub gamma_minus: GridMask,
    pub lrr_upper: GridMask,
    /// `{T ≤ c} ∩ Γ̂^LRR_{κ,U}`.
    pub lrr: GridMask,
    pub empty: bool,
}

/// LRR-restricted and unrestricted confidence regions for one dataset.
pub fn confidence_set<M: MomentModel, C: LrrCriterion + ?Sized>(
    data: &[M::Observation],
    model: &M,
    criterion: &C,
    grid: &ParameterGrid,
    plan: &BootstrapPlan,
    method: Method,
) -> Result<ConfidenceReport> {
    plan.validate()?;
    let prepared = PreparedMoments::new(model, data)?;
    let resamples = resample_indices(data.len(), plan.replications, plan.seed);
    let boot = BootstrapMoments::new(&prepared, &resamples)?;
    Ok(analyze_grid(&boot, criterion, grid, plan)?.report(method, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::interval::{IntervalLrr, IntervalMoments, IntervalObservation};
    use crate::param::{Axis, Lattice};
    use crate::rng::{substream, Domain};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn line(n: usize) -> Lattice {
        Lattice::new(vec![Axis::new(0.0, 1.0, n).unwrap()]).unwrap()
    }

    fn mask(flags: &[bool]) -> GridMask {
        GridMask::from_flags(line(flags.len()), flags.to_vec()).unwrap()
    }

    #[test]
    fn empty_inner_set_keeps_outer_set() {
        let minus = mask(&[false, true, true, true, false]);
        let plus = mask(&[false; 5]);
        let out = gamma_lrr_upper(&minus, &plus, &[9.0, 5.0, 1.0, 3.0, 0.0], 0.02).unwrap();
        assert_eq!(out, minus);
    }

    #[test]
    fn zero_slack_keeps_minimizers() {
        let set = mask(&[false, true, true, true, false]);
        let out = gamma_lrr_upper(&set, &set, &[0.0, 5.0, 1.0, 3.0, 0.5], 0.0).unwrap();
        assert_eq!(out, mask(&[false, false, true, false, false]));
    }

    #[test]
    fn slack_admits_near_minimizers() {
        let minus = mask(&[true, true, true, true, true]);
        let plus = mask(&[false, false, true, true, false]);
        let out = gamma_lrr_upper(&minus, &plus, &[0.0, 1.05, 1.0, 1.2, 1.03], 0.02).unwrap();
        assert_eq!(out, mask(&[true, false, true, false, true]));
    }

    #[test]
    fn mismatched_inputs() {
        let a = mask(&[true, false]);
        let b = mask(&[true, false, true]);
        assert!(matches!(gamma_lrr_upper(&a, &b, &[0.0, 0.0], 0.1), Err(Error::GridMismatch)));
        assert!(gamma_lrr_upper(&a, &a, &[0.0], 0.1).is_err());
    }

    proptest! {
        #[test]
        fn upper_set_within_outer(flags in proptest::collection::vec((any::<bool>(), any::<bool>(), 0.0f64..5.0), 2..40), kappa in 0.0f64..1.0) {
            let minus = mask(&flags.iter().map(|f| f.0 || f.1).collect::<Vec<_>>());
            let plus = mask(&flags.iter().map(|f| f.1).collect::<Vec<_>>());
            let q: Vec<f64> = flags.iter().map(|f| f.2).collect();
            let out = gamma_lrr_upper(&minus, &plus, &q, kappa).unwrap();
            prop_assert!(out.is_subset(&minus).unwrap());
            // every minimizer over the inner set survives
            if let Some(best) = plus.flagged().min_by(|&a, &b| q[a].total_cmp(&q[b])) {
                prop_assert!(out.get(best));
            }
        }
    }

    fn sample(n: usize, seed: u64) -> Vec<IntervalObservation> {
        let mut rng = substream(seed, Domain::Dataset, 0);
        (0..n)
            .map(|_| {
                let x = u8::from(rng.gen_bool(0.5));
                let e: f64 = rng.sample(StandardNormal);
                IntervalObservation::from_latent(2.0 + f64::from(x) + e, x, 2.3, 4.5)
            })
            .collect()
    }

    fn setup() -> (Vec<IntervalObservation>, ParameterGrid, BootstrapPlan) {
        let data = sample(200, 4);
        let grid = ParameterGrid::plane(Axis::new(1.4, 2.9, 16).unwrap(), Axis::new(-0.8, 2.5, 18).unwrap()).unwrap();
        let plan = BootstrapPlan { replications: 99, ..BootstrapPlan::default() };
        (data, grid, plan)
    }

    #[test]
    fn lrr_region_is_contained() {
        let (data, grid, plan) = setup();
        let crit = IntervalLrr::from_sample(&data, 2.3, 4.5, 1.0).unwrap();
        for method in [Method::Conservative, Method::Bonferroni] {
            let rep = confidence_set(&data, &IntervalMoments, &crit, &grid, &plan, method).unwrap();
            let bound = rep.identified.intersection(&rep.gamma_minus).unwrap();
            assert!(rep.lrr.is_subset(&bound).unwrap());
            assert!(rep.identified.count() > 0);
            assert!(rep.lrr.count() < rep.identified.count());
        }
    }

    #[test]
    fn huge_slack_removes_restriction() {
        let (data, grid, mut plan) = setup();
        plan.kappa = 1e9;
        let crit = IntervalLrr::from_sample(&data, 2.3, 4.5, 1.0).unwrap();
        let rep = confidence_set(&data, &IntervalMoments, &crit, &grid, &plan, Method::Conservative).unwrap();
        assert_eq!(rep.lrr, rep.identified.intersection(&rep.gamma_minus).unwrap());
        assert_eq!(rep.gamma_minus.count(), grid.len());
    }

    #[test]
    fn analysis_is_deterministic() {
        let (data, grid, plan) = setup();
        let crit = IntervalLrr::from_sample(&data, 2.3, 4.5, 1.0).unwrap();
        let prepared = PreparedMoments::new(&IntervalMoments, &data).unwrap();
        let resamples = resample_indices(data.len(), plan.replications, plan.seed);
        let boot = BootstrapMoments::new(&prepared, &resamples).unwrap();
        let a = analyze_grid(&boot, &crit, &grid, &plan).unwrap();
        let b = analyze_grid(&boot, &crit, &grid, &plan).unwrap();
        assert_eq!(a.points, b.points);
        for p in &a.points {
            assert!(p.critical.c_conservative >= 0.0 && p.q_lrr >= 0.0);
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("bonferroni".parse::<Method>().unwrap(), Method::Bonferroni);
        assert!("other".parse::<Method>().is_err());
        assert_eq!(Method::Conservative.to_string(), "conservative");
    }
}
